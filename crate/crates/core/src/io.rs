//! Dataset and matrix I/O.
//!
//! Datasets are CSV with one observation per row (header optional) or a
//! compact little-endian binary cache. Matrices are plain CSV. Floats are
//! written with Rust's shortest round-trip formatting, so write/read is exact.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{Dataset, SymMatrix};

const CACHE_MAGIC: &[u8; 4] = b"DRGD";
const CACHE_VERSION: u32 = 1;

fn parse_numeric_csv(reader: impl BufRead, has_header: bool) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 && has_header {
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let before = values.len();
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Parse(format!("line {}: cannot parse '{}' as a number", lineno + 1, field.trim()))
            })?;
            values.push(v);
        }
        let w = values.len() - before;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(Error::Parse(format!(
                    "line {}: expected {expected} fields, found {w}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let width = width.ok_or_else(|| Error::Parse("no data rows".into()))?;
    Array2::from_shape_vec((rows, width), values).map_err(|e| Error::Parse(e.to_string()))
}

fn write_numeric_csv(w: &mut impl Write, a: &Array2<f64>) -> Result<()> {
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_dataset_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let f = fs::File::open(path)?;
    Dataset::new(parse_numeric_csv(BufReader::new(f), has_header)?)
}

pub fn write_dataset_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_numeric_csv(&mut w, &data.rows().to_owned())?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset_cache(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(data.n() as u64).to_le_bytes())?;
    w.write_all(&(data.d() as u64).to_le_bytes())?;
    for v in data.rows().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_cache(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[..4] != CACHE_MAGIC {
        return Err(Error::Parse("not a dataset cache file".into()));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(Error::Parse(format!("unsupported cache version {version}")));
    }
    let (n, d) = (word(8) as usize, word(16) as usize);
    let body = &bytes[24..];
    if body.len() != n * d * 8 {
        return Err(Error::Parse(format!(
            "cache body has {} bytes, expected {}",
            body.len(),
            n * d * 8
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Dataset::new(Array2::from_shape_vec((n, d), values).map_err(|e| Error::Parse(e.to_string()))?)
}

/// Loads a dataset, choosing the binary cache reader for `.bin` files.
pub fn read_dataset(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "bin") {
        read_dataset_cache(path)
    } else {
        read_dataset_csv(path, has_header)
    }
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &SymMatrix) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_numeric_csv(&mut w, m.as_array())?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let f = fs::File::open(path)?;
    SymMatrix::from_array(parse_numeric_csv(BufReader::new(f), false)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "a,b\n1,2\n3.5,-4\n").unwrap();
        let d = read_dataset_csv(&p, true).unwrap();
        assert_eq!((d.n(), d.d()), (2, 2));
        assert_eq!(d.row(1)[1], -4.0);
        assert!(matches!(read_dataset_csv(&p, false), Err(Error::Parse(_))));
    }

    #[test]
    fn ragged_csv_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_dataset_csv(&p, false).is_err());
    }

    #[test]
    fn cache_and_csv_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let data = Dataset::from_rows(&[vec![0.1, 1.0 / 3.0], vec![-2e-300, 7.0]]).unwrap();
        let bin = dir.path().join("x.bin");
        write_dataset_cache(&bin, &data).unwrap();
        assert_eq!(read_dataset(&bin, false).unwrap(), data);
        let csv = dir.path().join("x.csv");
        write_dataset_csv(&csv, &data).unwrap();
        assert_eq!(read_dataset(&csv, false).unwrap(), data);
    }

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = SymMatrix::from_fn(3, |i, j| (i * 3 + j) as f64 / 7.0);
        write_matrix_csv(&p, &m).unwrap();
        assert_eq!(read_matrix_csv(&p).unwrap(), m);
    }
}
