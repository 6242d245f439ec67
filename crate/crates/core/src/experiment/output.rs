//! CSV, JSON and SVG artifacts of an experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::svg::{Plot, Series};
use super::{ExperimentReport, MccPath, Record};
use crate::error::Result;
use crate::io::write_matrix_csv;
use crate::linalg::SymMatrix;
use crate::select::Method;

pub const RESULTS_HEADER: &str = "n,replicate,method,alpha,lambda,tpr,fdr,mcc,wall_ms,error";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn results_csv(records: &[Record]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.replicate,
            r.method,
            opt(r.alpha),
            opt(r.lambda),
            opt(r.tpr),
            opt(r.fdr),
            opt(r.mcc),
            opt(r.wall_ms),
            r.error.as_deref().unwrap_or("")
        );
    }
    out
}

/// Summary of one `(n, method, α)` group. Means skip undefined values;
/// `fdr_defined` counts the replicates where FDR exists.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub n: usize,
    pub method: Method,
    pub alpha: Option<f64>,
    pub count: usize,
    pub errors: usize,
    pub lambda_mean: Option<f64>,
    pub lambda_median: Option<f64>,
    pub lambda_q1: Option<f64>,
    pub lambda_q3: Option<f64>,
    pub tpr_mean: Option<f64>,
    pub fdr_mean: Option<f64>,
    pub fdr_defined: usize,
    pub mcc_mean: Option<f64>,
    pub mcc_median: Option<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn aggregate(records: &[Record]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(usize, Method, u64), Vec<&Record>> = BTreeMap::new();
    for r in records {
        // α ∈ (0, 1) sorts correctly by bit pattern; CV (no α) goes first
        let key = r.alpha.map_or(0, f64::to_bits);
        groups.entry((r.n, r.method, key)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let pick = |f: fn(&Record) -> Option<f64>| -> Vec<f64> {
                rs.iter().filter(|r| r.error.is_none()).filter_map(|r| f(r)).collect()
            };
            let lambdas = sorted(pick(|r| r.lambda));
            let fdrs = pick(|r| r.fdr);
            let mccs = sorted(pick(|r| r.mcc));
            Aggregate {
                n: rs[0].n,
                method: rs[0].method,
                alpha: rs[0].alpha,
                count: rs.len(),
                errors: rs.iter().filter(|r| r.error.is_some()).count(),
                lambda_mean: mean(&lambdas),
                lambda_median: quantile(&lambdas, 0.5),
                lambda_q1: quantile(&lambdas, 0.25),
                lambda_q3: quantile(&lambdas, 0.75),
                tpr_mean: mean(&pick(|r| r.tpr)),
                fdr_mean: mean(&fdrs),
                fdr_defined: fdrs.len(),
                mcc_mean: mean(&mccs),
                mcc_median: quantile(&mccs, 0.5),
            }
        })
        .collect()
}

pub fn aggregates_csv(aggs: &[Aggregate]) -> String {
    let mut out = String::from(
        "n,method,alpha,count,errors,lambda_mean,lambda_median,lambda_q1,lambda_q3,tpr_mean,fdr_mean,fdr_defined,mcc_mean,mcc_median\n",
    );
    for a in aggs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            a.n,
            a.method,
            opt(a.alpha),
            a.count,
            a.errors,
            opt(a.lambda_mean),
            opt(a.lambda_median),
            opt(a.lambda_q1),
            opt(a.lambda_q3),
            opt(a.tpr_mean),
            opt(a.fdr_mean),
            a.fdr_defined,
            opt(a.mcc_mean),
            opt(a.mcc_median)
        );
    }
    out
}

/// SHA-256 of the row-major little-endian entries.
pub fn omega_hash(m: &SymMatrix) -> String {
    let mut h = Sha256::new();
    for v in m.as_array().iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn config_json(report: &ExperimentReport) -> Result<String> {
    let mut meta = serde_json::json!({
        "config": report.config,
        "seed": report.config.seed,
        "records": report.records.len(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    if let Some(t) = &report.truth {
        meta["precision_seed"] = report.config.precision_spec()?.seed.into();
        meta["omega_sha256"] = omega_hash(t.omega.as_sym()).into();
        meta["edges"] = t.support.edge_count().into();
    }
    let mut s = serde_json::to_string_pretty(&meta)?;
    s.push('\n');
    Ok(s)
}

fn series_label(method: Method, alpha: Option<f64>) -> String {
    let name = match method {
        Method::Robsel => "RS",
        Method::Cv => "CV",
        Method::RwpOracle => "RWP",
    };
    match alpha {
        Some(a) => format!("{name} α={a}"),
        None => name.to_string(),
    }
}

fn fdr_plot(aggs: &[Aggregate]) -> Plot {
    let mut by_series: BTreeMap<(Method, u64), Series> = BTreeMap::new();
    for a in aggs {
        let s = by_series.entry((a.method, a.alpha.map_or(0, f64::to_bits))).or_insert_with(|| Series {
            label: series_label(a.method, a.alpha),
            line: true,
            ..Series::default()
        });
        if let Some(f) = a.fdr_mean {
            s.points.push((a.n as f64, f));
        }
    }
    Plot {
        title: "Mean false discovery rate".into(),
        x_label: "n".into(),
        y_label: "FDR".into(),
        x_log: true,
        y_log: true,
        series: by_series.into_values().collect(),
    }
}

fn mcc_plot(n: usize, path: Option<&MccPath>, aggs: &[Aggregate]) -> Plot {
    let mut series = Vec::new();
    if let Some(p) = path {
        series.push(Series {
            label: "MCC path".into(),
            points: p.lambdas.iter().zip(&p.mcc).filter_map(|(&l, m)| Some((l, (*m)?))).collect(),
            line: true,
            whiskers: vec![],
        });
    }
    for method in [Method::Robsel, Method::Cv, Method::RwpOracle] {
        let points: Vec<(f64, f64)> = aggs
            .iter()
            .filter(|a| a.n == n && a.method == method)
            .filter_map(|a| Some((a.lambda_mean?, a.mcc_mean?)))
            .collect();
        if !points.is_empty() {
            series.push(Series { label: series_label(method, None), points, line: false, whiskers: vec![] });
        }
    }
    Plot {
        title: format!("MCC against λ (n = {n})"),
        x_label: "λ".into(),
        y_label: "MCC".into(),
        x_log: true,
        y_log: false,
        series,
    }
}

fn lambda_plot(n: usize, alphas: &[f64], aggs: &[Aggregate]) -> Plot {
    let mut series = Vec::new();
    for method in [Method::Robsel, Method::RwpOracle] {
        let rows: Vec<&Aggregate> = aggs.iter().filter(|a| a.n == n && a.method == method).collect();
        if rows.is_empty() {
            continue;
        }
        series.push(Series {
            label: series_label(method, None),
            points: rows.iter().filter_map(|a| Some((a.alpha?, a.lambda_median?))).collect(),
            line: true,
            whiskers: rows.iter().filter_map(|a| Some((a.alpha?, a.lambda_q1?, a.lambda_q3?))).collect(),
        });
    }
    if let Some(cv) = aggs.iter().find(|a| a.n == n && a.method == Method::Cv) {
        if let Some(m) = cv.lambda_median {
            series.push(Series {
                label: "CV".into(),
                points: alphas.iter().map(|&a| (a, m)).collect(),
                line: true,
                whiskers: vec![],
            });
        }
    }
    Plot {
        title: format!("Selected λ against α (n = {n})"),
        x_label: "α".into(),
        y_label: "λ (median, quartiles)".into(),
        x_log: false,
        y_log: true,
        series,
    }
}

/// Writes every artifact into `dir` and returns the paths written.
pub fn emit_outputs(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    let aggs = aggregate(&report.records);
    put("results.csv".into(), results_csv(&report.records))?;
    put("aggregates.csv".into(), aggregates_csv(&aggs))?;
    put("config.json".into(), config_json(report)?)?;

    let mut sorted_alphas = report.config.alpha_grid.clone();
    sorted_alphas.sort_by(f64::total_cmp);
    if report.truth.is_some() {
        put("fdr_vs_n.svg".into(), fdr_plot(&aggs).render())?;
    }
    for &n in &report.config.n_grid {
        if report.truth.is_some() {
            let path = report.mcc_paths.iter().find(|p| p.n == n);
            put(format!("mcc_vs_lambda_n{n}.svg"), mcc_plot(n, path, &aggs).render())?;
        }
        put(format!("lambda_vs_alpha_n{n}.svg"), lambda_plot(n, &sorted_alphas, &aggs).render())?;
    }
    if let Some(t) = &report.truth {
        let p = dir.join("omega.csv");
        write_matrix_csv(&p, t.omega.as_sym())?;
        written.push(p);
    }
    Ok(written)
}
