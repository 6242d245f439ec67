use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::NormOrder;
use crate::rwp::{montecarlo::MIN_ORACLE_REPS, RwpConfig};
use crate::seed;
use crate::simgen::PrecisionSpec;

/// Random sparse precision matrix for simulated-truth studies. Its seed is
/// derived from the experiment seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionConfig {
    pub d: usize,
    pub edge_prob: f64,
    #[serde(default = "weight_low")]
    pub weight_low: f64,
    #[serde(default = "weight_high")]
    pub weight_high: f64,
}

fn weight_low() -> f64 {
    0.5
}

fn weight_high() -> f64 {
    1.0
}

/// A real dataset. Each cell draws `n` of its rows without replacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub header: bool,
    /// Subtract column means before use.
    #[serde(default)]
    pub center: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub precision: Option<PrecisionConfig>,
    pub dataset: Option<DatasetConfig>,
    pub n_grid: Vec<usize>,
    pub alpha_grid: Vec<f64>,
    /// Bootstrap replicates for RobSel.
    pub b: usize,
    pub folds: usize,
    pub cv_grid_len: usize,
    pub n_replicates: usize,
    pub q: NormOrder,
    pub rho: f64,
    /// Monte Carlo replicates behind each oracle λ.
    pub oracle_reps: usize,
    pub penalize_diagonal: bool,
    pub zero_tol: f64,
    /// Also trace MCC along the CV grid for the first replicate at each n.
    pub mcc_path: bool,
    /// Fill the `wall_ms` column. Off by default so outputs are reproducible.
    pub record_timing: bool,
    pub output_dir: Option<PathBuf>,
}

pub const DEFAULT_ALPHA_GRID: [f64; 8] = [0.10, 0.21, 0.33, 0.44, 0.56, 0.67, 0.79, 0.90];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            precision: Some(PrecisionConfig {
                d: 100,
                edge_prob: 0.1,
                weight_low: weight_low(),
                weight_high: weight_high(),
            }),
            dataset: None,
            n_grid: vec![100, 200, 500, 1000, 2000],
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            b: 200,
            folds: 5,
            cv_grid_len: 50,
            n_replicates: 200,
            q: NormOrder::INFINITY,
            rho: 1.0,
            oracle_reps: 1000,
            penalize_diagonal: true,
            zero_tol: crate::metrics::DEFAULT_ZERO_TOL,
            mcc_path: true,
            record_timing: false,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Laptop-sized study: d = 20 and 50 replicates.
    pub fn desk() -> Self {
        let mut cfg = ExperimentConfig::default();
        if let Some(p) = cfg.precision.as_mut() {
            p.d = 20;
        }
        cfg.n_grid = vec![50, 200, 1000];
        cfg.n_replicates = 50;
        cfg
    }

    /// Parses a config file; omitted keys take the full-scale defaults. A
    /// file with a `[dataset]` section and no `[precision]` runs on real data.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let table: toml::Table = s.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let real_data = table.contains_key("dataset") && !table.contains_key("precision");
        let mut cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if real_data {
            cfg.precision = None;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.precision, &self.dataset) {
            (Some(_), Some(_)) => return Err(Error::Config("give either [precision] or [dataset], not both".into())),
            (None, None) => return Err(Error::Config("missing [precision] or [dataset] section".into())),
            (Some(_), None) => {
                self.precision_spec()?.validate()?;
            }
            (None, Some(_)) => {}
        }
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(Error::Config("every n in n_grid must be at least 2".into()));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::Config("alpha_grid is empty".into()));
        }
        if let Some(&a) = self.alpha_grid.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::InvalidAlpha(a));
        }
        if self.n_replicates == 0 {
            return Err(Error::Config("n_replicates must be at least 1".into()));
        }
        if self.b == 0 {
            return Err(Error::Config("b must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.cv_grid_len < 2 {
            return Err(Error::Config("cv_grid_len must be at least 2".into()));
        }
        if self.precision.is_some() && self.oracle_reps < MIN_ORACLE_REPS {
            return Err(Error::Config(format!("oracle_reps must be at least {MIN_ORACLE_REPS}")));
        }
        if !(self.zero_tol >= 0.0) {
            return Err(Error::Config("zero_tol must be nonnegative".into()));
        }
        let rwp = self.rwp_config()?;
        if !self.penalize_diagonal && rwp.p() != NormOrder::ONE {
            return Err(Error::Config("an unpenalized diagonal needs q = inf".into()));
        }
        Ok(())
    }

    pub fn rwp_config(&self) -> Result<RwpConfig> {
        RwpConfig::new(self.q, self.rho).map_err(|e| Error::Config(e.to_string()))
    }

    /// Precision spec with the seed derived from the experiment seed.
    pub fn precision_spec(&self) -> Result<PrecisionSpec> {
        let p = self
            .precision
            .as_ref()
            .ok_or_else(|| Error::Config("no [precision] section".into()))?;
        let spec = PrecisionSpec {
            d: p.d,
            edge_prob: p.edge_prob,
            weight_low: p.weight_low,
            weight_high: p.weight_high,
            seed: seed::derive_seed(self.seed, &[seed::stream::PRECISION]),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_simulated(&self) -> bool {
        self.precision.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_presets_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.precision.as_ref().unwrap().d, 100);
        assert_eq!(c.n_replicates, 200);
        assert_eq!(c.b, 200);
        assert_eq!(c.folds, 5);
        assert_eq!(c.alpha_grid.len(), 8);
        let desk = ExperimentConfig::desk();
        desk.validate().unwrap();
        assert_eq!(desk.precision.as_ref().unwrap().d, 20);
        assert_eq!(desk.n_replicates, 50);
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::desk();
        let text = c.to_toml_string().unwrap();
        assert!(text.contains("q = \"inf\""));
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_takes_defaults() {
        let c = ExperimentConfig::from_toml_str(
            "seed = 7\nn_grid = [30]\nalpha_grid = [0.5]\n[precision]\nd = 5\nedge_prob = 0.3\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.b, 200);
        assert_eq!(c.precision.unwrap().weight_high, 1.0);
    }

    #[test]
    fn dataset_section_replaces_simulation() {
        let c = ExperimentConfig::from_toml_str("n_grid = [30]\n[dataset]\npath = \"x.csv\"\ncenter = true\n").unwrap();
        assert!(!c.is_simulated());
        assert!(c.dataset.unwrap().center);
        let c = ExperimentConfig::from_toml_str("n_grid = [30]\n").unwrap();
        assert!(c.is_simulated());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = "n_grid = [30]\n[precision]\nd = 5\nedge_prob = 0.3\n";
        assert!(ExperimentConfig::from_toml_str(&format!("alpha_grid = []\n{base}")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("alpha_grid = [1.5]\n{base}")).is_err());
        assert!(ExperimentConfig::from_toml_str("alpha_grid = [0.5]\nn_grid = []\n[precision]\nd = 5\nedge_prob = 0.3\n").is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("{base}[dataset]\npath = \"x.csv\"\n")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("bogus = 1\n{base}")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("n_replicates = 0\n{base}")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("q = 0.5\n{base}")).is_err());
    }
}
