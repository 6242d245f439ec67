//! Batch comparison of λ-selection rules: draws datasets, selects λ by RobSel,
//! cross-validation and (with a known truth) the oracle quantile, fits the
//! graphical lasso at each λ and scores edge recovery.

pub mod config;
pub mod output;
mod svg;

use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{DatasetConfig, ExperimentConfig, PrecisionConfig, DEFAULT_ALPHA_GRID};
pub use output::{aggregate, emit_outputs, omega_hash, Aggregate};

use crate::error::{Error, Result};
use crate::glasso::{solve, GlassoProblem, SolverOptions};
use crate::io;
use crate::linalg::{sample_covariance, Dataset, SpdMatrix, SymMatrix};
use crate::metrics::{score, Scores};
use crate::robsel::{bootstrap_stats, order_statistic_index};
use crate::rwp::montecarlo::{order_statistic, quantile_index};
use crate::rwp::{truth_profile_sample, RwpConfig};
use crate::seed::{self, derive_seed};
use crate::select::{cv_select, default_grid, CvConfig, Method};
use crate::simgen::{generate_precision, sample_from_covariance, GroundTruth};

/// One selection + fit, as written to `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub n: usize,
    pub replicate: usize,
    pub method: Method,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub tpr: Option<f64>,
    pub fdr: Option<f64>,
    pub mcc: Option<f64>,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

/// MCC of the fit at every λ of one replicate's CV grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MccPath {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub mcc: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub truth: Option<GroundTruth>,
    pub records: Vec<Record>,
    pub mcc_paths: Vec<MccPath>,
}

impl ExperimentReport {
    pub fn expected_record_count(cfg: &ExperimentConfig) -> usize {
        let per_alpha = if cfg.is_simulated() { 2 } else { 1 };
        cfg.n_replicates * cfg.n_grid.len() * (per_alpha * cfg.alpha_grid.len() + 1)
    }

    pub fn records_for(&self, n: usize, method: Method, alpha: Option<f64>) -> impl Iterator<Item = &Record> {
        self.records
            .iter()
            .filter(move |r| r.n == n && r.method == method && r.alpha == alpha)
    }
}

enum Source {
    Simulated(GroundTruth),
    Real(Dataset),
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    rwp: RwpConfig,
    source: &'a Source,
}

impl Context<'_> {
    fn truth(&self) -> Option<&GroundTruth> {
        match self.source {
            Source::Simulated(t) => Some(t),
            Source::Real(_) => None,
        }
    }

    fn draw(&self, n: usize, rep: usize) -> Result<Dataset> {
        let s = derive_seed(self.cfg.seed, &[seed::stream::DATASET, n as u64, rep as u64]);
        match self.source {
            Source::Simulated(t) => sample_from_covariance(&t.sigma, n, s),
            Source::Real(data) if n == data.n() => Ok(data.clone()),
            Source::Real(data) => {
                let mut idx = index::sample(&mut seed::rng_for(s, &[]), data.n(), n).into_vec();
                idx.sort_unstable();
                data.select(&idx)
            }
        }
    }

    fn problem(&self, a_n: &SymMatrix, lambda: f64) -> Result<GlassoProblem> {
        GlassoProblem::new(a_n.clone(), lambda, self.rwp.p(), self.cfg.penalize_diagonal)
    }

    fn fit(&self, a_n: &SymMatrix, lambda: f64) -> Result<Option<Scores>> {
        let sol = solve(&self.problem(a_n, lambda)?, &SolverOptions::default())?.require_converged()?;
        match self.truth() {
            Some(t) => Ok(Some(score(sol.k_hat.as_sym(), &t.support, self.cfg.zero_tol)?)),
            None => Ok(None),
        }
    }
}

fn error_tag(e: &Error) -> String {
    e.to_string().replace([',', '\n', '\r', '"'], ";")
}

fn record(n: usize, replicate: usize, method: Method, alpha: Option<f64>) -> Record {
    Record {
        n,
        replicate,
        method,
        alpha,
        lambda: None,
        tpr: None,
        fdr: None,
        mcc: None,
        wall_ms: None,
        error: None,
    }
}

fn finish(
    ctx: &Context<'_>,
    mut rec: Record,
    a_n: &SymMatrix,
    lambda: Result<f64>,
    select_ms: f64,
) -> Record {
    let fit_start = Instant::now();
    match lambda {
        Ok(l) => {
            rec.lambda = Some(l);
            match ctx.fit(a_n, l) {
                Ok(Some(s)) => {
                    rec.tpr = s.tpr;
                    rec.fdr = s.fdr;
                    rec.mcc = Some(s.mcc);
                }
                Ok(None) => {}
                Err(e) => rec.error = Some(format!("fit: {}", error_tag(&e))),
            }
        }
        Err(e) => rec.error = Some(format!("select: {}", error_tag(&e))),
    }
    if ctx.cfg.record_timing {
        rec.wall_ms = Some(select_ms + fit_start.elapsed().as_secs_f64() * 1e3);
    }
    rec
}

struct CellOutput {
    records: Vec<Record>,
    path: Option<MccPath>,
}

fn run_cell(ctx: &Context<'_>, n: usize, rep: usize, oracle: Option<&[f64]>) -> CellOutput {
    let cfg = ctx.cfg;
    let mut records = Vec::new();
    let data = match ctx.draw(n, rep) {
        Ok(d) => d,
        Err(e) => {
            let tag = format!("data: {}", error_tag(&e));
            let mut push = |m, a| {
                let mut r = record(n, rep, m, a);
                r.error = Some(tag.clone());
                records.push(r);
            };
            for &a in &cfg.alpha_grid {
                push(Method::Robsel, Some(a));
                if oracle.is_some() {
                    push(Method::RwpOracle, Some(a));
                }
            }
            push(Method::Cv, None);
            return CellOutput { records, path: None };
        }
    };
    let a_n = sample_covariance(&data);

    let boot_start = Instant::now();
    let stats = bootstrap_stats(
        &data,
        cfg.b,
        cfg.q,
        derive_seed(cfg.seed, &[seed::stream::BOOTSTRAP, n as u64, rep as u64]),
    );
    let boot_ms = boot_start.elapsed().as_secs_f64() * 1e3;
    for &alpha in &cfg.alpha_grid {
        let lambda = match &stats {
            Ok(s) => Ok(order_statistic(s, order_statistic_index(cfg.b, alpha))),
            Err(e) => Err(Error::InvalidInput(e.to_string())),
        };
        let rec = record(n, rep, Method::Robsel, Some(alpha));
        records.push(finish(ctx, rec, &a_n, lambda, boot_ms));
    }

    let cv_start = Instant::now();
    let grid = default_grid(&a_n, cfg.cv_grid_len);
    let cv_lambda = match &grid {
        Ok(grid) => {
            let cv = CvConfig {
                folds: cfg.folds,
                grid: grid.clone(),
                seed: derive_seed(cfg.seed, &[seed::stream::CV_SHUFFLE, n as u64, rep as u64]),
                penalize_diagonal: cfg.penalize_diagonal,
            };
            cv_select(&data, &cv).map(|s| s.lambda)
        }
        Err(e) => Err(Error::InvalidInput(e.to_string())),
    };
    let cv_ms = cv_start.elapsed().as_secs_f64() * 1e3;
    records.push(finish(ctx, record(n, rep, Method::Cv, None), &a_n, cv_lambda, cv_ms));

    if let Some(oracle) = oracle {
        for (&alpha, &lambda) in cfg.alpha_grid.iter().zip(oracle) {
            let rec = record(n, rep, Method::RwpOracle, Some(alpha));
            records.push(finish(ctx, rec, &a_n, Ok(lambda), 0.0));
        }
    }

    let path = match (&grid, ctx.truth()) {
        (Ok(grid), Some(truth)) if rep == 0 && cfg.mcc_path => Some(mcc_path(ctx, truth, n, &a_n, grid)),
        _ => None,
    };
    CellOutput { records, path }
}

fn mcc_path(ctx: &Context<'_>, truth: &GroundTruth, n: usize, a_n: &SymMatrix, grid: &[f64]) -> MccPath {
    let mut warm: Option<SpdMatrix> = None;
    let mut mcc = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut opts = SolverOptions::default();
        opts.warm_start = warm.take();
        let fit = ctx
            .problem(a_n, lambda)
            .and_then(|p| solve(&p, &opts))
            .and_then(|s| s.require_converged());
        match fit {
            Ok(sol) => {
                mcc.push(score(sol.k_hat.as_sym(), &truth.support, ctx.cfg.zero_tol).ok().map(|s| s.mcc));
                warm = Some(sol.k_hat);
            }
            Err(_) => mcc.push(None),
        }
    }
    MccPath { n, lambdas: grid.to_vec(), mcc }
}

fn load_source(cfg: &ExperimentConfig) -> Result<Source> {
    if cfg.is_simulated() {
        return Ok(Source::Simulated(generate_precision(&cfg.precision_spec()?)?));
    }
    let ds = cfg.dataset.as_ref().expect("validated");
    let mut data = io::read_dataset(&ds.path, ds.header)?;
    if ds.center {
        data = data.centered();
    }
    if let Some(&n) = cfg.n_grid.iter().find(|&&n| n > data.n()) {
        return Err(Error::Config(format!("n = {n} exceeds the {} rows of the dataset", data.n())));
    }
    Ok(Source::Real(data))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let source = load_source(cfg)?;
    let ctx = Context { cfg, rwp: cfg.rwp_config()?, source: &source };
    let d = match &source {
        Source::Simulated(t) => t.dim(),
        Source::Real(data) => data.d(),
    };
    for &n in &cfg.n_grid {
        if n < d {
            log::warn!("n = {n} is below the dimension d = {d}; cross-validation may mark small-lambda fits as failed");
        }
    }

    let oracles: Vec<Option<Vec<f64>>> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            ctx.truth().map(|t| {
                let oracle_seed = derive_seed(cfg.seed, &[seed::stream::ORACLE]);
                let stats = truth_profile_sample(&t.sigma, n, &ctx.rwp, cfg.oracle_reps, oracle_seed);
                cfg.alpha_grid
                    .iter()
                    .map(|&a| order_statistic(&stats, quantile_index(cfg.oracle_reps, a)))
                    .collect()
            })
        })
        .collect();

    let cells: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|i| (0..cfg.n_replicates).map(move |r| (i, r)))
        .collect();
    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&(i, rep)| run_cell(&ctx, cfg.n_grid[i], rep, oracles[i].as_deref()))
        .collect();

    let mut records = Vec::with_capacity(ExperimentReport::expected_record_count(cfg));
    let mut mcc_paths = Vec::new();
    for out in outputs {
        records.extend(out.records);
        mcc_paths.extend(out.path);
    }
    records.sort_by(|a, b| {
        (a.n, a.replicate, a.method)
            .cmp(&(b.n, b.replicate, b.method))
            .then(a.alpha.unwrap_or(-1.0).total_cmp(&b.alpha.unwrap_or(-1.0)))
    });
    mcc_paths.sort_by_key(|p| p.n);
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} records carry an error tag", records.len());
    }
    let truth = match source {
        Source::Simulated(t) => Some(t),
        Source::Real(_) => None,
    };
    Ok(ExperimentReport { config: cfg.clone(), truth, records, mcc_paths })
}
