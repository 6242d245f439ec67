use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use drglasso::experiment::{emit_outputs, run_experiment, ExperimentConfig};
use drglasso::glasso::{solve, GlassoProblem, SolverOptions};
use drglasso::io::{read_dataset, read_matrix_csv, write_dataset_csv, write_matrix_csv};
use drglasso::linalg::{sample_covariance, Dataset, NormOrder, SpdMatrix};
use drglasso::robsel::{robsel_lambda, RobselConfig};
use drglasso::rwp::RwpConfig;
use drglasso::seed::{derive_seed, stream};
use drglasso::select::{cv_select, default_grid, oracle_select, CvConfig, Diagnostics, DEFAULT_GRID_LEN};
use drglasso::simgen::{generate_precision, sample_from_covariance};
use drglasso::Error;

#[derive(Parser)]
#[command(name = "drglasso", version, about = "Distributionally robust graphical lasso")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full selection study and write tables and plots.
    Simulate(SimulateArgs),
    /// Estimate a precision matrix at a selected λ.
    Fit(FitArgs),
    /// Print the RobSel λ for one or more α.
    Robsel(RobselArgs),
    /// Write a random precision matrix, its covariance and sample datasets.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

#[derive(Args)]
struct StudyArgs {
    /// TOML config; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Starting point when no config file is given.
    #[arg(long, value_enum, default_value = "full", conflicts_with = "config")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the α grid.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    q: Option<NormOrder>,
}

impl StudyArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_toml_str(&text).map_err(config_error)?
            }
            None => match self.preset {
                Preset::Desk => ExperimentConfig::desk(),
                Preset::Full => ExperimentConfig::default(),
            },
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(a) = &self.alpha {
            cfg.alpha_grid = a.clone();
        }
        if let Some(b) = self.b {
            cfg.b = b;
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        cfg.validate().map_err(config_error)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    study: StudyArgs,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Observations as CSV rows, or a `.bin` dataset cache.
    #[arg(long)]
    input: PathBuf,
    /// The CSV has a header line.
    #[arg(long)]
    header: bool,
    /// Subtract column means first.
    #[arg(long)]
    center: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Failure> {
        let data = read_dataset(&self.input, self.header)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", self.input.display())))?;
        if data.n() < data.d() {
            warn!("n = {} is below d = {}", data.n(), data.d());
        }
        Ok(if self.center { data.centered() } else { data })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rs,
    Cv,
    Rwp,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "rs")]
    method: MethodArg,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    b: usize,
    #[arg(long, default_value = "inf")]
    q: NormOrder,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_LEN)]
    grid_len: usize,
    /// True covariance CSV, required by `--method rwp`.
    #[arg(long)]
    sigma: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    oracle_reps: usize,
    /// Leave the diagonal of K unpenalized (needs q = inf).
    #[arg(long)]
    no_diagonal_penalty: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RobselArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.9")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    b: usize,
    #[arg(long, default_value = "inf")]
    q: NormOrder,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    study: StudyArgs,
    /// Datasets per sample size.
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn config_error(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_error(e: Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut cfg = args.study.resolve()?;
    if let Some(out) = args.out {
        cfg.output_dir = Some(out);
    }
    if args.print_config {
        print!("{}", cfg.to_toml_string().map_err(config_error)?);
        return Ok(());
    }
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    create_dir(&dir)?;
    info!("running {} cells", cfg.n_grid.len() * cfg.n_replicates);
    let report = run_experiment(&cfg).map_err(|e| match e {
        Error::Config(_) | Error::InvalidAlpha(_) | Error::InvalidOrder(_) => config_error(e),
        e => runtime_error(e),
    })?;
    let failed = report.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        warn!("{failed} of {} records carry an error tag", report.records.len());
    }
    for path in emit_outputs(&report, &dir).map_err(runtime_error)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), Failure> {
    let rwp = RwpConfig::new(args.q, args.rho).map_err(config_error)?;
    let penalize_diagonal = !args.no_diagonal_penalty;
    if !penalize_diagonal && rwp.p() != NormOrder::ONE {
        return Err(Failure::Config("an unpenalized diagonal needs q = inf".into()));
    }
    let rs_cfg = RobselConfig::new(args.alpha, args.b, args.q, args.seed).map_err(config_error)?;
    let sigma = match (args.method, &args.sigma) {
        (MethodArg::Rwp, None) => return Err(Failure::Config("--method rwp needs --sigma".into())),
        (MethodArg::Rwp, Some(p)) => {
            let m = read_matrix_csv(p).map_err(runtime_error)?;
            Some(SpdMatrix::new(m).map_err(runtime_error)?)
        }
        _ => None,
    };

    let data = args.data.load()?;
    let a_n = sample_covariance(&data);
    let selection = match args.method {
        MethodArg::Rs => robsel_lambda(&data, &rs_cfg).map_err(runtime_error)?.lambda,
        MethodArg::Cv => {
            let cv = CvConfig {
                folds: args.folds,
                grid: default_grid(&a_n, args.grid_len).map_err(runtime_error)?,
                seed: derive_seed(args.seed, &[stream::CV_SHUFFLE]),
                penalize_diagonal,
            };
            cv.validate().map_err(config_error)?;
            let sel = cv_select(&data, &cv).map_err(runtime_error)?;
            if let Diagnostics::CvLosses { losses, .. } = &sel.diagnostics {
                info!("best mean validation loss {:.6}", losses.iter().cloned().fold(f64::INFINITY, f64::min));
            }
            sel.lambda
        }
        MethodArg::Rwp => {
            let sigma = sigma.expect("checked above");
            if sigma.dim() != data.d() {
                return Err(runtime_error(Error::DimensionMismatch { expected: data.d(), got: sigma.dim() }));
            }
            let seed = derive_seed(args.seed, &[stream::ORACLE]);
            oracle_select(&sigma, data.n(), args.alpha, &rwp, args.oracle_reps, seed)
                .map_err(runtime_error)?
                .lambda
        }
    };

    let problem = GlassoProblem::new(a_n, selection, rwp.p(), penalize_diagonal).map_err(runtime_error)?;
    let sol = solve(&problem, &SolverOptions::default())
        .and_then(|s| s.require_converged())
        .map_err(runtime_error)?;

    create_dir(&args.out)?;
    write_matrix_csv(args.out.join("precision.csv"), sol.k_hat.as_sym()).map_err(runtime_error)?;
    let k = sol.k_hat.as_sym();
    let d = k.dim();
    let edges = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .filter(|&(i, j)| k.get(i, j).abs() > drglasso::metrics::DEFAULT_ZERO_TOL)
        .count();
    let summary = serde_json::json!({
        "method": match args.method { MethodArg::Rs => "robsel", MethodArg::Cv => "cv", MethodArg::Rwp => "rwp_oracle" },
        "alpha": match args.method { MethodArg::Cv => None, _ => Some(args.alpha) },
        "lambda": selection,
        "q": args.q.to_string(),
        "n": data.n(),
        "d": d,
        "edges": edges,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "kkt_residual": sol.kkt_residual,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::write(args.out.join("selection.json"), text + "\n").map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{selection}");
    Ok(())
}

fn robsel(args: RobselArgs) -> Result<(), Failure> {
    // one bootstrap serves every α
    let cfgs = args
        .alpha
        .iter()
        .map(|&a| RobselConfig::new(a, args.b, args.q, args.seed))
        .collect::<Result<Vec<_>, _>>()
        .map_err(config_error)?;
    let data = args.data.load()?;
    let result = robsel_lambda(&data, &cfgs[0]).map_err(runtime_error)?;
    if result.degenerate {
        warn!("bootstrap statistics are all zero");
    }
    println!("alpha,lambda");
    for cfg in &cfgs {
        println!("{},{}", cfg.alpha, result.lambda_at(cfg.alpha));
    }
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let cfg = args.study.resolve()?;
    let spec = cfg.precision_spec().map_err(config_error)?;
    let truth = generate_precision(&spec).map_err(runtime_error)?;
    create_dir(&args.out)?;
    write_matrix_csv(args.out.join("omega.csv"), truth.omega.as_sym()).map_err(runtime_error)?;
    write_matrix_csv(args.out.join("sigma.csv"), truth.sigma.as_sym()).map_err(runtime_error)?;
    println!("{}", args.out.join("omega.csv").display());
    println!("{}", args.out.join("sigma.csv").display());
    // same seed paths as `simulate`, so file r of size n is the dataset of that cell
    for &n in &cfg.n_grid {
        for rep in 0..args.replicates {
            let seed = derive_seed(cfg.seed, &[stream::DATASET, n as u64, rep as u64]);
            let data = sample_from_covariance(&truth.sigma, n, seed).map_err(runtime_error)?;
            let path = args.out.join(format!("data_n{n}_r{rep}.csv"));
            write_dataset_csv(&path, &data).map_err(runtime_error)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Robsel(a) => robsel(a),
        Command::Gen(a) => gen(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
