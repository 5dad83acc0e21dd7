//! Command implementations behind the `lpnet` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lpnet_core::laplace::{
    bracket_terms, dlt, fflt, ilt_fourier, pair_error, prescaled_gap, sum_terms, transform_pairs, Complex64,
    IltConfig, LaplaceSignal, RationalSignal, Summation, DEFAULT_EPSILON,
};
use lpnet_core::model::{oracle_forcings, smd_oracle_rmse, ModelConfig, BENCHMARK_SMD};
use lpnet_core::systems::{build_dataset, fmt_f64, read_columns, write_dataset, Split};
use lpnet_core::training::{
    evaluate, save_outcome, seed_dir, train_run_with, RunConfig, RunData, RunSummary, SeedSummary, SplitData,
};
use lpnet_core::{Error, ErrorClass, Result};
use ndarray::Array2;
use serde::Deserialize;

/// Environment variable holding the worker thread count for `train`.
pub const THREADS_ENV: &str = "LPNET_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Maximum absolute error allowed for a transform pair.
pub const PAIR_TOLERANCE: f64 = 1e-3;
/// Maximum relative gap between the plain and prescaled inversion paths.
pub const PRESCALED_TOLERANCE: f64 = 1e-10;
/// Maximum RMSE of the analytic spring-mass-damper forecast.
pub const ORACLE_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Parser)]
#[command(name = "lpnet", version, about = "Laplace-domain forecasting of forced dynamical systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a benchmark dataset and write it as CSV files plus a manifest.
    Generate(GenerateArgs),
    /// Train one model per seed and summarize test MSE across seeds.
    Train(TrainArgs),
    /// Evaluate a saved model on one split.
    Evaluate(EvaluateArgs),
    /// Forward or inverse Laplace transform of tabulated data.
    Transform(TransformArgs),
    /// Run the analytic transform pairs and the spring-mass-damper oracle.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
    pub dataset: u8,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated seeds; defaults to the configuration's list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Output directory; defaults to the configuration's.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset root; defaults to the configuration's.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Overrides the configured epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Progress line interval in epochs; 0 disables progress output.
    #[arg(long, default_value_t = 50)]
    pub log_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory holding `checkpoint.json` and `model.json`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Run configuration naming the dataset; the model must match it.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformMode {
    Dlt,
    Fflt,
    Ilt,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Input CSV: columns `t,x` for forward modes, `t` for `ilt`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: TransformMode,
    /// JSON parameters: `{"s": [[re, im], ...]}` for forward modes; contour
    /// settings plus `rational` or `values` for `ilt`.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub zeta: f64,
    #[arg(long, default_value_t = 64)]
    pub n_ilt: usize,
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (name, result) = match &cli.command {
        Command::Generate(a) => ("generate", generate(a, out)),
        Command::Train(a) => ("train", train(a, out, err)),
        Command::Evaluate(a) => ("evaluate", evaluate_cmd(a, out)),
        Command::Transform(a) => ("transform", transform(a)),
        Command::OracleCheck(a) => ("oracle-check", oracle_check(a, out)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "lpnet {name}: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Usage => EXIT_USAGE,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numeric => EXIT_NUMERIC,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let ds = build_dataset(a.dataset, a.seed)?;
    let dir = write_dataset(&a.out, &ds)?;
    let _ = writeln!(out, "wrote {} samples to {}", ds.train.len() + ds.val.len() + ds.test.len(), dir.display());
    Ok(())
}

/// Worker threads for seed fan-out, from [`THREADS_ENV`] or the machine.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config(THREADS_ENV, format!("expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, usize::from)),
    }
}

fn train(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(seeds) = &a.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(dir) = &a.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(dir) = &a.data_dir {
        cfg.data_dir = dir.clone();
    }
    if let Some(epochs) = a.epochs {
        cfg.epochs = epochs;
    }
    cfg.validate()?;
    let threads = thread_count()?;
    let data = RunData::load(&cfg)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    let config_path = cfg.output_dir.join("config.json");
    std::fs::write(&config_path, cfg.to_json()?).map_err(io_err(&config_path))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(THREADS_ENV, e.to_string()))?;
    let log_every = a.log_every;
    let results: Vec<Result<RunSummary>> = pool.install(|| {
        use rayon::prelude::*;
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let outcome = train_run_with(&cfg, seed, &data, |r| {
                    if log_every > 0 && r.epoch % log_every == 0 {
                        eprintln!("seed {seed} epoch {} train {:.4e} val {:.4e}", r.epoch, r.train_mse, r.val_mse);
                    }
                })?;
                save_outcome(&seed_dir(&cfg.output_dir, seed), &outcome)?;
                Ok(outcome.metrics.summary)
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }
    for r in &runs {
        let _ = writeln!(err, "seed {}: test mse {:.4e} (best epoch {}, {:.1} s)", r.seed, r.test_mse, r.best_epoch, r.wall_clock_s);
    }
    let summary = SeedSummary::new(cfg.dataset_id, &runs);
    let path = cfg.output_dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(io_err(&path))?;
    let _ = writeln!(out, "DS{} test MSE: {}", summary.dataset_id, summary.table);
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::load(&a.config)?;
    let model = cfg.model_config();
    let root = a.data_dir.as_ref().unwrap_or(&cfg.data_dir);
    let data = SplitData::load(root, cfg.dataset_id, a.split.into(), &model)?;
    let value = evaluate(&a.checkpoint, &data, Some(&model))?;
    let _ = writeln!(out, "{{\"split\": \"{}\", \"mse\": {}}}", data.split.name(), fmt_f64(value));
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForwardParams {
    s: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InverseParams {
    #[serde(default)]
    alpha: f64,
    #[serde(default = "default_zeta")]
    zeta: f64,
    #[serde(default = "default_n_ilt")]
    n_ilt: usize,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default)]
    summation: Summation,
    /// `e^{−τs} num(s)/den(s)`, coefficients in ascending powers.
    rational: Option<RationalSignal>,
    /// Values at the query points `s_k(t)`, `k = 0..=n_ilt`, one list per time.
    values: Option<Vec<Vec<[f64; 2]>>>,
}

fn default_zeta() -> f64 {
    2.0
}
fn default_n_ilt() -> usize {
    64
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn read_params<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::config("params", format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = [f64; 2]>) -> Result<()> {
    let mut text = format!("{header}\n");
    for [a, b] in rows {
        text.push_str(&format!("{},{}\n", fmt_f64(a), fmt_f64(b)));
    }
    std::fs::write(path, text).map_err(io_err(path))
}

fn transform(a: &TransformArgs) -> Result<()> {
    match a.mode {
        TransformMode::Dlt | TransformMode::Fflt => {
            let params: ForwardParams = read_params(&a.params)?;
            let cols = read_columns(&a.input, &["t", "x"])?;
            let (t, x) = (&cols[0], Array2::from_shape_vec((cols[1].len(), 1), cols[1].clone()).expect("column"));
            let points: Vec<Complex64> = params.s.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            let values: Vec<Complex64> = match a.mode {
                TransformMode::Dlt => points.iter().map(|&s| dlt(t, x.view(), s).map(|v| v[0])).collect::<Result<_>>()?,
                _ => {
                    let f = fflt(t, x.view())?;
                    points.iter().map(|&s| f.eval(s).map(|v| v[0])).collect::<Result<_>>()?
                }
            };
            write_csv(&a.out, "re,im", values.iter().map(|v| [v.re, v.im]))
        }
        TransformMode::Ilt => {
            let p: InverseParams = read_params(&a.params)?;
            let cfg = IltConfig { alpha: p.alpha, zeta: p.zeta, epsilon: p.epsilon, n_ilt: p.n_ilt, c_shift: 0.0, summation: p.summation };
            cfg.validate()?;
            let t = read_columns(&a.input, &["t"])?.remove(0);
            let y: Vec<f64> = match (&p.rational, &p.values) {
                (Some(r), None) => {
                    r.validate()?;
                    ilt_fourier(r, &t, &cfg)?.column(0).to_vec()
                }
                (None, Some(values)) => ilt_from_values(values, &t, &cfg)?,
                _ => return Err(Error::config("params", "give exactly one of `rational` or `values`")),
            };
            write_csv(&a.out, "t,y", t.iter().zip(&y).map(|(&t, &y)| [t, y]))
        }
    }
}

fn ilt_from_values(values: &[Vec<[f64; 2]>], t: &[f64], cfg: &IltConfig) -> Result<Vec<f64>> {
    if values.len() != t.len() {
        return Err(Error::config("values", format!("expected one list per time ({}), got {}", t.len(), values.len())));
    }
    values
        .iter()
        .zip(t)
        .map(|(row, &t)| {
            if row.len() != cfg.n_ilt + 1 {
                return Err(Error::config("values", format!("expected {} values per time, got {}", cfg.n_ilt + 1, row.len())));
            }
            if !(t > 0.0) {
                return Err(Error::Domain { what: "reconstruction time must be positive", index: 0, value: t });
            }
            let z: Vec<Complex64> = row.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            let prefactor = (cfg.sigma(t) * t).exp() / (cfg.zeta * t);
            Ok(prefactor * sum_terms(&bracket_terms(&z, cfg), cfg.summation))
        })
        .collect()
}

/// One named check with its measured value and tolerance.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.value < self.tolerance
    }
}

/// Transform pairs and prescaled-path equivalence for one contour setting.
pub fn transform_cases(ilt: &IltConfig) -> Result<Vec<CheckLine>> {
    ilt.validate()?;
    let direct = IltConfig { summation: Summation::Direct, ..*ilt };
    let mut lines = Vec::new();
    for pair in transform_pairs() {
        lines.push(CheckLine { name: format!("pair {}", pair.name), value: pair_error(&pair, ilt)?, tolerance: PAIR_TOLERANCE });
        lines.push(CheckLine {
            name: format!("prescaled {}", pair.name),
            value: prescaled_gap(&pair, &direct)?,
            tolerance: PRESCALED_TOLERANCE,
        });
    }
    Ok(lines)
}

/// The benchmark model configuration with the inversion settings of `ilt`.
pub fn oracle_model_config(ilt: &IltConfig) -> Result<ModelConfig> {
    ilt.validate()?;
    let base = RunConfig::preset(1)?.model_config();
    Ok(ModelConfig { ilt: IltConfig { n_ilt: ilt.n_ilt, summation: ilt.summation, epsilon: ilt.epsilon, ..base.ilt }, ..base })
}

/// Analytic spring-mass-damper forecasts, one per forcing family.
pub fn smd_cases(ilt: &IltConfig) -> Result<Vec<CheckLine>> {
    let model = oracle_model_config(ilt)?;
    oracle_forcings()
        .into_iter()
        .map(|(name, forcing)| {
            Ok(CheckLine {
                name: format!("smd oracle {name}"),
                value: smd_oracle_rmse(&model, BENCHMARK_SMD, &forcing)?,
                tolerance: ORACLE_TOLERANCE,
            })
        })
        .collect()
}

fn oracle_check(a: &OracleArgs, out: &mut dyn Write) -> Result<()> {
    let ilt = IltConfig::new(a.alpha, a.zeta, a.n_ilt);
    let mut lines = transform_cases(&ilt)?;
    lines.extend(smd_cases(&ilt)?);
    let mut failed = 0;
    for l in &lines {
        let tag = if l.passed() { "PASS" } else { "FAIL" };
        failed += usize::from(!l.passed());
        let _ = writeln!(out, "{tag} {}: {:.3e} (< {:.0e})", l.name, l.value, l.tolerance);
    }
    if failed > 0 {
        return Err(Error::Domain { what: "oracle cases failed", index: failed, value: failed as f64 });
    }
    Ok(())
}
