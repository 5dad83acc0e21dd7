//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use lpnet_cli::{oracle_model_config, smd_cases, transform_cases, CheckLine};
use lpnet_core::autodiff::{grad_check, Tape, Tensor};
use lpnet_core::laplace::{IltConfig, Summation};
use lpnet_core::model::{rmse, smd_forecast, smd_reference, LpNet, ModelConfig, SamplePlan, SmdParams, BENCHMARK_SMD};
use lpnet_core::systems::{
    build_dataset, pulse_onset, uniform_grid, write_dataset, DatasetSpec, ForcingSignal, Pulse, Split, System,
};
use lpnet_core::training::{median, save_outcome, seed_dir, train_run_with, RunConfig, RunData, SplitData};
use lpnet_core::Result;

/// Relative tolerance of the finite-difference gradient check.
const GRAD_TOLERANCE: f64 = 1e-4;
/// Median test MSE required on the spring-mass-damper benchmark.
const DS1_MSE_TARGET: f64 = 1e-2;
/// Factor by which the delay benchmark must beat the last-value baseline.
const DS8_BASELINE_FACTOR: f64 = 5.0;
/// Wall-clock budget per training seed, in seconds.
const SEED_BUDGET_S: f64 = 1800.0;
/// Seed used to generate the benchmark datasets.
const DATASET_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "acceptance", about = "Runs the acceptance criteria and prints one line per criterion")]
struct Opts {
    /// Working directory for generated data and trained models.
    #[arg(long, default_value = "target/acceptance")]
    out: PathBuf,
    /// Training seeds per benchmark.
    #[arg(long, default_value_t = 6)]
    seeds: u64,
    #[arg(long, default_value_t = 160)]
    ds1_epochs: usize,
    #[arg(long, default_value_t = 2000)]
    ds8_epochs: usize,
    /// Report the training criteria as skipped.
    #[arg(long)]
    skip_training: bool,
    /// Comma-separated criterion numbers to run; all by default.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
}

struct Outcome {
    pass: bool,
    detail: String,
    seconds: f64,
    budget_s: f64,
}

fn main() {
    let opts = Opts::parse();
    let criteria: [(u8, &str, f64, fn(&Opts) -> Result<(bool, String)>); 8] = [
        (1, "transform-pair corpus", 1.0, corpus),
        (2, "prescaled equivalence", 1.0, prescaled),
        (3, "analytic SMD oracle", 10.0, smd_oracle),
        (4, "gradient fidelity", 30.0, gradients),
        (5, "DS1 training", SEED_BUDGET_S, ds1_training),
        (6, "DS8 versus last value", SEED_BUDGET_S, ds8_training),
        (7, "DDE delay onset", 5.0, dde_delay),
        (8, "determinism", f64::INFINITY, determinism),
    ];
    let mut failed = 0;
    for (id, name, budget_s, check) in criteria {
        if opts.only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        if opts.skip_training && (id == 5 || id == 6) {
            println!("SKIP {id} {name}");
            continue;
        }
        let start = Instant::now();
        let outcome = match check(&opts) {
            Ok((pass, detail)) => Outcome { pass, detail, seconds: start.elapsed().as_secs_f64(), budget_s },
            Err(e) => Outcome { pass: false, detail: format!("error: {e}"), seconds: start.elapsed().as_secs_f64(), budget_s },
        };
        // Training criteria carry their own per-seed budget check.
        let timely = id == 5 || id == 6 || outcome.seconds <= outcome.budget_s;
        let pass = outcome.pass && timely;
        failed += usize::from(!pass);
        println!(
            "{} {id} {name}: {} [{:.1} s{}]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            outcome.seconds,
            if timely { String::new() } else { format!(", over {} s budget", outcome.budget_s) },
        );
        if id == 3 {
            match smd_oracle_all_samples() {
                Ok(line) => println!("INFO 3 {line}"),
                Err(e) => println!("INFO 3 sample sweep failed: {e}"),
            }
        }
    }
    std::process::exit(if failed == 0 { 0 } else { 1 });
}

fn worst(lines: &[CheckLine], prefix: &str) -> (bool, String) {
    let selected: Vec<&CheckLine> = lines.iter().filter(|l| l.name.starts_with(prefix)).collect();
    let pass = selected.iter().all(|l| l.passed());
    let w = selected.iter().max_by(|a, b| a.value.total_cmp(&b.value)).expect("cases");
    (pass, format!("worst {} = {:.3e} (< {:.0e})", w.name, w.value, w.tolerance))
}

fn contour() -> IltConfig {
    IltConfig::new(1e-3, 2.0, 64)
}

fn corpus(_: &Opts) -> Result<(bool, String)> {
    Ok(worst(&transform_cases(&contour())?, "pair"))
}

fn prescaled(_: &Opts) -> Result<(bool, String)> {
    Ok(worst(&transform_cases(&contour())?, "prescaled"))
}

fn smd_oracle(_: &Opts) -> Result<(bool, String)> {
    Ok(worst(&smd_cases(&contour())?, "smd oracle"))
}

/// Worst oracle RMSE over every generated DS1 sample.
fn smd_oracle_all_samples() -> Result<String> {
    let ds = build_dataset(1, DATASET_SEED)?;
    let cfg = oracle_model_config(&contour())?;
    let smd = match ds.spec.system.system {
        System::Smd { m, c, k } => SmdParams { m, c, k },
        _ => unreachable!("benchmark 1 is the spring-mass-damper"),
    };
    let mut all = 0.0f64;
    for g in ds.train.iter().chain(&ds.val).chain(&ds.test) {
        let (sample, states) = smd_reference(smd, &|s| g.forcing.eval(s), &g.sample.t, cfg.n_hist)?;
        let pred = smd_forecast(&cfg, smd, &sample, &states)?;
        let truth: Vec<f64> = sample.y.column(0).iter().skip(cfg.n_hist).copied().collect();
        all = all.max(rmse(&pred, &truth));
    }
    let count = ds.train.len() + ds.val.len() + ds.test.len();
    Ok(format!("worst analytic SMD oracle RMSE over all {count} generated DS1 samples {all:.3e}"))
}

/// Benchmark-1 structure with narrow layers, so every parameter can be perturbed.
fn gradient_config(summation: Summation) -> Result<ModelConfig> {
    let base = RunConfig::preset(1)?.model_config();
    Ok(ModelConfig {
        ilt: IltConfig { n_ilt: 12, summation, ..base.ilt },
        n_hist: 8,
        d_enc: 6,
        d_z: 3,
        d_h: 8,
        q: 1,
        ..base
    })
}

fn gradients(_: &Opts) -> Result<(bool, String)> {
    let forcing = ForcingSignal::Sigmoid { amplitude: 1.0, period: 3.0, steepness: 3.0 };
    let t: Vec<f64> = uniform_grid(20.0 * 18.0 / 550.0, 18).iter().map(|v| v + 1.0).collect();
    let (sample, _) = smd_reference(BENCHMARK_SMD, &|s| forcing.eval(s), &t, 8)?;
    let mut worst_rel: f64 = 0.0;
    let mut params = 0;
    for summation in [Summation::Direct, Summation::Accelerated] {
        let cfg = gradient_config(summation)?;
        let net = LpNet::new(cfg.clone(), 17)?;
        let plan = SamplePlan::new(&cfg, &sample)?;
        let point: Vec<Tensor> = net.store.iter().map(|p| p.value.clone()).collect();
        params = net.store.scalar_count();
        let report = grad_check(
            |tape: &mut Tape, bound| {
                let y = net.forecast_tape(tape, bound, &plan)?;
                let target = tape.leaf(plan.target.clone());
                let d = tape.sub(y, target)?;
                let sq = tape.square(d);
                Ok(tape.mean(sq))
            },
            &point,
            1e-5,
        )?;
        worst_rel = worst_rel.max(report.max_rel_error);
    }
    Ok((
        worst_rel < GRAD_TOLERANCE,
        format!("max relative error {worst_rel:.3e} (< {GRAD_TOLERANCE:.0e}) over {params} parameters, 10-point window"),
    ))
}

fn ensure_dataset(opts: &Opts, id: u8) -> Result<PathBuf> {
    let root = opts.out.join("data");
    let dir = lpnet_core::systems::dataset_dir(&root, id);
    if !dir.join(Split::Test.name()).is_dir() {
        write_dataset(&root, &build_dataset(id, DATASET_SEED)?)?;
    }
    Ok(root)
}

struct SeedRun {
    test_mse: Vec<f64>,
    slowest_s: f64,
    data: RunData,
}

fn train_seeds(opts: &Opts, id: u8, epochs: usize) -> Result<SeedRun> {
    let root = ensure_dataset(opts, id)?;
    let cfg = RunConfig {
        data_dir: root,
        output_dir: opts.out.join(format!("ds{id}")),
        epochs,
        seeds: (0..opts.seeds).collect(),
        ..RunConfig::preset(id)?
    };
    let data = RunData::load(&cfg)?;
    let mut test_mse = Vec::new();
    let mut slowest_s: f64 = 0.0;
    for &seed in &cfg.seeds {
        let outcome = train_run_with(&cfg, seed, &data, |r| {
            if r.epoch % 50 == 0 {
                eprintln!("  ds{id} seed {seed} epoch {} train {:.3e} val {:.3e}", r.epoch, r.train_mse, r.val_mse);
            }
        })?;
        save_outcome(&seed_dir(&cfg.output_dir, seed), &outcome)?;
        let s = &outcome.metrics.summary;
        eprintln!("  ds{id} seed {seed}: test {:.3e}, best epoch {}, {:.0} s", s.test_mse, s.best_epoch, s.wall_clock_s);
        test_mse.push(s.test_mse);
        slowest_s = slowest_s.max(s.wall_clock_s);
    }
    Ok(SeedRun { test_mse, slowest_s, data })
}

fn baselines(test: &SplitData) -> String {
    format!("zero {:.3e}, last value {:.3e}", test.zero_baseline(), test.last_value_baseline())
}

fn ds1_training(opts: &Opts) -> Result<(bool, String)> {
    let run = train_seeds(opts, 1, opts.ds1_epochs)?;
    let med = median(&run.test_mse);
    Ok((
        med <= DS1_MSE_TARGET && run.slowest_s <= SEED_BUDGET_S,
        format!(
            "median test MSE {med:.3e} (<= {DS1_MSE_TARGET:.0e}) over {} seeds, {} epochs; slowest seed {:.0} s (<= {SEED_BUDGET_S:.0}); baselines {}",
            run.test_mse.len(),
            opts.ds1_epochs,
            run.slowest_s,
            baselines(&run.data.test)
        ),
    ))
}

fn ds8_training(opts: &Opts) -> Result<(bool, String)> {
    let run = train_seeds(opts, 8, opts.ds8_epochs)?;
    let med = median(&run.test_mse);
    let last = run.data.test.last_value_baseline();
    let ratio = last / med;
    Ok((
        ratio >= DS8_BASELINE_FACTOR && run.slowest_s <= SEED_BUDGET_S,
        format!(
            "last value / median test MSE = {ratio:.2} (>= {DS8_BASELINE_FACTOR}), median {med:.3e} over {} seeds, {} epochs; slowest seed {:.0} s; baselines {}",
            run.test_mse.len(),
            opts.ds8_epochs,
            run.slowest_s,
            baselines(&run.data.test)
        ),
    ))
}

fn dde_delay(_: &Opts) -> Result<(bool, String)> {
    let spec = DatasetSpec::benchmark(8)?;
    let tau = match spec.system.system {
        System::MackeyGlass { tau, .. } => tau,
        _ => unreachable!("benchmark 8 is Mackey-Glass"),
    };
    let x = ForcingSignal::Sigmoid { amplitude: 0.3, period: 5.0, steepness: 4.0 };
    let t = uniform_grid(spec.horizon, spec.n_hist + spec.n_fore);
    let dt = t[1] - t[0];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for index in [40, 100, 180, 300] {
        let onset = pulse_onset(&spec.system, &|s| x.eval(s), &t, Pulse { index, delta: 0.1 }, 1e-9)?;
        match onset {
            Some(onset) => {
                let gap = (onset - (t[index] + tau)).abs();
                worst = worst.max(gap);
                pass &= gap <= dt;
            }
            None => pass = false,
        }
    }
    Ok((pass, format!("worst |onset − (t0 + τ)| = {worst:.3e} (<= Δt = {dt:.3e})")))
}

fn files_under(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| lpnet_core::Error::io(&dir, e))? {
            let path = entry.map_err(|e| lpnet_core::Error::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).map_err(|e| lpnet_core::Error::io(&path, e))?;
                out.insert(path.strip_prefix(root).expect("under root").to_path_buf(), bytes);
            }
        }
    }
    Ok(out)
}

/// Seed summaries record wall-clock time, the one field allowed to differ.
fn comparable(path: &Path, bytes: &[u8]) -> Vec<u8> {
    let is_seed_summary = path.file_name().is_some_and(|n| n == "summary.json")
        && path.parent().and_then(Path::file_name).is_some_and(|p| p.to_string_lossy().starts_with("seed_"));
    if !is_seed_summary {
        return bytes.to_vec();
    }
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap_or(serde_json::Value::Null);
    if let Some(o) = v.as_object_mut() {
        o.remove("wall_clock_s");
    }
    serde_json::to_vec(&v).unwrap_or_default()
}

fn determinism(opts: &Opts) -> Result<(bool, String)> {
    let dir = opts.out.join("determinism");
    let mut trees = Vec::new();
    for _ in 0..2 {
        let _ = std::fs::remove_dir_all(&dir);
        let data = dir.join("data");
        let config = dir.join("config.json");
        std::fs::create_dir_all(&dir).map_err(|e| lpnet_core::Error::io(&dir, e))?;
        let cfg = RunConfig { data_dir: data.clone(), output_dir: dir.join("runs"), epochs: 5, seeds: vec![0, 1], ..RunConfig::preset(8)? };
        std::fs::write(&config, cfg.to_json()?).map_err(|e| lpnet_core::Error::io(&config, e))?;
        let mut sink = Vec::new();
        let mut errs = Vec::new();
        let s = |p: &Path| p.to_string_lossy().into_owned();
        for args in [
            vec!["lpnet".into(), "generate".into(), "--dataset".into(), "8".into(), "--seed".into(), "3".into(), "--out".into(), s(&data)],
            vec!["lpnet".into(), "train".into(), "--config".into(), s(&config), "--log-every".into(), "0".into()],
        ] {
            let code = lpnet_cli::run(args, &mut sink, &mut errs);
            if code != 0 {
                return Ok((false, format!("command exited {code}: {}", String::from_utf8_lossy(&errs))));
            }
        }
        let mut files = files_under(&data)?;
        files.extend(files_under(&dir.join("runs"))?.into_iter().map(|(k, v)| (Path::new("runs").join(k), v)));
        trees.push(files);
    }
    let (a, b) = (&trees[0], &trees[1]);
    let same_names = a.keys().eq(b.keys());
    let differing: Vec<String> = a
        .iter()
        .filter(|(k, v)| b.get(*k).is_none_or(|w| comparable(k, v) != comparable(k, w)))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let pass = same_names && differing.is_empty();
    Ok((
        pass,
        if pass {
            format!("{} files identical across two generate + train runs (seed summaries compared without wall_clock_s)", a.len())
        } else {
            format!("differing files: {differing:?}")
        },
    ))
}
