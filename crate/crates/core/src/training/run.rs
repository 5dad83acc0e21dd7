use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::autodiff::{clip_global_norm, Adam, Checkpoint, Tape};
use crate::error::{Error, Result, StageExt};
use crate::model::{LpNet, ModelConfig, SamplePlan};
use crate::systems::{dataset_dir, fmt_f64, load_split, Split, TimeSeriesSample};

/// Mean of squared elementwise differences.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::shape("mse", target.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::shape("mse", "at least one value", 0));
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

/// Samples of one split, prepared for a model configuration.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub split: Split,
    pub samples: Vec<TimeSeriesSample>,
    pub plans: Vec<SamplePlan>,
}

impl SplitData {
    pub fn new(split: Split, samples: Vec<TimeSeriesSample>, cfg: &ModelConfig) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("dataset", format!("split `{}` has no samples", split.name())));
        }
        let plans = samples.iter().map(|s| SamplePlan::new(cfg, s)).collect::<Result<_>>()?;
        Ok(SplitData { split, samples, plans })
    }

    pub fn load(root: &Path, dataset_id: u8, split: Split, cfg: &ModelConfig) -> Result<Self> {
        let dir = dataset_dir(root, dataset_id);
        if !dir.is_dir() {
            return Err(Error::io(&dir, std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found")));
        }
        let (_, samples) = load_split(&dir, split)?;
        Self::new(split, samples, cfg)
    }

    fn targets(&self) -> impl Iterator<Item = &[f64]> {
        self.plans.iter().map(|p| p.target.as_slice().expect("contiguous row"))
    }

    /// MSE of the model over every forecast point of every sample.
    pub fn evaluate(&self, net: &LpNet) -> Result<f64> {
        let mut pred = Vec::new();
        for plan in &self.plans {
            pred.extend(net.forecast_plan(plan)?);
        }
        let target: Vec<f64> = self.targets().flatten().copied().collect();
        mse(&pred, &target)
    }

    /// MSE of predicting zero everywhere.
    pub fn zero_baseline(&self) -> f64 {
        let target: Vec<f64> = self.targets().flatten().copied().collect();
        mse(&vec![0.0; target.len()], &target).expect("non-empty split")
    }

    /// MSE of holding the last observed output constant.
    pub fn last_value_baseline(&self) -> f64 {
        let mut pred = Vec::new();
        let mut target = Vec::new();
        for plan in &self.plans {
            let last = plan.y_hist[[0, plan.n_hist - 1]];
            pred.extend(std::iter::repeat_n(last, plan.horizon()));
            target.extend(plan.target.iter().copied());
        }
        mse(&pred, &target).expect("non-empty split")
    }
}

/// Train, validation and test splits of one dataset.
#[derive(Debug, Clone)]
pub struct RunData {
    pub train: SplitData,
    pub val: SplitData,
    pub test: SplitData,
}

impl RunData {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let m = cfg.model_config();
        let load = |split| SplitData::load(&cfg.data_dir, cfg.dataset_id, split, &m).stage("load dataset");
        Ok(RunData { train: load(Split::Train)?, val: load(Split::Val)?, test: load(Split::Test)? })
    }
}

/// Train and validation MSE after one epoch. Epoch 0 is the initial model;
/// later rows record the loss of the epoch's forward pass and the validation
/// MSE after its update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Final figures of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub test_mse: f64,
    pub seed: u64,
    pub wall_clock_s: f64,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone)]
pub struct Metrics {
    pub curve: Vec<EpochRecord>,
    pub summary: RunSummary,
}

impl Metrics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,val_mse\n");
        for r in &self.curve {
            let _ = writeln!(out, "{},{},{}", r.epoch, fmt_f64(r.train_mse), fmt_f64(r.val_mse));
        }
        out
    }
}

/// Result of a training run: metrics and the best-validation model.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: Metrics,
    pub net: LpNet,
}

/// Full-batch Adam training with global-norm clipping, keeping the parameters
/// with the lowest validation MSE.
pub fn train_run(cfg: &RunConfig, seed: u64, data: &RunData) -> Result<TrainOutcome> {
    train_run_with(cfg, seed, data, |_| {})
}

/// As [`train_run`], calling `on_epoch` after every recorded epoch.
pub fn train_run_with(
    cfg: &RunConfig,
    seed: u64,
    data: &RunData,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut net = LpNet::new(cfg.model_config(), seed)?;
    let mut adam = Adam::new(cfg.learning_rate());
    let initial = EpochRecord { epoch: 0, train_mse: data.train.evaluate(&net)?, val_mse: data.val.evaluate(&net)? };
    if !initial.train_mse.is_finite() || !initial.val_mse.is_finite() {
        return Err(Error::Divergence { epoch: 0 });
    }
    on_epoch(&initial);
    let mut curve = vec![initial];
    let mut best = (0, initial.val_mse, net.store.clone());
    let points: usize = data.train.plans.iter().map(SamplePlan::horizon).sum();
    for epoch in 1..=cfg.epochs {
        net.store.zero_grads();
        let mut loss = 0.0;
        for plan in &data.train.plans {
            let mut tape = Tape::new();
            let bound = net.store.bind(&mut tape);
            let y = net.forecast_tape(&mut tape, &bound, plan)?;
            let target = tape.leaf(plan.target.clone());
            let d = tape.sub(y, target)?;
            let sq = tape.square(d);
            let sum = tape.sum(sq);
            let l = tape.scale(sum, 1.0 / points as f64);
            loss += tape.value(l)[[0, 0]];
            let grads = tape.backward(l);
            let g = net.store.collect_grads(&grads, &bound);
            net.store.accumulate(&g)?;
        }
        let mut grads = net.store.grads();
        let norm = clip_global_norm(&mut grads, cfg.clip_norm);
        if !loss.is_finite() || !norm.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        adam.step(&mut net.store, &grads)?;
        let val_mse = data.val.evaluate(&net)?;
        if !val_mse.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let record = EpochRecord { epoch, train_mse: loss, val_mse };
        on_epoch(&record);
        curve.push(record);
        if val_mse < best.1 {
            best = (epoch, val_mse, net.store.clone());
        }
    }
    net.store = best.2;
    let test_mse = data.test.evaluate(&net)?;
    let summary = RunSummary {
        test_mse,
        seed,
        wall_clock_s: start.elapsed().as_secs_f64(),
        best_epoch: best.0,
        best_val_mse: best.1,
        epochs: cfg.epochs,
    };
    Ok(TrainOutcome { metrics: Metrics { curve, summary }, net })
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MODEL_FILE: &str = "model.json";

/// Directory holding the artifacts of one seed.
pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes metrics, summary, checkpoint and model sidecar into `dir`.
pub fn save_outcome(dir: &Path, outcome: &TrainOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join(METRICS_FILE), &outcome.metrics.to_csv())?;
    write(&dir.join(SUMMARY_FILE), &serde_json::to_string_pretty(&outcome.metrics.summary)?)?;
    save_model(dir, &outcome.net)
}

pub fn save_model(dir: &Path, net: &LpNet) -> Result<()> {
    Checkpoint::from_store(&net.store).save(&dir.join(CHECKPOINT_FILE))?;
    write(&dir.join(MODEL_FILE), &serde_json::to_string_pretty(&net.config)?)
}

/// Rebuilds a model from a checkpoint and its structural sidecar. When
/// `expected` is given the sidecar must match it.
pub fn load_model(dir: &Path, expected: Option<&ModelConfig>) -> Result<LpNet> {
    let path = dir.join(MODEL_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let config: ModelConfig = serde_json::from_str(&text)?;
    if let Some(expected) = expected {
        check_compatible(expected, &config)?;
    }
    let mut net = LpNet::zeroed(config)?;
    Checkpoint::load(&dir.join(CHECKPOINT_FILE))?.restore_into(&mut net.store)?;
    Ok(net)
}

fn check_compatible(expected: &ModelConfig, found: &ModelConfig) -> Result<()> {
    let a = serde_json::to_value(expected)?;
    let b = serde_json::to_value(found)?;
    let mismatch = |field: String, x: &serde_json::Value, y: &serde_json::Value| Error::Checkpoint {
        field,
        reason: format!("is {y} in the checkpoint but {x} in the configuration"),
    };
    for (key, x) in a.as_object().expect("struct") {
        let y = &b[key];
        match (x.as_object(), y.as_object()) {
            (Some(xs), Some(_)) => {
                for (sub, xv) in xs {
                    if &y[sub] != xv {
                        return Err(mismatch(format!("{key}.{sub}"), xv, &y[sub]));
                    }
                }
            }
            _ if x != y => return Err(mismatch(key.clone(), x, y)),
            _ => {}
        }
    }
    Ok(())
}

/// Forward-only evaluation of a saved model on one split.
pub fn evaluate(dir: &Path, data: &SplitData, expected: Option<&ModelConfig>) -> Result<f64> {
    let net = load_model(dir, expected)?;
    data.evaluate(&net)
}

/// Mean and sample standard deviation, as `(mean, std)`.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Test MSE across seeds, formatted as `mean (std)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub dataset_id: u8,
    pub seeds: Vec<u64>,
    pub test_mse: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub table: String,
}

impl SeedSummary {
    pub fn new(dataset_id: u8, runs: &[RunSummary]) -> Self {
        let test_mse: Vec<f64> = runs.iter().map(|r| r.test_mse).collect();
        let (mean, std) = mean_std(&test_mse);
        SeedSummary {
            dataset_id,
            seeds: runs.iter().map(|r| r.seed).collect(),
            median: median(&test_mse),
            table: format!("{mean:.2e} ({std:.2e})"),
            test_mse,
            mean,
            std,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(mse(&[0.0, 2.0], &[1.0, 0.0]).unwrap(), 2.5);
        assert!(matches!(mse(&[0.0], &[1.0, 0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn mean_std_and_median() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn compatibility_names_the_field() {
        let cfg = super::super::RunConfig::preset(1).unwrap().model_config();
        let mut other = cfg.clone();
        other.d_h = 7;
        let err = check_compatible(&cfg, &other).unwrap_err();
        assert!(matches!(&err, Error::Checkpoint { field, .. } if field == "d_h"), "{err}");
        other = cfg.clone();
        other.ilt.zeta = 3.0;
        let err = check_compatible(&cfg, &other).unwrap_err();
        assert!(matches!(&err, Error::Checkpoint { field, .. } if field == "ilt.zeta"), "{err}");
        check_compatible(&cfg, &cfg).unwrap();
    }
}
