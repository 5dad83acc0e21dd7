use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{Error, Result};
use crate::laplace::{IltConfig, Summation};
use crate::model::{LpType, ModelConfig};
use crate::systems::N_HIST;

pub const DEFAULT_EPOCHS: usize = 2000;
pub const DEFAULT_D_Z: usize = 8;
pub const DEFAULT_CLIP_NORM: f64 = 10.0;
/// Contour ε used by training runs unless the config sets one.
pub const TRAINING_EPSILON: f64 = 0.1;

/// One training experiment: dataset, model hyperparameters and schedule.
///
/// Field names follow the usual hyperparameter table columns; `alpha_e3`
/// and `lr_e3` are in units of `10⁻³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_id: u8,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub lp_type: LpType,
    pub alpha_e3: f64,
    pub zeta: f64,
    pub c_shift: f64,
    pub n_ilt: usize,
    pub d_enc: usize,
    pub l_enc: usize,
    pub p: usize,
    pub kappa_h: f64,
    pub lr_e3: f64,
    pub q: usize,
    pub act_h: Activation,
    pub d_h: usize,
    pub l_h: usize,
    #[serde(default = "default_d_z")]
    pub d_z: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_true")]
    pub use_scaling: bool,
    #[serde(default = "default_summation")]
    pub summation: Summation,
    #[serde(default = "default_clip")]
    pub clip_norm: f64,
    #[serde(default = "default_n_hist")]
    pub n_hist: usize,
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_epochs() -> usize {
    DEFAULT_EPOCHS
}
fn default_seeds() -> Vec<u64> {
    (0..6).collect()
}
fn default_d_z() -> usize {
    DEFAULT_D_Z
}
fn default_epsilon() -> f64 {
    TRAINING_EPSILON
}
fn default_true() -> bool {
    true
}
fn default_summation() -> Summation {
    Summation::Direct
}
fn default_clip() -> f64 {
    DEFAULT_CLIP_NORM
}
fn default_n_hist() -> usize {
    N_HIST
}

struct Row(LpType, f64, f64, f64, usize, usize, usize, usize, f64, f64, usize, Activation, usize, usize);

/// Tuned hyperparameters per benchmark dataset.
const PRESETS: [Row; 8] = {
    use Activation::{Silu, Softsign, Tanh};
    use LpType::{Dlt, Fflt};
    [
        Row(Dlt, 4.51, 2.0, 2.7, 41, 56, 2, 3, 450.0, 4.40, 3, Tanh, 192, 4),
        Row(Dlt, 2.26, 2.7, 1.5, 37, 64, 4, 1, 330.0, 1.86, 2, Tanh, 144, 2),
        Row(Fflt, 9.81, 2.5, 4.5, 41, 40, 2, 3, 270.0, 3.98, 4, Softsign, 96, 2),
        Row(Dlt, 6.46, 1.5, 4.4, 43, 24, 1, 2, 100.0, 3.73, 5, Silu, 144, 4),
        Row(Fflt, 3.46, 2.7, 7.4, 67, 48, 1, 3, 440.0, 0.74, 2, Silu, 160, 6),
        Row(Fflt, 2.81, 2.1, 4.3, 67, 56, 1, 2, 380.0, 2.5, 1, Silu, 64, 6),
        Row(Fflt, 9.71, 1.7, 8.2, 75, 20, 5, 3, 400.0, 3.95, 8, Softsign, 48, 6),
        Row(Fflt, 7.26, 2.6, 9.6, 79, 16, 2, 3, 110.0, 5.88, 10, Silu, 64, 1),
    ]
};

impl RunConfig {
    /// Published hyperparameters for benchmark `dataset_id` with default schedule.
    pub fn preset(dataset_id: u8) -> Result<Self> {
        let row = (1..=8)
            .contains(&dataset_id)
            .then(|| &PRESETS[dataset_id as usize - 1])
            .ok_or_else(|| Error::config("dataset_id", format!("{dataset_id} is not in 1..=8")))?;
        let Row(lp_type, alpha_e3, zeta, c_shift, n_ilt, d_enc, l_enc, p, kappa_h, lr_e3, q, act_h, d_h, l_h) = *row;
        Ok(RunConfig {
            dataset_id,
            data_dir: default_data_dir(),
            output_dir: default_output_dir(),
            epochs: DEFAULT_EPOCHS,
            seeds: default_seeds(),
            lp_type,
            alpha_e3,
            zeta,
            c_shift,
            n_ilt,
            d_enc,
            l_enc,
            p,
            kappa_h,
            lr_e3,
            q,
            act_h,
            d_h,
            l_h,
            d_z: DEFAULT_D_Z,
            epsilon: TRAINING_EPSILON,
            use_scaling: true,
            summation: Summation::Direct,
            clip_norm: DEFAULT_CLIP_NORM,
            n_hist: N_HIST,
        })
    }

    /// Parses and validates; schema errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config { field, reason } if field == "config" => {
                Error::config("config", format!("{}: {reason}", path.display()))
            }
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.dataset_id) {
            return Err(Error::config("dataset_id", format!("{} is not in 1..=8", self.dataset_id)));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if !(self.lr_e3 > 0.0 && self.lr_e3.is_finite()) {
            return Err(Error::config("lr_e3", "must be positive"));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::config("clip_norm", "must be positive"));
        }
        self.model_config().validate()
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            lp_type: self.lp_type,
            ilt: IltConfig {
                alpha: self.alpha_e3 * 1e-3,
                zeta: self.zeta,
                epsilon: self.epsilon,
                n_ilt: self.n_ilt,
                c_shift: self.c_shift,
                summation: self.summation,
            },
            n_hist: self.n_hist,
            d_enc: self.d_enc,
            l_enc: self.l_enc,
            p_degree: self.p,
            d_z: self.d_z,
            kappa_h: self.kappa_h,
            q: self.q,
            act_h: self.act_h,
            d_h: self.d_h,
            l_h: self.l_h,
            use_scaling: self.use_scaling,
            b: 1.0,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr_e3 * 1e-3
    }
}
