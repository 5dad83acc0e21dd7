use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, MlpSpec};
use crate::error::{Error, Result};
use crate::laplace::IltConfig;

/// Forward transform used for the forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LpType {
    Dlt,
    Fflt,
}

/// Structural hyperparameters of an LP-Net model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub lp_type: LpType,
    pub ilt: IltConfig,
    /// History length `N` seen by the encoder.
    pub n_hist: usize,
    pub d_enc: usize,
    pub l_enc: usize,
    /// Number of coefficients of the initial-state polynomial.
    pub p_degree: usize,
    pub d_z: usize,
    pub kappa_h: f64,
    /// Recurrent windows per forecast.
    pub q: usize,
    pub act_h: Activation,
    pub d_h: usize,
    pub l_h: usize,
    pub use_scaling: bool,
    /// Input gain; a scalar for univariate forcing.
    pub b: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.ilt.validate()?;
        for (field, v) in [
            ("n_hist", self.n_hist),
            ("d_enc", self.d_enc),
            ("l_enc", self.l_enc),
            ("p", self.p_degree),
            ("d_z", self.d_z),
            ("q", self.q),
            ("d_h", self.d_h),
            ("l_h", self.l_h),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if !(self.kappa_h > 0.0 && self.kappa_h.is_finite()) {
            return Err(Error::config("kappa_h", "must be positive"));
        }
        if !self.b.is_finite() {
            return Err(Error::config("b", "must be finite"));
        }
        Ok(())
    }

    /// Encoder trunk over the flattened `(t, x, y)` history.
    pub fn encoder_spec(&self) -> MlpSpec {
        MlpSpec {
            input_dim: 3 * self.n_hist,
            output_dim: self.d_enc,
            hidden_dim: self.d_enc,
            layer_count: self.l_enc,
            activation: ENCODER_ACTIVATION,
        }
    }

    /// Transfer network: `(ilt coordinate, time coordinate, z)` to `(Re, Im)`.
    pub fn h_spec(&self) -> MlpSpec {
        MlpSpec {
            input_dim: 2 + self.d_z,
            output_dim: 2,
            hidden_dim: self.d_h,
            layer_count: self.l_h,
            activation: self.act_h,
        }
    }
}

pub const ENCODER_ACTIVATION: Activation = Activation::Tanh;
