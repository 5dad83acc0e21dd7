//! Forward and inverse numerical Laplace transforms.
//!
//! The inverse transform is the Fourier-series method on a shifted vertical
//! contour with a time-proportional period (`λ = ζ t`). Forward transforms of
//! sampled signals come in two flavours: a direct Riemann sum ([`dlt`]) and a
//! pole–residue sum built from FFT coefficients ([`fflt`]).

mod corpus;
mod ilt;
mod query;
mod rational;
mod transform;

pub use corpus::{pair_error, pair_times, prescaled_gap, transform_pairs, TransformPair, JUMP_BAND, PAIR_DELAY};
pub use ilt::{
    bracket_terms, ilt_fourier, ilt_fourier_prescaled, sum_terms, wynn_epsilon, wynn_epsilon_grad, FnSignal,
    LaplaceSignal, Prescaled, ScaledSignal,
};
pub use query::{build_queries, scale_factor, QuerySet};
pub use rational::RationalSignal;
pub use transform::{dlt, fflt, Dlt, Fflt};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use num_complex::Complex64;

/// How the truncated Fourier series of the inverse transform is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Summation {
    /// Plain truncated sum over `k = 0..=n_ilt`, reduced in `k` order.
    Direct,
    /// Wynn epsilon extrapolation of the partial sums. The plain sum carries a
    /// `ε^{-1/ζ}` prefactor that amplifies truncation error; extrapolation
    /// removes most of it.
    #[default]
    Accelerated,
}

/// Contour parameters for query points and reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IltConfig {
    /// Contour shift on the real axis.
    pub alpha: f64,
    /// Period scale, `λ = ζ t`.
    pub zeta: f64,
    /// Target discretisation error; sets `σ = α − ln(ε)/λ`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Number of reconstruction terms after the `k = 0` term.
    pub n_ilt: usize,
    /// Positive shift applied to forecast time axes before the transform.
    #[serde(default)]
    pub c_shift: f64,
    #[serde(default)]
    pub summation: Summation,
}

pub const DEFAULT_EPSILON: f64 = 1e-10;

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl IltConfig {
    pub fn new(alpha: f64, zeta: f64, n_ilt: usize) -> Self {
        IltConfig {
            alpha,
            zeta,
            epsilon: DEFAULT_EPSILON,
            n_ilt,
            c_shift: 0.0,
            summation: Summation::default(),
        }
    }

    pub fn with_summation(mut self, summation: Summation) -> Self {
        self.summation = summation;
        self
    }

    pub fn with_c_shift(mut self, c_shift: f64) -> Self {
        self.c_shift = c_shift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", format!("must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.zeta > 1.0 && self.zeta.is_finite()) {
            return Err(Error::config("zeta", format!("must be > 1, got {}", self.zeta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::config(
                "epsilon",
                format!("must lie in (0, 1), got {}", self.epsilon),
            ));
        }
        if self.n_ilt == 0 {
            return Err(Error::config("n_ilt", "must be >= 1"));
        }
        if !(self.c_shift >= 0.0 && self.c_shift.is_finite()) {
            return Err(Error::config("c_shift", format!("must be >= 0, got {}", self.c_shift)));
        }
        Ok(())
    }

    /// Real part of every query point at time `t`.
    pub fn sigma(&self, t: f64) -> f64 {
        self.alpha - self.epsilon.ln() / (self.zeta * t)
    }

    /// Phase `kπ t/λ = kπ/ζ` of the `k`-th reconstruction term.
    pub fn term_phase(&self, k: usize) -> f64 {
        k as f64 * std::f64::consts::PI / self.zeta
    }
}
