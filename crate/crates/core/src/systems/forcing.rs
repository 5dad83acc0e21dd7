use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// External excitation `x(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingSignal {
    /// `A / (1 + exp(−κ sin(2πt/P)))`.
    Sigmoid { amplitude: f64, period: f64, steepness: f64 },
    /// `A e^{−dt} sin(ωt)`.
    DecayingSine { amplitude: f64, omega: f64, decay: f64 },
    /// Triangle wave of period `P` peaking at `A` for `t = P/4`, zero at `t = 0`.
    Triangular { amplitude: f64, period: f64 },
    /// `A e^{−dt} sin(ωt + φ)`.
    DecayingSinusoid { amplitude: f64, omega: f64, decay: f64, phase: f64 },
    Constant { value: f64 },
}

impl ForcingSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ForcingSignal::Sigmoid { amplitude, period, steepness } => {
                amplitude / (1.0 + (-steepness * (2.0 * PI * t / period).sin()).exp())
            }
            ForcingSignal::DecayingSine { amplitude, omega, decay } => {
                amplitude * (-decay * t).exp() * (omega * t).sin()
            }
            ForcingSignal::Triangular { amplitude, period } => {
                let phase = (t / period + 0.25).rem_euclid(1.0);
                amplitude * (1.0 - 4.0 * (phase - 0.5).abs())
            }
            ForcingSignal::DecayingSinusoid { amplitude, omega, decay, phase } => {
                amplitude * (-decay * t).exp() * (omega * t + phase).sin()
            }
            ForcingSignal::Constant { value } => value,
        }
    }

    /// Builds a signal from a kind name and a parameter map.
    pub fn from_parts(kind: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |name: &str| {
            params
                .get(name)
                .copied()
                .ok_or_else(|| Error::config(format!("forcing.{name}"), format!("required for kind `{kind}`")))
        };
        Ok(match kind {
            "sigmoid" => ForcingSignal::Sigmoid {
                amplitude: get("amplitude")?,
                period: get("period")?,
                steepness: get("steepness")?,
            },
            "decaying_sine" => ForcingSignal::DecayingSine {
                amplitude: get("amplitude")?,
                omega: get("omega")?,
                decay: get("decay")?,
            },
            "triangular" => ForcingSignal::Triangular {
                amplitude: get("amplitude")?,
                period: get("period")?,
            },
            "decaying_sinusoid" => ForcingSignal::DecayingSinusoid {
                amplitude: get("amplitude")?,
                omega: get("omega")?,
                decay: get("decay")?,
                phase: get("phase")?,
            },
            "constant" => ForcingSignal::Constant { value: get("value")? },
            other => return Err(Error::config("forcing.kind", format!("unknown kind `{other}`"))),
        })
    }
}
