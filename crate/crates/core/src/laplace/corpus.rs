//! Analytic transform pairs used to check the inverse transform.

use super::{ilt_fourier, ilt_fourier_prescaled, IltConfig, Prescaled, RationalSignal};
use crate::error::Result;

/// Delay of the step pair.
pub const PAIR_DELAY: f64 = 1.0;
/// Half-width of the band around a jump excluded from error measurements.
pub const JUMP_BAND: f64 = 0.1;

/// An s-domain signal with its known time-domain inverse.
pub struct TransformPair {
    pub name: &'static str,
    pub signal: RationalSignal,
    pub exact: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// `1/s`, `1/s²`, `1/(s+a)`, `ω/(s²+ω²)` and a delayed step.
pub fn transform_pairs() -> Vec<TransformPair> {
    let a = 0.7;
    let w = 2.0;
    let tau = PAIR_DELAY;
    vec![
        TransformPair { name: "1/s", signal: RationalSignal::new(vec![1.0], vec![0.0, 1.0]), exact: Box::new(|_| 1.0) },
        TransformPair { name: "1/s^2", signal: RationalSignal::new(vec![1.0], vec![0.0, 0.0, 1.0]), exact: Box::new(|t| t) },
        TransformPair {
            name: "1/(s+a)",
            signal: RationalSignal::new(vec![1.0], vec![a, 1.0]),
            exact: Box::new(move |t| (-a * t).exp()),
        },
        TransformPair {
            name: "w/(s^2+w^2)",
            signal: RationalSignal::new(vec![w], vec![w * w, 0.0, 1.0]),
            exact: Box::new(move |t| (w * t).sin()),
        },
        TransformPair {
            name: "e^{-tau s}/s",
            signal: RationalSignal::new(vec![1.0], vec![0.0, 1.0]).delayed(tau),
            exact: Box::new(move |t| if t > tau { 1.0 } else { 0.0 }),
        },
    ]
}

/// `t = 0.1, 0.2, …, 10`.
pub fn pair_times() -> Vec<f64> {
    (0..=99).map(|i| 0.1 + i as f64 * 0.1).collect()
}

/// Largest absolute error of the inverse transform over [`pair_times`],
/// skipping the band around a delayed jump.
pub fn pair_error(pair: &TransformPair, cfg: &IltConfig) -> Result<f64> {
    let times = pair_times();
    let out = ilt_fourier(&pair.signal, &times, cfg)?;
    let delay = pair.signal.delay;
    Ok(times
        .iter()
        .enumerate()
        .filter(|&(_, &t)| !(delay > 0.0 && (t - delay).abs() <= JUMP_BAND))
        .map(|(j, &t)| (out[[j, 0]] - (pair.exact)(t)).abs())
        .fold(0.0, f64::max))
}

/// `max |plain − prescaled| / max |plain|` between the two inversion paths.
pub fn prescaled_gap(pair: &TransformPair, cfg: &IltConfig) -> Result<f64> {
    let times = pair_times();
    let plain = ilt_fourier(&pair.signal, &times, cfg)?;
    let scaled = ilt_fourier_prescaled(&Prescaled::new(&pair.signal, *cfg), &times, cfg)?;
    let norm = plain.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = plain.iter().zip(&scaled).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(gap / norm.max(f64::MIN_POSITIVE))
}
