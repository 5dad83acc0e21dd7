//! Closed-form transfer function of the spring-mass-damper, run through the
//! same assembly and inversion code as the learned model.

use ndarray::Array2;
use num_complex::Complex64;

use super::config::ModelConfig;
use super::net::{assemble_tape, invert_tape, Scaling};
use super::plan::SamplePlan;
use crate::autodiff::{CVar, Tape, Tensor};
use crate::error::{Error, Result};
use crate::systems::{integrate_rk4, uniform_grid, ForcingSignal, System, SystemSpec, TimeSeriesSample, N_FORE, N_HIST};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmdParams {
    pub m: f64,
    pub c: f64,
    pub k: f64,
}

impl SmdParams {
    /// `H(s) = 1/(m s² + c s + k)`.
    pub fn transfer(&self, s: Complex64) -> Complex64 {
        (s * s * self.m + s * self.c + self.k).inv()
    }

    /// `P(s) = m (s y₀ + v₀) + c y₀`.
    pub fn initial_term(&self, s: Complex64, y0: f64, v0: f64) -> Complex64 {
        (s * y0 + v0) * self.m + self.c * y0
    }

    /// Unforced state `(y, v)` a time `tau` earlier than `(y, v)`, by RK4 on
    /// the reversed flow.
    pub fn rewind(&self, state: [f64; 2], tau: f64) -> [f64; 2] {
        let steps = 2000;
        let h = -tau / steps as f64;
        let f = |s: [f64; 2]| [s[1], (-self.c * s[1] - self.k * s[0]) / self.m];
        let mut s = state;
        for _ in 0..steps {
            let k1 = f(s);
            let k2 = f([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
            let k3 = f([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
            let k4 = f([s[0] + h * k3[0], s[1] + h * k3[1]]);
            for d in 0..2 {
                s[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            }
        }
        s
    }
}

/// Forecast of every window of `sample` from the analytic transfer function,
/// with each window's initial term taken from the true state `states` (one
/// row per sample time) at the window start.
///
/// The local time axis starts `c_shift + Δt` before the first forecast point,
/// so the state is rewound over that interval with the forcing switched off,
/// matching a forcing transform that only covers the window.
pub fn smd_forecast(cfg: &ModelConfig, smd: SmdParams, sample: &TimeSeriesSample, states: &Array2<f64>) -> Result<Vec<f64>> {
    if states.nrows() != sample.len() || states.ncols() != 2 {
        return Err(Error::shape("smd states", format!("[{}, 2]", sample.len()), format!("{:?}", states.shape())));
    }
    let plan = SamplePlan::new(cfg, sample)?;
    let lead = cfg.ilt.c_shift + sample.dt();
    let mut out = Vec::with_capacity(plan.horizon());
    for window in &plan.windows {
        let row = states.row(sample.n_hist + window.start);
        let [y0, v0] = smd.rewind([row[0], row[1]], lead);
        let points = &window.queries.points;
        let h = points.mapv(|s| smd.transfer(s));
        let p = points.mapv(|s| smd.initial_term(s, y0, v0));
        let mut tape = Tape::new();
        let leaf = |tape: &mut Tape, z: &Array2<Complex64>| -> CVar {
            let re: Tensor = z.mapv(|v| v.re);
            let im: Tensor = z.mapv(|v| v.im);
            CVar::new(tape.leaf(re), tape.leaf(im))
        };
        let hv = leaf(&mut tape, &h);
        let pv = leaf(&mut tape, &p);
        let y_tilde = assemble_tape(&mut tape, window, hv, pv, Scaling::None)?;
        let y = invert_tape(&mut tape, &cfg.ilt, y_tilde)?;
        out.extend(tape.value(y).iter().copied());
    }
    Ok(out)
}

/// Simulates SMD under `forcing` on `t` and returns the sample plus the full
/// state trajectory.
pub fn smd_reference(
    smd: SmdParams,
    forcing: &dyn Fn(f64) -> f64,
    t: &[f64],
    n_hist: usize,
) -> Result<(TimeSeriesSample, Array2<f64>)> {
    let spec = SystemSpec::standard(System::Smd { m: smd.m, c: smd.c, k: smd.k });
    let states = integrate_rk4(&spec, forcing, t)?;
    let len = t.len();
    let x = Array2::from_shape_fn((len, 1), |(i, _)| forcing(t[i]));
    let y = states.column(0).to_owned().insert_axis(ndarray::Axis(1));
    Ok((TimeSeriesSample::new(t.to_vec(), x, y, n_hist)?, states))
}

/// The benchmark spring-mass-damper.
pub const BENCHMARK_SMD: SmdParams = SmdParams { m: 1.0, c: 0.5, k: 5.0 };

/// One mid-range member of each benchmark forcing family.
pub fn oracle_forcings() -> [(&'static str, ForcingSignal); 3] {
    [
        ("sigmoid", ForcingSignal::Sigmoid { amplitude: 1.0, period: 5.0, steepness: 5.0 }),
        ("decaying sine", ForcingSignal::DecayingSine { amplitude: 1.0, omega: 2.0, decay: 0.2 }),
        ("triangular", ForcingSignal::Triangular { amplitude: 1.0, period: 5.0 }),
    ]
}

/// RMSE of the analytic-transfer forecast against RK4 over the benchmark
/// horizon (`20 s`, 50 history and 500 forecast points).
pub fn smd_oracle_rmse(cfg: &ModelConfig, smd: SmdParams, forcing: &ForcingSignal) -> Result<f64> {
    let t = uniform_grid(20.0, N_HIST + N_FORE);
    let (sample, states) = smd_reference(smd, &|s| forcing.eval(s), &t, cfg.n_hist)?;
    let pred = smd_forecast(cfg, smd, &sample, &states)?;
    let truth: Vec<f64> = sample.y.column(0).iter().skip(cfg.n_hist).copied().collect();
    Ok(rmse(&pred, &truth))
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(1) as f64;
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewind_inverts_free_motion() {
        let smd = SmdParams { m: 1.0, c: 0.5, k: 5.0 };
        let start = [0.3, -0.7];
        let back = smd.rewind(start, 2.0);
        let forward = smd.rewind(back, -2.0);
        assert!((forward[0] - start[0]).abs() < 1e-10 && (forward[1] - start[1]).abs() < 1e-10);
    }
}
