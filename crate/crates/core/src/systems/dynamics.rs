use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Benchmark equations and their constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum System {
    /// `m ÿ + c ẏ + k y = x`.
    Smd { m: f64, c: f64, k: f64 },
    /// `m ÿ + c ẏ + k₁ y + k₃ y³ = x`.
    Duffing { m: f64, c: f64, k1: f64, k3: f64 },
    /// State `(s_x, y, s_z)`; forcing enters as `−x` in `ṡ_z`.
    Lorenz { sigma: f64, rho: f64, beta: f64 },
    /// `θ̈ + c θ̇ + (g/l) sin θ = x`.
    Pendulum { g_over_l: f64, c: f64 },
    /// `ẏ = β y_τ/(1 + y_τⁿ) − γ y + x` with `y_τ = y(t − τ)`.
    MackeyGlass { beta: f64, gamma: f64, tau: f64, n: f64 },
}

impl System {
    pub fn state_dim(&self) -> usize {
        match self {
            System::Smd { .. } | System::Duffing { .. } | System::Pendulum { .. } => 2,
            System::Lorenz { .. } => 3,
            System::MackeyGlass { .. } => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            System::Smd { .. } => "smd",
            System::Duffing { .. } => "duffing",
            System::Lorenz { .. } => "lorenz",
            System::Pendulum { .. } => "pendulum",
            System::MackeyGlass { .. } => "mackey_glass",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        };
        let non_negative = |field: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be non-negative, got {v}")))
            }
        };
        match *self {
            System::Smd { m, c, k } => {
                positive("m", m)?;
                non_negative("c", c)?;
                positive("k", k)
            }
            System::Duffing { m, c, k1, k3 } => {
                positive("m", m)?;
                non_negative("c", c)?;
                positive("k1", k1)?;
                non_negative("k3", k3)
            }
            System::Lorenz { sigma, rho, beta } => {
                positive("sigma", sigma)?;
                positive("rho", rho)?;
                positive("beta", beta)
            }
            System::Pendulum { g_over_l, c } => {
                positive("g_over_l", g_over_l)?;
                non_negative("c", c)
            }
            System::MackeyGlass { beta, gamma, tau, n } => {
                positive("beta", beta)?;
                positive("gamma", gamma)?;
                positive("tau", tau)?;
                positive("n", n)
            }
        }
    }

    /// Right-hand side for the ordinary systems.
    fn rhs(&self, s: &[f64], x: f64, out: &mut [f64]) {
        match *self {
            System::Smd { m, c, k } => {
                out[0] = s[1];
                out[1] = (x - c * s[1] - k * s[0]) / m;
            }
            System::Duffing { m, c, k1, k3 } => {
                out[0] = s[1];
                out[1] = (x - c * s[1] - k1 * s[0] - k3 * s[0].powi(3)) / m;
            }
            System::Lorenz { sigma, rho, beta } => {
                out[0] = sigma * (s[1] - s[0]);
                out[1] = s[0] * (rho - s[2]) - s[1];
                out[2] = s[0] * s[1] - beta * s[2] - x;
            }
            System::Pendulum { g_over_l, c } => {
                out[0] = s[1];
                out[1] = x - c * s[1] - g_over_l * s[0].sin();
            }
            System::MackeyGlass { .. } => unreachable!("delay systems use the delay integrator"),
        }
    }
}

/// A system with its initial state and observed output component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(flatten)]
    pub system: System,
    pub initial_state: Vec<f64>,
    pub output_index: usize,
}

impl SystemSpec {
    /// Zero initial state, first component observed; Lorenz starts at
    /// `s_x = 1` and observes its second component.
    pub fn standard(system: System) -> Self {
        let mut initial_state = vec![0.0; system.state_dim()];
        let output_index = match system {
            System::Lorenz { .. } => {
                initial_state[0] = 1.0;
                1
            }
            _ => 0,
        };
        SystemSpec { system, initial_state, output_index }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let dim = self.system.state_dim();
        if self.initial_state.len() != dim {
            return Err(Error::config("initial_state", format!("expected {dim} components, got {}", self.initial_state.len())));
        }
        if self.output_index >= dim {
            return Err(Error::config("output_index", format!("must be below {dim}")));
        }
        Ok(())
    }
}

/// A sampled trajectory split into history and forecast segments.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSample {
    pub t: Vec<f64>,
    /// `len × D_x`.
    pub x: Array2<f64>,
    /// `len × D_y`.
    pub y: Array2<f64>,
    pub n_hist: usize,
    pub n_fore: usize,
}

impl TimeSeriesSample {
    pub fn new(t: Vec<f64>, x: Array2<f64>, y: Array2<f64>, n_hist: usize) -> Result<Self> {
        let len = t.len();
        if x.nrows() != len || y.nrows() != len {
            return Err(Error::shape("sample", len, format!("x {} rows, y {} rows", x.nrows(), y.nrows())));
        }
        if n_hist == 0 || n_hist >= len {
            return Err(Error::config("n_hist", format!("must lie in 1..{len}")));
        }
        if let Some(i) = (1..len).find(|&i| t[i] <= t[i - 1]) {
            return Err(Error::Domain { what: "sample times must be strictly increasing", index: i, value: t[i] });
        }
        Ok(TimeSeriesSample { t, x, y, n_hist, n_fore: len - n_hist })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Sampling interval of a uniform series.
    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }
}

/// Sample times `i · T/len` for `i = 0..len`.
pub fn uniform_grid(horizon: f64, len: usize) -> Vec<f64> {
    let dt = horizon / len as f64;
    (0..len).map(|i| i as f64 * dt).collect()
}

fn check_uniform(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::shape("time grid", "at least 2 samples", t.len()));
    }
    let dt = t[1] - t[0];
    let tol = 1e-9 * dt.abs().max(1.0);
    for i in 1..t.len() {
        let d = t[i] - t[i - 1];
        if d <= 0.0 || (d - dt).abs() > tol {
            return Err(Error::Domain { what: "time grid must be uniform and increasing", index: i, value: t[i] });
        }
    }
    Ok(dt)
}

/// Default number of RK4 substeps per sample interval.
pub const SUBSTEPS: usize = 10;

/// Classical RK4 with [`SUBSTEPS`] substeps per sample; the forcing is
/// evaluated at every stage time.
pub fn integrate_rk4(spec: &SystemSpec, forcing: &dyn Fn(f64) -> f64, t: &[f64]) -> Result<Array2<f64>> {
    integrate_rk4_substeps(spec, forcing, t, SUBSTEPS)
}

/// As [`integrate_rk4`] with an explicit substep count. Returns the full
/// state trajectory, one row per sample time.
pub fn integrate_rk4_substeps(
    spec: &SystemSpec,
    forcing: &dyn Fn(f64) -> f64,
    t: &[f64],
    substeps: usize,
) -> Result<Array2<f64>> {
    spec.validate()?;
    if matches!(spec.system, System::MackeyGlass { .. }) {
        return Err(Error::config("system", "delay systems require integrate_dde"));
    }
    let dt = check_uniform(t)?;
    let h = dt / substeps.max(1) as f64;
    let dim = spec.system.state_dim();
    let mut out = Array2::zeros((t.len(), dim));
    let mut s = spec.initial_state.clone();
    out.row_mut(0).assign(&ndarray::ArrayView1::from(&s));
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    let sys = &spec.system;
    for i in 1..t.len() {
        for j in 0..substeps.max(1) {
            let tn = t[i - 1] + j as f64 * h;
            sys.rhs(&s, forcing(tn), &mut k1);
            for d in 0..dim {
                tmp[d] = s[d] + 0.5 * h * k1[d];
            }
            let x_mid = forcing(tn + 0.5 * h);
            sys.rhs(&tmp, x_mid, &mut k2);
            for d in 0..dim {
                tmp[d] = s[d] + 0.5 * h * k2[d];
            }
            sys.rhs(&tmp, x_mid, &mut k3);
            for d in 0..dim {
                tmp[d] = s[d] + h * k3[d];
            }
            sys.rhs(&tmp, forcing(tn + h), &mut k4);
            for d in 0..dim {
                s[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            }
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { step: i, time: t[i] });
        }
        out.row_mut(i).assign(&ndarray::ArrayView1::from(&s));
    }
    Ok(out)
}

/// An instantaneous jump of the state by `delta` at sample `index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub index: usize,
    pub delta: f64,
}

/// RK4 for the Mackey-Glass equation with zero history on `t < t[0]`.
///
/// The delayed state is linearly interpolated from the stored substep
/// trajectory. Returns one value per sample time.
pub fn integrate_dde(
    spec: &SystemSpec,
    forcing: &dyn Fn(f64) -> f64,
    t: &[f64],
    pulse: Option<Pulse>,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let System::MackeyGlass { beta, gamma, tau, n } = spec.system else {
        return Err(Error::config("system", "integrate_dde requires mackey_glass"));
    };
    let dt = check_uniform(t)?;
    let h = dt / SUBSTEPS as f64;
    let t0 = t[0];
    let mut stored: Vec<f64> = Vec::with_capacity((t.len() - 1) * SUBSTEPS + 1);
    let mut y = spec.initial_state[0];
    if let Some(p) = pulse.filter(|p| p.index == 0) {
        y += p.delta;
    }
    stored.push(y);

    let delayed = |stored: &[f64], tq: f64| -> f64 {
        let u = (tq - tau - t0) / h;
        if u <= 0.0 {
            return 0.0;
        }
        let i = u.floor() as usize;
        if i + 1 >= stored.len() {
            return stored[stored.len() - 1];
        }
        let w = u - i as f64;
        stored[i] * (1.0 - w) + stored[i + 1] * w
    };
    let rhs = |y: f64, yd: f64, x: f64| beta * yd / (1.0 + yd.abs().powf(n)) - gamma * y + x;

    let mut out = vec![y];
    for i in 1..t.len() {
        for j in 0..SUBSTEPS {
            let tn = t[i - 1] + j as f64 * h;
            let yd0 = delayed(&stored, tn);
            let yd_mid = delayed(&stored, tn + 0.5 * h);
            let yd1 = delayed(&stored, tn + h);
            let x_mid = forcing(tn + 0.5 * h);
            let k1 = rhs(y, yd0, forcing(tn));
            let k2 = rhs(y + 0.5 * h * k1, yd_mid, x_mid);
            let k3 = rhs(y + 0.5 * h * k2, yd_mid, x_mid);
            let k4 = rhs(y + h * k3, yd1, forcing(tn + h));
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            stored.push(y);
        }
        if let Some(p) = pulse.filter(|p| p.index == i) {
            y += p.delta;
            *stored.last_mut().expect("stored") = y;
        }
        if !y.is_finite() {
            return Err(Error::Integration { step: i, time: t[i] });
        }
        out.push(y);
    }
    Ok(out)
}

/// Time at which a state pulse first changes the Mackey-Glass trajectory
/// beyond pure decay.
///
/// Until the delayed term sees the pulse, the perturbed and unperturbed
/// trajectories differ by `δ e^{−γ(t − t₀)}`; the onset is the first sample
/// where the difference departs from that by more than `rel_tol · |δ|`.
pub fn pulse_onset(
    spec: &SystemSpec,
    forcing: &dyn Fn(f64) -> f64,
    t: &[f64],
    pulse: Pulse,
    rel_tol: f64,
) -> Result<Option<f64>> {
    let System::MackeyGlass { gamma, .. } = spec.system else {
        return Err(Error::config("system", "pulse_onset requires mackey_glass"));
    };
    if pulse.index >= t.len() {
        return Err(Error::config("pulse.index", format!("must be below {}", t.len())));
    }
    let base = integrate_dde(spec, forcing, t, None)?;
    let hit = integrate_dde(spec, forcing, t, Some(pulse))?;
    let t0 = t[pulse.index];
    Ok((pulse.index..t.len())
        .find(|&i| {
            let decay = pulse.delta * (-gamma * (t[i] - t0)).exp();
            ((hit[i] - base[i]) - decay).abs() > rel_tol * pulse.delta.abs()
        })
        .map(|i| t[i]))
}

/// Integrates `spec` under `forcing` on `t` and packages the observed output.
pub fn simulate(spec: &SystemSpec, forcing: &dyn Fn(f64) -> f64, t: &[f64], n_hist: usize) -> Result<TimeSeriesSample> {
    let y: Vec<f64> = match spec.system {
        System::MackeyGlass { .. } => integrate_dde(spec, forcing, t, None)?,
        _ => integrate_rk4(spec, forcing, t)?.column(spec.output_index).to_vec(),
    };
    let x: Vec<f64> = t.iter().map(|&ti| forcing(ti)).collect();
    let len = t.len();
    TimeSeriesSample::new(
        t.to_vec(),
        Array2::from_shape_vec((len, 1), x).expect("column"),
        Array2::from_shape_vec((len, 1), y).expect("column"),
        n_hist,
    )
}
