//! Per-window quantities that do not depend on trainable parameters.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use super::config::{LpType, ModelConfig};
use crate::autodiff::Tensor;
use crate::error::{Error, Result, StageExt};
use crate::laplace::{build_queries, fflt, scale_factor, Dlt, IltConfig, LaplaceSignal, QuerySet};
use crate::systems::TimeSeriesSample;

/// Maps `t` affinely onto `[−1, 1]`, keeping relative spacing.
pub fn normalize_times(t: &[f64]) -> Result<Vec<f64>> {
    if t.len() < 2 {
        return Err(Error::shape("grid", "at least 2 times", t.len()));
    }
    let (lo, hi) = (t[0], t[t.len() - 1]);
    if let Some(i) = (1..t.len()).find(|&i| t[i] <= t[i - 1]) {
        return Err(Error::Domain { what: "window times must be strictly increasing", index: i, value: t[i] });
    }
    if hi <= lo {
        return Err(Error::Domain { what: "degenerate window", index: t.len() - 1, value: hi });
    }
    Ok(t.iter().map(|&v| 2.0 * (v - lo) / (hi - lo) - 1.0).collect())
}

/// Coordinates fed to the transfer network.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Normalized forecast times, `−1` to `1`.
    pub time_axis: Vec<f64>,
    /// `−1 + 2m/N_ILT` for `m = 0..=N_ILT`.
    pub ilt_axis: Vec<f64>,
}

impl Grid {
    /// One row `(ilt, time)` per grid point, ILT index major.
    pub fn input_rows(&self) -> Tensor {
        let t = self.time_axis.len();
        Tensor::from_shape_fn((self.ilt_axis.len() * t, 2), |(r, c)| {
            if c == 0 {
                self.ilt_axis[r / t]
            } else {
                self.time_axis[r % t]
            }
        })
    }
}

pub fn build_grid(t_window: &[f64], n_ilt: usize) -> Result<Grid> {
    let time_axis = normalize_times(t_window)?;
    let ilt_axis = (0..=n_ilt)
        .map(|m| if n_ilt == 0 { 0.0 } else { -1.0 + 2.0 * m as f64 / n_ilt as f64 })
        .collect();
    Ok(Grid { time_axis, ilt_axis })
}

/// `Σ p_i s^i` by Horner's rule.
pub fn eval_p(s: Complex64, coeffs: &[f64]) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &p| acc * s + p)
}

/// `H (B X + P)` pointwise for univariate signals.
pub fn assemble_y(h: &Array2<Complex64>, x: &Array2<Complex64>, p: &Array2<Complex64>, b: f64) -> Result<Array2<Complex64>> {
    if h.dim() != x.dim() || h.dim() != p.dim() {
        return Err(Error::shape(
            "assemble_y",
            format!("{:?}", h.shape()),
            format!("x {:?}, p {:?}", x.shape(), p.shape()),
        ));
    }
    Ok(ndarray::Zip::from(h).and(x).and(p).map_collect(|&h, &x, &p| h * (x * b + p)))
}

/// Contiguous windows of `⌈m/q⌉` points covering `0..m`.
pub fn window_bounds(m: usize, q: usize) -> Result<Vec<(usize, usize)>> {
    if q == 0 || q > m {
        return Err(Error::config("q", format!("must lie in 1..={m} for a horizon of {m} points")));
    }
    let width = m.div_ceil(q);
    Ok((0..m).step_by(width).map(|s| (s, (s + width).min(m))).collect())
}

/// Local reconstruction times `(t − t_start) + c_shift + Δt`.
pub fn local_times(t_window: &[f64], c_shift: f64, dt: f64) -> Vec<f64> {
    let t0 = t_window[0];
    t_window.iter().map(|&t| (t - t0) + c_shift + dt).collect()
}

/// Transforms the forcing over a window on the local time axis.
pub fn forcing_transform(
    lp_type: LpType,
    t_local: &[f64],
    x: ArrayView2<f64>,
    queries: &QuerySet,
) -> Result<Array2<Complex64>> {
    let signal: Box<dyn LaplaceSignal> = match lp_type {
        LpType::Dlt => Box::new(Dlt::new(t_local, x)?),
        LpType::Fflt => Box::new(fflt(t_local, x)?),
    };
    let mut out = Array2::zeros(queries.points.raw_dim());
    for (slot, &s) in out.iter_mut().zip(queries.points.iter()) {
        *slot = signal.eval(s)?[0];
    }
    Ok(out)
}

/// Series weights `(cos kπ/ζ, sin kπ/ζ)` as `[K+1, 1]` columns, with the
/// `k = 0` term halved.
pub fn series_weights(cfg: &IltConfig) -> (Tensor, Tensor) {
    let k1 = cfg.n_ilt + 1;
    let cos = Tensor::from_shape_fn((k1, 1), |(k, _)| if k == 0 { 0.5 } else { (k as f64 * PI / cfg.zeta).cos() });
    let sin = Tensor::from_shape_fn((k1, 1), |(k, _)| if k == 0 { 0.0 } else { (k as f64 * PI / cfg.zeta).sin() });
    (cos, sin)
}

/// Everything about one forecast window that is fixed before the forward pass.
#[derive(Debug, Clone)]
pub struct WindowPlan {
    /// Range inside the forecast segment.
    pub start: usize,
    pub end: usize,
    pub t_local: Vec<f64>,
    pub queries: QuerySet,
    pub grid: Grid,
    /// `B · X(s)` on the query grid, `[K+1, T]`.
    pub bx: Array2<Complex64>,
    pub bx_re: Tensor,
    pub bx_im: Tensor,
    /// Powers `s^i` flattened ILT-major, `[P, (K+1)·T]`.
    pub s_pow_re: Tensor,
    pub s_pow_im: Tensor,
    pub grid_rows: Tensor,
    /// `f_scale(t)` per local time, `[1, T]`.
    pub f_scale: Tensor,
}

impl WindowPlan {
    pub fn new(cfg: &ModelConfig, t_window: &[f64], x_window: ArrayView2<f64>, dt: f64, start: usize) -> Result<Self> {
        let t_local = local_times(t_window, cfg.ilt.c_shift, dt);
        let queries = build_queries(&t_local, &cfg.ilt).stage("queries")?;
        let grid = build_grid(t_window, cfg.ilt.n_ilt).stage("grid")?;
        let bx = forcing_transform(cfg.lp_type, &t_local, x_window, &queries)
            .stage("forcing transform")?
            .mapv(|v| v * cfg.b);
        let (k1, t) = queries.points.dim();
        let mut s_pow_re = Tensor::zeros((cfg.p_degree, k1 * t));
        let mut s_pow_im = Tensor::zeros((cfg.p_degree, k1 * t));
        for (flat, &s) in queries.points.iter().enumerate() {
            let mut pow = Complex64::new(1.0, 0.0);
            for i in 0..cfg.p_degree {
                s_pow_re[[i, flat]] = pow.re;
                s_pow_im[[i, flat]] = pow.im;
                pow *= s;
            }
        }
        let f_scale = t_local
            .iter()
            .map(|&tl| scale_factor(tl, &cfg.ilt))
            .collect::<Result<Vec<f64>>>()?;
        Ok(WindowPlan {
            start,
            end: start + t_window.len(),
            bx_re: bx.mapv(|v| v.re),
            bx_im: bx.mapv(|v| v.im),
            bx,
            grid_rows: grid.input_rows(),
            s_pow_re,
            s_pow_im,
            f_scale: Tensor::from_shape_vec((1, t), f_scale).expect("row"),
            t_local,
            queries,
            grid,
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Fixed inputs for a full recurrent forecast of one sample.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub n_hist: usize,
    pub windows: Vec<WindowPlan>,
    /// Normalized history times per window, `[1, N]` each.
    pub hist_t: Vec<Tensor>,
    /// Forcing over each window's history, `[1, N]` each.
    pub hist_x: Vec<Tensor>,
    /// Observed outputs over the initial history, `[1, N]`.
    pub y_hist: Tensor,
    /// Ground truth over the forecast segment, `[1, M]`.
    pub target: Tensor,
}

impl SamplePlan {
    pub fn new(cfg: &ModelConfig, sample: &TimeSeriesSample) -> Result<Self> {
        let n = cfg.n_hist;
        if sample.n_hist != n {
            return Err(Error::config("n_hist", format!("model expects {n} history points, sample has {}", sample.n_hist)));
        }
        if sample.x.ncols() != 1 || sample.y.ncols() != 1 {
            return Err(Error::shape("sample", "univariate x and y", format!("{} and {} columns", sample.x.ncols(), sample.y.ncols())));
        }
        let m = sample.n_fore;
        let dt = sample.dt();
        let bounds = window_bounds(m, cfg.q)?;
        let mut windows = Vec::with_capacity(bounds.len());
        let mut hist_t = Vec::with_capacity(bounds.len());
        let mut hist_x = Vec::with_capacity(bounds.len());
        for (start, end) in bounds {
            let (a, b) = (n + start, n + end);
            let x_window = sample.x.slice(ndarray::s![a..b, ..]);
            windows.push(WindowPlan::new(cfg, &sample.t[a..b], x_window, dt, start)?);
            let h = start..start + n;
            let t_norm = normalize_times(&sample.t[h.clone()]).stage("history")?;
            hist_t.push(Tensor::from_shape_vec((1, n), t_norm).expect("row"));
            hist_x.push(sample.x.slice(ndarray::s![h, 0]).to_owned().insert_axis(ndarray::Axis(0)));
        }
        Ok(SamplePlan {
            n_hist: n,
            windows,
            hist_t,
            hist_x,
            y_hist: sample.y.slice(ndarray::s![0..n, 0]).to_owned().insert_axis(ndarray::Axis(0)),
            target: sample.y.slice(ndarray::s![n.., 0]).to_owned().insert_axis(ndarray::Axis(0)),
        })
    }

    pub fn horizon(&self) -> usize {
        self.target.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        assert_eq!(build_grid(&[0.0, 5.0, 10.0], 2).unwrap().time_axis, vec![-1.0, 0.0, 1.0]);
        assert_eq!(build_grid(&[2.0, 4.0], 2).unwrap().time_axis, vec![-1.0, 1.0]);
        let g = build_grid(&[0.0, 1.0, 10.0], 4).unwrap();
        assert!((g.time_axis[1] + 0.8).abs() < 1e-15);
        assert_eq!(g.ilt_axis, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(matches!(build_grid(&[3.0, 3.0], 4), Err(Error::Domain { .. })));
        let rows = g.input_rows();
        assert_eq!(rows.dim(), (15, 2));
        assert_eq!(rows.row(4).to_vec(), vec![-0.5, -0.8]);
    }

    #[test]
    fn polynomial_examples() {
        assert_eq!(eval_p(Complex64::new(1.0, 1.0), &[2.0, 3.0]), Complex64::new(5.0, 3.0));
        assert_eq!(eval_p(Complex64::new(0.3, -2.0), &[0.0, 0.0]), Complex64::new(0.0, 0.0));
        assert_eq!(eval_p(Complex64::new(0.0, 2.0), &[0.0, 0.0, 1.0]), Complex64::new(-4.0, 0.0));
    }

    #[test]
    fn window_split_examples() {
        assert_eq!(window_bounds(500, 10).unwrap().len(), 10);
        assert!(window_bounds(500, 10).unwrap().iter().all(|(a, b)| b - a == 50));
        assert_eq!(window_bounds(500, 1).unwrap(), vec![(0, 500)]);
        let w: Vec<usize> = window_bounds(500, 3).unwrap().iter().map(|(a, b)| b - a).collect();
        assert_eq!(w, vec![167, 167, 166]);
        assert!(matches!(window_bounds(5, 6), Err(Error::Config { .. })));
    }

    #[test]
    fn assembly_identities() {
        let x = Array2::from_shape_fn((2, 3), |(i, j)| Complex64::new(i as f64, j as f64));
        let one = Array2::from_elem((2, 3), Complex64::new(1.0, 0.0));
        let zero = Array2::from_elem((2, 3), Complex64::new(0.0, 0.0));
        assert_eq!(assemble_y(&one, &x, &zero, 1.0).unwrap(), x);
        assert_eq!(assemble_y(&one, &zero, &x, 1.0).unwrap(), x);
        assert!(assemble_y(&one, &x, &Array2::zeros((3, 2)), 1.0).is_err());
    }
}
