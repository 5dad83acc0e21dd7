use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::plan::{normalize_times, series_weights, Grid, SamplePlan, WindowPlan};
use crate::autodiff::{complex_add, complex_mul, CVar, Init, Mlp, MlpSpec, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result, StageExt};
use crate::laplace::{wynn_epsilon_grad, IltConfig, Summation};
use crate::systems::TimeSeriesSample;

/// Initial-state coefficients and latent code inferred from the history.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    /// `D_y × P`, stored row-major (`P` values for univariate outputs).
    pub p_coeffs: Vec<f64>,
    pub z: Vec<f64>,
}

/// Observed history fed to the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// LP-Net: history encoder, transfer network and Fourier-series inversion.
#[derive(Debug, Clone)]
pub struct LpNet {
    pub config: ModelConfig,
    pub store: ParamStore,
    trunk: Mlp,
    p_head: Mlp,
    z_head: Mlp,
    h_net: Mlp,
}

fn head(input: usize, output: usize) -> MlpSpec {
    MlpSpec {
        input_dim: input,
        output_dim: output,
        hidden_dim: input,
        layer_count: 1,
        activation: super::config::ENCODER_ACTIVATION,
    }
}

impl LpNet {
    /// Weights drawn uniformly on `±sqrt(1/fan_in)` from a ChaCha stream seeded by `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(config, |store, name, spec| Mlp::register(store, name, spec, Init::Uniform(&mut rng)))
    }

    /// Every weight and bias zero.
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        Self::build(config, |store, name, spec| {
            Mlp::register::<ChaCha8Rng>(store, name, spec, Init::Zeros)
        })
    }

    fn build(
        config: ModelConfig,
        mut register: impl FnMut(&mut ParamStore, &str, MlpSpec) -> Result<Mlp>,
    ) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let trunk = register(&mut store, "encoder", config.encoder_spec())?;
        let p_head = register(&mut store, "encoder_p", head(config.d_enc, config.p_degree))?;
        let z_head = register(&mut store, "encoder_z", head(config.d_enc, config.d_z))?;
        let h_net = register(&mut store, "transfer", config.h_spec())?;
        Ok(LpNet { config, store, trunk, p_head, z_head, h_net })
    }

    /// Encoder on the tape; returns `p` (`[1, P]`) and `z` (`[1, D_z]`).
    pub fn encode_tape(&self, tape: &mut Tape, bound: &[Var], t: Var, x: Var, y: Var) -> Result<(Var, Var)> {
        let input = tape.concat_cols(&[t, x, y])?;
        let h = self.trunk.forward(tape, bound, input)?;
        let h = self.trunk.spec.activation.apply(tape, h);
        let p = self.p_head.forward(tape, bound, h)?;
        let z = self.z_head.forward(tape, bound, h)?;
        Ok((p, z))
    }

    pub fn encode_history(&self, hist: &History) -> Result<EncoderOutput> {
        let n = self.config.n_hist;
        if hist.t.len() != n || hist.x.len() != n || hist.y.len() != n {
            return Err(Error::shape("encode_history", n, format!("t {}, x {}, y {}", hist.t.len(), hist.x.len(), hist.y.len())));
        }
        let mut tape = Tape::new();
        let bound = self.store.bind(&mut tape);
        let row = |v: Vec<f64>| Tensor::from_shape_vec((1, n), v).expect("row");
        let t = tape.leaf(row(normalize_times(&hist.t)?));
        let x = tape.leaf(row(hist.x.clone()));
        let y = tape.leaf(row(hist.y.clone()));
        let (p, z) = self.encode_tape(&mut tape, &bound, t, x, y)?;
        Ok(EncoderOutput {
            p_coeffs: tape.value(p).iter().copied().collect(),
            z: tape.value(z).iter().copied().collect(),
        })
    }

    /// Raw transfer-network output `Ĥ` on the grid, `[K+1, T]` each part.
    pub fn h_raw_tape(&self, tape: &mut Tape, bound: &[Var], grid_rows: &Tensor, shape: (usize, usize), z: Var) -> Result<CVar> {
        let rows = tape.leaf(grid_rows.clone());
        let out = self.h_net.forward_conditioned(tape, bound, rows, z)?;
        let re = tape.slice_cols(out, 0, 1)?;
        let im = tape.slice_cols(out, 1, 2)?;
        Ok(CVar::new(tape.reshape(re, shape)?, tape.reshape(im, shape)?))
    }

    /// Effective transfer function on a grid. With scaling enabled the
    /// network output is multiplied by `f_scale(t)/κ_H`.
    pub fn eval_h(&self, grid: &Grid, z: &[f64], f_scale: &[f64]) -> Result<Array2<Complex64>> {
        let shape = (grid.ilt_axis.len(), grid.time_axis.len());
        if z.len() != self.config.d_z || f_scale.len() != shape.1 {
            return Err(Error::shape("eval_h", format!("z {}, f_scale {}", self.config.d_z, shape.1), format!("z {}, f_scale {}", z.len(), f_scale.len())));
        }
        let mut tape = Tape::new();
        let bound = self.store.bind(&mut tape);
        let zv = tape.leaf(Tensor::from_shape_vec((1, z.len()), z.to_vec()).expect("row"));
        let h = self.h_raw_tape(&mut tape, &bound, &grid.input_rows(), shape, zv)?;
        let (re, im) = (tape.value(h.re), tape.value(h.im));
        Ok(Array2::from_shape_fn(shape, |(k, j)| {
            let v = Complex64::new(re[[k, j]], im[[k, j]]);
            if self.config.use_scaling {
                v * (f_scale[j] / self.config.kappa_h)
            } else {
                v
            }
        }))
    }

    /// One window on the tape, given the encoder outputs. Returns `[1, T]`.
    pub fn window_tape(&self, tape: &mut Tape, bound: &[Var], plan: &WindowPlan, p: Var, z: Var) -> Result<Var> {
        let shape = plan.bx.dim();
        let p_s = initial_term_tape(tape, plan, p).stage("initial-state term")?;
        let h = self.h_raw_tape(tape, bound, &plan.grid_rows, shape, z).stage("transfer network")?;
        let scaling = if self.config.use_scaling {
            Scaling::Network(self.config.kappa_h)
        } else {
            Scaling::None
        };
        let y_tilde = assemble_tape(tape, plan, h, p_s, scaling).stage("assembly")?;
        invert_tape(tape, &self.config.ilt, y_tilde).stage("inversion")
    }

    /// Recurrent forecast over all windows; returns `[1, M]`. Each window's
    /// predictions replace the observed outputs in later histories.
    pub fn forecast_tape(&self, tape: &mut Tape, bound: &[Var], plan: &SamplePlan) -> Result<Var> {
        let n = plan.n_hist;
        let mut y_all = tape.leaf(plan.y_hist.clone());
        let mut preds = Vec::with_capacity(plan.windows.len());
        for (w, window) in plan.windows.iter().enumerate() {
            let cols = tape.shape(y_all).1;
            let y_hist = if cols == n { y_all } else { tape.slice_cols(y_all, cols - n, cols)? };
            let t = tape.leaf(plan.hist_t[w].clone());
            let x = tape.leaf(plan.hist_x[w].clone());
            let (p, z) = self.encode_tape(tape, bound, t, x, y_hist).stage("encoder")?;
            let y = self.window_tape(tape, bound, window, p, z)?;
            preds.push(y);
            y_all = tape.concat_cols(&[y_all, y])?;
        }
        tape.concat_cols(&preds)
    }

    pub fn forecast_plan(&self, plan: &SamplePlan) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let bound = self.store.bind(&mut tape);
        let y = self.forecast_tape(&mut tape, &bound, plan)?;
        Ok(tape.value(y).iter().copied().collect())
    }

    /// Forecast of the sample's forecast segment from its history.
    pub fn forecast(&self, sample: &TimeSeriesSample) -> Result<Vec<f64>> {
        self.forecast_plan(&SamplePlan::new(&self.config, sample)?)
    }

    /// A single window starting right after `hist`, without recurrence.
    pub fn forecast_window(&self, hist: &History, t_window: &[f64], x_window: &[f64]) -> Result<Vec<f64>> {
        if x_window.len() != t_window.len() || t_window.is_empty() || hist.t.is_empty() {
            return Err(Error::shape("forecast_window", t_window.len(), x_window.len()));
        }
        let dt = match hist.t.as_slice() {
            [a, b, ..] => b - a,
            [last] => t_window[0] - last,
            [] => unreachable!(),
        };
        let x = Tensor::from_shape_vec((x_window.len(), 1), x_window.to_vec()).expect("column");
        let plan = WindowPlan::new(&self.config, t_window, x.view(), dt, 0)?;
        let out = self.encode_history(hist)?;
        let mut tape = Tape::new();
        let bound = self.store.bind(&mut tape);
        let p = tape.leaf(Tensor::from_shape_vec((1, out.p_coeffs.len()), out.p_coeffs).expect("row"));
        let z = tape.leaf(Tensor::from_shape_vec((1, out.z.len()), out.z).expect("row"));
        let y = self.window_tape(&mut tape, &bound, &plan, p, z)?;
        Ok(tape.value(y).iter().copied().collect())
    }
}

/// `P(s) = Σ p_i s^i` on the window's query grid.
pub fn initial_term_tape(tape: &mut Tape, plan: &WindowPlan, p: Var) -> Result<CVar> {
    let shape = plan.bx.dim();
    let s_re = tape.leaf(plan.s_pow_re.clone());
    let s_im = tape.leaf(plan.s_pow_im.clone());
    let re = tape.matmul(p, s_re)?;
    let im = tape.matmul(p, s_im)?;
    Ok(CVar::new(tape.reshape(re, shape)?, tape.reshape(im, shape)?))
}

/// How the transfer values relate to the prefactor-free series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    /// Values are `H` itself; the series is divided by `f_scale(t)`.
    None,
    /// Values are the network output `Ĥ` with `H = f_scale(t) Ĥ / κ`, so the
    /// series only divides by `κ`.
    Network(f64),
}

/// `Ỹ = Y / f_scale` with `Y = H (B X + P)`.
pub fn assemble_tape(tape: &mut Tape, plan: &WindowPlan, h: CVar, p_s: CVar, scaling: Scaling) -> Result<CVar> {
    let bx = CVar::new(tape.leaf(plan.bx_re.clone()), tape.leaf(plan.bx_im.clone()));
    let u = complex_add(tape, bx, p_s)?;
    let y = complex_mul(tape, h, u)?;
    Ok(match scaling {
        Scaling::Network(kappa) => CVar::new(tape.scale(y.re, 1.0 / kappa), tape.scale(y.im, 1.0 / kappa)),
        Scaling::None => {
            let inv = plan.f_scale.mapv(f64::recip);
            CVar::new(tape.mul_const(y.re, &inv)?, tape.mul_const(y.im, &inv)?)
        }
    })
}

/// Prefactor-free Fourier series of `Ỹ` per column, `[1, T]`.
pub fn invert_tape(tape: &mut Tape, cfg: &IltConfig, y_tilde: CVar) -> Result<Var> {
    let (cos, sin) = series_weights(cfg);
    let a = tape.mul_const(y_tilde.re, &cos)?;
    let b = tape.mul_const(y_tilde.im, &sin)?;
    let terms = tape.sub(a, b)?;
    match cfg.summation {
        Summation::Direct => Ok(tape.sum_rows(terms)),
        Summation::Accelerated => {
            let values = tape.value(terms);
            let (k1, t) = values.dim();
            let mut out = Tensor::zeros((1, t));
            let mut jac = Tensor::zeros((k1, t));
            for j in 0..t {
                let partial: Vec<f64> = values
                    .column(j)
                    .iter()
                    .scan(0.0, |acc, &v| {
                        *acc += v;
                        Some(*acc)
                    })
                    .collect();
                let (value, d_partial) = wynn_epsilon_grad(&partial);
                out[[0, j]] = value;
                // Term k enters every partial sum from index k on.
                let mut suffix = 0.0;
                for k in (0..k1).rev() {
                    suffix += d_partial[k];
                    jac[[k, j]] = suffix;
                }
            }
            tape.column_map(terms, out, jac)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Activation;
    use crate::model::LpType;

    pub(crate) fn small_config() -> ModelConfig {
        ModelConfig {
            lp_type: LpType::Dlt,
            ilt: IltConfig::new(4.51e-3, 2.0, 8).with_c_shift(2.7).with_summation(Summation::Direct),
            n_hist: 6,
            d_enc: 5,
            l_enc: 2,
            p_degree: 3,
            d_z: 2,
            kappa_h: 450.0,
            q: 2,
            act_h: Activation::Tanh,
            d_h: 7,
            l_h: 3,
            use_scaling: true,
            b: 1.0,
        }
    }

    fn history(n: usize) -> History {
        History {
            t: (0..n).map(|i| i as f64 * 0.1).collect(),
            x: (0..n).map(|i| (i as f64).sin()).collect(),
            y: (0..n).map(|i| (i as f64 * 0.3).cos()).collect(),
        }
    }

    #[test]
    fn zero_encoder_gives_zero_outputs() {
        let net = LpNet::zeroed(small_config()).unwrap();
        let out = net.encode_history(&history(6)).unwrap();
        assert_eq!(out.p_coeffs, vec![0.0; 3]);
        assert_eq!(out.z, vec![0.0; 2]);
    }

    #[test]
    fn encoder_is_order_aware() {
        let net = LpNet::new(small_config(), 4).unwrap();
        let h = history(6);
        let mut rev = h.clone();
        rev.x.reverse();
        rev.y.reverse();
        let a = net.encode_history(&h).unwrap();
        let b = net.encode_history(&rev).unwrap();
        assert_eq!(a.p_coeffs.len(), 3);
        assert_eq!(a.z.len(), 2);
        assert_ne!(a, b);
    }

    #[test]
    fn zero_network_forecasts_zero() {
        let net = LpNet::zeroed(small_config()).unwrap();
        let t: Vec<f64> = (6..16).map(|i| i as f64 * 0.1).collect();
        let x: Vec<f64> = t.iter().map(|v| v.sin()).collect();
        let y = net.forecast_window(&history(6), &t, &x).unwrap();
        assert_eq!(y, vec![0.0; 10]);
    }

    #[test]
    fn scaled_transfer_equals_manual_rescaling() {
        let mut on = LpNet::new(small_config(), 9).unwrap();
        on.config.use_scaling = true;
        let mut off = on.clone();
        off.config.use_scaling = false;
        let grid = super::super::plan::build_grid(&[0.0, 0.4, 1.0], 8).unwrap();
        let f_scale = [1e-5, 3e-5, 5e-5];
        let z = [0.3, -0.2];
        let a = on.eval_h(&grid, &z, &f_scale).unwrap();
        let b = off.eval_h(&grid, &z, &f_scale).unwrap();
        assert_eq!(a.dim(), (9, 3));
        for ((k, j), v) in b.indexed_iter() {
            let manual = v * f_scale[j] / 450.0;
            assert!((a[[k, j]] - manual).norm() <= 1e-12 * manual.norm().max(1e-300));
        }
        let zero = LpNet::zeroed(ModelConfig { use_scaling: false, ..small_config() }).unwrap();
        assert!(zero.eval_h(&grid, &z, &f_scale).unwrap().iter().all(|v| v.norm() == 0.0));
    }
}
