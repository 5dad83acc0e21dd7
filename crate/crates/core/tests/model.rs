use lpnet_core::autodiff::{grad_check, Activation, CVar, Tape, Tensor, Var};
use lpnet_core::laplace::{IltConfig, Summation};
use lpnet_core::model::{
    assemble_tape, invert_tape, oracle_forcings, smd_oracle_rmse, smd_reference, History, LpNet, LpType,
    ModelConfig, SamplePlan, Scaling, SmdParams, WindowPlan, BENCHMARK_SMD,
};
use lpnet_core::systems::{uniform_grid, ForcingSignal, TimeSeriesSample};
use ndarray::Array2;

const SMD: SmdParams = BENCHMARK_SMD;

fn ds1_config(n_ilt: usize, summation: Summation) -> ModelConfig {
    ModelConfig {
        lp_type: LpType::Dlt,
        ilt: IltConfig::new(4.51e-3, 2.0, n_ilt).with_c_shift(2.7).with_summation(summation),
        n_hist: 50,
        d_enc: 56,
        l_enc: 2,
        p_degree: 3,
        d_z: 8,
        kappa_h: 450.0,
        q: 3,
        act_h: Activation::Tanh,
        d_h: 192,
        l_h: 4,
        use_scaling: true,
        b: 1.0,
    }
}

fn families() -> [ForcingSignal; 3] {
    oracle_forcings().map(|(_, f)| f)
}

#[test]
fn analytic_transfer_reproduces_rk4() {
    let cfg = ds1_config(64, Summation::Accelerated);
    for (name, forcing) in oracle_forcings() {
        let err = smd_oracle_rmse(&cfg, BENCHMARK_SMD, &forcing).unwrap();
        assert!(err < 1e-2, "{name}: rmse {err}");
    }
}

#[test]
fn identity_transfer_returns_forcing() {
    let cfg = ModelConfig { lp_type: LpType::Fflt, ..ds1_config(64, Summation::Accelerated) };
    let n = 64;
    let dt = 0.05;
    let span = n as f64 * dt;
    let t: Vec<f64> = (0..n).map(|i| 10.0 + i as f64 * dt).collect();
    let x = Array2::from_shape_fn((n, 1), |(i, _)| {
        let u = 2.0 * std::f64::consts::PI * (t[i] - t[0]) / span;
        (2.0 * u).sin() + 0.5 * (3.0 * u).cos()
    });
    let plan = WindowPlan::new(&cfg, &t, x.view(), dt, 0).unwrap();
    let mut tape = Tape::new();
    let shape = plan.bx.dim();
    let h = CVar::new(tape.leaf(Tensor::ones(shape)), tape.leaf(Tensor::zeros(shape)));
    let p = CVar::new(tape.leaf(Tensor::zeros(shape)), tape.leaf(Tensor::zeros(shape)));
    let y_tilde = assemble_tape(&mut tape, &plan, h, p, Scaling::None).unwrap();
    let y = invert_tape(&mut tape, &cfg.ilt, y_tilde).unwrap();
    let y = tape.value(y);
    let (lo, hi) = (n / 10, n - n / 10);
    let num: f64 = (lo..hi).map(|i| (y[[0, i]] - x[[i, 0]]).powi(2)).sum();
    let den: f64 = (lo..hi).map(|i| x[[i, 0]].powi(2)).sum();
    assert!((num / den).sqrt() < 1e-2, "relative L2 {}", (num / den).sqrt());
}

#[test]
fn scaling_paths_agree_under_substitution() {
    let cfg = ds1_config(41, Summation::Direct);
    let t = uniform_grid(20.0, 550);
    let forcing = &families()[0];
    let f = |s: f64| forcing.eval(s);
    let (sample, _) = smd_reference(SMD, &f, &t, 50).unwrap();
    let plan = SamplePlan::new(&cfg, &sample).unwrap();
    let window = &plan.windows[1];
    let shape = window.bx.dim();
    let h_re = Tensor::from_shape_fn(shape, |(k, j)| ((k * 7 + j) as f64 * 0.37).sin() * 1e-3);
    let h_im = Tensor::from_shape_fn(shape, |(k, j)| ((k * 3 + j * 5) as f64 * 0.11).cos() * 1e-3);
    let p_re = Tensor::from_shape_fn(shape, |(k, _)| 0.1 * k as f64);
    let p_im = Tensor::from_shape_fn(shape, |(_, j)| -0.05 * j as f64);
    let run = |h_re: Tensor, h_im: Tensor, scaling: Scaling| -> Vec<f64> {
        let mut tape = Tape::new();
        let h = CVar::new(tape.leaf(h_re), tape.leaf(h_im));
        let p = CVar::new(tape.leaf(p_re.clone()), tape.leaf(p_im.clone()));
        let yt = assemble_tape(&mut tape, window, h, p, scaling).unwrap();
        let y = invert_tape(&mut tape, &cfg.ilt, yt).unwrap();
        tape.value(y).iter().copied().collect()
    };
    let off = run(h_re.clone(), h_im.clone(), Scaling::None);
    let k = cfg.kappa_h;
    let factor = window.f_scale.mapv(|f| k / f);
    let on = run(&h_re * &factor, &h_im * &factor, Scaling::Network(k));
    let scale = off.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = off.iter().zip(&on).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap <= 1e-8 * scale, "gap {gap}, scale {scale}");
}

fn small_config(summation: Summation) -> ModelConfig {
    ModelConfig {
        n_hist: 8,
        d_enc: 6,
        d_z: 3,
        d_h: 8,
        ..ds1_config(12, summation)
    }
}

fn small_sample(n_fore: usize) -> TimeSeriesSample {
    let forcing = ForcingSignal::Sigmoid { amplitude: 1.0, period: 3.0, steepness: 3.0 };
    let t = uniform_grid(20.0 * (8 + n_fore) as f64 / 550.0, 8 + n_fore);
    let t: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
    smd_reference(SMD, &|s| forcing.eval(s), &t, 8).unwrap().0
}

#[test]
fn single_window_forecast_matches_forecast_window() {
    let cfg = ModelConfig { q: 1, ..small_config(Summation::Direct) };
    let net = LpNet::new(cfg, 5).unwrap();
    let sample = small_sample(10);
    let hist = History {
        t: sample.t[..8].to_vec(),
        x: sample.x.column(0).iter().take(8).copied().collect(),
        y: sample.y.column(0).iter().take(8).copied().collect(),
    };
    let x_fore: Vec<f64> = sample.x.column(0).iter().skip(8).copied().collect();
    let a = net.forecast(&sample).unwrap();
    let b = net.forecast_window(&hist, &sample.t[8..], &x_fore).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 10);
    assert!(a.iter().all(|v| v.is_finite()));
}

#[test]
fn zero_network_forecasts_zero_recurrently() {
    let net = LpNet::zeroed(ModelConfig { q: 3, ..small_config(Summation::Accelerated) }).unwrap();
    assert!(net.forecast(&small_sample(30)).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn horizon_shorter_than_window_count_is_config_error() {
    let net = LpNet::zeroed(ModelConfig { q: 11, ..small_config(Summation::Direct) }).unwrap();
    assert!(matches!(net.forecast(&small_sample(10)), Err(lpnet_core::Error::Config { .. })));
}

/// Mean squared error of one window, with every parameter an input.
fn window_loss<'a>(net: &'a LpNet, plan: &SamplePlan) -> impl Fn(&mut Tape, &[Var]) -> lpnet_core::Result<Var> + 'a {
    let plan = plan.clone();
    move |tape, bound| {
        let y = net.forecast_tape(tape, bound, &plan)?;
        let target = tape.leaf(plan.target.clone());
        let d = tape.sub(y, target)?;
        let sq = tape.square(d);
        Ok(tape.mean(sq))
    }
}

#[test]
fn window_loss_gradient_matches_finite_differences() {
    for summation in [Summation::Direct, Summation::Accelerated] {
        let cfg = ModelConfig { q: 1, ..small_config(summation) };
        let net = LpNet::new(cfg.clone(), 17).unwrap();
        let plan = SamplePlan::new(&cfg, &small_sample(10)).unwrap();
        let point: Vec<Tensor> = net.store.iter().map(|p| p.value.clone()).collect();
        let report = grad_check(window_loss(&net, &plan), &point, 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-4, "{summation:?}: {report:?}");
    }
}

#[test]
fn recurrent_loss_gradient_matches_finite_differences() {
    let cfg = ModelConfig { q: 3, ..small_config(Summation::Direct) };
    let net = LpNet::new(cfg.clone(), 23).unwrap();
    let plan = SamplePlan::new(&cfg, &small_sample(15)).unwrap();
    let point: Vec<Tensor> = net.store.iter().map(|p| p.value.clone()).collect();
    let report = grad_check(window_loss(&net, &plan), &point, 1e-5).unwrap();
    assert!(report.max_rel_error < 1e-4, "{report:?}");
}
