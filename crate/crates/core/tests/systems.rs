use lpnet_core::systems::{
    build_dataset, integrate_dde, integrate_rk4, integrate_rk4_substeps, load_split, pulse_onset,
    uniform_grid, write_dataset, ForcingSignal, Pulse, Split, System, SystemSpec,
};
use proptest::prelude::*;

fn smd() -> SystemSpec {
    SystemSpec::standard(System::Smd { m: 1.0, c: 0.5, k: 5.0 })
}

fn mackey_glass() -> SystemSpec {
    SystemSpec::standard(System::MackeyGlass { beta: 0.1, gamma: 0.2, tau: 7.0, n: 2.0 })
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn rk4_is_fourth_order() {
    let x = ForcingSignal::Sigmoid { amplitude: 1.0, period: 4.0, steepness: 4.0 };
    let f = |t: f64| x.eval(t);
    let spec = SystemSpec { initial_state: vec![0.3, -0.2], ..smd() };
    let t = uniform_grid(20.0, 50);
    let y = |n| integrate_rk4_substeps(&spec, &f, &t, n).unwrap().column(0).to_vec();
    let reference = y(4);
    let ratio = max_gap(&y(1), &reference) / max_gap(&y(2), &reference);
    assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn undamped_pendulum_conserves_energy() {
    let spec = SystemSpec {
        initial_state: vec![0.1, 0.0],
        ..SystemSpec::standard(System::Pendulum { g_over_l: 1.0, c: 0.0 })
    };
    let t = uniform_grid(20.47, 550);
    let traj = integrate_rk4(&spec, &|_| 0.0, &t).unwrap();
    let energy = |i: usize| 0.5 * traj[[i, 1]].powi(2) + (1.0 - traj[[i, 0]].cos());
    let e0 = energy(0);
    let worst = (0..t.len()).map(|i| ((energy(i) - e0) / e0).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5, "relative drift {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn smd_superposition(a1 in 0.1f64..2.0, w1 in 0.2f64..4.0, a2 in 0.1f64..2.0, p2 in 1.0f64..8.0) {
        let x1 = ForcingSignal::DecayingSine { amplitude: a1, omega: w1, decay: 0.1 };
        let x2 = ForcingSignal::Triangular { amplitude: a2, period: p2 };
        let t = uniform_grid(20.0, 550);
        let run = |f: &dyn Fn(f64) -> f64| integrate_rk4(&smd(), f, &t).unwrap().column(0).to_vec();
        let y1 = run(&|t| x1.eval(t));
        let y2 = run(&|t| x2.eval(t));
        let y12 = run(&|t| x1.eval(t) + x2.eval(t));
        let sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        prop_assert!(max_gap(&sum, &y12) < 1e-8);
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo).signum() == f(mid).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn mackey_glass_settles_on_fixed_point() {
    let x0 = 0.1;
    let root = bisect(|y| 0.1 * y / (1.0 + y * y) - 0.2 * y + x0, 0.0, 10.0);
    let t = uniform_grid(400.0, 4000);
    let y = integrate_dde(&mackey_glass(), &|_| x0, &t, None).unwrap();
    assert!((y[3999] - root).abs() < 1e-6, "{} vs {root}", y[3999]);
}

#[test]
fn pulse_reaches_dynamics_after_one_delay() {
    let x = ForcingSignal::Sigmoid { amplitude: 0.3, period: 5.0, steepness: 4.0 };
    let t = uniform_grid(20.0, 550);
    let dt = t[1];
    for index in [40, 100, 180] {
        let pulse = Pulse { index, delta: 0.1 };
        let onset = pulse_onset(&mackey_glass(), &|s| x.eval(s), &t, pulse, 1e-9).unwrap().expect("onset");
        let expected = t[index] + 7.0;
        assert!((onset - expected).abs() <= dt, "onset {onset}, expected {expected}");
    }
}

#[test]
fn generation_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ds = build_dataset(8, 3).unwrap();
    let da = write_dataset(a.path(), &ds).unwrap();
    let db = write_dataset(b.path(), &build_dataset(8, 3).unwrap()).unwrap();
    for split in Split::ALL {
        let names: Vec<_> = std::fs::read_dir(da.join(split.name())).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert!(!names.is_empty());
        for name in names {
            let fa = std::fs::read(da.join(split.name()).join(&name)).unwrap();
            let fb = std::fs::read(db.join(split.name()).join(&name)).unwrap();
            assert_eq!(fa, fb, "{name:?}");
        }
    }
    let (manifest, samples) = load_split(&da, Split::Test).unwrap();
    assert_eq!(samples.len(), 5);
    assert_eq!(manifest.samples[0].forcing, ds.test[0].forcing);
    for (loaded, generated) in samples.iter().zip(&ds.test) {
        assert_eq!(loaded, &generated.sample);
    }
}
