use lpnet_core::laplace::{
    dlt, fflt, ilt_fourier, ilt_fourier_prescaled, pair_error, prescaled_gap, transform_pairs, Complex64,
    FnSignal, IltConfig, LaplaceSignal, Prescaled, Summation,
};
use ndarray::Array2;
use proptest::prelude::*;

fn cfg() -> IltConfig {
    IltConfig::new(0.001, 2.0, 64)
}

#[test]
fn transform_pair_corpus() {
    for pair in transform_pairs() {
        let worst = pair_error(&pair, &cfg()).unwrap();
        assert!(worst < 1e-3, "{}: max error {worst:e}", pair.name);
    }
}

#[test]
fn prescaled_path_matches_unscaled_on_corpus() {
    let c = cfg().with_summation(Summation::Direct);
    for pair in transform_pairs() {
        let rel = prescaled_gap(&pair, &c).unwrap();
        assert!(rel <= 1e-10, "{}: relative gap {rel:e}", pair.name);
    }
}

#[test]
fn prescaled_path_matches_unscaled_on_smooth_pairs_when_accelerated() {
    for pair in transform_pairs().into_iter().filter(|p| p.signal.delay == 0.0) {
        let rel = prescaled_gap(&pair, &cfg()).unwrap();
        assert!(rel <= 1e-10, "{}: relative gap {rel:e}", pair.name);
    }
}

#[test]
fn prescaled_reciprocal_at_unit_time() {
    let c = cfg();
    let y = FnSignal::new(1, |s| vec![s.inv()]);
    let out = ilt_fourier_prescaled(&Prescaled::new(&y, c), &[1.0], &c).unwrap();
    assert!((out[[0, 0]] - 1.0).abs() < 1e-4);
}

/// `max |a − b| / max |a|` over a sampled curve.
fn max_relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let norm = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    gap / norm.max(f64::MIN_POSITIVE)
}

fn random_rational(poles: &[(f64, f64, f64)]) -> impl Fn(Complex64) -> Vec<Complex64> + '_ {
    move |s| {
        let v = poles
            .iter()
            .map(|&(a, w, r)| {
                if w == 0.0 {
                    r / (s + a)
                } else {
                    r * w / ((s + a) * (s + a) + w * w)
                }
            })
            .sum();
        vec![v]
    }
}

fn pole_strategy() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(
        (0.1f64..3.0, prop_oneof![Just(0.0), 0.5f64..4.0], -2.0f64..2.0),
        1..4,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ilt_is_linear(p1 in pole_strategy(), p2 in pole_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let c = cfg().with_summation(Summation::Direct);
        let times = [0.3, 1.0, 2.5, 6.0];
        let f1 = random_rational(&p1);
        let f2 = random_rational(&p2);
        let y1 = FnSignal::new(1, &f1);
        let y2 = FnSignal::new(1, &f2);
        let combo = FnSignal::new(1, |s| vec![f1(s)[0] * a + f2(s)[0] * b]);
        let o1 = ilt_fourier(&y1, &times, &c).unwrap();
        let o2 = ilt_fourier(&y2, &times, &c).unwrap();
        let oc = ilt_fourier(&combo, &times, &c).unwrap();
        for j in 0..times.len() {
            let want = a * o1[[j, 0]] + b * o2[[j, 0]];
            let scale = (a * o1[[j, 0]]).abs() + (b * o2[[j, 0]]).abs() + 1e-300;
            prop_assert!((oc[[j, 0]] - want).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn prescaled_equivalence_for_random_rationals(p in pole_strategy()) {
        let times = [0.2, 1.0, 4.0, 9.0];
        // Extrapolation amplifies the rounding difference between the two
        // orderings, so the accelerated bound is looser.
        for (summation, tol) in [(Summation::Direct, 1e-10), (Summation::Accelerated, 1e-8)] {
            let c = cfg().with_summation(summation);
            let f = random_rational(&p);
            let y = FnSignal::new(1, &f);
            let plain = ilt_fourier(&y, &times, &c).unwrap();
            let scaled = ilt_fourier_prescaled(&Prescaled::new(&y, c), &times, &c).unwrap();
            let rel = max_relative_gap(plain.as_slice().unwrap(), scaled.as_slice().unwrap());
            prop_assert!(rel <= tol, "{:?} relative gap {:e}", summation, rel);
        }
    }

    #[test]
    fn forward_transforms_are_conjugate_symmetric(
        re in 0.1f64..5.0,
        im in -20.0f64..20.0,
        coeffs in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let t: Vec<f64> = (0..64).map(|i| 0.5 + i as f64 * 0.1).collect();
        let x = Array2::from_shape_fn((64, 2), |(i, d)| {
            let tt = t[i];
            coeffs[0] * (1.3 * tt).sin() + coeffs[1] * tt.cos() + coeffs[2] * d as f64 + coeffs[3]
        });
        let s = Complex64::new(re, im);
        let d1 = dlt(&t, x.view(), s).unwrap();
        let d2 = dlt(&t, x.view(), s.conj()).unwrap();
        let f = fflt(&t, x.view()).unwrap();
        let f1 = f.eval(s).unwrap();
        let f2 = f.eval(s.conj()).unwrap();
        for d in 0..2 {
            prop_assert!((d1[d].conj() - d2[d]).norm() <= 1e-12 * d1[d].norm().max(1.0));
            prop_assert!((f1[d].conj() - f2[d]).norm() <= 1e-12 * f1[d].norm().max(1.0));
        }
    }
}

#[test]
fn fflt_then_ilt_round_trip() {
    let n = 200;
    let period = 10.0;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * period / n as f64).collect();
    let signal = |tt: f64| {
        let w = 2.0 * std::f64::consts::PI / period;
        0.4 + (w * tt).sin() + 0.5 * (3.0 * w * tt + 0.3).cos()
    };
    let x = Array2::from_shape_fn((n, 1), |(i, _)| signal(t[i]));
    let f = fflt(&t, x.view()).unwrap();
    let lo = n / 10;
    let hi = n - n / 10;
    let interior: Vec<f64> = t[lo..hi].to_vec();
    let out = ilt_fourier(&f, &interior, &cfg()).unwrap();
    let (mut err, mut norm) = (0.0, 0.0);
    for (j, &tt) in interior.iter().enumerate() {
        err += (out[[j, 0]] - signal(tt)).powi(2);
        norm += signal(tt).powi(2);
    }
    let rel = (err / norm).sqrt();
    assert!(rel < 1e-2, "relative L2 error {rel:e}");
}
