use ndarray::Array2;
use num_complex::Complex64;

use super::query::{check_times, scale_factor};
use super::{IltConfig, Summation};
use crate::error::{Error, Result};

/// A queryable s-domain representation of a vector-valued signal.
pub trait LaplaceSignal {
    fn width(&self) -> usize;
    fn eval(&self, s: Complex64) -> Result<Vec<Complex64>>;
}

/// An s-domain function that also depends on the reconstruction time, such as
/// a signal with the reconstruction prefactor folded in.
pub trait ScaledSignal {
    fn width(&self) -> usize;
    fn eval_at(&self, s: Complex64, t: f64) -> Result<Vec<Complex64>>;
}

/// Wraps a closure as a [`LaplaceSignal`].
pub struct FnSignal<F> {
    width: usize,
    f: F,
}

impl<F> FnSignal<F>
where
    F: Fn(Complex64) -> Vec<Complex64>,
{
    pub fn new(width: usize, f: F) -> Self {
        FnSignal { width, f }
    }
}

impl<F> LaplaceSignal for FnSignal<F>
where
    F: Fn(Complex64) -> Vec<Complex64>,
{
    fn width(&self) -> usize {
        self.width
    }

    fn eval(&self, s: Complex64) -> Result<Vec<Complex64>> {
        Ok((self.f)(s))
    }
}

/// `Ỹ(s, t) = Y(s) / f_scale(t)`, i.e. `Y` multiplied by the reconstruction
/// prefactor `e^{σt}/λ`. The bracketed series of `Ỹ` then needs no prefactor.
pub struct Prescaled<'a, S: ?Sized> {
    inner: &'a S,
    cfg: IltConfig,
}

impl<'a, S: LaplaceSignal + ?Sized> Prescaled<'a, S> {
    pub fn new(inner: &'a S, cfg: IltConfig) -> Self {
        Prescaled { inner, cfg }
    }
}

impl<S: LaplaceSignal + ?Sized> ScaledSignal for Prescaled<'_, S> {
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn eval_at(&self, s: Complex64, t: f64) -> Result<Vec<Complex64>> {
        let f = scale_factor(t, &self.cfg)?.recip();
        Ok(self.inner.eval(s)?.into_iter().map(|v| v * f).collect())
    }
}

fn checked(s: Complex64, values: Result<Vec<Complex64>>, width: usize) -> Result<Vec<Complex64>> {
    let values = values.map_err(|e| Error::Evaluation {
        re: s.re,
        im: s.im,
        reason: e.to_string(),
    })?;
    if values.len() != width {
        return Err(Error::Evaluation {
            re: s.re,
            im: s.im,
            reason: format!("expected {width} components, got {}", values.len()),
        });
    }
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Evaluation {
            re: s.re,
            im: s.im,
            reason: "non-finite value".into(),
        });
    }
    Ok(values)
}

/// Real-valued series terms for one time and one component: the `k = 0` term
/// is halved, the others are `Re{Y(s_k) e^{ikπ/ζ}}`.
pub fn bracket_terms(values: &[Complex64], cfg: &IltConfig) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            if k == 0 {
                0.5 * v.re
            } else {
                let (sin, cos) = cfg.term_phase(k).sin_cos();
                v.re * cos - v.im * sin
            }
        })
        .collect()
}

/// Reduces bracket terms in `k` order according to the summation mode.
pub fn sum_terms(terms: &[f64], summation: Summation) -> f64 {
    match summation {
        Summation::Direct => terms.iter().sum(),
        Summation::Accelerated => {
            let partial: Vec<f64> = terms
                .iter()
                .scan(0.0, |acc, &v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect();
            wynn_epsilon(&partial)
        }
    }
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
///
/// The table is built until a difference is lost in rounding noise; the last
/// even-column estimate computed before that point is returned.
pub fn wynn_epsilon(partial: &[f64]) -> f64 {
    match wynn_table(partial) {
        Some((columns, chosen)) => *columns[chosen].last().expect("non-empty column"),
        None => 0.0,
    }
}

/// Wynn estimate together with its derivative with respect to each partial
/// sum, holding the stopping decisions fixed.
pub fn wynn_epsilon_grad(partial: &[f64]) -> (f64, Vec<f64>) {
    let Some((columns, chosen)) = wynn_table(partial) else {
        return (0.0, Vec::new());
    };
    let value = *columns[chosen].last().expect("non-empty column");
    // adjoints[c] pairs with columns[c]; column -1 is the zero constant.
    let mut adjoints: Vec<Vec<f64>> = columns.iter().map(|c| vec![0.0; c.len()]).collect();
    let last = adjoints[chosen].len() - 1;
    adjoints[chosen][last] = 1.0;
    for c in (1..=chosen).rev() {
        for i in 0..columns[c].len() {
            let a = adjoints[c][i];
            if a == 0.0 {
                continue;
            }
            let d = columns[c - 1][i + 1] - columns[c - 1][i];
            let g = a / (d * d);
            adjoints[c - 1][i + 1] -= g;
            adjoints[c - 1][i] += g;
            if c >= 2 {
                adjoints[c - 2][i + 1] += a;
            }
        }
    }
    (value, adjoints.swap_remove(0))
}

/// Builds the epsilon table and returns its columns plus the index of the
/// column holding the selected estimate.
fn wynn_table(partial: &[f64]) -> Option<(Vec<Vec<f64>>, usize)> {
    if partial.is_empty() {
        return None;
    }
    let floor = WYNN_NOISE * partial.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zeros = vec![0.0; partial.len() + 1];
    let mut columns: Vec<Vec<f64>> = vec![partial.to_vec()];
    let mut chosen = 0;
    'table: while columns.last().expect("column").len() > 1 {
        let column = columns.len() - 1;
        let cur = &columns[column];
        let prev = if column == 0 { &zeros } else { &columns[column - 1] };
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            // Even columns hold estimates of the sum and share its noise floor.
            let lost = column % 2 == 0 && d.abs() <= floor;
            if lost || d == 0.0 || !d.is_finite() {
                break 'table;
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        let even = (column + 1) % 2 == 0;
        let finite = next[next.len() - 1].is_finite();
        columns.push(next);
        if even {
            if !finite {
                break;
            }
            chosen = columns.len() - 1;
        }
    }
    columns.truncate(chosen + 1);
    Some((columns, chosen))
}

/// Differences in an estimate column below this fraction of the largest
/// partial sum are treated as rounding noise.
pub(crate) const WYNN_NOISE: f64 = 1024.0 * f64::EPSILON;

fn reconstruct<F>(times: &[f64], width: usize, cfg: &IltConfig, mut eval: F) -> Result<Array2<f64>>
where
    F: FnMut(Complex64, f64) -> Result<Vec<Complex64>>,
{
    cfg.validate()?;
    check_times(times)?;
    let mut out = Array2::zeros((times.len(), width));
    let mut values = vec![Vec::new(); cfg.n_ilt + 1];
    for (j, &t) in times.iter().enumerate() {
        let sigma = cfg.sigma(t);
        for (k, slot) in values.iter_mut().enumerate() {
            let s = Complex64::new(sigma, k as f64 * std::f64::consts::PI / (cfg.zeta * t));
            *slot = checked(s, eval(s, t), width)?;
        }
        for d in 0..width {
            let column: Vec<Complex64> = values.iter().map(|v| v[d]).collect();
            out[[j, d]] = sum_terms(&bracket_terms(&column, cfg), cfg.summation);
        }
    }
    Ok(out)
}

/// Fourier-series inverse Laplace transform, one row per time.
pub fn ilt_fourier<S: LaplaceSignal + ?Sized>(
    y: &S,
    times: &[f64],
    cfg: &IltConfig,
) -> Result<Array2<f64>> {
    let mut out = reconstruct(times, y.width(), cfg, |s, _| y.eval(s))?;
    for (j, &t) in times.iter().enumerate() {
        let prefactor = (cfg.sigma(t) * t).exp() / (cfg.zeta * t);
        out.row_mut(j).mapv_inplace(|v| v * prefactor);
    }
    Ok(out)
}

/// Inverse transform of a signal that already carries the reconstruction
/// prefactor (see [`Prescaled`]); no prefactor is applied here.
pub fn ilt_fourier_prescaled<S: ScaledSignal + ?Sized>(
    y_tilde: &S,
    times: &[f64],
    cfg: &IltConfig,
) -> Result<Array2<f64>> {
    reconstruct(times, y_tilde.width(), cfg, |s, t| y_tilde.eval_at(s, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg64() -> IltConfig {
        IltConfig::new(0.001, 2.0, 64)
    }

    #[test]
    fn inverts_reciprocal() {
        let y = FnSignal::new(1, |s| vec![s.inv()]);
        let out = ilt_fourier(&y, &[1.0], &cfg64()).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn inverts_first_order_pole() {
        let y = FnSignal::new(1, |s| vec![(s + 1.0).inv()]);
        let out = ilt_fourier(&y, &[1.0], &cfg64()).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 0.367879441, epsilon = 1e-4);
    }

    #[test]
    fn zero_signal_gives_exact_zero() {
        let y = FnSignal::new(2, |_| vec![c(0.0, 0.0); 2]);
        for summation in [Summation::Direct, Summation::Accelerated] {
            let cfg = cfg64().with_summation(summation);
            let out = ilt_fourier(&y, &[0.1, 1.0, 9.0], &cfg).unwrap();
            assert!(out.iter().all(|&v| v == 0.0));
            let p = Prescaled::new(&y, cfg);
            let out = ilt_fourier_prescaled(&p, &[0.1, 1.0, 9.0], &cfg).unwrap();
            assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn prescaled_reciprocal() {
        let cfg = cfg64();
        let y = FnSignal::new(1, |s| vec![s.inv()]);
        let out = ilt_fourier_prescaled(&Prescaled::new(&y, cfg), &[1.0], &cfg).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn evaluation_failure_carries_query_point() {
        struct Failing;
        impl LaplaceSignal for Failing {
            fn width(&self) -> usize {
                1
            }
            fn eval(&self, s: Complex64) -> Result<Vec<Complex64>> {
                if s.im > 1.0 {
                    Err(Error::config("signal", "out of range"))
                } else {
                    Ok(vec![s])
                }
            }
        }
        let err = ilt_fourier(&Failing, &[1.0], &cfg64()).unwrap_err();
        match err {
            Error::Evaluation { im, .. } => assert!(im > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_width_is_reported() {
        let y = FnSignal::new(2, |s| vec![s]);
        assert!(matches!(
            ilt_fourier(&y, &[1.0], &cfg64()),
            Err(Error::Evaluation { .. })
        ));
    }

    #[test]
    fn non_positive_time_is_domain_error() {
        let y = FnSignal::new(1, |s| vec![s.inv()]);
        assert!(matches!(
            ilt_fourier(&y, &[1.0, -0.5], &cfg64()),
            Err(Error::Domain { index: 1, .. })
        ));
    }

    #[test]
    fn wynn_sums_alternating_harmonic_series() {
        let partial: Vec<f64> = (1..=20)
            .scan(0.0, |acc, k| {
                *acc += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                Some(*acc)
            })
            .collect();
        assert_abs_diff_eq!(wynn_epsilon(&partial), std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn wynn_handles_converged_and_short_sequences() {
        assert_eq!(wynn_epsilon(&[]), 0.0);
        assert_eq!(wynn_epsilon(&[3.0]), 3.0);
        assert_eq!(wynn_epsilon(&[1.0, 1.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn wynn_gradient_matches_finite_differences() {
        let partial: Vec<f64> = (1..=8)
            .scan(0.0, |acc, k| {
                *acc += if k % 2 == 1 { 1.0 } else { -1.0 } / (k as f64).sqrt();
                Some(*acc)
            })
            .collect();
        let (value, grad) = wynn_epsilon_grad(&partial);
        assert_eq!(value, wynn_epsilon(&partial));
        let h = 1e-7;
        for i in 0..partial.len() {
            let mut up = partial.clone();
            let mut down = partial.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (wynn_epsilon(&up) - wynn_epsilon(&down)) / (2.0 * h);
            assert_abs_diff_eq!(grad[i], fd, epsilon = 1e-5);
        }
    }
}
