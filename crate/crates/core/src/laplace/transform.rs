use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::LaplaceSignal;
use crate::error::{Error, Result};

fn check_increasing(t: &[f64]) -> Result<()> {
    for (index, w) in t.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Domain {
                what: "sample times must be strictly increasing",
                index: index + 1,
                value: w[1],
            });
        }
    }
    Ok(())
}

fn check_rows(t: &[f64], x: &ArrayView2<f64>, op: &'static str) -> Result<()> {
    if x.nrows() != t.len() {
        return Err(Error::shape(op, format!("{} rows", t.len()), format!("{} rows", x.nrows())));
    }
    Ok(())
}

/// Discrete Laplace transform of a sampled signal: left rectangles, with the
/// final increment replicated.
#[derive(Debug, Clone)]
pub struct Dlt {
    times: Vec<f64>,
    weights: Vec<f64>,
    samples: Array2<f64>,
}

impl Dlt {
    pub fn new(t: &[f64], x: ArrayView2<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::shape("dlt", "at least 2 samples", t.len()));
        }
        check_rows(t, &x, "dlt")?;
        check_increasing(t)?;
        let mut weights: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        weights.push(weights[weights.len() - 1]);
        Ok(Dlt {
            times: t.to_vec(),
            weights,
            samples: x.to_owned(),
        })
    }
}

impl LaplaceSignal for Dlt {
    fn width(&self) -> usize {
        self.samples.ncols()
    }

    fn eval(&self, s: Complex64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.width()];
        for ((&t, &w), row) in self.times.iter().zip(&self.weights).zip(self.samples.rows()) {
            let kernel = (-s * t).exp() * w;
            for (acc, &x) in out.iter_mut().zip(row) {
                *acc += kernel * x;
            }
        }
        Ok(out)
    }
}

/// Evaluates the discrete Laplace transform of `x` at a single point.
pub fn dlt(t: &[f64], x: ArrayView2<f64>, s: Complex64) -> Result<Vec<Complex64>> {
    Dlt::new(t, x)?.eval(s)
}

/// Pole–residue representation `Σ_{k=−K}^{K} a_k / (s − iω_k)` of a uniformly
/// sampled signal treated as periodic over its window.
#[derive(Debug, Clone)]
pub struct Fflt {
    /// `ω_k` for `k = −K..=K`.
    omegas: Vec<f64>,
    /// `coeffs[k][d]` matches `omegas[k]`.
    coeffs: Vec<Vec<Complex64>>,
    width: usize,
}

impl Fflt {
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn coefficients(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }
}

/// Builds the FFLT of a uniformly sampled signal. Coefficients are referenced
/// to the actual sample times, so windows need not start at zero.
pub fn fflt(t: &[f64], x: ArrayView2<f64>) -> Result<Fflt> {
    let n = t.len();
    if n < 4 {
        return Err(Error::shape("fflt", "at least 4 samples", n));
    }
    check_rows(t, &x, "fflt")?;
    check_increasing(t)?;
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    for (index, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::Domain {
                what: "fflt requires uniform sampling",
                index: index + 1,
                value: w[1] - w[0],
            });
        }
    }
    let period = n as f64 * dt;
    let half = n / 2;
    let width = x.ncols();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let mut spectra = Vec::with_capacity(width);
    for column in x.columns() {
        let mut buf: Vec<Complex64> = column.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        spectra.push(buf);
    }

    let mut omegas = Vec::with_capacity(2 * half + 1);
    let mut coeffs = Vec::with_capacity(2 * half + 1);
    for k in -(half as i64)..=(half as i64) {
        let omega = 2.0 * PI * k as f64 / period;
        let bin = k.rem_euclid(n as i64) as usize;
        // An even-length Nyquist bin is shared between ±K.
        let share = if n % 2 == 0 && k.unsigned_abs() as usize == half {
            0.5
        } else {
            1.0
        };
        let phase = Complex64::from_polar(share / n as f64, -omega * t[0]);
        omegas.push(omega);
        coeffs.push(spectra.iter().map(|sp| sp[bin] * phase).collect());
    }
    Ok(Fflt {
        omegas,
        coeffs,
        width,
    })
}

impl LaplaceSignal for Fflt {
    fn width(&self) -> usize {
        self.width
    }

    fn eval(&self, s: Complex64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.width];
        for (&omega, a) in self.omegas.iter().zip(&self.coeffs) {
            let denom = s - Complex64::new(0.0, omega);
            // Query points have σ > 0, so they never coincide with a pole.
            debug_assert!(denom.norm() > 0.0, "query point on an FFLT pole");
            let r = denom.inv();
            for (acc, &c) in out.iter_mut().zip(a) {
                *acc += c * r;
            }
        }
        Ok(out)
    }
}
