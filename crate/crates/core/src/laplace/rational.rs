use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LaplaceSignal;
use crate::error::{Error, Result};

/// `e^{−τ s} · num(s) / den(s)` with real coefficients in ascending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalSignal {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    #[serde(default)]
    pub delay: f64,
}

impl RationalSignal {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Self {
        RationalSignal { num, den, delay: 0.0 }
    }

    pub fn delayed(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num.is_empty() {
            return Err(Error::config("num", "needs at least one coefficient"));
        }
        if self.den.iter().all(|&c| c == 0.0) {
            return Err(Error::config("den", "needs a non-zero coefficient"));
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(Error::config("delay", "must be finite and >= 0"));
        }
        Ok(())
    }
}

pub(crate) fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

impl LaplaceSignal for RationalSignal {
    fn width(&self) -> usize {
        1
    }

    fn eval(&self, s: Complex64) -> Result<Vec<Complex64>> {
        let den = horner(&self.den, s);
        if den.norm() == 0.0 {
            return Err(Error::Evaluation {
                re: s.re,
                im: s.im,
                reason: "pole of rational signal".into(),
            });
        }
        let mut v = horner(&self.num, s) / den;
        if self.delay != 0.0 {
            v *= (-self.delay * s).exp();
        }
        Ok(vec![v])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_first_order_lag() {
        let r = RationalSignal::new(vec![1.0], vec![1.0, 1.0]);
        let v = r.eval(Complex64::new(1.0, 0.0)).unwrap()[0];
        assert_eq!(v, Complex64::new(0.5, 0.0));
    }

    #[test]
    fn pole_is_an_error() {
        let r = RationalSignal::new(vec![1.0], vec![0.0, 1.0]);
        assert!(r.eval(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn parses_from_json() {
        let r: RationalSignal = serde_json::from_str(r#"{"num":[1],"den":[1,1]}"#).unwrap();
        assert_eq!(r.delay, 0.0);
        assert!(r.validate().is_ok());
    }
}
