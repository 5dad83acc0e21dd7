use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use super::IltConfig;
use crate::error::{Error, Result};

/// Query points `s_k(t) = σ(t) + ikπ/(ζt)` for `k = 0..=n_ilt`, one column per time.
#[derive(Debug, Clone)]
pub struct QuerySet {
    pub times: Vec<f64>,
    /// Shape `(n_ilt + 1) × times.len()`.
    pub points: Array2<Complex64>,
    pub sigma: Vec<f64>,
}

impl QuerySet {
    pub fn n_terms(&self) -> usize {
        self.points.nrows()
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    for (index, &t) in times.iter().enumerate() {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain {
                what: "query time must be positive",
                index,
                value: t,
            });
        }
    }
    Ok(())
}

pub fn build_queries(times: &[f64], cfg: &IltConfig) -> Result<QuerySet> {
    cfg.validate()?;
    check_times(times)?;
    let terms = cfg.n_ilt + 1;
    let sigma: Vec<f64> = times.iter().map(|&t| cfg.sigma(t)).collect();
    let points = Array2::from_shape_fn((terms, times.len()), |(k, j)| {
        Complex64::new(sigma[j], k as f64 * PI / (cfg.zeta * times[j]))
    });
    Ok(QuerySet {
        times: times.to_vec(),
        points,
        sigma,
    })
}

/// `f_scale(t) = ζ t ε^{1/ζ} e^{−α t}`, the reciprocal of the reconstruction prefactor.
pub fn scale_factor(t: f64, cfg: &IltConfig) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            what: "scale factor time must be positive",
            index: 0,
            value: t,
        });
    }
    Ok(cfg.zeta * t * cfg.epsilon.powf(1.0 / cfg.zeta) * (-cfg.alpha * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> IltConfig {
        IltConfig::new(0.001, 2.0, 8)
    }

    #[test]
    fn first_query_point_at_unit_time() {
        let q = build_queries(&[1.0], &cfg()).unwrap();
        let s1 = q.points[[1, 0]];
        // 0.001 + 23.02585093/2, π/2
        assert_relative_eq!(s1.re, 11.513925465, epsilon = 1e-8);
        assert_relative_eq!(s1.im, 1.5707963268, epsilon = 1e-9);
    }

    #[test]
    fn imaginary_part_scales_inversely_with_time() {
        let q = build_queries(&[1.0, 2.0], &cfg()).unwrap();
        assert_relative_eq!(q.points[[1, 1]].im, 0.7853981634, epsilon = 1e-9);
        assert_relative_eq!(q.points[[1, 0]].im, 2.0 * q.points[[1, 1]].im, epsilon = 1e-15);
    }

    #[test]
    fn query_structure_is_exact() {
        let times = [0.05, 0.3, 1.0, 7.5, 19.0];
        let c = cfg();
        let q = build_queries(&times, &c).unwrap();
        for (j, &t) in times.iter().enumerate() {
            assert_eq!(q.points[[0, j]].im, 0.0);
            for k in 0..=c.n_ilt {
                assert_eq!(q.points[[k, j]].re, q.sigma[j]);
                assert_eq!(q.points[[k, j]].im, k as f64 * PI / (c.zeta * t));
            }
        }
    }

    #[test]
    fn non_positive_time_reports_index() {
        let err = build_queries(&[1.0, 0.5, 0.0], &cfg()).unwrap_err();
        match err {
            Error::Domain { index, .. } => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_zeta_is_rejected() {
        let mut c = cfg();
        c.zeta = 0.5;
        assert!(matches!(build_queries(&[1.0], &c), Err(Error::Config { .. })));
    }

    #[test]
    fn scale_factor_values() {
        let mut c = IltConfig::new(0.0, 2.0, 8);
        assert_relative_eq!(scale_factor(1.0, &c).unwrap(), 2e-5, max_relative = 1e-12);
        c.alpha = 1.0;
        assert_relative_eq!(scale_factor(1.0, &c).unwrap(), 7.357588823e-6, max_relative = 1e-9);
        assert!(scale_factor(1e-12, &c).unwrap() < 1e-15);
        assert!(scale_factor(0.0, &c).is_err());
        assert!(scale_factor(-1.0, &c).is_err());
    }
}
