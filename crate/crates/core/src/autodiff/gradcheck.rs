use super::tape::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Worst disagreement between reverse-mode and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// `(input, flat element)` of the worst relative error.
    pub worst: (usize, usize),
}

/// Fraction of the gradient scale below which a component is compared
/// against that scale instead of its own magnitude. Central differences
/// cannot resolve components much smaller than `ε|f|/h`.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Compares the tape gradient of scalar `f` at `point` with central
/// differences of step `h`.
///
/// The per-element error is `|a − b| / max(|a|, |b|, floor)` where `floor` is
/// [`GRAD_CHECK_FLOOR`] times the largest of `|f|`, the largest gradient
/// entry, and one.
pub fn grad_check<F>(f: F, point: &[Tensor], h: f64) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |inputs: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        scalar(&tape, out)
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = point.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let f0 = scalar(&tape, out)?;
    let grads = tape.backward(out);
    let analytic: Vec<Tensor> = vars
        .iter()
        .zip(point)
        .map(|(&v, p)| grads.get_or_zeros(v, p))
        .collect();

    let mut numeric = Vec::with_capacity(point.len());
    let mut probe: Vec<Tensor> = point.to_vec();
    for (i, p) in point.iter().enumerate() {
        let mut g = Tensor::zeros(p.raw_dim());
        for (flat, slot) in g.iter_mut().enumerate() {
            let idx = (flat / p.ncols(), flat % p.ncols());
            let x = p[idx];
            probe[i][idx] = x + h;
            let up = eval(&probe)?;
            probe[i][idx] = x - h;
            let down = eval(&probe)?;
            probe[i][idx] = x;
            *slot = (up - down) / (2.0 * h);
        }
        numeric.push(g);
    }

    let scale = analytic
        .iter()
        .flat_map(|g| g.iter())
        .fold(f0.abs().max(1.0), |m, v| m.max(v.abs()));
    let floor = GRAD_CHECK_FLOOR * scale;
    let mut report = GradCheck {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst: (0, 0),
    };
    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        for (flat, (&a, &n)) in a.iter().zip(n.iter()).enumerate() {
            let abs = (a - n).abs();
            let rel = abs / a.abs().max(n.abs()).max(floor);
            report.max_abs_error = report.max_abs_error.max(abs);
            if rel > report.max_rel_error || !rel.is_finite() {
                report.max_rel_error = rel;
                report.worst = (i, flat);
            }
        }
    }
    Ok(report)
}

fn scalar(tape: &Tape, v: Var) -> Result<f64> {
    let value = tape.value(v);
    if value.dim() != (1, 1) {
        return Err(Error::shape("grad_check output", "[1, 1]", format!("{:?}", value.shape())));
    }
    Ok(value[[0, 0]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn square_at_three() {
        let r = grad_check(|t, x| Ok(t.square(x[0])), &[array![[3.0]]], 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // A column map with a deliberately wrong Jacobian.
        let r = grad_check(
            |t, x| {
                let v = t.value(x[0]).mapv(|v| v * v);
                let jac = t.value(x[0]).clone();
                t.column_map(x[0], v, jac)
            },
            &[array![[2.0]]],
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_error > 0.4);
    }

    #[test]
    fn rejects_non_scalar_output() {
        assert!(grad_check(|_, x| Ok(x[0]), &[array![[1.0, 2.0]]], 1e-5).is_err());
    }
}
