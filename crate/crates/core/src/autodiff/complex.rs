//! Complex arithmetic on the tape, carried as pairs of real nodes.

use super::tape::{Tape, Var};
use crate::error::Result;

/// A complex tensor as separate real and imaginary nodes of equal shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CVar {
    pub re: Var,
    pub im: Var,
}

impl CVar {
    pub fn new(re: Var, im: Var) -> Self {
        CVar { re, im }
    }
}

pub fn complex_add(tape: &mut Tape, a: CVar, b: CVar) -> Result<CVar> {
    Ok(CVar::new(tape.add(a.re, b.re)?, tape.add(a.im, b.im)?))
}

pub fn complex_sub(tape: &mut Tape, a: CVar, b: CVar) -> Result<CVar> {
    Ok(CVar::new(tape.sub(a.re, b.re)?, tape.sub(a.im, b.im)?))
}

/// `(a.re b.re − a.im b.im) + i(a.re b.im + a.im b.re)`.
pub fn complex_mul(tape: &mut Tape, a: CVar, b: CVar) -> Result<CVar> {
    let rr = tape.mul(a.re, b.re)?;
    let ii = tape.mul(a.im, b.im)?;
    let ri = tape.mul(a.re, b.im)?;
    let ir = tape.mul(a.im, b.re)?;
    Ok(CVar::new(tape.sub(rr, ii)?, tape.add(ri, ir)?))
}

/// `a · conj(b) / |b|²`.
pub fn complex_div(tape: &mut Tape, a: CVar, b: CVar) -> Result<CVar> {
    let br2 = tape.square(b.re);
    let bi2 = tape.square(b.im);
    let norm = tape.add(br2, bi2)?;
    let neg_im = tape.neg(b.im);
    let num = complex_mul(tape, a, CVar::new(b.re, neg_im))?;
    Ok(CVar::new(tape.div(num.re, norm)?, tape.div(num.im, norm)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn leaf(tape: &mut Tape, re: f64, im: f64) -> CVar {
        CVar::new(tape.scalar(re), tape.scalar(im))
    }

    fn get(tape: &Tape, z: CVar) -> (f64, f64) {
        (tape.value(z.re)[[0, 0]], tape.value(z.im)[[0, 0]])
    }

    #[test]
    fn multiplication_examples() {
        let mut tape = Tape::new();
        let one = leaf(&mut tape, 1.0, 0.0);
        let z = leaf(&mut tape, -0.3, 2.5);
        let p = complex_mul(&mut tape, one, z).unwrap();
        assert_eq!(get(&tape, p), (-0.3, 2.5));

        let i = leaf(&mut tape, 0.0, 1.0);
        let p = complex_mul(&mut tape, i, i).unwrap();
        assert_eq!(get(&tape, p), (-1.0, 0.0));

        let a = leaf(&mut tape, 2.0, 3.0);
        let b = leaf(&mut tape, 4.0, -1.0);
        let p = complex_mul(&mut tape, a, b).unwrap();
        assert_eq!(get(&tape, p), (11.0, 10.0));
    }

    #[test]
    fn division_inverts_multiplication() {
        let mut tape = Tape::new();
        let a = leaf(&mut tape, 11.0, 10.0);
        let b = leaf(&mut tape, 4.0, -1.0);
        let q = complex_div(&mut tape, a, b).unwrap();
        let (re, im) = get(&tape, q);
        assert!((re - 2.0).abs() < 1e-15 && (im - 3.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_of_product_real_part() {
        // d/d(a.re) Re(a b) = b.re, d/d(a.im) Re(a b) = -b.im
        let mut tape = Tape::new();
        let a = CVar::new(tape.leaf(Tensor::from_elem((1, 1), 2.0)), tape.scalar(3.0));
        let b = leaf(&mut tape, 4.0, -1.0);
        let p = complex_mul(&mut tape, a, b).unwrap();
        let g = tape.backward(p.re);
        assert_eq!(g.get(a.re).unwrap()[[0, 0]], 4.0);
        assert_eq!(g.get(a.im).unwrap()[[0, 0]], 1.0);
    }
}
