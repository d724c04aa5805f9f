use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    /// Unit-norm dominant generalized eigenvector.
    pub vector: DVector<Complex64>,
    /// Its Rayleigh quotient `vᴴAv / vᴴBv`.
    pub quotient: f64,
    pub iterations: usize,
}

pub fn rayleigh_quotient(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, v: &DVector<Complex64>) -> f64 {
    let num = (v.adjoint() * a * v)[(0, 0)].re;
    let den = (v.adjoint() * b * v)[(0, 0)].re;
    num / den
}

/// Power iteration on `B⁻¹A`, stopping when successive Rayleigh quotients
/// differ by less than `TOLERANCE` (relative).
pub fn dominant_generalized_eigvec(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<EigenSolution> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || b.shape() != (n, n) {
        return Err(Error::Oracle(format!(
            "incompatible shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let lu = b.clone().lu();
    let mut v = DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut q = rayleigh_quotient(a, b, &v);
    for it in 1..=MAX_ITERATIONS {
        let w = lu
            .solve(&(a * &v))
            .ok_or_else(|| Error::Oracle("B is singular".into()))?;
        let norm = w.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Oracle("power iteration collapsed to zero".into()));
        }
        v = w / Complex64::new(norm, 0.0);
        let q_next = rayleigh_quotient(a, b, &v);
        if (q_next - q).abs() <= TOLERANCE * q_next.abs().max(f64::MIN_POSITIVE) {
            return Ok(EigenSolution {
                vector: v,
                quotient: q_next,
                iterations: it,
            });
        }
        q = q_next;
    }
    Err(Error::Oracle(format!(
        "power iteration did not converge in {MAX_ITERATIONS} iterations"
    )))
}
