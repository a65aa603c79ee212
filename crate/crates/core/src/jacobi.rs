//! Monic Jacobi polynomials `P_k^(a,b)`, the `γ = 0` member of the family.
//!
//! The exponent `a` belongs to the endpoint `x = +1`, so the polynomial for
//! charges `(α, β)` is `P_k^(α-1, β-1)`.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::polyroots::horner;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobiError {
    #[error("Jacobi parameters must exceed -1, got a = {a}, b = {b}")]
    ParamOutOfRange { a: f64, b: f64 },
    #[error("eigenvalue iteration for the Jacobi matrix did not converge")]
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiPoly {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    /// Monic coefficients, constant term first.
    pub coeffs: Vec<f64>,
}

/// Coefficients of the monic three-term recurrence
/// `p_{n+1} = (x - A_n) p_n - B_n p_{n-1}`.
fn recurrence_coeffs(n: usize, a: f64, b: f64) -> (f64, f64) {
    let nf = n as f64;
    let s = 2.0 * nf + a + b;
    let an = if n == 0 {
        (b - a) / (a + b + 2.0)
    } else {
        (b * b - a * a) / (s * (s + 2.0))
    };
    let bn = match n {
        0 => 0.0,
        // the general formula is 0/0 when a + b = -1
        1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b)),
        _ => 4.0 * nf * (nf + a) * (nf + b) * (nf + a + b) / (s * s * (s + 1.0) * (s - 1.0)),
    };
    (an, bn)
}

pub fn jacobi_monic(k: usize, a: f64, b: f64) -> Result<JacobiPoly, JacobiError> {
    if !(a > -1.0 && b > -1.0) || !a.is_finite() || !b.is_finite() {
        return Err(JacobiError::ParamOutOfRange { a, b });
    }
    let mut prev: Vec<f64> = Vec::new();
    let mut cur = vec![1.0];
    for n in 0..k {
        let (an, bn) = recurrence_coeffs(n, a, b);
        let mut next = vec![0.0; cur.len() + 1];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += c;
            next[j] -= an * c;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= bn * c;
        }
        prev = cur;
        cur = next;
    }
    Ok(JacobiPoly { k, a, b, coeffs: cur })
}

impl JacobiPoly {
    /// Charges `(α, β) = (a + 1, b + 1)`.
    pub fn charges(&self) -> (f64, f64) {
        (self.a + 1.0, self.b + 1.0)
    }

    /// Zeros, ascending, from the symmetric Jacobi matrix.
    pub fn zeros(&self) -> Result<Vec<f64>, JacobiError> {
        let k = self.k;
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut m = DMatrix::zeros(k, k);
        for n in 0..k {
            let (an, _) = recurrence_coeffs(n, self.a, self.b);
            m[(n, n)] = an;
            if n + 1 < k {
                let (_, bn) = recurrence_coeffs(n + 1, self.a, self.b);
                m[(n, n + 1)] = bn.sqrt();
                m[(n + 1, n)] = bn.sqrt();
            }
        }
        let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or(JacobiError::NoConvergence)?;
        let mut z: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        z.sort_by(f64::total_cmp);
        Ok(z)
    }

    /// The Van Vleck constant of the `γ = 0` equation, `-k(α+β+k-1)`.
    pub fn van_vleck_constant(&self) -> f64 {
        let (al, be) = self.charges();
        let k = self.k as f64;
        -k * (al + be + k - 1.0)
    }
}

/// `(x²-1)y'' + (α(x+1) + β(x-1))y' - k(k+α+β-1)y`.
pub fn jacobi_ode_residual(p: &JacobiPoly, x: f64) -> f64 {
    let (al, be) = p.charges();
    let k = p.k as f64;
    let (y, d1, d2) = horner(&p.coeffs, x);
    (x * x - 1.0) * d2 + (al * (x + 1.0) + be * (x - 1.0)) * d1 - k * (k + al + be - 1.0) * y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let p = jacobi_monic(1, -0.5, -0.5).unwrap();
        assert_eq!(p.coeffs, vec![0.0, 1.0]);
        assert_eq!(p.zeros().unwrap(), vec![0.0]);

        let p = jacobi_monic(2, 0.0, 0.0).unwrap();
        assert!((p.coeffs[0] + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.coeffs[1], 0.0);
        let z = p.zeros().unwrap();
        assert!((z[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15 && (z[0] + z[1]).abs() < 1e-15);

        assert_eq!(jacobi_monic(0, 2.0, 0.3).unwrap().coeffs, vec![1.0]);
    }

    #[test]
    fn chebyshev_case_zeros() {
        // a = b = -1/2 gives Chebyshev polynomials of the first kind
        let p = jacobi_monic(2, -0.5, -0.5).unwrap();
        let z = p.zeros().unwrap();
        let r = 0.5f64.sqrt();
        assert!((z[0] + r).abs() < 1e-15 && (z[1] - r).abs() < 1e-15);
    }

    #[test]
    fn ode_residuals() {
        let p = jacobi_monic(2, 0.0, 0.0).unwrap();
        assert!(jacobi_ode_residual(&p, 0.5).abs() < 1e-12);
        let p = jacobi_monic(0, 0.3, 1.2).unwrap();
        assert_eq!(jacobi_ode_residual(&p, 0.7), 0.0);
        let p = jacobi_monic(1, -0.5, -0.5).unwrap();
        assert!(jacobi_ode_residual(&p, 2.0).abs() < 1e-12);
        // a + b = -1 exercises the special first step
        let p = jacobi_monic(6, -0.3, -0.7).unwrap();
        for x in [-0.9, -0.2, 0.4, 3.0] {
            assert!(jacobi_ode_residual(&p, x).abs() < 1e-11);
        }
    }

    #[test]
    fn zeros_are_roots_of_coefficients() {
        for (k, a, b) in [(5usize, 0.5, -0.5), (9, 1.3, 0.2), (12, -0.8, 2.0)] {
            let p = jacobi_monic(k, a, b).unwrap();
            let z = p.zeros().unwrap();
            assert_eq!(z.len(), k);
            for x in z {
                assert!(x > -1.0 && x < 1.0);
                let (y, d1, _) = horner(&p.coeffs, x);
                assert!((y / d1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_range() {
        assert!(jacobi_monic(2, -1.0, 0.0).is_err());
        assert!(jacobi_monic(2, 0.0, -1.5).is_err());
        assert!(jacobi_monic(2, f64::NAN, 0.0).is_err());
    }
}
