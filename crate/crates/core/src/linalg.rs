//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Schur};
use num_complex::Complex64;

const RADIX: f64 = 2.0;

/// Parlett-Reinsch balancing with power-of-two scalings.
///
/// Returns `(B, d)` with `B = D⁻¹ A D`, `D = diag(d)`; eigenvalues are unchanged.
pub(crate) fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] *= ginv;
                }
                for j in 0..n {
                    b[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
    (b, d)
}

/// All eigenvalues of a general real matrix (balanced, then real Schur form).
pub(crate) fn eigenvalues(a: &DMatrix<f64>, max_iters: usize) -> Option<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    if n == 1 {
        return Some(vec![Complex64::new(a[(0, 0)], 0.0)]);
    }
    let (b, _) = balance(a);
    let schur = Schur::try_new(b, f64::EPSILON, max_iters.max(30) * n)?;
    let ev = schur.complex_eigenvalues();
    Some(ev.iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Solves `A x = rhs` for an upper Hessenberg `A` by Gaussian elimination with
/// partial pivoting between adjacent rows. Zero pivots are replaced by
/// `eps·‖A‖`, which is what inverse iteration wants.
pub(crate) fn solve_hessenberg(a: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = rhs.to_vec();
    let norm = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    for j in 0..n.saturating_sub(1) {
        if m[(j + 1, j)].abs() > m[(j, j)].abs() {
            m.swap_rows(j, j + 1);
            x.swap(j, j + 1);
        }
        if m[(j, j)] == 0.0 {
            m[(j, j)] = tiny;
        }
        let l = m[(j + 1, j)] / m[(j, j)];
        if l != 0.0 {
            for c in j..n {
                let v = m[(j, c)];
                m[(j + 1, c)] -= l * v;
            }
            x[j + 1] -= l * x[j];
        }
    }
    for i in (0..n).rev() {
        if m[(i, i)] == 0.0 {
            m[(i, i)] = tiny;
        }
        let mut s = x[i];
        for c in i + 1..n {
            s -= m[(i, c)] * x[c];
        }
        x[i] = s / m[(i, i)];
    }
    x
}

/// Solves `A x = b` for symmetric positive definite `A`; `None` if the
/// factorisation fails.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let chol = Cholesky::new(a)?;
    let x = chol.solve(&DVector::from_column_slice(b));
    Some(x.iter().copied().collect())
}

/// Whether a symmetric matrix admits a Cholesky factorisation.
pub(crate) fn is_positive_definite(a: DMatrix<f64>) -> bool {
    Cholesky::new(a).is_some()
}

/// In-place Cholesky solve of `A x = b`, `A` row-major `n × n`. Only the
/// lower triangle is read and it is overwritten by the factor; `b` becomes
/// `x`. Returns false if `A` is not numerically positive definite.
pub(crate) fn cholesky_solve_in_place(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    for j in 0..n {
        let rj = &a[j * n..j * n + j];
        let d = a[j * n + j] - dot(rj, rj);
        if !(d > 0.0 && d.is_finite()) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let (top, bottom) = a.split_at_mut(i * n);
            let rj = &top[j * n..j * n + j];
            let ri = &mut bottom[..=j];
            ri[j] = (ri[j] - dot(&ri[..j], rj)) / d;
        }
    }
    for i in 0..n {
        b[i] = (b[i] - dot(&a[i * n..i * n + i], &b[..i])) / a[i * n + i];
    }
    // back substitution by columns keeps the access row-contiguous
    for i in (0..n).rev() {
        b[i] /= a[i * n + i];
        let bi = b[i];
        for (bp, l) in b[..i].iter_mut().zip(&a[i * n..i * n + i]) {
            *bp -= l * bi;
        }
    }
    true
}

/// Solves a general square system with LU and partial pivoting.
#[cfg(test)]
pub(crate) fn solve_lu(a: DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let x = a.lu().solve(&DVector::from_column_slice(b))?;
    Some(x.iter().copied().collect())
}
