//! The four-term recurrence for the expansion coefficients of the extended
//! Heine-Stieltjes polynomials, its banded matrix form `F b = f b`, and the
//! assembly of monic polynomials together with their Van Vleck constants.
//!
//! Coefficients are kept in a scaled variable `z = x / 2^e` so that degree-200
//! polynomials whose zeros sit far out on the negative axis do not overflow:
//! the physical coefficients are `b_j = c_j · 2^(e (k - j))`. For moderate
//! degrees `e = 0` and `c_j = b_j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::model::SpectralParams;
use crate::tolerances::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecurrenceError {
    #[error("degree {k} exceeds the configured ceiling {max}")]
    DegreeTooLarge { k: usize, max: usize },
    #[error("gamma = 0: only the Jacobi polynomial exists, use the jacobi module")]
    JacobiLimit,
    #[error("eigenvalue {re} + {im}i of F is not real (tolerance {tol:e})")]
    ComplexEigenvalue { re: f64, im: f64, tol: f64 },
    #[error("eigenvalue iteration for F did not converge")]
    EigenNoConvergence,
    #[error("eigenvector for f = {f} could not be normalised to a monic polynomial")]
    EigenvectorFailure { f: f64 },
    #[error("recurrence row {row} residual {residual:e} exceeds {tol:e} (f = {f})")]
    RecurrenceResidual { f: f64, row: usize, residual: f64, tol: f64 },
}

/// The `(k+1)×(k+1)` matrix of the four-term recurrence, stored by band.
///
/// Nonzero entries: `F[j][j-1] = γ(k-j+1)`, `F[j][j] = -j(α+β+j-1)`,
/// `F[j][j+1] = (j+1)(β-α+γ)`, `F[j][j+2] = (j+2)(j+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FMatrix {
    pub k: usize,
    pub params: SpectralParams,
    /// `sub[j-1] = F[j][j-1]`, `j = 1..=k`.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    /// `sup1[j] = F[j][j+1]`.
    pub sup1: Vec<f64>,
    /// `sup2[j] = F[j][j+2]`.
    pub sup2: Vec<f64>,
}

impl FMatrix {
    pub fn dim(&self) -> usize {
        self.k + 1
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if j + 1 == i {
            self.sub[j]
        } else if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.sup1[i]
        } else if j == i + 2 {
            self.sup2[i]
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.to_dense_scaled(1.0)
    }

    /// Matrix of the recurrence in the variable `z = x / s`:
    /// entry `(i, j)` is multiplied by `s^(i-j)`.
    pub fn to_dense_scaled(&self, s: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i >= 1 {
                m[(i, i - 1)] = self.sub[i - 1] * s;
            }
            if i + 1 < n {
                m[(i, i + 1)] = self.sup1[i] / s;
            }
            if i + 2 < n {
                m[(i, i + 2)] = self.sup2[i] / (s * s);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Infinity norm of the scaled matrix.
    fn norm_inf_scaled(&self, s: f64) -> f64 {
        (0..self.dim())
            .map(|i| {
                let mut r = self.diag[i].abs();
                if i >= 1 {
                    r += (self.sub[i - 1] * s).abs();
                }
                if i + 1 < self.dim() {
                    r += (self.sup1[i] / s).abs();
                }
                if i + 2 < self.dim() {
                    r += (self.sup2[i] / (s * s)).abs();
                }
                r
            })
            .fold(0.0, f64::max)
    }

    /// Row residuals `((F - f) c)_j` in the scaled variable.
    pub fn row_residuals_scaled(&self, c: &[f64], f: f64, s: f64) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                let mut r = (self.diag[j] - f) * c[j];
                if j >= 1 {
                    r += self.sub[j - 1] * s * c[j - 1];
                }
                if j + 1 < n {
                    r += self.sup1[j] / s * c[j + 1];
                }
                if j + 2 < n {
                    r += self.sup2[j] / (s * s) * c[j + 2];
                }
                r
            })
            .collect()
    }
}

/// Builds the recurrence matrix for degree `k`.
pub fn build_f_matrix(k: usize, s: &SpectralParams) -> FMatrix {
    let (a, b, g) = (s.alpha, s.beta, s.gamma);
    let kf = k as f64;
    let diag = (0..=k)
        .map(|j| {
            let j = j as f64;
            -j * (a + b + j - 1.0)
        })
        .collect();
    let sub = (1..=k).map(|j| g * (kf - j as f64 + 1.0)).collect();
    let sup1 = (0..k).map(|j| (j as f64 + 1.0) * (b - a + g)).collect();
    let sup2 = (0..k.saturating_sub(1))
        .map(|j| (j as f64 + 2.0) * (j as f64 + 1.0))
        .collect();
    FMatrix { k, params: *s, sub, diag, sup1, sup2 }
}

/// One eigenpair of `F`, with the eigenvector normalised to a monic polynomial
/// in the scaled variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VanVleckPair {
    pub f: f64,
    /// Monic coefficients `c_0..c_k` of `y(2^e z) / 2^(e k)`.
    pub coeffs: Vec<f64>,
    pub scale_exp: i32,
}

impl VanVleckPair {
    /// Physical `b_{k-1} = -Σ x_i`.
    pub fn sub_leading(&self) -> f64 {
        let k = self.coeffs.len() - 1;
        if k == 0 {
            0.0
        } else {
            self.coeffs[k - 1] * 2f64.powi(self.scale_exp)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanVleckSpectrum {
    /// Sorted by descending `b_{k-1}` (ground state first for `t > 0`).
    pub pairs: Vec<VanVleckPair>,
    /// Index pairs whose `f` values agree within the degeneracy tolerance.
    pub degeneracies: Vec<(usize, usize)>,
}

/// Solves `F b = f b` for all `k + 1` eigenpairs.
pub fn van_vleck_spectrum(
    fm: &FMatrix,
    tol: &Tolerances,
) -> Result<VanVleckSpectrum, RecurrenceError> {
    let k = fm.k;
    if k > tol.max_degree {
        return Err(RecurrenceError::DegreeTooLarge { k, max: tol.max_degree });
    }
    if k == 0 {
        return Ok(VanVleckSpectrum {
            pairs: vec![VanVleckPair { f: 0.0, coeffs: vec![1.0], scale_exp: 0 }],
            degeneracies: Vec::new(),
        });
    }
    if fm.params.gamma == 0.0 {
        return Err(RecurrenceError::JacobiLimit);
    }

    let dense = fm.to_dense();
    let norm = fm.norm_inf_scaled(1.0);
    let eig = linalg::eigenvalues(&dense, tol.max_iters).ok_or(RecurrenceError::EigenNoConvergence)?;
    let mut fs = Vec::with_capacity(eig.len());
    for z in &eig {
        if z.im.abs() > tol.reality_tol * norm {
            return Err(RecurrenceError::ComplexEigenvalue { re: z.re, im: z.im, tol: tol.reality_tol });
        }
        fs.push(z.re);
    }

    let mut pairs = fs
        .iter()
        .map(|&f| monic_eigenvector(fm, f))
        .collect::<Result<Vec<_>, _>>()?;
    pairs.sort_by(|p, q| q.sub_leading().total_cmp(&p.sub_leading()));

    let mut degeneracies = Vec::new();
    let mut by_f: Vec<(usize, f64)> = pairs.iter().map(|p| p.f).enumerate().collect();
    by_f.sort_by(|a, b| a.1.total_cmp(&b.1));
    for w in by_f.windows(2) {
        if (w[1].1 - w[0].1).abs() <= tol.degeneracy_tol * norm {
            degeneracies.push((w[0].0.min(w[1].0), w[0].0.max(w[1].0)));
        }
    }
    Ok(VanVleckSpectrum { pairs, degeneracies })
}

/// Binary exponent for the coefficient scaling of the state with constant `f`.
///
/// Row `k` of the recurrence fixes `Σx = -(f + k(α+β+k-1))/γ`; the mean root
/// magnitude then bounds the growth of the monic coefficients.
fn scale_exponent(fm: &FMatrix, f: f64) -> i32 {
    let k = fm.k as f64;
    let p = &fm.params;
    let root_sum = -(f + k * (p.charge_sum() + k - 1.0)) / p.gamma;
    let mean = ((root_sum.abs() + k) / k).max(1.0);
    if k * mean.log2() + k < 900.0 {
        0
    } else {
        mean.log2().round() as i32
    }
}

/// Monic eigenvector for a (numerically) exact eigenvalue `f`.
///
/// Inverse iteration gives the direction accurately relative to its largest
/// component. The top coefficients, which can be many orders of magnitude
/// smaller, are then rebuilt by running the recurrence downward from
/// `c_k = 1` and spliced onto the inverse-iteration vector.
fn monic_eigenvector(fm: &FMatrix, f: f64) -> Result<VanVleckPair, RecurrenceError> {
    let k = fm.k;
    let n = k + 1;
    let scale_exp = scale_exponent(fm, f);
    let s = 2f64.powi(scale_exp);

    let mut a = fm.to_dense_scaled(s);
    for i in 0..n {
        a[(i, i)] -= f;
    }
    let mut v = vec![1.0; n];
    for _ in 0..3 {
        v = linalg::solve_hessenberg(&a, &v);
        let m = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if !m.is_finite() || m == 0.0 {
            return Err(RecurrenceError::EigenvectorFailure { f });
        }
        v.iter_mut().for_each(|x| *x /= m);
    }

    const RELIABLE: f64 = 1e-3;
    let coeffs = if v[k].abs() >= RELIABLE {
        let top = v[k];
        v.iter().map(|x| x / top).collect::<Vec<_>>()
    } else {
        let p = (0..n).rev().find(|&j| v[j].abs() >= RELIABLE).unwrap_or(0);
        let mut c = vec![0.0; n];
        c[k] = 1.0;
        // row j determines c[j-1]
        for j in (p + 1..=k).rev() {
            let mut acc = (f - fm.diag[j]) * c[j];
            if j + 1 <= k {
                acc -= fm.sup1[j] / s * c[j + 1];
            }
            if j + 2 <= k {
                acc -= fm.sup2[j] / (s * s) * c[j + 2];
            }
            c[j - 1] = acc / (fm.sub[j - 1] * s);
        }
        let ratio = c[p] / v[p];
        for j in 0..p {
            c[j] = v[j] * ratio;
        }
        c
    };
    if coeffs.iter().any(|x| !x.is_finite()) {
        return Err(RecurrenceError::EigenvectorFailure { f });
    }
    let (coeffs, f) = refine_pair(fm, coeffs, f, s);
    Ok(VanVleckPair { f, coeffs, scale_exp })
}

/// Newton steps on the bordered system `(F - f) c = 0`, `c_k = 1`.
///
/// The unknowns are `(c_0..c_{k-1}, f)`; the Jacobian is `F - f` with its last
/// column replaced by `-c`, which is still upper Hessenberg. A step is kept
/// only if it lowers the absolute residual; iteration stops once the residual
/// relative to `‖F‖·max|c|` is at rounding level.
fn refine_pair(fm: &FMatrix, mut c: Vec<f64>, mut f: f64, s: f64) -> (Vec<f64>, f64) {
    let n = fm.dim();
    let norm = fm.norm_inf_scaled(s).max(f.abs()).max(1.0);
    let resid = |c: &[f64], f: f64| {
        fm.row_residuals_scaled(c, f, s)
            .iter()
            .fold(0.0f64, |a, r| a.max(r.abs()))
    };
    let cmax = |c: &[f64]| c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut best = resid(&c, f);
    for _ in 0..12 {
        if best <= 8.0 * f64::EPSILON * norm * cmax(&c) {
            break;
        }
        let mut jac = fm.to_dense_scaled(s);
        for i in 0..n {
            jac[(i, i)] -= f;
            jac[(i, n - 1)] = -c[i];
        }
        let r: Vec<f64> = fm.row_residuals_scaled(&c, f, s).iter().map(|x| -x).collect();
        let d = linalg::solve_hessenberg(&jac, &r);
        if d.iter().any(|x| !x.is_finite()) {
            break;
        }
        let mut c2 = c.clone();
        for i in 0..n - 1 {
            c2[i] += d[i];
        }
        let f2 = f + d[n - 1];
        let r2 = resid(&c2, f2);
        if r2 < best {
            best = r2;
            c = c2;
            f = f2;
        } else {
            break;
        }
    }
    (c, f)
}

/// A monic extended Heine-Stieltjes polynomial with its Van Vleck constant.
///
/// The Van Vleck polynomial is `V(x) = -γ k x + f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ESPolynomial {
    /// Monic coefficients in the scaled variable (see the module docs).
    pub coeffs: Vec<f64>,
    pub scale_exp: i32,
    pub f: f64,
    /// 1-based position in the descending-`b_{k-1}` ordering.
    pub zeta: usize,
    pub params: SpectralParams,
}

impl ESPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn scale(&self) -> f64 {
        2f64.powi(self.scale_exp)
    }

    /// Physical coefficient `b_j`; may overflow to infinity for extreme degrees.
    pub fn coeff(&self, j: usize) -> f64 {
        let k = self.degree();
        self.coeffs[j] * 2f64.powi(self.scale_exp * (k - j) as i32)
    }

    /// Physical coefficients, or `None` if any of them is not representable.
    pub fn unscaled_coeffs(&self) -> Option<Vec<f64>> {
        let b: Vec<f64> = (0..=self.degree()).map(|j| self.coeff(j)).collect();
        b.iter().all(|x| x.is_finite()).then_some(b)
    }

    /// `Σ x_i = -b_{k-1}`.
    pub fn root_sum(&self) -> f64 {
        let k = self.degree();
        if k == 0 {
            0.0
        } else {
            -self.coeffs[k - 1] * self.scale()
        }
    }

    /// `V(x) = -γ k x + f`.
    pub fn van_vleck(&self, x: f64) -> f64 {
        -self.params.gamma * self.degree() as f64 * x + self.f
    }

    /// Largest recurrence row residual relative to `‖F‖ · max|c|`.
    pub fn recurrence_residual(&self) -> f64 {
        let fm = build_f_matrix(self.degree(), &self.params);
        let s = self.scale();
        let res = fm.row_residuals_scaled(&self.coeffs, self.f, s);
        let cmax = self.coeffs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let norm = fm.norm_inf_scaled(s).max(1.0);
        res.iter().fold(0.0f64, |a, r| a.max(r.abs())) / (norm * cmax)
    }
}

/// Packages eigenpairs as polynomials, checking every recurrence row.
pub fn assemble_states(
    pairs: &[VanVleckPair],
    s: &SpectralParams,
    tol: &Tolerances,
) -> Result<Vec<ESPolynomial>, RecurrenceError> {
    let mut out = Vec::with_capacity(pairs.len());
    for (idx, pair) in pairs.iter().enumerate() {
        let k = pair.coeffs.len() - 1;
        let fm = build_f_matrix(k, s);
        let sc = 2f64.powi(pair.scale_exp);
        let res = fm.row_residuals_scaled(&pair.coeffs, pair.f, sc);
        let cmax = pair.coeffs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let bound = tol.rec_tol * fm.norm_inf_scaled(sc).max(1.0) * cmax;
        if let Some((row, r)) = res.iter().enumerate().find(|(_, r)| r.abs() > bound) {
            return Err(RecurrenceError::RecurrenceResidual {
                f: pair.f,
                row,
                residual: r.abs(),
                tol: bound,
            });
        }
        out.push(ESPolynomial {
            coeffs: pair.coeffs.clone(),
            scale_exp: pair.scale_exp,
            f: pair.f,
            zeta: idx + 1,
            params: *s,
        });
    }
    Ok(out)
}

/// Convenience: matrix, eigenpairs and assembly in one call.
pub fn polynomials(
    k: usize,
    s: &SpectralParams,
    tol: &Tolerances,
) -> Result<(Vec<ESPolynomial>, Vec<(usize, usize)>), RecurrenceError> {
    let fm = build_f_matrix(k, s);
    let spec = van_vleck_spectrum(&fm, tol)?;
    let polys = assemble_states(&spec.pairs, s, tol)?;
    Ok((polys, spec.degeneracies))
}
