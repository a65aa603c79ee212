//! Polynomial evaluation, root extraction and Bethe-ansatz residuals.
//!
//! Roots are found as the unique stationary point of the electrostatic
//! energy inside one occupation cell `(k1, k2)`, by Newton on the Bethe
//! equations. The states arrive sorted by descending `b_{k-1}`, which puts
//! `k1 = k + 1 - ζ`; that cell is tried first from a generic seed and is
//! accepted only if the root sum reproduces `-b_{k-1}`. Otherwise, up to
//! degree 80, companion-matrix eigenvalues polished by Aberth-Ehrlich and
//! Newton seed a search over cells; above that the search uses generic seeds.
//!
//! The monomial coefficients of high-degree polynomials determine their zeros
//! very poorly: at degree 30 a relative coefficient perturbation of `1e-16`
//! already moves some zeros by `1e-2`. The root sum `-b_{k-1}` stays accurate
//! and selects the correct cell.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::model::SpectralParams;
use crate::recurrence::ESPolynomial;
use crate::tolerances::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("polynomial is not monic (leading coefficient {lead})")]
    NotMonic { lead: f64 },
    #[error("root {re} + {im}i is not real")]
    NonRealRoot { re: f64, im: f64 },
    #[error("root finding did not converge ({stage})")]
    NoConvergence { stage: &'static str },
    #[error("root {root} lies within {tol:e} of a pole")]
    RootOnSingularity { root: f64, tol: f64 },
    #[error("poles {a} and {b} coincide")]
    PoleCollision { a: f64, b: f64 },
    #[error("roots {a} and {b} are not simple")]
    NotSimple { a: f64, b: f64 },
}

/// Real zeros of one polynomial, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<f64>,
    pub max_bae_residual: f64,
    /// `max_i |r_i| / max(1, m_i)` with `m_i` the sum of the magnitudes of the
    /// terms in equation `i`; this is what convergence is judged on.
    pub scaled_bae_residual: f64,
    /// Number of roots in `(-∞, -1)` and in `(-1, 1)`.
    pub occupation: (usize, usize),
    /// `max_i |y(x_i)| / Σ_j |b_j||x_i|^j`, the backward error of each root
    /// with respect to the stored coefficients.
    pub poly_backward_error: f64,
}

impl RootSet {
    pub fn sum(&self) -> f64 {
        self.roots.iter().sum()
    }
}

/// Value, first and second derivative by nested multiplication.
pub fn eval_with_derivatives(poly: &ESPolynomial, x: f64) -> (f64, f64, f64) {
    let s = poly.scale();
    let k = poly.degree() as i32;
    let (y, d1, d2) = horner(&poly.coeffs, x / s);
    (y * s.powi(k), d1 * s.powi(k - 1), d2 * s.powi(k - 2))
}

/// `(p, p', p'')` for coefficients in ascending order.
pub fn horner(c: &[f64], x: f64) -> (f64, f64, f64) {
    let mut p = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for &cj in c.iter().rev() {
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + p;
        p = p * x + cj;
    }
    (p, d1, d2)
}

fn horner_complex(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &cj in c.iter().rev() {
        d = d * z + p;
        p = p * z + cj;
    }
    (p, d)
}

/// Eigenvalues of the companion matrix of a monic polynomial.
fn companion_seeds(c: &[f64], max_iters: usize) -> Option<Vec<Complex64>> {
    let k = c.len() - 1;
    let mut m = nalgebra::DMatrix::zeros(k, k);
    for i in 1..k {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..k {
        m[(i, k - 1)] = -c[i];
    }
    linalg::eigenvalues(&m, max_iters)
}

/// Simultaneous Aberth-Ehrlich refinement; returns whether all corrections
/// fell below `4 eps |z|`.
fn aberth(c: &[f64], z: &mut [Complex64], max_iters: usize) -> bool {
    let n = z.len();
    for _ in 0..max_iters {
        let mut done = true;
        for i in 0..n {
            let (p, d) = horner_complex(c, z[i]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w = p / d;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += 1.0 / (z[i] - z[j]);
                }
            }
            let corr = w / (1.0 - w * s);
            if !corr.re.is_finite() || !corr.im.is_finite() {
                continue;
            }
            z[i] -= corr;
            if corr.norm() > 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done = false;
            }
        }
        if done {
            return true;
        }
    }
    false
}

/// Newton polish of one complex root on the polynomial.
fn newton_polish(c: &[f64], mut z: Complex64, rel_tol: f64) -> Complex64 {
    for _ in 0..5 {
        let (p, d) = horner_complex(c, z);
        let step = p / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= rel_tol * z.norm().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    z
}

/// Roots of `poly`, ascending, each satisfying the Bethe equations of
/// `poly.params` to `tol.bae_tol`.
pub fn find_roots(poly: &ESPolynomial, tol: &Tolerances) -> Result<RootSet, RootError> {
    let k = poly.degree();
    let lead = poly.coeffs[k];
    if lead != 1.0 {
        return Err(RootError::NotMonic { lead });
    }
    if k == 0 {
        return Ok(RootSet {
            roots: Vec::new(),
            max_bae_residual: 0.0,
            scaled_bae_residual: 0.0,
            occupation: (0, 0),
            poly_backward_error: 0.0,
        });
    }
    let target = poly.root_sum();
    let matches = |x: &[f64]| {
        let sum: f64 = x.iter().sum();
        let scale = x.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        (sum - target).abs() / scale <= SUM_MATCH
    };

    // The ordering by descending b_{k-1} places the state with k1 = k first.
    let guess = (1..=k + 1).contains(&poly.zeta).then(|| k + 1 - poly.zeta);
    if let Some(k1) = guess {
        if let Ok(x) = solve_cell(generic_seed(k, k1, target), k1, &poly.params, tol) {
            if matches(&x) {
                return finish(poly, x, k1, tol);
            }
        }
    }

    if k <= COMPANION_MAX_DEGREE {
        let s = poly.scale();
        let c = &poly.coeffs;
        let mut z = companion_seeds(c, tol.max_iters)
            .ok_or(RootError::NoConvergence { stage: "companion eigenvalues" })?;
        aberth(c, &mut z, tol.max_iters);
        for zi in z.iter_mut() {
            *zi = newton_polish(c, *zi, tol.root_tol);
        }
        let mut seeds: Vec<f64> = z.iter().map(|w| w.re * s).collect();
        seeds.sort_by(f64::total_cmp);
        let k1_seed = seeds.iter().filter(|&&x| x < -1.0).count();
        for k1 in by_distance(k, k1_seed) {
            if Some(k1) == guess && k1 != k1_seed {
                continue;
            }
            if let Ok(x) = solve_cell(cell_seed(&seeds, k1), k1, &poly.params, tol) {
                if matches(&x) {
                    return finish(poly, x, k1, tol);
                }
            }
        }
        let worst = z
            .iter()
            .copied()
            .max_by(|a, b| (a.im.abs() / a.norm().max(1.0)).total_cmp(&(b.im.abs() / b.norm().max(1.0))));
        if let Some(w) = worst {
            if w.im.abs() / w.norm().max(1.0) > tol.reality_tol {
                return Err(RootError::NonRealRoot { re: w.re * s, im: w.im * s });
            }
        }
    } else {
        for k1 in by_distance(k, guess.unwrap_or(k / 2)) {
            if Some(k1) == guess {
                continue;
            }
            if let Ok(x) = solve_cell(generic_seed(k, k1, target), k1, &poly.params, tol) {
                if matches(&x) {
                    return finish(poly, x, k1, tol);
                }
            }
        }
    }
    Err(RootError::NoConvergence { stage: "occupation matching" })
}

/// Relative root-sum agreement required to accept a cell solution.
const SUM_MATCH: f64 = 1e-7;
/// Above this degree companion-matrix seeds are both costly and unreliable.
const COMPANION_MAX_DEGREE: usize = 80;

fn by_distance(k: usize, centre: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..=k).collect();
    order.sort_by_key(|&k1| (k1 as isize - centre as isize).abs());
    order
}

/// Seed for cell `k1`: middle charges at Chebyshev-like points, left charges
/// evenly spaced below `-1` with their sum matched to `target`.
fn generic_seed(k: usize, k1: usize, target: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(k);
    if k1 > 0 {
        let n = k1 as f64;
        let h = ((-target - n) / (n * (n + 1.0) / 2.0)).max(0.05);
        x.extend((0..k1).map(|i| -1.0 - h * (k1 - i) as f64));
    }
    x.extend(chebyshev_points(k - k1));
    x
}

fn finish(poly: &ESPolynomial, roots: Vec<f64>, k1: usize, tol: &Tolerances) -> Result<RootSet, RootError> {
    let k = roots.len();
    for &x in &roots {
        if (x - 1.0).abs() <= tol.singular_tol || (x + 1.0).abs() <= tol.singular_tol {
            return Err(RootError::RootOnSingularity { root: x, tol: tol.singular_tol });
        }
    }
    let spread = (roots[k - 1] - roots[0]).abs().max(1.0);
    for w in roots.windows(2) {
        if w[1] - w[0] <= tol.simplicity_tol * spread {
            return Err(RootError::NotSimple { a: w[0], b: w[1] });
        }
    }
    let res = bae_residual(&roots, &poly.params)?;
    let max_bae_residual = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let scaled_bae_residual = scaled_residual(&roots, &poly.params);
    if scaled_bae_residual > tol.bae_tol {
        return Err(RootError::NoConvergence { stage: "Bethe equations" });
    }
    let sc = poly.scale();
    let poly_backward_error = roots
        .iter()
        .map(|&x| {
            let z = x / sc;
            let (p, _, _) = horner(&poly.coeffs, z);
            let mag = poly.coeffs.iter().rev().fold(0.0, |acc, cj| acc * z.abs() + cj.abs());
            p.abs() / mag
        })
        .fold(0.0f64, f64::max);
    Ok(RootSet {
        roots,
        max_bae_residual,
        scaled_bae_residual,
        occupation: (k1, k - k1),
        poly_backward_error,
    })
}

/// A strictly ascending starting point inside cell `k1`, close to `seeds`
/// where the seeds allow it.
fn cell_seed(seeds: &[f64], k1: usize) -> Vec<f64> {
    let k = seeds.len();
    let k2 = k - k1;
    let mut x = Vec::with_capacity(k);
    // left cell: ascending, each below -1 with room to spare
    let mut left: Vec<f64> = seeds[..k1].to_vec();
    for (i, v) in left.iter_mut().enumerate() {
        let cap = -1.0 - 0.5 * (k1 - i) as f64 / (k1 as f64 + 1.0);
        if !(v.is_finite() && *v < cap) {
            *v = cap;
        }
    }
    for i in (0..k1.saturating_sub(1)).rev() {
        let room = 1e-3 * (1.0 + left[i + 1].abs());
        if left[i] > left[i + 1] - room {
            left[i] = left[i + 1] - room;
        }
    }
    x.extend(left);
    // middle cell: keep seeds that fit, otherwise Chebyshev-like points
    let mid = &seeds[k1..];
    let fits = mid.iter().all(|v| v.abs() < 1.0 - 1e-6)
        && mid.windows(2).all(|w| w[1] - w[0] > 1e-6 / (k2 as f64 + 1.0));
    if fits {
        x.extend_from_slice(mid);
    } else {
        x.extend(chebyshev_points(k2));
    }
    x
}

/// `k` ascending points strictly inside `(-1, 1)`.
pub(crate) fn chebyshev_points(k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| -((std::f64::consts::PI * (i as f64 + 0.5) / k as f64).cos()))
        .collect()
}

fn in_cell(x: &[f64], k1: usize) -> bool {
    let k = x.len();
    (0..k).all(|i| {
        let side = if i < k1 { x[i] < -1.0 } else { x[i] > -1.0 && x[i] < 1.0 };
        side && x[i].is_finite() && (i == 0 || x[i] > x[i - 1])
    })
}

/// Newton on the Bethe equations inside occupation cell `k1`.
///
/// The Jacobian equals `-2` times the Hessian of the electrostatic energy,
/// which is positive definite; steps are backtracked to stay in the cell
/// and to decrease either the energy or the residual.
pub(crate) fn solve_cell(
    mut x: Vec<f64>,
    k1: usize,
    p: &SpectralParams,
    tol: &Tolerances,
) -> Result<Vec<f64>, RootError> {
    let k = x.len();
    if !in_cell(&x, k1) {
        return Err(RootError::NoConvergence { stage: "cell seed" });
    }
    let mut cur = cell_state(&x, p);
    let mut small_steps = 0;
    let mut hbuf = vec![0.0; k * k];
    for _ in 0..tol.max_iters {
        let grad: Vec<f64> = cur.r.iter().map(|v| -0.5 * v).collect();
        cell_hessian_into(&x, p, &mut hbuf);
        let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
        if !linalg::cholesky_solve_in_place(&mut hbuf, k, &mut d) {
            return Err(RootError::NoConvergence { stage: "cell Newton (Hessian)" });
        }
        let slope: f64 = grad.iter().zip(&d).map(|(g, d)| g * d).sum();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            if in_cell(&trial, k1) {
                let st = cell_state(&trial, p);
                if st.energy <= cur.energy + 1e-4 * t * slope || st.rmax < cur.rmax {
                    accepted = Some((trial, st));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, st)) = accepted else {
            break;
        };
        let moved = x
            .iter()
            .zip(&trial)
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold(0.0f64, f64::max);
        x = trial;
        let improved = st.rmax < 0.5 * cur.rmax;
        // a full step from the quadratic regime leaves only rounding error
        let settled = t == 1.0 && cur.rmax < 1e-9 && st.rmax < 1e-5 * tol.bae_tol;
        cur = st;
        if settled {
            break;
        }
        if moved < 4.0 * f64::EPSILON || (!improved && cur.rmax < 1e-3 * tol.bae_tol) {
            small_steps += 1;
            if small_steps >= 2 {
                break;
            }
        }
    }
    if cur.rmax <= tol.bae_tol {
        Ok(x)
    } else {
        Err(RootError::NoConvergence { stage: "cell Newton" })
    }
}

/// Largest Bethe residual, each divided by `max(1, Σ|terms|)` of its equation.
pub fn scaled_residual(x: &[f64], p: &SpectralParams) -> f64 {
    let k = x.len();
    (0..k)
        .map(|i| {
            let a = p.alpha / (x[i] - 1.0);
            let b = p.beta / (x[i] + 1.0);
            let mut r = a + b + p.gamma;
            let mut m = a.abs() + b.abs() + p.gamma.abs();
            for j in 0..k {
                if j != i {
                    let t = 2.0 / (x[i] - x[j]);
                    r += t;
                    m += t.abs();
                }
            }
            r.abs() / m.max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Bethe residuals, their largest scaled value and the electrostatic energy
/// at one point, from a single pass over the pairs.
struct CellState {
    r: Vec<f64>,
    rmax: f64,
    energy: f64,
}

fn cell_state(x: &[f64], p: &SpectralParams) -> CellState {
    let k = x.len();
    let mut r = Vec::with_capacity(k);
    let mut m = Vec::with_capacity(k);
    let mut energy = 0.0;
    for &xi in x {
        let a = p.alpha / (xi - 1.0);
        let b = p.beta / (xi + 1.0);
        r.push(a + b + p.gamma);
        m.push(a.abs() + b.abs() + p.gamma.abs());
        energy -= 0.5 * p.gamma * xi + 0.5 * p.alpha * (xi - 1.0).abs().ln() + 0.5 * p.beta * (xi + 1.0).abs().ln();
    }
    for i in 0..k {
        // pair distances multiplied in blocks; one logarithm per block
        let mut prod = 1.0f64;
        for j in i + 1..k {
            let d = x[i] - x[j];
            let t = 2.0 / d;
            r[i] += t;
            r[j] -= t;
            m[i] += t.abs();
            m[j] += t.abs();
            prod *= d.abs();
            if !(1e-150..=1e150).contains(&prod) {
                energy -= prod.ln();
                prod = 1.0;
            }
        }
        energy -= prod.ln();
    }
    let rmax = r.iter().zip(&m).map(|(r, m)| r.abs() / m.max(1.0)).fold(0.0, f64::max);
    CellState { r, rmax, energy }
}

/// Lower triangle of the energy Hessian, row-major, into `h`.
fn cell_hessian_into(x: &[f64], p: &SpectralParams, h: &mut [f64]) {
    let k = x.len();
    for i in 0..k {
        let (a, b) = (x[i] - 1.0, x[i] + 1.0);
        h[i * k + i] = 0.5 * p.alpha / (a * a) + 0.5 * p.beta / (b * b);
    }
    for i in 0..k {
        for j in 0..i {
            let d = x[i] - x[j];
            let w = 1.0 / (d * d);
            h[i * k + j] = -w;
            h[i * k + i] += w;
            h[j * k + j] += w;
        }
    }
}

/// Bethe-equation residuals `α/(x_i-1) + β/(x_i+1) + γ + Σ_{j≠i} 2/(x_i-x_j)`.
pub fn bae_residual(roots: &[f64], s: &SpectralParams) -> Result<Vec<f64>, RootError> {
    generic_stieltjes_residual(roots, &[1.0, -1.0], &[s.alpha, s.beta], s.gamma)
}

/// `Σ_{j≠i} 2/(x_i-x_j) + Σ_μ q_μ/(x_i-a_μ) + field`.
pub fn generic_stieltjes_residual(
    roots: &[f64],
    poles: &[f64],
    charges: &[f64],
    field: f64,
) -> Result<Vec<f64>, RootError> {
    for (i, a) in poles.iter().enumerate() {
        for b in &poles[i + 1..] {
            if a == b {
                return Err(RootError::PoleCollision { a: *a, b: *b });
            }
        }
    }
    for &x in roots {
        for &a in poles {
            if x == a {
                return Err(RootError::RootOnSingularity { root: x, tol: 0.0 });
            }
        }
    }
    let k = roots.len();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let xi = roots[i];
        let mut r = field;
        for (a, q) in poles.iter().zip(charges) {
            r += q / (xi - a);
        }
        for j in 0..k {
            if j != i {
                if roots[j] == xi {
                    return Err(RootError::NotSimple { a: xi, b: xi });
                }
                r += 2.0 / (xi - roots[j]);
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Monic coefficients `b_0..b_k` of `Π (x - x_i)`.
pub fn coefficients_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (j, cj) in c.iter().enumerate() {
            next[j + 1] += cj;
            next[j] -= r * cj;
        }
        c = next;
    }
    c
}
