//! Electrostatic picture of the Bethe roots: `k` unit charges on the real
//! line, a charge `α/2` fixed at `+1`, `β/2` at `-1`, and a uniform field `γ/2`.
//!
//! Energy:
//! `U = -(γ/2)Σx_i - (α/2)Σln|x_i-1| - (β/2)Σln|x_i+1| - Σ_{i<j} ln|x_i-x_j|`.
//!
//! Each occupation `(k1, k2)` of the intervals `(-∞,-1)` and `(-1,1)` is
//! minimised in unconstrained coordinates that keep the occupation and the
//! ordering by construction:
//! left charges `x = -1 - Σ exp(u)` (cumulative gaps), middle charges
//! `x = tanh(y)` with `y` built from cumulative `exp` gaps.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::model::SpectralParams;
use crate::polyroots::chebyshev_points;
use crate::tolerances::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectroError {
    #[error("charges coincide or sit on a fixed charge at {x}")]
    SingularConfiguration { x: f64 },
    #[error("minimisation for occupation ({k1}, {k2}) did not converge (gradient norm {grad_norm:e})")]
    NoConvergence { k1: usize, k2: usize, grad_norm: f64 },
    #[error("iterates left occupation ({k1}, {k2})")]
    EscapedInterval { k1: usize, k2: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectroConfig {
    pub k1: usize,
    pub k2: usize,
    /// Ascending.
    pub positions: Vec<f64>,
    pub grad_norm: f64,
    pub hessian_pd: bool,
}

fn check_positions(x: &[f64]) -> Result<(), ElectroError> {
    for (i, &xi) in x.iter().enumerate() {
        if !xi.is_finite() || xi == 1.0 || xi == -1.0 {
            return Err(ElectroError::SingularConfiguration { x: xi });
        }
        if x[..i].contains(&xi) {
            return Err(ElectroError::SingularConfiguration { x: xi });
        }
    }
    Ok(())
}

pub fn electro_energy(x: &[f64], s: &SpectralParams) -> Result<f64, ElectroError> {
    check_positions(x)?;
    Ok(energy_unchecked(x, s))
}

fn energy_unchecked(x: &[f64], s: &SpectralParams) -> f64 {
    let mut u = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        u -= 0.5 * s.gamma * xi + 0.5 * s.alpha * (xi - 1.0).abs().ln() + 0.5 * s.beta * (xi + 1.0).abs().ln();
        for &xj in &x[i + 1..] {
            u -= (xi - xj).abs().ln();
        }
    }
    u
}

/// `∂U/∂x_i = -γ/2 - (α/2)/(x_i-1) - (β/2)/(x_i+1) - Σ_{j≠i} 1/(x_i-x_j)`.
pub fn electro_gradient(x: &[f64], s: &SpectralParams) -> Result<Vec<f64>, ElectroError> {
    check_positions(x)?;
    Ok(gradient_unchecked(x, s))
}

fn gradient_unchecked(x: &[f64], s: &SpectralParams) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let mut g = -0.5 * s.gamma - 0.5 * s.alpha / (xi - 1.0) - 0.5 * s.beta / (xi + 1.0);
            for (j, &xj) in x.iter().enumerate() {
                if j != i {
                    g -= 1.0 / (xi - xj);
                }
            }
            g
        })
        .collect()
}

pub fn electro_hessian(x: &[f64], s: &SpectralParams) -> Result<DMatrix<f64>, ElectroError> {
    check_positions(x)?;
    let k = x.len();
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        let mut d = 0.5 * s.alpha / (x[i] - 1.0).powi(2) + 0.5 * s.beta / (x[i] + 1.0).powi(2);
        for j in 0..k {
            if j != i {
                let w = (x[i] - x[j]).powi(2).recip();
                d += w;
                h[(i, j)] = -w;
            }
        }
        h[(i, i)] = d;
    }
    Ok(h)
}

/// `[(k,0), (k-1,1), …, (0,k)]`.
pub fn enumerate_configs(k: usize) -> Vec<(usize, usize)> {
    (0..=k).rev().map(|k1| (k1, k - k1)).collect()
}

/// Unconstrained coordinates for a fixed occupation.
struct CellMap {
    k1: usize,
    k2: usize,
}

impl CellMap {
    fn to_x(&self, w: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.k1 + self.k2];
        let mut acc = -1.0;
        for i in 0..self.k1 {
            acc -= w[i].exp();
            x[self.k1 - 1 - i] = acc;
        }
        let mut y = 0.0;
        for j in 0..self.k2 {
            let v = w[self.k1 + j];
            y = if j == 0 { v } else { y + v.exp() };
            x[self.k1 + j] = y.tanh();
        }
        x
    }

    fn from_x(&self, x: &[f64]) -> Vec<f64> {
        let mut w = Vec::with_capacity(x.len());
        let mut prev = -1.0;
        for i in 0..self.k1 {
            let xi = x[self.k1 - 1 - i];
            w.push((prev - xi).ln());
            prev = xi;
        }
        let mut prev_y = 0.0;
        for j in 0..self.k2 {
            let y = x[self.k1 + j].atanh();
            w.push(if j == 0 { y } else { (y - prev_y).ln() });
            prev_y = y;
        }
        w
    }

    /// `J[i][l] = ∂x_i/∂w_l`.
    fn jacobian(&self, w: &[f64], x: &[f64]) -> DMatrix<f64> {
        let k = self.k1 + self.k2;
        let mut j = DMatrix::zeros(k, k);
        for i in 0..self.k1 {
            // x[k1-1-i] depends on w[0..=i]
            for l in 0..=i {
                j[(self.k1 - 1 - i, l)] = -w[l].exp();
            }
        }
        for m in 0..self.k2 {
            let sech2 = 1.0 - x[self.k1 + m].powi(2);
            for l in 0..=m {
                let dy = if l == 0 { 1.0 } else { w[self.k1 + l].exp() };
                j[(self.k1 + m, self.k1 + l)] = sech2 * dy;
            }
        }
        j
    }

    fn valid(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &xi)| {
            let side = if i < self.k1 { xi < -1.0 } else { xi > -1.0 && xi < 1.0 };
            side && (i == 0 || xi > x[i - 1])
        })
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Default starting point: left charges at `-1 - j`, middle charges at
/// Chebyshev-like points.
pub fn default_seed(k1: usize, k2: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (1..=k1).rev().map(|j| -1.0 - j as f64).collect();
    x.extend(chebyshev_points(k2));
    x
}

/// Minimum of the energy with occupation `cfg`, from the default seed and up
/// to five perturbed reseeds.
pub fn find_equilibrium(
    cfg: (usize, usize),
    s: &SpectralParams,
    tol: &Tolerances,
) -> Result<ElectroConfig, ElectroError> {
    let (k1, k2) = cfg;
    let mut last = None;
    for attempt in 0..6 {
        let mut seed = default_seed(k1, k2);
        if attempt > 0 {
            let stretch = 1.0 + 0.7 * attempt as f64;
            for v in seed[..k1].iter_mut() {
                *v = -1.0 - (-1.0 - *v) * stretch;
            }
            let squeeze = 1.0 / (1.0 + 0.2 * attempt as f64);
            for v in seed[k1..].iter_mut() {
                *v *= squeeze;
            }
        }
        match find_equilibrium_from(cfg, s, &seed, tol) {
            Ok(c) => return Ok(c),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or(ElectroError::NoConvergence { k1, k2, grad_norm: f64::NAN }))
}

/// Minimum of the energy with occupation `cfg` starting from `seed`, which
/// must be ascending and have that occupation.
pub fn find_equilibrium_from(
    cfg: (usize, usize),
    s: &SpectralParams,
    seed: &[f64],
    tol: &Tolerances,
) -> Result<ElectroConfig, ElectroError> {
    let (k1, k2) = cfg;
    let map = CellMap { k1, k2 };
    if seed.len() != k1 + k2 || !map.valid(seed) {
        return Err(ElectroError::EscapedInterval { k1, k2 });
    }
    let k = k1 + k2;
    if k == 0 {
        return Ok(ElectroConfig { k1, k2, positions: vec![], grad_norm: 0.0, hessian_pd: true });
    }
    let mut w = map.from_x(seed);
    let mut x = map.to_x(&w);
    let mut energy = energy_unchecked(&x, s);
    let mut g = gradient_unchecked(&x, s);
    let mut gnorm = norm2(&g);

    for _ in 0..tol.max_iters {
        // polish well below the acceptance threshold; stalls end the loop
        if gnorm < 1e-3 * tol.electro_tol {
            break;
        }
        let jac = map.jacobian(&w, &x);
        let h = electro_hessian(&x, s)?;
        let gw: Vec<f64> = (jac.transpose() * nalgebra::DVector::from_column_slice(&g)).iter().copied().collect();
        let hw = jac.transpose() * h * &jac;
        let rhs: Vec<f64> = gw.iter().map(|v| -v).collect();
        let mut step = None;
        let mut mu = 0.0;
        for _ in 0..20 {
            let mut m = hw.clone();
            for i in 0..k {
                m[(i, i)] += mu;
            }
            if let Some(d) = linalg::solve_spd(m, &rhs) {
                step = Some(d);
                break;
            }
            mu = if mu == 0.0 { 1e-10 * hw.diagonal().abs().max().max(1.0) } else { mu * 10.0 };
        }
        let Some(d) = step else {
            break;
        };
        let slope: f64 = gw.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let wt: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let xt = map.to_x(&wt);
            if map.valid(&xt) && xt.iter().all(|v| v.is_finite()) {
                let et = energy_unchecked(&xt, s);
                let gt = gradient_unchecked(&xt, s);
                let gn = norm2(&gt);
                if et <= energy + 1e-4 * t * slope || gn < gnorm {
                    w = wt;
                    x = xt;
                    energy = et;
                    g = gt;
                    gnorm = gn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !map.valid(&x) {
        return Err(ElectroError::EscapedInterval { k1, k2 });
    }
    if !(gnorm < tol.electro_tol) {
        return Err(ElectroError::NoConvergence { k1, k2, grad_norm: gnorm });
    }
    let hessian_pd = linalg::is_positive_definite(electro_hessian(&x, s)?);
    Ok(ElectroConfig { k1, k2, positions: x, grad_norm: gnorm, hessian_pd })
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { f64::INFINITY };
    }
    let one_way = |p: &[f64], q: &[f64]| {
        p.iter()
            .map(|x| q.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Pairs each equilibrium with the root set of equal occupation; returns
/// `(equilibrium index, root-set index, Hausdorff distance)`.
pub fn match_equilibria(
    eq: &[ElectroConfig],
    root_sets: &[(Vec<f64>, (usize, usize))],
) -> Vec<(usize, Option<usize>, f64)> {
    eq.iter()
        .enumerate()
        .map(|(i, c)| {
            let hit = root_sets
                .iter()
                .enumerate()
                .filter(|(_, (_, occ))| *occ == (c.k1, c.k2))
                .map(|(j, (r, _))| (j, hausdorff(&c.positions, r)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match hit {
                Some((j, d)) => (i, Some(j), d),
                None => (i, None, f64::INFINITY),
            }
        })
        .collect()
}
