//! Physical and spectral parameters of the two-site Bose-Hubbard (special LMG)
//! model, the map between them, boson-number sectors and the Bethe-ansatz
//! energy formula.
//!
//! Pole convention: the spectral side always uses the Bethe equations
//!
//! ```text
//! alpha/(x_i - 1) + beta/(x_i + 1) + gamma + sum_{j != i} 2/(x_i - x_j) = 0
//! ```
//!
//! with `alpha`, `beta`, `gamma > 0`. The pair operator
//! `S+(x) = a†²/(x+1) + b†²/(x-1)` puts the `a`-boson seniority on the pole at
//! `-1` and the `b`-boson seniority on the pole at `+1`, with field `t/U`. When
//! `t/U < 0` the roots are reflected (`x -> -x`), which swaps the poles and
//! restores a positive field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute distance from ±1 at which a root is considered singular.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("interaction U must be nonzero")]
    UZero,
    #[error("hopping t = 0 gives gamma = 0: the spectrum follows the Jacobi route (alpha = {alpha}, beta = {beta})")]
    ZeroHopping { alpha: f64, beta: f64 },
    #[error("seniority must be 0 or 1, got nu1 = {nu1}, nu2 = {nu2}")]
    InvalidSeniority { nu1: u8, nu2: u8 },
    #[error("parameter {name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("spectral parameters must satisfy alpha > 0, beta > 0, gamma >= 0 (got {alpha}, {beta}, {gamma})")]
    InvalidSpectral { alpha: f64, beta: f64, gamma: f64 },
    #[error("root {root} lies within {tol:e} of a pole at ±1")]
    RootOnSingularity { root: f64, tol: f64 },
    #[error("expected {expected} roots, got {got}")]
    RootCount { expected: usize, got: usize },
}

/// Physics-side inputs: hopping `t`, interaction `U`, seniorities and pair count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub t: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub nu1: u8,
    pub nu2: u8,
    pub k: usize,
}

impl PhysicalParams {
    pub fn new(t: f64, u: f64, nu1: u8, nu2: u8, k: usize) -> Result<Self, ModelError> {
        let p = Self { t, u, nu1, nu2, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.t.is_finite() {
            return Err(ModelError::NonFinite { name: "t", value: self.t });
        }
        if !self.u.is_finite() {
            return Err(ModelError::NonFinite { name: "U", value: self.u });
        }
        if self.nu1 > 1 || self.nu2 > 1 {
            return Err(ModelError::InvalidSeniority { nu1: self.nu1, nu2: self.nu2 });
        }
        if self.u == 0.0 {
            return Err(ModelError::UZero);
        }
        Ok(())
    }

    /// Total boson number `n = 2k + nu1 + nu2`.
    pub fn boson_number(&self) -> usize {
        2 * self.k + self.nu1 as usize + self.nu2 as usize
    }

    pub fn sector(&self) -> Sector {
        Sector { nu1: self.nu1, nu2: self.nu2, k: self.k }
    }

    /// Whether spectral roots must be reflected back to physical ones.
    pub fn is_reflected(&self) -> bool {
        self.t / self.u < 0.0
    }
}

/// Polynomial-side parameters of the Bethe equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl SpectralParams {
    /// `gamma = 0` is allowed and denotes the Jacobi limit.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, ModelError> {
        for (name, value) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        if alpha <= 0.0 || beta <= 0.0 || gamma < 0.0 {
            return Err(ModelError::InvalidSpectral { alpha, beta, gamma });
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// The same problem with the poles exchanged.
    pub fn swapped(&self) -> Self {
        Self { alpha: self.beta, beta: self.alpha, gamma: self.gamma }
    }

    /// `alpha + beta`, which appears in every diagonal entry of the recurrence.
    pub fn charge_sum(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Recovers seniorities when the parameters are half-integers in {1/2, 3/2},
    /// using the no-reflection assignment (`alpha = nu2 + 1/2`, `beta = nu1 + 1/2`).
    pub fn seniorities(&self) -> Option<(u8, u8)> {
        let nu = |c: f64| -> Option<u8> {
            if c == 0.5 {
                Some(0)
            } else if c == 1.5 {
                Some(1)
            } else {
                None
            }
        };
        Some((nu(self.beta)?, nu(self.alpha)?))
    }
}

/// Result of [`to_spectral`]: the spectral parameters plus the reflection flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMap {
    pub params: SpectralParams,
    /// Physical roots are the negated spectral roots.
    pub reflected: bool,
}

impl SpectralMap {
    pub fn physical_root(&self, x: f64) -> f64 {
        if self.reflected {
            -x
        } else {
            x
        }
    }
}

/// Seniority sector `(nu1, nu2)` holding `k` boson pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub nu1: u8,
    pub nu2: u8,
    pub k: usize,
}

impl Sector {
    pub fn boson_number(&self) -> usize {
        2 * self.k + self.nu1 as usize + self.nu2 as usize
    }

    pub fn dimension(&self) -> usize {
        self.k + 1
    }
}

/// Maps physical parameters to the positive-field spectral problem.
pub fn to_spectral(p: &PhysicalParams) -> Result<SpectralMap, ModelError> {
    p.validate()?;
    let a_charge = p.nu1 as f64 + 0.5;
    let b_charge = p.nu2 as f64 + 0.5;
    if p.t == 0.0 {
        return Err(ModelError::ZeroHopping { alpha: b_charge, beta: a_charge });
    }
    let field = p.t / p.u;
    let (params, reflected) = if field > 0.0 {
        (SpectralParams { alpha: b_charge, beta: a_charge, gamma: field }, false)
    } else {
        (SpectralParams { alpha: a_charge, beta: b_charge, gamma: -field }, true)
    };
    Ok(SpectralMap { params, reflected })
}

/// Seniority sectors of the `n`-boson space; their dimensions add up to `n + 1`.
pub fn sectors_of(n: usize) -> Vec<Sector> {
    if n % 2 == 0 {
        let mut out = vec![Sector { nu1: 0, nu2: 0, k: n / 2 }];
        if n >= 2 {
            out.push(Sector { nu1: 1, nu2: 1, k: (n - 2) / 2 });
        }
        out
    } else {
        let k = (n - 1) / 2;
        vec![Sector { nu1: 1, nu2: 0, k }, Sector { nu1: 0, nu2: 1, k }]
    }
}

/// Eigen-energy `E = 2t Σx + t(nu2 - nu1) + U n²` from spectral roots.
///
/// Roots are un-reflected first when `t/U < 0`.
pub fn energy_from_roots(roots: &[f64], p: &PhysicalParams) -> Result<f64, ModelError> {
    energy_from_roots_with_tol(roots, p, SINGULAR_TOL)
}

pub fn energy_from_roots_with_tol(
    roots: &[f64],
    p: &PhysicalParams,
    singular_tol: f64,
) -> Result<f64, ModelError> {
    p.validate()?;
    if roots.len() != p.k {
        return Err(ModelError::RootCount { expected: p.k, got: roots.len() });
    }
    check_off_poles(roots, singular_tol)?;
    let sign = if p.is_reflected() { -1.0 } else { 1.0 };
    let sum: f64 = roots.iter().sum::<f64>() * sign;
    let n = p.boson_number() as f64;
    Ok(2.0 * p.t * sum + p.t * (p.nu2 as f64 - p.nu1 as f64) + p.u * n * n)
}

pub(crate) fn check_off_poles(roots: &[f64], tol: f64) -> Result<(), ModelError> {
    for &x in roots {
        if (x - 1.0).abs() < tol || (x + 1.0).abs() < tol || !x.is_finite() {
            return Err(ModelError::RootOnSingularity { root: x, tol });
        }
    }
    Ok(())
}
