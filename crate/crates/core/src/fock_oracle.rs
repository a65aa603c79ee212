//! Exact diagonalisation in boson-number bases, independent of the
//! polynomial machinery.
//!
//! Two real symmetric tridiagonal forms are provided: one fixed-seniority
//! sector in the `a/b` basis `|n_a = 2m+ν1, n_b = 2(k-m)+ν2⟩`, and the full
//! `n`-boson space in the two-site `c/d` basis `|n_c, n - n_c⟩`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Sector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("symmetric eigenvalue iteration did not converge")]
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalH {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    /// Occupation pair of each basis state.
    pub basis_labels: Vec<(usize, usize)>,
}

impl TridiagonalH {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.offdiag.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    /// Largest absolute matrix entry.
    pub fn max_entry(&self) -> f64 {
        self.diag.iter().chain(&self.offdiag).fold(0.0f64, |a, x| a.max(x.abs()))
    }
}

/// Seniority sector with `k` pairs.
pub fn sector_hamiltonian(sec: &Sector, t: f64, u: f64) -> TridiagonalH {
    let k = sec.k;
    let n = sec.boson_number() as f64;
    let label = |m: usize| (2 * m + sec.nu1 as usize, 2 * (k - m) + sec.nu2 as usize);
    let basis_labels: Vec<(usize, usize)> = (0..=k).map(label).collect();
    let diag = basis_labels
        .iter()
        .map(|&(na, nb)| {
            let (na, nb) = (na as f64, nb as f64);
            t * (nb - na) + u * n * n - 0.5 * u * (na * (na - 1.0) + nb * (nb - 1.0))
        })
        .collect();
    let offdiag = (1..=k)
        .map(|m| {
            let (na, nb) = basis_labels[m];
            let (na, nb) = (na as f64, nb as f64);
            -0.5 * u * (na * (na - 1.0) * (nb + 1.0) * (nb + 2.0)).sqrt()
        })
        .collect();
    TridiagonalH { diag, offdiag, basis_labels }
}

/// Full two-site Hamiltonian with `n` bosons.
pub fn full_hamiltonian(n: usize, t: f64, u: f64) -> TridiagonalH {
    let basis_labels: Vec<(usize, usize)> = (0..=n).map(|nc| (nc, n - nc)).collect();
    let diag = basis_labels
        .iter()
        .map(|&(nc, nd)| u * ((nc * nc) as f64 + (nd * nd) as f64))
        .collect();
    let offdiag = (0..n)
        .map(|nc| -t * (((nc + 1) * (n - nc)) as f64).sqrt())
        .collect();
    TridiagonalH { diag, offdiag, basis_labels }
}

/// All eigenvalues, ascending.
pub fn tridiag_eigenvalues(h: &TridiagonalH) -> Result<Vec<f64>, OracleError> {
    let eig = SymmetricEigen::try_new(h.to_dense(), f64::EPSILON, 0).ok_or(OracleError::NoConvergence)?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
