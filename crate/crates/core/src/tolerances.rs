//! Numerical tolerances shared by every stage of the pipeline.
//!
//! Each field can be overridden by name (see [`Tolerances::set`]), which is how
//! the command line `--tol name=value` flag is wired in.

use serde::{Deserialize, Serialize};

/// Tolerances and iteration limits for the solver pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute distance from the poles ±1 below which a root is rejected.
    pub singular_tol: f64,
    /// Imaginary parts above `reality_tol * norm` are treated as genuinely complex.
    pub reality_tol: f64,
    /// Per-row residual of the four-term recurrence, relative to `‖F‖·max|b|`.
    pub rec_tol: f64,
    /// Two Van Vleck constants closer than `degeneracy_tol * ‖F‖` are flagged.
    pub degeneracy_tol: f64,
    /// Scaled polynomial residual that ends the polynomial-stage refinement.
    pub root_tol: f64,
    /// Largest accepted Bethe-ansatz residual at converged roots.
    pub bae_tol: f64,
    /// Minimum pairwise root gap, relative to the spread of the root set.
    pub simplicity_tol: f64,
    /// Gradient norm at which an electrostatic equilibrium counts as converged.
    pub electro_tol: f64,
    /// Inverse-power sum rules are skipped when a zero is this close to the origin.
    pub zero_guard: f64,
    /// Sum-rule residuals, relative to the largest term of each identity.
    pub sumrule_tol: f64,
    /// Iteration cap for the iterative solvers.
    pub max_iters: usize,
    /// Largest polynomial degree the recurrence module accepts.
    pub max_degree: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            singular_tol: 1e-10,
            reality_tol: 1e-8,
            rec_tol: 1e-9,
            degeneracy_tol: 1e-10,
            root_tol: 1e-12,
            bae_tol: 1e-8,
            simplicity_tol: 1e-9,
            electro_tol: 1e-10,
            zero_guard: 1e-6,
            sumrule_tol: 1e-8,
            max_iters: 200,
            max_degree: 200,
        }
    }
}

/// Field names accepted by [`Tolerances::set`].
pub const TOLERANCE_NAMES: &[&str] = &[
    "singular_tol",
    "reality_tol",
    "rec_tol",
    "degeneracy_tol",
    "root_tol",
    "bae_tol",
    "simplicity_tol",
    "electro_tol",
    "zero_guard",
    "sumrule_tol",
    "max_iters",
    "max_degree",
];

impl Tolerances {
    /// Overrides one tolerance by name. Integer limits must be given as whole numbers.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !value.is_finite() || value <= 0.0 {
            return Err(format!("tolerance {name} must be positive and finite, got {value}"));
        }
        let as_count = || -> Result<usize, String> {
            if value.fract() != 0.0 {
                Err(format!("{name} must be an integer, got {value}"))
            } else {
                Ok(value as usize)
            }
        };
        match name {
            "singular_tol" => self.singular_tol = value,
            "reality_tol" => self.reality_tol = value,
            "rec_tol" => self.rec_tol = value,
            "degeneracy_tol" => self.degeneracy_tol = value,
            "root_tol" => self.root_tol = value,
            "bae_tol" => self.bae_tol = value,
            "simplicity_tol" => self.simplicity_tol = value,
            "electro_tol" => self.electro_tol = value,
            "zero_guard" => self.zero_guard = value,
            "sumrule_tol" => self.sumrule_tol = value,
            "max_iters" => self.max_iters = as_count()?,
            "max_degree" => self.max_degree = as_count()?,
            _ => {
                return Err(format!(
                    "unknown tolerance '{name}' (expected one of {})",
                    TOLERANCE_NAMES.join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Parses a `name=value` override and applies it.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), String> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| format!("tolerance override '{spec}' is not of the form name=value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("tolerance override '{spec}' has a non-numeric value"))?;
        self.set(name.trim(), value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_by_name() {
        let mut tol = Tolerances::default();
        tol.apply_override("bae_tol=1e-6").unwrap();
        tol.apply_override("max_iters = 50").unwrap();
        assert_eq!(tol.bae_tol, 1e-6);
        assert_eq!(tol.max_iters, 50);
    }

    #[test]
    fn rejects_bad_overrides() {
        let mut tol = Tolerances::default();
        assert!(tol.apply_override("nonsense=1").is_err());
        assert!(tol.apply_override("bae_tol").is_err());
        assert!(tol.apply_override("bae_tol=-1").is_err());
        assert!(tol.apply_override("max_iters=2.5").is_err());
        assert_eq!(tol, Tolerances::default());
    }
}
