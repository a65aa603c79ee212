//! Closed-form identities among the zeros, the Van Vleck constant and the
//! spectral parameters. Every identity is reported as an absolute residual and
//! as that residual divided by the largest single term in the identity.

use serde::{Deserialize, Serialize};

use crate::model::{check_off_poles, ModelError, SpectralParams};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRuleReport {
    /// `(α-β)Σ1/(x²-1) + (α+β)Σx/(x²-1) + kγ`
    pub pole_balance_residual: f64,
    pub pole_balance_scaled: f64,
    /// `(α+β)Σ1/(x²-1) + (α-β)Σx/(x²-1) + γΣx + k(α+β+k-1)`
    pub pole_sum_residual: f64,
    pub pole_sum_scaled: f64,
    /// `γΣx - 4αβ/(α+β)·Σ1/(1-x²) + k(α+β+k-1-γ(α-β)/(α+β))`
    pub reduced_pole_sum_residual: f64,
    pub reduced_pole_sum_scaled: f64,
    /// `f - Σ_{i<j} 2/(x_i x_j) - (α-β-γ)Σ1/x`; zero when not applicable.
    pub inverse_pairs_residual: f64,
    pub inverse_pairs_scaled: f64,
    /// False when `k < 2` or some zero lies within `zero_guard` of the origin.
    pub inverse_pairs_applicable: bool,
    /// The same identity with the pair sum written as
    /// `(Σ1/x)² - (k-1)Σ1/x²`. Exact only for `k = 2`; informational.
    pub inverse_pairs_expanded_residual: Option<f64>,
    /// `f + γΣx + k(α+β+k-1)`
    pub van_vleck_sum_residual: f64,
    pub van_vleck_sum_scaled: f64,
}

impl SumRuleReport {
    /// Largest scaled residual over the applicable identities.
    pub fn max_scaled(&self) -> f64 {
        let mut m = self.pole_balance_scaled.max(self.pole_sum_scaled).max(self.reduced_pole_sum_scaled).max(self.van_vleck_sum_scaled);
        if self.inverse_pairs_applicable {
            m = m.max(self.inverse_pairs_scaled);
        }
        m
    }

    pub fn passes(&self, tol: &Tolerances) -> bool {
        self.max_scaled() < tol.sumrule_tol
    }
}

/// Residual of `Σ terms = 0` as (absolute, relative to the largest term).
fn identity(terms: &[f64]) -> (f64, f64) {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let abs = sum.abs();
    (abs, if scale > 0.0 { abs / scale } else { abs })
}

pub fn sum_rule_report(
    roots: &[f64],
    f: f64,
    s: &SpectralParams,
    tol: &Tolerances,
) -> Result<SumRuleReport, ModelError> {
    check_off_poles(roots, tol.singular_tol)?;
    let (al, be, ga) = (s.alpha, s.beta, s.gamma);
    let k = roots.len() as f64;
    let inv_q: f64 = roots.iter().map(|x| 1.0 / (x * x - 1.0)).sum();
    let x_q: f64 = roots.iter().map(|x| x / (x * x - 1.0)).sum();
    let sum_x: f64 = roots.iter().sum();
    let c = k * (al + be + k - 1.0);

    let (pole_balance_residual, pole_balance_scaled) = identity(&[(al - be) * inv_q, (al + be) * x_q, k * ga]);
    let (pole_sum_residual, pole_sum_scaled) = identity(&[(al + be) * inv_q, (al - be) * x_q, ga * sum_x, c]);
    let (reduced_pole_sum_residual, reduced_pole_sum_scaled) = if al + be > 0.0 {
        identity(&[
            ga * sum_x,
            4.0 * al * be / (al + be) * inv_q,
            c,
            -k * ga * (al - be) / (al + be),
        ])
    } else {
        (0.0, 0.0)
    };
    let (van_vleck_sum_residual, van_vleck_sum_scaled) = identity(&[f, ga * sum_x, c]);

    let inverse_pairs_applicable = roots.len() >= 2 && roots.iter().all(|x| x.abs() > tol.zero_guard);
    let (mut inverse_pairs_residual, mut inverse_pairs_scaled, mut inverse_pairs_expanded_residual) = (0.0, 0.0, None);
    if inverse_pairs_applicable {
        let inv: f64 = roots.iter().map(|x| 1.0 / x).sum();
        let inv2: f64 = roots.iter().map(|x| 1.0 / (x * x)).sum();
        let mut pairs = 0.0;
        for (i, xi) in roots.iter().enumerate() {
            for xj in &roots[i + 1..] {
                pairs += 2.0 / (xi * xj);
            }
        }
        let lin = (al - be - ga) * inv;
        (inverse_pairs_residual, inverse_pairs_scaled) = identity(&[f, -pairs, -lin]);
        inverse_pairs_expanded_residual = Some((f - (inv * inv - (k - 1.0) * inv2) - lin).abs());
    }

    Ok(SumRuleReport {
        pole_balance_residual,
        pole_balance_scaled,
        pole_sum_residual,
        pole_sum_scaled,
        reduced_pole_sum_residual,
        reduced_pole_sum_scaled,
        inverse_pairs_residual,
        inverse_pairs_scaled,
        inverse_pairs_applicable,
        inverse_pairs_expanded_residual,
        van_vleck_sum_residual,
        van_vleck_sum_scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> SpectralParams {
        SpectralParams::new(0.5, 0.5, 0.5).unwrap()
    }

    const ROWS: [(f64, [f64; 2]); 3] = [
        (0.51413692933529107269, [-7.2903554652620101832, -1.7379183934085719622]),
        (-1.4280067316837969814, [-5.7051722031415593052, 0.56118566650915326805]),
        (-4.0861301976514940912, [-0.60365266901275556104, 0.77591306431574374354]),
    ];

    #[test]
    fn k2_reference_rows_to_rounding() {
        let tol = Tolerances::default();
        let r = sum_rule_report(&[-7.2904, -1.7379], 0.5141, &half(), &tol).unwrap();
        assert!(r.pole_balance_residual < 5e-4);
        assert!(r.van_vleck_sum_residual < 5e-4);
        let r = sum_rule_report(&[-0.6036, 0.7759], -4.0861, &half(), &tol).unwrap();
        assert!(r.inverse_pairs_applicable && r.inverse_pairs_residual < 1e-3);
    }

    #[test]
    fn exact_rows() {
        let tol = Tolerances::default();
        for (f, roots) in ROWS {
            let r = sum_rule_report(&roots, f, &half(), &tol).unwrap();
            assert!(r.max_scaled() < 1e-14, "{r:?}");
            // the expanded form coincides with the pair sum at k = 2
            assert!(r.inverse_pairs_expanded_residual.unwrap() < 1e-13);
        }
    }

    #[test]
    fn applicability() {
        let tol = Tolerances::default();
        let r = sum_rule_report(&[-1.0 - 2f64.sqrt()], 0.5 * (2f64.sqrt() - 1.0), &half(), &tol).unwrap();
        assert!(!r.inverse_pairs_applicable);
        assert!(r.van_vleck_sum_residual < 1e-15);
        let r = sum_rule_report(&[-3.0, 1e-7], 0.0, &half(), &tol).unwrap();
        assert!(!r.inverse_pairs_applicable && r.inverse_pairs_residual == 0.0);
        assert!(sum_rule_report(&[1.0, 0.3], 0.0, &half(), &tol).is_err());
    }
}
