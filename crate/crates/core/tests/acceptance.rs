//! One line per acceptance criterion, each at its stated tolerance.

use std::process::ExitCode;
use std::time::Instant;

use lmg_stieltjes::cli::{run_spectrum, run_verify, Mode, Params, RunSpec};
use lmg_stieltjes::electrostatics::{electro_gradient, enumerate_configs, find_equilibrium, hausdorff};
use lmg_stieltjes::fock_oracle::{full_hamiltonian, sector_hamiltonian, tridiag_eigenvalues};
use lmg_stieltjes::jacobi::jacobi_monic;
use lmg_stieltjes::model::{energy_from_roots, sectors_of, to_spectral, PhysicalParams, SpectralParams};
use lmg_stieltjes::polyroots::{bae_residual, find_roots, RootSet};
use lmg_stieltjes::recurrence::{polynomials, ESPolynomial};
use lmg_stieltjes::sumrules::sum_rule_report;
use lmg_stieltjes::tolerances::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_spectral(rng: &mut ChaCha8Rng) -> SpectralParams {
    let a = rng.random_range(0.5..2.0);
    let b = rng.random_range(0.5..2.0);
    let g = log_uniform(rng, 0.1, 10.0);
    SpectralParams::new(a, b, g).unwrap()
}

fn solve_all(k: usize, s: &SpectralParams, tol: &Tolerances) -> Result<Vec<(ESPolynomial, RootSet)>, String> {
    let (polys, _) = polynomials(k, s, tol).map_err(|e| e.to_string())?;
    polys
        .into_iter()
        .map(|p| {
            let r = find_roots(&p, tol).map_err(|e| format!("k={k} {s:?} zeta {}: {e}", p.zeta))?;
            Ok((p, r))
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let tol = Tolerances::default();
    let s = SpectralParams::new(0.5, 0.5, 0.5).unwrap();
    let start = Instant::now();
    let states = match solve_all(2, &s, &tol) {
        Ok(v) => v,
        Err(e) => return outcome(false, e),
    };
    let elapsed = start.elapsed();
    let reference: [([f64; 2], f64, [f64; 2], f64); 3] = [
        ([-7.2904, -1.7379], -9.0283, [12.6700, 9.0283], 0.5141),
        ([-5.7052, 0.5612], -5.1440, [-3.2020, 5.1440], -1.4280),
        ([-0.6036, 0.7759], 0.1723, [-0.4684, -0.1723], -4.0861),
    ];
    let mut worst: f64 = 0.0;
    for ((p, r), (zeros, sum, coeffs, f)) in states.iter().zip(reference) {
        worst = worst.max((r.roots[0] - zeros[0]).abs()).max((r.roots[1] - zeros[1]).abs());
        worst = worst.max((r.sum() - sum).abs());
        worst = worst.max((p.coeff(0) - coeffs[0]).abs()).max((p.coeff(1) - coeffs[1]).abs());
        worst = worst.max((p.f - f).abs());
    }
    let ms = elapsed.as_secs_f64() * 1e3;
    outcome(
        states.len() == 3 && worst < 5e-4 && ms < 10.0,
        format!("max abs deviation {worst:.2e} (tol 5e-4), runtime {ms:.2} ms (limit 10 ms)"),
    )
}

struct GridStats {
    van_vleck_sum: f64,
    bae_abs: f64,
    bae_scaled: f64,
    sumrule: f64,
    inverse_pairs_skipped: usize,
    states: usize,
    failures: Vec<String>,
}

fn grid() -> GridStats {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut st = GridStats {
        van_vleck_sum: 0.0,
        bae_abs: 0.0,
        bae_scaled: 0.0,
        sumrule: 0.0,
        inverse_pairs_skipped: 0,
        states: 0,
        failures: Vec::new(),
    };
    for k in 1..=50usize {
        for _ in 0..20 {
            let s = random_spectral(&mut rng);
            let states = match solve_all(k, &s, &tol) {
                Ok(v) => v,
                Err(e) => {
                    st.failures.push(e);
                    continue;
                }
            };
            let c = k as f64 * (s.alpha + s.beta + k as f64 - 1.0);
            for (p, r) in &states {
                st.states += 1;
                st.van_vleck_sum = st.van_vleck_sum.max((p.f + s.gamma * r.sum() + c).abs() / p.f.abs().max(1.0));
                let res = bae_residual(&r.roots, &s).unwrap();
                st.bae_abs = st.bae_abs.max(res.iter().fold(0.0, |a: f64, x| a.max(x.abs())));
                st.bae_scaled = st.bae_scaled.max(r.scaled_bae_residual);
                match sum_rule_report(&r.roots, p.f, &s, &tol) {
                    Ok(rep) => {
                        let m = rep.pole_balance_scaled.max(rep.pole_sum_scaled).max(rep.reduced_pole_sum_scaled);
                        st.sumrule = st.sumrule.max(if rep.inverse_pairs_applicable { m.max(rep.inverse_pairs_scaled) } else { m });
                        if k >= 2 && !rep.inverse_pairs_applicable {
                            st.inverse_pairs_skipped += 1;
                        }
                    }
                    Err(e) => st.failures.push(e.to_string()),
                }
            }
        }
    }
    st
}

/// Degrees checked against the exact diagonalisation for every draw and sector.
const ORACLE_KS: [usize; 17] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 25, 30, 35, 40];

fn criterion_3() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for _ in 0..10 {
        let t = log_uniform(&mut rng, 0.1, 10.0);
        let u = log_uniform(&mut rng, 0.1, 10.0);
        for (nu1, nu2) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            for k in ORACLE_KS {
                let p = PhysicalParams::new(t, u, nu1, nu2, k).unwrap();
                let s = to_spectral(&p).unwrap().params;
                let states = match solve_all(k, &s, &tol) {
                    Ok(v) => v,
                    Err(e) => return outcome(false, e),
                };
                let mut e: Vec<f64> = states.iter().map(|(_, r)| energy_from_roots(&r.roots, &p).unwrap()).collect();
                e.sort_by(f64::total_cmp);
                let h = sector_hamiltonian(&p.sector(), t, u);
                let o = tridiag_eigenvalues(&h).unwrap();
                if o.len() != e.len() {
                    return outcome(false, format!("level count mismatch at k={k}"));
                }
                for (a, b) in e.iter().zip(&o) {
                    worst = worst.max((a - b).abs() / b.abs().max(h.max_entry()));
                }
                runs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-8 && secs < 5.0,
        format!("{runs} sectors, max relative deviation {worst:.2e} (tol 1e-8), runtime {secs:.2} s (limit 5 s)"),
    )
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for (t, u) in [(1.0, 1.0), (0.37, 2.3), (-1.4, 0.6), (2.0, -0.5)] {
        for n in 0..=80usize {
            let h = full_hamiltonian(n, t, u);
            let full = tridiag_eigenvalues(&h).unwrap();
            let mut union = Vec::new();
            for sec in sectors_of(n) {
                union.extend(tridiag_eigenvalues(&sector_hamiltonian(&sec, t, u)).unwrap());
            }
            union.sort_by(f64::total_cmp);
            if union.len() != full.len() {
                return outcome(false, format!("dimension mismatch at n={n}"));
            }
            let scale = h.max_entry();
            for (a, b) in full.iter().zip(&union) {
                worst = worst.max((a - b).abs() / b.abs().max(scale));
            }
        }
    }
    outcome(worst < 1e-9, format!("n = 0..80, max relative deviation {worst:.2e} (tol 1e-9)"))
}

fn criterion_6() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut worst: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    for k in 1..=20usize {
        let a = rng.random_range(0.5..2.0);
        let b = rng.random_range(0.5..2.0);
        let s = SpectralParams::new(a, b, 1e-6).unwrap();
        let (polys, _) = match polynomials(k, &s, &tol) {
            Ok(v) => v,
            Err(e) => return outcome(false, e.to_string()),
        };
        let top = polys.last().unwrap();
        let r = match find_roots(top, &tol) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("k={k}: {e}")),
        };
        let j = jacobi_monic(k, a - 1.0, b - 1.0).unwrap();
        let z = j.zeros().unwrap();
        worst = worst.max(hausdorff(&r.roots, &z));

        let spec = RunSpec::new(Mode::Spectrum, Params::Spectral { alpha: a, beta: b, gamma: 0.0, k });
        let doc = match run_spectrum(&spec) {
            Ok(d) => d,
            Err(e) => return outcome(false, format!("gamma = 0, k={k}: {e}")),
        };
        let kf = k as f64;
        for e in &doc.entries {
            worst_f = worst_f.max((e.f + kf * (a + b + kf - 1.0)).abs() / e.f.abs().max(1.0));
        }
    }
    outcome(
        worst < 1e-4 && worst_f < 1e-14,
        format!(
            "max root distance {worst:.2e} (tol 1e-4), gamma = 0 relative identity deviation {worst_f:.1e} (rounding only)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    let mut runs = 0;
    for k in 1..=15usize {
        for _ in 0..5 {
            let s = random_spectral(&mut rng);
            let states = match solve_all(k, &s, &tol) {
                Ok(v) => v,
                Err(e) => return outcome(false, e),
            };
            let configs = enumerate_configs(k);
            if configs.len() != k + 1 {
                return outcome(false, format!("k={k}: {} configurations", configs.len()));
            }
            for cfg in configs {
                let eq = match find_equilibrium(cfg, &s, &tol) {
                    Ok(e) => e,
                    Err(e) => return outcome(false, format!("k={k} {s:?}: {e}")),
                };
                if !eq.hessian_pd {
                    return outcome(false, format!("k={k} {cfg:?}: Hessian not positive definite"));
                }
                worst_g = worst_g.max(eq.grad_norm);
                let Some((_, r)) = states.iter().find(|(_, r)| r.occupation == cfg) else {
                    return outcome(false, format!("k={k}: no root set with occupation {cfg:?}"));
                };
                worst_h = worst_h.max(hausdorff(&eq.positions, &r.roots));
            }
            runs += 1;
        }
    }
    outcome(
        worst_g < 1e-8 && worst_h < 1e-6,
        format!("{runs} parameter sets, max gradient norm {worst_g:.2e} (tol 1e-8), max Hausdorff {worst_h:.2e} (tol 1e-6)"),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let s = random_spectral(&mut rng);
        let k = rng.random_range(1..=12usize);
        let x: Vec<f64> = (0..k).map(|_| rng.random_range(-8.0..3.0)).collect();
        let sep = x.iter().enumerate().all(|(i, a)| {
            (a.abs() - 1.0).abs() > 1e-3 && x[i + 1..].iter().all(|b| (a - b).abs() > 1e-3)
        });
        if !sep {
            continue;
        }
        let g = electro_gradient(&x, &s).unwrap();
        let r = bae_residual(&x, &s).unwrap();
        let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (gi, ri) in g.iter().zip(&r) {
            worst = worst.max((gi + 0.5 * ri).abs() / scale);
        }
        n += 1;
    }
    outcome(worst < 1e-13, format!("1000 points, max relative deviation {worst:.2e} (tol 1e-13)"))
}

fn criterion_10() -> Outcome {
    let mut times = Vec::new();
    for (k, limit) in [(100usize, 2.0), (200, 20.0)] {
        let spec = RunSpec::new(Mode::Verify, Params::Spectral { alpha: 0.5, beta: 0.5, gamma: 0.5, k });
        let start = Instant::now();
        let report = match run_verify(&spec) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("k={k}: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        if !report.passed {
            let c = report.first_failure().unwrap();
            return outcome(false, format!("k={k}: check '{}' failed, residual {:.2e}", c.name, c.residual));
        }
        times.push((k, secs, limit));
    }
    let ok = times.iter().all(|(_, s, l)| s < l);
    let detail = times
        .iter()
        .map(|(k, s, l)| format!("k={k} {s:.2} s (limit {l} s)"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ok, detail)
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 k = 2 reference values", criterion_1()));

    let g = grid();
    let fails = if g.failures.is_empty() { String::new() } else { format!(", first failure: {}", g.failures[0]) };
    let clean = g.failures.is_empty();
    results.push((
        "2 Van Vleck constant vs root sum",
        outcome(clean && g.van_vleck_sum < 1e-9, format!("{} states, max {:.2e} (tol 1e-9){fails}", g.states, g.van_vleck_sum)),
    ));
    results.push(("3 exact diagonalisation", criterion_3()));
    results.push(("4 full space vs sectors", criterion_4()));
    results.push((
        "5 Bethe residuals",
        outcome(
            clean && g.bae_abs < 1e-8,
            format!("max absolute {:.2e}, max scaled {:.2e} (tol 1e-8)", g.bae_abs, g.bae_scaled),
        ),
    ));
    results.push(("6 Jacobi limit", criterion_6()));
    results.push(("7 electrostatic equilibria", criterion_7()));
    results.push((
        "8 sum rules",
        outcome(
            clean && g.sumrule < 1e-8,
            format!("max scaled {:.2e} (tol 1e-8), origin guard skipped {} states", g.sumrule, g.inverse_pairs_skipped),
        ),
    ));
    results.push(("9 gradient vs residual", criterion_9()));
    results.push(("10 performance", criterion_10()));

    let mut all = true;
    for (name, o) in &results {
        println!("[{}] {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        all &= o.passed;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
