use lmg_stieltjes::cli::{run_spectrum, spectrum_csv, Mode, Params, RunSpec, SpectrumDocument};
use lmg_stieltjes::electrostatics::electro_gradient;
use lmg_stieltjes::fock_oracle::{full_hamiltonian, sector_hamiltonian, tridiag_eigenvalues};
use lmg_stieltjes::model::{sectors_of, PhysicalParams, SpectralParams};
use lmg_stieltjes::polyroots::{bae_residual, coefficients_from_roots, find_roots};
use lmg_stieltjes::recurrence::{build_f_matrix, polynomials, van_vleck_spectrum};
use lmg_stieltjes::sumrules::sum_rule_report;
use lmg_stieltjes::tolerances::Tolerances;
use proptest::prelude::*;

fn spectral() -> impl Strategy<Value = SpectralParams> {
    (0.5f64..2.0, 0.5f64..2.0, -2.3f64..2.3).prop_map(|(a, b, lg)| SpectralParams::new(a, b, lg.exp()).unwrap())
}

fn physical(max_k: usize) -> impl Strategy<Value = PhysicalParams> {
    (-2.3f64..2.3, -2.3f64..2.3, any::<bool>(), any::<bool>(), 0u8..2, 0u8..2, 0..=max_k).prop_map(
        |(lt, lu, st, su, nu1, nu2, k)| {
            let t = if st { lt.exp() } else { -lt.exp() };
            let u = if su { lu.exp() } else { -lu.exp() };
            PhysicalParams::new(t, u, nu1, nu2, k).unwrap()
        },
    )
}

fn energies(p: PhysicalParams) -> Vec<f64> {
    let doc = run_spectrum(&RunSpec::new(Mode::Spectrum, Params::Physical(p))).unwrap();
    doc.entries.iter().map(|e| e.energy.unwrap()).collect()
}

fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= rel * scale)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn f_matrix_band_and_trace(k in 0usize..30, s in spectral()) {
        let f = build_f_matrix(k, &s);
        let d = f.to_dense();
        for i in 0..=k {
            for j in 0..=k {
                if j + 1 < i || j > i + 2 {
                    prop_assert_eq!(d[(i, j)], 0.0);
                }
            }
        }
        let expected: f64 = (0..=k).map(|j| -(j as f64) * (s.alpha + s.beta + j as f64 - 1.0)).sum();
        prop_assert!((f.trace() - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn van_vleck_count_and_trace(k in 0usize..40, s in spectral()) {
        let tol = Tolerances::default();
        let f = build_f_matrix(k, &s);
        let spec = van_vleck_spectrum(&f, &tol).unwrap();
        prop_assert_eq!(spec.pairs.len(), k + 1);
        let sum: f64 = spec.pairs.iter().map(|p| p.f).sum();
        prop_assert!((sum - f.trace()).abs() <= 1e-10 * f.trace().abs().max(1.0));
        // descending b_{k-1}
        for w in spec.pairs.windows(2) {
            prop_assert!(w[0].sub_leading() >= w[1].sub_leading());
        }
    }

    #[test]
    fn roots_satisfy_bethe_and_sum_rules(k in 1usize..25, s in spectral()) {
        let tol = Tolerances::default();
        let (polys, _) = polynomials(k, &s, &tol).unwrap();
        let mut occ = Vec::new();
        for p in &polys {
            prop_assert!(p.recurrence_residual() <= tol.rec_tol);
            let r = find_roots(p, &tol).unwrap();
            prop_assert!(r.scaled_bae_residual < tol.bae_tol);
            let rep = sum_rule_report(&r.roots, p.f, &s, &tol).unwrap();
            prop_assert!(rep.passes(&tol), "{:?}", rep);
            occ.push(r.occupation.0);
        }
        occ.sort_unstable();
        prop_assert_eq!(occ, (0..=k).collect::<Vec<_>>());
    }

    #[test]
    fn monic_roots_reproduce_polynomial(k in 1usize..15, s in spectral()) {
        let tol = Tolerances::default();
        let (polys, _) = polynomials(k, &s, &tol).unwrap();
        let p = &polys[polys.len() / 2];
        let r = find_roots(p, &tol).unwrap();
        let c = coefficients_from_roots(&r.roots);
        let b = p.unscaled_coeffs().unwrap();
        let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (x, y) in c.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn gradient_is_half_negated_residual(s in spectral(), x in prop::collection::vec(-6.0f64..3.0, 1..10)) {
        let ok = x.iter().enumerate().all(|(i, a)| {
            (a.abs() - 1.0).abs() > 1e-3 && x[i + 1..].iter().all(|b| (a - b).abs() > 1e-3)
        });
        prop_assume!(ok);
        let g = electro_gradient(&x, &s).unwrap();
        let r = bae_residual(&x, &s).unwrap();
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (gi, ri) in g.iter().zip(&r) {
            prop_assert!((gi + 0.5 * ri).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn site_exchange_symmetry(p in physical(12)) {
        let swapped = PhysicalParams::new(-p.t, p.u, p.nu2, p.nu1, p.k).unwrap();
        let mut a = energies(p);
        let mut b = energies(swapped);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert!(close(&a, &b, 1e-10));
    }

    #[test]
    fn energies_scale_linearly(p in physical(10), lam in 0.2f64..5.0) {
        let q = PhysicalParams::new(lam * p.t, lam * p.u, p.nu1, p.nu2, p.k).unwrap();
        let a: Vec<f64> = energies(p).iter().map(|e| lam * e).collect();
        prop_assert!(close(&a, &energies(q), 1e-10));
    }

    #[test]
    fn polynomial_energies_match_sector_oracle(p in physical(20)) {
        let mut a = energies(p);
        a.sort_by(f64::total_cmp);
        let o = tridiag_eigenvalues(&sector_hamiltonian(&p.sector(), p.t, p.u)).unwrap();
        prop_assert!(close(&a, &o, 1e-9));
    }

    #[test]
    fn full_space_is_union_of_sectors(n in 0usize..40, t in -3.0f64..3.0, u in -3.0f64..3.0) {
        let full = tridiag_eigenvalues(&full_hamiltonian(n, t, u)).unwrap();
        let mut union: Vec<f64> = sectors_of(n)
            .iter()
            .flat_map(|s| tridiag_eigenvalues(&sector_hamiltonian(s, t, u)).unwrap())
            .collect();
        union.sort_by(f64::total_cmp);
        prop_assert!(close(&full, &union, 1e-10));
    }

    #[test]
    fn json_round_trip_and_csv_agree(k in 0usize..8, s in spectral()) {
        let spec = RunSpec::new(Mode::Spectrum, Params::Spectral { alpha: s.alpha, beta: s.beta, gamma: s.gamma, k });
        let doc = run_spectrum(&spec).unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        let back: SpectrumDocument = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &doc);

        let csv = spectrum_csv(&doc, 17).unwrap();
        for (line, e) in csv.lines().skip(1).zip(&doc.entries) {
            let cells: Vec<&str> = line.split(',').collect();
            prop_assert_eq!(cells[2].parse::<f64>().unwrap(), e.f);
            for (j, r) in e.roots.iter().enumerate() {
                prop_assert_eq!(cells[4 + k + 1 + j].parse::<f64>().unwrap(), *r);
            }
        }
    }
}

#[test]
fn small_gamma_approaches_diagonal() {
    let tol = Tolerances::default();
    for k in [1usize, 4, 9] {
        let s = SpectralParams::new(0.8, 1.3, 1e-7).unwrap();
        let spec = van_vleck_spectrum(&build_f_matrix(k, &s), &tol).unwrap();
        let mut f: Vec<f64> = spec.pairs.iter().map(|p| p.f).collect();
        f.sort_by(f64::total_cmp);
        let mut diag: Vec<f64> = (0..=k).map(|j| -(j as f64) * (s.alpha + s.beta + j as f64 - 1.0)).collect();
        diag.sort_by(f64::total_cmp);
        for (a, b) in f.iter().zip(&diag) {
            assert!((a - b).abs() < 1e-5 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn every_degree_to_forty_matches_oracle() {
    for (t, u) in [(0.7, 1.9), (3.1, 0.4), (-1.2, 2.2)] {
        for (nu1, nu2) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            for k in 0..=40usize {
                let p = PhysicalParams::new(t, u, nu1, nu2, k).unwrap();
                let mut a = energies(p);
                a.sort_by(f64::total_cmp);
                let h = sector_hamiltonian(&p.sector(), t, u);
                let o = tridiag_eigenvalues(&h).unwrap();
                let scale = h.max_entry();
                for (x, y) in a.iter().zip(&o) {
                    assert!((x - y).abs() <= 1e-8 * y.abs().max(scale), "k={k} t={t} u={u} ({nu1},{nu2})");
                }
            }
        }
    }
}
