//! Run specifications, the end-to-end pipelines behind each command, and
//! their JSON / CSV / table renderings.
//!
//! Exit codes: 0 success, 2 a verification check failed, 3 a numerical stage
//! did not converge, 4 invalid input.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::electrostatics::{enumerate_configs, find_equilibrium, hausdorff, ElectroConfig};
use crate::fock_oracle::{sector_hamiltonian, tridiag_eigenvalues};
use crate::jacobi::jacobi_monic;
use crate::model::{to_spectral, PhysicalParams, SpectralParams};
use crate::polyroots::{bae_residual, find_roots, scaled_residual};
use crate::recurrence::{polynomials, ESPolynomial};
use crate::sumrules::{sum_rule_report, SumRuleReport};
use crate::tolerances::Tolerances;

/// Largest degree for which `verify` also runs the electrostatic minimiser.
pub const VERIFY_ELECTRO_MAX_K: usize = 30;
/// Relative energy deviation accepted against the exact diagonalisation.
pub const ORACLE_TOL: f64 = 1e-8;
/// Relative tolerance for the root-sum / Van Vleck identity in `verify`.
pub const VAN_VLECK_SUM_TOL: f64 = 1e-9;
/// Relative tolerance of the differential-equation residual in `verify`.
pub const ODE_TOL: f64 = 1e-8;
/// Hausdorff distance accepted between equilibria and root sets.
pub const MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("state {zeta}: {stage} failed: {message}")]
    NoConvergence { zeta: usize, stage: &'static str, message: String },
    #[error("verification failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::NoConvergence { .. } => 3,
            RunError::BadInput(_) | RunError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Spectrum,
    Oracle,
    Verify,
    Electro,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Table,
}

/// Exactly one parameterisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Params {
    Physical(PhysicalParams),
    Spectral { alpha: f64, beta: f64, gamma: f64, k: usize },
}

impl Params {
    pub fn k(&self) -> usize {
        match self {
            Params::Physical(p) => p.k,
            Params::Spectral { k, .. } => *k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// One of `gamma`, `alpha`, `beta` (spectral) or `t`, `U` (physical).
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub mode: Mode,
    pub params: Params,
    pub sweep: Option<SweepSpec>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub oracle: bool,
    pub digits: usize,
    /// Test hook: perturb the roots of one state before verification.
    pub corrupt_roots: bool,
}

impl RunSpec {
    pub fn new(mode: Mode, params: Params) -> Self {
        Self {
            mode,
            params,
            sweep: None,
            format: Format::Json,
            out: None,
            tolerances: Tolerances::default(),
            oracle: false,
            digits: 10,
            corrupt_roots: false,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        match (&self.sweep, self.mode) {
            (Some(_), m) if m != Mode::Sweep => {
                return Err(RunError::BadInput("sweep range given outside sweep mode".into()))
            }
            (None, Mode::Sweep) => return Err(RunError::BadInput("sweep mode needs a sweep range".into())),
            (Some(s), _) if s.steps < 2 => return Err(RunError::BadInput("sweep needs at least 2 steps".into())),
            (Some(s), _) if !s.from.is_finite() || !s.to.is_finite() => {
                return Err(RunError::BadInput("sweep bounds must be finite".into()))
            }
            _ => {}
        }
        if self.digits == 0 || self.digits > 17 {
            return Err(RunError::BadInput("digits must be between 1 and 17".into()));
        }
        match self.params {
            Params::Physical(p) => p.validate().map_err(|e| RunError::BadInput(e.to_string()))?,
            Params::Spectral { alpha, beta, gamma, .. } => {
                SpectralParams::new(alpha, beta, gamma).map_err(|e| RunError::BadInput(e.to_string()))?;
            }
        }
        if self.params.k() > self.tolerances.max_degree {
            return Err(RunError::BadInput(format!(
                "k = {} exceeds max_degree = {}",
                self.params.k(),
                self.tolerances.max_degree
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub zeta: usize,
    pub f: f64,
    /// Monic coefficients in the scaled variable; `b_j = coeffs[j] · 2^(coeff_scale_exp·(k-j))`.
    pub coeffs: Vec<f64>,
    pub coeff_scale_exp: i32,
    /// Zeros of the polynomial (spectral variable), ascending.
    pub roots: Vec<f64>,
    /// Occupation `(k1, k2)` of `(-∞,-1)` and `(-1,1)`.
    pub occupation: (usize, usize),
    /// Physical energy; present when physical parameters were given.
    pub energy: Option<f64>,
    /// `2γ Σx`, the energy up to the sector constant in units of `U`.
    pub reduced_energy: f64,
    pub max_bae_residual: f64,
    pub scaled_bae_residual: f64,
    pub sum_rules: Option<SumRuleReport>,
    pub oracle_energy: Option<f64>,
    pub oracle_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub params: Params,
    pub spectral: SpectralParams,
    pub k: usize,
    /// Physical roots are the negated spectral roots.
    pub reflected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBlock {
    /// Sector eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// `max |E_poly - E_oracle| / max(|E_oracle|, max|H_ij|)`.
    pub max_relative_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub tolerances: Tolerances,
}

impl Meta {
    fn now(tol: &Tolerances) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { version: env!("CARGO_PKG_VERSION").to_string(), timestamp, tolerances: *tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDocument {
    pub input: InputEcho,
    /// Ascending in energy (reduced energy when no physical parameters).
    pub entries: Vec<SpectrumEntry>,
    /// Pairs of `zeta` labels with numerically coincident `f`.
    pub degeneracies: Vec<(usize, usize)>,
    pub oracle: Option<OracleBlock>,
    pub meta: Meta,
}

/// Physical parameters for the oracle: given directly, or read off
/// half-integer charges with `t = γ`, `U = 1`.
fn oracle_params(params: &Params) -> Option<PhysicalParams> {
    match *params {
        Params::Physical(p) => Some(p),
        Params::Spectral { alpha, beta, gamma, k } => {
            let s = SpectralParams::new(alpha, beta, gamma).ok()?;
            let (nu1, nu2) = s.seniorities()?;
            (gamma > 0.0).then_some(PhysicalParams { t: gamma, u: 1.0, nu1, nu2, k })
        }
    }
}

fn resolve(params: &Params) -> Result<(SpectralParams, bool), RunError> {
    match *params {
        Params::Physical(p) => {
            let m = to_spectral(&p).map_err(|e| RunError::BadInput(e.to_string()))?;
            Ok((m.params, m.reflected))
        }
        Params::Spectral { alpha, beta, gamma, .. } => {
            let s = SpectralParams::new(alpha, beta, gamma).map_err(|e| RunError::BadInput(e.to_string()))?;
            Ok((s, false))
        }
    }
}

fn physical_energy(p: &PhysicalParams, reflected: bool, root_sum: f64) -> f64 {
    let sum = if reflected { -root_sum } else { root_sum };
    let n = p.boson_number() as f64;
    2.0 * p.t * sum + p.t * (p.nu2 as f64 - p.nu1 as f64) + p.u * n * n
}

fn jacobi_state(s: &SpectralParams, k: usize) -> Result<ESPolynomial, RunError> {
    let j = jacobi_monic(k, s.alpha - 1.0, s.beta - 1.0).map_err(|e| RunError::BadInput(e.to_string()))?;
    let f = j.van_vleck_constant();
    Ok(ESPolynomial { coeffs: j.coeffs, scale_exp: 0, f, zeta: 1, params: *s })
}

/// Spectrum, zeros, energies and diagnostics for every state.
pub fn run_spectrum(spec: &RunSpec) -> Result<SpectrumDocument, RunError> {
    spec.validate()?;
    let tol = &spec.tolerances;
    let k = spec.params.k();
    let (s, reflected) = resolve(&spec.params)?;

    let (polys, degeneracies) = if s.gamma == 0.0 {
        // only the Jacobi polynomial has full degree when the field vanishes
        (vec![jacobi_state(&s, k)?], Vec::new())
    } else {
        polynomials(k, &s, tol).map_err(|e| RunError::NoConvergence {
            zeta: 0,
            stage: "recurrence",
            message: e.to_string(),
        })?
    };
    let mut entries = Vec::with_capacity(polys.len());
    for p in &polys {
        let rs = if s.gamma == 0.0 {
            let zeros = jacobi_monic(k, s.alpha - 1.0, s.beta - 1.0)
                .and_then(|j| j.zeros())
                .map_err(|e| RunError::NoConvergence { zeta: p.zeta, stage: "roots", message: e.to_string() })?;
            let res = bae_residual(&zeros, &s).map_err(|e| RunError::NoConvergence {
                zeta: p.zeta,
                stage: "roots",
                message: e.to_string(),
            })?;
            crate::polyroots::RootSet {
                max_bae_residual: res.iter().fold(0.0f64, |a, r| a.max(r.abs())),
                scaled_bae_residual: scaled_residual(&zeros, &s),
                occupation: (0, k),
                poly_backward_error: 0.0,
                roots: zeros,
            }
        } else {
            find_roots(p, tol).map_err(|e| RunError::NoConvergence {
                zeta: p.zeta,
                stage: "roots",
                message: e.to_string(),
            })?
        };
        let sum = rs.sum();
        let energy = match spec.params {
            Params::Physical(pp) => Some(physical_energy(&pp, reflected, sum)),
            Params::Spectral { .. } => None,
        };
        let sum_rules = (k >= 1).then(|| sum_rule_report(&rs.roots, p.f, &s, tol).ok()).flatten();
        entries.push(SpectrumEntry {
            zeta: p.zeta,
            f: p.f,
            coeffs: p.coeffs.clone(),
            coeff_scale_exp: p.scale_exp,
            occupation: rs.occupation,
            energy,
            reduced_energy: 2.0 * s.gamma * sum,
            max_bae_residual: rs.max_bae_residual,
            scaled_bae_residual: rs.scaled_bae_residual,
            sum_rules,
            roots: rs.roots,
            oracle_energy: None,
            oracle_deviation: None,
        });
    }
    entries.sort_by(|a, b| {
        let ea = a.energy.unwrap_or(a.reduced_energy);
        let eb = b.energy.unwrap_or(b.reduced_energy);
        ea.total_cmp(&eb).then(a.zeta.cmp(&b.zeta))
    });
    let degeneracies = degeneracies
        .into_iter()
        .map(|(i, j)| (polys[i].zeta, polys[j].zeta))
        .collect();

    let mut doc = SpectrumDocument {
        input: InputEcho { params: spec.params, spectral: s, k, reflected },
        entries,
        degeneracies,
        oracle: None,
        meta: Meta::now(tol),
    };
    if spec.oracle || spec.mode == Mode::Verify {
        attach_oracle(&mut doc, &spec.params)?;
    }
    Ok(doc)
}

fn attach_oracle(doc: &mut SpectrumDocument, params: &Params) -> Result<(), RunError> {
    let Some(pp) = oracle_params(params) else {
        return Ok(());
    };
    let h = sector_hamiltonian(&pp.sector(), pp.t, pp.u);
    let energies = tridiag_eigenvalues(&h).map_err(|e| RunError::NoConvergence {
        zeta: 0,
        stage: "oracle",
        message: e.to_string(),
    })?;
    let scale_floor = h.max_entry();
    let mut worst: Option<f64> = None;
    if doc.entries.len() == energies.len() {
        let reflected = to_spectral(&pp).map(|m| m.reflected).unwrap_or(false);
        for (e, eo) in doc.entries.iter_mut().zip(&energies) {
            let root_sum: f64 = e.roots.iter().sum();
            let ep = e.energy.unwrap_or_else(|| physical_energy(&pp, reflected, root_sum));
            let dev = (ep - eo).abs() / eo.abs().max(scale_floor).max(f64::MIN_POSITIVE);
            e.oracle_energy = Some(*eo);
            e.oracle_deviation = Some(dev);
            worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
        }
    }
    doc.oracle = Some(OracleBlock { energies, max_relative_deviation: worst });
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDocument {
    pub input: PhysicalParams,
    pub basis_labels: Vec<(usize, usize)>,
    pub energies: Vec<f64>,
    pub meta: Meta,
}

/// Exact diagonalisation only; accepts `t = 0`.
pub fn run_oracle(spec: &RunSpec) -> Result<OracleDocument, RunError> {
    spec.validate()?;
    let pp = oracle_params(&spec.params).ok_or_else(|| {
        RunError::BadInput("oracle needs physical parameters or half-integer alpha, beta".into())
    })?;
    let h = sector_hamiltonian(&pp.sector(), pp.t, pp.u);
    let energies = tridiag_eigenvalues(&h).map_err(|e| RunError::NoConvergence {
        zeta: 0,
        stage: "oracle",
        message: e.to_string(),
    })?;
    Ok(OracleDocument { input: pp, basis_labels: h.basis_labels, energies, meta: Meta::now(&spec.tolerances) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub category: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: bool,
    pub document: SpectrumDocument,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn check(name: &str, category: &str, residual: f64, tolerance: f64) -> Check {
    Check {
        name: name.into(),
        category: category.into(),
        residual,
        tolerance,
        passed: residual.is_finite() && residual < tolerance,
    }
}

/// `[(x²-1)y'' + (α(x+1)+β(x-1)+γ(x²-1))y' + (-γkx+f)y] / y` for the product
/// of the zeros, relative to the magnitudes of its terms. The product form
/// stays accurate where the monomial coefficients do not.
pub fn ode_relative_residual(e: &SpectrumEntry, s: &SpectralParams, x: f64) -> f64 {
    let k = e.roots.len();
    let s1: f64 = e.roots.iter().map(|r| 1.0 / (x - r)).sum();
    let s2: f64 = e.roots.iter().map(|r| (x - r).powi(-2)).sum();
    let a = x * x - 1.0;
    let b = s.alpha * (x + 1.0) + s.beta * (x - 1.0) + s.gamma * (x * x - 1.0);
    let v = -s.gamma * k as f64 * x + e.f;
    let r = a * (s1 * s1 - s2) + b * s1 + v;
    let m = a.abs() * (s1 * s1 + s2) + (b * s1).abs() + (s.gamma * k as f64 * x).abs() + e.f.abs();
    if m > 0.0 {
        r.abs() / m
    } else {
        r.abs()
    }
}

/// Sample points away from the poles and the zeros.
fn ode_samples(roots: &[f64]) -> Vec<f64> {
    let lo = roots.first().copied().unwrap_or(-2.0).min(-2.0) - 1.0;
    let hi = roots.last().copied().unwrap_or(2.0).max(2.0) + 1.0;
    (0..20)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.37) / 20.0)
        .filter(|x| (x - 1.0).abs() > 1e-6 && (x + 1.0).abs() > 1e-6 && roots.iter().all(|r| (x - r).abs() > 1e-9))
        .collect()
}

/// Full invariant suite for one parameter set.
pub fn run_verify(spec: &RunSpec) -> Result<VerifyReport, RunError> {
    let mut doc = run_spectrum(spec)?;
    let tol = spec.tolerances;
    let s = doc.input.spectral;
    let k = doc.input.k;
    if spec.corrupt_roots {
        if let Some(e) = doc.entries.first_mut() {
            for r in e.roots.iter_mut() {
                *r += 1e-3 * (1.0 + r.abs());
            }
        }
    }
    let mut checks = Vec::new();

    let mut bae: f64 = 0.0;
    for e in &doc.entries {
        if !e.roots.is_empty() {
            bae = bae.max(scaled_residual(&e.roots, &s));
        }
    }
    checks.push(check("scaled Bethe residual", "bae", bae, tol.bae_tol));

    if s.gamma > 0.0 {
        let mut rec: f64 = 0.0;
        for e in &doc.entries {
            let p = ESPolynomial { coeffs: e.coeffs.clone(), scale_exp: e.coeff_scale_exp, f: e.f, zeta: e.zeta, params: s };
            rec = rec.max(p.recurrence_residual());
        }
        checks.push(check("recurrence rows", "recurrence", rec, tol.rec_tol));
    }

    let mut ode: f64 = 0.0;
    for e in &doc.entries {
        for x in ode_samples(&e.roots) {
            ode = ode.max(ode_relative_residual(e, &s, x));
        }
    }
    checks.push(check("differential equation", "ode", ode, ODE_TOL));

    let mut van_vleck_sum: f64 = 0.0;
    let c = k as f64 * (s.charge_sum() + k as f64 - 1.0);
    for e in &doc.entries {
        let sum: f64 = e.roots.iter().sum();
        van_vleck_sum = van_vleck_sum.max((e.f + s.gamma * sum + c).abs() / e.f.abs().max(1.0));
    }
    checks.push(check("Van Vleck constant vs root sum", "van_vleck_sum", van_vleck_sum, VAN_VLECK_SUM_TOL));

    if k >= 1 {
        let mut sr: f64 = 0.0;
        for e in &doc.entries {
            let rep = sum_rule_report(&e.roots, e.f, &s, &tol).map_err(|err| RunError::Validation(err.to_string()));
            sr = sr.max(rep.map(|r| r.max_scaled()).unwrap_or(f64::INFINITY));
        }
        checks.push(check("sum rules", "sumrules", sr, tol.sumrule_tol));
    }

    if s.gamma > 0.0 {
        let mut occ: Vec<usize> = doc.entries.iter().map(|e| e.occupation.0).collect();
        occ.sort_unstable();
        let missing = (0..=k).filter(|k1| occ.binary_search(k1).is_err()).count() + (occ.len().abs_diff(k + 1));
        checks.push(check("occupations cover every configuration", "occupation", missing as f64, 0.5));
    }

    if let Some(dev) = doc.oracle.as_ref().and_then(|o| o.max_relative_deviation) {
        checks.push(check("exact diagonalisation", "oracle", dev, ORACLE_TOL));
    }

    if s.gamma > 0.0 && (1..=VERIFY_ELECTRO_MAX_K).contains(&k) {
        let mut worst: f64 = 0.0;
        for (k1, k2) in enumerate_configs(k) {
            let d = match find_equilibrium((k1, k2), &s, &tol) {
                Ok(c) if c.hessian_pd => doc
                    .entries
                    .iter()
                    .filter(|e| e.occupation == (k1, k2))
                    .map(|e| hausdorff(&c.positions, &e.roots))
                    .fold(f64::INFINITY, f64::min),
                _ => f64::INFINITY,
            };
            worst = worst.max(d);
        }
        checks.push(check("electrostatic equilibria match zeros", "electrostatics", worst, MATCH_TOL));
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, passed, document: doc })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectroMatch {
    pub equilibrium: ElectroConfig,
    pub zeta: Option<usize>,
    pub hausdorff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectroDocument {
    pub input: InputEcho,
    pub equilibria: Vec<ElectroMatch>,
    pub meta: Meta,
}

/// One equilibrium per occupation, matched against the polynomial zeros.
pub fn run_electro(spec: &RunSpec) -> Result<ElectroDocument, RunError> {
    let doc = run_spectrum(spec)?;
    let s = doc.input.spectral;
    let mut equilibria = Vec::new();
    for cfg in enumerate_configs(doc.input.k) {
        let eq = find_equilibrium(cfg, &s, &spec.tolerances).map_err(|e| RunError::NoConvergence {
            zeta: 0,
            stage: "electrostatic minimisation",
            message: e.to_string(),
        })?;
        let best = doc
            .entries
            .iter()
            .filter(|e| e.occupation == cfg)
            .map(|e| (e.zeta, hausdorff(&eq.positions, &e.roots)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        equilibria.push(ElectroMatch {
            zeta: best.map(|b| b.0),
            hausdorff: best.map_or(f64::MAX, |b| b.1),
            equilibrium: eq,
        });
    }
    Ok(ElectroDocument { input: doc.input, equilibria, meta: doc.meta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub document: Option<SpectrumDocument>,
    pub error: Option<String>,
    /// Smallest gap between adjacent levels relative to the level scale.
    pub min_level_gap: Option<f64>,
    pub near_degenerate: bool,
    /// Some state had a zero within `zero_guard` of the origin.
    pub inverse_pairs_skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub base: Params,
    pub sweep: SweepSpec,
    pub points: Vec<SweepPoint>,
    pub meta: Meta,
}

const NEAR_DEGENERATE: f64 = 1e-6;

fn with_param(params: &Params, name: &str, v: f64) -> Result<Params, RunError> {
    let mut p = *params;
    match (&mut p, name) {
        (Params::Spectral { gamma, .. }, "gamma") => *gamma = v,
        (Params::Spectral { alpha, .. }, "alpha") => *alpha = v,
        (Params::Spectral { beta, .. }, "beta") => *beta = v,
        (Params::Physical(pp), "t") => pp.t = v,
        (Params::Physical(pp), "U") => pp.u = v,
        _ => return Err(RunError::BadInput(format!("cannot sweep '{name}' with these parameters"))),
    }
    Ok(p)
}

pub fn run_sweep(spec: &RunSpec) -> Result<SweepDocument, RunError> {
    spec.validate()?;
    let sw = spec.sweep.clone().expect("validated");
    with_param(&spec.params, &sw.param, sw.from)?;
    let mut points = Vec::with_capacity(sw.steps);
    for i in 0..sw.steps {
        let value = sw.from + (sw.to - sw.from) * i as f64 / (sw.steps - 1) as f64;
        let params = with_param(&spec.params, &sw.param, value)?;
        let point_spec = RunSpec { mode: Mode::Spectrum, params, sweep: None, ..spec.clone() };
        match run_spectrum(&point_spec) {
            Ok(doc) => {
                let levels: Vec<f64> = doc.entries.iter().map(|e| e.energy.unwrap_or(e.reduced_energy)).collect();
                let scale = levels.iter().fold(1.0f64, |a, e| a.max(e.abs()));
                let gap = levels.windows(2).map(|w| (w[1] - w[0]).abs() / scale).fold(None, |a: Option<f64>, g| {
                    Some(a.map_or(g, |a| a.min(g)))
                });
                let near_degenerate = !doc.degeneracies.is_empty() || gap.is_some_and(|g| g < NEAR_DEGENERATE);
                let inverse_pairs_skipped = doc.input.k >= 2
                    && doc.entries.iter().any(|e| e.sum_rules.is_some_and(|r| !r.inverse_pairs_applicable));
                points.push(SweepPoint {
                    value,
                    document: Some(doc),
                    error: None,
                    min_level_gap: gap,
                    near_degenerate,
                    inverse_pairs_skipped,
                });
            }
            Err(e) => points.push(SweepPoint {
                value,
                document: None,
                error: Some(e.to_string()),
                min_level_gap: None,
                near_degenerate: false,
                inverse_pairs_skipped: false,
            }),
        }
    }
    Ok(SweepDocument { base: spec.params, sweep: sw, points, meta: Meta::now(&spec.tolerances) })
}

fn fmt_num(x: f64, digits: usize) -> String {
    if x.is_finite() {
        format!("{:.*e}", digits - 1, x)
    } else {
        x.to_string()
    }
}

/// Physical coefficient `b_j`, possibly infinite for very high degree.
fn physical_coeff(e: &SpectrumEntry, j: usize) -> f64 {
    let k = e.coeffs.len() - 1;
    e.coeffs[j] * 2f64.powi(e.coeff_scale_exp * (k - j) as i32)
}

pub fn csv_header(k: usize) -> Vec<String> {
    let mut h = vec!["sweep_value".to_string(), "zeta".into(), "f".into(), "energy".into()];
    h.extend((0..=k).map(|j| format!("b{j}")));
    h.extend((1..=k).map(|j| format!("x{j}")));
    h.extend(["occupation_k1".into(), "occupation_k2".into(), "max_bae_residual".into()]);
    h
}

fn csv_rows(doc: &SpectrumDocument, sweep_value: Option<f64>, digits: usize) -> Vec<Vec<String>> {
    doc.entries
        .iter()
        .map(|e| {
            let mut row = vec![
                sweep_value.map(|v| fmt_num(v, digits)).unwrap_or_default(),
                e.zeta.to_string(),
                fmt_num(e.f, digits),
                fmt_num(e.energy.unwrap_or(e.reduced_energy), digits),
            ];
            row.extend((0..e.coeffs.len()).map(|j| fmt_num(physical_coeff(e, j), digits)));
            row.extend(e.roots.iter().map(|r| fmt_num(*r, digits)));
            row.push(e.occupation.0.to_string());
            row.push(e.occupation.1.to_string());
            row.push(fmt_num(e.max_bae_residual, digits));
            row
        })
        .collect()
}

fn write_csv(k: usize, rows: Vec<Vec<String>>) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(csv_header(k)).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| RunError::Io(e.to_string()))
}

pub fn spectrum_csv(doc: &SpectrumDocument, digits: usize) -> Result<String, RunError> {
    write_csv(doc.input.k, csv_rows(doc, None, digits))
}

pub fn sweep_csv(doc: &SweepDocument, digits: usize) -> Result<String, RunError> {
    let k = doc.base.k();
    let rows = doc
        .points
        .iter()
        .filter_map(|p| p.document.as_ref().map(|d| csv_rows(d, Some(p.value), digits)))
        .flatten()
        .collect();
    write_csv(k, rows)
}

pub fn spectrum_table(doc: &SpectrumDocument, digits: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "k = {}  alpha = {}  beta = {}  gamma = {}{}",
        doc.input.k,
        doc.input.spectral.alpha,
        doc.input.spectral.beta,
        doc.input.spectral.gamma,
        if doc.input.reflected { "  (reflected)" } else { "" }
    );
    let _ = writeln!(out, "{:>5} {:>8} {:>20} {:>20} {:>12}  roots", "zeta", "(k1,k2)", "f", "energy", "bae");
    for e in &doc.entries {
        let roots: Vec<String> = e.roots.iter().map(|r| format!("{:.*}", digits.min(12), r)).collect();
        let _ = writeln!(
            out,
            "{:>5} {:>8} {:>20} {:>20} {:>12.3e}  {}",
            e.zeta,
            format!("({},{})", e.occupation.0, e.occupation.1),
            fmt_num(e.f, digits),
            fmt_num(e.energy.unwrap_or(e.reduced_energy), digits),
            e.max_bae_residual,
            roots.join(" ")
        );
    }
    if let Some(o) = &doc.oracle {
        if let Some(d) = o.max_relative_deviation {
            let _ = writeln!(out, "oracle max relative deviation: {d:.3e}");
        }
    }
    out
}

pub fn verify_table(r: &VerifyReport) -> String {
    let mut out = String::new();
    for c in &r.checks {
        let _ = writeln!(
            out,
            "[{}] {:<16} {:<40} residual {:.3e}  tolerance {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.category,
            c.name,
            c.residual,
            c.tolerance
        );
    }
    out
}

fn to_json<T: Serialize>(v: &T) -> Result<String, RunError> {
    serde_json::to_string_pretty(v).map_err(|e| RunError::Io(e.to_string()))
}

/// Runs `spec` and renders its output; the error carries the exit status.
pub fn execute(spec: &RunSpec) -> Result<(String, i32), RunError> {
    let d = spec.digits;
    let text_and_code = match spec.mode {
        Mode::Spectrum => {
            let doc = run_spectrum(spec)?;
            let text = match spec.format {
                Format::Json => to_json(&doc)?,
                Format::Csv => spectrum_csv(&doc, d)?,
                Format::Table => spectrum_table(&doc, d),
            };
            (text, 0)
        }
        Mode::Oracle => {
            let doc = run_oracle(spec)?;
            let text = match spec.format {
                Format::Json => to_json(&doc)?,
                _ => doc.energies.iter().map(|e| fmt_num(*e, d)).collect::<Vec<_>>().join("\n") + "\n",
            };
            (text, 0)
        }
        Mode::Verify => {
            let r = run_verify(spec)?;
            let text = match spec.format {
                Format::Json => to_json(&r)?,
                _ => verify_table(&r),
            };
            (text, if r.passed { 0 } else { 2 })
        }
        Mode::Electro => {
            let doc = run_electro(spec)?;
            let text = match spec.format {
                Format::Json => to_json(&doc)?,
                _ => {
                    let mut out = String::new();
                    for m in &doc.equilibria {
                        let _ = writeln!(
                            out,
                            "({},{}) zeta {:?} hausdorff {:.3e} grad {:.3e} pd {}",
                            m.equilibrium.k1, m.equilibrium.k2, m.zeta, m.hausdorff, m.equilibrium.grad_norm, m.equilibrium.hessian_pd
                        );
                    }
                    out
                }
            };
            (text, 0)
        }
        Mode::Sweep => {
            let doc = run_sweep(spec)?;
            let text = match spec.format {
                Format::Json => to_json(&doc)?,
                _ => sweep_csv(&doc, d)?,
            };
            (text, 0)
        }
    };
    Ok(text_and_code)
}

/// Command-line interface.
#[derive(Debug, Parser)]
#[command(name = "lmg-stieltjes", version, about = "Exact spectra of the two-site Bose-Hubbard model from extended Heine-Stieltjes polynomials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Van Vleck constants, polynomials, zeros and energies of every state.
    Spectrum(CommonArgs),
    /// Exact diagonalisation of one seniority sector.
    Oracle(CommonArgs),
    /// Run every consistency check; nonzero exit on failure.
    Verify(CommonArgs),
    /// Electrostatic equilibria for every occupation, matched to zeros.
    Electro(CommonArgs),
    /// Repeat the spectrum over a range of one parameter.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// gamma, alpha, beta, t or U.
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
    },
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Number of boson pairs (polynomial degree).
    #[arg(long)]
    pub k: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Hopping amplitude.
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// On-site interaction.
    #[arg(long = "U", allow_negative_numbers = true)]
    pub u: Option<f64>,
    #[arg(long)]
    pub nu1: Option<u8>,
    #[arg(long)]
    pub nu2: Option<u8>,
    /// Attach exact-diagonalisation energies.
    #[arg(long)]
    pub oracle: bool,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol")]
    pub tol: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Significant digits in CSV and table output.
    #[arg(long, default_value_t = 10)]
    pub digits: usize,
    #[arg(long, hide = true)]
    pub corrupt_roots: bool,
}

impl CommonArgs {
    fn params(&self) -> Result<Params, RunError> {
        let spectral = [self.alpha, self.beta, self.gamma];
        let physical = [self.t, self.u];
        let any_spectral = spectral.iter().any(Option::is_some);
        let any_physical = physical.iter().any(Option::is_some) || self.nu1.is_some() || self.nu2.is_some();
        match (any_spectral, any_physical) {
            (true, false) => match spectral {
                [Some(alpha), Some(beta), Some(gamma)] => Ok(Params::Spectral { alpha, beta, gamma, k: self.k }),
                _ => Err(RunError::BadInput("--alpha, --beta and --gamma must be given together".into())),
            },
            (false, true) => match (self.t, self.u) {
                (Some(t), Some(u)) => Ok(Params::Physical(PhysicalParams {
                    t,
                    u,
                    nu1: self.nu1.unwrap_or(0),
                    nu2: self.nu2.unwrap_or(0),
                    k: self.k,
                })),
                _ => Err(RunError::BadInput("--t and --U must be given together".into())),
            },
            (true, true) => Err(RunError::BadInput("give either --alpha/--beta/--gamma or --t/--U/--nu1/--nu2, not both".into())),
            (false, false) => Err(RunError::BadInput("no model parameters given".into())),
        }
    }

    fn spec(&self, mode: Mode) -> Result<RunSpec, RunError> {
        let mut tolerances = Tolerances::default();
        for t in &self.tol {
            tolerances.apply_override(t).map_err(RunError::BadInput)?;
        }
        Ok(RunSpec {
            mode,
            params: self.params()?,
            sweep: None,
            format: self.format,
            out: self.out.clone(),
            tolerances,
            oracle: self.oracle,
            digits: self.digits,
            corrupt_roots: self.corrupt_roots,
        })
    }
}

impl Cli {
    pub fn run_spec(&self) -> Result<RunSpec, RunError> {
        match &self.command {
            Command::Spectrum(a) => a.spec(Mode::Spectrum),
            Command::Oracle(a) => a.spec(Mode::Oracle),
            Command::Verify(a) => a.spec(Mode::Verify),
            Command::Electro(a) => a.spec(Mode::Electro),
            Command::Sweep { common, param, from, to, steps } => {
                let mut s = common.spec(Mode::Sweep)?;
                s.sweep = Some(SweepSpec { param: param.clone(), from: *from, to: *to, steps: *steps });
                Ok(s)
            }
        }
    }
}

/// Parses arguments, runs, writes output; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    let result = cli.run_spec().and_then(|spec| {
        let (text, code) = execute(&spec)?;
        match &spec.out {
            Some(path) => std::fs::write(path, &text).map_err(|e| RunError::Io(e.to_string()))?,
            None => print!("{text}"),
        }
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
