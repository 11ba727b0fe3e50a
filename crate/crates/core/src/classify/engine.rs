//! The classification pipeline: normalize, match a casebook row, instantiate
//! its generators and certify every one of them.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::casebook::{case, CaseRecord, ConstraintCheck, ConstraintStatus, Ideal, Params, BOUNDARY_TOL};
use super::quintuple::{satisfied_classifying_eqs, ClassifyingEq};
use super::routes::{linear_route, t1_route, t2_route, Route};
use crate::equivalence::{apply_to_f, is_autonomous, pushforward, EquivTransform};
use crate::error::{Error, Result};
use crate::invariance::{verify_symmetry_with, VerificationReport, VerifyOptions};
use crate::liefield::{parse_generator, SpanMode, VectorField};
use crate::symexpr::{differentiate, is_zero, simplify, Expr, ParseOptions, SamplerConfig, Var};

/// Reported in place of a case id when only the kernel survives.
pub const KERNEL_ONLY: &str = "KERNEL_ONLY";

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    /// Also run the prolongation oracle on every generator.
    pub prolongation: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { samples: 200, tol: 1e-9, seed: 2024, prolongation: false }
    }
}

impl ClassifyOptions {
    fn sampler(&self, n: usize) -> SamplerConfig {
        SamplerConfig::new(n, self.seed).with_samples(self.samples)
    }

    fn analysis_sampler(&self, n: usize) -> SamplerConfig {
        SamplerConfig::new(n, self.seed).with_samples(self.samples.min(60))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationResult {
    /// Matched case id, `None` for KERNEL_ONLY.
    pub case_id: Option<String>,
    /// Table row a subclass case corresponds to.
    pub row: Option<String>,
    pub n: usize,
    pub input: String,
    /// The nonlinearity after the normalization chain.
    pub canonical: String,
    pub params: BTreeMap<String, String>,
    /// Number of independent classifying equations (absent for linear F).
    pub k: Option<usize>,
    pub chain: EquivTransform,
    #[serde(skip)]
    pub kernel: Vec<VectorField>,
    /// Extension generators in the canonical variables.
    #[serde(skip)]
    pub extension: Vec<VectorField>,
    /// The same generators pulled back to the original variables.
    #[serde(skip)]
    pub pulled_back: Vec<VectorField>,
    #[serde(skip)]
    pub ideal: Ideal,
    #[serde(skip)]
    pub canonical_f: Expr,
    pub verification: Vec<VerificationReport>,
    /// Constraints that sit inside the tolerance band.
    pub boundary: Vec<ConstraintCheck>,
    pub notes: Vec<String>,
}

impl ClassificationResult {
    pub fn case_label(&self) -> &str {
        self.case_id.as_deref().unwrap_or(KERNEL_ONLY)
    }

    pub fn is_kernel_only(&self) -> bool {
        self.case_id.is_none()
    }

    /// Span bookkeeping for the canonical generators.
    pub fn span_mode(&self) -> SpanMode {
        match self.ideal {
            Ideal::None => SpanMode::Exact,
            Ideal::Solutions => SpanMode::ModuloSolutions(self.canonical_f.clone()),
            Ideal::Theta => SpanMode::ModuloIdeal(self.canonical_f.clone()),
        }
    }
}

/// Normalization outcome without verification.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub canonical: Expr,
    pub chain: EquivTransform,
    pub case_id: String,
    pub params: Params,
}

struct Matched {
    chain: EquivTransform,
    canonical: Expr,
    record: Option<(&'static CaseRecord, Params, Vec<ConstraintCheck>)>,
    k: Option<usize>,
    notes: Vec<String>,
}

/// `F_ψψ = F_ψψ* = F_ψ*ψ* = 0`.
pub fn is_linear(f: &Expr, cfg: &SamplerConfig) -> Result<bool> {
    let fp = differentiate(f, &Var::Psi);
    let fc = differentiate(f, &Var::CPsi);
    for e in [differentiate(&fp, &Var::Psi), differentiate(&fp, &Var::CPsi), differentiate(&fc, &Var::CPsi)] {
        if !is_zero(&simplify(&e), cfg, 1e-9)?.zero {
            return Ok(false);
        }
    }
    Ok(true)
}

fn fixed_status(given: &Expr, resolved: &Expr) -> Option<ConstraintStatus> {
    let (g, r) = (given.as_num()?, resolved.as_num()?);
    let diff = (g.to_c64() - r.to_c64()).norm();
    if g.is_exact() && r.is_exact() {
        return Some(if diff == 0.0 { ConstraintStatus::Holds } else { ConstraintStatus::Fails });
    }
    Some(if diff <= 1e-12 * (1.0 + r.to_c64().norm()) {
        ConstraintStatus::Holds
    } else if diff <= BOUNDARY_TOL * (1.0 + r.to_c64().norm()) {
        ConstraintStatus::Boundary
    } else {
        ConstraintStatus::Fails
    })
}

/// Fixed relations and constraints of one row against fitted parameters.
fn match_record(rec: &CaseRecord, n: usize, given: &Params) -> Result<Option<(Params, Vec<ConstraintCheck>)>> {
    let resolved = match rec.resolve(n, given) {
        Ok(p) => p,
        Err(Error::Invalid(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut checks = Vec::new();
    for (name, text) in &rec.fixed {
        let Some(g) = given.get(name) else { continue };
        match fixed_status(g, &resolved[name]) {
            Some(ConstraintStatus::Fails) | None => return Ok(None),
            Some(status) => checks.push(ConstraintCheck {
                constraint: format!("{name} == {text}"),
                status,
                value: (g.as_num().unwrap().to_c64() - resolved[name].as_num().unwrap().to_c64()).re,
            }),
        }
    }
    checks.extend(rec.check_constraints(n, &resolved)?);
    if checks.iter().any(|c| c.status == ConstraintStatus::Fails) {
        return Ok(None);
    }
    Ok(Some((resolved, checks)))
}

/// First candidate whose constraints all hold; otherwise the first one on a
/// boundary.
fn select(route: &Route, n: usize) -> Result<Option<(&'static CaseRecord, Params, Vec<ConstraintCheck>)>> {
    let mut boundary = None;
    for (id, given) in &route.candidates {
        let rec = case(id)?;
        if let Some((params, checks)) = match_record(rec, n, given)? {
            if checks.iter().all(|c| c.status == ConstraintStatus::Holds) {
                return Ok(Some((rec, params, checks)));
            }
            boundary.get_or_insert((rec, params, checks));
        }
    }
    Ok(boundary)
}

/// Directions in the span of a pair along which `Im(c + a) = 0`.
fn t1_directions(e1: &ClassifyingEq, e2: &ClassifyingEq) -> Vec<ClassifyingEq> {
    let (u, v) = ((e1.c + e1.a).im, (e2.c + e2.a).im);
    let s = e1.norm().max(e2.norm());
    if u.abs() <= 1e-9 * s && v.abs() <= 1e-9 * s {
        return vec![*e1, *e2, e1.add(e2)];
    }
    vec![e1.scale(v).add(&e2.scale(-u))]
}

/// Real combinations of `basis` annihilating every linear functional in
/// `constraints`.
fn subspace(basis: &[ClassifyingEq], constraints: fn(&ClassifyingEq) -> Vec<f64>) -> Vec<ClassifyingEq> {
    let rows = constraints(&basis[0]).len();
    let m = DMatrix::from_fn(rows, basis.len(), |i, j| constraints(&basis[j])[i]);
    let scale = basis.iter().map(ClassifyingEq::norm).fold(0.0, f64::max);
    let gram = m.transpose() * &m;
    let eig = gram.symmetric_eigen();
    (0..basis.len())
        .filter(|&j| eig.eigenvalues[j].abs() <= 1e-14 * (1.0 + scale * scale))
        .map(|j| {
            let v = eig.eigenvectors.column(j);
            basis.iter().zip(v.iter()).fold(ClassifyingEq::new(ZERO, ZERO, ZERO, ZERO, ZERO), |acc, (e, s)| acc.add(&e.scale(*s)))
        })
        .collect()
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// More than two equations: only combinations with real `c + a` can come
/// from a symmetry (there `c + a = ξ⁰_t`). Homogeneous ones are tried first.
fn symmetry_compatible_routes(f: &Expr, basis: &[ClassifyingEq], n: usize) -> Result<Vec<Route>> {
    let homogeneous = subspace(basis, |e| vec![(e.c + e.a).im, e.d.re, e.d.im, e.e.re, e.e.im]);
    let compatible = subspace(basis, |e| vec![(e.c + e.a).im]);
    let mut routes = Vec::new();
    for v in [homogeneous, compatible] {
        if v.len() == 2 {
            routes.extend(t2_route(f, &v[0], &v[1], n)?);
        }
        let mut dirs = v.clone();
        if v.len() == 2 {
            dirs.push(v[0].add(&v[1]));
        }
        routes.extend(dirs.iter().filter_map(|e| t1_route(e, n)));
    }
    Ok(routes)
}

fn match_case(f: &Expr, n: usize, opts: &ClassifyOptions) -> Result<Matched> {
    let cfg = opts.analysis_sampler(n);
    if !is_autonomous(f, &cfg, 1e-9)? {
        return Err(Error::Invalid("F must not depend on t or x".into()));
    }
    let mut notes = Vec::new();
    let (routes, k): (Vec<Route>, Option<usize>) = if is_linear(f, &cfg)? {
        notes.push("F is linear in (psi, cpsi)".into());
        (vec![linear_route(f, n)?], None)
    } else {
        let basis = satisfied_classifying_eqs(f, &cfg)?;
        let eqs = &basis.basis;
        let routes = match basis.k {
            0 => Vec::new(),
            1 => t1_route(&eqs[0], n).into_iter().collect(),
            2 => {
                let mut r: Vec<Route> = t2_route(f, &eqs[0], &eqs[1], n)?.into_iter().collect();
                r.extend(t1_directions(&eqs[0], &eqs[1]).iter().filter_map(|e| t1_route(e, n)));
                r
            }
            _ => {
                notes.push(format!("nonlinear F satisfies {} independent classifying equations", basis.k));
                symmetry_compatible_routes(f, eqs, n)?
            }
        };
        (routes, Some(basis.k))
    };
    for route in &routes {
        if let Some(record) = select(route, n)? {
            let canonical = prune(&apply_to_f(&route.chain, f));
            return Ok(Matched { chain: route.chain.clone(), canonical, record: Some(record), k, notes });
        }
    }
    if !routes.is_empty() {
        notes.push("normalized form matches no row under its constraints".into());
    }
    Ok(Matched { chain: EquivTransform::identity(n), canonical: f.clone(), record: None, k, notes })
}

/// Drops floating constants at round-off level left behind by the chain.
fn prune(e: &Expr) -> Expr {
    let cleaned = e.map_bottom_up(&mut |x| {
        let v = x.as_num().filter(|v| !v.is_exact())?.to_c64();
        let tiny = |p: f64| if p.abs() < 1e-13 { 0.0 } else { p };
        let z = Complex64::new(tiny(v.re), tiny(v.im));
        (z != v).then(|| Expr::complex(z))
    });
    simplify(&cleaned)
}

/// Canonical representative, transform chain and matched case id.
pub fn normalize(f: &Expr, n: usize) -> Result<Normalized> {
    let m = match_case(f, n, &ClassifyOptions::default())?;
    let Some((rec, params, _)) = m.record else {
        return Err(Error::NotNormalizable(format!("no casebook row fits {f}")));
    };
    Ok(Normalized { canonical: m.canonical, chain: m.chain, case_id: rec.id.clone(), params })
}

fn base_kernel(n: usize, galilei: bool) -> Result<Vec<VectorField>> {
    let mut names = vec!["Pt", "P_a", "J_ab"];
    if galilei {
        names.extend(["G_a", "M"]);
    }
    let mut out = Vec::new();
    for name in names {
        out.extend(parse_generator(name, n, &ParseOptions::new(n))?);
    }
    Ok(out)
}

fn certify(
    f: &Expr,
    q: &VectorField,
    case_id: &str,
    opts: &ClassifyOptions,
    cfg: &SamplerConfig,
) -> Result<VerificationReport> {
    let vopts = VerifyOptions { prolongation: opts.prolongation, prolongation_samples: 60 };
    let r = verify_symmetry_with(f, q, cfg, opts.tol, vopts);
    if !r.passed() {
        return Err(Error::UnverifiedMatch { case: case_id.to_string(), generator: q.label() });
    }
    Ok(r)
}

fn build_result(
    f: &Expr,
    n: usize,
    m: Matched,
    rec: Option<(&'static CaseRecord, Params, Vec<ConstraintCheck>)>,
    galilei: bool,
    opts: &ClassifyOptions,
) -> Result<ClassificationResult> {
    let cfg = opts.sampler(n);
    let kernel = base_kernel(n, galilei)?;
    let mut verification = Vec::new();
    let label = rec.as_ref().map(|r| r.0.id.clone()).unwrap_or_else(|| KERNEL_ONLY.into());
    for q in &kernel {
        verification.push(certify(f, q, &label, opts, &cfg)?);
    }
    let mut result = ClassificationResult {
        case_id: None,
        row: None,
        n,
        input: f.to_string(),
        canonical: m.canonical.to_string(),
        params: BTreeMap::new(),
        k: m.k,
        chain: m.chain.clone(),
        kernel,
        extension: Vec::new(),
        pulled_back: Vec::new(),
        ideal: Ideal::None,
        canonical_f: m.canonical.clone(),
        verification,
        boundary: Vec::new(),
        notes: m.notes,
    };
    let Some((rec, params, checks)) = rec else { return Ok(result) };
    let extension = rec.extension(n, &params)?;
    let back = m.chain.inverse();
    for q in &extension {
        result.verification.push(certify(&m.canonical, q, &rec.id, opts, &cfg)?);
        let p = pushforward(&back, q).labeled(format!("{} (original variables)", q.label()));
        result.verification.push(certify(f, &p, &rec.id, opts, &cfg)?);
        result.pulled_back.push(p);
    }
    result.case_id = Some(rec.id.clone());
    result.row = rec.row.clone();
    result.params = params.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
    result.extension = extension;
    result.ideal = if rec.eta0.is_some() {
        Ideal::Solutions
    } else if rec.theta.is_some() {
        Ideal::Theta
    } else {
        Ideal::None
    };
    result.boundary = checks.into_iter().filter(|c| c.status == ConstraintStatus::Boundary).collect();
    Ok(result)
}

/// Maximal Lie invariance algebra of `iψ_t + Δψ + F = 0`, certified.
pub fn classify(f: &Expr, n: usize, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    let mut m = match_case(f, n, opts)?;
    let rec = m.record.take();
    build_result(f, n, m, rec, false, opts)
}

/// Table row corresponding to each subclass case.
pub const SUBCLASS_ROWS: [(&str, &str); 5] =
    [("T2.7", "Thm.1"), ("T2.8", "Thm.2"), ("T2.11", "Thm.3"), ("T2.12", "Thm.4"), ("T2.1", "Thm.5")];

/// Classification within `F = f(|ψ|)ψ`, whose kernel is the extended
/// Galilei algebra. `f` is an expression in `rho`.
pub fn subclass_classify(f_rho: &Expr, n: usize, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    let f = simplify(&(f_rho * Expr::psi()));
    let cfg = opts.analysis_sampler(n);
    let m_check = differentiate(&f, &Var::Psi) * Expr::psi() - differentiate(&f, &Var::CPsi) * Expr::cpsi() - f.clone();
    if !is_zero(&simplify(&m_check), &cfg, 1e-9)?.zero {
        return Err(Error::Invalid("f must depend on |psi| only".into()));
    }
    let mut m = match_case(&f, n, opts)?;
    let rec = match m.record.take() {
        None => None,
        Some((row, params, checks)) if row.id == "T1.4" => {
            m.notes.push("row T1.4: the extended Galilei algebra is maximal".into());
            let _ = (params, checks);
            None
        }
        Some((row, params, checks)) => {
            let Some((_, thm)) = SUBCLASS_ROWS.iter().find(|(r, _)| *r == row.id) else {
                return Err(Error::Invalid(format!("row {} lies outside the subclass", row.id)));
            };
            let thm = case(thm)?;
            let params = thm.resolve(n, &params)?;
            Some((thm, params, checks))
        }
    };
    build_result(&f, n, m, rec, true, opts)
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma2Verdict {
    pub k: usize,
    pub linear: bool,
    /// `k ≤ 2` unless F is linear.
    pub holds: bool,
}

/// Three or more independent classifying equations force F to be linear.
pub fn lemma2_check(f: &Expr, cfg: &SamplerConfig) -> Result<Lemma2Verdict> {
    let basis = satisfied_classifying_eqs(f, cfg)?;
    let linear = is_linear(f, cfg)?;
    Ok(Lemma2Verdict { k: basis.k, linear, holds: linear || basis.k <= 2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn opts() -> ClassifyOptions {
        ClassifyOptions { samples: 80, prolongation: true, ..Default::default() }
    }

    fn run(text: &str, n: usize) -> ClassificationResult {
        classify(&parse(text, n).unwrap(), n, &opts()).unwrap()
    }

    fn labels(r: &ClassificationResult) -> Vec<String> {
        r.extension.iter().map(|q| q.label()).collect()
    }

    #[test]
    fn square_is_a_power_row() {
        let r = run("psi^2", 1);
        assert_eq!(r.case_label(), "T1.1");
        assert_eq!((r.params["gamma1"].as_str(), r.params["gamma2"].as_str()), ("1", "0"));
    }

    #[test]
    fn affine_reduces_to_free() {
        let r = run("3*psi + 2", 2);
        assert_eq!(r.case_label(), "T2.1");
        assert!(r.canonical_f.is_zero(), "{}", r.canonical);
        assert_eq!(r.chain.steps.len(), 2);
    }

    #[test]
    fn critical_power_gains_projective() {
        let r = run("abs(psi)^2*psi", 2);
        assert_eq!(r.case_label(), "T2.8");
        assert_eq!(labels(&r).len(), 2 + 1 + 1 + 1);
        assert!(labels(&r).iter().any(|l| l == "Pi"));
        let r = run("2*abs(psi)^2*psi", 3);
        assert_eq!(r.case_label(), "T2.7");
        assert!(!labels(&r).iter().any(|l| l == "Pi"));
    }

    #[test]
    fn logarithmic_row() {
        let r = run("-(ln(abs(psi)))*psi", 2);
        assert_eq!(r.case_label(), "T2.12");
        assert_eq!(r.params["delta1"], "1");
        assert!(r.verification.iter().all(|v| v.passed()));
    }

    #[test]
    fn generic_nonlinearity_keeps_the_kernel() {
        let r = run("abs(psi)^2*psi + exp(re(psi))", 2);
        assert!(r.is_kernel_only());
        assert_eq!(r.kernel.len(), 1 + 2 + 1);
    }

    #[test]
    fn boundary_is_reported() {
        let f = parse("abs(psi)^(2.0000000001)*psi", 2).unwrap();
        let r = classify(&f, 2, &ClassifyOptions { samples: 60, ..Default::default() }).unwrap();
        assert!(!r.boundary.is_empty(), "{:?}", r.boundary);
    }

    #[test]
    fn normalization_is_idempotent() {
        for text in ["(2+i)*abs(psi)^3*psi", "3*exp(re(psi))+1", "-(1+2*i)*ln(abs(psi))*psi + 0.5*phi*psi"] {
            let f = parse(text, 2).unwrap();
            let a = normalize(&f, 2).unwrap();
            let b = normalize(&a.canonical, 2).unwrap();
            assert_eq!(a.case_id, b.case_id);
            let cfg = SamplerConfig::new(2, 4).with_samples(40);
            assert!(is_zero(&(a.canonical.clone() - b.canonical.clone()), &cfg, 1e-9).unwrap().zero, "{text}");
        }
    }

    #[test]
    fn subclass_cases() {
        let o = opts();
        let r = subclass_classify(&parse("abs(psi)^3", 2).unwrap(), 2, &o).unwrap();
        assert_eq!((r.case_label(), r.row.as_deref()), ("Thm.1", Some("T2.7")));
        let r = subclass_classify(&parse("0", 2).unwrap(), 2, &o).unwrap();
        assert_eq!(r.case_label(), "Thm.5");
        let r = subclass_classify(&parse("-(1+2*i)*ln(rho)", 2).unwrap(), 2, &o).unwrap();
        assert_eq!(r.case_label(), "Thm.3");
        let r = subclass_classify(&parse("rho^2 + rho^3", 2).unwrap(), 2, &o).unwrap();
        assert!(r.is_kernel_only());
        assert_eq!(r.kernel.len(), 1 + 2 + 1 + 2 + 1);
        assert!(subclass_classify(&parse("re(psi)", 2).unwrap(), 2, &o).is_err());
    }

    #[test]
    fn lemma_two() {
        let cfg = SamplerConfig::new(2, 8).with_samples(40);
        let v = lemma2_check(&parse("abs(psi)^2*psi", 2).unwrap(), &cfg).unwrap();
        assert_eq!((v.k, v.linear, v.holds), (2, false, true));
        let v = lemma2_check(&parse("0.5*psi + cpsi", 2).unwrap(), &cfg).unwrap();
        assert!(v.linear && v.k >= 3 && v.holds);
    }
}
