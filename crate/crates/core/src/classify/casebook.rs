//! The catalogue of extension cases, loaded from `casebook.toml`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liefield::{parse_generator, SpanMode, VectorField};
use crate::symexpr::{
    eval_numeric, parse_with, simplify, substitute_function, substitute_many, Expr, Lambda, ParseOptions,
    SamplePoint, Var,
};

/// Relative band inside which a constraint is reported as BOUNDARY.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Table1,
    Table2,
    Subclass,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct CaseRecord {
    pub id: String,
    pub group: Group,
    /// Number of independent classifying equations for generic members.
    #[serde(default)]
    pub k: Option<usize>,
    pub pattern: String,
    #[serde(default)]
    pub omega: Option<String>,
    #[serde(default)]
    pub real: Vec<String>,
    #[serde(default)]
    pub complex: Vec<String>,
    #[serde(default)]
    pub fixed: Vec<(String, String)>,
    #[serde(default)]
    pub derived: Vec<(String, String)>,
    #[serde(default)]
    pub constraints: Vec<String>,
    pub generators: Vec<String>,
    #[serde(default)]
    pub f_witnesses: Vec<String>,
    #[serde(default)]
    pub theta: Option<String>,
    #[serde(default)]
    pub eta0: Option<String>,
    /// Matching row of the full tables, for subclass records.
    #[serde(default)]
    pub row: Option<String>,
}

#[derive(Deserialize)]
struct Book {
    case: Vec<CaseRecord>,
}

static BOOK: OnceLock<Vec<CaseRecord>> = OnceLock::new();

/// All records, in file order.
pub fn casebook() -> &'static [CaseRecord] {
    BOOK.get_or_init(|| {
        let book: Book = toml::from_str(include_str!("casebook.toml")).expect("casebook.toml is well-formed");
        book.case
    })
}

pub fn case(id: &str) -> Result<&'static CaseRecord> {
    casebook().iter().find(|c| c.id == id).ok_or_else(|| Error::Casebook(format!("no case {id}")))
}

/// Parameter values: each entry is a numeric expression, exact when possible.
pub type Params = BTreeMap<String, Expr>;

pub fn param_value(p: &Params, name: &str) -> Option<Complex64> {
    p.get(name).and_then(|e| e.as_num()).map(|n| n.to_c64())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConstraintStatus {
    Holds,
    Fails,
    Boundary,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintCheck {
    pub constraint: String,
    pub status: ConstraintStatus,
    /// Value of `lhs − rhs`.
    pub value: f64,
}

fn options(n: usize, params: &Params) -> ParseOptions {
    let mut opts = ParseOptions::new(n);
    for (k, v) in params {
        opts.constants.insert(k.clone(), v.clone());
    }
    opts
}

/// Evaluates a constant expression; exact if the simplifier folds it.
pub fn eval_constant(text: &str, n: usize, params: &Params) -> Result<Expr> {
    let e = simplify(&parse_with(text, &options(n, params))?);
    if let Some(v) = e.as_num() {
        return Ok(Expr::num(v));
    }
    if e.depends_on_psi() || !e.params().is_empty() {
        return Err(Error::Casebook(format!("`{text}` is not a constant expression")));
    }
    let z = eval_numeric(&e, &SamplePoint::new(0.0, vec![0.0; n], Complex64::new(1.0, 0.0)))?;
    Ok(Expr::complex(snap_complex(z)))
}

fn snap_complex(z: Complex64) -> Complex64 {
    let snap = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
    Complex64::new(snap(z.re), snap(z.im))
}

fn numeric(e: &Expr) -> (Complex64, bool) {
    match e.as_num() {
        Some(v) => (v.to_c64(), v.is_exact()),
        None => (Complex64::new(f64::NAN, 0.0), false),
    }
}

impl CaseRecord {
    pub fn free_params(&self) -> impl Iterator<Item = &String> {
        self.real.iter().chain(self.complex.iter()).filter(|p| !self.fixed.iter().any(|(k, _)| k == *p))
    }

    /// Applies the fixed relations and computes derived quantities.
    pub fn resolve(&self, n: usize, given: &Params) -> Result<Params> {
        let mut p = Params::new();
        for name in self.real.iter().chain(&self.complex) {
            if let Some(v) = given.get(name) {
                p.insert(name.clone(), v.clone());
            }
        }
        for (name, text) in &self.fixed {
            let v = eval_constant(text, n, &p)?;
            p.insert(name.clone(), v);
        }
        for name in self.real.iter().chain(&self.complex) {
            if !p.contains_key(name) {
                return Err(Error::MissingParameter(name.clone()));
            }
        }
        for name in &self.real {
            let (z, _) = numeric(&p[name]);
            if z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
                return Err(Error::Invalid(format!("parameter {name} must be real")));
            }
        }
        for (name, text) in &self.derived {
            let v = eval_constant(text, n, &p)?;
            p.insert(name.clone(), v);
        }
        Ok(p)
    }

    pub fn check_constraints(&self, n: usize, params: &Params) -> Result<Vec<ConstraintCheck>> {
        let mut out = Vec::new();
        for c in &self.constraints {
            let (lhs, op, rhs) = split_constraint(c)?;
            let v = eval_constant(&format!("({lhs})-({rhs})"), n, params)?;
            let scale = eval_constant(&format!("abs({lhs})+abs({rhs})"), n, params)
                .map(|s| numeric(&s).0.re)
                .unwrap_or(1.0);
            let (z, exact) = numeric(&v);
            let band = BOUNDARY_TOL * (1.0 + scale);
            let zero = if exact { z.norm() == 0.0 } else { z.norm() <= band };
            let status = match op {
                "!=" if zero && !exact => ConstraintStatus::Boundary,
                "!=" => bool_status(!zero),
                "==" if zero => ConstraintStatus::Holds,
                "==" if z.norm() <= 1e3 * band => ConstraintStatus::Boundary,
                "==" => ConstraintStatus::Fails,
                _ => {
                    if z.im.abs() > band {
                        ConstraintStatus::Fails
                    } else if zero {
                        if exact {
                            ConstraintStatus::Fails
                        } else {
                            ConstraintStatus::Boundary
                        }
                    } else {
                        bool_status((op == ">") == (z.re > 0.0))
                    }
                }
            };
            out.push(ConstraintCheck { constraint: c.clone(), status, value: z.re });
        }
        Ok(out)
    }

    pub fn admissible(&self, n: usize, params: &Params) -> Result<bool> {
        Ok(self.check_constraints(n, params)?.iter().all(|c| c.status == ConstraintStatus::Holds))
    }

    /// A random admissible parameter set with small rational entries.
    pub fn draw<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Params> {
        for _ in 0..2000 {
            let mut p = Params::new();
            for name in &self.real {
                p.insert(name.clone(), Expr::rat(rng.gen_range(-12..=12), 4));
            }
            for name in &self.complex {
                let re = rng.gen_range(-8..=8);
                let im = rng.gen_range(-8..=8);
                p.insert(name.clone(), Expr::rat(re, 4) + Expr::i() * Expr::rat(im, 4));
                let v = simplify(&p[name]);
                p.insert(name.clone(), v);
            }
            let Ok(resolved) = self.resolve(n, &p) else { continue };
            if self.admissible(n, &resolved)? {
                return Ok(resolved);
            }
        }
        Err(Error::Casebook(format!("{}: no admissible parameters found", self.id)))
    }

    pub fn f_witness_texts(&self) -> Vec<String> {
        if self.omega.is_none() {
            return vec![String::new()];
        }
        if self.f_witnesses.is_empty() {
            vec!["w".into(), "exp(i*w)".into()]
        } else {
            self.f_witnesses.clone()
        }
    }

    pub fn kernel(&self, n: usize) -> Result<Vec<VectorField>> {
        let mut names = vec!["Pt", "P_a", "J_ab"];
        if self.group == Group::Subclass {
            names.extend(["G_a", "M"]);
        }
        let opts = ParseOptions::new(n);
        let mut out = Vec::new();
        for name in names {
            out.extend(parse_generator(name, n, &opts)?);
        }
        Ok(out)
    }

    /// The nonlinearity with `f` replaced by witness number `witness`.
    pub fn nonlinearity(&self, n: usize, params: &Params, witness: usize) -> Result<Expr> {
        let mut opts = options(n, params);
        if let Some(om) = &self.omega {
            opts.constants.insert("Omega".into(), parse_with(om, &options(n, params))?);
        }
        let mut f = parse_with(&self.pattern, &opts)?;
        if self.omega.is_some() {
            let texts = self.f_witness_texts();
            let text = texts.get(witness).ok_or_else(|| Error::Casebook(format!("no f witness {witness}")))?;
            f = substitute_function(&f, "f", &f_lambda(text, n)?)?;
        }
        Ok(simplify(&f))
    }

    pub fn instantiate(&self, n: usize, params: &Params, witness: usize) -> Result<CaseInstance> {
        let f = self.nonlinearity(n, params, witness)?;
        let extension = self.extension(n, params)?;
        let ideal = if self.eta0.is_some() {
            Ideal::Solutions
        } else if self.theta.is_some() {
            Ideal::Theta
        } else {
            Ideal::None
        };
        Ok(CaseInstance {
            id: self.id.clone(),
            n,
            params: params.clone(),
            f_witness: self.omega.as_ref().map(|_| self.f_witness_texts()[witness].clone()),
            f,
            kernel: self.kernel(n)?,
            extension,
            ideal,
        })
    }

    /// Extension generators with arbitrary-function slots replaced by witnesses.
    pub fn extension(&self, n: usize, params: &Params) -> Result<Vec<VectorField>> {
        let opts = options(n, params);
        let mut extension = Vec::new();
        for g in &self.generators {
            let fields = parse_generator(g, n, &opts)?;
            if g.contains("theta(") {
                let lam = self.theta.as_ref().ok_or_else(|| Error::Casebook("theta slot without eigenvalue".into()))?;
                let lam = numeric(&eval_constant(lam, n, params)?).0.re;
                for (label, w) in theta_witnesses(lam, n)? {
                    for q in &fields {
                        extension.push(instantiate_field(q, "theta", &w, &label)?);
                    }
                }
            } else if g.contains("eta0(") {
                let ws = match self.eta0.as_deref() {
                    Some("free") => eta0_free(n)?,
                    Some("linear") => {
                        let gamma = param_value(params, "gamma").ok_or_else(|| Error::MissingParameter("gamma".into()))?;
                        eta0_linear(gamma.re, n)?
                    }
                    _ => return Err(Error::Casebook(format!("{}: unknown eta0 family", self.id))),
                };
                for (label, w) in ws {
                    for q in &fields {
                        extension.push(instantiate_field(q, "eta0", &w, &label)?);
                    }
                }
            } else {
                extension.extend(fields);
            }
        }
        Ok(extension)
    }
}

fn bool_status(b: bool) -> ConstraintStatus {
    if b {
        ConstraintStatus::Holds
    } else {
        ConstraintStatus::Fails
    }
}

fn split_constraint(c: &str) -> Result<(&str, &str, &str)> {
    for op in ["!=", "==", ">", "<"] {
        if let Some(k) = c.find(op) {
            return Ok((c[..k].trim(), op, c[k + op.len()..].trim()));
        }
    }
    Err(Error::Casebook(format!("constraint without comparison: {c}")))
}

/// Which infinite family the case carries, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ideal {
    None,
    /// `η⁰∂_ψ + η⁰*∂_{ψ*}` with η⁰ solving the equation.
    Solutions,
    /// `iθ(x)(∂_ψ − ∂_{ψ*})` with θ from an eigenproblem.
    Theta,
}

#[derive(Clone, Debug)]
pub struct CaseInstance {
    pub id: String,
    pub n: usize,
    pub params: Params,
    pub f_witness: Option<String>,
    pub f: Expr,
    pub kernel: Vec<VectorField>,
    pub extension: Vec<VectorField>,
    pub ideal: Ideal,
}

impl CaseInstance {
    pub fn all_generators(&self) -> Vec<VectorField> {
        self.kernel.iter().chain(&self.extension).cloned().collect()
    }

    pub fn span_mode(&self) -> SpanMode {
        match self.ideal {
            Ideal::None => SpanMode::Exact,
            Ideal::Solutions => SpanMode::ModuloSolutions(self.f.clone()),
            Ideal::Theta => SpanMode::ModuloIdeal(self.f.clone()),
        }
    }
}

fn instantiate_field(q: &VectorField, name: &str, w: &Lambda, label: &str) -> Result<VectorField> {
    let sub = |e: &Expr| substitute_function(e, name, w).map(|e| simplify(&e));
    let out = VectorField::new(q.n, sub(&q.xi0)?, q.xi.iter().map(sub).collect::<Result<_>>()?, sub(&q.eta)?);
    Ok(out.labeled(format!("{} [{name} = {label}]", q.label())))
}

fn f_lambda(text: &str, n: usize) -> Result<Lambda> {
    let opts = ParseOptions::new(n).with_constant("w", Lambda::arg(0));
    Ok(Lambda::new(1, parse_with(text, &opts)?))
}

/// Turns an expression in (t, x) into a function body of the given shape.
fn to_lambda(body: &Expr, n: usize, with_t: bool) -> Lambda {
    let off = usize::from(with_t);
    let mut map: Vec<(Var, Expr)> = (1..=n).map(|a| (Var::X(a as u8), Lambda::arg(a - 1 + off))).collect();
    if with_t {
        map.push((Var::T, Lambda::arg(0)));
    }
    Lambda::new(n + off, substitute_many(body, &map))
}

/// Two real solutions of `Δθ = λθ` per sign of λ.
pub fn theta_witnesses(lambda: f64, n: usize) -> Result<Vec<(String, Lambda)>> {
    let k = lambda.abs().sqrt();
    let texts: [&str; 2] = if lambda < 0.0 {
        ["cos(k*x1)", if n >= 2 { "cos(r*k*x1)*cos(r*k*x2)" } else { "sin(k*x1)" }]
    } else if lambda > 0.0 {
        ["exp(k*x1)", if n >= 2 { "exp(r*k*(x1+x2))" } else { "exp(-k*x1)" }]
    } else {
        ["x1", if n >= 2 { "x1^2 - x2^2" } else { "1 + 2*x1" }]
    };
    let opts = ParseOptions::new(n)
        .with_constant("k", Expr::real(k))
        .with_constant("r", Expr::real(std::f64::consts::FRAC_1_SQRT_2));
    texts
        .iter()
        .map(|t| Ok((t.replace('k', &format!("{k:.4}")).replace('r', "0.7071"), to_lambda(&parse_with(t, &opts)?, n, false))))
        .collect()
}

/// A plane wave and a Gaussian solving the free equation.
pub fn eta0_free(n: usize) -> Result<Vec<(String, Lambda)>> {
    let kx: Vec<String> = (1..=n).map(|a| format!("x{a}/{a}")).collect();
    let k2: f64 = (1..=n).map(|a| 1.0 / (a * a) as f64).sum();
    let opts = ParseOptions::new(n).with_constant("kk", Expr::real(k2));
    let wave = format!("exp(i*({} - kk*t))", kx.join(" + "));
    let xx: Vec<String> = (1..=n).map(|a| format!("x{a}^2")).collect();
    let gauss = format!("(t - 2*i)^(-n/2)*exp(i*({})/(4*(t - 2*i)))", xx.join(" + "));
    Ok(vec![
        ("plane wave".into(), to_lambda(&parse_with(&wave, &opts)?, n, true)),
        ("gaussian".into(), to_lambda(&parse_with(&gauss, &opts)?, n, true)),
    ])
}

/// Standing-wave solutions `(u + iv)cos(k x₁)` of `iψ_t + Δψ + γψ + ψ* = 0`.
pub fn eta0_linear(gamma: f64, n: usize) -> Result<Vec<(String, Lambda)>> {
    let mut out = Vec::new();
    let mut k: f64 = 1.0;
    while out.len() < 2 {
        let g = gamma - k * k;
        if (g.abs() - 1.0).abs() < 0.1 {
            k += 0.25;
            continue;
        }
        let w = (g * g - 1.0).abs().sqrt();
        let text = if g.abs() > 1.0 {
            "(cos(w*t) + i*w/(g - 1)*sin(w*t))*cos(k*x1)"
        } else {
            "((exp(w*t) + exp(-w*t))/2 - i*w/(g - 1)*(exp(w*t) - exp(-w*t))/2)*cos(k*x1)"
        };
        let opts = ParseOptions::new(n)
            .with_constant("w", Expr::real(w))
            .with_constant("g", Expr::real(g))
            .with_constant("k", Expr::real(k));
        out.push((format!("standing wave k = {k}"), to_lambda(&parse_with(text, &opts)?, n, true)));
        k += 1.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liefield::solution_residual;
    use crate::symexpr::{is_zero, SamplerConfig};
    use rand::SeedableRng;

    #[test]
    fn record_counts() {
        let count = |g: Group| casebook().iter().filter(|c| c.group == g).count();
        assert_eq!((count(Group::Table1), count(Group::Table2), count(Group::Subclass)), (6, 15, 5));
    }

    #[test]
    fn fixed_and_derived() {
        let c = case("T2.15").unwrap();
        let mut p = Params::new();
        for (k, v) in [("delta2", 1), ("delta3", 3), ("delta4", 2)] {
            p.insert(k.into(), Expr::int(v));
        }
        let r = c.resolve(2, &p).unwrap();
        assert_eq!(r["delta1"], Expr::rat(1, 2));
        assert!(r["Delta"].is_zero());
        assert!(c.admissible(2, &r).unwrap());
    }

    #[test]
    fn constraint_boundary() {
        let c = case("T2.7").unwrap();
        let mut p = Params::new();
        p.insert("sigma".into(), Expr::one());
        p.insert("gamma".into(), Expr::real(2.0 + 1e-12));
        let checks = c.check_constraints(2, &p).unwrap();
        assert!(checks.iter().any(|x| x.status == ConstraintStatus::Boundary));
        p.insert("gamma".into(), Expr::int(2));
        let checks = c.check_constraints(2, &p).unwrap();
        assert!(checks.iter().any(|x| x.status == ConstraintStatus::Fails));
    }

    #[test]
    fn draws_are_admissible() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for c in casebook() {
            let p = c.draw(2, &mut rng).unwrap();
            assert!(c.admissible(2, &p).unwrap(), "{}", c.id);
        }
    }

    #[test]
    fn solution_witnesses_solve() {
        let cfg = SamplerConfig::new(2, 1).with_samples(40);
        for (_, w) in eta0_free(2).unwrap() {
            let eta = Expr::apply("eta0", vec![Expr::t(), Expr::x(1), Expr::x(2)]);
            let eta = substitute_function(&eta, "eta0", &w).unwrap();
            assert!(is_zero(&solution_residual(&Expr::zero(), &eta, 2), &cfg, 1e-9).unwrap().zero);
        }
        for gamma in [0.3, 4.0, -2.5] {
            let f = crate::symexpr::parse(&format!("{gamma}*psi + cpsi"), 2).unwrap();
            for (_, w) in eta0_linear(gamma, 2).unwrap() {
                let eta = substitute_function(&Expr::apply("eta0", vec![Expr::t(), Expr::x(1), Expr::x(2)]), "eta0", &w)
                    .unwrap();
                assert!(is_zero(&solution_residual(&f, &eta, 2), &cfg, 1e-9).unwrap().zero, "gamma {gamma}");
            }
        }
    }

    #[test]
    fn theta_witnesses_are_eigenfunctions() {
        let cfg = SamplerConfig::new(3, 2).with_samples(40);
        for n in 1..=3 {
            for lambda in [-2.0, 0.0, 1.5] {
                for (label, w) in theta_witnesses(lambda, n).unwrap() {
                    let args: Vec<Expr> = (1..=n).map(Expr::x).collect();
                    let th = substitute_function(&Expr::apply("theta", args), "theta", &w).unwrap();
                    let lap = Expr::sum((1..=n).map(|a| {
                        crate::symexpr::differentiate(
                            &crate::symexpr::differentiate(&th, &Var::X(a as u8)),
                            &Var::X(a as u8),
                        )
                    }));
                    let r = lap - Expr::real(lambda) * th;
                    assert!(is_zero(&r, &cfg, 1e-9).unwrap().zero, "{label} n={n}");
                }
            }
        }
    }
}
