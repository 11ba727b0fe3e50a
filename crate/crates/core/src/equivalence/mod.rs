//! Equivalence transformations of the class and their conditional extensions.
//!
//! A transform is a chain of steps. Each step is a pure transformation
//! `t̃ = δ²t, x̃ = δx, ψ̃ = αψ + β` (which maps `F` to `δ⁻²αF`), an additive
//! shift `ψ̃ = ψ + B(t, x)`, or an exponential gauge `ψ̃ = e^{w(t)}ψ`. Shifts
//! and gauges are admissible only when the induced `F̃` stays free of t and x.

mod algebra;

use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::liefield::VectorField;
use crate::symexpr::{
    conjugate, differentiate, is_zero, simplify, substitute_many, Expr, Node, SamplerConfig, Var,
};

pub use algebra::{equivalence_algebra, integrate_flow, EquivGenerator, FlowState};

#[derive(Clone, Debug, PartialEq)]
pub enum EquivStep {
    Pure { delta: f64, alpha: Complex64, beta: Complex64 },
    /// `ψ̃ = ψ + B(t, x)`.
    Shift(Expr),
    /// `ψ̃ = e^{w(t)} ψ`.
    Gauge(Expr),
}

impl EquivStep {
    pub fn name(&self) -> &'static str {
        match self {
            EquivStep::Pure { .. } => "pure",
            EquivStep::Shift(_) => "shift",
            EquivStep::Gauge(_) => "gauge",
        }
    }

    fn inverse(&self) -> EquivStep {
        match self {
            EquivStep::Pure { delta, alpha, beta } => {
                EquivStep::Pure { delta: 1.0 / delta, alpha: 1.0 / alpha, beta: -beta / alpha }
            }
            EquivStep::Shift(b) => EquivStep::Shift(simplify(&-b.clone())),
            EquivStep::Gauge(w) => EquivStep::Gauge(simplify(&-w.clone())),
        }
    }

    fn is_identity(&self) -> bool {
        match self {
            EquivStep::Pure { delta, alpha, beta } => {
                (delta - 1.0).abs() < 1e-15 && (alpha - 1.0).norm() < 1e-15 && beta.norm() < 1e-15
            }
            EquivStep::Shift(e) | EquivStep::Gauge(e) => e.is_zero(),
        }
    }
}

impl Serialize for EquivStep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("step", self.name())?;
        match self {
            EquivStep::Pure { delta, alpha, beta } => {
                m.serialize_entry("delta", delta)?;
                m.serialize_entry("alpha", &(alpha.re, alpha.im))?;
                m.serialize_entry("beta", &(beta.re, beta.im))?;
            }
            EquivStep::Shift(b) => m.serialize_entry("B", &b.to_string())?,
            EquivStep::Gauge(w) => m.serialize_entry("w", &w.to_string())?,
        }
        m.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivTransform {
    pub n: usize,
    pub steps: Vec<EquivStep>,
}

fn c(z: Complex64) -> Expr {
    Expr::complex(z)
}

impl EquivTransform {
    pub fn identity(n: usize) -> EquivTransform {
        EquivTransform { n, steps: Vec::new() }
    }

    /// `t̃ = δ²t, x̃ = δx, ψ̃ = αψ + β`.
    pub fn pure(n: usize, delta: f64, alpha: Complex64, beta: Complex64) -> EquivTransform {
        assert!(delta != 0.0 && alpha.norm() > 0.0, "delta and alpha must be nonzero");
        EquivTransform { n, steps: vec![EquivStep::Pure { delta, alpha, beta }] }
    }

    /// `ψ̃ = ψ + ν₀ + ν₁t + ν₂x·x`.
    pub fn shift(n: usize, nu: [Complex64; 3]) -> EquivTransform {
        let b = c(nu[0]) + c(nu[1]) * Expr::t() + c(nu[2]) * Expr::x_squared(n);
        EquivTransform { n, steps: vec![EquivStep::Shift(simplify(&b))] }
    }

    pub fn shift_by(n: usize, b: Expr) -> EquivTransform {
        EquivTransform { n, steps: vec![EquivStep::Shift(b)] }
    }

    /// `ψ̃ = ψe^{iσ₁t}`.
    pub fn phase_gauge(n: usize, sigma1: Complex64) -> EquivTransform {
        EquivTransform::gauge(n, simplify(&(Expr::i() * c(sigma1) * Expr::t())))
    }

    /// `ψ̃ = ψe^{−st}`.
    pub fn amp_gauge(n: usize, s: f64) -> EquivTransform {
        EquivTransform::gauge(n, simplify(&(Expr::real(-s) * Expr::t())))
    }

    pub fn gauge(n: usize, w: Expr) -> EquivTransform {
        EquivTransform { n, steps: vec![EquivStep::Gauge(w)] }
    }

    pub fn is_pure(&self) -> bool {
        self.steps.iter().all(|s| matches!(s, EquivStep::Pure { .. }))
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &EquivTransform) -> EquivTransform {
        assert_eq!(self.n, next.n);
        let mut steps = self.steps.clone();
        steps.extend(next.steps.iter().cloned());
        EquivTransform { n: self.n, steps }.compact()
    }

    /// Merges adjacent pure steps and drops identities.
    pub fn compact(&self) -> EquivTransform {
        let mut out: Vec<EquivStep> = Vec::new();
        for s in &self.steps {
            if let (Some(EquivStep::Pure { delta: d1, alpha: a1, beta: b1 }), EquivStep::Pure { delta: d2, alpha: a2, beta: b2 }) =
                (out.last(), s)
            {
                let merged = EquivStep::Pure { delta: d1 * d2, alpha: a2 * a1, beta: a2 * b1 + b2 };
                out.pop();
                out.push(merged);
            } else {
                out.push(s.clone());
            }
            if out.last().is_some_and(EquivStep::is_identity) {
                out.pop();
            }
        }
        EquivTransform { n: self.n, steps: out }
    }

    pub fn inverse(&self) -> EquivTransform {
        EquivTransform { n: self.n, steps: self.steps.iter().rev().map(EquivStep::inverse).collect() }
    }

    /// Composite pure parameters, when every step is pure.
    pub fn as_pure(&self) -> Option<(f64, Complex64, Complex64)> {
        let mut acc = (1.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        for s in &self.steps {
            let EquivStep::Pure { delta, alpha, beta } = s else { return None };
            acc = (acc.0 * delta, alpha * acc.1, alpha * acc.2 + beta);
        }
        Some(acc)
    }
}

fn substitute_psi(e: &Expr, psi: Expr) -> Expr {
    let cpsi = conjugate(&psi);
    substitute_many(e, &[(Var::Psi, psi), (Var::CPsi, cpsi)])
}

/// `ψ → e^{L}ψ` with the phase continued analytically (`φ → φ + Im L`)
/// rather than re-evaluated on the principal branch.
fn substitute_scaled(e: &Expr, log_factor: &Expr) -> Expr {
    const MARK: &str = "__phase";
    let marked = e.map_bottom_up(&mut |x| matches!(x.node(), Node::Phi).then(|| Expr::param(MARK)));
    let scaled = substitute_psi(&marked, log_factor.clone().exp() * Expr::psi());
    let phase = Expr::phi() + log_factor.clone().im();
    substitute_many(&scaled, &[(Var::param(MARK), phase)])
}

fn rescale_coords(e: &Expr, delta: f64, n: usize) -> Expr {
    let mut map = vec![(Var::T, Expr::t() * Expr::real(1.0 / (delta * delta)))];
    for a in 1..=n {
        map.push((Var::X(a as u8), Expr::x(a) * Expr::real(1.0 / delta)));
    }
    substitute_many(e, &map)
}

fn apply_step(step: &EquivStep, f: &Expr, n: usize) -> Expr {
    match step {
        EquivStep::Pure { delta, alpha, beta } => {
            let scaled = rescale_coords(f, *delta, n);
            // (ψ − β)/α = e^{L}ψ; the cut of ln(1 − β/ψ) is the segment [0, β]
            let mut log_factor = c(-alpha.ln());
            if *beta != Complex64::new(0.0, 0.0) {
                log_factor = (Expr::one() - c(*beta) * Expr::psi().recip()).ln() + log_factor;
            }
            let g = substitute_scaled(&scaled, &log_factor);
            c(alpha / (delta * delta)) * g
        }
        EquivStep::Shift(b) => {
            let mut terms = vec![substitute_psi(f, Expr::psi() - b.clone()), -(Expr::i() * differentiate(b, &Var::T))];
            for a in 1..=n {
                let xa = Var::X(a as u8);
                terms.push(-differentiate(&differentiate(b, &xa), &xa));
            }
            Expr::sum(terms)
        }
        EquivStep::Gauge(w) => {
            let ew = w.clone().exp();
            let inner = substitute_scaled(f, &-w.clone());
            ew * inner - Expr::i() * differentiate(w, &Var::T) * Expr::psi()
        }
    }
}

/// The nonlinearity of the transformed equation, in the new variables.
pub fn apply_to_f(tr: &EquivTransform, f: &Expr) -> Expr {
    let mut cur = f.clone();
    for s in &tr.steps {
        cur = simplify(&apply_step(s, &cur, tr.n));
    }
    cur
}

fn pushforward_step(step: &EquivStep, q: &VectorField) -> VectorField {
    let n = q.n;
    match step {
        EquivStep::Pure { delta, alpha, beta } => {
            let inv = (Expr::psi() - c(*beta)) * c(1.0 / alpha);
            let pull = |e: &Expr| substitute_psi(&rescale_coords(e, *delta, n), inv.clone());
            VectorField {
                n,
                xi0: Expr::real(delta * delta) * pull(&q.xi0),
                xi: q.xi.iter().map(|x| Expr::real(*delta) * pull(x)).collect(),
                eta: c(*alpha) * pull(&q.eta),
                label: q.label.clone(),
            }
        }
        EquivStep::Shift(b) => {
            let mut terms = vec![q.eta.clone(), &q.xi0 * differentiate(b, &Var::T)];
            for (a, xa) in q.xi.iter().enumerate() {
                terms.push(xa * differentiate(b, &Var::X(a as u8 + 1)));
            }
            let back = Expr::psi() - b.clone();
            VectorField {
                n,
                xi0: substitute_psi(&q.xi0, back.clone()),
                xi: q.xi.iter().map(|x| substitute_psi(x, back.clone())).collect(),
                eta: substitute_psi(&Expr::sum(terms), back),
                label: q.label.clone(),
            }
        }
        EquivStep::Gauge(w) => {
            let back = |e: &Expr| substitute_scaled(e, &-w.clone());
            let eta = w.clone().exp() * back(&q.eta) + back(&q.xi0) * differentiate(w, &Var::T) * Expr::psi();
            VectorField {
                n,
                xi0: back(&q.xi0),
                xi: q.xi.iter().map(back).collect(),
                eta,
                label: q.label.clone(),
            }
        }
    }
}

/// Image of a symmetry field in the new variables.
pub fn pushforward(tr: &EquivTransform, q: &VectorField) -> VectorField {
    let mut cur = q.clone();
    for s in &tr.steps {
        cur = pushforward_step(s, &cur).simplified();
    }
    cur
}

/// Whether `F` is free of t and x (numerically), i.e. defines an equation
/// of the class.
pub fn is_autonomous(f: &Expr, cfg: &SamplerConfig, tol: f64) -> Result<bool> {
    let mut vars = vec![Var::T];
    vars.extend((1..=cfg.n).map(|a| Var::X(a as u8)));
    for v in vars {
        if !is_zero(&differentiate(f, &v), cfg, tol)?.zero {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Equation operator `iψ_t + Δψ + F(ψ)` applied to a concrete function of (t, x).
pub fn equation_operator(f: &Expr, psi: &Expr, n: usize) -> Expr {
    let mut terms = vec![Expr::i() * differentiate(psi, &Var::T), substitute_psi(f, psi.clone())];
    for a in 1..=n {
        let xa = Var::X(a as u8);
        terms.push(differentiate(&differentiate(psi, &xa), &xa));
    }
    Expr::sum(terms)
}

/// Image `ψ̃(t̃, x̃)` of a function `ψ(t, x)` under the transform.
pub fn transform_function(tr: &EquivTransform, psi: &Expr) -> Expr {
    let mut cur = psi.clone();
    for s in &tr.steps {
        cur = match s {
            EquivStep::Pure { delta, alpha, beta } => c(*alpha) * rescale_coords(&cur, *delta, tr.n) + c(*beta),
            EquivStep::Shift(b) => cur + b.clone(),
            EquivStep::Gauge(w) => w.clone().exp() * cur,
        };
    }
    cur
}

pub use crate::classify::{normalize, Normalized};
