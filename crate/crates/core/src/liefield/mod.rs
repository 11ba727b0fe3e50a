//! Point-symmetry vector fields on (t, x, ψ, ψ*) space.
//!
//! A field `Q = ξ⁰∂_t + ξ^a∂_a + η∂_ψ + η*∂_{ψ*}` stores only `η`; the
//! `∂_{ψ*}` coefficient is always `conjugate(η)`.

mod ansatz;
mod catalog;
mod span;

use std::fmt;

use crate::error::Result;
use crate::symexpr::{
    conjugate, differentiate, eval_numeric, is_zero, simplify, Expr, SamplerConfig, Var,
};

pub use ansatz::{check_defining_equations, from_ansatz, AnsatzParams, DefiningReport};
pub use catalog::{named_generator, parse_generator, GenParams};
pub use span::{bracket_closure, solution_residual, span_contains, BracketCheck, SpanMode, SpanResult};

#[derive(Clone, Debug)]
pub struct VectorField {
    pub n: usize,
    pub xi0: Expr,
    pub xi: Vec<Expr>,
    pub eta: Expr,
    /// Operator notation used in reports (e.g. `G_1`, `I-2D`).
    pub label: Option<String>,
}

/// Structural equality of the coefficients; labels are ignored.
impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.xi0 == other.xi0 && self.xi == other.xi && self.eta == other.eta
    }
}

impl VectorField {
    pub fn zero(n: usize) -> VectorField {
        VectorField { n, xi0: Expr::zero(), xi: vec![Expr::zero(); n], eta: Expr::zero(), label: None }
    }

    pub fn new(n: usize, xi0: Expr, xi: Vec<Expr>, eta: Expr) -> VectorField {
        assert_eq!(xi.len(), n, "xi must have n components");
        VectorField { n, xi0, xi, eta, label: None }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> VectorField {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.to_string())
    }

    /// Coefficient of `∂_{ψ*}`.
    pub fn eta_conj(&self) -> Expr {
        conjugate(&self.eta)
    }

    /// Action of the field on a function of (t, x, ψ, ψ*).
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut terms = vec![&self.xi0 * differentiate(f, &Var::T)];
        for (a, xa) in self.xi.iter().enumerate() {
            terms.push(xa * differentiate(f, &Var::X(a as u8 + 1)));
        }
        terms.push(&self.eta * differentiate(f, &Var::Psi));
        terms.push(self.eta_conj() * differentiate(f, &Var::CPsi));
        Expr::sum(terms)
    }

    pub fn scale(&self, c: &Expr) -> VectorField {
        VectorField {
            n: self.n,
            xi0: c * &self.xi0,
            xi: self.xi.iter().map(|x| c * x).collect(),
            eta: c * &self.eta,
            label: None,
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.n, other.n);
        VectorField {
            n: self.n,
            xi0: &self.xi0 + &other.xi0,
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect(),
            eta: &self.eta + &other.eta,
            label: None,
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// Real-linear combination `Σ c_k Q_k`.
    pub fn combine(n: usize, terms: &[(Expr, &VectorField)]) -> VectorField {
        let mut acc = VectorField::zero(n);
        for (c, q) in terms {
            acc = acc.add(&q.scale(c));
        }
        acc.simplified()
    }

    pub fn simplified(&self) -> VectorField {
        VectorField {
            n: self.n,
            xi0: simplify(&self.xi0),
            xi: self.xi.iter().map(simplify).collect(),
            eta: simplify(&self.eta),
            label: self.label.clone(),
        }
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField {
            n: self.n,
            xi0: f(&self.xi0),
            xi: self.xi.iter().map(&f).collect(),
            eta: f(&self.eta),
            label: self.label.clone(),
        }
    }

    /// Components in the order t, x_1..x_n, ψ.
    pub fn components(&self) -> Vec<Expr> {
        let mut v = Vec::with_capacity(self.n + 2);
        v.push(self.xi0.clone());
        v.extend(self.xi.iter().cloned());
        v.push(self.eta.clone());
        v
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.components().iter().all(Expr::is_zero)
    }

    /// Numeric zero test of every component.
    pub fn is_zero(&self, cfg: &SamplerConfig, tol: f64) -> Result<bool> {
        for c in self.components() {
            if !is_zero(&c, cfg, tol)?.zero {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks that ξ⁰ and ξ^a evaluate to real numbers at sampled points.
    pub fn check_reality(&self, cfg: &SamplerConfig) -> Result<bool> {
        for k in 0..cfg.samples.min(50) {
            let p = cfg.point(k, 0);
            let mut comps = vec![&self.xi0];
            comps.extend(self.xi.iter());
            for c in comps {
                match eval_numeric(c, &p) {
                    Ok(v) if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) => return Ok(false),
                    Ok(_) => {}
                    Err(crate::Error::Singular(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(true)
    }
}

/// Commutator `[Q1, Q2]` computed coordinate-wise, simplified.
pub fn lie_bracket(q1: &VectorField, q2: &VectorField) -> VectorField {
    assert_eq!(q1.n, q2.n, "fields must share n");
    let comp = |a: &Expr, b: &Expr| simplify(&(q1.apply(b) - q2.apply(a)));
    VectorField {
        n: q1.n,
        xi0: comp(&q1.xi0, &q2.xi0),
        xi: q1.xi.iter().zip(&q2.xi).map(|(a, b)| comp(a, b)).collect(),
        eta: comp(&q1.eta, &q2.eta),
        label: None,
    }
}

/// Numeric equality of two fields, component by component.
pub fn fields_equal(q1: &VectorField, q2: &VectorField, cfg: &SamplerConfig, tol: f64) -> Result<bool> {
    q1.sub(q2).is_zero(cfg, tol)
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.xi0.is_zero() {
            parts.push(format!("({})*d_t", self.xi0));
        }
        for (a, x) in self.xi.iter().enumerate() {
            if !x.is_zero() {
                parts.push(format!("({})*d_x{}", x, a + 1));
            }
        }
        if !self.eta.is_zero() {
            parts.push(format!("({})*d_psi + c.c.", self.eta));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}
