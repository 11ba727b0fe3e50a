//! Span membership by sampled least squares followed by a residual check.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::VectorField;
use crate::error::{Error, Result};
use crate::symexpr::{
    conjugate, differentiate, eval_numeric, is_zero, substitute_many, Expr, SamplePoint, SamplerConfig, Var,
};

#[derive(Clone, Debug)]
pub enum SpanMode {
    Exact,
    /// Accept a remainder `η⁰∂_ψ + η⁰*∂_{ψ*}` whose η⁰ solves the equation with
    /// this nonlinearity, which must be affine in (ψ, ψ*).
    ModuloSolutions(Expr),
    /// Accept a ψ-independent remainder `η⁰∂_ψ + η⁰*∂_{ψ*}` that is itself a
    /// symmetry of the equation with this nonlinearity (the θ-type ideals).
    ModuloIdeal(Expr),
}

#[derive(Clone, Debug, Serialize)]
pub struct SpanResult {
    pub contained: bool,
    pub coefficients: Vec<f64>,
    /// Remainder after subtracting the fitted combination, as text.
    pub remainder: String,
    pub max_residual: f64,
}

fn snap(c: f64) -> Expr {
    for d in 1..=24i64 {
        let k = (c * d as f64).round();
        if (c - k / d as f64).abs() < 1e-9 * (1.0 + c.abs()) {
            return Expr::rat(k as i64, d);
        }
    }
    Expr::real(c)
}

/// Values fitted per field at a point: ξ⁰, ξ^a, and either η or η_ψ.
fn fit_components(q: &VectorField, eta_psi_only: bool) -> Vec<Expr> {
    let mut v = vec![q.xi0.clone()];
    v.extend(q.xi.iter().cloned());
    if eta_psi_only {
        v.push(differentiate(&q.eta, &Var::Psi));
        v.push(differentiate(&q.eta, &Var::CPsi));
    } else {
        v.push(q.eta.clone());
    }
    v
}

fn eval_all(es: &[Expr], p: &SamplePoint) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * es.len());
    for e in es {
        let z = eval_numeric(e, p)?;
        out.push(z.re);
        out.push(z.im);
    }
    Ok(out)
}

/// Finds real c_k with `q − Σ c_k basis_k` zero (or a solution field in
/// `ModuloSolutions` mode).
pub fn span_contains(
    basis: &[VectorField],
    q: &VectorField,
    mode: &SpanMode,
    cfg: &SamplerConfig,
    tol: f64,
) -> Result<SpanResult> {
    let modulo = !matches!(mode, SpanMode::Exact);
    let target = fit_components(q, modulo);
    let cols: Vec<Vec<Expr>> = basis.iter().map(|b| fit_components(b, modulo)).collect();
    let points = 3 * basis.len() + 12;
    let mut rows_a: Vec<Vec<f64>> = Vec::new();
    let mut rows_b: Vec<f64> = Vec::new();
    let mut k = 0;
    let mut taken = 0;
    while taken < points {
        if k > 20 * points {
            return Err(Error::IllConditioned("too many singular sample points".into()));
        }
        let p = cfg.point(k, 0);
        k += 1;
        let Ok(b) = eval_all(&target, &p) else { continue };
        let mut col_vals = Vec::with_capacity(cols.len());
        let mut ok = true;
        for c in &cols {
            match eval_all(c, &p) {
                Ok(v) => col_vals.push(v),
                Err(Error::Singular(_)) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !ok {
            continue;
        }
        for r in 0..b.len() {
            rows_a.push(col_vals.iter().map(|v| v[r]).collect());
            rows_b.push(b[r]);
        }
        taken += 1;
    }
    let coefficients: Vec<f64> = if basis.is_empty() {
        Vec::new()
    } else {
        let a = DMatrix::from_fn(rows_a.len(), basis.len(), |i, j| rows_a[i][j]);
        let b = DVector::from_vec(rows_b);
        let svd = a.svd(true, true);
        let x = svd.solve(&b, 1e-10).map_err(|e| Error::IllConditioned(e.to_string()))?;
        x.iter().copied().collect()
    };
    let mut rem = q.clone();
    for (c, b) in coefficients.iter().zip(basis) {
        rem = rem.sub(&b.scale(&snap(*c)));
    }
    let rem = rem.simplified();
    let mut checks: Vec<Expr> = vec![rem.xi0.clone()];
    checks.extend(rem.xi.iter().cloned());
    match mode {
        SpanMode::Exact => checks.push(rem.eta.clone()),
        SpanMode::ModuloSolutions(f) => {
            let eta = &rem.eta;
            checks.push(differentiate(eta, &Var::Psi));
            checks.push(differentiate(eta, &Var::CPsi));
            checks.push(solution_residual(f, eta, q.n));
        }
        SpanMode::ModuloIdeal(f) => {
            let eta = &rem.eta;
            checks.push(differentiate(eta, &Var::Psi));
            checks.push(differentiate(eta, &Var::CPsi));
            checks.push(ideal_residual(f, eta, q.n));
        }
    }
    let mut contained = true;
    let mut max_residual: f64 = 0.0;
    for c in &checks {
        let v = is_zero(c, cfg, tol)?;
        max_residual = max_residual.max(v.max_rel);
        contained &= v.zero;
    }
    Ok(SpanResult { contained, coefficients, remainder: rem.to_string(), max_residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketCheck {
    pub left: String,
    pub right: String,
    pub span: SpanResult,
}

/// Checks every pairwise bracket of `gens` against their span.
pub fn bracket_closure(gens: &[VectorField], mode: &SpanMode, cfg: &SamplerConfig, tol: f64) -> Result<Vec<BracketCheck>> {
    let mut out = Vec::new();
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            let br = super::lie_bracket(&gens[i], &gens[j]);
            let span = span_contains(gens, &br, mode, cfg, tol)?;
            out.push(BracketCheck { left: gens[i].label(), right: gens[j].label(), span });
        }
    }
    Ok(out)
}

/// `iη_t + Δη + F(η, η*) − F(0, 0)`: zero iff ψ = η solves the equation
/// with affine F.
pub fn solution_residual(f: &Expr, eta: &Expr, n: usize) -> Expr {
    let on = substitute_many(f, &[(Var::Psi, eta.clone()), (Var::CPsi, conjugate(eta))]);
    let off = substitute_many(f, &[(Var::Psi, Expr::zero()), (Var::CPsi, Expr::zero())]);
    let mut terms = vec![Expr::i() * differentiate(eta, &Var::T), on, -off];
    for a in 1..=n {
        let xa = Var::X(a as u8);
        terms.push(differentiate(&differentiate(eta, &xa), &xa));
    }
    Expr::sum(terms)
}

/// `η F_ψ + η* F_{ψ*} + iη_t + Δη` for ψ-independent η.
fn ideal_residual(f: &Expr, eta: &Expr, n: usize) -> Expr {
    let mut terms = vec![
        eta * differentiate(f, &Var::Psi),
        conjugate(eta) * differentiate(f, &Var::CPsi),
        Expr::i() * differentiate(eta, &Var::T),
    ];
    for a in 1..=n {
        let xa = Var::X(a as u8);
        terms.push(differentiate(&differentiate(eta, &xa), &xa));
    }
    Expr::sum(terms)
}

#[cfg(test)]
mod tests {
    use super::super::{lie_bracket, named_generator, GenParams};
    use super::*;

    fn g(name: &str, n: usize) -> VectorField {
        named_generator(name, &GenParams::new(), n).unwrap()
    }

    #[test]
    fn finds_coefficients() {
        let n = 2;
        let basis = vec![g("D", n), g("I", n), g("M", n)];
        let q = g("D", n).scale(&Expr::int(2)).add(&g("I", n).scale(&Expr::int(3)));
        let r = span_contains(&basis, &q, &SpanMode::Exact, &SamplerConfig::new(n, 3).with_samples(50), 1e-9).unwrap();
        assert!(r.contained);
        let expected = [2.0, 3.0, 0.0];
        for (c, e) in r.coefficients.iter().zip(expected) {
            assert!((c - e).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_outside() {
        let n = 1;
        let basis = vec![g("D", n), g("I", n)];
        let r = span_contains(&basis, &g("Pi", n), &SpanMode::Exact, &SamplerConfig::new(n, 3).with_samples(50), 1e-9)
            .unwrap();
        assert!(!r.contained);
    }

    #[test]
    fn boosts_commute_into_span() {
        let n = 2;
        let g1 = named_generator("Ga", &GenParams::new().index("a", 1), n).unwrap();
        let g2 = named_generator("Ga", &GenParams::new().index("a", 2), n).unwrap();
        let br = lie_bracket(&g1, &g2);
        let r = span_contains(&[g("M", n)], &br, &SpanMode::Exact, &SamplerConfig::new(n, 1).with_samples(30), 1e-9)
            .unwrap();
        assert!(r.contained);
    }

    #[test]
    fn solution_ideal_membership() {
        let n = 1;
        let eta0 = crate::symexpr::parse("exp(i*(2*x1 - 4*t))", n).unwrap();
        let sol = named_generator("sol_gen", &GenParams::new().value("eta0", eta0), n).unwrap();
        let br = lie_bracket(&g("Pi", n), &sol);
        let basis = vec![g("Pt", n), g("I", n), g("M", n), g("D", n), g("Pi", n)];
        let cfg = SamplerConfig::new(n, 5).with_samples(50);
        let r = span_contains(&basis, &br, &SpanMode::ModuloSolutions(Expr::zero()), &cfg, 1e-9).unwrap();
        assert!(r.contained, "{}", r.remainder);
        let exact = span_contains(&basis, &br, &SpanMode::Exact, &cfg, 1e-9).unwrap();
        assert!(!exact.contained);
    }
}
