//! Second prolongation on the solution manifold.

use std::collections::BTreeSet;

use crate::liefield::VectorField;
use crate::symexpr::{conjugate, differentiate, substitute_many, Expr, Node, Var};

fn coord(i: u8) -> Var {
    if i == 0 {
        Var::T
    } else {
        Var::X(i)
    }
}

fn jet_vars(e: &Expr, out: &mut BTreeSet<Var>) {
    if let Node::Sym(v @ Var::Jet { .. }) = e.node() {
        out.insert(v.clone());
    }
    for c in e.children() {
        jet_vars(&c, out);
    }
}

fn extend(v: &Var, i: u8) -> Var {
    match v {
        Var::Psi => Var::jet(false, vec![i]),
        Var::CPsi => Var::jet(true, vec![i]),
        Var::Jet { conj, idx } => {
            let mut idx = idx.clone();
            idx.push(i);
            Var::jet(*conj, idx)
        }
        other => other.clone(),
    }
}

/// Total derivative `D_i` (0 = t, a = x_a) over the jet space.
pub fn total_derivative(e: &Expr, i: u8) -> Expr {
    let mut vars = BTreeSet::from([Var::Psi, Var::CPsi]);
    jet_vars(e, &mut vars);
    let mut terms = vec![differentiate(e, &coord(i))];
    for v in vars {
        let d = differentiate(e, &v);
        if !d.is_zero() {
            terms.push(d * Expr::var(extend(&v, i)));
        }
    }
    Expr::sum(terms)
}

fn jet(conj: bool, idx: &[u8]) -> Expr {
    Expr::var(Var::jet(conj, idx.to_vec()))
}

/// Replaces every jet containing a t-derivative using the equation
/// `ψ_t = i(Δψ + F)` and its conjugate, differentiated as needed.
pub fn eliminate_time_jets(e: &Expr, f: &Expr, n: usize) -> Expr {
    let mut cur = e.clone();
    // Each round lowers the number of t-indices by one.
    for _ in 0..4 {
        let mut vars = BTreeSet::new();
        jet_vars(&cur, &mut vars);
        let timed: Vec<Var> =
            vars.into_iter().filter(|v| matches!(v, Var::Jet { idx, .. } if idx.contains(&0))).collect();
        if timed.is_empty() {
            break;
        }
        let map: Vec<(Var, Expr)> = timed
            .iter()
            .map(|v| {
                let Var::Jet { conj, idx } = v else { unreachable!() };
                let mut rest = idx.clone();
                let pos = rest.iter().position(|&i| i == 0).unwrap();
                rest.remove(pos);
                (v.clone(), time_derivative(*conj, &rest, f, n))
            })
            .collect();
        cur = substitute_many(&cur, &map);
    }
    cur
}

/// `D_rest ψ_t` expressed through the equation.
fn time_derivative(conj: bool, rest: &[u8], f: &Expr, n: usize) -> Expr {
    let (unit, rhs_f) = if conj { (-Expr::i(), conjugate(f)) } else { (Expr::i(), f.clone()) };
    let lap = Expr::sum((1..=n as u8).map(|a| jet(conj, &[a, a])));
    let mut e = unit * (lap + rhs_f);
    for &i in rest {
        e = total_derivative(&e, i);
    }
    e
}

/// Prolonged action of `q` on the equation, restricted to its solution
/// manifold. Free jet coordinates are ψ_J, ψ*_J with J purely spatial.
pub fn prolongation_residual(f: &Expr, q: &VectorField) -> Expr {
    let n = q.n;
    let xis: Vec<&Expr> = std::iter::once(&q.xi0).chain(q.xi.iter()).collect();
    // η^J for J = (i): D_i η − Σ_j ψ_j D_i ξ^j
    let first = |i: u8| -> Expr {
        let mut terms = vec![total_derivative(&q.eta, i)];
        for (j, xi) in xis.iter().enumerate() {
            let dxi = total_derivative(xi, i);
            if !dxi.is_zero() {
                terms.push(-(jet(false, &[j as u8]) * dxi));
            }
        }
        Expr::sum(terms)
    };
    let eta_t = first(0);
    let mut terms = vec![Expr::i() * eta_t];
    for a in 1..=n as u8 {
        let eta_a = first(a);
        let mut parts = vec![total_derivative(&eta_a, a)];
        for (j, xi) in xis.iter().enumerate() {
            let dxi = total_derivative(xi, a);
            if !dxi.is_zero() {
                parts.push(-(jet(false, &[a, j as u8]) * dxi));
            }
        }
        terms.push(Expr::sum(parts));
    }
    terms.push(&q.eta * differentiate(f, &Var::Psi));
    terms.push(q.eta_conj() * differentiate(f, &Var::CPsi));
    eliminate_time_jets(&Expr::sum(terms), f, n)
}

/// Partial derivatives of a residual with respect to the spatial jets of
/// order 1 and 2; all vanish when the defining system holds.
pub fn jet_split(residual: &Expr, n: usize) -> Vec<(String, Expr)> {
    let mut out = Vec::new();
    for conj in [false, true] {
        let star = if conj { "*" } else { "" };
        for a in 1..=n as u8 {
            let v = Var::jet(conj, vec![a]);
            out.push((format!("psi{star}_{a}"), differentiate(residual, &v)));
            for b in a..=n as u8 {
                let v = Var::jet(conj, vec![a, b]);
                out.push((format!("psi{star}_{a}{b}"), differentiate(residual, &v)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{is_zero, SamplerConfig};

    #[test]
    fn total_derivative_chain_rule() {
        // D_1(x1 ψ²) = ψ² + 2 x1 ψ ψ_1
        let e = Expr::x(1) * Expr::psi().powi(2);
        let d = total_derivative(&e, 1);
        let expected = Expr::psi().powi(2) + Expr::int(2) * Expr::x(1) * Expr::psi() * jet(false, &[1]);
        let cfg = SamplerConfig::new(1, 3).with_jets(2).with_samples(20);
        assert!(is_zero(&(d - expected), &cfg, 1e-12).unwrap().zero);
    }

    #[test]
    fn broken_field_shows_in_jet_split() {
        let n = 1;
        let q = VectorField::new(n, Expr::zero(), vec![Expr::zero()], Expr::psi().powi(2));
        let r = prolongation_residual(&Expr::zero(), &q);
        let split = jet_split(&r, n);
        let cfg = SamplerConfig::new(n, 3).with_jets(3).with_samples(20);
        let (_, d1) = split.iter().find(|(k, _)| k == "psi_1").unwrap();
        // coefficient of ψ_1 carries 2η_ψψ ψ_1 = 4ψ_1
        assert!(!is_zero(d1, &cfg, 1e-9).unwrap().zero);
    }

    #[test]
    fn no_time_jets_survive() {
        let q = crate::liefield::named_generator("Pi", &crate::liefield::GenParams::new(), 2).unwrap();
        let r = prolongation_residual(&Expr::psi().powi(3), &q);
        let mut vars = BTreeSet::new();
        jet_vars(&r, &mut vars);
        assert!(vars.iter().all(|v| !matches!(v, Var::Jet { idx, .. } if idx.contains(&0))));
    }
}
