//! Conjugation, Wirtinger differentiation and substitution.

use super::expr::{Expr, Func, Node, Var};
use crate::error::{Error, Result};

/// Complex conjugate with ψ and ψ* treated as independent symbols.
///
/// Swaps ψ ↔ ψ*, conjugates constants, fixes real coordinates and the real
/// sugar atoms ρ, φ. Parameters and function applications are wrapped in a
/// `conj` node.
pub fn conjugate(e: &Expr) -> Expr {
    match e.node() {
        Node::Num(n) => Expr::num(n.conj()),
        Node::Sym(v) => match v {
            Var::Param(_) => Expr::call(Func::Conj, e.clone()),
            _ => Expr::var(v.conjugate()),
        },
        Node::Rho | Node::Phi => e.clone(),
        Node::Add(c) => Expr::sum(c.iter().map(conjugate)),
        Node::Mul(c) => Expr::product(c.iter().map(conjugate)),
        Node::Pow(b, x) => conjugate(b).pow(conjugate(x)),
        Node::Call(f, a) => match f {
            Func::Conj => a.clone(),
            Func::Abs | Func::Re | Func::Im => e.clone(),
            Func::Exp | Func::Ln | Func::Sin | Func::Cos => Expr::call(*f, conjugate(a)),
        },
        Node::Apply { .. } => Expr::call(Func::Conj, e.clone()),
    }
}

/// Exact partial derivative; ψ and ψ* are independent variables.
pub fn differentiate(e: &Expr, v: &Var) -> Expr {
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(w) => {
            if w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Rho => match v {
            Var::Psi => Expr::cpsi() * Expr::rho().recip() * Expr::rat(1, 2),
            Var::CPsi => Expr::psi() * Expr::rho().recip() * Expr::rat(1, 2),
            _ => Expr::zero(),
        },
        Node::Phi => match v {
            Var::Psi => Expr::i() * Expr::rat(-1, 2) * Expr::psi().recip(),
            Var::CPsi => Expr::i() * Expr::rat(1, 2) * Expr::cpsi().recip(),
            _ => Expr::zero(),
        },
        Node::Add(c) => Expr::sum(c.iter().map(|x| differentiate(x, v))),
        Node::Mul(c) => {
            let mut terms = Vec::new();
            for k in 0..c.len() {
                let dk = differentiate(&c[k], v);
                if dk.is_zero() {
                    continue;
                }
                let mut factors = c.clone();
                factors[k] = dk;
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Node::Pow(b, x) => {
            let db = differentiate(b, v);
            let dx = differentiate(x, v);
            if dx.is_zero() {
                if db.is_zero() {
                    return Expr::zero();
                }
                let lowered = match x.as_num() {
                    Some(n) => Expr::num(n.sub(super::num::Num::ONE)),
                    None => x - Expr::one(),
                };
                Expr::product([x.clone(), b.clone().pow(lowered), db])
            } else {
                let inner = dx * b.clone().ln() + x * db * b.clone().recip();
                e * inner
            }
        }
        Node::Call(f, a) => {
            if *f == Func::Conj {
                return conjugate(&differentiate(a, &v.conjugate()));
            }
            let da = differentiate(a, v);
            let dconj = || differentiate(&conjugate(a), v);
            match f {
                Func::Exp => {
                    if da.is_zero() {
                        Expr::zero()
                    } else {
                        e * da
                    }
                }
                Func::Ln => {
                    if da.is_zero() {
                        Expr::zero()
                    } else {
                        da * a.clone().recip()
                    }
                }
                Func::Sin => {
                    if da.is_zero() {
                        Expr::zero()
                    } else {
                        a.clone().cos() * da
                    }
                }
                Func::Cos => {
                    if da.is_zero() {
                        Expr::zero()
                    } else {
                        -(a.clone().sin() * da)
                    }
                }
                Func::Abs => {
                    let dc = dconj();
                    if da.is_zero() && dc.is_zero() {
                        return Expr::zero();
                    }
                    (conjugate(a) * da + a * dc) * Expr::rat(1, 2) * e.clone().recip()
                }
                Func::Re => (da + dconj()) * Expr::rat(1, 2),
                Func::Im => (da - dconj()) * (Expr::i() * Expr::rat(-1, 2)),
                Func::Conj => unreachable!(),
            }
        }
        Node::Apply { name, deriv, args } => {
            let mut terms = Vec::new();
            for (k, arg) in args.iter().enumerate() {
                let da = differentiate(arg, v);
                if da.is_zero() {
                    continue;
                }
                let mut d = deriv.clone();
                d[k] += 1;
                let applied = Expr::new(Node::Apply { name: name.clone(), deriv: d, args: args.clone() });
                terms.push(applied * da);
            }
            Expr::sum(terms)
        }
    }
}

/// Replaces ρ and φ by their definitions in ψ, ψ*.
pub fn desugar(e: &Expr) -> Expr {
    e.map_bottom_up(&mut |x| match x.node() {
        Node::Rho => Some((Expr::psi() * Expr::cpsi()).sqrt()),
        Node::Phi => Some(Expr::i() * Expr::rat(1, 2) * (Expr::cpsi().ln() - Expr::psi().ln())),
        _ => None,
    })
}

/// Capture-free replacement of a variable by an expression.
pub fn substitute(e: &Expr, v: &Var, r: &Expr) -> Expr {
    substitute_many(e, &[(v.clone(), r.clone())])
}

/// Simultaneous replacement of several variables.
pub fn substitute_many(e: &Expr, map: &[(Var, Expr)]) -> Expr {
    let touches_psi = map.iter().any(|(v, _)| matches!(v, Var::Psi | Var::CPsi));
    let base = if touches_psi { desugar(e) } else { e.clone() };
    subst_rec(&base, map)
}

fn subst_rec(e: &Expr, map: &[(Var, Expr)]) -> Expr {
    if let Node::Sym(w) = e.node() {
        for (v, r) in map {
            if v == w {
                return r.clone();
            }
        }
        return e.clone();
    }
    let kids = e.children();
    if kids.is_empty() {
        return e.clone();
    }
    let new: Vec<Expr> = kids.iter().map(|k| subst_rec(k, map)).collect();
    if new == kids {
        e.clone()
    } else {
        e.with_children(new)
    }
}

/// A function body with `arity` bound argument slots (`Var::Arg`).
#[derive(Clone, Debug, PartialEq)]
pub struct Lambda {
    pub arity: usize,
    pub body: Expr,
}

impl Lambda {
    pub fn new(arity: usize, body: Expr) -> Lambda {
        Lambda { arity, body }
    }

    /// λω.ω
    pub fn identity() -> Lambda {
        Lambda::new(1, Expr::var(Var::Arg(0)))
    }

    pub fn arg(k: usize) -> Expr {
        Expr::var(Var::Arg(k as u8))
    }

    /// Body differentiated according to the derivative orders in `deriv`.
    pub fn derivative(&self, deriv: &[u8]) -> Expr {
        let mut body = self.body.clone();
        for (k, d) in deriv.iter().enumerate() {
            for _ in 0..*d {
                body = differentiate(&body, &Var::Arg(k as u8));
            }
        }
        body
    }
}

/// Instantiates an arbitrary function symbol everywhere in `e`.
pub fn substitute_function(e: &Expr, name: &str, lambda: &Lambda) -> Result<Expr> {
    let mut err = None;
    let out = e.map_bottom_up(&mut |x| match x.node() {
        Node::Apply { name: n, deriv, args } if n.as_ref() == name => {
            if args.len() != lambda.arity {
                err = Some(Error::Arity { name: name.to_string(), expected: lambda.arity, found: args.len() });
                return None;
            }
            let body = lambda.derivative(deriv);
            let map: Vec<(Var, Expr)> =
                args.iter().enumerate().map(|(k, a)| (Var::Arg(k as u8), a.clone())).collect();
            Some(subst_rec(&body, &map))
        }
        _ => None,
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, simplify};

    #[test]
    fn product_rule() {
        let e = Expr::psi() * Expr::cpsi();
        assert_eq!(simplify(&differentiate(&e, &Var::Psi)), Expr::cpsi());
    }

    #[test]
    fn conjugate_basics() {
        assert_eq!(conjugate(&Expr::psi()), Expr::cpsi());
        assert_eq!(conjugate(&Expr::i()), -Expr::i());
        let e = parse("sigma*f(abs(psi))*psi", 1).unwrap();
        assert_eq!(simplify(&conjugate(&conjugate(&e))), simplify(&e));
    }

    #[test]
    fn identity_instantiation() {
        let e = Expr::apply("f", vec![Expr::param("Omega")]);
        let r = substitute_function(&e, "f", &Lambda::identity()).unwrap();
        assert_eq!(r, Expr::param("Omega"));
    }

    #[test]
    fn arity_mismatch() {
        let e = Expr::apply("f", vec![Expr::t(), Expr::x(1)]);
        assert!(matches!(substitute_function(&e, "f", &Lambda::identity()), Err(Error::Arity { .. })));
    }

    #[test]
    fn gamma_substitution_gives_cubic() {
        let e = parse("abs(psi)^gamma*psi", 2).unwrap();
        let r = simplify(&substitute(&e, &Var::param("gamma"), &parse("4/n", 2).unwrap()));
        assert_eq!(r, simplify(&parse("abs(psi)^2*psi", 2).unwrap()));
    }
}
