//! Rewrite-based normal form.
//!
//! Sums and products are flattened and sorted, constants folded exactly,
//! like terms collected, equal bases merged by adding exponents, products of
//! exponentials merged, and small products of sums distributed. The pass is
//! iterated to a fixpoint so that `simplify` is idempotent.

use std::collections::BTreeMap;

use super::expr::{Expr, Func, Node};
use super::num::Num;

/// Products of sums are distributed only while the expansion stays below this many terms.
const MAX_EXPANSION: usize = 96;
const MAX_PASSES: usize = 12;

pub fn simplify(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..MAX_PASSES {
        let next = pass(&cur);
        if next == cur {
            return next;
        }
        cur = next;
    }
    cur
}

fn pass(e: &Expr) -> Expr {
    let kids = e.children();
    let node = if kids.is_empty() {
        e.clone()
    } else {
        let new: Vec<Expr> = kids.iter().map(pass).collect();
        e.with_children(new)
    };
    rewrite(&node)
}

fn rewrite(e: &Expr) -> Expr {
    match e.node() {
        Node::Add(terms) => simplify_sum(terms),
        Node::Mul(factors) => simplify_product(factors),
        Node::Pow(b, x) => simplify_pow(b, x),
        Node::Call(f, a) => simplify_call(*f, a),
        _ => e.clone(),
    }
}

/// Splits a term into numeric coefficient and the remaining monomial.
pub(crate) fn split_coeff(e: &Expr) -> (Num, Expr) {
    match e.node() {
        Node::Num(n) => (*n, Expr::one()),
        Node::Mul(fs) => match fs[0].node() {
            Node::Num(n) => (*n, Expr::product(fs[1..].to_vec())),
            _ => (Num::ONE, e.clone()),
        },
        _ => (Num::ONE, e.clone()),
    }
}

fn simplify_sum(terms: &[Expr]) -> Expr {
    let mut flat = Vec::new();
    for t in terms {
        match t.node() {
            Node::Add(c) => flat.extend(c.iter().cloned()),
            _ => flat.push(t.clone()),
        }
    }
    let mut collected: BTreeMap<Expr, Num> = BTreeMap::new();
    for t in flat {
        let (c, m) = split_coeff(&t);
        let entry = collected.entry(m).or_insert(Num::ZERO);
        *entry = entry.add(c);
    }
    let mut out = Vec::new();
    let mut constant = None;
    for (m, c) in collected {
        if c.is_zero() {
            continue;
        }
        if m.is_one() {
            constant = Some(c);
            continue;
        }
        out.push(scaled(c, m));
    }
    out.sort();
    if let Some(c) = constant {
        out.push(Expr::num(c));
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::new(Node::Add(out)),
    }
}

fn scaled(c: Num, m: Expr) -> Expr {
    if c.is_one() {
        return m;
    }
    match m.node() {
        Node::Mul(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::num(c));
            v.extend(fs.iter().cloned());
            Expr::new(Node::Mul(v))
        }
        _ => Expr::new(Node::Mul(vec![Expr::num(c), m])),
    }
}

fn base_exp(e: &Expr) -> (Expr, Expr) {
    match e.node() {
        Node::Pow(b, x) => (b.clone(), x.clone()),
        _ => (e.clone(), Expr::one()),
    }
}

fn simplify_product(factors: &[Expr]) -> Expr {
    let mut flat = Vec::new();
    for f in factors {
        match f.node() {
            Node::Mul(c) => flat.extend(c.iter().cloned()),
            _ => flat.push(f.clone()),
        }
    }
    let mut coeff = Num::ONE;
    let mut bases: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
    let mut exp_args: Vec<Expr> = Vec::new();
    for f in flat {
        match f.node() {
            Node::Num(n) => coeff = coeff.mul(*n),
            Node::Call(Func::Exp, a) => exp_args.push(a.clone()),
            Node::Pow(b, x) if matches!(b.node(), Node::Call(Func::Exp, _)) && x.as_num().and_then(|n| n.as_integer()).is_some() => {
                if let Node::Call(Func::Exp, a) = b.node() {
                    exp_args.push(x * a);
                }
            }
            _ => {
                let (b, x) = base_exp(&f);
                bases.entry(b).or_default().push(x);
            }
        }
    }
    if coeff.is_zero() {
        return Expr::zero();
    }
    let mut out = Vec::new();
    let mut expandable: Vec<(Expr, i64)> = Vec::new();
    for (b, xs) in bases {
        let x = simplify_sum(&xs);
        if x.is_zero() {
            continue;
        }
        let k = x.as_num().and_then(|n| n.as_integer());
        if let (Node::Add(_), Some(k)) = (b.node(), k) {
            if (1..=4).contains(&k) {
                expandable.push((b, k));
                continue;
            }
        }
        let p = simplify_pow(&b, &x);
        match p.node() {
            Node::Num(n) => coeff = coeff.mul(*n),
            Node::Mul(fs) => {
                for f in fs {
                    match f.node() {
                        Node::Num(n) => coeff = coeff.mul(*n),
                        _ => out.push(f.clone()),
                    }
                }
            }
            _ => out.push(p),
        }
    }
    if !exp_args.is_empty() {
        let arg = simplify(&Expr::sum(exp_args));
        if !arg.is_zero() {
            out.push(Expr::call(Func::Exp, arg));
        }
    }
    if coeff.is_zero() {
        return Expr::zero();
    }
    if !expandable.is_empty() {
        let size: usize = expandable
            .iter()
            .map(|(b, k)| match b.node() {
                Node::Add(c) => c.len().pow(*k as u32),
                _ => 1,
            })
            .product();
        if size <= MAX_EXPANSION {
            let mut acc: Vec<Expr> = vec![Expr::product(std::iter::once(Expr::num(coeff)).chain(out.iter().cloned()))];
            for (b, k) in &expandable {
                let parts: Vec<Expr> = match b.node() {
                    Node::Add(c) => c.clone(),
                    _ => vec![b.clone()],
                };
                for _ in 0..*k {
                    let mut next = Vec::with_capacity(acc.len() * parts.len());
                    for a in &acc {
                        for p in &parts {
                            next.push(Expr::product([a.clone(), p.clone()]));
                        }
                    }
                    acc = next;
                }
            }
            let terms: Vec<Expr> = acc
                .iter()
                .map(|t| match t.node() {
                    Node::Mul(fs) => simplify_product(fs),
                    _ => t.clone(),
                })
                .collect();
            return simplify_sum(&terms);
        }
        for (b, k) in expandable {
            out.push(if k == 1 { b } else { Expr::new(Node::Pow(b, Expr::int(k))) });
        }
    }
    out.sort();
    if !coeff.is_one() {
        out.insert(0, Expr::num(coeff));
    }
    match out.len() {
        0 => Expr::one(),
        1 => out.pop().unwrap(),
        _ => Expr::new(Node::Mul(out)),
    }
}

fn simplify_pow(b: &Expr, x: &Expr) -> Expr {
    if x.is_zero() {
        return Expr::one();
    }
    if x.is_one() {
        return b.clone();
    }
    if b.is_one() {
        return Expr::one();
    }
    let k = x.as_num().and_then(|n| n.as_integer());
    if let (Node::Num(bn), Some(k)) = (b.node(), k) {
        if let Some(v) = bn.powi_exact(k) {
            return Expr::num(v);
        }
    }
    if let (Node::Num(bn), Node::Num(xn)) = (b.node(), x.node()) {
        if !bn.is_exact() || !xn.is_exact() {
            if bn.is_zero() {
                return Expr::new(Node::Pow(b.clone(), x.clone()));
            }
            let z = bn.to_c64().powc(xn.to_c64());
            return Expr::num(Num::complex(z));
        }
    }
    if let Some(k) = k {
        match b.node() {
            // (y^a)^k = y^(a k) for integer k.
            Node::Pow(y, a) => return simplify_pow(y, &simplify(&(a * Expr::int(k)))),
            Node::Mul(fs) => {
                let parts: Vec<Expr> = fs.iter().map(|f| simplify_pow(f, x)).collect();
                return simplify_product(&parts);
            }
            Node::Call(Func::Exp, a) => return Expr::call(Func::Exp, simplify(&(a * Expr::int(k)))),
            Node::Add(_) if (2..=4).contains(&k) => {
                return simplify_product(&[Expr::new(Node::Pow(b.clone(), x.clone()))]);
            }
            _ => {}
        }
    }
    Expr::new(Node::Pow(b.clone(), x.clone()))
}

fn simplify_call(f: Func, a: &Expr) -> Expr {
    if let Node::Num(n) = a.node() {
        let z = n.to_c64();
        match f {
            Func::Conj => return Expr::num(n.conj()),
            Func::Re => {
                return match n {
                    Num::Exact(re, _) => Expr::num(Num::Exact(*re, num_rational::Ratio::from_integer(0))),
                    Num::Float(_) => Expr::real(z.re),
                }
            }
            Func::Im => {
                return match n {
                    Num::Exact(_, im) => Expr::num(Num::Exact(*im, num_rational::Ratio::from_integer(0))),
                    Num::Float(_) => Expr::real(z.im),
                }
            }
            Func::Abs => {
                if let Some(r) = n.as_exact_real() {
                    return Expr::num(Num::Exact(if r < num_rational::Ratio::from_integer(0) { -r } else { r }, num_rational::Ratio::from_integer(0)));
                }
                if !n.is_exact() {
                    return Expr::real(z.norm());
                }
            }
            Func::Exp if n.is_zero() => return Expr::one(),
            Func::Ln if n.is_one() => return Expr::zero(),
            Func::Sin if n.is_zero() => return Expr::zero(),
            Func::Cos if n.is_zero() => return Expr::one(),
            _ => {}
        }
        if !n.is_exact() {
            let v = match f {
                Func::Exp => z.exp(),
                Func::Ln => z.ln(),
                Func::Sin => z.sin(),
                Func::Cos => z.cos(),
                _ => unreachable!(),
            };
            return Expr::num(Num::complex(v));
        }
    }
    match (f, a.node()) {
        (Func::Exp, Node::Call(Func::Ln, inner)) => inner.clone(),
        (Func::Conj, Node::Call(Func::Conj, inner)) => inner.clone(),
        (Func::Abs, Node::Call(Func::Abs, _)) => a.clone(),
        (Func::Re, Node::Call(Func::Re | Func::Im | Func::Abs, _)) => a.clone(),
        (Func::Abs, Node::Rho) => a.clone(),
        _ => Expr::call(f, a.clone()),
    }
}
