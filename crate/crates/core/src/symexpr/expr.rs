use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::num::Num;

/// Coordinates and symbols an expression can depend on.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    /// Spatial coordinate `x_a`, 1-based.
    X(u8),
    Psi,
    CPsi,
    /// A free parameter (`sigma`, `gamma`, ...).
    Param(Arc<str>),
    /// Bound argument slot of a function body, 0-based.
    Arg(u8),
    /// Jet coordinate: derivative of ψ (or ψ* when `conj`) with respect to the
    /// sorted multi-index `idx` (0 = t, a = x_a).
    Jet { conj: bool, idx: Vec<u8> },
}

impl Var {
    pub fn param(name: &str) -> Var {
        Var::Param(Arc::from(name))
    }

    pub fn jet(conj: bool, mut idx: Vec<u8>) -> Var {
        idx.sort_unstable();
        if idx.is_empty() {
            return if conj { Var::CPsi } else { Var::Psi };
        }
        Var::Jet { conj, idx }
    }

    /// The variable that `conjugate` maps this one to.
    pub fn conjugate(&self) -> Var {
        match self {
            Var::Psi => Var::CPsi,
            Var::CPsi => Var::Psi,
            Var::Jet { conj, idx } => Var::Jet { conj: !conj, idx: idx.clone() },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Abs,
    Conj,
    Re,
    Im,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Conj => "conj",
            Func::Re => "re",
            Func::Im => "im",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Num),
    Sym(Var),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Call(Func, Expr),
    /// Amplitude ρ = |ψ|.
    Rho,
    /// Phase φ = arg ψ.
    Phi,
    /// Application of an arbitrary function symbol; `deriv[k]` counts partial
    /// derivatives taken in argument `k`.
    Apply { name: Arc<str>, deriv: Vec<u8>, args: Vec<Expr> },
}

/// Immutable, shareable expression handle.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Expr {
    pub fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(n: Num) -> Expr {
        Expr::new(Node::Num(n))
    }

    pub fn int(v: i64) -> Expr {
        Expr::num(Num::int(v))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::num(Num::rat(n, d))
    }

    pub fn real(v: f64) -> Expr {
        Expr::num(Num::real(v))
    }

    pub fn complex(v: num_complex::Complex64) -> Expr {
        if v.im == 0.0 {
            Expr::real(v.re)
        } else {
            Expr::num(Num::complex(v))
        }
    }

    pub fn zero() -> Expr {
        Expr::num(Num::ZERO)
    }

    pub fn one() -> Expr {
        Expr::num(Num::ONE)
    }

    pub fn i() -> Expr {
        Expr::num(Num::I)
    }

    pub fn var(v: Var) -> Expr {
        Expr::new(Node::Sym(v))
    }

    pub fn t() -> Expr {
        Expr::var(Var::T)
    }

    pub fn x(a: usize) -> Expr {
        Expr::var(Var::X(a as u8))
    }

    pub fn psi() -> Expr {
        Expr::var(Var::Psi)
    }

    pub fn cpsi() -> Expr {
        Expr::var(Var::CPsi)
    }

    pub fn param(name: &str) -> Expr {
        Expr::var(Var::param(name))
    }

    pub fn rho() -> Expr {
        Expr::new(Node::Rho)
    }

    pub fn phi() -> Expr {
        Expr::new(Node::Phi)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::new(Node::Call(f, arg))
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::call(Func::Ln, self)
    }

    pub fn abs(self) -> Expr {
        Expr::call(Func::Abs, self)
    }

    pub fn re(self) -> Expr {
        Expr::call(Func::Re, self)
    }

    pub fn im(self) -> Expr {
        Expr::call(Func::Im, self)
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn apply(name: &str, args: Vec<Expr>) -> Expr {
        let deriv = vec![0; args.len()];
        Expr::new(Node::Apply { name: Arc::from(name), deriv, args })
    }

    pub fn pow(self, exp: Expr) -> Expr {
        if let Node::Num(e) = exp.node() {
            if e.is_zero() {
                return Expr::one();
            }
            if e.is_one() {
                return self;
            }
            if let (Node::Num(b), Some(k)) = (self.node(), e.as_integer()) {
                if let Some(v) = b.powi_exact(k) {
                    return Expr::num(v);
                }
            }
        }
        Expr::new(Node::Pow(self, exp))
    }

    pub fn powi(self, k: i64) -> Expr {
        self.pow(Expr::int(k))
    }

    pub fn sqrt(self) -> Expr {
        self.pow(Expr::rat(1, 2))
    }

    pub fn recip(self) -> Expr {
        self.powi(-1)
    }

    /// Sum of `x_a x_a` over a = 1..n.
    pub fn x_squared(n: usize) -> Expr {
        Expr::sum((1..=n).map(|a| Expr::x(a).powi(2)))
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut terms = Vec::new();
        let mut constant = Num::ZERO;
        for e in items {
            match e.node() {
                Node::Num(n) => constant = constant.add(*n),
                Node::Add(children) => {
                    for c in children {
                        match c.node() {
                            Node::Num(n) => constant = constant.add(*n),
                            _ => terms.push(c.clone()),
                        }
                    }
                }
                _ => terms.push(e),
            }
        }
        if !constant.is_zero() {
            terms.push(Expr::num(constant));
        }
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => Expr::new(Node::Add(terms)),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut factors = Vec::new();
        let mut coeff = Num::ONE;
        for e in items {
            match e.node() {
                Node::Num(n) => coeff = coeff.mul(*n),
                Node::Mul(children) => {
                    for c in children {
                        match c.node() {
                            Node::Num(n) => coeff = coeff.mul(*n),
                            _ => factors.push(c.clone()),
                        }
                    }
                }
                _ => factors.push(e),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if !coeff.is_one() {
            factors.insert(0, Expr::num(coeff));
        }
        match factors.len() {
            0 => Expr::one(),
            1 => factors.pop().unwrap(),
            _ => Expr::new(Node::Mul(factors)),
        }
    }

    pub fn as_num(&self) -> Option<Num> {
        match self.node() {
            Node::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Num(n) if n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(n) if n.is_one())
    }

    /// Children in order, for generic traversals.
    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Num(_) | Node::Sym(_) | Node::Rho | Node::Phi => Vec::new(),
            Node::Add(c) | Node::Mul(c) => c.clone(),
            Node::Pow(b, e) => vec![b.clone(), e.clone()],
            Node::Call(_, a) => vec![a.clone()],
            Node::Apply { args, .. } => args.clone(),
        }
    }

    /// Rebuild this node with new children (same arity as `children`).
    pub fn with_children(&self, mut kids: Vec<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Sym(_) | Node::Rho | Node::Phi => self.clone(),
            Node::Add(_) => Expr::sum(kids),
            Node::Mul(_) => Expr::product(kids),
            Node::Pow(..) => {
                let e = kids.pop().unwrap();
                let b = kids.pop().unwrap();
                b.pow(e)
            }
            Node::Call(f, _) => Expr::call(*f, kids.pop().unwrap()),
            Node::Apply { name, deriv, .. } => {
                Expr::new(Node::Apply { name: name.clone(), deriv: deriv.clone(), args: kids })
            }
        }
    }

    /// Bottom-up rewrite; `f` sees each node after its children were rewritten.
    pub fn map_bottom_up(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        let kids = self.children();
        let rebuilt = if kids.is_empty() {
            self.clone()
        } else {
            let new_kids: Vec<Expr> = kids.iter().map(|k| k.map_bottom_up(f)).collect();
            if new_kids == kids {
                self.clone()
            } else {
                self.with_children(new_kids)
            }
        };
        f(&rebuilt).unwrap_or(rebuilt)
    }

    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().iter().any(|c| c.any(pred))
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.any(&|e| match e.node() {
            Node::Sym(w) => w == v,
            Node::Rho | Node::Phi => matches!(v, Var::Psi | Var::CPsi),
            _ => false,
        })
    }

    /// Whether the expression depends on ψ or ψ* (directly or via ρ, φ).
    pub fn depends_on_psi(&self) -> bool {
        self.contains_var(&Var::Psi) || self.contains_var(&Var::CPsi)
    }

    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        if let Node::Sym(Var::Param(p)) = self.node() {
            out.push(p.to_string());
        }
        for c in self.children() {
            c.collect_params(out);
        }
    }

    pub fn function_symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_functions(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_functions(&self, out: &mut Vec<String>) {
        if let Node::Apply { name, .. } = self.node() {
            out.push(name.to_string());
        }
        for c in self.children() {
            c.collect_functions(out);
        }
    }

    /// Number of nodes in the tree (shared subtrees counted repeatedly).
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Expr::size).sum::<usize>()
    }
}

impl From<Num> for Expr {
    fn from(n: Num) -> Expr {
        Expr::num(n)
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Expr {
        Expr::int(v)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Expr {
        Expr::var(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b| Expr::sum([a, -b]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, |a, b| match b.as_num().and_then(|n| n.recip()) {
    Some(inv) => Expr::product([a, Expr::num(inv)]),
    None => Expr::product([a, b.recip()]),
});

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.node() {
            Node::Num(n) => Expr::num(n.neg()),
            _ => Expr::product([Expr::int(-1), self]),
        }
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -(self.clone())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(a) => write!(f, "x{a}"),
            Var::Psi => write!(f, "psi"),
            Var::CPsi => write!(f, "cpsi"),
            Var::Param(p) => write!(f, "{p}"),
            Var::Arg(k) => write!(f, "#{k}"),
            Var::Jet { conj, idx } => {
                write!(f, "{}_", if *conj { "cpsi" } else { "psi" })?;
                for i in idx {
                    if *i == 0 {
                        write!(f, "t")?;
                    } else {
                        write!(f, "x{i}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

const PREC_SUM: u8 = 1;
const PREC_PROD: u8 = 2;
const PREC_POW: u8 = 3;
const PREC_ATOM: u8 = 4;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(_) => PREC_SUM,
        Node::Mul(_) => PREC_PROD,
        Node::Pow(..) => PREC_POW,
        Node::Num(n) => {
            // Non-trivial constants print as parenthesised or signed forms.
            let s = n.to_string();
            if s.starts_with('-') || s.contains('/') || s.contains('*') {
                PREC_PROD
            } else {
                PREC_ATOM
            }
        }
        _ => PREC_ATOM,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Splits a leading negative numeric factor from a term for pretty sums.
fn negated_term(e: &Expr) -> Option<Expr> {
    match e.node() {
        Node::Num(n) if n.is_real() && n.to_c64().re < 0.0 => Some(Expr::num(n.neg())),
        Node::Mul(fs) => match fs[0].node() {
            Node::Num(n) if n.is_real() && n.to_c64().re < 0.0 => {
                let mut rest = fs.clone();
                rest[0] = Expr::num(n.neg());
                Some(Expr::product(rest))
            }
            _ => None,
        },
        _ => None,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(n) => write!(f, "{n}"),
            Node::Sym(v) => write!(f, "{v}"),
            Node::Rho => write!(f, "rho"),
            Node::Phi => write!(f, "phi"),
            Node::Add(terms) => {
                for (k, t) in terms.iter().enumerate() {
                    match negated_term(t) {
                        Some(pos) if k > 0 => {
                            write!(f, " - ")?;
                            write_wrapped(f, &pos, PREC_PROD)?;
                        }
                        _ => {
                            if k > 0 {
                                write!(f, " + ")?;
                            }
                            write_wrapped(f, t, PREC_PROD)?;
                        }
                    }
                }
                Ok(())
            }
            Node::Mul(fs) => {
                if let Node::Num(n) = fs[0].node() {
                    if n.is_real() && n.to_c64().re == -1.0 && n.is_exact() && fs.len() > 1 {
                        write!(f, "-")?;
                        let rest = Expr::product(fs[1..].to_vec());
                        return write_wrapped(f, &rest, PREC_POW);
                    }
                }
                for (k, x) in fs.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    if k == 0 {
                        if let Node::Num(_) = x.node() {
                            write!(f, "({x})")?;
                            continue;
                        }
                    }
                    write_wrapped(f, x, PREC_POW)?;
                }
                Ok(())
            }
            Node::Pow(b, e) => {
                write_wrapped(f, b, PREC_ATOM)?;
                write!(f, "^")?;
                write_wrapped(f, e, PREC_ATOM)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Apply { name, deriv, args } => {
                write!(f, "{name}")?;
                if deriv.iter().any(|d| *d > 0) {
                    write!(f, "[")?;
                    for (k, d) in deriv.iter().enumerate() {
                        if k > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{d}")?;
                    }
                    write!(f, "]")?;
                }
                write!(f, "(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}
