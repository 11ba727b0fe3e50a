//! Numeric evaluation in double precision.
//!
//! Every node is evaluated together with the value of its conjugate
//! expression, so that `abs`, `re`, `im` and the sugar atoms stay consistent
//! when ψ and ψ* are given independent values (Wirtinger evaluation).

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::calculus::Lambda;
use super::expr::{Expr, Func, Node, Var};
use crate::error::{Error, Result};

pub const DEFAULT_PSI_MIN: f64 = 1e-3;

/// Assignment of all free symbols.
#[derive(Clone, Debug)]
pub struct SamplePoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub psi: Complex64,
    /// Independent value for ψ*; `None` means `conj(psi)`.
    pub cpsi: Option<Complex64>,
    pub params: BTreeMap<String, Complex64>,
    pub functions: BTreeMap<String, Lambda>,
    /// Jet coordinates ψ_J and ψ*_J.
    pub jets: BTreeMap<Var, Complex64>,
    /// Magnitude floor for arguments of `ln`, phase, and negative powers.
    pub psi_min: f64,
}

impl SamplePoint {
    pub fn new(t: f64, x: Vec<f64>, psi: Complex64) -> SamplePoint {
        SamplePoint {
            t,
            x,
            psi,
            cpsi: None,
            params: BTreeMap::new(),
            functions: BTreeMap::new(),
            jets: BTreeMap::new(),
            psi_min: DEFAULT_PSI_MIN,
        }
    }

    pub fn with_param(mut self, name: &str, value: Complex64) -> SamplePoint {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn cpsi_value(&self) -> Complex64 {
        self.cpsi.unwrap_or(self.psi.conj())
    }
}

pub fn eval_numeric(e: &Expr, p: &SamplePoint) -> Result<Complex64> {
    let mut args = Vec::new();
    eval_pair(e, p, &mut args).map(|(v, _)| v)
}

type Pair = (Complex64, Complex64);

fn check(z: Complex64, what: &str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Singular(format!("non-finite value in {what}")))
    }
}

fn eval_pair(e: &Expr, p: &SamplePoint, args: &mut Vec<Pair>) -> Result<Pair> {
    let floor = p.psi_min;
    match e.node() {
        Node::Num(n) => {
            let z = n.to_c64();
            Ok((z, z.conj()))
        }
        Node::Sym(v) => match v {
            Var::T => Ok((p.t.into(), p.t.into())),
            Var::X(a) => {
                let val = *p.x.get(*a as usize - 1).ok_or_else(|| Error::Unassigned(format!("x{a}")))?;
                Ok((val.into(), val.into()))
            }
            Var::Psi => Ok((p.psi, p.cpsi_value())),
            Var::CPsi => Ok((p.cpsi_value(), p.psi)),
            Var::Param(name) => {
                let z = *p.params.get(name.as_ref()).ok_or_else(|| Error::Unassigned(name.to_string()))?;
                Ok((z, z.conj()))
            }
            Var::Arg(k) => args.get(*k as usize).copied().ok_or_else(|| Error::Unassigned(format!("#{k}"))),
            Var::Jet { .. } => {
                let z = *p.jets.get(v).ok_or_else(|| Error::Unassigned(v.to_string()))?;
                let w = p.jets.get(&v.conjugate()).copied().unwrap_or(z.conj());
                Ok((z, w))
            }
        },
        Node::Rho => {
            let (a, b) = (p.psi, p.cpsi_value());
            if a.norm() < floor {
                return Err(Error::Singular("rho below floor".into()));
            }
            let r = (a * b).sqrt();
            Ok((r, r))
        }
        Node::Phi => {
            let (a, b) = (p.psi, p.cpsi_value());
            if a.norm() < floor || b.norm() < floor {
                return Err(Error::Singular("phase below floor".into()));
            }
            let ph = Complex64::new(0.0, 0.5) * (b.ln() - a.ln());
            Ok((ph, ph))
        }
        Node::Add(c) => {
            let mut v = Complex64::new(0.0, 0.0);
            let mut w = Complex64::new(0.0, 0.0);
            for x in c {
                let (a, b) = eval_pair(x, p, args)?;
                v += a;
                w += b;
            }
            Ok((v, w))
        }
        Node::Mul(c) => {
            let mut v = Complex64::new(1.0, 0.0);
            let mut w = Complex64::new(1.0, 0.0);
            for x in c {
                let (a, b) = eval_pair(x, p, args)?;
                v *= a;
                w *= b;
            }
            Ok((check(v, "product")?, check(w, "product")?))
        }
        Node::Pow(b, x) => {
            let (bv, bw) = eval_pair(b, p, args)?;
            let (xv, xw) = eval_pair(x, p, args)?;
            let v = pow(bv, xv, floor)?;
            let w = pow(bw, xw, floor)?;
            Ok((v, w))
        }
        Node::Call(f, a) => {
            let (av, aw) = eval_pair(a, p, args)?;
            match f {
                Func::Exp => Ok((check(av.exp(), "exp")?, check(aw.exp(), "exp")?)),
                Func::Ln => {
                    if av.norm() < floor || aw.norm() < floor {
                        return Err(Error::Singular("ln argument below floor".into()));
                    }
                    Ok((av.ln(), aw.ln()))
                }
                Func::Sin => Ok((av.sin(), aw.sin())),
                Func::Cos => Ok((av.cos(), aw.cos())),
                Func::Abs => {
                    let r = (av * aw).sqrt();
                    Ok((r, r))
                }
                Func::Re => {
                    let r = (av + aw) * 0.5;
                    Ok((r, r))
                }
                Func::Im => {
                    let r = (av - aw) * Complex64::new(0.0, -0.5);
                    Ok((r, r))
                }
                Func::Conj => Ok((aw, av)),
            }
        }
        Node::Apply { name, deriv, args: fargs } => {
            let lambda = p.functions.get(name.as_ref()).ok_or_else(|| Error::Unassigned(format!("{name}(..)")))?;
            if lambda.arity != fargs.len() {
                return Err(Error::Arity { name: name.to_string(), expected: lambda.arity, found: fargs.len() });
            }
            let mut vals = Vec::with_capacity(fargs.len());
            for a in fargs {
                vals.push(eval_pair(a, p, args)?);
            }
            let body = if deriv.iter().all(|d| *d == 0) { lambda.body.clone() } else { lambda.derivative(deriv) };
            let mut inner = vals;
            eval_pair(&body, p, &mut inner)
        }
    }
}

fn pow(b: Complex64, x: Complex64, floor: f64) -> Result<Complex64> {
    if x.im == 0.0 && x.re.fract() == 0.0 && x.re.abs() < 64.0 {
        let k = x.re as i32;
        if k < 0 && b.norm() < floor {
            return Err(Error::Singular("negative power of small base".into()));
        }
        return check(b.powi(k), "power");
    }
    if b.norm() < floor {
        if x.re > 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(Error::Singular("non-integer power of small base".into()));
    }
    check(b.powc(x), "power")
}
