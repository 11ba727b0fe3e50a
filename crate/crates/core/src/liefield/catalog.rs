//! Named generators and the generator expression language.
//!
//! Generator expressions are linear combinations of operator symbols with
//! coefficient expressions, e.g. `exp(delta3*t)*(P_a + 1/2*delta3*x_a*M)`.
//! Operator symbols: `Pt`, `P_a`, `J_ab`, `I`, `M`, `D`, `G_a`, `Pi`, and `E`
//! (the field `∂_ψ + ∂_{ψ*}` whose coefficient becomes `η` directly). A
//! `_a` / `_ab` suffix expands over all indices; `x_a` is the matching
//! coordinate and `xx` stands for `x_a x_a`.

use std::collections::BTreeMap;

use super::VectorField;
use crate::error::{Error, Result};
use crate::symexpr::{differentiate, parse_with, simplify, substitute_many, Expr, ParseOptions, Var};

/// Parameters for `named_generator`: expression-valued entries plus indices.
#[derive(Clone, Debug, Default)]
pub struct GenParams {
    pub values: BTreeMap<String, Expr>,
    pub indices: BTreeMap<String, usize>,
}

impl GenParams {
    pub fn new() -> GenParams {
        GenParams::default()
    }

    pub fn value(mut self, key: &str, v: Expr) -> GenParams {
        self.values.insert(key.to_string(), v);
        self
    }

    pub fn index(mut self, key: &str, a: usize) -> GenParams {
        self.indices.insert(key.to_string(), a);
        self
    }

    fn get(&self, key: &str) -> Result<Expr> {
        self.values.get(key).cloned().ok_or_else(|| Error::MissingParameter(key.to_string()))
    }

    fn idx(&self, key: &str, n: usize) -> Result<usize> {
        let a = *self.indices.get(key).ok_or_else(|| Error::MissingParameter(key.to_string()))?;
        if a == 0 || a > n {
            return Err(Error::IndexOutOfRange { index: a, n });
        }
        Ok(a)
    }
}

fn field(n: usize) -> VectorField {
    VectorField::zero(n)
}

/// Builds a generator from its catalog name.
pub fn named_generator(name: &str, params: &GenParams, n: usize) -> Result<VectorField> {
    let psi = Expr::psi();
    let i = Expr::i();
    let mut q = field(n);
    let label: String;
    match name {
        "Pt" => {
            q.xi0 = Expr::one();
            label = "d_t".into();
        }
        "Pa" => {
            let a = params.idx("a", n)?;
            q.xi[a - 1] = Expr::one();
            label = format!("d_{a}");
        }
        "Jab" => {
            let a = params.idx("a", n)?;
            let b = params.idx("b", n)?;
            if a == b {
                return Err(Error::Invalid("J_ab needs a != b".into()));
            }
            q.xi[b - 1] = Expr::x(a);
            q.xi[a - 1] = -Expr::x(b);
            label = format!("J_{a}{b}");
        }
        "I" => {
            q.eta = psi;
            label = "I".into();
        }
        "M" => {
            q.eta = i * psi;
            label = "M".into();
        }
        "D" => {
            q.xi0 = Expr::t();
            q.xi = (1..=n).map(|a| Expr::rat(1, 2) * Expr::x(a)).collect();
            label = "D".into();
        }
        "Ga" => {
            let a = params.idx("a", n)?;
            q.xi[a - 1] = Expr::t();
            q.eta = Expr::i() * Expr::rat(1, 2) * Expr::x(a) * psi;
            label = format!("G_{a}");
        }
        "Pi" => {
            let t = Expr::t();
            q.xi0 = t.clone().powi(2);
            q.xi = (1..=n).map(|a| &t * Expr::x(a)).collect();
            q.eta = (Expr::rat(-(n as i64), 2) * &t + Expr::i() * Expr::rat(1, 4) * Expr::x_squared(n)) * psi;
            label = "Pi".into();
        }
        "S" => {
            q.eta = Expr::one();
            label = "d_psi+d_cpsi".into();
        }
        "T" => {
            q.eta = Expr::i();
            label = "i(d_psi-d_cpsi)".into();
        }
        "expI_M" => {
            let delta = params.get("delta")?;
            let gamma = params.get("gamma")?;
            q.eta = (delta.clone() * Expr::t()).exp() * (Expr::one() + Expr::i() * gamma.clone()) * psi;
            label = format!("e^({delta}t)(I+({gamma})M)");
        }
        "expM" => {
            let delta = params.get("delta")?;
            q.eta = (delta.clone() * Expr::t()).exp() * Expr::i() * psi;
            label = format!("e^({delta}t)M");
        }
        "expPaM" => {
            let delta = params.get("delta")?;
            let a = params.idx("a", n)?;
            let e = (delta.clone() * Expr::t()).exp();
            q.xi[a - 1] = e.clone();
            q.eta = e * Expr::i() * Expr::rat(1, 2) * delta.clone() * Expr::x(a) * psi;
            label = format!("e^({delta}t)(d_{a}+1/2({delta})x_{a}M)");
        }
        "theta_gen" => {
            let theta = params.get("theta")?;
            let delta1 = params.get("delta1").unwrap_or_else(|_| Expr::zero());
            q.eta = Expr::i() * (-(delta1 * Expr::t())).exp() * theta;
            label = "i e^(-delta1 t) theta(x)(d_psi-d_cpsi)".into();
        }
        "sol_gen" => {
            q.eta = params.get("eta0")?;
            label = "eta0 d_psi + eta0* d_cpsi".into();
        }
        "IM" => {
            // p(t) I + q(t) M
            let p = params.get("p")?;
            let qq = params.get("q")?;
            q.eta = (p + Expr::i() * qq) * psi;
            label = "pI+qM".into();
        }
        other => return Err(Error::UnknownGenerator(other.to_string())),
    }
    Ok(q.simplified().labeled(label))
}

const OPS: &[&str] = &["Pt", "I", "M", "D", "Pi", "E"];

fn op_symbol(name: &str) -> String {
    format!("op_{name}")
}

fn base_field(op: &str, n: usize) -> Result<VectorField> {
    let p = GenParams::new();
    match op {
        "E" => named_generator("S", &p, n),
        "Pt" | "I" | "M" | "D" | "Pi" => named_generator(op, &p, n),
        _ => {
            if let Some(rest) = op.strip_prefix('P') {
                let a: usize = rest.parse().map_err(|_| Error::UnknownGenerator(op.into()))?;
                return named_generator("Pa", &p.index("a", a), n);
            }
            if let Some(rest) = op.strip_prefix('G') {
                let a: usize = rest.parse().map_err(|_| Error::UnknownGenerator(op.into()))?;
                return named_generator("Ga", &p.index("a", a), n);
            }
            if let Some(rest) = op.strip_prefix('J') {
                let digits: Vec<usize> = rest.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
                if digits.len() == 2 {
                    return named_generator("Jab", &p.index("a", digits[0]).index("b", digits[1]), n);
                }
            }
            Err(Error::UnknownGenerator(op.into()))
        }
    }
}

/// Expands index families: one text per value of `a` (or pair `a<b`).
/// `G_1`, `P_2`, `J_12`, `x_1` → `G1`, `P2`, `J12`, `x1`.
fn drop_index_underscores(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (k, &c) in chars.iter().enumerate() {
        let concrete = c == '_'
            && k > 0
            && matches!(chars[k - 1], 'P' | 'G' | 'J' | 'x')
            && chars.get(k + 1).is_some_and(|d| d.is_ascii_digit());
        if !concrete {
            out.push(c);
        }
    }
    out
}

fn expand_indices(text: &str, n: usize) -> Vec<(String, String)> {
    let text = &drop_index_underscores(text);
    let xx = format!("({})", (1..=n).map(|a| format!("x{a}^2")).collect::<Vec<_>>().join("+"));
    let xs = (1..=n).map(|a| format!("x{a}")).collect::<Vec<_>>().join(",");
    let base = replace_word(text, "xx", &xx).replace("(t,x)", &format!("(t,{xs})")).replace("(x)", &format!("({xs})"));
    if base.contains("J_ab") {
        let mut out = Vec::new();
        for a in 1..=n {
            for b in (a + 1)..=n {
                out.push((format!("{a}{b}"), base.replace("J_ab", &format!("J{a}{b}"))));
            }
        }
        return out;
    }
    if base.contains("_a") {
        return (1..=n)
            .map(|a| {
                let s = base.replace("P_a", &format!("P{a}")).replace("G_a", &format!("G{a}")).replace("x_a", &format!("x{a}"));
                (a.to_string(), s)
            })
            .collect();
    }
    vec![(String::new(), base)]
}

fn replace_word(text: &str, word: &str, with: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::new();
    let mut k = 0;
    while k < text.len() {
        if text[k..].starts_with(word) {
            let before_ok = k == 0 || !(bytes[k - 1] as char).is_ascii_alphanumeric() && bytes[k - 1] != b'_';
            let end = k + word.len();
            let after_ok = end >= text.len() || !(bytes[end] as char).is_ascii_alphanumeric() && bytes[end] != b'_';
            if before_ok && after_ok {
                out.push_str(with);
                k = end;
                continue;
            }
        }
        let ch = text[k..].chars().next().unwrap();
        out.push(ch);
        k += ch.len_utf8();
    }
    out
}

/// Parses a generator expression into one field per index value.
///
/// `opts` supplies parameter bindings (numeric constants, `n`, ...).
pub fn parse_generator(text: &str, n: usize, opts: &ParseOptions) -> Result<Vec<VectorField>> {
    let mut ops: Vec<String> = OPS.iter().map(|s| s.to_string()).collect();
    for a in 1..=n {
        ops.push(format!("P{a}"));
        ops.push(format!("G{a}"));
        for b in (a + 1)..=n {
            ops.push(format!("J{a}{b}"));
        }
    }
    let mut popts = opts.clone();
    popts.n = n;
    for op in &ops {
        popts.constants.insert(op.clone(), Expr::param(&op_symbol(op)));
    }
    let mut out = Vec::new();
    for (suffix, body) in expand_indices(text, n) {
        let e = parse_with(&body, &popts)?;
        let zero_ops: Vec<(Var, Expr)> = ops.iter().map(|op| (Var::param(&op_symbol(op)), Expr::zero())).collect();
        let mut acc = VectorField::zero(n);
        for op in &ops {
            let sym = Var::param(&op_symbol(op));
            let coeff = simplify(&differentiate(&e, &sym));
            if coeff.is_zero() {
                continue;
            }
            let coeff = simplify(&substitute_many(&coeff, &zero_ops));
            let f = base_field(op, n)?;
            acc = acc.add(&f.scale(&coeff));
        }
        let remainder = simplify(&substitute_many(&e, &zero_ops));
        if !remainder.is_zero() {
            return Err(Error::Invalid(format!("generator expression has a term without operator: {remainder}")));
        }
        let label = if suffix.is_empty() {
            text.to_string()
        } else {
            text.replace("_ab", &format!("_{suffix}")).replace("_a", &format!("_{suffix}"))
        };
        out.push(acc.simplified().labeled(label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{eval_numeric, SamplePoint};
    use num_complex::Complex64;

    #[test]
    fn boost_matches_definition() {
        let g = named_generator("Ga", &GenParams::new().index("a", 1), 2).unwrap();
        assert_eq!(g.xi[0], Expr::t());
        assert!(g.xi[1].is_zero());
        assert!(g.xi0.is_zero());
        let expected = simplify(&(Expr::i() * Expr::rat(1, 2) * Expr::x(1) * Expr::psi()));
        assert_eq!(g.eta, expected);
    }

    #[test]
    fn scaling_generator() {
        let q = named_generator("I", &GenParams::new(), 3).unwrap();
        assert!(q.xi0.is_zero() && q.xi.iter().all(Expr::is_zero));
        assert_eq!(q.eta, Expr::psi());
    }

    #[test]
    fn projective_eta_value() {
        let q = named_generator("Pi", &GenParams::new(), 2).unwrap();
        let p = SamplePoint::new(1.0, vec![1.0, 0.0], Complex64::new(1.0, 0.0));
        let v = eval_numeric(&q.eta, &p).unwrap();
        assert!((v - Complex64::new(-1.0, 0.25)).norm() < 1e-14);
    }

    #[test]
    fn errors() {
        assert!(matches!(named_generator("Q", &GenParams::new(), 1), Err(Error::UnknownGenerator(_))));
        assert!(matches!(
            named_generator("Ga", &GenParams::new().index("a", 3), 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(named_generator("expM", &GenParams::new(), 1), Err(Error::MissingParameter(_))));
    }

    #[test]
    fn dsl_matches_named() {
        let n = 2;
        let opts = ParseOptions::new(n);
        let gs = parse_generator("G_a", n, &opts).unwrap();
        assert_eq!(gs.len(), 2);
        assert_eq!(gs[1], named_generator("Ga", &GenParams::new().index("a", 2), n).unwrap());
        let pi = parse_generator("t^2*Pt + t*x_a*P_a - n/2*t*I + 1/4*xx*M", n, &opts);
        // index families expand per a, so this is not a single field
        assert_eq!(pi.unwrap().len(), 2);
        let combo = parse_generator("I - 2*D", n, &opts).unwrap();
        let manual = named_generator("I", &GenParams::new(), n)
            .unwrap()
            .sub(&named_generator("D", &GenParams::new(), n).unwrap().scale(&Expr::int(2)))
            .simplified();
        assert_eq!(combo[0], manual);
        let shift = parse_generator("D - E", n, &opts).unwrap();
        assert_eq!(shift[0].eta, Expr::int(-1));
    }

    #[test]
    fn dsl_rejects_bare_terms() {
        assert!(parse_generator("I + t", 1, &ParseOptions::new(1)).is_err());
    }
}
