//! The integrated form of the defining system and its direct check.

use serde::Serialize;

use super::VectorField;
use crate::error::{Error, Result};
use crate::symexpr::{differentiate, is_zero, simplify, Expr, SamplerConfig, Var, ZeroVerdict};

/// Free data of the general solution of the defining system.
#[derive(Clone, Debug)]
pub struct AnsatzParams {
    /// ξ⁰(t), real.
    pub xi0: Expr,
    /// Antisymmetric real constants κ_ab.
    pub kappa: Vec<Vec<Expr>>,
    /// χ^a(t), real.
    pub chi: Vec<Expr>,
    /// ζ(t), complex.
    pub zeta: Expr,
    /// η⁰(t, x), complex.
    pub eta0: Expr,
}

impl AnsatzParams {
    pub fn zero(n: usize) -> AnsatzParams {
        AnsatzParams {
            xi0: Expr::zero(),
            kappa: vec![vec![Expr::zero(); n]; n],
            chi: vec![Expr::zero(); n],
            zeta: Expr::zero(),
            eta0: Expr::zero(),
        }
    }
}

/// ξ^a = ½ξ⁰_t x_a + κ_ab x_b + χ^a, η = η¹ψ + η⁰ with
/// η¹ = (i/8)ξ⁰_tt x·x + (i/2)χ^a_t x_a + ζ.
pub fn from_ansatz(p: &AnsatzParams, n: usize) -> Result<VectorField> {
    if p.kappa.len() != n || p.kappa.iter().any(|r| r.len() != n) || p.chi.len() != n {
        return Err(Error::Invalid(format!("ansatz data must have dimension {n}")));
    }
    for a in 0..n {
        for b in 0..n {
            if !simplify(&(&p.kappa[a][b] + &p.kappa[b][a])).is_zero() {
                return Err(Error::NotAntisymmetric(a + 1, b + 1));
            }
        }
    }
    let t = Var::T;
    let xi0_t = differentiate(&p.xi0, &t);
    let xi0_tt = differentiate(&xi0_t, &t);
    let xi: Vec<Expr> = (0..n)
        .map(|a| {
            let mut terms = vec![Expr::rat(1, 2) * &xi0_t * Expr::x(a + 1), p.chi[a].clone()];
            for b in 0..n {
                terms.push(&p.kappa[a][b] * Expr::x(b + 1));
            }
            Expr::sum(terms)
        })
        .collect();
    let mut eta1 = vec![Expr::i() * Expr::rat(1, 8) * xi0_tt * Expr::x_squared(n), p.zeta.clone()];
    for a in 0..n {
        eta1.push(Expr::i() * Expr::rat(1, 2) * differentiate(&p.chi[a], &t) * Expr::x(a + 1));
    }
    let eta = Expr::sum(eta1) * Expr::psi() + p.eta0.clone();
    Ok(VectorField::new(n, p.xi0.clone(), xi, eta).simplified())
}

#[derive(Clone, Debug, Serialize)]
pub struct DefiningReport {
    /// One entry per scalar equation, named as in the defining system.
    pub equations: Vec<(String, ZeroVerdict)>,
}

impl DefiningReport {
    pub fn satisfied(&self) -> bool {
        self.equations.iter().all(|(_, v)| v.zero)
    }

    pub fn violations(&self) -> Vec<&str> {
        self.equations.iter().filter(|(_, v)| !v.zero).map(|(name, _)| name.as_str()).collect()
    }
}

/// Evaluates every equation of the defining system for `q`.
pub fn check_defining_equations(q: &VectorField, cfg: &SamplerConfig, tol: f64) -> Result<DefiningReport> {
    let n = q.n;
    let d = differentiate;
    let mut eqs: Vec<(String, Expr)> = vec![
        ("xi0_psi".into(), d(&q.xi0, &Var::Psi)),
        ("xi0_cpsi".into(), d(&q.xi0, &Var::CPsi)),
    ];
    for a in 1..=n {
        eqs.push((format!("xi0_x{a}"), d(&q.xi0, &Var::X(a as u8))));
    }
    for a in 1..=n {
        let xa = &q.xi[a - 1];
        eqs.push((format!("xi{a}_psi"), d(xa, &Var::Psi)));
        eqs.push((format!("xi{a}_cpsi"), d(xa, &Var::CPsi)));
    }
    eqs.push(("eta_cpsi".into(), d(&q.eta, &Var::CPsi)));
    eqs.push(("eta_psipsi".into(), d(&d(&q.eta, &Var::Psi), &Var::Psi)));
    for a in 1..=n {
        for b in (a + 1)..=n {
            let e = d(&q.xi[a - 1], &Var::X(b as u8)) + d(&q.xi[b - 1], &Var::X(a as u8));
            eqs.push((format!("xi{a}_x{b}+xi{b}_x{a}"), e));
        }
    }
    for a in 1..=n {
        let xa = &q.xi[a - 1];
        let e = Expr::int(2) * d(&d(&q.eta, &Var::X(a as u8)), &Var::Psi) - Expr::i() * d(xa, &Var::T);
        eqs.push((format!("2eta_x{a}psi-i*xi{a}_t"), e));
        let e = Expr::int(2) * d(xa, &Var::X(a as u8)) - d(&q.xi0, &Var::T);
        eqs.push((format!("2xi{a}_x{a}-xi0_t"), e));
    }
    let mut equations = Vec::with_capacity(eqs.len());
    for (name, e) in eqs {
        equations.push((name, is_zero(&e, cfg, tol)?));
    }
    Ok(DefiningReport { equations })
}

#[cfg(test)]
mod tests {
    use super::super::{named_generator, GenParams};
    use super::*;

    fn cfg(n: usize) -> SamplerConfig {
        SamplerConfig::new(n, 11).with_samples(40)
    }

    #[test]
    fn dilation_from_ansatz() {
        let n = 2;
        let p = AnsatzParams { xi0: Expr::t(), ..AnsatzParams::zero(n) };
        assert_eq!(from_ansatz(&p, n).unwrap(), named_generator("D", &GenParams::new(), n).unwrap());
    }

    #[test]
    fn projective_from_ansatz() {
        for n in 1..=3 {
            let p = AnsatzParams {
                xi0: Expr::t().powi(2),
                zeta: Expr::rat(-(n as i64), 2) * Expr::t(),
                ..AnsatzParams::zero(n)
            };
            assert_eq!(from_ansatz(&p, n).unwrap(), named_generator("Pi", &GenParams::new(), n).unwrap());
        }
    }

    #[test]
    fn boost_from_ansatz() {
        let n = 3;
        let mut p = AnsatzParams::zero(n);
        p.chi[1] = Expr::t();
        let g = named_generator("Ga", &GenParams::new().index("a", 2), n).unwrap();
        assert_eq!(from_ansatz(&p, n).unwrap(), g);
    }

    #[test]
    fn rejects_symmetric_kappa() {
        let mut p = AnsatzParams::zero(2);
        p.kappa[0][1] = Expr::one();
        p.kappa[1][0] = Expr::one();
        assert_eq!(from_ansatz(&p, 2).unwrap_err(), Error::NotAntisymmetric(1, 2));
    }

    #[test]
    fn ansatz_output_satisfies_system() {
        let n = 2;
        let mut p = AnsatzParams::zero(n);
        p.xi0 = crate::symexpr::parse("t^3 + 2*t", n).unwrap();
        p.kappa[0][1] = Expr::int(3);
        p.kappa[1][0] = Expr::int(-3);
        p.chi = vec![Expr::t().powi(2), Expr::t().sin()];
        p.zeta = crate::symexpr::parse("(1+2*i)*t^2", n).unwrap();
        p.eta0 = crate::symexpr::parse("exp(i*x1)*t", n).unwrap();
        let q = from_ansatz(&p, n).unwrap();
        let r = check_defining_equations(&q, &cfg(n), 1e-9).unwrap();
        assert!(r.satisfied(), "{:?}", r.violations());
    }

    #[test]
    fn symmetric_rotation_violates() {
        let n = 2;
        let q = VectorField::new(n, Expr::zero(), vec![Expr::x(2), Expr::x(1)], Expr::zero());
        let r = check_defining_equations(&q, &cfg(n), 1e-9).unwrap();
        assert_eq!(r.violations(), vec!["xi1_x2+xi2_x1"]);
    }

    #[test]
    fn kernel_fields_satisfy_system() {
        let n = 2;
        for name in ["Pt", "I", "M", "D", "Pi"] {
            let q = named_generator(name, &GenParams::new(), n).unwrap();
            assert!(check_defining_equations(&q, &cfg(n), 1e-9).unwrap().satisfied(), "{name}");
        }
        let g = named_generator("Ga", &GenParams::new().index("a", 1), n).unwrap();
        assert!(check_defining_equations(&g, &cfg(n), 1e-9).unwrap().satisfied());
    }
}
