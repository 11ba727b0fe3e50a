//! Invariance certificates for `iψ_t + Δψ + F(ψ, ψ*) = 0`.
//!
//! Two independent routes: the classifying condition evaluated on fields
//! satisfying the defining system, and the second prolongation restricted to
//! the equation and its conjugate, with free samples for the remaining jets.

mod prolong;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::liefield::{check_defining_equations, DefiningReport, VectorField};
use crate::symexpr::{
    differentiate, eval_with_scale, is_zero, numeric_zero, simplify, Expr, SamplerConfig, Var, ZeroVerdict,
};

pub use prolong::{eliminate_time_jets, jet_split, prolongation_residual, total_derivative};

/// Default residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `ηF_ψ + η*F_{ψ*} + (ξ⁰_t − η_ψ)F + iη_t + η_aa`, without any precondition.
pub fn classifying_expr(f: &Expr, q: &VectorField) -> Expr {
    let eta = &q.eta;
    let mut terms = vec![
        eta * differentiate(f, &Var::Psi),
        q.eta_conj() * differentiate(f, &Var::CPsi),
        (differentiate(&q.xi0, &Var::T) - differentiate(eta, &Var::Psi)) * f,
        Expr::i() * differentiate(eta, &Var::T),
    ];
    for a in 1..=q.n {
        let xa = Var::X(a as u8);
        terms.push(differentiate(&differentiate(eta, &xa), &xa));
    }
    Expr::sum(terms)
}

/// The classifying residual, defined only for fields solving the defining
/// system.
pub fn classifying_residual(f: &Expr, q: &VectorField, cfg: &SamplerConfig, tol: f64) -> Result<Expr> {
    let report = check_defining_equations(q, cfg, tol)?;
    if !report.satisfied() {
        return Err(Error::DefiningViolated(report.violations().join(", ")));
    }
    Ok(simplify(&classifying_expr(f, q)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub generator: String,
    pub verdict: Verdict,
    pub defining: Option<DefiningReport>,
    pub classifying: Option<ZeroVerdict>,
    pub prolongation: Option<ZeroVerdict>,
    pub samples: usize,
    pub tol: f64,
    pub diagnostics: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Largest relative residual across the checks that ran.
    pub fn max_residual(&self) -> f64 {
        [&self.classifying, &self.prolongation].iter().filter_map(|v| v.as_ref()).map(|v| v.max_rel).fold(0.0, f64::max)
    }
}

/// Which checks `verify_symmetry_with` runs.
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub prolongation: bool,
    /// Sample count for the prolongation oracle (it is the expensive one).
    pub prolongation_samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { prolongation: true, prolongation_samples: 100 }
    }
}

/// Defining system, classifying residual and prolongation oracle; PASS iff
/// all are zero.
pub fn verify_symmetry(f: &Expr, q: &VectorField, cfg: &SamplerConfig, tol: f64) -> VerificationReport {
    verify_symmetry_with(f, q, cfg, tol, VerifyOptions::default())
}

pub fn verify_symmetry_with(
    f: &Expr,
    q: &VectorField,
    cfg: &SamplerConfig,
    tol: f64,
    opts: VerifyOptions,
) -> VerificationReport {
    let mut report = VerificationReport {
        generator: q.label(),
        verdict: Verdict::Pass,
        defining: None,
        classifying: None,
        prolongation: None,
        samples: cfg.samples,
        tol,
        diagnostics: Vec::new(),
    };
    match check_defining_equations(q, cfg, tol) {
        Ok(d) => {
            if !d.satisfied() {
                report.diagnostics.push(format!("defining system violated: {}", d.violations().join(", ")));
                report.verdict = Verdict::Fail;
            }
            report.defining = Some(d);
        }
        Err(e) => indeterminate(&mut report, e),
    }
    if report.verdict == Verdict::Pass {
        match is_zero(&classifying_expr(f, q), cfg, tol) {
            Ok(v) => {
                if !v.zero {
                    report.verdict = Verdict::Fail;
                }
                report.classifying = Some(v);
            }
            Err(e) => indeterminate(&mut report, e),
        }
    }
    if opts.prolongation {
        let jet_cfg = cfg.clone().with_jets(3).with_samples(opts.prolongation_samples.min(cfg.samples));
        match numeric_zero(&prolongation_residual(f, q), &jet_cfg, tol) {
            Ok(v) => {
                if !v.zero {
                    report.verdict = Verdict::Fail;
                }
                report.prolongation = Some(v);
            }
            Err(e) => indeterminate(&mut report, e),
        }
    }
    report
}

fn indeterminate(r: &mut VerificationReport, e: Error) {
    r.diagnostics.push(e.to_string());
    if r.verdict == Verdict::Pass {
        r.verdict = Verdict::Indeterminate;
    }
}

/// Largest `|R_cl − R_pr| / (1 + |R_cl| + |R_pr|)` over jet samples.
pub fn oracle_discrepancy(f: &Expr, q: &VectorField, cfg: &SamplerConfig) -> Result<f64> {
    let cl = classifying_expr(f, q);
    let pr = prolongation_residual(f, q);
    let jet_cfg = cfg.clone().with_jets(3);
    let mut worst: f64 = 0.0;
    for k in 0..jet_cfg.samples {
        let mut done = false;
        for retry in 0..crate::symexpr::MAX_RETRIES {
            let p = jet_cfg.point(k, retry);
            let a = eval_with_scale(&cl, &p);
            let b = eval_with_scale(&pr, &p);
            match (a, b) {
                (Ok((a, sa)), Ok((b, sb))) => {
                    worst = worst.max((a - b).norm() / (1.0 + sa + sb));
                    done = true;
                    break;
                }
                (Err(Error::Singular(_)), _) | (_, Err(Error::Singular(_))) => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        if !done {
            return Err(Error::Singular(format!("jet sample {k}")));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liefield::{named_generator, GenParams};
    use crate::symexpr::parse;
    use num_complex::Complex64;

    fn g(name: &str, n: usize) -> VectorField {
        named_generator(name, &GenParams::new(), n).unwrap()
    }

    #[test]
    fn projective_free_equation_structural() {
        for n in 1..=3 {
            let r = classifying_residual(&Expr::zero(), &g("Pi", n), &SamplerConfig::new(n, 1).with_samples(20), 1e-9)
                .unwrap();
            assert!(r.is_zero(), "n = {n}: {r}");
        }
    }

    #[test]
    fn power_law_scaling_generator() {
        for n in 1..=3 {
            let cfg = SamplerConfig::new(n, 4)
                .with_samples(60)
                .with_param("sigma", Complex64::new(0.7, -0.4))
                .with_param("gamma", Complex64::new(1.3, 0.0));
            let f = parse("sigma*abs(psi)^gamma*psi", n).unwrap();
            let q = g("I", n).sub(&g("D", n).scale(&Expr::param("gamma")));
            let r = verify_symmetry(&f, &q, &cfg, 1e-9);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn projective_fails_off_critical_power() {
        let cfg = SamplerConfig::new(1, 4).with_samples(60);
        let f = parse("abs(psi)^2*psi", 1).unwrap();
        let r = verify_symmetry(&f, &g("Pi", 1), &cfg, 1e-9);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.classifying.unwrap().witness.is_some());
    }

    #[test]
    fn defining_violation_is_an_error() {
        let q = VectorField::new(1, Expr::zero(), vec![Expr::zero()], Expr::psi().powi(2));
        let e = classifying_residual(&Expr::zero(), &q, &SamplerConfig::new(1, 1).with_samples(10), 1e-9);
        assert!(matches!(e, Err(Error::DefiningViolated(_))));
    }

    #[test]
    fn oracles_agree_on_kernel_and_boosts() {
        let n = 2;
        let cfg = SamplerConfig::new(n, 9).with_samples(40);
        let f = parse("abs(psi)^2*psi + 3*exp(re(psi))", n).unwrap();
        for q in [g("Pt", n), g("D", n), g("Pi", n), named_generator("Ga", &GenParams::new().index("a", 2), n).unwrap()] {
            let d = oracle_discrepancy(&f, &q, &cfg).unwrap();
            assert!(d < 1e-8, "{}: {d}", q.label());
        }
    }

    #[test]
    fn time_translation_prolongation_vanishes() {
        let cfg = SamplerConfig::new(1, 2).with_samples(30);
        let f = parse("sin(re(psi))*psi + ln(abs(psi))", 1).unwrap();
        let v = numeric_zero(&prolongation_residual(&f, &g("Pt", 1)), &cfg.with_jets(3), 1e-9).unwrap();
        assert!(v.zero);
    }
}
