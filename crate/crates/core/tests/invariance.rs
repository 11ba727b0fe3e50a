use nls_sym::invariance::{
    classifying_residual, oracle_discrepancy, prolongation_residual, verify_symmetry, Verdict,
};
use nls_sym::liefield::{parse_generator, VectorField};
use nls_sym::symexpr::{is_zero, parse, ParseOptions, SamplerConfig};

fn one(text: &str, n: usize) -> VectorField {
    parse_generator(text, n, &ParseOptions::new(n)).unwrap().remove(0)
}

#[test]
fn projective_symmetry_needs_critical_power() {
    for n in 1..=3 {
        let cfg = SamplerConfig::new(n, 5).with_samples(60);
        let critical = parse(&format!("abs(psi)^(4/{n})*psi"), n).unwrap();
        assert_eq!(verify_symmetry(&critical, &one("Pi", n), &cfg, 1e-9).verdict, Verdict::Pass, "n={n}");
        let off = parse("abs(psi)^(5/2)*psi", n).unwrap();
        assert_eq!(verify_symmetry(&off, &one("Pi", n), &cfg, 1e-9).verdict, Verdict::Fail, "n={n}");
    }
}

#[test]
fn residual_and_prolongation_agree_off_symmetry() {
    let n = 1;
    let cfg = SamplerConfig::new(n, 9).with_samples(40);
    let f = parse("exp(re(psi)) + abs(psi)^2*psi", n).unwrap();
    for q in ["M", "D", "Pi", "G_1", "exp(t)*M"] {
        let q = one(q, n);
        let d = oracle_discrepancy(&f, &q, &cfg).unwrap();
        assert!(d < 1e-9, "{}: {d}", q.label());
        let r = classifying_residual(&f, &q, &cfg, 1e-9).unwrap();
        assert!(!is_zero(&r, &cfg, 1e-9).unwrap().zero);
    }
}

#[test]
fn kernel_is_universal() {
    let n = 2;
    let cfg = SamplerConfig::new(n, 1).with_samples(40).with_jets(3);
    let f = parse("sin(re(psi))*cpsi + psi^2", n).unwrap();
    for q in ["Pt", "P_1", "P_2", "J_12"] {
        let r = prolongation_residual(&f, &one(q, n));
        assert!(is_zero(&r, &cfg, 1e-9).unwrap().zero, "{q}");
    }
}
