use num_complex::Complex64 as C;

use nls_sym::equivalence::{apply_to_f, equation_operator, transform_function, EquivTransform};
use nls_sym::symexpr::{eval_numeric, is_zero, parse, simplify, SamplerConfig};

fn gap(a: &nls_sym::symexpr::Expr, b: &nls_sym::symexpr::Expr, cfg: &SamplerConfig) -> f64 {
    (0..cfg.samples)
        .filter_map(|k| {
            let p = cfg.point(k, 0);
            Some((eval_numeric(a, &p).ok()? - eval_numeric(b, &p).ok()?).norm())
        })
        .fold(0.0, f64::max)
}

#[test]
fn pure_scaling_of_power_law() {
    let n = 1;
    let cfg = SamplerConfig::new(n, 4).with_samples(50);
    let f = parse("abs(psi)^2*psi", n).unwrap();
    // ψ̃ = 2ψ, δ = 1: F̃ = 2|ψ̃/2|²(ψ̃/2) = |ψ̃|²ψ̃/4
    let g = apply_to_f(&EquivTransform::pure(n, 1.0, C::new(2.0, 0.0), C::new(0.0, 0.0)), &f);
    assert!(gap(&g, &parse("abs(psi)^2*psi/4", n).unwrap(), &cfg) < 1e-12);
    // δ = 2 only rescales: F̃ = F/4
    let h = apply_to_f(&EquivTransform::pure(n, 2.0, C::new(1.0, 0.0), C::new(0.0, 0.0)), &f);
    assert!(gap(&h, &parse("abs(psi)^2*psi/4", n).unwrap(), &cfg) < 1e-12);
}

#[test]
fn composition_matches_sequential_application() {
    let n = 2;
    let cfg = SamplerConfig::new(n, 8).with_samples(50);
    let f = parse("(1+i)*abs(psi)^(3/2)*psi + exp(re(psi))", n).unwrap();
    let a = EquivTransform::pure(n, 1.5, C::new(0.3, 0.8), C::new(0.2, -0.1));
    let b = EquivTransform::phase_gauge(n, C::new(0.4, 0.0));
    let both = apply_to_f(&a.then(&b), &f);
    let seq = apply_to_f(&b, &apply_to_f(&a, &f));
    assert!(gap(&both, &seq, &cfg) < 1e-10);
}

#[test]
fn transformed_solutions_solve_transformed_equation() {
    // plane wave ψ = e^{i(x - t)}·e^{it} solves iψ_t + ψ_xx + ψ = 0 … pick F = ψ
    let n = 1;
    let cfg = SamplerConfig::new(n, 2).with_samples(40);
    let f = parse("psi", n).unwrap();
    let psi = parse("exp(i*x1)", n).unwrap();
    assert!(is_zero(&simplify(&equation_operator(&f, &psi, n)), &cfg, 1e-10).unwrap().zero);
    let tr = EquivTransform::pure(n, 1.3, C::new(0.7, 0.2), C::new(0.5, 0.0));
    let g = apply_to_f(&tr, &f);
    let image = transform_function(&tr, &psi);
    assert!(is_zero(&simplify(&equation_operator(&g, &image, n)), &cfg, 1e-10).unwrap().zero);
}
