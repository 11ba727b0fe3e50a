use nls_sym::liefield::{
    bracket_closure, check_defining_equations, fields_equal, lie_bracket, named_generator, parse_generator, GenParams,
    SpanMode, VectorField,
};
use nls_sym::symexpr::{ParseOptions, SamplerConfig};

fn ops(text: &str, n: usize) -> Vec<VectorField> {
    parse_generator(text, n, &ParseOptions::new(n)).unwrap()
}

fn one(text: &str, n: usize) -> VectorField {
    ops(text, n).remove(0)
}

fn cfg(n: usize) -> SamplerConfig {
    SamplerConfig::new(n, 11).with_samples(40)
}

#[test]
fn schrodinger_algebra_commutators() {
    let n = 2;
    let c = cfg(n);
    // D = t∂_t + ½x·∂_x, so [Pt, D] = Pt and [Pt, Π] = 2D − I
    let pt_d = lie_bracket(&one("Pt", n), &one("D", n));
    assert!(fields_equal(&pt_d, &one("Pt", n), &c, 1e-9).unwrap());
    let pt_pi = lie_bracket(&one("Pt", n), &one("Pi", n));
    assert!(fields_equal(&pt_pi, &one("2*D - I", n), &c, 1e-9).unwrap());
    let p_g = lie_bracket(&one("P_1", n), &one("G_1", n));
    assert!(fields_equal(&p_g, &one("1/2*M", n), &c, 1e-9).unwrap());
    let g12 = lie_bracket(&one("G_1", n), &one("G_2", n));
    assert!(g12.is_zero(&c, 1e-9).unwrap());
}

#[test]
fn jacobi_identity() {
    let n = 2;
    let a = one("Pi", n);
    let b = one("G_1", n);
    let d = one("P_2 + J_12", n);
    let cyc = lie_bracket(&a, &lie_bracket(&b, &d))
        .add(&lie_bracket(&b, &lie_bracket(&d, &a)))
        .add(&lie_bracket(&d, &lie_bracket(&a, &b)));
    assert!(cyc.is_zero(&cfg(n), 1e-9).unwrap());
}

#[test]
fn catalog_satisfies_defining_system() {
    for n in 1..=3 {
        for text in ["Pt", "P_a", "J_ab", "I", "M", "D", "G_a", "Pi"] {
            for q in ops(text, n) {
                assert!(check_defining_equations(&q, &cfg(n), 1e-9).unwrap().satisfied(), "{} n={n}", q.label());
            }
        }
    }
}

#[test]
fn defining_system_rejects_wrong_weight() {
    let q = one("t^2*Pt + t*x1*P_1", 1);
    assert!(!check_defining_equations(&q, &cfg(1), 1e-9).unwrap().satisfied());
}

#[test]
fn schrodinger_algebra_closes() {
    let n = 2;
    let mut gens: Vec<VectorField> = Vec::new();
    for text in ["Pt", "P_a", "J_ab", "G_a", "M", "I", "D", "Pi"] {
        gens.extend(ops(text, n));
    }
    let checks = bracket_closure(&gens, &SpanMode::Exact, &cfg(n), 1e-9).unwrap();
    assert!(checks.iter().all(|c| c.span.contained));
    let without_pi = &gens[..gens.len() - 1];
    let open = bracket_closure(&[without_pi, &[one("t^2*Pt", n)]].concat(), &SpanMode::Exact, &cfg(n), 1e-9).unwrap();
    assert!(open.iter().any(|c| !c.span.contained));
}

#[test]
fn named_and_parsed_agree() {
    let n = 3;
    let g2 = named_generator("Ga", &GenParams::new().index("a", 2), n).unwrap();
    assert!(fields_equal(&g2, &one("G_2", n), &cfg(n), 1e-12).unwrap());
}
