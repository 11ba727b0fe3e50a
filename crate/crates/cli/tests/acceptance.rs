//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::time::Instant;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nls_sym::classify::{
    case, casebook, casebook_selftest, check_instance, classify, instances, lemma1_canonicalize, lemma2_check,
    matrix_rank, normalize, satisfied_classifying_eqs, CaseInstance, ClassifyOptions, ClassifyingEq, Group, Params,
    SelfTestOptions, SUBCLASS_ROWS,
};
use nls_sym::equivalence::{apply_to_f, EquivTransform};
use nls_sym::invariance::{classifying_expr, oracle_discrepancy, verify_symmetry_with, VerifyOptions};
use nls_sym::liefield::{bracket_closure, parse_generator, span_contains, SpanMode, VectorField};
use nls_sym::symexpr::{eval_numeric, is_zero, parse, Expr, ParseOptions, SamplerConfig};
use nls_sym_cli::{flow_demo, FlowDemoConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 2024;

fn sampler(n: usize, samples: usize) -> SamplerConfig {
    SamplerConfig::new(n, SEED).with_samples(samples)
}

fn ops(text: &str, n: usize) -> Vec<VectorField> {
    parse_generator(text, n, &ParseOptions::new(n)).expect("generator text")
}

fn table_instances(n: usize, draws: usize) -> Vec<CaseInstance> {
    casebook()
        .iter()
        .filter(|r| r.group != Group::Subclass)
        .flat_map(|r| instances(r, n, draws, SEED).expect("instances").into_iter().map(|(_, i)| i))
        .collect()
}

/// Largest |a − b| / (1 + |a|) over sample points where both evaluate.
fn numeric_gap(a: &Expr, b: &Expr, cfg: &SamplerConfig) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..cfg.samples {
        let p = cfg.point(k, 0);
        if let (Ok(x), Ok(y)) = (eval_numeric(a, &p), eval_numeric(b, &p)) {
            worst = worst.max((x - y).norm() / (1.0 + x.norm()));
        }
    }
    worst
}

fn random_c<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> C {
    C::from_polar(rng.gen_range(lo..hi), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn random_pure<R: Rng>(rng: &mut R, n: usize) -> EquivTransform {
    let delta = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let alpha = random_c(rng, 0.5, 2.0);
    let beta = if rng.gen_bool(0.5) { random_c(rng, 0.1, 1.0) } else { C::new(0.0, 0.0) };
    EquivTransform::pure(n, delta, alpha, beta)
}

// 1. every listed generator of every row verifies at 200 points, n = 1, 2, 3
fn casebook_verification() -> Outcome {
    let opts = SelfTestOptions { prolongation: true, ..SelfTestOptions::default() };
    let mut report = casebook_selftest(&opts).map_err(|e| e.to_string())?;
    // θ-witnesses for each sign of δ₂, independent of the random draws
    let rec = case("T1.6").map_err(|e| e.to_string())?;
    for n in 1..=3 {
        for d2 in ["-3/4", "0", "5/4"] {
            let mut p = Params::new();
            p.insert("delta1".into(), parse("1/2", n).unwrap());
            p.insert("delta2".into(), parse(d2, n).unwrap());
            for w in 0..rec.f_witness_texts().len() {
                let inst = rec.instantiate(n, &p, w).map_err(|e| e.to_string())?;
                report.checks.extend(check_instance(&inst, 99, &opts));
            }
        }
    }
    let fails = report.failures();
    if fails.is_empty() {
        Ok(format!("{} generator checks", report.checks.len()))
    } else {
        let f = fails[0];
        Err(format!("{} failures, first {} n={} {} on {}", fails.len(), f.case, f.n, f.generator, f.f))
    }
}

// 2. broken (F, Q) pairs give a nonzero residual at the witness
fn negative_controls() -> Outcome {
    let pairs: [(usize, &str, &str); 12] = [
        (1, "abs(psi)*psi", "Pi"),
        (2, "abs(psi)^3*psi", "Pi"),
        (1, "(1+i)*exp(re(psi))", "M"),
        (1, "abs(psi)^2*exp(phi)*psi", "G_1"),
        (1, "abs(psi)^2*psi", "D"),
        (2, "abs(psi)^2*psi", "I"),
        (1, "abs(psi)^2*psi", "E"),
        (1, "abs(psi)^2*psi", "I - 3*D"),
        (1, "(abs(psi) + phi)*psi", "G_1"),
        (1, "(abs(psi) + phi)*psi", "exp(2*t)*M"),
        (1, "exp(re(psi))", "i*x1^2*E"),
        (1, "abs(re(psi))^(3/2)", "M"),
    ];
    let mut weakest = f64::INFINITY;
    for (n, f, q) in pairs {
        let f = parse(f, n).unwrap();
        let q = &ops(q, n)[0];
        let v = is_zero(&classifying_expr(&f, q), &sampler(n, 200), 1e-9).map_err(|e| e.to_string())?;
        let w = v.witness.as_ref().ok_or_else(|| format!("{} on {f}: no witness", q.label()))?;
        let r = C::new(w.value.0, w.value.1).norm();
        if v.zero || r <= 1e-3 {
            return Err(format!("{} on {f}: zero={} |r|={r:.2e}", q.label(), v.zero));
        }
        weakest = weakest.min(r);
    }
    Ok(format!("{} pairs, smallest witness |r| = {weakest:.3e}", pairs.len()))
}

// 3. classifying residual and full prolongation agree on jet samples
fn oracle_equivalence() -> Outcome {
    let mut pairs = 0;
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let cfg = sampler(n, 100);
        for inst in table_instances(n, 1) {
            for q in inst.all_generators() {
                let d = oracle_discrepancy(&inst.f, &q, &cfg).map_err(|e| format!("{} {}: {e}", inst.id, q.label()))?;
                if d > 1e-8 {
                    return Err(format!("{} n={n} {}: discrepancy {d:.2e}", inst.id, q.label()));
                }
                worst = worst.max(d);
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} pairs, max discrepancy {worst:.2e}"))
}

// 4. generic nonlinearities keep exactly the kernel
fn kernel_proposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let vopts = VerifyOptions { prolongation: false, prolongation_samples: 0 };
    for trial in 0..20 {
        let n = 1 + trial % 3;
        let c: Vec<C> = (0..3).map(|_| random_c(&mut rng, 0.5, 2.0)).collect();
        let p = rng.gen_range(1.0..3.0);
        let text = format!(
            "({}+{}*i)*abs(psi)^{p:.3}*psi + ({}+{}*i)*re(psi)^3 + ({}+{}*i)*exp(im(psi))",
            c[0].re, c[0].im, c[1].re, c[1].im, c[2].re, c[2].im
        );
        let f = parse(&text, n).map_err(|e| e.to_string())?;
        let cfg = sampler(n, 200);
        let kernel: Vec<VectorField> = ["Pt", "P_a", "J_ab"].iter().flat_map(|o| ops(o, n)).collect();
        let probes: Vec<VectorField> = ["I", "M", "D", "G_a", "Pi"].iter().flat_map(|o| ops(o, n)).collect();
        if kernel.len() != 1 + n + n * (n - 1) / 2 {
            return Err(format!("kernel size {} for n={n}", kernel.len()));
        }
        for q in &kernel {
            if !verify_symmetry_with(&f, q, &cfg, 1e-9, vopts).passed() {
                return Err(format!("{} fails on {text}", q.label()));
            }
        }
        for q in &probes {
            if verify_symmetry_with(&f, q, &cfg, 1e-9, vopts).passed() {
                return Err(format!("{} passes on {text}", q.label()));
            }
        }
    }
    Ok("20 nonlinearities, n = 1..3".into())
}

// 5. brackets close, modulo the solution or θ ideal where infinite
fn bracket_closure_check() -> Outcome {
    let mut brackets = 0;
    for n in 1..=3 {
        let cfg = sampler(n, 60);
        for inst in table_instances(n, 1) {
            let checks =
                bracket_closure(&inst.all_generators(), &inst.span_mode(), &cfg, 1e-9).map_err(|e| e.to_string())?;
            if let Some(c) = checks.iter().find(|c| !c.span.contained) {
                return Err(format!("{} n={n}: [{}, {}] remainder {}", inst.id, c.left, c.right, c.span.remainder));
            }
            brackets += checks.len();
        }
    }
    Ok(format!("{brackets} brackets"))
}

/// Every field of `a` lies in the span of `b`.
fn spans_within(a: &[VectorField], b: &[VectorField], mode: &SpanMode, cfg: &SamplerConfig) -> Result<(), String> {
    for q in a {
        let r = span_contains(b, q, mode, cfg, 1e-9).map_err(|e| e.to_string())?;
        if !r.contained {
            return Err(format!("{} not in span", q.label()));
        }
    }
    Ok(())
}

// 6. the subclass theorem reproduces its table rows
fn theorem_table() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    for n in 1..=3 {
        let cfg = sampler(n, 60);
        for (thm, row) in SUBCLASS_ROWS {
            let t = case(thm).map_err(|e| e.to_string())?;
            let r = case(row).map_err(|e| e.to_string())?;
            let p = t.draw(n, &mut rng).map_err(|e| e.to_string())?;
            let mut q = p.clone();
            for d in ["delta2", "delta3", "delta4"] {
                q.entry(d.into()).or_insert_with(Expr::zero);
            }
            let q = r.resolve(n, &q).map_err(|e| e.to_string())?;
            let ti = t.instantiate(n, &p, 0).map_err(|e| e.to_string())?;
            let ri = r.instantiate(n, &q, 0).map_err(|e| e.to_string())?;
            let gap = numeric_gap(&ti.f, &ri.f, &cfg);
            if gap > 1e-12 {
                return Err(format!("{thm} vs {row}: F differs by {gap:.2e}"));
            }
            let galilei: Vec<VectorField> = ["G_a", "M"].iter().flat_map(|o| ops(o, n)).collect();
            let mut lhs = ti.all_generators();
            lhs.extend(galilei);
            let rhs = ri.all_generators();
            let mode = ri.span_mode();
            spans_within(&lhs, &rhs, &mode, &cfg).map_err(|e| format!("{thm} -> {row} n={n}: {e}"))?;
            spans_within(&rhs, &lhs, &mode, &cfg).map_err(|e| format!("{row} -> {thm} n={n}: {e}"))?;
        }
    }
    Ok("5 cases, n = 1..3, spans equal both ways".into())
}

// 7. k ≤ 2 for nonlinear rows, linearity detected, ranks stable
fn lemma_two() -> Outcome {
    let mut count = 0;
    for n in 1..=2 {
        for inst in table_instances(n, 1) {
            if matches!(inst.id.as_str(), "T2.1" | "T2.2") {
                continue;
            }
            let mut ks = Vec::new();
            for s in 0..5 {
                let cfg = SamplerConfig::new(n, SEED + 100 * s).with_samples(60);
                ks.push(satisfied_classifying_eqs(&inst.f, &cfg).map_err(|e| e.to_string())?.k);
            }
            if ks.iter().any(|&k| k != ks[0] || k > 2) {
                return Err(format!("{} n={n}: k over reseedings {ks:?}", inst.id));
            }
            count += 1;
        }
    }
    let v = lemma2_check(&parse("(3/4)*psi + cpsi", 2).unwrap(), &sampler(2, 60)).map_err(|e| e.to_string())?;
    if !(v.linear && v.holds) {
        return Err(format!("gamma*psi + cpsi: {v:?}"));
    }
    Ok(format!("{count} nonlinear instances stable with k <= 2; linear F has k = {}", v.k))
}

fn canonical_ab(shape: u8, p: &ClassifyingEq, q: &ClassifyingEq) -> [(C, C); 4] {
    let (z, one, i) = (C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 1.0));
    let want = match shape {
        1 => [one, z, z, i],
        2 => [one, z, i, z],
        _ => [z, one, z, i],
    };
    [(p.a, want[0]), (p.b, want[1]), (q.a, want[2]), (q.b, want[3])]
}

// 8. random rank-2 pairs reduce to one canonical shape, replay is exact
fn lemma_one() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let sources = [
        "(0.6-0.8*i)*abs(psi)^1.3*psi",
        "(1+2*i)*abs(psi)^0.7*exp(1.5*phi)*psi",
        "(-(0.4+1.1*i)*ln(abs(psi)) + (0.3-0.9*i)*phi)*psi",
        "abs(re(psi))^1.7",
        "(2-i)*ln(abs(re(psi)))",
        "(0.5+i)*exp(re(psi))",
    ];
    let cfg = sampler(1, 60);
    let bases: Vec<Vec<ClassifyingEq>> = sources
        .iter()
        .map(|s| satisfied_classifying_eqs(&parse(s, 1).unwrap(), &cfg).map(|b| b.basis))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut shapes = [0usize; 3];
    let mut trial = 0;
    while shapes.iter().sum::<usize>() < 50 {
        trial += 1;
        let base = &bases[trial % bases.len()];
        let delta = rng.gen_range(0.5..2.0);
        let (alpha, beta) = (random_c(&mut rng, 0.5, 2.0), random_c(&mut rng, 0.0, 1.0));
        let m: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        if (m[0] * m[3] - m[1] * m[2]).abs() < 0.1 {
            continue;
        }
        let e1 = base[0].scale(m[0]).add(&base[1].scale(m[1])).transform(delta, alpha, beta);
        let e2 = base[0].scale(m[2]).add(&base[1].scale(m[3])).transform(delta, alpha, beta);
        if matrix_rank(&e1, &e2) != 2 {
            return Err(format!("trial {trial}: rank {}", matrix_rank(&e1, &e2)));
        }
        let form = lemma1_canonicalize(&e1, &e2).map_err(|e| format!("trial {trial} ({}): {e}", sources[trial % 6]))?;
        let (p, q) = form.replay(&e1, &e2);
        let gap = p.max_diff(&form.pair.0).max(q.max_diff(&form.pair.1));
        if gap > 1e-10 {
            return Err(format!("trial {trial}: replay differs by {gap:.2e}"));
        }
        let off = canonical_ab(form.shape, &form.pair.0, &form.pair.1).iter().map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        if off > 1e-10 {
            return Err(format!("trial {trial}: shape {} pattern off by {off:.2e}", form.shape));
        }
        shapes[form.shape as usize - 1] += 1;
    }
    Ok(format!("shape counts {shapes:?}"))
}

// 9. transforms invert, normalization is idempotent, classification invariant
fn equivalence_group() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let cfg = sampler(2, 60);
    let f = parse("(1+i)*abs(psi)^(3/2)*psi + exp(re(psi)) + x1*t", 2).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mut tr = random_pure(&mut rng, 2);
        if rng.gen_bool(0.5) {
            tr = tr.then(&EquivTransform::phase_gauge(2, random_c(&mut rng, 0.2, 1.0)));
        }
        if rng.gen_bool(0.5) {
            tr = tr.then(&EquivTransform::amp_gauge(2, rng.gen_range(-1.0..1.0)));
        }
        let back = apply_to_f(&tr.inverse(), &apply_to_f(&tr, &f));
        worst = worst.max(numeric_gap(&back, &f, &cfg));
    }
    if worst > 1e-10 {
        return Err(format!("round trip differs by {worst:.2e}"));
    }
    let rows = ["T1.1", "T1.3", "T1.4", "T1.5", "T2.3", "T2.4", "T2.5", "T2.6", "T2.7", "T2.8", "T2.11", "T2.13"];
    let opts = ClassifyOptions { samples: 60, ..ClassifyOptions::default() };
    let n = 1;
    for id in rows {
        let rec = case(id).map_err(|e| e.to_string())?;
        let p = rec.draw(n, &mut rng).map_err(|e| e.to_string())?;
        // the second f-witness keeps table-1 rows generic
        let w = rec.f_witness_texts().len() - 1;
        let f = rec.nonlinearity(n, &p, w).map_err(|e| e.to_string())?;
        let label = classify(&f, n, &opts).map_err(|e| format!("{id}: {e}"))?.case_label().to_string();
        let once = normalize(&f, n).map_err(|e| format!("{id}: {e}"))?;
        let twice = normalize(&once.canonical, n).map_err(|e| format!("{id} (again): {e}"))?;
        let gap = numeric_gap(&once.canonical, &twice.canonical, &sampler(n, 60));
        if twice.case_id != once.case_id || gap > 1e-9 {
            return Err(format!("{id}: normalization not idempotent ({} vs {}, {gap:.2e})", once.case_id, twice.case_id));
        }
        for k in 0..20 {
            let g = apply_to_f(&random_pure(&mut rng, n), &f);
            let r = classify(&g, n, &opts).map_err(|e| format!("{id} transform {k}: {e}"))?;
            if r.case_label() != label {
                return Err(format!("{id} transform {k}: classified as {}, untransformed {label}", r.case_label()));
            }
        }
    }
    Ok(format!("round trip {worst:.1e}; {} rows x 20 transforms", rows.len()))
}

// 10. finite boost of an exact solution
fn flow() -> Outcome {
    let r = flow_demo(&FlowDemoConfig::default()).map_err(|e| e.to_string())?;
    let (boosted, corrupt) = (r.rows[1].max_residual, r.rows[2].max_residual);
    let detail = format!("boosted {boosted:.2e}, eps=0 deviation {:.1e}, corrupted {corrupt:.2e}", r.identity_deviation);
    if r.generator_matches && r.symbolic_solution && boosted < 1e-4 && r.identity_deviation == 0.0 && corrupt > 1e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("casebook verification", casebook_verification),
        ("negative controls", negative_controls),
        ("oracle equivalence", oracle_equivalence),
        ("kernel proposition", kernel_proposition),
        ("bracket closure", bracket_closure_check),
        ("theorem and table agree", theorem_table),
        ("lemma 2 rank bound", lemma_two),
        ("lemma 1 canonical shapes", lemma_one),
        ("equivalence group", equivalence_group),
        ("flow demo", flow),
    ];
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
                    (out, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (i, ((name, _), (out, secs))) in criteria.iter().zip(results).enumerate() {
        match out {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} ({secs:.1}s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
