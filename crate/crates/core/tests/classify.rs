use nls_sym::classify::{casebook, classify, instances, subclass_classify, ClassifyOptions, Group, KERNEL_ONLY};
use nls_sym::symexpr::parse;
use nls_sym::Error;

fn opts() -> ClassifyOptions {
    ClassifyOptions { samples: 60, ..ClassifyOptions::default() }
}

#[test]
fn table_rows_classify_to_themselves() {
    for n in 1..=2 {
        for rec in casebook().iter().filter(|r| r.group != Group::Subclass) {
            let (_, inst) = instances(rec, n, 1, 7).unwrap().pop().unwrap();
            let r = classify(&inst.f, n, &opts()).unwrap_or_else(|e| panic!("{} n={n}: {e}", rec.id));
            assert_eq!(r.case_label(), rec.id, "n={n} F={}", inst.f);
            assert!(r.verification.iter().all(|v| v.passed()));
        }
    }
}

#[test]
fn classification_examples() {
    let run = |text: &str, n: usize| classify(&parse(text, n).unwrap(), n, &opts()).unwrap();
    assert_eq!(run("abs(psi)^2*psi", 2).case_label(), "T2.8");
    assert_eq!(run("abs(psi)^2*psi", 3).case_label(), "T2.7");
    assert_eq!(run("0", 1).case_label(), "T2.1");
    assert_eq!(run("(2+i)*exp(re(psi) + 3)", 1).case_label(), "T2.5");
    assert_eq!(run("abs(psi)^2*psi + exp(re(psi))", 1).case_label(), KERNEL_ONLY);
}

#[test]
fn prolongation_oracle_in_classify() {
    let o = ClassifyOptions { prolongation: true, ..opts() };
    let r = classify(&parse("-(1+2*i)*ln(abs(psi))*psi", 1).unwrap(), 1, &o).unwrap();
    assert_eq!(r.case_label(), "T2.11");
    assert!(r.verification.iter().all(|v| v.prolongation.as_ref().is_some_and(|p| p.zero)));
}

#[test]
fn subclass_theorem_rows() {
    let r = subclass_classify(&parse("abs(psi)^2", 2).unwrap(), 2, &opts()).unwrap();
    assert_eq!((r.case_label(), r.row.as_deref()), ("Thm.2", Some("T2.8")));
    let r = subclass_classify(&parse("-3*ln(rho)", 1).unwrap(), 1, &opts()).unwrap();
    assert_eq!((r.case_label(), r.row.as_deref()), ("Thm.4", Some("T2.12")));
    assert!(matches!(subclass_classify(&parse("re(psi)", 1).unwrap(), 1, &opts()), Err(Error::Invalid(_))));
}
