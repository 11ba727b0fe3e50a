use std::process::Command as Proc;

use nls_sym_cli::{run, Command, Format, RunConfig, EXIT_ERROR, EXIT_FAIL, EXIT_KERNEL_ONLY, EXIT_OK, SCHEMA_VERSION};
use serde_json::Value;

fn cfg(command: Command, n: usize, f: &str) -> RunConfig {
    RunConfig { n, f: f.into(), samples: 80, ..RunConfig::new(command) }
}

fn json(out: &str) -> Value {
    serde_json::from_str(out).expect("stdout is json")
}

#[test]
fn critical_cubic_in_two_dimensions() {
    let mut c = cfg(Command::Classify, 2, "sigma*abs(psi)^2*psi");
    c.params.push(("sigma".into(), "1".into()));
    let out = run(&c);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = json(&out.stdout);
    assert_eq!(v["schema_version"], SCHEMA_VERSION);
    assert_eq!(v["case_id"], "T2.8");
    assert!(v["extension_ops"].as_array().unwrap().iter().any(|o| o == "Pi"));
    assert!(v["verification"].as_array().unwrap().iter().all(|r| r["verdict"] == "PASS" && r["samples"] == 80));
}

#[test]
fn cubic_in_three_dimensions() {
    let out = run(&cfg(Command::Classify, 3, "sigma*abs(psi)^2*psi"));
    assert_eq!(out.code, EXIT_OK);
    let v = json(&out.stdout);
    assert_eq!(v["case_id"], "T2.7");
    assert!(v["extension_ops"].as_array().unwrap().iter().any(|o| o == "I - 2*D"));
    assert!(out.stderr.contains("sigma"));
}

#[test]
fn free_equation_is_infinite() {
    let out = run(&cfg(Command::Classify, 1, "0"));
    assert_eq!(out.code, EXIT_OK);
    let v = json(&out.stdout);
    assert_eq!(v["case_id"], "T2.1");
    assert!(v["remark"].as_str().unwrap().contains("infinite-dimensional"));
}

#[test]
fn kernel_only_exit_code() {
    let out = run(&cfg(Command::Classify, 1, "abs(psi)^2*psi + exp(re(psi))"));
    assert_eq!(out.code, EXIT_KERNEL_ONLY);
    assert_eq!(json(&out.stdout)["case_id"], "KERNEL_ONLY");
}

#[test]
fn parse_error_reports_position() {
    let out = run(&cfg(Command::Classify, 1, "abs(psi)^2 * (psi"));
    assert_eq!(out.code, EXIT_ERROR);
    let v = json(&out.stdout);
    assert!(v["error"]["position"].is_u64());
    assert!(out.stderr.contains("byte"));
}

#[test]
fn verify_verdicts() {
    let mut pi = cfg(Command::Verify, 1, "0");
    pi.generators.push("Pi".into());
    assert_eq!(run(&pi).code, EXIT_OK);

    let mut m = cfg(Command::Verify, 1, "exp(re(psi))");
    m.generators.push("M".into());
    let out = run(&m);
    assert_eq!(out.code, EXIT_FAIL);
    let v = json(&out.stdout);
    assert_eq!(v["verdict"], "FAIL");
    assert!(v["reports"][0]["classifying"]["witness"].is_object());

    let mut log = cfg(Command::Verify, 1, "(f(abs(psi)) + delta*phi)*psi");
    log.params.push(("delta".into(), "1".into()));
    log.witnesses.push(("f".into(), "w".into()));
    log.generators.push("exp(delta*t)*M".into());
    log.prolongation = true;
    let out = run(&log);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
}

#[test]
fn verify_raw_components() {
    let mut c = cfg(Command::Verify, 1, "0");
    c.generators.push("xi0=t^2; x1=t*x1; eta=(i/4*x1^2 - t/2)*psi".into());
    assert_eq!(run(&c).code, EXIT_OK);
}

#[test]
fn verify_theta_witness() {
    let mut c = cfg(Command::Verify, 1, "exp(re(psi))");
    c.witnesses.push(("theta".into(), "3*x1 - 1".into()));
    c.generators.push("i*theta(x)*E".into());
    assert_eq!(run(&c).code, EXIT_OK);
    c.witnesses[0].1 = "x1^2".into();
    assert_eq!(run(&c).code, EXIT_FAIL);
}

#[test]
fn bracket_closure_of_classified_algebra() {
    let out = run(&cfg(Command::Bracket, 1, "abs(psi)^4*psi"));
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(json(&out.stdout)["closed"], true);

    let mut open = cfg(Command::Bracket, 1, "");
    open.generators = vec!["Pi".into(), "Pt".into()];
    let out = run(&open);
    assert_eq!(out.code, EXIT_FAIL);
    assert_eq!(json(&out.stdout)["closed"], false);
}

#[test]
fn selftest_single_row() {
    let mut c = cfg(Command::CasebookSelftest, 2, "");
    c.cases = vec!["T1.3".into()];
    let out = run(&c);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(json(&out.stdout)["passed"], true);
}

#[test]
fn flow_demo_text_table() {
    let mut c = cfg(Command::FlowDemo, 1, "");
    c.format = Format::Text;
    c.flow.grid = 128;
    let out = run(&c);
    assert!(out.stdout.contains("corrupted phase"));
}

#[test]
fn reports_are_deterministic() {
    let mut c = cfg(Command::Classify, 1, "abs(psi)^(3/2)*psi*exp(2*phi)");
    c.prolongation = true;
    let a = run(&c);
    let b = run(&c);
    assert_eq!(a, b);
    c.seed = 99;
    assert_eq!(json(&run(&c).stdout)["seed"], 99);
}

#[test]
fn binary_uses_seed_from_environment() {
    let exe = env!("CARGO_BIN_EXE_nls-sym");
    let out = Proc::new(exe)
        .args(["classify", "--n", "1", "--F", "abs(psi)^2*psi", "--samples", "40"])
        .env("NLS_SYM_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(v["seed"], 77);
    assert_eq!(v["case_id"], "T2.7");

    let bad = Proc::new(exe).args(["classify", "--F", "psi +"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8(bad.stderr).unwrap().contains("byte"));
}
