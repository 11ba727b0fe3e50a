//! Command implementations behind the `nls-sym` binary.
//!
//! Every command takes a [`RunConfig`] and returns an [`Outcome`] holding the
//! exit code, the report for stdout and diagnostics for stderr. Nothing here
//! touches the process environment, so reports are reproducible from the
//! configuration alone.

pub mod flow;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use nls_sym::classify::{
    casebook_selftest, classify, subclass_classify, ClassificationResult, ClassifyOptions, SelfTestOptions,
};
use nls_sym::invariance::{verify_symmetry_with, Verdict, VerificationReport, VerifyOptions};
use nls_sym::liefield::{bracket_closure, lie_bracket, parse_generator, SpanMode, VectorField};
use nls_sym::symexpr::{parse_with, simplify, substitute_function, Expr, Lambda, ParseOptions, SamplerConfig};
use nls_sym::{Error, Result};

pub use flow::{flow_demo, FlowDemoConfig, FlowDemoReport};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_KERNEL_ONLY: i32 = 2;
pub const EXIT_UNVERIFIED: i32 = 3;
pub const EXIT_FAIL: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Classify,
    Verify,
    Bracket,
    CasebookSelftest,
    FlowDemo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Verify => "verify",
            Command::Bracket => "bracket",
            Command::CasebookSelftest => "casebook-selftest",
            Command::FlowDemo => "flow-demo",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    /// Nonlinearity text.
    pub f: String,
    /// `name = expression` bindings for symbols in F and in generators.
    pub params: Vec<(String, String)>,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub format: Format,
    /// Arbitrary-function witnesses: `f` in `w`, `theta` in x1..xn, `eta0` in t, x1..xn.
    pub witnesses: Vec<(String, String)>,
    /// Generator texts for verify and bracket.
    pub generators: Vec<String>,
    /// Treat F as f(ρ)ψ and use the subclass classification.
    pub subclass: bool,
    /// Run the prolongation oracle as well.
    pub prolongation: bool,
    /// Case ids for casebook-selftest (all when empty).
    pub cases: Vec<String>,
    pub flow: FlowDemoConfig,
}

impl RunConfig {
    pub fn new(command: Command) -> RunConfig {
        RunConfig {
            command,
            n: 1,
            f: String::new(),
            params: Vec::new(),
            samples: 200,
            tol: 1e-9,
            seed: 2024,
            format: Format::Json,
            witnesses: Vec::new(),
            generators: Vec::new(),
            subclass: false,
            prolongation: false,
            cases: Vec::new(),
            flow: FlowDemoConfig::default(),
        }
    }

    fn sampler(&self) -> SamplerConfig {
        SamplerConfig::new(self.n, self.seed).with_samples(self.samples)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Splits `name=value`.
pub fn parse_assignment(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected name=value, got `{s}`")),
    }
}

pub fn run(cfg: &RunConfig) -> Outcome {
    let mut diag = Vec::new();
    let result = match cfg.command {
        Command::Classify => cmd_classify(cfg, &mut diag),
        Command::Verify => cmd_verify(cfg, &mut diag),
        Command::Bracket => cmd_bracket(cfg, &mut diag),
        Command::CasebookSelftest => cmd_selftest(cfg),
        Command::FlowDemo => cmd_flow_demo(cfg),
    };
    match result {
        Ok((code, body, text)) => {
            let stdout = match cfg.format {
                Format::Json => render_json(cfg, body),
                Format::Text => text,
            };
            Outcome { code, stdout, stderr: join_lines(&diag) }
        }
        Err(e) => {
            let code = if matches!(e, Error::UnverifiedMatch { .. }) { EXIT_UNVERIFIED } else { EXIT_ERROR };
            diag.push(format!("error: {e}"));
            let stdout = match cfg.format {
                Format::Json => render_json(cfg, json!({ "error": error_json(&e) })),
                Format::Text => String::new(),
            };
            Outcome { code, stdout, stderr: join_lines(&diag) }
        }
    }
}

fn join_lines(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

fn render_json(cfg: &RunConfig, body: Value) -> String {
    let mut root = serde_json::Map::new();
    root.insert("schema_version".into(), json!(SCHEMA_VERSION));
    root.insert("command".into(), json!(cfg.command.name()));
    root.insert("seed".into(), json!(cfg.seed));
    if let Value::Object(m) = body {
        root.extend(m);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("report serializes");
    s.push('\n');
    s
}

fn error_json(e: &Error) -> Value {
    let offset = match e {
        Error::Syntax { offset, .. } | Error::UnknownSymbol { offset, .. } => Some(*offset),
        _ => None,
    };
    json!({ "message": e.to_string(), "position": offset })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

type CmdResult = Result<(i32, Value, String)>;

// ---- input handling --------------------------------------------------------

fn options(cfg: &RunConfig) -> Result<ParseOptions> {
    let mut opts = ParseOptions::new(cfg.n);
    for (k, v) in &cfg.params {
        let value = parse_with(v, &opts)?;
        opts = opts.with_constant(k, value);
    }
    Ok(opts)
}

/// Parses `text` and binds symbols left unassigned to 1 (reported on stderr).
fn parse_open(text: &str, opts: &mut ParseOptions, diag: &mut Vec<String>) -> Result<Expr> {
    let e = parse_with(text, opts)?;
    let free = e.params();
    if free.is_empty() {
        return Ok(e);
    }
    for name in &free {
        diag.push(format!("note: `{name}` is unassigned, using {name}=1"));
        *opts = opts.clone().with_constant(name, Expr::one());
    }
    parse_with(text, opts)
}

/// Operator text with parameter values written in, e.g. `I - 2*D`.
fn render_op(label: &str, params: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        match params.get(word.as_str()) {
            Some(v) if v.chars().all(|c| c.is_ascii_alphanumeric() || c == '.') => out.push_str(v),
            Some(v) => {
                out.push('(');
                out.push_str(v);
                out.push(')');
            }
            None => out.push_str(word),
        }
        word.clear();
    };
    for c in label.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

fn witness_lambda(name: &str, text: &str, n: usize, opts: &ParseOptions) -> Result<Lambda> {
    let mut o = opts.clone();
    let arity = match name {
        "f" => {
            o = o.with_constant("w", Lambda::arg(0));
            1
        }
        "theta" => {
            for a in 1..=n {
                o = o.with_constant(&format!("x{a}"), Lambda::arg(a - 1));
            }
            n
        }
        "eta0" => {
            o = o.with_constant("t", Lambda::arg(0));
            for a in 1..=n {
                o = o.with_constant(&format!("x{a}"), Lambda::arg(a));
            }
            n + 1
        }
        _ => return Err(Error::Invalid(format!("unknown witness slot `{name}` (use f, theta or eta0)"))),
    };
    Ok(Lambda::new(arity, parse_with(text, &o)?))
}

fn apply_witnesses(e: &Expr, cfg: &RunConfig, opts: &ParseOptions) -> Result<Expr> {
    let mut out = e.clone();
    for (name, text) in &cfg.witnesses {
        out = substitute_function(&out, name, &witness_lambda(name, text, cfg.n, opts)?)?;
    }
    Ok(simplify(&out))
}

fn nonlinearity(cfg: &RunConfig, diag: &mut Vec<String>) -> Result<(Expr, ParseOptions)> {
    if cfg.f.trim().is_empty() {
        return Err(Error::Invalid("--F is required".into()));
    }
    let mut opts = options(cfg)?;
    let f = parse_open(&cfg.f, &mut opts, diag)?;
    Ok((apply_witnesses(&f, cfg, &opts)?, opts))
}

/// A generator in operator notation, or raw components
/// `xi0=...; x1=...; eta=...` (missing components are zero).
fn generator(text: &str, cfg: &RunConfig, opts: &ParseOptions) -> Result<Vec<VectorField>> {
    let fields = if text.contains("eta=") || text.contains("xi0=") {
        let mut q = VectorField::zero(cfg.n);
        for part in text.split(';').filter(|p| !p.trim().is_empty()) {
            let (k, v) = parse_assignment(part).map_err(Error::Invalid)?;
            let e = parse_with(&v, opts)?;
            match k.as_str() {
                "xi0" => q.xi0 = e,
                "eta" => q.eta = e,
                _ => {
                    let a: usize = k
                        .strip_prefix('x')
                        .and_then(|s| s.parse().ok())
                        .filter(|a| (1..=cfg.n).contains(a))
                        .ok_or_else(|| Error::Invalid(format!("unknown component `{k}`")))?;
                    q.xi[a - 1] = e;
                }
            }
        }
        vec![q.labeled(text.trim())]
    } else {
        parse_generator(text, cfg.n, opts)?
    };
    fields
        .into_iter()
        .map(|q| {
            let w = |e: &Expr| apply_witnesses(e, cfg, opts);
            let xi = q.xi.iter().map(w).collect::<Result<Vec<_>>>()?;
            Ok(VectorField::new(cfg.n, w(&q.xi0)?, xi, w(&q.eta)?).labeled(q.label()))
        })
        .collect()
}

fn generators(cfg: &RunConfig, opts: &ParseOptions) -> Result<Vec<VectorField>> {
    let mut out = Vec::new();
    for g in &cfg.generators {
        out.extend(generator(g, cfg, opts)?);
    }
    Ok(out)
}

// ---- commands --------------------------------------------------------------

fn classify_options(cfg: &RunConfig) -> ClassifyOptions {
    ClassifyOptions { samples: cfg.samples, tol: cfg.tol, seed: cfg.seed, prolongation: cfg.prolongation }
}

fn labels(fs: &[VectorField]) -> Vec<String> {
    fs.iter().map(|q| q.label()).collect()
}

fn ops(fs: &[VectorField], params: &BTreeMap<String, String>) -> Vec<String> {
    fs.iter().map(|q| render_op(&q.label(), params)).collect()
}

fn remark(r: &ClassificationResult) -> Option<&'static str> {
    match r.case_id.as_deref() {
        Some("T2.1" | "T2.2" | "Thm.5") => {
            Some("infinite-dimensional: eta0(t,x)E is a symmetry for every solution eta0 of the linear equation")
        }
        Some("T1.6") => Some("infinite-dimensional: one generator for every solution theta of Laplace(theta) = delta2*theta"),
        _ => None,
    }
}

pub fn cmd_classify_result(cfg: &RunConfig, diag: &mut Vec<String>) -> Result<ClassificationResult> {
    let (f, _) = nonlinearity(cfg, diag)?;
    let opts = classify_options(cfg);
    if cfg.subclass {
        subclass_classify(&f, cfg.n, &opts)
    } else {
        classify(&f, cfg.n, &opts)
    }
}

fn cmd_classify(cfg: &RunConfig, diag: &mut Vec<String>) -> CmdResult {
    let r = cmd_classify_result(cfg, diag)?;
    for b in &r.boundary {
        diag.push(format!("warning: constraint `{}` is within tolerance of its boundary", b.constraint));
    }
    let code = if r.is_kernel_only() { EXIT_KERNEL_ONLY } else { EXIT_OK };
    let body = json!({
        "n": r.n,
        "input": r.input,
        "case_id": r.case_label(),
        "row": r.row,
        "params": r.params,
        "k": r.k,
        "canonical": r.canonical,
        "kernel_ops": labels(&r.kernel),
        "extension_ops": ops(&r.extension, &r.params),
        "pulled_back_ops": r.pulled_back.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "normalization_chain": to_value(&r.chain),
        "verification": verification_json(&r.verification),
        "boundary": to_value(&r.boundary),
        "remark": remark(&r),
        "notes": r.notes,
    });
    let mut text = String::new();
    let _ = writeln!(text, "case: {}", r.case_label());
    if let Some(row) = &r.row {
        let _ = writeln!(text, "row: {row}");
    }
    if !r.params.is_empty() {
        let ps: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(text, "params: {}", ps.join(", "));
    }
    let _ = writeln!(text, "canonical F: {}", r.canonical);
    let _ = writeln!(text, "chain: {}", serde_json::to_string(&r.chain).expect("chain serializes"));
    let _ = writeln!(text, "kernel: {}", labels(&r.kernel).join(", "));
    let _ = writeln!(text, "extension: {}", ops(&r.extension, &r.params).join(", "));
    if let Some(m) = remark(&r) {
        let _ = writeln!(text, "remark: {m}");
    }
    for v in &r.verification {
        let _ = writeln!(text, "  {:?} {}  max|r|={:.3e}  samples={}", v.verdict, v.generator, v.max_residual(), v.samples);
    }
    Ok((code, body, text))
}

fn verification_json(rs: &[VerificationReport]) -> Value {
    Value::Array(
        rs.iter()
            .map(|v| {
                json!({
                    "generator": v.generator,
                    "verdict": v.verdict,
                    "max_residual": v.max_residual(),
                    "samples": v.samples,
                    "tol": v.tol,
                    "classifying": v.classifying,
                    "prolongation": v.prolongation,
                    "diagnostics": v.diagnostics,
                })
            })
            .collect(),
    )
}

pub fn cmd_verify_reports(cfg: &RunConfig, diag: &mut Vec<String>) -> Result<Vec<VerificationReport>> {
    let (f, opts) = nonlinearity(cfg, diag)?;
    let gens = generators(cfg, &opts)?;
    if gens.is_empty() {
        return Err(Error::Invalid("verify needs at least one --Q".into()));
    }
    let vopts = VerifyOptions { prolongation: cfg.prolongation, prolongation_samples: 100 };
    Ok(gens.iter().map(|q| verify_symmetry_with(&f, q, &cfg.sampler(), cfg.tol, vopts)).collect())
}

fn cmd_verify(cfg: &RunConfig, diag: &mut Vec<String>) -> CmdResult {
    let reports = cmd_verify_reports(cfg, diag)?;
    let all = reports.iter().all(|r| r.passed());
    let mut text = String::new();
    for r in &reports {
        let _ = writeln!(text, "{:?} {}  max|r|={:.3e}  samples={}", r.verdict, r.generator, r.max_residual(), r.samples);
        if let Some(w) = r.classifying.as_ref().and_then(|c| c.witness.as_ref()) {
            let _ = writeln!(text, "  witness: {}", serde_json::to_string(w).expect("witness serializes"));
        }
        for d in &r.diagnostics {
            let _ = writeln!(text, "  {d}");
        }
    }
    let verdict = if all { Verdict::Pass } else { Verdict::Fail };
    let body = json!({ "n": cfg.n, "F": cfg.f, "verdict": verdict, "reports": to_value(&reports) });
    Ok((if all { EXIT_OK } else { EXIT_FAIL }, body, text))
}

/// With two or more --Q: brackets of the given fields against their span.
/// Otherwise: closure of the algebra found by classifying F.
fn cmd_bracket(cfg: &RunConfig, diag: &mut Vec<String>) -> CmdResult {
    let scfg = cfg.sampler();
    let (gens, mode) = if cfg.generators.is_empty() {
        let r = cmd_classify_result(cfg, diag)?;
        let mut g = r.kernel.clone();
        g.extend(r.extension.iter().cloned());
        (g, r.span_mode())
    } else {
        let opts = if cfg.f.trim().is_empty() { options(cfg)? } else { nonlinearity(cfg, diag)?.1 };
        (generators(cfg, &opts)?, SpanMode::Exact)
    };
    if gens.len() < 2 {
        return Err(Error::Invalid("bracket needs at least two generators".into()));
    }
    let checks = bracket_closure(&gens, &mode, &scfg, cfg.tol)?;
    let closed = checks.iter().all(|c| c.span.contained);
    let mut text = String::new();
    let mut rows = Vec::new();
    for c in &checks {
        let i = gens.iter().position(|g| g.label() == c.left).unwrap_or(0);
        let j = gens.iter().position(|g| g.label() == c.right).unwrap_or(0);
        let br = lie_bracket(&gens[i], &gens[j]).simplified();
        let mark = if c.span.contained { "in span" } else { "NOT in span" };
        let _ = writeln!(text, "[{}, {}] = {}  ({mark})", c.left, c.right, br);
        rows.push(json!({ "left": c.left, "right": c.right, "bracket": br.to_string(), "span": to_value(&c.span) }));
    }
    let _ = writeln!(text, "{}", if closed { "closed" } else { "not closed" });
    let body = json!({ "n": cfg.n, "generators": labels(&gens), "closed": closed, "brackets": rows });
    Ok((if closed { EXIT_OK } else { EXIT_FAIL }, body, text))
}

fn cmd_selftest(cfg: &RunConfig) -> CmdResult {
    let opts = SelfTestOptions {
        ns: vec![cfg.n],
        samples: cfg.samples,
        tol: cfg.tol,
        seed: cfg.seed,
        prolongation: cfg.prolongation,
        only: cfg.cases.clone(),
        ..SelfTestOptions::default()
    };
    let report = casebook_selftest(&opts)?;
    let mut text = String::new();
    for c in &report.checks {
        let _ = writeln!(text, "{:?} {} n={} draw={} {}  max|r|={:.3e}", c.verdict, c.case, c.n, c.draw, c.generator, c.max_residual);
    }
    let failed = report.failures().len();
    let _ = writeln!(text, "{} checks, {failed} failed", report.checks.len());
    let body = json!({ "n": cfg.n, "passed": report.passed(), "failed": failed, "checks": to_value(&report.checks) });
    Ok((if report.passed() { EXIT_OK } else { EXIT_FAIL }, body, text))
}

/// Residual threshold for the boosted solution on the grid.
pub const FLOW_TOL: f64 = 1e-4;
/// Minimum residual expected from the corrupted phase.
pub const FLOW_CONTROL: f64 = 1e-2;

fn cmd_flow_demo(cfg: &RunConfig) -> CmdResult {
    let r = flow_demo(&cfg.flow)?;
    let ok = r.generator_matches
        && r.symbolic_solution
        && r.identity_deviation == 0.0
        && r.rows[1].max_residual < FLOW_TOL
        && r.rows[2].max_residual > FLOW_CONTROL;
    let mut text = String::new();
    let _ = writeln!(text, "grid {0}x{0}", r.grid);
    let _ = writeln!(text, "generator matches boost derivative: {}", r.generator_matches);
    let _ = writeln!(text, "boosted field solves the equation symbolically: {}", r.symbolic_solution);
    let _ = writeln!(text, "epsilon=0 deviation: {:.3e}", r.identity_deviation);
    let _ = writeln!(text, "{:<18} {:>8} {:>14}", "field", "epsilon", "max residual");
    for row in &r.rows {
        let _ = writeln!(text, "{:<18} {:>8.3} {:>14.3e}", row.label, row.epsilon, row.max_residual);
    }
    let body = json!({ "report": to_value(&r), "passed": ok });
    Ok((if ok { EXIT_OK } else { EXIT_FAIL }, body, text))
}
