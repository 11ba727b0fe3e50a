use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nls_sym_cli::{parse_assignment, run, Command, FlowDemoConfig, Format, RunConfig};

#[derive(Parser)]
#[command(name = "nls-sym", version, about = "Lie symmetry classification of iψ_t + Δψ + F(ψ, ψ*) = 0")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify F and certify every generator of its algebra.
    Classify(Common),
    /// Check given generators against F.
    Verify(Common),
    /// Bracket closure of the algebra of F, or of the given generators.
    Bracket(Common),
    /// Verify every casebook row at random admissible parameters.
    CasebookSelftest {
        #[command(flatten)]
        common: Common,
        /// Restrict to these case ids.
        #[arg(long = "case")]
        cases: Vec<String>,
    },
    /// Finite Galilei boost of a plane-wave solution on a grid.
    FlowDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Nonlinearity F(psi, cpsi).
    #[arg(long = "F", default_value = "", allow_hyphen_values = true)]
    f: String,
    /// Parameter binding name=value (repeatable).
    #[arg(long = "param", value_parser = parse_assignment)]
    params: Vec<(String, String)>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, env = "NLS_SYM_SEED", default_value_t = 2024)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Arbitrary-function witness: f=<expr in w>, theta=<expr in x1..>, eta0=<expr in t, x1..>.
    #[arg(long = "witness", value_parser = parse_assignment)]
    witnesses: Vec<(String, String)>,
    /// Generator in operator notation, or `xi0=..; x1=..; eta=..` (repeatable).
    #[arg(long = "Q")]
    generators: Vec<String>,
    /// Read F as f(rho)*psi and use the subclass classification.
    #[arg(long)]
    subclass: bool,
    /// Also run the second-prolongation oracle.
    #[arg(long)]
    prolongation: bool,
}

impl Common {
    fn into_config(self, command: Command) -> RunConfig {
        RunConfig {
            command,
            n: self.n,
            f: self.f,
            params: self.params,
            samples: self.samples,
            tol: self.tol,
            seed: self.seed,
            format: match self.format {
                FormatArg::Text => Format::Text,
                FormatArg::Json => Format::Json,
            },
            witnesses: self.witnesses,
            generators: self.generators,
            subclass: self.subclass,
            prolongation: self.prolongation,
            cases: Vec::new(),
            flow: FlowDemoConfig::default(),
        }
    }
}

fn main() -> ExitCode {
    let cfg = match Cli::parse().command {
        Cmd::Classify(c) => c.into_config(Command::Classify),
        Cmd::Verify(c) => c.into_config(Command::Verify),
        Cmd::Bracket(c) => c.into_config(Command::Bracket),
        Cmd::CasebookSelftest { common, cases } => RunConfig { cases, ..common.into_config(Command::CasebookSelftest) },
        Cmd::FlowDemo { common, epsilon, grid, amplitude, sigma, gamma } => {
            let mut cfg = common.into_config(Command::FlowDemo);
            cfg.flow = FlowDemoConfig { n: cfg.n, epsilon, grid, amplitude, sigma, gamma, ..FlowDemoConfig::default() };
            cfg
        }
    };
    let out = run(&cfg);
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
