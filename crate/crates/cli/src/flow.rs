//! Finite Galilei boost of an exact plane-wave solution, checked on a grid.
//!
//! Integrating the characteristics of `G_1 = t∂₁ + ½x₁M` gives
//! `t̃ = t, x̃₁ = x₁ + εt, ψ̃ = ψ·exp(i(εx₁/2 + ε²t/4))`, so a solution
//! `ψ(t, x)` is mapped to `ψ(t, x₁ − εt)·exp(i(εx₁/2 − ε²t/4))`.

use num_complex::Complex64 as C;
use serde::Serialize;

use nls_sym::equivalence::equation_operator;
use nls_sym::liefield::{named_generator, GenParams};
use nls_sym::symexpr::{
    conjugate, differentiate, eval_numeric, is_zero, parse_with, simplify, substitute, substitute_many, Expr, ParseOptions,
    SamplePoint, SamplerConfig, Var,
};
use nls_sym::{Error, Result};

#[derive(Clone, Debug)]
pub struct FlowDemoConfig {
    pub n: usize,
    pub amplitude: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Points per axis of the (t, x₁) grid.
    pub grid: usize,
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
}

impl Default for FlowDemoConfig {
    fn default() -> Self {
        FlowDemoConfig {
            n: 1,
            amplitude: 1.0,
            sigma: 1.0,
            gamma: 2.0,
            epsilon: 0.3,
            grid: 256,
            t_range: (0.0, 1.0),
            x_range: (-2.0, 2.0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowRow {
    pub label: String,
    pub epsilon: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowDemoReport {
    pub grid: usize,
    /// Symbolic check: d/dε of the boost at ε = 0 is the characteristic of G_1.
    pub generator_matches: bool,
    /// Symbolic check: the boosted field solves the equation identically.
    pub symbolic_solution: bool,
    /// Largest |ψ̃ − ψ| on the grid for ε = 0.
    pub identity_deviation: f64,
    pub rows: Vec<FlowRow>,
}

/// Plane wave `A·e^{iσA^γ t}`, an exact solution.
fn plane_wave(cfg: &FlowDemoConfig) -> Result<Expr> {
    let opts = ParseOptions::new(cfg.n)
        .with_constant("A", Expr::real(cfg.amplitude))
        .with_constant("s", Expr::real(cfg.sigma))
        .with_constant("g", Expr::real(cfg.gamma));
    Ok(simplify(&parse_with("A*exp(i*s*A^g*t)", &opts)?))
}

/// Image of a field under the boost with parameter `eps`; `corrupt` drops
/// the ½ in the phase εx₁/2 (negative control).
fn boost(psi: &Expr, eps: &Expr, corrupt: bool) -> Expr {
    let (t, x1) = (Expr::t(), Expr::x(1));
    let moved = substitute(psi, &Var::X(1), &(x1.clone() - eps * &t));
    let k = if corrupt { Expr::one() } else { Expr::rat(1, 2) };
    let phase = Expr::i() * (k * eps * x1 - Expr::rat(1, 4) * eps.clone().powi(2) * t);
    simplify(&(moved * phase.exp()))
}

fn nonlinearity(cfg: &FlowDemoConfig) -> Result<Expr> {
    let opts = ParseOptions::new(cfg.n)
        .with_constant("s", Expr::real(cfg.sigma))
        .with_constant("g", Expr::real(cfg.gamma));
    parse_with("s*abs(psi)^g*psi", &opts)
}

fn point(cfg: &FlowDemoConfig, t: f64, x: f64) -> SamplePoint {
    let mut xs = vec![0.0; cfg.n];
    xs[0] = x;
    SamplePoint::new(t, xs, C::new(0.0, 0.0))
}

/// Field values on the grid, row-major in t.
fn sample(cfg: &FlowDemoConfig, field: &Expr) -> Result<Vec<Vec<C>>> {
    let m = cfg.grid;
    let (dt, dx) = steps(cfg);
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| eval_numeric(field, &point(cfg, cfg.t_range.0 + i as f64 * dt, cfg.x_range.0 + j as f64 * dx)))
                .collect()
        })
        .collect()
}

fn steps(cfg: &FlowDemoConfig) -> (f64, f64) {
    let m = (cfg.grid - 1) as f64;
    ((cfg.t_range.1 - cfg.t_range.0) / m, (cfg.x_range.1 - cfg.x_range.0) / m)
}

/// Max over interior nodes of |iψ_t + ψ_xx + σ|ψ|^γψ| with central differences.
fn grid_residual(cfg: &FlowDemoConfig, u: &[Vec<C>]) -> f64 {
    let m = cfg.grid;
    let (dt, dx) = steps(cfg);
    let mut worst: f64 = 0.0;
    for i in 1..m - 1 {
        for j in 1..m - 1 {
            let psi = u[i][j];
            let ut = (u[i + 1][j] - u[i - 1][j]) / (2.0 * dt);
            let uxx = (u[i][j + 1] - 2.0 * psi + u[i][j - 1]) / (dx * dx);
            let r = C::i() * ut + uxx + cfg.sigma * psi.norm().powf(cfg.gamma) * psi;
            worst = worst.max(r.norm());
        }
    }
    worst
}

/// Checks the boost against the generator and on the grid.
pub fn flow_demo(cfg: &FlowDemoConfig) -> Result<FlowDemoReport> {
    if cfg.grid < 8 || cfg.t_range.1 <= cfg.t_range.0 || cfg.x_range.1 <= cfg.x_range.0 {
        return Err(Error::Invalid("grid needs at least 8 points per axis and nonempty ranges".into()));
    }
    let scfg = SamplerConfig::new(cfg.n, 17).with_samples(40);
    let base = plane_wave(cfg)?;
    // d/dε at ε = 0 must be the characteristic η − ξ¹ψ_{x₁} of G_1
    let e = Var::param("eps");
    let d_eps = substitute(&differentiate(&boost(&base, &Expr::var(e.clone()), false), &e), &e, &Expr::zero());
    let g = named_generator("Ga", &GenParams::new().index("a", 1), cfg.n)?;
    let on_base = |ex: &Expr| substitute_many(ex, &[(Var::Psi, base.clone()), (Var::CPsi, conjugate(&base))]);
    let characteristic = on_base(&g.eta) - on_base(&g.xi[0]) * differentiate(&base, &Var::X(1));
    let generator_matches = is_zero(&simplify(&(d_eps - characteristic)), &scfg, 1e-10)?.zero;

    let f = nonlinearity(cfg)?;
    let eps = Expr::real(cfg.epsilon);
    let field = boost(&base, &eps, false);
    let symbolic_solution = is_zero(&simplify(&equation_operator(&f, &field, cfg.n)), &scfg, 1e-10)?.zero;

    let original = sample(cfg, &base)?;
    let at_zero = sample(cfg, &boost(&base, &Expr::zero(), false))?;
    let identity_deviation = original
        .iter()
        .flatten()
        .zip(at_zero.iter().flatten())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let mut rows = vec![FlowRow { label: "original".into(), epsilon: 0.0, max_residual: grid_residual(cfg, &original) }];
    for (label, corrupt) in [("boosted", false), ("corrupted phase", true)] {
        let u = sample(cfg, &boost(&base, &eps, corrupt))?;
        rows.push(FlowRow { label: label.into(), epsilon: cfg.epsilon, max_residual: grid_residual(cfg, &u) });
    }
    Ok(FlowDemoReport { grid: cfg.grid, generator_matches, symbolic_solution, identity_deviation, rows })
}
