use num_complex::Complex64;

use super::EquivTransform;
use crate::error::Result;
use crate::liefield::{named_generator, GenParams, VectorField};
use crate::symexpr::{eval_numeric, SamplePoint};

/// A generator of the equivalence algebra: a field on (t, x, ψ) together with
/// the `∂_F` coefficient, which is always `f_factor · F`.
#[derive(Clone, Debug)]
pub struct EquivGenerator {
    pub name: String,
    pub field: VectorField,
    pub f_factor: Complex64,
}

impl EquivGenerator {
    /// Closed-form finite transformation at group parameter `s`, for the
    /// generators acting on F. Translations and rotations act trivially on F.
    pub fn flow(&self, s: f64) -> EquivTransform {
        let n = self.field.n;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self.name.as_str() {
            "D-F" => EquivTransform::pure(n, (s / 2.0).exp(), one, zero),
            "S" => EquivTransform::pure(n, 1.0, one, Complex64::new(s, 0.0)),
            "T" => EquivTransform::pure(n, 1.0, one, Complex64::new(0.0, s)),
            "I+F" => EquivTransform::pure(n, 1.0, Complex64::new(s.exp(), 0.0), zero),
            "M+iF" => EquivTransform::pure(n, 1.0, Complex64::from_polar(1.0, s), zero),
            _ => EquivTransform::identity(n),
        }
    }
}

/// Basis of the equivalence algebra.
pub fn equivalence_algebra(n: usize) -> Result<Vec<EquivGenerator>> {
    let p = GenParams::new();
    let mut out = Vec::new();
    let mut push = |name: &str, field: VectorField, k: Complex64| {
        out.push(EquivGenerator { name: name.to_string(), field, f_factor: k });
    };
    let zero = Complex64::new(0.0, 0.0);
    push("Pt", named_generator("Pt", &p, n)?, zero);
    for a in 1..=n {
        push(&format!("P{a}"), named_generator("Pa", &p.clone().index("a", a), n)?, zero);
    }
    for a in 1..=n {
        for b in (a + 1)..=n {
            push(&format!("J{a}{b}"), named_generator("Jab", &p.clone().index("a", a).index("b", b), n)?, zero);
        }
    }
    push("D-F", named_generator("D", &p, n)?, Complex64::new(-1.0, 0.0));
    push("S", named_generator("S", &p, n)?, zero);
    push("T", named_generator("T", &p, n)?, zero);
    push("I+F", named_generator("I", &p, n)?, Complex64::new(1.0, 0.0));
    push("M+iF", named_generator("M", &p, n)?, Complex64::new(0.0, 1.0));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub x: Vec<f64>,
    pub psi: Complex64,
    pub f: Complex64,
}

fn rate(g: &EquivGenerator, s: &FlowState) -> Result<FlowState> {
    let p = SamplePoint::new(s.t, s.x.clone(), s.psi);
    let q = &g.field;
    Ok(FlowState {
        t: eval_numeric(&q.xi0, &p)?.re,
        x: q.xi.iter().map(|e| eval_numeric(e, &p).map(|v| v.re)).collect::<Result<_>>()?,
        psi: eval_numeric(&q.eta, &p)?,
        f: g.f_factor * s.f,
    })
}

fn axpy(s: &FlowState, h: f64, k: &FlowState) -> FlowState {
    FlowState {
        t: s.t + h * k.t,
        x: s.x.iter().zip(&k.x).map(|(a, b)| a + h * b).collect(),
        psi: s.psi + h * k.psi,
        f: s.f + h * k.f,
    }
}

/// Classical RK4 integration of the generator's flow on (t, x, ψ, F).
pub fn integrate_flow(g: &EquivGenerator, start: &FlowState, s: f64, steps: usize) -> Result<FlowState> {
    let h = s / steps as f64;
    let mut cur = start.clone();
    for _ in 0..steps {
        let k1 = rate(g, &cur)?;
        let k2 = rate(g, &axpy(&cur, h / 2.0, &k1))?;
        let k3 = rate(g, &axpy(&cur, h / 2.0, &k2))?;
        let k4 = rate(g, &axpy(&cur, h, &k3))?;
        let mut next = cur.clone();
        next.t += h / 6.0 * (k1.t + 2.0 * k2.t + 2.0 * k3.t + k4.t);
        for a in 0..next.x.len() {
            next.x[a] += h / 6.0 * (k1.x[a] + 2.0 * k2.x[a] + 2.0 * k3.x[a] + k4.x[a]);
        }
        next.psi += h / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi);
        next.f += h / 6.0 * (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f);
        cur = next;
    }
    Ok(cur)
}
