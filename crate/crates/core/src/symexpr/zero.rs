//! Randomized zero testing.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::calculus::Lambda;
use super::eval::{eval_numeric, SamplePoint, DEFAULT_PSI_MIN};
use super::expr::{Expr, Node, Var};
use super::simplify::simplify;
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 200;
pub const MAX_RETRIES: usize = 10;

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub psi_min: f64,
    /// Range of |ψ| at sample points.
    pub psi_radius: (f64, f64),
    /// Sampled phases lie in (-max_arg, max_arg), keeping off the negative real axis.
    pub max_arg: f64,
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
    /// Highest jet order to sample (0 disables jets).
    pub jet_order: usize,
    pub params: BTreeMap<String, Complex64>,
    pub functions: BTreeMap<String, Lambda>,
}

impl SamplerConfig {
    pub fn new(n: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n,
            samples: DEFAULT_SAMPLES,
            seed,
            psi_min: DEFAULT_PSI_MIN,
            psi_radius: (0.3, 1.8),
            max_arg: 0.8 * std::f64::consts::PI,
            t_range: (-1.0, 1.0),
            x_range: (-1.0, 1.0),
            jet_order: 0,
            params: BTreeMap::new(),
            functions: BTreeMap::new(),
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_jets(mut self, order: usize) -> Self {
        self.jet_order = order;
        self
    }

    pub fn with_param(mut self, name: &str, value: Complex64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_function(mut self, name: &str, lambda: Lambda) -> Self {
        self.functions.insert(name.to_string(), lambda);
        self
    }

    /// Deterministic sample `index`, attempt `retry`.
    pub fn point(&self, index: usize, retry: usize) -> SamplePoint {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, index as u64, retry as u64));
        let t = rng.gen_range(self.t_range.0..=self.t_range.1);
        let x: Vec<f64> = (0..self.n).map(|_| rng.gen_range(self.x_range.0..=self.x_range.1)).collect();
        let r = rng.gen_range(self.psi_radius.0..=self.psi_radius.1);
        let arg = rng.gen_range(-self.max_arg..=self.max_arg);
        let psi = Complex64::from_polar(r, arg);
        let mut p = SamplePoint::new(t, x, psi);
        p.psi_min = self.psi_min;
        p.params = self.params.clone();
        p.functions = self.functions.clone();
        for order in 1..=self.jet_order {
            for idx in multi_indices(self.n, order) {
                let z = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                p.jets.insert(Var::jet(false, idx.clone()), z);
                p.jets.insert(Var::jet(true, idx), z.conj());
            }
        }
        p
    }
}

/// Sorted multi-indices of the given order over coordinates 0 (t) ..= n.
pub fn multi_indices(n: usize, order: usize) -> Vec<Vec<u8>> {
    fn rec(start: u8, n: u8, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for c in start..=n {
            cur.push(c);
            rec(c, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n as u8, order, &mut Vec::new(), &mut out);
    out
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Witness {
    pub t: f64,
    pub x: Vec<f64>,
    pub psi: (f64, f64),
    pub value: (f64, f64),
    pub scale: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ZeroVerdict {
    pub zero: bool,
    /// Simplification produced a literal 0.
    pub structural: bool,
    pub samples: usize,
    pub max_abs: f64,
    /// Largest |r| / (1 + scale) seen.
    pub max_rel: f64,
    pub tol: f64,
    pub witness: Option<Witness>,
}

/// Value and magnitude scale (sum of |terms| for top-level sums).
pub fn eval_with_scale(e: &Expr, p: &SamplePoint) -> Result<(Complex64, f64)> {
    match e.node() {
        Node::Add(terms) => {
            let mut total = Complex64::new(0.0, 0.0);
            let mut scale = 0.0;
            for t in terms {
                let v = eval_numeric(t, p)?;
                total += v;
                scale += v.norm();
            }
            Ok((total, scale))
        }
        _ => {
            let v = eval_numeric(e, p)?;
            Ok((v, v.norm()))
        }
    }
}

/// Evaluates `e` at sample `index`, resampling on singular points.
pub fn sample_value(e: &Expr, cfg: &SamplerConfig, index: usize) -> Result<(SamplePoint, Complex64, f64)> {
    let mut last = None;
    for retry in 0..MAX_RETRIES {
        let p = cfg.point(index, retry);
        match eval_with_scale(e, &p) {
            Ok((v, s)) => return Ok((p, v, s)),
            Err(Error::Singular(msg)) => last = Some(msg),
            Err(other) => return Err(other),
        }
    }
    Err(Error::Singular(format!("sample {index}: {}", last.unwrap_or_default())))
}

pub fn is_zero(e: &Expr, cfg: &SamplerConfig, tol: f64) -> Result<ZeroVerdict> {
    if tol <= 0.0 {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let s = simplify(e);
    if s.is_zero() {
        return Ok(ZeroVerdict {
            zero: true,
            structural: true,
            samples: 0,
            max_abs: 0.0,
            max_rel: 0.0,
            tol,
            witness: None,
        });
    }
    numeric_zero(&s, cfg, tol)
}

/// Numeric zero test without a structural pass.
pub fn numeric_zero(e: &Expr, cfg: &SamplerConfig, tol: f64) -> Result<ZeroVerdict> {
    let results: Vec<Result<(SamplePoint, Complex64, f64)>> =
        (0..cfg.samples).into_par_iter().map(|k| sample_value(e, cfg, k)).collect();
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut witness: Option<Witness> = None;
    let mut worst_rel = -1.0;
    for r in results {
        let (p, v, scale) = r?;
        let rel = v.norm() / (1.0 + scale);
        max_abs = max_abs.max(v.norm());
        max_rel = max_rel.max(rel);
        if rel > tol && rel > worst_rel {
            worst_rel = rel;
            witness = Some(Witness { t: p.t, x: p.x.clone(), psi: (p.psi.re, p.psi.im), value: (v.re, v.im), scale });
        }
    }
    Ok(ZeroVerdict { zero: witness.is_none(), structural: false, samples: cfg.samples, max_abs, max_rel, tol, witness })
}
