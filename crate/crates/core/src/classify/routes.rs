//! Normalization routes. Each route turns the annihilating classifying
//! equations of `F` into a transform chain plus candidate casebook rows with
//! parameter values read off in the transformed variables.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64 as C;

use super::casebook::Params;
use super::quintuple::{lemma1_canonicalize, tilde, ClassifyingEq};
use crate::equivalence::{apply_to_f, EquivTransform};
use crate::error::{Error, Result};
use crate::symexpr::{differentiate, eval_numeric, simplify, Expr, Num, Rat, SamplePoint, Var};

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);
/// Relative tolerance for deciding that a fitted coefficient vanishes.
const TOL: f64 = 1e-7;

/// Reference points for reading off constants; both have `Re ψ > 0`.
const PSI0: C = C::new(0.7, 0.4);
const PSI1: C = C::new(1.3, -0.55);

pub(crate) struct Route {
    pub chain: EquivTransform,
    pub candidates: Vec<(&'static str, Params)>,
}

fn small(z: C, scale: f64) -> bool {
    z.norm() <= TOL * (1.0 + scale)
}

fn value(f: &Expr, psi: C, n: usize) -> Result<C> {
    eval_numeric(f, &SamplePoint::new(0.0, vec![0.0; n], psi))
}

fn rational(x: f64) -> Option<Rat> {
    if !x.is_finite() || x.abs() > 1e6 {
        return None;
    }
    let close = |p: i64, q: i64| (x - p as f64 / q as f64).abs() <= 1e-11 * x.abs().max(1.0);
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..24 {
        let a = r.floor();
        let (h2, k2) = (a as i64 * h1 + h0, a as i64 * k1 + k0);
        if k2 > 10_000 {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if close(h1, k1) {
            return Some(Rat::new(h1, k1));
        }
        r = 1.0 / (r - a);
    }
    None
}

/// Real value, exact when it is a small-denominator rational.
pub(crate) fn snap_real(x: f64) -> Expr {
    rational(x).map(|q| Expr::num(Num::Exact(q, Rat::from_integer(0)))).unwrap_or_else(|| Expr::real(x))
}

pub(crate) fn snap_complex(z: C) -> Expr {
    let im = if z.im.abs() <= 1e-11 * (1.0 + z.re.abs()) { 0.0 } else { z.im };
    match (rational(z.re), rational(im)) {
        (Some(re), Some(im)) => Expr::num(Num::Exact(re, im)),
        _ => Expr::complex(C::new(z.re, im)),
    }
}

fn params(pairs: Vec<(&str, Expr)>) -> Params {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Least-squares solve with a residual check.
fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    let x = a.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    let res = (&a * &x - &b).norm();
    (res <= 1e-9 * (1.0 + b.norm())).then_some(x)
}

/// Columns of the real-linear map `ν ↦ s₁ν + s₂ν*`.
fn conj_linear(s1: C, s2: C) -> [[f64; 2]; 2] {
    let u = s1 + s2;
    let v = I * (s1 - s2);
    [[u.re, v.re], [u.im, v.im]]
}

/// Shift `B = ν₀ + ν₁t + ν₂x·x` that makes `s₁ψ + s₂ψ* + s₀` homogeneous.
fn linear_shift(s1: C, s2: C, s0: C, n: usize) -> Option<[C; 3]> {
    let l = conj_linear(s1, s2);
    let mut a = DMatrix::zeros(6, 6);
    let mut put = |row: usize, col: usize, m: [[f64; 2]; 2]| {
        for i in 0..2 {
            for j in 0..2 {
                a[(row + i, col + j)] = m[i][j];
            }
        }
    };
    // unknown order: ν₀, ν₁, ν₂ (re, im each); rows: t, x·x, constant
    put(0, 2, l);
    put(2, 4, l);
    put(4, 0, l);
    put(4, 2, [[0.0, -1.0], [1.0, 0.0]]);
    put(4, 4, [[2.0 * n as f64, 0.0], [0.0, 2.0 * n as f64]]);
    let b = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, s0.re, s0.im]);
    let x = solve(a, b)?;
    Some([C::new(x[0], x[1]), C::new(x[2], x[3]), C::new(x[4], x[5])])
}

fn clean(z: C) -> C {
    let s = |v: f64| if v.abs() < 1e-13 { 0.0 } else { v };
    C::new(s(z.re), s(z.im))
}

/// F linear in (ψ, ψ*): shift away the inhomogeneous part, then gauge.
pub(crate) fn linear_route(f: &Expr, n: usize) -> Result<Route> {
    let s1 = clean(value(&simplify(&differentiate(f, &Var::Psi)), PSI0, n)?);
    let s2 = clean(value(&simplify(&differentiate(f, &Var::CPsi)), PSI0, n)?);
    let s0 = clean(value(f, PSI0, n)? - s1 * PSI0 - s2 * PSI0.conj());
    let mut chain = EquivTransform::identity(n);
    if !small(s0, 0.0) {
        let nu = linear_shift(s1, s2, s0, n)
            .ok_or_else(|| Error::NotNormalizable(format!("no polynomial shift removes {s0}")))?;
        let [n0, n1, n2] = nu.map(|z| snap_complex(clean(z)));
        let b = simplify(&(n0 + n1 * Expr::t() + n2 * Expr::x_squared(n)));
        chain = chain.then(&EquivTransform::shift_by(n, b));
    }
    if small(s2, s1.norm()) {
        if !small(s1, 0.0) {
            chain = chain.then(&EquivTransform::phase_gauge(n, -s1));
        }
        return Ok(Route { chain, candidates: vec![("T2.1", Params::new())] });
    }
    let alpha = C::from_polar(1.0, -s2.arg() / 2.0);
    chain = chain.then(&EquivTransform::pure(n, s2.norm().sqrt(), alpha, ZERO));
    let s1 = s1 / s2.norm();
    if s1.im.abs() > 1e-15 {
        chain = chain.then(&EquivTransform::amp_gauge(n, -s1.im));
    }
    Ok(Route { chain, candidates: vec![("T2.2", params(vec![("gamma", snap_real(s1.re))]))] })
}

/// One annihilating equation: the rows with an arbitrary function.
pub(crate) fn t1_route(eq: &ClassifyingEq, n: usize) -> Option<Route> {
    let s = eq.norm();
    let id = EquivTransform::identity(n);
    if !small(eq.a, s) {
        let beta = eq.b / eq.a;
        let chain = if small(beta, 0.0) { id } else { EquivTransform::pure(n, 1.0, ONE, beta) };
        let q = eq.transform(1.0, ONE, beta);
        let ca = q.c + q.a;
        if ca.im.abs() > TOL * (1.0 + s) {
            return None;
        }
        let route = |id: &'static str, p: Params| Some(Route { chain: chain.clone(), candidates: vec![(id, p)] });
        if ca.re.abs() > TOL * (1.0 + s) {
            if !small(q.d, s) || !small(q.e, s) {
                return None;
            }
            let g = q.a * (-ca.re / q.a.norm_sqr());
            return route("T1.1", params(vec![("gamma1", snap_real(g.re)), ("gamma2", snap_real(g.im))]));
        }
        if q.a.re.abs() > TOL * (1.0 + s) {
            let r = 1.0 / q.a.re;
            if !small(q.e * r, s * r.abs()) {
                return None;
            }
            let gamma = q.a.im * r;
            let delta = -q.d * r / C::new(gamma, -1.0);
            if delta.im.abs() > TOL * (1.0 + delta.norm()) {
                return None;
            }
            return route("T1.2", params(vec![("gamma", snap_real(gamma)), ("delta", snap_real(delta.re))]));
        }
        let r = 1.0 / q.a.im;
        if !small(q.e * r, s * r.abs()) {
            return None;
        }
        let delta = -q.d * r;
        if delta.im.abs() > TOL * (1.0 + delta.norm()) {
            return None;
        }
        if small(delta, 0.0) {
            return route("T1.4", Params::new());
        }
        return route("T1.3", params(vec![("delta", snap_real(delta.re))]));
    }
    if !small(eq.d, s) || eq.c.im.abs() > TOL * (1.0 + s) || small(eq.b, s) {
        return None;
    }
    if eq.c.re.abs() > TOL * (1.0 + s) {
        let r = 1.0 / eq.c.re;
        let alpha = I / (eq.b * r);
        if !small(eq.e * r * alpha, 0.0) {
            return None;
        }
        let chain = EquivTransform::pure(n, 1.0, alpha, ZERO);
        return Some(Route { chain, candidates: vec![("T1.5", Params::new())] });
    }
    let alpha = I / eq.b;
    let d = eq.e * alpha;
    let chain = EquivTransform::pure(n, 1.0, alpha, ZERO);
    let p = params(vec![("delta1", snap_real(d.re)), ("delta2", snap_real(d.im))]);
    Some(Route { chain, candidates: vec![("T1.6", p)] })
}

/// Shift `B = i·u(t, x)` with real `u` removing a constant `K`; it leaves
/// `Re ψ` untouched.
fn imaginary_shift(k: C, n: usize) -> EquivTransform {
    EquivTransform::shift(n, [ZERO, clean(-I * k.re), clean(I * k.im / (2.0 * n as f64))])
}

/// The constant `g − model`, read at two points; `None` if it is not constant.
fn constant_part(g: &Expr, model: impl Fn(C) -> C, n: usize) -> Result<Option<C>> {
    let k0 = value(g, PSI0, n)? - model(PSI0);
    let k1 = value(g, PSI1, n)? - model(PSI1);
    let scale = value(g, PSI0, n)?.norm() + model(PSI0).norm();
    Ok(small(k0 - k1, scale).then_some(clean(k0)))
}

fn unit_modulus(chain: &EquivTransform, sigma: C, n: usize) -> EquivTransform {
    if small(sigma, 0.0) {
        return chain.clone();
    }
    chain.then(&EquivTransform::pure(n, sigma.norm().sqrt(), ONE, ZERO))
}

/// Two independent equations: reduce the pair to a canonical shape first.
pub(crate) fn t2_route(f: &Expr, e1: &ClassifyingEq, e2: &ClassifyingEq, n: usize) -> Result<Option<Route>> {
    let form = match lemma1_canonicalize(e1, e2) {
        Ok(form) => form,
        Err(Error::NotReducible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let chain = EquivTransform::pure(n, form.delta, form.alpha(), form.beta()).compact();
    let (p, q) = &form.pair;
    match form.shape {
        1 => shape_one(f, chain, p, q, n),
        2 => shape_two(f, chain, p, q, n),
        _ => shape_three(f, chain, p, q, n),
    }
}

fn shape_one(f: &Expr, chain: EquivTransform, p: &ClassifyingEq, q: &ClassifyingEq, n: usize) -> Result<Option<Route>> {
    let s = p.norm().max(q.norm());
    if !small(p.d, s) || !small(q.d, s) || !small(q.e, s) || p.c.im.abs() > TOL * (1.0 + s) {
        return Ok(None);
    }
    let c1 = p.c.re;
    let g = apply_to_f(&chain, f);
    let log_case = c1.abs() <= TOL * (1.0 + s);
    let gamma = -c1;
    let sigma = if log_case {
        -p.e
    } else {
        (value(&g, PSI0, n)? + p.e / c1) / PSI0.re.abs().powf(gamma)
    };
    let chain = unit_modulus(&chain, sigma, n);
    let sigma = sigma / sigma.norm();
    let g = apply_to_f(&chain, f);
    let model = |z: C| if log_case { sigma * z.re.abs().ln() } else { sigma * z.re.abs().powf(gamma) };
    let Some(k) = constant_part(&g, model, n)? else { return Ok(None) };
    let chain = if small(k, 0.0) { chain } else { chain.then(&imaginary_shift(k, n)) };
    let candidates = if log_case {
        vec![("T2.4", params(vec![("sigma", snap_complex(sigma))]))]
    } else {
        vec![("T2.3", params(vec![("gamma", snap_real(gamma)), ("sigma", snap_complex(sigma))]))]
    };
    Ok(Some(Route { chain, candidates }))
}

/// Gauge `w(t) = X₁ + iX₂` removing `Cψ` from `(−D ln|ψ| + Eφ + C)ψ`.
fn log_gauge(d: C, e: C, c: C, n: usize) -> Option<EquivTransform> {
    let m = Matrix2::new(d.im, -e.im, -d.re, e.re);
    let rhs = Vector2::new(c.im, -c.re);
    if let Some(inv) = m.try_inverse().filter(|_| m.determinant().abs() > 1e-9) {
        let x = -(inv * rhs);
        return Some(EquivTransform::gauge(n, Expr::complex(clean(C::new(x[0], x[1])))));
    }
    // X = p₀ + p₁t + p₂t²: p₁ − Mp₀ = c, 2p₂ − Mp₁ = 0, Mp₂ = 0
    let mut a = DMatrix::zeros(6, 6);
    for i in 0..2 {
        for j in 0..2 {
            a[(i, j)] = -m[(i, j)];
            a[(2 + i, 2 + j)] = -m[(i, j)];
            a[(4 + i, 4 + j)] = m[(i, j)];
        }
        a[(i, 2 + i)] = 1.0;
        a[(2 + i, 4 + i)] = 2.0;
    }
    let b = DVector::from_vec(vec![rhs[0], rhs[1], 0.0, 0.0, 0.0, 0.0]);
    let x = solve(a, b)?;
    let coef = |k: usize| Expr::complex(clean(C::new(x[2 * k], x[2 * k + 1])));
    let w = coef(0) + coef(1) * Expr::t() + coef(2) * Expr::t().powi(2);
    Some(EquivTransform::gauge(n, simplify(&w)))
}

const LOG_ROWS: [&str; 7] = ["T2.9", "T2.10", "T2.11", "T2.12", "T2.13", "T2.14", "T2.15"];

fn shape_two(f: &Expr, chain: EquivTransform, p: &ClassifyingEq, q: &ClassifyingEq, n: usize) -> Result<Option<Route>> {
    let s = p.norm().max(q.norm());
    let (c1, c2) = tilde(p.c, q.c);
    let (d1, _) = tilde(p.d, q.d);
    let (e1, e2) = tilde(p.e, q.e);
    if !small(e1, s) || !small(e2, s) {
        return Ok(None);
    }
    if small(c1 + 1.0, s) && small(c2, s) {
        // F = (−(δ₁+iδ₂)ln|ψ| + (δ₃−iδ₄)φ + C)ψ
        let (d, e) = (p.d, -q.d);
        let m = [d.re, d.im, e.re, e.im].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let (chain, d, e) = if m > TOL { (chain.then(&EquivTransform::pure(n, m.sqrt(), ONE, ZERO)), d / m, e / m) } else { (chain, d, e) };
        let g = apply_to_f(&chain, f);
        let model = |z: C| (-d * z.norm().ln() + e * z.arg()) * z;
        let Some(k) = constant_part(&simplify(&(g / Expr::psi())), |z| model(z) / z, n)? else { return Ok(None) };
        let chain = if small(k, 0.0) {
            chain
        } else {
            match log_gauge(d, e, k, n) {
                Some(gauge) => chain.then(&gauge),
                None => return Ok(None),
            }
        };
        let p = params(vec![
            ("delta1", snap_real(d.re)),
            ("delta2", snap_real(d.im)),
            ("delta3", snap_real(e.re)),
            ("delta4", snap_real(-e.im)),
        ]);
        return Ok(Some(Route { chain, candidates: LOG_ROWS.iter().map(|id| (*id, p.clone())).collect() }));
    }
    if small(c1 + 1.0 - c2.conj(), s) && !small(c2, s) {
        // F = σ|ψ|^γ₁e^{γ₂φ}ψ + Kψ
        let k = -d1 / (1.0 + c1);
        let (g1, g2) = (-2.0 * c2.re, -2.0 * c2.im);
        if (g1 * k.im - g2 * k.re).abs() > TOL * (1.0 + k.norm()) {
            return Ok(None);
        }
        let chain = if small(k, 0.0) { chain } else { chain.then(&EquivTransform::phase_gauge(n, -k)) };
        let shape = |z: C| z * z.norm().powf(g1) * (g2 * z.arg()).exp();
        let g = apply_to_f(&chain, f);
        let sigma = value(&g, PSI0, n)? / shape(PSI0);
        let chain = unit_modulus(&chain, sigma, n);
        let sigma = snap_complex(sigma / sigma.norm());
        let (g1, g2) = (snap_real(g1), snap_real(g2));
        let candidates = [
            ("T2.6", params(vec![("gamma1", g1.clone()), ("gamma2", g2.clone()), ("sigma", sigma.clone())])),
            ("T2.7", params(vec![("gamma", g1.clone()), ("sigma", sigma.clone())])),
            ("T2.8", params(vec![("gamma", g1), ("sigma", sigma)])),
        ];
        let candidates = if g2.is_zero() { candidates[1..].to_vec() } else { candidates[..1].to_vec() };
        return Ok(Some(Route { chain, candidates }));
    }
    Ok(None)
}

fn shape_three(f: &Expr, chain: EquivTransform, p: &ClassifyingEq, q: &ClassifyingEq, n: usize) -> Result<Option<Route>> {
    let s = p.norm().max(q.norm());
    let (c1, c2) = tilde(p.c, q.c);
    let (d1, d2) = tilde(p.d, q.d);
    if !small(d1, s) || !small(d2, s) || small(c1, s) || !small(c1.conj() - c2, s) {
        return Ok(None);
    }
    // F = σe^{−2Re(c̃₁ψ)} + K; α = −2c̃₁ brings the exponent to Re ψ
    let chain = chain.then(&EquivTransform::pure(n, 1.0, -2.0 * c1, ZERO));
    let g = apply_to_f(&chain, f);
    let diff = value(&g, PSI0, n)? - value(&g, PSI1, n)?;
    let sigma = diff / (PSI0.re.exp() - PSI1.re.exp());
    let chain = unit_modulus(&chain, sigma, n);
    let sigma = sigma / sigma.norm();
    let g = apply_to_f(&chain, f);
    let Some(k) = constant_part(&g, |z| sigma * z.re.exp(), n)? else { return Ok(None) };
    let chain = if small(k, 0.0) { chain } else { chain.then(&imaginary_shift(k, n)) };
    Ok(Some(Route { chain, candidates: vec![("T2.5", params(vec![("sigma", snap_complex(sigma))]))] }))
}
