//! Complex constants: exact complex rationals with a floating fallback.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

pub type Rat = Ratio<i64>;

/// A complex constant. Arithmetic stays exact while both operands are exact
/// and nothing overflows; otherwise it degrades to `f64`.
#[derive(Clone, Copy, Debug)]
pub enum Num {
    Exact(Rat, Rat),
    Float(Complex64),
}

// By-value arithmetic with overflow fallback; the operator traits wrap these.
#[allow(clippy::should_implement_trait)]
impl Num {
    pub const ZERO: Num = Num::Exact(Ratio::new_raw(0, 1), Ratio::new_raw(0, 1));
    pub const ONE: Num = Num::Exact(Ratio::new_raw(1, 1), Ratio::new_raw(0, 1));
    pub const I: Num = Num::Exact(Ratio::new_raw(0, 1), Ratio::new_raw(1, 1));

    pub fn int(v: i64) -> Num {
        Num::Exact(Rat::from_integer(v), Rat::zero())
    }

    pub fn rat(n: i64, d: i64) -> Num {
        Num::Exact(Rat::new(n, d), Rat::zero())
    }

    pub fn real(v: f64) -> Num {
        Num::Float(Complex64::new(v, 0.0))
    }

    pub fn complex(v: Complex64) -> Num {
        Num::Float(v)
    }

    /// Parses a decimal literal such as `12`, `0.25` or `1e-3` exactly when possible.
    pub fn parse_decimal(text: &str) -> Option<Num> {
        if text.contains(['e', 'E']) {
            return text.parse::<f64>().ok().map(Num::real);
        }
        let (int_part, frac_part) = match text.split_once('.') {
            Some((a, b)) => (a, b),
            None => (text, ""),
        };
        if frac_part.len() > 15 || int_part.len() > 15 {
            return text.parse::<f64>().ok().map(Num::real);
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
        let denom = 10i64.checked_pow(frac_part.len() as u32)?;
        Some(Num::rat(numer, denom))
    }

    pub fn to_c64(self) -> Complex64 {
        match self {
            Num::Exact(re, im) => Complex64::new(rat_f64(re), rat_f64(im)),
            Num::Float(z) => z,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(..))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Exact(re, im) => re.is_zero() && im.is_zero(),
            Num::Float(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Num::Exact(re, im) => re.is_one() && im.is_zero(),
            Num::Float(z) => z.re == 1.0 && z.im == 0.0,
        }
    }

    /// Exact real integer value, if any.
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Num::Exact(re, im) if im.is_zero() && re.is_integer() => Some(*re.numer()),
            _ => None,
        }
    }

    pub fn as_exact_real(&self) -> Option<Rat> {
        match self {
            Num::Exact(re, im) if im.is_zero() => Some(*re),
            _ => None,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Num::Exact(_, im) => im.is_zero(),
            Num::Float(z) => z.im == 0.0,
        }
    }

    pub fn conj(self) -> Num {
        match self {
            Num::Exact(re, im) => Num::Exact(re, -im),
            Num::Float(z) => Num::Float(z.conj()),
        }
    }

    pub fn neg(self) -> Num {
        match self {
            Num::Exact(re, im) => Num::Exact(-re, -im),
            Num::Float(z) => Num::Float(-z),
        }
    }

    pub fn add(self, other: Num) -> Num {
        if let (Num::Exact(a, b), Num::Exact(c, d)) = (self, other) {
            if let (Some(re), Some(im)) = (a.checked_add(&c), b.checked_add(&d)) {
                return Num::Exact(re, im);
            }
        }
        Num::Float(self.to_c64() + other.to_c64())
    }

    pub fn sub(self, other: Num) -> Num {
        self.add(other.neg())
    }

    pub fn mul(self, other: Num) -> Num {
        if let (Num::Exact(a, b), Num::Exact(c, d)) = (self, other) {
            let re = a.checked_mul(&c).and_then(|x| b.checked_mul(&d).and_then(|y| x.checked_sub(&y)));
            let im = a.checked_mul(&d).and_then(|x| b.checked_mul(&c).and_then(|y| x.checked_add(&y)));
            if let (Some(re), Some(im)) = (re, im) {
                return Num::Exact(re, im);
            }
        }
        Num::Float(self.to_c64() * other.to_c64())
    }

    /// Multiplicative inverse; `None` for exact zero.
    pub fn recip(self) -> Option<Num> {
        match self {
            Num::Exact(a, b) => {
                let norm = a.checked_mul(&a).and_then(|x| b.checked_mul(&b).and_then(|y| x.checked_add(&y)));
                match norm {
                    Some(n) if n.is_zero() => None,
                    Some(n) => {
                        let re = checked_div(a, n);
                        let im = checked_div(-b, n);
                        match (re, im) {
                            (Some(re), Some(im)) => Some(Num::Exact(re, im)),
                            _ => Some(Num::Float(self.to_c64().inv())),
                        }
                    }
                    None => Some(Num::Float(self.to_c64().inv())),
                }
            }
            Num::Float(z) => Some(Num::Float(z.inv())),
        }
    }

    /// Exact power for integer exponents; `None` when the result would not be exact.
    pub fn powi_exact(self, exp: i64) -> Option<Num> {
        if !self.is_exact() || exp.unsigned_abs() > 64 {
            return None;
        }
        let base = if exp < 0 { self.recip()? } else { self };
        let mut acc = Num::ONE;
        for _ in 0..exp.unsigned_abs() {
            acc = acc.mul(base);
            if !acc.is_exact() {
                return None;
            }
        }
        Some(acc)
    }

    fn sort_key(&self) -> (u8, f64, f64) {
        match self {
            Num::Exact(re, im) => (0, rat_f64(*re), rat_f64(*im)),
            Num::Float(z) => (1, z.re, z.im),
        }
    }
}

fn checked_div(a: Rat, b: Rat) -> Option<Rat> {
    let (an, ad) = (*a.numer(), *a.denom());
    let (bn, bd) = (*b.numer(), *b.denom());
    let n = an.checked_mul(bd)?;
    let d = ad.checked_mul(bn)?;
    if d == 0 {
        return None;
    }
    Some(Rat::new(n, d))
}

fn rat_f64(r: Rat) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Num {}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Num::Exact(a, b), Num::Exact(c, d)) => a.cmp(c).then(b.cmp(d)),
            _ => {
                let (ka, ra, ia) = self.sort_key();
                let (kb, rb, ib) = other.sort_key();
                ka.cmp(&kb).then(ra.total_cmp(&rb)).then(ia.total_cmp(&ib))
            }
        }
    }
}

impl std::hash::Hash for Num {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            Num::Exact(a, b) => {
                0u8.hash(state);
                a.hash(state);
                b.hash(state);
            }
            Num::Float(z) => {
                1u8.hash(state);
                z.re.to_bits().hash(state);
                z.im.to_bits().hash(state);
            }
        }
    }
}

fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_f64(v: f64) -> String {
    let s = format!("{v:?}");
    s
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(re, im) => {
                if im.is_zero() {
                    write!(f, "{}", fmt_rat(re))
                } else if re.is_zero() {
                    if im.is_one() {
                        write!(f, "i")
                    } else if (-*im).is_one() {
                        write!(f, "-i")
                    } else {
                        write!(f, "{}*i", fmt_rat(im))
                    }
                } else {
                    let sign = if im.is_negative() { "-" } else { "+" };
                    write!(f, "({}{}{}*i)", fmt_rat(re), sign, fmt_rat(&im.abs()))
                }
            }
            Num::Float(z) => {
                if z.im == 0.0 {
                    write!(f, "{}", fmt_f64(z.re))
                } else if z.re == 0.0 {
                    write!(f, "{}*i", fmt_f64(z.im))
                } else {
                    let sign = if z.im < 0.0 { "-" } else { "+" };
                    write!(f, "({}{}{}*i)", fmt_f64(z.re), sign, fmt_f64(z.im.abs()))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic() {
        let a = Num::rat(1, 2);
        let b = Num::I;
        let p = a.mul(b).add(Num::rat(1, 2));
        assert_eq!(p, Num::Exact(Rat::new(1, 2), Rat::new(1, 2)));
        assert_eq!(Num::I.mul(Num::I), Num::int(-1));
        assert_eq!(Num::I.recip().unwrap(), Num::I.neg());
    }

    #[test]
    fn overflow_falls_back_to_float() {
        let big = Num::int(i64::MAX / 2);
        let p = big.mul(big);
        assert!(!p.is_exact());
    }

    #[test]
    fn decimal_parse() {
        assert_eq!(Num::parse_decimal("0.25").unwrap(), Num::rat(1, 4));
        assert_eq!(Num::parse_decimal("12").unwrap(), Num::int(12));
        assert!(!Num::parse_decimal("1e-3").unwrap().is_exact());
    }
}
