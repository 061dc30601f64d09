//! Exact rational scalars, affine functions of the parameter, and
//! first-order symbolic perturbations.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number. Always stored in lowest terms with a positive
/// denominator.
pub type Rat = BigRational;

pub fn int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// `num / den`, reduced. Panics on a zero denominator.
pub fn frac(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed rational `{text}`: {reason}")]
pub struct RatParseError {
    pub text: String,
    pub reason: &'static str,
}

fn bad(text: &str, reason: &'static str) -> RatParseError {
    RatParseError { text: text.to_string(), reason }
}

fn parse_digits(text: &str, digits: &str) -> Result<BigInt, RatParseError> {
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad(text, "expected decimal digits"));
    }
    Ok(digits.parse::<BigInt>().expect("validated digits"))
}

/// Parses an integer (`-3`), a finite decimal (`0.25`, `-1.5e-3`) or a
/// fraction (`-1/3`). Decimals are converted exactly.
pub fn parse_rat(text: &str) -> Result<Rat, RatParseError> {
    let s = text.trim();
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        Some(_) => (false, s),
        None => return Err(bad(text, "empty")),
    };

    let value = if let Some((num, den)) = body.split_once('/') {
        let num = parse_digits(text, num)?;
        let den = parse_digits(text, den)?;
        if den.is_zero() {
            return Err(bad(text, "zero denominator"));
        }
        Rat::new(num, den)
    } else {
        let (mantissa, exponent) = match body.find(['e', 'E']) {
            Some(pos) => {
                let exp: i32 = body[pos + 1..].parse().map_err(|_| bad(text, "bad exponent"))?;
                (&body[..pos], exp)
            }
            None => (body, 0),
        };
        let (whole, fraction) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if whole.is_empty() && fraction.is_empty() {
            return Err(bad(text, "expected decimal digits"));
        }
        let all_digits = format!("{whole}{fraction}");
        let digits = parse_digits(text, &all_digits)?;
        let scale = exponent - fraction.len() as i32;
        if scale.unsigned_abs() > 10_000 {
            return Err(bad(text, "exponent out of range"));
        }
        let pow = num_traits::pow(BigInt::from(10), scale.unsigned_abs() as usize);
        if scale >= 0 {
            Rat::from_integer(digits * pow)
        } else {
            Rat::new(digits, pow)
        }
    };
    Ok(if negative { -value } else { value })
}

/// Renders `p/q`, or just `p` for integers.
pub fn fmt_rat(r: &Rat) -> String {
    r.to_string()
}

/// Comma-joined exact rendering of a vector.
pub fn fmt_vec(v: &[Rat]) -> String {
    v.iter().map(fmt_rat).collect::<Vec<_>>().join(",")
}

fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

/// Rounds `r` to the nearest integer, ties to even.
fn round_half_even(r: &Rat) -> BigInt {
    let floor = r.floor().to_integer();
    let rem = r - Rat::from_integer(floor.clone());
    let half = frac(1, 2);
    match rem.cmp(&half) {
        Ordering::Less => floor,
        Ordering::Greater => floor + 1,
        Ordering::Equal => {
            if floor.is_even() {
                floor
            } else {
                floor + 1
            }
        }
    }
}

/// Decimal rendering with `sig` significant digits, round-half-even, trailing
/// zeros trimmed. Scientific notation is used only for very large or very
/// small magnitudes.
pub fn to_decimal(r: &Rat, sig: u32) -> String {
    let sig = sig.max(1);
    if r.is_zero() {
        return "0".to_string();
    }
    let abs = r.abs();
    // exponent e with 10^e <= |r| < 10^(e+1)
    let mut e: i64 = abs.numer().to_string().len() as i64 - abs.denom().to_string().len() as i64;
    let ten_pow = |k: i64| -> Rat {
        if k >= 0 {
            Rat::from_integer(pow10(k as u32))
        } else {
            Rat::new(BigInt::one(), pow10((-k) as u32))
        }
    };
    while ten_pow(e) > abs {
        e -= 1;
    }
    while ten_pow(e + 1) <= abs {
        e += 1;
    }
    let shift = sig as i64 - 1 - e;
    let mut digits = round_half_even(&(&abs * ten_pow(shift)));
    if digits >= pow10(sig) {
        digits /= 10;
        e += 1;
    }
    let shift = sig as i64 - 1 - e;
    let mut s = digits.to_string();
    let sign = if r.is_negative() { "-" } else { "" };

    if !(-7..=15).contains(&e) {
        let (head, tail) = s.split_at(1);
        let tail = tail.trim_end_matches('0');
        return if tail.is_empty() { format!("{sign}{head}e{e}") } else { format!("{sign}{head}.{tail}e{e}") };
    }
    if shift <= 0 {
        s.push_str(&"0".repeat((-shift) as usize));
        return format!("{sign}{s}");
    }
    let shift = shift as usize;
    if s.len() <= shift {
        s = format!("{}{}", "0".repeat(shift - s.len() + 1), s);
    }
    let (int_part, frac_part) = s.split_at(s.len() - shift);
    let frac_part = frac_part.trim_end_matches('0');
    if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// `constant + μ·slope`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AffineScalar {
    pub constant: Rat,
    pub slope: Rat,
}

impl AffineScalar {
    pub fn new(constant: Rat, slope: Rat) -> Self {
        Self { constant, slope }
    }

    pub fn constant(constant: Rat) -> Self {
        Self { constant, slope: Rat::zero() }
    }

    pub fn eval(&self, mu: &Rat) -> Rat {
        &self.constant + mu * &self.slope
    }
}

impl std::ops::Neg for AffineScalar {
    type Output = AffineScalar;

    fn neg(self) -> AffineScalar {
        AffineScalar { constant: -self.constant, slope: -self.slope }
    }
}

impl fmt::Display for AffineScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}μ", self.constant, self.slope)
    }
}

/// Sign of `s + εt` for an arbitrarily small ε > 0.
pub fn eps_sign(s: &Rat, t: &Rat) -> Ordering {
    if !s.is_zero() {
        s.cmp(&Rat::zero())
    } else {
        t.cmp(&Rat::zero())
    }
}

/// A vector of first-order perturbed values `s + εt`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpsVector {
    pub s: Vec<Rat>,
    pub t: Vec<Rat>,
}

impl EpsVector {
    pub fn new(s: Vec<Rat>, t: Vec<Rat>) -> Self {
        assert_eq!(s.len(), t.len(), "EpsVector parts differ in length");
        Self { s, t }
    }

    /// Unperturbed vector (t = 0).
    pub fn exact(s: Vec<Rat>) -> Self {
        let t = vec![Rat::zero(); s.len()];
        Self { s, t }
    }

    /// `q(μ + ε)` for an affine vector `q`.
    pub fn at(q: &[AffineScalar], mu: &Rat) -> Self {
        Self { s: q.iter().map(|a| a.eval(mu)).collect(), t: q.iter().map(|a| a.slope.clone()).collect() }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn sign(&self, j: usize) -> Ordering {
        eps_sign(&self.s[j], &self.t[j])
    }

    pub fn is_negative(&self, j: usize) -> bool {
        self.sign(j) == Ordering::Less
    }

    pub fn is_nonneg(&self, j: usize) -> bool {
        self.sign(j) != Ordering::Less
    }

    pub fn all_nonneg(&self) -> bool {
        (0..self.len()).all(|j| self.is_nonneg(j))
    }
}
