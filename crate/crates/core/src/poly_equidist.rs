//! Polynomials modulo 1: smoothness norms, the Vinogradov search for a small
//! multiple that is nearly constant, and dilation profiles.
//!
//! Values mod 1 are computed exactly for the coefficients as given. A double
//! `c = m 2^e` times an integer `B` has fractional part `(m B mod 2^{-e}) / 2^{-e}`,
//! and a rational `p/q` times `B` has fractional part `(p B mod q)/q`; neither
//! needs a floating-point product of large numbers, so finite differences of
//! high order do not lose the phase.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Highest supported degree.
pub const MAX_DEGREE: usize = 8;

/// Above this many integer points the smoothness scan strides and is flagged approximate.
pub const EXACT_SCAN_LIMIT: u64 = 1 << 16;

/// `‖x‖_{R/Z}`.
pub fn dist_r_over_z(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// The half-open real interval `(lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return invalid(format!("interval ({lo}, {hi}] is empty or not finite"));
        }
        Ok(Interval { lo, hi })
    }

    /// The integers `a..=b`, as `(a-1, b]`.
    pub fn integers(a: i64, b: i64) -> Interval {
        Interval { lo: (a - 1) as f64, hi: b as f64 }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// First and last integer inside; `None` if there are none.
    pub fn int_range(&self) -> Option<(i64, i64)> {
        let a = self.lo.floor() as i64 + 1;
        let b = self.hi.floor() as i64;
        (a <= b).then_some((a, b))
    }

    pub fn scaled_down(&self, a: i64) -> Interval {
        let (x, y) = (self.lo / a as f64, self.hi / a as f64);
        Interval { lo: x.min(y), hi: x.max(y) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// `sum ν_j (n - center)^j`
    Monomial,
    /// `sum α_j binom(n - center, j)`
    Binomial,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coeffs {
    Float(Vec<f64>),
    Rational(Vec<Ratio<i64>>),
}

impl Coeffs {
    fn len(&self) -> usize {
        match self {
            Coeffs::Float(v) => v.len(),
            Coeffs::Rational(v) => v.len(),
        }
    }
}

/// A polynomial of degree at most 8, read modulo 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct PolyMod1 {
    pub center: i64,
    pub basis: Basis,
    pub coeffs: Coeffs,
}

impl PolyMod1 {
    pub fn new(center: i64, basis: Basis, coeffs: Coeffs) -> Result<PolyMod1> {
        if coeffs.len() > MAX_DEGREE + 1 {
            return invalid(format!("degree {} exceeds the cap of {MAX_DEGREE}", coeffs.len() - 1));
        }
        if let Coeffs::Float(v) = &coeffs {
            if v.iter().any(|c| !c.is_finite()) {
                return invalid("coefficients must be finite");
            }
        }
        Ok(PolyMod1 { center, basis, coeffs })
    }

    pub fn float(center: i64, basis: Basis, coeffs: Vec<f64>) -> Result<PolyMod1> {
        PolyMod1::new(center, basis, Coeffs::Float(coeffs))
    }

    pub fn rational(center: i64, basis: Basis, coeffs: Vec<Ratio<i64>>) -> Result<PolyMod1> {
        PolyMod1::new(center, basis, Coeffs::Rational(coeffs))
    }

    pub fn zero() -> PolyMod1 {
        PolyMod1 { center: 0, basis: Basis::Binomial, coeffs: Coeffs::Rational(vec![Ratio::zero()]) }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.coeffs, Coeffs::Rational(_))
    }

    /// Same polynomial in the binomial basis about the same center.
    pub fn to_binomial(&self) -> PolyMod1 {
        if self.basis == Basis::Binomial {
            return self.clone();
        }
        // (n-c)^j = sum_i S(j,i) i! binom(n-c, i)
        let d = self.degree();
        let coeffs = match &self.coeffs {
            Coeffs::Float(v) => Coeffs::Float(
                (0..=d)
                    .map(|i| (i..=d).map(|j| v[j] * (stirling2(j, i) * factorial(i)) as f64).sum())
                    .collect(),
            ),
            Coeffs::Rational(v) => Coeffs::Rational(
                (0..=d)
                    .map(|i| {
                        (i..=d).fold(Ratio::zero(), |acc, j| acc + v[j] * Ratio::from_integer((stirling2(j, i) * factorial(i)) as i64))
                    })
                    .collect(),
            ),
        };
        PolyMod1 { center: self.center, basis: Basis::Binomial, coeffs }
    }

    /// Same polynomial in the monomial basis about the same center.
    pub fn to_monomial(&self) -> PolyMod1 {
        if self.basis == Basis::Monomial {
            return self.clone();
        }
        // binom(m, j) = (1/j!) sum_i s(j,i) m^i
        let d = self.degree();
        let coeffs = match &self.coeffs {
            Coeffs::Float(v) => Coeffs::Float(
                (0..=d)
                    .map(|i| (i..=d).map(|j| v[j] * stirling1(j, i) as f64 / factorial(j) as f64).sum())
                    .collect(),
            ),
            Coeffs::Rational(v) => Coeffs::Rational(
                (0..=d)
                    .map(|i| {
                        (i..=d).fold(Ratio::zero(), |acc, j| acc + v[j] * Ratio::new(stirling1(j, i) as i64, factorial(j) as i64))
                    })
                    .collect(),
            ),
        };
        PolyMod1 { center: self.center, basis: Basis::Monomial, coeffs }
    }

    /// Moves the center, staying in the binomial basis.
    pub fn recentered(&self, center: i64) -> PolyMod1 {
        let b = self.to_binomial();
        let s = center - self.center;
        // binom(m + s, i) = sum_k binom(s, i-k) binom(m, k),  m = n - center
        let d = b.degree();
        let w = |i: usize, k: usize| -> i128 { binom_i128(s, (i - k) as u32).expect("recentering overflow") };
        let coeffs = match &b.coeffs {
            Coeffs::Float(v) => Coeffs::Float((0..=d).map(|k| (k..=d).map(|i| v[i] * w(i, k) as f64).sum()).collect()),
            Coeffs::Rational(v) => Coeffs::Rational(
                (0..=d).map(|k| (k..=d).fold(Ratio::zero(), |acc, i| acc + v[i] * Ratio::from_integer(w(i, k) as i64))).collect(),
            ),
        };
        PolyMod1 { center, basis: Basis::Binomial, coeffs }
    }

    /// `q P`. Exact for rational coefficients.
    pub fn scaled(&self, q: i64) -> PolyMod1 {
        let coeffs = match &self.coeffs {
            Coeffs::Float(v) => Coeffs::Float(v.iter().map(|c| c * q as f64).collect()),
            Coeffs::Rational(v) => Coeffs::Rational(v.iter().map(|c| c * q).collect()),
        };
        PolyMod1 { coeffs, ..self.clone() }
    }

    /// `P + Q`, about the center of `self`.
    pub fn add(&self, other: &PolyMod1) -> PolyMod1 {
        let a = self.to_binomial();
        let b = other.recentered(self.center);
        let d = a.degree().max(b.degree());
        let coeffs = match (&a.coeffs, &b.coeffs) {
            (Coeffs::Rational(x), Coeffs::Rational(y)) => Coeffs::Rational(
                (0..=d)
                    .map(|i| x.get(i).copied().unwrap_or_else(Ratio::zero) + y.get(i).copied().unwrap_or_else(Ratio::zero))
                    .collect(),
            ),
            _ => {
                let (x, y) = (a.float_coeffs(), b.float_coeffs());
                Coeffs::Float((0..=d).map(|i| x.get(i).unwrap_or(&0.0) + y.get(i).unwrap_or(&0.0)).collect())
            }
        };
        PolyMod1 { center: self.center, basis: Basis::Binomial, coeffs }
    }

    pub fn float_coeffs(&self) -> Vec<f64> {
        match &self.coeffs {
            Coeffs::Float(v) => v.clone(),
            Coeffs::Rational(v) => v.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect(),
        }
    }

    /// `n -> P(a n)`, re-centered at `round(center / a)`.
    pub fn dilate(&self, a: i64) -> Result<PolyMod1> {
        if a == 0 {
            return invalid("dilation factor must be nonzero");
        }
        let m = self.to_monomial();
        let c2 = div_round(self.center, a);
        let r = a * c2 - self.center;
        // (a m + r)^j = sum_i binom(j,i) a^i r^{j-i} m^i
        let d = m.degree();
        let w = |j: usize, i: usize| -> i128 {
            binom_i128(j as i64, i as u32).unwrap() * (a as i128).pow(i as u32) * (r as i128).pow((j - i) as u32)
        };
        let coeffs = match &m.coeffs {
            Coeffs::Float(v) => Coeffs::Float((0..=d).map(|i| (i..=d).map(|j| v[j] * w(j, i) as f64).sum()).collect()),
            Coeffs::Rational(v) => Coeffs::Rational(
                (0..=d)
                    .map(|i| {
                        (i..=d).try_fold(Ratio::zero(), |acc, j| {
                            let wi = i64::try_from(w(j, i)).ok()?;
                            Some(acc + v[j] * Ratio::from_integer(wi))
                        })
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::InvalidInput("dilation overflows rational coefficients".into()))?,
            ),
        };
        PolyMod1::new(c2, Basis::Monomial, coeffs)
    }

    /// `P(n) mod 1` in `[0, 1)`.
    pub fn frac_at(&self, n: i64) -> f64 {
        Evaluator::new(self, 1).frac(0, n)
    }

    /// `P(n)` as an ordinary real (loses the phase for large values).
    pub fn value_at(&self, n: i64) -> f64 {
        let b = self.to_binomial();
        let v = b.float_coeffs();
        (0..v.len()).map(|i| v[i] * binom_f64(n - b.center, i as u32)).sum()
    }
}

fn div_round(c: i64, a: i64) -> i64 {
    let (q, r) = c.div_mod_floor(&a);
    if 2 * r.abs() >= a.abs() {
        if (r > 0) == (a > 0) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    basis: Basis,
    center: i64,
    coeffs: Vec<CoeffJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffJson {
    Float(f64),
    Rational(String),
}

impl From<PolyMod1> for PolyJson {
    fn from(p: PolyMod1) -> PolyJson {
        let coeffs = match p.coeffs {
            Coeffs::Float(v) => v.into_iter().map(CoeffJson::Float).collect(),
            Coeffs::Rational(v) => v.into_iter().map(|r| CoeffJson::Rational(format!("{}/{}", r.numer(), r.denom()))).collect(),
        };
        PolyJson { basis: p.basis, center: p.center, coeffs }
    }
}

impl TryFrom<PolyJson> for PolyMod1 {
    type Error = Error;
    fn try_from(j: PolyJson) -> Result<PolyMod1> {
        let all_rational = j.coeffs.iter().all(|c| matches!(c, CoeffJson::Rational(_)));
        let coeffs = if all_rational && !j.coeffs.is_empty() {
            Coeffs::Rational(j.coeffs.iter().map(|c| parse_ratio(c)).collect::<Result<_>>()?)
        } else {
            Coeffs::Float(
                j.coeffs
                    .iter()
                    .map(|c| match c {
                        CoeffJson::Float(x) => Ok(*x),
                        CoeffJson::Rational(_) => parse_ratio(c).map(|r| *r.numer() as f64 / *r.denom() as f64),
                    })
                    .collect::<Result<_>>()?,
            )
        };
        PolyMod1::new(j.center, j.basis, coeffs)
    }
}

fn parse_ratio(c: &CoeffJson) -> Result<Ratio<i64>> {
    let CoeffJson::Rational(s) = c else { unreachable!() };
    let bad = || Error::Parse(format!("bad rational coefficient `{s}`"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
        None => (s.trim().parse().map_err(|_| bad())?, 1i64),
    };
    if q == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(p, q))
}

fn factorial(n: usize) -> i128 {
    (1..=n as i128).product()
}

fn stirling2(n: usize, k: usize) -> i128 {
    let mut t = vec![vec![0i128; n + 1]; n + 1];
    t[0][0] = 1;
    for i in 1..=n {
        for j in 1..=i {
            t[i][j] = j as i128 * t[i - 1][j] + t[i - 1][j - 1];
        }
    }
    if k > n {
        0
    } else {
        t[n][k]
    }
}

/// Signed Stirling numbers of the first kind.
fn stirling1(n: usize, k: usize) -> i128 {
    let mut t = vec![vec![0i128; n + 1]; n + 1];
    t[0][0] = 1;
    for i in 1..=n {
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] - (i as i128 - 1) * t[i - 1][j];
        }
    }
    if k > n {
        0
    } else {
        t[n][k]
    }
}

/// `binom(n, r)` for any integer `n`, `None` on overflow.
pub fn binom_i128(n: i64, r: u32) -> Option<i128> {
    if n < 0 {
        let v = binom_i128(r as i64 - 1 - n, r)?;
        return Some(if r % 2 == 0 { v } else { -v });
    }
    if (n as u64) < r as u64 {
        return Some(0);
    }
    let mut b: i128 = 1;
    for k in 0..r as i128 {
        b = b.checked_mul(n as i128 - k)? / (k + 1);
    }
    Some(b)
}

fn binom_big(n: i64, r: u32) -> BigInt {
    if n < 0 {
        let v = binom_big(r as i64 - 1 - n, r);
        return if r % 2 == 0 { v } else { -v };
    }
    if (n as u64) < r as u64 {
        return BigInt::zero();
    }
    let mut b = BigInt::one();
    for k in 0..r as i64 {
        b = b * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    b
}

fn binom_f64(n: i64, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, k| acc * (n - k as i64) as f64 / (k + 1) as f64)
}

/// An integer that usually fits in 128 bits.
enum Int {
    Small(i128),
    Big(BigInt),
}

fn scaled_binom(mult: i64, n: i64, r: u32) -> Int {
    match binom_i128(n, r).and_then(|b| b.checked_mul(mult as i128)) {
        Some(v) => Int::Small(v),
        None => Int::Big(binom_big(n, r) * BigInt::from(mult)),
    }
}

/// Fractional part of `c * b` in `[0, 1)`, exact up to one final rounding.
fn frac_mul(c: f64, b: &Int) -> f64 {
    let bf = match b {
        Int::Small(v) => *v as f64,
        Int::Big(v) => v.to_f64().unwrap_or(f64::INFINITY),
    };
    if c == 0.0 || bf == 0.0 {
        return 0.0;
    }
    let approx = c * bf;
    if approx.abs() < 0.5 {
        return if approx >= 0.0 { approx } else { 1.0 + approx };
    }
    let (m, e) = decompose(c.abs());
    if e >= 0 {
        return 0.0;
    }
    let s = (-e) as u32;
    let negative = (c < 0.0) != (bf < 0.0);
    let f = match b {
        Int::Small(v) if s <= 64 => {
            let mask: u128 = if s == 128 { u128::MAX } else { (1u128 << s) - 1 };
            let bm = v.unsigned_abs() & mask;
            let r = ((m as u128) * bm) & mask;
            r as f64 / 2f64.powi(s as i32)
        }
        _ => {
            let big = match b {
                Int::Small(v) => BigUint::from(v.unsigned_abs()),
                Int::Big(v) => v.magnitude().clone(),
            };
            let modulus = BigUint::one() << s;
            let r = (BigUint::from(m) * (big % &modulus)) % &modulus;
            ratio_to_f64(&r, s)
        }
    };
    if negative && f > 0.0 {
        1.0 - f
    } else {
        f
    }
}

fn ratio_to_f64(r: &BigUint, s: u32) -> f64 {
    // r / 2^s with r < 2^s, keeping 64 leading bits
    if s <= 64 {
        return r.to_f64().unwrap() / 2f64.powi(s as i32);
    }
    let top = (r >> (s - 64)).to_u64().unwrap();
    top as f64 / 2f64.powi(64)
}

/// `x = m 2^e` with integer `m < 2^53`.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

/// Evaluates `mult * ∂^j P(n) mod 1` for a fixed polynomial.
struct Evaluator {
    center: i64,
    mult: i64,
    kind: EvalKind,
}

enum EvalKind {
    Float(Vec<f64>),
    /// numerators over a common denominator that fits in 62 bits
    SmallRat { q: u64, num: Vec<u64> },
    BigRat { q: BigInt, num: Vec<BigInt> },
}

impl Evaluator {
    fn new(p: &PolyMod1, mult: i64) -> Evaluator {
        let b = p.to_binomial();
        let kind = match &b.coeffs {
            Coeffs::Float(v) => EvalKind::Float(v.clone()),
            Coeffs::Rational(v) => {
                let q = v.iter().fold(BigInt::one(), |acc, r| acc.lcm(&BigInt::from(*r.denom())));
                let num: Vec<BigInt> = v.iter().map(|r| BigInt::from(*r.numer()) * (&q / BigInt::from(*r.denom()))).collect();
                match q.to_u64().filter(|&q| q < 1 << 62) {
                    Some(qs) => EvalKind::SmallRat {
                        q: qs,
                        num: num.iter().map(|x| x.mod_floor(&q).to_u64().unwrap()).collect(),
                    },
                    None => EvalKind::BigRat { q, num },
                }
            }
        };
        Evaluator { center: b.center, mult, kind }
    }

    fn degree(&self) -> usize {
        match &self.kind {
            EvalKind::Float(v) => v.len().saturating_sub(1),
            EvalKind::SmallRat { num, .. } => num.len().saturating_sub(1),
            EvalKind::BigRat { num, .. } => num.len().saturating_sub(1),
        }
    }

    /// `mult * ∂^j P(n)` mod 1, using `∂^j binom(n-c, i) = binom(n-c-j, i-j)`.
    fn frac(&self, j: usize, n: i64) -> f64 {
        let base = n - self.center - j as i64;
        match &self.kind {
            EvalKind::Float(v) => {
                let mut acc = 0.0;
                for (i, &c) in v.iter().enumerate().skip(j) {
                    acc += frac_mul(c, &scaled_binom(self.mult, base, (i - j) as u32));
                }
                acc - acc.floor()
            }
            EvalKind::SmallRat { q, num } => {
                let q = *q as u128;
                let mut acc: u128 = 0;
                for (i, &a) in num.iter().enumerate().skip(j) {
                    if a == 0 {
                        continue;
                    }
                    let b = match scaled_binom(self.mult, base, (i - j) as u32) {
                        Int::Small(v) => v.rem_euclid(q as i128) as u128,
                        Int::Big(v) => v.mod_floor(&BigInt::from(q)).to_u128().unwrap(),
                    };
                    acc = (acc + a as u128 * b) % q;
                }
                acc as f64 / q as f64
            }
            EvalKind::BigRat { q, num } => {
                let mut acc = BigInt::zero();
                for (i, a) in num.iter().enumerate().skip(j) {
                    let b = match scaled_binom(self.mult, base, (i - j) as u32) {
                        Int::Small(v) => BigInt::from(v),
                        Int::Big(v) => v,
                    };
                    acc = (acc + a * b).mod_floor(q);
                }
                BigRational::new(acc, q.clone()).to_f64().unwrap()
            }
        }
    }

    fn dist(&self, j: usize, n: i64) -> f64 {
        let f = self.frac(j, n);
        f.min(1.0 - f)
    }
}

/// Result of a smoothness-norm scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    /// True when the scan strided over the integers of `I` instead of visiting all.
    pub approximate: bool,
}

/// `‖P‖_{C^∞(I)} = sup_{0<=j<=d} sup_{n∈I} |I|^j ‖∂^j P(n)‖`.
pub fn smoothness_norm(p: &PolyMod1, i: &Interval) -> f64 {
    smoothness_norm_report(p, i).value
}

pub fn smoothness_norm_report(p: &PolyMod1, i: &Interval) -> NormReport {
    norm_of_multiple(p, 1, i, f64::INFINITY)
}

/// Norm of `mult * P`, stopping early once it is known to exceed `bound`.
fn norm_of_multiple(p: &PolyMod1, mult: i64, i: &Interval, bound: f64) -> NormReport {
    let ev = Evaluator::new(p, mult);
    let Some((a, b)) = i.int_range() else {
        return NormReport { value: 0.0, approximate: false };
    };
    let count = (b - a + 1) as u64;
    let (stride, approximate) = if count > EXACT_SCAN_LIMIT {
        (count.div_ceil(EXACT_SCAN_LIMIT) as i64, true)
    } else {
        (1, false)
    };
    let pts: Vec<i64> = (0..count as i64)
        .step_by(stride as usize)
        .map(|k| a + k)
        .chain(std::iter::once(b))
        .collect();
    let len = i.len();
    let d = ev.degree();
    let mut best: f64 = 0.0;
    for j in (0..=d).rev() {
        let scale = len.powi(j as i32);
        let sup = if j == d {
            // the top difference is constant
            ev.dist(j, a)
        } else if pts.len() > 4096 {
            pts.par_iter().map(|&n| ev.dist(j, n)).reduce(|| 0.0, f64::max)
        } else {
            pts.iter().map(|&n| ev.dist(j, n)).fold(0.0, f64::max)
        };
        best = best.max(scale * sup);
        if best > bound {
            break;
        }
    }
    NormReport { value: best, approximate }
}

/// Smallest `1 <= q <= q_max` with `‖qP‖_{C^∞(I)} <= tol`, with that norm.
pub fn vinogradov_search(p: &PolyMod1, i: &Interval, q_max: u64, tol: f64) -> Result<Option<(u64, f64)>> {
    if q_max < 1 {
        return invalid("q_max must be at least 1");
    }
    for q in 1..=q_max {
        let r = norm_of_multiple(p, q as i64, i, tol);
        if r.value <= tol {
            return Ok(Some((q, r.value)));
        }
    }
    Ok(None)
}

/// `#{n ∈ I : ‖P(n)‖ <= eps} / |I|`.
pub fn fraction_small(p: &PolyMod1, i: &Interval, eps: f64) -> f64 {
    let ev = Evaluator::new(p, 1);
    let Some((a, b)) = i.int_range() else {
        return 0.0;
    };
    let hits = (a..=b).into_par_iter().filter(|&n| ev.dist(0, n) <= eps).count();
    hits as f64 / i.len()
}

/// Fraction of `a ∈ [A, 2A]` with `‖P(a·)‖_{C^∞(I/a)} <= threshold`.
pub fn smooth_dilate_profile(p: &PolyMod1, big_a: u64, i: &Interval, threshold: f64) -> Result<f64> {
    if big_a < 1 {
        return invalid("A must be at least 1");
    }
    if i.len() < 2.0 * big_a as f64 {
        return invalid("the interval must have length at least 2A");
    }
    let hits = (big_a..=2 * big_a)
        .into_par_iter()
        .map(|a| -> Result<bool> {
            let pa = p.dilate(a as i64)?;
            Ok(norm_of_multiple(&pa, 1, &i.scaled_down(a as i64), threshold).value <= threshold)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / (big_a + 1) as f64)
}
