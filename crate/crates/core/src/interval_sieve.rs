//! Segmented sieving on short intervals `(X, X+H]`.
//!
//! Every integer of the interval is fully factored by the primes up to
//! `sqrt(X+H)`; whatever cofactor survives is a single large prime. The
//! arithmetic functions are then read off the factorizations.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{binomial, iroot, primes_up_to};
use crate::error::{invalid, Error, Result};

/// Largest admissible `X + H`; beyond it doubles stop representing every integer.
pub const MAX_END: u64 = 1 << 52;

/// Default number of entries handled per segment.
pub const SEGMENT: usize = 1 << 20;

/// Which function a slab holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Kind {
    Mu,
    LambdaVm,
    Dk(u32),
    Liouville,
    R2,
    PrimeInd,
    RoughInd(u64, u64),
    LambdaSharp,
    LambdaSharpI,
    LambdaW,
    DkSharp,
    Custom(String),
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Mu => write!(f, "mu"),
            Kind::LambdaVm => write!(f, "lambda_vm"),
            Kind::Dk(k) => write!(f, "d_k({k})"),
            Kind::Liouville => write!(f, "liouville"),
            Kind::R2 => write!(f, "r2"),
            Kind::PrimeInd => write!(f, "prime_ind"),
            Kind::RoughInd(p, q) => write!(f, "rough_ind({p},{q})"),
            Kind::LambdaSharp => write!(f, "lambda_sharp"),
            Kind::LambdaSharpI => write!(f, "lambda_sharp_I"),
            Kind::LambdaW => write!(f, "lambda_w"),
            Kind::DkSharp => write!(f, "dk_sharp"),
            Kind::Custom(s) => write!(f, "custom:{s}"),
        }
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Kind> {
        let s = s.trim();
        let args = |s: &str, head: &str| -> Option<Vec<u64>> {
            let inner = s.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')?;
            inner.split(',').map(|t| t.trim().parse().ok()).collect()
        };
        Ok(match s {
            "mu" => Kind::Mu,
            "lambda_vm" | "lambda" => Kind::LambdaVm,
            "liouville" => Kind::Liouville,
            "r2" => Kind::R2,
            "prime_ind" => Kind::PrimeInd,
            "lambda_sharp" => Kind::LambdaSharp,
            "lambda_sharp_I" => Kind::LambdaSharpI,
            "lambda_w" => Kind::LambdaW,
            "dk_sharp" => Kind::DkSharp,
            "d2" => Kind::Dk(2),
            _ => {
                if let Some(c) = s.strip_prefix("custom:") {
                    Kind::Custom(c.to_string())
                } else if let Some(v) = args(s, "d_k").filter(|v| v.len() == 1) {
                    Kind::Dk(v[0] as u32)
                } else if let Some(v) = args(s, "rough_ind").filter(|v| v.len() == 2) {
                    Kind::RoughInd(v[0], v[1])
                } else {
                    return Err(Error::Parse(format!("unknown function tag `{s}`")));
                }
            }
        })
    }
}

impl From<Kind> for String {
    fn from(k: Kind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for Kind {
    type Error = Error;
    fn try_from(s: String) -> Result<Kind> {
        s.parse()
    }
}

/// Values of one function on `(X, X+H]`; `values[i]` belongs to `n = X+1+i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSlab {
    pub x: u64,
    pub h: u64,
    pub kind: Kind,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    #[serde(rename = "X")]
    x: u64,
    #[serde(rename = "H")]
    h: u64,
    kind: Kind,
}

impl IntervalSlab {
    pub fn new(x: u64, h: u64, kind: Kind, values: Vec<f64>) -> Result<IntervalSlab> {
        check_range(x, h)?;
        if values.len() as u64 != h {
            return invalid(format!("{} values for H = {h}", values.len()));
        }
        Ok(IntervalSlab { x, h, kind, values })
    }

    pub fn from_fn(x: u64, h: u64, kind: Kind, f: impl Fn(u64) -> f64) -> Result<IntervalSlab> {
        check_range(x, h)?;
        let values = (x + 1..=x + h).map(f).collect();
        Ok(IntervalSlab { x, h, kind, values })
    }

    pub fn n(&self, i: usize) -> u64 {
        self.x + 1 + i as u64
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.n(i), v))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Pointwise difference, for `f - f#` style comparisons.
    pub fn minus(&self, other: &IntervalSlab) -> Result<IntervalSlab> {
        if self.x != other.x || self.h != other.h {
            return Err(Error::RangeMismatch(format!(
                "({}, {}] vs ({}, {}]",
                self.x,
                self.x + self.h,
                other.x,
                other.x + other.h
            )));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(IntervalSlab {
            x: self.x,
            h: self.h,
            kind: Kind::Custom(format!("{}-{}", self.kind, other.kind)),
            values,
        })
    }

    /// Writes `n,value` rows to `path` and `{X,H,kind}` to `path.json`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "n,value")?;
        for (n, v) in self.iter() {
            writeln!(w, "{n},{v:?}")?;
        }
        w.flush()?;
        let side = Sidecar { x: self.x, h: self.h, kind: self.kind.clone() };
        let json = serde_json::to_string(&side).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(sidecar_path(path), json)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<IntervalSlab> {
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)
            .map_err(|e| Error::Parse(e.to_string()))?;
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut values = Vec::with_capacity(side.h as usize);
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                if line.trim() != "n,value" {
                    return Err(Error::Parse(format!("bad header `{line}`")));
                }
                continue;
            }
            let (n, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: `{line}`", lineno + 1)))?;
            let n: u64 = n.trim().parse().map_err(|_| Error::Parse(format!("bad n `{n}`")))?;
            if n != side.x + lineno as u64 {
                return Err(Error::Parse(format!("line {}: expected n = {}", lineno + 1, side.x + lineno as u64)));
            }
            values.push(v.trim().parse().map_err(|_| Error::Parse(format!("bad value `{v}`")))?);
        }
        IntervalSlab::new(side.x, side.h, side.kind, values)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

pub(crate) fn check_range(x: u64, h: u64) -> Result<()> {
    if h < 1 {
        return invalid("H must be at least 1");
    }
    match x.checked_add(h) {
        Some(e) if e <= MAX_END => Ok(()),
        _ => invalid(format!("X + H exceeds 2^52 (X = {x}, H = {h})")),
    }
}

/// Exact factorizations of every `n` in `(X, X+H]`, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredInterval {
    pub x: u64,
    pub h: u64,
    offsets: Vec<u32>,
    primes: Vec<u64>,
    exps: Vec<u8>,
}

impl FactoredInterval {
    pub fn n(&self, i: usize) -> u64 {
        self.x + 1 + i as u64
    }

    pub fn len(&self) -> usize {
        self.h as usize
    }

    pub fn is_empty(&self) -> bool {
        self.h == 0
    }

    /// `(p, e)` pairs of `n = X+1+i` in increasing order of `p`.
    pub fn factors(&self, i: usize) -> impl Iterator<Item = (u64, u32)> + '_ {
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        self.primes[a..b].iter().zip(&self.exps[a..b]).map(|(&p, &e)| (p, e as u32))
    }

    pub fn factor_vec(&self, i: usize) -> Vec<(u64, u32)> {
        self.factors(i).collect()
    }

    /// Evaluates a multiplicative-style function given each factorization.
    pub fn map(&self, kind: Kind, f: impl Fn(u64, &mut dyn Iterator<Item = (u64, u32)>) -> f64 + Sync) -> IntervalSlab {
        let values = (0..self.len())
            .into_par_iter()
            .map(|i| f(self.n(i), &mut self.factors(i)))
            .collect();
        IntervalSlab { x: self.x, h: self.h, kind, values }
    }

    /// Restriction to the sub-interval `(x, x+h]`.
    pub fn sub(&self, x: u64, h: u64) -> Result<FactoredInterval> {
        if x < self.x || x + h > self.x + self.h {
            return Err(Error::RangeMismatch("sub-interval outside the factored range".into()));
        }
        let i0 = (x - self.x) as usize;
        let i1 = i0 + h as usize;
        let (a, b) = (self.offsets[i0] as usize, self.offsets[i1] as usize);
        Ok(FactoredInterval {
            x,
            h,
            offsets: self.offsets[i0..=i1].iter().map(|&o| o - a as u32).collect(),
            primes: self.primes[a..b].to_vec(),
            exps: self.exps[a..b].to_vec(),
        })
    }
}

/// Factors every integer of `(X, X+H]`.
pub fn factor_interval(x: u64, h: u64) -> Result<FactoredInterval> {
    factor_interval_with(x, h, SEGMENT)
}

/// As [`factor_interval`] with an explicit segment length.
pub fn factor_interval_with(x: u64, h: u64, segment: usize) -> Result<FactoredInterval> {
    check_range(x, h)?;
    if segment == 0 {
        return invalid("segment length must be positive");
    }
    let end = x + h;
    let primes = primes_up_to(iroot(end, 2));
    let nseg = (h as usize).div_ceil(segment);
    let parts: Vec<Segment> = (0..nseg)
        .into_par_iter()
        .map(|s| {
            let lo = x + 1 + (s * segment) as u64;
            let hi = (lo + segment as u64 - 1).min(end);
            factor_segment(lo, hi, &primes)
        })
        .collect();
    let total: usize = parts.iter().map(|p| p.primes.len()).sum();
    if total > u32::MAX as usize {
        return Err(Error::Budget("factorization table too large".into()));
    }
    let mut fi = FactoredInterval {
        x,
        h,
        offsets: Vec::with_capacity(h as usize + 1),
        primes: Vec::with_capacity(total),
        exps: Vec::with_capacity(total),
    };
    fi.offsets.push(0);
    for part in parts {
        let base = fi.primes.len() as u32;
        fi.offsets.extend(part.offsets[1..].iter().map(|&o| o + base));
        fi.primes.extend(part.primes);
        fi.exps.extend(part.exps);
    }
    Ok(fi)
}

struct Segment {
    offsets: Vec<u32>,
    primes: Vec<u64>,
    exps: Vec<u8>,
}

fn factor_segment(lo: u64, hi: u64, primes: &[u64]) -> Segment {
    let len = (hi - lo + 1) as usize;
    let mut rest: Vec<u64> = (lo..=hi).collect();
    // (index, prime, exponent) in increasing prime order
    let mut hits: Vec<(u32, u64, u8)> = Vec::new();
    for &p in primes {
        let mut m = lo.div_ceil(p) * p;
        while m <= hi {
            let i = (m - lo) as usize;
            let mut e = 0u8;
            while rest[i] % p == 0 {
                rest[i] /= p;
                e += 1;
            }
            hits.push((i as u32, p, e));
            m += p;
        }
    }
    for (i, &r) in rest.iter().enumerate() {
        if r > 1 {
            hits.push((i as u32, r, 1));
        }
    }
    let mut offsets = vec![0u32; len + 1];
    for &(i, _, _) in &hits {
        offsets[i as usize + 1] += 1;
    }
    for i in 0..len {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut ps = vec![0u64; hits.len()];
    let mut es = vec![0u8; hits.len()];
    for (i, p, e) in hits {
        let at = fill[i as usize] as usize;
        ps[at] = p;
        es[at] = e;
        fill[i as usize] += 1;
    }
    Segment { offsets, primes: ps, exps: es }
}

/// Sieves the named function on `(X, X+H]`.
pub fn sieve_slab(x: u64, h: u64, kind: Kind) -> Result<IntervalSlab> {
    if let Kind::RoughInd(p, q) = kind {
        return rough_indicator(&factor_interval(x, h)?, p, q);
    }
    let fi = factor_interval(x, h)?;
    slab_from_factors(&fi, kind)
}

/// Reads a basic arithmetic function off an existing factorization table.
pub fn slab_from_factors(fi: &FactoredInterval, kind: Kind) -> Result<IntervalSlab> {
    let slab = match kind {
        Kind::Mu => fi.map(kind, |_, fs| mu_of(fs)),
        Kind::LambdaVm => fi.map(kind, |_, fs| {
            let v: Vec<_> = fs.collect();
            if v.len() == 1 {
                (v[0].0 as f64).ln()
            } else {
                0.0
            }
        }),
        Kind::Dk(k) => {
            if k < 1 {
                return invalid("d_k needs k >= 1");
            }
            fi.map(kind, move |_, fs| dk_of(fs, k))
        }
        Kind::Liouville => fi.map(kind, |_, fs| {
            let big_omega: u32 = fs.map(|(_, e)| e).sum();
            if big_omega % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }),
        Kind::R2 => fi.map(kind, |_, fs| r2_of(fs)),
        Kind::PrimeInd => fi.map(kind, |_, fs| {
            let v: Vec<_> = fs.collect();
            if v.len() == 1 && v[0].1 == 1 {
                1.0
            } else {
                0.0
            }
        }),
        Kind::RoughInd(p, q) => return rough_indicator(fi, p, q),
        other => return invalid(format!("`{other}` is not a sieved function; see approximants")),
    };
    Ok(slab)
}

pub(crate) fn mu_of(fs: &mut dyn Iterator<Item = (u64, u32)>) -> f64 {
    let mut s = 1.0;
    for (_, e) in fs {
        if e > 1 {
            return 0.0;
        }
        s = -s;
    }
    s
}

pub(crate) fn dk_of(fs: &mut dyn Iterator<Item = (u64, u32)>, k: u32) -> f64 {
    fs.map(|(_, e)| binomial((e + k - 1) as u64, (k - 1) as u64) as f64).product()
}

fn r2_of(fs: &mut dyn Iterator<Item = (u64, u32)>) -> f64 {
    let mut r = 4.0;
    for (p, e) in fs {
        match p % 4 {
            1 => r *= (e + 1) as f64,
            3 if e % 2 == 1 => return 0.0,
            _ => {}
        }
    }
    r
}

/// 1 when `n` has a prime factor in `(P, Q]`.
pub fn rough_indicator(fi: &FactoredInterval, p: u64, q: u64) -> Result<IntervalSlab> {
    if p < 2 || p >= q {
        return invalid(format!("rough indicator needs 2 <= P < Q, got P = {p}, Q = {q}"));
    }
    Ok(fi.map(Kind::RoughInd(p, q), move |_, fs| {
        for (r, _) in fs {
            if r > p && r <= q {
                return 1.0;
            }
        }
        0.0
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factor_trial;
    use proptest::prelude::*;

    fn one(x: u64, kind: Kind) -> f64 {
        sieve_slab(x, 1, kind).unwrap().values[0]
    }

    #[test]
    fn single_values() {
        assert_eq!(one(0, Kind::Mu), 1.0);
        assert_eq!(one(6, Kind::Dk(2)), 2.0);
        assert_eq!(one(10, Kind::Dk(2)), 2.0);
        assert_eq!(one(7, Kind::Dk(2)), 4.0);
        assert_eq!(one(11, Kind::Dk(2)), 6.0);
        assert_eq!(one(11, Kind::R2), 0.0);
        assert_eq!(one(7, Kind::LambdaVm), 2f64.ln());
    }

    #[test]
    fn factor_examples() {
        let fi = factor_interval(11, 1).unwrap();
        assert_eq!(fi.factor_vec(0), vec![(2, 2), (3, 1)]);
        let fi = factor_interval(9999, 2).unwrap();
        assert_eq!(fi.factor_vec(0), vec![(2, 4), (5, 4)]);
        assert_eq!(fi.factor_vec(1), vec![(73, 1), (137, 1)]);
        let fi = factor_interval(0, 1).unwrap();
        assert!(fi.factor_vec(0).is_empty());
    }

    #[test]
    fn rough_examples() {
        let fi = factor_interval(34, 1).unwrap();
        assert_eq!(rough_indicator(&fi, 2, 10).unwrap().values, vec![1.0]);
        let fi = factor_interval(7, 1).unwrap();
        assert_eq!(rough_indicator(&fi, 2, 10).unwrap().values, vec![0.0]);
        let fi = factor_interval(100, 20).unwrap();
        let s = rough_indicator(&fi, 3, 7).unwrap();
        for (n, v) in s.iter() {
            let want = if crate::arith::gcd(n, 35) > 1 { 1.0 } else { 0.0 };
            assert_eq!(v, want, "n = {n}");
        }
        assert!(rough_indicator(&fi, 7, 7).is_err());
    }

    #[test]
    fn rejects_huge_range() {
        assert!(sieve_slab(MAX_END, 1, Kind::Mu).is_err());
        assert!(sieve_slab(0, 0, Kind::Mu).is_err());
    }

    #[test]
    fn squarefree_count() {
        let n = 1_000_000u64;
        let mu = sieve_slab(0, n, Kind::Mu).unwrap();
        let count = mu.values.iter().filter(|v| **v != 0.0).count();
        let mut sf = vec![true; n as usize + 1];
        let mut d = 2usize;
        while d * d <= n as usize {
            let mut m = d * d;
            while m <= n as usize {
                sf[m] = false;
                m += d * d;
            }
            d += 1;
        }
        assert_eq!(count, sf[1..].iter().filter(|b| **b).count());
    }

    #[test]
    fn dk_is_convolution_with_one() {
        let n = 100_000usize;
        let mut prev = vec![1.0f64; n + 1];
        for k in 2..=4u32 {
            let mut next = vec![0.0; n + 1];
            for d in 1..=n {
                let mut m = d;
                while m <= n {
                    next[m] += prev[d];
                    m += d;
                }
            }
            let slab = sieve_slab(0, n as u64, Kind::Dk(k)).unwrap();
            assert_eq!(&slab.values[..], &next[1..], "k = {k}");
            prev = next;
        }
    }

    #[test]
    fn r2_against_lattice_count() {
        let slab = sieve_slab(0, 10_000, Kind::R2).unwrap();
        let mut direct = vec![0.0; 10_001];
        for a in -100i64..=100 {
            for b in -100i64..=100 {
                let n = (a * a + b * b) as usize;
                if (1..=10_000).contains(&n) {
                    direct[n] += 1.0;
                }
            }
        }
        assert_eq!(&slab.values[..], &direct[1..]);
        // 4 * sum of chi_4 over divisors
        for (n, v) in slab.iter().take(2000) {
            let s: i64 = (1..=n)
                .filter(|d| n % d == 0)
                .map(|d| match d % 4 {
                    1 => 1,
                    3 => -1,
                    _ => 0,
                })
                .sum();
            assert_eq!(v, 4.0 * s as f64);
        }
    }

    #[test]
    fn segments_agree_with_single_pass() {
        let a = factor_interval_with(1_000_000, 5000, 1 << 20).unwrap();
        let b = factor_interval_with(1_000_000, 5000, 777).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let slab = sieve_slab(1000, 50, Kind::LambdaVm).unwrap();
        slab.write_csv(&path).unwrap();
        assert_eq!(IntervalSlab::read_csv(&path).unwrap(), slab);
        let side = std::fs::read_to_string(dir.path().join("s.csv.json")).unwrap();
        assert!(side.contains("\"kind\":\"lambda_vm\""));
    }

    #[test]
    fn kind_tags_round_trip() {
        for k in [Kind::Mu, Kind::Dk(3), Kind::RoughInd(2, 10), Kind::LambdaSharpI, Kind::Custom("x".into())] {
            assert_eq!(k.to_string().parse::<Kind>().unwrap(), k);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn factorization_is_exact(x in 0u64..1u64 << 40, h in 1u64..300) {
            let fi = factor_interval(x, h).unwrap();
            for i in 0..fi.len() {
                let prod: u64 = fi.factors(i).map(|(p, e)| p.pow(e)).product();
                prop_assert_eq!(prod, fi.n(i));
            }
            let i = (x % h) as usize;
            prop_assert_eq!(fi.factor_vec(i), factor_trial(fi.n(i)));
        }

        #[test]
        fn liouville_mu_and_primes(x in 0u64..1u64 << 32, h in 1u64..400) {
            let fi = factor_interval(x, h).unwrap();
            let mu = slab_from_factors(&fi, Kind::Mu).unwrap();
            let li = slab_from_factors(&fi, Kind::Liouville).unwrap();
            let lam = slab_from_factors(&fi, Kind::LambdaVm).unwrap();
            let pi = slab_from_factors(&fi, Kind::PrimeInd).unwrap();
            for i in 0..fi.len() {
                let n = fi.n(i);
                let big_omega: u32 = factor_trial(n).iter().map(|f| f.1).sum();
                prop_assert_eq!(li.values[i], if big_omega % 2 == 0 { 1.0 } else { -1.0 });
                if mu.values[i] != 0.0 {
                    prop_assert_eq!(mu.values[i], li.values[i]);
                }
                let is_p = pi.values[i] == 1.0;
                let lam_is_log = n > 1 && ((lam.values[i] - (n as f64).ln()).abs() <= 1e-12 * (n as f64).ln());
                prop_assert_eq!(is_p, lam_is_log);
            }
        }
    }
}
