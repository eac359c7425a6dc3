//! Major-arc models of `Λ` and `d_k`: the Cramér–Granville weight `Λ#`, its
//! truncated type I form `Λ#_I`, the W-tricked `Λ_w`, and the polynomial
//! divisor model `d_k#`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{binomial, primes_below, primes_up_to};
use crate::error::{invalid, Error, Result};
use crate::interval_sieve::{FactoredInterval, IntervalSlab, Kind};

/// Parameters of the approximants. `r` feeds `Λ#`, `w` feeds `Λ_w`,
/// `eta` sets `R_k = X^eta` for `d_k#`, and `trunc` cuts the divisor sum of `Λ#_I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximantParams {
    pub r: f64,
    pub w: f64,
    pub k: u32,
    pub eta: f64,
    pub trunc: f64,
}

impl ApproximantParams {
    /// `R = exp((log X)^{1/10})`, `w = R`, `eta = 1/(10k)`, `trunc = X^0.3`.
    pub fn defaults(x: f64, k: u32) -> ApproximantParams {
        let r = default_r(x);
        ApproximantParams { r, w: r, k, eta: 1.0 / (10.0 * k as f64), trunc: x.powf(0.3).max(1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 2.0) || !(self.w >= 2.0) {
            return invalid("R and w must be at least 2");
        }
        if self.k < 2 {
            return invalid("k must be at least 2");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0 / (10.0 * self.k as f64) + 1e-15) {
            return invalid(format!("eta must lie in (0, 1/(10k)] = (0, {}]", 1.0 / (10.0 * self.k as f64)));
        }
        if !(self.trunc >= 1.0) {
            return invalid("trunc must be at least 1");
        }
        Ok(())
    }
}

/// `exp((log X)^{1/10})`.
pub fn default_r(x: f64) -> f64 {
    x.ln().powf(0.1).exp()
}

/// `prod p/(p-1)` over the given primes.
pub fn sieve_density(primes: &[u64]) -> f64 {
    primes.iter().map(|&p| p as f64 / (p as f64 - 1.0)).product()
}

/// `Λ#(n)`: `P(R)/φ(P(R))` when `n` has no prime factor below `R`, else 0.
pub fn lambda_sharp(n: u64, r: f64) -> Result<f64> {
    if n < 1 || !(r >= 2.0) {
        return invalid("lambda_sharp needs n >= 1 and R >= 2");
    }
    let ps = primes_below(r);
    Ok(if ps.iter().any(|p| n % p == 0) { 0.0 } else { sieve_density(&ps) })
}

/// `Λ_w(n)`: `W/φ(W)` when `(n, W) = 1`, `W = prod_{p <= w} p`.
pub fn lambda_w(n: u64, w: f64) -> Result<f64> {
    if n < 1 || !(w >= 2.0) {
        return invalid("lambda_w needs n >= 1 and w >= 2");
    }
    let ps = primes_up_to(w.floor() as u64);
    Ok(if ps.iter().any(|p| n % p == 0) { 0.0 } else { sieve_density(&ps) })
}

fn coprime_slab(fi: &FactoredInterval, ps: Vec<u64>, kind: Kind) -> IntervalSlab {
    let dens = sieve_density(&ps);
    let top = ps.last().copied().unwrap_or(0);
    fi.map(kind, move |_, fs| {
        for (p, _) in fs {
            if p <= top {
                return 0.0;
            }
        }
        dens
    })
}

pub fn lambda_sharp_slab(fi: &FactoredInterval, r: f64) -> Result<IntervalSlab> {
    if !(r >= 2.0) {
        return invalid("R must be at least 2");
    }
    Ok(coprime_slab(fi, primes_below(r), Kind::LambdaSharp))
}

pub fn lambda_w_slab(fi: &FactoredInterval, w: f64) -> Result<IntervalSlab> {
    if !(w >= 2.0) {
        return invalid("w must be at least 2");
    }
    Ok(coprime_slab(fi, primes_up_to(w.floor() as u64), Kind::LambdaW))
}

/// `Λ#_I(n) = P(R)/φ(P(R)) * sum_{d <= trunc, d | (n, P(R))} μ(d)`.
pub fn lambda_sharp_i_slab(fi: &FactoredInterval, r: f64, trunc: f64) -> Result<IntervalSlab> {
    if !(r >= 2.0) || !(trunc >= 1.0) {
        return invalid("lambda_sharp_I needs R >= 2 and trunc >= 1");
    }
    let dens = sieve_density(&primes_below(r));
    Ok(fi.map(Kind::LambdaSharpI, move |_, fs| {
        let small: Vec<u64> = fs.map(|(p, _)| p).filter(|&p| (p as f64) < r).collect();
        dens * truncated_mobius_sum(&small, trunc) as f64
    }))
}

/// `sum μ(d)` over squarefree products `d` of `primes` with `d <= trunc`.
fn truncated_mobius_sum(primes: &[u64], trunc: f64) -> i64 {
    fn go(ps: &[u64], d: f64, sign: i64, trunc: f64) -> i64 {
        let mut s = sign;
        for (i, &p) in ps.iter().enumerate() {
            let e = d * p as f64;
            if e <= trunc {
                s += go(&ps[i + 1..], e, -sign, trunc);
            }
        }
        s
    }
    go(primes, 1.0, 1, trunc)
}

/// A polynomial in `t`, monomial coefficients from degree 0 upward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TPoly(pub Vec<f64>);

impl TPoly {
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }
}

/// Cap on the number of factor tuples enumerated when building `P_m`.
pub const PM_TUPLE_BUDGET: u128 = 20_000_000;

/// The family `{P_m}` for one `(k, R_k)`, keyed by `m`.
#[derive(Clone, Debug)]
pub struct PmTable {
    pub k: u32,
    pub r: f64,
    pub polys: BTreeMap<u64, TPoly>,
}

impl PmTable {
    pub fn build(k: u32, r: f64) -> Result<PmTable> {
        if k < 2 || !(r >= 2.0) {
            return invalid("P_m needs k >= 2 and R_k >= 2");
        }
        let small = r.floor() as u64;
        let big = (r * r).floor() as u64;
        let count = (big as u128).checked_pow(k - 1).unwrap_or(u128::MAX);
        if count > PM_TUPLE_BUDGET {
            return Err(Error::Budget(format!("{count} factor tuples for k = {k}, R = {r}")));
        }
        let lr = r.ln();
        let mut polys: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for j in 0..k {
            let e = (k - j - 1) as usize;
            let weight = binomial(k as u64, j as u64) as f64 / (factorial(e) * lr.powi(e as i32));
            let mut tuple = Vec::with_capacity(k as usize - 1);
            enumerate_tuples(&mut tuple, k as usize - 1, j as usize, small, big, &mut |t: &[u64]| {
                let m: u64 = t.iter().product();
                let head: f64 = t[..j as usize].iter().map(|&n| (n as f64).ln()).sum();
                let c = head + (k - j) as f64 * lr;
                // weight * (t - c)^e expanded in powers of t
                let coeffs = polys.entry(m).or_insert_with(|| vec![0.0; k as usize]);
                for i in 0..=e {
                    coeffs[i] += weight * binomial(e as u64, i as u64) as f64 * (-c).powi((e - i) as i32);
                }
            });
        }
        let polys = polys.into_iter().map(|(m, c)| (m, TPoly(c))).filter(|(_, p)| !p.is_zero()).collect();
        Ok(PmTable { k, r, polys })
    }

    /// `P_m`, the zero polynomial when `m` carries no admissible factorization.
    pub fn get(&self, m: u64) -> TPoly {
        self.polys.get(&m).cloned().unwrap_or_else(|| TPoly(vec![0.0; self.k as usize]))
    }

    /// `d_k#(n) = sum_{m | n} P_m(log n)`, by trial over the table.
    pub fn dk_sharp(&self, n: u64) -> f64 {
        let t = (n as f64).ln();
        self.polys.iter().filter(|(m, _)| n % **m == 0).map(|(_, p)| p.eval(t)).sum()
    }
}

fn enumerate_tuples(buf: &mut Vec<u64>, len: usize, j: usize, small: u64, big: u64, f: &mut dyn FnMut(&[u64])) {
    if buf.len() == len {
        f(buf);
        return;
    }
    let range = if buf.len() < j { 1..=small } else { small + 1..=big };
    for n in range {
        buf.push(n);
        enumerate_tuples(buf, len, j, small, big, f);
        buf.pop();
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Coefficients of `P_m(t)` in powers of `t`.
pub fn pm_polynomial(m: u64, k: u32, r: f64) -> Result<TPoly> {
    if m < 1 {
        return invalid("m must be positive");
    }
    Ok(PmTable::build(k, r)?.get(m))
}

/// `d_k#` on a slab with `R_k = X^eta`, `X` the slab start.
pub fn dk_sharp(fi: &FactoredInterval, k: u32, eta: f64) -> Result<IntervalSlab> {
    if !(eta > 0.0 && eta <= 1.0 / (10.0 * k as f64) + 1e-15) {
        return invalid("eta must lie in (0, 1/(10k)]");
    }
    let r = (fi.x as f64).powf(eta);
    if r < 2.0 {
        return invalid(format!("R_k = X^eta = {r} is below 2"));
    }
    dk_sharp_with_r(fi, k, r)
}

/// `d_k#` on a slab with an explicit `R_k`.
pub fn dk_sharp_with_r(fi: &FactoredInterval, k: u32, r: f64) -> Result<IntervalSlab> {
    let table = PmTable::build(k, r)?;
    let mut values = vec![0.0; fi.len()];
    let lo = fi.x + 1;
    let hi = fi.x + fi.h;
    for (&m, p) in &table.polys {
        let mut n = lo.div_ceil(m) * m;
        while n <= hi {
            values[(n - lo) as usize] += p.eval((n as f64).ln());
            n += m;
        }
    }
    IntervalSlab::new(fi.x, fi.h, Kind::DkSharp, values)
}

/// A constant `C` with `0 <= d_k#(n) <= C d_k(n)` for `n <= n_max`.
///
/// Each tuple counted in `P_m` contributes at most `binom(k,j) L^{k-j-1}/(k-j-1)!`
/// with `L = max(log n_max / log R, k)`, and the tuples with product dividing `n`
/// are at most `d_k(n)` in number.
pub fn dk_sharp_bound(k: u32, r: f64, n_max: f64) -> f64 {
    let l = (n_max.ln() / r.ln()).max(k as f64);
    (0..k)
        .map(|j| {
            let e = (k - j - 1) as usize;
            binomial(k as u64, j as u64) as f64 * l.powi(e as i32) / factorial(e)
        })
        .sum()
}

/// Right-hand side of the generalized hyperbola identity for `d_k(n)`:
/// `sum_j binom(k,j) #{(n_1..n_{k-1}) : n_1..n_j <= R < n_{j+1}..n_{k-1}, n/(n_1..n_{k-1}) > R}`.
/// Equals `d_k(n)` whenever `n > R^k`.
pub fn hyperbola_identity_count(n: u64, k: u32, r: f64) -> u64 {
    fn go(n: u64, left: u32, small_left: u32, r: f64, acc: &mut u64) {
        if left == 0 {
            if n as f64 > r {
                *acc += 1;
            }
            return;
        }
        for d in divisors(n) {
            let is_small = (d as f64) <= r;
            if is_small == (small_left > 0) {
                go(n / d, left - 1, small_left.saturating_sub(1), r, acc);
            }
        }
    }
    let mut total = 0;
    for j in 0..k {
        let mut acc = 0;
        go(n, k - 1, j, r, &mut acc);
        total += binomial(k as u64, j as u64) as u64 * acc;
    }
    total
}

fn divisors(n: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            v.push(d);
            if d * d != n {
                v.push(n / d);
            }
        }
        d += 1;
    }
    v
}
