//! Heath-Brown components, Ramaré's identity on an interval, and the
//! exponent classifier for dyadic convolutions.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Sub};

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{binomial, iroot};
use crate::error::{invalid, Error, Result};
use crate::interval_sieve::{dk_of, mu_of, sieve_slab, FactoredInterval, Kind};

/// Largest `N_max` accepted by [`evaluate_components`].
pub const EVAL_LIMIT: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Unit,
    Log,
    Moebius,
}

/// `a(n) = w(n) 1_{lo <= n <= hi}` where `[lo, hi]` is the dyadic block `(N, 2N]`,
/// possibly cut at the Möbius cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Factor {
    pub kind: FactorKind,
    /// `2N`; `N = 1/2` is stored as 1.
    pub two_n: u64,
    pub lo: u64,
    pub hi: u64,
}

impl Factor {
    fn block(kind: FactorKind, two_n: u64, cap: u64) -> Factor {
        Factor { kind, two_n, lo: two_n / 2 + 1, hi: two_n.min(cap) }
    }

    pub fn n(&self) -> f64 {
        self.two_n as f64 / 2.0
    }
}

/// `coeff · a^(1) * ... * a^(l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionComponent {
    pub coeff: i64,
    pub factors: Vec<Factor>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HbTarget {
    Mu,
    LambdaVm,
}

/// Möbius cutoff `Z = floor((4X)^(1/L))`.
///
/// With this `Z` the identity is exact for every `n < (Z+1)^L`, which covers `[X/2, 4X]`.
pub fn hb_cutoff(x: u64, l: u32) -> u64 {
    iroot(4 * x, l)
}

fn dyadic_blocks(cap: u64) -> Vec<u64> {
    let mut v = vec![1u64];
    while *v.last().unwrap() < cap {
        let t = v.last().unwrap() * 2;
        v.push(t);
    }
    v
}

/// Nondecreasing index sequences of length `len` over `0..n`, with the number
/// of distinct orderings of each.
fn multisets(n: usize, len: usize) -> Vec<(Vec<usize>, u64)> {
    fn rec(n: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, len, i, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n, len, 0, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|s| {
            let mut mult = (1..=len as u64).product::<u64>();
            let mut i = 0;
            while i < s.len() {
                let mut j = i;
                while j < s.len() && s[j] == s[i] {
                    j += 1;
                }
                mult /= (1..=(j - i) as u64).product::<u64>();
                i = j;
            }
            (s, mult)
        })
        .collect()
}

/// Dyadically decomposed Heath-Brown identity with `K = L`.
///
/// Only components whose support meets `[X/2, 4X]` are kept; the others vanish there.
/// Orderings of equal factors are merged into the coefficient.
pub fn heath_brown(target: HbTarget, x: u64, l: u32) -> Result<Vec<ConvolutionComponent>> {
    if l < 1 {
        return invalid("L must be at least 1");
    }
    if x < 2 {
        return invalid("X must be at least 2");
    }
    let z = hb_cutoff(x, l);
    let top = 4 * x;
    let lo_target = x.div_ceil(2);
    let mu_blocks: Vec<Factor> = dyadic_blocks(z).into_iter().map(|b| Factor::block(FactorKind::Moebius, b, z)).collect();
    let unit_blocks: Vec<Factor> = dyadic_blocks(top).into_iter().map(|b| Factor::block(FactorKind::Unit, b, u64::MAX)).collect();
    let log_blocks: Vec<Factor> = dyadic_blocks(top).into_iter().map(|b| Factor::block(FactorKind::Log, b, u64::MAX)).collect();
    let mut out = Vec::new();
    for j in 1..=l as usize {
        let sign: i64 = if j % 2 == 1 { 1 } else { -1 };
        let c = sign * binomial(l as u64, j as u64) as i64;
        let units = j - 1;
        let mus = multisets(mu_blocks.len(), j);
        let uns = multisets(unit_blocks.len(), units);
        let logs: Vec<Option<Factor>> = match target {
            HbTarget::Mu => vec![None],
            HbTarget::LambdaVm => log_blocks.iter().copied().map(Some).collect(),
        };
        for (ms, mm) in &mus {
            let base: Vec<Factor> = ms.iter().map(|&i| mu_blocks[i]).collect();
            if bounds(&base).0 > top as u128 {
                continue;
            }
            for (us, um) in &uns {
                let mut with_u = base.clone();
                with_u.extend(us.iter().map(|&i| unit_blocks[i]));
                let (ulo, _) = bounds(&with_u);
                if ulo > top as u128 {
                    continue;
                }
                for lg in &logs {
                    let mut fs = with_u.clone();
                    fs.extend(lg.iter().copied());
                    let (lo, hi) = bounds(&fs);
                    if lo > top as u128 || hi < lo_target as u128 {
                        continue;
                    }
                    out.push(ConvolutionComponent { coeff: c * (*mm as i64) * (*um as i64), factors: fs });
                }
            }
        }
    }
    Ok(out)
}

fn bounds(fs: &[Factor]) -> (u128, u128) {
    fs.iter().fold((1u128, 1u128), |(a, b), f| (a.saturating_mul(f.lo as u128), b.saturating_mul(f.hi as u128)))
}

/// `Σ_f f(n)` for `0 <= n <= n_max`, by direct enumeration of factor tuples.
pub fn evaluate_components(comps: &[ConvolutionComponent], n_max: u64) -> Result<Vec<f64>> {
    if n_max > EVAL_LIMIT {
        return Err(Error::Budget(format!("N_max = {n_max} exceeds {EVAL_LIMIT}")));
    }
    let mu = sieve_slab(0, n_max, Kind::Mu)?;
    let mu_at = |n: u64| mu.values[(n - 1) as usize];
    let len = n_max as usize + 1;
    // fixed chunks summed in order, so the result does not depend on the thread count
    let chunk = comps.len().div_ceil(16).max(1);
    let parts: Vec<Vec<f64>> = comps
        .par_chunks(chunk)
        .map(|cs| {
            let mut acc = vec![0.0f64; len];
            for comp in cs {
                let mut fs = comp.factors.clone();
                fs.sort_by_key(|f| f.hi - f.lo);
                // suffix products of the lower ends, for pruning
                let mut rest = vec![1u64; fs.len() + 1];
                for i in (0..fs.len()).rev() {
                    rest[i] = rest[i + 1].saturating_mul(fs[i].lo);
                }
                walk(&fs, &rest, 0, 1, comp.coeff as f64, n_max, &mu_at, &mut acc);
            }
            acc
        })
        .collect();
    let mut acc = vec![0.0f64; len];
    for p in parts {
        acc.iter_mut().zip(p).for_each(|(x, y)| *x += y);
    }
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn walk(fs: &[Factor], rest: &[u64], i: usize, prod: u64, w: f64, n_max: u64, mu: &dyn Fn(u64) -> f64, acc: &mut [f64]) {
    if i == fs.len() {
        acc[prod as usize] += w;
        return;
    }
    let f = fs[i];
    let cap = n_max / prod / rest[i + 1].max(1);
    for v in f.lo..=f.hi.min(cap) {
        let wv = match f.kind {
            FactorKind::Unit => w,
            FactorKind::Log => w * (v as f64).ln(),
            FactorKind::Moebius => {
                let m = mu(v);
                if m == 0.0 {
                    continue;
                }
                w * m
            }
        };
        walk(fs, rest, i + 1, prod * v, wv, n_max, mu, acc);
    }
}

/// One row of Ramaré's identity at `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RamareRow {
    pub n: u64,
    /// `f(n) 1_{(n, P(P,Q)) > 1}`
    pub lhs: Ratio<i64>,
    /// `Σ_{P<p<=Q, pm=n} f(pm) / ω_{(P,Q]}(pm)`
    pub rhs: Ratio<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RamareReport {
    pub rows: Vec<RamareRow>,
    pub max_abs_diff: Ratio<i64>,
    /// `a_r` for the `(P, Q]`-smooth `r <= r_max`.
    pub coefficients: BTreeMap<u64, Ratio<i64>>,
}

/// Integer-valued multiplicative `f` with `|f| <= d_k`; returns `(f, k)`.
fn integer_multiplicative(kind: &Kind) -> Result<(Box<dyn Fn(&[(u64, u32)]) -> i64 + Sync>, u32)> {
    Ok(match kind {
        Kind::Mu => (Box::new(|fs: &[(u64, u32)]| mu_of(&mut fs.iter().copied()) as i64), 1),
        Kind::Liouville => (Box::new(|fs: &[(u64, u32)]| if fs.iter().map(|f| f.1).sum::<u32>() % 2 == 0 { 1 } else { -1 }), 1),
        Kind::Dk(k) => {
            let k = *k;
            (Box::new(move |fs: &[(u64, u32)]| dk_of(&mut fs.iter().copied(), k) as i64), k)
        }
        other => return invalid(format!("Ramaré decomposition needs mu, liouville or d_k, got {other}")),
    })
}

fn omega_in(fs: &[(u64, u32)], p: u64, q: u64) -> i64 {
    fs.iter().filter(|f| f.0 > p && f.0 <= q).count() as i64
}

/// Both sides of Ramaré's identity for every `n` of the interval, and the
/// coefficients `a_r = f(r) 1_{p|r => p in (P,Q]} Σ_{r = d m_1} μ(d) / (ω(m_1) + 1)`.
///
/// The right side is rebuilt from the factorisation of `m = n/p` and `p`, so
/// the check does not reuse `f(n)`.
pub fn ramare_decompose(fi: &FactoredInterval, kind: &Kind, p: u64, q: u64, r_max: u64) -> Result<RamareReport> {
    if p < 2 || p >= q {
        return invalid(format!("need 2 <= P < Q, got P = {p}, Q = {q}"));
    }
    let (f, k) = integer_multiplicative(kind)?;
    let rows: Vec<RamareRow> = (0..fi.len())
        .into_par_iter()
        .map(|i| {
            let fs = fi.factor_vec(i);
            let w = omega_in(&fs, p, q);
            let lhs = if w > 0 { Ratio::from_integer(f(&fs)) } else { Ratio::zero() };
            let mut rhs = Ratio::zero();
            for &(pr, _) in fs.iter().filter(|g| g.0 > p && g.0 <= q) {
                // m = n / pr, then reassemble p·m
                let mut m: Vec<(u64, u32)> = fs.iter().map(|&(a, e)| (a, if a == pr { e - 1 } else { e })).filter(|g| g.1 > 0).collect();
                match m.iter_mut().find(|g| g.0 == pr) {
                    Some(g) => g.1 += 1,
                    None => {
                        m.push((pr, 1));
                        m.sort_unstable();
                    }
                }
                rhs += Ratio::new(f(&m), omega_in(&m, p, q));
            }
            RamareRow { n: fi.n(i), lhs, rhs }
        })
        .collect();
    let max_abs_diff = rows.iter().map(|r| (r.lhs - r.rhs).abs()).max().unwrap_or_else(Ratio::zero);
    let mut coefficients = BTreeMap::new();
    for r in 1..=r_max {
        let fs = crate::arith::factor_trial(r);
        if fs.iter().any(|g| g.0 <= p || g.0 > q) {
            continue;
        }
        let a = ramare_coefficient(&fs, p, q) * f(&fs);
        let bound = dk_of(&mut fs.iter().copied(), k + 1) as i64;
        if a.abs() > Ratio::from_integer(bound) {
            return Err(Error::Verification(format!("|a_{r}| = {a} exceeds d_{}({r}) = {bound}", k + 1)));
        }
        coefficients.insert(r, a);
    }
    Ok(RamareReport { rows, max_abs_diff, coefficients })
}

/// `Σ_{r = d m_1, d squarefree} μ(d) / (ω(m_1) + 1)` for `(P, Q]`-smooth `r`.
fn ramare_coefficient(fs: &[(u64, u32)], p: u64, q: u64) -> Ratio<i64> {
    let mut s = Ratio::zero();
    for mask in 0u32..(1 << fs.len()) {
        let m1: Vec<(u64, u32)> = fs
            .iter()
            .enumerate()
            .map(|(i, &(a, e))| (a, if mask >> i & 1 == 1 { e - 1 } else { e }))
            .filter(|g| g.1 > 0)
            .collect();
        let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        s += Ratio::new(sign, omega_in(&m1, p, q) + 1);
    }
    s
}

// ---------------------------------------------------------------------------
// exponent classification

/// Numbers the classifier can compare: `f64` with a `1e-9` slack, or exact rationals.
pub trait Exponent: Copy + PartialOrd + Debug + Add<Output = Self> + Sub<Output = Self> + Send + Sync {
    fn frac(n: i64, d: i64) -> Self;
    fn to_f64(self) -> f64;
    fn slack() -> Self;
    fn abs(self) -> Self;
    fn le(self, other: Self) -> bool {
        self <= other + Self::slack()
    }
}

impl Exponent for f64 {
    fn frac(n: i64, d: i64) -> f64 {
        n as f64 / d as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn slack() -> f64 {
        1e-9
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Exponent for Ratio<i128> {
    fn frac(n: i64, d: i64) -> Self {
        Ratio::new(n as i128, d as i128)
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn slack() -> Self {
        Ratio::zero()
    }
    fn abs(self) -> Self {
        Signed::abs(&self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    I,
    I2maj,
    I2,
    IImaj,
    IImin,
}

pub const LABELS: [Label; 5] = [Label::I, Label::I2maj, Label::I2, Label::IImaj, Label::IImin];

/// Indices are 0-based. `(I)` uses `i`; the pair labels use `j`; `(II^maj)` uses
/// `i`, `j`, `j_prime`; `(II^min)` uses `j`, `j_prime`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub i: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub j: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub j_prime: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentClassification {
    pub alphas: Vec<f64>,
    pub theta: f64,
    pub holds: Vec<Label>,
    pub witnesses: BTreeMap<Label, Witness>,
    /// False when `k` was too large for exhaustive search and a label
    /// reported absent may still hold.
    pub exhaustive: bool,
    /// Cases of the lemma whose hypotheses applied (all were confirmed).
    pub guarantees: Vec<String>,
}

impl ExponentClassification {
    pub fn has(&self, l: Label) -> bool {
        self.holds.contains(&l)
    }
}

pub const EXHAUSTIVE_K: usize = 12;

fn sum_of<T: Exponent>(a: &[T], idx: &[usize]) -> T {
    idx.iter().fold(T::frac(0, 1), |s, &i| s + a[i])
}

/// Re-checks a witness against the defining inequality of its label.
pub fn witness_valid<T: Exponent>(a: &[T], theta: T, label: Label, w: &Witness) -> bool {
    let one = T::frac(1, 1);
    let d = theta + theta - one;
    match label {
        Label::I => w.i.len() == 1 && (one - theta).le(a[w.i[0]]),
        Label::I2maj => w.j.len() == 2 && w.j[0] != w.j[1] && (one - theta).le(sum_of(a, &w.j)),
        Label::I2 => {
            w.j.len() == 2 && w.j[0] != w.j[1] && {
                let t = one - theta;
                (t + t + t).le(sum_of(a, &w.j) + sum_of(a, &w.j))
            }
        }
        Label::IImaj => {
            is_partition(a.len(), &[&w.i, &w.j, &w.j_prime]) && {
                let ai = sum_of(a, &w.i);
                d.le(ai) && ai.le(d + d) && (sum_of(a, &w.j) - sum_of(a, &w.j_prime)).abs().le(d)
            }
        }
        Label::IImin => is_partition(a.len(), &[&w.j, &w.j_prime]) && (sum_of(a, &w.j) - sum_of(a, &w.j_prime)).abs().le(d),
    }
}

fn is_partition(k: usize, parts: &[&Vec<usize>]) -> bool {
    let mut seen = vec![false; k];
    for p in parts {
        for &i in p.iter() {
            if i >= k || seen[i] {
                return false;
            }
            seen[i] = true;
        }
    }
    seen.into_iter().all(|s| s)
}

fn find_i<T: Exponent>(a: &[T], theta: T) -> Option<Witness> {
    let w = (0..a.len()).map(|i| Witness { i: vec![i], ..Default::default() }).find(|w| witness_valid(a, theta, Label::I, w));
    w
}

fn find_pair<T: Exponent>(a: &[T], theta: T, label: Label) -> Option<Witness> {
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let w = Witness { j: vec![i, j], ..Default::default() };
            if witness_valid(a, theta, label, &w) {
                return Some(w);
            }
        }
    }
    None
}

fn find_iimin_exhaustive<T: Exponent>(a: &[T], theta: T) -> Option<Witness> {
    let k = a.len();
    (0u32..1 << k).find_map(|mask| {
        let (j, jp): (Vec<usize>, Vec<usize>) = (0..k).partition(|&i| mask >> i & 1 == 1);
        let w = Witness { j, j_prime: jp, ..Default::default() };
        witness_valid(a, theta, Label::IImin, &w).then_some(w)
    })
}

fn find_iimaj_exhaustive<T: Exponent>(a: &[T], theta: T) -> Option<Witness> {
    let k = a.len();
    let total = 3usize.pow(k as u32);
    for code in 0..total {
        let mut w = Witness::default();
        let mut c = code;
        for i in 0..k {
            match c % 3 {
                0 => w.i.push(i),
                1 => w.j.push(i),
                _ => w.j_prime.push(i),
            }
            c /= 3;
        }
        if witness_valid(a, theta, Label::IImaj, &w) {
            return Some(w);
        }
    }
    None
}

/// Indices sorted by decreasing `α`.
fn order<T: Exponent>(a: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&x, &y| a[y].partial_cmp(&a[x]).unwrap_or(std::cmp::Ordering::Equal).then(x.cmp(&y)));
    idx
}

/// The balancing construction: start from `J_0`, fill `J_0'` while it stays below
/// `J_0`, then feed the remaining indices to the lighter side until the two sides
/// together reach `[3-4θ, 2-2θ]`.
fn balance<T: Exponent>(a: &[T], theta: T, ord: &[usize], seed: usize) -> Option<Witness> {
    if ord.len() <= seed {
        return None;
    }
    let mut j: Vec<usize> = ord[..seed].to_vec();
    let mut jp = Vec::new();
    let mut r = seed;
    while r < ord.len() && (sum_of(a, &jp) + a[ord[r]]) <= sum_of(a, &j) {
        jp.push(ord[r]);
        r += 1;
    }
    loop {
        let rest: Vec<usize> = ord[r..].to_vec();
        let w = Witness { i: rest, j: j.clone(), j_prime: jp.clone() };
        if witness_valid(a, theta, Label::IImaj, &w) {
            return Some(w);
        }
        if r == ord.len() {
            return None;
        }
        if sum_of(a, &j) < sum_of(a, &jp) {
            j.push(ord[r]);
        } else {
            jp.push(ord[r]);
        }
        r += 1;
    }
}

fn find_iimaj_greedy<T: Exponent>(a: &[T], theta: T) -> Option<Witness> {
    let ord = order(a);
    let mut cands = Vec::new();
    if ord.len() >= 2 {
        cands.push(Witness { i: ord[2..].to_vec(), j: vec![ord[0]], j_prime: vec![ord[1]] });
    }
    if ord.len() >= 4 {
        cands.push(Witness { i: ord[4..].to_vec(), j: vec![ord[0], ord[3]], j_prime: vec![ord[1], ord[2]] });
    }
    cands
        .into_iter()
        .find(|w| witness_valid(a, theta, Label::IImaj, w))
        .or_else(|| balance(a, theta, &ord, 1))
        .or_else(|| balance(a, theta, &ord, 2))
}

fn find_iimin_greedy<T: Exponent>(a: &[T], theta: T) -> Option<Witness> {
    let ord = order(a);
    for r in 1..=ord.len() {
        let w = Witness { j: ord[..r].to_vec(), j_prime: ord[r..].to_vec(), ..Default::default() };
        if witness_valid(a, theta, Label::IImin, &w) {
            return Some(w);
        }
    }
    if let Some(p) = find_pair(a, theta, Label::I2maj).filter(|p| sum_of(a, &p.j).le(theta)) {
        let rest = (0..a.len()).filter(|i| !p.j.contains(i)).collect();
        let w = Witness { j: p.j, j_prime: rest, ..Default::default() };
        if witness_valid(a, theta, Label::IImin, &w) {
            return Some(w);
        }
    }
    None
}

fn near<T: Exponent>(x: T, n: i64, d: i64) -> bool {
    (x.to_f64() - n as f64 / d as f64).abs() <= 1e-12
}

fn at_least<T: Exponent>(x: T, n: i64, d: i64) -> bool {
    x.to_f64() >= n as f64 / d as f64 - 1e-12
}

/// The cases of the lemma whose hypotheses hold, each with its guaranteed labels.
pub fn applicable_cases<T: Exponent>(k: usize, theta: T) -> Vec<(&'static str, Vec<Label>)> {
    use Label::*;
    let mut v = Vec::new();
    if near(theta, 5, 8) {
        v.push(("i", vec![I, IImaj]));
    }
    if at_least(theta, 3, 5) {
        v.push(("ii", vec![I, I2, IImin]));
    }
    if near(theta, 7, 12) {
        v.push(("iii", vec![I, I2maj, IImaj]));
    }
    if k == 5 && near(theta, 11, 20) {
        v.push(("iv", vec![I2maj, IImaj]));
    }
    if (k == 3 || k == 4) && at_least(theta, 1, 2) {
        v.push(("v", vec![I2maj]));
    }
    if (k == 3 && at_least(theta, 5, 9)) || (k == 2 && at_least(theta, 1, 3)) {
        v.push(("vi", vec![I2]));
    }
    v
}

/// Decides the five labels with witnesses. Exhaustive for `k <= 12`; beyond
/// that the two partition labels use the lemma's constructions.
///
/// Errors with `Verification` if a case of the lemma applies and none of its
/// guaranteed labels was found.
pub fn classify_exponents<T: Exponent>(alphas: &[T], theta: T) -> Result<ExponentClassification> {
    let zero = T::frac(0, 1);
    if alphas.is_empty() || alphas.iter().any(|&a| a < zero) {
        return invalid("alphas must be nonnegative and nonempty");
    }
    let s: f64 = alphas.iter().map(|a| a.to_f64()).sum();
    if (s - 1.0).abs() > 1e-12 {
        return invalid(format!("alphas sum to {s}, not 1"));
    }
    let th = theta.to_f64();
    if !(0.0..=1.0).contains(&th) {
        return invalid(format!("theta = {th} outside [0, 1]"));
    }
    let exhaustive = alphas.len() <= EXHAUSTIVE_K;
    let mut witnesses = BTreeMap::new();
    let found = [
        (Label::I, find_i(alphas, theta)),
        (Label::I2maj, find_pair(alphas, theta, Label::I2maj)),
        (Label::I2, find_pair(alphas, theta, Label::I2)),
        (
            Label::IImaj,
            if exhaustive { find_iimaj_exhaustive(alphas, theta) } else { find_iimaj_greedy(alphas, theta) },
        ),
        (
            Label::IImin,
            if exhaustive { find_iimin_exhaustive(alphas, theta) } else { find_iimin_greedy(alphas, theta) },
        ),
    ];
    for (l, w) in found {
        if let Some(w) = w {
            debug_assert!(witness_valid(alphas, theta, l, &w));
            witnesses.insert(l, w);
        }
    }
    let holds: Vec<Label> = witnesses.keys().copied().collect();
    let mut guarantees = Vec::new();
    for (case, labels) in applicable_cases(alphas.len(), theta) {
        if !labels.iter().any(|l| holds.contains(l)) {
            return Err(Error::Verification(format!(
                "case ({case}) applies but none of {labels:?} holds for {:?} at theta = {th}",
                alphas.iter().map(|a| a.to_f64()).collect::<Vec<_>>()
            )));
        }
        guarantees.push(case.to_string());
    }
    Ok(ExponentClassification {
        alphas: alphas.iter().map(|a| a.to_f64()).collect(),
        theta: th,
        holds,
        witnesses,
        exhaustive,
        guarantees,
    })
}

/// Exact version for rational input; witnesses are validated with no slack.
pub fn classify_exponents_exact(alphas: &[Ratio<i64>], theta: Ratio<i64>) -> Result<ExponentClassification> {
    let sum: Ratio<i64> = alphas.iter().sum();
    if sum != Ratio::from_integer(1) {
        return invalid(format!("alphas sum to {sum}, not 1"));
    }
    let a: Vec<Ratio<i128>> = alphas.iter().map(|r| Ratio::new(*r.numer() as i128, *r.denom() as i128)).collect();
    classify_exponents(&a, Ratio::new(*theta.numer() as i128, *theta.denom() as i128))
}

/// The counterexamples showing the thresholds cannot be lowered: `(case, θ, α)`.
/// `(α, 1-α)` at `θ = 1/3` is represented by `α = 2/7`.
pub fn obstruction_tuples() -> Vec<(&'static str, Ratio<i64>, Vec<Ratio<i64>>)> {
    let r = |n, d| Ratio::new(n, d);
    let rep = |x: Ratio<i64>, k: usize| vec![x; k];
    vec![
        ("i", r(5, 8), rep(r(1, 4), 4)),
        ("ii", r(3, 5), vec![r(2, 5), r(1, 5), r(1, 5), r(1, 5)]),
        ("ii", r(3, 5), rep(r(1, 5), 5)),
        ("iii", r(7, 12), rep(r(1, 6), 6)),
        ("iv", r(11, 20), rep(r(1, 5), 5)),
        ("v", r(1, 2), rep(r(1, 4), 4)),
        ("vi", r(5, 9), rep(r(1, 3), 3)),
        ("vi", r(1, 3), vec![r(2, 7), r(5, 7)]),
    ]
}

/// The labels guaranteed by a case, independent of its hypotheses.
pub fn case_labels(case: &str) -> Vec<Label> {
    use Label::*;
    match case {
        "i" => vec![I, IImaj],
        "ii" => vec![I, I2, IImin],
        "iii" => vec![I, I2maj, IImaj],
        "iv" => vec![I2maj, IImaj],
        "v" => vec![I2maj],
        _ => vec![I2],
    }
}

/// Uniform point of the simplex of dimension `k-1`.
pub fn simplex_sample(rng: &mut impl rand::Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    let mut a: Vec<f64> = e.iter().map(|x| x / s).collect();
    // push the rounding residue into the largest entry
    let r = 1.0 - a.iter().sum::<f64>();
    let m = (0..k).max_by(|&x, &y| a[x].partial_cmp(&a[y]).unwrap()).unwrap();
    a[m] += r;
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_sieve::factor_interval;
    use rand::{Rng, SeedableRng};

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn hb_l1_is_mu() {
        let x = 2000;
        let comps = heath_brown(HbTarget::Mu, x, 1).unwrap();
        assert!(comps.iter().all(|c| c.factors.len() == 1 && c.factors[0].kind == FactorKind::Moebius));
        let v = evaluate_components(&comps, 4 * x).unwrap();
        let mu = sieve_slab(0, 4 * x, Kind::Mu).unwrap();
        for n in x / 2..=4 * x {
            assert_eq!(v[n as usize], mu.values[n as usize - 1], "n = {n}");
        }
    }

    #[test]
    fn hb_lambda_l3() {
        let x = 50_000;
        let comps = heath_brown(HbTarget::LambdaVm, x, 3).unwrap();
        let z = hb_cutoff(x, 3);
        for c in &comps {
            for f in c.factors.iter().filter(|f| f.kind == FactorKind::Moebius) {
                assert!(f.hi <= z && f.n() <= (x as f64).powf(1.0 / 3.0) * 4f64.powf(1.0 / 3.0));
            }
            assert!(c.factors.len() <= 6);
        }
        let v = evaluate_components(&comps, 4 * x).unwrap();
        let lam = sieve_slab(0, 4 * x, Kind::LambdaVm).unwrap();
        let worst = (x / 2..=4 * x).map(|n| (v[n as usize] - lam.values[n as usize - 1]).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-6, "residual {worst}");
    }

    #[test]
    fn hb_mu_has_no_log_factor() {
        for l in 1..=4 {
            let comps = heath_brown(HbTarget::Mu, 10_000, l).unwrap();
            assert!(comps.iter().all(|c| c.factors.iter().all(|f| f.kind != FactorKind::Log)));
        }
        let comps = heath_brown(HbTarget::Mu, 30_000, 2).unwrap();
        let v = evaluate_components(&comps, 120_000).unwrap();
        let mu = sieve_slab(0, 120_000, Kind::Mu).unwrap();
        for n in 15_000..=120_000u64 {
            assert!((v[n as usize] - mu.values[n as usize - 1]).abs() < 1e-9);
        }
    }

    #[test]
    fn evaluate_small_cases() {
        assert!(evaluate_components(&[], 50).unwrap().iter().all(|&v| v == 0.0));
        let unit = |two_n| Factor::block(FactorKind::Unit, two_n, u64::MAX);
        let one = ConvolutionComponent { coeff: 1, factors: vec![unit(8)] };
        let v = evaluate_components(&[one], 20).unwrap();
        for n in 0..=20 {
            assert_eq!(v[n], if (5..=8).contains(&n) { 1.0 } else { 0.0 });
        }
        // unit * unit on (4,8] x (8,16] counts restricted divisor pairs
        let two = ConvolutionComponent { coeff: 1, factors: vec![unit(8), unit(16)] };
        let v = evaluate_components(&[two], 200).unwrap();
        for n in 1..=200u64 {
            let want = (5..=8).filter(|d| n % d == 0 && (9..=16).contains(&(n / d))).count() as f64;
            assert_eq!(v[n as usize], want);
        }
        assert!(matches!(evaluate_components(&[], EVAL_LIMIT + 1), Err(Error::Budget(_))));
    }

    #[test]
    fn ramare_examples() {
        let fi = factor_interval(100_000, 1000).unwrap();
        let rep = ramare_decompose(&fi, &Kind::Mu, 10, 100, 10_000).unwrap();
        assert!(rep.max_abs_diff.is_zero());
        for row in &rep.rows {
            let fs = crate::arith::factor_trial(row.n);
            if !fs.iter().any(|g| g.0 > 10 && g.0 <= 100) {
                assert!(row.lhs.is_zero() && row.rhs.is_zero());
            }
        }
        assert_eq!(rep.coefficients[&11], r(-1, 1) * r(-1, 2));
        let rep = ramare_decompose(&fi, &Kind::Dk(2), 10, 100, 0).unwrap();
        for row in &rep.rows {
            let fs = crate::arith::factor_trial(row.n);
            if omega_in(&fs, 10, 100) == 1 {
                let d2 = dk_of(&mut fs.iter().copied(), 2) as i64;
                assert_eq!(row.rhs, Ratio::from_integer(d2));
                assert_eq!(row.lhs, row.rhs);
            }
        }
        assert!(ramare_decompose(&fi, &Kind::Mu, 10, 10, 0).is_err());
        assert!(ramare_decompose(&fi, &Kind::LambdaVm, 10, 20, 0).is_err());
    }

    #[test]
    fn classify_examples() {
        let c = classify_exponents_exact(&[r(1, 4); 4], r(5, 8)).unwrap();
        assert!(!c.has(Label::I) && c.has(Label::IImaj));
        let w = &c.witnesses[&Label::IImaj];
        let a = [0.25f64; 4];
        let ai = sum_of(&a, &w.i);
        assert!((0.25..=0.5).contains(&ai));
        assert!((sum_of(&a, &w.j) - sum_of(&a, &w.j_prime)).abs() <= 0.25);

        let c = classify_exponents_exact(&[r(1, 2), r(1, 2)], r(1, 3)).unwrap();
        assert!(c.has(Label::I2));
        assert_eq!(c.witnesses[&Label::I2].j, vec![0, 1]);

        let c = classify_exponents(&[0.2f64; 5], 0.6 - 0.01).unwrap();
        assert!(!c.has(Label::I) && !c.has(Label::I2) && !c.has(Label::IImin));

        assert!(classify_exponents(&[0.5f64, 0.6], 0.5).is_err());
        assert!(classify_exponents(&[-0.1f64, 1.1], 0.5).is_err());
    }

    #[test]
    fn witnesses_validate_exactly() {
        let c = classify_exponents_exact(&[r(1, 6); 6], r(7, 12)).unwrap();
        let a: Vec<Ratio<i128>> = vec![Ratio::new(1, 6); 6];
        for (l, w) in &c.witnesses {
            assert!(witness_valid(&a, Ratio::new(7, 12), *l, w), "{l:?}");
        }
        assert_eq!(c.guarantees, vec!["iii".to_string()]);
    }

    #[test]
    fn obstructions_fail_below_threshold() {
        let tuples = obstruction_tuples();
        assert_eq!(tuples.len(), 8);
        for (case, theta, alphas) in tuples {
            let a: Vec<f64> = alphas.iter().map(|x| *x.numer() as f64 / *x.denom() as f64).collect();
            let t = *theta.numer() as f64 / *theta.denom() as f64 - 0.01;
            let c = classify_exponents(&a, t).unwrap();
            for l in case_labels(case) {
                assert!(!c.has(l), "case {case}: {l:?} holds for {a:?} at {t}");
            }
            // and at the threshold the conclusion holds
            let c = classify_exponents_exact(&alphas, theta).unwrap();
            assert!(case_labels(case).iter().any(|l| c.has(*l)), "case {case}");
        }
    }

    #[test]
    fn lemma_on_simplex_samples() {
        type Case = (&'static str, f64, fn(&mut rand_chacha::ChaCha8Rng) -> usize);
        let cases: [Case; 7] = [
            ("i", 5.0 / 8.0, |g| g.gen_range(2..=8)),
            ("ii", 3.0 / 5.0, |g| g.gen_range(2..=8)),
            ("iii", 7.0 / 12.0, |g| g.gen_range(2..=8)),
            ("iv", 11.0 / 20.0, |_| 5),
            ("v", 0.5, |g| g.gen_range(3..=4)),
            ("vi", 5.0 / 9.0, |_| 3),
            ("vi", 1.0 / 3.0, |_| 2),
        ];
        for (ci, (case, theta, kgen)) in cases.iter().enumerate() {
            let failures: usize = (0..10_000u64)
                .into_par_iter()
                .map(|s| {
                    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(s * 16 + ci as u64);
                    let k = kgen(&mut g);
                    let a = simplex_sample(&mut g, k);
                    let c = classify_exponents(&a, *theta).unwrap();
                    usize::from(!case_labels(case).iter().any(|l| c.has(*l)))
                })
                .sum();
            assert_eq!(failures, 0, "case {case}");
        }
    }

    #[test]
    fn greedy_for_large_k() {
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let k = g.gen_range(13..=20);
            let a = simplex_sample(&mut g, k);
            for theta in [5.0 / 8.0, 7.0 / 12.0, 0.6] {
                let c = classify_exponents(&a, theta).unwrap();
                assert!(!c.exhaustive);
                for (l, w) in &c.witnesses {
                    assert!(witness_valid(&a, theta, *l, w));
                }
            }
        }
    }

    #[test]
    fn classification_json() {
        let c = classify_exponents_exact(&[r(1, 4); 4], r(5, 8)).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"IImaj\""), "{s}");
        let back: ExponentClassification = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
