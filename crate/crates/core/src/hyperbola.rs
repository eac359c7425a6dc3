//! Partition of the hyperbola neighbourhood `{(m, n) : m ∈ J, X < nm <= X+H}`
//! into arithmetic progressions of spacing `(q, -a)`, and an exact verifier.
//!
//! Each point is assigned the least `q <= Q` for which `n/m` lies within
//! `1/(Qq)` of some `a/q`. Inside one family the points are grouped by the level
//! `c = qn + am`, split into runs of consecutive `m` (step `q`), and the runs are
//! chopped to length at most `HQ/M`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::gcd;
use crate::error::{invalid, Error, Result};
use crate::progressions::Progression2D;

/// Above this many points the verifier samples instead of enumerating.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

/// `J = (j_lo, j_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperbolaParams {
    #[serde(rename = "X")]
    pub x: u64,
    #[serde(rename = "H")]
    pub h: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub j_lo: u64,
    pub j_hi: u64,
    #[serde(rename = "Q")]
    pub q: u64,
}

impl HyperbolaParams {
    /// Checks each hypothesis, naming the first one that fails.
    pub fn validate(&self) -> Result<()> {
        let (x, h, m, q) = (self.x as u128, self.h as u128, self.m as u128, self.q as u128);
        if x < 1 || h < 1 || m < 1 {
            return invalid("X, H, M must be at least 1");
        }
        if h * h * h < x {
            return invalid(format!("X^(1/3) <= H fails: H = {h}, X = {x}"));
        }
        if h > x {
            return invalid(format!("H <= X fails: H = {h}, X = {x}"));
        }
        if m * m > x {
            return invalid(format!("M <= sqrt(X) fails: M = {m}, X = {x}"));
        }
        if q < 1 {
            return invalid("Q >= 1 fails");
        }
        if q * h < m {
            return invalid(format!("M/H <= Q fails: M = {m}, H = {h}, Q = {q}"));
        }
        if q.pow(4) * h * x > m.pow(4) {
            return invalid(format!("Q <= M/(HX)^(1/4) fails: M = {m}, H = {h}, X = {x}, Q = {q}"));
        }
        if self.j_lo > self.j_hi || self.j_lo < self.m || self.j_hi > 2 * self.m {
            return invalid(format!("J = ({}, {}] is not a subinterval of (M, 2M] = ({m}, {}]", self.j_lo, self.j_hi, 2 * m));
        }
        Ok(())
    }

    /// `max(1, floor(HQ/M))`.
    pub fn chop_length(&self) -> u64 {
        (self.h * self.q / self.m).max(1)
    }

    /// `M^3 / (X Q^2 q)`.
    pub fn family_scale(&self, q: u64) -> f64 {
        (self.m as f64).powi(3) / (self.x as f64 * (self.q as f64).powi(2) * q as f64)
    }

    /// Every point of the set, sorted by `(m, n)`.
    pub fn enumerate(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for m in self.j_lo + 1..=self.j_hi {
            for n in self.x / m + 1..=(self.x + self.h) / m {
                out.push((m, n));
            }
        }
        out
    }

    pub fn contains(&self, m: i64, n: i64) -> bool {
        m > self.j_lo as i64 && m <= self.j_hi as i64 && n > 0 && {
            let p = m as u128 * n as u128;
            p > self.x as u128 && p <= (self.x + self.h) as u128
        }
    }

    /// Least `q <= Q` with `|n/m - a/q| <= 1/(Qq)`, and that `a` (ties to the smaller).
    pub fn approximate(&self, m: u64, n: u64) -> (u64, i64) {
        let (mm, nn) = (m as i128, n as i128);
        for q in 1..=self.q as i128 {
            // round(qn/m) with halves rounded down
            let num = 2 * q * nn - mm;
            let a = num.div_euclid(2 * mm) + i128::from(num.rem_euclid(2 * mm) != 0);
            if (q * nn - a * mm).abs() * self.q as i128 <= mm {
                return (q as u64, a as i64);
            }
        }
        unreachable!("Dirichlet's theorem gives q <= Q")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyStats {
    pub q: u64,
    pub a: i64,
    pub progressions: u64,
    pub points: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionStats {
    pub families: Vec<FamilyStats>,
    pub total_points: u64,
    pub total_progressions: u64,
    pub max_length: u64,
    /// Range of `a / ((X/M^2) q)` over the families.
    pub a_ratio_min: f64,
    pub a_ratio_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolaPartition {
    pub params: HyperbolaParams,
    /// Keyed by `(q, a)`.
    pub families: BTreeMap<(u64, i64), Vec<Progression2D>>,
}

pub fn partition_hyperbola(params: HyperbolaParams) -> Result<HyperbolaPartition> {
    params.validate()?;
    let ms: Vec<u64> = (params.j_lo + 1..=params.j_hi).collect();
    // (q, a, c, m, n)
    let mut pts: Vec<(u64, i64, i64, u64, u64)> = ms
        .par_iter()
        .flat_map_iter(|&m| {
            (params.x / m + 1..=(params.x + params.h) / m).map(move |n| {
                let (q, a) = params.approximate(m, n);
                (q, a, q as i64 * n as i64 + a * m as i64, m, n)
            })
        })
        .collect();
    pts.par_sort_unstable();
    let chop = params.chop_length();
    let mut families: BTreeMap<(u64, i64), Vec<Progression2D>> = BTreeMap::new();
    let mut i = 0;
    while i < pts.len() {
        let (q, a, c, _, _) = pts[i];
        let mut j = i;
        while j < pts.len() && (pts[j].0, pts[j].1, pts[j].2) == (q, a, c) {
            j += 1;
        }
        let fam = families.entry((q, a)).or_default();
        // maximal runs with m-step q, then chopped
        let mut s = i;
        while s < j {
            let mut e = s + 1;
            while e < j && pts[e].3 == pts[e - 1].3 + q {
                e += 1;
            }
            let mut k = s;
            while k < e {
                let len = (chop as usize).min(e - k);
                fam.push(Progression2D { q, a, m0: pts[k].3 as i64, n0: pts[k].4 as i64, len: len as u64 });
                k += len;
            }
            s = e;
        }
        i = j;
    }
    Ok(HyperbolaPartition { params, families })
}

impl HyperbolaPartition {
    pub fn stats(&self) -> PartitionStats {
        let p = &self.params;
        let scale = p.x as f64 / (p.m as f64).powi(2);
        let mut st = PartitionStats {
            families: Vec::new(),
            total_points: 0,
            total_progressions: 0,
            max_length: 0,
            a_ratio_min: f64::INFINITY,
            a_ratio_max: 0.0,
        };
        for (&(q, a), progs) in &self.families {
            let points: u64 = progs.iter().map(|g| g.len).sum();
            st.families.push(FamilyStats { q, a, progressions: progs.len() as u64, points });
            st.total_points += points;
            st.total_progressions += progs.len() as u64;
            st.max_length = st.max_length.max(progs.iter().map(|g| g.len).max().unwrap_or(0));
            let ratio = a as f64 / (scale * q as f64);
            st.a_ratio_min = st.a_ratio_min.min(ratio);
            st.a_ratio_max = st.a_ratio_max.max(ratio);
        }
        st
    }

    /// One JSON object per progression, `{q, a, m0, n0, len}`, in `(q, a)` order.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for progs in self.families.values() {
            for g in progs {
                writeln!(w, "{}", serde_json::to_string(g).map_err(|e| Error::Parse(e.to_string()))?)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    /// False when the set was too large to enumerate and membership was sampled.
    pub exhaustive: bool,
    pub failures: Vec<String>,
    pub set_size: u64,
    pub total_points: u64,
    pub progressions: u64,
    pub max_length: u64,
    /// `max` over families of `#progressions / (M^3/(XQ^2 q))`.
    pub fitted_c: f64,
    /// `total points / H`.
    pub fitted_c_total: f64,
    pub a_ratio_min: f64,
    pub a_ratio_max: f64,
}

const MAX_REPORTED: usize = 20;

pub fn verify_partition(p: &HyperbolaPartition) -> VerifyReport {
    let par = &p.params;
    let mut failures = Vec::new();
    let mut fail = |msg: String| {
        if failures.len() < MAX_REPORTED {
            failures.push(msg);
        }
    };
    if let Err(e) = par.validate() {
        fail(format!("parameters: {e}"));
    }
    let limit_len = par.chop_length();
    let bound = par.h as f64 * par.q as f64 / par.m as f64;
    for (&(q, a), progs) in &p.families {
        if q < 1 || q > par.q {
            fail(format!("family (q={q}, a={a}): q outside [1, Q]"));
        }
        if gcd(q, a.unsigned_abs()) != 1 {
            fail(format!("family (q={q}, a={a}): gcd(a, q) != 1"));
        }
        for g in progs {
            if (g.q, g.a) != (q, a) {
                fail(format!("progression {g:?} filed under family (q={q}, a={a})"));
            }
            if g.len == 0 || g.len > limit_len || g.len as f64 > bound.max(1.0) {
                fail(format!("progression {g:?}: length outside [1, HQ/M]"));
            }
            let c = q as i64 * g.n0 + a * g.m0;
            for (m, n) in g.points() {
                if !par.contains(m, n) {
                    fail(format!("progression {g:?}: point ({m}, {n}) outside the set"));
                    continue;
                }
                if q as i64 * n + a * m != c {
                    fail(format!("progression {g:?}: level qn + am not constant"));
                }
                if par.approximate(m as u64, n as u64) != (q, a) {
                    fail(format!("progression {g:?}: point ({m}, {n}) belongs to family {:?}", par.approximate(m as u64, n as u64)));
                }
            }
        }
    }
    let st = p.stats();
    let set_size: u64 = (par.j_lo + 1..=par.j_hi).map(|m| (par.x + par.h) / m - par.x / m).sum();
    let exhaustive = set_size <= ENUMERATION_LIMIT;
    if exhaustive {
        let mut covered: Vec<(i64, i64)> = p.families.values().flatten().flat_map(|g| g.points()).collect();
        covered.par_sort_unstable();
        for w in covered.windows(2) {
            if w[0] == w[1] {
                fail(format!("point {:?} covered twice", w[0]));
            }
        }
        covered.dedup();
        let set: Vec<(i64, i64)> = par.enumerate().into_iter().map(|(m, n)| (m as i64, n as i64)).collect();
        if covered != set {
            let a: HashSet<_> = covered.iter().collect();
            let missing = set.iter().filter(|pt| !a.contains(pt)).count();
            fail(format!("cover mismatch: {missing} points of the set are not covered"));
        }
    } else {
        // duplicates and coverage on a sample, via the (q, a, c) index
        let mut index: HashMap<(u64, i64, i64), Vec<&Progression2D>> = HashMap::new();
        for g in p.families.values().flatten() {
            index.entry((g.q, g.a, g.q as i64 * g.n0 + g.a * g.m0)).or_default().push(g);
        }
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(par.x ^ par.h);
        for _ in 0..100_000 {
            let m = rng.gen_range(par.j_lo + 1..=par.j_hi);
            let (lo, hi) = (par.x / m + 1, (par.x + par.h) / m);
            if lo > hi {
                continue;
            }
            let n = rng.gen_range(lo..=hi);
            let (q, a) = par.approximate(m, n);
            let hits = index
                .get(&(q, a, q as i64 * n as i64 + a * m as i64))
                .map_or(0, |v| v.iter().filter(|g| g.points().any(|pt| pt == (m as i64, n as i64))).count());
            if hits != 1 {
                fail(format!("sampled point ({m}, {n}) covered {hits} times"));
            }
        }
    }
    if st.total_points != set_size {
        fail(format!("progressions hold {} points, the set has {set_size}", st.total_points));
    }
    let fitted_c = st
        .families
        .iter()
        .map(|f| f.progressions as f64 / par.family_scale(f.q))
        .fold(0.0, f64::max);
    VerifyReport {
        pass: failures.is_empty(),
        exhaustive,
        failures,
        set_size,
        total_points: st.total_points,
        progressions: st.total_progressions,
        max_length: st.max_length,
        fitted_c,
        fitted_c_total: st.total_points as f64 / par.h as f64,
        a_ratio_min: st.a_ratio_min,
        a_ratio_max: st.a_ratio_max,
    }
}

/// A random parameter set satisfying every hypothesis, with `X <= x_max`.
pub fn random_admissible(rng: &mut impl rand::Rng, x_min: u64, x_max: u64, h_max: u64) -> HyperbolaParams {
    loop {
        let x = (rng.gen_range((x_min as f64).ln()..=(x_max as f64).ln())).exp() as u64;
        let xf = x as f64;
        let m_lo = xf.cbrt().ceil() as u64;
        let m_hi = crate::arith::iroot(x, 2);
        if m_lo > m_hi {
            continue;
        }
        let m = rng.gen_range(m_lo..=m_hi);
        let h_lo = xf.cbrt().ceil() as u64;
        let h_hi = (((m as f64).powi(4) / xf).floor() as u64).min(x).min(h_max);
        if h_lo > h_hi {
            continue;
        }
        let h = (rng.gen_range((h_lo as f64).ln()..=(h_hi as f64).ln())).exp().round() as u64;
        let h = h.clamp(h_lo, h_hi);
        let q_lo = m.div_ceil(h).max(1);
        let q_hi = ((m as f64) / (h as f64 * xf).powf(0.25)).floor() as u64 + 1;
        let qs: Vec<u64> = (q_lo..=q_hi).collect();
        let mut found = None;
        for &q in qs.iter().rev() {
            let cand = HyperbolaParams { x, h, m, j_lo: m, j_hi: 2 * m, q };
            if cand.validate().is_ok() {
                found = Some(q);
                break;
            }
        }
        let Some(q_top) = found else { continue };
        let q = rng.gen_range(q_lo.min(q_top)..=q_top);
        let a = rng.gen_range(m..=2 * m);
        let b = rng.gen_range(m..=2 * m);
        let cand = HyperbolaParams { x, h, m, j_lo: a.min(b), j_hi: a.max(b), q };
        if cand.validate().is_ok() {
            return cand;
        }
    }
}
