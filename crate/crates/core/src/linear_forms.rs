//! Affine-linear systems: local factors, the Archimedean factor over an axis
//! box, and weighted counts of `Π_i w(ψ_i(n))` over the box.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{binomial, primes_up_to};
use crate::error::{invalid, Error, Result};
use crate::interval_sieve::{sieve_slab, IntervalSlab, Kind};

/// Largest residue enumeration for a local factor.
pub const LOCAL_LIMIT: u64 = 100_000_000;
/// Largest box for a weighted count.
pub const COUNT_LIMIT: u64 = 1_000_000_000;
/// Nodes per axis for the Archimedean quadrature, before the total cap.
pub const QUAD_NODES: usize = 1 << 10;
const QUAD_TOTAL: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineForm {
    pub dot: Vec<i64>,
    #[serde(rename = "const")]
    pub c: i64,
}

impl AffineForm {
    pub fn eval(&self, n: &[i64]) -> i64 {
        self.dot.iter().zip(n).map(|(a, b)| a * b).sum::<i64>() + self.c
    }

    fn eval_f(&self, x: &[f64]) -> f64 {
        self.dot.iter().zip(x).map(|(a, b)| *a as f64 * b).sum::<f64>() + self.c as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SystemJson", into = "SystemJson")]
pub struct AffineLinearSystem {
    d: usize,
    forms: Vec<AffineForm>,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    d: usize,
    t: usize,
    forms: Vec<AffineForm>,
}

impl TryFrom<SystemJson> for AffineLinearSystem {
    type Error = Error;
    fn try_from(j: SystemJson) -> Result<Self> {
        if j.t != j.forms.len() {
            return invalid(format!("t = {} but {} forms given", j.t, j.forms.len()));
        }
        AffineLinearSystem::new(j.d, j.forms)
    }
}

impl From<AffineLinearSystem> for SystemJson {
    fn from(s: AffineLinearSystem) -> Self {
        SystemJson { d: s.d, t: s.forms.len(), forms: s.forms }
    }
}

impl AffineLinearSystem {
    /// Rejects forms of the wrong length or with zero linear part. Pairwise
    /// independence is a hypothesis of the counting theorem, not of the local
    /// factors, and is checked separately by [`Self::check_independent`].
    pub fn new(d: usize, forms: Vec<AffineForm>) -> Result<AffineLinearSystem> {
        if d == 0 || forms.is_empty() {
            return invalid("need d >= 1 and at least one form");
        }
        for (i, f) in forms.iter().enumerate() {
            if f.dot.len() != d {
                return invalid(format!("form {i} has {} coefficients, expected {d}", f.dot.len()));
            }
            if f.dot.iter().all(|&a| a == 0) {
                return invalid(format!("form {i} has zero linear part"));
            }
        }
        Ok(AffineLinearSystem { d, forms })
    }

    pub fn check_independent(&self) -> Result<()> {
        let (d, forms) = (self.d, &self.forms);
        for i in 0..forms.len() {
            for j in i + 1..forms.len() {
                let (a, b) = (&forms[i].dot, &forms[j].dot);
                let dependent = (0..d).all(|r| (0..d).all(|s| a[r] as i128 * b[s] as i128 == a[s] as i128 * b[r] as i128));
                if dependent {
                    return invalid(format!("forms {i} and {j} have linearly dependent linear parts"));
                }
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[AffineForm] {
        &self.forms
    }

    /// `(n_1, n_2, N - n_1 - n_2)`.
    pub fn ternary(n: i64) -> AffineLinearSystem {
        let f = |dot: Vec<i64>, c| AffineForm { dot, c };
        AffineLinearSystem::new(2, vec![f(vec![1, 0], 0), f(vec![0, 1], 0), f(vec![-1, -1], n)]).unwrap()
    }

    /// Forms `n + h` for each shift, in one variable.
    pub fn shifts(hs: &[i64]) -> Result<AffineLinearSystem> {
        AffineLinearSystem::new(1, hs.iter().map(|&h| AffineForm { dot: vec![1], c: h }).collect())
    }
}

/// `Π_j (X_j, X_j + H_j]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntBox {
    pub x: Vec<i64>,
    pub h: Vec<u64>,
}

impl IntBox {
    pub fn new(x: Vec<i64>, h: Vec<u64>) -> Result<IntBox> {
        if x.len() != h.len() {
            return invalid("box corner and sides have different dimensions");
        }
        if h.iter().any(|&v| v < 1) {
            return invalid("box sides must be at least 1");
        }
        Ok(IntBox { x, h })
    }

    /// Side `2 ceil(N^0.65)` centred at `(N/3, N/3)`.
    pub fn ternary(n: i64) -> IntBox {
        let s = (n as f64).powf(0.65).ceil() as i64;
        IntBox { x: vec![n / 3 - s; 2], h: vec![2 * s as u64; 2] }
    }

    pub fn points(&self) -> u128 {
        self.h.iter().map(|&v| v as u128).product()
    }

    /// Least and greatest value of `f` over the integer points.
    fn range(&self, f: &AffineForm) -> (i64, i64) {
        let mut lo = f.c;
        let mut hi = f.c;
        for ((&a, &x), &h) in f.dot.iter().zip(&self.x).zip(&self.h) {
            let (u, v) = (a * (x + 1), a * (x + h as i64));
            lo += u.min(v);
            hi += u.max(v);
        }
        (lo, hi)
    }
}

fn residues(p: u64, d: usize) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..d {
        total = total.checked_mul(p).filter(|&t| t <= LOCAL_LIMIT).ok_or_else(|| {
            Error::Budget(format!("{p}^{d} residues exceed {LOCAL_LIMIT}"))
        })?;
    }
    Ok(total)
}

/// Runs `f` over every residue vector in `(Z/m)^d`, summing the results.
fn residue_sum(m: u64, d: usize, f: impl Fn(&[i64]) -> u128 + Sync) -> u128 {
    (0..m as i64)
        .into_par_iter()
        .map(|first| {
            let mut n = vec![0i64; d];
            n[0] = first;
            let mut s = 0u128;
            loop {
                s += f(&n);
                let mut j = 1;
                while j < d {
                    n[j] += 1;
                    if n[j] < m as i64 {
                        break;
                    }
                    n[j] = 0;
                    j += 1;
                }
                if j >= d {
                    break;
                }
            }
            s
        })
        .sum()
}

fn big(n: u128) -> BigInt {
    BigInt::from(n)
}

/// `β_p = E_{n mod p} Π_i (p/(p-1)) 1_{ψ_i(n) ≠ 0 mod p}`, exactly.
pub fn local_factor_lambda(sys: &AffineLinearSystem, p: u64) -> Result<BigRational> {
    if !crate::arith::is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    let total = residues(p, sys.d)?;
    let good = residue_sum(p, sys.d, |n| u128::from(sys.forms.iter().all(|f| f.eval(n).rem_euclid(p as i64) != 0)));
    let t = sys.t() as u32;
    let num = big(good) * BigInt::from(p).pow(t);
    let den = BigInt::from(total) * BigInt::from(p - 1).pow(t);
    Ok(BigRational::new(num, den))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalDk {
    pub value: BigRational,
    /// Bound on the error from capping `v_p` at `J`.
    pub tail_bound: f64,
}

/// `β_p = E_{n mod p^J} Π_i ((p-1)/p)^{k-1} C(k-1+v_p(ψ_i(n)), k-1)` with `v_p` capped at `J`.
pub fn local_factor_dk(sys: &AffineLinearSystem, p: u64, k: u32, j: u32) -> Result<LocalDk> {
    if !crate::arith::is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    if k < 1 || j < 1 {
        return invalid("need k >= 1 and J >= 1");
    }
    let m = p.checked_pow(j).filter(|&m| m <= LOCAL_LIMIT).ok_or_else(|| Error::Budget(format!("{p}^{j} too large")))?;
    let total = residues(m, sys.d)?;
    let dk: Vec<u128> = (0..=j as u64).map(|v| binomial(k as u64 - 1 + v, k as u64 - 1)).collect();
    let vp = |mut r: i64| {
        r = r.rem_euclid(m as i64);
        if r == 0 {
            return j as usize;
        }
        let mut v = 0;
        while r % p as i64 == 0 {
            r /= p as i64;
            v += 1;
        }
        v
    };
    let s = residue_sum(m, sys.d, |n| sys.forms.iter().map(|f| dk[vp(f.eval(n))]).product());
    let e = (k - 1) * sys.t() as u32;
    let value = BigRational::new(big(s) * BigInt::from(p - 1).pow(e), BigInt::from(total) * BigInt::from(p).pow(e));
    let pf = p as f64;
    let tail_bound =
        sys.t() as f64 * pf.powi(-(j as i32)) * binomial(k as u64 + j as u64, k as u64 - 1) as f64 * pf / (pf - 1.0)
            * value.to_f64().unwrap_or(f64::INFINITY).max(1.0);
    Ok(LocalDk { value, tail_bound })
}

/// `Π_{p <= P} β_p` for the Λ-weight.
pub fn singular_series(sys: &AffineLinearSystem, p_max: u64) -> Result<BigRational> {
    let mut acc = BigRational::one();
    for p in primes_up_to(p_max) {
        acc *= local_factor_lambda(sys, p)?;
    }
    Ok(acc)
}

/// `C = max_p p^2 |β_p - 1|` over the primes up to `p_max`.
pub fn fit_local_constant(sys: &AffineLinearSystem, p_max: u64) -> Result<f64> {
    let mut c: f64 = 0.0;
    for p in primes_up_to(p_max) {
        let b = local_factor_lambda(sys, p)?.to_f64().unwrap_or(f64::NAN);
        c = c.max((p * p) as f64 * (b - 1.0).abs());
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    Lambda,
    Mu,
    Dk(u32),
}

impl Weight {
    fn kind(self) -> Kind {
        match self {
            Weight::Lambda => Kind::LambdaVm,
            Weight::Mu => Kind::Mu,
            Weight::Dk(k) => Kind::Dk(k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Archimedean {
    pub value: f64,
    /// `|value - value at half the nodes|`.
    pub refinement_delta: f64,
}

/// Length of `{s in (lo, hi] : ψ_i(x with x_last = s) > 0 for all i}`.
fn positive_length(sys: &AffineLinearSystem, x: &mut [f64], lo: f64, hi: f64) -> f64 {
    let last = x.len() - 1;
    let (mut a, mut b) = (lo, hi);
    for f in &sys.forms {
        x[last] = 0.0;
        let c = f.eval_f(x);
        let k = f.dot[last] as f64;
        if k == 0.0 {
            if c <= 0.0 {
                return 0.0;
            }
        } else if k > 0.0 {
            a = a.max(-c / k);
        } else {
            b = b.min(-c / k);
        }
    }
    (b - a).max(0.0)
}

fn quadrature(sys: &AffineLinearSystem, bx: &IntBox, w: Weight, nodes: usize) -> f64 {
    let d = sys.d;
    // the positive set meets each line parallel to the last axis in an interval,
    // so for the indicator weight that axis is integrated exactly
    let exact_last = w != Weight::Mu && !matches!(w, Weight::Dk(k) if k > 1);
    let grid_dims = if exact_last { d - 1 } else { d };
    let cell: f64 = bx.h[..grid_dims].iter().map(|&h| h as f64 / nodes as f64).product();
    let total = nodes.pow(grid_dims as u32);
    let s: f64 = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for j in 0..grid_dims {
                let i = idx % nodes;
                idx /= nodes;
                x[j] = bx.x[j] as f64 + (i as f64 + 0.5) * bx.h[j] as f64 / nodes as f64;
            }
            if exact_last {
                let lo = bx.x[d - 1] as f64;
                return positive_length(sys, &mut x, lo, lo + bx.h[d - 1] as f64);
            }
            let mut v = 1.0;
            for f in &sys.forms {
                let y = f.eval_f(&x);
                v *= match w {
                    Weight::Lambda | Weight::Mu => f64::from(y > 0.0),
                    Weight::Dk(k) => {
                        let l = y.max(1.0).ln();
                        l.powi(k as i32 - 1) / (1..k).map(f64::from).product::<f64>()
                    }
                };
            }
            v
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    s * cell
}

/// `vol(K ∩ Ψ^{-1}(R_{>0}^t))`, or `∫_K Π log_+^{k-1}(ψ_i)/(k-1)!` for `d_k`, by
/// the midpoint rule with `2^10` nodes per axis (fewer in high dimension). For the
/// volume the last axis is integrated exactly.
pub fn archimedean_factor(sys: &AffineLinearSystem, bx: &IntBox, w: Weight) -> Result<Archimedean> {
    if bx.x.len() != sys.d {
        return invalid("box dimension differs from the system's");
    }
    if w == Weight::Mu {
        return Ok(Archimedean { value: 0.0, refinement_delta: 0.0 });
    }
    let mut nodes = QUAD_NODES;
    while nodes > 2 && nodes.pow(sys.d as u32 - 1) > QUAD_TOTAL {
        nodes /= 2;
    }
    let fine = quadrature(sys, bx, w, nodes);
    let coarse = quadrature(sys, bx, w, nodes / 2);
    Ok(Archimedean { value: fine, refinement_delta: (fine - coarse).abs() })
}

/// `Σ_{n ∈ box} Π_i w(ψ_i(n))` with `w` zero on nonpositive integers.
pub fn count_weighted_solutions(sys: &AffineLinearSystem, bx: &IntBox, w: Weight) -> Result<f64> {
    if bx.x.len() != sys.d {
        return invalid("box dimension differs from the system's");
    }
    if bx.points() > COUNT_LIMIT as u128 {
        return Err(Error::Budget(format!("box has {} points, limit {COUNT_LIMIT}", bx.points())));
    }
    // one slab per form over the positive part of its range
    let slabs: Vec<Option<IntervalSlab>> = sys
        .forms
        .iter()
        .map(|f| {
            let (lo, hi) = bx.range(f);
            if hi < 1 {
                return Ok(None);
            }
            let lo = lo.max(1);
            sieve_slab(lo as u64 - 1, (hi - lo + 1) as u64, w.kind()).map(Some)
        })
        .collect::<Result<_>>()?;
    let d = sys.d;
    let at = |i: usize, v: i64| -> f64 {
        match &slabs[i] {
            Some(s) if v > s.x as i64 && v <= (s.x + s.h) as i64 => s.values[(v - s.x as i64 - 1) as usize],
            _ => 0.0,
        }
    };
    let first: Vec<i64> = (bx.x[0] + 1..=bx.x[0] + bx.h[0] as i64).collect();
    Ok(first
        .par_iter()
        .map(|&n0| {
            let mut n: Vec<i64> = bx.x.iter().map(|&x| x + 1).collect();
            n[0] = n0;
            let mut s = 0.0;
            loop {
                let mut v = 1.0;
                for (i, f) in sys.forms.iter().enumerate() {
                    v *= at(i, f.eval(&n));
                    if v == 0.0 {
                        break;
                    }
                }
                s += v;
                let mut j = 1;
                while j < d {
                    n[j] += 1;
                    if n[j] <= bx.x[j] + bx.h[j] as i64 {
                        break;
                    }
                    n[j] = bx.x[j] + 1;
                    j += 1;
                }
                if j >= d {
                    break;
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimeSolutions {
    pub count: f64,
    pub beta_inf: f64,
    pub singular_series: f64,
    pub prediction: f64,
    /// `count / prediction - 1`, or 0 when both vanish.
    pub relative_error: f64,
}

pub fn prime_solutions(sys: &AffineLinearSystem, bx: &IntBox, p_max: u64) -> Result<PrimeSolutions> {
    sys.check_independent()?;
    let count = count_weighted_solutions(sys, bx, Weight::Lambda)?;
    let beta_inf = archimedean_factor(sys, bx, Weight::Lambda)?.value;
    let ss = singular_series(sys, p_max)?.to_f64().unwrap_or(f64::NAN);
    let prediction = beta_inf * ss;
    let relative_error = if prediction == 0.0 {
        if count == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        count / prediction - 1.0
    };
    Ok(PrimeSolutions { count, beta_inf, singular_series: ss, prediction, relative_error })
}

/// A system of `t` forms in `d` variables with coefficients in `[-3, 3]`.
pub fn random_system(rng: &mut impl rand::Rng, d: usize, t: usize) -> AffineLinearSystem {
    loop {
        let forms = (0..t)
            .map(|_| AffineForm { dot: (0..d).map(|_| rng.gen_range(-3..=3)).collect(), c: rng.gen_range(-20..=20) })
            .collect();
        if let Ok(s) = AffineLinearSystem::new(d, forms) {
            if s.check_independent().is_ok() {
                return s;
            }
        }
    }
}
