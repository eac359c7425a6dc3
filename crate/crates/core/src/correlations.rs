//! Exponential sums, character and `n^{iT}` twists, Gowers norms over short
//! intervals, and a sup probe for short Dirichlet polynomials.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::arith::{factor_trial, gcd, next_prime, pow_mod};
use crate::error::{invalid, Error, Result};
use crate::interval_sieve::IntervalSlab;
use crate::poly_equidist::PolyMod1;

/// `e(θ) = exp(2πiθ)` for `θ` already reduced mod 1.
pub fn e(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * theta)
}

pub fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// `sum_{X<n<=X+H} f(n) e(P(n))`, with `P(n)` reduced mod 1 exactly.
pub fn exp_sum(f: &IntervalSlab, p: &PolyMod1) -> Complex64 {
    let x = f.x as i64;
    f.values
        .par_iter()
        .enumerate()
        .with_min_len(4096)
        .map(|(i, &v)| if v == 0.0 { Complex64::new(0.0, 0.0) } else { v * e(p.frac_at(x + 1 + i as i64)) })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// `sum f(n) e(αn)` for a linear phase, the hot loop of frequency sweeps.
///
/// The phase is reduced exactly at the start of each block of 4096 terms; inside
/// a block `α j` with `j < 4096` is added in floating point.
pub fn linear_exp_sum(f: &IntervalSlab, alpha: f64) -> Complex64 {
    const BLOCK: usize = 4096;
    let p = PolyMod1::float(0, crate::poly_equidist::Basis::Monomial, vec![0.0, alpha]).expect("valid linear phase");
    let step = alpha - alpha.floor();
    let x = f.x as i64;
    f.values
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(b, vs)| {
            let base = p.frac_at(x + 1 + (b * BLOCK) as i64);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in vs.iter().enumerate() {
                if v != 0.0 {
                    let t = base + step * j as f64;
                    acc += v * e(t - t.floor());
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// A Dirichlet character given by its table of values mod `q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletCharacter {
    pub q: u64,
    pub values: Vec<Complex64>,
}

impl DirichletCharacter {
    pub fn principal(q: u64) -> DirichletCharacter {
        let values = (0..q).map(|n| if gcd(n, q) == 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect();
        DirichletCharacter { q, values }
    }

    /// Validates complete multiplicativity, the zero pattern and unit modulus.
    pub fn from_table(q: u64, values: Vec<Complex64>) -> Result<DirichletCharacter> {
        if q < 1 || values.len() as u64 != q {
            return invalid(format!("a character mod {q} needs {q} values"));
        }
        for n in 0..q {
            let v = values[n as usize];
            if gcd(n, q) == 1 {
                if (v.norm() - 1.0).abs() > 1e-9 {
                    return invalid(format!("|χ({n})| != 1"));
                }
            } else if v.norm() > 1e-12 {
                return invalid(format!("χ({n}) must vanish, gcd({n}, {q}) > 1"));
            }
        }
        for a in 0..q {
            for b in a..q {
                let lhs = values[((a * b) % q) as usize];
                if (lhs - values[a as usize] * values[b as usize]).norm() > 1e-9 {
                    return invalid(format!("χ({a}·{b}) != χ({a})χ({b})"));
                }
            }
        }
        Ok(DirichletCharacter { q, values })
    }

    pub fn eval(&self, n: u64) -> Complex64 {
        self.values[(n % self.q) as usize]
    }

    pub fn is_principal(&self) -> bool {
        self.values.iter().all(|v| v.norm() == 0.0 || (v - Complex64::new(1.0, 0.0)).norm() < 1e-12)
    }

    /// All `φ(q)` characters mod `q`, the principal one first.
    pub fn all(q: u64) -> Result<Vec<DirichletCharacter>> {
        if q < 1 {
            return invalid("modulus must be positive");
        }
        // generators of (Z/qZ)^*: one or two per prime-power component
        let mut gens: Vec<(u64, u64, u64)> = Vec::new(); // (generator mod q, order, component modulus)
        let mut comps = Vec::new();
        for (p, k) in factor_trial(q) {
            let pk = p.pow(k);
            comps.push(pk);
            if p == 2 {
                if k >= 2 {
                    gens.push((pk - 1, 2, pk));
                }
                if k >= 3 {
                    gens.push((5, pk / 4, pk));
                }
            } else {
                gens.push((primitive_root_prime_power(p, k), pk / p * (p - 1), pk));
            }
        }
        // log table: exponent vector of every unit mod q
        let mut logs: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        logs.insert(1 % q, vec![0; gens.len()]);
        let mut frontier = vec![1 % q];
        // breadth-first over products of generators, lifted to q by CRT
        let lifts: Vec<u64> = gens.iter().map(|&(g, _, m)| crt_lift(g, m, q, &comps)).collect();
        while let Some(u) = frontier.pop() {
            let lu = logs[&u].clone();
            for (i, &g) in lifts.iter().enumerate() {
                let v = (u as u128 * g as u128 % q as u128) as u64;
                if let std::collections::btree_map::Entry::Vacant(slot) = logs.entry(v) {
                    let mut lv = lu.clone();
                    lv[i] = (lv[i] + 1) % gens[i].1;
                    slot.insert(lv);
                    frontier.push(v);
                }
            }
        }
        let orders: Vec<u64> = gens.iter().map(|g| g.1).collect();
        let total: u64 = orders.iter().product();
        let mut out = Vec::with_capacity(total as usize);
        for idx in 0..total {
            let mut ks = Vec::with_capacity(orders.len());
            let mut r = idx;
            for &o in &orders {
                ks.push(r % o);
                r /= o;
            }
            let mut values = vec![Complex64::new(0.0, 0.0); q as usize];
            for (&u, lv) in &logs {
                let phase: f64 = lv.iter().zip(&ks).zip(&orders).map(|((&l, &k), &o)| (l * k % o) as f64 / o as f64).sum();
                values[u as usize] = e(phase - phase.floor());
            }
            out.push(DirichletCharacter { q, values });
        }
        Ok(out)
    }

    /// The nonprincipal character mod 4.
    pub fn chi4() -> DirichletCharacter {
        let z = Complex64::new(0.0, 0.0);
        DirichletCharacter { q: 4, values: vec![z, Complex64::new(1.0, 0.0), z, Complex64::new(-1.0, 0.0)] }
    }
}

fn primitive_root_prime_power(p: u64, k: u32) -> u64 {
    let pk = p.pow(k);
    let phi = pk / p * (p - 1);
    let fs: Vec<u64> = factor_trial(phi).into_iter().map(|f| f.0).collect();
    (2..pk)
        .find(|&g| gcd(g, p) == 1 && fs.iter().all(|&r| pow_mod(g, phi / r, pk) != 1))
        .expect("odd prime powers have primitive roots")
}

/// The unit mod `q` that is `g` mod `m` and 1 mod the other components.
fn crt_lift(g: u64, m: u64, q: u64, comps: &[u64]) -> u64 {
    (0..q)
        .find(|&x| comps.iter().all(|&c| if c == m { x % c == g % c } else { x % c == 1 % c }))
        .unwrap()
}

/// `sum f(n) χ(n) n^{iT}`.
pub fn twisted_sum(f: &IntervalSlab, t: f64, chi: Option<&DirichletCharacter>) -> Complex64 {
    twisted_values(f, t, chi).into_iter().sum()
}

/// The summands `f(n) χ(n) n^{iT}`, for composing with maximal sums.
pub fn twisted_values(f: &IntervalSlab, t: f64, chi: Option<&DirichletCharacter>) -> Vec<Complex64> {
    f.values
        .par_iter()
        .enumerate()
        .with_min_len(4096)
        .map(|(i, &v)| {
            let n = f.n(i);
            let c = chi.map_or(Complex64::new(1.0, 0.0), |c| c.eval(n));
            v * c * Complex64::from_polar(1.0, t * (n as f64).ln())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GowersResult {
    pub s: u32,
    #[serde(rename = "X")]
    pub x: u64,
    #[serde(rename = "H")]
    pub h: u64,
    /// `‖f 1_{(X,X+H]}‖_{U^s(Z)}`
    pub unnormalized: f64,
    /// `‖1_{(X,X+H]}‖_{U^s(Z)}`
    pub normalizer: f64,
    pub normalized: f64,
}

/// Work cap for Gowers norms, in elementary operations.
pub const GOWERS_BUDGET: f64 = 4e10;

/// `‖f‖_{U^s(X,X+H]}` of a slab.
pub fn gowers_norm(f: &IntervalSlab, s: u32) -> Result<GowersResult> {
    gowers_norm_complex(&to_complex(&f.values), f.x, s)
}

/// As [`gowers_norm`] for complex values on `(X, X+H]`, `H = f.len()`.
pub fn gowers_norm_complex(f: &[Complex64], x: u64, s: u32) -> Result<GowersResult> {
    let h = f.len() as u64;
    if !(1..=4).contains(&s) {
        return invalid(format!("s = {s} outside 1..=4"));
    }
    if h < 1 {
        return invalid("H must be at least 1");
    }
    if s >= 3 && h > 1 << 12 {
        return Err(Error::Budget(format!("H = {h} > 2^12 for s = {s}")));
    }
    let hf = h as f64;
    let cost = hf.powi(s as i32 - 1) * hf.log2().max(1.0) * 8.0;
    if cost > GOWERS_BUDGET {
        return Err(Error::Budget(format!("U^{s} over H = {h} needs about {cost:.1e} operations")));
    }
    let power = gowers_power(f, s);
    let norm_power = indicator_gowers_power(h, s);
    let root = 1.0 / 2f64.powi(s as i32);
    let unnormalized = power.max(0.0).powf(root);
    let normalizer = norm_power.powf(root);
    Ok(GowersResult { s, x, h, unnormalized, normalizer, normalized: unnormalized / normalizer })
}

/// `‖f‖_{U^s(Z)}^{2^s}` for `f` supported on `[0, len)`, by the derivative recursion.
pub fn gowers_power(f: &[Complex64], s: u32) -> f64 {
    match s {
        1 => f.iter().sum::<Complex64>().norm_sqr(),
        2 => u2_power_direct(f),
        _ => recurse(f, s),
    }
}

fn recurse(f: &[Complex64], s: u32) -> f64 {
    let len = f.len();
    // ‖Δ_{-h} f‖ = ‖Δ_h f‖, so only h >= 0 is visited
    let terms: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|h| {
            let d: Vec<Complex64> = (0..len - h).map(|x| f[x] * f[x + h].conj()).collect();
            let v = if s == 3 { u2_power_fft(&d) } else { recurse(&d, s - 1) };
            if h == 0 {
                v
            } else {
                2.0 * v
            }
        })
        .collect();
    terms.iter().sum()
}

/// `sum_h |sum_x f(x) conj f(x+h)|^2`, directly.
pub fn u2_power_direct(f: &[Complex64]) -> f64 {
    let len = f.len();
    let terms: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|h| {
            let a: Complex64 = (0..len - h).map(|x| f[x] * f[x + h].conj()).sum();
            if h == 0 {
                a.norm_sqr()
            } else {
                2.0 * a.norm_sqr()
            }
        })
        .collect();
    terms.iter().sum()
}

/// `‖f‖_{U^2}^4 = (1/N) sum_k |f^(k)|^4` on a cyclic group of size `N >= 2 len - 1`.
fn u2_power_fft(f: &[Complex64]) -> f64 {
    if f.len() <= 48 {
        return u2_power_direct(f);
    }
    u2_power_cyclic(f, (2 * f.len() - 1).next_power_of_two())
}

fn u2_power_cyclic(f: &[Complex64], n: usize) -> f64 {
    thread_local! {
        static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..f.len()].copy_from_slice(f);
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    buf.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / n as f64
}

/// The Fourier side of the `U^2` identity, embedded in `Z/NZ` with `N = next_prime(4 len)`.
pub fn u2_power_fourier(f: &[Complex64]) -> f64 {
    u2_power_cyclic(f, next_prime(4 * f.len() as u64) as usize)
}

/// `‖1_{[0,H)}‖_{U^s(Z)}^{2^s} = sum_t N_s(t) max(0, H - t)`, where `N_s(t)`
/// counts `h ∈ Z^s` with `sum |h_i| = t`.
pub fn indicator_gowers_power(h: u64, s: u32) -> f64 {
    let h = h as usize;
    let mut n = vec![0u128; h];
    n[0] = 1;
    for _ in 0..s {
        let mut next = vec![0u128; h];
        for (t, &c) in n.iter().enumerate() {
            if c == 0 {
                continue;
            }
            next[t] += c;
            for u in 1..h - t {
                next[t + u] += 2 * c;
            }
        }
        n = next;
    }
    n.iter().enumerate().map(|(t, &c)| c as f64 * (h - t) as f64).sum()
}

/// Averaged Gowers norm on `Z/NZ`, `N = f.len()`: `‖f‖^{2^s} = E_h ‖Δ_h f‖^{2^{s-1}}`, `‖f‖_{U^1} = |E f|`.
pub fn cyclic_gowers_norm(f: &[Complex64], s: u32) -> f64 {
    fn power(f: &[Complex64], s: u32) -> f64 {
        let n = f.len();
        if s == 1 {
            return (f.iter().sum::<Complex64>() / n as f64).norm_sqr();
        }
        (0..n)
            .map(|h| {
                let d: Vec<Complex64> = (0..n).map(|x| f[x] * f[(x + h) % n].conj()).collect();
                power(&d, s - 1)
            })
            .sum::<f64>()
            / n as f64
    }
    power(f, s).max(0.0).powf(1.0 / 2f64.powi(s as i32))
}

/// `max` over a `t`-grid on `[t_lo, t_hi]` and all prefixes `(L, y]` of
/// `|sum_{L<ℓ<=y} v_ℓ χ(ℓ) ℓ^{-1/2-it}|`, with `v[i]` at `ℓ = L+1+i`.
/// Three golden-section rounds polish the best grid point; the result is a probe,
/// not a certified supremum.
pub fn dirichlet_poly_sup(v: &[Complex64], l: u64, chi: &DirichletCharacter, t_lo: f64, t_hi: f64, grid: usize) -> Result<(f64, f64)> {
    if grid < 2 {
        return invalid("grid must have at least 2 points");
    }
    if !(t_hi >= t_lo) {
        return invalid("t_hi must be at least t_lo");
    }
    let w: Vec<(f64, Complex64)> = v
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let ell = l + 1 + i as u64;
            ((ell as f64).ln(), c * chi.eval(ell) / (ell as f64).sqrt())
        })
        .collect();
    let g = |t: f64| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut best: f64 = 0.0;
        for &(lg, c) in &w {
            acc += c * Complex64::from_polar(1.0, -t * lg);
            best = best.max(acc.norm());
        }
        best
    };
    let step = (t_hi - t_lo) / (grid - 1) as f64;
    let vals: Vec<(f64, f64)> = (0..grid).into_par_iter().map(|k| {
        let t = t_lo + k as f64 * step;
        (g(t), t)
    }).collect();
    let (mut best, mut arg) = vals.iter().fold((f64::NEG_INFINITY, t_lo), |acc, &(v, t)| if v > acc.0 { (v, t) } else { acc });
    // golden-section polish inside the neighbouring grid cells
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((arg - step).max(t_lo), (arg + step).min(t_hi));
    for _ in 0..3 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        let (gc, gd) = (g(c), g(d));
        for (gv, t) in [(gc, c), (gd, d)] {
            if gv > best {
                best = gv;
                arg = t;
            }
        }
        if gc >= gd {
            b = d;
        } else {
            a = c;
        }
    }
    Ok((best, arg))
}

/// One row of a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: Complex64,
    pub normalized: f64,
}

/// Writes `param,re,im,abs,normalized`.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "param,re,im,abs,normalized")?;
    for r in rows {
        writeln!(w, "{},{:?},{:?},{:?},{:?}", r.param, r.value.re, r.value.im, r.value.norm(), r.normalized)?;
    }
    w.flush()?;
    Ok(())
}
