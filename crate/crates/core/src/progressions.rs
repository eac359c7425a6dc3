//! Arithmetic progressions, maximal sums `|Σ f|*` and total variation norms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `{start, start + step, ..., start + (length-1) step}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Progression1D {
    pub start: i64,
    pub step: u64,
    pub length: u64,
}

impl Progression1D {
    pub fn new(start: i64, step: u64, length: u64) -> Result<Progression1D> {
        if step < 1 {
            return invalid("progression step must be at least 1");
        }
        Ok(Progression1D { start, step, length })
    }

    /// The integers of `(x, x+h]`.
    pub fn interval(x: i64, h: u64) -> Progression1D {
        Progression1D { start: x + 1, step: 1, length: h }
    }

    pub fn empty() -> Progression1D {
        Progression1D { start: 0, step: 1, length: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn get(&self, i: u64) -> i64 {
        self.start + (i * self.step) as i64
    }

    pub fn elements(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.length).map(|i| self.get(i))
    }

    pub fn contains(&self, n: i64) -> bool {
        if self.length == 0 || n < self.start {
            return false;
        }
        let d = (n - self.start) as u64;
        d % self.step == 0 && d / self.step < self.length
    }
}

/// A progression in `Z^2` with spacing `(q, -a)`: the points `(m0 + i q, n0 - i a)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Progression2D {
    pub q: u64,
    pub a: i64,
    pub m0: i64,
    pub n0: i64,
    pub len: u64,
}

impl Progression2D {
    pub fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.len as i64).map(|i| (self.m0 + i * self.q as i64, self.n0 - i * self.a))
    }
}

/// Work cap for [`maximal_sum`], in endpoint pairs examined.
pub const MAXIMAL_SUM_BUDGET: f64 = 1.4e9;

#[derive(Clone, Copy, Debug)]
struct Best {
    value: f64,
    key: (u64, u64, u64),
}

impl Best {
    fn better(self, o: Best) -> Best {
        if o.value > self.value || (o.value == self.value && o.key < self.key) {
            o
        } else {
            self
        }
    }
}

/// `|Σ_{n∈I} f(n)|*` restricted to subprogressions of step at most `q_max`,
/// for `f` given on the integers `first_n, first_n + 1, ...`.
///
/// Ties go to the lexicographically smallest `(step, start, length)`.
pub fn maximal_sum(f: &[Complex64], first_n: i64, q_max: u64) -> Result<(f64, Progression1D)> {
    let p = Progression1D { start: first_n, step: 1, length: f.len() as u64 };
    maximal_sum_on(&p, f, q_max)
}

/// As [`maximal_sum`] for `f` given on an arbitrary progression `p`; `q_max`
/// bounds the step measured in elements of `p`.
pub fn maximal_sum_on(p: &Progression1D, f: &[Complex64], q_max: u64) -> Result<(f64, Progression1D)> {
    if f.len() as u64 != p.length {
        return Err(Error::RangeMismatch(format!("{} values on a progression of length {}", f.len(), p.length)));
    }
    let len = f.len();
    if len == 0 {
        return Ok((0.0, Progression1D::empty()));
    }
    if q_max < 1 || q_max > len as u64 {
        return invalid(format!("q_max must lie in [1, {len}]"));
    }
    let cost: f64 = (1..=q_max).map(|q| (len as f64).powi(2) / (2.0 * q as f64)).sum();
    if cost > MAXIMAL_SUM_BUDGET {
        return Err(Error::Budget(format!("maximal sum over {len} terms with q_max = {q_max}")));
    }
    let best = (1..=q_max as usize)
        .into_par_iter()
        .map(|q| {
            let mut best = Best { value: -1.0, key: (u64::MAX, 0, 0) };
            let mut prefix = Vec::with_capacity(len / q + 2);
            for r in 0..q.min(len) {
                prefix.clear();
                prefix.push(Complex64::new(0.0, 0.0));
                let mut acc = Complex64::new(0.0, 0.0);
                for v in f[r..].iter().step_by(q) {
                    acc += v;
                    prefix.push(acc);
                }
                let l = prefix.len() - 1;
                for a in 0..l {
                    for b in a + 1..=l {
                        let v = (prefix[b] - prefix[a]).norm();
                        if v >= best.value {
                            let key = (q as u64, (r + a * q) as u64, (b - a) as u64);
                            best = best.better(Best { value: v, key });
                        }
                    }
                }
            }
            best
        })
        .reduce(|| Best { value: -1.0, key: (u64::MAX, 0, 0) }, Best::better);
    let (q, off, length) = best.key;
    let witness = Progression1D { start: p.get(off), step: q * p.step, length };
    Ok((best.value, witness))
}

/// Real-valued convenience wrapper.
pub fn maximal_sum_real(f: &[f64], first_n: i64, q_max: u64) -> Result<(f64, Progression1D)> {
    let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    maximal_sum(&c, first_n, q_max)
}

/// `‖f‖_{TV(P)}` for values listed in increasing order along `P`.
pub fn tv_norm(f: &[Complex64]) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    let sup = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let var: f64 = f.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    sup + var
}

/// `‖f‖_{TV(P;q)}`: the TV norms of `f` on `P ∩ (a + qZ)` summed over `a mod q`.
pub fn tv_norm_q(p: &Progression1D, f: &[Complex64], q: u64) -> Result<f64> {
    if f.len() as u64 != p.length {
        return Err(Error::RangeMismatch(format!("{} values on a progression of length {}", f.len(), p.length)));
    }
    if q < 1 {
        return invalid("q must be at least 1");
    }
    let mut classes: std::collections::BTreeMap<u64, Vec<Complex64>> = std::collections::BTreeMap::new();
    for (n, v) in p.elements().zip(f) {
        classes.entry(n.rem_euclid(q as i64) as u64).or_default().push(*v);
    }
    Ok(classes.values().map(|c| tv_norm(c)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    /// Every subprogression by explicit enumeration.
    fn brute(f: &[Complex64], q_max: usize) -> f64 {
        let mut best: f64 = 0.0;
        for q in 1..=q_max {
            for s in 0..f.len() {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut i = s;
                while i < f.len() {
                    acc += f[i];
                    best = best.max(acc.norm());
                    i += q;
                }
            }
        }
        best
    }

    #[test]
    fn examples() {
        let (v, w) = maximal_sum_real(&[0.0; 12], 1, 12).unwrap();
        assert_eq!(v, 0.0);
        assert!(w.length >= 1);
        let (v, w) = maximal_sum_real(&[1.0; 9], 1, 9).unwrap();
        assert_eq!(v, 9.0);
        assert_eq!(w, Progression1D { start: 1, step: 1, length: 9 });
        let alt: Vec<f64> = (1..=10).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (v, w) = maximal_sum_real(&alt, 1, 10).unwrap();
        assert_eq!(v, 5.0);
        assert_eq!((w.step, w.length), (2, 5));
        // both parity classes attain 5; the tie-break picks the smaller start
        assert_eq!(w.start, 1);
        assert_eq!(maximal_sum_real(&[], 1, 1).unwrap().0, 0.0);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_norm(&c(&[-3.0; 7])), 3.0);
        assert_eq!(tv_norm(&c(&[1.0, 2.0, 3.0, 4.0, 5.0])), 9.0);
        assert_eq!(tv_norm(&[]), 0.0);
        let p = Progression1D::interval(0, 6);
        let f = c(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        // classes {1,3,5} and {2,4,6}
        assert_eq!(tv_norm_q(&p, &f, 2).unwrap(), (5.0 + 4.0) + (6.0 + 4.0));
    }

    #[test]
    fn witness_attains_value() {
        let f: Vec<Complex64> = (0..40).map(|i| Complex64::from_polar(1.0, (i * i) as f64 * 0.37)).collect();
        let (v, w) = maximal_sum(&f, 100, 40).unwrap();
        let s: Complex64 = w.elements().map(|n| f[(n - 100) as usize]).sum();
        assert!((s.norm() - v).abs() < 1e-12);
        assert!((v - brute(&f, 40)).abs() < 1e-12);
    }

    #[test]
    fn json_witness() {
        let p = Progression1D { start: 3, step: 2, length: 4 };
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"start":3,"step":2,"length":4}"#);
    }

    fn complex_vec(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b)), n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_brute_force(f in complex_vec(1..30), qf in 0.0f64..1.0) {
            let q = 1 + ((f.len() - 1) as f64 * qf) as usize;
            let (v, _) = maximal_sum(&f, 0, q as u64).unwrap();
            prop_assert!((v - brute(&f, q)).abs() < 1e-9);
        }

        #[test]
        fn monotone_in_q_max(f in complex_vec(2..40)) {
            let mut prev = 0.0;
            for q in 1..=f.len() as u64 {
                let (v, _) = maximal_sum(&f, 0, q).unwrap();
                prop_assert!(v >= prev);
                prev = v;
            }
        }

        #[test]
        fn partition_triangle(f in complex_vec(2..48), cut in 0.0f64..1.0, by_parity in any::<bool>()) {
            let len = f.len() as u64;
            let p = Progression1D::interval(0, len);
            let (whole, _) = maximal_sum_on(&p, &f, len).unwrap();
            let (p1, p2) = if by_parity {
                (Progression1D { start: 1, step: 2, length: len.div_ceil(2) }, Progression1D { start: 2, step: 2, length: len / 2 })
            } else {
                let k = ((len as f64) * cut) as u64;
                (Progression1D { start: 1, step: 1, length: k }, Progression1D { start: 1 + k as i64, step: 1, length: len - k })
            };
            let part = |q: &Progression1D| -> f64 {
                let vals: Vec<Complex64> = q.elements().map(|n| f[(n - 1) as usize]).collect();
                if vals.is_empty() { 0.0 } else { maximal_sum_on(q, &vals, q.length).unwrap().0 }
            };
            prop_assert!(whole <= part(&p1) + part(&p2) + 1e-9);
        }

        #[test]
        fn summation_by_parts(f in complex_vec(1..64), g0 in complex_vec(64..65), q in 1u64..=8) {
            let len = f.len() as u64;
            let p = Progression1D::interval(10, len);
            let g = &g0[..f.len()];
            let fg: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
            let (lhs, _) = maximal_sum_on(&p, &fg, len).unwrap();
            let (mf, _) = maximal_sum_on(&p, &f, len).unwrap();
            prop_assert!(lhs <= tv_norm_q(&p, g, q).unwrap() * mf + 1e-9);
        }

        #[test]
        fn tv_product(f in complex_vec(1..64), g0 in complex_vec(64..65), q in 1u64..=8, start in -50i64..50) {
            let p = Progression1D { start, step: 3, length: f.len() as u64 };
            let g = &g0[..f.len()];
            let fg: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
            let lhs = tv_norm_q(&p, &fg, q).unwrap();
            prop_assert!(lhs <= tv_norm_q(&p, &f, q).unwrap() * tv_norm_q(&p, g, q).unwrap() + 1e-9);
        }
    }
}
