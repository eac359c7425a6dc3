//! The Heisenberg nilmanifold `G/Γ` with `G` the unipotent upper-triangular
//! 3x3 matrices and `Γ` the integer points, in Mal'cev coordinates
//! `(x, y, z) · (x', y', z') = (x + x', y + y', z + z' + x y')`.

use std::fmt;
use std::ops::Neg;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::e;
use crate::error::{Error, Result};
use crate::interval_sieve::IntervalSlab;
use crate::poly_equidist::{Basis, PolyMod1};

pub trait Coord: Copy + Num + Neg<Output = Self> + FromPrimitive + PartialEq + fmt::Debug {}
impl<T: Copy + Num + Neg<Output = T> + FromPrimitive + PartialEq + fmt::Debug> Coord for T {}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(serialize = "T: Copy + Serialize", deserialize = "T: Copy + Deserialize<'de>"))]
pub struct HeisPoint<T = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Copy> From<[T; 3]> for HeisPoint<T> {
    fn from(a: [T; 3]) -> Self {
        HeisPoint { x: a[0], y: a[1], z: a[2] }
    }
}

impl<T: Copy> From<HeisPoint<T>> for [T; 3] {
    fn from(p: HeisPoint<T>) -> Self {
        [p.x, p.y, p.z]
    }
}

fn c2<T: Coord>(n: i64) -> T {
    T::from_i128(n as i128 * (n as i128 - 1) / 2).expect("binomial fits")
}

impl<T: Coord> HeisPoint<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        HeisPoint { x, y, z }
    }

    pub fn identity() -> Self {
        HeisPoint { x: T::zero(), y: T::zero(), z: T::zero() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        HeisPoint { x: self.x + o.x, y: self.y + o.y, z: self.z + o.z + self.x * o.y }
    }

    pub fn inverse(&self) -> Self {
        HeisPoint { x: -self.x, y: -self.y, z: -self.z + self.x * self.y }
    }

    /// `g^n = (nx, ny, nz + C(n,2) xy)`, valid for negative `n` as well.
    pub fn pow(&self, n: i64) -> Self {
        let t = T::from_i64(n).expect("n fits");
        HeisPoint { x: t * self.x, y: t * self.y, z: t * self.z + c2::<T>(n) * self.x * self.y }
    }
}

/// `(g γ, γ)` with `g γ ∈ [0,1)^3`: `γ = (-⌊x⌋, -⌊y⌋, -⌊z - x⌊y⌋⌋)`.
pub fn heis_reduce(g: &HeisPoint<f64>) -> (HeisPoint<f64>, (i64, i64, i64)) {
    let a = -g.x.floor();
    let b = -g.y.floor();
    let c = -(g.z + g.x * b).floor();
    let gamma = HeisPoint::new(a, b, c);
    let mut r = g.mul(&gamma);
    // guard against a coordinate rounding up to exactly 1
    for v in [&mut r.x, &mut r.y, &mut r.z] {
        if *v >= 1.0 {
            *v -= 1.0;
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    (r, (a as i64, b as i64, c as i64))
}

/// `g(n) = g0 · g1^n · (0, 0, z2)^{C(n,2)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Copy + Serialize", deserialize = "T: Copy + Deserialize<'de>"))]
pub struct HeisPolySeq<T = f64> {
    pub g0: HeisPoint<T>,
    pub g1: HeisPoint<T>,
    pub g2z: T,
}

impl<T: Coord> HeisPolySeq<T> {
    pub fn at(&self, n: i64) -> HeisPoint<T> {
        let g2 = HeisPoint::new(T::zero(), T::zero(), self.g2z);
        self.g0.mul(&self.g1.pow(n)).mul(&g2.pow((n as i128 * (n as i128 - 1) / 2) as i64))
    }

    /// Coordinates of `g(n)` as binomial-basis coefficients about 0, and of
    /// `z(n) - x(n) y(n)`.
    fn coordinate_polys(&self) -> [[T; 3]; 4] {
        let (g0, g1, z2) = (self.g0, self.g1, self.g2z);
        let two = T::from_i64(2).unwrap();
        let x = [g0.x, g1.x, T::zero()];
        let y = [g0.y, g1.y, T::zero()];
        let z = [g0.z, g1.z + g0.x * g1.y, g1.x * g1.y + z2];
        // x y = x0 y0 + n (x0 y1 + x1 y0 + x1 y1) + 2 C(n,2) x1 y1
        let xy = [g0.x * g0.y, g0.x * g1.y + g1.x * g0.y + g1.x * g1.y, two * g1.x * g1.y];
        let p = [z[0] - xy[0], z[1] - xy[1], z[2] - xy[2]];
        [x, y, z, p]
    }
}

fn binomial_poly(c: [f64; 3]) -> PolyMod1 {
    PolyMod1::float(0, Basis::Binomial, c.to_vec()).expect("finite coefficients")
}

/// Evaluates `g(n)Γ` without forming the (large) coordinates of `g(n)`:
/// `x̃ = {x(n)}`, `ỹ = {y(n)}`, `z̃ = {P(n) + x(n) ỹ}` with `P = z - xy`.
#[derive(Clone, Debug)]
pub struct SeqEvaluator {
    x: PolyMod1,
    y: PolyMod1,
    p: PolyMod1,
}

impl SeqEvaluator {
    pub fn new(seq: &HeisPolySeq<f64>) -> SeqEvaluator {
        let [x, y, _, p] = seq.coordinate_polys();
        SeqEvaluator { x: binomial_poly(x), y: binomial_poly(y), p: binomial_poly(p) }
    }

    pub fn reduced(&self, n: i64) -> HeisPoint<f64> {
        let xf = self.x.frac_at(n);
        let yf = self.y.frac_at(n);
        let xi = (self.x.value_at(n) - xf).round();
        let zf = (self.p.frac_at(n) + xf * yf + (xi * yf).rem_euclid(1.0)).rem_euclid(1.0);
        HeisPoint::new(xf, yf, if zf >= 1.0 { 0.0 } else { zf })
    }
}

pub type CustomF = Arc<dyn Fn(&HeisPoint<f64>) -> Complex64 + Send + Sync>;

/// A function on the fundamental domain `[0,1)^3`.
#[derive(Clone)]
pub enum NilFunction {
    /// `e(ξ z̃) sin²(π x̃) sin²(π ỹ)`
    CentralE { xi: i64 },
    /// `sin²(π x̃)`
    SinX,
    Custom(CustomF),
}

impl fmt::Debug for NilFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NilFunction::CentralE { xi } => write!(f, "central_e({xi})"),
            NilFunction::SinX => write!(f, "sin_x"),
            NilFunction::Custom(_) => write!(f, "custom"),
        }
    }
}

impl NilFunction {
    pub fn eval(&self, p: &HeisPoint<f64>) -> Complex64 {
        use std::f64::consts::PI;
        match self {
            NilFunction::CentralE { xi } => {
                let s = (PI * p.x).sin().powi(2) * (PI * p.y).sin().powi(2);
                e(*xi as f64 * p.z) * s
            }
            NilFunction::SinX => Complex64::new((PI * p.x).sin().powi(2), 0.0),
            NilFunction::Custom(f) => f(p),
        }
    }

    /// Checks that `F` composed with the reduction is continuous across the
    /// glued faces: 10^3 random boundary points, each probed from both sides.
    pub fn gluing_probe(&self, seed: u64) -> Result<()> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = 1e-9;
        for _ in 0..1000 {
            let mut q = HeisPoint::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            let face = rng.gen_range(0..3);
            let (mut lo, mut hi) = (q, q);
            match face {
                0 => {
                    q.x = 1.0;
                    lo.x = 1.0 - d;
                    hi.x = 1.0 + d;
                }
                1 => {
                    q.y = 1.0;
                    lo.y = 1.0 - d;
                    hi.y = 1.0 + d;
                }
                _ => {
                    q.z = 1.0;
                    lo.z = 1.0 - d;
                    hi.z = 1.0 + d;
                }
            }
            let (a, b) = (self.eval(&heis_reduce(&lo).0), self.eval(&heis_reduce(&hi).0));
            if (a - b).norm() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "function is not continuous on the quotient: jump {} across the face at {:?}",
                    (a - b).norm(),
                    q
                )));
            }
        }
        Ok(())
    }
}

pub fn nilsequence_eval(seq: &HeisPolySeq<f64>, f: &NilFunction, n: i64) -> Complex64 {
    f.eval(&SeqEvaluator::new(seq).reduced(n))
}

/// `Σ_{X<n<=X+H} f(n) conj(F(g(n)Γ))`. Custom functions must pass the gluing probe.
pub fn nil_corr(slab: &IntervalSlab, seq: &HeisPolySeq<f64>, f: &NilFunction) -> Result<Complex64> {
    if let NilFunction::Custom(_) = f {
        f.gluing_probe(0)?;
    }
    let ev = SeqEvaluator::new(seq);
    Ok(slab
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| v * f.eval(&ev.reduced(slab.n(i) as i64)).conj())
        .collect::<Vec<_>>()
        .into_iter()
        .sum())
}

/// `n ↦ k1 x(g(n)) + k2 y(g(n))` in the binomial basis.
pub fn horizontal_pullback(seq: &HeisPolySeq<f64>, k1: i64, k2: i64) -> PolyMod1 {
    let (a, b) = (k1 as f64, k2 as f64);
    binomial_poly([a * seq.g0.x + b * seq.g0.y, a * seq.g1.x + b * seq.g1.y, 0.0])
}

pub fn horizontal_pullback_exact(seq: &HeisPolySeq<Ratio<i64>>, k1: i64, k2: i64) -> PolyMod1 {
    let (a, b) = (Ratio::from_integer(k1), Ratio::from_integer(k2));
    PolyMod1::rational(0, Basis::Binomial, vec![a * seq.g0.x + b * seq.g0.y, a * seq.g1.x + b * seq.g1.y])
        .expect("degree 1")
}

/// A sequence with every coordinate uniform in `[0, 1)`.
pub fn random_sequence(rng: &mut impl Rng) -> HeisPolySeq<f64> {
    let mut p = || HeisPoint::new(rng.gen(), rng.gen(), rng.gen());
    let (g0, g1) = (p(), p());
    HeisPolySeq { g0, g1, g2z: rng.gen() }
}

/// Sequence file layout: `{g0: [x,y,z], g1: [x,y,z], g2z, xi}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub g0: HeisPoint<f64>,
    pub g1: HeisPoint<f64>,
    pub g2z: f64,
    pub xi: i64,
}

impl SequenceFile {
    pub fn seq(&self) -> HeisPolySeq<f64> {
        HeisPolySeq { g0: self.g0, g1: self.g1, g2z: self.g2z }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_sieve::{sieve_slab, Kind};
    use crate::poly_equidist::Coeffs;

    type Q = Ratio<i128>;

    fn rq(rng: &mut impl Rng) -> Q {
        Q::new(rng.gen_range(-50..50), rng.gen_range(1..20))
    }

    fn rpoint(rng: &mut impl Rng) -> HeisPoint<Q> {
        HeisPoint::new(rq(rng), rq(rng), rq(rng))
    }

    #[test]
    fn pow_examples() {
        let g = HeisPoint::new(1.0, 1.0, 0.0);
        assert_eq!(g.pow(0), HeisPoint::identity());
        assert_eq!(g.pow(1), g);
        assert_eq!(g.pow(3), g.mul(&g).mul(&g));
        assert_eq!(g.pow(3), HeisPoint::new(3.0, 3.0, 3.0));
    }

    #[test]
    fn group_axioms_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let (a, b, c) = (rpoint(&mut rng), rpoint(&mut rng), rpoint(&mut rng));
            assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            assert_eq!(a.mul(&a.inverse()), HeisPoint::identity());
            assert_eq!(a.inverse().mul(&a), HeisPoint::identity());
        }
    }

    #[test]
    fn pow_matches_iteration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let g = rpoint(&mut rng);
            let mut acc = HeisPoint::identity();
            for n in 0..=50 {
                assert_eq!(g.pow(n), acc);
                acc = acc.mul(&g);
            }
            let mut acc = HeisPoint::identity();
            for n in 0..=50i64 {
                assert_eq!(g.pow(-n), acc);
                acc = acc.mul(&g.inverse());
            }
        }
    }

    #[test]
    fn reduce_examples() {
        let g = HeisPoint::new(0.25, 0.5, 0.75);
        assert_eq!(heis_reduce(&g), (g, (0, 0, 0)));
        let g = HeisPoint::new(1.25, -0.5, 0.0);
        let (r, (a, b, c)) = heis_reduce(&g);
        assert_eq!((a, b), (-1, 1));
        let direct = g.mul(&HeisPoint::new(a as f64, b as f64, c as f64));
        assert_eq!(r, direct);
        assert!([r.x, r.y, r.z].iter().all(|v| (0.0..1.0).contains(v)));
        let shifted = g.mul(&HeisPoint::new(1.0, 0.0, 0.0));
        assert_eq!(heis_reduce(&shifted).0, r);
    }

    #[test]
    fn reduction_is_idempotent_and_coset_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let g = HeisPoint::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
            let (r, _) = heis_reduce(&g);
            assert_eq!(heis_reduce(&r).0, r);
            let gamma = HeisPoint::new(rng.gen_range(-5..5) as f64, rng.gen_range(-5..5) as f64, rng.gen_range(-5..5) as f64);
            let r2 = heis_reduce(&g.mul(&gamma)).0;
            assert!((r.x - r2.x).abs() < 1e-12 && (r.y - r2.y).abs() < 1e-12);
            let dz = (r.z - r2.z).abs();
            assert!(dz < 1e-12 || (1.0 - dz) < 1e-12);
        }
    }

    #[test]
    fn coordinates_are_quadratic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let seq = HeisPolySeq { g0: rpoint(&mut rng), g1: rpoint(&mut rng), g2z: rq(&mut rng) };
            let pts: Vec<HeisPoint<Q>> = (-5..=10).map(|n| seq.at(n)).collect();
            for w in pts.windows(4) {
                let d3 = |f: fn(&HeisPoint<Q>) -> Q| f(&w[3]) - Q::from_integer(3) * f(&w[2]) + Q::from_integer(3) * f(&w[1]) - f(&w[0]);
                assert_eq!(d3(|p| p.x), Q::from_integer(0));
                assert_eq!(d3(|p| p.y), Q::from_integer(0));
                assert_eq!(d3(|p| p.z), Q::from_integer(0));
            }
            // coordinate polynomials agree with the group law
            let [x, y, z, _] = seq.coordinate_polys();
            for n in -5..=10i64 {
                let g = seq.at(n);
                let ev = |c: [Q; 3]| c[0] + c[1] * Q::from_integer(n as i128) + c[2] * Q::from_integer((n * (n - 1) / 2) as i128);
                assert_eq!((ev(x), ev(y), ev(z)), (g.x, g.y, g.z));
            }
        }
    }

    #[test]
    fn evaluator_matches_direct_reduction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let seq = random_sequence(&mut rng);
            let ev = SeqEvaluator::new(&seq);
            for n in -200..200 {
                let a = ev.reduced(n);
                let b = heis_reduce(&seq.at(n)).0;
                let dz = (a.z - b.z).abs();
                assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9 && (dz < 1e-8 || 1.0 - dz < 1e-8), "{n}: {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn shipped_function() {
        let id = HeisPolySeq { g0: HeisPoint::identity(), g1: HeisPoint::identity(), g2z: 0.0 };
        assert_eq!(nilsequence_eval(&id, &NilFunction::CentralE { xi: 1 }, 17), Complex64::new(0.0, 0.0));
        assert!(NilFunction::CentralE { xi: 3 }.gluing_probe(1).is_ok());
        assert!(NilFunction::SinX.gluing_probe(2).is_ok());
        let bad = NilFunction::Custom(Arc::new(|p: &HeisPoint<f64>| Complex64::new(p.y, 0.0)));
        assert!(bad.gluing_probe(3).is_err());
        let slab = IntervalSlab::from_fn(0, 10, Kind::Custom("one".into()), |_| 1.0).unwrap();
        assert!(nil_corr(&slab, &id, &bad).is_err());
        // F oscillates with the central frequency: shifting z by t multiplies by e(ξt)
        let f = NilFunction::CentralE { xi: 2 };
        let p = HeisPoint::new(0.3, 0.6, 0.1);
        let q = HeisPoint::new(0.3, 0.6, 0.35);
        assert!((f.eval(&q) - f.eval(&p) * e(0.5)).norm() < 1e-12);
    }

    #[test]
    fn weyl_equidistribution() {
        let seq = HeisPolySeq { g0: HeisPoint::identity(), g1: HeisPoint::new(2f64.sqrt() - 1.0, 0.0, 0.0), g2z: 0.0 };
        let h = 100_000;
        let slab = IntervalSlab::from_fn(0, h, Kind::Custom("one".into()), |_| 1.0).unwrap();
        let s = nil_corr(&slab, &seq, &NilFunction::SinX).unwrap();
        assert!((s.re / h as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn mobius_discorrelates() {
        let x = 10_000_000u64;
        let h = (x as f64).powf(0.7).ceil() as u64;
        let slab = sieve_slab(x, h, Kind::Mu).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let seq = random_sequence(&mut rng);
            let c = nil_corr(&slab, &seq, &NilFunction::CentralE { xi: 1 }).unwrap();
            assert!(c.norm() / h as f64 <= 0.1, "{}", c.norm() / h as f64);
        }
    }

    #[test]
    fn pullbacks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let seq = random_sequence(&mut rng);
        let z = horizontal_pullback(&seq, 0, 0);
        assert!((0..20).all(|n| z.frac_at(n) == 0.0));

        let rs = HeisPolySeq {
            g0: HeisPoint::new(Ratio::new(1, 3), Ratio::new(0, 1), Ratio::new(0, 1)),
            g1: HeisPoint::new(Ratio::new(2, 7), Ratio::new(0, 1), Ratio::new(0, 1)),
            g2z: Ratio::new(5, 11),
        };
        let p = horizontal_pullback_exact(&rs, 1, 0);
        match &p.coeffs {
            Coeffs::Rational(c) => assert_eq!(*c[1].denom(), 7),
            _ => panic!("expected rational coefficients"),
        }

        let ev = SeqEvaluator::new(&seq);
        for (k1, k2) in [(1, 0), (0, 1), (2, -3), (5, 7)] {
            let p = horizontal_pullback(&seq, k1, k2);
            for _ in 0..1000 {
                let n = rng.gen_range(-1_000_000..1_000_000);
                let r = ev.reduced(n);
                let want = (k1 as f64 * r.x + k2 as f64 * r.y).rem_euclid(1.0);
                let d = (p.frac_at(n) - want).abs();
                assert!(d < 1e-9 || (1.0 - d) < 1e-9);
            }
        }
    }

    #[test]
    fn sequence_json() {
        let s = r#"{"g0":[0.1,0.2,0.3],"g1":[0.5,0.25,0.0],"g2z":0.125,"xi":2}"#;
        let f: SequenceFile = serde_json::from_str(s).unwrap();
        assert_eq!(f.seq().g1, HeisPoint::new(0.5, 0.25, 0.0));
        assert_eq!(serde_json::to_string(&f).unwrap(), s);
    }
}
