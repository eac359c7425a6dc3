//! Oracle runs behind the thresholds in `config/calibration.toml`.
//!
//! Prints the measured statistic for each calibrated experiment; the config
//! records these values next to the asserted thresholds.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use shortint::approximants::{default_r, dk_sharp, dk_sharp_with_r, lambda_sharp_i_slab, lambda_sharp_slab};
use shortint::arith::{euler_phi, gcd};
use shortint::correlations::linear_exp_sum;
use shortint::linear_forms::{prime_solutions, AffineLinearSystem, IntBox};
use shortint::interval_sieve::slab_from_factors;
use shortint::{factor_interval, Kind};

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |s: &str| which.is_empty() || which.iter().any(|w| w == s);
    if want("dk") {
        let t = Instant::now();
        for (x, h) in [(100_000_000u64, 1_000_000u64), (100_000_000, 63_096)] {
            let fi = factor_interval(x, h).unwrap();
            let d2 = slab_from_factors(&fi, Kind::Dk(2)).unwrap();
            for eta in [0.05, 0.04] {
                let s = dk_sharp(&fi, 2, eta).unwrap();
                let avg = (d2.sum() - s.sum()) / h as f64;
                println!("dk X={x} H={h} eta={eta} R={:.3} avg(d2 - d2#) = {avg:.5}", (x as f64).powf(eta));
            }
            for r in [3.0, 5.0, 10.0, 30.0, 100.0] {
                let s = dk_sharp_with_r(&fi, 2, r).unwrap();
                let avg = (d2.sum() - s.sum()) / h as f64;
                println!("dk X={x} H={h} R={r} avg(d2 - d2#) = {avg:.5}");
            }
        }
        println!("  [{:.1?}]", t.elapsed());
    }
    if want("lambda") {
        let x = 100_000_000u64;
        let h = (x as f64).powf(0.6).ceil() as u64;
        let fi = factor_interval(x, h).unwrap();
        let lam = slab_from_factors(&fi, Kind::LambdaVm).unwrap();
        for r in [default_r(x as f64), 10.0, 20.0, 100.0] {
            let s = lambda_sharp_slab(&fi, r).unwrap();
            println!("lambda X={x} H={h} R={r:.3} avg(L - L#) = {:.5}", (lam.sum() - s.sum()) / h as f64);
        }
        let h = 100_000;
        let fi = factor_interval(x, h).unwrap();
        for r in [default_r(x as f64), 20.0] {
            let s = lambda_sharp_slab(&fi, r).unwrap();
            let si = lambda_sharp_i_slab(&fi, r, (x as f64).powf(0.3)).unwrap();
            let l1: f64 = s.values.iter().zip(&si.values).map(|(a, b)| (a - b).abs()).sum::<f64>() / h as f64;
            println!("lambda_I X={x} H={h} R={r:.3} L1 = {l1:.3e}");
            let mut worst: f64 = 0.0;
            for q in 1..=20u64 {
                for a in 0..q {
                    if gcd(a, q) != 1 {
                        continue;
                    }
                    let sum: f64 = s.iter().filter(|(n, _)| n % q == a).map(|(_, v)| v).sum();
                    worst = worst.max((sum - h as f64 / euler_phi(q) as f64).abs() / h as f64);
                }
            }
            println!("progressions X={x} H={h} R={r:.3} worst = {worst:.5}");
        }
    }
    if want("mu") {
        for x in [1_000_000u64, 10_000_000, 100_000_000] {
            let t = Instant::now();
            let h = (x as f64).powf(0.675).ceil() as u64;
            let mu = shortint::sieve_slab(x, h, Kind::Mu).unwrap();
            let mut alphas = Vec::new();
            for q in 1..=50u64 {
                for a in 0..q {
                    if gcd(a, q) == 1 {
                        alphas.push(a as f64 / q as f64);
                    }
                }
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            alphas.extend((0..1000).map(|_| rng.gen::<f64>()));
            let sup = alphas.iter().map(|&a| linear_exp_sum(&mu, a).norm()).fold(0.0, f64::max) / h as f64;
            println!("mu X={x} H={h} sup = {sup:.5} [{:.1?}]", t.elapsed());
        }
    }
    if want("ternary") {
        for n in [1_000_000i64, 1_000_001, 999_999] {
            let t = Instant::now();
            let r = prime_solutions(&AffineLinearSystem::ternary(n), &IntBox::ternary(n), 1000).unwrap();
            println!("ternary N={n} {r:?} [{:.1?}]", t.elapsed());
        }
    }
}
