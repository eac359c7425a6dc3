//! The acceptance criteria, one line each. Runs under `cargo test` with its own
//! harness; exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use shortint::approximants::{dk_sharp, lambda_sharp_slab};
use shortint::arith::{euler_phi, factor_trial, gcd, primes_up_to};
use shortint::calibration::calibration;
use shortint::cli::farey_alphas;
use shortint::correlations::{gowers_power, linear_exp_sum, u2_power_direct, u2_power_fourier};
use shortint::decomposition::{
    case_labels, classify_exponents, classify_exponents_exact, evaluate_components, heath_brown, obstruction_tuples, ramare_decompose,
    simplex_sample, HbTarget,
};
use shortint::hyperbola::{partition_hyperbola, random_admissible, verify_partition, HyperbolaPartition};
use shortint::interval_sieve::slab_from_factors;
use shortint::linear_forms::{fit_local_constant, local_factor_lambda, prime_solutions, random_system, AffineLinearSystem, IntBox};
use shortint::nilsequence::{heis_reduce, horizontal_pullback_exact, nil_corr, random_sequence, HeisPoint, HeisPolySeq, NilFunction};
use shortint::progressions::Progression2D;
use shortint::{factor_interval, sieve_slab, IntervalSlab, Kind};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn heath_brown_exactness() -> Outcome {
    let cal = &calibration().heath_brown;
    let t = Instant::now();
    let (x, l) = (cal.x, cal.l);
    let lo = x.div_ceil(2) as usize;
    let mut out = Vec::new();
    for (target, kind) in [(HbTarget::LambdaVm, Kind::LambdaVm), (HbTarget::Mu, Kind::Mu)] {
        let comps = heath_brown(target, x, l).map_err(|e| e.to_string())?;
        let v = evaluate_components(&comps, 4 * x).map_err(|e| e.to_string())?;
        let truth = sieve_slab(0, 4 * x, kind).map_err(|e| e.to_string())?;
        let res = (lo..=4 * x as usize).map(|n| (v[n] - truth.values[n - 1]).abs()).fold(0.0, f64::max);
        out.push(res);
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        out[0] <= cal.lambda_tolerance && out[1] == 0.0 && secs <= cal.max_seconds,
        format!("Lambda residual {:.2e}, mu residual {}, {secs:.1} s", out[0], out[1]),
    )
}

/// Three corruptions of a valid partition; each must be rejected.
fn faults(p: &HyperbolaPartition) -> Vec<HyperbolaPartition> {
    let mut v = Vec::new();
    let Some((key, idx)) = p.families.iter().find_map(|(k, g)| g.iter().position(|g| g.len >= 2).map(|i| (*k, i))) else {
        return v;
    };
    let g = p.families[&key][idx];
    let (m, n) = g.points().last().unwrap();
    if let Some(other) = p.families.keys().find(|k| **k != key) {
        let mut moved = p.clone();
        moved.families.get_mut(&key).unwrap()[idx].len -= 1;
        moved.families.get_mut(other).unwrap().push(Progression2D { q: other.0, a: other.1, m0: m, n0: n, len: 1 });
        v.push(moved);
    }
    let mut dup = p.clone();
    dup.families.get_mut(&key).unwrap().push(Progression2D { q: key.0, a: key.1, m0: m, n0: n, len: 1 });
    v.push(dup);
    let mut hole = p.clone();
    hole.families.get_mut(&key).unwrap().remove(idx);
    v.push(hole);
    v
}

fn hyperbola_partition() -> Outcome {
    let cal = &calibration().hyperbola;
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cal.seed);
    let draws: Vec<_> = (0..cal.draws).map(|_| random_admissible(&mut rng, cal.x_min, cal.x_max, cal.h_max)).collect();
    let reports: Vec<(String, f64, f64, usize, usize, bool)> = draws
        .par_iter()
        .map(|&par| {
            let p = match partition_hyperbola(par) {
                Ok(p) => p,
                Err(e) => return (format!("{par:?}: {e}"), 0.0, 0.0, 0, 0, false),
            };
            let r = verify_partition(&p);
            let fs = faults(&p);
            let rejected = fs.iter().filter(|f| !verify_partition(f).pass).count();
            (r.failures.join("; "), r.fitted_c, r.fitted_c_total, fs.len(), rejected, r.exhaustive)
        })
        .collect();
    let secs = t.elapsed().as_secs_f64();
    let bad: Vec<&String> = reports.iter().map(|r| &r.0).filter(|s| !s.is_empty()).collect();
    let c_family = reports.iter().map(|r| r.1).fold(0.0, f64::max);
    let c_total = reports.iter().map(|r| r.2).fold(0.0, f64::max);
    let injected: usize = reports.iter().map(|r| r.3).sum();
    let rejected: usize = reports.iter().map(|r| r.4).sum();
    let exhaustive = reports.iter().filter(|r| r.5).count();
    check(
        bad.is_empty() && c_family.is_finite() && c_total <= cal.total_constant_max && injected == rejected && injected > 0 && secs <= cal.max_seconds,
        format!(
            "{} draws ({exhaustive} enumerated), {} failing, family C {c_family:.2}, total C {c_total:.2} (max {}), {rejected}/{injected} faults rejected, {secs:.1} s{}",
            reports.len(),
            bad.len(),
            cal.total_constant_max,
            bad.first().map(|s| format!(": {s}")).unwrap_or_default()
        ),
    )
}

fn exponent_classifier() -> Outcome {
    let cal = &calibration().classifier;
    let t = Instant::now();
    type Case = (&'static str, f64, fn(&mut ChaCha8Rng) -> usize);
    let cases: [Case; 7] = [
        ("i", 5.0 / 8.0, |g| g.gen_range(2..=8)),
        ("ii", 3.0 / 5.0, |g| g.gen_range(2..=8)),
        ("iii", 7.0 / 12.0, |g| g.gen_range(2..=8)),
        ("iv", 11.0 / 20.0, |_| 5),
        ("v", 0.5, |g| g.gen_range(3..=4)),
        ("vi", 5.0 / 9.0, |_| 3),
        ("vi", 1.0 / 3.0, |_| 2),
    ];
    let mut violations = 0usize;
    for (ci, (case, theta, kgen)) in cases.iter().enumerate() {
        violations += (0..cal.samples as u64)
            .into_par_iter()
            .map(|s| {
                let mut g = ChaCha8Rng::seed_from_u64(cal.seed ^ (s * 16 + ci as u64 + 0x1000));
                let k = kgen(&mut g);
                let a = simplex_sample(&mut g, k);
                match classify_exponents(&a, *theta) {
                    Ok(c) => usize::from(!case_labels(case).iter().any(|l| c.has(*l))),
                    Err(_) => 1,
                }
            })
            .sum::<usize>();
    }
    let tuples = obstruction_tuples();
    let mut obstruction_ok = 0;
    for (case, theta, alphas) in &tuples {
        let a: Vec<f64> = alphas.iter().map(|x| x.to_f64().unwrap()).collect();
        let below = classify_exponents(&a, theta.to_f64().unwrap() - cal.theta_offset).map_err(|e| e.to_string())?;
        let at = classify_exponents_exact(alphas, *theta).map_err(|e| e.to_string())?;
        let labels = case_labels(case);
        if labels.iter().all(|l| !below.has(*l)) && labels.iter().any(|l| at.has(*l)) {
            obstruction_ok += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        violations == 0 && obstruction_ok == tuples.len() && secs <= cal.max_seconds,
        format!(
            "{} samples x {} cases, {violations} violations; {obstruction_ok}/{} obstruction tuples fail at theta - {}; {secs:.1} s",
            cal.samples,
            cases.len(),
            tuples.len(),
            cal.theta_offset
        ),
    )
}

/// `d_k(r)` from the factorization.
fn d_k(r: u64, k: u64) -> u64 {
    factor_trial(r)
        .iter()
        .map(|&(_, e)| {
            let e = e as u64;
            (1..=k - 1).fold(1u64, |acc, i| acc * (e + i) / i)
        })
        .product()
}

fn ramare_identity() -> Outcome {
    let cal = &calibration().ramare;
    let fi = factor_interval(cal.x, cal.h).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, k) in [(Kind::Mu, 1u64), (Kind::Dk(2), 2)] {
        let r = ramare_decompose(&fi, &kind, cal.p, cal.q, cal.r_max).map_err(|e| e.to_string())?;
        let over = r.coefficients.iter().filter(|(&n, a)| a.abs() > Ratio::from_integer(d_k(n, k + 1) as i64)).count();
        let exact = *r.max_abs_diff.numer() == 0;
        ok &= exact && over == 0;
        parts.push(format!("{kind}: max |lhs - rhs| = {}, {} coefficients, {over} above d_{}", r.max_abs_diff, r.coefficients.len(), k + 1));
    }
    check(ok, parts.join("; "))
}

fn lambda_sharp_progressions() -> Outcome {
    let cal = &calibration().lambda_sharp_progressions;
    let fi = factor_interval(cal.x, cal.h).map_err(|e| e.to_string())?;
    let s = lambda_sharp_slab(&fi, cal.r).map_err(|e| e.to_string())?;
    let mut worst = (0.0f64, 1u64, 0u64);
    for q in 1..=cal.q_max {
        let mut sums = vec![0.0f64; q as usize];
        for (n, v) in s.iter() {
            sums[(n % q) as usize] += v;
        }
        for a in (0..q).filter(|&a| gcd(a, q) == 1) {
            let d = (sums[a as usize] - cal.h as f64 / euler_phi(q) as f64).abs() / cal.h as f64;
            if d > worst.0 {
                worst = (d, q, a);
            }
        }
    }
    check(
        worst.0 <= cal.threshold,
        format!("R = {}, worst |sum - H/phi(q)|/H = {:.5} at {} mod {} (threshold {})", cal.r, worst.0, worst.2, worst.1, cal.threshold),
    )
}

/// The defining sum over `x, h_1..h_s` with every shifted point in `[0, len)`.
fn gowers_direct(f: &[Complex64], s: u32) -> f64 {
    let len = f.len() as i64;
    let s = s as usize;
    let mut total = Complex64::new(0.0, 0.0);
    let mut h = vec![0i64; s];
    for x in 0..len {
        h.iter_mut().for_each(|v| *v = -x);
        loop {
            let mut prod = Complex64::new(1.0, 0.0);
            let mut inside = true;
            for w in 0..1usize << s {
                let pos = x + (0..s).filter(|i| w >> i & 1 == 1).map(|i| h[i]).sum::<i64>();
                if !(0..len).contains(&pos) {
                    inside = false;
                    break;
                }
                let v = f[pos as usize];
                prod *= if w.count_ones() % 2 == 1 { v.conj() } else { v };
            }
            if inside {
                total += prod;
            }
            let mut j = 0;
            while j < s {
                h[j] += 1;
                if x + h[j] < len {
                    break;
                }
                h[j] = -x;
                j += 1;
            }
            if j == s {
                break;
            }
        }
    }
    total.re
}

fn gowers_oracles() -> Outcome {
    let cal = &calibration().gowers;
    let mut rng = ChaCha8Rng::seed_from_u64(cal.seed);
    let slabs: Vec<Vec<Complex64>> = (0..cal.slabs)
        .map(|_| {
            let h = rng.gen_range(2..=cal.h_max);
            (0..h).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
        })
        .collect();
    let worst = slabs
        .par_iter()
        .map(|f| {
            [2u32, 3]
                .iter()
                .map(|&s| {
                    let (a, b) = (gowers_power(f, s), gowers_direct(f, s));
                    (a - b).abs() / b.abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let f: Vec<Complex64> = (0..cal.fourier_h).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let (a, b) = (u2_power_direct(&f), u2_power_fourier(&f));
    let fourier = (a - b).abs() / b.abs();
    check(
        worst <= cal.definition_tolerance && fourier <= cal.fourier_tolerance,
        format!(
            "recursion vs definition {worst:.2e} ({} slabs, H <= {}, s = 2, 3); U^2 vs Fourier at H = {} {fourier:.2e}",
            cal.slabs, cal.h_max, cal.fourier_h
        ),
    )
}

fn discorrelation_trend() -> Outcome {
    let cal = &calibration().discorrelation;
    let t = Instant::now();
    let mut alphas: Vec<f64> = farey_alphas(cal.q_max).into_iter().map(|(_, a)| a).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cal.seed);
    alphas.extend((0..cal.random_alphas).map(|_| rng.gen::<f64>()));
    let mut sups = Vec::new();
    for &x in &cal.xs {
        let h = (x as f64).powf(cal.theta).ceil() as u64;
        let mu = sieve_slab(x, h, Kind::Mu).map_err(|e| e.to_string())?;
        let sup = alphas.par_iter().map(|&a| linear_exp_sum(&mu, a).norm()).reduce(|| 0.0, f64::max) / h as f64;
        sups.push(sup);
    }
    let below = sups.iter().all(|&s| s <= cal.threshold);
    let trend = sups.windows(2).all(|w| w[1] <= w[0] * (1.0 + cal.slack));
    let secs = t.elapsed().as_secs_f64();
    check(
        below && trend && secs <= cal.max_seconds,
        format!("sup |sum mu e(an)|/H = {sups:.5?} over {} frequencies (threshold {}, slack {}), {secs:.0} s", alphas.len(), cal.threshold, cal.slack),
    )
}

fn major_arc() -> Outcome {
    let cal = &calibration().major_arc;
    let h = (cal.x as f64).powf(cal.theta).ceil() as u64;
    let fi = factor_interval(cal.x, h).map_err(|e| e.to_string())?;
    let r = cal.lambda_r.resolve(cal.x as f64).map_err(|e| e.to_string())?;
    let lam = slab_from_factors(&fi, Kind::LambdaVm).map_err(|e| e.to_string())?;
    let lam_sharp = lambda_sharp_slab(&fi, r).map_err(|e| e.to_string())?;
    let d2 = slab_from_factors(&fi, Kind::Dk(2)).map_err(|e| e.to_string())?;
    let d2_sharp = dk_sharp(&fi, 2, cal.eta).map_err(|e| e.to_string())?;
    let hf = h as f64;
    let lambda_avg = (lam.sum() - lam_sharp.sum()) / hf;
    let dk_avg = (d2.sum() - d2_sharp.sum()) / hf;
    let dk_per_log = dk_avg / (cal.x as f64).ln();
    // the statistics are deterministic; drift from the recorded oracle values is a regression
    let stable = (lambda_avg - cal.measured_lambda).abs() <= 1e-4 && (dk_avg - cal.measured_dk).abs() <= 1e-4;
    check(
        lambda_avg.abs() <= cal.lambda_threshold && dk_per_log.abs() <= cal.dk_threshold_per_log && stable,
        format!(
            "H = {h}, R = {r:.3}: (1/H) sum (Lambda - Lambda#) = {lambda_avg:.5} (max {}), (1/(H log X)) sum (d2 - d2#) = {dk_per_log:.5} (max {}); raw averages {lambda_avg:.5} / {dk_avg:.5}, recorded {} / {}",
            cal.lambda_threshold, cal.dk_threshold_per_log, cal.measured_lambda, cal.measured_dk
        ),
    )
}

fn local_factors() -> Outcome {
    let cal = &calibration().local_factors;
    let twins = AffineLinearSystem::shifts(&[0, 2]).map_err(|e| e.to_string())?;
    let q = |n: u64, d: u64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let mut exact = local_factor_lambda(&twins, 2).map_err(|e| e.to_string())? == q(2, 1);
    for p in primes_up_to(cal.twin_p_max).into_iter().filter(|&p| p >= 3) {
        exact &= local_factor_lambda(&twins, p).map_err(|e| e.to_string())? == q(p * (p - 2), (p - 1) * (p - 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cal.seed);
    let mut worst: f64 = 0.0;
    for i in 0..cal.systems {
        let d = 2 + i % 2;
        let t = rng.gen_range(2..=d + 1);
        let sys = random_system(&mut rng, d, t);
        worst = worst.max(fit_local_constant(&sys, if d == 3 { cal.p_max_3d } else { cal.p_max }).map_err(|e| e.to_string())?);
    }
    check(
        exact && worst.is_finite(),
        format!("twin factors exact for p <= {}: {exact}; max fitted C over {} random systems = {worst:.1}", cal.twin_p_max, cal.systems),
    )
}

fn ternary() -> Outcome {
    let cal = &calibration().ternary;
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [cal.n, cal.companion] {
        let r = prime_solutions(&AffineLinearSystem::ternary(n), &IntBox::ternary(n), cal.p_max).map_err(|e| e.to_string())?;
        ok &= r.relative_error <= cal.threshold;
        parts.push(format!("N = {n}: count {:.4e} vs prediction {:.4e} (rel. error {:.4})", r.count, r.prediction, r.relative_error));
    }
    let secs = t.elapsed().as_secs_f64();
    check(ok && secs <= cal.max_seconds, format!("{}; {secs:.0} s", parts.join("; ")))
}

fn nilsequences() -> Outcome {
    let cal = &calibration().nilsequence;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    type Q = Ratio<i128>;
    let rq = |rng: &mut ChaCha8Rng| Q::new(rng.gen_range(-50..50), rng.gen_range(1..20));
    let mut group_ok = true;
    for _ in 0..5_000 {
        let mut p = || HeisPoint::new(rq(&mut rng), rq(&mut rng), rq(&mut rng));
        let (a, b, c) = (p(), p(), p());
        group_ok &= a.mul(&b).mul(&c) == a.mul(&b.mul(&c)) && a.mul(&a.inverse()) == HeisPoint::identity();
    }
    let mut reduce_ok = true;
    for _ in 0..5_000 {
        let g = HeisPoint::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let (r, (a, b, c)) = heis_reduce(&g);
        reduce_ok &= heis_reduce(&r).0 == r && [r.x, r.y, r.z].iter().all(|v| (0.0..1.0).contains(v));
        reduce_ok &= g.mul(&HeisPoint::new(a as f64, b as f64, c as f64)) == r;
    }
    // exact pullback against the exact coordinates
    let mut pull_ok = true;
    for _ in 0..20 {
        let mut rr = || Ratio::<i64>::new(rng.gen_range(-30..30), rng.gen_range(1..12));
        let seq = HeisPolySeq { g0: HeisPoint::new(rr(), rr(), rr()), g1: HeisPoint::new(rr(), rr(), rr()), g2z: rr() };
        for (k1, k2) in [(1, 0), (0, 1), (3, -2)] {
            let p = horizontal_pullback_exact(&seq, k1, k2);
            for n in -50..50 {
                let g = seq.at(n);
                let v = g.x * k1 + g.y * k2;
                let want = (v - v.floor()).to_f64().unwrap();
                pull_ok &= p.frac_at(n) == want;
            }
        }
    }
    let weyl = HeisPolySeq { g0: HeisPoint::identity(), g1: HeisPoint::new(2f64.sqrt() - 1.0, 0.0, 0.0), g2z: 0.0 };
    let hw = cal.riemann_h;
    let one = IntervalSlab::from_fn(0, hw, Kind::Custom("one".into()), |_| 1.0).map_err(|e| e.to_string())?;
    let riemann = nil_corr(&one, &weyl, &NilFunction::SinX).map_err(|e| e.to_string())?.re / hw as f64;
    let h = (cal.x as f64).powf(cal.theta).ceil() as u64;
    let mu = sieve_slab(cal.x, h, Kind::Mu).map_err(|e| e.to_string())?;
    let mut srng = ChaCha8Rng::seed_from_u64(cal.seed);
    let seqs: Vec<_> = (0..cal.sequences).map(|_| random_sequence(&mut srng)).collect();
    let f = NilFunction::CentralE { xi: cal.xi };
    let mut worst: f64 = 0.0;
    for s in &seqs {
        worst = worst.max(nil_corr(&mu, s, &f).map_err(|e| e.to_string())?.norm() / h as f64);
    }
    check(
        group_ok && reduce_ok && pull_ok && (riemann - 0.5).abs() <= cal.riemann_tolerance && worst <= cal.threshold,
        format!(
            "group law {group_ok}, reduction {reduce_ok}, pullback {pull_ok}; Riemann sum {riemann:.4} vs 0.5; max |nil_corr(mu)|/H = {worst:.4} over {} sequences (threshold {})",
            cal.sequences, cal.threshold
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Heath-Brown exactness", heath_brown_exactness),
        ("hyperbola partition", hyperbola_partition),
        ("exponent classifier", exponent_classifier),
        ("Ramare identity", ramare_identity),
        ("Lambda# progression averages", lambda_sharp_progressions),
        ("Gowers oracle equivalence", gowers_oracles),
        ("discorrelation trend", discorrelation_trend),
        ("major-arc shape", major_arc),
        ("local factors", local_factors),
        ("ternary desk experiment", ternary),
        ("nilsequence suite", nilsequences),
    ];
    let only: Vec<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or("panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
