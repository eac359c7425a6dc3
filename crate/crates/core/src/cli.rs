//! Command-line experiment harness. Every subcommand prints one JSON object on
//! stdout; failures print `{"error": {...}}` on stderr and exit nonzero.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::approximants::{self, ApproximantParams};
use crate::arith::{gcd, primes_up_to};
use crate::calibration::{calibration, Calibration};
use crate::correlations::{exp_sum, gowers_norm, linear_exp_sum, write_sweep_csv, SweepRow};
use crate::decomposition::{self, HbTarget};
use crate::error::{invalid, Error, Result};
use crate::hyperbola::{partition_hyperbola, verify_partition, HyperbolaParams};
use crate::interval_sieve::{factor_interval, slab_from_factors, IntervalSlab, Kind};
use crate::linear_forms::{self, AffineLinearSystem, IntBox, Weight};
use crate::nilsequence::{self, NilFunction};
use crate::poly_equidist::{Basis, PolyMod1};
use crate::progressions::Progression1D;

#[derive(Parser, Debug, Serialize)]
#[command(name = "shortint", version, about = "Arithmetic functions on short intervals")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write a run manifest (config, versions, timings) to this path.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Calibration config replacing the built-in one.
    #[arg(long, global = true)]
    pub calibration: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Range {
    #[arg(long = "X")]
    pub x: u64,
    /// Interval length; alternatively give `--theta` for `H = ceil(X^theta)`.
    #[arg(long = "H")]
    pub h: Option<u64>,
    #[arg(long)]
    pub theta: Option<f64>,
}

impl Range {
    pub fn resolve(&self) -> Result<(u64, u64)> {
        let h = match (self.h, self.theta) {
            (Some(h), None) => h,
            (None, Some(t)) if t > 0.0 && t <= 1.0 => (self.x as f64).powf(t).ceil() as u64,
            (None, Some(t)) => return invalid(format!("theta = {t} outside (0, 1]")),
            (Some(_), Some(_)) => return invalid("give either --H or --theta, not both"),
            (None, None) => return invalid("one of --H or --theta is required"),
        };
        if h < 1 {
            return invalid("H must be at least 1");
        }
        Ok((self.x, h))
    }
}

#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct ApproxArgs {
    /// Sieve level for lambda_sharp (default exp((log X)^0.1)).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    /// Divisor exponent for dk_sharp.
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// `R_k = X^eta` for dk_sharp (default 1/(10k)).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Explicit `R_k` for dk_sharp, overriding eta.
    #[arg(long)]
    pub rk: Option<f64>,
    #[arg(long)]
    pub trunc: Option<f64>,
}

impl ApproxArgs {
    fn params(&self, x: u64) -> ApproximantParams {
        let mut p = ApproximantParams::defaults(x as f64, self.k.max(2));
        if let Some(r) = self.r {
            p.r = r;
        }
        p.w = self.w.unwrap_or(p.r);
        if let Some(e) = self.eta {
            p.eta = e;
        }
        if let Some(t) = self.trunc {
            p.trunc = t;
        }
        p
    }
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Sieve an arithmetic function on (X, X+H].
    Sieve {
        #[command(flatten)]
        range: Range,
        #[arg(long = "fn")]
        func: String,
        /// CSV output (a JSON sidecar is written next to it).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an approximant (lambda_sharp, lambda_sharp_I, lambda_w, dk_sharp).
    Approx {
        #[command(flatten)]
        range: Range,
        #[arg(long = "fn")]
        func: String,
        #[command(flatten)]
        approx: ApproxArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep exponential sums and nilsequence correlations of f (or f - f#).
    Discorrelate {
        #[command(flatten)]
        range: Range,
        #[arg(long = "fn")]
        func: String,
        /// Subtract the approximant (lambda_sharp for lambda, dk_sharp for d_k).
        #[arg(long)]
        minus_approx: bool,
        #[command(flatten)]
        approx: ApproxArgs,
        /// Include every a/q with q up to this bound.
        #[arg(long, default_value_t = 0)]
        q_max: u64,
        /// Number of random frequencies.
        #[arg(long, default_value_t = 0)]
        random: usize,
        /// Number of random polynomial phases of degree `degree`.
        #[arg(long, default_value_t = 0)]
        polys: usize,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Number of random Heisenberg nilsequences.
        #[arg(long, default_value_t = 0)]
        nil: usize,
        #[arg(long, default_value_t = 1)]
        xi: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gowers U^s norm of f on (X, X+H].
    Gowers {
        #[command(flatten)]
        range: Range,
        #[arg(long = "fn")]
        func: String,
        #[arg(long, default_value_t = 2)]
        s: u32,
        #[arg(long)]
        minus_approx: bool,
        #[command(flatten)]
        approx: ApproxArgs,
    },
    /// Partition the hyperbola neighbourhood into progressions.
    Partition {
        #[arg(long = "X")]
        x: u64,
        #[arg(long = "H")]
        h: u64,
        #[arg(long = "M")]
        m: u64,
        #[arg(long = "Q")]
        q: u64,
        /// `J = (lo, hi]` as `lo,hi` (default `(M, 2M]`).
        #[arg(long = "J")]
        j: Option<String>,
        #[arg(long)]
        verify: bool,
        /// JSON-lines output, one progression per line.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify an exponent tuple against the five conditions.
    Classify {
        /// Decimal or `p/q`.
        #[arg(long)]
        theta: String,
        /// Comma-separated, decimal or `p/q`; all rational means exact arithmetic.
        #[arg(long)]
        alphas: String,
    },
    /// Check the Heath-Brown decomposition against the target on [X/2, 4X].
    HbCheck {
        #[arg(long, default_value = "lambda_vm")]
        target: String,
        #[arg(long = "X")]
        x: u64,
        #[arg(long = "L")]
        l: u32,
    },
    /// Check Ramaré's identity on (X, X+H].
    RamareCheck {
        #[command(flatten)]
        range: Range,
        #[arg(long = "P")]
        p: u64,
        #[arg(long = "Q")]
        q: u64,
        #[arg(long = "fn", default_value = "mu")]
        func: String,
        /// Emit a_r for r up to this bound.
        #[arg(long, default_value_t = 1000)]
        r_max: u64,
    },
    /// Local factors and the truncated singular series of a linear system.
    SingularSeries {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 100)]
        p_max: u64,
        /// Use the d_k local factors instead of the Lambda ones.
        #[arg(long)]
        dk: Option<u32>,
        /// Precision J for the d_k factors.
        #[arg(long = "J", default_value_t = 6)]
        j: u32,
        /// Per-prime CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted count of prime solutions in a box against the prediction.
    PrimeSolutions {
        #[command(flatten)]
        system: SystemArgs,
        /// Box corner `X_1,...,X_d` (the box is `(X_j, X_j + H_j]`).
        #[arg(long)]
        box_x: Option<String>,
        #[arg(long)]
        box_h: Option<String>,
        #[arg(long, default_value_t = 1000)]
        p_max: u64,
    },
    /// Sums of f - f# over residue classes.
    MajorArc {
        #[command(flatten)]
        range: Range,
        #[arg(long = "fn")]
        func: String,
        #[command(flatten)]
        approx: ApproxArgs,
        #[arg(long, default_value_t = 20)]
        q_max: u64,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SystemArgs {
    /// System JSON `{d, t, forms: [{dot, const}]}`.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// One-variable system `n + h` for each listed shift.
    #[arg(long)]
    pub shifts: Option<String>,
    /// The ternary system `(n1, n2, N - n1 - n2)` with its standard box.
    #[arg(long)]
    pub ternary: Option<i64>,
}

impl SystemArgs {
    fn load(&self) -> Result<AffineLinearSystem> {
        match (&self.system, &self.shifts, self.ternary) {
            (Some(p), None, None) => {
                serde_json::from_str(&std::fs::read_to_string(p)?).map_err(|e| Error::Parse(format!("system JSON: {e}")))
            }
            (None, Some(s), None) => AffineLinearSystem::shifts(&parse_list::<i64>(s)?),
            (None, None, Some(n)) => Ok(AffineLinearSystem::ternary(n)),
            _ => invalid("give exactly one of --system, --shifts, --ternary"),
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::Parse(format!("cannot parse `{t}` in `{s}`"))))
        .collect()
}

fn parse_ratio(s: &str) -> Option<Ratio<i64>> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
            (q != 0).then(|| Ratio::new(p, q))
        }
        None => s.parse::<i64>().ok().map(Ratio::from_integer),
    }
}

fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(r) = parse_ratio(s) {
        return Ok(r.to_f64().unwrap_or(f64::NAN));
    }
    s.parse().map_err(|_| Error::Parse(format!("cannot parse `{s}` as a number")))
}

/// The slab of a function tag, including `one` and the approximants.
pub fn slab_for(tag: &str, x: u64, h: u64, approx: &ApproxArgs) -> Result<IntervalSlab> {
    if tag == "one" {
        return IntervalSlab::from_fn(x, h, Kind::Custom("one".into()), |_| 1.0);
    }
    let kind: Kind = tag.parse()?;
    let fi = factor_interval(x, h)?;
    let p = approx.params(x);
    match kind {
        Kind::LambdaSharp => approximants::lambda_sharp_slab(&fi, p.r),
        Kind::LambdaSharpI => approximants::lambda_sharp_i_slab(&fi, p.r, p.trunc),
        Kind::LambdaW => approximants::lambda_w_slab(&fi, p.w),
        Kind::DkSharp => match approx.rk {
            Some(r) => approximants::dk_sharp_with_r(&fi, approx.k, r),
            None => approximants::dk_sharp(&fi, approx.k, p.eta),
        },
        Kind::Custom(c) => invalid(format!("custom function `{c}` cannot be sieved; read it from a CSV")),
        k => slab_from_factors(&fi, k),
    }
}

/// `f - f#` for the functions with a shipped approximant (`μ# = 0`).
pub fn minus_approx(f: &IntervalSlab, approx: &ApproxArgs) -> Result<IntervalSlab> {
    let fi = factor_interval(f.x, f.h)?;
    let p = approx.params(f.x);
    let sharp = match &f.kind {
        Kind::LambdaVm => approximants::lambda_sharp_slab(&fi, p.r)?,
        Kind::Dk(k) => match approx.rk {
            Some(r) => approximants::dk_sharp_with_r(&fi, *k, r)?,
            None => approximants::dk_sharp(&fi, *k, p.eta.min(1.0 / (10.0 * *k as f64)))?,
        },
        Kind::Mu | Kind::Liouville => return Ok(f.clone()),
        other => return invalid(format!("no approximant for `{other}`")),
    };
    f.minus(&sharp)
}

fn with_approx(tag: &str, x: u64, h: u64, approx: &ApproxArgs, minus: bool) -> Result<IntervalSlab> {
    let f = slab_for(tag, x, h, approx)?;
    if minus {
        minus_approx(&f, approx)
    } else {
        Ok(f)
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

/// Reduced fractions `a/q` with `q <= q_max`, `0 <= a < q`.
pub fn farey_alphas(q_max: u64) -> Vec<(String, f64)> {
    let mut v = Vec::new();
    for q in 1..=q_max {
        for a in 0..q {
            if gcd(a, q) == 1 {
                v.push((format!("{a}/{q}"), a as f64 / q as f64));
            }
        }
    }
    v
}

fn execute(cli: &Cli, cal: &Calibration) -> Result<Value> {
    match &cli.command {
        Command::Sieve { range, func, out } => {
            let (x, h) = range.resolve()?;
            let f = slab_for(func, x, h, &ApproxArgs::default())?;
            if let Some(p) = out {
                f.write_csv(p)?;
            }
            Ok(json!({"X": x, "H": h, "kind": f.kind.to_string(), "sum": f.sum(), "mean": f.sum() / h as f64}))
        }
        Command::Approx { range, func, approx, out } => {
            let (x, h) = range.resolve()?;
            let kind: Kind = func.parse()?;
            if !matches!(kind, Kind::LambdaSharp | Kind::LambdaSharpI | Kind::LambdaW | Kind::DkSharp) {
                return invalid(format!("`{func}` is not an approximant"));
            }
            let f = slab_for(func, x, h, approx)?;
            if let Some(p) = out {
                f.write_csv(p)?;
            }
            Ok(json!({"X": x, "H": h, "kind": f.kind.to_string(), "params": to_value(&approx.params(x)), "sum": f.sum(), "mean": f.sum() / h as f64}))
        }
        Command::Discorrelate { range, func, minus_approx, approx, q_max, random, polys, degree, nil, xi, seed, out } => {
            let (x, h) = range.resolve()?;
            let f = with_approx(func, x, h, approx, *minus_approx)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let mut alphas = farey_alphas(*q_max);
            for i in 0..*random {
                let a: f64 = rng.gen();
                alphas.push((format!("random{i}:{a:?}"), a));
            }
            let hf = h as f64;
            let mut rows: Vec<SweepRow> = alphas
                .par_iter()
                .map(|(name, a)| {
                    let v = linear_exp_sum(&f, *a);
                    SweepRow { param: format!("alpha={name}"), value: v, normalized: v.norm() / hf }
                })
                .collect();
            for i in 0..*polys {
                let c: Vec<f64> = (0..=*degree).map(|_| rng.gen()).collect();
                let p = PolyMod1::float(x as i64, Basis::Binomial, c)?;
                let v = exp_sum(&f, &p);
                rows.push(SweepRow { param: format!("poly{i}"), value: v, normalized: v.norm() / hf });
            }
            let fun = NilFunction::CentralE { xi: *xi };
            for i in 0..*nil {
                let seq = nilsequence::random_sequence(&mut rng);
                let v = nilsequence::nil_corr(&f, &seq, &fun)?;
                rows.push(SweepRow { param: format!("nil{i}"), value: v, normalized: v.norm() / hf });
            }
            if let Some(p) = out {
                write_sweep_csv(p, &rows)?;
            }
            let best = rows.iter().fold(None::<&SweepRow>, |b, r| match b {
                Some(b) if b.normalized >= r.normalized => Some(b),
                _ => Some(r),
            });
            Ok(json!({
                "X": x, "H": h, "kind": f.kind.to_string(), "rows": rows.len(),
                "sup_normalized": best.map_or(0.0, |b| b.normalized),
                "argsup": best.map(|b| b.param.clone()),
            }))
        }
        Command::Gowers { range, func, s, minus_approx, approx } => {
            let (x, h) = range.resolve()?;
            let f = with_approx(func, x, h, approx, *minus_approx)?;
            Ok(to_value(&gowers_norm(&f, *s)?))
        }
        Command::Partition { x, h, m, q, j, verify, out } => {
            let (j_lo, j_hi) = match j {
                Some(s) => {
                    let v = parse_list::<u64>(s)?;
                    if v.len() != 2 {
                        return invalid("--J takes lo,hi");
                    }
                    (v[0], v[1])
                }
                None => (*m, 2 * m),
            };
            let params = HyperbolaParams { x: *x, h: *h, m: *m, j_lo, j_hi, q: *q };
            let p = partition_hyperbola(params)?;
            if let Some(o) = out {
                p.write_jsonl(o)?;
            }
            let st = p.stats();
            let mut v = json!({
                "params": to_value(&params),
                "families": st.families.len(),
                "progressions": st.total_progressions,
                "points": st.total_points,
                "max_length": st.max_length,
            });
            if *verify {
                let r = verify_partition(&p);
                v["verify"] = to_value(&r);
                v["status"] = json!(if r.pass { "PASS" } else { "FAIL" });
                if !r.pass {
                    return Err(Error::Verification(format!("partition failed verification: {:?}", r.failures)));
                }
            }
            Ok(v)
        }
        Command::Classify { theta, alphas } => {
            let parts: Vec<&str> = alphas.split(',').collect();
            let exact: Option<Vec<Ratio<i64>>> = parts.iter().map(|s| parse_ratio(s)).collect();
            let c = match (exact, parse_ratio(theta)) {
                (Some(a), Some(t)) if theta.contains('/') || parts.iter().any(|p| p.contains('/')) => {
                    decomposition::classify_exponents_exact(&a, t)?
                }
                _ => {
                    let a: Vec<f64> = parts.iter().map(|s| parse_real(s)).collect::<Result<_>>()?;
                    decomposition::classify_exponents(&a, parse_real(theta)?)?
                }
            };
            Ok(to_value(&c))
        }
        Command::HbCheck { target, x, l } => {
            let t = match target.as_str() {
                "mu" => HbTarget::Mu,
                "lambda_vm" | "lambda" => HbTarget::LambdaVm,
                other => return invalid(format!("target must be mu or lambda_vm, got {other}")),
            };
            let comps = decomposition::heath_brown(t, *x, *l)?;
            let v = decomposition::evaluate_components(&comps, 4 * x)?;
            let kind = if t == HbTarget::Mu { Kind::Mu } else { Kind::LambdaVm };
            let truth = crate::interval_sieve::sieve_slab(0, 4 * x, kind)?;
            let lo = x.div_ceil(2);
            let residual = (lo..=4 * x).map(|n| (v[n as usize] - truth.values[n as usize - 1]).abs()).fold(0.0, f64::max);
            let max_len = comps.iter().map(|c| c.factors.len()).max().unwrap_or(0);
            Ok(json!({
                "target": target, "X": x, "L": l, "cutoff": decomposition::hb_cutoff(*x, *l),
                "components": comps.len(), "max_factors": max_len, "max_residual": residual,
            }))
        }
        Command::RamareCheck { range, p, q, func, r_max } => {
            let (x, h) = range.resolve()?;
            let kind: Kind = func.parse()?;
            let fi = factor_interval(x, h)?;
            let r = decomposition::ramare_decompose(&fi, &kind, *p, *q, *r_max)?;
            let nonzero = r.rows.iter().filter(|row| *row.lhs.numer() != 0).count();
            Ok(json!({
                "X": x, "H": h, "P": p, "Q": q, "kind": kind.to_string(),
                "max_abs_diff": r.max_abs_diff.to_string(), "rows": r.rows.len(), "nonzero_rows": nonzero,
                "coefficients": r.coefficients.iter().map(|(k, v)| (k.to_string(), json!(v.to_string()))).collect::<serde_json::Map<_, _>>(),
            }))
        }
        Command::SingularSeries { system, p_max, dk, j, out } => {
            let sys = system.load()?;
            let mut rows = Vec::new();
            let mut product = 1.0f64;
            for p in primes_up_to(*p_max) {
                let (b, tail) = match dk {
                    Some(k) => {
                        let r = linear_forms::local_factor_dk(&sys, p, *k, *j)?;
                        (r.value, r.tail_bound)
                    }
                    None => (linear_forms::local_factor_lambda(&sys, p)?, 0.0),
                };
                let bf = b.to_f64().unwrap_or(f64::NAN);
                product *= bf;
                rows.push((p, b.to_string(), bf, tail, product));
            }
            if let Some(path) = out {
                use std::io::Write;
                let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
                writeln!(w, "p,beta_exact,beta,tail_bound,partial_product")?;
                for (p, e, b, t, pp) in &rows {
                    writeln!(w, "{p},{e},{b:?},{t:?},{pp:?}")?;
                }
            }
            Ok(json!({
                "system": to_value(&sys), "p_max": p_max, "product": product,
                "fitted_c": rows.iter().map(|r| (r.0 * r.0) as f64 * (r.2 - 1.0).abs()).fold(0.0, f64::max),
            }))
        }
        Command::PrimeSolutions { system, box_x, box_h, p_max } => {
            let sys = system.load()?;
            let bx = match (box_x, box_h, system.ternary) {
                (Some(a), Some(b), _) => IntBox::new(parse_list(a)?, parse_list(b)?)?,
                (None, None, Some(n)) => IntBox::ternary(n),
                _ => return invalid("give --box-x and --box-h (or use --ternary for the standard box)"),
            };
            let r = linear_forms::prime_solutions(&sys, &bx, *p_max)?;
            let arch = linear_forms::archimedean_factor(&sys, &bx, Weight::Lambda)?;
            Ok(json!({
                "box": to_value(&bx), "result": to_value(&r), "refinement_delta": arch.refinement_delta,
                "tolerance": cal.ternary.threshold,
            }))
        }
        Command::MajorArc { range, func, approx, q_max } => {
            let (x, h) = range.resolve()?;
            let f = slab_for(func, x, h, approx)?;
            let d = minus_approx(&f, approx)?;
            let hf = h as f64;
            let mut worst = (0.0f64, 1u64, 0u64);
            for q in 1..=*q_max {
                let mut sums = vec![0.0f64; q as usize];
                for (n, v) in d.iter() {
                    sums[(n % q) as usize] += v;
                }
                for (a, s) in sums.iter().enumerate() {
                    if s.abs() / hf > worst.0 {
                        worst = (s.abs() / hf, q, a as u64);
                    }
                }
            }
            let (best, prog) = maximal_interval(&d.values, x as i64 + 1);
            Ok(json!({
                "X": x, "H": h, "kind": f.kind.to_string(),
                "total_normalized": d.sum() / hf,
                "worst_class": {"normalized": worst.0, "q": worst.1, "a": worst.2},
                "maximal_interval": to_value(&prog),
                "maximal_interval_normalized": best / hf,
            }))
        }
    }
}

/// Largest `|sum|` over contiguous subintervals: the spread of the prefix sums.
pub fn maximal_interval(f: &[f64], first_n: i64) -> (f64, Progression1D) {
    let (mut acc, mut lo, mut hi) = (0.0f64, (0.0f64, 0usize), (0.0f64, 0usize));
    for (i, v) in f.iter().enumerate() {
        acc += v;
        if acc < lo.0 {
            lo = (acc, i + 1);
        }
        if acc > hi.0 {
            hi = (acc, i + 1);
        }
    }
    if hi.0 - lo.0 == 0.0 {
        return (0.0, Progression1D::empty());
    }
    let (a, b) = if lo.1 < hi.1 { (lo.1, hi.1) } else { (hi.1, lo.1) };
    (hi.0 - lo.0, Progression1D::interval(first_n + a as i64 - 1, (b - a) as u64))
}

fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::Budget(_) => "budget",
        Error::RangeMismatch(_) => "range_mismatch",
        Error::Verification(_) => "verification",
        Error::Io(_) => "io",
        Error::Parse(_) => "parse",
    };
    json!({"error": {"code": e.code(), "kind": kind, "message": e.to_string()}})
}

/// Parses arguments, runs, prints; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = Error::Parse(e.to_string());
            eprintln!("{}", error_json(&err));
            return err.code();
        }
    };
    match run(&cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            e.code()
        }
    }
}

/// Runs a parsed command, writing the manifest if asked.
pub fn run(cli: &Cli) -> Result<Value> {
    let start = Instant::now();
    let owned;
    let cal = match &cli.calibration {
        Some(p) => {
            owned = Calibration::load(p)?;
            &owned
        }
        None => calibration(),
    };
    let go = || execute(cli, cal);
    let out = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }?;
    if let Some(path) = &cli.manifest {
        let manifest = json!({
            "config": to_value(cli),
            "versions": {"shortint": env!("CARGO_PKG_VERSION")},
            "timings": {"total_seconds": start.elapsed().as_secs_f64()},
        });
        std::fs::write(path, serde_json::to_string_pretty(&manifest).expect("json"))?;
    }
    Ok(out)
}
