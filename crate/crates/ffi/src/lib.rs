//! C ABI over `shortint`.
//!
//! Every fallible call returns a [`ShortintStatus`]; on failure the message is
//! available from [`shortint_last_error`] until the next call on the same
//! thread. Objects are opaque handles released with their `_free` function.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use shortint::correlations::{gowers_norm, linear_exp_sum};
use shortint::decomposition::{classify_exponents, LABELS};
use shortint::hyperbola::{partition_hyperbola, verify_partition, HyperbolaParams, HyperbolaPartition};
use shortint::linear_forms::{local_factor_lambda, prime_solutions, AffineLinearSystem, IntBox};
use shortint::{sieve_slab, Error, IntervalSlab, Kind};

/// Status codes; 1 to 6 match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShortintStatus {
    Ok = 0,
    InvalidInput = 1,
    Budget = 2,
    RangeMismatch = 3,
    Verification = 4,
    Io = 5,
    Parse = 6,
    NullPointer = 7,
    Panic = 8,
}

/// Function values on `(X, X+H]`.
pub struct ShortintSlab(IntervalSlab);

/// A hyperbola partition.
pub struct ShortintPartition(HyperbolaPartition);

/// An affine-linear system of forms.
pub struct ShortintSystem(AffineLinearSystem);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ShortintStatus {
    match e.code() {
        1 => ShortintStatus::InvalidInput,
        2 => ShortintStatus::Budget,
        3 => ShortintStatus::RangeMismatch,
        4 => ShortintStatus::Verification,
        5 => ShortintStatus::Io,
        _ => ShortintStatus::Parse,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ShortintStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShortintStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            ShortintStatus::NullPointer
        }
        Ok(Err(Fail::Utf8(what))) => {
            set_error(&format!("{what} is not valid UTF-8"));
            ShortintStatus::Parse
        }
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            set_error(&format!("internal panic: {}", msg.unwrap_or_default()));
            ShortintStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn shortint_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn shortint_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Sieves the function named by `kind` (e.g. `"mu"`, `"lambda_vm"`, `"d_3"`) on `(x, x+h]`.
///
/// # Safety
/// `kind` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shortint_slab_sieve(x: u64, h: u64, kind: *const c_char, out_slab: *mut *mut ShortintSlab) -> ShortintStatus {
    guard(|| {
        let o = out(out_slab, "out")?;
        *o = ptr::null_mut();
        let k: Kind = string(kind, "kind")?.parse()?;
        *o = Box::into_raw(Box::new(ShortintSlab(sieve_slab(x, h, k)?)));
        Ok(())
    })
}

/// Wraps `h` caller-supplied values as the slab of `n = x+1, ..., x+h`.
///
/// # Safety
/// `values` must point to `h` doubles.
#[no_mangle]
pub unsafe extern "C" fn shortint_slab_from_values(x: u64, h: u64, values: *const f64, out_slab: *mut *mut ShortintSlab) -> ShortintStatus {
    guard(|| {
        let o = out(out_slab, "out")?;
        *o = ptr::null_mut();
        let v = slice(values, h as usize, "values")?.to_vec();
        *o = Box::into_raw(Box::new(ShortintSlab(IntervalSlab::new(x, h, Kind::Custom("ffi".into()), v)?)));
        Ok(())
    })
}

/// # Safety
/// `slab` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn shortint_slab_free(slab: *mut ShortintSlab) {
    if !slab.is_null() {
        drop(Box::from_raw(slab));
    }
}

/// Number of values `H`; 0 for a null handle.
///
/// # Safety
/// `slab` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shortint_slab_len(slab: *const ShortintSlab) -> u64 {
    slab.as_ref().map_or(0, |s| s.0.h)
}

/// Copies up to `cap` values into `buf`.
///
/// # Safety
/// `buf` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn shortint_slab_values(slab: *const ShortintSlab, buf: *mut f64, cap: usize) -> ShortintStatus {
    guard(|| {
        let s = deref(slab, "slab")?;
        let n = cap.min(s.0.values.len());
        if n > 0 {
            if buf.is_null() {
                return Err(Fail::Null("buf"));
            }
            ptr::copy_nonoverlapping(s.0.values.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// `sum f(n)` over the slab.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn shortint_slab_sum(slab: *const ShortintSlab, sum: *mut f64) -> ShortintStatus {
    guard(|| {
        *out(sum, "sum")? = deref(slab, "slab")?.0.sum();
        Ok(())
    })
}

/// `sum f(n) e(alpha n)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn shortint_exp_sum_linear(slab: *const ShortintSlab, alpha: f64, re: *mut f64, im: *mut f64) -> ShortintStatus {
    guard(|| {
        let z = linear_exp_sum(&deref(slab, "slab")?.0, alpha);
        *out(re, "re")? = z.re;
        *out(im, "im")? = z.im;
        Ok(())
    })
}

/// Normalized Gowers `U^s` norm of the slab (1 for the constant function).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn shortint_gowers_norm(slab: *const ShortintSlab, s: u32, normalized: *mut f64) -> ShortintStatus {
    guard(|| {
        *out(normalized, "normalized")? = gowers_norm(&deref(slab, "slab")?.0, s)?.normalized;
        Ok(())
    })
}

/// Partitions `{(m, n): m in (j_lo, j_hi], x < mn <= x + h}` into progressions.
///
/// # Safety
/// `out_partition` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shortint_partition_new(
    x: u64,
    h: u64,
    m: u64,
    j_lo: u64,
    j_hi: u64,
    q: u64,
    out_partition: *mut *mut ShortintPartition,
) -> ShortintStatus {
    guard(|| {
        let o = out(out_partition, "out")?;
        *o = ptr::null_mut();
        let p = partition_hyperbola(HyperbolaParams { x, h, m, j_lo, j_hi, q })?;
        *o = Box::into_raw(Box::new(ShortintPartition(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn shortint_partition_free(p: *mut ShortintPartition) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of progressions and of covered points.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn shortint_partition_counts(p: *const ShortintPartition, progressions: *mut u64, points: *mut u64) -> ShortintStatus {
    guard(|| {
        let st = deref(p, "partition")?.0.stats();
        *out(progressions, "progressions")? = st.total_progressions;
        *out(points, "points")? = st.total_points;
        Ok(())
    })
}

/// Runs the verifier; `Ok` with `*pass` set either way, message on failure.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn shortint_partition_verify(p: *const ShortintPartition, pass: *mut bool) -> ShortintStatus {
    guard(|| {
        let r = verify_partition(&deref(p, "partition")?.0);
        *out(pass, "pass")? = r.pass;
        if !r.pass {
            set_error(&r.failures.join("; "));
        }
        Ok(())
    })
}

/// Writes one JSON progression per line.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shortint_partition_write_jsonl(p: *const ShortintPartition, path: *const c_char) -> ShortintStatus {
    guard(|| {
        let part = deref(p, "partition")?;
        part.0.write_jsonl(Path::new(string(path, "path")?))?;
        Ok(())
    })
}

/// Classifies `alphas[0..k]` at `theta`. Bit `i` of `labels` is set when the
/// `i`-th condition holds, in the order I, I2maj, I2, IImaj, IImin.
///
/// # Safety
/// `alphas` must point to `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn shortint_classify(alphas: *const f64, k: usize, theta: f64, labels: *mut u32) -> ShortintStatus {
    guard(|| {
        let a = slice(alphas, k, "alphas")?;
        let c = classify_exponents(a, theta)?;
        *out(labels, "labels")? = LABELS.iter().enumerate().filter(|(_, l)| c.has(**l)).map(|(i, _)| 1u32 << i).sum();
        Ok(())
    })
}

/// Parses a system from JSON `{"d":..,"t":..,"forms":[{"dot":[..],"const":..}]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shortint_system_from_json(json: *const c_char, out_system: *mut *mut ShortintSystem) -> ShortintStatus {
    guard(|| {
        let o = out(out_system, "out")?;
        *o = ptr::null_mut();
        let sys: AffineLinearSystem =
            serde_json::from_str(string(json, "json")?).map_err(|e| Error::Parse(format!("system JSON: {e}")))?;
        *o = Box::into_raw(Box::new(ShortintSystem(sys)));
        Ok(())
    })
}

/// The one-variable system `n + shifts[i]`.
///
/// # Safety
/// `shifts` must point to `len` integers.
#[no_mangle]
pub unsafe extern "C" fn shortint_system_shifts(shifts: *const i64, len: usize, out_system: *mut *mut ShortintSystem) -> ShortintStatus {
    guard(|| {
        let o = out(out_system, "out")?;
        *o = ptr::null_mut();
        let sys = AffineLinearSystem::shifts(slice(shifts, len, "shifts")?)?;
        *o = Box::into_raw(Box::new(ShortintSystem(sys)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn shortint_system_free(s: *mut ShortintSystem) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// The local factor `beta_p` as an exact fraction `num/den`, plus its double value.
/// Fails with `Budget` when the fraction does not fit in 64 bits.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn shortint_local_factor(
    s: *const ShortintSystem,
    p: u64,
    num: *mut i64,
    den: *mut i64,
    value: *mut f64,
) -> ShortintStatus {
    use num_traits::ToPrimitive;
    guard(|| {
        let b = local_factor_lambda(&deref(s, "system")?.0, p)?;
        let (n, d) = match (b.numer().to_i64(), b.denom().to_i64()) {
            (Some(n), Some(d)) => (n, d),
            _ => return Err(Error::Budget(format!("beta_{p} = {b} does not fit in 64 bits")).into()),
        };
        *out(num, "num")? = n;
        *out(den, "den")? = d;
        *out(value, "value")? = b.to_f64().unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Weighted prime count in the box `prod (box_x[j], box_x[j] + box_h[j]]` and the
/// prediction `beta_inf * prod_{p <= p_max} beta_p`.
///
/// # Safety
/// `box_x` and `box_h` must point to `d` values, where `d` is the system's dimension.
#[no_mangle]
pub unsafe extern "C" fn shortint_prime_solutions(
    s: *const ShortintSystem,
    box_x: *const i64,
    box_h: *const u64,
    d: usize,
    p_max: u64,
    count: *mut f64,
    prediction: *mut f64,
) -> ShortintStatus {
    guard(|| {
        let bx = IntBox::new(slice(box_x, d, "box_x")?.to_vec(), slice(box_h, d, "box_h")?.to_vec())?;
        let r = prime_solutions(&deref(s, "system")?.0, &bx, p_max)?;
        *out(count, "count")? = r.count;
        *out(prediction, "prediction")? = r.prediction;
        Ok(())
    })
}
