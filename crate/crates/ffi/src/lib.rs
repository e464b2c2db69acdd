//! C interface to `bcfrac`.
//!
//! Every function returns a [`BcfracStatus`]; on failure the message is
//! available from [`bcfrac_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use bcfrac::fracops1d::{self, FdStep, Quadrature1D, ScalarWeightFn, Side};
use bcfrac::frac_cr::FracCr;
use bcfrac::runner::{self, ExperimentConfig};
use bcfrac::weighted_cr::{ProductFunction, WeightPair};
use bcfrac::{BicomplexNumber, Error, HyperbolicNumber};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcfracStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Quadrature = 4,
    Step = 5,
    ZeroDivisor = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcfracComplex {
    pub re: f64,
    pub im: f64,
}

/// `z1 e + z2 e†` in idempotent components.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcfracBicomplex {
    pub z1: BcfracComplex,
    pub z2: BcfracComplex,
}

/// `l1 e + l2 e†` with real components.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcfracHyperbolic {
    pub l1: f64,
    pub l2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcfracSide {
    Left = 0,
    Right = 1,
}

/// Scalar input `t -> f(t)` for the one-dimensional operators.
pub type BcfracScalarFn = Option<extern "C" fn(t: f64, user: *mut c_void) -> BcfracComplex>;

/// A resolved run configuration.
pub struct BcfracConfig(ExperimentConfig);
/// A bicomplex fractional operator at a fixed resolution.
pub struct BcfracOperator(FracCr);
/// A product-type function `f1(z1) e + f2(z2) e†`.
pub struct BcfracFunction(ProductFunction);
/// A weight pair `(ϑ, φ)`.
pub struct BcfracWeights(WeightPair);
/// A strictly increasing scalar weight `φ` on an interval.
pub struct BcfracScalarWeight(ScalarWeightFn);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BcfracStatus {
    match e {
        Error::Domain(_) | Error::WOnBoundary => BcfracStatus::Domain,
        Error::Quadrature(_) => BcfracStatus::Quadrature,
        Error::Step(_) => BcfracStatus::Step,
        Error::ZeroDivisor | Error::Zero | Error::NotInvertible => BcfracStatus::ZeroDivisor,
        Error::Config { .. } | Error::Expr { .. } => BcfracStatus::Config,
        Error::Io(_) => BcfracStatus::Io,
        _ => BcfracStatus::InvalidArgument,
    }
}

struct Fail(BcfracStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BcfracStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> BcfracStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            BcfracStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            BcfracStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn string<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(BcfracStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn handle<T>(v: T, out: *mut *mut T, what: &str) -> Result<(), Fail> {
    write(out, Box::into_raw(Box::new(v)), what)
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn c64(c: BcfracComplex) -> Complex64 {
    Complex64::new(c.re, c.im)
}

fn cc(z: Complex64) -> BcfracComplex {
    BcfracComplex { re: z.re, im: z.im }
}

fn bc(z: BcfracBicomplex) -> BicomplexNumber {
    BicomplexNumber::new(c64(z.z1), c64(z.z2))
}

fn cb(z: BicomplexNumber) -> BcfracBicomplex {
    BcfracBicomplex { z1: cc(z.z1), z2: cc(z.z2) }
}

fn ch(h: HyperbolicNumber) -> BcfracHyperbolic {
    BcfracHyperbolic { l1: h.l1, l2: h.l2 }
}

fn side(s: BcfracSide) -> Side {
    match s {
        BcfracSide::Left => Side::Left,
        BcfracSide::Right => Side::Right,
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn bcfrac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bcfrac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// Bicomplex arithmetic.

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_from_cartesian(a: BcfracComplex, b: BcfracComplex, out: *mut BcfracBicomplex) -> BcfracStatus {
    guard(|| write(out, cb(BicomplexNumber::from_cartesian(c64(a), c64(b))), "out"))
}

/// # Safety
/// `a` and `b` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_to_cartesian(z: BcfracBicomplex, a: *mut BcfracComplex, b: *mut BcfracComplex) -> BcfracStatus {
    guard(|| {
        let (x, y) = bc(z).to_cartesian();
        write(a, cc(x), "a")?;
        write(b, cc(y), "b")
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_add(x: BcfracBicomplex, y: BcfracBicomplex, out: *mut BcfracBicomplex) -> BcfracStatus {
    guard(|| write(out, cb(bc(x) + bc(y)), "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_sub(x: BcfracBicomplex, y: BcfracBicomplex, out: *mut BcfracBicomplex) -> BcfracStatus {
    guard(|| write(out, cb(bc(x) - bc(y)), "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_mul(x: BcfracBicomplex, y: BcfracBicomplex, out: *mut BcfracBicomplex) -> BcfracStatus {
    guard(|| write(out, cb(bc(x) * bc(y)), "out"))
}

/// Fails with `ZeroDivisor` when either idempotent component vanishes.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_inv(x: BcfracBicomplex, out: *mut BcfracBicomplex) -> BcfracStatus {
    guard(|| write(out, cb(bc(x).invert()?), "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_exp(x: BcfracBicomplex, out: *mut BcfracBicomplex) -> BcfracStatus {
    guard(|| write(out, cb(bc(x).exp()), "out"))
}

/// Componentwise conjugate `Z*`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_star(x: BcfracBicomplex, out: *mut BcfracBicomplex) -> BcfracStatus {
    guard(|| write(out, cb(bc(x).star()), "out"))
}

/// Hyperbolic modulus `|Z|_k`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_bicomplex_mod_k(x: BcfracBicomplex, out: *mut BcfracHyperbolic) -> BcfracStatus {
    guard(|| write(out, ch(bc(x).mod_k()), "out"))
}

#[no_mangle]
pub extern "C" fn bcfrac_bicomplex_is_zero_divisor(x: BcfracBicomplex) -> bool {
    bc(x).is_zero_divisor()
}

// One-dimensional operators.

/// `φ(t) = t` on `[lo, hi]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_scalar_weight_identity(lo: f64, hi: f64, out: *mut *mut BcfracScalarWeight) -> BcfracStatus {
    guard(|| handle(BcfracScalarWeight(ScalarWeightFn::identity(lo, hi)?), out, "out"))
}

/// `φ(t) = Σ c_j t^j` on `[lo, hi]`; `φ'` must stay positive there.
///
/// # Safety
/// `coeffs` must point to `len` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_scalar_weight_polynomial(
    coeffs: *const f64,
    len: usize,
    lo: f64,
    hi: f64,
    out: *mut *mut BcfracScalarWeight,
) -> BcfracStatus {
    guard(|| {
        if coeffs.is_null() {
            return Err(null("coeffs"));
        }
        let c: Vec<f64> = std::slice::from_raw_parts(coeffs, len).to_vec();
        let d: Vec<f64> = c.iter().enumerate().skip(1).map(|(j, v)| j as f64 * v).collect();
        let horner = |c: &[f64], t: f64| c.iter().rev().fold(0.0, |acc, v| acc * t + v);
        for j in 0..=64 {
            let t = lo + (hi - lo) * j as f64 / 64.0;
            if horner(&d, t).is_nan() || horner(&d, t) <= 0.0 {
                return Err(Fail(BcfracStatus::Domain, format!("φ' is not positive at t = {t}")));
            }
        }
        let cd = d.clone();
        let w = ScalarWeightFn::new(move |t| horner(&c, t), move |t| horner(&cd, t), lo, hi)?;
        handle(BcfracScalarWeight(w), out, "out")
    })
}

/// # Safety
/// `w` must come from a `bcfrac_scalar_weight_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_scalar_weight_free(w: *mut BcfracScalarWeight) {
    free(w)
}

fn scalar_fn(f: BcfracScalarFn, user: *mut c_void) -> Result<impl Fn(f64) -> Complex64, Fail> {
    let f = f.ok_or_else(|| null("f"))?;
    let user = user as usize;
    Ok(move |t| c64(f(t, user as *mut c_void)))
}

/// Proportional fractional integral of order `alpha ∈ (0, 1]` at `t`, with
/// `n` quadrature nodes.
///
/// # Safety
/// `f` must be callable with `user`; `w` must be a live handle; `out` must
/// be valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn bcfrac_prop_frac_integral(
    f: BcfracScalarFn,
    user: *mut c_void,
    alpha: f64,
    sigma: f64,
    w: *const BcfracScalarWeight,
    s: BcfracSide,
    t: f64,
    n: usize,
    out: *mut BcfracComplex,
) -> BcfracStatus {
    guard(|| {
        let g = scalar_fn(f, user)?;
        let w = deref(w, "w")?;
        let v = fracops1d::prop_frac_integral(&g, alpha, sigma, &w.0, side(s), t, &Quadrature1D::graded(n))?;
        write(out, cc(v), "out")
    })
}

/// Proportional fractional derivative of order `alpha ∈ (0, 1)` at `t`; the
/// outer derivative uses central differences with step `fd_relative` times
/// the interval length.
///
/// # Safety
/// As for [`bcfrac_prop_frac_integral`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn bcfrac_prop_frac_derivative(
    f: BcfracScalarFn,
    user: *mut c_void,
    alpha: f64,
    sigma: f64,
    w: *const BcfracScalarWeight,
    s: BcfracSide,
    t: f64,
    n: usize,
    fd_relative: f64,
    out: *mut BcfracComplex,
) -> BcfracStatus {
    guard(|| {
        let g = scalar_fn(f, user)?;
        let w = deref(w, "w")?;
        let fd = FdStep { h: None, relative: fd_relative, richardson: false };
        let v = fracops1d::prop_frac_derivative(&g, alpha, sigma, &w.0, side(s), t, &Quadrature1D::graded(n), &fd)?;
        write(out, cc(v), "out")
    })
}

// Configurations, functions and operators.

/// Parses a run configuration (TOML, optionally naming a `preset`).
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_config_from_toml(toml: *const c_char, out: *mut *mut BcfracConfig) -> BcfracStatus {
    guard(|| handle(BcfracConfig(ExperimentConfig::from_toml(string(toml, "toml")?)?), out, "out"))
}

/// # Safety
/// `c` must come from [`bcfrac_config_from_toml`] or be null.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_config_free(c: *mut BcfracConfig) {
    free(c)
}

/// Parses `f1(z1) e + f2(z2) e†` from two expressions.
///
/// # Safety
/// `f1` and `f2` must be NUL-terminated strings; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_function_parse(f1: *const c_char, f2: *const c_char, out: *mut *mut BcfracFunction) -> BcfracStatus {
    guard(|| {
        let f = ProductFunction::from_exprs(string(f1, "f1")?, string(f2, "f2")?)?;
        handle(BcfracFunction(f), out, "out")
    })
}

/// # Safety
/// `f` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_function_eval(f: *const BcfracFunction, z: BcfracBicomplex, out: *mut BcfracBicomplex) -> BcfracStatus {
    guard(|| write(out, cb(deref(f, "f")?.0.eval(bc(z))), "out"))
}

/// # Safety
/// `f` must come from [`bcfrac_function_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_function_free(f: *mut BcfracFunction) {
    free(f)
}

/// Parses `classical`, `constant:<ϑ>,<φ>` or `scaled-classical:<g(x, y)>`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_weights_parse(spec: *const c_char, out: *mut *mut BcfracWeights) -> BcfracStatus {
    guard(|| handle(BcfracWeights(WeightPair::from_spec(string(spec, "spec")?)?), out, "out"))
}

/// # Safety
/// `w` must come from [`bcfrac_weights_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_weights_free(w: *mut BcfracWeights) {
    free(w)
}

/// The operator described by `config` at refinement `level`.
///
/// # Safety
/// `config` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_operator_new(config: *const BcfracConfig, level: usize, out: *mut *mut BcfracOperator) -> BcfracStatus {
    guard(|| handle(BcfracOperator(deref(config, "config")?.0.operator(level)?), out, "out"))
}

/// # Safety
/// `op` must come from [`bcfrac_operator_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_operator_free(op: *mut BcfracOperator) {
    free(op)
}

/// Trace integral `I F(Z, W)`.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_trace_integral(
    op: *const BcfracOperator,
    f: *const BcfracFunction,
    w: BcfracBicomplex,
    s: BcfracSide,
    z: BcfracBicomplex,
    out: *mut BcfracBicomplex,
) -> BcfracStatus {
    guard(|| {
        let v = deref(op, "op")?.0.trace_integral(&deref(f, "f")?.0, bc(w), side(s), bc(z))?;
        write(out, cb(v), "out")
    })
}

/// Trace derivative `D F(Z, W)`.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_trace_derivative(
    op: *const BcfracOperator,
    f: *const BcfracFunction,
    w: BcfracBicomplex,
    s: BcfracSide,
    z: BcfracBicomplex,
    out: *mut BcfracBicomplex,
) -> BcfracStatus {
    guard(|| {
        let v = deref(op, "op")?.0.trace_derivative(&deref(f, "f")?.0, bc(w), side(s), bc(z))?;
        write(out, cb(v), "out")
    })
}

/// The proportional fractional weighted Cauchy-Riemann operator applied to
/// `F` at `Z`.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_frac_cr_apply(
    op: *const BcfracOperator,
    f: *const BcfracFunction,
    weights: *const BcfracWeights,
    w: BcfracBicomplex,
    s: BcfracSide,
    z: BcfracBicomplex,
    out: *mut BcfracBicomplex,
) -> BcfracStatus {
    guard(|| {
        let op = &deref(op, "op")?.0;
        let v = op.frac_cr_apply(&deref(f, "f")?.0, bc(w), &deref(weights, "weights")?.0, side(s), bc(z))?;
        write(out, cb(v), "out")
    })
}

/// Runs every identity of `config`. Writes CSV reports and `summary.toml`
/// into `out_dir` unless it is null, and stores whether all identities
/// passed in `passed`.
///
/// # Safety
/// `config` must be a live handle; `out_dir` must be null or a NUL-terminated
/// string; `passed` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bcfrac_run_suite(config: *const BcfracConfig, out_dir: *const c_char, passed: *mut bool) -> BcfracStatus {
    guard(|| {
        let cfg = &deref(config, "config")?.0;
        let summary = runner::run_suite(cfg, None)?;
        if !out_dir.is_null() {
            runner::emit_report(&summary, cfg.preset.as_deref(), Path::new(string(out_dir, "out_dir")?))?;
        }
        write(passed, summary.passed(), "passed")
    })
}
