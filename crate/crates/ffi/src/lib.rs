//! C ABI over `wts-core`.
//!
//! Objects are opaque heap handles created by `*_new` and released by the
//! matching `*_free`. Every fallible call returns a [`WtsStatus`]; on failure
//! [`wts_last_error_message`] describes the error for the calling thread.
//! Strings returned through `out` pointers are owned by the caller and must be
//! released with [`wts_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use wts_core::classify::classify;
use wts_core::l2grid::StepFunction;
use wts_core::model::{kernel_eval, DiagonalKernel, SeriesOptions};
use wts_core::semigroup::{OperatorHandle, OperatorKind};
use wts_core::spectral::summarize;
use wts_core::symbol::Symbol;
use wts_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Syntax = 3,
    UnknownIdentifier = 4,
    NonPositiveSymbol = 5,
    NotLeftInvertible = 6,
    OutsideConvergenceDomain = 7,
    TailBoundNotAchieved = 8,
    NoClosedForm = 9,
    OrderTooLarge = 10,
    InvalidStepFunction = 11,
    Format = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtsOperatorKind {
    /// S_t
    S = 0,
    /// S_t*
    SAdjoint = 1,
    /// Cauchy dual S_t (S_t* S_t)^{-1}
    SDual = 2,
    /// Left inverse L_t
    L = 3,
    /// L_t*
    LAdjoint = 4,
}

impl From<WtsOperatorKind> for OperatorKind {
    fn from(k: WtsOperatorKind) -> OperatorKind {
        match k {
            WtsOperatorKind::S => OperatorKind::S,
            WtsOperatorKind::SAdjoint => OperatorKind::SAdjoint,
            WtsOperatorKind::SDual => OperatorKind::SDual,
            WtsOperatorKind::L => OperatorKind::L,
            WtsOperatorKind::LAdjoint => OperatorKind::LAdjoint,
        }
    }
}

/// A validated symbol φ.
pub struct WtsSymbol(Symbol);

/// One of the five operators for a fixed symbol and step.
pub struct WtsOperator(OperatorHandle);

/// A compactly supported step function.
pub struct WtsStepFunction(StepFunction);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> WtsStatus {
    match e {
        Error::Syntax { .. } => WtsStatus::Syntax,
        Error::UnknownIdentifier { .. } => WtsStatus::UnknownIdentifier,
        Error::NonPositiveSymbol { .. } => WtsStatus::NonPositiveSymbol,
        Error::NotLeftInvertible { .. } => WtsStatus::NotLeftInvertible,
        Error::OutsideConvergenceDomain { .. } => WtsStatus::OutsideConvergenceDomain,
        Error::TailBoundNotAchieved { .. } => WtsStatus::TailBoundNotAchieved,
        Error::NoClosedForm => WtsStatus::NoClosedForm,
        Error::OrderTooLarge { .. } => WtsStatus::OrderTooLarge,
        Error::InvalidStepFunction(_) => WtsStatus::InvalidStepFunction,
        Error::InvalidArgument(_) => WtsStatus::InvalidArgument,
        Error::Format(_) => WtsStatus::Format,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail::Core(e)
    }
}

/// Runs `body`, translating errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> WtsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            WtsStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            WtsStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            WtsStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, what: &'static str, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Core(Error::InvalidArgument(format!("{what} is not UTF-8"))))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|e| Error::Format(e.to_string()))?;
    put(out, "out", c.into_raw())
}

fn json_error(e: serde_json::Error) -> Fail {
    Fail::Core(Error::Format(e.to_string()))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn wts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a symbol spec (`const:2`, `affine`, `exp:a=2`, `expr:1+x^2`, ...)
/// and validates it on `[0, x_max]`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wts_symbol_new(spec: *const c_char, x_max: f64, out: *mut *mut WtsSymbol) -> WtsStatus {
    guard(|| {
        let s = Symbol::from_spec(text(spec, "spec")?, x_max)?;
        put(out, "out", Box::into_raw(Box::new(WtsSymbol(s))))
    })
}

/// φ(x).
///
/// # Safety
/// `symbol` must come from [`wts_symbol_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wts_symbol_eval(symbol: *const WtsSymbol, x: f64, out: *mut f64) -> WtsStatus {
    guard(|| put(out, "out", get(symbol, "symbol")?.0.eval(x)?))
}

/// # Safety
/// `symbol` must come from [`wts_symbol_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn wts_symbol_free(symbol: *mut WtsSymbol) {
    if !symbol.is_null() {
        drop(Box::from_raw(symbol));
    }
}

/// Step function with `cells` cells: `breakpoints` holds `cells + 1`
/// increasing values, `re` and `im` hold `cells` values each.
///
/// # Safety
/// The arrays must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn wts_step_function_new(
    breakpoints: *const f64,
    re: *const f64,
    im: *const f64,
    cells: usize,
    out: *mut *mut WtsStepFunction,
) -> WtsStatus {
    guard(|| {
        if breakpoints.is_null() || re.is_null() || im.is_null() {
            return Err(Fail::Null("breakpoints/re/im"));
        }
        let b = std::slice::from_raw_parts(breakpoints, cells + 1).to_vec();
        let re = std::slice::from_raw_parts(re, cells);
        let im = std::slice::from_raw_parts(im, cells);
        let values = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let f = StepFunction::new(b, values)?;
        put(out, "out", Box::into_raw(Box::new(WtsStepFunction(f))))
    })
}

/// Number of cells.
///
/// # Safety
/// `f` must be a live step function handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wts_step_function_cells(f: *const WtsStepFunction, out: *mut usize) -> WtsStatus {
    guard(|| put(out, "out", get(f, "f")?.0.len()))
}

/// Copies breakpoints (`capacity + 1` slots) and values (`capacity` slots
/// each). Fails with `InvalidArgument` if the function has more cells than
/// `capacity`.
///
/// # Safety
/// The output arrays must be writable for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn wts_step_function_copy(
    f: *const WtsStepFunction,
    breakpoints: *mut f64,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
) -> WtsStatus {
    guard(|| {
        let f = &get(f, "f")?.0;
        if breakpoints.is_null() || re.is_null() || im.is_null() {
            return Err(Fail::Null("breakpoints/re/im"));
        }
        if f.len() > capacity {
            return Err(Error::InvalidArgument(format!("{} cells do not fit in {capacity}", f.len())).into());
        }
        let bp = f.breakpoints();
        ptr::copy_nonoverlapping(bp.as_ptr(), breakpoints, bp.len());
        for (i, v) in f.values().iter().enumerate() {
            *re.add(i) = v.re;
            *im.add(i) = v.im;
        }
        Ok(())
    })
}

/// L² norm.
///
/// # Safety
/// `f` must be a live step function handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wts_step_function_norm(f: *const WtsStepFunction, out: *mut f64) -> WtsStatus {
    guard(|| put(out, "out", get(f, "f")?.0.norm()))
}

/// # Safety
/// `f` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn wts_step_function_free(f: *mut WtsStepFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Operator of the given kind for step `t`; the symbol is copied.
///
/// # Safety
/// `symbol` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wts_operator_new(
    symbol: *const WtsSymbol,
    t: f64,
    kind: WtsOperatorKind,
    x_max: f64,
    out: *mut *mut WtsOperator,
) -> WtsStatus {
    guard(|| {
        let op = OperatorHandle::new(get(symbol, "symbol")?.0.clone(), t, kind.into(), x_max)?;
        put(out, "out", Box::into_raw(Box::new(WtsOperator(op))))
    })
}

/// Applies the `power`-th power of the operator to `f`.
///
/// # Safety
/// Handles must be live; `out` must be writable. The result is a new handle.
#[no_mangle]
pub unsafe extern "C" fn wts_operator_apply(
    op: *const WtsOperator,
    power: usize,
    f: *const WtsStepFunction,
    out: *mut *mut WtsStepFunction,
) -> WtsStatus {
    guard(|| {
        let g = get(op, "op")?.0.apply_power(power, &get(f, "f")?.0)?;
        put(out, "out", Box::into_raw(Box::new(WtsStepFunction(g))))
    })
}

/// ‖T^n‖ over the operator's window.
///
/// # Safety
/// `op` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wts_operator_norm(op: *const WtsOperator, n: usize, out: *mut f64) -> WtsStatus {
    guard(|| put(out, "out", get(op, "op")?.0.operator_norm(n)?.value))
}

/// # Safety
/// `op` must come from [`wts_operator_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn wts_operator_free(op: *mut WtsOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Diagonal kernel k(z, λ)(x) at a point x of [0, t), summed to `tol`.
///
/// # Safety
/// `symbol` must be live; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wts_kernel_eval(
    symbol: *const WtsSymbol,
    t: f64,
    x_max: f64,
    z_re: f64,
    z_im: f64,
    lambda_re: f64,
    lambda_im: f64,
    x: f64,
    tol: f64,
    re: *mut f64,
    im: *mut f64,
) -> WtsStatus {
    guard(|| {
        let k = DiagonalKernel::new(get(symbol, "symbol")?.0.clone(), t, x_max)?;
        let opts = SeriesOptions { tol, ..SeriesOptions::default() };
        let v = kernel_eval(&k, Complex64::new(z_re, z_im), Complex64::new(lambda_re, lambda_im), x, &opts)?;
        put(re, "re", v.re)?;
        put(im, "im", v.im)
    })
}

/// Classification report as a JSON string.
///
/// # Safety
/// `symbol` must be live; `out` must be writable. Free the string with
/// [`wts_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wts_classify_json(
    symbol: *const WtsSymbol,
    t: f64,
    order: usize,
    x_max: f64,
    tol_class: f64,
    out: *mut *mut c_char,
) -> WtsStatus {
    guard(|| {
        let r = classify(&get(symbol, "symbol")?.0, t, order, x_max, tol_class)?;
        put_string(out, serde_json::to_string(&r).map_err(json_error)?)
    })
}

/// Spectral summary as a JSON string.
///
/// # Safety
/// `symbol` must be live; `out` must be writable. Free the string with
/// [`wts_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wts_spectrum_json(
    symbol: *const WtsSymbol,
    t: f64,
    x_max: f64,
    n_max: usize,
    out: *mut *mut c_char,
) -> WtsStatus {
    guard(|| {
        let r = summarize(&get(symbol, "symbol")?.0, t, x_max, n_max)?;
        put_string(out, serde_json::to_string(&r).map_err(json_error)?)
    })
}

/// # Safety
/// `s` must be a string returned by this library or null.
#[no_mangle]
pub unsafe extern "C" fn wts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
