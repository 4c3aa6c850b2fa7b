//! C ABI over the bellforge core: opaque expression handles, status codes,
//! and JSON strings for the structured payloads (catalog entries and proof
//! certificates), so any language with a C FFI can drive the toolkit.
//!
//! The matching header lives at `include/bellforge.h` and is maintained by
//! hand alongside this file.
//!
//! Conventions:
//! * Every function returns a [`BfStatus`]; results come back through `out`
//!   pointers that are written only on `Ok`.
//! * `BfExpr` handles come from the `bf_expr_*` constructors and must be
//!   released with [`bf_expr_free`].
//! * Returned strings are NUL-terminated, owned by the library, and must be
//!   released with [`bf_string_free`].

use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::{c_char, c_double};

use bellforge::catalog::{
    certificate_json_string, entry_json_string, parse_certificate_json, parse_entry_json,
    CatalogEntry,
};
use bellforge::expr::{rat, BellExpression, Form};
use bellforge::lhv::{is_valid_bellch, vertex_max, LhvError};
use bellforge::optimize::{maximize, Objective, OptimizerConfig};
use bellforge::proof::{default_depth, search, verify};
use num::ToPrimitive;

/// Status codes shared across the ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfStatus {
    BfOk = 0,
    BfNullArgument = 1,
    BfInvalidArgument = 2,
    BfParseError = 3,
    BfUnknownName = 4,
    BfLimitExceeded = 5,
    BfWrongForm = 6,
    BfSearchExhausted = 7,
    BfInternal = 8,
}

/// Opaque expression handle.
pub struct BfExpr(BellExpression);

fn guard<F: FnOnce() -> BfStatus>(f: F) -> BfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => BfStatus::BfInternal,
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, BfStatus> {
    if ptr.is_null() {
        return Err(BfStatus::BfNullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| BfStatus::BfParseError)
}

fn give_string(text: String, out: *mut *mut c_char) -> BfStatus {
    match CString::new(text) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            BfStatus::BfOk
        }
        Err(_) => BfStatus::BfInternal,
    }
}

/// Short description of a status code; static storage, do not free.
#[no_mangle]
pub extern "C" fn bf_status_name(status: BfStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        BfStatus::BfOk => b"ok\0",
        BfStatus::BfNullArgument => b"null argument\0",
        BfStatus::BfInvalidArgument => b"invalid argument\0",
        BfStatus::BfParseError => b"parse error\0",
        BfStatus::BfUnknownName => b"unknown name\0",
        BfStatus::BfLimitExceeded => b"size limit exceeded\0",
        BfStatus::BfWrongForm => b"wrong expression form\0",
        BfStatus::BfSearchExhausted => b"proof search exhausted\0",
        BfStatus::BfInternal => b"internal error\0",
    };
    name.as_ptr().cast()
}

/// Release a string returned by this library.
///
/// # Safety
/// `ptr` must be null or a string previously returned by this library,
/// released at most once.
#[no_mangle]
pub unsafe extern "C" fn bf_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        unsafe { drop(CString::from_raw(ptr)) };
    }
}

/// Build a built-in expression by catalog name
/// (`I2222`, `I3322_SYM`, `I5322`, `CH_PROB`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_expr_builtin(name: *const c_char, out: *mut *mut BfExpr) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return BfStatus::BfNullArgument;
        }
        let name = match unsafe { read_str(name) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match BellExpression::builtin_by_name(name) {
            Ok(expr) => {
                unsafe { *out = Box::into_raw(Box::new(BfExpr(expr))) };
                BfStatus::BfOk
            }
            Err(_) => BfStatus::BfUnknownName,
        }
    })
}

/// Build the k-settings chain inequality (k >= 2).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_expr_gen_ikk(k: u32, out: *mut *mut BfExpr) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return BfStatus::BfNullArgument;
        }
        match BellExpression::gen_ikk(k as usize) {
            Ok(expr) => {
                unsafe { *out = Box::into_raw(Box::new(BfExpr(expr))) };
                BfStatus::BfOk
            }
            Err(_) => BfStatus::BfInvalidArgument,
        }
    })
}

/// Parse one catalog-entry JSON object into an expression handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_expr_from_catalog_json(
    json: *const c_char,
    out: *mut *mut BfExpr,
) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return BfStatus::BfNullArgument;
        }
        let text = match unsafe { read_str(json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match parse_entry_json(text) {
            Ok(entry) => {
                unsafe { *out = Box::into_raw(Box::new(BfExpr(entry.expr))) };
                BfStatus::BfOk
            }
            Err(_) => BfStatus::BfParseError,
        }
    })
}

/// Render the expression as a catalog-entry JSON object with the given
/// name. Free the result with [`bf_string_free`].
///
/// # Safety
/// `expr` must be a live handle; `name` a NUL-terminated string; `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_expr_catalog_json(
    expr: *const BfExpr,
    name: *const c_char,
    out: *mut *mut c_char,
) -> BfStatus {
    guard(|| {
        if expr.is_null() || out.is_null() {
            return BfStatus::BfNullArgument;
        }
        let name = match unsafe { read_str(name) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let entry = CatalogEntry {
            name: name.to_string(),
            expr: unsafe { &*expr }.0.clone(),
            provenance: String::new(),
        };
        give_string(entry_json_string(&entry), out)
    })
}

/// Clone an expression handle.
///
/// # Safety
/// `expr` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_expr_clone(expr: *const BfExpr, out: *mut *mut BfExpr) -> BfStatus {
    guard(|| {
        if expr.is_null() || out.is_null() {
            return BfStatus::BfNullArgument;
        }
        let clone = unsafe { &*expr }.0.clone();
        unsafe { *out = Box::into_raw(Box::new(BfExpr(clone))) };
        BfStatus::BfOk
    })
}

/// Release an expression handle.
///
/// # Safety
/// `expr` must be null or a handle previously returned by this library,
/// released at most once.
#[no_mangle]
pub unsafe extern "C" fn bf_expr_free(expr: *mut BfExpr) {
    if !expr.is_null() {
        unsafe { drop(Box::from_raw(expr)) };
    }
}

/// Setting counts of the expression.
///
/// # Safety
/// `expr` must be a live handle; `m`, `n` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bf_expr_dims(expr: *const BfExpr, m: *mut u32, n: *mut u32) -> BfStatus {
    guard(|| {
        if expr.is_null() || m.is_null() || n.is_null() {
            return BfStatus::BfNullArgument;
        }
        let e = &unsafe { &*expr }.0;
        unsafe {
            *m = e.m() as u32;
            *n = e.n() as u32;
        }
        BfStatus::BfOk
    })
}

/// Exact local bound at unit bounds, rounded to double.
///
/// # Safety
/// `expr` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_vertex_max(expr: *const BfExpr, out: *mut c_double) -> BfStatus {
    guard(|| {
        if expr.is_null() || out.is_null() {
            return BfStatus::BfNullArgument;
        }
        let e = &unsafe { &*expr }.0;
        let algebraic = match e.form() {
            Form::Algebraic => e.clone(),
            Form::Probability => match e.to_algebraic_form() {
                Ok(a) => a,
                Err(_) => return BfStatus::BfWrongForm,
            },
        };
        match vertex_max(&algebraic, &rat(1), &rat(1)) {
            Ok((v, _)) => {
                unsafe { *out = v.to_f64().unwrap_or(f64::NAN) };
                BfStatus::BfOk
            }
            Err(LhvError::EnumerationGuard { .. }) => BfStatus::BfLimitExceeded,
            Err(_) => BfStatus::BfInternal,
        }
    })
}

/// Whether the expression is a valid inequality (local bound <= 0).
///
/// # Safety
/// `expr` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_is_valid_bellch(expr: *const BfExpr, out: *mut bool) -> BfStatus {
    guard(|| {
        if expr.is_null() || out.is_null() {
            return BfStatus::BfNullArgument;
        }
        let e = &unsafe { &*expr }.0;
        let algebraic = match e.form() {
            Form::Algebraic => e.clone(),
            Form::Probability => match e.to_algebraic_form() {
                Ok(a) => a,
                Err(_) => return BfStatus::BfWrongForm,
            },
        };
        match is_valid_bellch(&algebraic) {
            Ok(v) => {
                unsafe { *out = v };
                BfStatus::BfOk
            }
            Err(LhvError::EnumerationGuard { .. }) => BfStatus::BfLimitExceeded,
            Err(_) => BfStatus::BfInternal,
        }
    })
}

/// Search for a decomposition proof; on success the certificate JSON is
/// returned through `out` (free with [`bf_string_free`]). `max_depth = 0`
/// uses the default depth `m + n`.
///
/// # Safety
/// `expr` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_prove(
    expr: *const BfExpr,
    max_depth: u32,
    out: *mut *mut c_char,
) -> BfStatus {
    guard(|| {
        if expr.is_null() || out.is_null() {
            return BfStatus::BfNullArgument;
        }
        let e = &unsafe { &*expr }.0;
        let algebraic = match e.form() {
            Form::Algebraic => e.clone(),
            Form::Probability => match e.to_algebraic_form() {
                Ok(a) => a,
                Err(_) => return BfStatus::BfWrongForm,
            },
        };
        let depth = if max_depth == 0 {
            default_depth(&algebraic)
        } else {
            max_depth as usize
        };
        match search(&algebraic, depth) {
            Ok(Some(cert)) => give_string(certificate_json_string(&cert), out),
            Ok(None) => BfStatus::BfSearchExhausted,
            Err(_) => BfStatus::BfInternal,
        }
    })
}

/// Check a certificate (JSON) against the expression. `accepted` reports
/// the verdict; the status is `Ok` whenever the check itself ran.
///
/// # Safety
/// `expr` must be a live handle; `cert_json` a NUL-terminated string;
/// `accepted` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bf_verify_certificate(
    expr: *const BfExpr,
    cert_json: *const c_char,
    accepted: *mut bool,
) -> BfStatus {
    guard(|| {
        if expr.is_null() || accepted.is_null() {
            return BfStatus::BfNullArgument;
        }
        let text = match unsafe { read_str(cert_json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let e = &unsafe { &*expr }.0;
        let algebraic = match e.form() {
            Form::Algebraic => e.clone(),
            Form::Probability => match e.to_algebraic_form() {
                Ok(a) => a,
                Err(_) => return BfStatus::BfWrongForm,
            },
        };
        let cert = match parse_certificate_json(text, algebraic.m(), algebraic.n()) {
            Ok(c) => c,
            Err(_) => return BfStatus::BfParseError,
        };
        unsafe { *accepted = verify(&algebraic, &cert).is_ok() };
        BfStatus::BfOk
    })
}

/// Maximize the quantum violation of the expression (converted to
/// probability form if needed). Writes the best value, the state angle over
/// pi, and the critical noise weight (NaN when the optimum does not
/// violate). Deterministic in `seed`.
///
/// # Safety
/// `expr` must be a live handle; the three out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bf_maximize(
    expr: *const BfExpr,
    restarts: u32,
    seed: u64,
    out_q: *mut c_double,
    out_theta_over_pi: *mut c_double,
    out_lambda_max: *mut c_double,
) -> BfStatus {
    guard(|| {
        if expr.is_null()
            || out_q.is_null()
            || out_theta_over_pi.is_null()
            || out_lambda_max.is_null()
        {
            return BfStatus::BfNullArgument;
        }
        if restarts == 0 {
            return BfStatus::BfInvalidArgument;
        }
        let e = &unsafe { &*expr }.0;
        let prob = match e.form() {
            Form::Probability => e.clone(),
            Form::Algebraic => match e.to_probability_form() {
                Ok(p) => p,
                Err(_) => return BfStatus::BfWrongForm,
            },
        };
        let (m, n) = (prob.m(), prob.n());
        let config = OptimizerConfig {
            restarts: restarts as usize,
            seed,
            ..OptimizerConfig::default()
        };
        match maximize(&Objective::Standard(prob), m, n, &config) {
            Ok(r) => {
                unsafe {
                    *out_q = r.q;
                    *out_theta_over_pi = r.theta_max / std::f64::consts::PI;
                    *out_lambda_max = r.lambda_max.unwrap_or(f64::NAN);
                }
                BfStatus::BfOk
            }
            Err(_) => BfStatus::BfInternal,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn builtin(name: &str) -> *mut BfExpr {
        let mut handle: *mut BfExpr = ptr::null_mut();
        let status = unsafe { bf_expr_builtin(cstr(name).as_ptr(), &mut handle) };
        assert_eq!(status, BfStatus::BfOk);
        assert!(!handle.is_null());
        handle
    }

    #[test]
    fn builtin_dims_and_vertex_max() {
        unsafe {
            let e = builtin("I5322");
            let (mut m, mut n) = (0u32, 0u32);
            assert_eq!(bf_expr_dims(e, &mut m, &mut n), BfStatus::BfOk);
            assert_eq!((m, n), (5, 3));
            let mut vmax = f64::NAN;
            assert_eq!(bf_vertex_max(e, &mut vmax), BfStatus::BfOk);
            assert_eq!(vmax, 0.0);
            let mut valid = false;
            assert_eq!(bf_is_valid_bellch(e, &mut valid), BfStatus::BfOk);
            assert!(valid);
            bf_expr_free(e);
        }
    }

    #[test]
    fn unknown_names_and_null_arguments() {
        unsafe {
            let mut handle: *mut BfExpr = ptr::null_mut();
            assert_eq!(
                bf_expr_builtin(cstr("I9999").as_ptr(), &mut handle),
                BfStatus::BfUnknownName
            );
            assert_eq!(
                bf_expr_builtin(ptr::null(), &mut handle),
                BfStatus::BfNullArgument
            );
            assert_eq!(
                bf_expr_dims(ptr::null(), &mut 0, &mut 0),
                BfStatus::BfNullArgument
            );
            let name = CStr::from_ptr(bf_status_name(BfStatus::BfUnknownName));
            assert_eq!(name.to_str().unwrap(), "unknown name");
        }
    }

    #[test]
    fn gen_ikk_and_catalog_json_round_trip() {
        unsafe {
            let mut e: *mut BfExpr = ptr::null_mut();
            assert_eq!(bf_expr_gen_ikk(3, &mut e), BfStatus::BfOk);
            let mut json: *mut c_char = ptr::null_mut();
            assert_eq!(
                bf_expr_catalog_json(e, cstr("I33").as_ptr(), &mut json),
                BfStatus::BfOk
            );
            let text = CStr::from_ptr(json).to_str().unwrap().to_string();
            assert!(text.contains("\"I33\""));

            let mut back: *mut BfExpr = ptr::null_mut();
            assert_eq!(
                bf_expr_from_catalog_json(cstr(&text).as_ptr(), &mut back),
                BfStatus::BfOk
            );
            let (mut m, mut n) = (0u32, 0u32);
            assert_eq!(bf_expr_dims(back, &mut m, &mut n), BfStatus::BfOk);
            assert_eq!((m, n), (3, 3));

            bf_string_free(json);
            bf_expr_free(e);
            bf_expr_free(back);

            let mut bad: *mut BfExpr = ptr::null_mut();
            assert_eq!(bf_expr_gen_ikk(1, &mut bad), BfStatus::BfInvalidArgument);
            assert_eq!(
                bf_expr_from_catalog_json(cstr("{not json").as_ptr(), &mut bad),
                BfStatus::BfParseError
            );
        }
    }

    #[test]
    fn prove_and_verify_round_trip_over_the_abi() {
        unsafe {
            let e = builtin("I2222");
            let mut cert: *mut c_char = ptr::null_mut();
            assert_eq!(bf_prove(e, 0, &mut cert), BfStatus::BfOk);
            let text = CStr::from_ptr(cert).to_str().unwrap().to_string();
            assert!(text.contains("split"));

            let mut accepted = false;
            assert_eq!(
                bf_verify_certificate(e, cstr(&text).as_ptr(), &mut accepted),
                BfStatus::BfOk
            );
            assert!(accepted);

            // Tampered certificate is rejected but the call still succeeds.
            let tampered = text.replacen("\"coeff\": \"1\"", "\"coeff\": \"3\"", 1);
            assert_eq!(
                bf_verify_certificate(e, cstr(&tampered).as_ptr(), &mut accepted),
                BfStatus::BfOk
            );
            assert!(!accepted);
            bf_string_free(cert);

            // The sign-flipped invalid variant exhausts the search.
            let flipped = parse_entry_json(
                r#"{"name":"flipped","m":2,"n":2,"joint":[["1","1"],["1","1"]],
                    "marg_x":["-1","0"],"marg_y":["-1","0"],"const":"0","form":"algebraic"}"#,
            )
            .unwrap();
            let handle = Box::into_raw(Box::new(BfExpr(flipped.expr)));
            let mut cert2: *mut c_char = ptr::null_mut();
            assert_eq!(bf_prove(handle, 0, &mut cert2), BfStatus::BfSearchExhausted);
            bf_expr_free(handle);
            bf_expr_free(e);
        }
    }

    #[test]
    fn maximize_over_the_abi_matches_published_values() {
        unsafe {
            let e = builtin("I3322_SYM");
            let (mut q, mut theta, mut lambda) = (0.0, 0.0, 0.0);
            assert_eq!(
                bf_maximize(e, 32, 2024, &mut q, &mut theta, &mut lambda),
                BfStatus::BfOk
            );
            assert!((q - 0.25).abs() < 1e-3, "q = {q}");
            assert!((theta - 0.25).abs() < 1e-2);
            assert!((lambda - 0.8).abs() < 1e-3);
            assert_eq!(
                bf_maximize(e, 0, 1, &mut q, &mut theta, &mut lambda),
                BfStatus::BfInvalidArgument
            );
            bf_expr_free(e);
        }
    }
}
