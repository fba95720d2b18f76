//! C ABI for the shadowlab library: opaque metric handles, status codes, and
//! string results for exact distances and the counterexample pipeline.
//!
//! Every function returns a `shadowlab_status`; on any non-OK status the
//! thread-local message from `shadowlab_last_error` describes the failure.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with `shadowlab_string_free`.

// The C-facing names use C naming conventions on purpose.
#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::sync::Arc;

use shadowlab::counterexample::{
    build_counterexample, certify_no_shadowing, default_candidate_family,
    empirical_cross_check, verify_certificate,
};
use shadowlab::enumeration::{BadEnumeration, BlockEnumeration, DEFAULT_STAGE_CEILING};
use shadowlab::metrics::{metric_from_spec, parse_rational, rational_to_string, Metric, Rank};
use shadowlab::words::parse_point;
use shadowlab::Error;

/// Status codes returned by every shadowlab function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum shadowlab_status {
    SHADOWLAB_OK = 0,
    SHADOWLAB_ERR_NULL_ARGUMENT = 1,
    SHADOWLAB_ERR_UTF8 = 2,
    SHADOWLAB_ERR_PARSE = 3,
    SHADOWLAB_ERR_INVALID = 4,
    SHADOWLAB_ERR_RESOURCE = 5,
}

use shadowlab_status::*;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes removed");
    });
}

fn status_of(err: &Error) -> shadowlab_status {
    match err {
        Error::Parse { .. } => SHADOWLAB_ERR_PARSE,
        Error::Resource(_) => SHADOWLAB_ERR_RESOURCE,
        _ => SHADOWLAB_ERR_INVALID,
    }
}

fn fail(err: &Error) -> shadowlab_status {
    set_error(&err.to_string());
    status_of(err)
}

/// # Safety
/// `text` must be a valid NUL-terminated string or NULL.
unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, shadowlab_status> {
    if text.is_null() {
        set_error("argument is NULL");
        return Err(SHADOWLAB_ERR_NULL_ARGUMENT);
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        SHADOWLAB_ERR_UTF8
    })
}

fn give_string(text: String, out: *mut *mut c_char) -> shadowlab_status {
    let sanitized = text.replace('\0', " ");
    let cstring = CString::new(sanitized).expect("NUL bytes removed");
    unsafe { *out = cstring.into_raw() };
    SHADOWLAB_OK
}

/// Message describing the most recent error on this thread. The pointer is
/// valid until the next shadowlab call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn shadowlab_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `text` must have been returned by a shadowlab function and not freed yet.
#[no_mangle]
pub unsafe extern "C" fn shadowlab_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// An exact metric on the shift space (opaque).
pub struct shadowlab_metric {
    inner: Metric,
}

/// Creates a metric from a spec: "prod", "rate:dyadic", "rate:harmonic",
/// "otw:block", or "otw:bad". On success `*out` owns the handle; release it
/// with `shadowlab_metric_free`.
///
/// # Safety
/// `spec` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shadowlab_metric_new(
    spec: *const c_char,
    out: *mut *mut shadowlab_metric,
) -> shadowlab_status {
    if out.is_null() {
        set_error("out-parameter is NULL");
        return SHADOWLAB_ERR_NULL_ARGUMENT;
    }
    let spec = match read_str(spec) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match metric_from_spec(spec, DEFAULT_STAGE_CEILING) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(shadowlab_metric { inner }));
            SHADOWLAB_OK
        }
        Err(e) => fail(&e),
    }
}

/// Releases a metric handle.
///
/// # Safety
/// `metric` must be a handle from `shadowlab_metric_new`, not freed yet.
#[no_mangle]
pub unsafe extern "C" fn shadowlab_metric_free(metric: *mut shadowlab_metric) {
    if !metric.is_null() {
        drop(Box::from_raw(metric));
    }
}

/// Exact distance between two point literals. On success, `*is_infinite_rank`
/// is 1 with `*rank` = 0 for equal points, otherwise 0 with `*rank` the
/// distance rank; `*value` receives the exact rational value as a string.
///
/// # Safety
/// All pointers must be valid; `x` and `y` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn shadowlab_distance(
    metric: *const shadowlab_metric,
    x: *const c_char,
    y: *const c_char,
    is_infinite_rank: *mut c_int,
    rank: *mut u64,
    value: *mut *mut c_char,
) -> shadowlab_status {
    if metric.is_null() || is_infinite_rank.is_null() || rank.is_null() || value.is_null() {
        set_error("argument is NULL");
        return SHADOWLAB_ERR_NULL_ARGUMENT;
    }
    let (x, y) = match (read_str(x), read_str(y)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let metric = &(*metric).inner;
    let run = || -> shadowlab::Result<(Rank, String)> {
        let px = parse_point(x)?;
        let py = parse_point(y)?;
        let d = metric.distance(&px, &py)?;
        let v = rational_to_string(&metric.value_of_rank(d.rank)?);
        Ok((d.rank, v))
    };
    match run() {
        Ok((r, v)) => {
            match r {
                Rank::Infinite => {
                    *is_infinite_rank = 1;
                    *rank = 0;
                }
                Rank::Finite(n) => {
                    *is_infinite_rank = 0;
                    *rank = n;
                }
            }
            give_string(v, value)
        }
        Err(e) => fail(&e),
    }
}

/// Runs the full counterexample pipeline (build, certify, verify,
/// cross-check) for the given exact L and delta0 literals and returns the
/// result as a JSON document in `*out_json`. `*accepted` is 1 iff the
/// certificate was verified and every sampled candidate exceeded L * delta.
///
/// # Safety
/// All pointers must be valid; `l` and `delta0` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn shadowlab_counterexample(
    l: *const c_char,
    delta0: *const c_char,
    accepted: *mut c_int,
    out_json: *mut *mut c_char,
) -> shadowlab_status {
    if accepted.is_null() || out_json.is_null() {
        set_error("argument is NULL");
        return SHADOWLAB_ERR_NULL_ARGUMENT;
    }
    let (l, delta0) = match (read_str(l), read_str(delta0)) {
        (Ok(l), Ok(d)) => (l, d),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let run = || -> shadowlab::Result<(bool, String)> {
        let l = parse_rational(l)?;
        let delta0 = parse_rational(delta0)?;
        let enumeration = Arc::new(BadEnumeration::new(
            Arc::new(BlockEnumeration::default()),
            DEFAULT_STAGE_CEILING,
        ));
        let inst = build_counterexample(enumeration, &l, &delta0)?;
        let cert = certify_no_shadowing(&inst)?;
        let verdict = verify_certificate(&inst, &cert)?;
        let cross = empirical_cross_check(&inst, &default_candidate_family(&inst.stage))?;
        let ok = verdict.accepted && cross.all_exceed && !cross.vacuous;
        let json = serde_json::json!({
            "n": inst.n,
            "cutoff": inst.stage.cutoff,
            "delta": rational_to_string(&inst.delta),
            "w": inst.w.to_string(),
            "certificate": cert,
            "verdict": verdict,
            "cross_check": cross,
        });
        Ok((ok, json.to_string()))
    };
    match run() {
        Ok((ok, json)) => {
            *accepted = if ok { 1 } else { 0 };
            give_string(json, out_json)
        }
        Err(e) => fail(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn c(text: &str) -> CString {
        CString::new(text).unwrap()
    }

    #[test]
    fn distance_round_trip_through_the_c_abi() {
        unsafe {
            let mut metric: *mut shadowlab_metric = ptr::null_mut();
            let status = shadowlab_metric_new(c("otw:block").as_ptr(), &mut metric);
            assert!(status == SHADOWLAB_OK);

            let (mut inf, mut rank, mut value) = (-1, u64::MAX, ptr::null_mut());
            let status = shadowlab_distance(
                metric,
                c("(1)").as_ptr(),
                c("(2)").as_ptr(),
                &mut inf,
                &mut rank,
                &mut value,
            );
            assert!(status == SHADOWLAB_OK);
            assert_eq!((inf, rank), (0, 2));
            assert_eq!(CStr::from_ptr(value).to_str().unwrap(), "2^-2");
            shadowlab_string_free(value);

            let mut value = ptr::null_mut();
            let status = shadowlab_distance(
                metric,
                c("(7)").as_ptr(),
                c("(7)").as_ptr(),
                &mut inf,
                &mut rank,
                &mut value,
            );
            assert!(status == SHADOWLAB_OK);
            assert_eq!((inf, rank), (1, 0));
            assert_eq!(CStr::from_ptr(value).to_str().unwrap(), "0");
            shadowlab_string_free(value);
            shadowlab_metric_free(metric);
        }
    }

    #[test]
    fn errors_surface_with_status_and_message() {
        unsafe {
            let mut metric: *mut shadowlab_metric = ptr::null_mut();
            let status = shadowlab_metric_new(c("otw:bogus").as_ptr(), &mut metric);
            assert!(status == SHADOWLAB_ERR_INVALID);
            let message = CStr::from_ptr(shadowlab_last_error()).to_str().unwrap();
            assert!(message.contains("unknown metric"));

            assert!(shadowlab_metric_new(ptr::null(), &mut metric) == SHADOWLAB_ERR_NULL_ARGUMENT);

            let status = shadowlab_metric_new(c("prod").as_ptr(), &mut metric);
            assert!(status == SHADOWLAB_OK);
            let (mut inf, mut rank, mut value) = (0, 0, ptr::null_mut());
            let status = shadowlab_distance(
                metric,
                c("0.1").as_ptr(),
                c("(1)").as_ptr(),
                &mut inf,
                &mut rank,
                &mut value,
            );
            assert!(status == SHADOWLAB_ERR_PARSE);
            shadowlab_metric_free(metric);
        }
    }

    #[test]
    fn counterexample_through_the_c_abi() {
        unsafe {
            let (mut accepted, mut json) = (0, ptr::null_mut());
            let status = shadowlab_counterexample(
                c("2").as_ptr(),
                c("1").as_ptr(),
                &mut accepted,
                &mut json,
            );
            assert!(status == SHADOWLAB_OK);
            assert_eq!(accepted, 1);
            let text = CStr::from_ptr(json).to_str().unwrap();
            assert!(text.contains("\"w\":\"4.5.6\""));
            shadowlab_string_free(json);
        }
    }
}
