//! C ABI for `causalcap`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free`. Every fallible call returns a [`CcStatus`]; on
//! failure [`cc_last_error`] describes what went wrong on the calling thread.
//! Strings returned by the library are freed with [`cc_string_free`].
//! Operators, channels and decompositions use the same JSON forms as the
//! command-line tool.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use causalcap::capacity::{
    blahut_arimoto, erasure_classical_capacity, erasure_quantum_capacity, max_coherent_information, OptimizerConfig,
    StochasticMatrix,
};
use causalcap::channel::Channel;
use causalcap::operator::LabeledOperator;
use causalcap::process::{CausalDecomposition, ProcessMatrix};
use causalcap::reduction::{example_process, routing_channel, run_pipeline};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Json = 3,
    InvalidInput = 4,
    Panic = 5,
}

/// A labeled operator.
pub struct CcOperator(LabeledOperator);

/// A causal decomposition `p W_ab + (1 − p) W_ba`.
pub struct CcDecomposition(CausalDecomposition);

/// A channel in Choi form.
pub struct CcChannel(Channel);

/// The five process residuals; each is zero for a valid process.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CcValidity {
    pub positivity: f64,
    pub trace: f64,
    pub marginal_a: f64,
    pub marginal_b: f64,
    pub no_loops: f64,
}

/// Residuals of the erasure reduction.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CcPipelineReport {
    pub p: f64,
    pub bo_identity_residual: f64,
    pub reconstruction_residual: f64,
    pub erasure_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CcStatus, String);

impl From<causalcap::Error> for Failure {
    fn from(e: causalcap::Error) -> Self {
        let status = match e {
            causalcap::Error::Json(_) => CcStatus::Json,
            _ => CcStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(CcStatus::Json, format!("malformed JSON: {e}"))
    }
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CcStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(CcStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior nul").into_raw()
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by the library.
///
/// # Safety
/// `s` is null or came from this library and has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_operator_from_json(json: *const c_char, out_op: *mut *mut CcOperator) -> CcStatus {
    guard(|| {
        let op: LabeledOperator = serde_json::from_str(text(json, "json")?)?;
        *out(out_op, "out")? = boxed(CcOperator(op));
        Ok(())
    })
}

/// # Safety
/// `op` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_operator_to_json(op: *const CcOperator, out_json: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let op = deref(op, "op")?;
        *out(out_json, "out")? = c_string(serde_json::to_string(&op.0)?);
        Ok(())
    })
}

/// # Safety
/// `op` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_operator_free(op: *mut CcOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Total dimension of the operator's space.
///
/// # Safety
/// `op` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_operator_dim(op: *const CcOperator, out_dim: *mut usize) -> CcStatus {
    guard(|| {
        *out(out_dim, "out")? = deref(op, "op")?.0.dim();
        Ok(())
    })
}

/// Trace of the operator, real and imaginary parts.
///
/// # Safety
/// `op` is a live handle; `re` and `im` are writable.
#[no_mangle]
pub unsafe extern "C" fn cc_operator_trace(op: *const CcOperator, re: *mut f64, im: *mut f64) -> CcStatus {
    guard(|| {
        let t = deref(op, "op")?.0.trace();
        *out(re, "re")? = t.re;
        *out(im, "im")? = t.im;
        Ok(())
    })
}

/// Traces out `count` named subsystems.
///
/// # Safety
/// `op` is a live handle; `names` points to `count` nul-terminated strings;
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_operator_partial_trace(
    op: *const CcOperator,
    names: *const *const c_char,
    count: usize,
    out_op: *mut *mut CcOperator,
) -> CcStatus {
    guard(|| {
        let op = deref(op, "op")?;
        let mut over = Vec::with_capacity(count);
        if count > 0 {
            if names.is_null() {
                return Err(null("names"));
            }
            for k in 0..count {
                over.push(text(*names.add(k), "names[k]")?);
            }
        }
        *out(out_op, "out")? = boxed(CcOperator(op.0.partial_trace(&over)?));
        Ok(())
    })
}

/// Link product over the subsystems the operators share by name.
///
/// # Safety
/// `a` and `b` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_operator_link_product(
    a: *const CcOperator,
    b: *const CcOperator,
    out_op: *mut *mut CcOperator,
) -> CcStatus {
    guard(|| {
        let linked = deref(a, "a")?.0.link_product(&deref(b, "b")?.0)?;
        *out(out_op, "out")? = boxed(CcOperator(linked));
        Ok(())
    })
}

/// Residuals of a process given as JSON `{"dims": ..., "op": ...}`.
///
/// # Safety
/// `json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_process_validate_json(json: *const c_char, out_report: *mut CcValidity) -> CcStatus {
    guard(|| {
        let w: ProcessMatrix = serde_json::from_str(text(json, "json")?)?;
        let r = w.validate();
        *out(out_report, "out")? = CcValidity {
            positivity: r.positivity,
            trace: r.trace,
            marginal_a: r.marginal_a,
            marginal_b: r.marginal_b,
            no_loops: r.no_loops,
        };
        Ok(())
    })
}

/// The erasure-family example with mixing probability `p` and message
/// dimension `d`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_decomposition_example(p: f64, d: usize, out_dec: *mut *mut CcDecomposition) -> CcStatus {
    guard(|| {
        *out(out_dec, "out")? = boxed(CcDecomposition(example_process(p, d)?));
        Ok(())
    })
}

/// # Safety
/// `json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_decomposition_from_json(
    json: *const c_char,
    out_dec: *mut *mut CcDecomposition,
) -> CcStatus {
    guard(|| {
        let dec: CausalDecomposition = serde_json::from_str(text(json, "json")?)?;
        *out(out_dec, "out")? = boxed(CcDecomposition(dec));
        Ok(())
    })
}

/// # Safety
/// `dec` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_decomposition_free(dec: *mut CcDecomposition) {
    if !dec.is_null() {
        drop(Box::from_raw(dec));
    }
}

/// Runs the erasure reduction. `alice` may be null, in which case Alice
/// discards `A_I` and routes her ancilla `A_I'` into `A_O`.
///
/// # Safety
/// `dec` is a live handle; `alice` is null or a live handle; `out` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cc_decomposition_contract(
    dec: *const CcDecomposition,
    alice: *const CcChannel,
    tol: f64,
    out_report: *mut CcPipelineReport,
) -> CcStatus {
    guard(|| {
        let dec = &deref(dec, "dec")?.0;
        let dims = dec.dims();
        let default;
        let alice = match alice.as_ref() {
            Some(ch) => &ch.0,
            None => {
                default = routing_channel(dims.a_i, dims.a_o);
                &default
            }
        };
        let r = run_pipeline(dec, alice, tol)?.report;
        *out(out_report, "out")? = CcPipelineReport {
            p: r.p,
            bo_identity_residual: r.bo_identity_residual,
            reconstruction_residual: r.reconstruction_residual,
            erasure_residual: r.erasure_residual,
        };
        Ok(())
    })
}

/// Exchanges the parties; `p` becomes `1 − p`.
///
/// # Safety
/// `dec` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_decomposition_swap_roles(
    dec: *const CcDecomposition,
    out_dec: *mut *mut CcDecomposition,
) -> CcStatus {
    guard(|| {
        let swapped = deref(dec, "dec")?.0.swap_roles();
        *out(out_dec, "out")? = boxed(CcDecomposition(swapped));
        Ok(())
    })
}

/// # Safety
/// `json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_from_json(json: *const c_char, out_ch: *mut *mut CcChannel) -> CcStatus {
    guard(|| {
        let ch: Channel = serde_json::from_str(text(json, "json")?)?;
        *out(out_ch, "out")? = boxed(CcChannel(ch));
        Ok(())
    })
}

/// # Safety
/// `ch` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_free(ch: *mut CcChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Largest single-use coherent information found by a seeded multi-start
/// search.
///
/// # Safety
/// `ch` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_max_coherent_information(
    ch: *const CcChannel,
    restarts: usize,
    tol: f64,
    seed: u64,
    out_value: *mut f64,
) -> CcStatus {
    guard(|| {
        let ch = &deref(ch, "ch")?.0;
        let est = max_coherent_information(ch, &OptimizerConfig::new(restarts, tol, seed))?;
        *out(out_value, "out")? = est.value;
        Ok(())
    })
}

/// `max{0, (2p − 1) log₂ d}`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_erasure_quantum_capacity(p: f64, d: usize, out_value: *mut f64) -> CcStatus {
    guard(|| {
        *out(out_value, "out")? = erasure_quantum_capacity(p, d)?;
        Ok(())
    })
}

/// `p log₂ d`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_erasure_classical_capacity(p: f64, d: usize, out_value: *mut f64) -> CcStatus {
    guard(|| {
        *out(out_value, "out")? = erasure_classical_capacity(p, d)?;
        Ok(())
    })
}

/// Capacity in bits of the row-stochastic `rows × cols` matrix stored
/// row-major at `matrix`.
///
/// # Safety
/// `matrix` points to `rows * cols` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cc_blahut_arimoto(
    matrix: *const f64,
    rows: usize,
    cols: usize,
    tol: f64,
    out_value: *mut f64,
) -> CcStatus {
    guard(|| {
        if matrix.is_null() {
            return Err(null("matrix"));
        }
        let flat = std::slice::from_raw_parts(matrix, rows * cols);
        let m = StochasticMatrix::new(flat.chunks(cols.max(1)).map(<[f64]>::to_vec).collect())?;
        *out(out_value, "out")? = blahut_arimoto(&m, tol).capacity;
        Ok(())
    })
}
