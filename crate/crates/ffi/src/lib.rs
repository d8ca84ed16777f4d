//! C ABI over `fbe-core`.
//!
//! States are opaque handles owned by the caller and released with [`fbe_state_free`].
//! Every fallible call returns an `int` status (0 on success, negative on failure) and
//! leaves a message for [`fbe_last_error`] on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use fbe_core::energy::wave_energy;
use fbe_core::error::FbeError;
use fbe_core::grid::{make_state, Grading, Grid1D, State};
use fbe_core::oracle::AffineParams;
use fbe_core::stepper::{euler_step, evolve, ScalePolicy, StepConfig, SubtractionRule};
use fbe_core::wspace::control_params;

pub const FBE_OK: c_int = 0;
/// A required pointer argument was null.
pub const FBE_ERR_NULL: c_int = -1;
/// An argument was out of range or the input data are not an admissible state.
pub const FBE_ERR_INVALID: c_int = -2;
/// The computation itself failed (resolution, boundary loss, tangled mesh, ...).
pub const FBE_ERR_NUMERIC: c_int = -3;
/// The caller's buffer is too small; nothing was written.
pub const FBE_ERR_BUFFER: c_int = -4;
/// A Rust panic was caught at the boundary.
pub const FBE_ERR_PANIC: c_int = -5;

/// Opaque state handle.
pub struct FbeState {
    inner: State,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn code_of(e: &FbeError) -> c_int {
    match e {
        FbeError::Config(_)
        | FbeError::Invalid(_)
        | FbeError::NegativeInterior(_)
        | FbeError::NoVacuumBoundary(_)
        | FbeError::DegenerateBoundary(_)
        | FbeError::ParameterMismatch(_)
        | FbeError::ScaleConstraint(_)
        | FbeError::HorizonTooLong(..) => FBE_ERR_INVALID,
        _ => FBE_ERR_NUMERIC,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (c_int, String)>) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FBE_OK,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside fbe-core".into());
            FBE_ERR_PANIC
        }
    }
}

fn core<T>(r: fbe_core::error::Result<T>) -> Result<T, (c_int, String)> {
    r.map_err(|e| (code_of(&e), e.to_string()))
}

fn null(name: &str) -> (c_int, String) {
    (FBE_ERR_NULL, format!("`{name}` is null"))
}

unsafe fn state_ref<'a>(s: *const FbeState) -> Result<&'a State, (c_int, String)> {
    s.as_ref().map(|h| &h.inner).ok_or_else(|| null("state"))
}

fn boxed(state: State) -> *mut FbeState {
    Box::into_raw(Box::new(FbeState { inner: state }))
}

fn step_config(state: &State, eps: f64, k: usize) -> Result<StepConfig, (c_int, String)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err((FBE_ERR_INVALID, format!("eps = {eps} must lie in (0, 1)")));
    }
    let cfg = core(StepConfig::new(eps, k, state.kappa, state.grid().cells(), ScalePolicy::Desk))?;
    Ok(cfg.with_subtraction(SubtractionRule::Adaptive))
}

/// Copy the last error message of this thread into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fbe_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Affine solution `r = α(t)(1 - x²/R(t)²)`, `v = β(t)x` at time `t` on `cells` cells.
///
/// # Safety
/// `out` must be a valid pointer to write the new handle to.
#[no_mangle]
pub unsafe extern "C" fn fbe_state_affine(
    alpha: f64,
    beta: f64,
    radius: f64,
    kappa: f64,
    t: f64,
    cells: usize,
    out: *mut *mut FbeState,
) -> c_int {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = core(AffineParams::new(alpha, beta, radius, kappa))?;
        let s = core(p.state_at(t, cells))?;
        *out = boxed(s);
        Ok(())
    })
}

/// State from node positions and nodal values of `r` and `v` (`n` nodes each).
///
/// # Safety
/// `x`, `r`, `v` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbe_state_from_nodes(
    x: *const f64,
    r: *const f64,
    v: *const f64,
    n: usize,
    kappa: f64,
    out: *mut *mut FbeState,
) -> c_int {
    guard(|| {
        if x.is_null() || r.is_null() || v.is_null() || out.is_null() {
            return Err(null("x, r, v or out"));
        }
        let nodes = std::slice::from_raw_parts(x, n).to_vec();
        let grid = Arc::new(core(Grid1D::from_nodes(nodes, Grading::Custom))?);
        let rv = std::slice::from_raw_parts(r, n).to_vec();
        let vv = std::slice::from_raw_parts(v, n).to_vec();
        *out = boxed(core(make_state(rv, vv, kappa, grid))?);
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `state` must be null or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn fbe_state_free(state: *mut FbeState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of grid nodes of `state`, or 0 for null.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbe_state_len(state: *const FbeState) -> usize {
    state.as_ref().map_or(0, |s| s.inner.grid().len())
}

/// Copy nodes, `r` and `v` into caller buffers of length `len` (any of them may be null).
///
/// # Safety
/// `state` must be a live handle; non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fbe_state_values(
    state: *const FbeState,
    x: *mut f64,
    r: *mut f64,
    v: *mut f64,
    len: usize,
) -> c_int {
    guard(|| {
        let s = state_ref(state)?;
        let n = s.grid().len();
        if len < n {
            return Err((FBE_ERR_BUFFER, format!("buffer holds {len} values, state has {n} nodes")));
        }
        for (dst, src) in [(x, s.grid().nodes()), (r, s.r.values()), (v, s.v.values())] {
            if !dst.is_null() {
                std::ptr::copy_nonoverlapping(src.as_ptr(), dst, n);
            }
        }
        Ok(())
    })
}

/// Boundary points `Γ₋`, `Γ₊`.
///
/// # Safety
/// `state` must be a live handle; `gamma_minus` and `gamma_plus` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbe_state_boundary(state: *const FbeState, gamma_minus: *mut f64, gamma_plus: *mut f64) -> c_int {
    guard(|| {
        let s = state_ref(state)?;
        if gamma_minus.is_null() || gamma_plus.is_null() {
            return Err(null("gamma_minus or gamma_plus"));
        }
        *gamma_minus = s.gamma_minus;
        *gamma_plus = s.gamma_plus;
        Ok(())
    })
}

/// Energy `E^{2k}` (`k ≤ 4`) and the conserved physical energy.
///
/// # Safety
/// `state` must be a live handle; `energy` and `physical` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbe_energy(state: *const FbeState, k: usize, energy: *mut f64, physical: *mut f64) -> c_int {
    guard(|| {
        let s = state_ref(state)?;
        if energy.is_null() || physical.is_null() {
            return Err(null("energy or physical"));
        }
        let rep = core(wave_energy(s, k))?;
        *energy = rep.total;
        *physical = rep.physical;
        Ok(())
    })
}

/// Control parameters `A` and `B`.
///
/// # Safety
/// `state` must be a live handle; `a` and `b` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbe_control(state: *const FbeState, a: *mut f64, b: *mut f64) -> c_int {
    guard(|| {
        let s = state_ref(state)?;
        if a.is_null() || b.is_null() {
            return Err(null("a or b"));
        }
        let cp = core(control_params(s))?;
        *a = cp.a;
        *b = cp.b;
        Ok(())
    })
}

/// One regularize-and-transport step of size `eps` at energy index `k`.
///
/// Scale inequalities that fail for this `k` are recorded, not rejected.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbe_step(state: *const FbeState, eps: f64, k: usize, out: *mut *mut FbeState) -> c_int {
    guard(|| {
        let s = state_ref(state)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = step_config(s, eps, k)?;
        let (next, _) = core(euler_step(s, &cfg))?;
        *out = boxed(next);
        Ok(())
    })
}

/// Iterate steps of size `eps` up to `t_end`; writes the final state.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbe_evolve(
    state: *const FbeState,
    t_end: f64,
    eps: f64,
    k: usize,
    out: *mut *mut FbeState,
) -> c_int {
    guard(|| {
        let s = state_ref(state)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = step_config(s, eps, k)?;
        cfg.record_energy = false;
        let rec = core(evolve(s, t_end, &cfg))?;
        *out = boxed(rec.last().clone());
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fbe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
