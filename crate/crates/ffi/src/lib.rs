//! C ABI over `carnot_lab`: opaque handles for reduced systems and magnetic
//! geodesics, status codes, and a thread-local message for the last error.
//!
//! Every function returns a [`CarnotStatus`]; results go through out
//! pointers. Handles are released with their `_free` function.

use carnot_lab::classification::{classify, ClassifyOptions, GeneralClass, SpecificClass};
use carnot_lab::costmaps::{period_theta, RadialPair, Val};
use carnot_lab::models::{build_model, ModelKind};
use carnot_lab::reconstruction::MagneticGeodesic;
use carnot_lab::reduced::{reduced_system, Momentum, Pencil, ReducedSystem};
use carnot_lab::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarnotStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SolverFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarnotGeneralClass {
    Line = 0,
    RegularBounded = 1,
    RegularUnbounded = 2,
    Homoclinic = 3,
    HeteroclinicDirect = 4,
    HeteroclinicTurnback = 5,
    Undetermined = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarnotSpecificClass {
    None = 0,
    SmallOscillation = 1,
    RPeriodic = 2,
    RHomoclinic = 3,
    Periodic = 4,
    Homoclinic = 5,
    Generic = 6,
}

/// Reduced Hamiltonian system of a model, momentum and pencil.
pub struct CarnotSystem {
    sys: ReducedSystem,
}

/// Magnetic geodesic sampled on a time window.
pub struct CarnotGeodesic {
    c: MagneticGeodesic,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: CarnotStatus, msg: &str) -> CarnotStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> CarnotStatus {
    let status = if e.is_input_error() { CarnotStatus::InvalidInput } else { CarnotStatus::SolverFailure };
    fail(status, &e.to_string())
}

fn guard<F: FnOnce() -> CarnotStatus>(f: F) -> CarnotStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CarnotStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        return (len == 0).then_some(&[]);
    }
    // SAFETY: the caller vouches for `len` readable doubles at `ptr`.
    Some(unsafe { std::slice::from_raw_parts(ptr, len) })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn carnot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn carnot_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            // SAFETY: `buf` has `len` writable bytes and `k < len`.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, k);
                *buf.add(k) = 0;
            }
        }
        bytes.len()
    })
}

/// Builds the reduced system of `model` (`"eng"`, `"n631"`, `"g357"`) with
/// rank `n` (0 for the fixed-rank models), momentum `mu[0..mu_len]` and
/// pencil `G = a + bF`.
///
/// # Safety
/// `model` must be a NUL-terminated string, `mu` must point to `mu_len`
/// doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_system_new(
    model: *const c_char,
    n: u32,
    mu: *const f64,
    mu_len: usize,
    a: f64,
    b: f64,
    out: *mut *mut CarnotSystem,
) -> CarnotStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            return fail(CarnotStatus::NullPointer, "null argument");
        }
        // SAFETY: checked non-null; the caller guarantees NUL termination.
        let Ok(name) = unsafe { CStr::from_ptr(model) }.to_str() else {
            return fail(CarnotStatus::InvalidInput, "model name is not UTF-8");
        };
        // SAFETY: forwarded caller contract.
        let Some(mu) = (unsafe { slice(mu, mu_len) }) else {
            return fail(CarnotStatus::NullPointer, "null momentum");
        };
        let kind: ModelKind = match name.parse() {
            Ok(k) => k,
            Err(e) => return from_error(e),
        };
        let built = build_model(kind, (n > 0).then_some(n as usize))
            .and_then(|spec| reduced_system(&spec, &Momentum::new(mu.to_vec()), Pencil { a, b }));
        match built {
            Ok(sys) => {
                // SAFETY: `out` is non-null and writable.
                unsafe { *out = Box::into_raw(Box::new(CarnotSystem { sys })) };
                CarnotStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `sys` must be null or a handle from [`carnot_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn carnot_system_free(sys: *mut CarnotSystem) {
    if !sys.is_null() {
        // SAFETY: the handle came from `Box::into_raw`.
        drop(unsafe { Box::from_raw(sys) });
    }
}

/// Rank `n` of the horizontal `x` block; reduced states have `2n` entries.
///
/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_system_rank(sys: *const CarnotSystem, out: *mut usize) -> CarnotStatus {
    if sys.is_null() || out.is_null() {
        return fail(CarnotStatus::NullPointer, "null argument");
    }
    // SAFETY: both pointers checked; the caller keeps the handle alive.
    unsafe { *out = (*sys).sys.n() };
    CarnotStatus::Ok
}

/// `H = |p|^2/2 + G(x)^2/2` at the reduced state `state[0..len]`.
///
/// # Safety
/// `sys` must be a live handle, `state` must point to `len` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_system_hamiltonian(sys: *const CarnotSystem, state: *const f64, len: usize, out: *mut f64) -> CarnotStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (Some(s), Some(st)) = (unsafe { sys.as_ref() }, unsafe { slice(state, len) }) else {
            return fail(CarnotStatus::NullPointer, "null argument");
        };
        if out.is_null() {
            return fail(CarnotStatus::NullPointer, "null output");
        }
        if len != 2 * s.sys.n() {
            return fail(CarnotStatus::InvalidInput, &format!("state needs {} entries", 2 * s.sys.n()));
        }
        // SAFETY: checked non-null.
        unsafe { *out = s.sys.hamiltonian(st) };
        CarnotStatus::Ok
    })
}

/// Labels the geodesic from the on-shell state `state[0..len]`.
///
/// # Safety
/// `sys` must be a live handle, `state` must point to `len` doubles and
/// both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_classify(
    sys: *const CarnotSystem,
    state: *const f64,
    len: usize,
    general: *mut CarnotGeneralClass,
    specific: *mut CarnotSpecificClass,
) -> CarnotStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (Some(s), Some(st)) = (unsafe { sys.as_ref() }, unsafe { slice(state, len) }) else {
            return fail(CarnotStatus::NullPointer, "null argument");
        };
        if general.is_null() || specific.is_null() {
            return fail(CarnotStatus::NullPointer, "null output");
        }
        match classify(&s.sys, st, &ClassifyOptions::default()) {
            Ok(c) => {
                let g = match c.general {
                    GeneralClass::Line => CarnotGeneralClass::Line,
                    GeneralClass::RegularBounded => CarnotGeneralClass::RegularBounded,
                    GeneralClass::RegularUnbounded => CarnotGeneralClass::RegularUnbounded,
                    GeneralClass::Homoclinic => CarnotGeneralClass::Homoclinic,
                    GeneralClass::HeteroclinicDirect => CarnotGeneralClass::HeteroclinicDirect,
                    GeneralClass::HeteroclinicTurnback => CarnotGeneralClass::HeteroclinicTurnback,
                    GeneralClass::Undetermined => CarnotGeneralClass::Undetermined,
                };
                let sp = match c.specific {
                    None => CarnotSpecificClass::None,
                    Some(SpecificClass::SmallOscillation) => CarnotSpecificClass::SmallOscillation,
                    Some(SpecificClass::RPeriodic) => CarnotSpecificClass::RPeriodic,
                    Some(SpecificClass::RHomoclinic) => CarnotSpecificClass::RHomoclinic,
                    Some(SpecificClass::Periodic) => CarnotSpecificClass::Periodic,
                    Some(SpecificClass::Homoclinic) => CarnotSpecificClass::Homoclinic,
                    Some(SpecificClass::Generic) => CarnotSpecificClass::Generic,
                };
                // SAFETY: checked non-null.
                unsafe {
                    *general = g;
                    *specific = sp;
                }
                CarnotStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Integrates from the on-shell state `state[0..len]` at `t = 0` over `[t0, t1]` and lifts to
/// the magnetic space with `(y, z) = 0` at `t = 0` (or at `t0` when the
/// window excludes 0).
///
/// # Safety
/// `sys` must be a live handle, `state` must point to `len` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_geodesic_new(
    sys: *const CarnotSystem,
    state: *const f64,
    len: usize,
    t0: f64,
    t1: f64,
    tol: f64,
    out: *mut *mut CarnotGeodesic,
) -> CarnotStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (Some(s), Some(st)) = (unsafe { sys.as_ref() }, unsafe { slice(state, len) }) else {
            return fail(CarnotStatus::NullPointer, "null argument");
        };
        if out.is_null() {
            return fail(CarnotStatus::NullPointer, "null output");
        }
        if !(t0 < t1) {
            return fail(CarnotStatus::InvalidInput, "need t0 < t1");
        }
        let t_ref = if t0 <= 0.0 && 0.0 <= t1 { 0.0 } else { t0 };
        match s.sys.check_on_shell(st, 1e-9).and_then(|_| s.sys.integrate(st, (t0, t1), tol)) {
            Ok(tr) => {
                let c = MagneticGeodesic::from_reduced(&s.sys, Arc::new(tr), t_ref, [0.0, 0.0]);
                // SAFETY: checked non-null.
                unsafe { *out = Box::into_raw(Box::new(CarnotGeodesic { c })) };
                CarnotStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `geo` must be null or a handle from [`carnot_geodesic_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn carnot_geodesic_free(geo: *mut CarnotGeodesic) {
    if !geo.is_null() {
        // SAFETY: the handle came from `Box::into_raw`.
        drop(unsafe { Box::from_raw(geo) });
    }
}

/// Writes the point `(x_1, ..., x_n, y, z)` at time `t` into `buf`, which
/// must hold `n + 2` doubles.
///
/// # Safety
/// `geo` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn carnot_geodesic_point(geo: *const CarnotGeodesic, t: f64, buf: *mut f64, len: usize) -> CarnotStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let Some(g) = (unsafe { geo.as_ref() }) else {
            return fail(CarnotStatus::NullPointer, "null handle");
        };
        if buf.is_null() {
            return fail(CarnotStatus::NullPointer, "null buffer");
        }
        let need = g.c.n() + 2;
        if len < need {
            return fail(CarnotStatus::BufferTooSmall, &format!("buffer needs {need} doubles"));
        }
        if let Err(e) = g.c.traj.state_at(t) {
            return from_error(e);
        }
        let p = g.c.point_at(t);
        // SAFETY: `buf` holds at least `need` doubles.
        unsafe { std::ptr::copy_nonoverlapping(p.as_ptr(), buf, need) };
        CarnotStatus::Ok
    })
}

/// Period-map values `(Theta_1, Theta_2)` of the homoclinic class of
/// `F = G = 1 - beta r^2`; divergent values are reported as infinity.
///
/// # Safety
/// Both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_period_theta(beta: f64, theta1: *mut f64, theta2: *mut f64) -> CarnotStatus {
    guard(|| {
        if theta1.is_null() || theta2.is_null() {
            return fail(CarnotStatus::NullPointer, "null output");
        }
        if !(beta > 0.0) {
            return fail(CarnotStatus::InvalidInput, "beta must be positive");
        }
        let pair = RadialPair::new(1.0, -beta, 0.0, 0.0, 1.0);
        let inf = |v: Val| v.finite().unwrap_or(f64::INFINITY);
        match period_theta(&pair, 1e-12) {
            Ok(p) => {
                // SAFETY: checked non-null.
                unsafe {
                    *theta1 = inf(p.theta1);
                    *theta2 = inf(p.theta2);
                }
                CarnotStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
