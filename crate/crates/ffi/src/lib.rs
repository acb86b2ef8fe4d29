//! C interface to the geophase engine.
//!
//! Every function returns a [`GpStatus`]. On failure a description is kept
//! per thread and can be copied out with [`gp_last_error_message`]. Panics
//! never cross the boundary; they are reported as `GP_STATUS_PANIC`.
//!
//! All quantities use the dimensionless units `2R = 1`: `x` is the drive
//! `ω/2R`, `tau` the time `2Rt`, and angles are radians.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use geophase::engine::{assemble, evolve, Trajectory};
use geophase::phase_corrections::{figure1_dataset, SweepConfig};
use geophase::rotating_frame::{exact_s, solve_rotating_frame};
use geophase::spectral_path::{make_kernel, PrecessingPath};
use geophase::validate::run_validation;
use geophase::{Complex64, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpStatus {
    Ok = 0,
    InvalidArgument = 1,
    Numerical = 2,
    Io = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GpComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for GpComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Rotating-frame solution of the precessing field.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GpRotatingFrame {
    pub theta_bar: f64,
    pub delta_theta: f64,
    pub omega0: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub d: f64,
    pub e: f64,
    pub g: f64,
}

/// Amplitudes assembled from a trajectory at one time.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GpAmplitudes {
    pub s: GpComplex,
    pub i: GpComplex,
    pub p_minus: GpComplex,
    pub t_minus: GpComplex,
    pub p_plus: GpComplex,
    pub t_plus: GpComplex,
    pub rho: f64,
    pub a: f64,
}

/// Opaque handle to an evolved trajectory.
pub struct GpTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> GpStatus {
    match e {
        Error::Io(_) | Error::Csv(_) => GpStatus::Io,
        Error::InvalidInput(_) | Error::Json(_) => GpStatus::InvalidArgument,
        _ if e.is_numerical() => GpStatus::Numerical,
        _ => GpStatus::InvalidArgument,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (GpStatus, String)>) -> GpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            GpStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            GpStatus::Panic
        }
    }
}

fn core<T>(r: geophase::Result<T>) -> Result<T, (GpStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GpStatus, String) {
    (GpStatus::NullPointer, format!("{what} is null"))
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: the caller provides `len` writable bytes and n < len
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Closed-form persistence factor `S(tau)` of the precessing field.
///
/// # Safety
/// `out` must be null or point to a writable `GpComplex`.
#[no_mangle]
pub unsafe extern "C" fn gp_exact_s(x: f64, theta: f64, tau: f64, out: *mut GpComplex) -> GpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = core(exact_s(x, theta, tau))?;
        // SAFETY: checked non-null; validity is the caller's contract
        unsafe { *out = s.into() };
        Ok(())
    })
}

/// # Safety
/// `out` must be null or point to a writable `GpRotatingFrame`.
#[no_mangle]
pub unsafe extern "C" fn gp_rotating_frame(x: f64, theta: f64, out: *mut GpRotatingFrame) -> GpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = core(solve_rotating_frame(x, theta))?;
        let value = GpRotatingFrame {
            theta_bar: r.theta_bar,
            delta_theta: r.delta_theta,
            omega0: r.omega0,
            a_plus: r.a_plus,
            a_minus: r.a_minus,
            d: r.d,
            e: r.e,
            g: r.g,
        };
        // SAFETY: checked non-null
        unsafe { *out = value };
        Ok(())
    })
}

/// Evolve the precessing field from `tau = 0` to `t_end`. On success `*out`
/// owns a handle that must be released with [`gp_trajectory_free`].
///
/// # Safety
/// `out` must be null or point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_trajectory_evolve(
    x: f64,
    theta: f64,
    t_end: f64,
    tol: f64,
    out: *mut *mut GpTrajectory,
) -> GpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null
        unsafe { *out = ptr::null_mut() };
        let path = core(PrecessingPath::dimensionless(x, theta))?;
        let kernel = core(make_kernel(&path.into()))?;
        let inner = core(evolve(&kernel, t_end, tol))?;
        let handle = Box::into_raw(Box::new(GpTrajectory { inner }));
        // SAFETY: checked non-null
        unsafe { *out = handle };
        Ok(())
    })
}

/// Amplitudes at `t` within the trajectory's range.
///
/// # Safety
/// `traj` must be null or a live handle from [`gp_trajectory_evolve`];
/// `out` must be null or point to a writable `GpAmplitudes`.
#[no_mangle]
pub unsafe extern "C" fn gp_trajectory_amplitudes(traj: *const GpTrajectory, t: f64, out: *mut GpAmplitudes) -> GpStatus {
    guard(|| {
        // SAFETY: caller contract on the handle
        let traj = unsafe { traj.as_ref() }.ok_or_else(|| null("traj"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = core(assemble(&traj.inner, t))?;
        let value = GpAmplitudes {
            s: r.s.into(),
            i: r.i.into(),
            p_minus: r.p_minus.into(),
            t_minus: r.t_minus.into(),
            p_plus: r.p_plus.into(),
            t_plus: r.t_plus.into(),
            rho: r.rho,
            a: r.a,
        };
        // SAFETY: checked non-null
        unsafe { *out = value };
        Ok(())
    })
}

/// Final time of the trajectory, or NaN for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gp_trajectory_t_end(traj: *const GpTrajectory) -> f64 {
    // SAFETY: caller contract on the handle
    unsafe { traj.as_ref() }.map_or(f64::NAN, |t| t.inner.t_end())
}

/// Number of accepted integrator steps, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gp_trajectory_steps(traj: *const GpTrajectory) -> usize {
    // SAFETY: caller contract on the handle
    unsafe { traj.as_ref() }.map_or(0, |t| t.inner.steps())
}

/// Release a trajectory handle; null is ignored.
///
/// # Safety
/// `traj` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gp_trajectory_free(traj: *mut GpTrajectory) {
    if !traj.is_null() {
        // SAFETY: the handle came from Box::into_raw in gp_trajectory_evolve
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Phase curves on `grid` points of `[0, x_f]`. Each output array must hold
/// `grid` doubles; any of them may be null to skip that column.
///
/// # Safety
/// Every non-null output pointer must point to `grid` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gp_phase_curve(
    theta: f64,
    x_f: f64,
    s: f64,
    grid: usize,
    tol: f64,
    xs: *mut f64,
    rho_exact: *mut f64,
    rho_first_iter: *mut f64,
    rho_berry: *mut f64,
    epsilon: *mut f64,
) -> GpStatus {
    guard(|| {
        let cfg = SweepConfig {
            theta,
            x_f,
            s,
            grid,
            tol,
            ..SweepConfig::default()
        };
        let curve = core(figure1_dataset(&cfg))?;
        for (dst, src) in [
            (xs, &curve.xs),
            (rho_exact, &curve.rho_exact),
            (rho_first_iter, &curve.rho_first_iter),
            (rho_berry, &curve.rho_berry),
            (epsilon, &curve.eps),
        ] {
            if !dst.is_null() {
                // SAFETY: the caller provides `grid` doubles and src has grid entries
                unsafe { ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len()) };
            }
        }
        Ok(())
    })
}

/// Run the validation suite and write its JSON report into `buf`
/// (NUL-terminated). `*needed` receives the report length excluding the NUL;
/// when it does not fit, nothing is written and `GP_STATUS_BUFFER_TOO_SMALL`
/// is returned. `*all_pass` tells whether every check passed.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes; `needed` and
/// `all_pass` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gp_validate_json(
    tol: f64,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
    all_pass: *mut bool,
) -> GpStatus {
    guard(|| {
        let report = core(run_validation(tol))?;
        let text = core(report.to_json())?;
        if !needed.is_null() {
            // SAFETY: checked non-null
            unsafe { *needed = text.len() };
        }
        if !all_pass.is_null() {
            // SAFETY: checked non-null
            unsafe { *all_pass = report.pass };
        }
        if buf.is_null() || len <= text.len() {
            return Err((
                GpStatus::BufferTooSmall,
                format!("report needs {} bytes plus terminator", text.len()),
            ));
        }
        // SAFETY: len > text.len(), so the report and NUL fit
        unsafe {
            ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
            *buf.add(text.len()) = 0;
        }
        Ok(())
    })
}
