//! Transverse magnetization of a spin in the precessing field, observed at
//! whole precession cycles `t = 2πn/ω`.
//!
//! The spin starts along `(|E+(0)> + |E-(0)>)/√2`. Magnetizations are in
//! units of `γħ/2`, the drive is `x = ω/γB`, and times are dimensionless.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::output::write_csv;
use crate::phase_corrections::dimensionless_params;
use crate::rotating_frame::{exact_rho, exact_s, exact_state};
use crate::spectral_path::{inner, instantaneous_eigensystem};

pub const MAGNETIZATION_HEADER: [&str; 8] =
    ["n", "x", "theta_deg", "Mx_exact", "Mx_approx", "arg_exact", "arg_approx", "A2"];

/// Persistence and transition amplitudes of the precessing field,
/// in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormAmplitudes {
    pub p_minus: Complex64,
    pub p_plus: Complex64,
    pub t_minus: Complex64,
    pub t_plus: Complex64,
    pub a: f64,
    pub rho: f64,
    /// Signed transition magnitude, `|Ĉ| = |T±|`.
    pub c_hat: f64,
}

/// Signed `Ĉ(τ) = -(x sinθ / e) sin(eτ/2)`.
pub fn transition_magnitude(x: f64, theta: f64, tau: f64) -> Result<f64> {
    let (_, e, _) = dimensionless_params(x, theta)?;
    Ok(-(x * theta.sin() / e) * (0.5 * e * tau).sin())
}

pub fn closed_form_amplitudes(x: f64, theta: f64, tau: f64) -> Result<ClosedFormAmplitudes> {
    let a = exact_s(x, theta, tau)?.norm();
    let rho = exact_rho(x, theta, tau)?;
    let c_hat = transition_magnitude(x, theta, tau)?;
    let c = theta.cos();
    let half_dyn = 0.5 * tau;
    let p_minus = Complex64::from_polar(a, half_dyn - 0.5 * x * tau * (1.0 + c) + rho);
    let p_plus = Complex64::from_polar(a, -half_dyn - 0.5 * x * tau * (1.0 - c) - rho);
    let t = Complex64::new(0.0, -c_hat) * Complex64::from_polar(1.0, -0.5 * x * tau);
    Ok(ClosedFormAmplitudes {
        p_minus,
        p_plus,
        t_minus: t,
        t_plus: t,
        a,
        rho,
        c_hat,
    })
}

/// One observation of the transverse magnetization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetizationPoint {
    pub n: u32,
    pub x: f64,
    pub theta: f64,
    pub t: f64,
    pub m_perp: Complex64,
    pub m_x: f64,
    /// Unwrapped phase of the dominant `A² e^{i arg}` term.
    pub arg_exact: f64,
    pub arg_approx: f64,
    pub a2: f64,
}

fn cycle_time(x: f64, n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("cycle index n must be at least 1"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("drive x must be positive at whole cycles, got {x}")));
    }
    Ok(2.0 * PI * n as f64 / x)
}

/// Weak-drive phase `2πn[1/x - cosθ + x sin²θ (1/2 + (2/3) x cosθ)]`.
pub fn approx_argument(x: f64, theta: f64, n: u32) -> f64 {
    let (s, c) = theta.sin_cos();
    2.0 * PI * n as f64 * (1.0 / x - c + x * s * s * (0.5 + 2.0 / 3.0 * x * c))
}

/// `M⊥ = (P- + T+)(P+* + T-*)` from the closed-form amplitudes.
pub fn transverse_magnetization_exact(x: f64, theta: f64, n: u32) -> Result<MagnetizationPoint> {
    let tau = cycle_time(x, n)?;
    let amp = closed_form_amplitudes(x, theta, tau)?;
    let m_perp = (amp.p_minus + amp.t_plus) * (amp.p_plus.conj() + amp.t_minus.conj());
    let (d, _, _) = dimensionless_params(x, theta)?;
    Ok(MagnetizationPoint {
        n,
        x,
        theta,
        t: tau,
        m_perp,
        m_x: m_perp.re,
        arg_exact: d * tau + 2.0 * amp.rho,
        arg_approx: approx_argument(x, theta, n),
        a2: amp.a * amp.a,
    })
}

/// `M⊥ = 2 <ψ|E+><E-|ψ>` evaluated directly in the exact lab-frame state.
pub fn transverse_magnetization_direct(x: f64, theta: f64, n: u32) -> Result<Complex64> {
    let tau = cycle_time(x, n)?;
    let basis = instantaneous_eigensystem(theta, x * tau, 0.5);
    let basis0 = instantaneous_eigensystem(theta, 0.0, 0.5);
    // the evolution is linear, so evolve each initial eigenvector separately
    let from_minus = exact_state(x, theta, tau)?;
    let u = crate::rotating_frame::exact_propagator(x, theta, tau)?;
    let from_plus = [
        u[0][0] * basis0.v_plus[0] + u[0][1] * basis0.v_plus[1],
        u[1][0] * basis0.v_plus[0] + u[1][1] * basis0.v_plus[1],
    ];
    let psi = [
        (from_plus[0] + from_minus[0]) / 2f64.sqrt(),
        (from_plus[1] + from_minus[1]) / 2f64.sqrt(),
    ];
    Ok(2.0 * inner(&psi, &basis.v_plus) * inner(&basis.v_minus, &psi))
}

/// Weak-drive prediction `M_x = A² cos(arg_approx)` with the exact `A²`.
pub fn magnetization_approx(x: f64, theta: f64, n: u32) -> Result<MagnetizationPoint> {
    if x == 0.0 {
        return Err(Error::invalid("weak-drive magnetization diverges at x = 0"));
    }
    let exact = transverse_magnetization_exact(x, theta, n)?;
    let m_x = exact.a2 * exact.arg_approx.cos();
    Ok(MagnetizationPoint {
        m_perp: Complex64::from_polar(exact.a2, exact.arg_approx),
        m_x,
        ..exact
    })
}

/// Rows of the magnetization CSV for every `(n, x)` pair at one angle.
pub fn magnetization_table(xs: &[f64], theta: f64, ns: &[u32]) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(xs.len() * ns.len());
    for &n in ns {
        for &x in xs {
            let exact = transverse_magnetization_exact(x, theta, n)?;
            let approx = magnetization_approx(x, theta, n)?;
            rows.push(vec![
                n as f64,
                x,
                theta.to_degrees(),
                exact.m_x,
                approx.m_x,
                exact.arg_exact,
                exact.arg_approx,
                exact.a2,
            ]);
        }
    }
    Ok(rows)
}

pub fn write_magnetization_csv<W: Write>(out: W, rows: Vec<Vec<f64>>) -> Result<()> {
    write_csv(out, &MAGNETIZATION_HEADER, rows)
}
