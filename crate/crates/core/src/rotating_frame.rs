//! Exact solution of the precessing-field problem in the frame co-rotating
//! with the field.
//!
//! In that frame the Hamiltonian is static,
//! `H̄ = ½ [(cosθ - x) σz + sinθ σx]` in units where `2R = 1`, with
//! eigenvalues `±e/2` and eigenvectors tilted by `θ̄` from the z axis.
//! Everything here is in the dimensionless variables `x = ω/2R`, `τ = 2Rt`.

use num_complex::Complex64;

use crate::error::Result;
use crate::phase_corrections::dimensionless_params;

/// Static rotating-frame data for one `(x, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingFrameSolution {
    pub x: f64,
    pub theta: f64,
    /// Polar angle of the effective field in the rotating frame.
    pub theta_bar: f64,
    /// `θ̄ - θ`.
    pub delta_theta: f64,
    /// Rabi frequency in units of `2R`; equal to `e`.
    pub omega0: f64,
    /// Weight of the upper rotating-frame level in `|E-(0)>`.
    pub a_plus: f64,
    pub a_minus: f64,
    pub d: f64,
    pub e: f64,
    pub g: f64,
}

impl RotatingFrameSolution {
    /// Rotating-frame energies `Ē± = ±e` in units of `R`.
    pub fn energies(&self) -> (f64, f64) {
        (self.e, -self.e)
    }
}

pub fn solve_rotating_frame(x: f64, theta: f64) -> Result<RotatingFrameSolution> {
    let (d, e, g) = dimensionless_params(x, theta)?;
    let theta_bar = theta.sin().atan2(theta.cos() - x);
    let delta_theta = theta_bar - theta;
    Ok(RotatingFrameSolution {
        x,
        theta,
        theta_bar,
        delta_theta,
        omega0: e,
        a_plus: -(0.5 * delta_theta).sin(),
        a_minus: (0.5 * delta_theta).cos(),
        d,
        e,
        g,
    })
}

/// Closed-form non-adiabatic factor `S(τ)`.
pub fn exact_s(x: f64, theta: f64, tau: f64) -> Result<Complex64> {
    let (d, e, g) = dimensionless_params(x, theta)?;
    Ok(s_from_params(d, e, g, tau))
}

pub(crate) fn s_from_params(d: f64, e: f64, g: f64, tau: f64) -> Complex64 {
    let (sd, cd) = (0.5 * d * tau).sin_cos();
    let (se, ce) = (0.5 * e * tau).sin_cos();
    Complex64::new(cd * ce + g * sd * se, -sd * ce + g * cd * se)
}

/// `∫ ε dτ / 2` on the branch continuous in `τ` from zero, where
/// `tan(ετ/2) = g tan(eτ/2)`.
///
/// Writing `eτ/2 = kπ + b` with `|b| ≤ π/2`, the continuous branch is
/// `sgn(g) kπ + atan2(g sin b, cos b)`, so no march is needed.
pub(crate) fn continuous_half_phase(e: f64, g: f64, tau: f64) -> f64 {
    let a = 0.5 * e * tau;
    let k = (a / std::f64::consts::PI).round();
    let b = a - k * std::f64::consts::PI;
    g.signum() * k * std::f64::consts::PI + (g * b.sin()).atan2(b.cos())
}

/// `ρ(τ) = arg S` continued from `ρ(0) = 0`.
pub fn exact_rho(x: f64, theta: f64, tau: f64) -> Result<f64> {
    let (d, e, g) = dimensionless_params(x, theta)?;
    Ok(continuous_half_phase(e, g, tau) - 0.5 * d * tau)
}

/// Lab-frame state at `τ` starting from `|E-(0)>`.
pub fn exact_state(x: f64, theta: f64, tau: f64) -> Result<[Complex64; 2]> {
    let sol = solve_rotating_frame(x, theta)?;
    let (sb, cb) = (0.5 * sol.theta_bar).sin_cos();
    let up = Complex64::from_polar(sol.a_plus, -0.5 * sol.e * tau);
    let down = Complex64::from_polar(sol.a_minus, 0.5 * sol.e * tau);
    let rot = Complex64::from_polar(1.0, x * tau);
    let overall = Complex64::from_polar(1.0, -0.5 * x * tau);
    Ok([overall * (up * cb + down * sb), overall * rot * (up * sb - down * cb)])
}

/// Lab-frame propagator `U(τ, 0) = exp(-i x τ σz/2) exp(-i H̄ τ)`.
pub fn exact_propagator(x: f64, theta: f64, tau: f64) -> Result<[[Complex64; 2]; 2]> {
    let sol = solve_rotating_frame(x, theta)?;
    let (s, c) = (0.5 * sol.e * tau).sin_cos();
    // exp(-i H̄ τ) = cos(eτ/2) - i sin(eτ/2) n·σ with n the unit field direction
    let (nx, nz) = (theta.sin() / sol.e, (theta.cos() - x) / sol.e);
    let static_part = [
        [Complex64::new(c, -s * nz), Complex64::new(0.0, -s * nx)],
        [Complex64::new(0.0, -s * nx), Complex64::new(c, s * nz)],
    ];
    let lead = Complex64::from_polar(1.0, -0.5 * x * tau);
    let trail = Complex64::from_polar(1.0, 0.5 * x * tau);
    Ok([
        [lead * static_part[0][0], lead * static_part[0][1]],
        [trail * static_part[1][0], trail * static_part[1][1]],
    ])
}
