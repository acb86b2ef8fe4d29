//! The non-adiabatic phase `ρ` as a function of the drive `x` at a fixed
//! evaluation time, plus the weak-drive approximations it is compared with.
//!
//! The exact `ρ` follows from `tan(ετ/2) = g tan(eτ/2)` and
//! `ρ = (ε - d)τ/2`. Two routes to `ε(x)` are provided: integrating its
//! x-derivative from `ε(0) = 1`, and the branch-tracked arctangent itself.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::{self, Dopri5Options};
use crate::output::write_csv;
use crate::quadrature::{self, QuadOptions};
use crate::rotating_frame::continuous_half_phase;

pub const FIGURE1_HEADER: [&str; 5] = ["x", "rho_exact", "rho_first_iter", "rho_berry", "epsilon"];

// the ODE runs only where |cos(πse/x_f)| is at least this
const POLE_GUARD: f64 = 0.25;

/// `(d, e, g)`: detuning, Rabi frequency and their ratio in units of `2R`.
pub fn dimensionless_params(x: f64, theta: f64) -> Result<(f64, f64, f64)> {
    check_drive(x, theta)?;
    let c = theta.cos();
    let d = 1.0 - x * c;
    let e = (1.0 - 2.0 * x * c + x * x).max(0.0).sqrt();
    if e < 1e-12 {
        return Err(Error::DegenerateField { x, theta });
    }
    Ok((d, e, d / e))
}

/// x-derivatives `(d', e', g')`.
pub fn dimensionless_derivatives(x: f64, theta: f64) -> Result<(f64, f64, f64)> {
    let (d, e, _) = dimensionless_params(x, theta)?;
    let dd = -theta.cos();
    let de = (x - theta.cos()) / e;
    Ok((dd, de, (dd * e - d * de) / (e * e)))
}

fn check_drive(x: f64, theta: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("drive x must be finite and non-negative, got {x}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::invalid(format!("polar angle {theta} outside [0, pi]")));
    }
    Ok(())
}

/// Parameters of one sweep over `x ∈ [0, x_f]` at fixed `τ = 2πs/x_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub theta: f64,
    pub x_f: f64,
    pub s: f64,
    pub grid: usize,
    pub tol: f64,
    /// Step below which the ODE hands over to the arctangent form.
    pub min_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            theta: PI / 3.0,
            x_f: 0.3,
            s: 1.0,
            grid: 512,
            tol: 1e-10,
            min_step: 1e-12,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_f > 0.0 && self.x_f < 1.0) {
            return Err(Error::invalid(format!("x_f must lie in (0, 1), got {}", self.x_f)));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::invalid(format!("cycle count s must be positive, got {}", self.s)));
        }
        if self.grid < 2 {
            return Err(Error::invalid(format!("grid must have at least 2 points, got {}", self.grid)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.min_step >= 0.0) {
            return Err(Error::invalid("minimum step must be non-negative"));
        }
        check_drive(0.0, self.theta)
    }

    /// Evaluation time `τ = 2πs/x_f`.
    pub fn tau(&self) -> f64 {
        2.0 * PI * self.s / self.x_f
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let n = self.grid - 1;
        (0..=n).map(|k| if k == n { self.x_f } else { self.x_f * k as f64 / n as f64 }).collect()
    }
}

/// `ε(x)` from the defining arctangent on the branch continuous in `x`
/// starting at `ε(0) = 1`.
pub fn epsilon_unwrap(cfg: &SweepConfig, x: f64) -> Result<f64> {
    cfg.validate()?;
    let (_, e, g) = dimensionless_params(x, cfg.theta)?;
    let tau = cfg.tau();
    Ok(2.0 * continuous_half_phase(e, g, tau) / tau)
}

/// Right-hand side of `dε/dx` with `T = πs/x_f = τ/2`.
fn epsilon_rate(theta: f64, big_t: f64, x: f64, eps: f64) -> Result<f64> {
    let (_, e, g) = dimensionless_params(x, theta)?;
    let (_, de, dg) = dimensionless_derivatives(x, theta)?;
    let ce = (big_t * e).cos();
    let ceps = (big_t * eps).cos();
    Ok(ceps * ceps / big_t * (dg * (big_t * e).tan() + big_t * g * de / (ce * ce)))
}

/// Curve A sampled on the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub xs: Vec<f64>,
    pub eps: Vec<f64>,
    pub rho: Vec<f64>,
    /// x-intervals bridged with the arctangent form (pole regions and
    /// step underflow).
    pub fallback_intervals: Vec<(f64, f64)>,
    pub ode_steps: usize,
}

/// Integrate `dε/dx` across `[0, x_f]` from `ε(0) = 1`.
///
/// The equation is nearly singular where `tan(πse/x_f)` has a pole: nearby
/// solutions separate quickly and an adaptive step can hop onto the wrong
/// branch without any sign of trouble. The ODE is therefore only run where
/// `|cos(πse/x_f)|` stays above a guard value. Pole regions, and any stretch
/// where the step controller underflows, are bridged with the arctangent
/// form and the ODE resumes from its value.
pub fn epsilon_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let xs = cfg.grid_points();
    let tau = cfg.tau();
    let big_t = 0.5 * tau;
    let opts = Dopri5Options {
        h_min: cfg.min_step,
        ..Dopri5Options::with_tol(cfg.tol)
    };

    let mut eps = vec![f64::NAN; xs.len()];
    let mut fallback_intervals: Vec<(f64, f64)> = Vec::new();
    let mut ode_steps = 0;
    let mut next = 0;
    let mut bridge = |from: f64, to: f64, eps: &mut [f64], next: &mut usize| -> Result<()> {
        while *next < xs.len() && xs[*next] <= to {
            eps[*next] = epsilon_unwrap(cfg, xs[*next]).map_err(|_| Error::SweepFailure { from, to })?;
            *next += 1;
        }
        match fallback_intervals.last_mut() {
            Some(last) if last.1 == from => last.1 = to,
            _ => fallback_intervals.push((from, to)),
        }
        Ok(())
    };

    for (a, b, regular) in pole_segments(cfg)? {
        if !regular {
            bridge(a, b, &mut eps, &mut next)?;
            continue;
        }
        let start = if a == 0.0 { 1.0 } else { epsilon_unwrap(cfg, a)? };
        let failure = std::cell::RefCell::new(None);
        let rhs = |x: f64, y: &[f64; 1]| match epsilon_rate(cfg.theta, big_t, x, y[0]) {
            Ok(v) => [v],
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                [f64::NAN]
            }
        };
        let (sol, err) = ode::integrate_partial(rhs, a, [start], b, &opts);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        ode_steps += sol.accepted_steps();
        let reached = if err.is_some() { sol.t_end() } else { b };
        while next < xs.len() && xs[next] <= reached {
            eps[next] = sol.eval(xs[next])[0];
            next += 1;
        }
        match err {
            None => {}
            Some(Error::StepUnderflow { .. } | Error::MaxSteps { .. }) => bridge(reached, b, &mut eps, &mut next)?,
            Some(e) => return Err(e),
        }
    }
    // the initial value is exact by construction
    eps[0] = 1.0;
    let rho = xs
        .iter()
        .zip(&eps)
        .map(|(&x, &e)| Ok((e - dimensionless_params(x, cfg.theta)?.0) * tau / 2.0))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SweepResult {
        xs,
        eps,
        rho,
        fallback_intervals,
        ode_steps,
    })
}

/// Split `[0, x_f]` into maximal pieces on which `|cos(πse/x_f)|` is either
/// above the guard (`true`) or below it (`false`).
fn pole_segments(cfg: &SweepConfig) -> Result<Vec<(f64, f64, bool)>> {
    let big_t = 0.5 * cfg.tau();
    let regular = |x: f64| -> Result<bool> {
        let (_, e, _) = dimensionless_params(x, cfg.theta)?;
        Ok((big_t * e).cos().abs() >= POLE_GUARD)
    };
    let n = 64 * cfg.grid;
    let mut segments = Vec::new();
    let mut seg_start = 0.0;
    let mut state = regular(0.0)?;
    let mut prev = 0.0;
    for k in 1..=n {
        let x = if k == n { cfg.x_f } else { cfg.x_f * k as f64 / n as f64 };
        let here = regular(x)?;
        if here != state {
            // bisect the guard crossing inside [prev, x]
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if regular(mid)? == state {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            segments.push((seg_start, hi, state));
            seg_start = hi;
            state = here;
        }
        prev = x;
    }
    segments.push((seg_start, cfg.x_f, state));
    Ok(segments)
}

/// `ωt [c₁ x sin²θ + c₂ x² sin²θ cosθ]`.
fn rho_two_term(c1: f64, c2: f64, x: f64, theta: f64, omega_t: f64) -> f64 {
    let s2 = theta.sin().powi(2);
    omega_t * (c1 * x * s2 + c2 * x * x * s2 * theta.cos())
}

/// Weak-drive approximation with `c₁ = 1/4`, `c₂ = 1/3`.
pub fn rho_first_iteration(x: f64, theta: f64, omega_t: f64) -> f64 {
    rho_two_term(0.25, 1.0 / 3.0, x, theta, omega_t)
}

/// The adiabatic-iteration comparison curve, `c₁ = 1/2`, `c₂ = 1`.
pub fn rho_berry_comparison(x: f64, theta: f64, omega_t: f64) -> f64 {
    rho_two_term(0.5, 1.0, x, theta, omega_t)
}

/// `ε₁(x) = 1 + ∫₀ˣ g e' dx'`, optionally keeping the rapidly oscillating
/// `(x_f sin(2πs/x_f) / 2πs) g'` term of the first iteration.
pub fn epsilon_first_iteration(cfg: &SweepConfig, x: f64, oscillatory: bool) -> Result<f64> {
    cfg.validate()?;
    check_drive(x, cfg.theta)?;
    let theta = cfg.theta;
    let failure = std::cell::RefCell::new(None);
    let integrand = |u: f64| match (dimensionless_params(u, theta), dimensionless_derivatives(u, theta)) {
        (Ok((_, _, g)), Ok((_, de, _))) => g * de,
        (Err(e), _) | (_, Err(e)) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let integral = quadrature::integrate_real(integrand, 0.0, x, &QuadOptions::default());
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mut eps = 1.0 + integral?;
    if oscillatory {
        let amp = cfg.x_f * (2.0 * PI * cfg.s / cfg.x_f).sin() / (2.0 * PI * cfg.s);
        eps += amp * (dimensionless_params(x, theta)?.2 - 1.0);
    }
    Ok(eps)
}

/// `ρ` implied by a value of `ε` at drive `x`.
pub fn rho_from_epsilon(cfg: &SweepConfig, x: f64, eps: f64) -> Result<f64> {
    Ok((eps - dimensionless_params(x, cfg.theta)?.0) * cfg.tau() / 2.0)
}

/// Which estimate a curve carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveLabel {
    /// Exact, from the `ε` sweep.
    A,
    /// First-iteration approximation.
    B,
    /// Adiabatic-iteration comparison.
    C,
}

/// The three phase curves on a common x grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub config: SweepConfig,
    pub xs: Vec<f64>,
    pub eps: Vec<f64>,
    pub rho_exact: Vec<f64>,
    pub rho_first_iter: Vec<f64>,
    pub rho_berry: Vec<f64>,
    pub labels: [CurveLabel; 3],
    pub fallback_intervals: Vec<(f64, f64)>,
}

/// Curves A, B and C; B and C use `ωt = xτ`.
pub fn figure1_dataset(cfg: &SweepConfig) -> Result<PhaseCurve> {
    let sweep = epsilon_sweep(cfg)?;
    let tau = cfg.tau();
    let rho_first_iter = sweep.xs.iter().map(|&x| rho_first_iteration(x, cfg.theta, x * tau)).collect();
    let rho_berry = sweep.xs.iter().map(|&x| rho_berry_comparison(x, cfg.theta, x * tau)).collect();
    Ok(PhaseCurve {
        config: *cfg,
        rho_first_iter,
        rho_berry,
        xs: sweep.xs,
        eps: sweep.eps,
        rho_exact: sweep.rho,
        labels: [CurveLabel::A, CurveLabel::B, CurveLabel::C],
        fallback_intervals: sweep.fallback_intervals,
    })
}

/// Independent sweeps evaluated in parallel, results in input order.
pub fn figure1_batch(cfgs: &[SweepConfig]) -> Vec<Result<PhaseCurve>> {
    cfgs.par_iter().map(figure1_dataset).collect()
}

impl PhaseCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = (0..self.xs.len()).map(|i| {
            vec![self.xs[i], self.rho_exact[i], self.rho_first_iter[i], self.rho_berry[i], self.eps[i]]
        });
        write_csv(out, &FIGURE1_HEADER, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn params_at_reference_points() {
        assert_eq!(dimensionless_params(0.0, 1.0).unwrap(), (1.0, 1.0, 1.0));
        let (d, e, g) = dimensionless_params(0.5, PI / 2.0).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e, 1.25f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g, 0.894427190999916, epsilon = 1e-12);
        assert!(matches!(dimensionless_params(1.0, 0.0), Err(Error::DegenerateField { .. })));
        assert!(dimensionless_params(-0.1, 1.0).is_err());
    }

    #[test]
    fn derivatives_match_central_differences() {
        let (x, th, h) = (0.23, 1.1, 1e-5);
        let (dd, de, dg) = dimensionless_derivatives(x, th).unwrap();
        let p = dimensionless_params(x + h, th).unwrap();
        let m = dimensionless_params(x - h, th).unwrap();
        assert_abs_diff_eq!(dd, (p.0 - m.0) / (2.0 * h), epsilon = 1e-9);
        assert_abs_diff_eq!(de, (p.1 - m.1) / (2.0 * h), epsilon = 1e-9);
        assert_abs_diff_eq!(dg, (p.2 - m.2) / (2.0 * h), epsilon = 1e-9);
    }

    #[test]
    fn config_validation() {
        let ok = SweepConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SweepConfig { x_f: 1.0, ..ok }.validate().is_err());
        assert!(SweepConfig { grid: 1, ..ok }.validate().is_err());
        assert!(SweepConfig { s: 0.0, ..ok }.validate().is_err());
        assert!(SweepConfig { tol: 0.0, ..ok }.validate().is_err());
        let xs = ok.grid_points();
        assert_eq!((xs.len(), xs[0], xs[511]), (512, 0.0, 0.3));
    }

    // k advanced by hand whenever eτ/2 passes a half-odd multiple of π
    fn marched_epsilon(cfg: &SweepConfig, x_target: f64) -> f64 {
        let tau = cfg.tau();
        let steps = 20_000;
        let mut prev = 0.5 * tau;
        let mut k = (prev / PI).round();
        let mut half = prev;
        for i in 1..=steps {
            let x = x_target * i as f64 / steps as f64;
            let (_, e, g) = dimensionless_params(x, cfg.theta).unwrap();
            let a = 0.5 * e * tau;
            k += (a / PI - 0.5).ceil() - (prev / PI - 0.5).ceil();
            prev = a;
            half = (g * a.tan()).atan() + k * PI;
        }
        2.0 * half / tau
    }

    #[test]
    fn closed_form_unwrap_agrees_with_explicit_march() {
        for cfg in [SweepConfig::default(), SweepConfig { s: 2.0, ..Default::default() }] {
            for x in [0.0, 0.05, 0.17, 0.3] {
                assert_abs_diff_eq!(epsilon_unwrap(&cfg, x).unwrap(), marched_epsilon(&cfg, x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn unwrap_satisfies_defining_relation() {
        let cfg = SweepConfig::default();
        let big_t = cfg.tau() / 2.0;
        for x in cfg.grid_points() {
            let (_, e, g) = dimensionless_params(x, cfg.theta).unwrap();
            let eps = epsilon_unwrap(&cfg, x).unwrap();
            assert_abs_diff_eq!((big_t * eps).tan(), g * (big_t * e).tan(), epsilon = 1e-10);
        }
        assert_eq!(epsilon_unwrap(&cfg, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn sweep_matches_unwrap_without_pole() {
        let cfg = SweepConfig::default();
        let sweep = epsilon_sweep(&cfg).unwrap();
        assert!(sweep.fallback_intervals.is_empty());
        assert_eq!((sweep.eps[0], sweep.rho[0]), (1.0, 0.0));
        for (x, eps) in sweep.xs.iter().zip(&sweep.eps) {
            assert_abs_diff_eq!(*eps, epsilon_unwrap(&cfg, *x).unwrap(), epsilon = 1e-6);
        }
    }

    #[test]
    fn sweep_crosses_tangent_pole() {
        // eτ/2 passes 6.5π on [0, 0.3] for two cycles
        let cfg = SweepConfig { s: 2.0, ..Default::default() };
        let sweep = epsilon_sweep(&cfg).unwrap();
        assert_eq!(sweep.fallback_intervals.len(), 1);
        for (x, eps) in sweep.xs.iter().zip(&sweep.eps) {
            assert_abs_diff_eq!(*eps, epsilon_unwrap(&cfg, *x).unwrap(), epsilon = 1e-6);
        }
        let tau = cfg.tau();
        for w in sweep.eps.windows(2) {
            assert!((w[1] - w[0]).abs() * tau / 2.0 < PI / 2.0);
        }
    }

    #[test]
    fn step_underflow_hands_over_to_arctangent() {
        let cfg = SweepConfig { min_step: 0.5, grid: 16, ..Default::default() };
        let sweep = epsilon_sweep(&cfg).unwrap();
        assert_eq!(sweep.fallback_intervals, vec![(0.0, 0.3)]);
        assert_eq!(sweep.eps[0], 1.0);
        for (x, eps) in sweep.xs.iter().zip(&sweep.eps) {
            assert_eq!(*eps, if *x == 0.0 { 1.0 } else { epsilon_unwrap(&cfg, *x).unwrap() });
        }
    }

    #[test]
    fn approximation_coefficients() {
        assert_abs_diff_eq!(rho_first_iteration(0.3, PI / 3.0, 2.0 * PI), 2.0 * PI * 0.0675, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_first_iteration(0.1, PI / 2.0, 2.0 * PI), 2.0 * PI * 0.025, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_berry_comparison(0.3, PI / 3.0, 2.0 * PI), 2.0 * PI * 0.14625, epsilon = 1e-12);
        assert_eq!(rho_first_iteration(0.0, 1.0, 3.0), 0.0);
    }

    #[test]
    fn first_iteration_epsilon_series() {
        let cfg = SweepConfig::default();
        let th = cfg.theta;
        let x = 0.02;
        let series = 1.0 - x * th.cos() + 0.5 * x * x * th.sin().powi(2) + 2.0 / 3.0 * x.powi(3) * th.sin().powi(2) * th.cos();
        assert_abs_diff_eq!(epsilon_first_iteration(&cfg, x, false).unwrap(), series, epsilon = 1e-6);
        let with_osc = epsilon_first_iteration(&cfg, x, true).unwrap();
        assert!((with_osc - series).abs() < 1e-3);
    }

    #[test]
    fn csv_shape() {
        let curve = figure1_dataset(&SweepConfig { grid: 8, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,rho_exact,rho_first_iter,rho_berry,epsilon");
        assert_eq!(lines.len(), 9);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
    }
}
