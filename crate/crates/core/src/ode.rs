//! Adaptive Dormand-Prince 5(4) integrator with continuous (dense) output.
//!
//! The state is a fixed-size real vector; complex systems are split into
//! real and imaginary parts by the caller. Each accepted step keeps the five
//! Hairer-style interpolation coefficients so the solution can be evaluated
//! anywhere on the integration interval at fourth order.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order solution minus embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    /// Smallest step the controller may take before reporting underflow.
    pub h_min: f64,
    /// Largest step, `f64::INFINITY` for no bound.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5Options {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_min: 0.0,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
struct DenseStep<const N: usize> {
    t: f64,
    h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let s = ((t - self.t) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let c = &self.cont;
        std::array::from_fn(|i| {
            c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])))
        })
    }

    fn end_state(&self) -> [f64; N] {
        std::array::from_fn(|i| self.cont[0][i] + self.cont[1][i])
    }
}

/// Accepted steps of one integration, evaluable anywhere in `[t0, t_end]`.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    t0: f64,
    y0: [f64; N],
    steps: Vec<DenseStep<N>>,
    rejected: usize,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(self.t0, |s| s.t + s.h)
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Interpolated state; `t` is clamped to the covered interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.steps.is_empty() || t <= self.t0 {
            return if self.steps.is_empty() {
                self.y0
            } else {
                self.steps[0].eval(self.t0)
            };
        }
        let idx = self.steps.partition_point(|s| s.t <= t).saturating_sub(1);
        self.steps[idx].eval(t)
    }

    /// The integrator's natural grid: `(t, y)` at the start and at the end of
    /// every accepted step.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, [f64; N])> + '_ {
        std::iter::once((self.t0, self.y0))
            .chain(self.steps.iter().map(|s| (s.t + s.h, s.end_state())))
    }

    /// Interpolated samples: every node plus `per_step` interior points of
    /// each step, in increasing `t`.
    pub fn dense_samples(&self, per_step: usize) -> Vec<(f64, [f64; N])> {
        let mut out = Vec::with_capacity(1 + self.steps.len() * (per_step + 1));
        out.push((self.t0, self.y0));
        for s in &self.steps {
            for k in 1..=per_step {
                let t = s.t + s.h * k as f64 / (per_step + 1) as f64;
                out.push((t, s.eval(t)));
            }
            out.push((s.t + s.h, s.end_state()));
        }
        out
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn scaled_norm<const N: usize>(v: &[f64; N], y: &[f64; N], opts: &Dopri5Options) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = opts.atol + opts.rtol * y[i].abs();
            (v[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(f: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], opts: &Dopri5Options) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let d0 = scaled_norm(y0, y0, opts);
    let d1 = scaled_norm(f0, y0, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = f(t0 + h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = scaled_norm(&diff, y0, opts) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end`.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Dopri5Options,
) -> Result<DenseSolution<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let (sol, err) = integrate_partial(f, t0, y0, t_end, opts);
    match err {
        Some(e) => Err(e),
        None => Ok(sol),
    }
}

/// Like [`integrate`] but hands back the steps accepted before a failure
/// together with the error, so callers can resume past trouble spots.
pub fn integrate_partial<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Dopri5Options,
) -> (DenseSolution<N>, Option<Error>)
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut sol = DenseSolution {
        t0,
        y0,
        steps: Vec::new(),
        rejected: 0,
    };
    if !(t_end > t0) {
        return (sol, None);
    }
    let span = t_end - t0;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(&mut f, t0, &y0, &k1, opts))
        .min(opts.h_max)
        .min(span);
    let mut last_rejected = false;

    while t < t_end {
        if sol.steps.len() + sol.rejected >= opts.max_steps {
            return (
                sol,
                Some(Error::MaxSteps {
                    t,
                    max_steps: opts.max_steps,
                }),
            );
        }
        let h_floor = opts.h_min.max(16.0 * f64::EPSILON * t.abs().max(span));
        if h < h_floor {
            return (sol, Some(Error::StepUnderflow { t, h }));
        }
        let last = t + h >= t_end || (t_end - (t + h)) < h_floor;
        if last {
            h = t_end - t;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new);

        let err_vec: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let scale: [f64; N] = std::array::from_fn(|i| y[i].abs().max(y_new[i].abs()));
        let err = scaled_norm(&err_vec, &scale, opts);

        if !err.is_finite() {
            sol.rejected += 1;
            last_rejected = true;
            h *= 0.1;
            continue;
        }

        let fac = (err.powf(0.2) / 0.9).clamp(0.1, 5.0);
        if err <= 1.0 {
            let mut cont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k7[i] - bspl;
                cont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sol.steps.push(DenseStep { t, h, cont });
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new.min(opts.h_max);
            last_rejected = false;
        } else {
            sol.rejected += 1;
            last_rejected = true;
            h /= fac.max(1.0 / 0.9);
        }
    }
    (sol, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_growth_at_nodes_and_between() {
        let opts = Dopri5Options::with_tol(1e-11);
        let sol = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, &opts).unwrap();
        for (t, y) in sol.dense_samples(3) {
            assert_abs_diff_eq!(y[0], t.exp(), epsilon = 1e-9 * t.exp());
        }
        assert_eq!(sol.t_end(), 2.0);
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let opts = Dopri5Options::with_tol(1e-10);
        let sol = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 50.0, &opts).unwrap();
        let y = sol.eval(50.0);
        assert_abs_diff_eq!(y[0], 50f64.cos(), epsilon = 1e-8);
        assert_abs_diff_eq!(y[1], -(50f64.sin()), epsilon = 1e-8);
        let mid = sol.eval(17.3);
        assert_abs_diff_eq!(mid[0], 17.3f64.cos(), epsilon = 1e-8);
    }

    #[test]
    fn dense_output_is_fourth_order() {
        // one fixed step of y' = cos t, compare mid-step interpolant error
        // for h and h/2
        let err = |h: f64| {
            let opts = Dopri5Options {
                h_init: Some(h),
                rtol: 1.0,
                atol: 1.0,
                h_max: h,
                ..Default::default()
            };
            let sol = integrate(|t, _: &[f64; 1]| [t.cos()], 0.0, [0.0], h, &opts).unwrap();
            let t = 0.37 * h;
            (sol.eval(t)[0] - t.sin()).abs()
        };
        let ratio = err(0.4) / err(0.2);
        assert!(ratio > 16.0, "ratio {ratio}");
    }

    #[test]
    fn zero_length_interval_returns_initial_state() {
        let sol = integrate(|_, y: &[f64; 1]| [y[0]], 1.0, [3.0], 1.0, &Default::default()).unwrap();
        assert_eq!(sol.eval(1.0), [3.0]);
        assert_eq!(sol.accepted_steps(), 0);
    }

    #[test]
    fn underflow_reports_failing_time() {
        let opts = Dopri5Options {
            h_min: 1e-6,
            ..Dopri5Options::with_tol(1e-12)
        };
        // blows up at t = 1
        let err = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &opts).unwrap_err();
        match err {
            Error::StepUnderflow { t, .. } => assert!(t > 0.9 && t < 1.0, "t = {t}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
