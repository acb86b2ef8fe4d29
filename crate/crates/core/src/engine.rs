//! Non-perturbative evolution of the persistence amplitude.
//!
//! With `P-(t) = exp[iγ-(t) - i∫E-] S(t)` and
//! `T-(t) = -exp[iγ+(t) - i∫E+] I(t)` the Schrödinger equation in the
//! instantaneous eigenbasis reduces to the regular first-order system
//!
//! ```text
//! İ = F S,    Ṡ = -F* I,    S(0) = 1, I(0) = 0
//! ```
//!
//! which is the integral equation for `S` with the auxiliary `I = ∫ F S`
//! differentiated once. `|S|² + |I|²` is conserved exactly.
//!
//! Two independent routes to the same amplitudes live here as well: the
//! first-order time-sliced propagator product and the truncated series of
//! alternating nested integrals of `F` and `F*`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{self, DenseSolution, Dopri5Options};
use crate::output::write_csv;
use crate::quadrature::{self, QuadOptions};
use crate::spectral_path::{coupling_at, instantaneous_eigensystem, inner, CouplingKernel, ParameterPath};

pub const DEFAULT_TOL: f64 = 1e-10;

pub const TRAJECTORY_HEADER: [&str; 8] = ["t", "Re_S", "Im_S", "Re_I", "Im_I", "rho", "A", "unitarity_defect"];

// S, I (re/im), γ-, γ+, ∫R
const DIM: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeState {
    pub t: f64,
    pub s: Complex64,
    pub i: Complex64,
}

impl AmplitudeState {
    pub fn unitarity_defect(&self) -> f64 {
        self.s.norm_sqr() + self.i.norm_sqr() - 1.0
    }

    fn from_raw(t: f64, y: &[f64; DIM]) -> Self {
        Self {
            t,
            s: Complex64::new(y[0], y[1]),
            i: Complex64::new(y[2], y[3]),
        }
    }
}

/// Amplitudes at one time, decomposed into adiabatic phases and the
/// non-adiabatic factor `S = A e^{iρ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeResult {
    pub t: f64,
    pub p_minus: Complex64,
    pub t_minus: Complex64,
    pub p_plus: Complex64,
    pub t_plus: Complex64,
    pub s: Complex64,
    pub i: Complex64,
    /// Non-adiabatic phase correction, continuous from `ρ(0) = 0`.
    pub rho: f64,
    /// `|S|`.
    pub a: f64,
    /// `γ-(t)`.
    pub gamma_minus: f64,
    /// `-∫₀ᵗ E-`.
    pub dyn_phase_minus: f64,
}

/// Dense-output solution of the `(S, I)` system plus the accumulated phases.
#[derive(Debug, Clone)]
pub struct Trajectory {
    kernel: CouplingKernel,
    solution: DenseSolution<DIM>,
    // unwrapped ρ at the integrator nodes
    rho_nodes: Vec<(f64, f64)>,
}

pub fn evolve(kernel: &CouplingKernel, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::invalid(format!("end time must be finite and non-negative, got {t_end}")));
    }
    if let Some(d) = kernel.path().duration() {
        if t_end > d * (1.0 + 1e-12) {
            return Err(Error::invalid(format!("end time {t_end} beyond path duration {d}")));
        }
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let rhs = |t: f64, y: &[f64; DIM]| -> [f64; DIM] {
        match drive(kernel, t) {
            Ok((f, gamma_plus, gamma_minus, r)) => {
                let s = Complex64::new(y[0], y[1]);
                let i = Complex64::new(y[2], y[3]);
                let di = f * s;
                let ds = -f.conj() * i;
                [ds.re, ds.im, di.re, di.im, gamma_minus, gamma_plus, r]
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                [f64::NAN; DIM]
            }
        }
    };
    let y0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let result = ode::integrate(rhs, 0.0, y0, t_end, &Dopri5Options::with_tol(tol));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let solution = result?;
    let rho_nodes = unwrap_along(solution.nodes().map(|(t, y)| (t, y[1].atan2(y[0]))));
    Ok(Trajectory {
        kernel: kernel.clone(),
        solution,
        rho_nodes,
    })
}

fn drive(kernel: &CouplingKernel, t: f64) -> Result<(Complex64, f64, f64, f64)> {
    let frame = coupling_at(kernel.path(), t)?;
    Ok((kernel.f(t)?, frame.gamma_rate_plus, frame.gamma_rate_minus, frame.e_plus))
}

/// Continuous branch of a sequence of wrapped angles, starting from the
/// principal value of the first.
fn unwrap_along(angles: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (t, a) in angles {
        let v = match out.last() {
            Some(&(_, prev)) => nearest_branch(a, prev),
            None => a,
        };
        out.push((t, v));
    }
    out
}

/// `angle + 2πk` closest to `reference`.
pub(crate) fn nearest_branch(angle: f64, reference: f64) -> f64 {
    angle + 2.0 * PI * ((reference - angle) / (2.0 * PI)).round()
}

impl Trajectory {
    pub fn kernel(&self) -> &CouplingKernel {
        &self.kernel
    }

    pub fn t_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn steps(&self) -> usize {
        self.solution.accepted_steps()
    }

    pub fn state(&self, t: f64) -> AmplitudeState {
        AmplitudeState::from_raw(t, &self.solution.eval(t))
    }

    /// States at the integrator's natural steps.
    pub fn samples(&self) -> Vec<AmplitudeState> {
        self.solution.nodes().map(|(t, y)| AmplitudeState::from_raw(t, &y)).collect()
    }

    /// Natural steps plus `per_step` interpolated points inside each step.
    pub fn dense_samples(&self, per_step: usize) -> Vec<AmplitudeState> {
        self.solution
            .dense_samples(per_step)
            .into_iter()
            .map(|(t, y)| AmplitudeState::from_raw(t, &y))
            .collect()
    }

    /// Unwrapped `ρ` at the natural steps.
    pub fn rho_samples(&self) -> &[(f64, f64)] {
        &self.rho_nodes
    }

    /// `ρ(t)` on the branch continuous from `ρ(0) = 0`.
    pub fn rho(&self, t: f64) -> f64 {
        let s = self.state(t).s;
        let idx = self.rho_nodes.partition_point(|&(tn, _)| tn <= t).saturating_sub(1);
        let reference = self.rho_nodes.get(idx).map_or(0.0, |&(_, r)| r);
        nearest_branch(s.im.atan2(s.re), reference)
    }

    /// `(γ-, γ+, ∫R)` accumulated alongside the amplitudes.
    pub fn phases(&self, t: f64) -> (f64, f64, f64) {
        let y = self.solution.eval(t);
        (y[4], y[5], y[6])
    }

    pub fn max_unitarity_defect(&self, per_step: usize) -> f64 {
        self.dense_samples(per_step)
            .iter()
            .map(|s| s.unitarity_defect().abs())
            .fold(0.0, f64::max)
    }

    /// Trajectory export at the natural steps.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = self.samples().into_iter().zip(&self.rho_nodes).map(|(st, &(_, rho))| {
            vec![st.t, st.s.re, st.s.im, st.i.re, st.i.im, rho, st.s.norm(), st.unitarity_defect()]
        });
        write_csv(out, &TRAJECTORY_HEADER, rows)
    }
}

/// Persistence and transition amplitudes at `t` from an evolved trajectory.
///
/// `P+` and `T+` follow from unitarity of the eigenbasis propagator, whose
/// determinant in this gauge is `exp[-i(φ(t) - φ(0))]`.
pub fn assemble(traj: &Trajectory, t: f64) -> Result<AmplitudeResult> {
    if t < 0.0 || t > traj.t_end() * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "time {t} outside trajectory range [0, {}]",
            traj.t_end()
        )));
    }
    let state = traj.state(t);
    let (gamma_minus, gamma_plus, r_int) = traj.phases(t);
    let path = traj.kernel.path();
    let dphi = path.point(t)?.phi - path.point(0.0)?.phi;

    let p_minus = Complex64::from_polar(1.0, gamma_minus + r_int) * state.s;
    let t_minus = -Complex64::from_polar(1.0, gamma_plus - r_int) * state.i;
    let det = Complex64::from_polar(1.0, -dphi);
    Ok(AmplitudeResult {
        t,
        p_minus,
        t_minus,
        p_plus: det * p_minus.conj(),
        t_plus: -det * t_minus.conj(),
        s: state.s,
        i: state.i,
        rho: traj.rho(t),
        a: state.s.norm(),
        gamma_minus,
        dyn_phase_minus: r_int,
    })
}

type Mat2 = [[Complex64; 2]; 2];

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

/// Product of first-order time slices and its projection onto the
/// instantaneous eigenbases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicedPropagator {
    /// Lab-frame matrix `U(n)···U(1)`.
    pub lab: Mat2,
    /// `[[P+, T-], [T+, P-]]`, rows in the basis at `t`, columns at `0`.
    pub eigen: Mat2,
    pub slices: usize,
}

impl SlicedPropagator {
    pub fn p_minus(&self) -> Complex64 {
        self.eigen[1][1]
    }

    pub fn t_minus(&self) -> Complex64 {
        self.eigen[0][1]
    }
}

/// `U(t,0) ≈ Π (1 - iεH(t_k))` with `ε = t/n` and `t_k = kε`.
///
/// The slices are unitary only to `O(ε²)`, so amplitudes converge at `O(1/n)`.
pub fn sliced_propagator(path: &ParameterPath, t: f64, n: usize) -> Result<SlicedPropagator> {
    if n == 0 {
        return Err(Error::invalid("slice count must be at least 1"));
    }
    let eps = t / n as f64;
    let one = Complex64::new(1.0, 0.0);
    let mut u: Mat2 = [[one, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), one]];
    let neg_i_eps = Complex64::new(0.0, -eps);
    for k in 1..=n {
        let h = path.hamiltonian(k as f64 * eps)?;
        let slice: Mat2 = std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { one + neg_i_eps * h[i][j] } else { neg_i_eps * h[i][j] })
        });
        u = matmul(&slice, &u);
    }
    let (start, end) = (path.point(0.0)?, path.point(t)?);
    let basis0 = instantaneous_eigensystem(start.theta, start.phi, start.r);
    let basis_t = instantaneous_eigensystem(end.theta, end.phi, end.r);
    let apply = |v: &[Complex64; 2]| [u[0][0] * v[0] + u[0][1] * v[1], u[1][0] * v[0] + u[1][1] * v[1]];
    let u_plus = apply(&basis0.v_plus);
    let u_minus = apply(&basis0.v_minus);
    let eigen = [
        [inner(&basis_t.v_plus, &u_plus), inner(&basis_t.v_plus, &u_minus)],
        [inner(&basis_t.v_minus, &u_plus), inner(&basis_t.v_minus, &u_minus)],
    ];
    Ok(SlicedPropagator { lab: u, eigen, slices: n })
}

/// `S(t)` from the alternating nested integrals of `F*` and `F`, keeping
/// `order` transition pairs (`order ∈ {0, 1, 2}`).
pub fn series_persistence(kernel: &CouplingKernel, t: f64, order: usize) -> Result<Complex64> {
    if order > 2 {
        return Err(Error::invalid(format!("series order {order} not supported (0, 1 or 2)")));
    }
    let mut total = Complex64::new(1.0, 0.0);
    if order == 0 || t == 0.0 {
        return Ok(total);
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    for pairs in 1..=order {
        let term = nested_term(kernel, 2 * pairs, t, &failure);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        let term = term?;
        if pairs % 2 == 1 {
            total -= term;
        } else {
            total += term;
        }
    }
    Ok(total)
}

// ∫₀^upper dz K(z) · [remaining levels up to z]; K alternates F*, F, F*, F...
fn nested_term(kernel: &CouplingKernel, levels: usize, upper: f64, failure: &RefCell<Option<Error>>) -> Result<Complex64> {
    if levels == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let conj = levels.is_multiple_of(2);
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_segments: 64,
    };
    quadrature::integrate(
        |z| {
            let f = match kernel.f(z) {
                Ok(f) => f,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return Complex64::new(f64::NAN, f64::NAN);
                }
            };
            let k = if conj { f.conj() } else { f };
            match nested_term(kernel, levels - 1, z, failure) {
                Ok(rest) => k * rest,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    Complex64::new(f64::NAN, f64::NAN)
                }
            }
        },
        0.0,
        upper,
        &opts,
    )
}
