//! Environmental parameter paths and the instantaneous eigensystem of
//! `H(t) = R(t) · σ`.
//!
//! Units are natural (`ħ = 1`). Eigenvectors use the gauge in which the first
//! component is real and non-negative:
//!
//! ```text
//! |E+> = ( cos θ/2,  sin θ/2 · e^{iφ} )
//! |E-> = ( sin θ/2, -cos θ/2 · e^{iφ} )
//! ```
//!
//! In this gauge the Berry rates, the non-adiabatic coupling and the
//! detuning have the closed forms
//!
//! ```text
//! γ̇- = -φ̇ cos²(θ/2),   γ̇+ = -φ̇ sin²(θ/2)
//! Γ- = θ̇/2 - (i/2) φ̇ sin θ,   Γ+ = -Γ-*
//! δ  = 2R - φ̇ cos θ
//! ```

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// One of the two instantaneous energy levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Plus,
    Minus,
}

/// Energies and gauge-fixed eigenvectors at one point of parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigensystem {
    pub e_plus: f64,
    pub e_minus: f64,
    pub v_plus: [Complex64; 2],
    pub v_minus: [Complex64; 2],
}

/// Eigenpairs of `R (sinθ cosφ, sinθ sinφ, cosθ) · σ`.
pub fn instantaneous_eigensystem(theta: f64, phi: f64, r: f64) -> Eigensystem {
    let (s, c) = (0.5 * theta).sin_cos();
    let phase = Complex64::from_polar(1.0, phi);
    Eigensystem {
        e_plus: r,
        e_minus: -r,
        v_plus: [Complex64::new(c, 0.0), phase * s],
        v_minus: [Complex64::new(s, 0.0), -phase * c],
    }
}

/// `<a|b>` for two-component vectors.
pub fn inner(a: &[Complex64; 2], b: &[Complex64; 2]) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// Field precessing about z at fixed polar angle, rate and magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecessingPath {
    pub r: f64,
    pub theta: f64,
    pub omega: f64,
}

impl PrecessingPath {
    pub fn new(r: f64, theta: f64, omega: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!("field magnitude must be positive, got {r}")));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!("polar angle {theta} outside [0, pi]")));
        }
        if !omega.is_finite() {
            return Err(Error::invalid("precession rate must be finite"));
        }
        Ok(Self { r, theta, omega })
    }

    /// Path in the units where `2R = 1`, so the precession rate equals the
    /// dimensionless drive `x = ω / 2R` and times are dimensionless `τ`.
    pub fn dimensionless(x: f64, theta: f64) -> Result<Self> {
        Self::new(0.5, theta, x)
    }

    /// `θ ∈ {0, π}`: the field sits on the precession axis and `Γ- = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.theta == 0.0 || self.theta == PI
    }

    fn sin_theta(&self) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            self.theta.sin()
        }
    }

    /// `C = (ω/2) sin θ`, so that `Γ- = -iC`.
    pub fn coupling_strength(&self) -> f64 {
        0.5 * self.omega * self.sin_theta()
    }

    pub fn detuning(&self) -> f64 {
        2.0 * self.r - self.omega * self.theta.cos()
    }
}

/// Path through tabulated `(t, θ, φ, R)` samples, cubic-spline interpolated.
///
/// Times are measured from the first sample.
#[derive(Debug, Clone)]
pub struct SampledPath {
    inner: Arc<SampledInner>,
}

#[derive(Debug)]
struct SampledInner {
    theta: CubicSpline,
    phi: CubicSpline,
    r: CubicSpline,
    // cumulative integrals at the knots: ∫δ, ∫γ̇-, ∫γ̇+, ∫R
    cumulative: Vec<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    t: f64,
    theta: f64,
    phi: f64,
    #[serde(rename = "R")]
    r: f64,
}

// eight-point Gauss-Legendre rule on [-1, 1]
const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

impl SampledPath {
    pub fn new(samples: &[(f64, f64, f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("a sampled path needs at least two samples"));
        }
        let t0 = samples[0].0;
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid(format!(
                    "sample times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(t, theta, phi, r) in samples {
            if !(theta > 0.0 && theta < PI) {
                return Err(Error::GaugeSingularity { t: t - t0, theta });
            }
            if !(r > 0.0) || !phi.is_finite() {
                return Err(Error::invalid(format!("bad sample at t = {t}: R = {r}, phi = {phi}")));
            }
        }
        let ts: Vec<f64> = samples.iter().map(|s| s.0 - t0).collect();
        let col = |f: fn(&(f64, f64, f64, f64)) -> f64| samples.iter().map(f).collect::<Vec<_>>();
        let mut inner = SampledInner {
            theta: CubicSpline::new(ts.clone(), col(|s| s.1)),
            phi: CubicSpline::new(ts.clone(), col(|s| s.2)),
            r: CubicSpline::new(ts.clone(), col(|s| s.3)),
            cumulative: Vec::with_capacity(ts.len()),
        };
        let mut acc = [0.0; 4];
        inner.cumulative.push(acc);
        for w in ts.windows(2) {
            let part = inner.rate_integrals(w[0], w[1]);
            for (a, p) in acc.iter_mut().zip(part) {
                *a += p;
            }
            inner.cumulative.push(acc);
        }
        Ok(Self { inner: Arc::new(inner) })
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "theta", "phi", "R"] {
            return Err(Error::invalid(format!(
                "path file header must be `t,theta,phi,R`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for row in rdr.deserialize() {
            let row: SampleRow = row?;
            samples.push((row.t, row.theta, row.phi, row.r));
        }
        Self::new(&samples)
    }

    pub fn from_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn duration(&self) -> f64 {
        *self.inner.theta.knots().last().expect("at least two knots")
    }
}

impl SampledInner {
    fn point(&self, t: f64) -> PathPoint {
        let (theta, theta_dot) = self.theta.eval(t);
        let (phi, phi_dot) = self.phi.eval(t);
        let (r, _) = self.r.eval(t);
        PathPoint {
            theta,
            phi,
            r,
            theta_dot,
            phi_dot,
        }
    }

    fn rates(&self, t: f64) -> [f64; 4] {
        let p = self.point(t);
        let (s, c) = (0.5 * p.theta).sin_cos();
        [
            2.0 * p.r - p.phi_dot * p.theta.cos(),
            -p.phi_dot * c * c,
            -p.phi_dot * s * s,
            p.r,
        ]
    }

    // Gauss-Legendre on two halves of [a, b]; the rates are smooth inside a
    // spline interval.
    fn rate_integrals(&self, a: f64, b: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        let mid = 0.5 * (a + b);
        for (lo, hi) in [(a, mid), (mid, b)] {
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            for &(node, w) in &GL8 {
                for t in [c - h * node, c + h * node] {
                    for (o, v) in out.iter_mut().zip(self.rates(t)) {
                        *o += w * h * v;
                    }
                }
            }
        }
        out
    }

    fn integrals_to(&self, t: f64) -> [f64; 4] {
        let i = self.theta.interval(t);
        let start = self.theta.knots()[i];
        let mut acc = self.cumulative[i];
        let part = self.rate_integrals(start, t);
        for (a, p) in acc.iter_mut().zip(part) {
            *a += p;
        }
        acc
    }
}

/// Angles, magnitude and angular rates of a path at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub theta: f64,
    pub phi: f64,
    pub r: f64,
    pub theta_dot: f64,
    pub phi_dot: f64,
}

/// An environmental trajectory `R(t)`.
#[derive(Debug, Clone)]
pub enum ParameterPath {
    Precessing(PrecessingPath),
    Sampled(SampledPath),
}

impl From<PrecessingPath> for ParameterPath {
    fn from(p: PrecessingPath) -> Self {
        ParameterPath::Precessing(p)
    }
}

impl From<SampledPath> for ParameterPath {
    fn from(p: SampledPath) -> Self {
        ParameterPath::Sampled(p)
    }
}

impl ParameterPath {
    /// Time span covered by sample data; unbounded for analytic paths.
    pub fn duration(&self) -> Option<f64> {
        match self {
            ParameterPath::Precessing(_) => None,
            ParameterPath::Sampled(s) => Some(s.duration()),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::invalid(format!("time {t} is not a valid path time")));
        }
        if let Some(d) = self.duration() {
            if t > d * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("time {t} beyond sampled path duration {d}")));
            }
        }
        Ok(())
    }

    pub fn point(&self, t: f64) -> Result<PathPoint> {
        self.check_time(t)?;
        match self {
            ParameterPath::Precessing(p) => Ok(PathPoint {
                theta: p.theta,
                phi: p.omega * t,
                r: p.r,
                theta_dot: 0.0,
                phi_dot: p.omega,
            }),
            ParameterPath::Sampled(s) => {
                let pt = s.inner.point(t);
                if !(pt.theta > 0.0 && pt.theta < PI) {
                    return Err(Error::GaugeSingularity { t, theta: pt.theta });
                }
                if !(pt.r > 0.0) {
                    return Err(Error::invalid(format!("interpolated R = {} <= 0 at t = {t}", pt.r)));
                }
                Ok(pt)
            }
        }
    }

    /// The Hamiltonian `R(t)·σ` as a 2×2 matrix (row-major).
    pub fn hamiltonian(&self, t: f64) -> Result<[[Complex64; 2]; 2]> {
        let p = self.point(t)?;
        Ok(hamiltonian_from_angles(p.r, p.theta, p.phi))
    }

    /// `∫₀ᵗ δ`, `γ-(t)`, `γ+(t)` and `∫₀ᵗ R`.
    pub(crate) fn phase_integrals(&self, t: f64) -> Result<[f64; 4]> {
        self.check_time(t)?;
        match self {
            ParameterPath::Precessing(p) => {
                let (s, c) = (0.5 * p.theta).sin_cos();
                Ok([p.detuning() * t, -p.omega * t * c * c, -p.omega * t * s * s, p.r * t])
            }
            ParameterPath::Sampled(s) => Ok(s.inner.integrals_to(t)),
        }
    }
}

pub(crate) fn hamiltonian_from_angles(r: f64, theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (st, ct) = theta.sin_cos();
    let off = Complex64::from_polar(r * st, phi);
    [
        [Complex64::new(r * ct, 0.0), off.conj()],
        [off, Complex64::new(-r * ct, 0.0)],
    ]
}

/// Instantaneous eigensystem plus the couplings that drive transitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenFrame {
    pub t: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub v_plus: [Complex64; 2],
    pub v_minus: [Complex64; 2],
    pub gamma_rate_plus: f64,
    pub gamma_rate_minus: f64,
    /// `Γ- = <E+|Ė->`.
    pub coupling_minus: Complex64,
    pub delta: f64,
}

impl EigenFrame {
    /// `Γ+ = <E-|Ė+> = -Γ-*`.
    pub fn coupling_plus(&self) -> Complex64 {
        -self.coupling_minus.conj()
    }
}

pub fn coupling_at(path: &ParameterPath, t: f64) -> Result<EigenFrame> {
    let p = path.point(t)?;
    let eig = instantaneous_eigensystem(p.theta, p.phi, p.r);
    let (s, c) = (0.5 * p.theta).sin_cos();
    let (rates, coupling, delta) = match path {
        ParameterPath::Precessing(pp) => (
            (-pp.omega * s * s, -pp.omega * c * c),
            Complex64::new(0.0, -pp.coupling_strength()),
            pp.detuning(),
        ),
        ParameterPath::Sampled(_) => (
            (-p.phi_dot * s * s, -p.phi_dot * c * c),
            Complex64::new(0.5 * p.theta_dot, -0.5 * p.phi_dot * p.theta.sin()),
            2.0 * p.r - p.phi_dot * p.theta.cos(),
        ),
    };
    Ok(EigenFrame {
        t,
        e_plus: eig.e_plus,
        e_minus: eig.e_minus,
        v_plus: eig.v_plus,
        v_minus: eig.v_minus,
        gamma_rate_plus: rates.0,
        gamma_rate_minus: rates.1,
        coupling_minus: coupling,
        delta,
    })
}

/// Berry phase `γ±(t) = ∫₀ᵗ γ̇±` accumulated by one level.
pub fn berry_phase(path: &ParameterPath, level: Level, t: f64) -> Result<f64> {
    // validates the whole path segment for sampled data at the knots
    path.point(t)?;
    let ints = path.phase_integrals(t)?;
    Ok(match level {
        Level::Minus => ints[1],
        Level::Plus => ints[2],
    })
}

/// The functions `F(t)`, `δ(t)`, `Γ-(t)` and `γ̇±(t)` that drive the
/// persistence amplitude.
#[derive(Debug, Clone)]
pub struct CouplingKernel {
    path: ParameterPath,
}

pub fn make_kernel(path: &ParameterPath) -> Result<CouplingKernel> {
    path.point(0.0)?;
    if let ParameterPath::Sampled(s) = path {
        path.point(s.duration())?;
    }
    Ok(CouplingKernel { path: path.clone() })
}

impl CouplingKernel {
    pub fn path(&self) -> &ParameterPath {
        &self.path
    }

    pub fn coupling_minus(&self, t: f64) -> Result<Complex64> {
        Ok(coupling_at(&self.path, t)?.coupling_minus)
    }

    pub fn delta(&self, t: f64) -> Result<f64> {
        Ok(coupling_at(&self.path, t)?.delta)
    }

    /// `(γ̇+, γ̇-)`.
    pub fn gamma_rates(&self, t: f64) -> Result<(f64, f64)> {
        let f = coupling_at(&self.path, t)?;
        Ok((f.gamma_rate_plus, f.gamma_rate_minus))
    }

    /// `∫₀ᵗ δ`.
    pub fn delta_phase(&self, t: f64) -> Result<f64> {
        Ok(self.path.phase_integrals(t)?[0])
    }

    /// `F(t) = Γ-(t) exp[i ∫₀ᵗ δ]`.
    pub fn f(&self, t: f64) -> Result<Complex64> {
        match &self.path {
            ParameterPath::Precessing(p) => {
                Ok(Complex64::new(0.0, -p.coupling_strength()) * Complex64::from_polar(1.0, p.detuning() * t))
            }
            ParameterPath::Sampled(_) => {
                let g = self.coupling_minus(t)?;
                Ok(g * Complex64::from_polar(1.0, self.delta_phase(t)?))
            }
        }
    }

    /// Upper bound of `|F|` on `[0, t]` (exact for precessing paths, sampled
    /// on a fine grid otherwise).
    pub fn max_abs(&self, t: f64) -> Result<f64> {
        match &self.path {
            ParameterPath::Precessing(p) => Ok(p.coupling_strength().abs()),
            ParameterPath::Sampled(_) => {
                let n = 2000;
                let mut m: f64 = 0.0;
                for k in 0..=n {
                    m = m.max(self.coupling_minus(t * k as f64 / n as f64)?.norm());
                }
                Ok(m)
            }
        }
    }
}
