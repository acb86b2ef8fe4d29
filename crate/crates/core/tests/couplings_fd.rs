//! Couplings and Berry rates against finite differences of the gauge-fixed
//! eigenvectors, with the step halved to confirm second-order convergence.

use geophase::spectral_path::{coupling_at, inner, instantaneous_eigensystem, ParameterPath, PrecessingPath, SampledPath};
use num_complex::Complex64;

fn wobbling_path() -> ParameterPath {
    let samples: Vec<(f64, f64, f64, f64)> = (0..=800)
        .map(|k| {
            let t = k as f64 * 0.01;
            (t, 1.0 + 0.3 * t.sin(), 0.5 * t + 0.02 * t * t, 1.0 + 0.1 * t.cos())
        })
        .collect();
    SampledPath::new(&samples).unwrap().into()
}

fn eigvec_derivative(path: &ParameterPath, t: f64, h: f64) -> ([Complex64; 2], [Complex64; 2]) {
    let at = |s: f64| {
        let p = path.point(s).unwrap();
        instantaneous_eigensystem(p.theta, p.phi, p.r)
    };
    let (a, b) = (at(t + h), at(t - h));
    let d = |u: [Complex64; 2], v: [Complex64; 2]| [(u[0] - v[0]) / (2.0 * h), (u[1] - v[1]) / (2.0 * h)];
    (d(a.v_plus, b.v_plus), d(a.v_minus, b.v_minus))
}

/// Errors of `Γ-`, `γ̇-` and `γ̇+` against a central difference with step `h`.
fn fd_errors(path: &ParameterPath, t: f64, h: f64) -> [f64; 3] {
    let frame = coupling_at(path, t).unwrap();
    let (dp, dm) = eigvec_derivative(path, t, h);
    let i = Complex64::new(0.0, 1.0);
    let gamma_minus = inner(&frame.v_plus, &dm);
    let rate_minus = i * inner(&frame.v_minus, &dm);
    let rate_plus = i * inner(&frame.v_plus, &dp);
    [
        (gamma_minus - frame.coupling_minus).norm(),
        (rate_minus - frame.gamma_rate_minus).norm(),
        (rate_plus - frame.gamma_rate_plus).norm(),
    ]
}

#[test]
fn sampled_couplings_converge_at_second_order() {
    let path = wobbling_path();
    for t in [0.7, 3.333, 6.1] {
        let coarse = fd_errors(&path, t, 2e-3);
        let fine = fd_errors(&path, t, 1e-3);
        for k in 0..3 {
            assert!(fine[k] < 1e-5, "component {k} at t={t}: {}", fine[k]);
            // a ratio near 4 means the error is the O(h²) difference error
            if coarse[k] > 1e-9 {
                let ratio = coarse[k] / fine[k];
                assert!((3.0..5.0).contains(&ratio), "component {k} at t={t}: ratio {ratio}");
            }
        }
    }
}

#[test]
fn precessing_couplings_match_finite_differences() {
    let path: ParameterPath = PrecessingPath::new(0.8, 1.9, 0.37).unwrap().into();
    let errs = fd_errors(&path, 2.5, 1e-4);
    assert!(errs.iter().all(|&e| e < 1e-8), "{errs:?}");
}

#[test]
fn coupling_plus_is_minus_conjugate_of_finite_difference() {
    let path = wobbling_path();
    let t = 4.2;
    let frame = coupling_at(&path, t).unwrap();
    let (dp, _) = eigvec_derivative(&path, t, 1e-3);
    let gamma_plus = inner(&frame.v_minus, &dp);
    assert!((gamma_plus - frame.coupling_plus()).norm() < 1e-5);
}
