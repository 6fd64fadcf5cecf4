//! Closed-form solver oracles: the homogeneous massive Dirac solution, an
//! outgoing spherical wave, and the isometry of the spectral Dirac flow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::free_flow::{homogeneous_dirac, FlowKind, FreeFlow, Symbol};
use super::{step_rk4, CaseConfig, CaseId, T0};
use crate::clifford::{Spinor, C64};
use crate::error::Result;
use crate::lattice::{FieldState, GridSpec, Lattice};

/// Error-ratio band of a fourth-order method under dyadic refinement.
pub const RATIO_BAND: (f64, f64) = (12.0, 20.0);

/// Errors at successive dyadic refinements and the ratios between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    /// Refined parameter per level (`dt`, or `h` with `dt / h` fixed).
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(name: &str, steps: Vec<f64>, errors: Vec<f64>) -> Self {
        let ratios: Vec<f64> = errors.windows(2).map(|e| e[0] / e[1]).collect();
        let passed = !ratios.is_empty() && ratios.iter().all(|r| (RATIO_BAND.0..=RATIO_BAND.1).contains(r));
        OracleReport { name: name.into(), steps, errors, ratios, passed }
    }
}

/// Max error of RK4 against `exp(-i gamma^0 (t - 2)) psi_0` for constant data, `M = 1`, at `t = 4`.
pub fn homogeneous_dirac_error(dt: f64) -> Result<f64> {
    let g = GridSpec::periodic(17, 1.0)?;
    let p = Spinor::new([C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.5, 0.0), C64::new(1.0, -0.25)]);
    let case = CaseConfig::free_dirac(1.0);
    let mut s = FieldState::zeros(g, T0, CaseId::Custom);
    s.psi = Lattice::from_fn(g, |_| p);
    let n = (2.0 / dt).round() as usize;
    for _ in 0..n {
        s = step_rk4(&s, &case, dt)?;
    }
    let exact = homogeneous_dirac(&p, 1.0, s.t - T0);
    Ok(s.psi.data.iter().map(|v| (*v - exact).norm()).fold(0.0, f64::max))
}

pub fn homogeneous_dirac_study(dts: &[f64]) -> Result<OracleReport> {
    let errors = dts.iter().map(|&dt| homogeneous_dirac_error(dt)).collect::<Result<Vec<_>>>()?;
    Ok(OracleReport::new("homogeneous_dirac", dts.to_vec(), errors))
}

/// Radial profile of the outgoing spherical wave `g(t - r) / r`.
pub fn spherical_profile(s: f64) -> (f64, f64) {
    let (c, w) = (-3.0, 0.8);
    let z = (s - c) / w;
    let g = (-z * z).exp();
    (g, -2.0 * z / w * g)
}

/// `(u, u_t)` of the spherical wave at time `t`.
pub fn spherical_wave(t: f64, x: [f64; 3]) -> (f64, f64) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r < 1e-12 {
        return (0.0, 0.0);
    }
    let (g, dg) = spherical_profile(t - r);
    (g / r, dg / r)
}

/// Relative max error of the wave solver against `g(t - r) / r` on `[-10, 10]^3`
/// with `n` points, `dt = h / 4`, from `t = 2` to `t = 3`.
pub fn spherical_wave_error(n: usize) -> Result<f64> {
    let g = GridSpec::zero_pad(n, 10.0)?;
    let case = CaseConfig::klein_gordon(0.0);
    let mut s = FieldState::zeros(g, T0, CaseId::Custom);
    s.phi = Lattice::from_fn(g, |x| spherical_wave(T0, x).0);
    s.phi_t = Lattice::from_fn(g, |x| spherical_wave(T0, x).1);
    let dt = g.h / 4.0;
    let n_steps = (1.0 / dt).round() as usize;
    for _ in 0..n_steps {
        s = step_rk4(&s, &case, dt)?;
    }
    let exact = Lattice::from_fn(g, |x| spherical_wave(s.t, x).0);
    Ok(s.phi.sub(&exact)?.max_norm() / exact.max_norm())
}

pub fn spherical_wave_study(ns: &[usize]) -> Result<OracleReport> {
    let mut steps = Vec::new();
    let mut errors = Vec::new();
    for &n in ns {
        steps.push(GridSpec::zero_pad(n, 10.0)?.h);
        errors.push(spherical_wave_error(n)?);
    }
    Ok(OracleReport::new("spherical_wave", steps, errors))
}

/// Relative L2 change of the exact-symbol Dirac flow over `t = 5` on seeded random data.
pub fn spectral_l2_drift(n: usize, seed: u64) -> Result<f64> {
    let g = GridSpec::periodic(n, 4.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<Spinor> = (0..g.len()).map(|_| Spinor::random(&mut rng) * rng.gen_range(0.5..1.5)).collect();
    let psi = Lattice::from_vec(g, data)?;
    let flow = FreeFlow::new(FlowKind::Dirac { mass: 1.0 }, Symbol::Exact, g)?;
    let out = flow.dirac(&psi, 5.0)?;
    Ok(((out.l2() - psi.l2()) / psi.l2()).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_oracle_ratio() {
        let r = homogeneous_dirac_study(&[0.2, 0.1, 0.05]).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn spherical_profile_derivative() {
        let e = 1e-6;
        for s in [-4.0, -3.2, -2.5] {
            let fd = (spherical_profile(s + e).0 - spherical_profile(s - e).0) / (2.0 * e);
            assert!((spherical_profile(s).1 - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn spectral_flow_is_isometric() {
        assert!(spectral_l2_drift(20, 3).unwrap() < 1e-12);
    }

    #[test]
    fn band_check() {
        assert!(OracleReport::new("x", vec![0.2, 0.1], vec![16.0, 1.0]).passed);
        assert!(!OracleReport::new("x", vec![0.2, 0.1], vec![8.0, 1.0]).passed);
        assert!(!OracleReport::new("x", vec![0.2], vec![8.0]).passed);
    }
}
