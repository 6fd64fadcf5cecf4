//! Fourier-space free flows on periodic grids.
//!
//! Every flow is a function of a Hermitian symbol whose square is scalar, so
//! each Fourier mode evolves as `a I + b B` with scalars `a, b`. Two symbol
//! families are available: the exact continuum symbol, and the symbol of the
//! lattice scheme itself (fourth-order stencils, RK4 amplification per step),
//! which reproduces the finite-difference solver mode by mode.

use std::f64::consts::PI;

use rustfft::{Fft, FftPlanner};

use crate::clifford::{Spinor, C64, I, ONE, ZERO};
use crate::dkg_solver::{alpha_apply, gamma0_apply};
use crate::error::{Error, Result};
use crate::lattice::{BoundaryMode, GridSpec, Lattice, ScalarLattice, SpinorLattice};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowKind {
    /// `d_t psi = -gamma^0 gamma^a d_a psi - i M gamma^0 psi`.
    Dirac { mass: f64 },
    /// `u_tt = Laplacian u - m^2 u` (m = 0 is the wave equation).
    KleinGordon { mass: f64 },
}

impl FlowKind {
    pub fn wave() -> Self {
        FlowKind::KleinGordon { mass: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Symbol {
    /// Continuum symbol `xi`, `|xi|^2`.
    Exact,
    /// Stencil symbols and `n = t / dt` RK4 steps.
    Lattice { dt: f64 },
}

/// A free flow on a periodic grid.
#[derive(Clone, Debug)]
pub struct FreeFlow {
    pub kind: FlowKind,
    pub symbol: Symbol,
    pub grid: GridSpec,
}

/// In-place 3D FFT over a cube of side `n` (axis 1 slowest).
pub fn fft3(data: &mut [C64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft: std::sync::Arc<dyn Fft<f64>> = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut line = vec![ZERO; n];
    let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
    for stride in [1usize, n, n * n] {
        for base in 0..n * n {
            let start = match stride {
                1 => base * n,
                s if s == n => (base / n) * n * n + base % n,
                _ => base,
            };
            for (q, v) in line.iter_mut().enumerate() {
                *v = data[start + q * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (q, v) in line.iter().enumerate() {
                data[start + q * stride] = *v;
            }
        }
    }
    if inverse {
        let s = 1.0 / (n * n * n) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Angular wavenumber of FFT index `p`.
#[inline]
pub fn wavenumber(p: usize, n: usize, h: f64) -> f64 {
    let q = if p <= n / 2 { p as f64 } else { p as f64 - n as f64 };
    2.0 * PI * q / (n as f64 * h)
}

/// Symbol of the fourth-order first-derivative stencil divided by `i`.
#[inline]
pub fn stencil_d1(xi: f64, h: f64) -> f64 {
    (8.0 * (xi * h).sin() - (2.0 * xi * h).sin()) / (6.0 * h)
}

/// Symbol of minus the fourth-order second-derivative stencil.
#[inline]
pub fn stencil_d2(xi: f64, h: f64) -> f64 {
    (30.0 - 32.0 * (xi * h).cos() + 2.0 * (2.0 * xi * h).cos()) / (12.0 * h * h)
}

fn cpow(z: C64, n: i64) -> C64 {
    if n >= 0 {
        z.powi(n as i32)
    } else {
        ONE / z.powi((-n) as i32)
    }
}

impl FreeFlow {
    pub fn new(kind: FlowKind, symbol: Symbol, grid: GridSpec) -> Result<Self> {
        if grid.boundary != BoundaryMode::Periodic {
            return Err(Error::InvalidGrid("free flows need a periodic grid; embed first".into()));
        }
        Ok(FreeFlow { kind, symbol, grid })
    }

    fn steps(&self, t: f64) -> Result<i64> {
        match self.symbol {
            Symbol::Exact => Ok(0),
            Symbol::Lattice { dt } => {
                let n = t / dt;
                if (n - n.round()).abs() > 1e-6 {
                    return Err(Error::Config(format!("t = {t} is not a multiple of dt = {dt}")));
                }
                Ok(n.round() as i64)
            }
        }
    }

    /// Per-axis first-derivative symbol and the scalar `|k|^2`.
    fn mode(&self, p: [usize; 3]) -> ([f64; 3], f64) {
        let n = self.grid.n;
        let h = self.grid.h;
        let xi = p.map(|q| wavenumber(q, n, h));
        match self.symbol {
            Symbol::Exact => (xi, xi.iter().map(|v| v * v).sum()),
            Symbol::Lattice { .. } => {
                let k = xi.map(|v| stencil_d1(v, h));
                let mu = xi.iter().map(|v| stencil_d2(*v, h)).sum();
                (k, mu)
            }
        }
    }

    /// Coefficients `(a, b)` of `f(B) = a + b B` for a symbol with `B^2 = lambda^2`.
    ///
    /// Dirac: `f = exp(-i t B)`; wave: `f = exp(t A)` with `A^2 = -lambda^2`.
    fn coefficients(&self, lambda: f64, t: f64, steps: i64, dirac: bool) -> (C64, C64) {
        match self.symbol {
            Symbol::Exact => {
                let (s, c) = (lambda * t).sin_cos();
                let sinc = if lambda == 0.0 { t } else { s / lambda };
                if dirac {
                    (C64::new(c, 0.0), C64::new(0.0, -sinc))
                } else {
                    (C64::new(c, 0.0), C64::new(sinc, 0.0))
                }
            }
            Symbol::Lattice { dt } => {
                let th = lambda * dt;
                let alpha = C64::new(1.0 - th * th / 2.0 + th.powi(4) / 24.0, 0.0);
                // one step: alpha + beta B (Dirac) or alpha + beta A (wave)
                let beta = if dirac { C64::new(0.0, -dt * (1.0 - th * th / 6.0)) } else { C64::new(dt * (1.0 - th * th / 6.0), 0.0) };
                // eigenvalues of B are +-lambda, of A are +-i lambda
                let ev = if dirac { C64::new(lambda, 0.0) } else { C64::new(0.0, lambda) };
                if lambda == 0.0 {
                    let a = cpow(alpha, steps);
                    let b = C64::new(steps as f64, 0.0) * cpow(alpha, steps - 1) * beta;
                    return (a, b);
                }
                let mp = cpow(alpha + beta * ev, steps);
                let mm = cpow(alpha - beta * ev, steps);
                ((mp + mm) * 0.5, (mp - mm) / (ev * 2.0))
            }
        }
    }

    /// Evolves spinor data by time `t` (negative `t` runs backwards).
    pub fn dirac(&self, psi: &SpinorLattice, t: f64) -> Result<SpinorLattice> {
        let mass = match self.kind {
            FlowKind::Dirac { mass } => mass,
            _ => return Err(Error::Config("not a Dirac flow".into())),
        };
        self.check_grid(&psi.grid)?;
        let steps = self.steps(t)?;
        let n = self.grid.n;
        let len = self.grid.len();
        let mut comps: Vec<Vec<C64>> = (0..4).map(|a| psi.data.iter().map(|v| v.0[a]).collect()).collect();
        for c in comps.iter_mut() {
            fft3(c, n, false);
        }
        for idx in 0..len {
            let p = self.grid.unindex(idx);
            let (k, _) = self.mode(p);
            let lambda = (k.iter().map(|v| v * v).sum::<f64>() + mass * mass).sqrt();
            let (a, b) = self.coefficients(lambda, t, steps, true);
            let v = Spinor([comps[0][idx], comps[1][idx], comps[2][idx], comps[3][idx]]);
            let mut bv = gamma0_apply(&v) * mass;
            for (q, kq) in k.iter().enumerate() {
                bv += alpha_apply(q, &v) * *kq;
            }
            let out = v.scale(a) + bv.scale(b);
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[idx] = out.0[c];
            }
        }
        for c in comps.iter_mut() {
            fft3(c, n, true);
        }
        let data = (0..len).map(|i| Spinor([comps[0][i], comps[1][i], comps[2][i], comps[3][i]])).collect();
        Lattice::from_vec(self.grid, data)
    }

    /// Evolves `(u, u_t)` by time `t`.
    pub fn wave(&self, u: &ScalarLattice, u_t: &ScalarLattice, t: f64) -> Result<(ScalarLattice, ScalarLattice)> {
        let mass = match self.kind {
            FlowKind::KleinGordon { mass } => mass,
            _ => return Err(Error::Config("not a wave flow".into())),
        };
        self.check_grid(&u.grid)?;
        let steps = self.steps(t)?;
        let n = self.grid.n;
        let mut uh: Vec<C64> = u.data.iter().map(|v| C64::new(*v, 0.0)).collect();
        let mut vh: Vec<C64> = u_t.data.iter().map(|v| C64::new(*v, 0.0)).collect();
        fft3(&mut uh, n, false);
        fft3(&mut vh, n, false);
        for idx in 0..self.grid.len() {
            let (_, k2) = self.mode(self.grid.unindex(idx));
            let lam2 = k2 + mass * mass;
            let (a, b) = self.coefficients(lam2.sqrt(), t, steps, false);
            let (u0, v0) = (uh[idx], vh[idx]);
            uh[idx] = a * u0 + b * v0;
            vh[idx] = -b * lam2 * u0 + a * v0;
        }
        fft3(&mut uh, n, true);
        fft3(&mut vh, n, true);
        let ul = Lattice::from_vec(self.grid, uh.iter().map(|c| c.re).collect())?;
        let vl = Lattice::from_vec(self.grid, vh.iter().map(|c| c.re).collect())?;
        Ok((ul, vl))
    }

    fn check_grid(&self, g: &GridSpec) -> Result<()> {
        if g.same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Periodic grid of side `>= n + 4` with the same spacing as a zero-pad grid.
pub fn embedding_grid(g: &GridSpec) -> Result<GridSpec> {
    let m = g.n + 4;
    GridSpec::periodic(m, m as f64 * g.h / 2.0)
}

/// Copies a zero-pad lattice into the corner of the periodic embedding.
pub fn embed<T: crate::lattice::FieldValue>(f: &Lattice<T>, target: GridSpec) -> Lattice<T> {
    let n = f.grid.n;
    let mut out = Lattice::zeros(target);
    for i in 0..n {
        for j in 0..n {
            let src = f.grid.index(i, j, 0);
            let dst = target.index(i, j, 0);
            out.data[dst..dst + n].copy_from_slice(&f.data[src..src + n]);
        }
    }
    out
}

/// Inverse of [`embed`].
pub fn restrict<T: crate::lattice::FieldValue>(f: &Lattice<T>, target: GridSpec) -> Lattice<T> {
    let n = target.n;
    let mut out = Lattice::zeros(target);
    for i in 0..n {
        for j in 0..n {
            let src = f.grid.index(i, j, 0);
            let dst = target.index(i, j, 0);
            out.data[dst..dst + n].copy_from_slice(&f.data[src..src + n]);
        }
    }
    out
}

/// `exp(-i gamma^0 M t) v`, the flow of spatially constant data.
pub fn homogeneous_dirac(v: &Spinor, mass: f64, t: f64) -> Spinor {
    let (s, c) = (mass * t).sin_cos();
    v.scale(C64::new(c, 0.0)) + gamma0_apply(v).scale(-I * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dkg_solver::{step_rk4, CaseConfig, CaseId, T0};
    use crate::lattice::FieldState;

    fn pgrid(n: usize) -> GridSpec {
        GridSpec::periodic(n, PI).unwrap()
    }

    fn packet(x: [f64; 3]) -> f64 {
        (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp() * (1.0 + 0.3 * x[0])
    }

    #[test]
    fn fft_round_trip() {
        let g = pgrid(18);
        let orig: Vec<C64> = (0..g.len()).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut d = orig.clone();
        fft3(&mut d, g.n, false);
        fft3(&mut d, g.n, true);
        let err = d.iter().zip(&orig).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn wave_single_mode() {
        let g = pgrid(20);
        let flow = FreeFlow::new(FlowKind::wave(), Symbol::Exact, g).unwrap();
        let u0 = Lattice::from_fn(g, |x| (2.0 * x[0] + x[1]).cos());
        let (u, _) = flow.wave(&u0, &Lattice::zeros(g), 1.3).unwrap();
        let k = 5f64.sqrt();
        let err = (0..g.len()).map(|i| (u.data[i] - (k * 1.3).cos() * u0.data[i]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn dirac_constant_data() {
        let g = pgrid(18);
        let v = Spinor::new([ONE, C64::new(0.2, 0.1), ZERO, C64::new(0.0, -1.0)]);
        let flow = FreeFlow::new(FlowKind::Dirac { mass: 1.0 }, Symbol::Exact, g).unwrap();
        let out = flow.dirac(&Lattice::from_fn(g, |_| v), 0.7).unwrap();
        let expect = homogeneous_dirac(&v, 1.0, 0.7);
        assert!(out.data.iter().all(|w| (*w - expect).norm() < 1e-12));
    }

    #[test]
    fn dirac_isometry() {
        let g = pgrid(24);
        let flow = FreeFlow::new(FlowKind::Dirac { mass: 1.0 }, Symbol::Exact, g).unwrap();
        let p = Spinor::new([ONE, I, C64::new(0.5, 0.0), ZERO]);
        let psi = Lattice::from_fn(g, |x| p * packet(x));
        let out = flow.dirac(&psi, 3.0).unwrap();
        assert!(((out.l2() - psi.l2()) / psi.l2()).abs() < 1e-12);
        let back = flow.dirac(&out, -3.0).unwrap();
        assert!(back.sub(&psi).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn lattice_symbol_matches_solver() {
        let g = pgrid(20);
        let dt = 0.05;
        let p = Spinor::new([ONE, C64::new(0.0, 0.4), ZERO, C64::new(0.3, 0.0)]);
        let mut s = FieldState::zeros(g, T0, CaseId::Custom);
        s.psi = Lattice::from_fn(g, |x| p * packet(x));
        s.phi = Lattice::from_fn(g, packet);
        let psi0 = s.psi.clone();
        let phi0 = s.phi.clone();
        let mut case = CaseConfig::new(CaseId::III).linear();
        case.dirac_mass = 1.0;
        for _ in 0..10 {
            s = step_rk4(&s, &case, dt).unwrap();
        }
        let dflow = FreeFlow::new(FlowKind::Dirac { mass: 1.0 }, Symbol::Lattice { dt }, g).unwrap();
        let wflow = FreeFlow::new(FlowKind::wave(), Symbol::Lattice { dt }, g).unwrap();
        let psi = dflow.dirac(&psi0, 0.5).unwrap();
        let (phi, _) = wflow.wave(&phi0, &Lattice::zeros(g), 0.5).unwrap();
        assert!(psi.sub(&s.psi).unwrap().max_norm() < 1e-12);
        assert!(phi.sub(&s.phi).unwrap().max_norm() < 1e-12);
        let back = dflow.dirac(&s.psi, -0.5).unwrap();
        assert!(back.sub(&psi0).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn embedding_round_trip() {
        let g = GridSpec::zero_pad(17, 2.0).unwrap();
        let f = Lattice::from_fn(g, packet);
        let e = embedding_grid(&g).unwrap();
        assert_eq!(e.n, 21);
        assert!((e.h - g.h).abs() < 1e-15);
        assert_eq!(restrict(&embed(&f, e), g), f);
    }
}
