//! Method-of-lines evolution of the Dirac-Klein-Gordon system
//!
//! ```text
//! -i gamma^mu d_mu psi + M psi = phi V psi,    -box phi + m^2 phi = psi* U psi
//! ```
//!
//! with fourth-order stencils in space and classical RK4 in time, plus the
//! auxiliary wave field `Psi` solving `-box Psi = i gamma^mu d_mu psi` with data
//! `(0, i gamma^0 psi)` at `t = 2`.

pub mod free_flow;
pub mod oracles;

use std::collections::VecDeque;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{gammas, Mat4, Spinor, C64, I};
use crate::error::{Error, Result};
use crate::lattice::{d1_at, laplacian_at, AuxField, FieldState, GridSpec, Lattice, ScalarLattice, SpinorLattice};
use crate::vector_fields::HistoryWindow;

pub use free_flow::{FlowKind, FreeFlow, Symbol};

/// Initial time of every evolution.
pub const T0: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    I,
    II,
    III,
    IV,
    Custom,
}

impl CaseId {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(CaseId::I),
            "II" | "2" => Ok(CaseId::II),
            "III" | "3" => Ok(CaseId::III),
            "IV" | "4" => Ok(CaseId::IV),
            other => Err(Error::Config(format!("unknown case '{other}'"))),
        }
    }

    pub fn code(self) -> u32 {
        match self {
            CaseId::I => 1,
            CaseId::II => 2,
            CaseId::III => 3,
            CaseId::IV => 4,
            CaseId::Custom => 0,
        }
    }

    pub fn from_code(c: u32) -> Result<Self> {
        match c {
            0 => Ok(CaseId::Custom),
            1 => Ok(CaseId::I),
            2 => Ok(CaseId::II),
            3 => Ok(CaseId::III),
            4 => Ok(CaseId::IV),
            _ => Err(Error::Snapshot(format!("unknown case code {c}"))),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::III => "III",
            CaseId::IV => "IV",
            CaseId::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Which parts of the system are advanced in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evolve {
    Both,
    DiracOnly,
    WaveOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseConfig {
    pub id: CaseId,
    /// Dirac mass `M`.
    pub dirac_mass: f64,
    /// Scalar mass `m`.
    pub scalar_mass: f64,
    pub v: Mat4,
    pub u: Mat4,
    /// When false both interaction terms are dropped.
    pub coupled: bool,
    pub evolve: Evolve,
}

impl CaseConfig {
    pub fn new(id: CaseId) -> Self {
        let gs = gammas();
        let i_g5 = gs.gamma5.scale(I);
        let i_g0_g5 = (gs.gamma[0] * gs.gamma5).scale(I);
        let (dirac_mass, v, u) = match id {
            CaseId::I | CaseId::Custom => (0.0, Mat4::identity(), gs.gamma[0]),
            CaseId::II => (0.0, i_g5, i_g0_g5),
            CaseId::III => (1.0, i_g5, i_g0_g5),
            CaseId::IV => (1.0, Mat4::identity(), gs.gamma[0]),
        };
        CaseConfig {
            id,
            dirac_mass,
            scalar_mass: 0.0,
            v,
            u,
            coupled: true,
            evolve: Evolve::Both,
        }
    }

    /// Free (uncoupled) evolution with the case masses.
    pub fn linear(mut self) -> Self {
        self.coupled = false;
        self
    }

    pub fn with_evolve(mut self, e: Evolve) -> Self {
        self.evolve = e;
        self
    }

    /// Reduced linear Klein-Gordon validation mode.
    pub fn klein_gordon(mass: f64) -> Self {
        let mut c = CaseConfig::new(CaseId::Custom).linear().with_evolve(Evolve::WaveOnly);
        c.scalar_mass = mass;
        c
    }

    /// Free Dirac validation mode.
    pub fn free_dirac(mass: f64) -> Self {
        let mut c = CaseConfig::new(CaseId::Custom).linear().with_evolve(Evolve::DiracOnly);
        c.dirac_mass = mass;
        c
    }

    /// Case IV runs, but its long-time behaviour is not covered by theory.
    pub fn theory_open(&self) -> bool {
        self.id == CaseId::IV
    }

    pub fn label(&self) -> String {
        if self.theory_open() {
            format!("case {} (theory-open)", self.id)
        } else {
            format!("case {}", self.id)
        }
    }

    fn psi_active(&self) -> bool {
        self.evolve != Evolve::WaveOnly
    }

    fn wave_active(&self) -> bool {
        self.evolve != Evolve::DiracOnly
    }
}

/// Smooth cutoff `exp(1 - 1/(1 - s^2))` on `|s| < 1`, equal to 1 at `s = 0`.
#[inline]
pub fn cutoff(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

#[inline]
fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Shape of the wave data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiShape {
    /// Centred bump `phi0 = eps profile`, `phi1 = eps phi1_scale profile / width`.
    Bump,
    /// Shell `phi0 = eps b(r)`, `phi1 = -eps (b / r + b')` with `b` supported in `(0, r0)`;
    /// the free wave evolution of such data is purely outgoing.
    Outgoing,
}

impl PhiShape {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bump" => Ok(PhiShape::Bump),
            "outgoing" => Ok(PhiShape::Outgoing),
            _ => Err(Error::Config(format!("unknown phi shape {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhiShape::Bump => "bump",
            PhiShape::Outgoing => "outgoing",
        }
    }
}

/// Closed-form compactly supported data of amplitude `epsilon` and radius `r0`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub epsilon: f64,
    pub r0: f64,
    /// Gaussian width; defaults to `r0 / 2`.
    pub width: f64,
    pub polarisation: Spinor,
    pub psi_scale: f64,
    pub phi0_scale: f64,
    /// Scale of `phi1 = epsilon * phi1_scale * profile / width`.
    pub phi1_scale: f64,
    pub phi_shape: PhiShape,
}

impl InitialData {
    /// Default profiles; the spinor polarisation is a seeded random unit vector.
    pub fn new(epsilon: f64, r0: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Spinor::random(&mut rng);
        let p = p.scale(C64::new(1.0 / p.norm(), 0.0));
        InitialData {
            epsilon,
            r0,
            width: 0.5 * r0,
            polarisation: p,
            psi_scale: 1.0,
            phi0_scale: 1.0,
            phi1_scale: 1.25,
            phi_shape: PhiShape::Bump,
        }
    }

    /// Radial profile `exp(-(r / width)^2) chi(r / r0)` with `chi(s) = exp(1 - 1 / (1 - s^2))`.
    pub fn profile(&self, x: [f64; 3]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let s2 = r2 / (self.r0 * self.r0);
        if s2 >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s2) - r2 / (self.width * self.width)).exp()
        }
    }

    pub fn with_width(mut self, width: f64) -> Self {
        self.width = width;
        self
    }

    pub fn psi0(&self, x: [f64; 3]) -> Spinor {
        self.polarisation * (self.epsilon * self.psi_scale * self.profile(x))
    }

    pub fn with_phi_shape(mut self, shape: PhiShape) -> Self {
        self.phi_shape = shape;
        self
    }

    /// Shell `b(r) = exp(-(2 (r - c) / c)^2) chi((r - c) / c)` with `c = r0 / 2`, and `b'(r)`.
    pub fn shell(&self, r: f64) -> (f64, f64) {
        let c = 0.5 * self.r0;
        let w2 = 0.25 * c * c;
        let d = r - c;
        let u = d / c;
        if u * u >= 1.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - u * u;
        let b = (1.0 - 1.0 / q - d * d / w2).exp();
        let db = b * (-2.0 * d / w2 - 2.0 * u / (c * q * q));
        (b, db)
    }

    pub fn phi0(&self, x: [f64; 3]) -> f64 {
        match self.phi_shape {
            PhiShape::Bump => self.epsilon * self.phi0_scale * self.profile(x),
            PhiShape::Outgoing => self.epsilon * self.phi0_scale * self.shell(norm3(x)).0,
        }
    }

    pub fn phi1(&self, x: [f64; 3]) -> f64 {
        match self.phi_shape {
            PhiShape::Bump => self.epsilon * self.phi1_scale * self.profile(x) / self.width,
            PhiShape::Outgoing => {
                let r = norm3(x);
                let (b, db) = self.shell(r);
                if b == 0.0 {
                    0.0
                } else {
                    -self.epsilon * self.phi0_scale * (b / r + db)
                }
            }
        }
    }

    /// Support lies in `{r + 1 <= t}` at `t = 2`.
    pub fn supported_in_cone(&self) -> bool {
        self.r0 <= 1.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        InitialData {
            epsilon: self.epsilon * factor,
            ..self.clone()
        }
    }

    /// Samples the data at `t = 2`; the auxiliary field is attached on request.
    pub fn to_state(&self, grid: GridSpec, case: &CaseConfig, with_aux: bool) -> FieldState {
        let gs = gammas();
        let psi = Lattice::from_fn(grid, |x| self.psi0(x));
        let aux = with_aux.then(|| AuxField {
            big_psi: Lattice::zeros(grid),
            big_psi_t: psi.map(|v| gs.gamma[0].apply(v).scale(I)),
        });
        FieldState {
            t: T0,
            grid,
            case: case.id,
            psi,
            phi: Lattice::from_fn(grid, |x| self.phi0(x)),
            phi_t: Lattice::from_fn(grid, |x| self.phi1(x)),
            aux,
        }
    }
}

/// `gamma^0 gamma^a v` for a = 0..2 with the block structure unrolled.
#[inline(always)]
pub fn alpha_apply(a: usize, v: &Spinor) -> Spinor {
    let [v0, v1, v2, v3] = v.0;
    match a {
        0 => Spinor([v3, v2, v1, v0]),
        1 => Spinor([-I * v3, I * v2, -I * v1, I * v0]),
        _ => Spinor([v2, -v3, v0, -v1]),
    }
}

/// `gamma^0 v`.
#[inline(always)]
pub fn gamma0_apply(v: &Spinor) -> Spinor {
    Spinor([v.0[0], v.0[1], -v.0[2], -v.0[3]])
}

/// Precomputed matrices of one case.
#[derive(Clone, Debug)]
struct Kernel {
    grid: GridSpec,
    mass: f64,
    m2: f64,
    /// `i gamma^0 V`.
    ig0v: Mat4,
    v: Mat4,
    u: Mat4,
    coupled: bool,
    psi_active: bool,
    wave_active: bool,
}

impl Kernel {
    fn new(grid: GridSpec, case: &CaseConfig) -> Self {
        let gs = gammas();
        Kernel {
            grid,
            mass: case.dirac_mass,
            m2: case.scalar_mass * case.scalar_mass,
            ig0v: (gs.gamma[0] * case.v).scale(I),
            v: case.v,
            u: case.u,
            coupled: case.coupled,
            psi_active: case.psi_active(),
            wave_active: case.wave_active(),
        }
    }

    /// `d_t psi = i gamma^0 (phi V psi - M psi) - gamma^0 gamma^a d_a psi`.
    #[inline(always)]
    fn dirac_rate(&self, psi: &[Spinor], phi: &[f64], idx: usize) -> Spinor {
        let g = &self.grid;
        let mut out = -(alpha_apply(0, &d1_at(psi, g, idx, 0)) + alpha_apply(1, &d1_at(psi, g, idx, 1)) + alpha_apply(2, &d1_at(psi, g, idx, 2)));
        let p = psi[idx];
        if self.mass != 0.0 {
            out += gamma0_apply(&p).scale(C64::new(0.0, -self.mass));
        }
        if self.coupled {
            out += self.ig0v.apply(&p) * phi[idx];
        }
        out
    }

    /// Real part of `psi* U psi` and the magnitude of its imaginary part.
    #[inline(always)]
    fn source(&self, p: &Spinor) -> (f64, f64) {
        let s = p.dot(&self.u.apply(p));
        (s.re, s.im.abs())
    }
}

/// Time derivatives of all evolved components.
#[derive(Clone, Debug)]
struct Rates {
    psi: Option<Vec<Spinor>>,
    phi: Option<Vec<f64>>,
    phi_t: Option<Vec<f64>>,
    aux: Option<(Vec<Spinor>, Vec<Spinor>)>,
    max_imag: f64,
}

fn rates(k: &Kernel, s: &FieldState) -> Rates {
    let g = k.grid;
    let n2 = g.n * g.n;
    let psi = &s.psi.data;
    let phi = &s.phi.data;
    let psi_rate = k.psi_active.then(|| {
        let mut out = vec![Spinor::zero(); g.len()];
        out.par_chunks_mut(n2).enumerate().for_each(|(i, slab)| {
            for (q, o) in slab.iter_mut().enumerate() {
                *o = k.dirac_rate(psi, phi, i * n2 + q);
            }
        });
        out
    });
    let mut max_imag = 0.0f64;
    let (phi_rate, phi_t_rate) = if k.wave_active {
        let mut acc = vec![0.0; g.len()];
        let imags: Vec<f64> = acc
            .par_chunks_mut(n2)
            .enumerate()
            .map(|(i, slab)| {
                let mut im = 0.0f64;
                for (q, o) in slab.iter_mut().enumerate() {
                    let idx = i * n2 + q;
                    let mut v = laplacian_at(phi, &g, idx) - k.m2 * phi[idx];
                    if k.coupled {
                        let (re, imag) = k.source(&psi[idx]);
                        v += re;
                        im = im.max(imag);
                    }
                    *o = v;
                }
                im
            })
            .collect();
        max_imag = imags.into_iter().fold(0.0, f64::max);
        (Some(s.phi_t.data.clone()), Some(acc))
    } else {
        (None, None)
    };
    let aux = s.aux.as_ref().map(|a| {
        let bp = &a.big_psi.data;
        let mut tt = vec![Spinor::zero(); g.len()];
        tt.par_chunks_mut(n2).enumerate().for_each(|(i, slab)| {
            for (q, o) in slab.iter_mut().enumerate() {
                let idx = i * n2 + q;
                let mut v = laplacian_at(bp, &g, idx) + psi[idx] * k.mass;
                if k.coupled {
                    v -= k.v.apply(&psi[idx]) * phi[idx];
                }
                *o = v;
            }
        });
        (a.big_psi_t.data.clone(), tt)
    });
    Rates {
        psi: psi_rate,
        phi: phi_rate,
        phi_t: phi_t_rate,
        aux,
        max_imag,
    }
}

fn axpy_vec<T: crate::lattice::FieldValue>(y: &[T], k: &[T], a: f64) -> Vec<T> {
    y.par_iter().zip(k.par_iter()).map(|(y, k)| *y + *k * a).collect()
}

fn acc_vec<T: crate::lattice::FieldValue>(acc: &mut [T], k: &[T], a: f64) {
    acc.par_iter_mut().zip(k.par_iter()).for_each(|(s, k)| *s += *k * a);
}

/// `y + a k`.
fn shifted(y: &FieldState, r: &Rates, a: f64) -> FieldState {
    let mut out = y.clone();
    if let Some(k) = &r.psi {
        out.psi.data = axpy_vec(&y.psi.data, k, a);
    }
    if let Some(k) = &r.phi {
        out.phi.data = axpy_vec(&y.phi.data, k, a);
    }
    if let Some(k) = &r.phi_t {
        out.phi_t.data = axpy_vec(&y.phi_t.data, k, a);
    }
    if let (Some((k1, k2)), Some(aux)) = (&r.aux, out.aux.as_mut()) {
        let ya = y.aux.as_ref().expect("aux present");
        aux.big_psi.data = axpy_vec(&ya.big_psi.data, k1, a);
        aux.big_psi_t.data = axpy_vec(&ya.big_psi_t.data, k2, a);
    }
    out.t = y.t + a;
    out
}

fn accumulate(acc: &mut FieldState, r: &Rates, a: f64) {
    if let Some(k) = &r.psi {
        acc_vec(&mut acc.psi.data, k, a);
    }
    if let Some(k) = &r.phi {
        acc_vec(&mut acc.phi.data, k, a);
    }
    if let Some(k) = &r.phi_t {
        acc_vec(&mut acc.phi_t.data, k, a);
    }
    if let (Some((k1, k2)), Some(aux)) = (&r.aux, acc.aux.as_mut()) {
        acc_vec(&mut aux.big_psi.data, k1, a);
        acc_vec(&mut aux.big_psi_t.data, k2, a);
    }
}

/// Tolerance on `|Im psi* U psi|` relative to `|psi|^2`.
pub const NONREAL_TOLERANCE: f64 = 1e-12;

/// One classical RK4 step.
pub fn step_rk4(state: &FieldState, case: &CaseConfig, dt: f64) -> Result<FieldState> {
    let k = Kernel::new(state.grid, case);
    step_with_kernel(&k, state, dt)
}

fn check_imag(r: &Rates, scale: f64) -> Result<()> {
    if r.max_imag > NONREAL_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonRealSource(r.max_imag));
    }
    Ok(())
}

fn step_with_kernel(k: &Kernel, y: &FieldState, dt: f64) -> Result<FieldState> {
    let psi_scale = if k.coupled && k.wave_active {
        let m = y.psi.max_norm();
        m * m
    } else {
        0.0
    };
    let k1 = rates(k, y);
    check_imag(&k1, psi_scale)?;
    let mut acc = shifted(y, &k1, dt / 6.0);
    let y2 = shifted(y, &k1, dt / 2.0);
    drop(k1);
    let k2 = rates(k, &y2);
    accumulate(&mut acc, &k2, dt / 3.0);
    let y3 = shifted(y, &k2, dt / 2.0);
    drop(k2);
    let k3 = rates(k, &y3);
    accumulate(&mut acc, &k3, dt / 3.0);
    let y4 = shifted(y, &k3, dt);
    drop(k3);
    let k4 = rates(k, &y4);
    accumulate(&mut acc, &k4, dt / 6.0);
    acc.t = y.t + dt;
    Ok(acc)
}

/// `d_t psi` of the current state.
pub fn dirac_dt(state: &FieldState, case: &CaseConfig) -> SpinorLattice {
    let k = Kernel::new(state.grid, case);
    let g = state.grid;
    Lattice::from_index_fn(g, |idx| k.dirac_rate(&state.psi.data, &state.phi.data, idx))
}

/// `(d_t phi, d_t phi_t)`; fails when `psi* U psi` has a non-negligible imaginary part.
pub fn wave_dt(state: &FieldState, case: &CaseConfig) -> Result<(ScalarLattice, ScalarLattice)> {
    let k = Kernel::new(state.grid, case);
    let g = state.grid;
    let mut imag = 0.0f64;
    let mut tt = Lattice::zeros(g);
    let mut scale = 0.0f64;
    for idx in 0..g.len() {
        let mut v = laplacian_at(&state.phi.data, &g, idx) - k.m2 * state.phi.data[idx];
        if k.coupled {
            let (re, im) = k.source(&state.psi.data[idx]);
            v += re;
            imag = imag.max(im);
            scale = scale.max(state.psi.data[idx].norm_sqr());
        }
        tt.data[idx] = v;
    }
    if imag > NONREAL_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonRealSource(imag));
    }
    Ok((state.phi_t.clone(), tt))
}

/// Evolution parameters.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    pub case: CaseConfig,
    pub data: InitialData,
    pub delta: f64,
    /// Steps between outputs.
    pub cadence: usize,
    pub seed: u64,
    /// Co-evolve the auxiliary field.
    pub aux: bool,
    /// Half-width of the history windows handed to observers.
    pub window_half: usize,
    /// Directory for diagnostic snapshots on failure.
    pub diagnostic_dir: Option<std::path::PathBuf>,
    /// Relative pad-zone threshold of the contamination check (zero-pad mode).
    pub contamination_tolerance: f64,
}

impl RunConfig {
    pub fn steps(&self) -> usize {
        ((self.t_end - T0) / self.dt).round() as usize
    }

    /// CFL and light-cone containment.
    pub fn validate(&self) -> Result<()> {
        let h = self.grid.h;
        if self.dt > 0.5 * h + 1e-15 {
            return Err(Error::Cfl { dt: self.dt, limit: 0.5 * h });
        }
        if self.grid.boundary == crate::lattice::BoundaryMode::ZeroPad {
            let extra = self.window_half as f64 * self.dt;
            let required = self.data.r0 + (self.t_end + extra - T0) + 4.0 * h;
            if self.grid.half_width < required {
                return Err(Error::Containment {
                    l: self.grid.half_width,
                    required,
                });
            }
        }
        Ok(())
    }
}

/// Slices handed to observers: `2 * half + 1` states centred at an output step.
#[derive(Clone, Debug)]
pub struct StateWindow {
    pub states: Vec<FieldState>,
    pub dt: f64,
    pub step: usize,
}

impl StateWindow {
    pub fn center(&self) -> &FieldState {
        &self.states[self.states.len() / 2]
    }

    pub fn t(&self) -> f64 {
        self.center().t
    }

    pub fn half(&self) -> usize {
        self.states.len() / 2
    }

    pub fn psi(&self) -> HistoryWindow<Spinor> {
        HistoryWindow {
            levels: self.states.iter().map(|s| s.psi.clone()).collect(),
            dt: self.dt,
            t_center: self.t(),
        }
    }

    pub fn phi(&self) -> HistoryWindow<f64> {
        HistoryWindow {
            levels: self.states.iter().map(|s| s.phi.clone()).collect(),
            dt: self.dt,
            t_center: self.t(),
        }
    }

    pub fn big_psi(&self) -> Option<HistoryWindow<Spinor>> {
        let levels: Option<Vec<_>> = self.states.iter().map(|s| s.aux.as_ref().map(|a| a.big_psi.clone())).collect();
        levels.map(|levels| HistoryWindow {
            levels,
            dt: self.dt,
            t_center: self.t(),
        })
    }

    pub fn sub(&self, half: usize) -> StateWindow {
        let c = self.half();
        StateWindow {
            states: self.states[c - half..=c + half].to_vec(),
            dt: self.dt,
            step: self.step,
        }
    }
}

/// Receives every step and every complete output window.
pub trait Observer {
    fn on_step(&mut self, _state: &FieldState, _dt: f64) -> Result<()> {
        Ok(())
    }
    fn on_window(&mut self, _window: &StateWindow) -> Result<()> {
        Ok(())
    }
}

impl Observer for () {}

/// Collects the centre state of every output window.
#[derive(Default)]
pub struct StateRecorder {
    pub states: Vec<FieldState>,
}

impl Observer for StateRecorder {
    fn on_window(&mut self, w: &StateWindow) -> Result<()> {
        self.states.push(w.center().clone());
        Ok(())
    }
}

/// Forwards to several observers.
pub struct Fanout<'a>(pub Vec<&'a mut dyn Observer>);

impl Observer for Fanout<'_> {
    fn on_step(&mut self, s: &FieldState, dt: f64) -> Result<()> {
        for o in self.0.iter_mut() {
            o.on_step(s, dt)?;
        }
        Ok(())
    }
    fn on_window(&mut self, w: &StateWindow) -> Result<()> {
        for o in self.0.iter_mut() {
            o.on_window(w)?;
        }
        Ok(())
    }
}

/// Outcome of a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub outputs: usize,
    pub t_final: f64,
    pub max_pad_ratio: f64,
    pub label: String,
}

/// Output steps: `half + j * cadence` up to the final step.
pub fn output_steps(total: usize, half: usize, cadence: usize) -> Vec<usize> {
    let cadence = cadence.max(1);
    let mut v = Vec::new();
    let mut s = half;
    while s <= total {
        v.push(s);
        s += cadence;
    }
    v
}

/// Evolves from `t = 2` to `t_end`, streaming steps and output windows to the observer.
///
/// The window of the output at step `s` spans steps `s - half ..= s + half`, so
/// the run advances `half` extra steps past `t_end`.
pub fn run(cfg: &RunConfig, observer: &mut dyn Observer) -> Result<RunSummary> {
    cfg.validate()?;
    let state = cfg.data.to_state(cfg.grid, &cfg.case, cfg.aux);
    run_from(cfg, state, observer)
}

pub fn run_from(cfg: &RunConfig, initial: FieldState, observer: &mut dyn Observer) -> Result<RunSummary> {
    let kernel = Kernel::new(cfg.grid, &cfg.case);
    let total = cfg.steps();
    let half = cfg.window_half;
    let outputs = output_steps(total, half, cfg.cadence);
    let mut buffer: VecDeque<FieldState> = VecDeque::with_capacity(2 * half + 2);
    let mut state = initial;
    let mut next_out = 0usize;
    let mut max_pad_ratio = 0.0f64;
    observer.on_step(&state, cfg.dt)?;
    buffer.push_back(state.clone());
    if half == 0 && outputs.first() == Some(&0) {
        observer.on_window(&StateWindow {
            states: vec![state.clone()],
            dt: cfg.dt,
            step: 0,
        })?;
        next_out = 1;
    }
    let last_needed = outputs.last().map(|s| s + half).unwrap_or(total).max(total);
    for step in 1..=last_needed {
        state = step_with_kernel(&kernel, &state, cfg.dt)?;
        state.t = T0 + step as f64 * cfg.dt;
        check_state(cfg, &state, &mut max_pad_ratio)?;
        if step <= total {
            observer.on_step(&state, cfg.dt)?;
        }
        buffer.push_back(state.clone());
        if buffer.len() > 2 * half + 1 {
            buffer.pop_front();
        }
        while next_out < outputs.len() && outputs[next_out] + half == step {
            let w = StateWindow {
                states: buffer.iter().cloned().collect(),
                dt: cfg.dt,
                step: outputs[next_out],
            };
            observer.on_window(&w)?;
            next_out += 1;
        }
    }
    Ok(RunSummary {
        steps: total,
        outputs: next_out,
        t_final: T0 + total as f64 * cfg.dt,
        max_pad_ratio,
        label: cfg.case.label(),
    })
}

fn check_state(cfg: &RunConfig, state: &FieldState, max_pad_ratio: &mut f64) -> Result<()> {
    let fields: [(&'static str, bool); 3] = [("psi", state.psi.is_finite()), ("phi", state.phi.is_finite()), ("phi_t", state.phi_t.is_finite())];
    for (name, ok) in fields {
        if !ok {
            let snapshot = match &cfg.diagnostic_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    let p = dir.join(format!("diagnostic_t{:.4}", state.t));
                    crate::snapshot::write_state(&p, state)?;
                    p.display().to_string()
                }
                None => "none".into(),
            };
            return Err(Error::NonFinite {
                field: name,
                t: state.t,
                snapshot,
            });
        }
    }
    if cfg.grid.boundary == crate::lattice::BoundaryMode::ZeroPad {
        let ratio = |m: f64, p: f64| if m > 0.0 { p / m } else { 0.0 };
        let r1 = ratio(state.psi.max_norm(), state.psi.pad_max());
        let r2 = ratio(state.phi.max_norm(), state.phi.pad_max());
        let r = r1.max(r2);
        *max_pad_ratio = max_pad_ratio.max(r);
        if r > cfg.contamination_tolerance {
            return Err(Error::BoundaryContamination { t: state.t, value: r });
        }
    }
    Ok(())
}

/// Builds a run configuration with the conventional defaults.
#[allow(clippy::too_many_arguments)]
pub fn standard_run(case: CaseConfig, n: usize, half_width: f64, dt: f64, t_end: f64, epsilon: f64, r0: f64, seed: u64) -> Result<RunConfig> {
    let grid = GridSpec::zero_pad(n, half_width)?;
    Ok(RunConfig {
        grid,
        dt,
        t_end,
        case,
        data: InitialData::new(epsilon, r0, seed),
        delta: 0.05,
        cadence: 1,
        seed,
        aux: false,
        window_half: 2,
        diagnostic_dir: None,
        contamination_tolerance: 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{ONE, ZERO};
    use crate::lattice::BoundaryMode;

    fn homogeneous_state(grid: GridSpec, psi0: Spinor) -> FieldState {
        let mut s = FieldState::zeros(grid, T0, CaseId::Custom);
        s.psi = Lattice::from_fn(grid, |_| psi0);
        s
    }

    #[test]
    fn case_matrices() {
        let gs = gammas();
        let c1 = CaseConfig::new(CaseId::I);
        assert_eq!((c1.dirac_mass, c1.scalar_mass), (0.0, 0.0));
        assert_eq!(c1.u, gs.gamma[0]);
        let c3 = CaseConfig::new(CaseId::III);
        assert_eq!(c3.dirac_mass, 1.0);
        assert_eq!(c3.u, gs.upsilon);
        assert!(CaseConfig::new(CaseId::IV).theory_open());
        assert!(CaseConfig::new(CaseId::IV).label().contains("theory-open"));
    }

    #[test]
    fn constant_spinor_rate() {
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let p = Spinor::new([ONE, C64::new(0.0, 2.0), C64::new(-1.0, 0.5), ONE]);
        let s = homogeneous_state(g, p);
        let d = dirac_dt(&s, &CaseConfig::free_dirac(1.0));
        let expect = gammas().gamma[0].apply(&p).scale(-I);
        assert!(d.data.iter().all(|v| (*v - expect).norm() < 1e-12));
        let z = FieldState::zeros(g, T0, CaseId::I);
        assert_eq!(dirac_dt(&z, &CaseConfig::new(CaseId::I)).max_norm(), 0.0);
    }

    #[test]
    fn alpha_unrolled_matches_matrices() {
        let gs = gammas();
        let v = Spinor::new([ONE, C64::new(0.3, -1.0), C64::new(0.0, 2.0), C64::new(-0.7, 0.1)]);
        for a in 0..3 {
            assert!((alpha_apply(a, &v) - gs.alpha[a].apply(&v)).norm() < 1e-15);
        }
        assert!((gamma0_apply(&v) - gs.gamma[0].apply(&v)).norm() < 1e-15);
    }

    #[test]
    fn sources_by_hand() {
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let e1 = Spinor::from_real([1.0, 0.0, 0.0, 0.0]);
        let mut s = homogeneous_state(g, e1);
        s.case = CaseId::I;
        let (_, tt) = wave_dt(&s, &CaseConfig::new(CaseId::I)).unwrap();
        assert!(tt.data.iter().all(|v| (v - 1.0).abs() < 1e-12));
        // Upsilon = -g1 g2 g3 maps e1 to -i e3, so e1* Upsilon e1 = 0.
        let (_, tt) = wave_dt(&s, &CaseConfig::new(CaseId::III)).unwrap();
        assert!(tt.data.iter().all(|v| v.abs() < 1e-12));
        let mix = Spinor::from_real([1.0, 0.0, 1.0, 0.0]);
        let s = homogeneous_state(g, mix);
        let (_, tt) = wave_dt(&s, &CaseConfig::new(CaseId::III)).unwrap();
        let expect = mix.dot(&gammas().upsilon.apply(&mix)).re;
        assert!(tt.data.iter().all(|v| (v - expect).abs() < 1e-12));
    }

    #[test]
    fn nonreal_source_is_rejected() {
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let mut case = CaseConfig::new(CaseId::I);
        case.u = gammas().gamma[1];
        let s = homogeneous_state(g, Spinor::new([ONE, ZERO, ZERO, I]));
        assert!(matches!(wave_dt(&s, &case), Err(Error::NonRealSource(_))));
    }

    #[test]
    fn homogeneous_dirac_rk4_fourth_order() {
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let p = Spinor::new([ONE, C64::new(0.0, 1.0), C64::new(0.5, 0.0), ONE]);
        let case = CaseConfig::free_dirac(1.0);
        let err = |dt: f64| {
            let mut s = homogeneous_state(g, p);
            let n = (2.0 / dt).round() as usize;
            for _ in 0..n {
                s = step_rk4(&s, &case, dt).unwrap();
            }
            let t: f64 = 2.0;
            let exact = p.scale(C64::new(t.cos(), 0.0)) + gammas().gamma[0].apply(&p).scale(C64::new(0.0, -t.sin()));
            s.psi.data.iter().map(|v| (*v - exact).norm()).fold(0.0, f64::max)
        };
        let ratio = err(0.2) / err(0.1);
        assert!((12.0..20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = GridSpec::zero_pad(17, 4.0).unwrap();
        let mut cfg = standard_run(CaseConfig::new(CaseId::III), 17, 4.0, 0.1, 2.5, 0.0, 0.8, 1).unwrap();
        cfg.aux = true;
        let mut rec = StateRecorder::default();
        run(&cfg, &mut rec).unwrap();
        assert_eq!(g, cfg.grid);
        for s in &rec.states {
            assert_eq!(s.psi.max_norm(), 0.0);
            assert_eq!(s.phi.max_norm(), 0.0);
        }
    }

    #[test]
    fn containment_and_cfl_checked() {
        let cfg = standard_run(CaseConfig::new(CaseId::I), 17, 2.0, 0.1, 10.0, 1e-3, 0.8, 1).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Containment { .. })));
        let cfg = standard_run(CaseConfig::new(CaseId::I), 17, 2.0, 1.0, 2.5, 1e-3, 0.8, 1).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Cfl { .. })));
    }

    #[test]
    fn output_step_layout() {
        assert_eq!(output_steps(10, 2, 4), vec![2, 6, 10]);
        assert_eq!(output_steps(3, 0, 1), vec![0, 1, 2, 3]);
    }

    #[test]
    fn kg_plane_wave_periodic() {
        let g = GridSpec::new(32, std::f64::consts::PI, BoundaryMode::Periodic).unwrap();
        let mut s = FieldState::zeros(g, T0, CaseId::Custom);
        let om = 2f64.sqrt();
        s.phi = Lattice::from_fn(g, |x| x[0].cos());
        let case = CaseConfig::klein_gordon(1.0);
        let dt = 0.02;
        for _ in 0..50 {
            s = step_rk4(&s, &case, dt).unwrap();
        }
        let err = s.phi.data.iter().enumerate().map(|(i, v)| (v - g.position(i)[0].cos() * (om * 1.0).cos()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn outgoing_shell_data() {
        let d = InitialData::new(1.0, 4.0, 1).with_width(1.0).with_phi_shape(PhiShape::Outgoing);
        assert_eq!(d.phi0([0.0; 3]), 0.0);
        assert_eq!(d.phi0([4.0, 0.0, 0.0]), 0.0);
        let rb = |r: f64| r * d.phi0([r, 0.0, 0.0]);
        for r in [0.7, 1.5, 2.0, 2.9, 3.6] {
            let e = 1e-5;
            let fd = -(rb(r + e) - rb(r - e)) / (2.0 * e) / r;
            assert!((d.phi1([0.0, r, 0.0]) - fd).abs() < 1e-8, "{r}");
        }
        assert_eq!(PhiShape::parse(PhiShape::Outgoing.name()).unwrap(), PhiShape::Outgoing);
    }
}
