//! Vector fields, null forms and composite operators on windows of history.
//!
//! Time derivatives come from fourth-order centered stencils over a window of
//! equally spaced levels. Each first-order operator applied to a window
//! consumes two levels on each side, so `Z^I` with `|I| = k` needs `4k + 1`
//! levels to produce one slice.

use crate::clifford::{gammas, Mat4, Spinor, C64, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::lattice::{d1_at, laplacian_at, max_fn, omega_at, poly_bump, FieldValue, GridSpec, Lattice};
use crate::report::IdentityReport;

/// First-order operators. Spatial indices run over 1..=3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldOp {
    /// `d_mu`, mu in 0..=3.
    D(usize),
    /// `S = t d_t + x^a d_a`.
    S,
    /// `H_a = x_a d_t + t d_a`.
    H(usize),
    /// `Omega_ab = x_a d_b - x_b d_a`.
    Omega(usize, usize),
    /// `H_a - 1/2 gamma^0 gamma^a`.
    HHat(usize),
    /// `Omega_ab - 1/2 gamma^a gamma^b`.
    OmegaHat(usize, usize),
    /// `G_a = d_a + omega_a d_t`.
    G(usize),
}

impl FieldOp {
    pub fn validate(&self) -> Result<()> {
        let spatial = |a: usize| (1..=3).contains(&a);
        let ok = match *self {
            FieldOp::D(mu) => mu <= 3,
            FieldOp::S => true,
            FieldOp::H(a) | FieldOp::HHat(a) | FieldOp::G(a) => spatial(a),
            FieldOp::Omega(a, b) | FieldOp::OmegaHat(a, b) => spatial(a) && spatial(b) && a != b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGrid(format!("invalid operator indices {self:?}")))
        }
    }

    pub fn name(&self) -> String {
        match *self {
            FieldOp::D(mu) => format!("d{mu}"),
            FieldOp::S => "S".into(),
            FieldOp::H(a) => format!("H{a}"),
            FieldOp::Omega(a, b) => format!("Omega{a}{b}"),
            FieldOp::HHat(a) => format!("Hhat{a}"),
            FieldOp::OmegaHat(a, b) => format!("Omegahat{a}{b}"),
            FieldOp::G(a) => format!("G{a}"),
        }
    }

    /// Matrix of the spin correction term, if any.
    fn correction(&self) -> Option<Mat4> {
        let gs = gammas();
        match *self {
            FieldOp::HHat(a) => Some(gs.alpha[a - 1].scale(C64::new(-0.5, 0.0))),
            FieldOp::OmegaHat(a, b) => Some((gs.gamma[a] * gs.gamma[b]).scale(C64::new(-0.5, 0.0))),
            _ => None,
        }
    }

    /// The boosts, rotations and translations `{d, H, Omega}`.
    pub fn z_family() -> Vec<FieldOp> {
        let mut v: Vec<FieldOp> = (0..4).map(FieldOp::D).collect();
        v.extend((1..=3).map(FieldOp::H));
        v.extend([FieldOp::Omega(1, 2), FieldOp::Omega(1, 3), FieldOp::Omega(2, 3)]);
        v
    }

    /// `{d, H, Omega, S}`.
    pub fn gamma_family() -> Vec<FieldOp> {
        let mut v = Self::z_family();
        v.push(FieldOp::S);
        v
    }

    /// `{d, Hhat, Omegahat}`.
    pub fn z_hat_family() -> Vec<FieldOp> {
        let mut v: Vec<FieldOp> = (0..4).map(FieldOp::D).collect();
        v.extend((1..=3).map(FieldOp::HHat));
        v.extend([FieldOp::OmegaHat(1, 2), FieldOp::OmegaHat(1, 3), FieldOp::OmegaHat(2, 3)]);
        v
    }

    /// `{d, Hhat, Omegahat, S}`.
    pub fn gamma_hat_family() -> Vec<FieldOp> {
        let mut v = Self::z_hat_family();
        v.push(FieldOp::S);
        v
    }
}

/// Consecutive slices at uniform spacing, centred at `t_center`.
#[derive(Clone, Debug)]
pub struct HistoryWindow<T> {
    pub levels: Vec<Lattice<T>>,
    pub dt: f64,
    pub t_center: f64,
}

impl<T: FieldValue> HistoryWindow<T> {
    pub fn new(levels: Vec<Lattice<T>>, dt: f64, t_center: f64) -> Result<Self> {
        if levels.is_empty() || levels.len() % 2 == 0 {
            return Err(Error::WindowTooShort {
                need: 1,
                have: levels.len(),
            });
        }
        let g = levels[0].grid;
        if levels.iter().any(|l| !l.grid.same_as(&g)) {
            return Err(Error::GridMismatch);
        }
        Ok(HistoryWindow { levels, dt, t_center })
    }

    /// Samples `f(t, x)` at `2 * half + 1` levels.
    pub fn from_fn<F>(grid: GridSpec, t_center: f64, dt: f64, half: usize, f: F) -> Self
    where
        F: Fn(f64, [f64; 3]) -> T + Sync,
    {
        let levels = (0..2 * half + 1)
            .map(|l| {
                let t = t_center + (l as f64 - half as f64) * dt;
                Lattice::from_fn(grid, |x| f(t, x))
            })
            .collect();
        HistoryWindow { levels, dt, t_center }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn half(&self) -> usize {
        (self.levels.len() - 1) / 2
    }

    pub fn grid(&self) -> GridSpec {
        self.levels[0].grid
    }

    pub fn center(&self) -> &Lattice<T> {
        &self.levels[self.half()]
    }

    pub fn time_at(&self, level: usize) -> f64 {
        self.t_center + (level as f64 - self.half() as f64) * self.dt
    }

    pub fn require(&self, need: usize) -> Result<()> {
        if self.levels.len() < need {
            Err(Error::WindowTooShort {
                need,
                have: self.levels.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Fourth-order `d_t` at node `idx` of level `l` (needs `2 <= l < len - 2`).
    #[inline]
    pub fn dt1_at(&self, l: usize, idx: usize) -> T {
        let f = |q: usize| self.levels[q].data[idx];
        (f(l - 2) - f(l + 2) + (f(l + 1) - f(l - 1)) * 8.0) * (1.0 / (12.0 * self.dt))
    }

    #[inline]
    pub fn dt2_at(&self, l: usize, idx: usize) -> T {
        let f = |q: usize| self.levels[q].data[idx];
        ((f(l - 1) + f(l + 1)) * 16.0 - (f(l - 2) + f(l + 2)) - f(l) * 30.0) * (1.0 / (12.0 * self.dt * self.dt))
    }

    /// `d_t^order` at the centre slice.
    pub fn time_derivative(&self, order: u8) -> Result<Lattice<T>> {
        self.require(5)?;
        let l = self.half();
        let g = self.grid();
        Ok(match order {
            1 => Lattice::from_index_fn(g, |i| self.dt1_at(l, i)),
            2 => Lattice::from_index_fn(g, |i| self.dt2_at(l, i)),
            _ => panic!("time derivative order must be 1 or 2"),
        })
    }

    /// `[d_0, d_1, d_2, d_3]` at the centre slice.
    pub fn gradient(&self) -> Result<[Lattice<T>; 4]> {
        let dt = self.time_derivative(1)?;
        let c = self.center();
        Ok([dt, c.dx(1, 1), c.dx(2, 1), c.dx(3, 1)])
    }

    /// Level-wise pointwise map.
    pub fn map<U: FieldValue, F>(&self, f: F) -> HistoryWindow<U>
    where
        F: Fn(&T) -> U + Sync,
    {
        HistoryWindow {
            levels: self.levels.iter().map(|l| l.map(&f)).collect(),
            dt: self.dt,
            t_center: self.t_center,
        }
    }

    /// Level-wise map that also sees the level time and node index.
    pub fn map_indexed<U: FieldValue, F>(&self, f: F) -> HistoryWindow<U>
    where
        F: Fn(f64, usize, &T) -> U + Sync,
    {
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(q, lat)| {
                let t = self.time_at(q);
                Lattice::from_index_fn(lat.grid, |i| f(t, i, &lat.data[i]))
            })
            .collect();
        HistoryWindow {
            levels,
            dt: self.dt,
            t_center: self.t_center,
        }
    }

    /// Central sub-window with `2 * half + 1` levels.
    pub fn sub_window(&self, half: usize) -> Result<HistoryWindow<T>> {
        self.require(2 * half + 1)?;
        let c = self.half();
        Ok(HistoryWindow {
            levels: self.levels[c - half..=c + half].to_vec(),
            dt: self.dt,
            t_center: self.t_center,
        })
    }

    /// Applies a level operator `f(window, level)` to every level that has
    /// two neighbours on each side.
    pub fn derive_window<U: FieldValue, F>(&self, f: F) -> Result<HistoryWindow<U>>
    where
        F: Fn(&HistoryWindow<T>, usize) -> Lattice<U>,
    {
        self.require(5)?;
        let levels = (2..self.levels.len() - 2).map(|l| f(self, l)).collect();
        Ok(HistoryWindow {
            levels,
            dt: self.dt,
            t_center: self.t_center,
        })
    }
}

/// Evaluates a first-order operator on level `l` of a window.
pub fn apply_level<T: FieldValue>(op: FieldOp, w: &HistoryWindow<T>, l: usize) -> Lattice<T> {
    let lat = &w.levels[l];
    let g = lat.grid;
    let t = w.time_at(l);
    let corr = op.correction();
    Lattice::from_index_fn(g, |idx| {
        let x = g.position(idx);
        let sp = |a: usize| d1_at(&lat.data, &g, idx, a - 1);
        let mut v = match op {
            FieldOp::D(0) => w.dt1_at(l, idx),
            FieldOp::D(a) => sp(a),
            FieldOp::S => w.dt1_at(l, idx) * t + sp(1) * x[0] + sp(2) * x[1] + sp(3) * x[2],
            FieldOp::H(a) | FieldOp::HHat(a) => w.dt1_at(l, idx) * x[a - 1] + sp(a) * t,
            FieldOp::Omega(a, b) | FieldOp::OmegaHat(a, b) => sp(b) * x[a - 1] - sp(a) * x[b - 1],
            FieldOp::G(a) => sp(a) + w.dt1_at(l, idx) * omega_at(x)[a - 1],
        };
        if let Some(m) = &corr {
            v += lat.data[idx].spin(m);
        }
        v
    })
}

/// `Z v` over all interior levels of the window (two levels shorter per side).
pub fn apply_window<T: FieldValue>(op: FieldOp, w: &HistoryWindow<T>) -> Result<HistoryWindow<T>> {
    op.validate()?;
    w.derive_window(|w, l| apply_level(op, w, l))
}

/// `Z v` at the centre slice.
pub fn apply<T: FieldValue>(op: FieldOp, w: &HistoryWindow<T>) -> Result<Lattice<T>> {
    op.validate()?;
    w.require(5)?;
    Ok(apply_level(op, w, w.half()))
}

/// `Z_1 Z_2 ... v` at the centre slice; the last operator acts first.
pub fn apply_multi<T: FieldValue>(ops: &[FieldOp], w: &HistoryWindow<T>) -> Result<Lattice<T>> {
    if ops.len() > 2 {
        return Err(Error::OrderTooHigh(ops.len()));
    }
    w.require(4 * ops.len() + 1)?;
    let mut cur = w.sub_window(2 * ops.len())?;
    for op in ops.iter().rev() {
        cur = apply_window(*op, &cur)?;
    }
    Ok(cur.center().clone())
}

/// Pointwise `Q_0(f, g) = -(d_0 f)* d_0 g + sum_a (d_a f)* d_a g`.
#[inline]
pub fn q0_point<T: FieldValue>(df: &[T; 4], dg: &[T; 4]) -> C64 {
    -df[0].pair(&dg[0]) + df[1].pair(&dg[1]) + df[2].pair(&dg[2]) + df[3].pair(&dg[3])
}

/// Pointwise `Q_ab(f, g) = (d_a f)* d_b g - (d_b f)* d_a g` (lower indices).
#[inline]
pub fn qab_point<T: FieldValue>(df: &[T; 4], dg: &[T; 4], a: usize, b: usize) -> C64 {
    df[a].pair(&dg[b]) - df[b].pair(&dg[a])
}

fn grads_at<T: FieldValue>(g: &[Lattice<T>; 4], idx: usize) -> [T; 4] {
    [g[0].data[idx], g[1].data[idx], g[2].data[idx], g[3].data[idx]]
}

pub fn null_form_q0<T: FieldValue>(f: &HistoryWindow<T>, g: &HistoryWindow<T>) -> Result<Lattice<C64>> {
    if !f.grid().same_as(&g.grid()) {
        return Err(Error::GridMismatch);
    }
    let df = f.gradient()?;
    let dg = g.gradient()?;
    Ok(Lattice::from_index_fn(f.grid(), |i| q0_point(&grads_at(&df, i), &grads_at(&dg, i))))
}

/// `Q_{alpha beta}` with lower indices; `Q^{0a} = -Q_{0a}` and `Q^{ab} = Q_{ab}`.
pub fn null_form_qab<T: FieldValue>(f: &HistoryWindow<T>, g: &HistoryWindow<T>, alpha: usize, beta: usize) -> Result<Lattice<C64>> {
    if alpha == beta {
        return Err(Error::EqualIndices(alpha));
    }
    if !f.grid().same_as(&g.grid()) {
        return Err(Error::GridMismatch);
    }
    let df = f.gradient()?;
    let dg = g.gradient()?;
    Ok(Lattice::from_index_fn(f.grid(), |i| qab_point(&grads_at(&df, i), &grads_at(&dg, i), alpha, beta)))
}

/// `-i gamma^mu d_mu psi + M psi` on level `l`.
pub fn dirac_level(w: &HistoryWindow<Spinor>, l: usize, mass: f64) -> Lattice<Spinor> {
    let gs = gammas();
    let lat = &w.levels[l];
    let g = lat.grid;
    let mi = -I;
    Lattice::from_index_fn(g, |idx| {
        let mut acc = gs.gamma[0].apply(&w.dt1_at(l, idx));
        for a in 0..3 {
            acc += gs.gamma[a + 1].apply(&d1_at(&lat.data, &g, idx, a));
        }
        acc.scale(mi) + lat.data[idx] * mass
    })
}

/// `-i gamma^mu d_mu psi + M psi` at the centre slice.
pub fn compose_dirac(w: &HistoryWindow<Spinor>, mass: f64) -> Result<Lattice<Spinor>> {
    w.require(5)?;
    Ok(dirac_level(w, w.half(), mass))
}

/// `-box u + m^2 u = d_t^2 u - Laplacian u + m^2 u` on level `l`.
pub fn box_level<T: FieldValue>(w: &HistoryWindow<T>, l: usize, mass: f64) -> Lattice<T> {
    let lat = &w.levels[l];
    let g = lat.grid;
    let m2 = mass * mass;
    Lattice::from_index_fn(g, |idx| w.dt2_at(l, idx) - laplacian_at(&lat.data, &g, idx) + lat.data[idx] * m2)
}

pub fn compose_box<T: FieldValue>(w: &HistoryWindow<T>, mass: f64) -> Result<Lattice<T>> {
    w.require(5)?;
    Ok(box_level(w, w.half(), mass))
}

/// Max-norm over nodes at least `margin` cells away from every face.
pub fn interior_max<T: FieldValue>(f: &Lattice<T>, margin: usize) -> f64 {
    let g = f.grid;
    let n = g.n;
    max_fn(&g, |idx| {
        let c = g.unindex(idx);
        if c.iter().all(|&v| v >= margin && v + margin < n) {
            f.data[idx].magnitude()
        } else {
            0.0
        }
    })
}

/// Residual lattice of the rewriting of `-box` in terms of `d_0`, `H_a` and
/// `d_a`. Needs nine levels.
pub fn dalembert_decomposition_lattice(w: &HistoryWindow<f64>) -> Result<Lattice<f64>> {
    w.require(9)?;
    let w9 = w.sub_window(4)?;
    let c5 = w9.sub_window(2)?;
    let lhs = compose_box(&c5, 0.0)?;
    let u_tt = c5.time_derivative(2)?;
    let u_t = c5.time_derivative(1)?;
    let t = w.t_center;
    let g = w.grid();
    let h_windows: Vec<HistoryWindow<f64>> = (1..=3).map(|a| apply_window(FieldOp::H(a), &w9)).collect::<Result<_>>()?;
    let dt_h: Vec<Lattice<f64>> = h_windows.iter().map(|hw| hw.time_derivative(1)).collect::<Result<_>>()?;
    let centre = c5.center();
    Ok(Lattice::from_index_fn(g, |idx| {
        let x = g.position(idx);
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let mut rhs = (t * t - r2) / (t * t) * u_tt.data[idx] + 3.0 / t * u_t.data[idx];
        for a in 0..3 {
            let hc = &h_windows[a];
            let d_a_h = d1_at(&hc.center().data, &g, idx, a);
            rhs += x[a] / (t * t) * dt_h[a].data[idx] - d_a_h / t - x[a] / (t * t) * d1_at(&centre.data, &g, idx, a);
        }
        lhs.data[idx] - rhs
    }))
}

/// Max-norm of the d'Alembertian decomposition residual.
pub fn dalembert_decomposition_residual(w: &HistoryWindow<f64>) -> Result<f64> {
    let r = dalembert_decomposition_lattice(w)?;
    Ok(interior_max(&r, 4))
}

/// Residual of `[-box, Z] u = 0` (with `[-box, S] u = -2 box u`); nine levels.
pub fn box_commutator_residual(op: FieldOp, w: &HistoryWindow<f64>) -> Result<f64> {
    w.require(9)?;
    let w9 = w.sub_window(4)?;
    let zu = apply_window(op, &w9)?;
    let box_zu = compose_box(&zu, 0.0)?;
    let box_u = w9.derive_window(|w, l| box_level(w, l, 0.0))?;
    let z_box_u = apply(op, &box_u)?;
    let extra = if op == FieldOp::S { 2.0 } else { 0.0 };
    let bc = box_u.center();
    let res = Lattice::from_index_fn(w.grid(), |i| box_zu.data[i] - z_box_u.data[i] - extra * bc.data[i]);
    Ok(interior_max(&res, 4))
}

/// Residual of `[-i gamma d, Zhat] psi = 0` (with `[-i gamma d, S] psi = -i gamma d psi`).
pub fn dirac_commutator_residual(op: FieldOp, w: &HistoryWindow<Spinor>) -> Result<f64> {
    w.require(9)?;
    let w9 = w.sub_window(4)?;
    let zpsi = apply_window(op, &w9)?;
    let d_zpsi = compose_dirac(&zpsi, 0.0)?;
    let d_psi = w9.derive_window(|w, l| dirac_level(w, l, 0.0))?;
    let z_d_psi = apply(op, &d_psi)?;
    let extra = if op == FieldOp::S { 1.0 } else { 0.0 };
    let dc = d_psi.center();
    let res = Lattice::from_index_fn(w.grid(), |i| d_zpsi.data[i] - z_d_psi.data[i] - dc.data[i] * extra);
    Ok(interior_max(&res, 4))
}

/// `[d_1, H_1] v - d_0 v` at the centre; needs nine levels.
pub fn boost_commutator_residual(w: &HistoryWindow<f64>) -> Result<f64> {
    let a = apply_multi(&[FieldOp::D(1), FieldOp::H(1)], w)?;
    let b = apply_multi(&[FieldOp::H(1), FieldOp::D(1)], w)?;
    let d0 = w.sub_window(2)?.time_derivative(1)?;
    let res = Lattice::from_index_fn(w.grid(), |i| a.data[i] - b.data[i] - d0.data[i]);
    Ok(interior_max(&res, 4))
}

/// Residual level treated as exact in the operator studies (test fields are O(1)).
pub const OPERATOR_ROUNDING_FLOOR: f64 = 1e-10;

/// Dyadic resolutions of the operator studies (`h` halves exactly at fixed `L`).
pub const OPERATOR_RESOLUTIONS: [usize; 3] = [17, 33, 65];

/// Moving, growing scalar test field on `[-3, 3]^3`.
pub fn scalar_test_field(t: f64, x: [f64; 3]) -> f64 {
    poly_bump(x, [0.3 * t - 0.9, 0.1 * t - 0.3, 0.0], 2.0) * (1.0 + 0.2 * t)
}

/// Spinor test field with distinct profiles and phases per component.
pub fn spinor_test_field(t: f64, x: [f64; 3]) -> Spinor {
    let ph = |a: f64, b: f64| C64::new(0.0, a * t + b).exp();
    Spinor([
        ph(0.5, 0.0) * poly_bump(x, [0.2 * t - 0.6, 0.0, 0.1], 2.0),
        ph(-0.3, 0.4) * poly_bump(x, [0.0, 0.25 * t - 0.75, 0.0], 1.9),
        ph(0.7, 1.1) * (0.5 * poly_bump(x, [-0.1, 0.1, 0.15 * t - 0.45], 2.1)),
        ph(0.2, -0.5) * (poly_bump(x, [0.1 * t - 0.3, -0.1 * t + 0.3, 0.0], 1.8) * (1.0 + 0.1 * t)),
    ])
}

/// Refinement study of the commutator identities, the boost commutator
/// `[d_1, H_1] = d_0` and the d'Alembertian decomposition on the test fields.
pub fn operator_study(resolutions: &[usize], min_order: f64) -> Result<Vec<IdentityReport>> {
    let t = 3.0;
    let mut names: Vec<String> = Vec::new();
    let mut per_level: Vec<Vec<f64>> = Vec::new();
    let mut spacings = Vec::new();
    for &n in resolutions {
        let g = GridSpec::zero_pad(n, 3.0)?;
        spacings.push(g.h);
        let u = HistoryWindow::from_fn(g, t, 0.5 * g.h, 4, scalar_test_field);
        let psi = HistoryWindow::from_fn(g, t, 0.5 * g.h, 4, spinor_test_field);
        let mut row: Vec<(String, f64)> = Vec::new();
        for op in FieldOp::gamma_family() {
            row.push((format!("box_commutator_{}", op.name()), box_commutator_residual(op, &u)?));
        }
        for op in FieldOp::gamma_hat_family() {
            row.push((format!("dirac_commutator_{}", op.name()), dirac_commutator_residual(op, &psi)?));
        }
        row.push(("boost_commutator_d1_H1".into(), boost_commutator_residual(&u)?));
        row.push(("dalembert_decomposition".into(), dalembert_decomposition_residual(&u)?));
        names = row.iter().map(|(k, _)| k.clone()).collect();
        per_level.push(row.into_iter().map(|(_, v)| v).collect());
    }
    Ok(names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let res: Vec<f64> = per_level.iter().map(|l| l[k]).collect();
            IdentityReport::convergence_with_floor(name, resolutions, &spacings, &res, min_order, OPERATOR_ROUNDING_FLOOR)
        })
        .collect())
}

/// Pointwise spinor derivative data `gamma^mu d_mu psi` from a gradient.
#[inline]
pub fn slash(d: &[Spinor; 4]) -> Spinor {
    let gs = gammas();
    let mut acc = gs.gamma[0].apply(&d[0]);
    for a in 1..4 {
        acc += gs.gamma[a].apply(&d[a]);
    }
    acc
}

/// Kernel vector of `gamma^mu k_mu` for the null covector `k = (-|k|, k)`.
pub fn null_polarisation(k: [f64; 3]) -> Spinor {
    let gs = gammas();
    let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    // gamma^mu k_mu with k_0 = -|k|; projector onto its kernel is (I + A)/2 with A = k_a g0 g^a / |k|.
    let mut a = Mat4::zero();
    for q in 0..3 {
        a = a + gs.alpha[q].scale(C64::new(k[q] / kn, 0.0));
    }
    let p = (Mat4::identity() + a).scale(C64::new(0.5, 0.0));
    for e in 0..4 {
        let mut v = Spinor::zero();
        v.0[e] = ONE;
        let pv = p.apply(&v);
        if pv.norm() > 0.5 {
            return pv.scale(C64::new(1.0 / pv.norm(), 0.0));
        }
    }
    Spinor([ZERO; 4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoundaryMode;

    fn grid(n: usize, l: f64) -> GridSpec {
        GridSpec::zero_pad(n, l).unwrap()
    }

    fn bump(x: [f64; 3], c: [f64; 3], w: f64) -> f64 {
        let s2 = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)) / (w * w);
        if s2 >= 1.0 {
            0.0
        } else {
            (1.0 - s2).powi(10)
        }
    }

    #[test]
    fn rotation_kills_radial_functions() {
        let g = grid(33, 3.0);
        let w = HistoryWindow::from_fn(g, 3.0, 0.05, 2, |_, x| bump(x, [0.0; 3], 2.5));
        let r = apply(FieldOp::Omega(1, 2), &w).unwrap();
        let big = HistoryWindow::from_fn(g, 3.0, 0.05, 4, |_, x| bump(x, [0.0; 3], 2.5));
        let rr = apply_multi(&[FieldOp::Omega(1, 2), FieldOp::Omega(1, 2)], &big).unwrap();
        assert!(r.max_norm() < 1e-2, "{}", r.max_norm());
        assert!(rr.max_norm() < 1e-1);
        let fine = grid(65, 3.0);
        let wf = HistoryWindow::from_fn(fine, 3.0, 0.05, 2, |_, x| bump(x, [0.0; 3], 2.5));
        assert!(apply(FieldOp::Omega(1, 2), &wf).unwrap().max_norm() < r.max_norm() / 8.0);
    }

    #[test]
    fn scaling_of_time_is_time() {
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let w = HistoryWindow::from_fn(g, 2.5, 0.1, 2, |t, _| t);
        let s = apply(FieldOp::S, &w).unwrap();
        assert!(s.data.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn empty_multi_index_is_identity() {
        let g = grid(17, 1.0);
        let w = HistoryWindow::from_fn(g, 2.0, 0.1, 0, |_, x| x[0]);
        assert_eq!(apply_multi(&[], &w).unwrap(), w.center().clone());
    }

    #[test]
    fn window_and_order_errors() {
        let g = grid(17, 1.0);
        let w = HistoryWindow::from_fn(g, 2.0, 0.1, 1, |_, x| x[0]);
        assert!(matches!(apply(FieldOp::S, &w), Err(Error::WindowTooShort { .. })));
        let w = HistoryWindow::from_fn(g, 2.0, 0.1, 6, |_, x| x[0]);
        assert!(matches!(apply_multi(&[FieldOp::S; 3], &w), Err(Error::OrderTooHigh(3))));
        assert!(null_form_qab(&w, &w, 1, 1).is_err());
    }

    #[test]
    fn boost_commutator_is_time_derivative() {
        let res: Vec<f64> = [33usize, 65]
            .iter()
            .map(|&n| {
                let g = grid(n, 3.0);
                let dt = g.h / 2.0;
                let w = HistoryWindow::from_fn(g, 3.0, dt, 4, |t, x| bump(x, [0.3 * t - 0.9, 0.0, 0.0], 2.0) * (1.0 + 0.2 * t));
                boost_commutator_residual(&w).unwrap()
            })
            .collect();
        assert!(res[1] < res[0] / 8.0, "{res:?}");
    }

    #[test]
    fn q0_examples() {
        let g = GridSpec::new(32, std::f64::consts::PI, BoundaryMode::Periodic).unwrap();
        let k = [1.0, 0.0, 0.0];
        let kn = 1.0;
        let f = HistoryWindow::from_fn(g, 2.0, 0.02, 2, |t, x| C64::new(0.0, k[0] * x[0] - kn * t).exp());
        let q = null_form_q0(&f, &f).unwrap();
        assert!(q.max_norm() < 1e-3);
        let c = HistoryWindow::from_fn(g, 2.0, 0.02, 2, |_, _| C64::new(1.0, 2.0));
        assert!(null_form_q0(&c, &f).unwrap().max_norm() < 1e-10);
    }

    #[test]
    fn q0_conjugate_symmetry() {
        let g = grid(25, 2.0);
        let f = HistoryWindow::from_fn(g, 2.0, 0.05, 2, |t, x| Spinor::new([C64::new(bump(x, [0.1, 0.0, 0.0], 1.5) * t, 0.3), ZERO, C64::new(0.0, bump(x, [0.0; 3], 1.0)), ZERO]));
        let h = HistoryWindow::from_fn(g, 2.0, 0.05, 2, |t, x| Spinor::new([ZERO, C64::new(bump(x, [0.0, 0.2, 0.0], 1.4), t), ZERO, C64::new(x[0], 0.0)]));
        let a = null_form_q0(&f, &h).unwrap();
        let b = null_form_q0(&h, &f).unwrap();
        let d = a.zip_map(&b, |x, y| (*x - y.conj()).norm()).unwrap();
        assert!(d.max_norm() < 1e-12);
    }

    #[test]
    fn qab_examples() {
        let g = grid(17, 1.0);
        let f = HistoryWindow::from_fn(g, 2.0, 0.1, 2, |t, x| x[1] * t + x[0]);
        assert!(null_form_qab(&f, &f, 0, 2).unwrap().max_norm() < 1e-12);
        let fx = HistoryWindow::from_fn(g, 2.0, 0.1, 2, |_, x| x[0]);
        let gt = HistoryWindow::from_fn(g, 2.0, 0.1, 2, |t, _| t);
        let q = null_form_qab(&fx, &gt, 0, 1).unwrap();
        let inner = g.index(8, 8, 8);
        assert!((q.data[inner] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn box_examples() {
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let w = HistoryWindow::from_fn(g, 3.0, 0.1, 2, |t, _| t * t);
        let b = compose_box(&w, 0.0).unwrap();
        assert!(b.data.iter().all(|v| (v - 2.0).abs() < 1e-10));
        let p = GridSpec::periodic(32, std::f64::consts::PI).unwrap();
        let om = 2f64.sqrt();
        let kg = HistoryWindow::from_fn(p, 2.0, 0.02, 2, |t, x| (x[0] - om * t).cos());
        assert!(compose_box(&kg, 1.0).unwrap().max_norm() < 1e-3);
    }

    #[test]
    fn spherical_wave_solves_box() {
        let prof = |s: f64| if s.abs() >= 1.0 { 0.0 } else { (1.0 - s * s).powi(8) };
        let res: Vec<f64> = [33usize, 65]
            .iter()
            .map(|&n| {
                let g = grid(n, 5.0);
                let w = HistoryWindow::from_fn(g, 2.5, g.h / 2.0, 2, |t, x| {
                    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    if r < 1e-9 {
                        0.0
                    } else {
                        prof((r - t) / 1.5) / r
                    }
                });
                compose_box(&w, 0.0).unwrap().max_norm()
            })
            .collect();
        assert!(res[1] < res[0] / 10.0, "{res:?}");
    }

    #[test]
    fn dirac_examples() {
        let gs = gammas();
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let psi0 = Spinor::new([ONE, C64::new(0.5, -0.2), C64::new(0.0, 1.0), C64::new(-0.3, 0.0)]);
        let w = HistoryWindow::from_fn(g, 2.5, 0.01, 2, |t, _| {
            let s = t - 2.0;
            // exp(-i g0 s) = cos s - i g0 sin s
            psi0 * s.cos() + gs.gamma[0].apply(&psi0).scale(C64::new(0.0, -s.sin()))
        });
        assert!(compose_dirac(&w, 1.0).unwrap().max_norm() < 1e-8);
        let z = HistoryWindow::from_fn(g, 2.5, 0.01, 2, |_, _| Spinor::zero());
        assert_eq!(compose_dirac(&z, 1.0).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn massless_plane_wave_spinor() {
        let g = GridSpec::periodic(32, std::f64::consts::PI).unwrap();
        let k = [1.0, 1.0, 0.0];
        let kn = 2f64.sqrt();
        let pol = null_polarisation(k);
        let w = HistoryWindow::from_fn(g, 2.0, 0.01, 2, |t, x| pol.scale(C64::new(0.0, k[0] * x[0] + k[1] * x[1] - kn * t).exp()));
        assert!(compose_dirac(&w, 0.0).unwrap().max_norm() < 1e-3);
    }

    #[test]
    fn decomposition_polynomial() {
        let g = grid(17, 1.0);
        let w = HistoryWindow::from_fn(g, 3.0, 0.1, 4, |t, x| x[0] * t);
        assert!(dalembert_decomposition_residual(&w).unwrap() < 1e-10);
        let c = HistoryWindow::from_fn(g, 3.0, 0.1, 4, |_, _| 1.0);
        assert!(dalembert_decomposition_residual(&c).unwrap() < 1e-12);
    }

    #[test]
    fn hatted_correction_acts_on_spinors_only() {
        let g = GridSpec::periodic(17, 1.0).unwrap();
        let w = HistoryWindow::from_fn(g, 2.0, 0.1, 2, |_, _| 1.0);
        assert!(apply(FieldOp::HHat(1), &w).unwrap().max_norm() < 1e-12);
        let s = HistoryWindow::from_fn(g, 2.0, 0.1, 2, |_, _| Spinor::from_real([1.0, 0.0, 0.0, 0.0]));
        let h = apply(FieldOp::HHat(3), &s).unwrap();
        // -1/2 g0 g3 e1 = -1/2 e3
        let v = h.data[g.index(8, 8, 8)];
        assert!((v - Spinor::from_real([0.0, 0.0, -0.5, 0.0])).norm() < 1e-12);
    }
}
