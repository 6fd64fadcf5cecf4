//! Energies and weighted norms: ghost weight, standard and conformal wave
//! energies, the weighted conformal energy in two forms, vector-field norms,
//! Klainerman-Sobolev and Hardy ratios, and weighted initial-data norms.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clifford::{gammas, Spinor, C64};
use crate::dkg_solver::free_flow::{fft3, wavenumber};
use crate::dkg_solver::{alpha_apply, gamma0_apply, CaseConfig, InitialData, Observer, StateWindow, T0};
use crate::error::{Error, Result};
use crate::report::IdentityReport;
use crate::lattice::{d1_at, integrate_fn, japanese, max_fn, omega_at, poly_bump, FieldState, FieldValue, GridSpec, Lattice, ScalarLattice, SpinorLattice};
use crate::vector_fields::{apply, apply_window, FieldOp, HistoryWindow};

/// Relative mass outside `K = {r + 1 <= t}` tolerated by cone-supported functionals.
pub const CONE_TOLERANCE: f64 = 1e-10;

/// Spacing of the tabulated ghost primitive.
const GHOST_STEP: f64 = 1e-3;

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// The ghost weight primitive `q(s) = int_{-inf}^{s} <tau>^{-1-2 delta} d tau`,
/// tabulated and evaluated by cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct GhostProfile {
    pub delta: f64,
    s_min: f64,
    table: Vec<f64>,
}

impl GhostProfile {
    pub fn new(delta: f64, s_min: f64, s_max: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::NonPositive(delta));
        }
        let s_min = s_min.min(-1.0);
        let cells = ((s_max - s_min) / GHOST_STEP).ceil() as usize + 1;
        let w = |s: f64| japanese(s).powf(-1.0 - 2.0 * delta);
        let mut table = Vec::with_capacity(cells + 1);
        let mut q = Self::tail(delta, s_min);
        table.push(q);
        for j in 0..cells {
            let a = s_min + j as f64 * GHOST_STEP;
            q += adaptive_simpson(&w, a, a + GHOST_STEP, 1e-15);
            table.push(q);
        }
        Ok(GhostProfile { delta, s_min, table })
    }

    /// Profile covering every `r - t` of a grid on `t in [t_min, t_max]`.
    pub fn for_grid(delta: f64, grid: &GridSpec, t_min: f64, t_max: f64) -> Result<Self> {
        let r_max = grid.half_width * 3f64.sqrt();
        Self::new(delta, -t_max - 1.0, r_max - t_min + 1.0)
    }

    /// `int_{-inf}^{s} <tau>^{-1-2 delta}` for `s <= -1` via `tau = sinh v` and a
    /// binomial series of `cosh^{-2 delta}` in `exp(-2 v)`.
    fn tail(delta: f64, s: f64) -> f64 {
        assert!(s <= -1.0, "lower tail needs s <= -1");
        let v0 = (-s).asinh();
        let mut c = 1.0;
        let mut sum = 0.0;
        for k in 0..200 {
            let e = 2.0 * delta + 2.0 * k as f64;
            let term = c * (-e * v0).exp() / e;
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
            c *= (-2.0 * delta - k as f64) / (k as f64 + 1.0);
        }
        4f64.powf(delta) * sum
    }

    /// `<s>^{-1-2 delta}`, the derivative of `q`.
    #[inline]
    pub fn weight(&self, s: f64) -> f64 {
        japanese(s).powf(-1.0 - 2.0 * self.delta)
    }

    #[inline]
    pub fn q(&self, s: f64) -> f64 {
        let u = (s - self.s_min) / GHOST_STEP;
        let j = (u.floor().max(0.0) as usize).min(self.table.len() - 2);
        let x = u - j as f64;
        let s0 = self.s_min + j as f64 * GHOST_STEP;
        let (p0, p1) = (self.table[j], self.table[j + 1]);
        let (m0, m1) = (self.weight(s0) * GHOST_STEP, self.weight(s0 + GHOST_STEP) * GHOST_STEP);
        let x2 = x * x;
        let x3 = x2 * x;
        (2.0 * x3 - 3.0 * x2 + 1.0) * p0 + (x3 - 2.0 * x2 + x) * m0 + (-2.0 * x3 + 3.0 * x2) * p1 + (x3 - x2) * m1
    }
}

/// `|[v]_-|^2` at direction `omega` (zero vector at the origin).
#[inline]
pub fn minus_sqr(v: &Spinor, omega: [f64; 3]) -> f64 {
    gammas().project_raw(v, omega, crate::clifford::Sign::Minus).norm_sqr()
}

/// `int |[psi]_-|^2 <t - r>^{-1-2 delta} dx` at one time.
pub fn ghost_integrand(psi: &SpinorLattice, t: f64, delta: f64) -> f64 {
    let g = psi.grid;
    integrate_fn(&g, |i| {
        let x = g.position(i);
        let r = g.radius(i);
        minus_sqr(&psi.data[i], omega_at(x)) * japanese(t - r).powf(-1.0 - 2.0 * delta)
    })
}

/// Ghost weight energy along a sequence of equally spaced states:
/// `(L^2 part, cumulative spacetime part)` per state.
pub fn ghost_energy(states: &[FieldState], delta: f64) -> Result<Vec<(f64, f64)>> {
    if delta <= 0.0 {
        return Err(Error::NonPositive(delta));
    }
    let mut out = Vec::with_capacity(states.len());
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for s in states {
        let g = ghost_integrand(&s.psi, s.t, delta);
        if let Some((tp, gp)) = prev {
            acc += 0.5 * (s.t - tp) * (g + gp);
        }
        prev = Some((s.t, g));
        out.push((s.psi.l2_sqr(), acc));
    }
    Ok(out)
}

/// Residual lattice of the ghost divergence identity
/// `d_0(e^q |psi|^2) + d_a(e^q psi* alpha^a psi) + e^q w |[psi]_-|^2 / 2 + 2 e^q Im(psi* gamma^0 G) = 0`
/// with `G = phi V psi - M psi` at the window centre.
pub fn ghost_identity_lattice(psi: &HistoryWindow<Spinor>, phi: &Lattice<f64>, case: &CaseConfig, profile: &GhostProfile) -> Result<ScalarLattice> {
    psi.require(5)?;
    let g = psi.grid();
    let density = psi.map_indexed(|t, i, v| profile.q(g.radius(i) - t).exp() * v.norm_sqr());
    let d0 = density.time_derivative(1)?;
    let c = psi.center();
    let t = psi.t_center;
    let eq = Lattice::from_index_fn(g, |i| profile.q(g.radius(i) - t).exp());
    let flux: Vec<ScalarLattice> = (0..3)
        .map(|a| Lattice::from_index_fn(g, |i| eq.data[i] * c.data[i].dot(&alpha_apply(a, &c.data[i])).re))
        .collect();
    let gs = gammas();
    Ok(Lattice::from_index_fn(g, |i| {
        let x = g.position(i);
        let r = g.radius(i);
        let v = c.data[i];
        let div: f64 = (0..3).map(|a| d1_at(&flux[a].data, &g, i, a)).sum();
        let source = case.v.apply(&v) * phi.data[i] - v * case.dirac_mass;
        let im = v.dot(&gs.gamma0_apply(&source)).im;
        d0.data[i] + div + 0.5 * eq.data[i] * profile.weight(r - t) * minus_sqr(&v, omega_at(x)) + 2.0 * eq.data[i] * im
    }))
}

/// Max-norm of the ghost identity residual over nodes with `r >= mask_radius`
/// and at least two cells from every face.
pub fn ghost_identity_residual(w: &StateWindow, case: &CaseConfig, delta: f64, mask_radius: f64) -> Result<f64> {
    let psi = w.psi();
    let g = psi.grid();
    let profile = GhostProfile::for_grid(delta, &g, w.t() - 1.0, w.t() + 1.0)?;
    let res = ghost_identity_lattice(&psi, &w.center().phi, case, &profile)?;
    Ok(masked_max(&res, mask_radius, 2))
}

/// Max-norm over nodes with `r >= radius` and `margin` cells from every face.
pub fn masked_max<T: FieldValue>(f: &Lattice<T>, radius: f64, margin: usize) -> f64 {
    let g = f.grid;
    max_fn(&g, |i| {
        let c = g.unindex(i);
        if g.radius(i) >= radius && c.iter().all(|&v| v >= margin && v + margin < g.n) {
            f.data[i].magnitude()
        } else {
            0.0
        }
    })
}

/// Standard energy `E = int (u_t^2 + |grad u|^2)` and conformal energy
/// `F = int (u^2 + (Su)^2 + |Omega u|^2 + |H u|^2)` at the window centre.
pub fn wave_energies(w: &HistoryWindow<f64>) -> Result<(f64, f64)> {
    w.require(5)?;
    let g = w.grid();
    let grad = w.gradient()?;
    let e = integrate_fn(&g, |i| grad.iter().map(|d| d.data[i] * d.data[i]).sum());
    let ops: Vec<Lattice<f64>> = [FieldOp::S, FieldOp::H(1), FieldOp::H(2), FieldOp::H(3), FieldOp::Omega(1, 2), FieldOp::Omega(1, 3), FieldOp::Omega(2, 3)]
        .iter()
        .map(|op| apply(*op, w))
        .collect::<Result<_>>()?;
    let u = w.center();
    let f = integrate_fn(&g, |i| u.data[i] * u.data[i] + ops.iter().map(|l| l.data[i] * l.data[i]).sum::<f64>());
    Ok((e, f))
}

/// Fraction of `int (u^2 + u_t^2 + |grad u|^2)` carried by nodes outside `K`.
pub fn mass_outside_cone(w: &HistoryWindow<f64>) -> Result<f64> {
    let g = w.grid();
    let t = w.t_center;
    let grad = w.gradient()?;
    let u = w.center();
    let dens = |i: usize| u.data[i] * u.data[i] + grad.iter().map(|d| d.data[i] * d.data[i]).sum::<f64>();
    let total = integrate_fn(&g, dens);
    if total == 0.0 {
        return Ok(0.0);
    }
    let outside = integrate_fn(&g, |i| if g.radius(i) + 1.0 > t { dens(i) } else { 0.0 });
    Ok(outside / total)
}

/// Weighted conformal energy: `(definition form, identity form)`.
///
/// Definition form:
/// `1/2 int [(r^2 + t^2)(u_t^2 + |grad u|^2) + 4 t u_t x.grad u] / (t - r)
///  + int (2 t u u_t - u^2) / (t - r) - int r u^2 / (t - r)^2`.
/// Identity form: `1/2 int [(Su + 2u)^2 + |Hu|^2 + |Omega u|^2] / (t - r)`.
pub fn weighted_conformal(w: &HistoryWindow<f64>) -> Result<(f64, f64)> {
    w.require(5)?;
    let outside = mass_outside_cone(w)?;
    if outside > CONE_TOLERANCE {
        return Err(Error::SupportOutsideCone(outside));
    }
    let g = w.grid();
    let t = w.t_center;
    let grad = w.gradient()?;
    let u = w.center();
    let inside = |i: usize| g.radius(i) + 1.0 <= t;
    let def = integrate_fn(&g, |i| {
        if !inside(i) {
            return 0.0;
        }
        let x = g.position(i);
        let r = g.radius(i);
        let ut = grad[0].data[i];
        let du = [grad[1].data[i], grad[2].data[i], grad[3].data[i]];
        let g2 = du[0] * du[0] + du[1] * du[1] + du[2] * du[2];
        let xdu = x[0] * du[0] + x[1] * du[1] + x[2] * du[2];
        let v = u.data[i];
        let tr = t - r;
        (0.5 * ((r * r + t * t) * (ut * ut + g2) + 4.0 * t * ut * xdu) + 2.0 * t * v * ut - v * v) / tr - r * v * v / (tr * tr)
    });
    let ops: Vec<Lattice<f64>> = [FieldOp::S, FieldOp::H(1), FieldOp::H(2), FieldOp::H(3), FieldOp::Omega(1, 2), FieldOp::Omega(1, 3), FieldOp::Omega(2, 3)]
        .iter()
        .map(|op| apply(*op, w))
        .collect::<Result<_>>()?;
    let id = integrate_fn(&g, |i| {
        if !inside(i) {
            return 0.0;
        }
        let su = ops[0].data[i] + 2.0 * u.data[i];
        let rest: f64 = ops[1..].iter().map(|l| l.data[i] * l.data[i]).sum();
        0.5 * (su * su + rest) / (t - g.radius(i))
    });
    Ok((def, id))
}

/// Refinement study of the agreement of the two weighted conformal energy forms
/// on a field supported in `{r + 1 <= t}` at `t = 5`, `L = 4`.
pub fn econ_study(resolutions: &[usize], min_order: f64) -> Result<IdentityReport> {
    let t = 5.0;
    let mut spacings = Vec::new();
    let mut res = Vec::new();
    for &n in resolutions {
        let g = GridSpec::zero_pad(n, 4.0)?;
        let w = HistoryWindow::from_fn(g, t, 0.5 * g.h, 2, |s, x| poly_bump(x, [0.4, 0.0, -0.3], 2.5) * (1.0 + 0.3 * (s - t)));
        let (d, i) = weighted_conformal(&w)?;
        spacings.push(g.h);
        res.push((d - i).abs() / i);
    }
    Ok(IdentityReport::convergence("econ_definition_vs_identity", resolutions, &spacings, &res, min_order))
}

/// `int u^2 / (t - r)`, the lower bound of the weighted conformal energy.
pub fn conformal_lower_bound(u: &ScalarLattice, t: f64) -> f64 {
    let g = u.grid;
    integrate_fn(&g, |i| {
        let r = g.radius(i);
        if r + 1.0 <= t {
            u.data[i] * u.data[i] / (t - r)
        } else {
            0.0
        }
    })
}

/// Visits `Z^I f` for every multi-index `|I| <= max_order` over `family`, as a
/// window with `out_half` levels per side. The callback receives `|I|`.
pub fn for_each_multi_index<T: FieldValue, F>(w: &HistoryWindow<T>, family: &[FieldOp], max_order: usize, out_half: usize, mut f: F) -> Result<()>
where
    F: FnMut(usize, &HistoryWindow<T>) -> Result<()>,
{
    if max_order > 2 {
        return Err(Error::OrderTooHigh(max_order));
    }
    let base = w.sub_window(out_half + 2 * max_order)?;
    f(0, &base.sub_window(out_half)?)?;
    if max_order == 0 {
        return Ok(());
    }
    for op1 in family {
        let w1 = apply_window(*op1, &base)?;
        f(1, &w1.sub_window(out_half)?)?;
        if max_order == 2 {
            for op2 in family {
                let w2 = apply_window(*op2, &w1)?;
                f(2, &w2)?;
            }
        }
    }
    Ok(())
}

/// `sqrt(sum_{|I| = k} ||Z^I f||^2)` for `k = 0..=max_order`.
pub fn vector_field_l2<T: FieldValue>(w: &HistoryWindow<T>, family: &[FieldOp], max_order: usize) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; max_order + 1];
    for_each_multi_index(w, family, max_order, 0, |k, z| {
        acc[k] += z.center().l2_sqr();
        Ok(())
    })?;
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// `sqrt(sum_{|I| = k} ||d Z^I f||^2)` (space-time gradient) for `k = 0..=max_order`.
pub fn gradient_vector_field_l2(w: &HistoryWindow<f64>, family: &[FieldOp], max_order: usize) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; max_order + 1];
    for_each_multi_index(w, family, max_order, 2, |k, z| {
        let grad = z.gradient()?;
        acc[k] += grad.iter().map(|l| l.l2_sqr()).sum::<f64>();
        Ok(())
    })?;
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// Two sides of the Klainerman-Sobolev inequality at the window centre:
/// `sup <t + r> <t - r>^{1/2} |f|` and `sum_{|I| <= 2} ||Gamma^I f||`.
pub fn klainerman_sobolev_sides<T: FieldValue>(w: &HistoryWindow<T>) -> Result<(f64, f64)> {
    let g = w.grid();
    let t = w.t_center;
    let c = w.center();
    let lhs = max_fn(&g, |i| {
        let r = g.radius(i);
        japanese(t + r) * japanese(t - r).sqrt() * c.data[i].magnitude()
    });
    let mut rhs_terms = Vec::new();
    for_each_multi_index(w, &FieldOp::gamma_family(), 2, 0, |_, z| {
        rhs_terms.push(z.center().l2());
        Ok(())
    })?;
    Ok((lhs, crate::lattice::pairwise_sum(&rhs_terms)))
}

/// Ratio `||f / (t - r)|| / ||d_r f||` for `f` supported in `K`.
pub fn hardy_ratio(f: &ScalarLattice, t: f64) -> Result<f64> {
    let g = f.grid;
    let total = f.l2_sqr();
    let outside = integrate_fn(&g, |i| if g.radius(i) + 1.0 > t { f.data[i] * f.data[i] } else { 0.0 });
    if total > 0.0 && outside / total > CONE_TOLERANCE {
        return Err(Error::SupportOutsideCone(outside / total));
    }
    let lhs = integrate_fn(&g, |i| {
        let r = g.radius(i);
        if r + 1.0 <= t {
            (f.data[i] / (t - r)).powi(2)
        } else {
            0.0
        }
    });
    let rhs = integrate_fn(&g, |i| {
        let om = omega_at(g.position(i));
        let dr: f64 = (0..3).map(|a| om[a] * d1_at(&f.data, &g, i, a)).sum();
        dr * dr
    });
    if rhs == 0.0 {
        return Ok(f64::NAN);
    }
    Ok((lhs / rhs).sqrt())
}

/// Weighted norms of initial data.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WeightedNormReport {
    pub epsilon: f64,
    pub n: usize,
    /// `||log(2 + |x|) <x>^{k + 3/2} grad^k psi_0||`, k = 0, 1, 2.
    pub psi0_weighted: Vec<f64>,
    /// `||<x>^k grad^k phi_0||`, k = 0..=2.
    pub phi0_weighted: Vec<f64>,
    /// `||<x>^k grad^k phi_1||`, k = 0..=2.
    pub phi1_weighted: Vec<f64>,
    /// `||psi_0||_{H^2} + ||phi_0||_{H^2} + ||phi_1||_{H^2}`.
    pub sobolev_sum: f64,
    pub weighted_sum: f64,
}

/// `sqrt(sum_{|alpha| = k} int w(x)^2 |d^alpha f|^2)` for `k = 0..=k_max` with
/// spectral derivatives of real components on a periodic grid.
fn weighted_derivative_norms(grid: &GridSpec, comps: &[Vec<f64>], k_max: usize, weight: &(dyn Fn([f64; 3], usize) -> f64 + Sync)) -> Vec<f64> {
    let n = grid.n;
    let h = grid.h;
    let xi: Vec<f64> = (0..n).map(|p| wavenumber(p, n, h)).collect();
    let mut acc = vec![0.0; k_max + 1];
    for comp in comps {
        let mut hat: Vec<C64> = comp.iter().map(|v| C64::new(*v, 0.0)).collect();
        fft3(&mut hat, n, false);
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        while let Some(alpha) = stack.pop() {
            let k = alpha.len();
            let mut d = hat.clone();
            for (idx, v) in d.iter_mut().enumerate() {
                let p = grid.unindex(idx);
                let mut m = C64::new(1.0, 0.0);
                for &a in &alpha {
                    m *= C64::new(0.0, xi[p[a]]);
                }
                *v *= m;
            }
            fft3(&mut d, n, true);
            acc[k] += integrate_fn(grid, |i| {
                let w = weight(grid.position(i), k);
                (w * d[i].re).powi(2)
            });
            if k < k_max {
                for a in 0..3 {
                    let mut next = alpha.clone();
                    next.push(a);
                    stack.push(next);
                }
            }
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Weighted and Sobolev norms of the initial data on a periodic grid of `n`
/// points enclosing the support.
pub fn initial_norms(data: &InitialData, n: usize) -> Result<WeightedNormReport> {
    let grid = GridSpec::periodic(n, data.r0 + 1.0)?;
    let psi = Lattice::from_fn(grid, |x| data.psi0(x));
    let mut psi_comps = Vec::new();
    for c in 0..4 {
        psi_comps.push(psi.data.iter().map(|v| v.0[c].re).collect::<Vec<f64>>());
        psi_comps.push(psi.data.iter().map(|v| v.0[c].im).collect::<Vec<f64>>());
    }
    let phi0 = vec![Lattice::from_fn(grid, |x| data.phi0(x)).data];
    let phi1 = vec![Lattice::from_fn(grid, |x| data.phi1(x)).data];
    let jx = |x: [f64; 3]| japanese((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
    let psi_w = weighted_derivative_norms(&grid, &psi_comps, 2, &|x, k| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        (2.0 + r).ln() * jx(x).powf(k as f64 + 1.5)
    });
    let poly = |x: [f64; 3], k: usize| jx(x).powi(k as i32);
    let phi0_w = weighted_derivative_norms(&grid, &phi0, 2, &poly);
    let phi1_w = weighted_derivative_norms(&grid, &phi1, 2, &poly);
    let one = |_: [f64; 3], _: usize| 1.0;
    let hs = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sobolev_sum = hs(weighted_derivative_norms(&grid, &psi_comps, 2, &one)) + hs(weighted_derivative_norms(&grid, &phi0, 2, &one)) + hs(weighted_derivative_norms(&grid, &phi1, 2, &one));
    let weighted_sum = psi_w.iter().chain(&phi0_w).chain(&phi1_w).sum();
    Ok(WeightedNormReport {
        epsilon: data.epsilon,
        n,
        psi0_weighted: psi_w,
        phi0_weighted: phi0_w,
        phi1_weighted: phi1_w,
        sobolev_sum,
        weighted_sum,
    })
}

/// Time series of named functionals; columns keep insertion order.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    pub values: BTreeMap<String, Vec<f64>>,
}

impl EnergySeries {
    /// Equality of every time and value bit pattern; all NaN entries compare equal.
    pub fn bit_identical(&self, other: &EnergySeries) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| if x.is_nan() { f64::NAN.to_bits() } else { x.to_bits() }).collect::<Vec<_>>();
        self.columns == other.columns
            && bits(&self.times) == bits(&other.times)
            && self.values.len() == other.values.len()
            && self.values.iter().all(|(k, v)| other.values.get(k).is_some_and(|w| bits(v) == bits(w)))
    }

    pub fn new(columns: &[&str]) -> Self {
        EnergySeries {
            times: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            values: columns.iter().map(|c| (c.to_string(), Vec::new())).collect(),
        }
    }

    pub fn push(&mut self, t: f64, row: &BTreeMap<String, f64>) -> Result<()> {
        for c in &self.columns {
            if !row.contains_key(c) {
                return Err(Error::Config(format!("row misses column {c}")));
            }
        }
        self.times.push(t);
        for c in &self.columns {
            self.values.get_mut(c).unwrap().push(row[c]);
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.values.get(name).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `t` followed by every column; floats use the shortest
    /// round-trip representation.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut rec = vec![format!("{t:?}")];
            for c in &self.columns {
                rec.push(format!("{:?}", self.values[c][k]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
        if header.first().map(|s| s.as_str()) != Some("t") {
            return Err(Error::Config("first CSV column must be t".into()));
        }
        let cols: Vec<&str> = header[1..].iter().map(|s| s.as_str()).collect();
        let mut s = EnergySeries::new(&cols);
        for rec in r.records() {
            let rec = rec?;
            let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number {v}: {e}")));
            let t = parse(&rec[0])?;
            let mut row = BTreeMap::new();
            for (c, v) in cols.iter().zip(rec.iter().skip(1)) {
                row.insert(c.to_string(), parse(v)?);
            }
            s.push(t, &row)?;
        }
        Ok(s)
    }
}

/// Scaling degree of a tracked column under `(psi, phi) -> lambda (psi, phi)`:
/// 1 for norms and suprema, 2 for quadratic energies.
pub fn column_degree(name: &str) -> u32 {
    match name {
        "ghost_spacetime" | "ghost_energy" | "wave_E" | "conformal_F" | "kg_E" | "econ_def" | "econ_id" => 2,
        _ => 1,
    }
}

/// Columns recorded by [`EnergyTracker`] and their meaning.
pub const COLUMN_DOCS: &[(&str, &str)] = &[
    ("dirac_l2", "||psi||_{L^2}"),
    ("ghost_spacetime", "int_2^t int |[psi]_-|^2 <tau - r>^{-1-2 delta} dx dtau (trapezoid over every step)"),
    ("ghost_energy", "||psi||^2 + ghost_spacetime"),
    ("wave_E", "int phi_t^2 + |grad phi|^2"),
    ("conformal_F", "int phi^2 + (S phi)^2 + |Omega phi|^2 + |H phi|^2"),
    ("kg_E", "wave_E + m^2 int phi^2"),
    ("econ_def", "weighted conformal energy, definition form (NaN unless supported in K)"),
    ("econ_id", "weighted conformal energy, identity form (NaN unless supported in K)"),
    ("psi_vf1", "sqrt(sum_{|I|=1} ||Gamma^I psi||^2), hatted fields"),
    ("psi_vf2", "sqrt(sum_{|I|=2} ||Gamma^I psi||^2), hatted fields"),
    ("dphi_vf0", "||d phi|| (space-time gradient)"),
    ("dphi_vf1", "sqrt(sum_{|I|=1} ||d Gamma^I phi||^2)"),
    ("dphi_vf2", "sqrt(sum_{|I|=2} ||d Gamma^I phi||^2)"),
    ("phi_z0", "||phi||"),
    ("phi_z1", "sqrt(sum_{|I|=1} ||Z^I phi||^2)"),
    ("phi_z2", "sqrt(sum_{|I|=2} ||Z^I phi||^2)"),
    ("sup_psi", "max |psi|"),
    ("sup_phi", "max |phi|"),
    ("sup_psi_w32", "max <t + r>^{3/2} |psi|"),
    ("sup_psi_wkl", "max (t + r) <t - r>^{1/2} |psi|"),
    ("sup_phi_w1", "max (t + r) |phi|"),
];

/// Observer that records every functional at each output window.
///
/// Vector-field columns are included up to the order the window supports:
/// `psi_vf{k}` and `phi_z{k}` need `half >= 2k`, `dphi_vf{k}` needs `half >= 2k + 2`.
pub struct EnergyTracker {
    pub case: CaseConfig,
    pub delta: f64,
    pub series: EnergySeries,
    ghost_acc: f64,
    ghost_prev: Option<(f64, f64)>,
    ghost_at_step: Vec<f64>,
    psi_order: usize,
    dphi_order: Option<usize>,
}

impl EnergyTracker {
    pub fn new(case: CaseConfig, delta: f64, window_half: usize) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::NonPositive(delta));
        }
        if window_half < 2 {
            return Err(Error::WindowTooShort { need: 5, have: 2 * window_half + 1 });
        }
        let psi_order = (window_half / 2).min(2);
        let dphi_order = if window_half >= 2 { Some(((window_half - 2) / 2).min(2)) } else { None };
        let mut cols: Vec<&str> = vec!["dirac_l2", "ghost_spacetime", "ghost_energy", "wave_E", "conformal_F", "kg_E", "econ_def", "econ_id"];
        cols.extend(["psi_vf1", "psi_vf2"].iter().take(psi_order));
        if let Some(k) = dphi_order {
            cols.extend(["dphi_vf0", "dphi_vf1", "dphi_vf2"].iter().take(k + 1));
        }
        cols.extend(["phi_z0", "phi_z1", "phi_z2"].iter().take(psi_order + 1));
        cols.extend(["sup_psi", "sup_phi", "sup_psi_w32", "sup_psi_wkl", "sup_phi_w1"]);
        Ok(EnergyTracker {
            case,
            delta,
            series: EnergySeries::new(&cols),
            ghost_acc: 0.0,
            ghost_prev: None,
            ghost_at_step: Vec::new(),
            psi_order,
            dphi_order,
        })
    }

    /// Hatted family acting on the spinor: `Gamma-hat` when massless, `Z-hat` otherwise.
    pub fn psi_family(&self) -> Vec<FieldOp> {
        if self.case.dirac_mass == 0.0 {
            FieldOp::gamma_hat_family()
        } else {
            FieldOp::z_hat_family()
        }
    }

    /// Family for `d Gamma^I phi`: `Gamma` when both masses vanish, `Z` otherwise.
    pub fn phi_family(&self) -> Vec<FieldOp> {
        if self.case.dirac_mass == 0.0 && self.case.scalar_mass == 0.0 {
            FieldOp::gamma_family()
        } else {
            FieldOp::z_family()
        }
    }

    /// Evaluates every column on one window.
    pub fn row(&self, w: &StateWindow, ghost_spacetime: f64) -> Result<BTreeMap<String, f64>> {
        let mut row = BTreeMap::new();
        let c = w.center();
        let t = c.t;
        let g = c.grid;
        let psi_w = w.psi();
        let phi_w = w.phi();
        let l2 = c.psi.l2_sqr();
        row.insert("dirac_l2".into(), l2.sqrt());
        row.insert("ghost_spacetime".into(), ghost_spacetime);
        row.insert("ghost_energy".into(), l2 + ghost_spacetime);
        let phi5 = phi_w.sub_window(2)?;
        let (e, f) = wave_energies(&phi5)?;
        row.insert("wave_E".into(), e);
        row.insert("conformal_F".into(), f);
        let m2 = self.case.scalar_mass * self.case.scalar_mass;
        row.insert("kg_E".into(), e + m2 * c.phi.l2_sqr());
        let (ed, ei) = weighted_conformal(&phi5).unwrap_or((f64::NAN, f64::NAN));
        row.insert("econ_def".into(), ed);
        row.insert("econ_id".into(), ei);
        let pv = vector_field_l2(&psi_w, &self.psi_family(), self.psi_order)?;
        for k in 1..=self.psi_order {
            row.insert(format!("psi_vf{k}"), pv[k]);
        }
        if let Some(k) = self.dphi_order {
            let dv = gradient_vector_field_l2(&phi_w, &self.phi_family(), k)?;
            for (j, v) in dv.iter().enumerate() {
                row.insert(format!("dphi_vf{j}"), *v);
            }
        }
        let zv = vector_field_l2(&phi_w, &FieldOp::z_family(), self.psi_order)?;
        for (j, v) in zv.iter().enumerate() {
            row.insert(format!("phi_z{j}"), *v);
        }
        let sup = |f: &(dyn Fn(usize) -> f64 + Sync)| max_fn(&g, f);
        row.insert("sup_psi".into(), c.psi.max_norm());
        row.insert("sup_phi".into(), c.phi.max_norm());
        row.insert("sup_psi_w32".into(), sup(&|i| japanese(t + g.radius(i)).powf(1.5) * c.psi.data[i].norm()));
        row.insert("sup_psi_wkl".into(), sup(&|i| (t + g.radius(i)) * japanese(t - g.radius(i)).sqrt() * c.psi.data[i].norm()));
        row.insert("sup_phi_w1".into(), sup(&|i| (t + g.radius(i)) * c.phi.data[i].abs()));
        Ok(row)
    }
}

impl Observer for EnergyTracker {
    fn on_step(&mut self, s: &FieldState, _dt: f64) -> Result<()> {
        let gi = ghost_integrand(&s.psi, s.t, self.delta);
        if let Some((tp, gp)) = self.ghost_prev {
            self.ghost_acc += 0.5 * (s.t - tp) * (gi + gp);
        }
        self.ghost_prev = Some((s.t, gi));
        self.ghost_at_step.push(self.ghost_acc);
        Ok(())
    }

    fn on_window(&mut self, w: &StateWindow) -> Result<()> {
        let ghost = self.ghost_at_step.get(w.step).copied().unwrap_or(self.ghost_acc);
        let row = self.row(w, ghost)?;
        self.series.push(w.t(), &row)
    }
}

/// `t` at which the centre of an output window sits.
pub fn output_time(step: usize, dt: f64) -> f64 {
    T0 + step as f64 * dt
}

/// `psi* gamma^0 psi`, real for every spinor.
pub fn scalar_density(psi: &SpinorLattice) -> ScalarLattice {
    psi.map(|v| v.dot(&gamma0_apply(v)).re)
}
