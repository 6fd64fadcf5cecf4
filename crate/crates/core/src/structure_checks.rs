//! Nonlinear structure identities evaluated along computed solutions, and
//! refinement studies of their residuals.

use serde::{Deserialize, Serialize};

use crate::clifford::{gammas, Sign, Spinor, C64, I};
use crate::dkg_solver::{alpha_apply, run, CaseConfig, CaseId, InitialData, Observer, RunConfig, StateWindow, T0};
use crate::error::{Error, Result};
use crate::functionals::{ghost_identity_lattice, masked_max, GhostProfile};
use crate::lattice::{japanese, max_fn, omega_at, ComplexLattice, GridSpec, Lattice, ScalarLattice};
use crate::report::IdentityReport;
use crate::vector_fields::{apply, apply_multi, compose_box, compose_dirac, interior_max, null_form_q0, null_form_qab, slash, FieldOp, HistoryWindow};

/// The three nonlinearities of the hidden-structure rewriting (pseudoscalar case).
#[derive(Clone, Debug)]
pub struct NTerms {
    /// `-phi psi* gamma^0 (i gamma^mu d_mu psi + psi)` from derivatives.
    pub n1: ComplexLattice,
    /// Same with the on-shell substitution `i gamma^mu d_mu psi + psi = 2 psi - i phi gamma^5 psi`.
    pub n1_onshell: ComplexLattice,
    /// `-phi^2 psi* Upsilon psi`.
    pub n2: ComplexLattice,
    /// `sum_a Q_0a(psi, i gamma^5 gamma^a psi) + sum_{b<a} Q_ab(gamma^0 gamma^a psi, i gamma^5 gamma^b psi)`.
    pub n3: ComplexLattice,
}

/// `psi* Upsilon psi` on every level.
pub fn upsilon_density(psi: &HistoryWindow<Spinor>) -> HistoryWindow<f64> {
    let u = &gammas().upsilon;
    psi.map(|v| v.dot(&u.apply(v)).re)
}

pub fn n_terms(psi: &HistoryWindow<Spinor>, phi: &ScalarLattice) -> Result<NTerms> {
    psi.require(5)?;
    let gs = gammas();
    let g = psi.grid();
    let c = psi.center();
    let grad = psi.gradient()?;
    let n1 = Lattice::from_index_fn(g, |i| {
        let v = c.data[i];
        let d = [grad[0].data[i], grad[1].data[i], grad[2].data[i], grad[3].data[i]];
        let w = slash(&d).scale(I) + v;
        -v.dot(&gs.gamma0_apply(&w)) * phi.data[i]
    });
    let n1_onshell = Lattice::from_index_fn(g, |i| {
        let v = c.data[i];
        let w = v * 2.0 - gs.gamma5.apply(&v).scale(I * phi.data[i]);
        -v.dot(&gs.gamma0_apply(&w)) * phi.data[i]
    });
    let n2 = Lattice::from_index_fn(g, |i| {
        let v = c.data[i];
        -v.dot(&gs.upsilon.apply(&v)) * (phi.data[i] * phi.data[i])
    });
    let ig5ga: Vec<HistoryWindow<Spinor>> = (1..=3)
        .map(|a| {
            let m = (gs.gamma5 * gs.gamma[a]).scale(I);
            psi.map(|v| m.apply(v))
        })
        .collect();
    let alpha_psi: Vec<HistoryWindow<Spinor>> = (0..3).map(|a| psi.map(|v| alpha_apply(a, v))).collect();
    let mut n3 = Lattice::<C64>::zeros(g);
    for a in 1..=3 {
        let q = null_form_qab(psi, &ig5ga[a - 1], 0, a)?;
        n3 = n3.add(&q)?;
        for b in 1..a {
            let q = null_form_qab(&alpha_psi[a - 1], &ig5ga[b - 1], a, b)?;
            n3 = n3.add(&q)?;
        }
    }
    Ok(NTerms { n1, n1_onshell, n2, n3 })
}

/// Window of `phi + psi* Upsilon psi / 4`.
pub fn modified_scalar(psi: &HistoryWindow<Spinor>, phi: &HistoryWindow<f64>) -> Result<HistoryWindow<f64>> {
    let ups = upsilon_density(psi);
    let levels = phi.levels.iter().zip(&ups.levels).map(|(p, u)| p.zip_map(u, |a: &f64, b: &f64| a + 0.25 * b)).collect::<Result<Vec<_>>>()?;
    HistoryWindow::new(levels, phi.dt, phi.t_center)
}

/// Residual lattices of the hidden-structure identities at the window centre.
#[derive(Clone, Debug)]
pub struct HiddenResiduals {
    /// `-box phi_tilde - (N1 + N2 + N3) / 2`.
    pub hidden_wave: ComplexLattice,
    /// Same with the on-shell `N1`.
    pub hidden_wave_onshell: ComplexLattice,
    /// `psi* Upsilon psi - Q_0(psi, Upsilon psi) - N1 - N3`.
    pub expansion: ComplexLattice,
    pub expansion_onshell: ComplexLattice,
    /// `-box(psi* Upsilon psi) + 2 psi* Upsilon psi + 2 Q_0(psi, Upsilon psi) - 2 N2`.
    pub box_expansion: ComplexLattice,
    /// `N1 - N1 (on shell)`.
    pub n1_paths: ComplexLattice,
}

pub fn hidden_residuals(psi: &HistoryWindow<Spinor>, phi: &HistoryWindow<f64>) -> Result<HiddenResiduals> {
    let psi = psi.sub_window(2)?;
    let phi = phi.sub_window(2)?;
    let g = psi.grid();
    let nt = n_terms(&psi, phi.center())?;
    let tilde = modified_scalar(&psi, &phi)?;
    let box_tilde = compose_box(&tilde, 0.0)?;
    let ups = upsilon_density(&psi);
    let box_ups = compose_box(&ups, 0.0)?;
    let u_psi = psi.map(|v| gammas().upsilon.apply(v));
    let q0 = null_form_q0(&psi, &u_psi)?;
    let uc = ups.center();
    let re = |x: f64| C64::new(x, 0.0);
    let build = |f: &(dyn Fn(usize) -> C64 + Sync)| Lattice::from_index_fn(g, |i| f(i));
    let hw = |n1: &ComplexLattice| build(&|i| re(box_tilde.data[i]) - (n1.data[i] + nt.n2.data[i] + nt.n3.data[i]) * 0.5);
    let ex = |n1: &ComplexLattice| build(&|i| re(uc.data[i]) - q0.data[i] - n1.data[i] - nt.n3.data[i]);
    Ok(HiddenResiduals {
        hidden_wave: hw(&nt.n1),
        hidden_wave_onshell: hw(&nt.n1_onshell),
        expansion: ex(&nt.n1),
        expansion_onshell: ex(&nt.n1_onshell),
        box_expansion: build(&|i| re(box_ups.data[i] + 2.0 * uc.data[i]) + q0.data[i] * 2.0 - nt.n2.data[i] * 2.0),
        n1_paths: build(&|i| nt.n1.data[i] - nt.n1_onshell.data[i]),
    })
}

/// Max-norm of `-box phi_tilde - (N1 + N2 + N3) / 2`.
pub fn hidden_wave_residual(psi: &HistoryWindow<Spinor>, phi: &HistoryWindow<f64>) -> Result<f64> {
    Ok(interior_max(&hidden_residuals(psi, phi)?.hidden_wave, 2))
}

/// Max-norm of `psi* Upsilon psi - Q_0(psi, Upsilon psi) - N1 - N3`.
pub fn psi_upsilon_expansion_residual(psi: &HistoryWindow<Spinor>, phi: &HistoryWindow<f64>) -> Result<f64> {
    Ok(interior_max(&hidden_residuals(psi, phi)?.expansion, 2))
}

/// Residual lattices of the auxiliary-field reconstruction at the window centre:
/// `-i gamma^mu d_mu Psi - psi` and `[psi]_- + i (I - omega_a gamma^0 gamma^a) gamma^b G_b Psi`.
pub fn aux_reconstruction_lattices(big_psi: &HistoryWindow<Spinor>, psi: &crate::lattice::SpinorLattice) -> Result<(crate::lattice::SpinorLattice, crate::lattice::SpinorLattice)> {
    let gs = gammas();
    let g = big_psi.grid();
    let d = compose_dirac(big_psi, 0.0)?;
    let rec = d.sub(psi)?;
    let goods: Vec<Lattice<Spinor>> = (1..=3).map(|b| apply(FieldOp::G(b), big_psi)).collect::<Result<_>>()?;
    let minus = Lattice::from_index_fn(g, |i| {
        let om = omega_at(g.position(i));
        let mut s = Spinor::zero();
        for b in 0..3 {
            s += gs.gamma[b + 1].apply(&goods[b].data[i]);
        }
        let rhs = gs.project_raw(&s, om, Sign::Minus).scale(-I);
        gs.project_raw(&psi.data[i], om, Sign::Minus) - rhs
    });
    Ok((rec, minus))
}

/// Max-norms of the two reconstruction residuals; the projection residual is
/// measured on `r >= mask_radius`.
pub fn aux_reconstruction_residuals(w: &StateWindow, mask_radius: f64) -> Result<(f64, f64)> {
    let big = w.big_psi().ok_or_else(|| Error::Config("window carries no auxiliary field".into()))?;
    let (rec, minus) = aux_reconstruction_lattices(&big.sub_window(2)?, &w.center().psi)?;
    Ok((interior_max(&rec, 2), masked_max(&minus, mask_radius, 2)))
}

/// Ratio diagnostic `|d_r [psi]_-| / ((t + r)^{-1} (sum |Gamma-hat psi| + |psi|) + |G|)`
/// on nodes with `t - r >= 1`, where `G = phi V psi - M psi`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RatioReport {
    pub name: String,
    pub t: f64,
    /// `None` when the denominator vanishes everywhere.
    pub max_ratio: Option<f64>,
    pub nodes: usize,
}

pub fn radial_derivative_bound_diag(w: &StateWindow, case: &CaseConfig) -> Result<RatioReport> {
    let psi = w.psi().sub_window(2)?;
    let g = psi.grid();
    let t = psi.t_center;
    let c = psi.center();
    let phi = &w.center().phi;
    let gs = gammas();
    let fields: Vec<Lattice<Spinor>> = FieldOp::gamma_hat_family().iter().map(|op| apply(*op, &psi)).collect::<Result<_>>()?;
    let grad: Vec<Lattice<Spinor>> = (1..=3).map(|a| c.dx(a, 1)).collect();
    let scale = c.max_norm();
    let count = std::sync::atomic::AtomicUsize::new(0);
    let m = max_fn(&g, |i| {
        let r = g.radius(i);
        if t - r < 1.0 || scale == 0.0 {
            return 0.0;
        }
        let om = omega_at(g.position(i));
        let mut dr = Spinor::zero();
        for a in 0..3 {
            dr += grad[a].data[i] * om[a];
        }
        let lhs = gs.project_raw(&dr, om, Sign::Minus).norm();
        let v = c.data[i];
        let src = case.v.apply(&v) * phi.data[i] - v * case.dirac_mass;
        let rhs = (fields.iter().map(|f| f.data[i].norm()).sum::<f64>() + v.norm()) / (t + r) + src.norm();
        if rhs <= 1e-8 * scale {
            return 0.0;
        }
        count.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        lhs / rhs
    });
    let nodes = count.into_inner();
    Ok(RatioReport {
        name: "radial_derivative_minus_bound".into(),
        t,
        max_ratio: (nodes > 0).then_some(m),
        nodes,
    })
}

/// `max |Q_ab(f, g)| <t + r> / (sum_Z |Z f|)(sum_Z |Z g|)` over all index pairs, on
/// nodes where the denominator exceeds `1e-8` of its maximum.
pub fn null_form_ratio(f: &HistoryWindow<f64>, g: &HistoryWindow<f64>) -> Result<f64> {
    let grid = f.grid();
    let t = f.t_center;
    let fam = FieldOp::gamma_family();
    let zf: Vec<ScalarLattice> = fam.iter().map(|op| apply(*op, f)).collect::<Result<_>>()?;
    let zg: Vec<ScalarLattice> = fam.iter().map(|op| apply(*op, g)).collect::<Result<_>>()?;
    let den = Lattice::from_index_fn(grid, |i| zf.iter().map(|l| l.data[i].abs()).sum::<f64>() * zg.iter().map(|l| l.data[i].abs()).sum::<f64>());
    let dmax = den.max_norm();
    let mut worst = 0.0f64;
    for a in 0..4 {
        for b in (a + 1)..4 {
            let q = null_form_qab(f, g, a, b)?;
            let m = max_fn(&grid, |i| if den.data[i] > 1e-8 * dmax { q.data[i].norm() * japanese(t + grid.radius(i)) / den.data[i] } else { 0.0 });
            worst = worst.max(m);
        }
    }
    Ok(worst)
}

/// `max (<t - r> |d f| + <t + r> sum_a |G_a f|) / sum_Gamma |Gamma f|`.
pub fn good_derivative_ratio(f: &HistoryWindow<f64>) -> Result<f64> {
    let grid = f.grid();
    let t = f.t_center;
    let grad = f.gradient()?;
    let goods: Vec<ScalarLattice> = (1..=3).map(|a| apply(FieldOp::G(a), f)).collect::<Result<_>>()?;
    let gam: Vec<ScalarLattice> = FieldOp::gamma_family().iter().map(|op| apply(*op, f)).collect::<Result<_>>()?;
    let den = Lattice::from_index_fn(grid, |i| gam.iter().map(|l| l.data[i].abs()).sum::<f64>());
    let dmax = den.max_norm();
    Ok(max_fn(&grid, |i| {
        if den.data[i] <= 1e-8 * dmax {
            return 0.0;
        }
        let r = grid.radius(i);
        let d: f64 = grad.iter().map(|l| l.data[i] * l.data[i]).sum::<f64>().sqrt();
        let gsum: f64 = goods.iter().map(|l| l.data[i].abs()).sum();
        (japanese(t - r) * d + japanese(t + r) * gsum) / den.data[i]
    }))
}

/// `max_{j,k} ||[Z_j, Z_k] f|| / (||f|| + sum_Z ||Z f||)` over `Gamma`; needs nine levels.
pub fn commutator_ratio(f: &HistoryWindow<f64>) -> Result<f64> {
    let fam = FieldOp::gamma_family();
    let c5 = f.sub_window(2)?;
    let base = c5.center().l2() + fam.iter().map(|op| apply(*op, &c5).map(|l| l.l2())).sum::<Result<f64>>()?;
    let mut worst = 0.0f64;
    for (j, a) in fam.iter().enumerate() {
        for b in fam.iter().skip(j + 1) {
            let ab = apply_multi(&[*a, *b], f)?;
            let ba = apply_multi(&[*b, *a], f)?;
            worst = worst.max(ab.sub(&ba)?.l2() / base);
        }
    }
    Ok(worst)
}

/// Parameters of a refinement study along solutions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyConfig {
    pub case: CaseId,
    pub resolutions: Vec<usize>,
    pub half_width: f64,
    /// `dt = cfl * h`.
    pub cfl: f64,
    pub t_eval: f64,
    pub epsilon: f64,
    pub r0: f64,
    pub width: f64,
    pub delta: f64,
    pub seed: u64,
    /// Nodes with `r` below this radius are excluded from direction-dependent residuals.
    pub mask_radius: f64,
    pub min_order: f64,
}

impl StudyConfig {
    pub fn new(case: CaseId) -> Self {
        StudyConfig {
            case,
            resolutions: vec![32, 48, 64],
            half_width: 7.0,
            cfl: 0.25,
            t_eval: 2.5,
            epsilon: 1e-3,
            r0: 3.5,
            width: 1.0,
            delta: 0.05,
            seed: 1,
            mask_radius: 0.5,
            min_order: 1.8,
        }
    }

    fn run_config(&self, n: usize) -> Result<RunConfig> {
        let grid = GridSpec::zero_pad(n, self.half_width)?;
        let case = CaseConfig::new(self.case);
        let steps = ((self.t_eval - T0) / (self.cfl * grid.h)).ceil().max(1.0) as usize;
        let dt = (self.t_eval - T0) / steps as f64;
        Ok(RunConfig {
            grid,
            dt,
            t_end: self.t_eval,
            case,
            data: InitialData::new(self.epsilon, self.r0, self.seed).with_width(self.width),
            delta: self.delta,
            cadence: usize::MAX / 4,
            seed: self.seed,
            aux: matches!(self.case, CaseId::I | CaseId::II),
            window_half: 2,
            diagnostic_dir: None,
            contamination_tolerance: 1e-6,
        })
    }
}

/// Captures the window whose centre lies at the final step.
struct Capture {
    at: usize,
    window: Option<StateWindow>,
}

impl Observer for Capture {
    fn on_window(&mut self, w: &StateWindow) -> Result<()> {
        if w.step == self.at {
            self.window = Some(w.clone());
        }
        Ok(())
    }
}

/// Evolves to `t_eval` and returns the five-level window centred there.
pub fn window_at(cfg: &RunConfig) -> Result<StateWindow> {
    let steps = cfg.steps();
    let cfg = RunConfig { cadence: steps.saturating_sub(cfg.window_half).max(1), ..cfg.clone() };
    let mut cap = Capture { at: steps, window: None };
    run(&cfg, &mut cap)?;
    cap.window.ok_or_else(|| Error::Config(format!("no window at step {steps}")))
}

/// Residual max-norms for every identity applicable to the case, at one resolution.
pub fn residuals_at(cfg: &StudyConfig, w: &StateWindow) -> Result<Vec<(String, f64, Option<String>)>> {
    let mut out = Vec::new();
    let case = CaseConfig::new(cfg.case);
    let mask = Some(format!("r >= {}", cfg.mask_radius));
    let psi = w.psi();
    let profile = GhostProfile::for_grid(cfg.delta, &psi.grid(), w.t() - 1.0, w.t() + 1.0)?;
    let ghost = ghost_identity_lattice(&psi, &w.center().phi, &case, &profile)?;
    out.push(("ghost_divergence_identity".into(), masked_max(&ghost, cfg.mask_radius, 2), mask.clone()));
    match cfg.case {
        CaseId::III => {
            let r = hidden_residuals(&psi, &w.phi())?;
            out.push(("hidden_wave_identity".into(), interior_max(&r.hidden_wave, 2), None));
            out.push(("hidden_wave_identity_onshell_n1".into(), interior_max(&r.hidden_wave_onshell, 2), None));
            out.push(("psi_upsilon_expansion".into(), interior_max(&r.expansion, 2), None));
            out.push(("psi_upsilon_expansion_onshell_n1".into(), interior_max(&r.expansion_onshell, 2), None));
            out.push(("box_psi_upsilon_expansion".into(), interior_max(&r.box_expansion, 2), None));
            out.push(("n1_two_paths".into(), interior_max(&r.n1_paths, 2), None));
        }
        CaseId::I | CaseId::II => {
            let (rec, minus) = aux_reconstruction_residuals(w, cfg.mask_radius)?;
            out.push(("aux_dirac_reconstruction".into(), rec, None));
            out.push(("aux_minus_good_derivative".into(), minus, mask.clone()));
        }
        _ => {}
    }
    Ok(out)
}

/// Refinement study: one report per identity with residuals at every resolution.
pub fn structure_study(cfg: &StudyConfig) -> Result<Vec<IdentityReport>> {
    let mut per_level: Vec<Vec<(String, f64, Option<String>)>> = Vec::new();
    let mut spacings = Vec::new();
    for &n in &cfg.resolutions {
        let rc = cfg.run_config(n)?;
        spacings.push(rc.grid.h);
        let w = window_at(&rc)?;
        per_level.push(residuals_at(cfg, &w)?);
    }
    let names: Vec<(String, Option<String>)> = per_level[0].iter().map(|(n, _, m)| (n.clone(), m.clone())).collect();
    Ok(names
        .iter()
        .enumerate()
        .map(|(k, (name, mask))| {
            let res: Vec<f64> = per_level.iter().map(|l| l[k].1).collect();
            let rep = IdentityReport::convergence(name, &cfg.resolutions, &spacings, &res, cfg.min_order).with_seed(cfg.seed);
            match mask {
                Some(m) => rep.with_mask(m.clone()),
                None => rep,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::ONE;
    use crate::dkg_solver::gamma0_apply;

    fn grid() -> GridSpec {
        GridSpec::zero_pad(17, 3.0).unwrap()
    }

    #[test]
    fn zero_fields_give_zero() {
        let g = grid();
        let psi = HistoryWindow::from_fn(g, 3.0, 0.1, 2, |_, _| Spinor::zero());
        let phi = HistoryWindow::from_fn(g, 3.0, 0.1, 2, |_, _| 0.0);
        let nt = n_terms(&psi, phi.center()).unwrap();
        assert_eq!(nt.n1.max_norm() + nt.n2.max_norm() + nt.n3.max_norm(), 0.0);
        assert_eq!(hidden_wave_residual(&psi, &phi).unwrap(), 0.0);
        assert_eq!(psi_upsilon_expansion_residual(&psi, &phi).unwrap(), 0.0);
    }

    #[test]
    fn phi_zero_kills_n1_n2() {
        let g = GridSpec::zero_pad(21, 3.0).unwrap();
        let p = Spinor::new([ONE, C64::new(0.0, 0.5), C64::new(0.2, 0.0), ZERO_C]);
        let psi = HistoryWindow::from_fn(g, 3.0, 0.05, 2, |t, x| {
            let b = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
            let s = t - 2.0;
            (p * s.cos() + gamma0_apply(&p).scale(C64::new(0.0, -s.sin()))) * b
        });
        let phi = Lattice::zeros(g);
        let nt = n_terms(&psi, &phi).unwrap();
        assert_eq!(nt.n1.max_norm(), 0.0);
        assert_eq!(nt.n2.max_norm(), 0.0);
        assert!(nt.n3.max_norm() > 0.0);
    }

    const ZERO_C: C64 = C64 { re: 0.0, im: 0.0 };

    #[test]
    fn aux_zero() {
        let g = grid();
        let big = HistoryWindow::from_fn(g, 3.0, 0.1, 2, |_, _| Spinor::zero());
        let (a, b) = aux_reconstruction_lattices(&big, &Lattice::zeros(g)).unwrap();
        assert_eq!(a.max_norm() + b.max_norm(), 0.0);
    }

    #[test]
    fn radial_ratio_vacuous_for_zero() {
        let g = grid();
        let s = crate::lattice::FieldState::zeros(g, 4.0, CaseId::I);
        let w = StateWindow { states: vec![s.clone(); 5], dt: 0.1, step: 2 };
        let r = radial_derivative_bound_diag(&w, &CaseConfig::new(CaseId::I)).unwrap();
        assert_eq!(r.max_ratio, None);
    }
}
