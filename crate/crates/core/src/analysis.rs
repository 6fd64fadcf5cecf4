//! Decay-rate fits, uniform-energy monitoring and scattering diagnostics.

use serde::{Deserialize, Serialize};

use crate::dkg_solver::free_flow::{embed, embedding_grid, FlowKind, FreeFlow, Symbol};
use crate::dkg_solver::{CaseConfig, Observer, StateWindow, T0};
use crate::error::{Error, Result};
use crate::functionals::{column_degree, EnergySeries};
use crate::lattice::{FieldState, GridSpec, Lattice, ScalarLattice, SpinorLattice};
use crate::report::least_squares_slope;

pub const MIN_FIT_SAMPLES: usize = 5;

/// Power-law fit `y ~ exp(intercept) t^exponent`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log y`.
    pub rms: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares slope of `log y` against `log t` over `window` (inclusive).
pub fn fit_decay(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(Error::Config("time and value series differ in length".into()));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&ti, &yi) in t.iter().zip(y) {
        if ti < window.0 || ti > window.1 {
            continue;
        }
        if yi.is_nan() || yi <= 0.0 || ti <= 0.0 {
            return Err(Error::NonPositive(if ti <= 0.0 { ti } else { yi }));
        }
        lx.push(ti.ln());
        ly.push(yi.ln());
    }
    if lx.len() < MIN_FIT_SAMPLES {
        return Err(Error::FitWindow(lx.len()));
    }
    let (exponent, intercept, rms) = least_squares_slope(&lx, &ly);
    Ok(DecayFit { exponent, intercept, rms, window, samples: lx.len() })
}

/// Weights multiplying the sup-norm before fitting.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum DecayWeight {
    None,
    /// `<t + r>^{3/2}`.
    Bracket32,
    /// `(t + r) <t - r>^{1/2}`.
    KlainermanSobolev,
    /// `t + r`.
    Linear,
}

impl DecayWeight {
    /// Series column holding the weighted sup-norm of `field` ("psi" or "phi").
    pub fn column(self, field: &str) -> Option<String> {
        let suffix = match self {
            DecayWeight::None => "",
            DecayWeight::Bracket32 => "_w32",
            DecayWeight::KlainermanSobolev => "_wkl",
            DecayWeight::Linear => "_w1",
        };
        let c = format!("sup_{field}{suffix}");
        match c.as_str() {
            "sup_psi" | "sup_phi" | "sup_psi_w32" | "sup_psi_wkl" | "sup_phi_w1" => Some(c),
            _ => None,
        }
    }

    /// Weights recorded for `field`.
    pub fn for_field(field: &str) -> Vec<DecayWeight> {
        [DecayWeight::Bracket32, DecayWeight::KlainermanSobolev, DecayWeight::Linear]
            .into_iter()
            .filter(|w| w.column(field).is_some())
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecayReport {
    pub field: String,
    pub unweighted: DecayFit,
    pub weighted: Vec<(DecayWeight, DecayFit)>,
    /// Accepted exponent interval for the unweighted fit, if any.
    pub accepted: Option<(f64, f64)>,
    pub passed: Option<bool>,
}

/// Unweighted and weighted fits of the sup-norm of `field` over `window`.
pub fn decay_report(series: &EnergySeries, field: &str, window: (f64, f64), accepted: Option<(f64, f64)>) -> Result<DecayReport> {
    let col = |w: DecayWeight| -> Result<&[f64]> {
        let name = w.column(field).ok_or_else(|| Error::Config(format!("no sup-norm column for {field}")))?;
        series.column(&name).ok_or_else(|| Error::Config(format!("series lacks column {name}")))
    };
    let unweighted = fit_decay(&series.times, col(DecayWeight::None)?, window)?;
    let weighted = DecayWeight::for_field(field)
        .into_iter()
        .map(|w| Ok((w, fit_decay(&series.times, col(w)?, window)?)))
        .collect::<Result<Vec<_>>>()?;
    let passed = accepted.map(|(lo, hi)| unweighted.exponent >= lo && unweighted.exponent <= hi);
    Ok(DecayReport { field: field.into(), unweighted, weighted, accepted, passed })
}

/// Columns checked by default for uniform boundedness when present.
///
/// The cumulative ghost columns are excluded; the ghost spacetime integral has
/// its own growth check.
pub const MONITORED: &[&str] = &[
    "dirac_l2",
    "wave_E",
    "kg_E",
    "conformal_F",
    "psi_vf1",
    "psi_vf2",
    "dphi_vf0",
    "dphi_vf1",
    "dphi_vf2",
    "phi_z0",
    "phi_z1",
    "phi_z2",
];

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MonitorEntry {
    pub column: String,
    pub min: f64,
    pub max: f64,
    /// `(max - min) / max` over the monitored window.
    pub oscillation: f64,
    /// Homogeneity degree under `(psi, phi) -> lambda (psi, phi)`.
    pub degree: u32,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MonitorReport {
    pub t_after: f64,
    pub bound: f64,
    pub entries: Vec<MonitorEntry>,
    /// `(value at t_ref, final value, final < 2 * reference)` for the ghost spacetime integral.
    pub ghost_growth: Option<(f64, f64, bool)>,
    pub passed: bool,
}

/// Relative oscillation of every column in `columns` over `t >= t_after`.
pub fn uniform_energy_monitor(series: &EnergySeries, columns: &[&str], t_after: f64, bound: f64, ghost_ref: Option<f64>) -> Result<MonitorReport> {
    let keep: Vec<usize> = (0..series.len()).filter(|&i| series.times[i] >= t_after).collect();
    let mut entries = Vec::new();
    for &c in columns {
        let Some(v) = series.column(c) else { continue };
        let vals: Vec<f64> = keep.iter().map(|&i| v[i]).filter(|x| !x.is_nan()).collect();
        if vals.is_empty() {
            continue;
        }
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let oscillation = if max > 0.0 { (max - min) / max } else { 0.0 };
        entries.push(MonitorEntry { column: c.into(), min, max, oscillation, degree: column_degree(c), passed: oscillation <= bound });
    }
    let ghost_growth = match (ghost_ref, series.column("ghost_spacetime")) {
        (Some(tr), Some(g)) if !series.is_empty() => {
            let k = series.times.iter().position(|&t| t >= tr).ok_or_else(|| Error::Config(format!("series ends before t = {tr}")))?;
            let last = *g.last().unwrap();
            Some((g[k], last, last < 2.0 * g[k]))
        }
        _ => None,
    };
    let passed = entries.iter().all(|e| e.passed) && ghost_growth.map_or(true, |g| g.2);
    Ok(MonitorReport { t_after, bound, entries, ghost_growth, passed })
}

/// Which component is back-evolved.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum ScatterKind {
    /// `psi` under the free Dirac flow; source `phi V psi`.
    Dirac,
    /// `(phi, phi_t)` under the free Klein-Gordon flow; source `psi* U psi`.
    Wave,
}

impl ScatterKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirac" | "psi" => Ok(ScatterKind::Dirac),
            "wave" | "phi" => Ok(ScatterKind::Wave),
            _ => Err(Error::Config(format!("unknown scatter kind {s}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScatterDiag {
    pub kind: ScatterKind,
    pub times: Vec<f64>,
    /// `d(t_{k-1}, t_k)` for consecutive output times, `k >= 1`.
    pub consecutive: Vec<f64>,
    /// `d(t_0, t_k)`.
    pub from_first: Vec<f64>,
    /// `||source(t_k)||_{L^2}`.
    pub source_norms: Vec<f64>,
    /// `int_{t_k}^{T} ||source|| dtau` by the trapezoid rule over output times.
    pub tails: Vec<f64>,
}

impl ScatterDiag {
    pub fn tails_nonincreasing(&self) -> bool {
        self.tails.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn tails_strictly_decreasing(&self) -> bool {
        self.tails.windows(2).all(|w| w[1] < w[0])
    }

    pub fn max_cauchy(&self) -> f64 {
        self.from_first.iter().chain(&self.consecutive).copied().fold(0.0, f64::max)
    }
}

/// Back-evolved data on the periodic embedding.
#[derive(Clone, Debug)]
enum Scattered {
    Dirac(SpinorLattice),
    Wave(ScalarLattice, ScalarLattice),
}

fn distance(a: &Scattered, b: &Scattered) -> Result<f64> {
    match (a, b) {
        (Scattered::Dirac(x), Scattered::Dirac(y)) => Ok(x.sub(y)?.l2()),
        (Scattered::Wave(u, ut), Scattered::Wave(v, vt)) => {
            let du = u.sub(v)?;
            let grad: f64 = (1..=3).map(|a| du.dx(a, 1).l2_sqr()).sum();
            Ok((grad + ut.sub(vt)?.l2_sqr()).sqrt())
        }
        _ => Err(Error::Config("mixed scatter kinds".into())),
    }
}

/// Streams output states, back-evolving each to `t = 2` with the free flow of the case.
pub struct ScatterTracker {
    pub kind: ScatterKind,
    case: CaseConfig,
    flow: Option<FreeFlow>,
    symbol: Symbol,
    first: Option<Scattered>,
    prev: Option<Scattered>,
    times: Vec<f64>,
    consecutive: Vec<f64>,
    from_first: Vec<f64>,
    source_norms: Vec<f64>,
}

impl ScatterTracker {
    /// `symbol` selects the back-evolution; `Symbol::Lattice { dt }` with the run's
    /// `dt` reproduces the semi-discrete free flow exactly.
    pub fn new(kind: ScatterKind, case: &CaseConfig, symbol: Symbol) -> Self {
        ScatterTracker {
            kind,
            case: case.clone(),
            flow: None,
            symbol,
            first: None,
            prev: None,
            times: Vec::new(),
            consecutive: Vec::new(),
            from_first: Vec::new(),
            source_norms: Vec::new(),
        }
    }

    fn flow_for(&mut self, g: &GridSpec) -> Result<FreeFlow> {
        if let Some(f) = &self.flow {
            return Ok(f.clone());
        }
        let kind = match self.kind {
            ScatterKind::Dirac => FlowKind::Dirac { mass: self.case.dirac_mass },
            ScatterKind::Wave => FlowKind::KleinGordon { mass: self.case.scalar_mass },
        };
        let f = FreeFlow::new(kind, self.symbol, embedding_grid(g)?)?;
        self.flow = Some(f.clone());
        Ok(f)
    }

    fn source_norm(&self, s: &FieldState) -> f64 {
        if !self.case.coupled {
            return 0.0;
        }
        let g = s.grid;
        match self.kind {
            ScatterKind::Dirac => Lattice::from_index_fn(g, |i| self.case.v.apply(&s.psi.data[i]) * s.phi.data[i]).l2(),
            ScatterKind::Wave => Lattice::from_index_fn(g, |i| s.psi.data[i].dot(&self.case.u.apply(&s.psi.data[i])).re).l2(),
        }
    }

    pub fn push(&mut self, s: &FieldState) -> Result<()> {
        let flow = self.flow_for(&s.grid)?;
        let back = T0 - s.t;
        let b = match self.kind {
            ScatterKind::Dirac => Scattered::Dirac(flow.dirac(&embed(&s.psi, flow.grid), back)?),
            ScatterKind::Wave => {
                let (u, ut) = flow.wave(&embed(&s.phi, flow.grid), &embed(&s.phi_t, flow.grid), back)?;
                Scattered::Wave(u, ut)
            }
        };
        self.source_norms.push(self.source_norm(s));
        self.times.push(s.t);
        if let Some(p) = &self.prev {
            self.consecutive.push(distance(p, &b)?);
        }
        let d0 = match &self.first {
            Some(f) => distance(f, &b)?,
            None => 0.0,
        };
        self.from_first.push(d0);
        if self.first.is_none() {
            self.first = Some(b.clone());
        }
        self.prev = Some(b);
        Ok(())
    }

    pub fn diag(&self) -> ScatterDiag {
        let n = self.times.len();
        let mut tails = vec![0.0; n];
        for k in (0..n.saturating_sub(1)).rev() {
            let dt = self.times[k + 1] - self.times[k];
            tails[k] = tails[k + 1] + 0.5 * dt * (self.source_norms[k] + self.source_norms[k + 1]);
        }
        ScatterDiag {
            kind: self.kind,
            times: self.times.clone(),
            consecutive: self.consecutive.clone(),
            from_first: self.from_first.clone(),
            source_norms: self.source_norms.clone(),
            tails,
        }
    }
}

impl Observer for ScatterTracker {
    fn on_window(&mut self, w: &StateWindow) -> Result<()> {
        self.push(w.center())
    }
}

/// Scattering diagnostic of a stored trajectory.
pub fn scattering_cauchy(states: &[FieldState], case: &CaseConfig, kind: ScatterKind, symbol: Symbol) -> Result<ScatterDiag> {
    let mut tr = ScatterTracker::new(kind, case, symbol);
    for s in states {
        tr.push(s)?;
    }
    Ok(tr.diag())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dkg_solver::{run, standard_run, CaseId, StateRecorder};
    use std::collections::BTreeMap;

    fn times() -> Vec<f64> {
        (0..20).map(|k| 5.0 + 0.4 * k as f64).collect()
    }

    #[test]
    fn exact_power_law() {
        let t = times();
        let y: Vec<f64> = t.iter().map(|t| 5.0 * t.powf(-1.5)).collect();
        let f = fit_decay(&t, &y, (5.0, 13.0)).unwrap();
        assert!((f.exponent + 1.5).abs() < 1e-12);
        assert!((f.intercept - 5f64.ln()).abs() < 1e-12);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn modulated_power_law() {
        let t = times();
        let y: Vec<f64> = t.iter().map(|t| 3.0 / t * (1.0 + 0.1 * t.ln().sin())).collect();
        let f = fit_decay(&t, &y, (5.0, 13.0)).unwrap();
        assert!((f.exponent + 1.0).abs() < 0.1);
        assert!(f.rms > 0.0);
    }

    #[test]
    fn constant_series() {
        let t = times();
        let f = fit_decay(&t, &vec![2.0; t.len()], (0.0, 100.0)).unwrap();
        assert!(f.exponent.abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let t = times();
        let mut y = vec![1.0; t.len()];
        y[3] = 0.0;
        assert!(matches!(fit_decay(&t, &y, (0.0, 100.0)), Err(Error::NonPositive(_))));
        assert!(matches!(fit_decay(&t, &[1.0; 20], (5.0, 6.0)), Err(Error::FitWindow(3))));
    }

    fn series(cols: &[&str], f: impl Fn(&str, f64) -> f64) -> EnergySeries {
        let mut s = EnergySeries::new(cols);
        for t in times() {
            let row: BTreeMap<String, f64> = cols.iter().map(|c| (c.to_string(), f(c, t))).collect();
            s.push(t, &row).unwrap();
        }
        s
    }

    #[test]
    fn decay_report_weighted() {
        let cols = ["sup_psi", "sup_psi_w32", "sup_psi_wkl"];
        let s = series(&cols, |c, t| match c {
            "sup_psi" => t.powf(-1.5),
            _ => 2.0,
        });
        let r = decay_report(&s, "psi", (5.0, 13.0), Some((-1.9, -1.1))).unwrap();
        assert!((r.unweighted.exponent + 1.5).abs() < 1e-12);
        assert_eq!(r.weighted.len(), 2);
        assert!(r.weighted.iter().all(|(_, f)| f.exponent.abs() < 1e-12));
        assert_eq!(r.passed, Some(true));
    }

    #[test]
    fn monitor_oscillation_and_scaling() {
        let cols = ["dirac_l2", "wave_E", "ghost_spacetime"];
        let s = series(&cols, |c, t| match c {
            "dirac_l2" => 1.0 + 0.01 * t.sin(),
            "wave_E" => 2.0,
            _ => 1.0 - 1.0 / t,
        });
        let r = uniform_energy_monitor(&s, &["dirac_l2", "wave_E", "missing"], 6.0, 0.1, Some(6.0)).unwrap();
        assert_eq!(r.entries.len(), 2);
        assert!(r.entries[0].oscillation < 0.03);
        assert_eq!(r.entries[1].oscillation, 0.0);
        assert!(r.passed);
        let lam: f64 = 3.0;
        let scaled = series(&cols, |c, t| {
            let v = match c {
                "dirac_l2" => 1.0 + 0.01 * t.sin(),
                "wave_E" => 2.0,
                _ => 1.0 - 1.0 / t,
            };
            v * lam.powi(column_degree(c) as i32)
        });
        let r2 = uniform_energy_monitor(&scaled, &["dirac_l2", "wave_E"], 6.0, 0.1, None).unwrap();
        assert!((r2.entries[0].max - lam * r.entries[0].max).abs() < 1e-12);
        assert!((r2.entries[1].max - lam * lam * r.entries[1].max).abs() < 1e-12);
        assert!((r2.entries[0].oscillation - r.entries[0].oscillation).abs() < 1e-12);
    }

    #[test]
    fn linear_run_scatters_exactly() {
        let case = CaseConfig::new(CaseId::III).linear();
        let mut cfg = standard_run(case.clone(), 41, 9.0, 0.1, 3.0, 1e-3, 2.5, 3).unwrap();
        cfg.data = cfg.data.with_width(1.0);
        cfg.cadence = 2;
        let mut rec = StateRecorder::default();
        run(&cfg, &mut rec).unwrap();
        for kind in [ScatterKind::Dirac, ScatterKind::Wave] {
            let d = scattering_cauchy(&rec.states, &case, kind, Symbol::Lattice { dt: cfg.dt }).unwrap();
            assert!(d.times.len() >= 3);
            let scale = match kind {
                ScatterKind::Dirac => rec.states[0].psi.l2(),
                ScatterKind::Wave => rec.states[0].phi_t.l2(),
            };
            assert!(d.max_cauchy() < 1e-8 * scale, "{kind:?}: {} vs {scale}", d.max_cauchy());
            assert!(d.tails.iter().all(|&t| t == 0.0));
        }
    }

    #[test]
    fn coupled_tails_decrease() {
        let case = CaseConfig::new(CaseId::I);
        let mut cfg = standard_run(case.clone(), 33, 7.0, 0.1, 3.0, 0.05, 2.5, 3).unwrap();
        cfg.data = cfg.data.with_width(1.0);
        cfg.cadence = 2;
        let mut rec = StateRecorder::default();
        run(&cfg, &mut rec).unwrap();
        let d = scattering_cauchy(&rec.states, &case, ScatterKind::Wave, Symbol::Lattice { dt: cfg.dt }).unwrap();
        assert!(d.tails_strictly_decreasing());
        assert!(d.max_cauchy() > 0.0);
        assert_eq!(*d.tails.last().unwrap(), 0.0);
    }
}
