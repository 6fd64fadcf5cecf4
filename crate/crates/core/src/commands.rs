//! Library side of the command-line subcommands.
//!
//! A run directory holds:
//!
//! - `config.txt`: the configuration in the text format;
//! - `run.json`: [`RunRecord`];
//! - `energies.csv`: one row per output time, columns as in [`COLUMN_DOCS`];
//! - `scatter_dirac.json`, `scatter_wave.json`: [`ScatterDiag`] computed in-line;
//! - `snapshots/state_SSSSSS.bin`: field states at output steps `S`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{decay_report, scattering_cauchy, uniform_energy_monitor, DecayReport, MonitorReport, ScatterDiag, ScatterKind, ScatterTracker, MONITORED};
use crate::clifford::algebra_suite;
use crate::config::Config;
use crate::dkg_solver::free_flow::Symbol;
use crate::dkg_solver::{run, CaseConfig, Fanout, Observer, RunSummary, StateWindow};
use crate::error::{Error, Result};
use crate::functionals::{EnergySeries, EnergyTracker, COLUMN_DOCS};
use crate::report::IdentityReport;
use crate::snapshot::{read_state, write_state};
use crate::structure_checks::structure_study;

pub const ENERGIES: &str = "energies.csv";
pub const RUN_RECORD: &str = "run.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub theory_open: bool,
    pub steps: usize,
    pub outputs: usize,
    pub t_final: f64,
    pub max_pad_ratio: f64,
    pub dt: f64,
    pub h: f64,
    pub config: Config,
    pub columns: Vec<(String, String)>,
}

pub fn verify_algebra(samples: usize, seed: u64) -> Vec<IdentityReport> {
    algebra_suite(samples, seed)
}

/// Writes snapshots of every `every`-th output window.
pub struct SnapshotWriter {
    pub dir: PathBuf,
    pub every: usize,
    count: usize,
    pub written: Vec<PathBuf>,
}

impl SnapshotWriter {
    pub fn new(dir: PathBuf, every: usize) -> Self {
        SnapshotWriter { dir, every, count: 0, written: Vec::new() }
    }
}

impl Observer for SnapshotWriter {
    fn on_window(&mut self, w: &StateWindow) -> Result<()> {
        if self.every > 0 && self.count % self.every == 0 {
            fs::create_dir_all(&self.dir)?;
            let p = self.dir.join(format!("state_{:06}.bin", w.step));
            write_state(&p, w.center())?;
            self.written.push(p);
        }
        self.count += 1;
        Ok(())
    }
}

/// Outputs of an in-process run.
pub struct RunOutputs {
    pub record: RunRecord,
    pub series: EnergySeries,
    pub scatter: Vec<ScatterDiag>,
}

/// Runs `cfg` with energy tracking and in-line scattering diagnostics; writes
/// the run directory when `out` is given.
pub fn run_config(cfg: &Config, out: Option<&Path>) -> Result<RunOutputs> {
    let rc = cfg.run_config()?;
    let mut tracker = EnergyTracker::new(rc.case.clone(), rc.delta, rc.window_half)?;
    let symbol = Symbol::Lattice { dt: rc.dt };
    let mut sd = ScatterTracker::new(ScatterKind::Dirac, &rc.case, symbol);
    let mut sw = ScatterTracker::new(ScatterKind::Wave, &rc.case, symbol);
    let mut snaps = out.map(|o| SnapshotWriter::new(o.join(SNAPSHOT_DIR), cfg.snapshot_every));
    let summary: RunSummary = {
        let mut obs: Vec<&mut dyn Observer> = vec![&mut tracker, &mut sd, &mut sw];
        if let Some(s) = snaps.as_mut() {
            obs.push(s);
        }
        let mut rc = rc.clone();
        rc.diagnostic_dir = out.map(|o| o.join("diagnostics"));
        run(&rc, &mut Fanout(obs))?
    };
    let record = RunRecord {
        label: summary.label.clone(),
        theory_open: rc.case.theory_open(),
        steps: summary.steps,
        outputs: summary.outputs,
        t_final: summary.t_final,
        max_pad_ratio: summary.max_pad_ratio,
        dt: rc.dt,
        h: rc.grid.h,
        config: cfg.clone(),
        columns: tracker.series.columns.iter().map(|c| (c.clone(), column_doc(c))).collect(),
    };
    let scatter = vec![sd.diag(), sw.diag()];
    if let Some(o) = out {
        fs::create_dir_all(o)?;
        fs::write(o.join("config.txt"), cfg.to_text())?;
        write_json(&o.join(RUN_RECORD), &record)?;
        tracker.series.save_csv(&o.join(ENERGIES))?;
        write_json(&o.join("scatter_dirac.json"), &scatter[0])?;
        write_json(&o.join("scatter_wave.json"), &scatter[1])?;
    }
    Ok(RunOutputs { record, series: tracker.series, scatter })
}

fn column_doc(c: &str) -> String {
    COLUMN_DOCS.iter().find(|(k, _)| *k == c).map(|(_, d)| d.to_string()).unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_record(dir: &Path) -> Result<RunRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(RUN_RECORD))?)?)
}

pub fn read_series(dir: &Path) -> Result<EnergySeries> {
    EnergySeries::read_csv(&dir.join(ENERGIES))
}

pub fn check_structure(cfg: &Config) -> Result<Vec<IdentityReport>> {
    structure_study(&cfg.study_config()?)
}

pub fn fit_decay_dir(dir: &Path, field: &str, window: (f64, f64), accepted: Option<(f64, f64)>) -> Result<DecayReport> {
    decay_report(&read_series(dir)?, field, window, accepted)
}

pub fn monitor_dir(dir: &Path, t_after: f64, bound: f64, ghost_ref: Option<f64>) -> Result<MonitorReport> {
    uniform_energy_monitor(&read_series(dir)?, MONITORED, t_after, bound, ghost_ref)
}

/// Snapshot paths of a run directory in step order.
pub fn snapshot_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let sd = dir.join(SNAPSHOT_DIR);
    if !sd.is_dir() {
        return Err(Error::Config(format!("{} holds no snapshots", dir.display())));
    }
    let mut v: Vec<PathBuf> = fs::read_dir(&sd)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("state_") && n.ends_with(".bin")))
        .collect();
    v.sort();
    Ok(v)
}

/// Scattering diagnostic recomputed from the snapshots of a run directory.
pub fn scatter_dir(dir: &Path, kind: ScatterKind, exact: bool) -> Result<ScatterDiag> {
    let rec = read_record(dir)?;
    let case = CaseConfig::new(rec.config.case);
    let symbol = if exact { Symbol::Exact } else { Symbol::Lattice { dt: rec.dt } };
    let states = snapshot_paths(dir)?.iter().map(|p| read_state(p)).collect::<Result<Vec<_>>>()?;
    scattering_cauchy(&states, &case, kind, symbol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Config {
        Config::parse("case = I\nn = 25\nL = 7\ndt = 0.2\nt_end = 3.6\nr0 = 2.5\nwidth = 1\ncadence = 2\nwindow_half = 2\n").unwrap()
    }

    #[test]
    fn run_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_config(&small(), Some(dir.path())).unwrap();
        let series = read_series(dir.path()).unwrap();
        assert!(series.bit_identical(&out.series));
        let rec = read_record(dir.path()).unwrap();
        assert_eq!(rec.outputs, series.len());
        assert_eq!(snapshot_paths(dir.path()).unwrap().len(), series.len());
        let d = scatter_dir(dir.path(), ScatterKind::Wave, false).unwrap();
        assert_eq!(d, out.scatter[1]);
        let m = monitor_dir(dir.path(), 2.0, 1.0, None).unwrap();
        assert!(!m.entries.is_empty());
        assert!(Config::load(&dir.path().join("config.txt")).unwrap() == small());
    }
}
