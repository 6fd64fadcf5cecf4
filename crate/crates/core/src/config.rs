//! Plain-text run configuration.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are ignored.
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dkg_solver::{CaseConfig, CaseId, InitialData, PhiShape, RunConfig};
use crate::error::{Error, Result};
use crate::lattice::{BoundaryMode, GridSpec};
use crate::structure_checks::StudyConfig;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Config {
    pub case: CaseId,
    pub n: usize,
    /// Half-width of the cube `[-L, L]^3`.
    pub l: f64,
    pub dt: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub r0: f64,
    /// Steps between output windows.
    pub cadence: usize,
    pub boundary_mode: BoundaryMode,
    pub seed: u64,
    /// Gaussian width of the data; `None` means `r0 / 2`.
    pub width: Option<f64>,
    pub phi_shape: PhiShape,
    pub window_half: usize,
    pub aux: bool,
    /// Outputs between snapshots; 0 disables snapshots.
    pub snapshot_every: usize,
    pub contamination_tolerance: f64,
    /// Resolutions of `check-structure`.
    pub resolutions: Vec<usize>,
}

pub const KEYS: &[&str] = &[
    "case",
    "n",
    "L",
    "dt",
    "t_end",
    "epsilon",
    "delta",
    "r0",
    "cadence",
    "boundary_mode",
    "seed",
    "width",
    "phi_shape",
    "window_half",
    "aux",
    "snapshot_every",
    "contamination_tolerance",
    "resolutions",
];

impl Default for Config {
    fn default() -> Self {
        Config {
            case: CaseId::I,
            n: 64,
            l: 21.5,
            dt: 0.125,
            t_end: 12.0,
            epsilon: 1e-3,
            delta: 0.05,
            r0: 7.0,
            cadence: 4,
            boundary_mode: BoundaryMode::ZeroPad,
            seed: 1,
            width: Some(2.5),
            phi_shape: PhiShape::Outgoing,
            window_half: 6,
            aux: false,
            snapshot_every: 1,
            contamination_tolerance: 1e-3,
            resolutions: vec![32, 48, 64],
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key {k:?}", lineno + 1)));
            }
            if kv.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k:?}", lineno + 1)));
            }
        }
        let mut c = Config::default();
        for (k, v) in &kv {
            match k.as_str() {
                "case" => c.case = CaseId::parse(v)?,
                "n" => c.n = parse_num(k, v)?,
                "L" => c.l = parse_num(k, v)?,
                "dt" => c.dt = parse_num(k, v)?,
                "t_end" => c.t_end = parse_num(k, v)?,
                "epsilon" => c.epsilon = parse_num(k, v)?,
                "delta" => c.delta = parse_num(k, v)?,
                "r0" => c.r0 = parse_num(k, v)?,
                "cadence" => c.cadence = parse_num(k, v)?,
                "boundary_mode" => c.boundary_mode = BoundaryMode::parse(v)?,
                "seed" => c.seed = parse_num(k, v)?,
                "width" => c.width = Some(parse_num(k, v)?),
                "phi_shape" => c.phi_shape = PhiShape::parse(v)?,
                "window_half" => c.window_half = parse_num(k, v)?,
                "aux" => c.aux = parse_bool(k, v)?,
                "snapshot_every" => c.snapshot_every = parse_num(k, v)?,
                "contamination_tolerance" => c.contamination_tolerance = parse_num(k, v)?,
                "resolutions" => c.resolutions = v.split(',').map(|s| parse_num(k, s.trim())).collect::<Result<_>>()?,
                _ => unreachable!(),
            }
        }
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        let positive = [("L", self.l), ("dt", self.dt), ("epsilon", self.epsilon), ("delta", self.delta), ("r0", self.r0)];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if self.t_end < crate::dkg_solver::T0 {
            return Err(Error::InitialTime(self.t_end));
        }
        if self.cadence == 0 {
            return Err(Error::Config("cadence must be at least 1".into()));
        }
        if self.resolutions.is_empty() {
            return Err(Error::Config("resolutions must not be empty".into()));
        }
        Ok(())
    }

    /// Writes the configuration back in the text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("case", self.case.to_string());
        put("n", self.n.to_string());
        put("L", format!("{:?}", self.l));
        put("dt", format!("{:?}", self.dt));
        put("t_end", format!("{:?}", self.t_end));
        put("epsilon", format!("{:?}", self.epsilon));
        put("delta", format!("{:?}", self.delta));
        put("r0", format!("{:?}", self.r0));
        put("cadence", self.cadence.to_string());
        put("boundary_mode", self.boundary_mode.name().to_string());
        put("seed", self.seed.to_string());
        if let Some(w) = self.width {
            put("width", format!("{w:?}"));
        }
        put("phi_shape", self.phi_shape.name().to_string());
        put("window_half", self.window_half.to_string());
        put("aux", self.aux.to_string());
        put("snapshot_every", self.snapshot_every.to_string());
        put("contamination_tolerance", format!("{:?}", self.contamination_tolerance));
        put("resolutions", self.resolutions.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","));
        s
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.l, self.boundary_mode)
    }

    pub fn initial_data(&self) -> InitialData {
        let d = InitialData::new(self.epsilon, self.r0, self.seed).with_phi_shape(self.phi_shape);
        match self.width {
            Some(w) => d.with_width(w),
            None => d,
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let cfg = RunConfig {
            grid: self.grid()?,
            dt: self.dt,
            t_end: self.t_end,
            case: CaseConfig::new(self.case),
            data: self.initial_data(),
            delta: self.delta,
            cadence: self.cadence,
            seed: self.seed,
            aux: self.aux,
            window_half: self.window_half,
            diagnostic_dir: None,
            contamination_tolerance: self.contamination_tolerance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Refinement study at `resolutions`, evaluated at `t_end` with `dt / h` fixed.
    pub fn study_config(&self) -> Result<StudyConfig> {
        let grid = self.grid()?;
        let mut s = StudyConfig::new(self.case);
        s.resolutions = self.resolutions.clone();
        s.half_width = self.l;
        s.cfl = self.dt / grid.h;
        s.t_eval = self.t_end;
        s.epsilon = self.epsilon;
        s.r0 = self.r0;
        s.width = self.initial_data().width;
        s.delta = self.delta;
        s.seed = self.seed;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# Case III baseline\ncase = III\nn = 48   # points per axis\nL = 12\ndt = 0.2\nt_end = 6\nepsilon = 1e-3\ndelta = 0.05\nr0 = 2.5\ncadence = 2\nboundary_mode = zero-pad\nseed = 7\n";

    #[test]
    fn parses_sample() {
        let c = Config::parse(SAMPLE).unwrap();
        assert_eq!(c.case, CaseId::III);
        assert_eq!(c.n, 48);
        assert_eq!(c.l, 12.0);
        assert_eq!(c.seed, 7);
        assert_eq!(c.width, Some(2.5));
        assert_eq!(c.run_config().unwrap().steps(), 20);
        let c = Config::parse("width = 1\nL = 30").unwrap();
        assert_eq!(c.initial_data().width, 1.0);
    }

    #[test]
    fn round_trip() {
        let c = Config::parse(SAMPLE).unwrap();
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
        let d = Config::default();
        assert_eq!(Config::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Config::parse("bogus = 1").is_err());
        assert!(Config::parse("n = many").is_err());
        assert!(Config::parse("n = 3\nn = 4").is_err());
        assert!(Config::parse("dt = -1").is_err());
        assert!(Config::parse("t_end = 1").is_err());
        assert!(Config::parse("just words").is_err());
    }

    #[test]
    fn containment_is_checked() {
        let c = Config::parse("L = 5\nt_end = 12\ndt = 0.05").unwrap();
        assert!(matches!(c.run_config(), Err(Error::Containment { .. })));
    }
}
