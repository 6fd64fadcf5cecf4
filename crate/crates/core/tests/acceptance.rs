//! Acceptance criteria at their stated tolerances: one PASS/FAIL line each,
//! nonzero exit status on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dkg::analysis::{decay_report, uniform_energy_monitor, ScatterKind, ScatterTracker, MONITORED};
use dkg::clifford::{algebra_suite, DEFAULT_SAMPLES, DEFAULT_SEED};
use dkg::commands::{run_config, RunOutputs};
use dkg::config::Config;
use dkg::dkg_solver::free_flow::Symbol;
use dkg::dkg_solver::oracles::{homogeneous_dirac_study, spectral_l2_drift, spherical_wave_study};
use dkg::dkg_solver::{run, CaseId, Fanout, Observer};
use dkg::functionals::econ_study;
use dkg::report::IdentityReport;
use dkg::structure_checks::{structure_study, StudyConfig};
use dkg::vector_fields::{operator_study, OPERATOR_RESOLUTIONS};

const MIN_ORDER: f64 = 1.8;
const CAUCHY_LINEAR: f64 = 1e-8;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome { passed, detail: detail.into() }
    }

    fn error(e: dkg::Error) -> Self {
        Outcome::new(false, format!("error: {e}"))
    }
}

fn config(name: &str) -> Config {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    Config::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn identity_summary(reps: &[IdentityReport]) -> (bool, String) {
    let failed: Vec<&str> = reps.iter().filter(|r| !r.passed).map(|r| r.identity_name.as_str()).collect();
    let worst = reps.iter().filter(|r| !r.exact_on_lattice).filter_map(|r| r.observed_order).fold(f64::INFINITY, f64::min);
    let mut d = format!("{} identities", reps.len());
    if worst.is_finite() {
        d.push_str(&format!(", min order {worst:.2}"));
    }
    if !failed.is_empty() {
        d.push_str(&format!(", failed: {}", failed.join(" ")));
    }
    (failed.is_empty(), d)
}

fn timed(budget: Duration, start: Instant, (ok, d): (bool, String)) -> Outcome {
    let el = start.elapsed();
    Outcome::new(ok && el < budget, format!("{d}; {:.1} s (budget {} s)", el.as_secs_f64(), budget.as_secs()))
}

fn algebra() -> Outcome {
    let t = Instant::now();
    let reps = algebra_suite(DEFAULT_SAMPLES, DEFAULT_SEED);
    let worst = reps.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    let (ok, d) = identity_summary(&reps);
    timed(Duration::from_secs(10), t, (ok && worst <= 1e-13, format!("{d}, max residual {worst:.1e}")))
}

fn operators() -> Outcome {
    let t = Instant::now();
    let run = || -> dkg::Result<Vec<IdentityReport>> {
        let mut reps = operator_study(&OPERATOR_RESOLUTIONS, MIN_ORDER)?;
        reps.push(econ_study(&OPERATOR_RESOLUTIONS, MIN_ORDER)?);
        Ok(reps)
    };
    match run() {
        Ok(reps) => timed(Duration::from_secs(300), t, identity_summary(&reps)),
        Err(e) => Outcome::error(e),
    }
}

fn oracles() -> Outcome {
    let run = || -> dkg::Result<Outcome> {
        let d = homogeneous_dirac_study(&[0.2, 0.1, 0.05])?;
        let w = spherical_wave_study(&[41, 81, 161])?;
        let drift = spectral_l2_drift(32, DEFAULT_SEED)?;
        let fmt = |r: &[f64]| r.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(",");
        Ok(Outcome::new(
            d.passed && w.passed && drift < 1e-12,
            format!("dirac ratios {}, wave ratios {}, spectral L2 drift {drift:.1e}", fmt(&d.ratios), fmt(&w.ratios)),
        ))
    };
    run().unwrap_or_else(Outcome::error)
}

fn structure() -> Outcome {
    let t = Instant::now();
    let run = || -> dkg::Result<(bool, String)> {
        let mut parts = Vec::new();
        let mut ok = true;
        for case in [CaseId::III, CaseId::I] {
            let reps = structure_study(&StudyConfig::new(case))?;
            let (o, d) = identity_summary(&reps);
            ok &= o;
            parts.push(format!("case {case}: {d}"));
        }
        Ok((ok, parts.join("; ")))
    };
    match run() {
        Ok(r) => timed(Duration::from_secs(1800), t, r),
        Err(e) => Outcome::error(e),
    }
}

fn uniform_energy(runs: &[(CaseId, RunOutputs)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, o) in runs {
        match uniform_energy_monitor(&o.series, MONITORED, 4.0, 0.1, Some(6.0)) {
            Ok(m) => {
                let worst = m.entries.iter().max_by(|a, b| a.oscillation.total_cmp(&b.oscillation)).unwrap();
                let g = m.ghost_growth.map(|(a, b, _)| format!("ghost {a:.2e} -> {b:.2e}")).unwrap_or_default();
                ok &= m.passed;
                parts.push(format!("case {case}: max oscillation {:.1}% ({}), {g}", 100.0 * worst.oscillation, worst.column));
            }
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(ok, parts.join("; "))
}

fn decay(runs: &[(CaseId, RunOutputs)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, field, band) in [(CaseId::III, "psi", (-1.9, -1.1)), (CaseId::I, "phi", (-1.4, -0.6))] {
        let o = &runs.iter().find(|(c, _)| *c == case).unwrap().1;
        match decay_report(&o.series, field, (5.0, 12.0), Some(band)) {
            Ok(r) => {
                ok &= r.passed == Some(true);
                parts.push(format!("case {case} |{field}|: exponent {:.3} (rms {:.3}) in [{}, {}]", r.unweighted.exponent, r.unweighted.rms, band.0, band.1));
            }
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(ok, parts.join("; "))
}

fn linear_cauchy(cfg: &Config) -> dkg::Result<f64> {
    let mut rc = cfg.run_config()?;
    rc.case = rc.case.linear();
    let symbol = Symbol::Lattice { dt: rc.dt };
    let mut sd = ScatterTracker::new(ScatterKind::Dirac, &rc.case, symbol);
    let mut sw = ScatterTracker::new(ScatterKind::Wave, &rc.case, symbol);
    {
        let obs: Vec<&mut dyn Observer> = vec![&mut sd, &mut sw];
        run(&rc, &mut Fanout(obs))?;
    }
    Ok(sd.diag().max_cauchy().max(sw.diag().max_cauchy()))
}

fn scattering(runs: &[(CaseId, RunOutputs)], cfgs: &[(CaseId, Config)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, o) in runs {
        let strict = o.scatter.iter().all(|d| d.tails_strictly_decreasing());
        ok &= strict;
        parts.push(format!("case {case}: tails strictly decreasing {strict}"));
    }
    for (case, cfg) in cfgs {
        match linear_cauchy(cfg) {
            Ok(c) => {
                ok &= c < CAUCHY_LINEAR;
                parts.push(format!("case {case} linear: max Cauchy {c:.1e}"));
            }
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(ok, parts.join("; "))
}

fn files(dir: &Path) -> std::io::Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p)?);
            }
        }
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let cfg = Config::parse("case = III\nn = 33\nL = 12\ndt = 0.25\nt_end = 6\nr0 = 3.5\nwidth = 1.25\nwindow_half = 6\n").unwrap();
    let run = || -> Result<Outcome, Box<dyn std::error::Error>> {
        let mut dumps = Vec::new();
        for threads in [1, 4] {
            let dir = tempfile::tempdir()?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
            pool.install(|| run_config(&cfg, Some(dir.path())))?;
            dumps.push(files(dir.path())?);
        }
        let same = dumps[0] == dumps[1];
        Ok(Outcome::new(same, format!("{} output files compared across 1 and 4 threads, identical {same}", dumps[0].len())))
    };
    run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")))
}

fn report(id: usize, name: &str, o: &Outcome, all: &mut bool) {
    *all &= o.passed;
    println!("{} {id} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
}

fn main() -> ExitCode {
    let mut all = true;
    report(1, "exact algebra", &algebra(), &mut all);
    report(2, "operator convergence", &operators(), &mut all);
    report(3, "solver oracles", &oracles(), &mut all);
    report(4, "structural identities", &structure(), &mut all);

    let cfgs = [(CaseId::I, config("case_i.conf")), (CaseId::III, config("case_iii.conf"))];
    let mut runs = Vec::new();
    for (case, cfg) in &cfgs {
        match run_config(cfg, None) {
            Ok(o) => runs.push((*case, o)),
            Err(e) => {
                report(5, "baseline runs", &Outcome::error(e), &mut all);
                return ExitCode::FAILURE;
            }
        }
    }
    report(5, "uniform energy", &uniform_energy(&runs), &mut all);
    report(6, "decay", &decay(&runs), &mut all);
    report(7, "scattering", &scattering(&runs, &cfgs), &mut all);
    report(8, "determinism", &determinism(), &mut all);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
