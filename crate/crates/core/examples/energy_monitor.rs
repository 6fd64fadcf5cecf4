//! Relative oscillation of every monitored functional along a run.
//!
//! Usage: `energy_monitor [config]`, defaulting to `configs/quick.conf`.

use dkg::analysis::{uniform_energy_monitor, MONITORED};
use dkg::commands::run_config;
use dkg::config::Config;

fn main() -> dkg::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/quick.conf".into());
    let cfg = Config::load(path.as_ref())?;
    let o = run_config(&cfg, None)?;
    let t_after = 4.0_f64.min(cfg.t_end - 1.0);
    let m = uniform_energy_monitor(&o.series, MONITORED, t_after, 0.1, Some(t_after.max(3.0)))?;
    for e in &m.entries {
        println!("{:14} min {:.4e} max {:.4e} oscillation {:6.2}% {}", e.column, e.min, e.max, 100.0 * e.oscillation, if e.passed { "ok" } else { "FAIL" });
    }
    if let Some((a, b, ok)) = m.ghost_growth {
        println!("ghost spacetime {a:.3e} -> {b:.3e} {}", if ok { "ok" } else { "FAIL" });
    }
    println!("monitor {}", if m.passed { "passed" } else { "failed" });
    Ok(())
}
