//! Evolves a configuration and writes a run directory.
//!
//! Usage: `case_run [config] [out]`, defaulting to `configs/quick.conf` and `runs/quick`.

use std::path::PathBuf;

use dkg::commands::run_config;
use dkg::config::Config;

fn main() -> dkg::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg_path = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("configs/quick.conf"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs/quick"));
    let cfg = Config::load(&cfg_path)?;
    let o = run_config(&cfg, Some(&out))?;
    let r = &o.record;
    println!("{}: {} steps, {} outputs, t = {}, h = {:.4}, dt = {}", r.label, r.steps, r.outputs, r.t_final, r.h, r.dt);
    println!("max pad ratio {:.2e}", r.max_pad_ratio);
    for c in ["dirac_l2", "wave_E", "ghost_spacetime", "sup_psi", "sup_phi"] {
        if let Some(v) = o.series.column(c) {
            println!("  {c:16} first {:.4e} last {:.4e}", v[0], v[v.len() - 1]);
        }
    }
    println!("run directory {}", out.display());
    Ok(())
}
