//! Back-evolution of a nonlinear run and of its linear counterpart by the free flow.
//!
//! Usage: `scattering [config]`, defaulting to `configs/quick.conf`.

use dkg::analysis::{ScatterDiag, ScatterKind, ScatterTracker};
use dkg::config::Config;
use dkg::dkg_solver::free_flow::Symbol;
use dkg::dkg_solver::{run, Fanout, Observer};

fn diags(cfg: &Config, linear: bool) -> dkg::Result<Vec<ScatterDiag>> {
    let mut rc = cfg.run_config()?;
    if linear {
        rc.case = rc.case.linear();
    }
    let symbol = Symbol::Lattice { dt: rc.dt };
    let mut sd = ScatterTracker::new(ScatterKind::Dirac, &rc.case, symbol);
    let mut sw = ScatterTracker::new(ScatterKind::Wave, &rc.case, symbol);
    {
        let obs: Vec<&mut dyn Observer> = vec![&mut sd, &mut sw];
        run(&rc, &mut Fanout(obs))?;
    }
    Ok(vec![sd.diag(), sw.diag()])
}

fn main() -> dkg::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/quick.conf".into());
    let cfg = Config::load(path.as_ref())?;
    for linear in [false, true] {
        println!("{}", if linear { "linear" } else { "nonlinear" });
        for d in diags(&cfg, linear)? {
            let max_source = d.source_norms.iter().copied().fold(0.0, f64::max);
            println!("  {:?}: max Cauchy {:.2e}, max source {max_source:.2e}, tails strictly decreasing {}", d.kind, d.max_cauchy(), d.tails_strictly_decreasing());
            for (k, t) in d.times.iter().enumerate().step_by((d.times.len() / 6).max(1)) {
                println!("    t {t:5.2} source {:.3e} tail {:.3e} from first {:.3e}", d.source_norms[k], d.tails[k], d.from_first.get(k).copied().unwrap_or(0.0));
            }
        }
    }
    Ok(())
}
