//! Power-law fits: a planted exponent, then the sup-norms of a run.
//!
//! Usage: `decay_fit [config]`, defaulting to `configs/quick.conf`.

use dkg::analysis::{decay_report, fit_decay};
use dkg::commands::run_config;
use dkg::config::Config;

fn main() -> dkg::Result<()> {
    let t: Vec<f64> = (0..40).map(|k| 2.0 + 0.25 * k as f64).collect();
    let y: Vec<f64> = t.iter().map(|s| 3.0 * s.powf(-1.5)).collect();
    let f = fit_decay(&t, &y, (5.0, 12.0))?;
    println!("planted -1.5: fitted {:.6} (rms {:.1e}, {} samples)", f.exponent, f.rms, f.samples);

    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/quick.conf".into());
    let cfg = Config::load(path.as_ref())?;
    let o = run_config(&cfg, None)?;
    let window = ((cfg.t_end - 2.0) / 2.0 + 2.0, cfg.t_end);
    for field in ["psi", "phi"] {
        let r = decay_report(&o.series, field, window, None)?;
        println!("|{field}| on [{}, {}]: exponent {:.3} (rms {:.3})", window.0, window.1, r.unweighted.exponent, r.unweighted.rms);
        for (w, fit) in &r.weighted {
            println!("  weight {w:?}: exponent {:.3}", fit.exponent);
        }
    }
    Ok(())
}
