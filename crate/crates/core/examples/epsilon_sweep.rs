//! Largest data amplitude at which the uniform-energy monitor still passes.
//!
//! Usage: `epsilon_sweep [config] [eps,eps,...]`; amplitudes are tried in
//! increasing order and the sweep stops at the first failure.

use dkg::analysis::{uniform_energy_monitor, MONITORED};
use dkg::commands::run_config;
use dkg::config::Config;

fn main() -> dkg::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "configs/quick.conf".into());
    let mut eps: Vec<f64> = match args.next() {
        Some(s) => s.split(',').map(|v| v.trim().parse().expect("epsilon list")).collect(),
        None => vec![1e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0],
    };
    eps.sort_by(f64::total_cmp);
    let base = Config::load(path.as_ref())?;
    let t_after = 4.0_f64.min(base.t_end - 1.0);
    let mut largest = None;
    for e in eps {
        let mut cfg = base.clone();
        cfg.epsilon = e;
        let verdict = match run_config(&cfg, None) {
            Ok(o) => {
                let m = uniform_energy_monitor(&o.series, MONITORED, t_after, 0.1, Some(t_after.max(6.0).min(cfg.t_end)))?;
                let worst = m.entries.iter().max_by(|a, b| a.oscillation.total_cmp(&b.oscillation)).unwrap();
                println!("epsilon {e:.1e}: max oscillation {:.2}% ({}), ghost ok {}", 100.0 * worst.oscillation, worst.column, m.ghost_growth.map_or(true, |g| g.2));
                m.passed
            }
            Err(err) => {
                println!("epsilon {e:.1e}: run failed: {err}");
                false
            }
        };
        if !verdict {
            break;
        }
        largest = Some(e);
    }
    match largest {
        Some(e) => println!("largest passing epsilon {e:.1e}"),
        None => println!("no amplitude passed"),
    }
    Ok(())
}
