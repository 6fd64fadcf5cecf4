//! Closed-form checks of the time stepper and the spectral free flow.

use std::time::Instant;

use dkg::dkg_solver::oracles::{homogeneous_dirac_study, spectral_l2_drift, spherical_wave_study, OracleReport};

fn show(r: &OracleReport) {
    println!("{} ({})", r.name, if r.passed { "ok" } else { "FAIL" });
    for (i, (s, e)) in r.steps.iter().zip(&r.errors).enumerate() {
        let ratio = if i > 0 { format!("  ratio {:.2}", r.ratios[i - 1]) } else { String::new() };
        println!("  step {s:.5}  error {e:.3e}{ratio}");
    }
}

fn main() -> dkg::Result<()> {
    let t = Instant::now();
    show(&homogeneous_dirac_study(&[0.2, 0.1, 0.05])?);
    show(&spherical_wave_study(&[41, 81, 161])?);
    println!("spectral Dirac L2 drift {:.2e}", spectral_l2_drift(32, 1)?);
    println!("elapsed {:.1} s", t.elapsed().as_secs_f64());
    Ok(())
}
