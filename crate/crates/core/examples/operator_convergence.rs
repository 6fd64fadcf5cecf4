//! Refinement study of the commutator identities, the d'Alembertian
//! decomposition and the weighted conformal energy forms.

use std::time::Instant;

use dkg::functionals::econ_study;
use dkg::vector_fields::{operator_study, OPERATOR_RESOLUTIONS};

fn main() -> dkg::Result<()> {
    let start = Instant::now();
    let mut reps = operator_study(&OPERATOR_RESOLUTIONS, 1.8)?;
    reps.push(econ_study(&OPERATOR_RESOLUTIONS, 1.8)?);
    for r in &reps {
        println!("{:32} order {:5.2} residuals {:?} {}", r.identity_name, r.observed_order.unwrap_or(f64::NAN), r.residuals, if r.passed { "ok" } else { "FAIL" });
    }
    println!("{:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
