//! Refinement study of the nonlinear identities along Case I and Case III solutions.

use dkg::dkg_solver::CaseId;
use dkg::structure_checks::{structure_study, StudyConfig};

fn main() -> dkg::Result<()> {
    for case in [CaseId::III, CaseId::I] {
        let cfg = StudyConfig::new(case);
        println!("case {case}");
        for rep in structure_study(&cfg)? {
            println!(
                "  {:40} residuals {:?} order {:.2} {}",
                rep.identity_name,
                rep.residuals.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>(),
                rep.observed_order.unwrap_or(f64::NAN),
                if rep.passed { "ok" } else { "below order" }
            );
        }
    }
    Ok(())
}
