//! Exact gamma-matrix identities on seeded random spinors and directions.

use dkg::clifford::{algebra_suite, DEFAULT_SAMPLES, DEFAULT_SEED};

fn main() {
    let reps = algebra_suite(DEFAULT_SAMPLES, DEFAULT_SEED);
    for r in &reps {
        println!("{:40} samples {:5} max residual {:.1e} {}", r.identity_name, r.samples, r.max_residual, if r.passed { "ok" } else { "FAIL" });
    }
    let failed = reps.iter().filter(|r| !r.passed).count();
    println!("{} identities, {failed} failed", reps.len());
}
