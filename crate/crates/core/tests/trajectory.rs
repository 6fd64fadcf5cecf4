//! Invariants of short nonlinear runs on small grids.

use dkg::commands::run_config;
use dkg::config::Config;
use dkg::functionals::COLUMN_DOCS;

fn small(case: &str) -> Config {
    Config::parse(&format!("case = {case}\nn = 25\nL = 9\ndt = 0.2\nt_end = 4.4\nr0 = 2.5\nwidth = 1\ncadence = 2\nwindow_half = 4\n")).unwrap()
}

const SIGN_DEFINITE: &[&str] = &["dirac_l2", "ghost_spacetime", "ghost_energy", "wave_E", "conformal_F", "kg_E", "sup_psi", "sup_phi"];

#[test]
fn series_invariants() {
    for case in ["I", "II", "III", "IV"] {
        let o = run_config(&small(case), None).unwrap();
        let s = &o.series;
        assert!(s.len() >= 5, "case {case}: {} outputs", s.len());
        assert!(s.times.windows(2).all(|w| w[1] > w[0]));
        let g = s.column("ghost_spacetime").unwrap();
        assert!(g.windows(2).all(|w| w[1] >= w[0]), "case {case}: ghost not monotone");
        for c in &s.columns {
            assert!(COLUMN_DOCS.iter().any(|(k, _)| k == c), "undocumented column {c}");
            let v = s.column(c).unwrap();
            if c.starts_with("econ") {
                continue;
            }
            assert!(v.iter().all(|x| x.is_finite()), "case {case}: {c} not finite");
            if SIGN_DEFINITE.contains(&c.as_str()) {
                assert!(v.iter().all(|x| *x >= 0.0), "case {case}: {c} negative");
            }
        }
        for d in &o.scatter {
            assert!(d.tails.iter().all(|t| *t >= 0.0));
            assert!(d.tails_nonincreasing());
        }
        assert_eq!(o.record.theory_open, case == "IV");
    }
}

#[test]
fn nonlinear_effect_scales_quadratically() {
    let run = |eps: f64| {
        let mut c = small("I");
        c.epsilon = eps;
        let o = run_config(&c, None).unwrap();
        let src = &o.scatter[0].source_norms;
        src.iter().copied().fold(0.0, f64::max)
    };
    let r = run(2e-3) / run(1e-3);
    assert!((r - 4.0).abs() < 0.05, "source ratio {r}");
}

#[test]
fn reruns_are_bit_identical() {
    let a = run_config(&small("III"), None).unwrap();
    let b = run_config(&small("III"), None).unwrap();
    assert!(a.series.bit_identical(&b.series));
    assert_eq!(a.scatter, b.scatter);
}
