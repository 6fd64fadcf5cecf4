//! Spectral free flows on a periodic box against the RK4 solver.

use dkg::clifford::{Spinor, C64};
use dkg::dkg_solver::free_flow::{FlowKind, FreeFlow, Symbol};
use dkg::dkg_solver::{step_rk4, CaseConfig, CaseId, T0};
use dkg::lattice::{FieldState, GridSpec, Lattice};

fn packet(x: [f64; 3]) -> f64 {
    (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()
}

fn main() -> dkg::Result<()> {
    let g = GridSpec::periodic(32, 8.0)?;
    let (dt, steps) = (0.1, 20);
    let t = dt * steps as f64;
    let p = Spinor::new([C64::new(1.0, 0.0), C64::new(0.0, 0.5), C64::new(0.0, 0.0), C64::new(0.3, 0.0)]);

    let mut s = FieldState::zeros(g, T0, CaseId::Custom);
    s.psi = Lattice::from_fn(g, |x| p * packet(x));
    s.phi = Lattice::from_fn(g, packet);
    let (psi0, phi0) = (s.psi.clone(), s.phi.clone());
    let mut case = CaseConfig::new(CaseId::III).linear();
    case.dirac_mass = 1.0;
    for _ in 0..steps {
        s = step_rk4(&s, &case, dt)?;
    }

    for (label, symbol) in [("exact", Symbol::Exact), ("lattice", Symbol::Lattice { dt })] {
        let df = FreeFlow::new(FlowKind::Dirac { mass: 1.0 }, symbol, g)?;
        let wf = FreeFlow::new(FlowKind::wave(), symbol, g)?;
        let psi = df.dirac(&psi0, t)?;
        let (phi, _) = wf.wave(&phi0, &Lattice::zeros(g), t)?;
        println!(
            "{label:8} symbol: |psi - rk4| {:.2e}  |phi - rk4| {:.2e}  L2 drift {:.1e}",
            psi.sub(&s.psi)?.max_norm(),
            phi.sub(&s.phi)?.max_norm(),
            (psi.l2() - psi0.l2()).abs() / psi0.l2()
        );
    }
    Ok(())
}
