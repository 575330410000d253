//! Lyapunov feedback: the field is computed from the current state so that the
//! distance to the GHZ target never increases.

use ghz_chain::lyapunov::{self, LyapunovOptions};
use ghz_chain::propagation::ControlSystem;
use ghz_chain::spin::{self, ChainSpec, Sign, Space};
use ghz_chain::symmetry::{self, TargetSector};

fn main() -> ghz_chain::Result<()> {
    for n in [2, 3, 4] {
        let spec = ChainSpec::new(n, -1.0)?;
        let sector = TargetSector::build(&spec, Sign::Plus)?;
        let system = ControlSystem::for_sector(&spec, &sector)?;
        let rho0 = spin::lowest_eigenstate(&system.hamiltonian(10.0), Space::Block(sector.block))?.state.expect("gapped");
        let target = symmetry::to_block(&sector.target, &sector.decomposition, sector.block)?;

        let diag = lyapunov::diagnose(&system)?;
        let kappa = lyapunov::default_kappa(n);
        let run = lyapunov::run_closed_loop(&system, &rho0, &target, LyapunovOptions::new(kappa, 20.0))?;
        let v = run.trajectory.lyapunov.as_ref().expect("closed loop records V");
        println!(
            "N = {n}: kappa = {kappa}, V(0) = {:.3e}, V(10) = {:.3e}, V(20) = {:.3e}, F(20) = {:.6}, strongly regular: {}",
            v[0],
            v[100],
            run.final_v,
            run.trajectory.final_fidelity(),
            diag.strongly_regular
        );
    }
    Ok(())
}
