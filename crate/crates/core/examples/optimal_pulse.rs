//! Optimize a piecewise-constant field for |+...+> -> GHZ at t_f = 0.65 N with
//! K = 3 N slices, then replay it and report eigenspace populations.

use ghz_chain::optimizer::{self, ControlProblem};
use ghz_chain::propagation::{self, ControlSystem, EigenspaceSet, EvolveOptions};
use ghz_chain::spin::ChainSpec;
use ghz_chain::symmetry;

fn main() -> ghz_chain::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let spec = ChainSpec::new(n, -1.0)?;
    let sector = ControlProblem::plus_sector(&spec)?;
    let t_f = 0.65 * n as f64;
    let mut problem = ControlProblem::ghz_transfer(&spec, &sector, t_f, 3 * n)?.with_starts(2, 0);
    problem.fidelity_target = Some(0.99);
    let result = optimizer::optimize(&problem)?;
    println!(
        "N = {n}, block dim {}, t_f = {t_f}: F = {:.6} after {} iterations (start {}, |grad| = {:.2e})",
        problem.dim(),
        result.fidelity,
        result.iterations,
        result.start_index,
        result.gradient_norm
    );
    print!("{}", result.pulse_csv());

    let system = ControlSystem::for_sector(&spec, &sector)?;
    let psi0 = symmetry::to_block(&sector.initial_product, &sector.decomposition, sector.block)?;
    let target = symmetry::to_block(&sector.target, &sector.decomposition, sector.block)?;
    let spaces = EigenspaceSet::of_drift(&system)?;
    let traj = propagation::evolve_schrodinger(&system, &psi0, &result.pulse, t_f, EvolveOptions::new(&target).eigenspaces(&spaces))?;
    let last = traj.populations.row(traj.len() - 1);
    println!("final eigenspace populations (ground first): {:?}", last.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>());
    Ok(())
}
