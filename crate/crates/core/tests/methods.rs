use ghz_chain::lyapunov::{self, LyapunovOptions};
use ghz_chain::optimizer::{self, ControlProblem};
use ghz_chain::propagation::ControlSystem;
use ghz_chain::spin::{self, ChainSpec, Sign, Space};
use ghz_chain::symmetry::{self, TargetSector};

fn chain(n: usize) -> ChainSpec {
    ChainSpec::new(n, -1.0).unwrap()
}

#[test]
fn six_site_gain_sweep_trades_speed_for_final_fidelity() {
    let s = chain(6);
    let sector = TargetSector::build(&s, Sign::Plus).unwrap();
    let system = ControlSystem::for_sector(&s, &sector).unwrap();
    let rho0 = spin::lowest_eigenstate(&system.hamiltonian(10.0), Space::Block(sector.block)).unwrap().state.unwrap();
    let target = symmetry::to_block(&sector.target, &sector.decomposition, sector.block).unwrap();
    let mut finals = Vec::new();
    let mut reach = Vec::new();
    for kappa in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let opts = LyapunovOptions { dt: 0.005, ..LyapunovOptions::new(kappa, 300.0) };
        let r = lyapunov::run_closed_loop(&system, &rho0, &target, opts).unwrap();
        finals.push(r.final_f);
        reach.push(r.trajectory.first_crossing(0.95 * r.final_f).unwrap());
    }
    assert!(finals.windows(2).all(|w| w[1] >= w[0] - 1e-9), "final F {finals:?}");
    assert!(reach.windows(2).all(|w| w[1] >= w[0]), "time to 95% of final F {reach:?}");
}

#[test]
fn six_site_pulse_at_the_linear_time_bound() {
    let s = chain(6);
    let sector = ControlProblem::plus_sector(&s).unwrap();
    let p = ControlProblem::ghz_transfer(&s, &sector, 3.9, 18).unwrap().with_starts(2, 0);
    let r = optimizer::optimize(&p).unwrap();
    assert!(r.fidelity >= 0.99, "F = {}", r.fidelity);
    assert!(r.start_costs.iter().all(|c| 1.0 - r.fidelity <= c + 1e-15));
}

#[test]
fn six_site_transfer_fails_far_below_the_time_bound() {
    let s = chain(6);
    let sector = ControlProblem::plus_sector(&s).unwrap();
    let p = ControlProblem::ghz_transfer(&s, &sector, 1.0, 18).unwrap().with_starts(4, 3);
    let r = optimizer::optimize(&p).unwrap();
    assert!(r.fidelity < 0.99, "F = {}", r.fidelity);
}

#[test]
fn two_site_transfer_is_essentially_exact() {
    let s = chain(2);
    let sector = ControlProblem::plus_sector(&s).unwrap();
    let p = ControlProblem::ghz_transfer(&s, &sector, 5.0, 6).unwrap();
    assert!(optimizer::optimize(&p).unwrap().fidelity >= 0.9999);
}
