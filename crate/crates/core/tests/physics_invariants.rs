use ghz_chain::linalg;
use ghz_chain::lyapunov::{self, LyapunovOptions, MONOTONICITY_TOLERANCE};
use ghz_chain::optimizer::ControlProblem;
use ghz_chain::propagation::{self, evolve_lindblad, ControlSystem, EvolveOptions, LindbladOptions, PulseSchedule};
use ghz_chain::robustness::{self, DesignOptions, Method};
use ghz_chain::spin::{self, ChainSpec, QuantumState, Sign, Space};
use ghz_chain::symmetry::{self, TargetSector};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn chain(n: usize, j: f64) -> ChainSpec {
    ChainSpec::new(n, j).unwrap()
}

fn state_from(parts: &[(f64, f64)], dim: usize) -> QuantumState {
    let v = Array1::from_shape_fn(dim, |i| {
        let (re, im) = parts[i % parts.len()];
        C64::new(re + 0.01 * i as f64, im)
    });
    QuantumState::normalized(v, Space::Full).unwrap()
}

fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![-2.0..-0.2f64, 0.2..2.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn step_propagators_are_unitary(n in 2usize..=6, j in coupling(), f in -8.0..8.0f64, dt in 0.001..2.0f64) {
        let s = chain(n, j);
        let u = propagation::step_propagator(&spin::build_drift(&s), &spin::build_control(&s), j, f, dt).unwrap();
        let eye = Array2::<C64>::eye(s.dim());
        prop_assert!(linalg::max_abs_diff(&linalg::dagger(u.matrix()).dot(u.matrix()), &eye) < 1e-12);
    }

    #[test]
    fn total_propagators_are_unitary(n in 2usize..=5, amps in prop::collection::vec(-4.0..4.0f64, 1..8), width in 0.05..0.6f64) {
        let s = chain(n, -1.0);
        let sched = PulseSchedule::piecewise(amps, width).unwrap();
        let u = propagation::total_propagator(&ControlSystem::chain(&s), &sched, 0.0, sched.duration()).unwrap();
        let eye = Array2::<C64>::eye(s.dim());
        prop_assert!(linalg::max_abs_diff(&linalg::dagger(u.matrix()).dot(u.matrix()), &eye) < 1e-12);
    }

    #[test]
    fn parity_is_conserved(
        n in 2usize..=6,
        j in coupling(),
        amps in prop::collection::vec(-5.0..5.0f64, 1..6),
        parts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3),
    ) {
        let s = chain(n, j);
        let sched = PulseSchedule::piecewise(amps, 0.3).unwrap();
        let psi = state_from(&parts, s.dim());
        let m = spin::parity_operator(&s);
        let out = propagation::propagate_state(&ControlSystem::chain(&s), &psi, &sched, 0.0, sched.duration()).unwrap();
        prop_assert!((out.expectation(&m).unwrap() - psi.expectation(&m).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn ghz_block_does_not_leak(n in 2usize..=6, j in coupling(), amps in prop::collection::vec(-5.0..5.0f64, 1..6)) {
        let s = chain(n, j);
        let sector = TargetSector::build(&s, Sign::of(-j).unwrap()).unwrap();
        let sched = PulseSchedule::piecewise(amps, 0.4).unwrap();
        let out = propagation::propagate_state(&ControlSystem::chain(&s), &sector.initial_product, &sched, 0.0, sched.duration()).unwrap();
        let loc = symmetry::locate_state(&out, &sector.decomposition).unwrap();
        prop_assert_eq!(loc.block, sector.block);
        prop_assert!(loc.leakage < 1e-9);
    }

    #[test]
    fn thermal_fidelity_is_bounded_by_ground_weight(n in 2usize..=5, t in 0.1..20.0f64, amps in prop::collection::vec(-5.0..5.0f64, 1..6)) {
        let s = chain(n, -1.0);
        let system = ControlSystem::chain(&s);
        let e = system.eigen(10.0).unwrap();
        let rho = spin::thermal_state_from_eigen(&e, t, Space::Full).unwrap();
        let w1 = spin::thermal_weights(&e.values, t).unwrap()[0];
        let sched = PulseSchedule::piecewise(amps, 0.5).unwrap();
        let u = propagation::total_propagator(&system, &sched, 0.0, sched.duration()).unwrap();
        let out = propagation::conjugate(&u, &rho).unwrap();
        let target = spin::ghz_state(&s, 1).unwrap();
        prop_assert!(spin::fidelity(&out, &target).unwrap() <= w1 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lindblad_preserves_trace(n in 2usize..=4, gamma in 0.0..0.2f64, f0 in 1.0..6.0f64) {
        let s = chain(n, -1.0);
        let sched = PulseSchedule::exponential(f0, 0.5).unwrap();
        let rho0 = spin::product_state(&s, Sign::Plus).to_density();
        let target = spin::ghz_state(&s, 1).unwrap();
        let tr = evolve_lindblad(&ControlSystem::chain(&s), &rho0, &sched, 3.0, gamma, LindbladOptions::default(), EvolveOptions::new(&target).sample_dt(1.0)).unwrap();
        let rho = tr.final_state.density_matrix();
        let trace: f64 = rho.diag().iter().map(|z| z.re).sum();
        prop_assert!((trace - 1.0).abs() < 1e-8);
        prop_assert!(linalg::hermiticity_defect(&rho) < 1e-10);
        prop_assert!(tr.fidelity.iter().all(|f| (-1e-9..=1.0 + 1e-9).contains(f)));
    }

    #[test]
    fn noiseless_lindblad_matches_unitary(n in 2usize..=4, amps in prop::collection::vec(-4.0..4.0f64, 1..5)) {
        let s = chain(n, -1.0);
        let system = ControlSystem::chain(&s);
        let sched = PulseSchedule::piecewise(amps, 0.5).unwrap();
        let psi = spin::product_state(&s, Sign::Plus);
        let target = spin::ghz_state(&s, 1).unwrap();
        let horizon = sched.duration();
        let tr = evolve_lindblad(&system, &psi.to_density(), &sched, horizon, 0.0, LindbladOptions::default(), EvolveOptions::new(&target).sample_dt(horizon)).unwrap();
        let exact = propagation::propagate_state(&system, &psi, &sched, 0.0, horizon).unwrap();
        prop_assert!(linalg::max_abs_diff(&tr.final_state.density_matrix(), &exact.density_matrix()) < 1e-7);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences(
        n in 3usize..=5,
        t_f in 0.5..5.0f64,
        amps in prop::collection::vec(-3.0..3.0f64, 2..10),
    ) {
        let s = chain(n, -1.0);
        let sector = ControlProblem::plus_sector(&s).unwrap();
        let p = ControlProblem::ghz_transfer(&s, &sector, t_f, amps.len()).unwrap();
        let (_, g) = p.objective_and_gradient(&amps).unwrap();
        for k in 0..amps.len() {
            let mut a = amps.clone();
            a[k] += 1e-6;
            let up = p.objective_and_gradient(&a).unwrap().0;
            a[k] -= 2e-6;
            let down = p.objective_and_gradient(&a).unwrap().0;
            let fd = (up - down) / 2e-6;
            prop_assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-3), "k={} fd={} g={}", k, fd, g[k]);
        }
    }

    #[test]
    fn lyapunov_distance_never_increases(n in 2usize..=4, kappa in 0.5..20.0f64, f0 in 2.0..10.0f64) {
        let s = chain(n, -1.0);
        let sector = TargetSector::build(&s, Sign::Plus).unwrap();
        let system = ControlSystem::for_sector(&s, &sector).unwrap();
        let rho0 = spin::lowest_eigenstate(&system.hamiltonian(f0), Space::Block(sector.block)).unwrap().state.unwrap();
        let target = symmetry::to_block(&sector.target, &sector.decomposition, sector.block).unwrap();
        let r = lyapunov::run_closed_loop(&system, &rho0, &target, LyapunovOptions::new(kappa, 4.0)).unwrap();
        prop_assert!(r.v_steps.windows(2).all(|w| w[1] <= w[0] + MONOTONICITY_TOLERANCE));
    }

    #[test]
    fn disorder_instances_are_bounded_and_seeded(n in 2usize..=12, sigma in 0.0..0.5f64, seed in any::<u64>(), i in 0usize..10, k in 0usize..100) {
        let d = robustness::disorder_instance(n, sigma, seed, i, k);
        prop_assert_eq!(d.len(), n - 1);
        prop_assert!(d.iter().all(|x| x.abs() <= sigma));
        prop_assert_eq!(d, robustness::disorder_instance(n, sigma, seed, i, k));
    }
}

#[test]
fn disorder_means_agree_across_seeds() {
    let s = chain(3, -1.0);
    let pulse = robustness::design_pulse(&s, Method::Lyapunov, DesignOptions::default()).unwrap();
    let a = robustness::disorder_sweep(&pulse, &[0.1], 60, 1).unwrap();
    let b = robustness::disorder_sweep(&pulse, &[0.1], 60, 2).unwrap();
    let se = |r: &robustness::SweepResult| r.std_f.as_ref().unwrap()[0] / (r.n_samples as f64).sqrt();
    let combined = (se(&a).powi(2) + se(&b).powi(2)).sqrt();
    assert!((a.mean_f[0] - b.mean_f[0]).abs() <= 3.0 * combined, "{} vs {} (se {combined})", a.mean_f[0], b.mean_f[0]);
}
