//! Adiabatic passage from the large-field product state to a GHZ state.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::g12;
use crate::linalg;
use crate::propagation::{
    evolve_schrodinger, ControlSystem, EigenspaceSet, EvolveOptions, PulseSchedule, Trajectory, DEFAULT_SAMPLE_DT,
};
use crate::spin::{self, ChainSpec, Sign, Space};
use crate::symmetry::{self, TargetSector};

pub const DEFAULT_HORIZON: f64 = 100.0;
pub const DEFAULT_THRESHOLD: f64 = 0.99;
/// Smallest gap used as a divisor in the adiabaticity metric.
pub const GAP_FLOOR: f64 = 1e-12;

/// Lowest level `ε₁(f)` and gap `Δε(f) = ε₂ − ε₁` over a field grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GapScan {
    pub f_values: Vec<f64>,
    pub epsilon1: Vec<f64>,
    pub gap: Vec<f64>,
    pub space: Space,
}

impl GapScan {
    /// CSV `f,eps1,gap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("f,eps1,gap\n");
        for i in 0..self.f_values.len() {
            let _ = writeln!(out, "{},{},{}", g12(self.f_values[i]), g12(self.epsilon1[i]), g12(self.gap[i]));
        }
        out
    }
}

pub fn gap_scan(system: &ControlSystem, f_grid: &[f64]) -> Result<GapScan> {
    if system.dim() < 2 {
        return Err(Error::invalid("gap scan needs at least two levels"));
    }
    let mut scan = GapScan { f_values: f_grid.to_vec(), epsilon1: Vec::new(), gap: Vec::new(), space: system.space() };
    for &f in f_grid {
        if !f.is_finite() {
            return Err(Error::invalid("field grid must be finite"));
        }
        let e = linalg::eigvalsh(system.hamiltonian(f).matrix())?;
        scan.epsilon1.push(e[0]);
        scan.gap.push((e[1] - e[0]).max(0.0));
    }
    Ok(scan)
}

/// `E(t) = ε̇₁/Δε` along a schedule, with `ε̇₁` from centered differences on `t_grid`.
pub fn adiabaticity_metric(system: &ControlSystem, schedule: &PulseSchedule, t_grid: &[f64]) -> Result<Vec<f64>> {
    if t_grid.len() < 2 {
        return Err(Error::invalid("adiabaticity metric needs at least two grid points"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    let fields: Vec<f64> = t_grid.iter().map(|&t| schedule.value(t)).collect();
    let scan = gap_scan(system, &fields)?;
    let n = t_grid.len();
    Ok((0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let rate = (scan.epsilon1[b] - scan.epsilon1[a]) / (t_grid[b] - t_grid[a]);
            rate / scan.gap[i].max(GAP_FLOOR)
        })
        .collect())
}

#[derive(Clone, Copy, Debug)]
pub struct AdiabaticOptions {
    pub horizon: f64,
    pub sample_dt: f64,
    /// Also record the population outside the instantaneous ground state (one diagonalization per sample).
    pub track_excited: bool,
}

impl Default for AdiabaticOptions {
    fn default() -> Self {
        AdiabaticOptions { horizon: DEFAULT_HORIZON, sample_dt: DEFAULT_SAMPLE_DT, track_excited: false }
    }
}

#[derive(Clone, Debug)]
pub struct AdiabaticReport {
    pub trajectory: Trajectory,
    /// `E(t)` on the trajectory's sample times.
    pub e_metric: Vec<f64>,
    pub t_threshold: Option<f64>,
    pub asymptotic_f: f64,
    /// `1 − p₁(t)`, population outside the instantaneous ground state.
    pub excited: Option<Vec<f64>>,
    pub target_ghz: usize,
    pub block_dim: usize,
}

/// Runs the passage inside the block holding the reachable GHZ state,
/// starting from the ground state at the schedule's initial field.
pub fn run_adiabatic(
    spec: &ChainSpec,
    schedule: &PulseSchedule,
    threshold: f64,
    options: AdiabaticOptions,
) -> Result<AdiabaticReport> {
    let sector = TargetSector::build(spec, initial_sign(schedule)?)?;
    run_adiabatic_in(spec, &sector, schedule, threshold, options)
}

fn initial_sign(schedule: &PulseSchedule) -> Result<Sign> {
    Sign::of(schedule.initial_value())
        .ok_or_else(|| Error::invalid("schedule must start at a nonzero field to select the target sector"))
}

/// [`run_adiabatic`] with a prebuilt sector (the decomposition is the expensive part).
pub fn run_adiabatic_in(
    spec: &ChainSpec,
    sector: &TargetSector,
    schedule: &PulseSchedule,
    threshold: f64,
    options: AdiabaticOptions,
) -> Result<AdiabaticReport> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold must lie in [0, 1], got {threshold}")));
    }
    let j_sign = Sign::of(spec.coupling()).expect("nonzero coupling");
    if symmetry::classify_reachable_ghz(j_sign, initial_sign(schedule)?, spec.n_sites())? != sector.verdict {
        return Err(Error::invalid("sector was built for the opposite field sign"));
    }
    let system = ControlSystem::for_sector(spec, sector)?;
    let f0 = schedule.initial_value();
    let ground = spin::lowest_eigenstate(&system.hamiltonian(f0), Space::Block(sector.block))?;
    let psi0 = ground.state.ok_or_else(|| {
        Error::Degenerate(format!("ground state at f0 = {f0} is degenerate (gap {:.3e})", ground.gap))
    })?;
    let target = symmetry::to_block(&sector.target, &sector.decomposition, sector.block)?;
    let spaces = EigenspaceSet::of_drift(&system)?;
    let opts = EvolveOptions::new(&target).sample_dt(options.sample_dt).eigenspaces(&spaces);
    let trajectory = evolve_schrodinger(&system, &psi0, schedule, options.horizon, opts)?;
    let e_metric = adiabaticity_metric(&system, schedule, &trajectory.times)?;
    let excited = if options.track_excited { Some(excited_population(&system, schedule, &psi0, options)?) } else { None };
    Ok(AdiabaticReport {
        t_threshold: trajectory.first_crossing(threshold),
        asymptotic_f: trajectory.final_fidelity(),
        e_metric,
        excited,
        trajectory,
        target_ghz: sector.verdict.target,
        block_dim: sector.block_dim(),
    })
}

fn excited_population(
    system: &ControlSystem,
    schedule: &PulseSchedule,
    psi0: &spin::QuantumState,
    options: AdiabaticOptions,
) -> Result<Vec<f64>> {
    let times = crate::propagation::sample_times(options.horizon, options.sample_dt);
    let mut state = psi0.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    for t in times {
        state = crate::propagation::propagate_state(system, &state, schedule, t_prev, t)?;
        let e = system.eigen(schedule.value(t))?;
        let v = state.vector().expect("pure evolution");
        let p1 = linalg::inner(&e.vectors.column(0).to_owned(), v).norm_sqr();
        out.push((1.0 - p1).max(0.0));
        t_prev = t;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_system(n: usize, f_sign: Sign) -> ControlSystem {
        let spec = ChainSpec::new(n, -1.0).unwrap();
        let sector = TargetSector::build(&spec, f_sign).unwrap();
        ControlSystem::for_sector(&spec, &sector).unwrap()
    }

    #[test]
    fn two_site_block_spectrum_is_even_in_f() {
        let sys = block_system(2, Sign::Plus);
        let fs: Vec<f64> = (0..11).map(|i| -2.0 + 0.4 * i as f64).collect();
        let scan = gap_scan(&sys, &fs).unwrap();
        for i in 0..fs.len() {
            let j = fs.len() - 1 - i;
            assert!((scan.epsilon1[i] - scan.epsilon1[j]).abs() < 1e-12);
            // oracle: eigenvalues of −(X + 2f·(−Z)) are ±sqrt(1 + 4f²)
            assert!((scan.epsilon1[i] + (1.0 + 4.0 * fs[i] * fs[i]).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_full_space_is_degenerate() {
        let spec = ChainSpec::new(4, -1.0).unwrap();
        let scan = gap_scan(&ControlSystem::chain(&spec), &[0.0]).unwrap();
        assert!(scan.gap[0].abs() < 1e-12);
    }

    #[test]
    fn constant_schedule_has_zero_metric() {
        let sys = block_system(4, Sign::Plus);
        let sched = PulseSchedule::constant(3.0, 10.0).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
        assert!(adiabaticity_metric(&sys, &sched, &grid).unwrap().iter().all(|e| *e == 0.0));
    }

    #[test]
    fn exponential_metric_plateau() {
        let sys = block_system(10, Sign::Plus);
        let mu = 0.1;
        // f from 100 down to 30, well inside the linear-gap regime
        let sched = PulseSchedule::exponential(100.0, mu).unwrap();
        let grid: Vec<f64> = (0..=120).map(|i| 0.1 * i as f64).collect();
        let e = adiabaticity_metric(&sys, &sched, &grid).unwrap();
        for x in &e[1..e.len() - 1] {
            assert!((x.abs() - 2.5 * mu).abs() < 0.1 * 2.5 * mu, "{x}");
        }
    }

    #[test]
    fn fast_passage_from_degenerate_start_is_rejected() {
        let spec = ChainSpec::new(3, -1.0).unwrap();
        assert!(run_adiabatic(&spec, &PulseSchedule::constant(0.0, 1.0).unwrap(), 0.99, AdiabaticOptions::default()).is_err());
    }

    #[test]
    fn slow_two_site_passage_reaches_target() {
        let spec = ChainSpec::new(2, -1.0).unwrap();
        let sched = PulseSchedule::exponential(10.0, 0.1).unwrap();
        let opts = AdiabaticOptions { horizon: 60.0, track_excited: true, ..Default::default() };
        let r = run_adiabatic(&spec, &sched, 0.99, opts).unwrap();
        assert!(r.asymptotic_f > 0.99);
        assert_eq!(r.asymptotic_f, *r.trajectory.fidelity.last().unwrap());
        let t = r.t_threshold.unwrap();
        assert!(t > 0.0 && t < 60.0);
        let ex = r.excited.unwrap();
        assert!(ex[0] < 1e-12 && ex.iter().all(|x| *x < 0.05));
    }
}
