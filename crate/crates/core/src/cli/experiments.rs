//! Single experiments shared by the subcommands, config runs and reproductions.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::{AdiabaticSection, LyapunovSection, OptimizeSection, ScanSection};
use super::output::Artifacts;
use super::plot::{Plot, Series};
use crate::adiabatic::{self, AdiabaticOptions, AdiabaticReport};
use crate::error::{Error, Result};
use crate::format::{g12, g12_opt};
use crate::lyapunov::{self, LyapunovOptions, LyapunovRun};
use crate::optimizer::{self, ControlProblem, OptimizationResult, ScanOptions, ScanRow};
use crate::propagation::{self, ControlSystem, EigenspaceSet, EvolveOptions, LindbladOptions, Trajectory};
use crate::robustness::{self, DesignOptions, Method, MethodPulse, SweepKind, SweepResult};
use crate::spin::{self, ChainSpec, Sign, Space};
use crate::symmetry::{self, DecompositionParams, TargetSector};

/// Largest chain accepted by the command line, from `GHZCTL_MAX_N` (default 14).
pub fn max_sites() -> Result<usize> {
    match std::env::var("GHZCTL_MAX_N") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| Error::invalid(format!("GHZCTL_MAX_N must be a positive integer, got '{v}'")))?;
            if n == 0 {
                return Err(Error::invalid("GHZCTL_MAX_N must be positive"));
            }
            Ok(n.min(spin::MAX_SITES))
        }
        Err(_) => Ok(spin::MAX_SITES),
    }
}

pub fn chain(n: usize, coupling: f64) -> Result<ChainSpec> {
    let cap = max_sites()?;
    if n > cap {
        return Err(Error::invalid(format!("N = {n} exceeds the size cap {cap} (GHZCTL_MAX_N)")));
    }
    ChainSpec::new(n, coupling)
}

fn sign_of(x: f64, what: &str) -> Result<Sign> {
    Sign::of(x).ok_or_else(|| Error::invalid(format!("{what} must be nonzero")))
}

pub fn decompose(spec: &ChainSpec, f0: f64, params: DecompositionParams) -> Result<Artifacts> {
    let n = spec.n_sites();
    let verdict = symmetry::classify_reachable_ghz(sign_of(spec.coupling(), "J")?, sign_of(f0, "f0")?, n)?;
    let decomp = symmetry::decompose(&spin::build_drift(spec), &spin::build_control(spec), params)?;
    let ghz = symmetry::locate_state(&spin::ghz_state(spec, verdict.target)?, &decomp)?;
    let init = symmetry::locate_state(&spin::product_state(spec, verdict.initial_sign()), &decomp)?;
    let mut csv = String::from("block_id,dim,contains_initial,contains_ghz\n");
    for (i, d) in decomp.block_dims().iter().enumerate() {
        let _ = writeln!(csv, "{i},{d},{},{}", init.confined && init.block == i, ghz.confined && ghz.block == i);
    }
    let mut a = Artifacts::default();
    a.csv(format!("decompose_N{n}.csv"), csv);
    a.line("N,blocks,ghz_k,ghz_block,ghz_block_dim");
    a.line(format!("{n},{},{},{},{}", decomp.block_dims().len(), verdict.target, ghz.block, decomp.block_dims()[ghz.block]));
    Ok(a)
}

pub fn spectrum(spec: &ChainSpec, f_min: f64, f_max: f64, points: usize) -> Result<(Artifacts, adiabatic::GapScan)> {
    if points < 2 || !(f_max > f_min) {
        return Err(Error::invalid("spectrum needs f_max > f_min and at least two points"));
    }
    let reference = if f_max.abs() >= f_min.abs() { f_max } else { f_min };
    let sector = TargetSector::build(spec, sign_of(reference, "field range")?)?;
    let system = ControlSystem::for_sector(spec, &sector)?;
    let grid: Vec<f64> = (0..points).map(|i| f_min + (f_max - f_min) * i as f64 / (points - 1) as f64).collect();
    let scan = adiabatic::gap_scan(&system, &grid)?;
    let n = spec.n_sites();
    let mut a = Artifacts::default();
    a.csv(format!("spectrum_N{n}.csv"), scan.to_csv());
    a.plot(
        format!("spectrum_N{n}.svg"),
        Plot::new(format!("GHZ block spectrum, N={n}"), "f", "energy")
            .with(Series::new("eps1", grid.clone(), scan.epsilon1.clone()))
            .with(Series::new("gap", grid, scan.gap.clone()).dashed()),
    );
    Ok((a, scan))
}

/// Adiabatic passages for several chain lengths, run concurrently.
pub fn adiabatic_runs(specs: &[ChainSpec], section: &AdiabaticSection) -> Result<(Artifacts, Vec<AdiabaticReport>)> {
    let schedule = section.schedule()?;
    let opts = AdiabaticOptions { horizon: section.horizon, sample_dt: section.sample_dt, track_excited: false };
    let reports: Vec<AdiabaticReport> =
        specs.par_iter().map(|s| adiabatic::run_adiabatic(s, &schedule, section.threshold, opts)).collect::<Result<_>>()?;
    let mut a = Artifacts::default();
    let mut summary = String::from("N,t_threshold,asymptotic_F\n");
    let mut log_err = Plot::new("Adiabatic passage: population not transferred", "t", "1 - F").log_y();
    let mut fid = Plot::new("Adiabatic passage: fidelity", "t", "F");
    for (s, r) in specs.iter().zip(&reports) {
        let n = s.n_sites();
        a.csv(format!("adiabatic_N{n}.csv"), r.trajectory.to_csv());
        let _ = writeln!(summary, "{n},{},{}", g12_opt(r.t_threshold), g12(r.asymptotic_f));
        let t = r.trajectory.times.clone();
        log_err = log_err.with(Series::new(format!("N={n}"), t.clone(), r.trajectory.fidelity.iter().map(|f| 1.0 - f).collect()));
        fid = fid.with(Series::new(format!("N={n}"), t, r.trajectory.fidelity.clone()));
    }
    a.csv("adiabatic_summary.csv", summary);
    a.plot("adiabatic_log_error.svg", log_err);
    a.plot("adiabatic_fidelity.svg", fid);
    a.line("N,t_threshold,asymptotic_F");
    for (s, r) in specs.iter().zip(&reports) {
        a.line(format!("{},{},{}", s.n_sites(), g12_opt(r.t_threshold), g12(r.asymptotic_f)));
    }
    Ok((a, reports))
}

/// Closed-loop run from the ground state at `f0` to the reachable GHZ state, inside its block.
pub fn lyapunov_run(spec: &ChainSpec, section: &LyapunovSection) -> Result<LyapunovRun> {
    let sector = TargetSector::build(spec, sign_of(section.f0, "f0")?)?;
    let system = ControlSystem::for_sector(spec, &sector)?;
    let ground = spin::lowest_eigenstate(&system.hamiltonian(section.f0), Space::Block(sector.block))?;
    let rho0 = ground
        .state
        .ok_or_else(|| Error::Degenerate(format!("ground state at f0 = {} is degenerate", section.f0)))?;
    let target = symmetry::to_block(&sector.target, &sector.decomposition, sector.block)?;
    let kappa = section.kappa.unwrap_or_else(|| lyapunov::default_kappa(spec.n_sites()));
    let mut opts = LyapunovOptions::new(kappa, section.t_f);
    opts.dt = section.dt;
    opts.sample_dt = section.sample_dt;
    lyapunov::run_closed_loop(&system, &rho0, &target, opts)
}

pub fn lyapunov_runs(specs: &[ChainSpec], section: &LyapunovSection) -> Result<(Artifacts, Vec<LyapunovRun>)> {
    let runs: Vec<LyapunovRun> = specs.par_iter().map(|s| lyapunov_run(s, section)).collect::<Result<_>>()?;
    let mut a = Artifacts::default();
    let mut v_plot = Plot::new("Lyapunov control: distance V", "t", "V").log_y();
    let mut f_plot = Plot::new("Lyapunov control: field", "t", "f");
    a.line("N,kappa,final_F,final_V");
    for (s, r) in specs.iter().zip(&runs) {
        let n = s.n_sites();
        a.csv(format!("lyapunov_N{n}.csv"), r.trajectory.to_csv());
        let t = r.trajectory.times.clone();
        v_plot = v_plot.with(Series::new(format!("N={n}"), t.clone(), r.trajectory.lyapunov.clone().unwrap_or_default()));
        f_plot = f_plot.with(Series::new(format!("N={n}"), t, r.trajectory.field.clone()));
        a.line(format!("{n},{},{},{}", g12(r.kappa), g12(r.trajectory.final_fidelity()), g12(r.final_v)));
    }
    a.plot("lyapunov_distance.svg", v_plot);
    a.plot("lyapunov_field.svg", f_plot);
    Ok((a, runs))
}

/// Optimizes `|+…+⟩ → GHZ` and records the resulting trajectory with `H0` eigenspace populations.
pub fn optimal_run(spec: &ChainSpec, t_f: f64, k: usize, section: &OptimizeSection, seed: u64) -> Result<(OptimizationResult, Trajectory)> {
    let sector = ControlProblem::plus_sector(spec)?;
    let mut p = ControlProblem::ghz_transfer(spec, &sector, t_f, k)?.with_starts(section.starts, seed);
    p.max_iters = section.max_iters;
    p.fidelity_target = section.fidelity_target;
    let result = optimizer::optimize(&p)?;
    let system = ControlSystem::for_sector(spec, &sector)?;
    let psi0 = symmetry::to_block(&sector.initial_product, &sector.decomposition, sector.block)?;
    let target = symmetry::to_block(&sector.target, &sector.decomposition, sector.block)?;
    let spaces = EigenspaceSet::of_drift(&system)?;
    let sample_dt = (t_f / 200.0).min(propagation::DEFAULT_SAMPLE_DT);
    let opts = EvolveOptions::new(&target).sample_dt(sample_dt).eigenspaces(&spaces);
    let traj = propagation::evolve_schrodinger(&system, &psi0, &result.pulse, t_f, opts)?;
    Ok((result, traj))
}

pub fn optimize_runs(specs: &[ChainSpec], section: &OptimizeSection, seed: u64) -> Result<(Artifacts, Vec<OptimizationResult>)> {
    let runs: Vec<(OptimizationResult, Trajectory)> = specs
        .par_iter()
        .map(|s| optimal_run(s, section.t_f(s.n_sites()), section.slices(s.n_sites()), section, seed))
        .collect::<Result<_>>()?;
    let mut a = Artifacts::default();
    a.line("N,F,iters,grad_norm,start,converged,amplitude_violations");
    for (s, (r, traj)) in specs.iter().zip(&runs) {
        let n = s.n_sites();
        a.csv(format!("pulse_N{n}.csv"), r.pulse_csv());
        a.csv(format!("optimal_N{n}.csv"), traj.to_csv());
        let amps = r.pulse.amplitudes().unwrap_or(&[]);
        let dt = r.pulse.duration() / amps.len().max(1) as f64;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, f) in amps.iter().enumerate() {
            xs.extend([i as f64 * dt, (i + 1) as f64 * dt]);
            ys.extend([*f, *f]);
        }
        a.plot(format!("pulse_N{n}.svg"), Plot::new(format!("Optimal pulse, N={n}"), "t", "f").with(Series::new("f(t)", xs, ys)));
        let mut pops = Plot::new(format!("Eigenspace populations, N={n}"), "t", "population");
        for j in 0..traj.populations.ncols() {
            pops = pops.with(Series::new(format!("S{}", j + 1), traj.times.clone(), traj.populations.column(j).to_vec()));
        }
        a.plot(format!("populations_N{n}.svg"), pops);
        a.line(format!(
            "{n},{},{},{},{},{},{}",
            g12(r.fidelity),
            r.iterations,
            g12(r.gradient_norm),
            r.start_index,
            r.converged,
            r.amplitude_violations
        ));
    }
    Ok((a, runs.into_iter().map(|(r, _)| r).collect()))
}

pub fn scan_options(section: &ScanSection, seed: u64) -> ScanOptions {
    ScanOptions {
        fidelity_target: section.fidelity_target,
        k_per_site: section.slices_per_site,
        starts: section.starts,
        seed,
        m_start: section.m_start,
        m_max: section.m_max,
        ..Default::default()
    }
}

/// Minimum-time scan, one chain length per task.
pub fn scan_min_time(n_values: &[usize], coupling: f64, options: ScanOptions) -> Result<(Artifacts, Vec<ScanRow>)> {
    for &n in n_values {
        chain(n, coupling)?;
    }
    let rows: Vec<ScanRow> = n_values
        .par_iter()
        .map(|&n| optimizer::minimum_time_scan(&[n], coupling, options).map(|mut v| v.remove(0)))
        .collect::<Result<_>>()?;
    let mut a = Artifacts::default();
    a.csv("scan_min_time.csv", optimizer::scan_csv(&rows));
    let ns: Vec<f64> = rows.iter().map(|r| r.n_sites as f64).collect();
    a.plot(
        "scan_min_time.svg",
        Plot::new("Minimum time for the fidelity target", "N", "t_min")
            .with(Series::new("t_min", ns.clone(), rows.iter().map(|r| r.t_min.unwrap_or(f64::NAN)).collect()))
            .with(Series::new("0.65 N", ns.clone(), ns.iter().map(|n| 0.65 * n).collect()).dashed()),
    );
    a.plot(
        "block_dim.svg",
        Plot::new("GHZ block dimension", "N", "dim").log_y().with(Series::new("dim", ns, rows.iter().map(|r| r.block_dim as f64).collect())),
    );
    Ok((a, rows))
}

#[derive(Clone, Copy, Debug)]
pub struct SweepRequest<'a> {
    pub method: Method,
    pub kind: SweepKind,
    pub values: &'a [f64],
    pub samples: usize,
    pub seed: u64,
    /// Field of the thermal state, or of the reference ground state.
    pub f0: f64,
    pub lindblad_dt: f64,
}

pub fn sweep(pulse: &MethodPulse, req: &SweepRequest<'_>) -> Result<SweepResult> {
    match req.kind {
        SweepKind::Init => robustness::init_sweep(pulse, req.values),
        SweepKind::Thermal => robustness::thermal_sweep(pulse, req.f0, req.values),
        SweepKind::Disorder => robustness::disorder_sweep(pulse, req.values, req.samples, req.seed),
        SweepKind::Dephasing => {
            let opts = LindbladOptions { dt: req.lindblad_dt, ..Default::default() };
            robustness::dephasing_sweep(pulse, req.values, opts)
        }
    }
}

/// The `f0` of the reference ground state points the same way as the `|+…+⟩` sector.
pub fn signed_f0(spec: &ChainSpec, magnitude: f64) -> f64 {
    -spec.coupling().signum() * magnitude.abs()
}

pub fn robustness_run(spec: &ChainSpec, req: &SweepRequest<'_>) -> Result<(Artifacts, SweepResult)> {
    let pulse = robustness::design_pulse(spec, req.method, DesignOptions { seed: req.seed, ..Default::default() })?;
    let req = SweepRequest { f0: signed_f0(spec, req.f0), ..*req };
    let r = sweep(&pulse, &req)?;
    let mut a = Artifacts::default();
    let stem = format!("robustness_{}_{}_N{}", req.method.name(), req.kind.name(), spec.n_sites());
    a.csv(format!("{stem}.csv"), r.to_csv());
    let mut plot = Plot::new(
        format!("{} pulse, {} sweep, N={}", req.method.name(), req.kind.name(), spec.n_sites()),
        req.kind.parameter(),
        "F",
    )
    .with(Series::new("F", r.values.clone(), r.mean_f.clone()));
    if let Some(b) = &r.bound {
        plot = plot.with(Series::new("bound", r.values.clone(), b.clone()).dashed());
    }
    a.plot(format!("{stem}.svg"), plot);
    a.line(format!("nominal_F,{}", g12(pulse.nominal_fidelity)));
    Ok((a, r))
}
