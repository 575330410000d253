//! Imperfection studies: initialization error, thermal initial states,
//! coupling disorder and single-spin dephasing.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{g12, g12_opt};
use crate::linalg;
use crate::lyapunov::{self, LyapunovOptions};
use crate::optimizer::{self, ControlProblem};
use crate::propagation::{
    self, evolve_lindblad, ControlSystem, EvolveOptions, LindbladOptions, PulseSchedule,
};
use crate::spin::{self, ChainSpec, QuantumState, Space};
use crate::symmetry::{self, TargetSector};

pub const DEFAULT_SAMPLES: usize = 100;
/// Field defining the nominal initial ground state.
pub const DESIGN_F0: f64 = 10.0;
pub const ADIABATIC_MU: f64 = 0.1;
pub const ADIABATIC_HORIZON: f64 = 50.0;
pub const CONTROL_HORIZON: f64 = 15.0;
/// Slices of the optimal pulse on `[0, 15]`, keeping the slice width of `t_f = 0.65N, K = 3N`.
pub const OPTIMAL_SLICES: usize = 69;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Adiabatic,
    Lyapunov,
    Optimal,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Adiabatic, Method::Lyapunov, Method::Optimal];

    pub fn name(self) -> &'static str {
        match self {
            Method::Adiabatic => "adiabatic",
            Method::Lyapunov => "lyapunov",
            Method::Optimal => "optimal",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}' (expected adiabatic, lyapunov or optimal)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepKind {
    Init,
    Thermal,
    Disorder,
    Dephasing,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Init => "init",
            SweepKind::Thermal => "thermal",
            SweepKind::Disorder => "disorder",
            SweepKind::Dephasing => "dephasing",
        }
    }

    /// Swept parameter: `f0`, `T`, `sigma` or `gamma`.
    pub fn parameter(self) -> &'static str {
        match self {
            SweepKind::Init => "f0",
            SweepKind::Thermal => "T",
            SweepKind::Disorder => "sigma",
            SweepKind::Dephasing => "gamma",
        }
    }
}

impl FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [SweepKind::Init, SweepKind::Thermal, SweepKind::Disorder, SweepKind::Dephasing]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sweep kind '{s}' (expected init, thermal, disorder or dephasing)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub method: Method,
    pub values: Vec<f64>,
    pub mean_f: Vec<f64>,
    /// Present for disorder sweeps only.
    pub std_f: Option<Vec<f64>>,
    /// `|c₀|²` for init sweeps, `w₁` for thermal sweeps.
    pub bound: Option<Vec<f64>>,
    pub n_samples: usize,
    pub seed: u64,
}

impl SweepResult {
    /// CSV `param,mean_F,std_F,bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,mean_F,std_F,bound\n");
        for i in 0..self.values.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                g12(self.values[i]),
                g12(self.mean_f[i]),
                g12_opt(self.std_f.as_ref().map(|s| s[i])),
                g12_opt(self.bound.as_ref().map(|b| b[i]))
            );
        }
        out
    }
}

/// A pulse produced by one of the three methods, with the sector it was designed in.
#[derive(Clone, Debug)]
pub struct MethodPulse {
    pub method: Method,
    pub spec: ChainSpec,
    pub sector: TargetSector,
    pub schedule: PulseSchedule,
    /// Evolution time `t_f`.
    pub horizon: f64,
    /// Fidelity of the design run from `|+…+⟩`.
    pub nominal_fidelity: f64,
}

impl MethodPulse {
    /// Wraps an existing pulse; the sector is the one holding `|+…+⟩`.
    pub fn from_schedule(spec: &ChainSpec, method: Method, schedule: PulseSchedule, horizon: f64) -> Result<Self> {
        let sector = ControlProblem::plus_sector(spec)?;
        let mut p = MethodPulse { method, spec: *spec, sector, schedule, horizon, nominal_fidelity: 0.0 };
        p.nominal_fidelity = p.block_fidelity(&p.sector.initial_product)?;
        Ok(p)
    }

    fn block_system(&self) -> Result<ControlSystem> {
        ControlSystem::for_sector(&self.spec, &self.sector)
    }

    fn block_target(&self) -> Result<QuantumState> {
        symmetry::to_block(&self.sector.target, &self.sector.decomposition, self.sector.block)
    }

    /// Final GHZ fidelity for a full-space initial state confined to the sector block.
    pub fn block_fidelity(&self, initial: &QuantumState) -> Result<f64> {
        let psi = symmetry::to_block(initial, &self.sector.decomposition, self.sector.block)?;
        let out = propagation::propagate_state(&self.block_system()?, &psi, &self.schedule, 0.0, self.horizon)?;
        spin::fidelity(&out, &self.block_target()?)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DesignOptions {
    pub seed: u64,
    pub starts: usize,
    pub optimal_t_f: f64,
    pub optimal_slices: usize,
    pub kappa: Option<f64>,
    pub lyapunov_dt: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            seed: 0,
            starts: optimizer::DEFAULT_STARTS,
            optimal_t_f: CONTROL_HORIZON,
            optimal_slices: OPTIMAL_SLICES,
            kappa: None,
            lyapunov_dt: lyapunov::DEFAULT_DT,
        }
    }
}

/// Designs the comparison pulse of `method` for `|+…+⟩ → GHZ`.
pub fn design_pulse(spec: &ChainSpec, method: Method, options: DesignOptions) -> Result<MethodPulse> {
    let sector = ControlProblem::plus_sector(spec)?;
    design_pulse_in(spec, &sector, method, options)
}

/// [`design_pulse`] with a prebuilt sector.
pub fn design_pulse_in(spec: &ChainSpec, sector: &TargetSector, method: Method, options: DesignOptions) -> Result<MethodPulse> {
    let (schedule, horizon) = match method {
        Method::Adiabatic => {
            let f0 = -spec.coupling().signum() * DESIGN_F0;
            (PulseSchedule::exponential(f0, ADIABATIC_MU)?, ADIABATIC_HORIZON)
        }
        Method::Optimal => {
            let p = ControlProblem::ghz_transfer(spec, sector, options.optimal_t_f, options.optimal_slices)?
                .with_starts(options.starts, options.seed);
            (optimizer::optimize(&p)?.pulse, options.optimal_t_f)
        }
        Method::Lyapunov => {
            let system = ControlSystem::for_sector(spec, sector)?;
            let psi0 = symmetry::to_block(&sector.initial_product, &sector.decomposition, sector.block)?;
            let target = symmetry::to_block(&sector.target, &sector.decomposition, sector.block)?;
            let kappa = options.kappa.unwrap_or_else(|| lyapunov::default_kappa(spec.n_sites()));
            let mut o = LyapunovOptions::new(kappa, CONTROL_HORIZON);
            o.dt = options.lyapunov_dt;
            (lyapunov::run_closed_loop(&system, &psi0, &target, o)?.pulse()?, CONTROL_HORIZON)
        }
    };
    let mut p = MethodPulse { method, spec: *spec, sector: sector.clone(), schedule, horizon, nominal_fidelity: 0.0 };
    p.nominal_fidelity = p.block_fidelity(&sector.initial_product)?;
    Ok(p)
}

/// Fidelity reached from the ground state at `f0` and the bound `|⟨ψ₀⁺|ψ₀^(f0)⟩|²`.
pub fn imperfect_init_fidelity(pulse: &MethodPulse, f0: f64) -> Result<(f64, f64)> {
    let g = ground_state_in_sector(pulse, f0)?;
    let c0 = linalg::inner(pulse.sector.initial_product.vector().expect("pure"), g.vector().expect("pure")).norm_sqr();
    Ok((pulse.block_fidelity(&g)?, c0))
}

fn ground_state_in_sector(pulse: &MethodPulse, f0: f64) -> Result<QuantumState> {
    let r = spin::ground_state(&pulse.spec, f0)?;
    r.state.ok_or_else(|| Error::Degenerate(format!("ground state at f0 = {f0} is degenerate")))
}

pub fn init_sweep(pulse: &MethodPulse, f0_values: &[f64]) -> Result<SweepResult> {
    let rows: Vec<(f64, f64)> = f0_values.par_iter().map(|&f0| imperfect_init_fidelity(pulse, f0)).collect::<Result<_>>()?;
    Ok(SweepResult {
        kind: SweepKind::Init,
        method: pulse.method,
        values: f0_values.to_vec(),
        mean_f: rows.iter().map(|r| r.0).collect(),
        std_f: None,
        bound: Some(rows.iter().map(|r| r.1).collect()),
        n_samples: 1,
        seed: 0,
    })
}

/// Thermal initial states `e^{−H(f0)/T}/Z` evolved unitarily under the pulse;
/// the bound column is the ground-state weight `w₁`.
pub fn thermal_sweep(pulse: &MethodPulse, f0: f64, temperatures: &[f64]) -> Result<SweepResult> {
    let system = ControlSystem::chain(&pulse.spec);
    let u = propagation::total_propagator(&system, &pulse.schedule, 0.0, pulse.horizon)?;
    let e = spin::hamiltonian(&pulse.spec, f0).eigh()?;
    let target = &pulse.sector.target;
    let rows: Vec<(f64, f64)> = temperatures
        .par_iter()
        .map(|&t| {
            let w = spin::thermal_weights(&e.values, t)?;
            let rho = spin::thermal_state_from_eigen(&e, t, Space::Full)?;
            let out = propagation::conjugate(&u, &rho)?;
            Ok((spin::fidelity(&out, target)?, w[0]))
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        kind: SweepKind::Thermal,
        method: pulse.method,
        values: temperatures.to_vec(),
        mean_f: rows.iter().map(|r| r.0).collect(),
        std_f: None,
        bound: Some(rows.iter().map(|r| r.1).collect()),
        n_samples: 1,
        seed: 0,
    })
}

/// Bond perturbations `δₙ ∈ [−σ, σ]` for sample `sample` of sweep point `index`.
pub fn disorder_instance(n_sites: usize, sigma: f64, seed: u64, index: usize, sample: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 32) | sample as u64);
    (0..n_sites - 1).map(|_| sigma * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// Mean and sample standard deviation of the final fidelity over random
/// couplings `J(1 + δₙ)`, evolved in the full space from `|+…+⟩`.
pub fn disorder_sweep(pulse: &MethodPulse, sigmas: &[f64], n_samples: usize, seed: u64) -> Result<SweepResult> {
    if n_samples == 0 {
        return Err(Error::invalid("disorder sweep needs at least one sample"));
    }
    if sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid("disorder strengths must be finite and non-negative"));
    }
    let n = pulse.spec.n_sites();
    let jobs: Vec<(usize, usize)> = (0..sigmas.len()).flat_map(|i| (0..n_samples).map(move |s| (i, s))).collect();
    let fids: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let bonds: Vec<f64> = disorder_instance(n, sigmas[i], seed, i, s).iter().map(|d| 1.0 + d).collect();
            let system = ControlSystem::chain_with_bonds(n, pulse.spec.coupling(), &bonds)?;
            let out = propagation::propagate_state(&system, &pulse.sector.initial_product, &pulse.schedule, 0.0, pulse.horizon)?;
            spin::fidelity(&out, &pulse.sector.target)
        })
        .collect::<Result<_>>()?;
    let mut mean_f = Vec::new();
    let mut std_f = Vec::new();
    for chunk in fids.chunks(n_samples) {
        let m = chunk.iter().sum::<f64>() / n_samples as f64;
        let var = if n_samples > 1 {
            chunk.iter().map(|f| (f - m).powi(2)).sum::<f64>() / (n_samples - 1) as f64
        } else {
            0.0
        };
        mean_f.push(m);
        std_f.push(var.sqrt());
    }
    Ok(SweepResult {
        kind: SweepKind::Disorder,
        method: pulse.method,
        values: sigmas.to_vec(),
        mean_f,
        std_f: Some(std_f),
        bound: None,
        n_samples,
        seed,
    })
}

/// Final fidelity under single-spin dephasing of rate `γ`, from `|+…+⟩`.
pub fn dephasing_sweep(pulse: &MethodPulse, gammas: &[f64], options: LindbladOptions) -> Result<SweepResult> {
    let system = ControlSystem::chain(&pulse.spec);
    let rho0 = pulse.sector.initial_product.to_density();
    let target = &pulse.sector.target;
    let fids: Vec<f64> = gammas
        .par_iter()
        .map(|&g| {
            let opts = EvolveOptions::new(target).sample_dt(pulse.horizon.max(1e-9));
            Ok(evolve_lindblad(&system, &rho0, &pulse.schedule, pulse.horizon, g, options, opts)?.final_fidelity())
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        kind: SweepKind::Dephasing,
        method: pulse.method,
        values: gammas.to_vec(),
        mean_f: fids,
        std_f: None,
        bound: None,
        n_samples: 1,
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> ChainSpec {
        ChainSpec::new(n, -1.0).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
        assert_eq!("disorder".parse::<SweepKind>().unwrap().parameter(), "sigma");
    }

    #[test]
    fn disorder_instances_are_bounded_and_reproducible() {
        let a = disorder_instance(6, 0.1, 42, 3, 7);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|d| d.abs() <= 0.1));
        assert_eq!(a, disorder_instance(6, 0.1, 42, 3, 7));
        assert_ne!(a, disorder_instance(6, 0.1, 42, 3, 8));
    }

    #[test]
    fn zero_disorder_reproduces_nominal_fidelity() {
        let p = design_pulse(&spec(4), Method::Adiabatic, DesignOptions::default()).unwrap();
        let r = disorder_sweep(&p, &[0.0, 0.05], 8, 1).unwrap();
        assert!((r.mean_f[0] - p.nominal_fidelity).abs() < 1e-10);
        assert!(r.std_f.as_ref().unwrap()[0] < 1e-14);
        assert_eq!(r, disorder_sweep(&p, &[0.0, 0.05], 8, 1).unwrap());
    }

    #[test]
    fn thermal_bound_and_zero_temperature_limit() {
        let p = design_pulse(&spec(4), Method::Optimal, DesignOptions { optimal_t_f: 2.6, optimal_slices: 12, ..Default::default() })
            .unwrap();
        let r = thermal_sweep(&p, DESIGN_F0, &[1e-3, 0.5, 2.0, 10.0]).unwrap();
        let w = r.bound.as_ref().unwrap();
        for (f, w) in r.mean_f.iter().zip(w) {
            assert!(*f <= w + 1e-9);
        }
        let g = spin::ground_state(&p.spec, DESIGN_F0).unwrap().state.unwrap();
        assert!((r.mean_f[0] - p.block_fidelity(&g).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn init_bound_holds() {
        let p = design_pulse(&spec(3), Method::Lyapunov, DesignOptions::default()).unwrap();
        let r = init_sweep(&p, &[2.0, 10.0, 1e3]).unwrap();
        let b = r.bound.as_ref().unwrap();
        for (f, b) in r.mean_f.iter().zip(b) {
            assert!(*f <= b + 1e-9);
        }
        assert!(b[2] >= 1.0 - 1e-4);
    }

    #[test]
    fn dephasing_at_zero_rate_is_noiseless() {
        let p = design_pulse(&spec(3), Method::Lyapunov, DesignOptions::default()).unwrap();
        let r = dephasing_sweep(&p, &[0.0, 0.05], LindbladOptions::default()).unwrap();
        assert!((r.mean_f[0] - p.nominal_fidelity).abs() < 1e-6);
        assert!(r.mean_f[1] < r.mean_f[0]);
        assert!(r.to_csv().starts_with("param,mean_F,std_F,bound\n0,"));
    }
}
