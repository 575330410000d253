//! Piecewise-constant pulse optimization with exact gradients.

pub mod bfgs;

use std::fmt::Write as _;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::g12;
use crate::linalg;
use crate::propagation::{ControlSystem, PulseSchedule};
use crate::spin::{ChainSpec, QuantumState, Sign};
use crate::symmetry::{self, TargetSector};
use bfgs::{BfgsOptions, Termination};

pub const DEFAULT_MAX_ITERS: usize = 2000;
pub const DEFAULT_GRAD_TOL: f64 = 1e-8;
pub const DEFAULT_STARTS: usize = 2;
/// Soft sanity bound on `|f_k|`, in units of `|J|`.
pub const AMPLITUDE_BOUND: f64 = 1e3;

/// Transfer `ψ0 → ψd` with `K` equal slices on `[0, t_f]`.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    coupling: f64,
    h0: Array2<f64>,
    h1: Array2<f64>,
    psi0: Array1<C64>,
    psid: Array1<C64>,
    pub t_f: f64,
    pub k: usize,
    pub starts: Vec<Vec<f64>>,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Stop a start, and skip the remaining ones, once this fidelity is reached.
    pub fidelity_target: Option<f64>,
}

/// The all-ones start followed by `n − 1` seeded uniform `[0, 1]` starts.
pub fn default_starts(k: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(n);
    if n > 0 {
        starts.push(vec![1.0; k]);
    }
    for i in 1..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        starts.push((0..k).map(|_| rng.random::<f64>()).collect());
    }
    starts
}

impl ControlProblem {
    pub fn new(system: &ControlSystem, psi0: &QuantumState, psid: &QuantumState, t_f: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("need at least one slice"));
        }
        if !(t_f > 0.0) || !t_f.is_finite() {
            return Err(Error::invalid(format!("t_f must be positive, got {t_f}")));
        }
        let (Some(a), Some(b)) = (psi0.vector(), psid.vector()) else {
            return Err(Error::invalid("initial and target states must be pure"));
        };
        if a.len() != system.dim() || b.len() != system.dim() {
            return Err(Error::DimensionMismatch { expected: system.dim(), found: a.len().max(b.len()) });
        }
        let (Some(h0), Some(h1)) = (system.drift().real_part_if_real(), system.control().real_part_if_real()) else {
            return Err(Error::invalid("pulse optimization needs real drift and control matrices"));
        };
        Ok(ControlProblem {
            coupling: system.coupling(),
            h0,
            h1,
            psi0: a.clone(),
            psid: b.clone(),
            t_f,
            k,
            starts: default_starts(k, DEFAULT_STARTS, 0),
            max_iters: DEFAULT_MAX_ITERS,
            grad_tol: DEFAULT_GRAD_TOL,
            fidelity_target: None,
        })
    }

    /// `|+…+⟩ → GHZ` inside the shared block (`k = 1` for `J < 0`, `k = 3` for `J > 0`).
    pub fn ghz_transfer(spec: &ChainSpec, sector: &TargetSector, t_f: f64, k: usize) -> Result<Self> {
        let system = ControlSystem::for_sector(spec, sector)?;
        let psi0 = symmetry::to_block(&sector.initial_product, &sector.decomposition, sector.block)?;
        let psid = symmetry::to_block(&sector.target, &sector.decomposition, sector.block)?;
        Self::new(&system, &psi0, &psid, t_f, k)
    }

    /// Sector whose initial product state is `|+…+⟩`.
    pub fn plus_sector(spec: &ChainSpec) -> Result<TargetSector> {
        let j = Sign::of(spec.coupling()).expect("nonzero coupling");
        TargetSector::build(spec, j.flip())
    }

    pub fn with_starts(mut self, n: usize, seed: u64) -> Self {
        self.starts = default_starts(self.k, n, seed);
        self
    }

    pub fn dim(&self) -> usize {
        self.psi0.len()
    }

    pub fn slice_width(&self) -> f64 {
        self.t_f / self.k as f64
    }

    fn slice_eigen(&self, f: f64) -> Result<(Array1<f64>, Array2<f64>)> {
        let h = (&self.h0 + &(&self.h1 * f)) * self.coupling;
        let e = linalg::eigh_real(&h)?;
        Ok((e.values, e.vectors))
    }

    pub fn fidelity(&self, amplitudes: &[f64]) -> Result<f64> {
        Ok(1.0 - self.objective_and_gradient(amplitudes)?.0)
    }

    /// `1 − F` and its exact gradient.
    pub fn objective_and_gradient(&self, amplitudes: &[f64]) -> Result<(f64, Vec<f64>)> {
        if amplitudes.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, found: amplitudes.len() });
        }
        let dt = self.slice_width();
        let j = self.coupling;
        let slices: Vec<(Array1<f64>, Array2<f64>, Array2<f64>)> = amplitudes
            .par_iter()
            .map(|&f| {
                let (values, v) = self.slice_eigen(f)?;
                let h1_rot = v.t().dot(&self.h1).dot(&v) * j;
                Ok((values, v, h1_rot))
            })
            .collect::<Result<_>>()?;
        let phases: Vec<Array1<C64>> = slices.iter().map(|(l, ..)| l.mapv(|x| C64::from_polar(1.0, -x * dt))).collect();
        let mut psi = self.psi0.clone();
        let mut coeffs = Vec::with_capacity(self.k);
        for ((_, v, _), e) in slices.iter().zip(&phases) {
            let b = rotate_t(v, &psi);
            psi = rotate(v, &(&b * e));
            coeffs.push(b);
        }
        let overlap = linalg::inner(&self.psid, &psi);
        let mut chi = self.psid.clone();
        let mut grad = vec![0.0; self.k];
        for k in (0..self.k).rev() {
            let (l, v, h1_rot) = &slices[k];
            let a = rotate_t(v, &chi);
            let b = &coeffs[k];
            let n = l.len();
            let mut d_overlap = C64::new(0.0, 0.0);
            for p in 0..n {
                let ap = a[p].conj();
                for q in 0..n {
                    let h = h1_rot[[p, q]];
                    if h == 0.0 {
                        continue;
                    }
                    d_overlap += ap * divided_difference(l[p], l[q], dt) * h * b[q];
                }
            }
            grad[k] = -2.0 * (overlap.conj() * d_overlap).re;
            chi = rotate(v, &(&a * &phases[k].mapv(|z| z.conj())));
        }
        Ok(((1.0 - overlap.norm_sqr()).max(0.0), grad))
    }
}

/// `∂/∂λ` kernel of `e^{−iλΔt}`: `−iΔt e^{−i(a+b)Δt/2} sinc((a−b)Δt/2)`.
fn divided_difference(a: f64, b: f64, dt: f64) -> C64 {
    let x = 0.5 * (a - b) * dt;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::from_polar(dt * sinc, -0.5 * (a + b) * dt - std::f64::consts::FRAC_PI_2)
}

fn rotate(v: &Array2<f64>, x: &Array1<C64>) -> Array1<C64> {
    crate::propagation::real_times_complex(v, &x.clone().insert_axis(Axis(1))).column(0).to_owned()
}

fn rotate_t(v: &Array2<f64>, x: &Array1<C64>) -> Array1<C64> {
    let re = v.t().dot(&x.mapv(|z| z.re));
    let im = v.t().dot(&x.mapv(|z| z.im));
    Array1::from_shape_fn(re.len(), |i| C64::new(re[i], im[i]))
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub pulse: PulseSchedule,
    pub fidelity: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub start_index: usize,
    pub converged: bool,
    /// Cost `1 − F` at every start that was run.
    pub start_costs: Vec<f64>,
    /// Slices with `|f_k|` above [`AMPLITUDE_BOUND`]·|J|.
    pub amplitude_violations: usize,
    pub starts_run: usize,
}

impl OptimizationResult {
    /// CSV `k,f_k`.
    pub fn pulse_csv(&self) -> String {
        let mut out = String::from("k,f_k\n");
        for (i, f) in self.pulse.amplitudes().unwrap_or(&[]).iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, g12(*f));
        }
        out
    }
}

/// Quasi-Newton minimization of `1 − F` from every start; returns the best.
pub fn optimize(problem: &ControlProblem) -> Result<OptimizationResult> {
    if problem.starts.is_empty() {
        return Err(Error::invalid("no starting pulses"));
    }
    let options = BfgsOptions {
        max_iters: problem.max_iters,
        grad_tol: problem.grad_tol,
        stop_below: problem.fidelity_target.map(|t| 1.0 - t),
        ..Default::default()
    };
    let mut best: Option<(usize, bfgs::BfgsResult)> = None;
    let mut start_costs = Vec::new();
    let mut failure = None;
    for (i, start) in problem.starts.iter().enumerate() {
        if start.len() != problem.k {
            return Err(Error::DimensionMismatch { expected: problem.k, found: start.len() });
        }
        let r = bfgs::minimize(
            |x| match problem.objective_and_gradient(x) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    (f64::NAN, vec![0.0; x.len()])
                }
            },
            start,
            options,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        start_costs.push(r.history[0]);
        let reached = r.termination == Termination::TargetReached;
        if best.as_ref().is_none_or(|(_, b)| r.value < b.value) {
            best = Some((i, r));
        }
        if reached {
            break;
        }
    }
    let (start_index, r) = best.expect("at least one start");
    let bound = AMPLITUDE_BOUND * problem.coupling.abs();
    Ok(OptimizationResult {
        amplitude_violations: r.x.iter().filter(|f| f.abs() > bound).count(),
        pulse: PulseSchedule::piecewise(r.x, problem.slice_width())?,
        fidelity: (1.0 - r.value).clamp(0.0, 1.0),
        iterations: r.iterations,
        gradient_norm: r.grad_norm,
        start_index,
        converged: matches!(r.termination, Termination::GradientTolerance | Termination::TargetReached),
        starts_run: start_costs.len(),
        start_costs,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub fidelity_target: f64,
    /// Slices per site.
    pub k_per_site: usize,
    pub starts: usize,
    pub seed: u64,
    /// Grid is `0.05·N·m`; scanning starts at `m_start` and never exceeds `m_max`.
    pub m_start: usize,
    pub m_max: usize,
    pub max_iters: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            fidelity_target: 0.99,
            k_per_site: 3,
            starts: DEFAULT_STARTS,
            seed: 0,
            m_start: 13,
            m_max: 40,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub n_sites: usize,
    /// Smallest grid time reaching the target, if any did.
    pub t_min: Option<f64>,
    pub block_dim: usize,
    pub fidelity_at_t_min: Option<f64>,
}

/// Grid time `0.05·N·m`.
pub fn grid_time(n_sites: usize, m: usize) -> f64 {
    0.05 * n_sites as f64 * m as f64
}

/// For each `N`, the smallest grid `t_f` at which [`optimize`] reaches the target.
pub fn minimum_time_scan(n_values: &[usize], coupling: f64, options: ScanOptions) -> Result<Vec<ScanRow>> {
    n_values.iter().map(|&n| scan_one(n, coupling, options)).collect()
}

fn scan_one(n: usize, coupling: f64, options: ScanOptions) -> Result<ScanRow> {
    let spec = ChainSpec::new(n, coupling)?;
    let sector = ControlProblem::plus_sector(&spec)?;
    let k = options.k_per_site * n;
    let attempt = |m: usize| -> Result<f64> {
        let mut p = ControlProblem::ghz_transfer(&spec, &sector, grid_time(n, m), k)?.with_starts(options.starts, options.seed);
        p.fidelity_target = Some(options.fidelity_target);
        p.max_iters = options.max_iters;
        Ok(optimize(&p)?.fidelity)
    };
    let reached = |f: f64| f >= options.fidelity_target;
    let mut m = options.m_start.max(1);
    let mut f = attempt(m)?;
    let mut best = None;
    if reached(f) {
        best = Some((m, f));
        while m > 1 {
            let g = attempt(m - 1)?;
            if !reached(g) {
                break;
            }
            m -= 1;
            best = Some((m, g));
        }
    } else {
        while m < options.m_max {
            m += 1;
            f = attempt(m)?;
            if reached(f) {
                best = Some((m, f));
                break;
            }
        }
    }
    Ok(ScanRow {
        n_sites: n,
        t_min: best.map(|(m, _)| grid_time(n, m)),
        block_dim: sector.block_dim(),
        fidelity_at_t_min: best.map(|(_, f)| f),
    })
}

/// CSV `N,t_min,block_dim`.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("N,t_min,block_dim\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n_sites, crate::format::g12_opt(r.t_min), r.block_dim);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{evolve_schrodinger, EvolveOptions};
    use crate::spin::{Operator, Space};
    use ndarray::array;

    fn problem(n: usize, t_f: f64, k: usize) -> ControlProblem {
        let spec = ChainSpec::new(n, -1.0).unwrap();
        let sector = ControlProblem::plus_sector(&spec).unwrap();
        ControlProblem::ghz_transfer(&spec, &sector, t_f, k).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = problem(4, 2.6, 12);
        let amps: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin() + 0.3).collect();
        let (_, g) = p.objective_and_gradient(&amps).unwrap();
        for k in 0..12 {
            let mut a = amps.clone();
            a[k] += 1e-6;
            let up = p.objective_and_gradient(&a).unwrap().0;
            a[k] -= 2e-6;
            let down = p.objective_and_gradient(&a).unwrap().0;
            let fd = (up - down) / 2e-6;
            assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-3), "k={k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn commuting_phase_only_case_has_zero_gradient() {
        let z = Operator::from_real(array![[-2.0, 0.0], [0.0, 2.0]]).unwrap();
        let sys = ControlSystem::dense(&z, &z, -1.0, Space::Block(0)).unwrap();
        let up = QuantumState::pure(array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)], Space::Block(0)).unwrap();
        let p = ControlProblem::new(&sys, &up, &up, 1.0, 1).unwrap();
        let (cost, g) = p.objective_and_gradient(&[0.7]).unwrap();
        assert!(cost.abs() < 1e-14 && g[0].abs() < 1e-13, "{cost} {g:?}");
    }

    #[test]
    fn block_fidelity_matches_full_space() {
        let spec = ChainSpec::new(4, -1.0).unwrap();
        let sector = ControlProblem::plus_sector(&spec).unwrap();
        let p = ControlProblem::ghz_transfer(&spec, &sector, 2.0, 6).unwrap();
        let amps = [0.4, 1.3, -0.2, 0.9, 2.0, 0.1];
        let f_block = p.fidelity(&amps).unwrap();
        let full = ControlSystem::chain(&spec);
        let sched = PulseSchedule::piecewise(amps.to_vec(), 2.0 / 6.0).unwrap();
        let traj = evolve_schrodinger(&full, &sector.initial_product, &sched, 2.0, EvolveOptions::new(&sector.target)).unwrap();
        assert!((f_block - traj.final_fidelity()).abs() < 1e-10);
    }

    #[test]
    fn two_site_transfer_is_near_perfect() {
        let p = problem(2, 5.0, 6);
        let r = optimize(&p).unwrap();
        assert!(r.fidelity >= 0.9999, "{}", r.fidelity);
        assert!(r.start_costs.iter().all(|c| 1.0 - r.fidelity <= *c + 1e-15));
        assert_eq!(r.pulse.amplitudes().unwrap().len(), 6);
    }

    #[test]
    fn starts_are_seeded() {
        let a = default_starts(5, 3, 7);
        assert_eq!(a, default_starts(5, 3, 7));
        assert_ne!(a[1], default_starts(5, 3, 8)[1]);
        assert_eq!(a[0], vec![1.0; 5]);
        assert!(a[1..].iter().flatten().all(|x| (0.0..1.0).contains(x)));
    }
}
