//! Closed-loop Lyapunov control with the distance `V = ½‖ρ − ρ_d‖²`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::propagation::{ControlSystem, EigenspaceSet, EvolveOptions, PulseSchedule, Recorder, Trajectory, DEFAULT_SAMPLE_DT};
use crate::spin::{Operator, QuantumState};

pub const DEFAULT_DT: f64 = 0.01;
/// Largest per-step rise of `V` tolerated before aborting.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-8;
const IMAGINARY_RESIDUE: f64 = 1e-12;

/// Gain used when none is given: 1 up to three sites, 5 beyond.
pub fn default_kappa(n_sites: usize) -> f64 {
    if n_sites <= 3 {
        1.0
    } else {
        5.0
    }
}

/// `Tr([iA, ρ_d] ρ)` for pure or mixed arguments.
fn commutator_trace(rho: &QuantumState, rho_d: &QuantumState, a: &Array2<C64>) -> Result<f64> {
    let value = match (rho.vector(), rho_d.vector()) {
        (Some(psi), Some(phi)) => {
            // i(⟨ψ|A|φ⟩⟨φ|ψ⟩ − c.c.) = −2 Im ⟨ψ|A|φ⟩⟨φ|ψ⟩
            let x = linalg::inner(psi, &a.dot(phi)) * linalg::inner(phi, psi);
            C64::new(-2.0 * x.im, 0.0)
        }
        _ => {
            let r = rho.density_matrix();
            let rd = rho_d.density_matrix();
            let c = linalg::commutator(a, &rd).mapv(|z| z * linalg::I);
            let mut tr = C64::new(0.0, 0.0);
            for i in 0..r.nrows() {
                for k in 0..r.nrows() {
                    tr += c[[i, k]] * r[[k, i]];
                }
            }
            let scale = linalg::max_abs(&c).max(1.0) * r.nrows() as f64;
            if tr.im.abs() > IMAGINARY_RESIDUE * scale {
                return Err(Error::invalid(format!("feedback trace has imaginary part {:.3e}; inputs are not Hermitian", tr.im)));
            }
            tr
        }
    };
    Ok(value.re)
}

/// `gain · Tr([iH₁, ρ_d] ρ)`.
pub fn feedback_amplitude(rho: &QuantumState, rho_d: &QuantumState, h1: &Operator, gain: f64) -> Result<f64> {
    if rho.dim() != h1.dim() || rho_d.dim() != h1.dim() {
        return Err(Error::DimensionMismatch { expected: h1.dim(), found: rho.dim().max(rho_d.dim()) });
    }
    Ok(gain * commutator_trace(rho, rho_d, h1.matrix())?)
}

/// `½‖ρ − ρ_d‖²_F`; equals `1 − F` for pure arguments.
pub fn lyapunov_distance(rho: &QuantumState, rho_d: &QuantumState) -> Result<f64> {
    if rho.dim() != rho_d.dim() {
        return Err(Error::DimensionMismatch { expected: rho_d.dim(), found: rho.dim() });
    }
    Ok(match (rho.vector(), rho_d.vector()) {
        (Some(psi), Some(phi)) => 1.0 - linalg::inner(phi, psi).norm_sqr(),
        _ => 0.5 * linalg::frobenius_sq(&(rho.density_matrix() - rho_d.density_matrix())),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct LyapunovOptions {
    pub kappa: f64,
    pub t_f: f64,
    pub dt: f64,
    pub sample_dt: f64,
}

impl LyapunovOptions {
    pub fn new(kappa: f64, t_f: f64) -> Self {
        LyapunovOptions { kappa, t_f, dt: DEFAULT_DT, sample_dt: DEFAULT_SAMPLE_DT }
    }
}

#[derive(Clone, Debug)]
pub struct LyapunovRun {
    pub kappa: f64,
    pub dt: f64,
    pub trajectory: Trajectory,
    /// `V` before every step and after the last one.
    pub v_steps: Vec<f64>,
    /// Field held during each step.
    pub f_steps: Vec<f64>,
    pub final_v: f64,
    pub final_f: f64,
}

impl LyapunovRun {
    /// Recorded feedback field as an open-loop pulse.
    pub fn pulse(&self) -> Result<PulseSchedule> {
        PulseSchedule::piecewise(self.f_steps.clone(), self.dt)
    }
}

/// Sample-and-hold feedback `f = κ·J·Tr([iH₁, ρ_d] ρ)`: the field is
/// computed from the current state and held for one exact step of `dt`.
pub fn run_closed_loop(
    system: &ControlSystem,
    rho0: &QuantumState,
    rho_d: &QuantumState,
    options: LyapunovOptions,
) -> Result<LyapunovRun> {
    let LyapunovOptions { kappa, t_f, dt, sample_dt } = options;
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    if !(dt > 0.0) || !(t_f >= 0.0) || !t_f.is_finite() {
        return Err(Error::invalid(format!("need dt > 0 and finite t_f >= 0 (dt = {dt}, t_f = {t_f})")));
    }
    if rho0.dim() != system.dim() || rho_d.dim() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: rho0.dim().max(rho_d.dim()) });
    }
    if rho0.space() != rho_d.space() {
        return Err(Error::invalid("initial and target states live in different spaces"));
    }
    let target = match rho_d.vector() {
        Some(_) => rho_d.clone(),
        None => return Err(Error::invalid("target must be a pure state")),
    };
    let gain = kappa * system.coupling();
    let h1 = system.control();
    let spaces = EigenspaceSet::of_drift(system)?;
    let opts = EvolveOptions::new(&target).sample_dt(sample_dt).eigenspaces(&spaces);
    let mut rec = Recorder::new(opts);
    let steps = (t_f / dt - 1e-9).ceil().max(0.0) as usize;
    let every = ((sample_dt / dt).round() as usize).max(1);
    let pure = rho0.is_pure();
    let mut x = match rho0.vector() {
        Some(v) => v.clone().insert_axis(ndarray::Axis(1)),
        None => rho0.density_matrix(),
    };
    let mut state = rho0.clone();
    let mut v = lyapunov_distance(&state, rho_d)?;
    let mut v_steps = vec![v];
    let mut f_steps = Vec::with_capacity(steps);
    let mut v_samples = Vec::new();
    for k in 0..steps {
        let f = feedback_amplitude(&state, rho_d, &h1, gain)?;
        if k % every == 0 {
            rec.record(k as f64 * dt, f, &state)?;
            v_samples.push(v);
        }
        system.propagate(f, dt, &mut x)?;
        if !pure {
            x = linalg::dagger(&x);
            system.propagate(f, dt, &mut x)?;
            linalg::symmetrize(&mut x);
        }
        state = if pure {
            QuantumState::normalized(x.column(0).to_owned(), rho0.space())?
        } else {
            QuantumState::density(x.clone(), rho0.space()).map_err(|_| Error::NormDrift { drift: f64::NAN, time: (k + 1) as f64 * dt })?
        };
        let v_next = lyapunov_distance(&state, rho_d)?;
        if v_next > v + MONOTONICITY_TOLERANCE {
            return Err(Error::LyapunovIncrease { step: k, increase: v_next - v, dt });
        }
        v = v_next;
        v_steps.push(v);
        f_steps.push(f);
    }
    let f_end = feedback_amplitude(&state, rho_d, &h1, gain)?;
    rec.record(steps as f64 * dt, f_end, &state)?;
    v_samples.push(v);
    let final_f = crate::spin::fidelity(&state, &target)?;
    Ok(LyapunovRun {
        kappa,
        dt,
        trajectory: rec.finish(state, Some(v_samples)),
        v_steps,
        f_steps,
        final_v: v,
        final_f,
    })
}

/// Conditions under which the LaSalle set reduces to the target.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceDiagnostics {
    /// Drift levels are non-degenerate and all transition frequencies distinct.
    pub strongly_regular: bool,
    /// Smallest separation between two transition frequencies.
    pub min_frequency_separation: f64,
    /// Every pair of drift levels is coupled directly by the control.
    pub fully_connected: bool,
    /// The coupling graph of drift levels is connected.
    pub connected: bool,
    pub levels: Vec<f64>,
}

pub fn diagnose(system: &ControlSystem) -> Result<ConvergenceDiagnostics> {
    let e = system.hamiltonian(0.0).eigh()?;
    let n = e.values.len();
    let mut freqs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            freqs.push(e.values[j] - e.values[i]);
        }
    }
    freqs.sort_by(f64::total_cmp);
    let min_level = e.values.as_slice().expect("contiguous").windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let min_sep = freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let tol = 1e-8 * e.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let coupling = linalg::dagger(&e.vectors).dot(system.control().matrix()).dot(&e.vectors);
    let linked = |i: usize, j: usize| coupling[[i, j]].norm() > 1e-10;
    let fully_connected = (0..n).all(|i| (0..n).all(|j| i == j || linked(i, j)));
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for (j, s) in seen.iter_mut().enumerate() {
            if !*s && linked(i, j) {
                *s = true;
                stack.push(j);
            }
        }
    }
    Ok(ConvergenceDiagnostics {
        strongly_regular: min_level > tol && min_sep > tol,
        min_frequency_separation: min_sep.min(min_level),
        fully_connected,
        connected: seen.iter().all(|s| *s),
        levels: e.values.to_vec(),
    })
}
