use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::{sample_times, slice_cap, ControlSystem, EvolveOptions, PulseSchedule, Recorder, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spin::{QuantumState, Space};

pub const DEFAULT_LINDBLAD_DT: f64 = 0.005;
const TRACE_LIMIT: f64 = 1e-8;
const NEGATIVITY_LIMIT: f64 = -1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LindbladScheme {
    /// `D(h/2) U(h) D(h/2)` with exact unitary and dephasing factors.
    #[default]
    Strang,
    /// Classical fourth-order Runge-Kutta on the master equation.
    Rk4,
}

#[derive(Clone, Copy, Debug)]
pub struct LindbladOptions {
    pub dt: f64,
    pub scheme: LindbladScheme,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        LindbladOptions { dt: DEFAULT_LINDBLAD_DT, scheme: LindbladScheme::Strang }
    }
}

/// `ρ_ij ← e^{−2γ·popcount(i⊕j)·τ} ρ_ij`.
fn dephase(rho: &mut Array2<C64>, gamma: f64, tau: f64) {
    if gamma == 0.0 {
        return;
    }
    let n = rho.nrows();
    let max_bits = usize::BITS - (n.max(2) - 1).leading_zeros();
    let factors: Vec<f64> = (0..=max_bits).map(|b| (-2.0 * gamma * b as f64 * tau).exp()).collect();
    for ((i, j), z) in rho.indexed_iter_mut() {
        *z *= factors[(i ^ j).count_ones() as usize];
    }
}

/// `−i[H,ρ] − 2γ·popcount(i⊕j)·ρ_ij` for Hermitian `ρ`.
fn generator(system: &ControlSystem, f: f64, gamma: f64, rho: &Array2<C64>) -> Array2<C64> {
    let hr = system.apply(f, rho);
    let comm = &hr - &linalg::dagger(&hr);
    let mut out = comm.mapv(|z| C64::new(z.im, -z.re));
    if gamma != 0.0 {
        for ((i, j), z) in out.indexed_iter_mut() {
            *z -= rho[[i, j]] * (2.0 * gamma * (i ^ j).count_ones() as f64);
        }
    }
    out
}

/// `ρ ← e^{−iHh} ρ e^{iHh}`.
fn unitary_step(system: &ControlSystem, f: f64, h: f64, rho: &mut Array2<C64>) -> Result<()> {
    system.propagate(f, h, rho)?;
    *rho = linalg::dagger(rho);
    system.propagate(f, h, rho)?;
    linalg::symmetrize(rho);
    Ok(())
}

fn rk4_step(system: &ControlSystem, f: f64, h: f64, gamma: f64, rho: &mut Array2<C64>) {
    let half = C64::new(0.5 * h, 0.0);
    let k1 = generator(system, f, gamma, rho);
    let k2 = generator(system, f, gamma, &(&*rho + &(&k1 * half)));
    let k3 = generator(system, f, gamma, &(&*rho + &(&k2 * half)));
    let k4 = generator(system, f, gamma, &(&*rho + &(&k3 * C64::new(h, 0.0))));
    let w = C64::new(h / 6.0, 0.0);
    *rho += &((&k1 + &(&k2 * C64::new(2.0, 0.0)) + &(&k3 * C64::new(2.0, 0.0)) + &k4) * w);
}

/// Full-chain master equation with single-spin dephasing
/// `L(ρ) = −γ Σₙ (ρ − ZₙρZₙ)`.
pub fn evolve_lindblad(
    system: &ControlSystem,
    rho0: &QuantumState,
    schedule: &PulseSchedule,
    horizon: f64,
    gamma: f64,
    lindblad: LindbladOptions,
    opts: EvolveOptions,
) -> Result<Trajectory> {
    if system.n_sites().is_none() || system.space() != Space::Full {
        return Err(Error::invalid("dephasing breaks block invariance; evolve_lindblad needs a full-chain system"));
    }
    if rho0.dim() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: rho0.dim() });
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("dephasing rate must be finite and non-negative, got {gamma}")));
    }
    if !(lindblad.dt > 0.0) || !lindblad.dt.is_finite() {
        return Err(Error::invalid(format!("Lindblad step must be positive, got {}", lindblad.dt)));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::invalid(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    opts.validate(system.dim())?;
    let dt = lindblad.dt;
    let mut rho = rho0.density_matrix();
    let mut rec = Recorder::new(opts);
    let mut state = QuantumState::density_unchecked(rho.clone(), Space::Full);
    let mut t_prev = 0.0;
    for t in sample_times(horizon, opts.sample_dt) {
        if t > t_prev {
            for (w, f) in schedule.slices_capped(t_prev, t, slice_cap(system)) {
                let steps = (w / dt - 1e-9).ceil().max(1.0) as usize;
                let h = w / steps as f64;
                for _ in 0..steps {
                    match lindblad.scheme {
                        LindbladScheme::Strang => {
                            dephase(&mut rho, gamma, 0.5 * h);
                            unitary_step(system, f, h, &mut rho)?;
                            dephase(&mut rho, gamma, 0.5 * h);
                        }
                        LindbladScheme::Rk4 => {
                            rk4_step(system, f, h, gamma, &mut rho);
                            linalg::symmetrize(&mut rho);
                        }
                    }
                }
            }
            let trace: f64 = super::diag_re(&rho).sum();
            if (trace - 1.0).abs() > TRACE_LIMIT || !trace.is_finite() {
                return Err(Error::TraceDrift { trace, time: t });
            }
            let min = linalg::eigvalsh(&rho)?[0];
            if min < NEGATIVITY_LIMIT {
                return Err(Error::NegativeEigenvalue { value: min, time: t, dt });
            }
            state = QuantumState::density_unchecked(rho.clone(), Space::Full);
        }
        rec.record(t, schedule.value(t), &state)?;
        t_prev = t;
    }
    Ok(rec.finish(state, None))
}
