//! Time evolution: piecewise-exact Schrödinger propagation over the full
//! chain or a single block, and a dephasing Lindblad integrator.

mod lindblad;
mod schedule;
mod system;
mod trajectory;

use std::ops::Range;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spin::{self, Operator, QuantumState};

pub use lindblad::{evolve_lindblad, LindbladOptions, LindbladScheme, DEFAULT_LINDBLAD_DT};
pub use schedule::{PulseSchedule, EXP_CUTOFF, MAX_FIELD_STEP, MAX_SLICE};
pub(crate) use system::real_times_complex;
pub use system::{step_propagator, ControlSystem};
pub use trajectory::Trajectory;

pub const DEFAULT_SAMPLE_DT: f64 = 0.1;
/// Norm (or trace) drift that aborts an evolution.
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;
/// Eigenvalues closer than this share an eigenspace.
pub const EIGENSPACE_TOLERANCE: f64 = 1e-8;

/// Eigenspaces of a Hermitian operator, ascending by eigenvalue.
#[derive(Clone, Debug)]
pub struct EigenspaceSet {
    vectors: Array2<C64>,
    groups: Vec<Range<usize>>,
    energies: Vec<f64>,
}

impl EigenspaceSet {
    pub fn new(op: &Operator) -> Result<Self> {
        let e = op.eigh()?;
        let mut groups = Vec::new();
        let mut energies = Vec::new();
        let mut start = 0;
        for i in 1..=e.values.len() {
            if i == e.values.len() || e.values[i] - e.values[i - 1] > EIGENSPACE_TOLERANCE {
                energies.push(e.values.slice(ndarray::s![start..i]).sum() / (i - start) as f64);
                groups.push(start..i);
                start = i;
            }
        }
        Ok(EigenspaceSet { vectors: e.vectors, groups, energies })
    }

    /// Eigenspaces of the drift `J·H0`, so that the first one is the zero-field ground level.
    pub fn of_drift(system: &ControlSystem) -> Result<Self> {
        Self::new(&system.hamiltonian(0.0))
    }

    /// Same eigenspaces embedded through `basis` (columns = block basis in a larger space).
    pub fn lifted(&self, basis: &Array2<C64>) -> Result<Self> {
        if basis.ncols() != self.vectors.nrows() {
            return Err(Error::DimensionMismatch { expected: self.vectors.nrows(), found: basis.ncols() });
        }
        Ok(EigenspaceSet { vectors: basis.dot(&self.vectors), groups: self.groups.clone(), energies: self.energies.clone() })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Dimension of the space the eigenvectors live in.
    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dims(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    /// Eigenvectors, column `j` belonging to the eigenspace whose range contains `j`.
    pub fn vectors(&self) -> &Array2<C64> {
        &self.vectors
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.groups
    }

    fn weights_from_diag(&self, diag: impl Fn(usize) -> f64) -> Vec<f64> {
        self.groups.iter().map(|g| g.clone().map(&diag).sum::<f64>().max(0.0)).collect()
    }
}

/// Squared projections of `state` onto every eigenspace, ascending eigenvalue order.
pub fn eigenspace_populations(state: &QuantumState, set: &EigenspaceSet) -> Result<Vec<f64>> {
    if state.dim() != set.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: set.ambient_dim(), found: state.dim() });
    }
    let vh = linalg::dagger(&set.vectors);
    Ok(match state.vector() {
        Some(v) => {
            let c = vh.dot(v);
            set.weights_from_diag(|j| c[j].norm_sqr())
        }
        None => {
            let p = vh.dot(&state.density_matrix()).dot(&set.vectors);
            set.weights_from_diag(|j| p[[j, j]].re)
        }
    })
}

/// What to record at each sample.
#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions<'a> {
    pub sample_dt: f64,
    /// Pure state against which fidelity is measured.
    pub target: &'a QuantumState,
    pub eigenspaces: Option<&'a EigenspaceSet>,
    /// Orthonormal columns spanning the subspace the state should stay in.
    pub leakage_basis: Option<&'a Array2<C64>>,
}

impl<'a> EvolveOptions<'a> {
    pub fn new(target: &'a QuantumState) -> Self {
        EvolveOptions { sample_dt: DEFAULT_SAMPLE_DT, target, eigenspaces: None, leakage_basis: None }
    }

    pub fn sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = dt;
        self
    }

    pub fn eigenspaces(mut self, set: &'a EigenspaceSet) -> Self {
        self.eigenspaces = Some(set);
        self
    }

    pub fn leakage_basis(mut self, basis: &'a Array2<C64>) -> Self {
        self.leakage_basis = Some(basis);
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.sample_dt > 0.0) || !self.sample_dt.is_finite() {
            return Err(Error::invalid(format!("sample_dt must be positive, got {}", self.sample_dt)));
        }
        if self.target.dim() != dim || !self.target.is_pure() {
            return Err(Error::invalid("target must be a pure state in the evolution space"));
        }
        if let Some(e) = self.eigenspaces {
            if e.ambient_dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.ambient_dim() });
            }
        }
        if let Some(b) = self.leakage_basis {
            if b.nrows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.nrows() });
            }
        }
        Ok(())
    }
}

/// Sample instants `k·dt` up to `horizon`, plus `horizon` itself.
pub fn sample_times(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt + 1e-9).floor() as usize;
    let mut t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    if horizon - t[n] > 1e-9 * dt {
        t.push(horizon);
    } else {
        t[n] = horizon;
    }
    t
}

pub(crate) struct Recorder<'a> {
    opts: EvolveOptions<'a>,
    traj_times: Vec<f64>,
    field: Vec<f64>,
    fidelity: Vec<f64>,
    leakage: Vec<f64>,
    pops: Vec<f64>,
    n_pop: usize,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(opts: EvolveOptions<'a>) -> Self {
        let n_pop = opts.eigenspaces.map_or(0, |e| e.len());
        Recorder {
            opts,
            traj_times: Vec::new(),
            field: Vec::new(),
            fidelity: Vec::new(),
            leakage: Vec::new(),
            pops: Vec::new(),
            n_pop,
        }
    }

    pub(crate) fn record(&mut self, t: f64, f: f64, state: &QuantumState) -> Result<()> {
        self.traj_times.push(t);
        self.field.push(f);
        self.fidelity.push(spin::fidelity(state, self.opts.target)?);
        self.leakage.push(match self.opts.leakage_basis {
            Some(b) => leakage(state, b),
            None => 0.0,
        });
        if let Some(e) = self.opts.eigenspaces {
            self.pops.extend(eigenspace_populations(state, e)?);
        }
        Ok(())
    }

    pub(crate) fn finish(self, final_state: QuantumState, lyapunov: Option<Vec<f64>>) -> Trajectory {
        let rows = self.traj_times.len();
        Trajectory {
            populations: Array2::from_shape_vec((rows, self.n_pop), self.pops).expect("population rows"),
            times: self.traj_times,
            field: self.field,
            fidelity: self.fidelity,
            leakage: self.leakage,
            lyapunov,
            final_state,
        }
    }
}

/// `1 − ‖P ψ‖²` (or `1 − Tr P ρ`) for `P` the projector on the columns of `basis`.
pub fn leakage(state: &QuantumState, basis: &Array2<C64>) -> f64 {
    let bh = linalg::dagger(basis);
    let kept = match state.vector() {
        Some(v) => bh.dot(v).iter().map(|z| z.norm_sqr()).sum::<f64>(),
        None => {
            let p = bh.dot(&state.density_matrix()).dot(basis);
            p.diag().iter().map(|z| z.re).sum()
        }
    };
    (1.0 - kept).max(0.0)
}

/// Longest analytic slice for coupling `J`.
pub(crate) fn slice_cap(system: &ControlSystem) -> f64 {
    MAX_SLICE / system.coupling().abs().max(1.0)
}

/// Propagates the columns of `x` from `t0` to `t1`; with `two_sided`, `x`
/// is a density matrix and is conjugated as `UρU†`.
pub(crate) fn advance(
    system: &ControlSystem,
    schedule: &PulseSchedule,
    t0: f64,
    t1: f64,
    x: &mut Array2<C64>,
    two_sided: bool,
) -> Result<()> {
    let slices = schedule.slices_capped(t0, t1, slice_cap(system));
    for &(w, f) in &slices {
        system.propagate(f, w, x)?;
    }
    if two_sided {
        *x = linalg::dagger(x);
        for &(w, f) in &slices {
            system.propagate(f, w, x)?;
        }
        linalg::symmetrize(x);
    }
    Ok(())
}

fn state_to_work(state: &QuantumState) -> Array2<C64> {
    match state.vector() {
        Some(v) => v.clone().insert_axis(Axis(1)),
        None => state.density_matrix(),
    }
}

fn work_to_state(x: &Array2<C64>, pure: bool, like: &QuantumState) -> QuantumState {
    if pure {
        QuantumState::pure_unchecked(x.column(0).to_owned(), like.space())
    } else {
        QuantumState::density_unchecked(x.clone(), like.space())
    }
}

fn check_norm(x: &Array2<C64>, pure: bool, t: f64) -> Result<()> {
    let n = if pure { linalg::frobenius_sq(x).sqrt() } else { x.diag().iter().map(|z| z.re).sum() };
    let drift = (n - 1.0).abs();
    if drift > NORM_DRIFT_LIMIT || !n.is_finite() {
        return Err(Error::NormDrift { drift, time: t });
    }
    Ok(())
}

fn check_dims(system: &ControlSystem, state: &QuantumState) -> Result<()> {
    if state.dim() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: state.dim() });
    }
    Ok(())
}

/// Evolves a pure state or density matrix over `[0, horizon]` under
/// `H(f(t))`, sampling observables every `opts.sample_dt`.
pub fn evolve_schrodinger(
    system: &ControlSystem,
    state0: &QuantumState,
    schedule: &PulseSchedule,
    horizon: f64,
    opts: EvolveOptions,
) -> Result<Trajectory> {
    check_dims(system, state0)?;
    opts.validate(system.dim())?;
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::invalid(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    let pure = state0.is_pure();
    let mut x = state_to_work(state0);
    let mut rec = Recorder::new(opts);
    let mut t_prev = 0.0;
    let mut state = state0.clone();
    for t in sample_times(horizon, opts.sample_dt) {
        if t > t_prev {
            advance(system, schedule, t_prev, t, &mut x, !pure)?;
            check_norm(&x, pure, t)?;
            state = work_to_state(&x, pure, state0);
        }
        rec.record(t, schedule.value(t), &state)?;
        t_prev = t;
    }
    Ok(rec.finish(state, None))
}

/// State at `t1` given the state at `t0`, without sampling.
pub fn propagate_state(
    system: &ControlSystem,
    state: &QuantumState,
    schedule: &PulseSchedule,
    t0: f64,
    t1: f64,
) -> Result<QuantumState> {
    check_dims(system, state)?;
    let pure = state.is_pure();
    let mut x = state_to_work(state);
    advance(system, schedule, t0, t1, &mut x, !pure)?;
    check_norm(&x, pure, t1)?;
    Ok(work_to_state(&x, pure, state))
}

/// Total propagator `U(t1, t0)` of the schedule.
pub fn total_propagator(system: &ControlSystem, schedule: &PulseSchedule, t0: f64, t1: f64) -> Result<Operator> {
    let mut u = Array2::<C64>::eye(system.dim());
    advance(system, schedule, t0, t1, &mut u, false)?;
    Operator::new(u)
}

/// `U ρ U†` for a unitary `U`.
pub fn conjugate(u: &Operator, state: &QuantumState) -> Result<QuantumState> {
    check_dims_op(u, state)?;
    Ok(match state.vector() {
        Some(v) => QuantumState::pure_unchecked(u.apply(v), state.space()),
        None => {
            let mut r = u.matrix().dot(&state.density_matrix()).dot(&linalg::dagger(u.matrix()));
            linalg::symmetrize(&mut r);
            QuantumState::density_unchecked(r, state.space())
        }
    })
}

fn check_dims_op(u: &Operator, state: &QuantumState) -> Result<()> {
    if state.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: state.dim() });
    }
    Ok(())
}

/// Real diagonal of a density matrix.
pub(crate) fn diag_re(m: &Array2<C64>) -> Array1<f64> {
    m.diag().mapv(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{ChainSpec, Sign};
    use crate::symmetry::{self, TargetSector};

    #[test]
    fn sample_grid_includes_horizon() {
        assert_eq!(sample_times(0.25, 0.1).len(), 4);
        assert_eq!(*sample_times(0.25, 0.1).last().unwrap(), 0.25);
        assert_eq!(sample_times(0.3, 0.1).len(), 4);
        assert_eq!(sample_times(0.0, 0.1), vec![0.0]);
    }

    #[test]
    fn stationary_state_has_constant_fidelity() {
        let spec = ChainSpec::new(4, -1.0).unwrap();
        let sys = ControlSystem::chain(&spec);
        let g = spin::ground_state(&spec, 1.5).unwrap().state.unwrap();
        let sched = PulseSchedule::constant(1.5, 2.0).unwrap();
        let traj = evolve_schrodinger(&sys, &g, &sched, 2.0, EvolveOptions::new(&g)).unwrap();
        assert!(traj.fidelity.iter().all(|f| (f - 1.0).abs() < 1e-10));
    }

    #[test]
    fn block_and_full_evolution_agree() {
        let spec = ChainSpec::new(5, -1.0).unwrap();
        let sector = TargetSector::build(&spec, Sign::Plus).unwrap();
        let basis = sector.decomposition.block_basis(sector.block).unwrap();
        let sched = PulseSchedule::exponential(10.0, 0.5).unwrap();
        let psi_full = spin::ground_state(&spec, 10.0).unwrap().state.unwrap();
        let full = ControlSystem::chain(&spec);
        let full_target = &sector.target;
        let a = evolve_schrodinger(&full, &psi_full, &sched, 3.0, EvolveOptions::new(full_target).leakage_basis(&basis)).unwrap();
        let block = ControlSystem::for_sector(&spec, &sector).unwrap();
        let psi_b = symmetry::to_block(&psi_full, &sector.decomposition, sector.block).unwrap();
        let tgt_b = symmetry::to_block(full_target, &sector.decomposition, sector.block).unwrap();
        let b = evolve_schrodinger(&block, &psi_b, &sched, 3.0, EvolveOptions::new(&tgt_b)).unwrap();
        for (x, y) in a.fidelity.iter().zip(&b.fidelity) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(a.leakage.iter().all(|l| *l < 1e-9));
    }

    #[test]
    fn density_evolution_matches_pure() {
        let spec = ChainSpec::new(3, 1.0).unwrap();
        let sys = ControlSystem::chain(&spec);
        let psi = spin::product_state(&spec, Sign::Minus);
        let target = spin::ghz_state(&spec, 4).unwrap();
        let sched = PulseSchedule::piecewise(vec![0.3, -1.2, 2.0], 0.4).unwrap();
        let a = evolve_schrodinger(&sys, &psi, &sched, 1.5, EvolveOptions::new(&target)).unwrap();
        let b = evolve_schrodinger(&sys, &psi.to_density(), &sched, 1.5, EvolveOptions::new(&target)).unwrap();
        for (x, y) in a.fidelity.iter().zip(&b.fidelity) {
            assert!((x - y).abs() < 1e-12);
        }
        let u = total_propagator(&sys, &sched, 0.0, 1.5).unwrap();
        let c = conjugate(&u, &psi).unwrap();
        assert!((spin::fidelity(&c, &target).unwrap() - a.final_fidelity()).abs() < 1e-12);
    }

    #[test]
    fn populations_of_ghz_and_product_state() {
        let spec = ChainSpec::new(6, -1.0).unwrap();
        let sector = TargetSector::build(&spec, Sign::Plus).unwrap();
        let sys = ControlSystem::for_sector(&spec, &sector).unwrap();
        let set = EigenspaceSet::of_drift(&sys).unwrap();
        assert_eq!(set.dims(), vec![1, 3, 6, 6, 3, 1]);
        let ghz = symmetry::to_block(&sector.target, &sector.decomposition, sector.block).unwrap();
        let p = eigenspace_populations(&ghz, &set).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1..].iter().all(|x| *x < 1e-12));
        let plus = symmetry::to_block(&sector.initial_product, &sector.decomposition, sector.block).unwrap();
        let p = eigenspace_populations(&plus, &set).unwrap();
        assert!(p.iter().all(|x| *x > 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
