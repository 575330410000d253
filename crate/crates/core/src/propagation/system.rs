use ndarray::{s, Array1, Array2, Axis};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, HermitianEigen};
use crate::spin::{self, ChainSpec, Operator, Space};
use crate::symmetry::{self, SubspaceDecomposition, TargetSector};

/// Norm bound per Taylor substep.
const TAYLOR_THETA: f64 = 2.0;
const TAYLOR_MAX_TERMS: usize = 80;

#[derive(Clone, Debug)]
enum Kind {
    /// Full chain, matrix-free: diagonal Ising part plus global bit flips.
    Chain { n_sites: usize, diag: Vec<f64>, masks: Vec<usize> },
    Dense(Box<DenseParts>),
}

#[derive(Clone, Debug)]
struct DenseParts {
    drift: Array2<C64>,
    control: Array2<C64>,
    real: Option<(Array2<f64>, Array2<f64>)>,
    drift_norm: f64,
    control_norm: f64,
}

/// The pair `(H0, H1)` with coupling `J`, generating `H(f) = J[H0 + f H1]`.
#[derive(Clone, Debug)]
pub struct ControlSystem {
    coupling: f64,
    space: Space,
    kind: Kind,
}

fn spectral_norm(m: &Array2<C64>) -> Result<f64> {
    let v = linalg::eigvalsh(m)?;
    Ok(v[0].abs().max(v[v.len() - 1].abs()))
}

impl ControlSystem {
    /// Uniform chain over the full space.
    pub fn chain(spec: &ChainSpec) -> Self {
        Self::chain_with_bonds(spec.n_sites(), spec.coupling(), &vec![1.0; spec.n_sites() - 1])
            .expect("valid chain")
    }

    /// Chain `J[Σ w_n Z_n Z_{n+1} + f Σ X_n]`; also accepts a single site.
    pub fn chain_with_bonds(n_sites: usize, coupling: f64, bonds: &[f64]) -> Result<Self> {
        if n_sites == 0 || n_sites > spin::MAX_SITES {
            return Err(Error::invalid(format!("chain length {n_sites} outside 1..={}", spin::MAX_SITES)));
        }
        if bonds.len() + 1 != n_sites {
            return Err(Error::DimensionMismatch { expected: n_sites - 1, found: bonds.len() });
        }
        if !coupling.is_finite() || coupling == 0.0 || bonds.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("coupling and bond weights must be finite, coupling nonzero"));
        }
        let diag = spin::ising_diagonal(n_sites, bonds);
        let masks = (0..n_sites).map(|s| spin::flip_mask(n_sites, s)).collect();
        Ok(ControlSystem { coupling, space: Space::Full, kind: Kind::Chain { n_sites, diag, masks } })
    }

    pub fn dense(drift: &Operator, control: &Operator, coupling: f64, space: Space) -> Result<Self> {
        if !drift.is_hermitian() || !control.is_hermitian() {
            return Err(Error::invalid("drift and control must be Hermitian"));
        }
        if drift.dim() != control.dim() {
            return Err(Error::DimensionMismatch { expected: drift.dim(), found: control.dim() });
        }
        if !coupling.is_finite() || coupling == 0.0 {
            return Err(Error::invalid("coupling must be finite and nonzero"));
        }
        let real = drift.real_part_if_real().zip(control.real_part_if_real());
        let parts = DenseParts {
            drift_norm: spectral_norm(drift.matrix())?,
            control_norm: spectral_norm(control.matrix())?,
            drift: drift.matrix().clone(),
            control: control.matrix().clone(),
            real,
        };
        Ok(ControlSystem { coupling, space, kind: Kind::Dense(Box::new(parts)) })
    }

    /// Chain restricted to one block of a decomposition.
    pub fn restricted(spec: &ChainSpec, decomp: &SubspaceDecomposition, block: usize) -> Result<Self> {
        let h0 = symmetry::restrict(&spin::build_drift(spec), decomp, block)?;
        let h1 = symmetry::restrict(&spin::build_control(spec), decomp, block)?;
        Self::dense(&h0, &h1, spec.coupling(), Space::Block(block))
    }

    pub fn for_sector(spec: &ChainSpec, sector: &TargetSector) -> Result<Self> {
        Self::restricted(spec, &sector.decomposition, sector.block)
    }

    /// Same operators, coupling replaced.
    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        if !coupling.is_finite() || coupling == 0.0 {
            return Err(Error::invalid("coupling must be finite and nonzero"));
        }
        Ok(ControlSystem { coupling, ..self.clone() })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Chain { diag, .. } => diag.len(),
            Kind::Dense(p) => p.drift.nrows(),
        }
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Chain length for matrix-free chains.
    pub fn n_sites(&self) -> Option<usize> {
        match &self.kind {
            Kind::Chain { n_sites, .. } => Some(*n_sites),
            Kind::Dense(_) => None,
        }
    }

    pub fn drift(&self) -> Operator {
        match &self.kind {
            Kind::Chain { diag, .. } => {
                let d = Array1::from(diag.iter().map(|x| C64::new(*x, 0.0)).collect::<Vec<_>>());
                Operator::from_hermitian_unchecked(Array2::from_diag(&d))
            }
            Kind::Dense(p) => Operator::from_hermitian_unchecked(p.drift.clone()),
        }
    }

    pub fn control(&self) -> Operator {
        match &self.kind {
            Kind::Chain { n_sites, .. } => {
                Operator::from_hermitian_unchecked(linalg::to_complex(&spin::control_matrix(*n_sites)))
            }
            Kind::Dense(p) => Operator::from_hermitian_unchecked(p.control.clone()),
        }
    }

    /// `J[H0 + f H1]` as a dense matrix.
    pub fn hamiltonian(&self, f: f64) -> Operator {
        let j = C64::new(self.coupling, 0.0);
        let m = match &self.kind {
            Kind::Chain { .. } => (self.drift().into_matrix() + self.control().into_matrix() * C64::new(f, 0.0)) * j,
            Kind::Dense(p) => (&p.drift + &(&p.control * C64::new(f, 0.0))) * j,
        };
        Operator::from_hermitian_unchecked(m)
    }

    /// Upper bound on `‖H(f)‖₂`.
    pub fn norm_bound(&self, f: f64) -> f64 {
        let (a, b) = match &self.kind {
            Kind::Chain { diag, masks, .. } => (diag.iter().fold(0.0f64, |m, x| m.max(x.abs())), masks.len() as f64),
            Kind::Dense(p) => (p.drift_norm, p.control_norm),
        };
        self.coupling.abs() * (a + f.abs() * b)
    }

    pub fn eigen(&self, f: f64) -> Result<HermitianEigen> {
        linalg::eigh(self.hamiltonian(f).matrix())
    }

    /// `exp(−i H(f) dt)` by spectral decomposition.
    pub fn step_propagator(&self, f: f64, dt: f64) -> Result<Operator> {
        if dt == 0.0 {
            return Ok(Operator::identity(self.dim()));
        }
        let e = self.eigen(f)?;
        let phases = e.values.mapv(|l| C64::from_polar(1.0, -l * dt));
        Operator::new(linalg::spectral_function(&e, &phases))
    }

    /// `H(f) X` column by column.
    pub fn apply(&self, f: f64, x: &Array2<C64>) -> Array2<C64> {
        let j = self.coupling;
        match &self.kind {
            Kind::Chain { diag, masks, .. } => {
                let mut out = Array2::<C64>::zeros(x.raw_dim());
                for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
                    row.scaled_add(C64::new(j * diag[i], 0.0), &x.row(i));
                    if f != 0.0 {
                        for &m in masks {
                            row.scaled_add(C64::new(j * f, 0.0), &x.row(i ^ m));
                        }
                    }
                }
                out
            }
            Kind::Dense(p) => match &p.real {
                Some((r0, r1)) => real_times_complex(&((r0 + &(r1 * f)) * j), x),
                None => ((&p.drift + &(&p.control * C64::new(f, 0.0))) * C64::new(j, 0.0)).dot(x),
            },
        }
    }

    /// Advances every column of `x` by `exp(−i H(f) dt)`, choosing between a
    /// truncated Taylor series and a spectral step by estimated cost.
    pub fn propagate(&self, f: f64, dt: f64, x: &mut Array2<C64>) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let d = self.dim() as f64;
        let m = x.ncols() as f64;
        let terms = taylor_terms(self.norm_bound(f) * dt.abs()) as f64;
        let (apply_cost, real) = match &self.kind {
            Kind::Chain { masks, .. } => (d * (masks.len() as f64 + 1.0) * m * 4.0, true),
            Kind::Dense(p) => (2.0 * d * d * m * if p.real.is_some() { 1.0 } else { 4.0 }, p.real.is_some()),
        };
        let taylor_cost = terms * apply_cost;
        let spectral_cost = 10.0 * d * d * d * if real { 1.0 } else { 4.0 } + 4.0 * d * d * m;
        if taylor_cost <= spectral_cost {
            self.taylor_step(f, dt, x);
            Ok(())
        } else {
            self.spectral_step(f, dt, x)
        }
    }

    fn spectral_step(&self, f: f64, dt: f64, x: &mut Array2<C64>) -> Result<()> {
        let phases = |vals: &Array1<f64>| vals.mapv(|l| C64::from_polar(1.0, -l * dt));
        match &self.kind {
            Kind::Dense(p) if p.real.is_some() => {
                let (r0, r1) = p.real.as_ref().unwrap();
                let e = linalg::eigh_real(&((r0 + &(r1 * f)) * self.coupling))?;
                let mut c = real_times_complex(&e.vectors.t().to_owned(), x);
                let ph = phases(&e.values);
                for (mut row, p) in c.axis_iter_mut(Axis(0)).zip(ph.iter()) {
                    row.mapv_inplace(|z| z * p);
                }
                *x = real_times_complex(&e.vectors, &c);
            }
            _ => {
                let e = self.eigen(f)?;
                let mut c = linalg::dagger(&e.vectors).dot(x);
                let ph = phases(&e.values);
                for (mut row, p) in c.axis_iter_mut(Axis(0)).zip(ph.iter()) {
                    row.mapv_inplace(|z| z * p);
                }
                *x = e.vectors.dot(&c);
            }
        }
        Ok(())
    }

    fn taylor_step(&self, f: f64, dt: f64, x: &mut Array2<C64>) {
        let total = self.norm_bound(f) * dt.abs();
        let substeps = (total / TAYLOR_THETA).ceil().max(1.0) as usize;
        let h = dt / substeps as f64;
        let theta = total / substeps as f64;
        let dense_h = match &self.kind {
            Kind::Dense(p) => p.real.as_ref().map(|(r0, r1)| (r0 + &(r1 * f)) * self.coupling),
            Kind::Chain { .. } => None,
        };
        for _ in 0..substeps {
            let mut term = x.clone();
            for k in 1..=TAYLOR_MAX_TERMS {
                let applied = match &dense_h {
                    Some(hr) => real_times_complex(hr, &term),
                    None => self.apply(f, &term),
                };
                term = applied * C64::new(0.0, -h / k as f64);
                *x += &term;
                if k as f64 > theta && linalg::frobenius_sq(&term) <= f64::EPSILON.powi(2) * 0.01 * linalg::frobenius_sq(x) {
                    break;
                }
            }
        }
    }
}

/// Terms needed per unit of `‖H‖dt` to push the Taylor remainder below 1e-17.
fn taylor_terms(total: f64) -> usize {
    let substeps = (total / TAYLOR_THETA).ceil().max(1.0);
    let theta = total / substeps;
    let mut term = 1.0;
    let mut k = 0usize;
    while k < TAYLOR_MAX_TERMS && (term > 1e-17 || (k as f64) < theta) {
        k += 1;
        term *= theta / k as f64;
    }
    k * substeps as usize
}

/// Real matrix times complex matrix via one stacked real product.
pub(crate) fn real_times_complex(a: &Array2<f64>, x: &Array2<C64>) -> Array2<C64> {
    let m = x.ncols();
    let mut stacked = Array2::<f64>::zeros((x.nrows(), 2 * m));
    stacked.slice_mut(s![.., ..m]).assign(&x.mapv(|z| z.re));
    stacked.slice_mut(s![.., m..]).assign(&x.mapv(|z| z.im));
    let y = a.dot(&stacked);
    let (re, im) = (y.slice(s![.., ..m]), y.slice(s![.., m..]));
    Array2::from_shape_fn((a.nrows(), m), |(i, j)| C64::new(re[[i, j]], im[[i, j]]))
}

/// `exp(−i J[H0 + f H1] dt)` by spectral decomposition.
pub fn step_propagator(h0: &Operator, h1: &Operator, coupling: f64, f: f64, dt: f64) -> Result<Operator> {
    ControlSystem::dense(h0, h1, coupling, Space::Full)?.step_propagator(f, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::ChainSpec;
    use ndarray::array;

    fn random_state(d: usize, seed: u64) -> Array2<C64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let v = Array2::from_shape_fn((d, 1), |_| C64::new(next(), next()));
        let n = linalg::frobenius_sq(&v).sqrt();
        v / C64::new(n, 0.0)
    }

    #[test]
    fn two_level_closed_form() {
        let x = Operator::from_real(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let z2 = Operator::from_real(array![[-2.0, 0.0], [0.0, 2.0]]).unwrap();
        let u = step_propagator(&x, &z2, 1.0, 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        let want = array![[C64::new(0.0, 0.0), C64::new(0.0, -1.0)], [C64::new(0.0, -1.0), C64::new(0.0, 0.0)]];
        assert!(linalg::max_abs_diff(u.matrix(), &want) < 1e-14);
        let id = step_propagator(&x, &z2, 1.0, 3.0, 0.0).unwrap();
        assert_eq!(id.matrix(), &Array2::<C64>::eye(2));
    }

    #[test]
    fn engines_agree() {
        let spec = ChainSpec::new(4, -1.0).unwrap();
        let chain = ControlSystem::chain(&spec);
        let dense = ControlSystem::dense(&spin::build_drift(&spec), &spin::build_control(&spec), -1.0, Space::Full).unwrap();
        let psi = random_state(16, 3);
        for (f, dt) in [(0.7, 0.3), (10.0, 0.01), (-2.0, 1.7)] {
            let mut a = psi.clone();
            chain.taylor_step(f, dt, &mut a);
            let mut b = psi.clone();
            dense.spectral_step(f, dt, &mut b).unwrap();
            let mut c = psi.clone();
            dense.taylor_step(f, dt, &mut c);
            let u = chain.step_propagator(f, dt).unwrap();
            let d = u.matrix().dot(&psi);
            assert!(linalg::max_abs_diff(&a, &d) < 1e-12, "f={f} dt={dt}");
            assert!(linalg::max_abs_diff(&b, &d) < 1e-12);
            assert!(linalg::max_abs_diff(&c, &d) < 1e-12);
        }
    }

    #[test]
    fn apply_matches_dense_hamiltonian() {
        let spec = ChainSpec::new(3, 1.0).unwrap();
        let chain = ControlSystem::chain(&spec);
        let x = random_state(8, 9);
        let want = spin::hamiltonian(&spec, 1.3).matrix().dot(&x);
        assert!(linalg::max_abs_diff(&chain.apply(1.3, &x), &want) < 1e-14);
        assert!(chain.norm_bound(1.3) >= spectral_norm(spin::hamiltonian(&spec, 1.3).matrix()).unwrap());
    }

    #[test]
    fn single_site_chain() {
        let s = ControlSystem::chain_with_bonds(1, 1.0, &[]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.control().matrix()[[0, 1]], C64::new(1.0, 0.0));
    }
}
