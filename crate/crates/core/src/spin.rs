//! Operators and states of the open transverse-field Ising chain
//! `H_f = J[H0 + f H1]` with `H0 = Σ Z_n Z_{n+1}` and `H1 = Σ X_n`.
//!
//! Basis index `i` is the bit string of the chain with site 1 as the most
//! significant bit; bit `0` is the `Z = +1` state `|0⟩`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, HermitianEigen};

pub const MAX_SITES: usize = 14;
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `None` for zero or NaN.
    pub fn of(x: f64) -> Option<Sign> {
        if x > 0.0 {
            Some(Sign::Plus)
        } else if x < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSpec {
    n_sites: usize,
    coupling: f64,
}

impl ChainSpec {
    pub fn new(n_sites: usize, coupling: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::invalid(format!("chain needs at least 2 sites, got {n_sites}")));
        }
        if n_sites > MAX_SITES {
            return Err(Error::invalid(format!("chain length {n_sites} exceeds the cap of {MAX_SITES}")));
        }
        if coupling == 0.0 || !coupling.is_finite() {
            return Err(Error::invalid(format!("coupling must be finite and nonzero, got {coupling}")));
        }
        Ok(ChainSpec { n_sites, coupling })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }
}

/// Bit mask flipping `site` (0-based from the left end of the chain).
pub fn flip_mask(n_sites: usize, site: usize) -> usize {
    1 << (n_sites - 1 - site)
}

/// `Z` eigenvalue of `site` in basis state `index`.
pub fn z_value(n_sites: usize, index: usize, site: usize) -> f64 {
    if index & flip_mask(n_sites, site) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Diagonal of `Σ w_n Z_n Z_{n+1}` for bond weights `w` (length `n_sites − 1`).
pub fn ising_diagonal(n_sites: usize, weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(weights.len() + 1, n_sites.max(1));
    (0..1usize << n_sites)
        .map(|i| {
            weights
                .iter()
                .enumerate()
                .map(|(n, w)| w * z_value(n_sites, i, n) * z_value(n_sites, i, n + 1))
                .sum()
        })
        .collect()
}

pub fn drift_matrix(n_sites: usize) -> Array2<f64> {
    let diag = ising_diagonal(n_sites, &vec![1.0; n_sites.saturating_sub(1)]);
    Array2::from_diag(&Array1::from(diag))
}

pub fn control_matrix(n_sites: usize) -> Array2<f64> {
    let d = 1usize << n_sites;
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for site in 0..n_sites {
            m[[i, i ^ flip_mask(n_sites, site)]] = 1.0;
        }
    }
    m
}

/// Dense square matrix, flagged Hermitian when built from a Hermitian source.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: Array2<C64>,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c || r == 0 {
            return Err(Error::invalid(format!("operator must be square and nonempty, got {r}x{c}")));
        }
        let hermitian = linalg::hermiticity_defect(&matrix) < HERMITIAN_TOLERANCE;
        Ok(Operator { matrix, hermitian })
    }

    /// Fails unless `‖A − A†‖_max < 1e-12`.
    pub fn hermitian(matrix: Array2<C64>) -> Result<Self> {
        let op = Operator::new(matrix)?;
        if !op.hermitian {
            return Err(Error::invalid("operator is not Hermitian"));
        }
        Ok(op)
    }

    pub fn from_real(matrix: Array2<f64>) -> Result<Self> {
        Operator::new(linalg::to_complex(&matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Operator { matrix: Array2::eye(dim), hermitian: true }
    }

    pub(crate) fn from_hermitian_unchecked(matrix: Array2<C64>) -> Self {
        Operator { matrix, hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn real_part_if_real(&self) -> Option<Array2<f64>> {
        linalg::real_part_if_real(&self.matrix)
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }

    pub fn eigh(&self) -> Result<HermitianEigen> {
        if !self.hermitian {
            return Err(Error::invalid("eigendecomposition needs a Hermitian operator"));
        }
        linalg::eigh(&self.matrix)
    }

    pub fn commutator(&self, other: &Operator) -> Array2<C64> {
        linalg::commutator(&self.matrix, &other.matrix)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Operator, b: f64) -> Result<Operator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let m = &self.matrix * C64::new(a, 0.0) + &other.matrix * C64::new(b, 0.0);
        Ok(Operator { matrix: m, hermitian: self.hermitian && other.hermitian })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Full,
    Block(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum StateData {
    Pure(Array1<C64>),
    Density(Array2<C64>),
}

/// Pure state vector or density matrix over the full space or one block.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    data: StateData,
    space: Space,
}

impl QuantumState {
    pub fn pure(vector: Array1<C64>, space: Space) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::invalid("empty state vector"));
        }
        let norm = linalg::vec_norm(&vector);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("state norm {norm} differs from 1")));
        }
        Ok(QuantumState { data: StateData::Pure(vector), space })
    }

    pub fn normalized(vector: Array1<C64>, space: Space) -> Result<Self> {
        let norm = linalg::vec_norm(&vector);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(QuantumState { data: StateData::Pure(vector / C64::new(norm, 0.0)), space })
    }

    pub fn density(matrix: Array2<C64>, space: Space) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c || r == 0 {
            return Err(Error::invalid(format!("density matrix must be square, got {r}x{c}")));
        }
        if linalg::hermiticity_defect(&matrix) > HERMITIAN_TOLERANCE {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let trace: f64 = matrix.diag().iter().map(|z| z.re).sum();
        if (trace - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("density matrix trace {trace} differs from 1")));
        }
        let min = linalg::eigvalsh(&matrix)?[0];
        if min < -1e-10 {
            return Err(Error::invalid(format!("density matrix has eigenvalue {min}")));
        }
        Ok(QuantumState { data: StateData::Density(matrix), space })
    }

    pub(crate) fn density_unchecked(matrix: Array2<C64>, space: Space) -> Self {
        QuantumState { data: StateData::Density(matrix), space }
    }

    pub(crate) fn pure_unchecked(vector: Array1<C64>, space: Space) -> Self {
        QuantumState { data: StateData::Pure(vector), space }
    }

    pub fn dim(&self) -> usize {
        match &self.data {
            StateData::Pure(v) => v.len(),
            StateData::Density(m) => m.nrows(),
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn vector(&self) -> Option<&Array1<C64>> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn density_matrix(&self) -> Array2<C64> {
        match &self.data {
            StateData::Pure(v) => {
                let col = v.view().insert_axis(ndarray::Axis(1));
                let row = v.mapv(|z| z.conj()).insert_axis(ndarray::Axis(0));
                col.dot(&row)
            }
            StateData::Density(m) => m.clone(),
        }
    }

    pub fn to_density(&self) -> QuantumState {
        QuantumState { data: StateData::Density(self.density_matrix()), space: self.space }
    }

    /// `⟨A⟩`, real part (exact for Hermitian `A`).
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(match &self.data {
            StateData::Pure(v) => linalg::inner(v, &op.apply(v)).re,
            StateData::Density(m) => {
                let a = op.matrix();
                let mut tr = C64::new(0.0, 0.0);
                for i in 0..m.nrows() {
                    for k in 0..m.nrows() {
                        tr += a[[i, k]] * m[[k, i]];
                    }
                }
                tr.re
            }
        })
    }

    pub fn purity(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 1.0,
            StateData::Density(m) => linalg::frobenius_sq(m),
        }
    }
}

/// `F = |⟨t|ψ⟩|²` or `⟨t|ρ|t⟩`, clamped to `[0, 1]`.
pub fn fidelity(state: &QuantumState, target: &QuantumState) -> Result<f64> {
    let t = target.vector().ok_or_else(|| Error::invalid("fidelity target must be a pure state"))?;
    if t.len() != state.dim() {
        return Err(Error::DimensionMismatch { expected: t.len(), found: state.dim() });
    }
    let f = match &state.data {
        StateData::Pure(v) => linalg::inner(t, v).norm_sqr(),
        StateData::Density(m) => linalg::inner(t, &m.dot(t)).re,
    };
    Ok(f.clamp(0.0, 1.0))
}

pub fn build_drift(spec: &ChainSpec) -> Operator {
    Operator::from_hermitian_unchecked(linalg::to_complex(&drift_matrix(spec.n_sites)))
}

pub fn build_control(spec: &ChainSpec) -> Operator {
    Operator::from_hermitian_unchecked(linalg::to_complex(&control_matrix(spec.n_sites)))
}

/// `Σ (1 + δ_n) Z_n Z_{n+1}`.
pub fn build_disordered_drift(spec: &ChainSpec, deltas: &[f64]) -> Result<Operator> {
    if deltas.len() + 1 != spec.n_sites {
        return Err(Error::DimensionMismatch { expected: spec.n_sites - 1, found: deltas.len() });
    }
    let w: Vec<f64> = deltas.iter().map(|d| 1.0 + d).collect();
    let diag = Array1::from(ising_diagonal(spec.n_sites, &w));
    Ok(Operator::from_hermitian_unchecked(linalg::to_complex(&Array2::from_diag(&diag))))
}

/// `J[H0 + f H1]`.
pub fn hamiltonian(spec: &ChainSpec, f: f64) -> Operator {
    let j = spec.coupling;
    let m = drift_matrix(spec.n_sites) * j + control_matrix(spec.n_sites) * (j * f);
    Operator::from_hermitian_unchecked(linalg::to_complex(&m))
}

/// Index of the alternating string `0101…` (site 1 carries `0`).
fn alternating_index(n_sites: usize) -> usize {
    (0..n_sites).filter(|s| s % 2 == 1).map(|s| flip_mask(n_sites, s)).sum()
}

/// GHZ targets: k=1,2 are `(|0…0⟩ ± |1…1⟩)/√2`, k=3,4 are `(|0101…⟩ ± |1010…⟩)/√2`.
pub fn ghz_state(spec: &ChainSpec, k: usize) -> Result<QuantumState> {
    let d = spec.dim();
    let (a, sign) = match k {
        1 => (0, 1.0),
        2 => (0, -1.0),
        3 => (alternating_index(spec.n_sites), 1.0),
        4 => (alternating_index(spec.n_sites), -1.0),
        _ => return Err(Error::invalid(format!("GHZ index must be 1..4, got {k}"))),
    };
    let mut v = Array1::zeros(d);
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    v[a] = C64::new(amp, 0.0);
    v[d - 1 - a] = C64::new(sign * amp, 0.0);
    Ok(QuantumState::pure_unchecked(v, Space::Full))
}

/// `|±…±⟩`.
pub fn product_state(spec: &ChainSpec, sign: Sign) -> QuantumState {
    let d = spec.dim();
    let amp = (d as f64).sqrt().recip();
    let v = Array1::from_shape_fn(d, |i| {
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus if i.count_ones() % 2 == 1 => -1.0,
            Sign::Minus => 1.0,
        };
        C64::new(s * amp, 0.0)
    });
    QuantumState::pure_unchecked(v, Space::Full)
}

#[derive(Clone, Debug)]
pub struct GroundStateReport {
    /// `None` when the ground level is degenerate.
    pub state: Option<QuantumState>,
    pub energy: f64,
    pub gap: f64,
    pub degenerate: bool,
}

/// Rotates `v` so its largest-magnitude entry (first one on ties) is real positive.
pub fn fix_phase(v: &mut Array1<C64>) {
    let max = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied().unwrap();
    let phase = pivot.conj() / pivot.norm();
    v.mapv_inplace(|z| z * phase);
}

/// Lowest eigenvector of a Hermitian operator, with gap and degeneracy flag.
pub fn lowest_eigenstate(h: &Operator, space: Space) -> Result<GroundStateReport> {
    let e = h.eigh()?;
    let energy = e.values[0];
    let gap = if e.values.len() > 1 { (e.values[1] - energy).max(0.0) } else { f64::INFINITY };
    let degenerate = gap < DEGENERACY_TOLERANCE;
    let state = if degenerate {
        None
    } else {
        let mut v = e.vectors.column(0).to_owned();
        fix_phase(&mut v);
        Some(QuantumState::pure_unchecked(v, space))
    };
    Ok(GroundStateReport { state, energy, gap, degenerate })
}

pub fn ground_state(spec: &ChainSpec, f: f64) -> Result<GroundStateReport> {
    lowest_eigenstate(&hamiltonian(spec, f), Space::Full)
}

/// Boltzmann weights `softmax(−ε/T)` with the lowest level shifted to zero.
pub fn thermal_weights(energies: &Array1<f64>, temperature: f64) -> Result<Array1<f64>> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w = energies.mapv(|e| (-(e - min) / temperature).exp());
    let z = w.sum();
    Ok(w / z)
}

/// `e^{−H/T}/Z` from a precomputed eigen-decomposition of `H`.
pub fn thermal_state_from_eigen(e: &HermitianEigen, temperature: f64, space: Space) -> Result<QuantumState> {
    let w = thermal_weights(&e.values, temperature)?;
    let mut rho = linalg::spectral_function(e, &w.mapv(|x| C64::new(x, 0.0)));
    linalg::symmetrize(&mut rho);
    Ok(QuantumState::density_unchecked(rho, space))
}

pub fn thermal_state(spec: &ChainSpec, f0: f64, temperature: f64) -> Result<QuantumState> {
    if !(temperature > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    let e = hamiltonian(spec, f0).eigh()?;
    thermal_state_from_eigen(&e, temperature, Space::Full)
}

/// `M = ∏ X_n`, the permutation `i ↦ 2^N − 1 − i`.
pub fn parity_operator(spec: &ChainSpec) -> Operator {
    let d = spec.dim();
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        m[[d - 1 - i, i]] = C64::new(1.0, 0.0);
    }
    Operator::from_hermitian_unchecked(m)
}

/// `⟨ψ|M|ψ⟩` for a full-space vector.
pub fn parity_expectation(v: &Array1<C64>) -> f64 {
    let d = v.len();
    (0..d).map(|i| v[i].conj() * v[d - 1 - i]).sum::<C64>().re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> ChainSpec {
        ChainSpec::new(n, -1.0).unwrap()
    }

    fn diag(op: &Operator) -> Vec<f64> {
        op.matrix().diag().iter().map(|z| z.re).collect()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn chain_spec_validation() {
        assert!(ChainSpec::new(1, -1.0).is_err());
        assert!(ChainSpec::new(4, 0.0).is_err());
        assert!(ChainSpec::new(15, 1.0).is_err());
        assert_eq!(ChainSpec::new(3, 1.0).unwrap().dim(), 8);
    }

    #[test]
    fn drift_is_zz_sum() {
        assert_eq!(diag(&build_drift(&spec(2))), vec![1.0, -1.0, -1.0, 1.0]);
        let brute: Vec<f64> = (0..8usize)
            .map(|i| {
                let z = |s: usize| if (i >> (2 - s)) & 1 == 0 { 1.0 } else { -1.0 };
                z(0) * z(1) + z(1) * z(2)
            })
            .collect();
        assert_eq!(diag(&build_drift(&spec(3))), brute);
        assert_eq!(brute, vec![2.0, 0.0, -2.0, 0.0, 0.0, -2.0, 0.0, 2.0]);
    }

    #[test]
    fn control_entries_and_row_sums() {
        assert_eq!(control_matrix(1), ndarray::array![[0.0, 1.0], [1.0, 0.0]]);
        let h1 = build_control(&spec(3));
        assert_eq!(h1.matrix()[[0b000, 0b100]], c(1.0));
        for row in h1.matrix().rows() {
            assert_eq!(row.iter().map(|z| z.re).sum::<f64>(), 3.0);
            assert!(row.iter().all(|z| z.re == 0.0 || z.re == 1.0));
        }
        assert!(h1.is_hermitian());
    }

    #[test]
    fn rotated_two_site_matrices() {
        // Basis order |−−⟩, |−+⟩, |+−⟩, |++⟩.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [s, s];
        let minus = [s, -s];
        let singles = [minus, plus];
        let mut w = Array2::<C64>::zeros((4, 4));
        for (col, (a, b)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            for i in 0..4 {
                w[[i, col]] = c(singles[a][i >> 1] * singles[b][i & 1]);
            }
        }
        let wd = linalg::dagger(&w);
        let h0 = wd.dot(build_drift(&spec(2)).matrix()).dot(&w);
        let h1 = wd.dot(build_control(&spec(2)).matrix()).dot(&w);
        let anti = Array2::from_shape_fn((4, 4), |(i, j)| c(if i + j == 3 { 1.0 } else { 0.0 }));
        let expect1 = Array2::from_diag(&Array1::from(vec![c(-2.0), c(0.0), c(0.0), c(2.0)]));
        assert!(linalg::max_abs_diff(&h0, &anti) < 1e-14);
        assert!(linalg::max_abs_diff(&h1, &expect1) < 1e-14);
    }

    #[test]
    fn ghz_vectors() {
        let g = ghz_state(&spec(2), 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(g.vector().unwrap().to_vec(), vec![c(s), c(0.0), c(0.0), c(s)]);
        let g4 = ghz_state(&spec(3), 4).unwrap();
        let v = g4.vector().unwrap();
        assert_eq!(v[0b010], c(s));
        assert_eq!(v[0b101], c(-s));
        assert_eq!(v.iter().filter(|z| z.norm() > 0.0).count(), 2);
        let g2 = ghz_state(&spec(4), 2).unwrap();
        assert_eq!(fidelity(&ghz_state(&spec(4), 1).unwrap(), &g2).unwrap(), 0.0);
        assert!(ghz_state(&spec(2), 5).is_err());
    }

    #[test]
    fn product_states() {
        let p = product_state(&spec(2), Sign::Plus);
        assert_eq!(p.vector().unwrap().to_vec(), vec![c(0.5); 4]);
        let m = product_state(&spec(2), Sign::Minus);
        assert_eq!(m.vector().unwrap().to_vec(), vec![c(0.5), c(-0.5), c(-0.5), c(0.5)]);
        let f = fidelity(&p, &ghz_state(&spec(2), 1).unwrap()).unwrap();
        assert!((f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ground_state_large_field_and_degeneracy() {
        let s = spec(2);
        let r = ground_state(&s, 10.0).unwrap();
        let f = fidelity(r.state.as_ref().unwrap(), &product_state(&s, Sign::Plus)).unwrap();
        assert!((0.99..1.0).contains(&f));
        let zero = ground_state(&s, 0.0).unwrap();
        assert!(zero.degenerate && zero.state.is_none());
        assert!(zero.gap >= 0.0);
    }

    #[test]
    fn ground_state_error_scales_quadratically() {
        let s = spec(4);
        let plus = product_state(&s, Sign::Plus);
        let scaled: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&f0| {
                let g = ground_state(&s, f0).unwrap().state.unwrap();
                (1.0 - fidelity(&g, &plus).unwrap()) * f0 * f0
            })
            .collect();
        assert!((scaled[1] - scaled[2]).abs() < (scaled[0] - scaled[1]).abs() + 1e-6);
        assert!((scaled[2] / scaled[1] - 1.0).abs() < 0.02);
    }

    #[test]
    fn phase_convention() {
        let mut v = Array1::from(vec![C64::new(0.0, 0.3), C64::new(0.0, -0.9)]);
        fix_phase(&mut v);
        assert!((v[1] - c(0.9)).norm() < 1e-15);
    }

    #[test]
    fn thermal_limits_and_weights() {
        let s = spec(3);
        let ground = ground_state(&s, 2.0).unwrap().state.unwrap();
        let cold = thermal_state(&s, 2.0, 1e-3).unwrap();
        let proj = ground.density_matrix();
        assert!(linalg::max_abs_diff(&cold.density_matrix(), &proj) < 1e-12);
        let hot = thermal_state(&s, 2.0, 1e9).unwrap();
        let mixed = Array2::<C64>::eye(8) / c(8.0);
        assert!(linalg::max_abs_diff(&hot.density_matrix(), &mixed) < 1e-8);
        assert!(thermal_state(&s, 2.0, 0.0).is_err());

        let e = hamiltonian(&s, 2.0).eigh().unwrap();
        let rho = thermal_state(&s, 2.0, 1.5).unwrap();
        let mut got = linalg::eigvalsh(&rho.density_matrix()).unwrap().to_vec();
        let z: f64 = e.values.iter().map(|x| (-x / 1.5).exp()).sum();
        let mut want: Vec<f64> = e.values.iter().map(|x| (-x / 1.5).exp() / z).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_weight_decreases_with_temperature() {
        let s = spec(6);
        let ground = ground_state(&s, 10.0).unwrap().state.unwrap();
        let mut last = 1.0;
        for t in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let w1 = fidelity(&thermal_state(&s, 10.0, t).unwrap(), &ground).unwrap();
            assert!(w1 < last);
            last = w1;
        }
    }

    #[test]
    fn parity_commutes_and_signs() {
        for n in 2..=8 {
            let s = spec(n);
            let m = parity_operator(&s);
            assert_eq!(linalg::max_abs(&m.commutator(&build_drift(&s))), 0.0);
            assert_eq!(linalg::max_abs(&m.commutator(&build_control(&s))), 0.0);
            let m2 = m.matrix().dot(m.matrix());
            assert_eq!(m2, Array2::<C64>::eye(s.dim()));
        }
        let s3 = spec(3);
        let plus = product_state(&s3, Sign::Plus);
        let minus = product_state(&s3, Sign::Minus);
        assert!((parity_expectation(plus.vector().unwrap()) - 1.0).abs() < 1e-14);
        assert!((parity_expectation(minus.vector().unwrap()) + 1.0).abs() < 1e-14);
        let m = parity_operator(&s3);
        assert!((minus.expectation(&m).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_validation() {
        let good = Array2::from_diag(&Array1::from(vec![c(0.25), c(0.75)]));
        assert!(QuantumState::density(good, Space::Full).is_ok());
        let bad = Array2::from_diag(&Array1::from(vec![c(-0.25), c(1.25)]));
        assert!(QuantumState::density(bad, Space::Full).is_err());
        assert!(QuantumState::pure(Array1::from(vec![c(1.0), c(1.0)]), Space::Full).is_err());
    }
}
