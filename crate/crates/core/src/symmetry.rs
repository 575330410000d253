//! Invariant subspaces, Lie closure and parity-based reachability.
//!
//! Blocks come from the eigenbasis `V` of `αH0 + βH1`: two eigenvectors are
//! adjacent when either rotated Hamiltonian couples them above `δ`, and the
//! blocks are the connected components of that graph.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, I};
use crate::spin::{self, ChainSpec, Operator, QuantumState, Sign, Space, DEGENERACY_TOLERANCE};

pub const MEMBERSHIP_TOLERANCE: f64 = 1e-8;
pub const LIE_TOLERANCE: f64 = 1e-10;

const RETRY_PARAMS: [(f64, f64); 3] = [(2.0, 3.0), (1.0, std::f64::consts::SQRT_2), (std::f64::consts::FRAC_PI_3, 1.0)];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompositionParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl Default for DecompositionParams {
    fn default() -> Self {
        DecompositionParams { alpha: 2.0, beta: 3.0, delta: 1e-8 }
    }
}

#[derive(Clone, Debug)]
enum Basis {
    Real(Array2<f64>),
    Complex(Array2<C64>),
}

#[derive(Clone, Debug)]
pub struct SubspaceDecomposition {
    rotation: Basis,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    params: DecompositionParams,
}

impl SubspaceDecomposition {
    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    /// Index sets of `V` columns, ordered by size then smallest index.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn block_of_column(&self, column: usize) -> usize {
        self.block_of[column]
    }

    /// Parameters actually used (after any degeneracy retry).
    pub fn params(&self) -> DecompositionParams {
        self.params
    }

    pub fn rotation(&self) -> Array2<C64> {
        match &self.rotation {
            Basis::Real(v) => linalg::to_complex(v),
            Basis::Complex(v) => v.clone(),
        }
    }

    fn check_block(&self, block: usize) -> Result<()> {
        if block >= self.blocks.len() {
            return Err(Error::invalid(format!("block {block} out of range (have {})", self.blocks.len())));
        }
        Ok(())
    }

    fn real_block_basis(&self, block: usize) -> Option<Array2<f64>> {
        match &self.rotation {
            Basis::Real(v) => Some(v.select(ndarray::Axis(1), &self.blocks[block])),
            Basis::Complex(_) => None,
        }
    }

    /// Columns of `V` spanning `block` (`2^N × dim`).
    pub fn block_basis(&self, block: usize) -> Result<Array2<C64>> {
        self.check_block(block)?;
        Ok(match &self.rotation {
            Basis::Real(v) => linalg::to_complex(&v.select(ndarray::Axis(1), &self.blocks[block])),
            Basis::Complex(v) => v.select(ndarray::Axis(1), &self.blocks[block]),
        })
    }

    /// `V†ψ`.
    pub fn coefficients(&self, v: &Array1<C64>) -> Array1<C64> {
        match &self.rotation {
            Basis::Real(r) => {
                let re = r.t().dot(&v.mapv(|z| z.re));
                let im = r.t().dot(&v.mapv(|z| z.im));
                Array1::from_shape_fn(re.len(), |i| C64::new(re[i], im[i]))
            }
            Basis::Complex(c) => linalg::dagger(c).dot(v),
        }
    }

    /// Squared projection of a full-space vector on every block.
    pub fn block_weights(&self, v: &Array1<C64>) -> Vec<f64> {
        let c = self.coefficients(v);
        self.blocks.iter().map(|b| b.iter().map(|&i| c[i].norm_sqr()).sum()).collect()
    }
}

fn union_find_root(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn link_edges<T>(rotated: &Array2<T>, delta: f64, parent: &mut [usize], abs: impl Fn(&T) -> f64) {
    let n = rotated.nrows();
    for i in 0..n {
        let row = rotated.row(i);
        for j in (i + 1)..n {
            if abs(&row[j]) > delta {
                let (a, b) = (union_find_root(parent, i), union_find_root(parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
}

fn min_spacing(values: &Array1<f64>) -> f64 {
    values.windows(2).into_iter().map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Block-diagonalizes the pair `(H0, H1)`; see the module docs.
pub fn decompose(h0: &Operator, h1: &Operator, params: DecompositionParams) -> Result<SubspaceDecomposition> {
    if !h0.is_hermitian() || !h1.is_hermitian() {
        return Err(Error::invalid("decompose needs Hermitian operators"));
    }
    if h0.dim() != h1.dim() {
        return Err(Error::DimensionMismatch { expected: h0.dim(), found: h1.dim() });
    }
    if !(params.delta > 0.0) {
        return Err(Error::invalid(format!("threshold delta must be positive, got {}", params.delta)));
    }
    let n = h0.dim();
    let mut attempts = vec![(params.alpha, params.beta)];
    attempts.extend(RETRY_PARAMS.iter().copied().filter(|p| *p != (params.alpha, params.beta)));
    let real = h0.real_part_if_real().zip(h1.real_part_if_real());

    let mut last_spacing = 0.0;
    for (alpha, beta) in attempts {
        let mut parent: Vec<usize> = (0..n).collect();
        let rotation = match &real {
            Some((r0, r1)) => {
                let e = linalg::eigh_real(&(r0 * alpha + r1 * beta))?;
                last_spacing = min_spacing(&e.values);
                let scale = e.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                if last_spacing < DEGENERACY_TOLERANCE * scale {
                    continue;
                }
                for r in [r0, r1] {
                    let rotated = e.vectors.t().dot(&linalg::sparse_aware_dot(r, &e.vectors));
                    link_edges(&rotated, params.delta, &mut parent, |x: &f64| x.abs());
                }
                Basis::Real(e.vectors)
            }
            None => {
                let e = h0.combine(alpha, h1, beta)?.eigh()?;
                last_spacing = min_spacing(&e.values);
                let scale = e.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                if last_spacing < DEGENERACY_TOLERANCE * scale {
                    continue;
                }
                let vd = linalg::dagger(&e.vectors);
                for h in [h0, h1] {
                    let rotated = vd.dot(&h.matrix().dot(&e.vectors));
                    link_edges(&rotated, params.delta, &mut parent, |z: &C64| z.norm());
                }
                Basis::Complex(e.vectors)
            }
        };
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let root = union_find_root(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
        blocks.sort_by_key(|b| (b.len(), b[0]));
        let mut block_of = vec![0; n];
        for (k, b) in blocks.iter().enumerate() {
            for &i in b {
                block_of[i] = k;
            }
        }
        return Ok(SubspaceDecomposition {
            rotation,
            blocks,
            block_of,
            params: DecompositionParams { alpha, beta, delta: params.delta },
        });
    }
    Err(Error::Degenerate(format!(
        "alpha*H0 + beta*H1 has degenerate eigenvalues for every retry pair (smallest spacing {last_spacing:.3e})"
    )))
}

/// `B† A B` for an explicit orthonormal basis `B`.
pub fn restrict_to_basis(op: &Operator, basis: &Array2<C64>) -> Result<Operator> {
    if basis.nrows() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: basis.nrows() });
    }
    let mut m = linalg::dagger(basis).dot(&op.matrix().dot(basis));
    if op.is_hermitian() {
        linalg::symmetrize(&mut m);
        return Ok(Operator::from_hermitian_unchecked(m));
    }
    Operator::new(m)
}

/// Restriction of `op` to `block` in the `V` basis.
pub fn restrict(op: &Operator, decomp: &SubspaceDecomposition, block: usize) -> Result<Operator> {
    decomp.check_block(block)?;
    if op.dim() != decomp.dim() {
        return Err(Error::DimensionMismatch { expected: decomp.dim(), found: op.dim() });
    }
    if let (Some(b), Some(a)) = (decomp.real_block_basis(block), op.real_part_if_real()) {
        let mut m = linalg::to_complex(&b.t().dot(&linalg::sparse_aware_dot(&a, &b)));
        if op.is_hermitian() {
            linalg::symmetrize(&mut m);
            return Ok(Operator::from_hermitian_unchecked(m));
        }
        return Operator::new(m);
    }
    restrict_to_basis(op, &decomp.block_basis(block)?)
}

/// Block basis rotated to diagonalize `op` on the block: eigenvalues ascending,
/// each column phase-fixed as a full-space vector.
pub fn block_eigenbasis(op: &Operator, decomp: &SubspaceDecomposition, block: usize) -> Result<Array2<C64>> {
    let b = decomp.block_basis(block)?;
    let e = restrict(op, decomp, block)?.eigh()?;
    let mut basis = b.dot(&e.vectors);
    for mut col in basis.columns_mut() {
        let mut v = col.to_owned();
        spin::fix_phase(&mut v);
        col.assign(&v);
    }
    Ok(basis)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockLocation {
    pub block: usize,
    pub leakage: f64,
    /// `leakage ≤ MEMBERSHIP_TOLERANCE`.
    pub confined: bool,
    pub weights: Vec<f64>,
}

pub fn locate_state(state: &QuantumState, decomp: &SubspaceDecomposition) -> Result<BlockLocation> {
    let v = state.vector().ok_or_else(|| Error::invalid("locate_state needs a pure state"))?;
    if state.space() != Space::Full || v.len() != decomp.dim() {
        return Err(Error::invalid("locate_state needs a full-space state of matching dimension"));
    }
    let weights = decomp.block_weights(v);
    let (block, best) = weights
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, w)| if w > acc.1 { (i, w) } else { acc });
    let leakage = (1.0 - best).max(0.0);
    Ok(BlockLocation { block, leakage, confined: leakage <= MEMBERSHIP_TOLERANCE, weights })
}

/// Coordinates of a full-space state in `block`; fails when it is not confined there.
pub fn to_block(state: &QuantumState, decomp: &SubspaceDecomposition, block: usize) -> Result<QuantumState> {
    let b = decomp.block_basis(block)?;
    if state.space() != Space::Full || state.dim() != decomp.dim() {
        return Err(Error::invalid("to_block needs a full-space state of matching dimension"));
    }
    match state.vector() {
        Some(v) => {
            let c = linalg::dagger(&b).dot(v);
            let leak = 1.0 - c.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if leak > MEMBERSHIP_TOLERANCE {
                return Err(Error::invalid(format!("state leaks {leak:.3e} out of block {block}")));
            }
            QuantumState::normalized(c, Space::Block(block))
        }
        None => {
            let mut rho = linalg::dagger(&b).dot(&state.density_matrix().dot(&b));
            let tr: f64 = rho.diag().iter().map(|z| z.re).sum();
            if 1.0 - tr > MEMBERSHIP_TOLERANCE {
                return Err(Error::invalid(format!("state leaks {:.3e} out of block {block}", 1.0 - tr)));
            }
            linalg::symmetrize(&mut rho);
            Ok(QuantumState::density_unchecked(rho / C64::new(tr, 0.0), Space::Block(block)))
        }
    }
}

/// Full-space embedding of a block state.
pub fn lift(state: &QuantumState, decomp: &SubspaceDecomposition) -> Result<QuantumState> {
    let Space::Block(block) = state.space() else {
        return Ok(state.clone());
    };
    let b = decomp.block_basis(block)?;
    if b.ncols() != state.dim() {
        return Err(Error::DimensionMismatch { expected: b.ncols(), found: state.dim() });
    }
    Ok(match state.vector() {
        Some(v) => QuantumState::pure_unchecked(b.dot(v), Space::Full),
        None => QuantumState::density_unchecked(b.dot(&state.density_matrix()).dot(&linalg::dagger(&b)), Space::Full),
    })
}

#[derive(Clone, Debug)]
pub struct LieClosureReport {
    pub dimension: usize,
    /// Orthonormal skew-Hermitian basis, when retention was requested.
    pub generators: Option<Vec<Array2<C64>>>,
    pub converged: bool,
}

struct RealSpan {
    basis: Vec<Vec<f64>>,
}

impl RealSpan {
    fn vectorize(m: &Array2<C64>) -> Vec<f64> {
        m.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// Adds the normalized residual of `v` if it exceeds `tol`; returns it.
    fn try_add(&mut self, mut v: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
        let norm = Self::dot(&v, &v).sqrt();
        if norm < tol {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        for _ in 0..2 {
            for q in &self.basis {
                let c = Self::dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r = Self::dot(&v, &v).sqrt();
        if r <= tol {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= r);
        self.basis.push(v.clone());
        Some(v)
    }
}

fn devectorize(v: &[f64], d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| {
        let k = 2 * (i * d + j);
        C64::new(v[k], v[k + 1])
    })
}

/// Real Lie algebra generated by `{iH_k}`: breadth-first commutators,
/// orthonormalized by modified Gram-Schmidt with one re-orthogonalization pass.
/// `cap` defaults to `dim²`.
pub fn lie_closure(generators: &[Operator], tol: f64, cap: Option<usize>, retain: bool) -> Result<LieClosureReport> {
    let Some(first) = generators.first() else {
        return Err(Error::invalid("lie_closure needs at least one generator"));
    };
    let d = first.dim();
    if generators.iter().any(|g| g.dim() != d || !g.is_hermitian()) {
        return Err(Error::invalid("generators must be Hermitian and share one dimension"));
    }
    let cap = cap.unwrap_or(d * d);
    let mut span = RealSpan { basis: Vec::new() };
    let mut elements: Vec<Array2<C64>> = Vec::new();
    let mut converged = true;
    'outer: {
        for g in generators {
            let m = g.matrix() * I;
            if let Some(v) = span.try_add(RealSpan::vectorize(&m), tol) {
                elements.push(devectorize(&v, d));
                if elements.len() >= cap {
                    converged = false;
                    break 'outer;
                }
            }
        }
        let mut i = 1;
        while i < elements.len() {
            for j in 0..i {
                let c = linalg::commutator(&elements[i], &elements[j]);
                if let Some(v) = span.try_add(RealSpan::vectorize(&c), tol) {
                    elements.push(devectorize(&v, d));
                    if elements.len() >= cap {
                        converged = false;
                        break 'outer;
                    }
                }
            }
            i += 1;
        }
    }
    Ok(LieClosureReport { dimension: elements.len(), generators: retain.then_some(elements), converged })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReachabilityCase {
    /// `J < 0`, `Jf0 < 0`.
    FerroAlignedField,
    /// `J < 0`, `Jf0 > 0`, `N` even.
    FerroOpposedFieldEven,
    /// `J < 0`, `Jf0 > 0`, `N` odd.
    FerroOpposedFieldOdd,
    /// `J > 0`, `Jf0 < 0`.
    AntiferroAlignedField,
    /// `J > 0`, `Jf0 > 0`, `N` even.
    AntiferroOpposedFieldEven,
    /// `J > 0`, `Jf0 > 0`, `N` odd.
    AntiferroOpposedFieldOdd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReachabilityVerdict {
    /// GHZ index `k` in `1..=4`.
    pub target: usize,
    pub parity: i8,
    pub rationale: ReachabilityCase,
}

impl ReachabilityVerdict {
    /// Product state the ground state tends to for `|f0| → ∞`.
    pub fn initial_sign(self) -> Sign {
        match self.rationale {
            ReachabilityCase::FerroAlignedField | ReachabilityCase::AntiferroAlignedField => Sign::Plus,
            _ => Sign::Minus,
        }
    }
}

/// GHZ target reachable by parity from the large-field ground state.
pub fn classify_reachable_ghz(j_sign: Sign, f0_sign: Sign, n_sites: usize) -> Result<ReachabilityVerdict> {
    if n_sites < 2 {
        return Err(Error::invalid(format!("chain needs at least 2 sites, got {n_sites}")));
    }
    use ReachabilityCase::*;
    let aligned = j_sign != f0_sign; // J f0 < 0
    let even = n_sites.is_multiple_of(2);
    let (target, rationale) = match (j_sign, aligned, even) {
        (Sign::Minus, true, _) => (1, FerroAlignedField),
        (Sign::Minus, false, true) => (1, FerroOpposedFieldEven),
        (Sign::Minus, false, false) => (2, FerroOpposedFieldOdd),
        (Sign::Plus, true, _) => (3, AntiferroAlignedField),
        (Sign::Plus, false, true) => (3, AntiferroOpposedFieldEven),
        (Sign::Plus, false, false) => (4, AntiferroOpposedFieldOdd),
    };
    let parity = if target % 2 == 1 { 1 } else { -1 };
    Ok(ReachabilityVerdict { target, parity, rationale })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

pub fn parity_of(state: &QuantumState) -> Result<Parity> {
    let v = state.vector().ok_or_else(|| Error::invalid("parity_of needs a pure state"))?;
    if state.space() != Space::Full || !v.len().is_power_of_two() {
        return Err(Error::invalid("parity_of needs a full-space state"));
    }
    let m = spin::parity_expectation(v);
    Ok(if m > 1.0 - 1e-9 {
        Parity::Even
    } else if m < -(1.0 - 1e-9) {
        Parity::Odd
    } else {
        Parity::Mixed
    })
}

/// The block holding the reachable GHZ target and the large-field initial state.
#[derive(Clone, Debug)]
pub struct TargetSector {
    pub decomposition: SubspaceDecomposition,
    pub block: usize,
    pub verdict: ReachabilityVerdict,
    pub target: QuantumState,
    pub initial_product: QuantumState,
}

impl TargetSector {
    pub fn build(spec: &ChainSpec, f0_sign: Sign) -> Result<Self> {
        let j_sign = Sign::of(spec.coupling()).expect("nonzero coupling");
        let verdict = classify_reachable_ghz(j_sign, f0_sign, spec.n_sites())?;
        let decomposition = decompose(&spin::build_drift(spec), &spin::build_control(spec), DecompositionParams::default())?;
        let target = spin::ghz_state(spec, verdict.target)?;
        let initial_product = spin::product_state(spec, verdict.initial_sign());
        let t = locate_state(&target, &decomposition)?;
        let p = locate_state(&initial_product, &decomposition)?;
        if !t.confined || !p.confined || t.block != p.block {
            return Err(Error::invalid(format!(
                "target (block {}, leakage {:.2e}) and initial state (block {}, leakage {:.2e}) do not share a block",
                t.block, t.leakage, p.block, p.leakage
            )));
        }
        Ok(TargetSector { decomposition, block: t.block, verdict, target, initial_product })
    }

    pub fn block_dim(&self) -> usize {
        self.decomposition.blocks()[self.block].len()
    }
}
