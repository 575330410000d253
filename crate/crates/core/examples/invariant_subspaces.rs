//! Split the Hilbert space into blocks invariant under both Hamiltonian terms,
//! find the block holding the reachable GHZ state, and compute the Lie algebra
//! generated inside it.

use ghz_chain::spin::{self, ChainSpec, Sign};
use ghz_chain::symmetry::{self, DecompositionParams, TargetSector, LIE_TOLERANCE};

fn main() -> ghz_chain::Result<()> {
    for n in 2..=6 {
        let spec = ChainSpec::new(n, -1.0)?;
        let decomp = symmetry::decompose(&spin::build_drift(&spec), &spin::build_control(&spec), DecompositionParams::default())?;
        let mut dims = decomp.block_dims();
        dims.sort_unstable_by(|a, b| b.cmp(a));
        let sector = TargetSector::build(&spec, Sign::Plus)?;
        println!(
            "N = {n}: {} blocks, largest {:?}, GHZ_{} block dim {}",
            dims.len(),
            &dims[..dims.len().min(4)],
            sector.verdict.target,
            sector.block_dim()
        );
    }

    let spec = ChainSpec::new(4, -1.0)?;
    let sector = TargetSector::build(&spec, Sign::Plus)?;
    let h0 = symmetry::restrict(&spin::build_drift(&spec), &sector.decomposition, sector.block)?;
    let h1 = symmetry::restrict(&spin::build_control(&spec), &sector.decomposition, sector.block)?;
    let lie = symmetry::lie_closure(&[h0, h1], LIE_TOLERANCE, None, false)?;
    println!("N = 4 GHZ block: dynamical Lie algebra has dimension {} (full u(6) would be 36)", lie.dimension);

    for (j, f) in [(-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (1.0, 1.0)] {
        for n in [4, 5] {
            let v = symmetry::classify_reachable_ghz(Sign::of(j).unwrap(), Sign::of(f).unwrap(), n)?;
            println!("J = {j:+}, f0 = {f:+}, N = {n}: reachable GHZ_{} ({:?})", v.target, v.rationale);
        }
    }
    Ok(())
}
