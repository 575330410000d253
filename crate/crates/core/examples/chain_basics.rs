//! Build a four-site chain, inspect its Hamiltonian, and look at the GHZ
//! states and the large-field ground state.

use ghz_chain::spin::{self, ChainSpec, Sign};

fn main() -> ghz_chain::Result<()> {
    let spec = ChainSpec::new(4, -1.0)?;
    println!("N = {}, J = {}, dim = {}", spec.n_sites(), spec.coupling(), spec.dim());

    let drift = spin::drift_matrix(spec.n_sites());
    let diag: Vec<f64> = drift.diag().to_vec();
    println!("Sum Z_n Z_n+1 on the computational basis: {diag:?}");

    for k in 1..=4 {
        let ghz = spin::ghz_state(&spec, k)?;
        let parity = spin::parity_expectation(ghz.vector().expect("pure"));
        println!("GHZ_{k}: parity {parity:+.0}");
    }

    for f0 in [1.0, 10.0, 100.0] {
        let g = spin::ground_state(&spec, f0)?;
        let plus = spin::product_state(&spec, Sign::Plus);
        let overlap = spin::fidelity(g.state.as_ref().expect("nondegenerate"), &plus)?;
        println!("f0 = {f0:>5}: E0 = {:>9.4}, gap = {:.4}, |<+...+|g>|^2 = {overlap:.6}", g.energy, g.gap);
    }
    Ok(())
}
