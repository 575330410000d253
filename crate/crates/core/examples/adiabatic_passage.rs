//! Adiabatic passage from the large-field ground state to the GHZ state with
//! an exponentially decaying field, for a few chain lengths.
//!
//! ```text
//! cargo run --release --example adiabatic_passage -- 2 4 6
//! ```

use ghz_chain::adiabatic::{self, AdiabaticOptions};
use ghz_chain::propagation::PulseSchedule;
use ghz_chain::spin::ChainSpec;

fn main() -> ghz_chain::Result<()> {
    let sizes: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let sizes = if sizes.is_empty() { vec![2, 4, 6] } else { sizes };
    let schedule = PulseSchedule::exponential(10.0, 0.1)?;
    for n in sizes {
        let spec = ChainSpec::new(n, -1.0)?;
        let opts = AdiabaticOptions { track_excited: n <= 6, ..Default::default() };
        let r = adiabatic::run_adiabatic(&spec, &schedule, 0.99, opts)?;
        let excited = r.excited.as_ref().map(|x| x.iter().cloned().fold(0.0, f64::max));
        println!(
            "N = {n:>2} (block dim {:>3}): t_0.99 = {:>7}, F(100) = {:.6}, peak excited population {:?}",
            r.block_dim,
            r.t_threshold.map(|t| format!("{t:.2}")).unwrap_or_else(|| "never".into()),
            r.asymptotic_f,
            excited
        );
        if n == 2 {
            for line in r.trajectory.to_csv().lines().take(4) {
                println!("{line}");
            }
            println!("...");
        }
    }
    Ok(())
}
