//! Ground energy and gap of the N=10 GHZ block against the field, the
//! large-field slopes, and the relative gap of an exponential ramp.

use ghz_chain::adiabatic;
use ghz_chain::propagation::{ControlSystem, PulseSchedule};
use ghz_chain::spin::{ChainSpec, Sign};
use ghz_chain::symmetry::TargetSector;

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
}

fn main() -> ghz_chain::Result<()> {
    let spec = ChainSpec::new(10, -1.0)?;
    let sector = TargetSector::build(&spec, Sign::Plus)?;
    let system = ControlSystem::for_sector(&spec, &sector)?;
    println!("N = 10 GHZ block dimension {}", system.dim());

    let grid: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    let scan = adiabatic::gap_scan(&system, &grid)?;
    println!("{:>6} {:>12} {:>10}", "f", "eps1", "gap");
    for i in (0..grid.len()).step_by(2) {
        println!("{:>6.1} {:>12.4} {:>10.4}", grid[i], scan.epsilon1[i], scan.gap[i]);
    }
    let tail = 10..grid.len();
    println!(
        "slopes on [5,10]: eps1 {:.3}, gap {:.3}",
        slope(&grid[tail.clone()], &scan.epsilon1[tail.clone()]),
        slope(&grid[tail.clone()], &scan.gap[tail])
    );

    let mu = 0.1;
    let sched = PulseSchedule::exponential(10.0, mu)?;
    let times: Vec<f64> = (0..=60).map(|i| i as f64).collect();
    let e = adiabatic::adiabaticity_metric(&system, &sched, &times)?;
    let peak = e.iter().cloned().fold(0.0, f64::max);
    println!("f = 10 exp(-{mu} t): E(0) = {:.4} (2.5 mu = {:.4}), peak E = {peak:.4}", e[0], 2.5 * mu);
    Ok(())
}
