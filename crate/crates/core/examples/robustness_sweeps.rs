//! Apply the adiabatic, Lyapunov and optimal pulses of a six-site chain to
//! imperfect conditions: finite-field initial states, thermal states, coupling
//! disorder and dephasing.

use ghz_chain::propagation::LindbladOptions;
use ghz_chain::robustness::{self, DesignOptions, Method};
use ghz_chain::spin::ChainSpec;

fn main() -> ghz_chain::Result<()> {
    let spec = ChainSpec::new(6, -1.0)?;
    for method in Method::ALL {
        let pulse = robustness::design_pulse(&spec, method, DesignOptions::default())?;
        println!("{} pulse: t_f = {}, nominal F = {:.6}", method.name(), pulse.horizon, pulse.nominal_fidelity);

        let init = robustness::init_sweep(&pulse, &[2.0, 5.0, 10.0])?;
        let thermal = robustness::thermal_sweep(&pulse, robustness::DESIGN_F0, &[2.0, 5.0, 10.0])?;
        let disorder = robustness::disorder_sweep(&pulse, &[0.0, 0.05, 0.1], 20, 1)?;
        for (label, r) in [("init", &init), ("thermal", &thermal), ("disorder", &disorder)] {
            print!("  {label:<9}");
            for i in 0..r.values.len() {
                print!("  {}={:<5} F={:.4}", r.kind.parameter(), r.values[i], r.mean_f[i]);
            }
            println!();
        }
        if method != Method::Adiabatic {
            let deph = robustness::dephasing_sweep(&pulse, &[0.0, 0.01], LindbladOptions::default())?;
            println!("  dephasing  gamma=0 F={:.4}  gamma=0.01 F={:.4}", deph.mean_f[0], deph.mean_f[1]);
        }
    }
    Ok(())
}
