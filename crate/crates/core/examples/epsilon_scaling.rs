//! Sweep the time-scale ratio and fit how fast the first- and second-order
//! reduced models converge to the full dynamics.

use adiabatic_elim::ops;
use adiabatic_elim::validation::{epsilon_scaling, presets, ReduceOptions};

fn main() -> adiabatic_elim::Result<()> {
    let eps = [0.02, 0.01, 0.005, 0.0025];
    let r = epsilon_scaling(|e| presets::qubit_tls(0.3, 1.0, e), &eps, 1.0, 50, &ops::plus_state(), &ReduceOptions::default())?;
    println!("{:>8} {:>12} {:>12}", "eps", "order 1", "order 2");
    for i in 0..r.epsilons.len() {
        println!("{:>8} {:>12.4e} {:>12.4e}", r.epsilons[i], r.errors_order1[i], r.errors_order2[i]);
    }
    println!("slopes: {:?} / {:?}, flags {:?}", r.fitted_slope_order1, r.fitted_slope_order2, r.flags);
    Ok(())
}
