//! Driven, decaying qubit dispersively coupled to a slow qubit: reduced
//! Hamiltonian coefficient and dephasing rate against their closed forms, and
//! the trajectory error of both reduced orders.

use adiabatic_elim::linalg::trace;
use adiabatic_elim::ops;
use adiabatic_elim::validation::{presets, reduce, trajectory_errors, ReduceOptions, Reduced};

fn main() -> adiabatic_elim::Result<()> {
    let (gamma, chi) = (1.0, 0.01);
    println!("{:>5} {:>24} {:>24} {:>12} {:>12}", "u", "hamiltonian coefficient", "dephasing rate", "sup err 1", "sup err 2");
    for u in [0.0, 0.1, 0.3, 1.0, 3.0] {
        let system = presets::qubit_tls(u, gamma, chi)?;
        let reduced = reduce(&system, &ReduceOptions::default())?;
        let Reduced::Hamiltonian(m) = &reduced else { unreachable!() };
        let e = m.epsilon;
        let coeff = -trace(&(&m.zeno_hamiltonian * ops::sigma_z())).re / 2.0 * e;
        let rate = m.x[(0, 0)].re * e * e;
        let cf = presets::qubit_tls_closed_form(u, gamma, chi);
        let traj = trajectory_errors(&system, &reduced, &ops::plus_state(), 1.0, 50)?;
        println!(
            "{u:>5} {coeff:>24.16e} {rate:>24.16e} {:>12.3e} {:>12.3e}",
            traj.sup_order1, traj.sup_order2
        );
        println!("{:>5} {:>24.16e} {:>24.16e}", "exact", cf.hamiltonian_coefficient, cf.dephasing_rate);
    }
    Ok(())
}
