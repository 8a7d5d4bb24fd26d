//! Exchange coupling `A ⊗ B^† + A^† ⊗ B` between a damped qubit and a slow
//! three-level system, with the second-order model checked for the Lindblad
//! form and against the full dynamics.

use adiabatic_elim::hamiltonian::HamiltonianCoupling;
use adiabatic_elim::lindblad::{gks_decompose, Jump, SubsystemSpec};
use adiabatic_elim::ops;
use adiabatic_elim::validation::{reduce, trajectory_errors, ReduceOptions};
use adiabatic_elim::{BipartiteSystem, Coupling};

fn main() -> adiabatic_elim::Result<()> {
    let fast = SubsystemSpec::new(2, ops::sigma_x().scale(0.4), vec![Jump { operator: ops::sigma_minus(), rate: 1.0 }])?;
    let slow = SubsystemSpec::new(3, ops::number(3).scale(0.5), vec![])?;
    let coupling = HamiltonianCoupling::resonant(ops::sigma_minus(), ops::annihilation(3))?;
    let rho = ops::maximally_mixed(3);
    for eps in [0.04, 0.02, 0.01] {
        let system = BipartiteSystem::new(fast.clone(), slow.clone(), Coupling::Hamiltonian(coupling.clone()), eps)?;
        let reduced = reduce(&system, &ReduceOptions::default())?;
        let gks = gks_decompose(&reduced.generator(2))?;
        let traj = trajectory_errors(&system, &reduced, &rho, 1.0, 50)?;
        println!(
            "eps = {eps}: Lindblad form {} (Kossakowski min eigenvalue {:.1e}), sup errors {:.3e} / {:.3e}",
            gks.is_lindblad, gks.min_eigenvalue, traj.sup_order1, traj.sup_order2
        );
    }
    Ok(())
}
