//! Qubit pumped in both directions exchanging photon pairs with a slow cavity:
//! steady-state Bloch vector and the second-order `X`, `Y` matrices against
//! their closed forms, plus the leading-order table.

use adiabatic_elim::linalg::{trace, ComplexMatrix, C64};
use adiabatic_elim::ops;
use adiabatic_elim::validation::{presets, reduce, ReduceOptions, Reduced};

fn show(name: &str, m: &ComplexMatrix) {
    println!("{name}:");
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:>11.3e}{:+.3e}i", m[(i, j)].re, m[(i, j)].im)).collect();
        println!("  {}", row.join("  "));
    }
}

fn main() -> adiabatic_elim::Result<()> {
    let (u, km, kp, g, chi) = (0.05, 1.0, 0.01, 1e-3, 1e-3);
    let system = presets::two_photon(u, km, kp, g, chi, presets::TWO_PHOTON_FOCK_N)?;
    let Reduced::Hamiltonian(m) = reduce(&system, &ReduceOptions::default())? else { unreachable!() };
    let (x, z) = presets::two_photon_bloch(u, km, kp);
    println!(
        "Bloch x = {:.12} (exact {x:.12}), z = {:.12} (exact {z:.12})",
        trace(&(ops::sigma_x() * &m.rho_a)).re,
        trace(&(ops::sigma_z() * &m.rho_a)).re
    );
    let e2 = C64::new(m.epsilon * m.epsilon, 0.0);
    show("pipeline X", &(&m.x * e2));
    show("closed-form X", &presets::two_photon_x(u, km, kp, g, chi));
    show("leading-order X", &presets::two_photon_x_truncated(u, km, kp, g, chi));
    show("pipeline Y", &(&m.y * e2));
    show("closed-form Y", &presets::two_photon_y(u, km, kp, g, chi));
    println!("channels: {}", m.channels.len());
    Ok(())
}
