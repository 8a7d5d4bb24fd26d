//! The first-order Kraus embedding of the slow state into the joint space:
//! complete positivity and the second-order trace defect, for both coupling
//! types.

use adiabatic_elim::linalg::{partial_trace, trace_norm, Subsystem};
use adiabatic_elim::ops;
use adiabatic_elim::validation::{cptp_check, presets, reduce, ReduceOptions};
use adiabatic_elim::BipartiteSystem;

fn sweep(name: &str, family: impl Fn(f64) -> adiabatic_elim::Result<BipartiteSystem>) -> adiabatic_elim::Result<()> {
    let rho = ops::plus_state();
    for eps in [0.04, 0.02, 0.01, 0.005] {
        let system = family(eps)?;
        let (da, db) = system.dims();
        let reduced = reduce(&system, &ReduceOptions::default())?;
        let back = partial_trace(&reduced.embed(&rho), da, db, Subsystem::A)?;
        let cp = cptp_check(|x| reduced.embed(x), db);
        println!(
            "{name} eps = {eps}: |tr_A embed(rho) - rho| = {:.3e}, Choi min eigenvalue {:.1e}, trace defect {:.3e}",
            trace_norm(&(back - &rho)),
            cp.choi_min_eig,
            cp.trace_defect
        );
    }
    Ok(())
}

fn main() -> adiabatic_elim::Result<()> {
    sweep("hamiltonian", |e| presets::qubit_tls(0.3, 1.0, e))?;
    sweep("cascade", |e| presets::squeezed(1.0, 0.05, 12, None, e))
}
