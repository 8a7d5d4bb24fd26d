//! Squeezed cavity output driving a slow qubit: `alpha`, `beta`, the channel
//! coefficients and the Fock truncation audit.

use adiabatic_elim::validation::{presets, reduce, ReduceOptions, Reduced};

fn main() -> adiabatic_elim::Result<()> {
    let (kappa, g) = (1.0, 0.1);
    let system = presets::squeezed(kappa, g, presets::SQUEEZED_FOCK_N, None, 0.02)?;
    let Reduced::Cascade(m) = reduce(&system, &ReduceOptions::default())? else { unreachable!() };
    let (alpha, beta) = presets::squeezed_alpha_beta(kappa, g);
    println!("alpha = {:.12} {:+.1e}i (exact {alpha:.12})", m.alpha.re, m.alpha.im);
    println!("beta  = {:.12} {:+.1e}i (exact {beta:.12})", m.beta.re, m.beta.im);
    let c = m.channel_coeffs;
    println!("x1 = {:.10}, y1 = {:.10}, x2 = {:.1e}, y2 = {:.1e}", c.x1, c.y1, c.x2.norm(), c.y2.norm());
    println!("(s+1)s - 4|beta|^2 = {:.2e}", m.diagnostics.channel_condition);
    if let Some(change) = m.diagnostics.truncation_change {
        println!("relative change on doubling the truncation: {change:.2e}");
    }
    match presets::squeezed(kappa, 0.3, 20, None, 0.02) {
        Err(e) => println!("g = 0.3 rejected: {e}"),
        Ok(_) => println!("g = 0.3 accepted"),
    }
    Ok(())
}
