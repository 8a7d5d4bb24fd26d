//! Load a system document (default: the qubit-TLS example), reduce it and
//! print the first- and second-order generators' key blocks.

use adiabatic_elim::document::SystemDocument;
use adiabatic_elim::validation::{reduce, trajectory_errors, Reduced};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/documents/qubit_tls.json").to_string());
    let doc = SystemDocument::load(std::path::Path::new(&path))?;
    let system = doc.build()?;
    let opts = doc.options.reduce_options();
    let reduced = reduce(&system, &opts)?;
    match &reduced {
        Reduced::Hamiltonian(m) => {
            println!("Zeno hamiltonian (per epsilon):\n{}", m.zeno_hamiltonian);
            println!("X:\n{}", m.x);
            println!("channels: {}", m.channels.len());
        }
        Reduced::Cascade(m) => println!("alpha = {}, beta = {}", m.alpha, m.beta),
    }
    if system.epsilon() > 0.0 {
        let rho = doc.initial_state(system.dims().1)?;
        let t = trajectory_errors(&system, &reduced, &rho, 1.0, 20)?;
        println!("sup errors over one slow time unit: {:.3e} / {:.3e}", t.sup_order1, t.sup_order2);
    }
    Ok(())
}
