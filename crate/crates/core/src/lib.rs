pub mod cascade;
pub mod cli;
pub mod document;
pub mod error;
pub mod hamiltonian;
pub mod lindblad;
pub mod linalg;
pub mod ops;
pub mod report;
pub mod system;
pub mod tolerances;
pub mod validation;

pub use error::{Error, Result};
pub use system::{BipartiteSystem, Coupling, Truncation};
pub use tolerances::Tolerances;
