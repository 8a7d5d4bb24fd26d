use std::fmt;
use std::sync::Arc;

use crate::cascade::CascadeCoupling;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianCoupling;
use crate::lindblad::SubsystemSpec;
use crate::linalg::Subsystem;

#[derive(Debug, Clone)]
pub enum Coupling {
    Hamiltonian(HamiltonianCoupling),
    Cascade(CascadeCoupling),
}

/// Rebuilds the same system at a different Fock truncation.
pub type Refine = Arc<dyn Fn(usize) -> Result<BipartiteSystem> + Send + Sync>;

/// Fock truncation of one subsystem, with a way to rebuild the system at a
/// larger cutoff for the convergence audit.
#[derive(Clone)]
pub struct Truncation {
    pub side: Subsystem,
    pub fock_n: usize,
    pub refine: Refine,
}

impl fmt::Debug for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Truncation").field("side", &self.side).field("fock_n", &self.fock_n).finish_non_exhaustive()
    }
}

/// Fast subsystem `A`, slow subsystem `B`, their coupling and the time-scale
/// ratio `epsilon`.
#[derive(Debug, Clone)]
pub struct BipartiteSystem {
    a: SubsystemSpec,
    b: SubsystemSpec,
    coupling: Coupling,
    epsilon: f64,
    truncation: Option<Truncation>,
}

impl BipartiteSystem {
    pub fn new(a: SubsystemSpec, b: SubsystemSpec, coupling: Coupling, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be finite and nonnegative, got {epsilon}")));
        }
        let (da, db) = match &coupling {
            Coupling::Hamiltonian(h) => h.dims(),
            Coupling::Cascade(c) => (c.a().nrows(), c.b().nrows()),
        };
        if da != a.dim() || db != b.dim() {
            return Err(Error::Dimension(format!(
                "coupling acts on {da} x {db}, subsystems have dimensions {} x {}",
                a.dim(),
                b.dim()
            )));
        }
        Ok(BipartiteSystem { a, b, coupling, epsilon, truncation: None })
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = Some(truncation);
        self
    }

    pub fn fast(&self) -> &SubsystemSpec {
        &self.a
    }

    pub fn slow(&self) -> &SubsystemSpec {
        &self.b
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.dim(), self.b.dim())
    }

    /// Same system with a different `epsilon`; the coupling operators are kept.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut s = BipartiteSystem::new(self.a.clone(), self.b.clone(), self.coupling.clone(), epsilon)?;
        s.truncation = self.truncation.clone();
        Ok(s)
    }
}
