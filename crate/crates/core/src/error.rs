use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator is not Hermitian: anti-Hermitian part {defect:.3e} exceeds tolerance {tol:.3e} ({what})")]
    NotHermitian { what: String, defect: f64, tol: f64 },

    #[error("steady state is not unique: numerical nullity {nullity} (expected 1)")]
    NonUniqueSteadyState { nullity: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {min_eig:.3e} below -{tol:.3e} ({what})")]
    NotPositive { what: String, min_eig: f64, tol: f64 },

    #[error("linear solve failed: residual {residual:.3e} above tolerance {tol:.3e} ({what})")]
    SolveFailed { what: String, residual: f64, tol: f64 },

    #[error("generator is not trace preserving: defect {defect:.3e}")]
    NotTracePreserving { defect: f64 },

    #[error("kernel inclusion ker(rho) in ker(X) violated: |X v| = {defect:.3e} ({what})")]
    KernelInclusion { what: String, defect: f64 },

    #[error("Re(alpha) = {re_alpha:.6e} is negative beyond tolerance")]
    NegativeAlpha { re_alpha: f64 },

    #[error(
        "channel condition (s+1)s >= 4|beta|^2 violated: alpha = {alpha_re:.17e}{alpha_im:+.17e}i, \
         beta = {beta_re:.17e}{beta_im:+.17e}i, defect = {defect:.6e}"
    )]
    ConjectureViolation {
        alpha_re: f64,
        alpha_im: f64,
        beta_re: f64,
        beta_im: f64,
        defect: f64,
    },

    #[error(
        "Fock truncation at N = {n} not converged: relative change {change:.3e} at N = {}, \
         tolerance {tol:.1e}; increase the truncation", 2 * n
    )]
    TruncationNotConverged { n: usize, change: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error, skipping stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_conjecture_violation(&self) -> bool {
        matches!(self.root(), Error::ConjectureViolation { .. })
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
