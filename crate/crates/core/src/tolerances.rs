use serde::{Deserialize, Serialize};

/// Numerical thresholds used across the pipeline. Every report embeds the set
/// it was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Hermiticity and positivity checks, relative to `max(1, ||X||_F)`.
    pub structural: f64,
    /// Singular values below `nullity * sigma_max` count towards the kernel.
    pub nullity: f64,
    /// Accepted residual of the zero-trace solve, relative to `||W||_F`.
    pub solve_residual: f64,
    /// Slack on `(s+1) s >= 4|beta|^2`.
    pub conjecture: f64,
    /// Slack on `Re(alpha) >= 0`.
    pub negative_alpha: f64,
    /// Relative change of alpha and beta accepted by the Fock doubling audit.
    pub fock_audit: f64,
    /// Channels whose factor column is below `channel_rank * ||X||^(1/2)` are dropped.
    pub channel_rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            structural: 1e-9,
            nullity: 1e-8,
            solve_residual: 1e-9,
            conjecture: 1e-8,
            negative_alpha: 1e-9,
            fock_audit: 1e-8,
            channel_rank: 1e-9,
        }
    }
}

impl Tolerances {
    /// Absolute structural tolerance for a matrix of the given Frobenius norm.
    pub fn structural_for(&self, norm: f64) -> f64 {
        self.structural * norm.max(1.0)
    }
}
