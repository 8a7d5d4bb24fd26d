//! Standard operator builders.
//!
//! Qubits use the ordered basis `(|e>, |g>)`, so `sigma_z = diag(1, -1)` and
//! `sigma_minus = |g><e|`. Truncated oscillators use Fock states `|0>..|N-1>`.

use crate::linalg::{ComplexMatrix, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zero(d: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(d, d)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// `|g><e|`
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

/// `|e><g|`
pub fn sigma_plus() -> ComplexMatrix {
    sigma_minus().transpose()
}

/// `|e><e|`
pub fn excited_projector() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
}

/// Truncated annihilation operator, `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(n: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt(), 0.0);
    }
    a
}

pub fn creation(n: usize) -> ComplexMatrix {
    annihilation(n).adjoint()
}

pub fn number(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(i as f64, 0.0) } else { c(0.0, 0.0) })
}

/// `|k><k|` in dimension `d`.
pub fn projector(d: usize, k: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(d, d);
    p[(k, k)] = c(1.0, 0.0);
    p
}

/// Pure state `|psi><psi|` for the normalized amplitude vector.
pub fn pure_state(amplitudes: &[C64]) -> ComplexMatrix {
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v = nalgebra::DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|z| z / norm));
    &v * v.adjoint()
}

/// `|+><+|` with `|+> = (|e> + |g>)/sqrt(2)`.
pub fn plus_state() -> ComplexMatrix {
    pure_state(&[c(1.0, 0.0), c(1.0, 0.0)])
}

pub fn maximally_mixed(d: usize) -> ComplexMatrix {
    identity(d).scale(1.0 / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator;

    #[test]
    fn pauli_algebra() {
        let i = C64::new(0.0, 1.0);
        assert_eq!(commutator(&sigma_x(), &sigma_y()), sigma_z() * (i * 2.0));
        assert_eq!(sigma_plus() - sigma_minus(), sigma_y() * i);
        assert_eq!(&sigma_plus() * &sigma_minus(), excited_projector());
    }

    #[test]
    fn ladder_operators() {
        let n = 6;
        let a = annihilation(n);
        assert!((creation(n) * &a - number(n)).norm() < 1e-14);
        let comm = commutator(&a, &creation(n));
        for k in 0..n - 1 {
            assert!((comm[(k, k)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }
}
