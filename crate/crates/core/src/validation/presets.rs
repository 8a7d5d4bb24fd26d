//! Named example systems and their known closed-form results.
//!
//! Hamiltonian examples scale the fast operators `A_k` by `1/epsilon` so that
//! `epsilon A_k` is the physical coupling; the reduced blocks reported as
//! `epsilon H_zeno`, `epsilon^2 X`, ... are then physical as well.

use std::sync::Arc;

use crate::cascade::CascadeCoupling;
use crate::error::{Error, Result};
use crate::hamiltonian::{CouplingTerm, HamiltonianCoupling};
use crate::lindblad::{Jump, SubsystemSpec};
use crate::linalg::{ComplexMatrix, Subsystem, C64, I};
use crate::ops;
use crate::system::{BipartiteSystem, Coupling, Truncation};

pub const TWO_PHOTON_FOCK_N: usize = 15;
pub const SQUEEZED_FOCK_N: usize = 20;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

/// Driven decaying qubit `A` dispersively coupled to a qubit `B`:
/// `d rho/dt = u[sigma_+ - sigma_-, rho] + gamma D[sigma_-] - i chi [sigma_z ⊗ sigma_z, rho]`,
/// with `epsilon = |chi|/gamma`.
pub fn qubit_tls(u: f64, gamma: f64, chi: f64) -> Result<BipartiteSystem> {
    finite("u", u)?;
    positive("gamma", gamma)?;
    finite("chi", chi)?;
    let eps = chi.abs() / gamma;
    // u[sigma_+ - sigma_-, .] = -i[-u sigma_y, .]
    let a = SubsystemSpec::new(2, ops::sigma_y().scale(-u), vec![Jump { operator: ops::sigma_minus(), rate: gamma }])?;
    let scale = if chi < 0.0 { -gamma } else { gamma };
    let coupling = HamiltonianCoupling::dispersive(ops::sigma_z().scale(scale), ops::sigma_z())?;
    BipartiteSystem::new(a, SubsystemSpec::trivial(2), Coupling::Hamiltonian(coupling), eps)
}

/// Closed-form reduced dynamics of [`qubit_tls`]:
/// `d rho/dt = i chi c [sigma_z, rho] + r (sigma_z rho sigma_z - rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitTlsClosedForm {
    /// `chi gamma^2 / (gamma^2 + 8u^2)`; the reduced Hamiltonian is `-c sigma_z`.
    pub hamiltonian_coefficient: f64,
    /// `64 gamma chi^2 u^2 (gamma^2 + 2u^2) / (gamma^2 + 8u^2)^3`
    pub dephasing_rate: f64,
}

pub fn qubit_tls_closed_form(u: f64, gamma: f64, chi: f64) -> QubitTlsClosedForm {
    let g2 = gamma * gamma;
    let u2 = u * u;
    let den = g2 + 8.0 * u2;
    QubitTlsClosedForm {
        hamiltonian_coefficient: chi * g2 / den,
        dephasing_rate: 64.0 * gamma * chi * chi * u2 * (g2 + 2.0 * u2) / (den * den * den),
    }
}

/// Qubit `A` driven and pumped both ways, coupled to a slow cavity `B` by
/// two-photon exchange and a dispersive shift:
/// `L_A = -iu[sigma_y, .] + kappa_m D[sigma_-] + kappa_p D[sigma_+]`,
/// `H_int = g sigma_+ ⊗ b^2 + g sigma_- ⊗ b^†2 + chi |e><e| ⊗ b^† b`,
/// `epsilon = max(|g|, |chi|)/kappa_m`. The cavity is truncated at `fock_n`.
pub fn two_photon(u: f64, kappa_m: f64, kappa_p: f64, g: f64, chi: f64, fock_n: usize) -> Result<BipartiteSystem> {
    finite("u", u)?;
    positive("kappa_m", kappa_m)?;
    finite("g", g)?;
    finite("chi", chi)?;
    if !(kappa_p >= 0.0 && kappa_p < kappa_m) {
        return Err(Error::InvalidParameter(format!(
            "two-photon example needs 0 <= kappa_p < kappa_m (the qubit must relax towards its ground state), got kappa_p={kappa_p}, kappa_m={kappa_m}"
        )));
    }
    if fock_n < 3 {
        return Err(Error::InvalidParameter(format!("two-photon cavity needs at least 3 Fock levels, got {fock_n}")));
    }
    let eps = g.abs().max(chi.abs()) / kappa_m;
    let s = if eps > 0.0 { 1.0 / eps } else { 0.0 };
    let a = SubsystemSpec::new(
        2,
        ops::sigma_y().scale(u),
        vec![Jump { operator: ops::sigma_minus(), rate: kappa_m }, Jump { operator: ops::sigma_plus(), rate: kappa_p }],
    )?;
    let b = ops::annihilation(fock_n);
    let bd = b.adjoint();
    let terms = vec![
        CouplingTerm { a: ops::sigma_plus().scale(g * s), b: &bd * &bd },
        CouplingTerm { a: ops::sigma_minus().scale(g * s), b: &b * &b },
        CouplingTerm { a: ops::excited_projector().scale(chi * s), b: ops::number(fock_n) },
    ];
    let coupling = HamiltonianCoupling::new(terms)?;
    let refine = Arc::new(move |n: usize| two_photon(u, kappa_m, kappa_p, g, chi, n));
    Ok(BipartiteSystem::new(a, SubsystemSpec::trivial(fock_n), Coupling::Hamiltonian(coupling), eps)?
        .with_truncation(Truncation { side: Subsystem::B, fock_n, refine }))
}

/// Steady-state Bloch coordinates `(x, z)` of the two-photon fast qubit.
pub fn two_photon_bloch(u: f64, kappa_m: f64, kappa_p: f64) -> (f64, f64) {
    let den = (kappa_p + kappa_m).powi(2) + 8.0 * u * u;
    (4.0 * u * (kappa_p - kappa_m) / den, (kappa_p * kappa_p - kappa_m * kappa_m) / den)
}

/// Physical `epsilon^2 X` of the two-photon example, exact in all parameters.
pub fn two_photon_x(u: f64, kappa_m: f64, kappa_p: f64, g: f64, chi: f64) -> ComplexMatrix {
    let (x, z) = two_photon_bloch(u, kappa_m, kappa_p);
    let r = (kappa_m - kappa_p) / (kappa_m + kappa_p);
    let q = kappa_m - kappa_p;
    let x2 = x * x;
    let mut m = [[0.0; 3]; 3];
    m[0][0] = (z / 2.0 * (3.0 * x2 - 2.0) - x2 / 2.0 + z * z - (z - 1.0) * r) * g * g / q;
    m[1][1] = (z / 2.0 * (3.0 * x2 - 2.0) + x2 / 2.0 - z * z + (z + 1.0) * r) * g * g / q;
    m[2][2] = z / 2.0 * (z * z - x2 - 1.0) * chi * chi / q;
    m[0][1] = (z / 2.0 * (3.0 * x2 - 2.0) - r) * g * g / q;
    m[0][2] = x * (z * z - x2 / 4.0 - z / 2.0 + r / 2.0) * chi * g / q;
    m[1][2] = x * (z * z - x2 / 4.0 + z / 2.0 - r / 2.0) * chi * g / q;
    ComplexMatrix::from_fn(3, 3, |i, j| C64::new(if i <= j { m[i][j] } else { m[j][i] }, 0.0))
}

/// Physical `epsilon^2 Y` of the two-photon example, exact in all parameters.
/// The diagonal vanishes.
pub fn two_photon_y(u: f64, kappa_m: f64, kappa_p: f64, g: f64, chi: f64) -> ComplexMatrix {
    let (x, z) = two_photon_bloch(u, kappa_m, kappa_p);
    let r = (kappa_m - kappa_p) / (kappa_m + kappa_p);
    let q = kappa_m - kappa_p;
    let over = 1.0 / (4.0 * q) * g;
    let y01 = -(2.0 * z * z - x * x + 2.0 * z * r) * g * over / I;
    let y20 = (x - x * z - x.powi(3) / 2.0 - z * z * x - x * r) * chi * over / I;
    let y21 = (x + x * z - x.powi(3) / 2.0 - z * z * x + x * r) * chi * over / I;
    let mut y = ComplexMatrix::zeros(3, 3);
    y[(0, 1)] = y01;
    y[(1, 0)] = y01.conj();
    y[(2, 0)] = y20;
    y[(0, 2)] = y20.conj();
    y[(2, 1)] = y21;
    y[(1, 2)] = y21.conj();
    y
}

/// Physical `epsilon^2 X` of the two-photon example to second order in
/// `delta = (kappa_p/kappa_m)^(1/2)` and `eta = u/kappa_m`.
pub fn two_photon_x_truncated(u: f64, kappa_m: f64, kappa_p: f64, g: f64, chi: f64) -> ComplexMatrix {
    let d2 = kappa_p / kappa_m;
    let eta = u / kappa_m;
    let e2 = eta * eta;
    let m = [
        [(4.0 - 8.0 * d2 - 64.0 * e2) * g * g, -32.0 * e2 * g * g, -8.0 * eta * g * chi],
        [-32.0 * e2 * g * g, 4.0 * d2 * g * g, 0.0],
        [-8.0 * eta * g * chi, 0.0, (2.0 * d2 + 16.0 * e2) * chi * chi],
    ];
    ComplexMatrix::from_fn(3, 3, |i, j| C64::new(m[i][j] / kappa_m, 0.0))
}

/// Cavity `A` under a squeezing drive, `d rho/dt = g[a^2 - a^†2, rho] + kappa D[a]`,
/// whose output feeds the slow operator `b` (default `sigma_-`) with time-scale
/// ratio `epsilon`. `L_B = 0`. The cavity is truncated at `fock_n` and audited
/// by doubling.
pub fn squeezed(kappa: f64, g: f64, fock_n: usize, b: Option<ComplexMatrix>, epsilon: f64) -> Result<BipartiteSystem> {
    positive("kappa", kappa)?;
    finite("g", g)?;
    if kappa <= 4.0 * g.abs() {
        return Err(Error::InvalidParameter(format!(
            "squeezed cavity needs kappa > 4|g|; otherwise it is unstable and its energy grows without bound (kappa={kappa}, g={g})"
        )));
    }
    if fock_n < 2 {
        return Err(Error::InvalidParameter(format!("squeezed cavity needs at least 2 Fock levels, got {fock_n}")));
    }
    let a = ops::annihilation(fock_n);
    let ad = a.adjoint();
    // g[a^2 - a^†2, .] = -i[H, .] with H = i g (a^2 - a^†2)
    let h = (&a * &a - &ad * &ad) * (I * g);
    let spec_a = SubsystemSpec::new(fock_n, h, vec![])?;
    let b = b.unwrap_or_else(ops::sigma_minus);
    let db = b.nrows();
    let coupling = CascadeCoupling::new(a, b.clone(), kappa)?;
    let refine = Arc::new(move |n: usize| squeezed(kappa, g, n, Some(b.clone()), epsilon));
    Ok(BipartiteSystem::new(spec_a, SubsystemSpec::trivial(db), Coupling::Cascade(coupling), epsilon)?
        .with_truncation(Truncation { side: Subsystem::A, fock_n, refine }))
}

/// `(alpha, beta)` of the squeezed cavity:
/// `32 kappa^2 g^2 / ((kappa+4g)(kappa-4g))^2` and `-(64 g^3 kappa + 4 g kappa^3) / ((kappa+4g)(kappa-4g))^2`.
pub fn squeezed_alpha_beta(kappa: f64, g: f64) -> (f64, f64) {
    let den = ((kappa + 4.0 * g) * (kappa - 4.0 * g)).powi(2);
    (32.0 * kappa * kappa * g * g / den, -(64.0 * g.powi(3) * kappa + 4.0 * g * kappa.powi(3)) / den)
}

/// Heisenberg-picture evolution of the squeezed cavity's annihilation operator,
/// `exp(t L^*)(a) = f_a(t) a + h_a(t) a^†`.
pub fn squeezed_heisenberg(kappa: f64, g: f64, t: f64) -> (f64, f64) {
    let slow = (-t * (kappa - 4.0 * g) / 2.0).exp();
    let fast = (-t * (kappa + 4.0 * g) / 2.0).exp();
    ((slow + fast) / 2.0, (fast - slow) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::cascade_reduced_model;
    use crate::hamiltonian::build_reduced_model;
    use crate::lindblad::{build_generator, steady_state};
    use crate::linalg::trace;

    #[test]
    fn qubit_tls_without_drive_is_a_pure_phase_shift() {
        let chi = 0.01;
        let sys = qubit_tls(0.0, 1.0, chi).unwrap();
        let m = build_reduced_model(&sys).unwrap();
        let eps = m.epsilon;
        let h = &m.zeno_hamiltonian * C64::new(eps, 0.0);
        assert!((h + ops::sigma_z().scale(chi)).norm() < 1e-14);
        assert!(m.x.norm() * eps * eps < 1e-14);
    }

    #[test]
    fn negative_chi_keeps_sign() {
        let m = build_reduced_model(&qubit_tls(0.3, 1.0, -0.02).unwrap()).unwrap();
        let want = qubit_tls_closed_form(0.3, 1.0, -0.02);
        let got = -(m.zeno_hamiltonian[(0, 0)].re * m.epsilon);
        assert!((got - want.hamiltonian_coefficient).abs() < 1e-14);
    }

    #[test]
    fn parameter_constraints() {
        assert!(qubit_tls(0.1, 0.0, 0.01).is_err());
        assert!(two_photon(0.05, 1.0, 1.0, 1e-3, 1e-3, 10).is_err());
        let err = squeezed(1.0, 0.25, 10, None, 0.01).unwrap_err();
        assert!(err.to_string().contains("unstable"));
    }

    #[test]
    fn two_photon_steady_state() {
        let (u, km, kp) = (0.05, 1.0, 0.01);
        let sys = two_photon(u, km, kp, 1e-3, 1e-3, 5).unwrap();
        let rho = steady_state(&build_generator(sys.fast())).unwrap();
        let (x, z) = two_photon_bloch(u, km, kp);
        assert!((trace(&(ops::sigma_x() * &rho)).re - x).abs() < 1e-12);
        assert!((trace(&(ops::sigma_z() * &rho)).re - z).abs() < 1e-12);
    }

    #[test]
    fn unsqueezed_cavity_gives_plain_decay() {
        let sys = squeezed(1.0, 0.0, 8, None, 0.05).unwrap();
        let m = cascade_reduced_model(&sys).unwrap();
        assert!(m.alpha.norm() < 1e-12 && m.beta.norm() < 1e-12);
        let d = crate::lindblad::SuperOperator::dissipator(&ops::sigma_minus());
        assert!((m.second_order().matrix() - d.matrix()).norm() < 1e-12);
    }

    #[test]
    fn heisenberg_functions_start_at_identity() {
        let (f, h) = squeezed_heisenberg(1.0, 0.1, 0.0);
        assert_eq!((f, h), (1.0, 0.0));
    }
}
