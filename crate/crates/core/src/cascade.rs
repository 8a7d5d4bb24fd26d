//! Elimination of a fast subsystem whose output field drives the slow one
//! without back-action.
//!
//! With output operator `a` (the coupling rate already folded in), the full
//! generator is
//! `(L_A + D[a]) ⊗ I + epsilon (a[rho, b^†] + [b, rho]a^†) + epsilon^2 (D[b] + L_B)`.

use crate::error::{Error, Result, StageExt};
use crate::hamiltonian::RANK_CUT;
use crate::lindblad::{
    build_generator, kernel_eigenvector_slack, kernel_inclusion_defect, spectral_gap, steady_state_with, SubsystemSpec,
    SuperOperator, TracelessSolver,
};
use crate::linalg::{
    hermitian_eigen, hermitian_pinv, kron, partial_trace, trace, ComplexMatrix, Subsystem, C64,
};
use crate::system::{BipartiteSystem, Coupling};
use crate::tolerances::Tolerances;

/// Fast operator `a`, slow operator `b` and the rate `kappa` with which the
/// fast output `sqrt(kappa) a` feeds the slow subsystem.
#[derive(Debug, Clone)]
pub struct CascadeCoupling {
    a: ComplexMatrix,
    b: ComplexMatrix,
    rate: f64,
}

impl CascadeCoupling {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, rate: f64) -> Result<Self> {
        if !a.is_square() || !b.is_square() {
            return Err(Error::Dimension("cascade operators must be square".into()));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("cascade rate must be finite and nonnegative, got {rate}")));
        }
        Ok(CascadeCoupling { a, b, rate })
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `sqrt(kappa) a`
    pub fn output(&self) -> ComplexMatrix {
        self.a.scale(self.rate.sqrt())
    }
}

/// `L_A + D[a]`
pub fn cascade_fast_generator(spec_a: &SubsystemSpec, a: &ComplexMatrix) -> SuperOperator {
    build_generator(spec_a) + SuperOperator::dissipator(a)
}

/// `L1 = [tr(rho_A a^†) b - tr(a rho_A) b^†, .]`
pub fn cascade_first_order(rho_a: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> SuperOperator {
    SuperOperator::commutator(&first_order_operator(rho_a, a, b))
}

fn first_order_operator(rho_a: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let c_plus = trace(&(rho_a * a.adjoint()));
    let c_minus = trace(&(a * rho_a));
    b * c_plus - b.adjoint() * c_minus
}

#[derive(Debug, Clone)]
pub struct AlphaBeta {
    pub alpha: C64,
    pub beta: C64,
    /// `S_+`, the zero-trace solution of `-L(S_+) = rho_A abar^†`.
    pub s_plus: ComplexMatrix,
    pub solve_residual: f64,
    pub kernel_inclusion_defect: f64,
}

/// `alpha = tr(a S_+)`, `beta = tr(a^† S_+)` with `abar = a - tr(a rho_A)`.
pub fn cascade_alpha_beta(solver: &TracelessSolver, a: &ComplexMatrix, tol: &Tolerances) -> Result<AlphaBeta> {
    let rho = solver.rho_bar();
    let d = rho.nrows();
    let abar = a - ComplexMatrix::identity(d, d) * trace(&(a * rho));
    let sol = solver.solve(&(rho * abar.adjoint()))?;
    let (vals, _) = hermitian_eigen(rho);
    let cut = RANK_CUT * vals.last().copied().unwrap_or(1.0).max(0.0);
    let defect = kernel_inclusion_defect(rho, &sol.x, cut)
        .max(kernel_inclusion_defect(rho, &sol.x.adjoint(), cut));
    let limit = tol.structural * 10.0 * (a.norm() * rho.norm()).max(1.0) + kernel_eigenvector_slack(rho, cut) * sol.x.norm();
    if defect > limit {
        return Err(Error::KernelInclusion { what: "S_+ and S_-".into(), defect });
    }
    let alpha = trace(&(a * &sol.x));
    let beta = trace(&(a.adjoint() * &sol.x));
    if alpha.re < -tol.negative_alpha {
        return Err(Error::NegativeAlpha { re_alpha: alpha.re });
    }
    Ok(AlphaBeta { alpha, beta, s_plus: sol.x, solve_residual: sol.residual, kernel_inclusion_defect: defect })
}

/// Coefficients of the two second-order channels `x_i b + y_i b^†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCoefficients {
    pub x1: C64,
    pub y1: C64,
    pub x2: C64,
    pub y2: C64,
}

impl ChannelCoefficients {
    /// Residuals of `|x1|^2+|x2|^2 = s+1`, `|y1|^2+|y2|^2 = s`, `x1 y1* + x2 y2* = -2 beta`
    /// with `s = alpha + alpha*`.
    pub fn residuals(&self, alpha: C64, beta: C64) -> [f64; 3] {
        let s = 2.0 * alpha.re;
        [
            (self.x1.norm_sqr() + self.x2.norm_sqr() - (s + 1.0)).abs(),
            (self.y1.norm_sqr() + self.y2.norm_sqr() - s).abs(),
            (self.x1 * self.y1.conj() + self.x2 * self.y2.conj() + beta * 2.0).norm(),
        ]
    }
}

/// Canonical solution: `x1 = sqrt(s+1)` (real positive), `x2 = 0`,
/// `y1 = -2 beta* / x1`, `y2 = sqrt(s - |y1|^2)` (zero when the defect is within tolerance).
///
/// The system only has a solution when `(s+1) s >= 4|beta|^2`; a violation
/// beyond tolerance is reported as [`Error::ConjectureViolation`].
pub fn solve_channel_coefficients(alpha: C64, beta: C64, tol: &Tolerances) -> Result<ChannelCoefficients> {
    if alpha.re < -tol.negative_alpha {
        return Err(Error::NegativeAlpha { re_alpha: alpha.re });
    }
    let s = (2.0 * alpha.re).max(0.0);
    let defect = (s + 1.0) * s - 4.0 * beta.norm_sqr();
    if defect < -tol.conjecture {
        return Err(Error::ConjectureViolation {
            alpha_re: alpha.re,
            alpha_im: alpha.im,
            beta_re: beta.re,
            beta_im: beta.im,
            defect,
        });
    }
    let zero = C64::new(0.0, 0.0);
    if s == 0.0 {
        return Ok(ChannelCoefficients { x1: C64::new(1.0, 0.0), y1: zero, x2: zero, y2: zero });
    }
    let x1 = (s + 1.0).sqrt();
    let y1 = -beta.conj() * 2.0 / x1;
    // |defect| within tolerance is the rank-one boundary; the square root would
    // otherwise turn round-off in the defect into a visible second channel.
    let y2 = if defect.abs() <= tol.conjecture { 0.0 } else { (s - y1.norm_sqr()).max(0.0).sqrt() };
    Ok(ChannelCoefficients { x1: C64::new(x1, 0.0), y1, x2: zero, y2: C64::new(y2, 0.0) })
}

/// `D[x1 b + y1 b^†] + D[x2 b + y2 b^†] + ((alpha* - alpha)/2) [b^† b - b b^†, .]`
pub fn channel_form(b: &ComplexMatrix, coeffs: &ChannelCoefficients, alpha: C64) -> SuperOperator {
    let bd = b.adjoint();
    let c1 = b * coeffs.x1 + &bd * coeffs.y1;
    let c2 = b * coeffs.x2 + &bd * coeffs.y2;
    let k = &bd * b - b * &bd;
    SuperOperator::dissipator(&c1)
        + SuperOperator::dissipator(&c2)
        + SuperOperator::commutator(&k) * ((alpha.conj() - alpha) * 0.5)
}

/// Second-order generator assembled directly from its definition,
/// `tr_A(L_int(K1(rho))) + D[b]`, with
/// `K1(rho) = S_- ⊗ (rho b^† - b^† rho) + S_+ ⊗ (b rho - rho b)`.
pub fn second_order_from_definition(a: &ComplexMatrix, b: &ComplexMatrix, s_plus: &ComplexMatrix) -> Result<SuperOperator> {
    let (da, db) = (a.nrows(), b.nrows());
    let s_minus = s_plus.adjoint();
    let aj = kron(a, &ComplexMatrix::identity(db, db));
    let bj = kron(&ComplexMatrix::identity(da, da), b);
    let bd = b.adjoint();
    let mut m = ComplexMatrix::zeros(db * db, db * db);
    for col in 0..db {
        for row in 0..db {
            let mut e = ComplexMatrix::zeros(db, db);
            e[(row, col)] = C64::new(1.0, 0.0);
            let k1 = kron(&s_minus, &(&e * &bd - &bd * &e)) + kron(s_plus, &(b * &e - &e * b));
            let lint = &aj * &k1 * bj.adjoint() - &aj * bj.adjoint() * &k1 + &bj * &k1 * aj.adjoint()
                - &k1 * &bj * aj.adjoint();
            let reduced = partial_trace(&lint, da, db, Subsystem::A)?;
            let v = crate::linalg::vectorize(&reduced);
            m.set_column(col * db + row, &v);
        }
    }
    Ok(SuperOperator::new(db, m)? + SuperOperator::dissipator(b))
}

/// First-order cascade Kraus map `rho -> M (rho_A ⊗ rho) M^†` with
/// `M = I + epsilon (S_+ rho_A^+ ⊗ b - S_- rho_A^+ ⊗ b^†)`.
#[derive(Debug, Clone)]
pub struct CascadeKraus {
    pub m: ComplexMatrix,
    rho_a: ComplexMatrix,
}

impl CascadeKraus {
    pub fn embed(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        &self.m * kron(&self.rho_a, rho_s) * self.m.adjoint()
    }
}

pub fn cascade_kraus(rho_a: &ComplexMatrix, s_plus: &ComplexMatrix, b: &ComplexMatrix, epsilon: f64) -> CascadeKraus {
    let (da, db) = (rho_a.nrows(), b.nrows());
    let (vals, _) = hermitian_eigen(rho_a);
    let cut = RANK_CUT * vals.last().copied().unwrap_or(1.0).max(0.0);
    let pinv = hermitian_pinv(rho_a, cut);
    let s_minus = s_plus.adjoint();
    let m = ComplexMatrix::identity(da * db, da * db)
        + (kron(&(s_plus * &pinv), b) - kron(&(s_minus * &pinv), &b.adjoint())).scale(epsilon);
    CascadeKraus { m, rho_a: rho_a.clone() }
}

#[derive(Debug, Clone, Default)]
pub struct CascadeDiagnostics {
    pub solve_residual: f64,
    pub kernel_inclusion_defect: f64,
    /// Residuals of the three channel-coefficient equations.
    pub coefficient_residuals: [f64; 3],
    /// `(s+1) s - 4|beta|^2`
    pub channel_condition: f64,
    /// `|| channel form - (tr_A(L_int(K1)) + D[b]) ||_F`
    pub double_implementation_residual: f64,
    /// Relative change of `(alpha, beta)` when the fast truncation is doubled.
    pub truncation_change: Option<f64>,
    pub spectral_gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CascadeModel {
    pub epsilon: f64,
    pub rho_a: ComplexMatrix,
    /// `(tr(rho_A a^†), tr(a rho_A))`
    pub first_order_coefficients: (C64, C64),
    pub alpha: C64,
    pub beta: C64,
    pub channel_coeffs: ChannelCoefficients,
    /// `(alpha* - alpha)/2`, multiplying `[b^† b - b b^†, .]`.
    pub commutator_coefficient: C64,
    pub b: ComplexMatrix,
    pub slow_generator: SuperOperator,
    pub s_plus: ComplexMatrix,
    pub kraus: CascadeKraus,
    pub diagnostics: CascadeDiagnostics,
}

impl CascadeModel {
    pub fn first_order(&self) -> SuperOperator {
        let (cp, cm) = self.first_order_coefficients;
        SuperOperator::commutator(&(&self.b * cp - self.b.adjoint() * cm))
    }

    /// Channel form plus `L_B`.
    pub fn second_order(&self) -> SuperOperator {
        channel_form(&self.b, &self.channel_coeffs, self.alpha) + self.slow_generator.clone()
    }

    pub fn generator(&self, order: u8) -> SuperOperator {
        let g = self.first_order() * self.epsilon;
        if order >= 2 {
            g + self.second_order() * (self.epsilon * self.epsilon)
        } else {
            g
        }
    }

    pub fn channel_operators(&self) -> [ComplexMatrix; 2] {
        let bd = self.b.adjoint();
        let c = &self.channel_coeffs;
        [&self.b * c.x1 + &bd * c.y1, &self.b * c.x2 + &bd * c.y2]
    }

    pub fn embed(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        self.kraus.embed(rho_s)
    }
}

struct FastSide {
    rho_a: ComplexMatrix,
    ab: AlphaBeta,
    gap: Option<f64>,
}

fn fast_side(system: &BipartiteSystem, coupling: &CascadeCoupling, tol: &Tolerances, want_gap: bool) -> Result<FastSide> {
    let a = coupling.output();
    let lf = cascade_fast_generator(system.fast(), &a);
    let rho_a = steady_state_with(&lf, tol).stage("fast steady state")?;
    let solver = TracelessSolver::new(&lf, &rho_a, tol).stage("fast inverse")?;
    let ab = cascade_alpha_beta(&solver, &a, tol).stage("alpha/beta")?;
    // the Schur step is only affordable for small fast spaces
    let gap = if want_gap && lf.dim() <= 12 { spectral_gap(&lf) } else { None };
    Ok(FastSide { rho_a, ab, gap })
}

pub fn cascade_reduced_model(system: &BipartiteSystem) -> Result<CascadeModel> {
    cascade_reduced_model_with(system, &Tolerances::default())
}

pub fn cascade_reduced_model_with(system: &BipartiteSystem, tol: &Tolerances) -> Result<CascadeModel> {
    let coupling = match system.coupling() {
        Coupling::Cascade(c) => c,
        Coupling::Hamiltonian(_) => {
            return Err(Error::InvalidParameter("cascade elimination needs a cascade coupling".into()))
        }
    };
    let fast = fast_side(system, coupling, tol, true)?;
    let truncation_change = match system.truncation() {
        Some(t) if t.side == Subsystem::A => {
            let refined = (t.refine)(2 * t.fock_n).stage("truncation audit")?;
            let rc = match refined.coupling() {
                Coupling::Cascade(c) => c.clone(),
                Coupling::Hamiltonian(_) => {
                    return Err(Error::InvalidParameter("refined system changed coupling type".into()))
                }
            };
            let fine = fast_side(&refined, &rc, tol, false).stage("truncation audit")?;
            let diff = (fine.ab.alpha - fast.ab.alpha).norm().max((fine.ab.beta - fast.ab.beta).norm());
            let scale = fine.ab.alpha.norm().max(fine.ab.beta.norm());
            let change = if scale > 1e-14 { diff / scale } else { diff };
            if change >= tol.fock_audit {
                return Err(Error::TruncationNotConverged { n: t.fock_n, change, tol: tol.fock_audit });
            }
            Some(change)
        }
        _ => None,
    };
    let a = coupling.output();
    let b = coupling.b().clone();
    let FastSide { rho_a, ab, gap } = fast;
    let coeffs = solve_channel_coefficients(ab.alpha, ab.beta, tol).stage("channel coefficients")?;
    let s = 2.0 * ab.alpha.re;
    let lb = build_generator(system.slow());
    let direct = channel_form(&b, &coeffs, ab.alpha);
    let definition = second_order_from_definition(&a, &b, &ab.s_plus)?;
    let double_implementation_residual = (direct.matrix() - definition.matrix()).norm();
    let kraus = cascade_kraus(&rho_a, &ab.s_plus, &b, system.epsilon());
    let diagnostics = CascadeDiagnostics {
        solve_residual: ab.solve_residual,
        kernel_inclusion_defect: ab.kernel_inclusion_defect,
        coefficient_residuals: coeffs.residuals(ab.alpha, ab.beta),
        channel_condition: (s + 1.0) * s - 4.0 * ab.beta.norm_sqr(),
        double_implementation_residual,
        truncation_change,
        spectral_gap: gap,
    };
    Ok(CascadeModel {
        epsilon: system.epsilon(),
        first_order_coefficients: (trace(&(&rho_a * a.adjoint())), trace(&(&a * &rho_a))),
        rho_a,
        alpha: ab.alpha,
        beta: ab.beta,
        channel_coeffs: coeffs,
        commutator_coefficient: (ab.alpha.conj() - ab.alpha) * 0.5,
        b,
        slow_generator: lb,
        s_plus: ab.s_plus,
        kraus,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::Jump;
    use crate::ops;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_channel_when_alpha_beta_vanish() {
        let cc = solve_channel_coefficients(c(0.0, 0.0), c(0.0, 0.0), &Tolerances::default()).unwrap();
        assert_eq!(cc, ChannelCoefficients { x1: c(1.0, 0.0), y1: c(0.0, 0.0), x2: c(0.0, 0.0), y2: c(0.0, 0.0) });
    }

    #[test]
    fn zero_s_requires_zero_beta() {
        let err = solve_channel_coefficients(c(0.0, 0.3), c(0.1, 0.0), &Tolerances::default()).unwrap_err();
        assert!(err.is_conjecture_violation());
        let err = solve_channel_coefficients(c(-0.1, 0.0), c(0.0, 0.0), &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::NegativeAlpha { .. }));
    }

    #[test]
    fn boundary_gives_a_single_channel() {
        // (s+1)s = 4|beta|^2 up to round-off in beta
        let alpha = c(0.45, 0.0);
        let s: f64 = 0.9;
        let beta = c(-((s + 1.0) * s).sqrt() / 2.0 + 1e-11, 0.0);
        let cc = solve_channel_coefficients(alpha, beta, &Tolerances::default()).unwrap();
        assert_eq!(cc.y2, c(0.0, 0.0));
        assert!(cc.residuals(alpha, beta).iter().all(|r| *r < 1e-10));
    }

    #[test]
    fn decaying_qubit_gives_vacuum_input() {
        let spec = SubsystemSpec::trivial(2);
        let lf = cascade_fast_generator(&spec, &ops::sigma_minus());
        let rho = crate::lindblad::steady_state(&lf).unwrap();
        assert!((&rho - ops::projector(2, 1)).norm() < 1e-12);
        let solver = TracelessSolver::new(&lf, &rho, &Tolerances::default()).unwrap();
        let ab = cascade_alpha_beta(&solver, &ops::sigma_minus(), &Tolerances::default()).unwrap();
        assert!(ab.alpha.norm() < 1e-12 && ab.beta.norm() < 1e-12);
        assert!(cascade_first_order(&rho, &ops::sigma_minus(), &ops::sigma_minus()).norm() < 1e-14);
    }

    #[test]
    fn first_order_for_displaced_cavity() {
        let n = 12;
        let a = ops::annihilation(n);
        let spec = SubsystemSpec::new(n, (&a + a.adjoint()).scale(0.2), vec![]).unwrap();
        let lf = cascade_fast_generator(&spec, &a);
        let rho = crate::lindblad::steady_state(&lf).unwrap();
        let a0 = trace(&(&a * &rho));
        assert!((a0 - c(0.0, -0.4)).norm() < 1e-8);
        let b = ops::sigma_minus();
        let l1 = cascade_first_order(&rho, &a, &b);
        let x = ops::plus_state();
        let k = &b * a0.conj() - b.adjoint() * a0;
        assert!((l1.apply(&x) - (&k * &x - &x * &k)).norm() < 1e-12);
        assert!(l1.trace_defect() < 1e-12 && l1.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn model_for_driven_qubit_source() {
        let spec = SubsystemSpec::new(2, ops::sigma_x().scale(0.4), vec![Jump { operator: ops::sigma_z(), rate: 0.2 }]).unwrap();
        let cpl = CascadeCoupling::new(ops::sigma_minus(), ops::sigma_minus(), 1.0).unwrap();
        let sys = BipartiteSystem::new(spec, SubsystemSpec::trivial(2), Coupling::Cascade(cpl), 0.05).unwrap();
        let model = cascade_reduced_model(&sys).unwrap();
        assert!(model.diagnostics.double_implementation_residual < 1e-10);
        assert!(model.diagnostics.coefficient_residuals.iter().all(|r| *r < 1e-10));
        let l = model.generator(2);
        assert!(l.trace_defect() < 1e-12);
        assert!(l.hermiticity_defect() < 1e-12);
        let gks = crate::lindblad::gks_decompose(&model.second_order()).unwrap();
        assert!(gks.is_lindblad);
    }

    #[test]
    fn kraus_is_product_at_zero_epsilon() {
        let rho = ops::projector(2, 1);
        let k = cascade_kraus(&rho, &ComplexMatrix::zeros(2, 2), &ops::sigma_minus(), 0.0);
        let r = ops::plus_state();
        assert!((k.embed(&r) - kron(&rho, &r)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn canonical_solution_satisfies_system(re in 0.0f64..3.0, im in -2.0f64..2.0, frac in 0.0f64..1.0, phase in 0.0f64..6.3) {
            let s = 2.0 * re;
            let bmax = ((s + 1.0) * s / 4.0).sqrt();
            let beta = C64::from_polar(frac * bmax, phase);
            let alpha = c(re, im);
            let cc = solve_channel_coefficients(alpha, beta, &Tolerances::default()).unwrap();
            for r in cc.residuals(alpha, beta) {
                prop_assert!(r < 1e-12 * (1.0 + s));
            }
        }
    }
}
