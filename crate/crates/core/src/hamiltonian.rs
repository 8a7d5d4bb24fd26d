//! Elimination of a fast subsystem coupled through a Hamiltonian
//! `H_int = sum_k A_k ⊗ B_k^†`.
//!
//! The full generator is `L_A ⊗ I + epsilon (-i[H_int, .] + I ⊗ L_B)` and the reduced
//! generator is `epsilon L1 + epsilon^2 L2` on the slow subsystem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::lindblad::{
    build_generator, kernel_eigenvector_slack, kernel_inclusion_defect, spectral_gap, steady_state_with, SuperOperator,
    TracelessSolver,
};
use crate::linalg::{
    cholesky_lower, expm, hermitian_eigen, hermitian_pinv, kron, pivoted_cholesky,
    require_hermitian, trace, ComplexMatrix, C64, I,
};
use crate::system::{BipartiteSystem, Coupling};
use crate::tolerances::Tolerances;

/// Eigenvalues of the fast steady state below this fraction of the largest
/// are treated as its kernel.
pub(crate) const RANK_CUT: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CouplingTerm {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
}

/// `H_int = sum_k A_k ⊗ B_k^†`, Hermitian as a whole (individual terms need not be).
#[derive(Debug, Clone)]
pub struct HamiltonianCoupling {
    terms: Vec<CouplingTerm>,
    dim_a: usize,
    dim_b: usize,
}

impl HamiltonianCoupling {
    pub fn new(terms: Vec<CouplingTerm>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("coupling needs at least one term".into()))?;
        let (dim_a, dim_b) = (first.a.nrows(), first.b.nrows());
        for (k, t) in terms.iter().enumerate() {
            if t.a.shape() != (dim_a, dim_a) || t.b.shape() != (dim_b, dim_b) {
                return Err(Error::Dimension(format!(
                    "coupling term {k} has shapes {:?} and {:?}, expected {dim_a}x{dim_a} and {dim_b}x{dim_b}",
                    t.a.shape(),
                    t.b.shape()
                )));
            }
        }
        let c = HamiltonianCoupling { terms, dim_a, dim_b };
        let h = c.interaction_hamiltonian();
        require_hermitian(&h, Tolerances::default().structural_for(h.norm()), "interaction hamiltonian")?;
        Ok(c)
    }

    /// Single Hermitian product term `A ⊗ B`.
    pub fn dispersive(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        HamiltonianCoupling::new(vec![CouplingTerm { a, b: b.adjoint() }])
    }

    /// Exchange coupling `A ⊗ B^† + A^† ⊗ B`.
    pub fn resonant(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        let ad = a.adjoint();
        let bd = b.adjoint();
        HamiltonianCoupling::new(vec![CouplingTerm { a, b }, CouplingTerm { a: ad, b: bd }])
    }

    pub fn terms(&self) -> &[CouplingTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn interaction_hamiltonian(&self) -> ComplexMatrix {
        let n = self.dim_a * self.dim_b;
        self.terms.iter().fold(ComplexMatrix::zeros(n, n), |acc, t| acc + kron(&t.a, &t.b.adjoint()))
    }
}

/// `H_zeno = sum_k tr(A_k rho_A) B_k^†` and `L1 = -i[H_zeno, .] + L_B`.
pub fn zeno_generator(
    rho_a: &ComplexMatrix,
    coupling: &HamiltonianCoupling,
    lb: &SuperOperator,
) -> Result<(ComplexMatrix, SuperOperator)> {
    let (_, db) = coupling.dims();
    let mut h = ComplexMatrix::zeros(db, db);
    for t in coupling.terms() {
        h += t.b.adjoint() * trace(&(&t.a * rho_a));
    }
    let h = require_hermitian(&h, Tolerances::default().structural_for(h.norm()), "zeno hamiltonian")?;
    let l1 = SuperOperator::hamiltonian(&h) + lb.clone();
    Ok((h, l1))
}

/// The operators `F_k` together with the products `G_k = F_k rho_A` they are
/// recovered from.
#[derive(Debug, Clone)]
pub struct FOperators {
    pub f: Vec<ComplexMatrix>,
    /// `G_k = F_k rho_A`, the zero-trace solutions of `-L_A(G_k) = A_k rho_A - tr(A_k rho_A) rho_A`.
    pub g: Vec<ComplexMatrix>,
    pub solve_residuals: Vec<f64>,
    /// Largest `|G_k v|` over the kernel of `rho_A`.
    pub kernel_inclusion_defect: f64,
    /// Largest `|tr(F_k rho_A)|`.
    pub trace_defect: f64,
}

pub fn compute_f(la: &SuperOperator, rho_a: &ComplexMatrix, coupling: &HamiltonianCoupling) -> Result<FOperators> {
    let tol = Tolerances::default();
    let solver = TracelessSolver::new(la, rho_a, &tol)?;
    compute_f_with(&solver, coupling, &tol)
}

pub fn compute_f_with(solver: &TracelessSolver, coupling: &HamiltonianCoupling, tol: &Tolerances) -> Result<FOperators> {
    let rho = solver.rho_bar();
    let (vals, _) = hermitian_eigen(rho);
    let cut = RANK_CUT * vals.last().copied().unwrap_or(1.0).max(0.0);
    let pinv = hermitian_pinv(rho, cut);
    let slack = kernel_eigenvector_slack(rho, cut);
    let mut out = FOperators {
        f: Vec::with_capacity(coupling.len()),
        g: Vec::with_capacity(coupling.len()),
        solve_residuals: Vec::with_capacity(coupling.len()),
        kernel_inclusion_defect: 0.0,
        trace_defect: 0.0,
    };
    for t in coupling.terms() {
        let sol = solver.solve(&(&t.a * rho))?;
        let defect = kernel_inclusion_defect(rho, &sol.x, cut);
        let limit = tol.structural * 10.0 * (t.a.norm() * rho.norm()).max(1.0) + slack * sol.x.norm();
        if defect > limit {
            return Err(Error::KernelInclusion { what: "F_k rho_A".into(), defect });
        }
        let f = &sol.x * &pinv;
        out.trace_defect = out.trace_defect.max(trace(&(&f * rho)).norm());
        out.kernel_inclusion_defect = out.kernel_inclusion_defect.max(defect);
        out.solve_residuals.push(sol.residual);
        out.f.push(f);
        out.g.push(sol.x);
    }
    Ok(out)
}

/// `X_kj = tr(F_j rho A_k^† + A_j rho F_k^†)` and
/// `Y_kj = (1/2i) tr(F_j rho A_k^† - A_j rho F_k^†)`, evaluated through `G = F rho`.
pub fn second_order_xy(coupling: &HamiltonianCoupling, f_ops: &FOperators, tol: &Tolerances) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let m = coupling.len();
    let terms = coupling.terms();
    let mut x = ComplexMatrix::zeros(m, m);
    let mut y = ComplexMatrix::zeros(m, m);
    let half_over_i = C64::new(0.0, -0.5);
    for k in 0..m {
        let ak_d = terms[k].a.adjoint();
        let gk_d = f_ops.g[k].adjoint();
        for j in 0..m {
            let p = trace(&(&f_ops.g[j] * &ak_d));
            let q = trace(&(&terms[j].a * &gk_d));
            x[(k, j)] = p + q;
            y[(k, j)] = (p - q) * half_over_i;
        }
    }
    let xt = tol.structural_for(x.norm());
    let x = require_hermitian(&x, xt, "second-order X").stage("second_order_xy")?;
    let y = require_hermitian(&y, tol.structural_for(y.norm()), "second-order Y").stage("second_order_xy")?;
    let min = crate::linalg::min_hermitian_eigenvalue(&x);
    if min < -xt {
        return Err(Error::NotPositive { what: "second-order X".into(), min_eig: min, tol: xt }.at("second_order_xy"));
    }
    Ok((x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsdMode {
    /// Triangular factor; pivoted with rank truncation when `X` is singular.
    #[default]
    Cholesky,
    /// `U diag(sqrt(lambda))` from the eigen-decomposition.
    Eigen,
}

/// `Lambda` with `X = Lambda Lambda^†`.
pub fn psd_factor(x: &ComplexMatrix, mode: PsdMode, tol: &Tolerances) -> Result<ComplexMatrix> {
    let m = x.nrows();
    let xt = tol.structural_for(x.norm());
    let (vals, vecs) = hermitian_eigen(x);
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -xt {
        return Err(Error::NotPositive { what: "matrix to factor".into(), min_eig: min, tol: xt });
    }
    match mode {
        PsdMode::Eigen => {
            let mut lambda = vecs;
            for (k, &v) in vals.iter().enumerate() {
                let s = v.max(0.0).sqrt();
                lambda.column_mut(k).scale_mut(s);
            }
            Ok(lambda)
        }
        PsdMode::Cholesky => {
            if min > xt {
                if let Some(l) = cholesky_lower(x) {
                    return Ok(l);
                }
            }
            let pc = pivoted_cholesky(x, xt);
            let mut lambda = ComplexMatrix::zeros(m, m);
            lambda.view_mut((0, 0), (m, pc.rank)).copy_from(&pc.factor);
            Ok(lambda)
        }
    }
}

/// Which first-order gauge the Kraus embedding uses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Gauge {
    /// `G_1 = -tau tr_A(L_int(rho_A ⊗ rho))`, under which the second-order
    /// generator takes its simplest form.
    #[default]
    Simple,
    /// `G_1 = 0`; the embedding then carries the extra slow rotation
    /// `exp(-i epsilon tau H_zeno)`. `tau` defaults to the inverse spectral gap.
    Zero { tau: Option<f64> },
}

impl Gauge {
    pub fn label(&self) -> &'static str {
        match self {
            Gauge::Simple => "simple",
            Gauge::Zero { .. } => "zero",
        }
    }
}

/// First-order Kraus embedding `rho -> E (rho_A ⊗ U rho U^†) E^†` with
/// `E = exp(-i epsilon M)`, `M = sum_k F_k ⊗ B_k^†`. `U` is the identity in the
/// simple gauge.
#[derive(Debug, Clone)]
pub struct KrausEmbedding {
    pub m: ComplexMatrix,
    exp_m: ComplexMatrix,
    slow_unitary: Option<ComplexMatrix>,
    rho_a: ComplexMatrix,
}

impl KrausEmbedding {
    pub fn embed(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        let inner = match &self.slow_unitary {
            Some(u) => u * rho_s * u.adjoint(),
            None => rho_s.clone(),
        };
        &self.exp_m * kron(&self.rho_a, &inner) * self.exp_m.adjoint()
    }
}

pub fn kraus_first_order(
    rho_a: &ComplexMatrix,
    coupling: &HamiltonianCoupling,
    f_ops: &FOperators,
    epsilon: f64,
    gauge: Gauge,
    zeno: &ComplexMatrix,
    gap: Option<f64>,
) -> Result<KrausEmbedding> {
    let (da, db) = coupling.dims();
    let mut m = ComplexMatrix::zeros(da * db, da * db);
    for (f, t) in f_ops.f.iter().zip(coupling.terms()) {
        m += kron(f, &t.b.adjoint());
    }
    let exp_m = expm(&(&m * (-I * epsilon)));
    let slow_unitary = match gauge {
        Gauge::Simple => None,
        Gauge::Zero { tau } => {
            let tau = match tau.or_else(|| gap.filter(|g| *g > 0.0).map(|g| 1.0 / g)) {
                Some(t) => t,
                None => return Err(Error::InvalidParameter("zero gauge needs tau or a positive spectral gap".into())),
            };
            Some(expm(&(zeno * (-I * (epsilon * tau)))))
        }
    };
    Ok(KrausEmbedding { m, exp_m, slow_unitary, rho_a: rho_a.clone() })
}

#[derive(Debug, Clone, Default)]
pub struct HamiltonianDiagnostics {
    pub solve_residuals: Vec<f64>,
    pub kernel_inclusion_defect: f64,
    pub f_trace_defect: f64,
    pub x_min_eigenvalue: f64,
    /// `|| X - Lambda Lambda^† ||_F`
    pub factor_error: f64,
    /// `|| sum_k D[L_k] - X-form ||_F / max(1e-300, ||X||_F)`
    pub channel_form_defect: f64,
    pub spectral_gap: Option<f64>,
    pub gauge: Gauge,
}

/// Reduced slow-subsystem model up to second order.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub epsilon: f64,
    pub rho_a: ComplexMatrix,
    /// First-order Hamiltonian, enters as `epsilon H_zeno`.
    pub zeno_hamiltonian: ComplexMatrix,
    /// `sum_kj Y_kj B_k B_j^†`, enters as `epsilon^2 H_2`.
    pub second_order_hamiltonian: ComplexMatrix,
    /// `L_k = sum_j conj(Lambda_jk) B_j^†`, entering as `epsilon^2 D[L_k]`.
    pub channels: Vec<ComplexMatrix>,
    pub lambda: ComplexMatrix,
    pub slow_generator: SuperOperator,
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
    pub f_ops: FOperators,
    pub kraus: KrausEmbedding,
    pub diagnostics: HamiltonianDiagnostics,
}

impl ReducedModel {
    /// `L1 = -i[H_zeno, .] + L_B`
    pub fn first_order(&self) -> SuperOperator {
        SuperOperator::hamiltonian(&self.zeno_hamiltonian) + self.slow_generator.clone()
    }

    /// `L2 = -i[H_2, .] + sum_k D[L_k]`
    pub fn second_order(&self) -> SuperOperator {
        let mut l2 = SuperOperator::hamiltonian(&self.second_order_hamiltonian);
        for c in &self.channels {
            l2 += &SuperOperator::dissipator(c);
        }
        l2
    }

    pub fn generator(&self, order: u8) -> SuperOperator {
        let g = self.first_order() * self.epsilon;
        if order >= 2 {
            g + self.second_order() * (self.epsilon * self.epsilon)
        } else {
            g
        }
    }

    pub fn embed(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        self.kraus.embed(rho_s)
    }
}

/// `sum_kj X_kj (B_j^† rho B_k - 1/2 {B_k B_j^†, rho})`
pub fn x_form_dissipator(coupling: &HamiltonianCoupling, x: &ComplexMatrix) -> SuperOperator {
    let (_, db) = coupling.dims();
    let terms = coupling.terms();
    let mut out = SuperOperator::zero(db);
    for (k, tk) in terms.iter().enumerate() {
        for (j, tj) in terms.iter().enumerate() {
            let c = x[(k, j)];
            if c.norm() == 0.0 {
                continue;
            }
            let bjd = tj.b.adjoint();
            let prod = &tk.b * &bjd;
            let term = SuperOperator::sandwich(&bjd, &tk.b)
                - (SuperOperator::left(&prod) + SuperOperator::right(&prod)) * 0.5;
            out += &(term * c);
        }
    }
    out
}

pub fn build_reduced_model(system: &BipartiteSystem) -> Result<ReducedModel> {
    build_reduced_model_with(system, &Tolerances::default(), PsdMode::default(), Gauge::default())
}

pub fn build_reduced_model_with(
    system: &BipartiteSystem,
    tol: &Tolerances,
    psd_mode: PsdMode,
    gauge: Gauge,
) -> Result<ReducedModel> {
    let coupling = match system.coupling() {
        Coupling::Hamiltonian(c) => c,
        Coupling::Cascade(_) => {
            return Err(Error::InvalidParameter("hamiltonian elimination needs a hamiltonian coupling".into()))
        }
    };
    let la = build_generator(system.fast());
    let lb = build_generator(system.slow());
    let rho_a = steady_state_with(&la, tol).stage("fast steady state")?;
    let gap = spectral_gap(&la);
    let (zeno, _) = zeno_generator(&rho_a, coupling, &lb).stage("zeno generator")?;
    let solver = TracelessSolver::new(&la, &rho_a, tol).stage("fast inverse")?;
    let f_ops = compute_f_with(&solver, coupling, tol).stage("compute_f")?;
    let (x, y) = second_order_xy(coupling, &f_ops, tol)?;
    let lambda = psd_factor(&x, psd_mode, tol).stage("psd factor")?;

    let terms = coupling.terms();
    let xnorm = x.norm();
    let cut = tol.channel_rank * xnorm.sqrt();
    let mut channels = Vec::new();
    for k in 0..lambda.ncols() {
        let col = lambda.column(k);
        if col.norm() <= cut || col.norm() == 0.0 {
            continue;
        }
        let (_, db) = coupling.dims();
        let mut op = ComplexMatrix::zeros(db, db);
        for (j, t) in terms.iter().enumerate() {
            op += t.b.adjoint() * col[j].conj();
        }
        channels.push(op);
    }
    let mut h2 = ComplexMatrix::zeros(lb.dim(), lb.dim());
    for (k, tk) in terms.iter().enumerate() {
        for (j, tj) in terms.iter().enumerate() {
            h2 += &tk.b * tj.b.adjoint() * y[(k, j)];
        }
    }
    let h2 = require_hermitian(&h2, tol.structural_for(h2.norm()), "second-order hamiltonian")?;

    let factored = channels.iter().fold(SuperOperator::zero(lb.dim()), |acc, c| acc + SuperOperator::dissipator(c));
    let channel_form_defect =
        (factored.matrix() - x_form_dissipator(coupling, &x).matrix()).norm() / xnorm.max(1e-300);
    let factor_error = (&x - &lambda * lambda.adjoint()).norm();
    let kraus = kraus_first_order(&rho_a, coupling, &f_ops, system.epsilon(), gauge, &zeno, gap).stage("kraus embedding")?;

    let diagnostics = HamiltonianDiagnostics {
        solve_residuals: f_ops.solve_residuals.clone(),
        kernel_inclusion_defect: f_ops.kernel_inclusion_defect,
        f_trace_defect: f_ops.trace_defect,
        x_min_eigenvalue: crate::linalg::min_hermitian_eigenvalue(&x),
        factor_error,
        channel_form_defect,
        spectral_gap: gap,
        gauge,
    };
    Ok(ReducedModel {
        epsilon: system.epsilon(),
        rho_a,
        zeno_hamiltonian: zeno,
        second_order_hamiltonian: h2,
        channels,
        lambda,
        slow_generator: lb,
        x,
        y,
        f_ops,
        kraus,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{Jump, SubsystemSpec};
    use crate::linalg::{partial_trace, trace_norm, Subsystem};
    use crate::ops;

    fn driven_decay(u: f64, gamma: f64) -> SubsystemSpec {
        SubsystemSpec::new(2, ops::sigma_y().scale(-u), vec![Jump { operator: ops::sigma_minus(), rate: gamma }]).unwrap()
    }

    fn tls_system(u: f64, gamma: f64, chi: f64) -> BipartiteSystem {
        let eps = chi.abs() / gamma;
        let c = HamiltonianCoupling::dispersive(ops::sigma_z().scale(chi / eps), ops::sigma_z()).unwrap();
        BipartiteSystem::new(driven_decay(u, gamma), SubsystemSpec::trivial(2), Coupling::Hamiltonian(c), eps).unwrap()
    }

    #[test]
    fn rejects_non_hermitian_coupling() {
        let err = HamiltonianCoupling::new(vec![CouplingTerm { a: ops::sigma_minus(), b: ops::sigma_z() }]).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
        assert!(HamiltonianCoupling::resonant(ops::sigma_minus(), ops::sigma_minus()).is_ok());
    }

    #[test]
    fn zeno_vanishes_for_mixed_fast_state() {
        let c = HamiltonianCoupling::dispersive(ops::sigma_x(), ops::sigma_z()).unwrap();
        let (h, _) = zeno_generator(&ops::maximally_mixed(2), &c, &SuperOperator::zero(2)).unwrap();
        assert!(h.norm() < 1e-15);
    }

    #[test]
    fn identity_coupling_has_no_second_order() {
        let c = HamiltonianCoupling::dispersive(ops::identity(2), ops::sigma_x()).unwrap();
        let sys = BipartiteSystem::new(driven_decay(0.3, 1.0), SubsystemSpec::trivial(2), Coupling::Hamiltonian(c), 0.1).unwrap();
        let model = build_reduced_model(&sys).unwrap();
        assert!(model.f_ops.f[0].norm() < 1e-12);
        assert!(model.x.norm() < 1e-12 && model.y.norm() < 1e-12);
        assert!(model.channels.is_empty());
    }

    #[test]
    fn undriven_tls_has_no_dephasing() {
        let model = build_reduced_model(&tls_system(0.0, 1.0, 0.01)).unwrap();
        assert!(model.x.norm() < 1e-12);
        assert!(model.y.norm() < 1e-12);
        // rho_A = |g><g|, tr(sigma_z rho_A) = -1
        assert!((model.zeno_hamiltonian.scale(model.epsilon) + ops::sigma_z().scale(0.01)).norm() < 1e-12);
    }

    #[test]
    fn residual_of_f_operators() {
        let h = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((i + j) as f64 * 0.2, (i as f64 - j as f64) * 0.3));
        let spec = SubsystemSpec::new(3, crate::linalg::hermitian_part(&h), vec![
            Jump { operator: ops::annihilation(3), rate: 1.0 },
            Jump { operator: ops::number(3), rate: 0.3 },
        ]).unwrap();
        let la = build_generator(&spec);
        let rho = crate::lindblad::steady_state(&la).unwrap();
        let a = ops::annihilation(3) + ops::creation(3).scale(0.5);
        let c = HamiltonianCoupling::new(vec![
            CouplingTerm { a: a.clone(), b: ops::sigma_minus() },
            CouplingTerm { a: a.adjoint(), b: ops::sigma_plus() },
        ]).unwrap();
        let f = compute_f(&la, &rho, &c).unwrap();
        for (k, t) in c.terms().iter().enumerate() {
            let w = &t.a * &rho - &rho * trace(&(&t.a * &rho));
            assert!((-la.apply(&(&f.f[k] * &rho)) - w).norm() < 1e-9);
        }
        assert!(f.trace_defect < 1e-12);
    }

    #[test]
    fn psd_factor_modes() {
        let tol = Tolerances::default();
        let id = ops::identity(3);
        let l = psd_factor(&id, PsdMode::Cholesky, &tol).unwrap();
        assert!((l - &id).norm() < 1e-15);
        let g = ComplexMatrix::from_fn(3, 2, |i, j| C64::new(i as f64 - j as f64, 0.5 * (i + j) as f64));
        let x = &g * g.adjoint();
        for mode in [PsdMode::Cholesky, PsdMode::Eigen] {
            let l = psd_factor(&x, mode, &tol).unwrap();
            assert!((&l * l.adjoint() - &x).norm() < 1e-10 * x.norm());
        }
        assert!(psd_factor(&ops::sigma_z(), PsdMode::Eigen, &tol).is_err());
    }

    #[test]
    fn kraus_at_zero_epsilon_is_product() {
        let mut sys = tls_system(0.3, 1.0, 0.01);
        sys = sys.with_epsilon(0.0).unwrap();
        let model = build_reduced_model(&sys).unwrap();
        let rho = ops::plus_state();
        assert!((model.embed(&rho) - kron(&model.rho_a, &rho)).norm() < 1e-15);
        assert!(model.generator(2).norm() == 0.0);
    }

    #[test]
    fn kraus_taylor_remainder_is_second_order() {
        let rho = ops::plus_state();
        let mut prev: Option<(f64, f64)> = None;
        for eps in [0.02, 0.01, 0.005] {
            let model = build_reduced_model(&tls_system(0.3, 1.0, eps)).unwrap();
            let p = kron(&model.rho_a, &rho);
            let m = &model.kraus.m;
            let lin = &p + (m * &p * (-I) + &p * m.adjoint() * I) * C64::new(eps, 0.0);
            let taylor = (model.embed(&rho) - lin).norm();
            let tr_a = partial_trace(&model.embed(&rho), 2, 2, Subsystem::A).unwrap();
            let defect = trace_norm(&(tr_a - &rho));
            if let Some((t0, d0)) = prev {
                assert!(((t0 / taylor).log2() - 2.0).abs() < 0.1);
                assert!(((d0 / defect).log2() - 2.0).abs() < 0.1);
            }
            prev = Some((taylor, defect));
        }
    }

    #[test]
    fn zero_gauge_adds_slow_rotation() {
        let sys = tls_system(0.3, 1.0, 0.01);
        let simple = build_reduced_model(&sys).unwrap();
        let zero = build_reduced_model_with(&sys, &Tolerances::default(), PsdMode::Cholesky, Gauge::Zero { tau: Some(2.0) }).unwrap();
        let rho = ops::plus_state();
        let diff = (simple.embed(&rho) - zero.embed(&rho)).norm();
        assert!(diff > 1e-4 && diff < 1e-1);
        assert_eq!(zero.diagnostics.gauge.label(), "zero");
    }
}
