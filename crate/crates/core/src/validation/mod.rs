//! Brute-force checks of the reduced models: exact joint generator, trajectory
//! errors, epsilon-scaling fits and complete-positivity audits.

pub mod audit;
pub mod presets;

use serde::Serialize;

use crate::cascade::{cascade_fast_generator, cascade_reduced_model_with, CascadeModel};
use crate::error::{Error, Result, StageExt};
use crate::hamiltonian::{build_reduced_model_with, Gauge, PsdMode, ReducedModel};
use crate::lindblad::{build_generator, SuperOperator};
use crate::linalg::{
    devectorize, hermitian_part, identity, kron, min_hermitian_eigenvalue, trace, trace_norm, vectorize,
    ComplexMatrix, Propagator, Subsystem,
};
use crate::system::{BipartiteSystem, Coupling};
use crate::tolerances::Tolerances;

/// Default number of sample times over the slow horizon.
pub const DEFAULT_SAMPLES: usize = 50;

/// Exact generator on `H_A ⊗ H_B`.
///
/// Hamiltonian coupling: `L_A ⊗ I + epsilon (-i[H_int, .] + I ⊗ L_B)`.
/// Cascade coupling: `(L_A + D[a]) ⊗ I + epsilon L_int + epsilon^2 (I ⊗ (D[b] + L_B))`
/// with `L_int(rho) = a[rho, b^†] + [b, rho]a^†`.
pub fn full_generator(system: &BipartiteSystem) -> Result<SuperOperator> {
    let (da, db) = system.dims();
    let eps = system.epsilon();
    let lb = build_generator(system.slow());
    match system.coupling() {
        Coupling::Hamiltonian(c) => {
            let la = build_generator(system.fast()).lift(db, Subsystem::A);
            let hint = SuperOperator::hamiltonian(&c.interaction_hamiltonian());
            Ok(la + (hint + lb.lift(da, Subsystem::B)) * eps)
        }
        Coupling::Cascade(c) => {
            let a = c.output();
            let fast = cascade_fast_generator(system.fast(), &a).lift(db, Subsystem::A);
            let aj = kron(&a, &identity(db));
            let bj = kron(&identity(da), c.b());
            let slow = (SuperOperator::dissipator(c.b()) + lb).lift(da, Subsystem::B);
            Ok(fast + cascade_interaction(&aj, &bj) * eps + slow * (eps * eps))
        }
    }
}

/// `X -> a X b^† - a b^† X + b X a^† - X b a^†` on the joint space.
fn cascade_interaction(aj: &ComplexMatrix, bj: &ComplexMatrix) -> SuperOperator {
    let ad = aj.adjoint();
    let bd = bj.adjoint();
    SuperOperator::sandwich(aj, &bd) - SuperOperator::left(&(aj * &bd)) + SuperOperator::sandwich(bj, &ad)
        - SuperOperator::right(&(bj * &ad))
}

/// Options shared by both elimination pipelines.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReduceOptions {
    pub tolerances: Tolerances,
    pub psd_mode: PsdMode,
    pub gauge: Gauge,
}

/// Output of either elimination pipeline.
#[derive(Debug, Clone)]
pub enum Reduced {
    Hamiltonian(Box<ReducedModel>),
    Cascade(Box<CascadeModel>),
}

impl Reduced {
    pub fn generator(&self, order: u8) -> SuperOperator {
        match self {
            Reduced::Hamiltonian(m) => m.generator(order),
            Reduced::Cascade(m) => m.generator(order),
        }
    }

    pub fn embed(&self, rho_s: &ComplexMatrix) -> ComplexMatrix {
        match self {
            Reduced::Hamiltonian(m) => m.embed(rho_s),
            Reduced::Cascade(m) => m.embed(rho_s),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Reduced::Hamiltonian(m) => m.epsilon,
            Reduced::Cascade(m) => m.epsilon,
        }
    }

    pub fn rho_a(&self) -> &ComplexMatrix {
        match self {
            Reduced::Hamiltonian(m) => &m.rho_a,
            Reduced::Cascade(m) => &m.rho_a,
        }
    }
}

pub fn reduce(system: &BipartiteSystem, opts: &ReduceOptions) -> Result<Reduced> {
    match system.coupling() {
        Coupling::Hamiltonian(_) => Ok(Reduced::Hamiltonian(Box::new(build_reduced_model_with(
            system,
            &opts.tolerances,
            opts.psd_mode,
            opts.gauge,
        )?))),
        Coupling::Cascade(_) => Ok(Reduced::Cascade(Box::new(cascade_reduced_model_with(system, &opts.tolerances)?))),
    }
}

/// Sampled comparison of the full dynamics with both reduced models.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryReport {
    pub epsilon: f64,
    pub horizon: f64,
    /// Fast-time sample points `t_i = i T / n`, `T = horizon / epsilon`.
    pub times: Vec<f64>,
    pub errors_order1: Vec<f64>,
    pub errors_order2: Vec<f64>,
    pub sup_order1: f64,
    pub sup_order2: f64,
    /// Largest `|tr rho(t) - tr rho(0)|` of the full state.
    pub max_trace_defect: f64,
    /// Smallest eigenvalue of the full state over all samples.
    pub min_eigenvalue: f64,
}

impl TrajectoryReport {
    pub fn sup(&self, order: u8) -> f64 {
        if order >= 2 {
            self.sup_order2
        } else {
            self.sup_order1
        }
    }
}

/// `max_t || exp(t L_full)(embed(rho_s)) - embed(exp(t L_red)(rho_s)) ||_tr` for the
/// first- and second-order reduced generators, with `t` on `n` uniform steps of
/// `[0, horizon/epsilon]`.
pub fn trajectory_errors(
    system: &BipartiteSystem,
    reduced: &Reduced,
    rho_s: &ComplexMatrix,
    horizon: f64,
    samples: usize,
) -> Result<TrajectoryReport> {
    let eps = system.epsilon();
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("trajectory comparison needs epsilon > 0".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) || samples == 0 {
        return Err(Error::InvalidParameter(format!(
            "need a positive horizon and at least one sample, got {horizon} and {samples}"
        )));
    }
    let (_, db) = system.dims();
    if rho_s.shape() != (db, db) {
        return Err(Error::Dimension(format!("initial slow state must be {db}x{db}")));
    }
    let dt = horizon / eps / samples as f64;
    let full = full_generator(system).stage("full generator")?;
    let p_full = Propagator::new(full.matrix(), dt);
    let p1 = Propagator::new(reduced.generator(1).matrix(), dt);
    let p2 = Propagator::new(reduced.generator(2).matrix(), dt);

    let rho0 = reduced.embed(rho_s);
    let trace0 = trace(&rho0);
    let mut v_full = vectorize(&rho0);
    let mut v1 = vectorize(rho_s);
    let mut v2 = v1.clone();
    let mut report = TrajectoryReport {
        epsilon: eps,
        horizon,
        times: Vec::with_capacity(samples),
        errors_order1: Vec::with_capacity(samples),
        errors_order2: Vec::with_capacity(samples),
        sup_order1: 0.0,
        sup_order2: 0.0,
        max_trace_defect: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    for i in 1..=samples {
        v_full = p_full.step(&v_full);
        v1 = p1.step(&v1);
        v2 = p2.step(&v2);
        let rho_full = devectorize(&v_full)?;
        let e1 = trace_norm(&(&rho_full - reduced.embed(&devectorize(&v1)?)));
        let e2 = trace_norm(&(&rho_full - reduced.embed(&devectorize(&v2)?)));
        report.times.push(i as f64 * dt);
        report.errors_order1.push(e1);
        report.errors_order2.push(e2);
        report.sup_order1 = report.sup_order1.max(e1);
        report.sup_order2 = report.sup_order2.max(e2);
        report.max_trace_defect = report.max_trace_defect.max((trace(&rho_full) - trace0).norm());
        report.min_eigenvalue = report.min_eigenvalue.min(min_hermitian_eigenvalue(&hermitian_part(&rho_full)));
    }
    Ok(report)
}

/// Sup error of a single reduced order.
pub fn trajectory_error(
    system: &BipartiteSystem,
    reduced: &Reduced,
    order: u8,
    rho_s: &ComplexMatrix,
    horizon: f64,
    samples: usize,
) -> Result<f64> {
    Ok(trajectory_errors(system, reduced, rho_s, horizon, samples)?.sup(order))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "flag")]
pub enum ScalingFlag {
    /// Errors of this order do not decrease monotonically with epsilon.
    NonMonotone { order: u8 },
    /// Some error of this order is zero; no slope is fitted.
    ZeroError { order: u8 },
    /// Local slopes vary; the fit uses the three smallest epsilons only.
    Curvature { order: u8 },
    /// The epsilons span less than a decade.
    NarrowRange,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub errors_order1: Vec<f64>,
    pub errors_order2: Vec<f64>,
    pub fitted_slope_order1: Option<f64>,
    pub fitted_slope_order2: Option<f64>,
    /// Number of smallest-epsilon points each fit used.
    pub fit_points_order1: usize,
    pub fit_points_order2: usize,
    pub horizon: f64,
    pub samples: usize,
    pub flags: Vec<ScalingFlag>,
    pub max_trace_defect: f64,
    pub min_eigenvalue: f64,
}

/// Spread of consecutive log-log slopes above which the fit is restricted to
/// the asymptotic end.
const CURVATURE_SPREAD: f64 = 0.25;

/// Sweep `epsilon`, compare full and reduced dynamics at each point and fit
/// log-log slopes of the sup errors.
pub fn epsilon_scaling<F>(
    family: F,
    epsilons: &[f64],
    horizon: f64,
    samples: usize,
    rho_s: &ComplexMatrix,
    opts: &ReduceOptions,
) -> Result<ScalingReport>
where
    F: Fn(f64) -> Result<BipartiteSystem>,
{
    let mut eps: Vec<f64> = epsilons.to_vec();
    if eps.len() < 4 || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("scaling needs at least four positive epsilons".into()));
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    if eps.len() < 4 {
        return Err(Error::InvalidParameter("scaling needs at least four distinct epsilons".into()));
    }
    let mut e1 = Vec::with_capacity(eps.len());
    let mut e2 = Vec::with_capacity(eps.len());
    let mut max_trace_defect = 0.0f64;
    let mut min_eigenvalue = f64::INFINITY;
    for &e in &eps {
        let system = family(e)?;
        let reduced = reduce(&system, opts)?;
        let r = trajectory_errors(&system, &reduced, rho_s, horizon, samples)?;
        e1.push(r.sup_order1);
        e2.push(r.sup_order2);
        max_trace_defect = max_trace_defect.max(r.max_trace_defect);
        min_eigenvalue = min_eigenvalue.min(r.min_eigenvalue);
    }
    let mut flags = Vec::new();
    if eps[0] / eps[eps.len() - 1] < 10.0 * (1.0 - 1e-12) {
        flags.push(ScalingFlag::NarrowRange);
    }
    let (s1, n1) = fit_order(&eps, &e1, 1, &mut flags);
    let (s2, n2) = fit_order(&eps, &e2, 2, &mut flags);
    Ok(ScalingReport {
        epsilons: eps,
        errors_order1: e1,
        errors_order2: e2,
        fitted_slope_order1: s1,
        fitted_slope_order2: s2,
        fit_points_order1: n1,
        fit_points_order2: n2,
        horizon,
        samples,
        flags,
        max_trace_defect,
        min_eigenvalue,
    })
}

fn fit_order(eps: &[f64], err: &[f64], order: u8, flags: &mut Vec<ScalingFlag>) -> (Option<f64>, usize) {
    if err.iter().any(|e| !(*e > 0.0)) {
        flags.push(ScalingFlag::ZeroError { order });
        return (None, 0);
    }
    // eps is decreasing, so a converging error is decreasing too
    if err.windows(2).any(|w| w[1] >= w[0]) {
        flags.push(ScalingFlag::NonMonotone { order });
    }
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let local: Vec<f64> = (1..lx.len()).map(|i| (ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1])).collect();
    let spread = local.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - local.iter().cloned().fold(f64::INFINITY, f64::min);
    let n = lx.len();
    if spread > CURVATURE_SPREAD && n > 3 {
        flags.push(ScalingFlag::Curvature { order });
        (Some(log_log_slope(&lx[n - 3..], &ly[n - 3..])), 3)
    } else {
        (Some(log_log_slope(&lx, &ly)), n)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CptpReport {
    /// Smallest eigenvalue of the Choi matrix `sum_ij |i><j| ⊗ Phi(|i><j|)`.
    pub choi_min_eig: f64,
    /// `max_ij |tr Phi(|i><j|) - delta_ij|`
    pub trace_defect: f64,
}

/// Complete positivity and trace preservation of a linear map given by its
/// action on `dim x dim` matrices.
pub fn cptp_check<F>(map: F, dim: usize) -> CptpReport
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    let mut blocks = Vec::with_capacity(dim * dim);
    let mut trace_defect = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut e = ComplexMatrix::zeros(dim, dim);
            e[(i, j)] = crate::linalg::ONE;
            let out = map(&e);
            let want = if i == j { 1.0 } else { 0.0 };
            trace_defect = trace_defect.max((trace(&out) - want).norm());
            blocks.push(out);
        }
    }
    let dout = blocks.first().map_or(0, |b| b.nrows());
    let mut choi = ComplexMatrix::zeros(dim * dout, dim * dout);
    for i in 0..dim {
        for j in 0..dim {
            choi.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&blocks[i * dim + j]);
        }
    }
    CptpReport { choi_min_eig: min_hermitian_eigenvalue(&hermitian_part(&choi)), trace_defect }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::HamiltonianCoupling;
    use crate::lindblad::{propagate, Jump, SubsystemSpec};
    use crate::linalg::{C64, I};
    use crate::ops;

    #[test]
    fn zero_epsilon_is_lifted_fast_generator() {
        let sys = presets::qubit_tls(0.3, 1.0, 0.0).unwrap();
        assert_eq!(sys.epsilon(), 0.0);
        let full = full_generator(&sys).unwrap();
        let la = build_generator(sys.fast()).lift(2, Subsystem::A);
        assert!((full.matrix() - la.matrix()).norm() < 1e-15);
    }

    #[test]
    fn qubit_tls_generator_matches_master_equation() {
        let (u, gamma, chi) = (0.3, 1.0, 0.01);
        let sys = presets::qubit_tls(u, gamma, chi).unwrap();
        let full = full_generator(&sys).unwrap();
        let i2 = identity(2);
        let sp = kron(&ops::sigma_plus(), &i2);
        let sm = kron(&ops::sigma_minus(), &i2);
        let zz = kron(&ops::sigma_z(), &ops::sigma_z());
        let rho = random_state(4, 3);
        let drive = (&sp - &sm) * &rho - &rho * (&sp - &sm);
        let decay = &sm * &rho * sm.adjoint() - (sm.adjoint() * &sm * &rho + &rho * sm.adjoint() * &sm).scale(0.5);
        let want = drive.scale(u) + decay.scale(gamma) - (&zz * &rho - &rho * &zz) * (I * chi);
        let got = full.apply(&rho);
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn cascade_generator_matches_termwise_assembly() {
        let sys = presets::squeezed(1.0, 0.1, 6, None, 0.05).unwrap();
        let full = full_generator(&sys).unwrap();
        let n = 6;
        let a = kron(&ops::annihilation(n), &identity(2));
        let b = kron(&identity(n), &ops::sigma_minus());
        let rho = random_state(2 * n, 9);
        let h = (&a * &a - a.adjoint() * a.adjoint()) * C64::new(0.1, 0.0);
        let eps = 0.05;
        let want = (&h * &rho - &rho * &h)
            + &a * &rho * a.adjoint()
            - (a.adjoint() * &a * &rho + &rho * a.adjoint() * &a).scale(0.5)
            + (&a * (&rho * b.adjoint() - b.adjoint() * &rho) + (&b * &rho - &rho * &b) * a.adjoint()).scale(eps)
            + (&b * &rho * b.adjoint() - (b.adjoint() * &b * &rho + &rho * b.adjoint() * &b).scale(0.5))
                .scale(eps * eps);
        assert!((full.apply(&rho) - want).norm() < 1e-12);
    }

    fn random_state(d: usize, seed: u64) -> ComplexMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let r = &g * g.adjoint();
        let t = trace(&r);
        r / t
    }

    #[test]
    fn trivial_fast_space_gives_exact_reduction() {
        // one-dimensional fast space: the reduced model is the full dynamics
        let h = ComplexMatrix::from_element(1, 1, C64::new(0.7, 0.0));
        let a = SubsystemSpec::new(1, ComplexMatrix::zeros(1, 1), vec![]).unwrap();
        let b = SubsystemSpec::new(2, ComplexMatrix::zeros(2, 2), vec![Jump { operator: ops::sigma_minus(), rate: 0.4 }])
            .unwrap();
        let c = HamiltonianCoupling::dispersive(h, ops::sigma_x()).unwrap();
        let sys = BipartiteSystem::new(a, b, Coupling::Hamiltonian(c), 0.1).unwrap();
        let red = reduce(&sys, &ReduceOptions::default()).unwrap();
        let r = trajectory_errors(&sys, &red, &ops::plus_state(), 1.0, 20).unwrap();
        assert!(r.sup_order1 < 1e-12 && r.sup_order2 < 1e-12, "{} {}", r.sup_order1, r.sup_order2);
    }

    #[test]
    fn qubit_tls_error_is_second_order_small() {
        let sys = presets::qubit_tls(0.3, 1.0, 0.01).unwrap();
        let red = reduce(&sys, &ReduceOptions::default()).unwrap();
        let r = trajectory_errors(&sys, &red, &ops::plus_state(), 1.0, DEFAULT_SAMPLES).unwrap();
        assert!(r.sup_order2 < 5e-3, "{}", r.sup_order2);
        assert!(r.sup_order2 < r.sup_order1);
        assert!(r.max_trace_defect < 1e-10 && r.min_eigenvalue > -1e-9, "{} {}", r.max_trace_defect, r.min_eigenvalue);
    }

    #[test]
    fn propagation_matches_reference_at_samples() {
        let sys = presets::qubit_tls(0.3, 1.0, 0.02).unwrap();
        let red = reduce(&sys, &ReduceOptions::default()).unwrap();
        let r = trajectory_errors(&sys, &red, &ops::plus_state(), 1.0, 5).unwrap();
        let full = full_generator(&sys).unwrap();
        let t = r.times[4];
        let rho_full = propagate(&full, &red.embed(&ops::plus_state()), t).unwrap();
        let rho_red = propagate(&red.generator(2), &ops::plus_state(), t).unwrap();
        let e = trace_norm(&(rho_full - red.embed(&rho_red)));
        assert!((e - r.errors_order2[4]).abs() < 1e-10);
    }

    #[test]
    fn zero_coupling_family_is_flagged() {
        let family = |eps: f64| {
            let a = SubsystemSpec::trivial(2).with_jump(ops::sigma_minus(), 1.0)?;
            let c = HamiltonianCoupling::dispersive(ops::zero(2), ops::sigma_z())?;
            BipartiteSystem::new(a, SubsystemSpec::trivial(2), Coupling::Hamiltonian(c), eps)
        };
        let r = epsilon_scaling(family, &[0.1, 0.05, 0.02, 0.01], 1.0, 10, &ops::plus_state(), &ReduceOptions::default())
            .unwrap();
        assert!(r.errors_order1.iter().chain(&r.errors_order2).all(|e| *e < 1e-12));
        assert!(r.fitted_slope_order1.is_none() || r.flags.contains(&ScalingFlag::ZeroError { order: 1 }));
    }

    #[test]
    fn scaling_rejects_short_sweeps() {
        let family = |eps: f64| presets::qubit_tls(0.3, 1.0, eps);
        let err = epsilon_scaling(family, &[0.1, 0.05, 0.02], 1.0, 10, &ops::plus_state(), &ReduceOptions::default());
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let x: Vec<f64> = [0.1f64, 0.05, 0.02, 0.01].iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = [0.1f64, 0.05, 0.02, 0.01].iter().map(|e| (3.0 * e * e).ln()).collect();
        assert!((log_log_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_restricts_fit() {
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let err = [0.5, 0.02, 0.005, 0.00125];
        let mut flags = Vec::new();
        let (s, n) = fit_order(&eps, &err, 2, &mut flags);
        assert_eq!(n, 3);
        assert!((s.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(flags, vec![ScalingFlag::Curvature { order: 2 }]);
    }

    #[test]
    fn cptp_of_identity_and_transpose() {
        let id = cptp_check(|x| x.clone(), 3);
        assert!(id.choi_min_eig.abs() < 1e-14 && id.trace_defect < 1e-15);
        let tr = cptp_check(|x| x.transpose(), 2);
        assert!((tr.choi_min_eig + 1.0).abs() < 1e-14);
    }

    #[test]
    fn kraus_embedding_is_cp_with_second_order_trace_defect() {
        let defects: Vec<f64> = [0.05, 0.025]
            .iter()
            .map(|&chi| {
                let sys = presets::qubit_tls(0.3, 1.0, chi).unwrap();
                let red = reduce(&sys, &ReduceOptions::default()).unwrap();
                let rep = cptp_check(|x| red.embed(x), 2);
                assert!(rep.choi_min_eig >= -1e-12, "{}", rep.choi_min_eig);
                rep.trace_defect
            })
            .collect();
        let slope = (defects[0] / defects[1]).log2();
        assert!((slope - 2.0).abs() < 0.1, "{defects:?}");
    }
}
