//! Seeded randomized property suites over small systems (dimensions 2 to 4).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cascade::{cascade_alpha_beta, cascade_fast_generator, channel_form, second_order_from_definition, solve_channel_coefficients};
use crate::error::Result;
use crate::hamiltonian::{build_reduced_model_with, x_form_dissipator, CouplingTerm, Gauge, HamiltonianCoupling, PsdMode};
use crate::lindblad::{gks_decompose_with, kernel_inclusion_defect, steady_state_with, Jump, SubsystemSpec, SuperOperator, TracelessSolver};
use crate::linalg::{hermitian_eigen, hermitian_part, trace, ComplexMatrix, C64};
use crate::system::{BipartiteSystem, Coupling};
use crate::tolerances::Tolerances;

/// Bound on the channel-coefficient and channel-form residuals.
pub const RESIDUAL_BOUND: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// Largest value of the audited quantity (its meaning depends on the suite).
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult { name, passed: 0, failed: 0, worst: 0.0, first_failure: None }
    }

    fn record(&mut self, instance: usize, value: f64, ok: bool) {
        if value.is_finite() {
            self.worst = self.worst.max(value);
        }
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(format!("instance {instance}: value {value:e}"));
            }
        }
    }

    fn record_error(&mut self, instance: usize, err: &crate::Error) {
        self.failed += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(format!("instance {instance}: {err}"));
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub seed: u64,
    pub instances: usize,
    pub suites: Vec<SuiteResult>,
}

impl AuditReport {
    pub fn failures(&self) -> usize {
        self.suites.iter().map(|s| s.failed).sum()
    }

    pub fn all_passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    hermitian_part(&random_matrix(rng, d, d))
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    random_matrix(rng, d, d).qr().q()
}

/// Random fast subsystem with one to three random jump operators; its steady
/// state is unique and of full rank with probability one.
pub fn random_fast_spec(rng: &mut ChaCha8Rng, d: usize) -> Result<SubsystemSpec> {
    let jumps = (0..rng.gen_range(1..=3))
        .map(|_| Jump { operator: random_matrix(rng, d, d), rate: rng.gen_range(0.2..1.5) })
        .collect();
    SubsystemSpec::new(d, random_hermitian(rng, d), jumps)
}

/// Random fast subsystem whose unique steady state has rank `r < d`: the
/// complement of an `r`-dimensional subspace decays into it, and the dynamics
/// inside it is generic. The whole construction is rotated by a random unitary.
pub fn random_rank_deficient_spec(rng: &mut ChaCha8Rng, d: usize, r: usize) -> Result<SubsystemSpec> {
    let u = random_unitary(rng, d);
    let rot = |x: &ComplexMatrix| &u * x * u.adjoint();
    let mut h = ComplexMatrix::zeros(d, d);
    h.view_mut((0, 0), (r, r)).copy_from(&random_hermitian(rng, r));
    h.view_mut((r, r), (d - r, d - r)).copy_from(&random_hermitian(rng, d - r));
    let mut jumps = Vec::new();
    // one decay per excited level keeps the complement from trapping population
    for j in r..d {
        let mut l = ComplexMatrix::zeros(d, d);
        l.view_mut((0, j), (r, 1)).copy_from(&random_matrix(rng, r, 1));
        jumps.push(Jump { operator: rot(&l), rate: rng.gen_range(0.5..1.5) });
    }
    if r > 1 {
        let mut inner = ComplexMatrix::zeros(d, d);
        inner.view_mut((0, 0), (r, r)).copy_from(&random_matrix(rng, r, r));
        jumps.push(Jump { operator: rot(&inner), rate: rng.gen_range(0.5..1.5) });
    }
    SubsystemSpec::new(d, rot(&h), jumps)
}

/// Random Hermitian-closed coupling: each random pair `(A, B)` comes with
/// `(A^†, B^†)`.
pub fn random_coupling(rng: &mut ChaCha8Rng, da: usize, db: usize) -> Result<HamiltonianCoupling> {
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let a = random_matrix(rng, da, da).scale(0.5);
        let b = random_matrix(rng, db, db).scale(0.5);
        terms.push(CouplingTerm { a: a.adjoint(), b: b.adjoint() });
        terms.push(CouplingTerm { a, b });
    }
    HamiltonianCoupling::new(terms)
}

fn random_slow_spec(rng: &mut ChaCha8Rng, db: usize) -> Result<SubsystemSpec> {
    let jumps = vec![Jump { operator: random_matrix(rng, db, db), rate: rng.gen_range(0.0..0.5) }];
    SubsystemSpec::new(db, random_hermitian(rng, db).scale(0.3), jumps)
}

fn suite_rng(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite);
    rng
}

/// Run every suite on `instances` random instances. Each suite draws from its
/// own stream of the seeded generator, so the result depends only on
/// `(instances, seed, tol)`.
pub fn run_audit(instances: usize, seed: u64, tol: &Tolerances) -> AuditReport {
    let mut suites = Vec::new();
    suites.extend(hamiltonian_suites(instances, seed, tol));
    suites.push(kernel_suite(instances, seed, tol));
    suites.extend(cascade_suites(instances, seed, tol));
    AuditReport { seed, instances, suites }
}

fn hamiltonian_suites(instances: usize, seed: u64, tol: &Tolerances) -> Vec<SuiteResult> {
    let mut x_psd = SuiteResult::new("x_psd");
    let mut l1_gks = SuiteResult::new("l1_gks");
    let mut l2_gks = SuiteResult::new("l2_gks");
    let mut f_trace = SuiteResult::new("f_trace_zero");
    let mut factored = SuiteResult::new("factored_vs_x_form");
    let mut rng = suite_rng(seed, 1);
    for i in 0..instances {
        let da = rng.gen_range(2..=4);
        let db = rng.gen_range(2..=3);
        let built = (|| {
            let a = random_fast_spec(&mut rng, da)?;
            let b = random_slow_spec(&mut rng, db)?;
            let c = random_coupling(&mut rng, da, db)?;
            let sys = BipartiteSystem::new(a, b, Coupling::Hamiltonian(c.clone()), 0.1)?;
            let m = build_reduced_model_with(&sys, tol, PsdMode::Cholesky, Gauge::Simple)?;
            Ok::<_, crate::Error>((c, m))
        })();
        let (c, m) = match built {
            Ok(v) => v,
            Err(e) => {
                for s in [&mut x_psd, &mut l1_gks, &mut l2_gks, &mut f_trace, &mut factored] {
                    s.record_error(i, &e);
                }
                continue;
            }
        };
        let xn = m.x.norm().max(1.0);
        let herm = (&m.x - m.x.adjoint()).norm() / xn;
        let min = hermitian_eigen(&hermitian_part(&m.x)).0[0] / xn;
        x_psd.record(i, (-min).max(herm), herm <= tol.structural && min >= -tol.structural);

        for (suite, l) in [(&mut l1_gks, m.first_order()), (&mut l2_gks, m.second_order())] {
            match gks_decompose_with(&l, tol) {
                Ok(g) => suite.record(i, (-g.min_eigenvalue).max(0.0), g.is_lindblad),
                Err(e) => suite.record_error(i, &e),
            }
        }

        let tr = m.f_ops.f.iter().map(|f| trace(&(f * &m.rho_a)).norm()).fold(0.0, f64::max);
        f_trace.record(i, tr, tr <= tol.structural);

        let sum = m.channels.iter().fold(SuperOperator::zero(db), |acc, l| acc + SuperOperator::dissipator(l));
        let defect = (sum.matrix() - x_form_dissipator(&c, &m.x).matrix()).norm();
        factored.record(i, defect, defect <= RESIDUAL_BOUND);
    }
    vec![x_psd, l1_gks, l2_gks, f_trace, factored]
}

fn kernel_suite(instances: usize, seed: u64, tol: &Tolerances) -> SuiteResult {
    let mut suite = SuiteResult::new("kernel_inclusion");
    let mut rng = suite_rng(seed, 2);
    for i in 0..instances {
        let da = rng.gen_range(2..=4);
        let r = rng.gen_range(1..da);
        let db = rng.gen_range(2..=3);
        let run = (|| {
            let a = random_rank_deficient_spec(&mut rng, da, r)?;
            let c = random_coupling(&mut rng, da, db)?;
            let sys = BipartiteSystem::new(a, SubsystemSpec::trivial(db), Coupling::Hamiltonian(c), 0.1)?;
            build_reduced_model_with(&sys, tol, PsdMode::Cholesky, Gauge::Simple)
        })();
        match run {
            Ok(m) => {
                let (vals, _) = hermitian_eigen(&m.rho_a);
                let cut = 1e-10 * vals[da - 1];
                let rank = vals.iter().filter(|v| **v >= cut).count();
                let defect = m.f_ops.g.iter().map(|g| kernel_inclusion_defect(&m.rho_a, g, cut)).fold(0.0, f64::max);
                // the instance only tests inclusion if the kernel is really there
                suite.record(i, defect, rank == r && defect <= tol.structural * 10.0);
            }
            Err(e) => suite.record_error(i, &e),
        }
    }
    suite
}

fn cascade_suites(instances: usize, seed: u64, tol: &Tolerances) -> Vec<SuiteResult> {
    let mut alpha = SuiteResult::new("alpha_nonnegative");
    let mut coeffs = SuiteResult::new("channel_coefficients");
    let mut forms = SuiteResult::new("cascade_channel_form");
    let mut rng = suite_rng(seed, 3);
    for i in 0..instances {
        let da = rng.gen_range(2..=4);
        let db = rng.gen_range(2..=3);
        let run = (|| {
            let spec = SubsystemSpec::new(da, random_hermitian(&mut rng, da), vec![])?;
            let a = random_matrix(&mut rng, da, da);
            let b = random_matrix(&mut rng, db, db).scale(0.5);
            let lf = cascade_fast_generator(&spec, &a);
            let rho = steady_state_with(&lf, tol)?;
            let solver = TracelessSolver::new(&lf, &rho, tol)?;
            let ab = cascade_alpha_beta(&solver, &a, tol)?;
            Ok::<_, crate::Error>((a, b, ab))
        })();
        let (a, b, ab) = match run {
            Ok(v) => v,
            Err(e) => {
                for s in [&mut alpha, &mut coeffs, &mut forms] {
                    s.record_error(i, &e);
                }
                continue;
            }
        };
        alpha.record(i, (-ab.alpha.re).max(0.0), ab.alpha.re >= -tol.negative_alpha);
        match solve_channel_coefficients(ab.alpha, ab.beta, tol) {
            Ok(cc) => {
                let res = cc.residuals(ab.alpha, ab.beta).into_iter().fold(0.0, f64::max);
                coeffs.record(i, res, res <= RESIDUAL_BOUND);
                match second_order_from_definition(&a, &b, &ab.s_plus) {
                    Ok(def) => {
                        let direct = channel_form(&b, &cc, ab.alpha);
                        let d = (direct.matrix() - def.matrix()).norm() / def.norm().max(1.0);
                        forms.record(i, d, d <= RESIDUAL_BOUND);
                    }
                    Err(e) => forms.record_error(i, &e),
                }
            }
            Err(e) => {
                coeffs.record_error(i, &e);
                forms.record_error(i, &e);
            }
        }
    }
    vec![alpha, coeffs, forms]
}
