//! Scaling and trajectory properties of the three worked examples.

use adiabatic_elim::linalg::C64;
use adiabatic_elim::ops;
use adiabatic_elim::validation::presets;
use adiabatic_elim::validation::{epsilon_scaling, reduce, trajectory_errors, ReduceOptions, ScalingReport};
use adiabatic_elim::{BipartiteSystem, Result};

const EPSILONS: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];

fn cavity_superposition(n: usize) -> adiabatic_elim::linalg::ComplexMatrix {
    let mut amps = vec![C64::new(0.0, 0.0); n];
    amps[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[1] = amps[0];
    ops::pure_state(&amps)
}

fn sweep(name: &str, family: impl Fn(f64) -> Result<BipartiteSystem>, rho: &adiabatic_elim::linalg::ComplexMatrix) -> ScalingReport {
    let r = epsilon_scaling(family, &EPSILONS, 1.0, 50, rho, &ReduceOptions::default()).unwrap();
    println!(
        "{name}: errors1 {:?}, errors2 {:?}, slopes {:?} / {:?}, flags {:?}",
        r.errors_order1, r.errors_order2, r.fitted_slope_order1, r.fitted_slope_order2, r.flags
    );
    assert!(r.max_trace_defect <= 1e-10, "{name}: trace drift {}", r.max_trace_defect);
    assert!(r.min_eigenvalue >= -1e-9, "{name}: negative eigenvalue {}", r.min_eigenvalue);
    r
}

fn slopes(r: &ScalingReport) -> (f64, f64) {
    (r.fitted_slope_order1.unwrap(), r.fitted_slope_order2.unwrap())
}

#[test]
fn qubit_tls_orders_separate() {
    let r = sweep("qubit-TLS", |e| presets::qubit_tls(0.3, 1.0, e), &ops::plus_state());
    let (s1, s2) = slopes(&r);
    assert!(s2 - s1 >= 0.6, "slopes {s1} {s2}");
}

#[test]
fn two_photon_orders_separate() {
    let n = 10;
    let r = sweep("two-photon", |e| presets::two_photon(0.05, 1.0, 0.01, e, e, n), &cavity_superposition(n));
    let (s1, s2) = slopes(&r);
    assert!(s2 - s1 >= 0.6, "slopes {s1} {s2}");
}

#[test]
fn squeezed_family_second_order_slope() {
    // g = 0.05 keeps the cavity converged at 12 Fock levels
    let r = sweep("squeezed", |e| presets::squeezed(1.0, 0.05, 12, None, e), &ops::plus_state());
    let (s1, s2) = slopes(&r);
    assert!((1.7..=2.5).contains(&s2), "order-2 slope {s2}");
    assert!(s2 - s1 >= 0.6, "slopes {s1} {s2}");
}

#[test]
fn squeezed_example_second_order_is_five_times_better() {
    let system = presets::squeezed(1.0, 0.1, presets::SQUEEZED_FOCK_N, None, 0.02).unwrap();
    let reduced = reduce(&system, &ReduceOptions::default()).unwrap();
    let r = trajectory_errors(&system, &reduced, &ops::plus_state(), 1.0, 50).unwrap();
    println!("squeezed eps=0.02: sup errors {:.3e} / {:.3e}", r.sup_order1, r.sup_order2);
    assert!(r.sup_order2 * 5.0 <= r.sup_order1);
    assert!(r.max_trace_defect <= 1e-10);
    assert!(r.min_eigenvalue >= -1e-9);
}
