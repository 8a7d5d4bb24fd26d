//! Randomized structural audit: PSD of `X`, Lindblad form of both reduced
//! orders, kernel inclusion and the cascade channel equations.

use adiabatic_elim::validation::audit::run_audit;
use adiabatic_elim::Tolerances;

fn main() {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let report = run_audit(instances, 0, &Tolerances::default());
    for s in &report.suites {
        println!("{:<22} passed {:>4}  failed {:>4}  worst {:.2e}", s.name, s.passed, s.failed, s.worst);
    }
    println!("{}", if report.all_passed() { "all passed" } else { "FAILURES" });
}
