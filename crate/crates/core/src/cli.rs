//! Command-line front end: `reduce`, `validate`, `scaling`, `example`, `audit`.
//!
//! Exit codes: 0 success, 2 unreadable or invalid input, 3 numerical failure,
//! 4 channel-condition violation.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::document::{DocumentError, GaugeKind, SystemDocument};
use crate::hamiltonian::{Gauge, PsdMode};
use crate::linalg::trace;
use crate::ops;
use crate::report::{self, Format, Report};
use crate::system::BipartiteSystem;
use crate::tolerances::Tolerances;
use crate::validation::{self, presets, reduce, ReduceOptions, Reduced, DEFAULT_SAMPLES};

/// Environment variable naming the directory reports go to when `--out` is absent.
pub const OUT_DIR_ENV: &str = "ADELIM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CONJECTURE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "adelim", version, about = "Adiabatic elimination of a fast subsystem in bipartite open quantum systems")]
pub struct Cli {
    /// Override one tolerance, e.g. `--tol fock_audit=1e-6`. Repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    /// Fock cutoff for oscillator subsystems.
    #[arg(long, global = true)]
    pub fock_n: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub gauge: Option<GaugeArg>,
    /// Slow rotation time of the zero gauge.
    #[arg(long, global = true)]
    pub gauge_tau: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub psd_mode: Option<PsdArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum GaugeArg {
    Simple,
    Zero,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum PsdArg {
    Cholesky,
    Eigen,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduced slow dynamics of a system document.
    Reduce {
        input: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
        #[command(flatten)]
        output: Output,
    },
    /// Compare full and reduced trajectories.
    Validate {
        input: PathBuf,
        /// Slow-time horizon; the fast-time span is `horizon / epsilon`.
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Error scaling of both reduced orders over a list of epsilons.
    Scaling {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Reduce and validate a named example: `qubit_tls`, `two_photon` or `squeezed`.
    Example {
        name: String,
        /// Parameters as `key=value`, e.g. `u=0.3 gamma=1 chi=0.01`.
        params: Vec<String>,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Also write the example's system document to this path.
        #[arg(long)]
        emit_document: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Randomized property suites.
    Audit {
        #[arg(long, default_value_t = 100)]
        random_instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(#[from] crate::Error),
    #[error("audit failed: {0} property violations")]
    AuditFailed(usize),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Document(_) | CliError::Usage(_) => EXIT_PARSE,
            CliError::Numeric(e) if e.is_conjecture_violation() => EXIT_CONJECTURE,
            CliError::Numeric(_) | CliError::AuditFailed(_) => EXIT_NUMERIC,
            CliError::Write { .. } => 1,
        }
    }
}

/// Parse arguments, run the command and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn apply_tolerance(tol: &mut Tolerances, spec: &str) -> Result<(), CliError> {
    let (name, value) = spec.split_once('=').ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got '{spec}'")))?;
    let v: f64 = value.trim().parse().map_err(|_| CliError::Usage(format!("--tol {name}: '{value}' is not a number")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!("--tol {name}: tolerance must be positive")));
    }
    let mut obj = serde_json::to_value(*tol).expect("tolerances serialize");
    match obj.get_mut(name.trim()) {
        Some(slot) => *slot = json!(v),
        None => return Err(CliError::Usage(format!("--tol: unknown tolerance '{name}'"))),
    }
    *tol = serde_json::from_value(obj).expect("tolerances round-trip");
    Ok(())
}

impl Cli {
    /// Document options with the command-line overrides applied.
    fn options(&self, base: ReduceOptions) -> Result<ReduceOptions, CliError> {
        let mut o = base;
        for t in &self.tol {
            apply_tolerance(&mut o.tolerances, t)?;
        }
        if let Some(m) = self.psd_mode {
            o.psd_mode = match m {
                PsdArg::Cholesky => PsdMode::Cholesky,
                PsdArg::Eigen => PsdMode::Eigen,
            };
        }
        let tau = self.gauge_tau.or(match base.gauge {
            Gauge::Zero { tau } => tau,
            Gauge::Simple => None,
        });
        match self.gauge {
            Some(GaugeArg::Simple) => o.gauge = Gauge::Simple,
            Some(GaugeArg::Zero) => o.gauge = Gauge::Zero { tau },
            None => {
                if let Gauge::Zero { .. } = o.gauge {
                    o.gauge = Gauge::Zero { tau };
                }
            }
        }
        Ok(o)
    }

    fn load(&self, path: &Path) -> Result<(SystemDocument, BipartiteSystem, ReduceOptions), CliError> {
        let mut doc = SystemDocument::load(path)?;
        if self.fock_n.is_some() {
            doc.options.fock_n = self.fock_n;
        }
        if let Some(GaugeArg::Zero) = self.gauge {
            doc.options.gauge = GaugeKind::Zero;
        }
        let system = doc.build()?;
        let opts = self.options(doc.options.reduce_options())?;
        Ok((doc, system, opts))
    }
}

fn emit(report: &Report, output: &Output, default_name: &str) -> Result<(), CliError> {
    let text = report.render(output.format);
    let path = match (&output.out, std::env::var_os(OUT_DIR_ENV)) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(PathBuf::from(dir).join(format!("{default_name}.{}", output.format.extension()))),
        (None, None) => None,
    };
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|source| CliError::Write { path: parent.display().to_string(), source })?;
            }
            std::fs::write(&p, text).map_err(|source| CliError::Write { path: p.display().to_string(), source })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Reduce { input, order, output } => {
            let (_, system, opts) = cli.load(input)?;
            let reduced = reduce(&system, &opts)?;
            emit(&report::reduce_report(&reduced, system.dims(), *order, &opts), output, "reduce")
        }
        Command::Validate { input, horizon, samples, output } => {
            let (doc, system, opts) = cli.load(input)?;
            let rho = doc.initial_state(system.dims().1)?;
            let reduced = reduce(&system, &opts)?;
            let t = validation::trajectory_errors(&system, &reduced, &rho, *horizon, *samples)?;
            emit(&report::validate_report(&t, &opts), output, "validate")
        }
        Command::Scaling { input, epsilons, horizon, samples, output } => {
            let (doc, system, opts) = cli.load(input)?;
            let rho = doc.initial_state(system.dims().1)?;
            let s = validation::epsilon_scaling(|e| system.with_epsilon(e), epsilons, *horizon, *samples, &rho, &opts)?;
            emit(&report::scaling_report(&s, &opts), output, "scaling")
        }
        Command::Example { name, params, horizon, samples, emit_document, output } => {
            let ex = NamedExample::parse(name, params, cli.fock_n)?;
            let doc = ex.document();
            if let Some(p) = emit_document {
                std::fs::write(p, doc.to_json()).map_err(|source| CliError::Write { path: p.display().to_string(), source })?;
            }
            let system = ex.system()?;
            let opts = cli.options(ReduceOptions::default())?;
            let rho = doc.initial_state(system.dims().1)?;
            let reduced = reduce(&system, &opts)?;
            let mut rep = report::reduce_report(&reduced, system.dims(), 2, &opts);
            let obj = rep.json.as_object_mut().expect("reports are objects");
            obj.insert("command".into(), json!("example"));
            obj.insert("example".into(), json!({ "name": ex.name(), "parameters": ex.parameters() }));
            obj.insert("closed_form".into(), ex.closed_form(&reduced));
            if system.epsilon() > 0.0 {
                let t = validation::trajectory_errors(&system, &reduced, &rho, *horizon, *samples)?;
                obj.insert("trajectory".into(), report::trajectory_json(&t));
            }
            emit(&rep, output, &format!("example_{}", ex.name()))
        }
        Command::Audit { random_instances, seed, output } => {
            let opts = cli.options(ReduceOptions::default())?;
            let a = validation::audit::run_audit(*random_instances, *seed, &opts.tolerances);
            emit(&report::audit_report(&a, &opts), output, "audit")?;
            for s in &a.suites {
                eprintln!("{:<22} passed {:>5}  failed {:>5}", s.name, s.passed, s.failed);
            }
            if a.all_passed() {
                Ok(())
            } else {
                Err(CliError::AuditFailed(a.failures()))
            }
        }
    }
}

/// One of the named examples with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedExample {
    QubitTls { u: f64, gamma: f64, chi: f64 },
    TwoPhoton { u: f64, kappa_m: f64, kappa_p: f64, g: f64, chi: f64, fock_n: usize },
    Squeezed { kappa: f64, g: f64, fock_n: usize, epsilon: f64 },
}

fn parse_params(params: &[String], allowed: &[&str]) -> Result<Vec<(String, f64)>, CliError> {
    let mut out = Vec::new();
    for p in params {
        let (k, v) = p.split_once('=').ok_or_else(|| CliError::Usage(format!("parameter '{p}' is not key=value")))?;
        if !allowed.contains(&k) {
            return Err(CliError::Usage(format!("unknown parameter '{k}', expected one of {}", allowed.join(", "))));
        }
        let v: f64 = v.parse().map_err(|_| CliError::Usage(format!("parameter {k}: '{v}' is not a number")))?;
        out.push((k.to_string(), v));
    }
    Ok(out)
}

fn get(params: &[(String, f64)], key: &str, default: f64) -> f64 {
    params.iter().rev().find(|(k, _)| k == key).map_or(default, |(_, v)| *v)
}

impl NamedExample {
    pub fn parse(name: &str, params: &[String], fock_n: Option<usize>) -> Result<Self, CliError> {
        match name {
            "qubit_tls" => {
                let p = parse_params(params, &["u", "gamma", "chi"])?;
                Ok(NamedExample::QubitTls { u: get(&p, "u", 0.3), gamma: get(&p, "gamma", 1.0), chi: get(&p, "chi", 0.01) })
            }
            "two_photon" => {
                let p = parse_params(params, &["u", "kappa_m", "kappa_p", "g", "chi"])?;
                Ok(NamedExample::TwoPhoton {
                    u: get(&p, "u", 0.05),
                    kappa_m: get(&p, "kappa_m", 1.0),
                    kappa_p: get(&p, "kappa_p", 0.01),
                    g: get(&p, "g", 1e-3),
                    chi: get(&p, "chi", 1e-3),
                    fock_n: fock_n.unwrap_or(presets::TWO_PHOTON_FOCK_N),
                })
            }
            "squeezed" => {
                let p = parse_params(params, &["kappa", "g", "epsilon"])?;
                Ok(NamedExample::Squeezed {
                    kappa: get(&p, "kappa", 1.0),
                    g: get(&p, "g", 0.1),
                    fock_n: fock_n.unwrap_or(presets::SQUEEZED_FOCK_N),
                    epsilon: get(&p, "epsilon", 0.02),
                })
            }
            other => Err(CliError::Usage(format!("unknown example '{other}', expected qubit_tls, two_photon or squeezed"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NamedExample::QubitTls { .. } => "qubit_tls",
            NamedExample::TwoPhoton { .. } => "two_photon",
            NamedExample::Squeezed { .. } => "squeezed",
        }
    }

    fn parameters(&self) -> Value {
        match *self {
            NamedExample::QubitTls { u, gamma, chi } => json!({ "u": u, "gamma": gamma, "chi": chi }),
            NamedExample::TwoPhoton { u, kappa_m, kappa_p, g, chi, fock_n } => {
                json!({ "u": u, "kappa_m": kappa_m, "kappa_p": kappa_p, "g": g, "chi": chi, "fock_n": fock_n })
            }
            NamedExample::Squeezed { kappa, g, fock_n, epsilon } => {
                json!({ "kappa": kappa, "g": g, "fock_n": fock_n, "epsilon": epsilon })
            }
        }
    }

    pub fn system(&self) -> crate::Result<BipartiteSystem> {
        match *self {
            NamedExample::QubitTls { u, gamma, chi } => presets::qubit_tls(u, gamma, chi),
            NamedExample::TwoPhoton { u, kappa_m, kappa_p, g, chi, fock_n } => {
                presets::two_photon(u, kappa_m, kappa_p, g, chi, fock_n)
            }
            NamedExample::Squeezed { kappa, g, fock_n, epsilon } => presets::squeezed(kappa, g, fock_n, None, epsilon),
        }
    }

    pub fn document(&self) -> SystemDocument {
        use crate::document::examples;
        match *self {
            NamedExample::QubitTls { u, gamma, chi } => examples::qubit_tls(u, gamma, chi),
            NamedExample::TwoPhoton { u, kappa_m, kappa_p, g, chi, fock_n } => {
                examples::two_photon(u, kappa_m, kappa_p, g, chi, fock_n)
            }
            NamedExample::Squeezed { kappa, g, fock_n, epsilon } => examples::squeezed(kappa, g, fock_n, epsilon),
        }
    }

    /// Known closed-form values next to the pipeline's, in physical units.
    fn closed_form(&self, reduced: &Reduced) -> Value {
        match (*self, reduced) {
            (NamedExample::QubitTls { u, gamma, chi }, Reduced::Hamiltonian(m)) => {
                let cf = presets::qubit_tls_closed_form(u, gamma, chi);
                let e = m.epsilon;
                // eps H_zeno = -c sigma_z; eps^2 X_00 is the sigma_z dephasing rate
                let c = -(trace(&(&m.zeno_hamiltonian * ops::sigma_z())).re / 2.0) * e;
                json!({
                    "hamiltonian_coefficient": { "closed_form": cf.hamiltonian_coefficient, "pipeline": c },
                    "dephasing_rate": { "closed_form": cf.dephasing_rate, "pipeline": m.x[(0, 0)].re * e * e },
                })
            }
            (NamedExample::TwoPhoton { u, kappa_m, kappa_p, g, chi, .. }, Reduced::Hamiltonian(m)) => {
                let (x, z) = presets::two_photon_bloch(u, kappa_m, kappa_p);
                let e2 = m.epsilon * m.epsilon;
                json!({
                    "bloch_x": { "closed_form": x, "pipeline": trace(&(ops::sigma_x() * &m.rho_a)).re },
                    "bloch_z": { "closed_form": z, "pipeline": trace(&(ops::sigma_z() * &m.rho_a)).re },
                    "x": { "closed_form": report::matrix(&presets::two_photon_x(u, kappa_m, kappa_p, g, chi)),
                           "pipeline": report::matrix(&(&m.x * crate::linalg::C64::new(e2, 0.0))) },
                    "y": { "closed_form": report::matrix(&presets::two_photon_y(u, kappa_m, kappa_p, g, chi)),
                           "pipeline": report::matrix(&(&m.y * crate::linalg::C64::new(e2, 0.0))) },
                })
            }
            (NamedExample::Squeezed { kappa, g, .. }, Reduced::Cascade(m)) => {
                let (a, b) = presets::squeezed_alpha_beta(kappa, g);
                json!({
                    "alpha": { "closed_form": a, "pipeline": report::complex(m.alpha) },
                    "beta": { "closed_form": b, "pipeline": report::complex(m.beta) },
                })
            }
            _ => Value::Null,
        }
    }
}
