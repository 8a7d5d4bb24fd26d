//! JSON system documents: two subsystems, their coupling, `epsilon` and run
//! options. Matrices are written as expressions over named builders.
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "subsystem_a": {"dim": 2, "hamiltonian": {"scale": -0.3, "of": "sigma_y"},
//!                   "jumps": [{"operator": "sigma_minus", "rate": 1.0}]},
//!   "subsystem_b": {"dim": 2},
//!   "coupling": {"type": "hamiltonian", "terms": [{"a": "sigma_z", "b": "sigma_z"}]},
//!   "epsilon": 0.01
//! }
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::CascadeCoupling;
use crate::hamiltonian::{CouplingTerm, Gauge, HamiltonianCoupling, PsdMode};
use crate::lindblad::{Jump, SubsystemSpec};
use crate::linalg::{ComplexMatrix, Subsystem, C64};
use crate::ops;
use crate::system::{BipartiteSystem, Coupling, Truncation};
use crate::tolerances::Tolerances;
use crate::validation::ReduceOptions;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid document at {path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> DocumentError {
    DocumentError::Invalid { path: path.into(), message: message.into() }
}

/// Real number or `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> C64 {
        match self {
            Scalar::Real(r) => C64::new(r, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

impl From<f64> for Scalar {
    fn from(r: f64) -> Self {
        Scalar::Real(r)
    }
}

impl From<C64> for Scalar {
    fn from(c: C64) -> Self {
        if c.im == 0.0 {
            Scalar::Real(c.re)
        } else {
            Scalar::Complex([c.re, c.im])
        }
    }
}

/// Matrix expression. The dimension is fixed by where the expression appears.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixExpr {
    /// `sigma_minus`, `sigma_plus`, `sigma_x`, `sigma_y`, `sigma_z`, `excited`
    /// (qubits only), `annihilation`, `creation`, `number`, `identity`, `zero`.
    Named(String),
    Scaled { scale: Scalar, of: Box<MatrixExpr> },
    Sum { sum: Vec<MatrixExpr> },
    Product { product: Vec<MatrixExpr> },
    Dagger { dagger: Box<MatrixExpr> },
    /// Rows of `[re, im]` pairs.
    Entries { entries: Vec<Vec<[f64; 2]>> },
}

impl MatrixExpr {
    pub fn named(name: &str) -> Self {
        MatrixExpr::Named(name.to_string())
    }

    pub fn scaled(self, s: impl Into<Scalar>) -> Self {
        MatrixExpr::Scaled { scale: s.into(), of: Box::new(self) }
    }

    pub fn dagger(self) -> Self {
        MatrixExpr::Dagger { dagger: Box::new(self) }
    }

    pub fn sum(items: Vec<MatrixExpr>) -> Self {
        MatrixExpr::Sum { sum: items }
    }

    pub fn product(items: Vec<MatrixExpr>) -> Self {
        MatrixExpr::Product { product: items }
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        MatrixExpr::Entries {
            entries: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
        }
    }

    pub fn evaluate(&self, dim: usize, path: &str) -> Result<ComplexMatrix, DocumentError> {
        match self {
            MatrixExpr::Named(name) => named_matrix(name, dim, path),
            MatrixExpr::Scaled { scale, of } => Ok(of.evaluate(dim, &format!("{path}.of"))? * scale.value()),
            MatrixExpr::Sum { sum } => {
                let mut acc = ComplexMatrix::zeros(dim, dim);
                for (i, e) in sum.iter().enumerate() {
                    acc += e.evaluate(dim, &format!("{path}.sum[{i}]"))?;
                }
                Ok(acc)
            }
            MatrixExpr::Product { product } => {
                let mut acc = ComplexMatrix::identity(dim, dim);
                for (i, e) in product.iter().enumerate() {
                    acc *= e.evaluate(dim, &format!("{path}.product[{i}]"))?;
                }
                Ok(acc)
            }
            MatrixExpr::Dagger { dagger } => Ok(dagger.evaluate(dim, &format!("{path}.dagger"))?.adjoint()),
            MatrixExpr::Entries { entries } => {
                if entries.len() != dim || entries.iter().any(|r| r.len() != dim) {
                    return Err(invalid(path, format!("explicit matrix must be {dim}x{dim}")));
                }
                Ok(ComplexMatrix::from_fn(dim, dim, |i, j| C64::new(entries[i][j][0], entries[i][j][1])))
            }
        }
    }
}

fn named_matrix(name: &str, dim: usize, path: &str) -> Result<ComplexMatrix, DocumentError> {
    let qubit = |m: ComplexMatrix| {
        if dim == 2 {
            Ok(m)
        } else {
            Err(invalid(path, format!("'{name}' needs dimension 2, found {dim}")))
        }
    };
    match name {
        "sigma_minus" => qubit(ops::sigma_minus()),
        "sigma_plus" => qubit(ops::sigma_plus()),
        "sigma_x" => qubit(ops::sigma_x()),
        "sigma_y" => qubit(ops::sigma_y()),
        "sigma_z" => qubit(ops::sigma_z()),
        "excited" => qubit(ops::excited_projector()),
        "annihilation" => Ok(ops::annihilation(dim)),
        "creation" => Ok(ops::creation(dim)),
        "number" => Ok(ops::number(dim)),
        "identity" => Ok(ops::identity(dim)),
        "zero" => Ok(ops::zero(dim)),
        other => Err(invalid(path, format!("unknown matrix builder '{other}'"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpDoc {
    pub operator: MatrixExpr,
    #[serde(default = "one")]
    pub rate: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemDoc {
    /// Required unless `oscillator` is set, in which case `options.fock_n` is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Truncated oscillator whose cutoff is `options.fock_n`, audited by doubling.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub oscillator: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixExpr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jumps: Vec<JumpDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub a: MatrixExpr,
    pub b: MatrixExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CouplingDoc {
    /// `H_int = sum_k A_k ⊗ B_k^†`
    Hamiltonian { terms: Vec<TermDoc> },
    /// Fast output `sqrt(rate) a` feeding the slow operator `b`.
    Cascade { a: MatrixExpr, b: MatrixExpr, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeKind {
    #[default]
    Simple,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_n: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub gauge: GaugeKind,
    /// Slow rotation time of the zero gauge; defaults to the inverse spectral gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_tau: Option<f64>,
    #[serde(default)]
    pub psd_mode: PsdMode,
}

impl OptionsDoc {
    pub fn gauge(&self) -> Gauge {
        match self.gauge {
            GaugeKind::Simple => Gauge::Simple,
            GaugeKind::Zero => Gauge::Zero { tau: self.gauge_tau },
        }
    }

    pub fn reduce_options(&self) -> ReduceOptions {
        ReduceOptions { tolerances: self.tolerances, psd_mode: self.psd_mode, gauge: self.gauge() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub schema_version: String,
    pub subsystem_a: SubsystemDoc,
    pub subsystem_b: SubsystemDoc,
    pub coupling: CouplingDoc,
    pub epsilon: f64,
    /// Slow initial state for `validate` and `scaling`; maximally mixed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<MatrixExpr>,
    #[serde(default)]
    pub options: OptionsDoc,
}

impl SystemDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: SystemDocument = serde_path_to_error::deserialize(de).map_err(|e| DocumentError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported schema version '{}', expected '{SCHEMA_VERSION}'", doc.schema_version),
            ));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| DocumentError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    fn dim_of(&self, sub: &SubsystemDoc, name: &str, fock_n: Option<usize>) -> Result<usize, DocumentError> {
        let d = if sub.oscillator {
            let n = fock_n.ok_or_else(|| invalid(format!("{name}.oscillator"), "oscillator needs options.fock_n"))?;
            if let Some(d) = sub.dim {
                if d != n {
                    return Err(invalid(format!("{name}.dim"), format!("dim {d} disagrees with options.fock_n {n}")));
                }
            }
            n
        } else {
            sub.dim.ok_or_else(|| invalid(format!("{name}.dim"), "missing dim"))?
        };
        if d == 0 {
            return Err(invalid(format!("{name}.dim"), "dimension must be positive"));
        }
        Ok(d)
    }

    fn spec(&self, sub: &SubsystemDoc, name: &str, dim: usize) -> Result<SubsystemSpec, DocumentError> {
        let h = match &sub.hamiltonian {
            Some(e) => e.evaluate(dim, &format!("{name}.hamiltonian"))?,
            None => ComplexMatrix::zeros(dim, dim),
        };
        let mut jumps = Vec::with_capacity(sub.jumps.len());
        for (i, j) in sub.jumps.iter().enumerate() {
            jumps.push(Jump { operator: j.operator.evaluate(dim, &format!("{name}.jumps[{i}].operator"))?, rate: j.rate });
        }
        SubsystemSpec::new(dim, h, jumps).map_err(|e| invalid(name, e.to_string()))
    }

    /// Assemble the system, with `fock_n` overriding `options.fock_n`.
    pub fn build_with_fock(&self, fock_n: Option<usize>) -> Result<BipartiteSystem, DocumentError> {
        let fock = fock_n.or(self.options.fock_n);
        let da = self.dim_of(&self.subsystem_a, "subsystem_a", fock)?;
        let db = self.dim_of(&self.subsystem_b, "subsystem_b", fock)?;
        let a = self.spec(&self.subsystem_a, "subsystem_a", da)?;
        let b = self.spec(&self.subsystem_b, "subsystem_b", db)?;
        let coupling = match &self.coupling {
            CouplingDoc::Hamiltonian { terms } => {
                let mut ts = Vec::with_capacity(terms.len());
                for (i, t) in terms.iter().enumerate() {
                    ts.push(CouplingTerm {
                        a: t.a.evaluate(da, &format!("coupling.terms[{i}].a"))?,
                        b: t.b.evaluate(db, &format!("coupling.terms[{i}].b"))?,
                    });
                }
                Coupling::Hamiltonian(HamiltonianCoupling::new(ts).map_err(|e| invalid("coupling", e.to_string()))?)
            }
            CouplingDoc::Cascade { a, b, rate } => Coupling::Cascade(
                CascadeCoupling::new(a.evaluate(da, "coupling.a")?, b.evaluate(db, "coupling.b")?, *rate)
                    .map_err(|e| invalid("coupling", e.to_string()))?,
            ),
        };
        let mut system = BipartiteSystem::new(a, b, coupling, self.epsilon).map_err(|e| invalid("epsilon", e.to_string()))?;
        let side = match (self.subsystem_a.oscillator, self.subsystem_b.oscillator) {
            (true, _) => Some(Subsystem::A),
            (false, true) => Some(Subsystem::B),
            _ => None,
        };
        if let (Some(side), Some(n)) = (side, fock) {
            let doc = self.clone();
            let refine = Arc::new(move |n: usize| {
                doc.build_with_fock(Some(n)).map_err(|e| crate::Error::InvalidParameter(e.to_string()))
            });
            system = system.with_truncation(Truncation { side, fock_n: n, refine });
        }
        Ok(system)
    }

    pub fn build(&self) -> Result<BipartiteSystem, DocumentError> {
        self.build_with_fock(None)
    }

    /// Slow initial state, maximally mixed when the document gives none.
    pub fn initial_state(&self, db: usize) -> Result<ComplexMatrix, DocumentError> {
        match &self.initial_state {
            None => Ok(ops::maximally_mixed(db)),
            Some(e) => {
                let rho = e.evaluate(db, "initial_state")?;
                if !crate::lindblad::is_density_matrix(&rho, &self.options.tolerances) {
                    return Err(invalid("initial_state", "not a density matrix"));
                }
                Ok(rho)
            }
        }
    }
}

/// Documents for the named examples.
pub mod examples {
    use super::*;

    fn base(a: SubsystemDoc, b: SubsystemDoc, coupling: CouplingDoc, epsilon: f64) -> SystemDocument {
        SystemDocument {
            schema_version: SCHEMA_VERSION.into(),
            subsystem_a: a,
            subsystem_b: b,
            coupling,
            epsilon,
            initial_state: None,
            options: OptionsDoc::default(),
        }
    }

    fn plus() -> MatrixExpr {
        MatrixExpr::sum(vec![MatrixExpr::named("identity"), MatrixExpr::named("sigma_x")]).scaled(0.5)
    }

    /// Same system as [`crate::validation::presets::qubit_tls`].
    pub fn qubit_tls(u: f64, gamma: f64, chi: f64) -> SystemDocument {
        let a = SubsystemDoc {
            dim: Some(2),
            hamiltonian: Some(MatrixExpr::named("sigma_y").scaled(-u)),
            jumps: vec![JumpDoc { operator: MatrixExpr::named("sigma_minus"), rate: gamma }],
            ..Default::default()
        };
        let b = SubsystemDoc { dim: Some(2), ..Default::default() };
        let scale = if chi < 0.0 { -gamma } else { gamma };
        let coupling = CouplingDoc::Hamiltonian {
            terms: vec![TermDoc { a: MatrixExpr::named("sigma_z").scaled(scale), b: MatrixExpr::named("sigma_z") }],
        };
        let mut d = base(a, b, coupling, chi.abs() / gamma);
        d.initial_state = Some(plus());
        d
    }

    /// Same system as [`crate::validation::presets::two_photon`].
    pub fn two_photon(u: f64, kappa_m: f64, kappa_p: f64, g: f64, chi: f64, fock_n: usize) -> SystemDocument {
        let eps = g.abs().max(chi.abs()) / kappa_m;
        let s = if eps > 0.0 { 1.0 / eps } else { 0.0 };
        let a = SubsystemDoc {
            dim: Some(2),
            hamiltonian: Some(MatrixExpr::named("sigma_y").scaled(u)),
            jumps: vec![
                JumpDoc { operator: MatrixExpr::named("sigma_minus"), rate: kappa_m },
                JumpDoc { operator: MatrixExpr::named("sigma_plus"), rate: kappa_p },
            ],
            ..Default::default()
        };
        let b = SubsystemDoc { oscillator: true, ..Default::default() };
        let cc = MatrixExpr::product(vec![MatrixExpr::named("creation"), MatrixExpr::named("creation")]);
        let aa = MatrixExpr::product(vec![MatrixExpr::named("annihilation"), MatrixExpr::named("annihilation")]);
        let coupling = CouplingDoc::Hamiltonian {
            terms: vec![
                TermDoc { a: MatrixExpr::named("sigma_plus").scaled(g * s), b: cc },
                TermDoc { a: MatrixExpr::named("sigma_minus").scaled(g * s), b: aa },
                TermDoc { a: MatrixExpr::named("excited").scaled(chi * s), b: MatrixExpr::named("number") },
            ],
        };
        let mut d = base(a, b, coupling, eps);
        d.options.fock_n = Some(fock_n);
        d.initial_state = Some(
            MatrixExpr::Entries {
                entries: (0..fock_n)
                    .map(|i| (0..fock_n).map(|j| if i < 2 && j < 2 { [0.5, 0.0] } else { [0.0, 0.0] }).collect())
                    .collect(),
            },
        );
        d
    }

    /// Same system as [`crate::validation::presets::squeezed`] with `b = sigma_-`.
    pub fn squeezed(kappa: f64, g: f64, fock_n: usize, epsilon: f64) -> SystemDocument {
        let aa = MatrixExpr::product(vec![MatrixExpr::named("annihilation"), MatrixExpr::named("annihilation")]);
        let cc = MatrixExpr::product(vec![MatrixExpr::named("creation"), MatrixExpr::named("creation")]);
        let a = SubsystemDoc {
            oscillator: true,
            hamiltonian: Some(MatrixExpr::sum(vec![aa, cc.scaled(-1.0)]).scaled(C64::new(0.0, g))),
            ..Default::default()
        };
        let b = SubsystemDoc { dim: Some(2), ..Default::default() };
        let coupling =
            CouplingDoc::Cascade { a: MatrixExpr::named("annihilation"), b: MatrixExpr::named("sigma_minus"), rate: kappa };
        let mut d = base(a, b, coupling, epsilon);
        d.options.fock_n = Some(fock_n);
        d.initial_state = Some(plus());
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::{full_generator, presets};

    #[test]
    fn named_examples_match_presets() {
        let pairs = [
            (examples::qubit_tls(0.3, 1.0, -0.01).build().unwrap(), presets::qubit_tls(0.3, 1.0, -0.01).unwrap()),
            (
                examples::two_photon(0.05, 1.0, 0.01, 1e-3, 2e-3, 5).build().unwrap(),
                presets::two_photon(0.05, 1.0, 0.01, 1e-3, 2e-3, 5).unwrap(),
            ),
            (examples::squeezed(1.0, 0.1, 5, 0.02).build().unwrap(), presets::squeezed(1.0, 0.1, 5, None, 0.02).unwrap()),
        ];
        for (a, b) in pairs {
            assert_eq!(a.epsilon(), b.epsilon());
            let fa = full_generator(&a).unwrap();
            let fb = full_generator(&b).unwrap();
            assert!((fa.matrix() - fb.matrix()).norm() < 1e-13);
            assert_eq!(a.truncation().map(|t| (t.side, t.fock_n)), b.truncation().map(|t| (t.side, t.fock_n)));
        }
    }

    #[test]
    fn round_trip() {
        let doc = examples::squeezed(1.0, 0.1, 5, 0.02);
        assert_eq!(SystemDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn parse_error_carries_path() {
        let text = r#"{"schema_version":"1","subsystem_a":{"dim":2,"jumps":[{"operator":"sigma_minus","rate":"x"}]},
            "subsystem_b":{"dim":2},"coupling":{"type":"hamiltonian","terms":[]},"epsilon":0.1}"#;
        match SystemDocument::from_json(text) {
            Err(DocumentError::Parse { path, .. }) => assert_eq!(path, "subsystem_a.jumps[0].rate"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_errors_are_reported() {
        let mut doc = examples::qubit_tls(0.3, 1.0, 0.01);
        doc.subsystem_b.dim = Some(3);
        match doc.build() {
            Err(DocumentError::Invalid { path, .. }) => assert_eq!(path, "coupling.terms[0].b"),
            other => panic!("{other:?}"),
        }
        let doc: SystemDocument = SystemDocument::from_json(
            r#"{"schema_version":"1","subsystem_a":{"dim":2,"hamiltonian":{"entries":[[[0,0]]]}},
            "subsystem_b":{"dim":2},"coupling":{"type":"hamiltonian","terms":[]},"epsilon":0.1}"#,
        )
        .unwrap();
        assert!(matches!(doc.build(), Err(DocumentError::Invalid { .. })));
    }

    #[test]
    fn unknown_builder_and_version() {
        let mut doc = examples::qubit_tls(0.3, 1.0, 0.01);
        doc.initial_state = Some(MatrixExpr::named("sigma_w"));
        assert!(doc.initial_state(2).is_err());
        let text = examples::qubit_tls(0.3, 1.0, 0.01).to_json().replace("\"schema_version\": \"1\"", "\"schema_version\": \"9\"");
        assert!(matches!(SystemDocument::from_json(&text), Err(DocumentError::Invalid { .. })));
    }
}
