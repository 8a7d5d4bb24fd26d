//! Machine-readable reports: JSON documents with every float printed to 17
//! significant digits, flat CSV tables and a plain-text rendering.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::cascade::CascadeModel;
use crate::hamiltonian::ReducedModel;
use crate::linalg::{ComplexMatrix, C64};
use crate::validation::audit::AuditReport;
use crate::validation::{ReduceOptions, Reduced, ScalingReport, TrajectoryReport};

pub const REPORT_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

/// Header row plus rows of already formatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    pub table: Table,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json_string(&self.json),
            Format::Csv => self.table.to_csv(),
            Format::Text => to_text(&self.json),
        }
    }
}

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

struct DigitsFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for DigitsFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with floats at 17 significant digits. Non-finite floats become `null`.
pub fn to_json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, DigitsFormatter(PrettyFormatter::new()));
    v.serialize(&mut ser).expect("writing to a vector cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn to_text(v: &Value) -> String {
    let mut out = String::new();
    text_into(&mut out, v, 0);
    out
}

fn text_scalar(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map(fmt_f64).unwrap_or_else(|| n.to_string()),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

fn complex_pair(v: &Value) -> Option<(f64, f64)> {
    match v.as_array()?.as_slice() {
        [re, im] => Some((re.as_f64()?, im.as_f64()?)),
        _ => None,
    }
}

fn matrix_text(out: &mut String, pad: &str, entries: &Value) {
    for row in entries.as_array().into_iter().flatten() {
        let cells: Vec<String> = row
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(complex_pair)
            .map(|(re, im)| format!("({}, {})", fmt_f64(re), fmt_f64(im)))
            .collect();
        out.push_str(&format!("{pad}  {}\n", cells.join(" ")));
    }
}

fn text_into(out: &mut String, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(inner) if inner.contains_key("entries") => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        matrix_text(out, &pad, &inner["entries"]);
                    }
                    Value::Object(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        text_into(out, val, indent + 1);
                    }
                    Value::Array(items) if items.iter().any(|i| i.is_object()) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        for (i, item) in items.iter().enumerate() {
                            out.push_str(&format!("{pad}  [{i}]\n"));
                            match item.get("entries") {
                                Some(e) => matrix_text(out, &format!("{pad}  "), e),
                                None => text_into(out, item, indent + 2),
                            }
                        }
                    }
                    Value::Array(items) => {
                        let cells: Vec<String> = items.iter().map(text_scalar).collect();
                        out.push_str(&format!("{pad}{k}: [{}]\n", cells.join(", ")));
                    }
                    other => out.push_str(&format!("{pad}{k}: {}\n", text_scalar(other))),
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", text_scalar(other))),
    }
}

pub fn complex(c: C64) -> Value {
    json!([c.re, c.im])
}

pub fn matrix(m: &ComplexMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect())).collect();
    json!({ "entries": rows })
}

fn push_matrix(table: &mut Table, block: &str, m: &ComplexMatrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            table.rows.push(vec![block.into(), i.to_string(), j.to_string(), fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)]);
        }
    }
}

fn push_scalar(table: &mut Table, block: &str, c: C64) {
    table.rows.push(vec![block.into(), "0".into(), "0".into(), fmt_f64(c.re), fmt_f64(c.im)]);
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| json!(v))
}

/// Fields every report starts with.
pub fn header(command: &str, opts: &ReduceOptions) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(REPORT_SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m.insert("tolerances".into(), serde_json::to_value(opts.tolerances).expect("tolerances serialize"));
    let tau = match opts.gauge {
        crate::hamiltonian::Gauge::Zero { tau } => tau,
        crate::hamiltonian::Gauge::Simple => None,
    };
    m.insert("gauge".into(), json!({ "label": opts.gauge.label(), "tau": opt(tau) }));
    m.insert("psd_mode".into(), serde_json::to_value(opts.psd_mode).expect("psd mode serializes"));
    m
}

fn scale(m: &ComplexMatrix, s: f64) -> ComplexMatrix {
    m * C64::new(s, 0.0)
}

fn hamiltonian_blocks(m: &ReducedModel, order: u8, out: &mut Map<String, Value>, table: &mut Table) {
    let e = m.epsilon;
    let e2 = e * e;
    let zeno = scale(&m.zeno_hamiltonian, e);
    out.insert("model".into(), json!("hamiltonian"));
    out.insert("fast_steady_state".into(), matrix(&m.rho_a));
    out.insert("zeno_hamiltonian".into(), matrix(&zeno));
    push_matrix(table, "fast_steady_state", &m.rho_a);
    push_matrix(table, "zeno_hamiltonian", &zeno);
    if order >= 2 {
        let h2 = scale(&m.second_order_hamiltonian, e2);
        let x = scale(&m.x, e2);
        let y = scale(&m.y, e2);
        let channels: Vec<ComplexMatrix> = m.channels.iter().map(|c| scale(c, e)).collect();
        out.insert("second_order_hamiltonian".into(), matrix(&h2));
        out.insert("channels".into(), Value::Array(channels.iter().map(matrix).collect()));
        out.insert("x".into(), matrix(&x));
        out.insert("y".into(), matrix(&y));
        out.insert("channel_factor".into(), matrix(&scale(&m.lambda, e)));
        push_matrix(table, "second_order_hamiltonian", &h2);
        for (k, c) in channels.iter().enumerate() {
            push_matrix(table, &format!("channel_{k}"), c);
        }
        push_matrix(table, "x", &x);
        push_matrix(table, "y", &y);
    }
    let d = &m.diagnostics;
    out.insert(
        "diagnostics".into(),
        json!({
            "solve_residuals": d.solve_residuals,
            "kernel_inclusion_defect": d.kernel_inclusion_defect,
            "f_trace_defect": d.f_trace_defect,
            "x_min_eigenvalue": d.x_min_eigenvalue,
            "factor_error": d.factor_error,
            "channel_form_defect": d.channel_form_defect,
            "spectral_gap": opt(d.spectral_gap),
        }),
    );
}

fn cascade_blocks(m: &CascadeModel, order: u8, out: &mut Map<String, Value>, table: &mut Table) {
    let e = m.epsilon;
    let (cp, cm) = m.first_order_coefficients;
    let k1 = (&m.b * cp - m.b.adjoint() * cm) * C64::new(e, 0.0);
    out.insert("model".into(), json!("cascade"));
    out.insert("fast_steady_state".into(), matrix(&m.rho_a));
    out.insert("output_mean".into(), complex(cm));
    out.insert("first_order_commutator".into(), matrix(&k1));
    push_matrix(table, "fast_steady_state", &m.rho_a);
    push_matrix(table, "first_order_commutator", &k1);
    if order >= 2 {
        let c = &m.channel_coeffs;
        let channels: Vec<ComplexMatrix> = m.channel_operators().iter().map(|l| scale(l, e)).collect();
        let comm = m.commutator_coefficient * (e * e);
        out.insert("alpha".into(), complex(m.alpha));
        out.insert("beta".into(), complex(m.beta));
        out.insert(
            "channel_coefficients".into(),
            json!({ "x1": complex(c.x1), "y1": complex(c.y1), "x2": complex(c.x2), "y2": complex(c.y2) }),
        );
        out.insert("channels".into(), Value::Array(channels.iter().map(matrix).collect()));
        out.insert("commutator_coefficient".into(), complex(comm));
        push_scalar(table, "alpha", m.alpha);
        push_scalar(table, "beta", m.beta);
        push_scalar(table, "x1", c.x1);
        push_scalar(table, "y1", c.y1);
        push_scalar(table, "x2", c.x2);
        push_scalar(table, "y2", c.y2);
        push_scalar(table, "commutator_coefficient", comm);
        for (k, l) in channels.iter().enumerate() {
            push_matrix(table, &format!("channel_{k}"), l);
        }
    }
    let d = &m.diagnostics;
    out.insert(
        "diagnostics".into(),
        json!({
            "solve_residual": d.solve_residual,
            "kernel_inclusion_defect": d.kernel_inclusion_defect,
            "coefficient_residuals": d.coefficient_residuals,
            "channel_condition": d.channel_condition,
            "double_implementation_residual": d.double_implementation_residual,
            "truncation_change": opt(d.truncation_change),
            "spectral_gap": opt(d.spectral_gap),
        }),
    );
}

/// Reduced-model blocks in physical units: `epsilon H_zeno`, `epsilon^2 H_2`,
/// `epsilon L_k`, `epsilon^2 X`, `epsilon^2 Y` (or the cascade coefficients).
pub fn reduce_report(reduced: &Reduced, dims: (usize, usize), order: u8, opts: &ReduceOptions) -> Report {
    let mut out = header("reduce", opts);
    let mut table = Table::new(&["block", "row", "col", "re", "im"]);
    out.insert("epsilon".into(), json!(reduced.epsilon()));
    out.insert("dims".into(), json!([dims.0, dims.1]));
    out.insert("order".into(), json!(order));
    match reduced {
        Reduced::Hamiltonian(m) => hamiltonian_blocks(m, order, &mut out, &mut table),
        Reduced::Cascade(m) => cascade_blocks(m, order, &mut out, &mut table),
    }
    Report { json: Value::Object(out), table }
}

pub fn trajectory_json(t: &TrajectoryReport) -> Value {
    json!({
        "epsilon": t.epsilon,
        "horizon": t.horizon,
        "samples": t.times.len(),
        "sup_error_order1": t.sup_order1,
        "sup_error_order2": t.sup_order2,
        "max_trace_defect": t.max_trace_defect,
        "min_eigenvalue": t.min_eigenvalue,
        "times": t.times,
        "errors_order1": t.errors_order1,
        "errors_order2": t.errors_order2,
    })
}

pub fn validate_report(t: &TrajectoryReport, opts: &ReduceOptions) -> Report {
    let mut out = header("validate", opts);
    out.insert("trajectory".into(), trajectory_json(t));
    let mut table = Table::new(&["time", "error_order1", "error_order2"]);
    for i in 0..t.times.len() {
        table.rows.push(vec![fmt_f64(t.times[i]), fmt_f64(t.errors_order1[i]), fmt_f64(t.errors_order2[i])]);
    }
    Report { json: Value::Object(out), table }
}

pub fn scaling_report(s: &ScalingReport, opts: &ReduceOptions) -> Report {
    let mut out = header("scaling", opts);
    out.insert("scaling".into(), serde_json::to_value(s).expect("scaling report serializes"));
    let mut table = Table::new(&["epsilon", "error_order1", "error_order2"]);
    for i in 0..s.epsilons.len() {
        table.rows.push(vec![fmt_f64(s.epsilons[i]), fmt_f64(s.errors_order1[i]), fmt_f64(s.errors_order2[i])]);
    }
    Report { json: Value::Object(out), table }
}

pub fn audit_report(a: &AuditReport, opts: &ReduceOptions) -> Report {
    let mut out = header("audit", opts);
    out.insert("audit".into(), serde_json::to_value(a).expect("audit report serializes"));
    out.insert("failures".into(), json!(a.failures()));
    let mut table = Table::new(&["suite", "passed", "failed", "worst"]);
    for s in &a.suites {
        table.rows.push(vec![s.name.into(), s.passed.to_string(), s.failed.to_string(), fmt_f64(s.worst)]);
    }
    Report { json: Value::Object(out), table }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits_and_round_trip() {
        let x = 0.1f64 + 0.2;
        let s = to_json_string(&json!({ "x": x, "n": 3 }));
        assert!(s.contains("3.0000000000000004e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), x);
    }

    #[test]
    fn csv_has_header_and_newlines() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,2\n");
    }

    #[test]
    fn text_prints_matrices_row_wise() {
        let m = ComplexMatrix::identity(2, 2);
        let s = to_text(&json!({ "m": matrix(&m), "v": 1.5 }));
        assert!(s.starts_with("m:\n  (1.0000000000000000e0, 0.0000000000000000e0)"), "{s}");
        assert!(s.contains("v: 1.5000000000000000e0"));
    }
}
