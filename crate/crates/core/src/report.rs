//! Typed result tables and their CSV/JSON serialization.
//!
//! Every pipeline reduces to a [`Table`]: named columns over rows of
//! loosely-typed [`CellValue`]s.  The writers guarantee reproducible
//! bytes — fixed float formatting, LF line endings, stable JSON key
//! order — so "same seed, same report" can be checked by file
//! comparison.  The `*_table` builders translate the analytic and
//! Monte Carlo result structs into their canonical table layouts; both
//! the command-line front end and the acceptance checks go through them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{
    ConditionalTables, EmpiricalEstimate, EmpiricalLgReport, InvasivenessReport, SignallingScan,
};
use crate::inequalities::{InequalityReport, MaxViolation};
use crate::stats::{ContextTable, Scenario};

/// Schema tag embedded in every JSON report.
pub const SCHEMA_VERSION: &str = "lglab-report/1";

/// One cell of a report table.
///
/// Construct floats through [`CellValue::float`]: it maps NaN and
/// infinities to [`CellValue::Missing`], which serializes as an empty
/// CSV field / JSON `null`, so non-finite values cannot leak into
/// reports in a format-dependent way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValue {
    /// An integer (counts, sample sizes, indices).
    Int(i64),
    /// A finite floating-point value.
    Float(f64),
    /// A flag (satisfied / contextual / agree).
    Bool(bool),
    /// A label (quantities, verdicts, groups).
    Text(String),
    /// No value; empty in CSV, `null` in JSON.
    Missing,
}

impl CellValue {
    /// A float cell, or [`CellValue::Missing`] if `value` is not finite.
    pub fn float(value: f64) -> Self {
        if value.is_finite() {
            CellValue::Float(value)
        } else {
            CellValue::Missing
        }
    }

    fn csv_field(&self) -> String {
        match self {
            CellValue::Int(i) => i.to_string(),
            CellValue::Float(x) => format!("{x:.16e}"),
            CellValue::Bool(b) => b.to_string(),
            CellValue::Text(s) => s.clone(),
            CellValue::Missing => String::new(),
        }
    }
}

impl From<i64> for CellValue {
    fn from(value: i64) -> Self {
        CellValue::Int(value)
    }
}

impl From<u64> for CellValue {
    fn from(value: u64) -> Self {
        CellValue::Int(i64::try_from(value).expect("count fits in i64"))
    }
}

impl From<f64> for CellValue {
    fn from(value: f64) -> Self {
        CellValue::float(value)
    }
}

impl From<bool> for CellValue {
    fn from(value: bool) -> Self {
        CellValue::Bool(value)
    }
}

impl From<&str> for CellValue {
    fn from(value: &str) -> Self {
        CellValue::Text(value.to_string())
    }
}

impl From<String> for CellValue {
    fn from(value: String) -> Self {
        CellValue::Text(value)
    }
}

/// A named, column-labelled result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Identifies the report type (e.g. `scan-delta0`).
    pub name: String,
    /// Column headers, in emission order.
    pub columns: Vec<String>,
    /// Rows; every row has exactly `columns.len()` cells.
    pub rows: Vec<Vec<CellValue>>,
}

impl Table {
    /// An empty table with the given name and columns.
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row.
    ///
    /// # Panics
    ///
    /// If the row width does not match the column count (a programming
    /// error in a table builder, not a data condition).
    pub fn push_row(&mut self, row: Vec<CellValue>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width {} does not match {} columns of table {}",
            row.len(),
            self.columns.len(),
            self.name
        );
        self.rows.push(row);
    }
}

/// Writes the table as RFC 4180 CSV: a header row, floats at 17
/// significant digits (`{:.16e}`), LF line endings, missing cells empty.
///
/// # Errors
///
/// [`Error::Io`] on write failure.
pub fn write_csv<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut csv_writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    csv_writer.write_record(&table.columns).map_err(csv_error)?;
    for row in &table.rows {
        csv_writer
            .write_record(row.iter().map(|cell| cell.csv_field()))
            .map_err(csv_error)?;
    }
    csv_writer.flush()?;
    Ok(())
}

fn csv_error(err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

#[derive(Serialize)]
struct EnvelopeRef<'a> {
    schema_version: &'a str,
    name: &'a str,
    columns: &'a [String],
    rows: &'a [Vec<CellValue>],
}

#[derive(Deserialize)]
struct EnvelopeOwned {
    schema_version: String,
    name: String,
    columns: Vec<String>,
    rows: Vec<Vec<CellValue>>,
}

/// Writes the table as a single pretty-printed JSON object with a
/// `schema_version` field and stable key order, ending in a newline.
///
/// # Errors
///
/// [`Error::Io`] on write failure.
pub fn write_json<W: Write>(table: &Table, mut writer: W) -> Result<()> {
    let envelope = EnvelopeRef {
        schema_version: SCHEMA_VERSION,
        name: &table.name,
        columns: &table.columns,
        rows: &table.rows,
    };
    serde_json::to_writer_pretty(&mut writer, &envelope)
        .map_err(|err| Error::Format(format!("json: {err}")))?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Parses a table previously written by [`write_json`].
///
/// # Errors
///
/// [`Error::Format`] for unparseable input or a schema-version mismatch,
/// [`Error::Io`] on read failure.
pub fn read_json<R: Read>(reader: R) -> Result<Table> {
    let envelope: EnvelopeOwned =
        serde_json::from_reader(reader).map_err(|err| Error::Format(format!("json: {err}")))?;
    if envelope.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "unsupported schema version {:?} (expected {SCHEMA_VERSION:?})",
            envelope.schema_version
        )));
    }
    for row in &envelope.rows {
        if row.len() != envelope.columns.len() {
            return Err(Error::Format(format!(
                "row width {} does not match {} columns",
                row.len(),
                envelope.columns.len()
            )));
        }
    }
    Ok(Table {
        name: envelope.name,
        columns: envelope.columns,
        rows: envelope.rows,
    })
}

fn estimate_cells(estimate: &EmpiricalEstimate) -> [CellValue; 3] {
    [
        CellValue::float(estimate.value),
        CellValue::float(estimate.std_error),
        CellValue::from(estimate.n),
    ]
}

/// The modified-inequality verdict as the reports phrase it.
pub fn verdict_text(report: &InequalityReport) -> &'static str {
    if report.modified_satisfied {
        "satisfied"
    } else {
        "violated (contextual)"
    }
}

/// Single-row table of a purely analytic inequality evaluation.
pub fn analytic_table(taus: [f64; 3], scenario: Scenario, report: &InequalityReport) -> Table {
    let mut table = Table::new(
        "analytic-lg",
        &[
            "tau1",
            "tau2",
            "tau3",
            "scenario",
            "c12",
            "c23",
            "c13",
            "lg_lhs",
            "lg_satisfied",
            "sz_lower",
            "sz_upper",
            "sz_margin",
            "sz_satisfied",
            "delta0",
            "modified_lower",
            "modified_upper",
            "modified_margin",
            "modified_satisfied",
            "verdict",
        ],
    );
    table.push_row(vec![
        CellValue::float(taus[0]),
        CellValue::float(taus[1]),
        CellValue::float(taus[2]),
        CellValue::from(scenario.to_string()),
        CellValue::float(report.correlators.c12),
        CellValue::float(report.correlators.c23),
        CellValue::float(report.correlators.c13),
        CellValue::float(report.lg_lhs),
        CellValue::from(report.lg_satisfied),
        CellValue::float(report.sz_lower),
        CellValue::float(report.sz_upper),
        CellValue::float(report.sz_margin),
        CellValue::from(report.sz_satisfied),
        CellValue::float(report.delta0),
        CellValue::float(report.modified_lower),
        CellValue::float(report.modified_upper),
        CellValue::float(report.modified_margin),
        CellValue::from(report.modified_satisfied),
        CellValue::from(verdict_text(report)),
    ]);
    table
}

/// Quantity-per-row table of an empirical Leggett–Garg experiment, with
/// the analytic counterpart column where one exists.
pub fn lg_experiment_table(report: &EmpiricalLgReport) -> Table {
    let mut table = Table::new(
        &format!("lg-experiment-{}", report.scenario),
        &["quantity", "value", "std_error", "n", "analytic"],
    );
    for (label, tau) in [
        ("tau1", report.taus[0]),
        ("tau2", report.taus[1]),
        ("tau3", report.taus[2]),
    ] {
        table.push_row(vec![
            CellValue::from(label),
            CellValue::float(tau),
            CellValue::Missing,
            CellValue::Missing,
            CellValue::Missing,
        ]);
    }
    let analytic = report.analytic.as_ref();
    let quantities: [(&str, &EmpiricalEstimate, Option<f64>); 5] = [
        ("c12", &report.c12, analytic.map(|a| a.correlators.c12)),
        ("c23", &report.c23, analytic.map(|a| a.correlators.c23)),
        ("c13", &report.c13, analytic.map(|a| a.correlators.c13)),
        ("delta0", &report.delta0, analytic.map(|a| a.delta0)),
        ("lg_lhs", &report.lg_lhs, analytic.map(|a| a.lg_lhs)),
    ];
    for (label, estimate, reference) in quantities {
        let [value, std_error, n] = estimate_cells(estimate);
        table.push_row(vec![
            CellValue::from(label),
            value,
            std_error,
            n,
            reference.map_or(CellValue::Missing, CellValue::float),
        ]);
    }
    table.push_row(vec![
        CellValue::from("modified_margin"),
        CellValue::float(report.report.modified_margin),
        CellValue::Missing,
        CellValue::from(report.lg_lhs.n),
        analytic.map_or(CellValue::Missing, |a| CellValue::float(a.modified_margin)),
    ]);
    table.push_row(vec![
        CellValue::from("verdict"),
        CellValue::from(verdict_text(&report.report)),
        CellValue::Missing,
        CellValue::from(report.lg_lhs.n),
        analytic.map_or(CellValue::Missing, |a| CellValue::from(verdict_text(a))),
    ]);
    table
}

/// The η-scan table with its fixed column schema
/// (`eta, delta0_analytic, delta0_empirical, std_error, n`); analytic-only
/// rows leave the empirical cells missing with `n = 0`.
pub fn scan_table(scan: &SignallingScan) -> Table {
    let mut table = Table::new(
        "scan-delta0",
        &["eta", "delta0_analytic", "delta0_empirical", "std_error", "n"],
    );
    for row in &scan.rows {
        let (empirical, std_error, n) = match &row.empirical {
            Some(estimate) => {
                let [value, std_error, n] = estimate_cells(estimate);
                (value, std_error, n)
            }
            None => (CellValue::Missing, CellValue::Missing, CellValue::Int(0)),
        };
        table.push_row(vec![
            CellValue::float(row.eta),
            CellValue::float(row.analytic),
            empirical,
            std_error,
            n,
        ]);
    }
    table
}

/// Occupation-versus-phase table for equivariance checks.
///
/// # Panics
///
/// If the three slices differ in length (builder misuse).
pub fn occupation_table(
    checkpoints: &[f64],
    analytic: &[f64],
    estimates: &[EmpiricalEstimate],
) -> Table {
    assert_eq!(checkpoints.len(), analytic.len());
    assert_eq!(checkpoints.len(), estimates.len());
    let mut table = Table::new(
        "equivariance-profile",
        &["tau", "p_minus_analytic", "p_minus_empirical", "std_error", "n"],
    );
    for ((&tau, &reference), estimate) in checkpoints.iter().zip(analytic).zip(estimates) {
        let [value, std_error, n] = estimate_cells(estimate);
        table.push_row(vec![
            CellValue::float(tau),
            CellValue::float(reference),
            value,
            std_error,
            n,
        ]);
    }
    table
}

/// Single-row table of a measurement-invasiveness comparison.
pub fn invasiveness_table(report: &InvasivenessReport) -> Table {
    let mut table = Table::new(
        "invasiveness",
        &["tau_i", "tau_k", "tv_analytic", "tv_empirical", "std_error", "n"],
    );
    let [value, std_error, n] = estimate_cells(&report.tv);
    table.push_row(vec![
        CellValue::float(report.tau_i),
        CellValue::float(report.tau_k),
        CellValue::float(report.analytic),
        value,
        std_error,
        n,
    ]);
    table
}

/// Outcome-frequency table split by the initial beable value (groups
/// `+1`, `-1` and `all`).
pub fn conditional_table(tables: &ConditionalTables) -> Table {
    let mut table = Table::new(
        "conditional-context",
        &["group", "outcomes", "probability", "std_error", "n"],
    );
    let len = tables.pooled.table.measurements();
    let tuples = ContextTable::outcome_tuples(len);
    for (group, empirical) in [
        ("+1", &tables.plus),
        ("-1", &tables.minus),
        ("all", &tables.pooled),
    ] {
        for (tuple, estimate) in tuples.iter().zip(&empirical.estimates) {
            let outcomes = tuple
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            let [value, std_error, n] = estimate_cells(estimate);
            table.push_row(vec![
                CellValue::from(group),
                CellValue::from(outcomes),
                value,
                std_error,
                n,
            ]);
        }
    }
    table
}

/// Single-row table of a grid search for the maximal violation.
pub fn max_violation_table(result: &MaxViolation, resolution: usize) -> Table {
    let mut table = Table::new("max-violation", &["alpha", "beta", "lhs", "resolution"]);
    table.push_row(vec![
        CellValue::float(result.alpha),
        CellValue::float(result.beta),
        CellValue::float(result.lhs),
        CellValue::from(resolution as u64),
    ]);
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> Table {
        let mut table = Table::new("sample", &["name", "value", "count", "ok", "note"]);
        table.push_row(vec![
            CellValue::from("first"),
            CellValue::float(0.5),
            CellValue::from(12u64),
            CellValue::from(true),
            CellValue::Missing,
        ]);
        table.push_row(vec![
            CellValue::from("second, quoted"),
            CellValue::float(-1.25e-3),
            CellValue::from(0u64),
            CellValue::from(false),
            CellValue::from("plain"),
        ]);
        table
    }

    #[test]
    fn csv_has_header_fixed_floats_and_lf_endings() {
        let mut buffer = Vec::new();
        write_csv(&sample_table(), &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], "name,value,count,ok,note");
        assert_eq!(lines[1], "first,5.0000000000000000e-1,12,true,");
        assert_eq!(
            lines[2],
            "\"second, quoted\",-1.2500000000000000e-3,0,false,plain"
        );
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn empty_tables_serialize_to_a_bare_header() {
        let table = Table::new("empty", &["a", "b"]);
        let mut buffer = Vec::new();
        write_csv(&table, &mut buffer).unwrap();
        assert_eq!(String::from_utf8(buffer).unwrap(), "a,b\n");
    }

    #[test]
    fn json_round_trips_exactly() {
        let table = sample_table();
        let mut buffer = Vec::new();
        write_json(&table, &mut buffer).unwrap();
        let text = String::from_utf8(buffer.clone()).unwrap();
        assert!(text.starts_with("{\n  \"schema_version\": \"lglab-report/1\""));
        assert!(text.ends_with("\n"));
        let parsed = read_json(buffer.as_slice()).unwrap();
        assert_eq!(parsed, table);
    }

    #[test]
    fn json_schema_version_is_enforced() {
        let text = r#"{"schema_version":"lglab-report/0","name":"x","columns":[],"rows":[]}"#;
        assert!(matches!(
            read_json(text.as_bytes()),
            Err(Error::Format(_))
        ));
        assert!(read_json(b"not json".as_slice()).is_err());
    }

    #[test]
    fn non_finite_floats_become_missing() {
        assert_eq!(CellValue::float(f64::NAN), CellValue::Missing);
        assert_eq!(CellValue::float(f64::INFINITY), CellValue::Missing);
        assert_eq!(CellValue::float(1.0), CellValue::Float(1.0));
    }

    #[test]
    fn untagged_cells_deserialize_by_shape() {
        let cells: Vec<CellValue> =
            serde_json::from_str(r#"[3, 3.5, true, "text", null]"#).unwrap();
        assert_eq!(
            cells,
            vec![
                CellValue::Int(3),
                CellValue::Float(3.5),
                CellValue::Bool(true),
                CellValue::Text("text".to_string()),
                CellValue::Missing,
            ]
        );
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn mismatched_rows_are_rejected() {
        let mut table = Table::new("bad", &["a", "b"]);
        table.push_row(vec![CellValue::Int(1)]);
    }
}
