//! Report rows and their text and CSV renderings.

use std::io::{self, Write};

use csf_lab::falsifier::{Counterexample, ExampleRow};
use csf_lab::{AxiomId, AxiomVerdict, Number, Witness};
use serde::Serialize;

/// One CSV line. Column order is fixed by field order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub command: String,
    pub family: String,
    pub axiom_or_metric: String,
    pub status: String,
    /// JSON, empty when there is nothing to show.
    pub witness: String,
    pub lhs: String,
    pub rhs: String,
    pub gap: String,
    pub seed: String,
}

/// Shortest round-trip decimal, or `p/q` for exact values.
pub fn csv_number(x: &Number) -> String {
    match &x.exact {
        Some(s) => s.clone(),
        None => float(x.value),
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-5, 1e16)`.
pub fn float(v: f64) -> String {
    format!("{v:?}")
}

/// Six significant digits with trailing zeros dropped, or `p/q`.
pub fn text_number(x: &Number) -> String {
    match &x.exact {
        Some(s) => s.clone(),
        None => sig6(x.value),
    }
}

pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    if rounded != 0.0 && !(1e-4..1e7).contains(&rounded.abs()) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn join(values: &[Number], text: bool) -> String {
    values
        .iter()
        .map(|v| if text { text_number(v) } else { csv_number(v) })
        .collect::<Vec<_>>()
        .join(", ")
}

fn witness_json(w: &Witness) -> String {
    serde_json::to_string(w).expect("witnesses serialize")
}

impl ReportRow {
    pub fn new(command: &str, family: &str, metric: impl Into<String>, status: impl Into<String>) -> Self {
        ReportRow {
            command: command.into(),
            family: family.into(),
            axiom_or_metric: metric.into(),
            status: status.into(),
            ..Default::default()
        }
    }

    pub fn value(mut self, lhs: &Number) -> Self {
        self.lhs = csv_number(lhs);
        self
    }

    fn with_witness(mut self, w: Option<&Witness>) -> Self {
        if let Some(w) = w {
            self.witness = witness_json(w);
            self.lhs = csv_number(&w.lhs);
            self.rhs = csv_number(&w.rhs);
            self.gap = float(w.gap);
        }
        self
    }

    pub fn verdict(command: &str, v: &AxiomVerdict) -> Self {
        let mut row = ReportRow::new(command, v.family, v.axiom.as_str(), v.status.to_string())
            .with_witness(v.witness.as_ref());
        if v.witness.is_none() {
            row.gap = float(v.stats.max_gap);
        }
        row.seed = v.seed.to_string();
        row
    }

    pub fn counterexample(family: &str, axiom: AxiomId, ce: Option<&Counterexample>, seed: u64) -> Self {
        let status = if ce.is_some() {
            "Counterexample"
        } else {
            "NoCounterexample"
        };
        let mut row =
            ReportRow::new("falsify", family, axiom.as_str(), status).with_witness(ce.map(|c| &c.witness));
        row.seed = seed.to_string();
        row
    }

    pub fn example(row: &ExampleRow) -> Self {
        let mut out = ReportRow::new(
            "paper-examples",
            "luck_tullock",
            row.name,
            if row.pass { "PASS" } else { "FAIL" },
        );
        out.witness = serde_json::json!({
            "expected_lhs": row.expected_lhs,
            "expected_rhs": row.expected_rhs,
        })
        .to_string();
        out.lhs = csv_number(&row.lhs);
        out.rhs = csv_number(&row.rhs);
        out
    }

    pub fn error(command: &str, family: &str, metric: impl Into<String>, message: &str) -> Self {
        let mut row = ReportRow::new(command, family, metric, "Error");
        row.witness = serde_json::json!({ "error": message }).to_string();
        row
    }
}

/// Header plus rows.
pub fn write_csv(rows: &[ReportRow], out: &mut dyn Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "command",
            "family",
            "axiom_or_metric",
            "status",
            "witness",
            "lhs",
            "rhs",
            "gap",
            "seed",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

pub fn describe_witness(w: &Witness) -> String {
    let probe = serde_json::to_string(&w.probe).expect("probes serialize");
    let profile = w
        .profile
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "profile=({profile}) probe={probe} focus={:?} lhs={} rhs={} gap={}",
        w.focus,
        text_number(&w.lhs),
        text_number(&w.rhs),
        sig6(w.gap)
    )
}
