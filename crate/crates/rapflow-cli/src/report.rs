//! Machine-readable reports. Emission is deterministic: keys keep
//! insertion order, scalars print with 17 significant digits in JSON and
//! shortest round-trip form in CSV, and the wall time goes to stderr so
//! the report bytes never depend on the clock.

use rapflow_core::{Matrix, RowVector};

#[derive(Debug, Clone)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Text(String),
}

impl Value {
    pub fn vector(v: &RowVector) -> Value {
        Value::Vector(v.iter().copied().collect())
    }

    pub fn matrix(m: &Matrix) -> Value {
        Value::Matrix(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub name: String,
    pub value: Value,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub fingerprint: String,
    pub results: Vec<Entry>,
    pub diagnostics: Vec<Entry>,
    pub warnings: Vec<String>,
    /// Set when the computation finished but its result flags a numerical
    /// failure (e.g. an unconverged fixed point); the process exits 3.
    pub failure: Option<String>,
    /// Measured by the dispatcher, reported on stderr only.
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn new(command: String, fingerprint: String) -> Report {
        Report {
            command,
            fingerprint,
            results: Vec::new(),
            diagnostics: Vec::new(),
            warnings: Vec::new(),
            failure: None,
            wall_time_ms: None,
        }
    }

    pub fn result(&mut self, name: &str, value: Value) -> &mut Self {
        self.results.push(Entry {
            name: name.into(),
            value,
            stderr: None,
        });
        self
    }

    pub fn result_with_stderr(&mut self, name: &str, mean: f64, stderr: f64) -> &mut Self {
        self.results.push(Entry {
            name: name.into(),
            value: Value::Scalar(mean),
            stderr: Some(stderr),
        });
        self
    }

    pub fn diagnostic(&mut self, name: &str, value: Value) -> &mut Self {
        self.diagnostics.push(Entry {
            name: name.into(),
            value,
            stderr: None,
        });
        self
    }

    pub fn warn(&mut self, message: String) -> &mut Self {
        self.warnings.push(message);
        self
    }
}

/// 17-significant-digit decimal form; round-trips through any compliant
/// parser. Non-finite values become quoted strings to keep the document
/// valid JSON.
fn json_f64(x: f64) -> String {
    if x.is_finite() {
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.16e}")
    } else {
        format!("\"{x}\"")
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn json_value(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Scalar(x) => json_f64(*x),
        Value::Vector(xs) => {
            let parts: Vec<String> = xs.iter().map(|x| json_f64(*x)).collect();
            format!("[{}]", parts.join(","))
        }
        Value::Matrix(rows) => {
            let parts: Vec<String> = rows
                .iter()
                .map(|r| {
                    let cells: Vec<String> = r.iter().map(|x| json_f64(*x)).collect();
                    format!("[{}]", cells.join(","))
                })
                .collect();
            format!("[{}]", parts.join(","))
        }
        Value::Text(s) => format!("\"{}\"", json_escape(s)),
    }
}

fn json_entries(entries: &[Entry]) -> String {
    let parts: Vec<String> = entries
        .iter()
        .map(|e| format!("    \"{}\": {}", json_escape(&e.name), json_value(&e.value)))
        .collect();
    if parts.is_empty() {
        "{}".into()
    } else {
        format!("{{\n{}\n  }}", parts.join(",\n"))
    }
}

pub fn emit_json(report: &Report) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!(
        "  \"command\": \"{}\",\n",
        json_escape(&report.command)
    ));
    out.push_str(&format!(
        "  \"fingerprint\": \"{}\",\n",
        json_escape(&report.fingerprint)
    ));
    out.push_str(&format!("  \"results\": {},\n", json_entries(&report.results)));

    let errs: Vec<String> = report
        .results
        .iter()
        .filter_map(|e| {
            e.stderr.map(|s| {
                format!("    \"{}\": {}", json_escape(&e.name), json_f64(s))
            })
        })
        .collect();
    let errs = if errs.is_empty() {
        "{}".into()
    } else {
        format!("{{\n{}\n  }}", errs.join(",\n"))
    };
    out.push_str(&format!("  \"standard_errors\": {},\n", errs));

    out.push_str(&format!(
        "  \"diagnostics\": {},\n",
        json_entries(&report.diagnostics)
    ));
    let warns: Vec<String> = report
        .warnings
        .iter()
        .map(|w| format!("\"{}\"", json_escape(w)))
        .collect();
    out.push_str(&format!("  \"warnings\": [{}]", warns.join(",")));
    if let Some(f) = &report.failure {
        out.push_str(&format!(",\n  \"failure\": \"{}\"", json_escape(f)));
    }
    out.push_str("\n}\n");
    out
}

/// Flat scalar rows `name,value,stderr`; vectors, matrices, and text stay
/// JSON-only. Values print in shortest round-trip form.
pub fn emit_csv(report: &Report) -> String {
    let mut out = String::from("name,value,stderr\n");
    for e in report.results.iter().chain(report.diagnostics.iter()) {
        let value = match &e.value {
            Value::Scalar(x) => format!("{x}"),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => (*b as u8).to_string(),
            _ => continue,
        };
        let err = e.stderr.map(|s| format!("{s}")).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", e.name, value, err));
    }
    out
}
