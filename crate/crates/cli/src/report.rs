use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;

pub const SCHEMA_VERSION: u32 = 1;

/// Column headers of the checks CSV.
pub const CHECKS_CSV_HEADER: &str = "id,passed,value,criterion";

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub value: Value,
    /// Human-readable acceptance rule, e.g. `<= 1e-9`.
    pub criterion: String,
}

/// Plot-ready table emitted by `--format csv` instead of the checks list.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Table {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub passed: bool,
    pub failed: Vec<String>,
    pub checks: Vec<Check>,
    pub data: Value,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl Report {
    pub fn new(command: &str, config: impl Serialize) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            passed: true,
            failed: Vec::new(),
            checks: Vec::new(),
            data: Value::Object(Default::default()),
            table: None,
        }
    }

    pub fn push(&mut self, id: impl Into<String>, passed: bool, value: Value, criterion: String) {
        self.checks.push(Check { id: id.into(), passed, value, criterion });
    }

    /// Fails on NaN.
    pub fn le(&mut self, id: impl Into<String>, value: f64, tol: f64) {
        self.push(id, value <= tol, num(value), format!("<= {tol:e}"));
    }

    pub fn ge(&mut self, id: impl Into<String>, value: f64, bound: f64) {
        self.push(id, value >= bound, num(value), format!(">= {bound:e}"));
    }

    pub fn within(&mut self, id: impl Into<String>, value: f64, lo: f64, hi: f64) {
        self.push(id, (lo..=hi).contains(&value), num(value), format!("in [{lo:e}, {hi:e}]"));
    }

    pub fn equals<T: Serialize + PartialEq>(&mut self, id: impl Into<String>, got: T, want: T) {
        let ok = got == want;
        let want = serde_json::to_string(&want).unwrap_or_default();
        self.push(id, ok, serde_json::to_value(got).unwrap_or(Value::Null), format!("== {want}"));
    }

    pub fn holds(&mut self, id: impl Into<String>, ok: bool, what: &str) {
        self.push(id, ok, Value::Bool(ok), what.to_string());
    }

    pub fn set_data(&mut self, key: &str, v: impl Serialize) {
        if let Value::Object(m) = &mut self.data {
            m.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
        }
    }

    /// Sorts checks by id and fills in the verdict.
    pub fn finish(mut self) -> Report {
        self.checks.sort_by(|a, b| a.id.cmp(&b.id));
        self.failed = self.checks.iter().filter(|c| !c.passed).map(|c| c.id.clone()).collect();
        self.passed = self.failed.is_empty();
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn checks_csv(&self) -> String {
        let mut s = String::from(CHECKS_CSV_HEADER);
        s.push('\n');
        for c in &self.checks {
            let v = match &c.value {
                Value::String(t) => t.clone(),
                v => v.to_string(),
            };
            let _ = writeln!(s, "{},{},{},{}", c.id, c.passed, quote(&v), quote(&c.criterion));
        }
        s
    }

    /// The suite's table when it has one, the checks otherwise.
    pub fn to_csv(&self) -> String {
        match &self.table {
            Some(t) => t.to_csv(),
            None => self.checks_csv(),
        }
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| Value::String(format!("{v}")))
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
