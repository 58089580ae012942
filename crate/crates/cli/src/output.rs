use clap::ValueEnum;
use ppcheck::Error;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// What a command prints on stdout.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    /// A JSON object; as CSV it becomes key,value rows with dotted keys.
    Record(Value),
    /// Curve data; missing values are empty CSV fields or JSON nulls.
    Table { columns: Vec<&'static str>, rows: Vec<Vec<Option<f64>>>, meta: Value },
}

impl Output {
    pub fn render(&self, format: Format) -> String {
        match (self, format) {
            (Output::Record(v), Format::Json) => pretty(v),
            (Output::Record(v), Format::Csv) => {
                let mut rows = Vec::new();
                flatten(v, String::new(), &mut rows);
                write_csv(["key", "value"], rows.into_iter().map(|(k, v)| vec![k, v]))
            }
            (Output::Table { columns, rows, meta }, Format::Json) => {
                pretty(&json!({ "meta": meta, "columns": columns, "rows": rows }))
            }
            (Output::Table { columns, rows, .. }, Format::Csv) => write_csv(
                columns.iter().copied(),
                rows.iter().map(|row| row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()).collect()),
            ),
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn flatten(v: &Value, prefix: String, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(v, key(k), out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(v, key(&i.to_string()), out)),
        Value::Null => out.push((prefix, String::new())),
        Value::String(s) => out.push((prefix, s.clone())),
        other => out.push((prefix, other.to_string())),
    }
}

fn write_csv<'a>(header: impl IntoIterator<Item = &'a str>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("CSV of UTF-8 fields")
}

/// Error payload printed on stdout alongside the exit code.
pub fn error_output(e: &Error) -> Output {
    let kind = match e {
        Error::Domain(_) => "domain",
        Error::InvalidIdf(_) => "invalid_idf",
        Error::NotSubUniform { .. } => "not_sub_uniform",
        Error::Infeasible { .. } => "infeasible",
        Error::Convergence(_) => "convergence",
        Error::Io(_) | Error::Csv(_) => "io",
        Error::Json(_) => "json",
    };
    let mut body = json!({ "kind": kind, "message": e.to_string() });
    match e {
        Error::NotSubUniform { witness, violation } => {
            body["witness"] = json!(witness);
            body["violation"] = json!(violation);
        }
        Error::Infeasible { witness, .. } => body["witness"] = json!(witness),
        _ => {}
    }
    Output::Record(json!({ "error": body }))
}

pub fn usage_error(message: &str) -> Output {
    Output::Record(json!({ "error": { "kind": "usage", "message": message } }))
}
