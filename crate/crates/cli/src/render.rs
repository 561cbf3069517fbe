//! Output formatting. JSON is canonical; the table view is derived from it.

use serde_json::Value;

pub fn json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Flattens nested JSON into aligned `path  value` rows. Arrays of scalars
/// stay on one line.
pub fn table(value: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    if rows.len() == 1 && rows[0].0.is_empty() {
        return format!("{}\n", rows[0].1);
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, rows);
            }
        }
        Value::Array(items) if items.iter().all(is_scalar) => {
            rows.push((prefix.to_string(), Value::Array(items.clone()).to_string()));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// Fixed-column view of reproduced values.
pub fn reproduced_table(values: &[thinpower::reproduce::ReproducedValue]) -> String {
    let width = values.iter().map(|v| v.name.len()).max().unwrap_or(0).max(8);
    let mut out = format!("{:<width$}  {:>10}  {:>10}  {:>9}\n", "quantity", "computed", "printed", "|dev|");
    for v in values {
        out.push_str(&format!(
            "{:<width$}  {:>10.6}  {:>10.5}  {:>9.2e}\n",
            v.name, v.computed, v.printed, v.abs_deviation
        ));
    }
    out
}
