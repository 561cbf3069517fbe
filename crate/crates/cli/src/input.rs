//! Parsing of `--pmf`/`--specs` arguments: inline JSON or a path to a file.

use std::fs;

use serde_json::Value;
use thinpower::{FinitePmf, PmfInput, ToleranceConfig};

use crate::CliError;

/// Inline JSON when the argument starts with `{` or `[`, otherwise a file path.
pub fn load_json(arg: &str) -> Result<Value, CliError> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| CliError::Io(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Json(format!("{arg}: {e}")))
}

/// Decodes one pmf document or family spec. Dispatches on the `family` key so
/// that a malformed spec gets a precise message instead of the generic
/// untagged-enum one.
pub fn pmf_from_value(value: Value, origin: &str) -> Result<PmfInput, CliError> {
    let is_family = value.get("family").is_some();
    let decoded = if is_family {
        serde_json::from_value(value).map(PmfInput::Family)
    } else {
        serde_json::from_value(value).map(PmfInput::Pmf)
    };
    decoded.map_err(|e| CliError::Json(format!("{origin}: {e}")))
}

pub fn load_pmf(arg: &str, tol: &ToleranceConfig) -> Result<FinitePmf, CliError> {
    let input = pmf_from_value(load_json(arg)?, arg)?;
    Ok(input.resolve(tol)?)
}

pub fn load_pmfs(args: &[String], tol: &ToleranceConfig) -> Result<Vec<FinitePmf>, CliError> {
    args.iter().map(|a| load_pmf(a, tol)).collect()
}

/// A JSON array of pmf inputs, or an object `{"specs": [...]}`.
pub fn load_pmf_list(arg: &str, tol: &ToleranceConfig) -> Result<Vec<FinitePmf>, CliError> {
    let value = load_json(arg)?;
    let items = match value {
        Value::Array(items) => items,
        Value::Object(mut map) => match map.remove("specs") {
            Some(Value::Array(items)) => items,
            _ => return Err(CliError::Json(format!("{arg}: expected an array of pmf specs"))),
        },
        _ => return Err(CliError::Json(format!("{arg}: expected an array of pmf specs"))),
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| Ok(pmf_from_value(v, &format!("{arg}[{i}]"))?.resolve(tol)?))
        .collect()
}
