//! `--config <path>`: a JSON object whose keys are long flag names. Its
//! entries are appended after the command line, and since every flag keeps
//! its last occurrence, the file wins over flags given explicitly.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde_json::Value;

pub fn merged_args(mut argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&argv)? else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text)
        .with_context(|| format!("config {} is not valid JSON", path.display()))?;
    let Value::Object(map) = doc else {
        bail!("config {} must be a JSON object", path.display());
    };
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => argv.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined = items.iter().map(scalar).collect::<anyhow::Result<Vec<_>>>()?;
                argv.push(flag.into());
                argv.push(joined.join(",").into());
            }
            other => {
                argv.push(flag.into());
                argv.push(scalar(&other)?.into());
            }
        }
    }
    Ok(argv)
}

fn scalar(v: &Value) -> anyhow::Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => bail!("config values must be scalars or arrays of scalars, got {v}"),
    }
}

fn config_path(argv: &[OsString]) -> anyhow::Result<Option<PathBuf>> {
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        let Some(s) = arg.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            return match it.next() {
                Some(p) => Ok(Some(PathBuf::from(p))),
                None => bail!("--config needs a path"),
            };
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
    }
    Ok(None)
}
