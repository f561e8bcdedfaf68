use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Format {
    Json,
    Human,
}

/// Prints `value` to stdout; always reports success to the caller.
pub fn emit<T: Serialize>(format: Format, value: &T) -> Result<bool, super::Failure> {
    let value = serde_json::to_value(value)?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&value)?),
        Format::Human => {
            let mut lines = Vec::new();
            flatten("", &value, &mut lines);
            for line in lines {
                println!("{line}");
            }
        }
    }
    Ok(true)
}

/// One `path: value` line per scalar; short scalar arrays stay on one line.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<String>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            let shown: Vec<String> = items.iter().map(scalar).collect();
            out.push(format!("{prefix}: [{}]", shown.join(", ")));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        _ => out.push(format!("{prefix}: {}", scalar(value))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
