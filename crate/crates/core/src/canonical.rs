//! Canonical JSON text: object keys sorted, no insignificant whitespace.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// Serialize `value` to canonical JSON. Panics only if `T`'s `Serialize`
/// impl itself fails, which none of this crate's types do.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("serializable value");
    let mut out = String::new();
    write_value(&value, &mut out);
    out
}

pub fn value_to_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_str(k, out);
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(v, out);
            }
            out.push(']');
        }
        Value::String(s) => write_str(s, out),
        other => {
            let _ = write!(out, "{other}");
        }
    }
}

fn write_str(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("string serializes"));
}
