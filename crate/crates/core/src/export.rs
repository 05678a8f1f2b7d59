//! Canonical JSON: sorted object keys, floats with six decimals.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{Map, Value};

struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        let text = format!("{value:.6}");
        writer.write_all(if text == "-0.000000" {
            b"0.000000"
        } else {
            text.as_bytes()
        })
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, sort_keys(v)))
                    .collect::<Map<_, _>>(),
            )
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Serializes `value` deterministically for golden files and caching.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let value = sort_keys(serde_json::to_value(value).expect("value converts to JSON"));
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_keys_and_fixed_floats() {
        let v = json!({"b": 1.0, "a": [0.5, 2], "c": {"z": -0.0000001, "y": null}});
        assert_eq!(
            to_canonical_json(&v),
            r#"{"a":[0.500000,2],"b":1.000000,"c":{"y":null,"z":0.000000}}"#
        );
    }
}
