use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use polarmoments::format::round12;
use polarmoments::Result;
use serde::Serialize;
use serde_json::{Map, Number, Value};

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().unwrap_or(0.0));
            Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

pub struct Emitter {
    pub timestamp: bool,
}

impl Emitter {
    pub fn json<T: Serialize>(&self, report: &T, out: Option<&Path>) -> Result<()> {
        let mut value = round_floats(serde_json::to_value(report)?);
        if self.timestamp {
            if let Value::Object(map) = &mut value {
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                let mut stamped = Map::new();
                stamped.insert("generated_at".into(), Value::from(secs));
                stamped.append(map);
                *map = stamped;
            }
        }
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        match out {
            Some(path) => fs::write(path, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_nested_floats() {
        let v = serde_json::json!({"a": [0.1 + 0.2, 1], "b": {"c": 2.0000000000001}});
        let r = round_floats(v);
        assert_eq!(r["a"][0], Value::from(0.3));
        assert_eq!(r["a"][1], Value::from(1));
        assert_eq!(r["b"]["c"], Value::from(2.0));
    }
}
