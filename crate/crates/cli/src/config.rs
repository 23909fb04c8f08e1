//! JSON config files with command-line overrides layered on top.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Flag values to write over the file's keys; `None` entries are skipped.
pub type Overrides = Vec<(&'static str, Option<Value>)>;

/// Start from `T::default()`, apply the file at `path` (if any), then the overrides.
/// Overrides address nested keys with dots, e.g. `model.d_emb`.
pub fn resolve<T: Serialize + DeserializeOwned + Default>(path: Option<&Path>, overrides: Overrides) -> CliResult<T> {
    let mut value = serde_json::to_value(T::default()).expect("config serializes");
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        let file: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        let Value::Object(obj) = file else {
            return Err(CliError::Config(format!("{}: expected a JSON object", p.display())));
        };
        // reject unknown keys against the typed schema before merging
        serde_json::from_value::<T>(Value::Object(obj.clone()))
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        merge(&mut value, Value::Object(obj));
    }
    for (key, v) in overrides {
        if let Some(v) = v {
            set(&mut value, key, v);
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

fn set(root: &mut Value, dotted: &str, v: Value) {
    let mut cur = root;
    let mut parts = dotted.split('.').peekable();
    while let Some(k) = parts.next() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("object");
        if parts.peek().is_none() {
            obj.insert(k.to_string(), v);
            return;
        }
        cur = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
}

pub fn opt<T: Serialize>(v: &Option<T>) -> Option<Value> {
    v.as_ref().map(|x| serde_json::to_value(x).expect("flag serializes"))
}

pub fn flag(on: bool) -> Option<Value> {
    on.then_some(Value::Bool(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct Inner {
        a: u32,
        b: bool,
    }

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct Outer {
        x: f64,
        inner: Inner,
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"x": 2.0, "inner": {"a": 5}}"#).unwrap();
        let c: Outer = resolve(Some(&p), vec![("inner.b", flag(true)), ("x", None)]).unwrap();
        assert_eq!(c, Outer { x: 2.0, inner: Inner { a: 5, b: true } });
        let c: Outer = resolve(Some(&p), vec![("inner.a", opt(&Some(9u32)))]).unwrap();
        assert_eq!(c.inner.a, 9);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"y": 1}"#).unwrap();
        assert!(matches!(resolve::<Outer>(Some(&p), vec![]), Err(CliError::Config(_))));
        std::fs::write(&p, "{not json").unwrap();
        assert!(matches!(resolve::<Outer>(Some(&p), vec![]), Err(CliError::Config(_))));
    }
}
