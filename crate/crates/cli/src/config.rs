//! Layered settings: command-line flags over a JSON config file over
//! built-in defaults.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::failure::Failure;

/// Keys a config file may carry besides the command's own settings.
const GLOBAL_KEYS: [&str; 1] = ["out"];

pub fn read_config_file(path: &Path) -> Result<Map<String, Value>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::Usage(format!("config file {} must hold a JSON object", path.display()))),
        Err(e) => Err(Failure::Usage(format!("config file {}: {e}", path.display()))),
    }
}

fn strip_nulls(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(map) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// Merges `flags` over `file` and returns the merged settings plus one log
/// line per key where a flag overrode a different file value.
///
/// Every settings field is an `Option`, so the keys of `T::default()`
/// serialized are exactly the accepted keys; anything else in the file is
/// rejected by name.
pub fn resolve<T>(flags: &T, file: &Map<String, Value>) -> Result<(T, Vec<String>), Failure>
where
    T: Serialize + DeserializeOwned + Default,
{
    let known = match serde_json::to_value(T::default()) {
        Ok(Value::Object(map)) => map,
        _ => Map::new(),
    };
    if let Some(key) = file.keys().find(|k| !known.contains_key(*k) && !GLOBAL_KEYS.contains(&k.as_str())) {
        let mut accepted: Vec<&str> = known.keys().map(String::as_str).collect();
        accepted.extend(GLOBAL_KEYS);
        return Err(Failure::Usage(format!("unknown config key \"{key}\" (accepted: {})", accepted.join(", "))));
    }
    let mut merged: Map<String, Value> =
        file.iter().filter(|(k, _)| known.contains_key(*k)).map(|(k, v)| (k.clone(), v.clone())).collect();
    let mut log = Vec::new();
    let set = strip_nulls(serde_json::to_value(flags).map_err(|e| Failure::Usage(e.to_string()))?);
    for (k, v) in set {
        if let Some(old) = merged.get(&k).filter(|old| !old.is_null() && **old != v) {
            log.push(format!("{k}: flag value {v} overrides config file value {old}"));
        }
        merged.insert(k, v);
    }
    let resolved = serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    Ok((resolved, log))
}
