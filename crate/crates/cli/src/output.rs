use std::fs;
use std::path::{Path, PathBuf};

use influence_core::meta::ArtifactMeta;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Flattens an options struct into sorted `key=value` strings, the same
/// shape a `--config` file takes.
pub fn effective_args<T: Serialize>(args: &T) -> Vec<String> {
    let Ok(Value::Object(map)) = serde_json::to_value(args) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (key, value) in map {
        let text = match value {
            Value::Null => continue,
            Value::String(s) => s,
            Value::Array(items) => items
                .iter()
                .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        };
        out.push(format!("{key}={text}"));
    }
    out.sort();
    out
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Writes a table or line-delimited artifact plus its `.meta.json` sidecar.
pub fn write_with_sidecar(path: &Path, bytes: &[u8], meta: &ArtifactMeta) -> Result<(), CliError> {
    write_bytes(path, bytes)?;
    let mut json = serde_json::to_vec_pretty(meta)?;
    json.push(b'\n');
    write_bytes(&sidecar_path(path), &json)
}

/// Writes a JSON document with the metadata embedded under `meta`.
pub fn write_json_with_meta<T: Serialize>(
    path: &Path,
    meta: &ArtifactMeta,
    key: &str,
    body: &T,
) -> Result<(), CliError> {
    let mut doc = serde_json::Map::new();
    doc.insert("meta".into(), serde_json::to_value(meta)?);
    doc.insert(key.into(), serde_json::to_value(body)?);
    let mut json = serde_json::to_vec_pretty(&Value::Object(doc))?;
    json.push(b'\n');
    write_bytes(path, &json)
}

pub fn open(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(io_err(path))
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Fails before any work if an input is missing.
pub fn require_inputs(paths: &[&Path]) -> Result<(), CliError> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::Io {
                path: p.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
            });
        }
    }
    Ok(())
}
