//! Output files. CSV files open with a `#` comment line and JSON reports
//! carry a `meta` object; both record the tool version and config hash.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, OutputConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
}

impl Meta {
    pub fn new(command: &str, config_sha256: String) -> Self {
        Self { tool: "moire", version: VERSION, command: command.into(), config_sha256 }
    }

    pub fn csv_header(&self) -> String {
        format!("# {} {} command={} config_sha256={}\n", self.tool, self.version, self.command, self.config_sha256)
    }
}

/// Writes the enabled formats into one directory.
pub struct Sink {
    dir: PathBuf,
    formats: Vec<Format>,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, output: &OutputConfig, meta: Meta) -> Self {
        Self { dir: dir.to_path_buf(), formats: output.formats.clone(), meta, written: Vec::new() }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn target(&mut self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let path = self.dir.join(name);
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes `name` with the comment header followed by `body`'s bytes.
    pub fn csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        if !self.formats.contains(&Format::Csv) {
            return Ok(());
        }
        let mut buf = self.meta.csv_header().into_bytes();
        body(&mut buf)?;
        let path = self.target(name)?;
        fs::write(&path, buf).map_err(|e| CliError::io(&path, e))
    }

    /// Writes `report` as pretty JSON with a leading `meta` key.
    pub fn json(&mut self, name: &str, report: &impl Serialize) -> Result<(), CliError> {
        if !self.formats.contains(&Format::Json) {
            return Ok(());
        }
        let text = render_json(&self.meta, report)?;
        let path = self.target(name)?;
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// JSON text of `report` with `meta` added and floats cut to nine
/// significant digits.
pub fn render_json(meta: &Meta, report: &impl Serialize) -> Result<String, CliError> {
    let mut value = serde_json::to_value(report)?;
    round_floats(&mut value);
    let mut obj = Map::new();
    obj.insert("meta".into(), serde_json::to_value(meta)?);
    match value {
        Value::Object(fields) => obj.extend(fields),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj))?;
    text.push('\n');
    Ok(text)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r: f64 = format!("{x:.8e}").parse().unwrap_or(x);
            if let Some(m) = serde_json::Number::from_f64(r) {
                *n = m;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_has_meta_and_rounded_numbers() {
        let meta = Meta::new("geometry", "ab".repeat(32));
        let text = render_json(&meta, &serde_json::json!({"period_nm": 12.703149817233, "n": 3})).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["meta"]["command"], "geometry");
        assert_eq!(v["meta"]["version"], VERSION);
        assert_eq!(v["period_nm"].as_f64().unwrap(), 12.7031498);
        assert_eq!(v["n"], 3);
    }

    #[test]
    fn csv_header_is_a_comment() {
        let h = Meta::new("bands", "0".repeat(64)).csv_header();
        assert!(h.starts_with("# moire "));
        assert!(h.ends_with(&format!("config_sha256={}\n", "0".repeat(64))));
    }
}
