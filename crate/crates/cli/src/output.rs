//! Output directory handling, headers, structured documents and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use autolab_core::artifact::{fmt_f64, ArtifactHeader, ARTIFACT_VERSION, PSI_CONVENTION};
use autolab_core::rng::GENERATOR_ID;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::CliError;

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Header carried by every file of a run.
pub fn header(cfg: &RunConfig) -> ArtifactHeader {
    ArtifactHeader::new(&cfg.preset)
        .with("seed", cfg.sim.master_seed)
        .with("dt", format!("{:?}", cfg.sim.dt))
        .with("n_paths", cfg.sim.n_paths)
}

fn header_map(h: &ArtifactHeader) -> BTreeMap<String, String> {
    h.entries.iter().cloned().collect()
}

/// Collects the files written by one command, then records them in its manifest.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Writes a file through `fill`, which receives a buffered writer.
    pub fn write_with(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.path(name);
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        fill(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    /// Commented header, column line, then rows at full precision.
    pub fn write_table(&mut self, name: &str, h: &ArtifactHeader, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        self.write_with(name, |w| {
            h.write_comment(w)?;
            writeln!(w, "{}", columns.join(","))?;
            for row in rows {
                let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
            Ok(())
        })
    }

    /// Writes `body` as `<stem>.json` (`{"header": ..., "body": ...}`) or, in CSV mode, as a
    /// two-column `key,value` file with dotted keys.
    pub fn write_document<T: Serialize>(&mut self, stem: &str, format: Format, h: &ArtifactHeader, body: &T) -> Result<(), CliError> {
        let value = serde_json::to_value(body).map_err(|e| CliError::Io(e.to_string()))?;
        match format {
            Format::Structured => {
                let doc = serde_json::json!({ "header": header_map(h), "body": value });
                let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))? + "\n";
                self.write_text(&format!("{stem}.json"), &text)
            }
            Format::Csv => {
                let mut rows = Vec::new();
                flatten("", &value, &mut rows);
                self.write_with(&format!("{stem}.csv"), |w| {
                    h.write_comment(w)?;
                    writeln!(w, "key,value")?;
                    for (k, v) in rows {
                        writeln!(w, "{k},{}", csv_escape(&v))?;
                    }
                    Ok(())
                })
            }
        }
    }

    /// Writes `manifest-<command>.json` with the resolved configuration and file list.
    pub fn write_manifest(&mut self, command: &str, cfg: Option<&RunConfig>, status: &str) -> Result<(), CliError> {
        let manifest = serde_json::json!({
            "command": command,
            "artifact_version": ARTIFACT_VERSION,
            "psi_convention": PSI_CONVENTION,
            "generator": GENERATOR_ID,
            "status": status,
            "config": cfg,
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        let name = format!("manifest-{command}.json");
        let path = self.path(&name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Dotted-key flattening of a JSON value; numbers at full precision.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(items) => {
            for (k, x) in items.iter().enumerate() {
                flatten(&key(&k.to_string()), x, out);
            }
        }
        Value::Number(n) => out.push((prefix.to_string(), n.as_f64().map_or_else(|| n.to_string(), fmt_f64))),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => out.push((prefix.to_string(), "null".into())),
    }
}
