use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::failure::Failure;
use crate::scenario::sha256_hex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Rows,
}

/// Collects a command's report and files; nothing touches stdout or disk
/// until [`Emitter::finish`].
pub struct Emitter {
    format: Format,
    out_dir: Option<PathBuf>,
    text: String,
    rows: Vec<String>,
    files: Vec<(String, Vec<u8>)>,
    pub info: RunInfo,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a [String],
    seed: Option<u64>,
    scenario_digest: Option<&'a str>,
    outputs: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

/// Provenance recorded next to the outputs.
#[derive(Default)]
pub struct RunInfo {
    pub seed: Option<u64>,
    pub scenario_digest: Option<String>,
}

impl Emitter {
    pub fn new(format: Format, out_dir: Option<PathBuf>) -> Self {
        Self {
            format,
            out_dir,
            text: String::new(),
            rows: Vec::new(),
            files: Vec::new(),
            info: RunInfo::default(),
        }
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    /// One machine-readable record; `kind` lands in the `record` field.
    pub fn row<S: Serialize>(&mut self, kind: &str, value: &S) {
        let mut obj = match serde_json::to_value(value).expect("report rows serialize") {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        obj.insert("record".into(), Value::String(kind.into()));
        self.rows.push(serde_json::to_string(&obj).expect("json"));
    }

    pub fn file(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    /// Prints the report and, with an output directory, writes the files,
    /// the rows as `<command>.jsonl` and a manifest.
    pub fn finish(mut self, command: &str, argv: &[String]) -> Result<(), Failure> {
        let stdout = match self.format {
            Format::Text => std::mem::take(&mut self.text),
            Format::Rows => self.rows.iter().map(|r| format!("{r}\n")).collect(),
        };
        if let Some(dir) = &self.out_dir {
            let mut rows: String = self.rows.iter().map(|r| format!("{r}\n")).collect();
            if rows.is_empty() {
                rows.push('\n');
            }
            self.files.push((format!("{command}.jsonl"), rows.into_bytes()));
            fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
            let mut outputs = Vec::new();
            for (name, bytes) in &self.files {
                let path = dir.join(name);
                fs::write(&path, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
                outputs.push(ManifestEntry {
                    path: name.clone(),
                    sha256: sha256_hex(bytes),
                });
            }
            let manifest = Manifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command: argv,
                seed: self.info.seed,
                scenario_digest: self.info.scenario_digest.as_deref(),
                outputs,
            };
            let text = toml::to_string(&manifest).expect("manifest serializes");
            fs::write(dir.join("manifest.toml"), text)
                .map_err(|e| Failure::Usage(format!("cannot write manifest: {e}")))?;
        }
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(stdout.as_bytes());
        Ok(())
    }
}
