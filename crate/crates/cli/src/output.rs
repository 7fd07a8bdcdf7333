//! Output record shared by every subcommand, plus JSON/CSV rendering.

use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub rng_description: Option<String>,
    pub timestamp: String,
    pub tolerances: Map<String, Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub parameters: Map<String, Value>,
    pub results: Value,
    pub metadata: Metadata,
}

/// Whether a command's own checks passed. Failing commands still emit
/// their record before exiting with status 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed(Vec<String>),
}

#[derive(Debug)]
pub struct CommandOutput {
    pub record: OutputRecord,
    /// Flat rows for CSV output, already rendered with a header line.
    pub csv: String,
    pub status: Status,
}

impl CommandOutput {
    pub fn new<R: Serialize>(
        command: &'static str,
        parameters: Value,
        results: Value,
        rows: &[R],
        tolerances: Value,
        rng_description: Option<String>,
    ) -> Result<Self> {
        let record = OutputRecord {
            schema_version: SCHEMA_VERSION,
            command,
            parameters: into_map(parameters),
            results,
            metadata: Metadata {
                rng_description,
                timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                tolerances: into_map(tolerances),
            },
        };
        Ok(CommandOutput {
            record,
            csv: to_csv(rows)?,
            status: Status::Ok,
        })
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(&self.record)? + "\n",
            Format::Csv => self.csv.clone(),
        })
    }

    /// Writes to `out` if given, otherwise to stdout.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let text = self.render(format)?;
        match out {
            Some(path) => {
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                stdout.flush()?;
            }
        }
        Ok(())
    }
}

fn into_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        Value::Null => Map::new(),
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

pub fn to_csv<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Error that maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
