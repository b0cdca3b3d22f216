use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use bariance::bench::Environment;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Overrides the directory that relative `--output` paths resolve against.
pub const OUTPUT_DIR_ENV: &str = "BARIANCE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Aligned terminal table, values rounded to 5 decimals.
    Table,
    /// Comma-separated, 17 significant digits.
    Csv,
    Json,
}

/// Provenance written ahead of every output.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub config: Value,
    pub environment: Environment,
}

impl Metadata {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        Self {
            tool: "bariance",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().collect(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            environment: Environment::capture(),
        }
    }

    fn comment_lines(&self) -> String {
        let env = &self.environment;
        format!(
            "# {} {} {}\n# argv: {}\n# config: {}\n# environment: os={} arch={} logical_cores={} clock={}\n",
            self.tool,
            self.version,
            self.command,
            self.argv.join(" "),
            serde_json::to_string(&self.config).unwrap_or_default(),
            env.os,
            env.arch,
            env.logical_cores,
            env.clock_source,
        )
    }
}

/// A rendered result: rows for CSV/table output plus the JSON payload.
pub struct Rendered {
    pub columns: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    pub table_rows: Vec<Vec<String>>,
    /// Extra commented lines appended after the CSV body / table.
    pub notes: Vec<String>,
    pub json: Value,
}

impl Rendered {
    pub fn new(columns: Vec<&str>, json: Value) -> Self {
        Self {
            columns: columns.into_iter().map(String::from).collect(),
            csv_rows: Vec::new(),
            table_rows: Vec::new(),
            notes: Vec::new(),
            json,
        }
    }

    pub fn push_row(&mut self, csv: Vec<String>, table: Vec<String>) {
        self.csv_rows.push(csv);
        self.table_rows.push(table);
    }
}

/// Round-trip-safe float: 17 significant digits.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Terminal float: 5 decimals.
pub fn dec5(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:.5e}")
    } else {
        format!("{x:.5}")
    }
}

pub fn render(meta: &Metadata, out: &Rendered, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let doc = serde_json::json!({ "metadata": meta, "data": out.json });
            let mut s =
                serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut s = meta.comment_lines();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&out.columns)
                .map_err(|e| CliError::Io(e.to_string()))?;
            for row in &out.csv_rows {
                w.write_record(row)
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
            let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            s.push_str(&String::from_utf8_lossy(&body));
            for note in &out.notes {
                s.push_str("# ");
                s.push_str(note);
                s.push('\n');
            }
            Ok(s)
        }
        Format::Table => {
            let mut s = meta.comment_lines();
            s.push_str(&table(&out.columns, &out.table_rows));
            for note in &out.notes {
                s.push_str(note);
                s.push('\n');
            }
            Ok(s)
        }
    }
}

fn table(columns: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = columns.iter().map(|c| c.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect::<Vec<_>>()
            .join("  ");
        s.push('\n');
        s
    };
    let mut s = line(columns.iter().map(String::as_str).collect());
    for row in rows {
        s.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    s
}

pub fn resolve_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn emit(text: &str, destination: Option<&Path>) -> Result<(), CliError> {
    match destination {
        Some(path) => {
            let path = resolve_path(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
            fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
