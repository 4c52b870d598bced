use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// 17 significant digits, so reruns diff byte for byte.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory CSV table.
#[derive(Debug, Clone)]
pub struct Table {
    out: String,
    width: usize,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let cols: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
        Self {
            out: format!("{}\n", cols.join(",")),
            width: cols.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn numeric_row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
        self.row(&cells);
    }

    pub fn as_str(&self) -> &str {
        &self.out
    }
}

/// Collects named outputs; written to a directory or, without one, printed.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, content: impl Into<String>) {
        self.files.push((name.into(), content.into()));
    }

    pub fn table(&mut self, name: impl Into<String>, table: Table) {
        self.add(name, table.out);
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    files: Vec<&'a str>,
}

pub const MANIFEST: &str = "manifest.json";

/// Writes every output plus `manifest.json` into `dir`.
pub fn write_all(dir: &Path, cfg: &RunConfig, outputs: &Outputs) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for (name, content) in &outputs.files {
        let p = dir.join(name);
        fs::write(&p, content).map_err(|e| CliError::io(&p, e))?;
        written.push(p);
    }
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        files: outputs.files.iter().map(|(n, _)| n.as_str()).collect(),
    };
    let p = dir.join(MANIFEST);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    fs::write(&p, json + "\n").map_err(|e| CliError::io(&p, e))?;
    written.push(p);
    Ok(written)
}

/// Reads the config back out of a manifest.
pub fn read_manifest(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = v
        .get("config")
        .cloned()
        .ok_or_else(|| CliError::Config("manifest has no `config`".into()))?;
    serde_json::from_value(cfg).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Log-log plot of the columns `ys` of `csv` against its first column.
pub fn gnuplot_script(csv: &str, title: &str, ys: &[(usize, &str)], ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set key left top");
    let _ = writeln!(s, "set xlabel 'epsilon'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set terminal pngcairo size 800,600");
    let _ = writeln!(s, "set output '{}.png'", csv.trim_end_matches(".csv"));
    let plots: Vec<String> = ys
        .iter()
        .map(|(col, name)| {
            format!("'{csv}' every ::1 using 1:{col} with linespoints title '{name}'")
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}
