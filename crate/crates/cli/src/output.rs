//! CSV rendering and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use tempfile::NamedTempFile;

use crate::Failure;

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e15) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// A CSV table kept in memory until every output of a command is ready.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = Self { text: String::new() };
        t.row(header);
        t
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let line: Vec<&str> = fields.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn matrix_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| num(*v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Files produced by one command, written only once all of them exist in memory.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.files.push((name.into(), contents.into()));
    }

    /// Writes each file through a temporary sibling that is renamed into place.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in self.files {
            let target = dir.join(&name);
            let io = |e: std::io::Error| Failure::Input(format!("{}: {e}", target.display()));
            let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(contents.as_bytes()).map_err(io)?;
            tmp.as_file().sync_all().map_err(io)?;
            tmp.persist(&target).map_err(|e| io(e.error))?;
            written.push(target);
        }
        Ok(written)
    }
}
