use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Where command data goes; human-readable summaries go to stdout only when
/// the data itself goes to a file.
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self { path }
    }

    pub fn is_file(&self) -> bool {
        self.path.is_some()
    }

    fn label(&self) -> PathBuf {
        self.path
            .clone()
            .unwrap_or_else(|| PathBuf::from("<stdout>"))
    }

    fn io_error(&self, source: io::Error) -> CliError {
        CliError::Io {
            path: self.label(),
            source,
        }
    }

    /// Opens the destination once; rows are written in order through the
    /// returned writer.
    pub fn open(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    pub fn write_with(&self, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
        let mut w = self.open()?;
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| self.io_error(e))
    }

    pub fn wrap<V>(&self, r: io::Result<V>) -> CliResult<V> {
        r.map_err(|e| self.io_error(e))
    }

    /// Prints a summary line without mixing it into data written to stdout.
    pub fn say(&self, line: impl AsRef<str>) {
        if self.is_file() {
            println!("{}", line.as_ref());
        } else {
            eprintln!("{}", line.as_ref());
        }
    }
}

fn create(path: &Path) -> CliResult<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Quotes a CSV field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_json<V: serde::Serialize + ?Sized>(w: &mut dyn Write, value: &V) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
    writeln!(w)
}
