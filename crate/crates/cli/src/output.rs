//! Output files: written once each, through a temporary file and a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use heun_spectra::C64;
use serde::Serialize;

use crate::CliError;

pub struct OutDir {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", target.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &target).map_err(io)?;
        self.written.push(target);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

/// `re,im` rows under a header.
pub fn points_csv(points: &[C64]) -> String {
    let mut s = String::from("re,im\n");
    for z in points {
        s.push_str(&format!("{:?},{:?}\n", z.re, z.im));
    }
    s
}

/// Rows of a leading integer label followed by `re,im`.
pub fn labelled_csv(label: &str, rows: &[(usize, C64)]) -> String {
    let mut s = format!("{label},re,im\n");
    for (k, z) in rows {
        s.push_str(&format!("{k},{:?},{:?}\n", z.re, z.im));
    }
    s
}

/// `re,im,weight` rows.
pub fn weighted_csv(rows: impl Iterator<Item = (f64, f64, f64)>) -> String {
    let mut s = String::from("re,im,weight\n");
    for (x, y, w) in rows {
        s.push_str(&format!("{x:?},{y:?},{w:?}\n"));
    }
    s
}
