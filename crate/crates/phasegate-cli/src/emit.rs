//! Output writers: CSV tables with 17-significant-digit floats, JSON
//! summaries at full double precision (serde_json round-trip formatting),
//! and the binary density-matrix dump.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use phasegate_core::oracle::DensityMatrix;

use crate::CliError;

/// 17 significant digits: lossless for f64 round-trips.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Validation(format!("cannot write {}: {err}", path.display()))
}

/// A CSV table with a fixed header; every row must match its width.
pub struct Table {
    writer: csv::Writer<BufWriter<File>>,
    path: PathBuf,
    columns: usize,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer
            .write_record(header)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
        Ok(Table {
            writer,
            path,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<(), CliError> {
        assert_eq!(cells.len(), self.columns, "row width mismatch");
        self.writer.write_record(cells).map_err(|e| {
            CliError::Validation(format!("cannot write {}: {e}", self.path.display()))
        })
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer
            .flush()
            .map_err(|e| io_error(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    writeln!(writer).map_err(|e| io_error(&path, e))?;
    writer.flush().map_err(|e| io_error(&path, e))?;
    Ok(path)
}

/// Binary dump: 8-byte magic, dim as u64 little-endian, then the row-major
/// complex entries as little-endian doubles.
pub fn write_state(dir: &Path, name: &str, state: &DensityMatrix) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    let mut writer = BufWriter::new(file);
    state
        .write_binary(&mut writer)
        .map_err(|e| io_error(&path, e))?;
    writer.flush().map_err(|e| io_error(&path, e))?;
    Ok(path)
}
