//! Output files. Everything is rendered in memory first and then written
//! through a temp file in the target directory plus rename.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use grayspace::export;
use grayspace::stats::{CdfCurve, GraySpaceMap, UtilizationTable};

use crate::config::{ExportFormat, RunConfig, ECHO_PREFIX};
use crate::error::CliError;

/// Files to write, collected so nothing is written before every
/// computation has succeeded.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn add(&mut self, path: PathBuf, contents: impl Into<Vec<u8>>) {
        self.files.push((path, contents.into()));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn commit(self) -> Result<(), CliError> {
        for (path, contents) in &self.files {
            write_atomic(path, contents)?;
        }
        Ok(())
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let internal = |e: std::io::Error| CliError::Internal(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(internal)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(internal)?;
    tmp.write_all(contents).map_err(internal)?;
    tmp.flush().map_err(internal)?;
    tmp.persist(path).map_err(|e| internal(e.error))?;
    Ok(())
}

/// Keeps file names portable.
pub fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

pub fn render_cdf(curve: &CdfCurve) -> String {
    let mut s = String::from("gray_mhz,percent_area\n");
    for p in &curve.points {
        let _ = writeln!(s, "{},{:.6}", p.gray_mhz, p.percent_area);
    }
    s
}

/// Household means rounded to one decimal; `other` holds cells outside
/// every bucket.
pub fn render_utilization(table: &UtilizationTable) -> String {
    let mut s = String::from("bucket,mean_households\n");
    for b in &table.buckets {
        let _ = writeln!(s, "{},{:.1}", b.label, b.mean_households);
    }
    let _ = writeln!(s, "other,{:.1}", table.other);
    s
}

/// Map renderings keyed by file name.
pub fn render_map(map: &GraySpaceMap, format: ExportFormat) -> Result<Vec<(&'static str, Vec<u8>)>, CliError> {
    let mut out = Vec::new();
    if matches!(format, ExportFormat::Matrix | ExportFormat::Both) {
        let mut buf = Vec::new();
        export::write_matrix(&map.values, map.rows, map.cols, &mut buf)?;
        out.push(("map.csv", buf));
    }
    if matches!(format, ExportFormat::Rle | ExportFormat::Both) {
        let mut buf = Vec::new();
        export::write_rle(&map.values, map.rows, map.cols, &mut buf)?;
        out.push(("map.rle", buf));
    }
    Ok(out)
}

/// `key: value` lines.
#[derive(Debug, Default)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn new(command: &str) -> Self {
        let mut s = Self::default();
        s.field("tool", format!("grayspace {}", env!("CARGO_PKG_VERSION")));
        s.field("command", command);
        s
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key}: {value}");
        self
    }

    pub fn warnings(&mut self, warnings: &[String]) -> &mut Self {
        self.field("warnings", warnings.len());
        for w in warnings {
            self.field("warning", w);
        }
        self
    }

    /// Appends the effective config so `--config <summary>` reruns it.
    pub fn config_echo(&mut self, config: &RunConfig) -> Result<&mut Self, CliError> {
        for line in config.to_toml()?.lines() {
            if line.is_empty() {
                let _ = writeln!(self.text, "{ECHO_PREFIX}");
            } else {
                let _ = writeln!(self.text, "{ECHO_PREFIX} {line}");
            }
        }
        Ok(self)
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
