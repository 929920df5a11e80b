//! Artifact formats: ASCII grids, CSV traces, JSON reports and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{EnergyBreakdown, Grid, GridField};

const GRID_MAGIC: &str = "IFGRID";
const GRID_VERSION: &str = "v1";

/// Header of every trace file.
pub const TRACE_HEADER: &str = "iter,total,dirichlet,surface,volume,grad_norm";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Text of a grid file: header line, then `ny` rows of `nx` values, bottom
/// row first, 17 significant digits.
pub fn grid_to_string(field: &GridField) -> String {
    let mut s = String::with_capacity(field.values.len() * 25 + 128);
    let _ = writeln!(
        s,
        "{GRID_MAGIC} {GRID_VERSION} {} {} {:.16e} {:.16e} {:.16e} {:.16e}",
        field.nx, field.ny, field.origin[0], field.origin[1], field.spacing[0], field.spacing[1]
    );
    for row in field.values.chunks(field.nx) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

/// Parses grid text; `path` only labels diagnostics.
pub fn grid_from_str(text: &str, path: &Path) -> Result<GridField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| format_err(path, "empty grid file"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 8 || parts[0] != GRID_MAGIC {
        return Err(format_err(path, format!("line 1: expected `{GRID_MAGIC} {GRID_VERSION} nx ny x0 y0 dx dy`")));
    }
    if parts[1] != GRID_VERSION {
        return Err(format_err(path, format!("line 1: unsupported version `{}`", parts[1])));
    }
    let int = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| format_err(path, format!("line 1: {what} `{s}` is not a non-negative integer")))
    };
    let float = |s: &str, what: &str| {
        s.parse::<f64>()
            .map_err(|_| format_err(path, format!("line 1: {what} `{s}` is not a number")))
    };
    let nx = int(parts[2], "nx")?;
    let ny = int(parts[3], "ny")?;
    let origin = [float(parts[4], "x0")?, float(parts[5], "y0")?];
    let spacing = [float(parts[6], "dx")?, float(parts[7], "dy")?];
    let grid = Grid::new(nx, ny, origin, spacing).map_err(|e| format_err(path, format!("line 1: {e}")))?;
    let mut values = Vec::with_capacity(nx * ny);
    for (lineno, line) in lines {
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| format_err(path, format!("line {}: `{tok}` is not a number", lineno + 1)))?;
            values.push(v);
        }
        if values.len() - before != nx {
            return Err(format_err(
                path,
                format!("line {}: expected {nx} values, found {}", lineno + 1, values.len() - before),
            ));
        }
    }
    if values.len() != nx * ny {
        return Err(format_err(path, format!("expected {ny} rows, found {}", values.len() / nx.max(1))));
    }
    GridField::from_values(grid, values).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_grid(path: &Path, field: &GridField) -> Result<()> {
    fs::write(path, grid_to_string(field)).map_err(io_err(path))
}

pub fn read_grid(path: &Path) -> Result<GridField> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    grid_from_str(&text, path)
}

/// One row of a trace file.
pub fn trace_row(iter: usize, e: &EnergyBreakdown, grad_norm: Option<f64>) -> String {
    let g = grad_norm.map_or_else(|| "nan".to_string(), |g| format!("{g:.16e}"));
    format!(
        "{iter},{:.16e},{:.16e},{:.16e},{:.16e},{g}",
        e.total, e.dirichlet, e.surface, e.volume
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub wall_time_s: f64,
    /// Full configuration echo; re-running it reproduces the artifacts.
    pub config: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory that records every file written through it.
pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.written.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_grid(&mut self, name: &str, field: &GridField) -> Result<PathBuf> {
        self.write(name, grid_to_string(field).as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(format!("cannot serialize {name}: {e}")))?;
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` listing every artifact written so far.
    pub fn finish(self, subcommand: &str, seed: u64, wall_time_s: f64, config: String) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed,
            wall_time_s,
            config,
            artifacts: self.written,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))?;
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_text_round_trip_is_exact() {
        let grid = Grid::new(3, 2, [-1.0, 0.25], [0.1, 0.2]).unwrap();
        let f = GridField::from_values(grid, vec![0.0, 1.0 / 3.0, 1e-300, 0.1 + 0.2, 2f64.sqrt(), -0.0]).unwrap();
        let back = grid_from_str(&grid_to_string(&f), Path::new("mem")).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_grids_name_the_line() {
        let p = Path::new("mem");
        assert!(grid_from_str("", p).is_err());
        let err = grid_from_str("IFGRID v1 2 1 0 0 1 1\n0.5 x\n", p).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = grid_from_str("IFGRID v1 2 2 0 0 1 1\n0.5 0.5\n", p).unwrap_err();
        assert!(err.to_string().contains("rows"), "{err}");
        assert!(grid_from_str("IFGRID v2 1 1 0 0 1 1\n0\n", p).is_err());
    }
}
