use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bwave_core::{SpaceTimeField, SpatialGrid, TimeGrid};

use crate::error::{CliError, CliResult};

/// Floats in every output file: 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per grid point per sampled time slice:
/// `t,x[,x2],<columns...>` with the spatial coordinates of each node.
pub fn trajectory_csv(
    g: &SpatialGrid,
    tg: &TimeGrid,
    names: &[&str],
    fields: &[&SpaceTimeField],
    stride: usize,
) -> String {
    let mut out = String::new();
    out.push_str(if g.dimension() == 1 { "t,x" } else { "t,x1,x2" });
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for k in (0..tg.nodes()).step_by(stride.max(1)) {
        let t = num(tg.t(k));
        for i in 0..g.len() {
            let x = g.coords(i);
            out.push_str(&t);
            for c in x.iter().take(g.dimension()) {
                out.push(',');
                out.push_str(&num(*c));
            }
            for f in fields {
                out.push(',');
                out.push_str(&num(f.slice(k)[i]));
            }
            out.push('\n');
        }
    }
    out
}

/// `key=value` lines; values are written verbatim.
pub fn key_values(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

/// Output directory that records every file written into it.
pub struct OutDir {
    root: PathBuf,
    pub files: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}
