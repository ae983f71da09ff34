//! File outputs: metrics tables and danger-map grids.
//!
//! Every writer formats floats with Rust's shortest round-trip `Display`,
//! which is platform independent, and writes whole files atomically.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::danger::DangerNet;
use crate::error::{Error, Result};

/// One row per episode.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: u64,
    pub length: usize,
    pub total_return: f64,
    pub total_steps: u64,
    pub epsilon: f64,
    /// Wall-clock milliseconds since the run started. Kept out of the
    /// metrics table so that table stays reproducible.
    pub wall_ms: u64,
}

pub const METRICS_HEADER: &str = "episode,length,return,total_steps,epsilon";

/// Writes `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn format_metrics(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.episode, r.length, r.total_return, r.total_steps, r.epsilon
        );
    }
    out
}

pub fn write_metrics(rows: &[MetricsRow], path: &Path) -> Result<()> {
    write_atomic(path, format_metrics(rows).as_bytes())
}

pub fn write_timing(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let mut out = String::from("episode,wall_ms\n");
    for r in rows {
        let _ = writeln!(out, "{},{}", r.episode, r.wall_ms);
    }
    write_atomic(path, out.as_bytes())
}

/// Trailing moving average of episode lengths; `None` until the window fills.
pub fn moving_average(rows: &[MetricsRow], window: usize) -> Vec<Option<f64>> {
    let mut sum = 0.0;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            sum += r.length as f64;
            if i >= window {
                sum -= rows[i - window].length as f64;
            }
            (i + 1 >= window).then(|| sum / window as f64)
        })
        .collect()
}

/// Cumulative env steps at the first episode where the trailing `window`
/// average length reaches `threshold`.
pub fn steps_to_solve(rows: &[MetricsRow], window: usize, threshold: f64) -> Option<u64> {
    moving_average(rows, window)
        .into_iter()
        .zip(rows)
        .find(|(avg, _)| avg.is_some_and(|a| a >= threshold))
        .map(|(_, r)| r.total_steps)
}

/// A 2-D slice through the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dim_i: usize,
    pub dim_j: usize,
    pub range_i: (f64, f64),
    pub range_j: (f64, f64),
    pub resolution: usize,
    /// Values for every dimension; entries at `dim_i` and `dim_j` are ignored.
    pub fixed: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub value_i: f64,
    pub value_j: f64,
    pub danger: f64,
}

impl GridSpec {
    /// Full-range grid over `±scale` on both chosen dimensions, others at zero.
    pub fn centered(dim_i: usize, dim_j: usize, scales: &[f64], resolution: usize) -> Self {
        let span = |d: usize| scales.get(d).map_or((-1.0, 1.0), |s| (-s, *s));
        Self {
            dim_i,
            dim_j,
            range_i: span(dim_i),
            range_j: span(dim_j),
            resolution,
            fixed: vec![0.0; scales.len()],
        }
    }

    fn validate(&self, state_dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGrid(msg));
        if self.dim_i == self.dim_j {
            return bad(format!("dimensions must differ, both are {}", self.dim_i));
        }
        if self.dim_i >= state_dim || self.dim_j >= state_dim {
            return bad(format!(
                "dimensions ({}, {}) out of range for state size {state_dim}",
                self.dim_i, self.dim_j
            ));
        }
        if self.resolution < 2 {
            return bad(format!(
                "resolution must be at least 2, got {}",
                self.resolution
            ));
        }
        for (name, (lo, hi)) in [("i", self.range_i), ("j", self.range_j)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!(
                    "range {name} must be finite with lo < hi, got ({lo}, {hi})"
                ));
            }
        }
        if self.fixed.len() != state_dim {
            return bad(format!(
                "expected {state_dim} fixed values, got {}",
                self.fixed.len()
            ));
        }
        if !self.fixed.iter().all(|v| v.is_finite()) {
            return bad("fixed values must be finite".into());
        }
        Ok(())
    }
}

fn lattice(range: (f64, f64), resolution: usize, k: usize) -> f64 {
    range.0 + (range.1 - range.0) * k as f64 / (resolution - 1) as f64
}

/// Evaluates the danger map on a `resolution x resolution` lattice, `dim_i`
/// outer and `dim_j` inner.
pub fn export_danger_grid(net: &DangerNet, spec: &GridSpec) -> Result<Vec<GridCell>> {
    spec.validate(net.scales().len())?;
    let mut state = spec.fixed.clone();
    let mut cells = Vec::with_capacity(spec.resolution * spec.resolution);
    for a in 0..spec.resolution {
        let value_i = lattice(spec.range_i, spec.resolution, a);
        for b in 0..spec.resolution {
            let value_j = lattice(spec.range_j, spec.resolution, b);
            state[spec.dim_i] = value_i;
            state[spec.dim_j] = value_j;
            cells.push(GridCell {
                value_i,
                value_j,
                danger: net.eval(&state)?,
            });
        }
    }
    Ok(cells)
}

pub fn format_grid(spec: &GridSpec, cells: &[GridCell]) -> String {
    let mut out = format!("s{},s{},danger\n", spec.dim_i, spec.dim_j);
    for c in cells {
        let _ = writeln!(out, "{},{},{}", c.value_i, c.value_j, c.danger);
    }
    out
}

pub fn write_grid(spec: &GridSpec, cells: &[GridCell], path: &Path) -> Result<()> {
    write_atomic(path, format_grid(spec, cells).as_bytes())
}
