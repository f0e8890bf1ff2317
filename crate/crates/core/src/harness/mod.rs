//! Experiment runner and command-line front end: Monte Carlo SR sampling,
//! RN baselines, bound overlays, coverage checks, CSV and SVG output.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};

pub use config::{EntryDist, ExperimentConfig, ExperimentKind, XGrid};
pub use experiment::{
    coverage_check, run_experiment, run_horner_experiment, run_inner_experiment, CoverageResult, ExperimentOutput,
    PointResult,
};
pub use output::{emit_csv, parse_csv, BoundRow, SampleRow, StatsRow};

use crate::error::Result;

/// Writes `samples.csv`, `bounds.csv`, `stats.csv` and optionally
/// `plot.svg` into `dir`, creating it if needed.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path, with_svg: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let header = out.header_lines();
    let mut written = Vec::new();
    let samples = dir.join("samples.csv");
    emit_csv(&out.sample_rows(), &header, &samples)?;
    written.push(samples);
    let bounds = dir.join("bounds.csv");
    emit_csv(&out.bound_rows(), &header, &bounds)?;
    written.push(bounds);
    let stats = dir.join("stats.csv");
    emit_csv(&out.stats_rows(), &header, &stats)?;
    written.push(stats);
    if with_svg {
        let plot = dir.join("plot.svg");
        svg::emit_svg(out, &plot)?;
        written.push(plot);
    }
    Ok(written)
}
