use std::path::PathBuf;

use anyhow::{ensure, Result};
use clap::{ArgAction, Parser};
use ttnn::{Method, SolverConfig, StopRule};

use crate::experiment::RunConfig;
use crate::input::{parse_dims, InputKind, SyntheticSpec};
use crate::report::ReportFormat;

/// Recover missing entries of tensors, images and frame sequences by tensor
/// truncated nuclear norm minimization.
#[derive(Debug, Parser)]
#[command(name = "ttnn", version)]
pub struct Args {
    /// Input path; repeat for several inputs. Not used with `--kind synthetic`.
    #[arg(long, action = ArgAction::Append)]
    pub input: Vec<PathBuf>,

    #[arg(long, value_enum, default_value = "synthetic")]
    pub kind: InputKind,

    /// Explicit observation mask (`.ttnn`, non-zero = observed) instead of a
    /// random one. Without ground truth no PSNR is reported.
    #[arg(long)]
    pub mask: Option<PathBuf>,

    /// Dimensions of the synthetic instance.
    #[arg(long, default_value = "30x30x5", value_parser = parse_dims)]
    pub synth_dims: (usize, usize, usize),

    #[arg(long, default_value_t = 3)]
    pub synth_rank: usize,

    /// Seed of the synthetic factors (the mask uses `--seed`).
    #[arg(long, default_value_t = 1)]
    pub synth_seed: u64,

    #[arg(long, default_value_t = 0.5)]
    pub missing_rate: f64,

    /// Seed of the random observation mask.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value = "admm")]
    pub method: Method,

    /// Single truncation rank. Conflicts with a sweep.
    #[arg(long, conflicts_with_all = ["r_min", "r_max"])]
    pub r: Option<usize>,

    /// Sweep start (inclusive); requires `--r-max`.
    #[arg(long, requires = "r_max")]
    pub r_min: Option<usize>,

    /// Sweep end (inclusive); requires `--r-min`.
    #[arg(long, requires = "r_min")]
    pub r_max: Option<usize>,

    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub inner_max: Option<usize>,
    #[arg(long)]
    pub outer_max: Option<usize>,

    /// Compare iterate changes relative to the previous iterate's norm.
    #[arg(long)]
    pub relative_stop: bool,

    /// Upper bound on the APGL thresholding level.
    #[arg(long)]
    pub apgl_threshold_cap: Option<f64>,

    /// Peak value used for PSNR.
    #[arg(long, default_value_t = ttnn::completion::PIXEL_PEAK)]
    pub peak: f64,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: ReportFormat,

    /// Parallel (input, r) jobs.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Write only the report, not the recovered tensors.
    #[arg(long)]
    pub no_save: bool,
}

impl Args {
    pub fn into_config(self) -> Result<RunConfig> {
        let d = SolverConfig::default();
        let r_values = match (self.r, self.r_min, self.r_max) {
            (_, Some(lo), Some(hi)) => {
                ensure!(lo <= hi, "--r-min {lo} is larger than --r-max {hi}");
                (lo..=hi).collect()
            }
            (Some(r), _, _) => vec![r],
            _ => vec![d.r],
        };
        let solver = SolverConfig {
            r: r_values[0],
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            outer_max: self.outer_max.unwrap_or(d.outer_max),
            mu: self.mu.unwrap_or(d.mu),
            lambda: self.lambda.unwrap_or(d.lambda),
            xi: self.xi.unwrap_or(d.xi),
            inner_max: self.inner_max.unwrap_or(d.inner_max),
            method: self.method,
            stop_rule: if self.relative_stop {
                StopRule::Relative
            } else {
                StopRule::Absolute
            },
            apgl_threshold_cap: self.apgl_threshold_cap,
        };
        Ok(RunConfig {
            inputs: self.input,
            kind: self.kind,
            synthetic: SyntheticSpec {
                dims: self.synth_dims,
                rank: self.synth_rank,
                seed: self.synth_seed,
            },
            mask: self.mask,
            missing_rate: self.missing_rate,
            seed: self.seed,
            r_values,
            solver,
            peak: self.peak,
            out: self.out,
            format: self.format,
            workers: self.workers,
            save_outputs: !self.no_save,
        })
    }
}
