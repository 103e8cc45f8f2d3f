//! Batch runs: every input is masked once and solved for every requested r.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use ttnn::completion::{psnr_with_peak, random_mask, relative_error, restrict_observed};
use ttnn::solvers::solve;
use ttnn::{ObservationMask, SolverConfig, Tensor3};

use crate::input::{load_tensor, InputKind, SyntheticSpec};
use crate::output::save_recovered;
use crate::report::{Psnr, Report, ReportFormat, ReportRow};
use crate::tensor_file;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub kind: InputKind,
    pub synthetic: SyntheticSpec,
    /// Explicit 0/1 mask file. The input then has no ground truth.
    pub mask: Option<PathBuf>,
    pub missing_rate: f64,
    pub seed: u64,
    pub r_values: Vec<usize>,
    /// Solver parameters; `r` is overridden per job.
    pub solver: SolverConfig,
    pub peak: f64,
    pub out: PathBuf,
    pub format: ReportFormat,
    pub workers: usize,
    pub save_outputs: bool,
}

impl RunConfig {
    pub fn new(out: PathBuf) -> Self {
        Self {
            inputs: Vec::new(),
            kind: InputKind::Synthetic,
            synthetic: SyntheticSpec::default(),
            mask: None,
            missing_rate: 0.5,
            seed: 0,
            r_values: vec![SolverConfig::default().r],
            solver: SolverConfig::default(),
            peak: ttnn::completion::PIXEL_PEAK,
            out,
            format: ReportFormat::Csv,
            workers: 1,
            save_outputs: true,
        }
    }

    pub fn report_path(&self) -> PathBuf {
        self.out.join(format!("report.{}", self.format.extension()))
    }

    /// Checks everything that can be checked before any data is read.
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.r_values.is_empty(), "no r values requested");
        ensure!(self.workers > 0, "--workers must be at least 1");
        ensure!(
            self.peak.is_finite() && self.peak > 0.0,
            "--peak must be positive"
        );
        ensure!(
            (0.0..1.0).contains(&self.missing_rate),
            "missing rate {} outside [0, 1)",
            self.missing_rate
        );
        for r in &self.r_values {
            self.solver.clone().with_r(*r).validate()?;
        }
        if self.kind == InputKind::Synthetic {
            ensure!(self.inputs.is_empty(), "synthetic runs take no --input");
        } else {
            ensure!(!self.inputs.is_empty(), "no --input given");
            for p in &self.inputs {
                ensure!(p.exists(), "input {} does not exist", p.display());
            }
        }
        if let Some(m) = &self.mask {
            ensure!(m.exists(), "mask {} does not exist", m.display());
            ensure!(
                self.r_values.len() == 1,
                "an r sweep picks r by PSNR against ground truth, which a --mask run does not have"
            );
        }
        Ok(())
    }
}

/// One masked input, ready to solve.
struct Prepared {
    label: String,
    stem: String,
    observed: Tensor3,
    mask: ObservationMask,
    truth: Option<Tensor3>,
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn prepare(cfg: &RunConfig, tensor: Tensor3, label: String, stem: String) -> Result<Prepared> {
    let (mask, truth) = match &cfg.mask {
        Some(path) => {
            let m = ObservationMask::from_indicator(&tensor_file::load(path)?);
            m.check_dims(&tensor)
                .with_context(|| format!("mask {}", path.display()))?;
            (m, None)
        }
        None => (
            random_mask(tensor.dims(), cfg.missing_rate, cfg.seed)?,
            Some(tensor.clone()),
        ),
    };
    let (n1, n2, _) = tensor.dims();
    if let Some(&r) = cfg.r_values.iter().find(|&&r| r > n1.min(n2)) {
        bail!("r = {r} exceeds min(n1, n2) = {}", n1.min(n2));
    }
    let observed = restrict_observed(&tensor, &mask)?;
    Ok(Prepared {
        label,
        stem,
        observed,
        mask,
        truth,
    })
}

fn load_all(cfg: &RunConfig) -> Vec<(String, String, Result<Prepared>)> {
    if cfg.kind == InputKind::Synthetic {
        let label = cfg.synthetic.label();
        let prepared = cfg
            .synthetic
            .generate()
            .and_then(|t| prepare(cfg, t, label.clone(), label.clone()));
        return vec![(label.clone(), label, prepared)];
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    cfg.inputs
        .iter()
        .map(|path| {
            let label = path.display().to_string();
            let mut stem = stem_of(path);
            let n = seen.entry(stem.clone()).or_default();
            *n += 1;
            if *n > 1 {
                stem = format!("{stem}-{n}");
            }
            let prepared = load_tensor(path, cfg.kind)
                .and_then(|t| prepare(cfg, t, label.clone(), stem.clone()))
                .with_context(|| format!("input {label}"));
            (label, stem, prepared)
        })
        .collect()
}

fn base_row(cfg: &RunConfig, input: &str, r: usize) -> ReportRow {
    ReportRow {
        input: input.to_string(),
        method: cfg.solver.method.to_string(),
        r,
        missing_rate: cfg.missing_rate,
        seed: cfg.seed,
        psnr: None,
        relative_error: None,
        outer_iters: None,
        inner_iters: None,
        converged: None,
        seconds: None,
        best: false,
        error: None,
    }
}

fn run_job(cfg: &RunConfig, p: &Prepared, r: usize) -> ReportRow {
    let mut row = base_row(cfg, &p.label, r);
    let outcome = (|| -> Result<()> {
        let report = solve(&p.observed, &p.mask, &cfg.solver.clone().with_r(r))?;
        row.outer_iters = Some(report.outer_iterations);
        row.inner_iters = Some(report.total_inner_iterations);
        row.converged = Some(report.converged);
        row.seconds = Some(report.wall_time);
        if let Some(truth) = &p.truth {
            if p.mask.count_missing() > 0 {
                row.psnr = Some(Psnr(psnr_with_peak(
                    &report.recovered,
                    truth,
                    &p.mask,
                    cfg.peak,
                )?));
            }
            row.relative_error = Some(relative_error(&report.recovered, truth)?);
        }
        if cfg.save_outputs {
            let stem = format!("{}_{}_r{r}", p.stem, cfg.solver.method);
            save_recovered(&cfg.out, &stem, cfg.kind, &report.recovered)?;
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(format!("{e:#}"));
    }
    row
}

/// Runs every (input, r) job and returns the sorted report. Failures of single
/// inputs or jobs are recorded in their rows.
pub fn run_experiment(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()?;

    let inputs = load_all(cfg);
    let mut rows = Vec::new();
    let mut jobs = Vec::new();
    for (label, _, prepared) in &inputs {
        match prepared {
            Ok(p) => jobs.extend(cfg.r_values.iter().map(|&r| (p, r))),
            Err(e) => rows.extend(cfg.r_values.iter().map(|&r| ReportRow {
                error: Some(format!("{e:#}")),
                ..base_row(cfg, label, r)
            })),
        }
    }
    rows.extend(pool.install(|| {
        jobs.par_iter()
            .map(|&(p, r)| run_job(cfg, p, r))
            .collect::<Vec<_>>()
    }));
    Ok(Report::new(rows))
}

/// Runs the experiment and writes the report; returns it for the exit status.
pub fn run_and_write(cfg: &RunConfig) -> Result<Report> {
    let report = run_experiment(cfg)?;
    report.write(&cfg.report_path(), cfg.format)?;
    Ok(report)
}
