//! Reading inputs into tensors.
//!
//! Images become `height × width × 3` tensors with the RGB channels as frontal
//! slices. A directory of grayscale PNG frames becomes `height × width × frames`,
//! frames taken in lexicographic file-name order.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::ValueEnum;
use image::{GrayImage, RgbImage};
use ttnn::completion::{scale_to_peak, synth_low_tubal_rank, PIXEL_PEAK};
use ttnn::Tensor3;

use crate::tensor_file;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    TensorFile,
    Image,
    FrameDir,
    /// Seeded low-tubal-rank tensor scaled to the 8-bit peak; `--input` is ignored.
    Synthetic,
}

/// Shape and seed of a generated instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub dims: (usize, usize, usize),
    pub rank: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dims: (30, 30, 5),
            rank: 3,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn label(&self) -> String {
        let (a, b, c) = self.dims;
        format!("synthetic-{a}x{b}x{c}-rank{}-seed{}", self.rank, self.seed)
    }

    pub fn generate(&self) -> Result<Tensor3> {
        let (n1, n2, n3) = self.dims;
        let t = synth_low_tubal_rank(n1, n2, n3, self.rank, self.seed)?;
        Ok(scale_to_peak(&t, PIXEL_PEAK)?)
    }
}

/// Parses `AxBxC`.
pub fn parse_dims(s: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("dims {s:?} are not of the form AxBxC"))?;
    match parts[..] {
        [a, b, c] if a > 0 && b > 0 && c > 0 => Ok((a, b, c)),
        _ => bail!("dims {s:?} must be three positive integers AxBxC"),
    }
}

pub fn rgb_to_tensor(img: &RgbImage) -> Result<Tensor3> {
    let (w, h) = img.dimensions();
    Ok(Tensor3::from_fn((h as usize, w as usize, 3), |i, j, k| {
        f64::from(img.get_pixel(j as u32, i as u32)[k])
    })?)
}

pub fn gray_frames_to_tensor(frames: &[GrayImage]) -> Result<Tensor3> {
    let first = frames.first().context("no frames")?;
    let (w, h) = first.dimensions();
    for (n, f) in frames.iter().enumerate() {
        ensure!(
            f.dimensions() == (w, h),
            "frame {n} is {:?}, first frame is {:?}",
            f.dimensions(),
            (w, h)
        );
    }
    Ok(Tensor3::from_fn(
        (h as usize, w as usize, frames.len()),
        |i, j, k| f64::from(frames[k].get_pixel(j as u32, i as u32)[0]),
    )?)
}

/// PNG files of a directory in lexicographic order.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("listing {}", dir.display()))?;
    paths.retain(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")));
    paths.sort();
    ensure!(!paths.is_empty(), "no PNG frames in {}", dir.display());
    Ok(paths)
}

pub fn load_tensor(path: &Path, kind: InputKind) -> Result<Tensor3> {
    match kind {
        InputKind::TensorFile => tensor_file::load(path),
        InputKind::Image => {
            let img = image::open(path).with_context(|| format!("decoding {}", path.display()))?;
            rgb_to_tensor(&img.to_rgb8()).with_context(|| path.display().to_string())
        }
        InputKind::FrameDir => {
            let frames = frame_paths(path)?
                .iter()
                .map(|p| {
                    image::open(p)
                        .map(|i| i.to_luma8())
                        .with_context(|| format!("decoding {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            gray_frames_to_tensor(&frames).with_context(|| path.display().to_string())
        }
        InputKind::Synthetic => bail!("synthetic inputs are generated, not loaded"),
    }
}
