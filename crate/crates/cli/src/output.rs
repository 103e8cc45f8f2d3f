//! Writing recovered tensors. Raw values always go to a `.ttnn` file; image
//! and frame inputs additionally get PNGs, clamped to `[0, 255]` and rounded.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use image::{GrayImage, Luma, Rgb, RgbImage};
use ttnn::Tensor3;

use crate::input::InputKind;
use crate::tensor_file;

pub fn to_pixel(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// The first three frontal slices as an RGB image.
pub fn tensor_to_rgb(t: &Tensor3) -> RgbImage {
    let (h, w, _) = t.dims();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (i, j) = (y as usize, x as usize);
        Rgb([0, 1, 2].map(|k| to_pixel(t.get(i, j, k))))
    })
}

pub fn slice_to_gray(t: &Tensor3, k: usize) -> GrayImage {
    let (h, w, _) = t.dims();
    GrayImage::from_fn(w as u32, h as u32, |x, y| {
        Luma([to_pixel(t.get(y as usize, x as usize, k))])
    })
}

/// Saves `t` under `dir` with file stem `stem`; returns the paths written.
pub fn save_recovered(
    dir: &Path,
    stem: &str,
    kind: InputKind,
    t: &Tensor3,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let raw = dir.join(format!("{stem}.ttnn"));
    tensor_file::save(&raw, t)?;
    written.push(raw);
    match kind {
        InputKind::Image if t.dims().2 == 3 => {
            let png = dir.join(format!("{stem}.png"));
            tensor_to_rgb(t)
                .save(&png)
                .with_context(|| format!("writing {}", png.display()))?;
            written.push(png);
        }
        InputKind::FrameDir => {
            let frames = dir.join(stem);
            fs::create_dir_all(&frames)
                .with_context(|| format!("creating {}", frames.display()))?;
            for k in 0..t.dims().2 {
                let png = frames.join(format!("frame_{k:04}.png"));
                slice_to_gray(t, k)
                    .save(&png)
                    .with_context(|| format!("writing {}", png.display()))?;
                written.push(png);
            }
        }
        _ => {}
    }
    Ok(written)
}
