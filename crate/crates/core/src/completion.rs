//! Observation masks, synthetic problems and recovery metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use crate::tsvd::t_product;

/// Peak pixel value used by [`psnr`].
pub const PIXEL_PEAK: f64 = 255.0;

/// Which entries of a tensor are observed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationMask {
    dims: (usize, usize, usize),
    observed: Vec<bool>,
    count_observed: usize,
}

impl ObservationMask {
    /// Mask from slice-major flags (same layout as [`Tensor3`]).
    pub fn new(dims: (usize, usize, usize), observed: Vec<bool>) -> Result<Self> {
        if observed.len() != dims.0 * dims.1 * dims.2 || observed.is_empty() {
            return Err(Error::Shape(format!(
                "{} flags for dims {dims:?}",
                observed.len()
            )));
        }
        let count_observed = observed.iter().filter(|&&o| o).count();
        Ok(Self {
            dims,
            observed,
            count_observed,
        })
    }

    pub fn all_observed(dims: (usize, usize, usize)) -> Result<Self> {
        Self::new(dims, vec![true; dims.0 * dims.1 * dims.2])
    }

    /// Observed wherever `t` is non-zero.
    pub fn from_indicator(t: &Tensor3) -> Self {
        let observed: Vec<bool> = t.as_slice().iter().map(|&v| v != 0.0).collect();
        let count_observed = observed.iter().filter(|&&o| o).count();
        Self {
            dims: t.dims(),
            observed,
            count_observed,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    #[inline]
    pub fn is_observed(&self, index: usize) -> bool {
        self.observed[index]
    }

    pub fn flags(&self) -> &[bool] {
        &self.observed
    }

    pub fn count_observed(&self) -> usize {
        self.count_observed
    }

    pub fn count_missing(&self) -> usize {
        self.observed.len() - self.count_observed
    }

    /// The mask as a 0/1 tensor.
    pub fn to_indicator(&self) -> Tensor3 {
        Tensor3::from_raw(
            self.dims,
            self.observed
                .iter()
                .map(|&o| if o { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    pub fn check_dims(&self, t: &Tensor3) -> Result<()> {
        if t.dims() != self.dims {
            return Err(Error::Shape(format!(
                "mask {:?} vs tensor {:?}",
                self.dims,
                t.dims()
            )));
        }
        Ok(())
    }
}

/// Data to complete: `m` is trusted on the mask, arbitrary elsewhere.
#[derive(Clone, Debug)]
pub struct CompletionProblem {
    pub m: Tensor3,
    pub mask: ObservationMask,
    pub ground_truth: Option<Tensor3>,
}

impl CompletionProblem {
    pub fn new(m: Tensor3, mask: ObservationMask, ground_truth: Option<Tensor3>) -> Result<Self> {
        mask.check_dims(&m)?;
        if let Some(gt) = &ground_truth {
            m.check_same_dims(gt)?;
        }
        Ok(Self {
            m,
            mask,
            ground_truth,
        })
    }
}

/// Marks exactly `⌊missing_rate · n1·n2·n3⌋` entries missing, sampled uniformly
/// without replacement from a ChaCha8 stream seeded with `seed`.
pub fn random_mask(
    dims: (usize, usize, usize),
    missing_rate: f64,
    seed: u64,
) -> Result<ObservationMask> {
    if !(0.0..1.0).contains(&missing_rate) {
        return Err(Error::Argument(format!(
            "missing rate {missing_rate} outside [0, 1)"
        )));
    }
    let total = dims.0 * dims.1 * dims.2;
    let missing = (missing_rate * total as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![true; total];
    for idx in rand::seq::index::sample(&mut rng, total, missing) {
        observed[idx] = false;
    }
    ObservationMask::new(dims, observed)
}

/// `m` on observed entries, `x` elsewhere.
pub fn project_observed(x: &Tensor3, m: &Tensor3, mask: &ObservationMask) -> Result<Tensor3> {
    x.check_same_dims(m)?;
    mask.check_dims(x)?;
    let data = x
        .as_slice()
        .iter()
        .zip(m.as_slice())
        .zip(mask.flags())
        .map(|((&xv, &mv), &o)| if o { mv } else { xv })
        .collect();
    Ok(Tensor3::from_raw(x.dims(), data))
}

/// Zeroes the missing entries: `x_Ω`.
pub fn restrict_observed(x: &Tensor3, mask: &ObservationMask) -> Result<Tensor3> {
    mask.check_dims(x)?;
    let data = x
        .as_slice()
        .iter()
        .zip(mask.flags())
        .map(|(&v, &o)| if o { v } else { 0.0 })
        .collect();
    Ok(Tensor3::from_raw(x.dims(), data))
}

/// `p * q` with `p: n1×r×n3`, `q: r×n2×n3` filled with seeded standard normals.
pub fn synth_low_tubal_rank(
    n1: usize,
    n2: usize,
    n3: usize,
    r: usize,
    seed: u64,
) -> Result<Tensor3> {
    if r == 0 || r > n1.min(n2) {
        return Err(Error::Argument(format!(
            "rank {r} outside 1..={}",
            n1.min(n2)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = Tensor3::from_fn((n1, r, n3), |_, _, _| rng.sample(StandardNormal))?;
    let q = Tensor3::from_fn((r, n2, n3), |_, _, _| rng.sample(StandardNormal))?;
    t_product(&p, &q)
}

/// Rescales `t` so its largest magnitude equals `peak`, putting synthetic data
/// on the same footing as 8-bit pixel data. A zero tensor is returned as is.
pub fn scale_to_peak(t: &Tensor3, peak: f64) -> Result<Tensor3> {
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::Argument(format!(
            "peak {peak} must be positive and finite"
        )));
    }
    let m = t.linf();
    if m == 0.0 {
        return Ok(t.clone());
    }
    Ok(t * (peak / m))
}

/// Mean squared error over the missing entries.
pub fn mse(rec: &Tensor3, truth: &Tensor3, mask: &ObservationMask) -> Result<f64> {
    rec.check_same_dims(truth)?;
    mask.check_dims(rec)?;
    let missing = mask.count_missing();
    if missing == 0 {
        return Err(Error::Argument(
            "no missing entries, error metric undefined".into(),
        ));
    }
    let sum = rec
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .zip(mask.flags())
        .filter(|(_, &o)| !o)
        .fold(0.0, |acc, ((a, b), _)| acc + (a - b) * (a - b));
    Ok(sum / missing as f64)
}

/// PSNR in dB against an explicit peak; `+∞` for a perfect recovery.
pub fn psnr_with_peak(
    rec: &Tensor3,
    truth: &Tensor3,
    mask: &ObservationMask,
    peak: f64,
) -> Result<f64> {
    let e = mse(rec, truth, mask)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / e).log10())
}

/// PSNR in dB with the 8-bit peak of 255.
pub fn psnr(rec: &Tensor3, truth: &Tensor3, mask: &ObservationMask) -> Result<f64> {
    psnr_with_peak(rec, truth, mask, PIXEL_PEAK)
}

/// `‖rec − truth‖_F / ‖truth‖_F` over the whole tensor.
pub fn relative_error(rec: &Tensor3, truth: &Tensor3) -> Result<f64> {
    let norm = truth.frobenius();
    let d = rec.distance(truth)?;
    Ok(if norm > 0.0 { d / norm } else { d })
}
