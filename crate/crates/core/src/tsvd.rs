//! t-product algebra, the t-SVD and the norms and thresholding built on it.
//!
//! Everything here works slice-wise in the Fourier domain: a t-product is a
//! matrix product per frequency slice, the t-SVD is a matrix SVD per frequency
//! slice. Only the independent slices `0..=n3/2` are computed; the rest are
//! filled in by conjugation so the inverse transform stays real.

use nalgebra::{ComplexField, DMatrix, SVD};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{
    fft_dim3, first_fourier_slice, ifft_dim3, independent_slices, is_self_conjugate, FourierTensor,
};
use crate::tensor::{MatrixBlock, Tensor3};

const SVD_EPS: f64 = f64::EPSILON;
const SVD_MAX_ITER: usize = 10_000;

/// Default relative threshold used by [`tubal_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

type CMatrix = DMatrix<Complex64>;

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

/// Thin SVD of one frequency slice: `m = u · diag(sigma) · vᴴ`, sigma descending.
struct SliceSvd {
    u: CMatrix,
    sigma: Vec<f64>,
    v: CMatrix,
}

fn svd_slice(m: &CMatrix, slice: usize, real: bool, vectors: bool) -> Result<SliceSvd> {
    if real {
        let svd = SVD::try_new(real_part(m), vectors, vectors, SVD_EPS, SVD_MAX_ITER)
            .ok_or(Error::SvdFailure { slice })?;
        let sigma = svd.singular_values.iter().copied().collect();
        let (u, v) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (to_complex(&u), to_complex(&v_t.transpose())),
            _ => (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)),
        };
        Ok(SliceSvd { u, sigma, v })
    } else {
        let svd = SVD::try_new(m.clone(), vectors, vectors, SVD_EPS, SVD_MAX_ITER)
            .ok_or(Error::SvdFailure { slice })?;
        let sigma = svd.singular_values.iter().copied().collect();
        let (u, v) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t.adjoint()),
            _ => (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)),
        };
        Ok(SliceSvd { u, sigma, v })
    }
}

/// Extends orthonormal columns to a full unitary basis.
fn complete_basis<T: ComplexField>(thin: DMatrix<T>) -> DMatrix<T> {
    let (n, k) = thin.shape();
    if k == n {
        return thin;
    }
    let mut aug = DMatrix::<T>::identity(n, k + n);
    aug.columns_mut(0, k).copy_from(&thin);
    let mut full = aug.qr().q();
    full.columns_mut(0, k).copy_from(&thin);
    full
}

fn fourier_half(x: &Tensor3) -> Vec<CMatrix> {
    let f = fft_dim3(x);
    let n3 = x.dims().2;
    (0..independent_slices(n3))
        .map(|k| {
            let s = f.slice(k).expect("slice index below n3");
            if is_self_conjugate(k, n3) {
                s.map(|z| Complex64::new(z.re, 0.0))
            } else {
                s
            }
        })
        .collect()
}

/// Tensor-tensor product: `(n1 × n2 × n3) * (n2 × n4 × n3) → n1 × n4 × n3`,
/// evaluated as one matrix product per frequency slice.
pub fn t_product(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n3) = a.dims();
    let (m2, _, m3) = b.dims();
    if n2 != m2 || n3 != m3 {
        return Err(Error::Shape(format!(
            "t-product of {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let fa = fourier_half(a);
    let fb = fourier_half(b);
    let half: Vec<CMatrix> = fa
        .iter()
        .zip(&fb)
        .enumerate()
        .map(|(k, (x, y))| {
            if is_self_conjugate(k, n3) {
                to_complex(&(real_part(x) * real_part(y)))
            } else {
                x * y
            }
        })
        .collect();
    debug_assert_eq!(half[0].nrows(), n1);
    ifft_dim3(&FourierTensor::from_half_spectrum(n3, half)?)
}

/// Literal t-product `fold(bcirc(a) · unfold(b))`. Quadratic in `n3`; kept as
/// the reference the fast path is checked against.
pub fn t_product_reference(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n3) = a.dims();
    let (m2, n4, m3) = b.dims();
    if n2 != m2 || n3 != m3 {
        return Err(Error::Shape(format!(
            "t-product of {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Tensor3::fold(&(a.bcirc()? * b.unfold()), (n1, n4, n3))
}

/// Transposes every frontal slice and reverses the order of slices `1..n3`.
pub fn conj_transpose(a: &Tensor3) -> Tensor3 {
    let (n1, n2, n3) = a.dims();
    Tensor3::from_fn((n2, n1, n3), |i, j, k| a.get(j, i, (n3 - k) % n3))
        .expect("transpose of a valid tensor is valid")
}

/// `n × n × n3` tensor whose first frontal slice is the identity, others zero.
pub fn identity_tensor(n: usize, n3: usize) -> Result<Tensor3> {
    Tensor3::from_fn(
        (n, n, n3),
        |i, j, k| if k == 0 && i == j { 1.0 } else { 0.0 },
    )
}

/// Checks `q * qᵀ = qᵀ * q = I` in Frobenius norm.
pub fn is_orthogonal(q: &Tensor3, tol: f64) -> Result<bool> {
    let (n1, n2, n3) = q.dims();
    if n1 != n2 {
        return Err(Error::Shape(format!(
            "orthogonality needs square slices, got {n1}x{n2}"
        )));
    }
    let id = identity_tensor(n1, n3)?;
    let qt = conj_transpose(q);
    Ok(t_product(q, &qt)?.distance(&id)? <= tol && t_product(&qt, q)?.distance(&id)? <= tol)
}

/// Factors of `x = u * s * vᵀ`.
#[derive(Clone, Debug)]
pub struct TSvdFactors {
    /// Orthogonal, `n1 × n1 × n3`.
    pub u: Tensor3,
    /// f-diagonal, `n1 × n2 × n3`.
    pub s: Tensor3,
    /// Orthogonal, `n2 × n2 × n3`.
    pub v: Tensor3,
    /// Singular values of every frequency slice, each sorted non-increasing.
    pub spectrum: Vec<Vec<f64>>,
}

impl TSvdFactors {
    pub fn reconstruct(&self) -> Result<Tensor3> {
        t_product(&t_product(&self.u, &self.s)?, &conj_transpose(&self.v))
    }
}

/// t-SVD via one matrix SVD per independent frequency slice.
pub fn t_svd(x: &Tensor3) -> Result<TSvdFactors> {
    let (n1, n2, n3) = x.dims();
    let half = fourier_half(x);
    let parts: Vec<(CMatrix, CMatrix, CMatrix, Vec<f64>)> = half
        .par_iter()
        .enumerate()
        .map(|(k, m)| {
            let real = is_self_conjugate(k, n3);
            let svd = svd_slice(m, k, real, true)?;
            let (u, v) = if real {
                (
                    to_complex(&complete_basis(real_part(&svd.u))),
                    to_complex(&complete_basis(real_part(&svd.v))),
                )
            } else {
                (complete_basis(svd.u), complete_basis(svd.v))
            };
            let mut s = CMatrix::zeros(n1, n2);
            for (j, &sigma) in svd.sigma.iter().enumerate() {
                s[(j, j)] = Complex64::new(sigma, 0.0);
            }
            Ok((u, s, v, svd.sigma))
        })
        .collect::<Result<_>>()?;

    let mut us = Vec::with_capacity(parts.len());
    let mut ss = Vec::with_capacity(parts.len());
    let mut vs = Vec::with_capacity(parts.len());
    let mut half_spectrum = Vec::with_capacity(parts.len());
    for (u, s, v, sigma) in parts {
        us.push(u);
        ss.push(s);
        vs.push(v);
        half_spectrum.push(sigma);
    }
    let spectrum = (0..n3)
        .map(|k| half_spectrum[k.min(n3 - k)].clone())
        .collect();
    Ok(TSvdFactors {
        u: ifft_dim3(&FourierTensor::from_half_spectrum(n3, us)?)?,
        s: ifft_dim3(&FourierTensor::from_half_spectrum(n3, ss)?)?,
        v: ifft_dim3(&FourierTensor::from_half_spectrum(n3, vs)?)?,
        spectrum,
    })
}

/// Singular values of every frequency slice (mirrored slices share values).
pub fn fourier_spectrum(x: &Tensor3) -> Result<Vec<Vec<f64>>> {
    let n3 = x.dims().2;
    let half = fourier_half(x);
    let sv: Vec<Vec<f64>> = half
        .par_iter()
        .enumerate()
        .map(|(k, m)| Ok(svd_slice(m, k, is_self_conjugate(k, n3), false)?.sigma))
        .collect::<Result<_>>()?;
    Ok((0..n3).map(|k| sv[k.min(n3 - k)].clone()).collect())
}

/// Largest per-slice count of singular values above `tol · σ_max`, where
/// `σ_max` is the largest singular value over all frequency slices.
pub fn tubal_rank(x: &Tensor3, tol: f64) -> Result<usize> {
    let spectrum = fourier_spectrum(x)?;
    let sigma_max = spectrum.iter().flatten().fold(0.0f64, |m, &s| m.max(s));
    let cutoff = tol * sigma_max;
    Ok(spectrum
        .iter()
        .map(|sv| sv.iter().filter(|&&s| s > cutoff).count())
        .max()
        .unwrap_or(0))
}

/// Sorted singular values of the first frequency slice (the slice sum).
pub fn first_slice_singular_values(x: &Tensor3) -> Result<Vec<f64>> {
    let svd = SVD::try_new(first_fourier_slice(x), false, false, SVD_EPS, SVD_MAX_ITER)
        .ok_or(Error::SvdFailure { slice: 0 })?;
    Ok(svd.singular_values.iter().copied().collect())
}

fn tail_sum(sigma: &[f64], r: usize) -> f64 {
    sigma.iter().skip(r).fold(0.0, |acc, s| acc + s)
}

/// Tensor nuclear norm: the matrix nuclear norm of the frontal-slice sum,
/// which equals `trace(S)` of the t-SVD.
pub fn tensor_nuclear_norm(x: &Tensor3) -> Result<f64> {
    Ok(tail_sum(&first_slice_singular_values(x)?, 0))
}

/// Sum of the first frequency slice's singular values beyond the largest `r`.
pub fn truncated_nuclear_norm(x: &Tensor3, r: usize) -> Result<f64> {
    let (n1, n2, _) = x.dims();
    if r > n1.min(n2) {
        return Err(Error::Argument(format!(
            "truncation rank {r} exceeds min({n1}, {n2})"
        )));
    }
    Ok(tail_sum(&first_slice_singular_values(x)?, r))
}

/// Nuclear norm of each frequency slice. Their sum is the penalty whose
/// proximal map (under the frequency-domain Frobenius metric) is [`svt`].
pub fn fourier_slice_nuclear_norms(x: &Tensor3) -> Result<Vec<f64>> {
    Ok(fourier_spectrum(x)?
        .iter()
        .map(|sv| tail_sum(sv, 0))
        .collect())
}

fn threshold_slice(m: &CMatrix, k: usize, real: bool, tau: f64) -> Result<CMatrix> {
    let svd = svd_slice(m, k, real, true)?;
    let kept = svd.sigma.iter().take_while(|&&s| s > tau).count();
    if kept == 0 {
        return Ok(CMatrix::zeros(m.nrows(), m.ncols()));
    }
    let mut left = svd.u.columns(0, kept).into_owned();
    for (j, mut col) in left.column_iter_mut().enumerate() {
        col *= Complex64::new(svd.sigma[j] - tau, 0.0);
    }
    let right = svd.v.columns(0, kept).adjoint();
    let out = left * right;
    Ok(if real {
        out.map(|z| Complex64::new(z.re, 0.0))
    } else {
        out
    })
}

/// Singular value thresholding: soft-thresholds the singular values of every
/// frequency slice by `tau` and transforms back.
pub fn svt(x: &Tensor3, tau: f64) -> Result<Tensor3> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Argument(format!(
            "threshold must be non-negative, got {tau}"
        )));
    }
    let n3 = x.dims().2;
    let half = fourier_half(x);
    let out: Vec<CMatrix> = half
        .par_iter()
        .enumerate()
        .map(|(k, m)| threshold_slice(m, k, is_self_conjugate(k, n3), tau))
        .collect::<Result<_>>()?;
    ifft_dim3(&FourierTensor::from_half_spectrum(n3, out)?)
}

/// [`svt`] computed independently on all `n3` frequency slices with complex
/// SVDs and no mirroring. Reference path for tests.
pub fn svt_full_spectrum(x: &Tensor3, tau: f64) -> Result<Tensor3> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Argument(format!(
            "threshold must be non-negative, got {tau}"
        )));
    }
    let f = fft_dim3(x);
    let slices = (0..x.dims().2)
        .map(|k| threshold_slice(&f.slice(k)?, k, false, tau))
        .collect::<Result<Vec<_>>>()?;
    ifft_dim3(&FourierTensor::from_slices(&slices)?)
}

/// The pair `(a, b) = (u(:, 0..r, :)ᵀ, v(:, 0..r, :)ᵀ)` taken from a t-SVD.
#[derive(Clone, Debug)]
pub struct TruncationPair {
    /// `r × n1 × n3`.
    pub a: Tensor3,
    /// `r × n2 × n3`.
    pub b: Tensor3,
    pub r: usize,
}

impl TruncationPair {
    /// `aᵀ * b`, the gradient of the trace term in both inner solvers.
    pub fn gradient(&self) -> Result<Tensor3> {
        t_product(&conj_transpose(&self.a), &self.b)
    }
}

pub fn extract_truncation_pair(f: &TSvdFactors, r: usize) -> Result<TruncationPair> {
    let (n1, n2, _) = f.s.dims();
    if r == 0 || r > n1.min(n2) {
        return Err(Error::Argument(format!(
            "truncation rank {r} outside 1..={}",
            n1.min(n2)
        )));
    }
    Ok(TruncationPair {
        a: conj_transpose(&f.u.lateral_columns(r)?),
        b: conj_transpose(&f.v.lateral_columns(r)?),
        r,
    })
}

/// Matrix helper shared with callers that work on single slices.
pub fn matrix_nuclear_norm(m: &MatrixBlock) -> Result<f64> {
    let svd = SVD::try_new(m.clone(), false, false, SVD_EPS, SVD_MAX_ITER)
        .ok_or(Error::SvdFailure { slice: 0 })?;
    Ok(tail_sum(svd.singular_values.as_slice(), 0))
}
