//! Discrete Fourier transform along the third (tube) dimension.
//!
//! Forward transforms are unnormalized, `X̄[i,j,k] = Σ_t X[i,j,t]·e^{-2πi·t·k/n3}`,
//! and the inverse is scaled by `1/n3`. For a real tensor the frequency slices
//! satisfy `X̄(k) = conj(X̄(n3 − k))`, so only slices `0..=n3/2` are independent.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::tensor::{check_dense_size, MatrixBlock, Tensor3};

/// Complex `n1 × n2 × n3` array holding frequency-domain frontal slices.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTensor {
    dims: (usize, usize, usize),
    data: Vec<Complex64>,
}

/// Number of frequency slices that determine a real tensor's spectrum.
pub fn independent_slices(n3: usize) -> usize {
    n3 / 2 + 1
}

/// True for the frequency slices of a real signal that are themselves real
/// (the DC slice and, for even `n3`, the Nyquist slice).
pub fn is_self_conjugate(k: usize, n3: usize) -> bool {
    k == 0 || 2 * k == n3
}

impl FourierTensor {
    pub fn new(dims: (usize, usize, usize), data: Vec<Complex64>) -> Result<Self> {
        let (n1, n2, n3) = dims;
        if n1 == 0 || n2 == 0 || n3 == 0 || data.len() != n1 * n2 * n3 {
            return Err(Error::Shape(format!(
                "{} complex values for dims {dims:?}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// Builds a full spectrum from its independent slices `0..=n3/2`, filling
    /// the remaining slices with the conjugates of their mirror partners.
    pub fn from_half_spectrum(n3: usize, half: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if half.len() != independent_slices(n3) {
            return Err(Error::Shape(format!(
                "{} half-spectrum slices for n3 = {n3}, expected {}",
                half.len(),
                independent_slices(n3)
            )));
        }
        let (n1, n2) = half[0].shape();
        let mut data = Vec::with_capacity(n1 * n2 * n3);
        for k in 0..n3 {
            let src = if k < half.len() {
                &half[k]
            } else {
                &half[n3 - k]
            };
            if src.shape() != (n1, n2) {
                return Err(Error::Shape(format!(
                    "half-spectrum slice shapes differ at {k}"
                )));
            }
            if k < half.len() {
                data.extend_from_slice(src.as_slice());
            } else {
                data.extend(src.iter().map(|z| z.conj()));
            }
        }
        Self::new((n1, n2, n3), data)
    }

    /// Builds a spectrum from all `n3` frequency slices.
    pub fn from_slices(slices: &[DMatrix<Complex64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Shape("no frequency slices given".into()))?;
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for s in slices {
            if s.shape() != (n1, n2) {
                return Err(Error::Shape("frequency slice shapes differ".into()));
            }
            data.extend_from_slice(s.as_slice());
        }
        Self::new((n1, n2, slices.len()), data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        let (n1, n2, _) = self.dims;
        self.data[i + n1 * (j + n2 * k)]
    }

    /// Frequency slice `k` (0-based) as a complex matrix.
    pub fn slice(&self, k: usize) -> Result<MatrixBlock<Complex64>> {
        let (n1, n2, n3) = self.dims;
        if k >= n3 {
            return Err(Error::Range(format!("frequency slice {k} with n3 = {n3}")));
        }
        let step = n1 * n2;
        Ok(DMatrix::from_column_slice(
            n1,
            n2,
            &self.data[k * step..(k + 1) * step],
        ))
    }

    pub fn frobenius(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0, |acc, z| acc + z.norm_sqr())
            .sqrt()
    }
}

/// Transforms every tube `t(i, j, :)` in place, forward or inverse.
fn transform_tubes(dims: (usize, usize, usize), data: &mut [Complex64], inverse: bool) {
    let (n1, n2, n3) = dims;
    if n3 == 1 {
        return;
    }
    let step = n1 * n2;
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n3)
    } else {
        planner.plan_fft_forward(n3)
    };
    // Gather tubes contiguously so one batched call covers them all.
    let mut tubes = vec![Complex64::new(0.0, 0.0); step * n3];
    for p in 0..step {
        for k in 0..n3 {
            tubes[p * n3 + k] = data[k * step + p];
        }
    }
    fft.process(&mut tubes);
    for p in 0..step {
        for k in 0..n3 {
            data[k * step + p] = tubes[p * n3 + k];
        }
    }
}

/// Unnormalized DFT of every tube along the third dimension.
pub fn fft_dim3(t: &Tensor3) -> FourierTensor {
    let dims = t.dims();
    let mut data: Vec<Complex64> = t
        .as_slice()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    transform_tubes(dims, &mut data, false);
    FourierTensor { dims, data }
}

/// Tolerance on the imaginary residue accepted by [`ifft_dim3`].
pub fn imaginary_tolerance(f: &FourierTensor) -> f64 {
    1e-8 * (1.0 + f.frobenius())
}

/// Inverse DFT along the third dimension, scaled by `1/n3`.
///
/// Fails with [`Error::NumericalConsistency`] when the result carries an
/// imaginary part larger than `1e-8·(1 + ‖f‖_F)`.
pub fn ifft_dim3(f: &FourierTensor) -> Result<Tensor3> {
    let dims = f.dims;
    let mut data = f.data.clone();
    transform_tubes(dims, &mut data, true);
    let scale = 1.0 / dims.2 as f64;
    let residue = data.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs())) * scale;
    let tolerance = imaginary_tolerance(f);
    if residue > tolerance {
        return Err(Error::NumericalConsistency { residue, tolerance });
    }
    Tensor3::new(dims, data.iter().map(|z| z.re * scale).collect())
}

/// Frequency slice 0 computed as the plain sum of all frontal slices.
pub fn first_fourier_slice(t: &Tensor3) -> MatrixBlock {
    let (n1, n2, n3) = t.dims();
    let mut acc = DMatrix::from_column_slice(n1, n2, t.slice_data(0));
    for k in 1..n3 {
        for (a, &v) in acc.iter_mut().zip(t.slice_data(k)) {
            *a += v;
        }
    }
    acc
}

/// Block-diagonal matrix with the frequency slices on its diagonal.
pub fn bdiag(f: &FourierTensor) -> Result<MatrixBlock<Complex64>> {
    let (n1, n2, n3) = f.dims;
    check_dense_size(n1 * n3, n2 * n3, "bdiag")?;
    let mut out = DMatrix::zeros(n1 * n3, n2 * n3);
    for k in 0..n3 {
        out.view_mut((k * n1, k * n2), (n1, n2))
            .copy_from(&f.slice(k)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random(dims: (usize, usize, usize), seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    /// Direct O(n3²) DFT summation.
    fn naive_dft(t: &Tensor3) -> Vec<Complex64> {
        let (n1, n2, n3) = t.dims();
        let mut out = vec![Complex64::new(0.0, 0.0); n1 * n2 * n3];
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for s in 0..n3 {
                        let angle = -2.0 * PI * (s * k) as f64 / n3 as f64;
                        acc += t.get(i, j, s) * Complex64::new(angle.cos(), angle.sin());
                    }
                    out[i + n1 * (j + n2 * k)] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn length_one_transform_is_identity() {
        let t = random((3, 2, 1), 1);
        let f = fft_dim3(&t);
        for (z, &v) in f.as_slice().iter().zip(t.as_slice()) {
            assert_eq!(*z, Complex64::new(v, 0.0));
        }
    }

    #[test]
    fn two_point_dft() {
        let t = Tensor3::new((1, 1, 2), vec![2.0, 5.0]).unwrap();
        let f = fft_dim3(&t);
        assert_eq!(f.get(0, 0, 0), Complex64::new(7.0, 0.0));
        assert_eq!(f.get(0, 0, 1), Complex64::new(-3.0, 0.0));
    }

    #[test]
    fn matches_naive_dft() {
        for (dims, seed) in [((3, 3, 4), 2), ((2, 5, 7), 3), ((4, 1, 6), 4)] {
            let t = random(dims, seed);
            let f = fft_dim3(&t);
            let oracle = naive_dft(&t);
            let diff = f
                .as_slice()
                .iter()
                .zip(&oracle)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
            assert!(diff <= 1e-10, "{dims:?}: {diff}");
        }
    }

    #[test]
    fn round_trip() {
        for (dims, seed) in [((5, 4, 6), 5), ((16, 16, 16), 6), ((1, 1, 1), 7)] {
            let t = random(dims, seed);
            let back = ifft_dim3(&fft_dim3(&t)).unwrap();
            let diff = t
                .as_slice()
                .iter()
                .zip(back.as_slice())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff <= 1e-10);
        }
    }

    #[test]
    fn constant_tube_is_dc_only() {
        let c = 1.75;
        let t = Tensor3::new((1, 1, 5), vec![c; 5]).unwrap();
        let f = fft_dim3(&t);
        assert!((f.get(0, 0, 0) - Complex64::new(5.0 * c, 0.0)).norm() < 1e-14);
        for k in 1..5 {
            assert!(f.get(0, 0, k).norm() < 1e-14);
        }
        let back = ifft_dim3(&f).unwrap();
        assert!(back.as_slice().iter().all(|v| (v - c).abs() < 1e-14));
    }

    #[test]
    fn broken_symmetry_is_rejected() {
        let data = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 3.0),
            Complex64::new(0.0, 3.0),
        ];
        let f = FourierTensor::new((1, 1, 3), data).unwrap();
        assert!(matches!(
            ifft_dim3(&f),
            Err(Error::NumericalConsistency { .. })
        ));
    }

    #[test]
    fn conjugate_symmetry_of_real_input() {
        for n3 in 1..8 {
            let t = random((3, 2, n3), 10 + n3 as u64);
            let f = fft_dim3(&t);
            let tol = 1e-9 * t.frobenius();
            for v in f.slice(0).unwrap().iter() {
                assert!(v.im.abs() <= tol);
            }
            for k in 1..n3 {
                let a = f.slice(k).unwrap();
                let b = f.slice(n3 - k).unwrap();
                assert!((a - b.map(|z| z.conj())).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn half_spectrum_mirrors() {
        let t = random((2, 3, 6), 20);
        let f = fft_dim3(&t);
        let half: Vec<_> = (0..independent_slices(6))
            .map(|k| f.slice(k).unwrap())
            .collect();
        let g = FourierTensor::from_half_spectrum(6, half).unwrap();
        let diff = f
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(diff <= 1e-12);
        assert!(is_self_conjugate(3, 6) && !is_self_conjugate(3, 7));
    }

    #[test]
    fn first_slice_is_the_slice_sum() {
        let t = Tensor3::new((1, 1, 3), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(first_fourier_slice(&t)[(0, 0)], 6.0);

        let mut id = vec![0.0; 3 * 3 * 4];
        for i in 0..3 {
            id[i + 3 * i] = 1.0;
        }
        let id = Tensor3::new((3, 3, 4), id).unwrap();
        assert_eq!(first_fourier_slice(&id), DMatrix::identity(3, 3));

        let t = random((4, 3, 5), 30);
        let sum = t.frontal_slices().into_iter().reduce(|a, b| a + b).unwrap();
        assert_eq!(first_fourier_slice(&t), sum);
        let f0 = fft_dim3(&t).slice(0).unwrap();
        assert!((f0.map(|z| z.re) - &sum).amax() <= 1e-10);
    }

    #[test]
    fn bdiag_structure() {
        let t = random((2, 3, 1), 40);
        let f = fft_dim3(&t);
        assert_eq!(bdiag(&f).unwrap(), f.slice(0).unwrap());

        let t = random((2, 3, 4), 41);
        let f = fft_dim3(&t);
        let bd = bdiag(&f).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                let block = bd.view((p * 2, q * 3), (2, 3));
                if p == q {
                    assert_eq!(block, f.slice(p).unwrap());
                } else {
                    assert!(block.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
                }
            }
        }
    }

    #[test]
    fn block_circulant_diagonalization() {
        // (F ⊗ I_n1) · bcirc(T) · (F^{-1} ⊗ I_n2) = bdiag(T̄), with F^{-1} = Fᴴ / n3.
        let (n1, n2, n3) = (2, 2, 3);
        let t = random((n1, n2, n3), 50);
        let dft = DMatrix::from_fn(n3, n3, |p, q| {
            let angle = -2.0 * PI * (p * q) as f64 / n3 as f64;
            Complex64::new(angle.cos(), angle.sin())
        });
        let left = dft.kronecker(&DMatrix::<Complex64>::identity(n1, n1));
        let right = dft
            .adjoint()
            .kronecker(&DMatrix::<Complex64>::identity(n2, n2))
            / Complex64::new(n3 as f64, 0.0);
        let bc = t.bcirc().unwrap().map(|v| Complex64::new(v, 0.0));
        let lhs = left * bc * right;
        let rhs = bdiag(&fft_dim3(&t)).unwrap();
        assert!((lhs - rhs).iter().all(|z| z.norm() <= 1e-9));
    }
}
