use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Real-to-complex 3D transform on an `n^3` grid.
///
/// The half spectrum holds `nh = n/2 + 1` x-wavenumbers; index layout is
/// `kx + nh * (ky + n * kz)`. The forward transform is normalized by `1/n^3`
/// so coefficients are Fourier amplitudes: `f(x) = Σ c_k e^{i k·x}`.
pub struct Fft3<T: Real> {
    n: usize,
    r2c: Arc<dyn RealToComplex<T>>,
    c2r: Arc<dyn ComplexToReal<T>>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Clone for Fft3<T> {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            r2c: Arc::clone(&self.r2c),
            c2r: Arc::clone(&self.c2r),
            fwd: Arc::clone(&self.fwd),
            inv: Arc::clone(&self.inv),
        }
    }
}

impl<T: Real> Fft3<T> {
    pub fn new(n: usize) -> Self {
        let mut rp = RealFftPlanner::<T>::new();
        let mut cp = FftPlanner::<T>::new();
        Self {
            n,
            r2c: rp.plan_fft_forward(n),
            c2r: rp.plan_fft_inverse(n),
            fwd: cp.plan_fft_forward(n),
            inv: cp.plan_fft_inverse(n),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_len(&self) -> usize {
        self.n / 2 + 1
    }

    /// Length of the half-spectrum array.
    #[inline]
    pub fn spectral_len(&self) -> usize {
        self.half_len() * self.n * self.n
    }

    pub fn forward(&self, input: &[T]) -> Vec<Complex<T>> {
        let n = self.n;
        let nh = self.half_len();
        assert_eq!(input.len(), n * n * n, "physical array length");
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.spectral_len()];

        let mut line = self.r2c.make_input_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for jk in 0..n * n {
            line.copy_from_slice(&input[jk * n..(jk + 1) * n]);
            // Output length matches nh by construction; errors only on length mismatch.
            self.r2c
                .process_with_scratch(&mut line, &mut out[jk * nh..(jk + 1) * nh], &mut scratch)
                .expect("r2c line length");
        }
        self.complex_pass(&mut out, &self.fwd);

        let norm = T::one() / T::from_usize_lossy(n * n * n);
        out.iter_mut().for_each(|c| *c = *c * norm);
        out
    }

    pub fn inverse(&self, input: &[Complex<T>]) -> Vec<T> {
        let n = self.n;
        let nh = self.half_len();
        assert_eq!(input.len(), self.spectral_len(), "spectral array length");
        let mut work = input.to_vec();
        self.complex_pass(&mut work, &self.inv);

        let mut out = vec![T::zero(); n * n * n];
        let mut line = self.c2r.make_input_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        for jk in 0..n * n {
            line.copy_from_slice(&work[jk * nh..(jk + 1) * nh]);
            // The DC/Nyquist imaginary parts are discarded; realfft reports that
            // as an error but still writes the real transform.
            let _ = self.c2r.process_with_scratch(
                &mut line,
                &mut out[jk * n..(jk + 1) * n],
                &mut scratch,
            );
        }
        out
    }

    /// Complex transforms along y then z of a half-spectrum array.
    fn complex_pass(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let n = self.n;
        let nh = self.half_len();
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];

        // y axis: stride nh, for each (kx, kz)
        for kz in 0..n {
            let base = nh * n * kz;
            for kx in 0..nh {
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = data[base + kx + nh * j];
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for (j, b) in buf.iter().enumerate() {
                    data[base + kx + nh * j] = *b;
                }
            }
        }
        // z axis: stride nh * n, for each (kx, ky)
        let stride = nh * n;
        for off in 0..stride {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = data[off + stride * k];
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for (k, b) in buf.iter().enumerate() {
                data[off + stride * k] = *b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_random() {
        let n = 8;
        let fft = Fft3::<f64>::new(n);
        let data: Vec<f64> = (0..n * n * n).map(|i| ((i * 7919) % 97) as f64 / 97.0 - 0.5).collect();
        let spec = fft.forward(&data);
        let back = fft.inverse(&spec);
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_amplitude() {
        // cos(x) on the 2π box has amplitude 1/2 at kx = ±1
        let n = 8;
        let fft = Fft3::<f64>::new(n);
        let h = std::f64::consts::TAU / n as f64;
        let mut data = vec![0.0; n * n * n];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    data[i + n * (j + n * k)] = (i as f64 * h).cos();
                }
            }
        }
        let spec = fft.forward(&data);
        assert!((spec[1].re - 0.5).abs() < 1e-14);
        assert!(spec[0].norm() < 1e-14);
    }
}
