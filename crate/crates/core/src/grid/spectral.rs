use rustfft::num_complex::Complex;

use super::{Fft3, GridSpec, ScalarField, VectorField};
use crate::error::Result;
use crate::scalar::Real;

/// Half-spectrum coefficients of a real scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    pub(crate) grid: GridSpec<T>,
    pub(crate) data: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.data
    }
}

/// Half-spectrum coefficients of a real vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector<T> {
    pub(crate) grid: GridSpec<T>,
    pub(crate) comps: [Vec<Complex<T>>; 3],
}

impl<T: Real> SpectralVector<T> {
    pub fn zeros(grid: GridSpec<T>) -> Self {
        let len = (grid.n() / 2 + 1) * grid.n() * grid.n();
        let z = vec![Complex::new(T::zero(), T::zero()); len];
        Self { grid, comps: [z.clone(), z.clone(), z] }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex<T>] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        &mut self.comps[c]
    }

    /// `self + a * other`, componentwise.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        let mut out = self.clone();
        for c in 0..3 {
            for (x, y) in out.comps[c].iter_mut().zip(&other.comps[c]) {
                *x = *x + *y * a;
            }
        }
        out
    }

    pub fn scale_by(&mut self, factors: &[T]) {
        for comp in self.comps.iter_mut() {
            for (x, f) in comp.iter_mut().zip(factors) {
                *x = *x * *f;
            }
        }
    }
}

/// Spectral operator set for one grid: transforms, wavenumbers, derivatives.
///
/// Derivatives use wavenumbers with the Nyquist mode zeroed so the result of
/// differentiating a real field stays real. The Laplacian symbol uses the
/// full `|k|^2`.
#[derive(Clone)]
pub struct SpectralOps<T: Real> {
    grid: GridSpec<T>,
    fft: Fft3<T>,
    modes: Vec<i64>,
    k_deriv: Vec<T>,
    k_full: Vec<T>,
}

impl<T: Real> SpectralOps<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let n = grid.n();
        let scale = T::TAU() / grid.box_length();
        let modes: Vec<i64> = (0..n)
            .map(|j| if j < n / 2 { j as i64 } else { j as i64 - n as i64 })
            .collect();
        let k_full: Vec<T> = modes.iter().map(|&m| T::lit(m as f64) * scale).collect();
        let k_deriv = modes
            .iter()
            .zip(&k_full)
            .map(|(&m, &k)| if m.unsigned_abs() as usize == n / 2 { T::zero() } else { k })
            .collect();
        Self { grid, fft: Fft3::new(n), modes, k_deriv, k_full }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    #[inline]
    pub fn fft(&self) -> &Fft3<T> {
        &self.fft
    }

    #[inline]
    pub fn spectral_len(&self) -> usize {
        self.fft.spectral_len()
    }

    /// Axis indices `[kx, ky, kz]` of a half-spectrum index.
    #[inline]
    pub fn unravel(&self, s: usize) -> [usize; 3] {
        let n = self.grid.n();
        let nh = n / 2 + 1;
        [s % nh, (s / nh) % n, s / (nh * n)]
    }

    /// Signed integer modes of a half-spectrum index.
    #[inline]
    pub fn modes(&self, s: usize) -> [i64; 3] {
        let [a, b, c] = self.unravel(s);
        // kx index never exceeds n/2; report it as non-negative.
        [a as i64, self.modes[b], self.modes[c]]
    }

    /// Derivative wavevector (Nyquist components zeroed).
    #[inline]
    pub fn k_deriv(&self, s: usize) -> [T; 3] {
        let [a, b, c] = self.unravel(s);
        [self.k_deriv[a], self.k_deriv[b], self.k_deriv[c]]
    }

    /// Full `|k|^2` for the Laplacian symbol.
    #[inline]
    pub fn k_sq(&self, s: usize) -> T {
        let [a, b, c] = self.unravel(s);
        let (x, y, z) = (self.k_full[a], self.k_full[b], self.k_full[c]);
        x * x + y * y + z * z
    }

    /// Multiplicity of a half-spectrum coefficient in the full spectrum (1 or 2).
    #[inline]
    pub fn weight(&self, s: usize) -> T {
        let kx = s % (self.grid.n() / 2 + 1);
        if kx == 0 || kx == self.grid.n() / 2 {
            T::one()
        } else {
            T::lit(2.0)
        }
    }

    pub fn forward_scalar(&self, s: &ScalarField<T>) -> SpectralField<T> {
        SpectralField { grid: self.grid, data: self.fft.forward(s.values()) }
    }

    pub fn inverse_scalar(&self, s: &SpectralField<T>) -> ScalarField<T> {
        ScalarField { grid: self.grid, values: self.fft.inverse(&s.data) }
    }

    pub fn forward(&self, f: &VectorField<T>) -> SpectralVector<T> {
        SpectralVector {
            grid: self.grid,
            comps: [
                self.fft.forward(f.component(0)),
                self.fft.forward(f.component(1)),
                self.fft.forward(f.component(2)),
            ],
        }
    }

    pub fn inverse(&self, f: &SpectralVector<T>) -> VectorField<T> {
        VectorField {
            grid: self.grid,
            comps: [
                self.fft.inverse(&f.comps[0]),
                self.fft.inverse(&f.comps[1]),
                self.fft.inverse(&f.comps[2]),
            ],
        }
    }

    /// `i k × f`.
    pub fn curl_hat(&self, f: &SpectralVector<T>) -> SpectralVector<T> {
        let mut out = SpectralVector::zeros(self.grid);
        let i = Complex::new(T::zero(), T::one());
        for s in 0..self.spectral_len() {
            let k = self.k_deriv(s);
            let (a, b, c) = (f.comps[0][s], f.comps[1][s], f.comps[2][s]);
            out.comps[0][s] = i * (b * (-k[2]) + c * k[1]);
            out.comps[1][s] = i * (c * (-k[0]) + a * k[2]);
            out.comps[2][s] = i * (a * (-k[1]) + b * k[0]);
        }
        out
    }

    /// `i k · f`.
    pub fn div_hat(&self, f: &SpectralVector<T>) -> SpectralField<T> {
        let i = Complex::new(T::zero(), T::one());
        let data = (0..self.spectral_len())
            .map(|s| {
                let k = self.k_deriv(s);
                i * (f.comps[0][s] * k[0] + f.comps[1][s] * k[1] + f.comps[2][s] * k[2])
            })
            .collect();
        SpectralField { grid: self.grid, data }
    }

    /// `i k_axis f`.
    pub fn derivative_hat(&self, f: &[Complex<T>], axis: usize) -> Vec<Complex<T>> {
        let i = Complex::new(T::zero(), T::one());
        f.iter()
            .enumerate()
            .map(|(s, &c)| i * c * self.k_deriv(s)[axis])
            .collect()
    }

    pub fn grad_hat(&self, f: &SpectralField<T>) -> SpectralVector<T> {
        SpectralVector {
            grid: self.grid,
            comps: [
                self.derivative_hat(&f.data, 0),
                self.derivative_hat(&f.data, 1),
                self.derivative_hat(&f.data, 2),
            ],
        }
    }

    /// In-place Leray projection `f - k (k·f)/|k|^2`; the mean mode is untouched.
    pub fn project_hat(&self, f: &mut SpectralVector<T>) {
        for s in 0..self.spectral_len() {
            let k = self.k_deriv(s);
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == T::zero() {
                continue;
            }
            let kf = (f.comps[0][s] * k[0] + f.comps[1][s] * k[1] + f.comps[2][s] * k[2]) / kk;
            for c in 0..3 {
                f.comps[c][s] = f.comps[c][s] - kf * k[c];
            }
        }
    }

    /// Makes the self-conjugate planes (kx = 0 and kx = n/2) Hermitian.
    pub fn enforce_hermitian(&self, data: &mut [Complex<T>]) {
        let n = self.grid.n();
        let nh = n / 2 + 1;
        let half = T::lit(0.5);
        for kx in [0, n / 2] {
            for kz in 0..n {
                for ky in 0..n {
                    let s = kx + nh * (ky + n * kz);
                    let cy = (n - ky) % n;
                    let cz = (n - kz) % n;
                    let t = kx + nh * (cy + n * cz);
                    if t < s {
                        continue;
                    }
                    let avg = (data[s] + data[t].conj()) * half;
                    data[s] = avg;
                    data[t] = avg.conj();
                }
            }
        }
    }

    pub fn enforce_hermitian_vec(&self, f: &mut SpectralVector<T>) {
        for c in 0..3 {
            self.enforce_hermitian(&mut f.comps[c]);
        }
    }

    /// Parseval sum: equals `(1/V) ∫ |f|^2` for the represented real field.
    pub fn mean_square(&self, data: &[Complex<T>]) -> T {
        data.iter()
            .enumerate()
            .map(|(s, c)| self.weight(s) * c.norm_sqr())
            .sum()
    }

    pub fn mean_square_vec(&self, f: &SpectralVector<T>) -> T {
        (0..3).map(|c| self.mean_square(&f.comps[c])).sum()
    }

    /// Mask keeping modes with every `|m_i| < fraction * n / 2`.
    pub fn dealias_mask(&self, fraction: T) -> Vec<T> {
        let cut = fraction * T::from_usize_lossy(self.grid.n() / 2);
        (0..self.spectral_len())
            .map(|s| {
                let keep = self
                    .modes(s)
                    .iter()
                    .all(|&m| T::lit(m.unsigned_abs() as f64) < cut);
                if keep {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect()
    }

    pub fn curl(&self, f: &VectorField<T>) -> VectorField<T> {
        self.inverse(&self.curl_hat(&self.forward(f)))
    }

    pub fn divergence(&self, f: &VectorField<T>) -> ScalarField<T> {
        let d = self.div_hat(&self.forward(f));
        self.inverse_scalar(&d)
    }

    pub fn gradient(&self, s: &ScalarField<T>) -> VectorField<T> {
        self.inverse(&self.grad_hat(&self.forward_scalar(s)))
    }

    pub fn leray_project(&self, f: &VectorField<T>) -> VectorField<T> {
        let mut h = self.forward(f);
        self.project_hat(&mut h);
        self.inverse(&h)
    }

    /// Velocity-gradient tensor `g[i][j] = ∂_j f_i` in physical space.
    pub fn gradient_tensor_hat(&self, f: &SpectralVector<T>) -> [[Vec<T>; 3]; 3] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| self.fft.inverse(&self.derivative_hat(&f.comps[i], j)))
        })
    }

    pub fn gradient_tensor(&self, f: &VectorField<T>) -> [[Vec<T>; 3]; 3] {
        self.gradient_tensor_hat(&self.forward(f))
    }

    /// Checks that a field lives on this operator's grid.
    pub fn check(&self, g: &GridSpec<T>) -> Result<()> {
        self.grid.check_same(g)
    }
}
