//! Periodic uniform grids, fields on them, and spectral differential operators.
//!
//! Grid points sit at `x = (i - n/2) h` for `i in 0..n` along each axis, so the
//! origin is a grid node and the box is `[-L/2, L/2)^3`. Arrays are stored with
//! the x index fastest: `idx = i + n * (j + n * k)`.

mod fft;
mod spectral;

pub use fft::Fft3;
pub use spectral::{SpectralField, SpectralOps, SpectralVector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    n: usize,
    box_length: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(n_per_axis: usize, box_length: T) -> Result<Self> {
        if n_per_axis < 8 || n_per_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_per_axis must be even and >= 8, got {n_per_axis}"
            )));
        }
        if !(box_length > T::zero()) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!("box_length must be > 0, got {box_length}")));
        }
        Ok(Self { n: n_per_axis, box_length })
    }

    /// Grid on the standard `2π` box.
    pub fn periodic_2pi(n_per_axis: usize) -> Result<Self> {
        Self::new(n_per_axis, T::TAU())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_length(&self) -> T {
        self.box_length
    }

    #[inline]
    pub fn spacing(&self) -> T {
        self.box_length / T::from_usize_lossy(self.n)
    }

    #[inline]
    pub fn cell_volume(&self) -> T {
        let h = self.spacing();
        h * h * h
    }

    #[inline]
    pub fn volume(&self) -> T {
        self.box_length * self.box_length * self.box_length
    }

    /// Number of grid points, `n^3`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    /// Physical coordinate of node `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> T {
        (T::from_usize_lossy(i) - T::from_usize_lossy(self.n / 2)) * self.spacing()
    }

    #[inline]
    pub fn position(&self, idx: usize) -> Vec3<T> {
        let [i, j, k] = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Index range of nodes whose coordinate lies in `[lo, hi]` (clamped to the box).
    pub fn node_range(&self, lo: T, hi: T) -> std::ops::RangeInclusive<usize> {
        let h = self.spacing();
        let half = T::from_usize_lossy(self.n / 2);
        let to_idx = |x: T| x / h + half;
        let a = to_idx(lo).ceil().max(T::zero()).to_usize().unwrap_or(0);
        let b = to_idx(hi)
            .floor()
            .min(T::from_usize_lossy(self.n - 1))
            .to_usize()
            .unwrap_or(0);
        a..=b
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.box_length != other.box_length {
            return Err(Error::GridMismatch(format!(
                "n {} / L {} vs n {} / L {}",
                self.n, self.box_length, other.n, other.box_length
            )));
        }
        Ok(())
    }
}

/// Real scalar field sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "scalar array has {} entries, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { grid, values: vec![T::zero(); grid.len()] }
    }

    pub fn constant(grid: GridSpec<T>, c: T) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(Vec3<T>) -> T) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule integral over the box.
    pub fn integrate(&self) -> T {
        integrate(self)
    }
}

/// Equal-weight quadrature: `sum(values) * h^3`.
pub fn integrate<T: Real>(s: &ScalarField<T>) -> T {
    s.values.iter().copied().sum::<T>() * s.grid.cell_volume()
}

/// Real three-component field sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    grid: GridSpec<T>,
    comps: [Vec<T>; 3],
}

impl<T: Real> VectorField<T> {
    pub fn new(grid: GridSpec<T>, comps: [Vec<T>; 3]) -> Result<Self> {
        for (c, v) in comps.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "component {c} has {} entries, grid needs {}",
                    v.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        let z = vec![T::zero(); grid.len()];
        Self { grid, comps: [z.clone(), z.clone(), z] }
    }

    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.position(idx));
            for c in 0..3 {
                out.comps[c][idx] = v[c];
            }
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[T] {
        &self.comps[c]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.comps[c]
    }

    #[inline]
    pub fn components(&self) -> &[Vec<T>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<T>; 3] {
        self.comps
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Vec3<T> {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.comps.iter_mut().flatten().for_each(|v| *v = *v * a);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let mut out = self.clone();
        for c in 0..3 {
            for (a, b) in out.comps[c].iter_mut().zip(&other.comps[c]) {
                *a = *a + *b;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-T::one()))
    }

    /// Pointwise `|f|^2`.
    pub fn norm_sq(&self) -> ScalarField<T> {
        let values = (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
            })
            .collect();
        ScalarField { grid: self.grid, values }
    }

    /// Pointwise inner product with another field.
    pub fn dot(&self, other: &Self) -> Result<ScalarField<T>> {
        self.grid.check_same(&other.grid)?;
        let values = (0..self.grid.len())
            .map(|i| (0..3).map(|c| self.comps[c][i] * other.comps[c][i]).sum())
            .collect();
        Ok(ScalarField { grid: self.grid, values })
    }

    /// Largest pointwise magnitude.
    pub fn max_norm(&self) -> T {
        (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.comps.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `∫ |f|^2` by the grid quadrature.
    pub fn l2_norm_sq(&self) -> T {
        integrate(&self.norm_sq())
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }
}

/// Spectral curl of a physical field.
pub fn curl<T: Real>(f: &VectorField<T>) -> VectorField<T> {
    SpectralOps::new(*f.grid()).curl(f)
}

/// Spectral divergence of a physical field.
pub fn divergence<T: Real>(f: &VectorField<T>) -> ScalarField<T> {
    SpectralOps::new(*f.grid()).divergence(f)
}

/// Divergence-free part of `f` (mean mode kept).
pub fn leray_project<T: Real>(f: &VectorField<T>) -> VectorField<T> {
    SpectralOps::new(*f.grid()).leray_project(f)
}

/// Spectral gradient of a smooth periodic scalar.
pub fn gradient<T: Real>(s: &ScalarField<T>) -> VectorField<T> {
    SpectralOps::new(*s.grid()).gradient(s)
}
