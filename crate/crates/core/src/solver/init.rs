use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use super::MhdState;
use crate::grid::{GridSpec, SpectralOps, SpectralVector, VectorField};
use crate::scalar::Real;

/// 3D Orszag–Tang extension:
/// `u = a(−2 sin y, 2 sin x, 0)`, `b = 0.8 a(−2 sin 2y + sin z, 2 sin x + sin z, 0)`,
/// with coordinates scaled so one period spans the box.
pub fn init_orszag_tang_3d<T: Real>(grid: GridSpec<T>, amplitude: T) -> MhdState<T> {
    let kappa = T::TAU() / grid.box_length();
    let two = T::lit(2.0);
    let ab = amplitude * T::lit(0.8);
    let u = VectorField::from_fn(grid, |p| {
        let (x, y) = (kappa * p[0], kappa * p[1]);
        [-two * amplitude * y.sin(), two * amplitude * x.sin(), T::zero()]
    });
    let b = VectorField::from_fn(grid, |p| {
        let (x, y, z) = (kappa * p[0], kappa * p[1], kappa * p[2]);
        [
            ab * (-two * (two * y).sin() + z.sin()),
            ab * (two * x.sin() + z.sin()),
            T::zero(),
        ]
    });
    MhdState { u, b, time: T::zero() }
}

/// Highest integer shell whose modes all lie inside the 2/3 dealiasing cube.
pub fn max_resolved_shell(n: usize) -> usize {
    ((n as f64) / 3.0 - 0.5).floor().max(1.0) as usize
}

/// Integer shell index `round(|m|)` of a mode.
pub(crate) fn shell_of(m: [i64; 3]) -> usize {
    let r2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
    r2.sqrt().round() as usize
}

/// Shell spectrum `E(k) = Σ_{round|m| = k} w |f̂|^2 / 2` for `k = 0..=kmax`.
pub fn shell_spectrum<T: Real>(ops: &SpectralOps<T>, f: &SpectralVector<T>, kmax: usize) -> Vec<T> {
    let mut e = vec![T::zero(); kmax + 1];
    for s in 0..ops.spectral_len() {
        let k = shell_of(ops.modes(s));
        if k <= kmax {
            let a: T = (0..3).map(|c| f.component(c)[s].norm_sqr()).sum();
            e[k] = e[k] + ops.weight(s) * a * T::lit(0.5);
        }
    }
    e
}

/// Random-phase solenoidal `u` and `b` with shell spectrum `∝ k^slope` on
/// shells `1..=max_resolved_shell(n)`, each normalized to `<|f|^2> = 1`.
/// `u` and `b` use independent streams derived from `seed`.
pub fn init_random_solenoidal<T: Real>(grid: GridSpec<T>, spectrum_slope: T, seed: u64) -> MhdState<T> {
    let ops = SpectralOps::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_hat = random_field(&ops, spectrum_slope, &mut rng);
    let b_hat = random_field(&ops, spectrum_slope, &mut rng);
    MhdState { u: ops.inverse(&u_hat), b: ops.inverse(&b_hat), time: T::zero() }
}

fn random_field<T: Real>(ops: &SpectralOps<T>, slope: T, rng: &mut ChaCha8Rng) -> SpectralVector<T> {
    let n = ops.grid().n() as i64;
    let kmax = max_resolved_shell(ops.grid().n());
    let mut f = SpectralVector::zeros(*ops.grid());
    for c in 0..3 {
        let comp = f.component_mut(c);
        for (s, z) in comp.iter_mut().enumerate() {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            let m = ops.modes(s);
            let k = shell_of(m);
            let nyq = m.iter().any(|&x| x.abs() == n / 2);
            if (1..=kmax).contains(&k) && !nyq {
                *z = Complex::new(T::lit(re), T::lit(im));
            }
        }
    }
    ops.enforce_hermitian_vec(&mut f);
    ops.project_hat(&mut f);

    let shells = shell_spectrum(ops, &f, kmax);
    let target: Vec<T> = (0..=kmax)
        .map(|k| if k == 0 { T::zero() } else { T::from_usize_lossy(k).powf(slope) })
        .collect();
    let factor: Vec<T> = (0..=kmax)
        .map(|k| if shells[k] > T::zero() { (target[k] / shells[k]).sqrt() } else { T::zero() })
        .collect();
    let per_mode: Vec<T> = (0..ops.spectral_len())
        .map(|s| {
            let k = shell_of(ops.modes(s));
            if k <= kmax { factor[k] } else { T::zero() }
        })
        .collect();
    f.scale_by(&per_mode);

    let ms = ops.mean_square_vec(&f);
    if ms > T::zero() {
        let g = T::one() / ms.sqrt();
        f.scale_by(&vec![g; ops.spectral_len()]);
    }
    f
}
