//! Singular-integral kinematics of the velocity gradient and the numerical
//! checks of the smoothness, localization and modulation assumptions.
//!
//! Matrices use `D[i][k] = ∂_i u_k`, so `∇u_l` is column `l` of `D` and the
//! decomposition reads `D = S − ½ ω×` with `(ω×) v = ω × v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cutoffs::make_integral_cutoff;
use crate::ensemble::AnalysisParams;
use crate::error::{Error, Result};
use crate::flux::{local_times, trapezoid_weights, Stencil};
use crate::grid::{GridSpec, SpectralOps, VectorField};
use crate::scalar::{cross3, Real};
use crate::solver::SnapshotSource;

pub type Mat3 = [[f64; 3]; 3];

/// Percentile of `|∇u|` used when no threshold `M` is configured.
pub const DEFAULT_M_PERCENTILE: f64 = 0.9;

fn check_unit(y: [f64; 3]) -> Result<()> {
    let n = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("|y_hat| = {n}, expected 1")));
    }
    Ok(())
}

/// `σ(ŷ) = 3 ŷ⊗ŷ − I`.
pub fn sigma_kernel(y: [f64; 3]) -> Result<Mat3> {
    check_unit(y)?;
    Ok(sigma_unchecked(y))
}

fn sigma_unchecked(y: [f64; 3]) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|k| 3.0 * (y[i] * y[k]) - if i == k { 1.0 } else { 0.0 }))
}

/// `M(ŷ, f) = ½(ŷ⊗(ŷ×f) + (ŷ×f)⊗ŷ)`.
pub fn m_kernel(y: [f64; 3], f: [f64; 3]) -> Result<Mat3> {
    check_unit(y)?;
    Ok(m_unchecked(y, f))
}

fn m_unchecked(y: [f64; 3], f: [f64; 3]) -> Mat3 {
    let c = cross3(&y, &f);
    std::array::from_fn(|i| std::array::from_fn(|k| 0.5 * (y[i] * c[k] + c[i] * y[k])))
}

/// `n` nearly uniform points on the unit sphere (Fibonacci lattice).
pub fn sphere_points(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Equal-weight mean of a matrix-valued function over [`sphere_points`].
pub fn sphere_mean(n: usize, f: impl Fn([f64; 3]) -> Mat3) -> Mat3 {
    let mut acc = [[0.0; 3]; 3];
    for y in sphere_points(n) {
        let m = f(y);
        for i in 0..3 {
            for k in 0..3 {
                acc[i][k] += m[i][k];
            }
        }
    }
    acc.map(|r| r.map(|v| v / n as f64))
}

/// Near/far split of the singular integrals at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSplit {
    /// `R^(2/3)`.
    pub split_radius: f64,
    /// Strain from `|y| < R^(2/3)` with `ω(x)` subtracted (principal value).
    #[serde(rename = "I1")]
    pub i1: Mat3,
    /// Strain from `R^(2/3) ≤ |y| < L/2`.
    #[serde(rename = "I2")]
    pub i2: Mat3,
    /// `(1/4π) ∫ σ(ŷ)(ω(x+y) − ω(x)) dy/|y|³` over the near field.
    pub sigma_near: [f64; 3],
    /// `(1/4π) ∫ σ(ŷ) ω(x+y) dy/|y|³` over the far field.
    pub sigma_far: [f64; 3],
    /// Value of `ω` at the evaluation point.
    pub omega_x: [f64; 3],
    /// Bound on the far-field strain neglected beyond `L/2`.
    pub tail_bound: f64,
}

impl KernelSplit {
    /// `S = I1 + I2`.
    pub fn strain(&self) -> Mat3 {
        std::array::from_fn(|i| std::array::from_fn(|k| self.i1[i][k] + self.i2[i][k]))
    }

    /// `∇u` assembled column by column as `S e_l − ½ ω × e_l`.
    pub fn grad_u(&self) -> Mat3 {
        let s = self.strain();
        let w = self.omega_x;
        let mut d = s;
        for l in 0..3 {
            let mut e = [0.0; 3];
            e[l] = 1.0;
            let c = cross3(&w, &e);
            for i in 0..3 {
                d[i][l] -= 0.5 * c[i];
            }
        }
        d
    }

    /// `σ` integrals in total; `ω(x)/3` for a divergence-free field.
    pub fn sigma_total(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.sigma_near[i] + self.sigma_far[i])
    }
}

/// Direct summation of the near (`|y| < R^(2/3)`) and far
/// (`R^(2/3) ≤ |y| < L/2`) strain integrals at the grid node `x`.
///
/// Offsets are grid vectors and the field is read periodically; every
/// offset below `L/2` names a single image, so the sums are free-space
/// integrals over `B(x, L/2)`. The singular cell `y = 0` is excluded.
pub fn gradu_split<T: Real>(omega: &VectorField<T>, x: [f64; 3], r: f64) -> Result<KernelSplit> {
    let g = omega.grid();
    let n = g.n();
    let h = g.spacing().as_f64();
    let half = g.box_length().as_f64() / 2.0;
    if !(r > 0.0) {
        return Err(Error::param("R", "must be > 0"));
    }
    let split = r.powf(2.0 / 3.0);
    if split >= half {
        return Err(Error::Precondition(format!("split radius {split} reaches the box half-width {half}")));
    }
    let mut idx = [0usize; 3];
    for d in 0..3 {
        let f = x[d] / h + (n / 2) as f64;
        let i = f.round();
        if (f - i).abs() > 1e-9 || i < 0.0 || i >= n as f64 {
            return Err(Error::Precondition(format!("x = {x:?} is not a grid node inside the box")));
        }
        idx[d] = i as usize;
    }
    let at = |i: usize| -> [f64; 3] { omega.at(i).map(|v| v.as_f64()) };
    let w0 = at(g.index(idx[0], idx[1], idx[2]));
    let m = (half / h).ceil() as i64;
    let wrap = |i: usize, o: i64| ((i as i64 + o).rem_euclid(n as i64)) as usize;
    let mut i1 = [[0.0; 3]; 3];
    let mut i2 = [[0.0; 3]; 3];
    let mut s_near = [0.0; 3];
    let mut s_far = [0.0; 3];
    let cell = h * h * h;
    let c_sigma = cell / (4.0 * std::f64::consts::PI);
    let c_m = 3.0 * c_sigma;
    let mut omega_sq = 0.0;
    for oz in -m..=m {
        for oy in -m..=m {
            for ox in -m..=m {
                if ox == 0 && oy == 0 && oz == 0 {
                    continue;
                }
                let y = [ox as f64 * h, oy as f64 * h, oz as f64 * h];
                let rr = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
                if rr >= half {
                    continue;
                }
                let yh = y.map(|v| v / rr);
                let w = at(g.index(wrap(idx[0], ox), wrap(idx[1], oy), wrap(idx[2], oz)));
                omega_sq += (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]) * cell;
                let inv3 = 1.0 / (rr * rr * rr);
                let near = rr < split;
                let f = if near { [w[0] - w0[0], w[1] - w0[1], w[2] - w0[2]] } else { w };
                let sig = sigma_unchecked(yh);
                let mk = m_unchecked(yh, f);
                let (mm, ss) = if near { (&mut i1, &mut s_near) } else { (&mut i2, &mut s_far) };
                for i in 0..3 {
                    ss[i] += c_sigma * inv3 * (sig[i][0] * f[0] + sig[i][1] * f[1] + sig[i][2] * f[2]);
                    for k in 0..3 {
                        mm[i][k] += c_m * inv3 * mk[i][k];
                    }
                }
            }
        }
    }
    // |M(ŷ, f)| ≤ |f|, so Cauchy–Schwarz over |y| ≥ L/2 gives (3/4π)(4π/(3(L/2)³))^½ ‖ω‖₂
    let tail_bound = 3.0 / (4.0 * std::f64::consts::PI)
        * (4.0 * std::f64::consts::PI / (3.0 * half.powi(3))).sqrt()
        * omega_sq.sqrt();
    Ok(KernelSplit { split_radius: split, i1, i2, sigma_near: s_near, sigma_far: s_far, omega_x: w0, tail_bound })
}

/// `max |D − (S − ½ ω×)| / max |D|` over the grid, with `D[i][k] = ∂_i u_k`.
pub fn strain_decomposition_check<T: Real>(u: &VectorField<T>) -> f64 {
    let ops = SpectralOps::new(*u.grid());
    let g = ops.gradient_tensor(u);
    let w = ops.curl(u);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in 0..u.grid().len() {
        let d: Mat3 = std::array::from_fn(|i| std::array::from_fn(|k| g[k][i][p].as_f64()));
        let om = w.at(p).map(|v| v.as_f64());
        let wx = [[0.0, -om[2], om[1]], [om[2], 0.0, -om[0]], [-om[1], om[0], 0.0]];
        for i in 0..3 {
            for k in 0..3 {
                let s = 0.5 * (d[i][k] + d[k][i]);
                worst = worst.max((d[i][k] - (s - 0.5 * wx[i][k])).abs());
                scale = scale.max(d[i][k].abs());
            }
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Frobenius norm of `∇u` at every node.
pub fn grad_norm<T: Real>(ops: &SpectralOps<T>, u: &VectorField<T>) -> Vec<f64> {
    let g = ops.gradient_tensor(u);
    (0..u.grid().len())
        .map(|p| g.iter().flatten().map(|c| c[p].as_f64().powi(2)).sum::<f64>().sqrt())
        .collect()
}

fn nodes_within<T: Real>(g: &GridSpec<T>, radius: f64) -> Vec<usize> {
    (0..g.len())
        .filter(|&p| g.position(p).iter().map(|v| v.as_f64().powi(2)).sum::<f64>() < radius * radius)
        .collect()
}

/// The 90th percentile of `|∇u|` over `B(0, R0)` at the last snapshot.
pub fn default_threshold<T: Real>(source: &dyn SnapshotSource<T>, r0: f64) -> Result<f64> {
    if source.is_empty() {
        return Err(Error::Precondition("empty snapshot series".into()));
    }
    let st = source.load(source.len() - 1)?;
    let ops = SpectralOps::new(*st.grid());
    let norms = grad_norm(&ops, &st.u);
    let mut vals: Vec<f64> = nodes_within(st.grid(), r0).into_iter().map(|p| norms[p]).collect();
    if vals.is_empty() {
        return Ok(0.0);
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    let k = ((vals.len() - 1) as f64 * DEFAULT_M_PERCENTILE).round() as usize;
    Ok(vals[k])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A1Report {
    #[serde(rename = "threshold_M")]
    pub threshold_m: f64,
    /// Pairs `(x, y)` with `ω(x+y) ≠ 0`.
    pub points_tested: usize,
    /// Grid points (summed over snapshots) of `B(0, 2R0)` with `|∇u| > M`.
    pub active_points: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    pub worst_ratio: f64,
    /// No active points: the check holds vacuously.
    pub vacuous: bool,
}

/// Samples `|ω(x+y) − ω(x)| ≤ |ω(x+y)| |y|^½` at points `x ∈ B(0, 2R0)` with
/// `|∇u(x)| > M` and grid offsets `0 < |y| < 2R0 + R0^(2/3)` stratified in
/// `log |y|`; `pair_samples` pairs per snapshot.
pub fn verify_a1<T: Real>(
    source: &dyn SnapshotSource<T>,
    r0: f64,
    m: f64,
    pair_samples: usize,
    seed: u64,
) -> Result<A1Report> {
    if !(m > 0.0) {
        return Err(Error::param("M", "must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = A1Report {
        threshold_m: m,
        points_tested: 0,
        active_points: 0,
        violations: 0,
        violation_fraction: 0.0,
        worst_ratio: 0.0,
        vacuous: true,
    };
    let y_max = 2.0 * r0 + r0.powf(2.0 / 3.0);
    for k in 0..source.len() {
        let st = source.load(k)?;
        let g = *st.grid();
        let h = g.spacing().as_f64();
        let n = g.n() as i64;
        if y_max >= g.box_length().as_f64() / 2.0 {
            return Err(Error::Precondition(format!("offset range {y_max} wraps the periodic box")));
        }
        let ops = SpectralOps::new(g);
        let norms = grad_norm(&ops, &st.u);
        let w = ops.curl(&st.u);
        let active: Vec<usize> = nodes_within(&g, 2.0 * r0).into_iter().filter(|&p| norms[p] > m).collect();
        rep.active_points += active.len();
        if active.is_empty() {
            continue;
        }
        let shells = 8;
        let (lo, hi) = (h.ln(), y_max.ln());
        for s in 0..pair_samples {
            let x = active[rng.gen_range(0..active.len())];
            let band = (s % shells) as f64;
            let t: f64 = rng.gen();
            let len = (lo + (hi - lo) * (band + t) / shells as f64).exp();
            let dir = loop {
                let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let q = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                if q > 1e-6 && q <= 1.0 {
                    break v.map(|c| c / q.sqrt());
                }
            };
            let off: [i64; 3] = dir.map(|d| (d * len / h).round() as i64);
            let ylen = off.iter().map(|&o| (o as f64 * h).powi(2)).sum::<f64>().sqrt();
            if off == [0, 0, 0] || ylen >= y_max {
                continue;
            }
            let xi = g.unravel(x);
            let yi: [usize; 3] = std::array::from_fn(|d| (xi[d] as i64 + off[d]).rem_euclid(n) as usize);
            let wx = w.at(x).map(|v| v.as_f64());
            let wy = w.at(g.index(yi[0], yi[1], yi[2])).map(|v| v.as_f64());
            let wy_norm = (wy[0] * wy[0] + wy[1] * wy[1] + wy[2] * wy[2]).sqrt();
            if wy_norm == 0.0 {
                continue;
            }
            let diff = ((wy[0] - wx[0]).powi(2) + (wy[1] - wx[1]).powi(2) + (wy[2] - wx[2]).powi(2)).sqrt();
            let ratio = diff / (wy_norm * ylen.sqrt());
            rep.points_tested += 1;
            if ratio > 1.0 {
                rep.violations += 1;
            }
            rep.worst_ratio = rep.worst_ratio.max(ratio);
        }
    }
    rep.vacuous = rep.active_points == 0;
    if rep.points_tested > 0 {
        rep.violation_fraction = rep.violations as f64 / rep.points_tested as f64;
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A3Report {
    /// `(∫₀ᵀ ‖ω‖²_{L²(B(0, 2R0 + R0^(2/3)))} ds)^½`.
    pub localization_lhs: f64,
    /// `1 / C0_localization`.
    pub localization_bound: f64,
    pub localization_ok: bool,
    /// `∫|ω(T)|²ψ0 / (½ sup_s ∫|ω(s)|²ψ0)`; zero when the sup vanishes.
    pub modulation_ratio_omega: f64,
    pub modulation_ratio_j: f64,
    pub modulation_ok: bool,
    /// Both sups vanish.
    pub modulation_degenerate: bool,
}

/// Localization norm against `1/C0_localization` and the endpoint-over-sup
/// modulation ratios of the integral-scale enstrophies.
pub fn verify_a3<T: Real>(source: &dyn SnapshotSource<T>, params: &AnalysisParams) -> Result<A3Report> {
    params.validate()?;
    let local = local_times(&source.times(), params.horizon, 0)?;
    let weights = trapezoid_weights(&local);
    let grid = *source.load(0)?.grid();
    let ops = SpectralOps::new(grid);
    let psi0 = Stencil::new(&make_integral_cutoff(params.r0, params.cutoff_params()?)?, &grid)?;
    let radius = 2.0 * params.r0 + params.r0.powf(2.0 / 3.0);
    if radius >= grid.box_length().as_f64() / 2.0 {
        return Err(Error::Precondition(format!("localization ball radius {radius} wraps the periodic box")));
    }
    let ball = nodes_within(&grid, radius);
    let cell = grid.cell_volume().as_f64();
    let (mut loc, mut sup_w, mut sup_j, mut end_w, mut end_j) = (0.0, 0.0f64, 0.0f64, 0.0, 0.0);
    for k in 0..local.len() {
        let st = source.load(k)?;
        grid.check_same(st.grid())?;
        let wsq = ops.curl(&st.u).norm_sq().into_values();
        let jsq = ops.curl(&st.b).norm_sq().into_values();
        loc += weights[k] * ball.iter().map(|&p| wsq[p].as_f64()).sum::<f64>() * cell;
        let (ew, ej) = (psi0.integrate(&wsq).as_f64(), psi0.integrate(&jsq).as_f64());
        sup_w = sup_w.max(ew);
        sup_j = sup_j.max(ej);
        if k == local.len() - 1 {
            end_w = ew;
            end_j = ej;
        }
    }
    let ratio = |end: f64, sup: f64| if sup > 0.0 { end / (0.5 * sup) } else { 0.0 };
    let localization_lhs = loc.sqrt();
    let localization_bound = 1.0 / params.c0_localization;
    let (rw, rj) = (ratio(end_w, sup_w), ratio(end_j, sup_j));
    let modulation_degenerate = sup_w == 0.0 && sup_j == 0.0;
    // a vanishing enstrophy satisfies its inequality trivially (0 ≥ 0)
    let ok_w = sup_w == 0.0 || rw >= 1.0;
    let ok_j = sup_j == 0.0 || rj >= 1.0;
    Ok(A3Report {
        localization_lhs,
        localization_bound,
        localization_ok: localization_lhs <= localization_bound,
        modulation_ratio_omega: rw,
        modulation_ratio_j: rj,
        modulation_ok: ok_w && ok_j,
        modulation_degenerate,
    })
}

/// (A1) and (A3) results attached to an ensemble report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionChecks {
    pub a1: A1Report,
    pub a3: A3Report,
    /// `M` came from the 90th-percentile default rather than the config.
    pub threshold_from_percentile: bool,
}

/// Runs both verifiers with the configured or default threshold.
pub fn check_assumptions<T: Real>(
    source: &dyn SnapshotSource<T>,
    params: &AnalysisParams,
    pair_samples: usize,
    seed: u64,
) -> Result<AssumptionChecks> {
    let (m, from_percentile) = match params.m {
        Some(m) => (m, false),
        None => (default_threshold(source, params.r0)?, true),
    };
    let a1 = if m > 0.0 {
        verify_a1(source, params.r0, m, pair_samples, seed)?
    } else {
        A1Report {
            threshold_m: m,
            points_tested: 0,
            active_points: 0,
            violations: 0,
            violation_fraction: 0.0,
            worst_ratio: 0.0,
            vacuous: true,
        }
    };
    Ok(AssumptionChecks { a1, a3: verify_a3(source, params)?, threshold_from_percentile: from_percentile })
}
