//! Ensemble averages over covers, integral-scale quantities and the
//! cascade/locality band checks.
//!
//! The localized average of a density `θ` on a cover element is
//! `(1/T) ∫ (1/R³) ∫ θ φ_i^p dx dt`; the ensemble average `⟨Θ⟩_R` is its
//! mean over the elements of one cover. For the combined flux density the
//! weight enters through `u · ∇φ_i` instead of a power of `φ_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covers::{generate_cover, Cover, CoverParams};
use crate::cutoffs::{cutoffs_for_cover, make_integral_cutoff, Cutoff, CutoffParams};
use crate::error::{Error, Result};
use crate::flux::{local_times, trapezoid_weights, Stencil, MIN_ACTIVE_SNAPSHOTS};
use crate::grid::{SpectralOps, VectorField};
use crate::kinematics::AssumptionChecks;
use crate::scalar::Real;
use crate::solver::{MhdState, SnapshotSource};

/// Jittered covers generated per scale by [`cascade_check`].
pub const DEFAULT_COVERS_PER_SCALE: usize = 8;
/// Relative slack granted to the interpolation inequality.
pub const INTERPOLATION_SLACK: f64 = 0.05;

/// Smallest admissible `K*` for the given cover constants.
pub fn min_k_star(k1: u32, k2: u32) -> f64 {
    let (k1, k2) = (k1 as f64, k2 as f64);
    (k1 * k2).sqrt().max(0.75 * k2).max(k1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    #[serde(rename = "K1")]
    pub k1: u32,
    #[serde(rename = "K2")]
    pub k2: u32,
    #[serde(rename = "K_star")]
    pub k_star: f64,
    pub beta: f64,
    /// Gradient threshold of the smoothness check; `None` selects the 90th
    /// percentile of `|∇u|` over the integral domain at `t = T`.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Stands in for the unquantified localization constant.
    #[serde(rename = "C0_localization")]
    pub c0_localization: f64,
    pub delta: f64,
    pub rho: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub scales: Vec<f64>,
}

impl AnalysisParams {
    /// Defaults: `K1 = K2 = 8`, smallest admissible `K*`, `β = 0.5`,
    /// `δ = ρ = 0.8` and scales `R0, R0/2, R0/4`.
    pub fn new(r0: f64, horizon: f64) -> Self {
        Self {
            k1: 8,
            k2: 8,
            k_star: min_k_star(8, 8),
            beta: 0.5,
            m: None,
            c0_localization: 1.0,
            delta: 0.8,
            rho: 0.8,
            horizon,
            r0,
            scales: vec![r0, r0 / 2.0, r0 / 4.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 < 1 || self.k2 < 1 {
            return Err(Error::param("K1/K2", "must be positive integers"));
        }
        let min = min_k_star(self.k1, self.k2);
        if !(self.k_star >= min) {
            return Err(Error::param("K_star", format!("must be >= {min} for K1 = {}, K2 = {}", self.k1, self.k2)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param("beta", "must lie in (0, 1)"));
        }
        if let Some(m) = self.m {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::param("M", "must be > 0"));
            }
        }
        if !(self.c0_localization > 0.0 && self.c0_localization.is_finite()) {
            return Err(Error::param("C0_localization", "must be > 0"));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::param("R0", "must be > 0"));
        }
        if self.scales.is_empty() {
            return Err(Error::param("scales", "must not be empty"));
        }
        for &r in &self.scales {
            if !(r > 0.0 && r <= self.r0 * (1.0 + 1e-12)) {
                return Err(Error::param("scales", format!("{r} is outside (0, R0]")));
            }
        }
        self.cutoff_params().map(|_| ())
    }

    pub fn cutoff_params(&self) -> Result<CutoffParams> {
        CutoffParams::new(self.delta, self.rho, self.horizon)
    }

    pub fn cover_params(&self, r: f64) -> Result<CoverParams<f64>> {
        CoverParams::new(self.k1, self.k2, self.r0, r.min(self.r0))
    }
}

/// Scalar or flux density averaged over cover elements.
#[derive(Clone, Copy)]
pub enum Density<'a, T: Real> {
    /// `½(|ω|² + |j|²)(u · ∇φ)`; the weight power is ignored.
    CombinedFlux,
    /// `|ω|² + |j|²`.
    Enstrophy,
    /// `½(|u|² + |b|²)`.
    Energy,
    Custom(&'a (dyn Fn(&MhdState<T>, &SpectralOps<T>) -> Vec<T> + Sync)),
}

enum Evaluated<T> {
    Flux { u: VectorField<T>, e: Vec<T> },
    Scalar(Vec<T>),
}

fn evaluate<T: Real>(d: &Density<'_, T>, state: &MhdState<T>, ops: &SpectralOps<T>) -> Evaluated<T> {
    let sq = |f: &VectorField<T>| f.norm_sq().into_values();
    let add = |a: Vec<T>, b: Vec<T>, s: T| a.into_iter().zip(b).map(|(x, y)| (x + y) * s).collect();
    match d {
        Density::CombinedFlux => {
            let e = add(sq(&ops.curl(&state.u)), sq(&ops.curl(&state.b)), T::lit(0.5));
            Evaluated::Flux { u: state.u.clone(), e }
        }
        Density::Enstrophy => Evaluated::Scalar(add(sq(&ops.curl(&state.u)), sq(&ops.curl(&state.b)), T::one())),
        Density::Energy => Evaluated::Scalar(add(sq(&state.u), sq(&state.b), T::lit(0.5))),
        Density::Custom(f) => Evaluated::Scalar(f(state, ops)),
    }
}

/// `(1/T) ∫∫ θ φ_i^p` for every cutoff (no `1/R³`), in one pass over the
/// snapshots. With `require_nonnegative` every grid value of `θ` is checked.
pub fn time_averaged_integrals<T: Real>(
    source: &dyn SnapshotSource<T>,
    cutoffs: &[Cutoff],
    density: &Density<'_, T>,
    power: f64,
    require_nonnegative: bool,
) -> Result<Vec<f64>> {
    if cutoffs.is_empty() {
        return Ok(Vec::new());
    }
    let horizon = cutoffs[0].temporal.horizon;
    if cutoffs.iter().any(|c| (c.temporal.horizon - horizon).abs() > 1e-12 * horizon) {
        return Err(Error::Precondition("cutoffs disagree on the time horizon".into()));
    }
    if !(power > 0.0) {
        return Err(Error::param("delta_power", "must be > 0"));
    }
    let local = local_times(&source.times(), horizon, MIN_ACTIVE_SNAPSHOTS)?;
    let weights = trapezoid_weights(&local);
    let grid = *source.load(0)?.grid();
    let ops = SpectralOps::new(grid);
    let stencils: Vec<Stencil<T>> =
        cutoffs.par_iter().map(|c| Stencil::new(c, &grid)).collect::<Result<_>>()?;
    let flux = matches!(density, Density::CombinedFlux);
    let p = T::lit(power);
    let powered: Vec<Vec<T>> = if flux { Vec::new() } else { stencils.par_iter().map(|s| s.powered(p)).collect() };
    let mut acc = vec![0.0; cutoffs.len()];
    for (k, &s) in local.iter().enumerate() {
        let state = source.load(k)?;
        grid.check_same(state.grid())?;
        let (eta, _) = cutoffs[0].eta(T::lit(s));
        if eta <= T::zero() && !require_nonnegative {
            continue;
        }
        let field = evaluate(density, &state, &ops);
        let vals: Vec<T> = match &field {
            Evaluated::Flux { u, e } => stencils.par_iter().map(|st| eta * st.flux(e, u)).collect(),
            Evaluated::Scalar(theta) => {
                if require_nonnegative {
                    if let Some(i) = theta.iter().position(|v| *v < T::zero()) {
                        return Err(Error::Precondition(format!(
                            "density is negative ({}) at node {i} of snapshot {k}",
                            theta[i]
                        )));
                    }
                }
                let ep = eta.powf(p);
                stencils.par_iter().zip(&powered).map(|(st, w)| ep * st.integrate_with(theta, w)).collect()
            }
        };
        for (a, v) in acc.iter_mut().zip(vals) {
            *a += weights[k] * v.as_f64();
        }
    }
    Ok(acc.into_iter().map(|a| a / horizon).collect())
}

/// Localized averages `(1/T) ∫ (1/R³) ∫ θ φ_i^p` for every cutoff.
pub fn localized_averages<T: Real>(
    source: &dyn SnapshotSource<T>,
    cutoffs: &[Cutoff],
    density: &Density<'_, T>,
    power: f64,
) -> Result<Vec<f64>> {
    let raw = time_averaged_integrals(source, cutoffs, density, power, false)?;
    Ok(raw.iter().zip(cutoffs).map(|(v, c)| v / c.scale().powi(3)).collect())
}

/// `⟨Θ⟩_R` over one cover.
pub fn ensemble_average<T: Real, C: Real>(
    source: &dyn SnapshotSource<T>,
    cover: &Cover<C>,
    params: CutoffParams,
    density: &Density<'_, T>,
    delta_power: f64,
) -> Result<f64> {
    let cutoffs = cutoffs_for_cover(cover, params)?;
    let avgs = localized_averages(source, &cutoffs, density, delta_power)?;
    Ok(mean(&avgs))
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegralScaleQuantities {
    pub e0: f64,
    #[serde(rename = "E0")]
    pub big_e0: f64,
    #[serde(rename = "P0")]
    pub p0: f64,
    pub curly_e0: f64,
    pub eps0: f64,
    pub sigma0: f64,
    /// `P0 = 0`: the scale ratios are set to zero.
    pub degenerate: bool,
}

impl IntegralScaleQuantities {
    /// Derives `(E0/P0)^½`, `(e0/P0)^¼` and their maximum.
    pub fn from_parts(e0: f64, big_e0: f64, p0: f64) -> Self {
        let mut q = Self { e0, big_e0, p0, ..Self::default() };
        if p0 > 0.0 {
            q.curly_e0 = (big_e0 / p0).sqrt();
            q.eps0 = (e0 / p0).powf(0.25);
            q.sigma0 = q.curly_e0.max(q.eps0);
        } else {
            q.degenerate = true;
        }
        q
    }
}

/// `e0`, `E0`, `P0` with the weights `φ0^(4ρ−3)`, `φ0^(2ρ−1)`, `φ0` and the
/// endpoint term `(1/(T R0³)) ∫ ½|ω(T)|² ψ0`.
pub fn integral_quantities<T: Real>(
    source: &dyn SnapshotSource<T>,
    params: &AnalysisParams,
) -> Result<IntegralScaleQuantities> {
    params.validate()?;
    let c = make_integral_cutoff(params.r0, params.cutoff_params()?)?;
    let horizon = params.horizon;
    let local = local_times(&source.times(), horizon, MIN_ACTIVE_SNAPSHOTS)?;
    let weights = trapezoid_weights(&local);
    let grid = *source.load(0)?.grid();
    let ops = SpectralOps::new(grid);
    let st = Stencil::new(&c, &grid)?;
    let (pe, pbig) = (T::lit(4.0 * params.rho - 3.0), T::lit(2.0 * params.rho - 1.0));
    let (we, wbig) = (st.powered(pe), st.powered(pbig));
    let (mut e0, mut big_e0, mut p0, mut endpoint) = (0.0, 0.0, 0.0, 0.0);
    let last = local.len() - 1;
    for (k, &s) in local.iter().enumerate() {
        let (eta, _) = c.eta(T::lit(s));
        if eta <= T::zero() {
            continue;
        }
        let state = source.load(k)?;
        grid.check_same(state.grid())?;
        let (u_hat, b_hat) = (ops.forward(&state.u), ops.forward(&state.b));
        let (w_hat, j_hat) = (ops.curl_hat(&u_hat), ops.curl_hat(&b_hat));
        let (w, j) = (ops.inverse(&w_hat), ops.inverse(&j_hat));
        let (wsq, jsq) = (w.norm_sq().into_values(), j.norm_sq().into_values());
        let half = T::lit(0.5);
        let energy: Vec<T> = state
            .u
            .norm_sq()
            .into_values()
            .into_iter()
            .zip(state.b.norm_sq().into_values())
            .map(|(a, b)| (a + b) * half)
            .collect();
        let ens: Vec<T> = wsq.iter().zip(&jsq).map(|(a, b)| *a + *b).collect();
        let mut pal = vec![T::zero(); grid.len()];
        for g in [ops.gradient_tensor_hat(&w_hat), ops.gradient_tensor_hat(&j_hat)] {
            for comp in g.iter().flatten() {
                for (p, v) in pal.iter_mut().zip(comp) {
                    *p = *p + *v * *v;
                }
            }
        }
        let wk = weights[k];
        e0 += wk * (eta.powf(pe) * st.integrate_with(&energy, &we)).as_f64();
        big_e0 += wk * (eta.powf(pbig) * st.integrate_with(&ens, &wbig)).as_f64();
        p0 += wk * (eta * st.integrate(&pal)).as_f64();
        if k == last {
            let half_w: Vec<T> = wsq.iter().map(|v| *v * half).collect();
            endpoint = st.integrate(&half_w).as_f64();
        }
    }
    let norm = horizon * params.r0.powi(3);
    Ok(IntegralScaleQuantities::from_parts(e0 / norm, big_e0 / norm, (p0 + endpoint) / norm))
}

/// Outcome of `(1/K1) Θ0 ≤ ⟨Θ⟩_R ≤ K2 Θ0` for one cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationCheck {
    #[serde(rename = "R")]
    pub r: f64,
    pub n: usize,
    pub theta0: f64,
    pub ensemble: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Compares `⟨Θ⟩_R` over `cover` with `Θ0 = (1/T) ∫ (1/R0³) ∫ θ φ0^δ` for a
/// non-negative density, weights `φ^δ` throughout.
pub fn interpolation_check<T: Real, C: Real>(
    source: &dyn SnapshotSource<T>,
    cover: &Cover<C>,
    params: CutoffParams,
    density: &Density<'_, T>,
) -> Result<InterpolationCheck> {
    if matches!(density, Density::CombinedFlux) {
        return Err(Error::Precondition("the flux density is sign-varying".into()));
    }
    let r0 = cover.params.r0.as_f64();
    let mut cutoffs = cutoffs_for_cover(cover, params)?;
    cutoffs.push(make_integral_cutoff(r0, params)?);
    let raw = time_averaged_integrals(source, &cutoffs, density, params.delta, true)?;
    let n = cover.len();
    let r = cover.params.r.as_f64();
    let ensemble = mean(&raw[..n]) / r.powi(3);
    let theta0 = raw[n] / r0.powi(3);
    let lower_bound = theta0 / cover.params.k1 as f64;
    let upper_bound = theta0 * cover.params.k2 as f64;
    let slack = INTERPOLATION_SLACK;
    let passed = ensemble >= lower_bound * (1.0 - slack) && ensemble <= upper_bound * (1.0 + slack);
    Ok(InterpolationCheck { r, n, theta0, ensemble, lower_bound, upper_bound, slack, passed })
}

/// Flux statistics at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry {
    #[serde(rename = "R")]
    pub r: f64,
    /// Element count of each cover.
    pub n: Vec<usize>,
    /// `⟨Φ⟩_R` of each cover.
    pub per_cover_flux: Vec<f64>,
    /// Mean of `per_cover_flux`.
    pub mean_flux: f64,
    pub min: f64,
    pub max: f64,
    /// `max / min` over covers when both are positive.
    pub spread: Option<f64>,
    /// `⟨Ψ⟩_R`, the time-only average (no `1/R³`), mean over covers.
    pub mean_psi: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub in_band: bool,
    /// `σ0/β ≤ R`.
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub params: AnalysisParams,
    pub covers_per_scale: usize,
    pub seed: u64,
    pub integral: IntegralScaleQuantities,
    /// `[σ0/β, R0]`.
    pub admissible_range: [f64; 2],
    pub scales: Vec<ScaleEntry>,
    pub locality: LocalityResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionChecks>,
    /// `P0 = 0` or every flux vanishes.
    pub degenerate: bool,
}

impl EnsembleReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Columns `R, mean_flux, min, max, lower_bound, upper_bound, in_band`.
    pub fn flux_csv(&self) -> String {
        let mut out = String::from("R,mean_flux,min,max,lower_bound,upper_bound,in_band\n");
        for s in &self.scales {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                s.r, s.mean_flux, s.min, s.max, s.lower_bound, s.upper_bound, s.in_band
            ));
        }
        out
    }
}

/// Per-scale `⟨Φ⟩_R` over `covers_per_scale` jittered covers, checked
/// against `[P0/(4K*), 4K* P0]`. Out-of-band values are reported, not errors.
pub fn cascade_check<T: Real>(
    source: &dyn SnapshotSource<T>,
    params: &AnalysisParams,
    covers_per_scale: usize,
    seed: u64,
) -> Result<EnsembleReport> {
    params.validate()?;
    if covers_per_scale == 0 {
        return Err(Error::param("covers_per_scale", "must be positive"));
    }
    let integral = integral_quantities(source, params)?;
    let cparams = params.cutoff_params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    let mut groups = Vec::new();
    for &r in &params.scales {
        let mut g = Vec::with_capacity(covers_per_scale);
        for _ in 0..covers_per_scale {
            let cover = generate_cover(params.cover_params(r)?, rng.gen::<u64>())?;
            let cuts = cutoffs_for_cover(&cover, cparams)?;
            g.push(all.len()..all.len() + cuts.len());
            all.extend(cuts);
        }
        groups.push(g);
    }
    let raw = time_averaged_integrals(source, &all, &Density::CombinedFlux, 1.0, false)?;
    let k_star = params.k_star;
    let lower_bound = integral.p0 / (4.0 * k_star);
    let upper_bound = 4.0 * k_star * integral.p0;
    let admissible_lo = integral.sigma0 / params.beta;
    let scales: Vec<ScaleEntry> = params
        .scales
        .iter()
        .zip(&groups)
        .map(|(&r, g)| {
            let r3 = r.powi(3);
            let per_cover_flux: Vec<f64> = g.iter().map(|rg| mean(&raw[rg.clone()]) / r3).collect();
            let psi: Vec<f64> = g.iter().map(|rg| mean(&raw[rg.clone()])).collect();
            let mean_flux = mean(&per_cover_flux);
            let min = per_cover_flux.iter().copied().fold(f64::INFINITY, f64::min);
            let max = per_cover_flux.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ScaleEntry {
                r,
                n: g.iter().map(|rg| rg.len()).collect(),
                mean_flux,
                min,
                max,
                spread: (min > 0.0).then(|| max / min),
                mean_psi: mean(&psi),
                per_cover_flux,
                lower_bound,
                upper_bound,
                in_band: lower_bound <= mean_flux && mean_flux <= upper_bound,
                admissible: r >= admissible_lo,
            }
        })
        .collect();
    let locality = locality_from_scales(&scales, k_star);
    let degenerate = integral.degenerate || scales.iter().all(|s| s.mean_flux == 0.0);
    Ok(EnsembleReport {
        params: params.clone(),
        covers_per_scale,
        seed,
        integral,
        admissible_range: [admissible_lo, params.r0],
        scales,
        locality,
        assumptions: None,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalityPair {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `⟨Ψ⟩_r / ⟨Ψ⟩_R`, absent when `⟨Ψ⟩_R = 0`.
    pub ratio: Option<f64>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub within: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityResult {
    pub k_star: f64,
    pub pairs: Vec<LocalityPair>,
    /// `max |⟨Ψ⟩_R − R³⟨Φ⟩_R| / |⟨Ψ⟩_R|` over scales.
    pub identity_error: f64,
    pub identity_ok: bool,
    /// Fewer than two scales with nonzero `⟨Ψ⟩`.
    pub degenerate: bool,
}

/// Bounds `[(r/R)³/(16K*²), 16K*²(r/R)³]` on `⟨Ψ⟩_r / ⟨Ψ⟩_R`.
pub fn locality_bounds(r: f64, big_r: f64, k_star: f64) -> (f64, f64) {
    let c = 16.0 * k_star * k_star;
    let q = (r / big_r).powi(3);
    (q / c, q * c)
}

/// Bounds obtained by chaining `level` dyadic steps `R → R/2`.
pub fn dyadic_chain_bounds(level: u32, k_star: f64) -> (f64, f64) {
    let (lo, hi) = locality_bounds(0.5, 1.0, k_star);
    (lo.powi(level as i32), hi.powi(level as i32))
}

pub fn locality_check(report: &EnsembleReport, k_star: f64) -> LocalityResult {
    locality_from_scales(&report.scales, k_star)
}

fn locality_from_scales(scales: &[ScaleEntry], k_star: f64) -> LocalityResult {
    let mut identity_error: f64 = 0.0;
    for s in scales {
        let d = (s.mean_psi - s.r.powi(3) * s.mean_flux).abs();
        let scale = s.mean_psi.abs();
        identity_error = identity_error.max(if scale > 0.0 { d / scale } else { d });
    }
    let mut pairs = Vec::new();
    for small in scales {
        for big in scales {
            if small.r > big.r {
                continue;
            }
            let (lower_bound, upper_bound) = locality_bounds(small.r, big.r, k_star);
            let ratio = (big.mean_psi != 0.0).then(|| small.mean_psi / big.mean_psi);
            let within = ratio.map(|q| lower_bound <= q && q <= upper_bound);
            pairs.push(LocalityPair { r: small.r, big_r: big.r, ratio, lower_bound, upper_bound, within });
        }
    }
    let nonzero = scales.iter().filter(|s| s.mean_psi != 0.0).count();
    LocalityResult { k_star, pairs, identity_error, identity_ok: identity_error <= 1e-12, degenerate: nonzero < 2 }
}

#[cfg(test)]
mod tests;
