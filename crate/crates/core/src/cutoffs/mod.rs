//! Refined space-time cutoffs `φ(x, t) = η(t) ψ(x)` with closed-form
//! derivatives.
//!
//! Every spatial cutoff is assembled from one ramp `P = smoothstep^m` through
//! products, compositions and the "or" `1 − (1 − a)(1 − b)`. Each of these
//! operations preserves the ratio bounds `|∇ψ| ≤ a1 ψ^ρ`,
//! `|∇²ψ| ≤ a2 ψ^(2ρ−1)` with computable `(a1, a2)`, which is how the
//! constant recorded on a cutoff is obtained.

mod jet;
mod profile;

pub use jet::Jet;
pub use profile::{ratio_power, smoothstep, RadialProfile, TemporalCutoff};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covers::Cover;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub delta: f64,
    pub rho: f64,
    /// Achieved ratio constant of the radial and temporal profiles.
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl CutoffParams {
    /// Builds the parameters and records the achieved `C0`.
    pub fn new(delta: f64, rho: f64, horizon: f64) -> Result<Self> {
        let mut p = Self { delta, rho, c0: 1.0, horizon };
        p.validate()?;
        let space = RadialProfile::new(rho).c0();
        let time = TemporalCutoff::new(horizon, delta).c0;
        p.c0 = space.max(time);
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let open = |name, v: f64| {
            if v > 0.75 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must lie in (3/4, 1), got {v}")))
            }
        };
        open("delta", self.delta)?;
        open("rho", self.rho)?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("T", "must be > 0"));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::param("C0", "must be > 0"));
        }
        Ok(())
    }

    pub fn profile(&self) -> RadialProfile {
        RadialProfile::new(self.rho)
    }

    pub fn temporal(&self) -> TemporalCutoff {
        TemporalCutoff::new(self.horizon, self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    Interior,
    Boundary,
    Integral,
}

/// Cone geometry of a boundary cutoff, stored as cosines of half-angles
/// about the origin-to-center axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeGeometry {
    pub r0: f64,
    pub axis: [f64; 3],
    /// Inner cone, through `∂B(c, R) ∩ ∂B(0, R0)`.
    pub q_inner: f64,
    /// Outer cone, through `∂B(c, 2R) ∩ ∂B(0, R0)` (−1 when the spheres miss).
    pub q_outer: f64,
    /// End of the angular blend used inside the radial band.
    pub q_blend: f64,
    /// Width of the radial band `[R0 − w, R0]`.
    pub band: f64,
    /// Whether the outer cone alone fails to keep `B(c, 2R)` out of the shell.
    pub sliver: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub kind: CutoffKind,
    pub center: [f64; 3],
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub params: CutoffParams,
    pub profile: RadialProfile,
    pub temporal: TemporalCutoff,
    pub cone: Option<ConeGeometry>,
    /// Ratio constant of this cutoff in units of `R` (first derivatives) and
    /// `R^2` (second derivatives).
    pub c0: f64,
}

fn norm(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn to_f64<T: Real>(x: &[T; 3]) -> [f64; 3] {
    x.map(|v| v.as_f64())
}

/// Ratio-bound pair `(a1, a2)` in absolute units.
#[derive(Debug, Clone, Copy)]
struct Bounds(f64, f64);

impl Bounds {
    fn combine(self, o: Bounds) -> Bounds {
        Bounds(self.0 + o.0, self.1 + o.1 + 2.0 * self.0 * o.0)
    }

    fn in_units(self, r: f64) -> f64 {
        (self.0 * r).max(self.1 * r * r)
    }
}

/// Ramp in `|x − c|` from 1 at `R` to 0 at `2R`.
fn radial_bounds(p: &RadialProfile, r: f64) -> Bounds {
    Bounds(p.c1 / r, (p.c2 + p.c1) / (r * r))
}

/// Ramp over `r ∈ [R0 − w, R0]` in the distance from the origin.
fn band_bounds(p: &RadialProfile, r0: f64, w: f64) -> Bounds {
    Bounds(p.c1 / w, p.c2 / (w * w) + p.c1 / (w * (r0 - w)))
}

/// Ramp in `cos θ` over `[q_lo, q_hi]`, used only at radii `≥ r_min`.
fn angular_bounds(p: &RadialProfile, q_lo: f64, q_hi: f64, r_min: f64) -> Bounds {
    let dq = q_hi - q_lo;
    let sin_max = if q_lo <= 0.0 { 1.0 } else { (1.0 - q_lo * q_lo).sqrt() };
    let hess_q = 2.0 / 3f64.sqrt();
    let g = sin_max / (r_min * dq);
    Bounds(p.c1 * g, p.c2 * g * g + p.c1 * hess_q / (r_min * r_min * dq))
}

/// `ψ₀(x) = h(|x| / R0)`.
pub fn make_integral_cutoff(r0: f64, params: CutoffParams) -> Result<Cutoff> {
    params.validate()?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::param("R0", "must be > 0"));
    }
    let profile = params.profile();
    Ok(Cutoff {
        kind: CutoffKind::Integral,
        center: [0.0; 3],
        r: r0,
        r0,
        params,
        profile,
        temporal: params.temporal(),
        cone: None,
        c0: profile.c0(),
    })
}

/// `ψ(x) = h(|x − c| / R)`; requires `|c| + 2R ≤ 2 R0`.
pub fn make_interior_cutoff<T: Real>(
    center: [T; 3],
    r: T,
    r0: T,
    params: CutoffParams,
) -> Result<Cutoff> {
    params.validate()?;
    let (c, r, r0) = (to_f64(&center), r.as_f64(), r0.as_f64());
    if !(r > 0.0 && r <= r0) {
        return Err(Error::param("R", "must lie in (0, R0]"));
    }
    if norm(&c) + 2.0 * r > 2.0 * r0 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "B(c, 2R) is not contained in B(0, 2R0): |c| = {}, R = {r}, R0 = {r0}",
            norm(&c)
        )));
    }
    let profile = params.profile();
    Ok(Cutoff {
        kind: CutoffKind::Interior,
        center: c,
        r,
        r0,
        params,
        profile,
        temporal: params.temporal(),
        cone: None,
        c0: profile.c0(),
    })
}

/// Boundary cutoff `ψ = ψ₀ · (g B ⊕ μ A)` where `a ⊕ b = 1 − (1 − a)(1 − b)`:
/// `g = h(|x − c|/R)`, `μ` ramps up across the band `[R0 − w, R0]`, `A` is
/// one inside the inner cone and vanishes once a point of the band can leave
/// `B(c, 2R)`, and `B` (only needed when the outer cone does not confine
/// `B(c, 2R)` in the shell) removes `g` outside the outer cone for `r ≥ R0`.
pub fn make_boundary_cutoff<T: Real>(
    center: [T; 3],
    r: T,
    r0: T,
    params: CutoffParams,
) -> Result<Cutoff> {
    params.validate()?;
    let (c, r, r0) = (to_f64(&center), r.as_f64(), r0.as_f64());
    if !(r > 0.0 && r <= r0) {
        return Err(Error::param("R", "must lie in (0, R0]"));
    }
    let d = norm(&c);
    if d + r <= r0 {
        return Err(Error::Precondition("B(c, R) lies inside B(0, R0); use the interior kind".into()));
    }
    if d <= r {
        return Err(Error::Precondition(format!(
            "degenerate cone: center within R of the origin (|c| = {d}, R = {r})"
        )));
    }
    if d >= r0 + r {
        return Err(Error::Precondition("B(c, R) does not meet B(0, R0)".into()));
    }
    let axis = [c[0] / d, c[1] / d, c[2] / d];
    let q_inner = (r0 * r0 + d * d - r * r) / (2.0 * r0 * d);
    let q_outer = ((r0 * r0 + d * d - 4.0 * r * r) / (2.0 * r0 * d)).max(-1.0);
    let f2 = |s: f64| ((s * s + d * d - 4.0 * r * r) / (2.0 * s * d)).clamp(-1.0, 1.0);

    let mut band = 0.5 * r;
    let mut q_blend = f2(r0).max(f2(r0 - band));
    for _ in 0..12 {
        if q_inner - q_blend >= 0.5 * (q_inner - q_outer) {
            break;
        }
        band *= 0.5;
        q_blend = f2(r0).max(f2(r0 - band));
    }
    if !(q_blend < q_inner) {
        return Err(Error::Precondition("cone blend region is empty".into()));
    }
    let sliver = d * q_outer > r0;

    let profile = params.profile();
    let psi0 = radial_bounds(&profile, r0);
    let g = radial_bounds(&profile, r);
    let mu = band_bounds(&profile, r0, band);
    let a = angular_bounds(&profile, q_blend, q_inner, r0 - band);
    let mut gb = g;
    if sliver {
        let nu = band_bounds(&profile, r0, band);
        let a_hat = angular_bounds(&profile, q_outer, q_inner, r0 - band);
        gb = g.combine(nu.combine(a_hat));
    }
    let total = psi0.combine(gb.combine(mu.combine(a)));
    Ok(Cutoff {
        kind: CutoffKind::Boundary,
        center: c,
        r,
        r0,
        params,
        profile,
        temporal: params.temporal(),
        cone: Some(ConeGeometry { r0, axis, q_inner, q_outer, q_blend, band, sliver }),
        c0: total.in_units(r).max(profile.c0()),
    })
}

/// Interior or boundary cutoff for each element of a cover.
pub fn cutoffs_for_cover<T: Real>(cover: &Cover<T>, params: CutoffParams) -> Result<Vec<Cutoff>> {
    let (r, r0) = (cover.params.r, cover.params.r0);
    (0..cover.len())
        .map(|i| {
            let c = cover.centers[i];
            let made = if cover.is_boundary(i) {
                make_boundary_cutoff(c, r, r0, params)
            } else {
                make_interior_cutoff(c, r, r0, params)
            };
            made.map_err(|e| Error::CutoffElement { index: i, source: Box::new(e) })
        })
        .collect()
}

impl Cutoff {
    fn radial_jet<T: Real>(&self, x: &[T; 3], c: [f64; 3], r: f64) -> Jet<T> {
        let cj = c.map(T::lit);
        let d = Jet::distance(x, &cj);
        let s = d.v / T::lit(r);
        if s >= T::lit(2.0) {
            return Jet::constant(T::zero());
        }
        if s <= T::one() {
            return Jet::constant(T::one());
        }
        d.affine(T::one() / T::lit(r), T::zero()).compose(self.profile.radial(s))
    }

    fn ramp_jet<T: Real>(&self, arg: &Jet<T>, lo: f64, hi: f64) -> Jet<T> {
        let span = T::lit(hi - lo);
        let s = arg.affine(T::one() / span, -T::lit(lo) / span);
        if s.v <= T::zero() {
            return Jet::constant(T::zero());
        }
        if s.v >= T::one() {
            return Jet::constant(T::one());
        }
        s.compose(self.profile.ramp(s.v))
    }

    /// `ψ` with gradient and Hessian at `x`.
    pub fn jet<T: Real>(&self, x: [T; 3]) -> Jet<T> {
        match self.kind {
            CutoffKind::Interior => self.radial_jet(&x, self.center, self.r),
            CutoffKind::Integral => self.radial_jet(&x, [0.0; 3], self.r0),
            CutoffKind::Boundary => {
                let cone = self.cone.as_ref().expect("boundary cutoff carries its cone");
                let psi0 = self.radial_jet(&x, [0.0; 3], self.r0);
                if psi0.v == T::zero() {
                    return psi0;
                }
                let g = self.radial_jet(&x, self.center, self.r);
                let radius = Jet::distance(&x, &[T::zero(); 3]);
                let w = cone.band;
                let mu = self.ramp_jet(&radius, self.r0 - w, self.r0);
                let (a, q) = if mu.v > T::zero() {
                    let q = Jet::cos_angle(&x, &cone.axis.map(T::lit));
                    (self.ramp_jet(&q, cone.q_blend, cone.q_inner), Some(q))
                } else {
                    (Jet::constant(T::zero()), None)
                };
                let mut gb = g;
                if cone.sliver && g.v > T::zero() {
                    // ν falls from 1 to 0 across the band
                    let nu = self.ramp_jet(&radius, self.r0 - w, self.r0).one_minus();
                    let q = q.unwrap_or_else(|| Jet::cos_angle(&x, &cone.axis.map(T::lit)));
                    let a_hat = self.ramp_jet(&q, cone.q_outer, cone.q_inner);
                    gb = g.mul(&nu.or(&a_hat));
                }
                psi0.mul(&gb.or(&mu.mul(&a)))
            }
        }
    }

    pub fn psi<T: Real>(&self, x: [T; 3]) -> T {
        self.jet(x).v
    }

    /// `(η, η')` at `t`.
    pub fn eta<T: Real>(&self, t: T) -> (T, T) {
        self.temporal.eval(t)
    }

    pub fn phi<T: Real>(&self, x: [T; 3], t: T) -> T {
        self.eta(t).0 * self.psi(x)
    }

    /// Axis-aligned box containing the support of `ψ`.
    pub fn support_box(&self) -> ([f64; 3], [f64; 3]) {
        let (c, rad) = match self.kind {
            CutoffKind::Interior => (self.center, 2.0 * self.r),
            _ => ([0.0; 3], 2.0 * self.r0),
        };
        (c.map(|v| v - rad), c.map(|v| v + rad))
    }

    /// The radius that sets the ratio-bound units.
    pub fn scale(&self) -> f64 {
        self.r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: CutoffKind,
    pub samples: usize,
    pub positive_samples: usize,
    pub c0: f64,
    /// `max R |∂_i ψ| / ψ^ρ` over samples.
    pub max_grad_ratio: f64,
    /// `max R^2 |∂_i ∂_j ψ| / ψ^(2ρ−1)` over samples.
    pub max_hessian_ratio: f64,
    /// `max T |η'| / η^δ` over samples of `(T/3, 2T/3)`.
    pub max_time_ratio: f64,
    pub time_c0: f64,
    pub grad_ok: bool,
    pub hessian_ok: bool,
    pub time_ok: bool,
    pub range_ok: bool,
    /// Samples with `∇ψ · (x − c) > 0`.
    pub outward_gradients: usize,
    /// Samples with `ψ > ψ₀`.
    pub above_integral: usize,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.grad_ok && self.hessian_ok && self.time_ok && self.range_ok && self.above_integral == 0
    }
}

/// Sample points: half uniform over the support region, half stratified
/// towards the edges where `ψ → 0` (log-spaced distances down to `1e-8 R`).
pub fn sample_points(c: &Cutoff, samples: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = |rng: &mut ChaCha8Rng| loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    };
    let mut pts = Vec::with_capacity(samples);
    for k in 0..samples {
        let u = dir(&mut rng);
        let edge = k % 2 == 1;
        let p = match (c.kind, c.cone.as_ref()) {
            (CutoffKind::Boundary, Some(cone)) => {
                let pick: u32 = rng.gen_range(0..3);
                if pick == 0 {
                    let rad = if edge { 2.0 * c.r - c.r * 10f64.powf(-8.0 * rng.gen::<f64>()) } else { 2.0 * c.r * rng.gen::<f64>().cbrt() };
                    [c.center[0] + rad * u[0], c.center[1] + rad * u[1], c.center[2] + rad * u[2]]
                } else {
                    // directions inside the blend cone, radii across band and shell
                    let q_lo = (cone.q_blend - 0.05).max(-1.0);
                    let q = if pick == 2 && edge {
                        cone.q_blend + (cone.q_inner - cone.q_blend) * 10f64.powf(-8.0 * rng.gen::<f64>())
                    } else {
                        rng.gen_range(q_lo..=1.0)
                    };
                    let lo = c.r0 - cone.band;
                    let rad = if pick == 1 && edge {
                        2.0 * c.r0 - c.r0 * 10f64.powf(-8.0 * rng.gen::<f64>())
                    } else {
                        rng.gen_range(lo..2.0 * c.r0)
                    };
                    let e = orthonormal(&cone.axis);
                    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                    let s = (1.0 - q * q).max(0.0).sqrt();
                    let d: [f64; 3] = std::array::from_fn(|i| {
                        q * cone.axis[i] + s * (phi.cos() * e.0[i] + phi.sin() * e.1[i])
                    });
                    d.map(|v| v * rad)
                }
            }
            _ => {
                let (cc, rr) = if c.kind == CutoffKind::Integral { ([0.0; 3], c.r0) } else { (c.center, c.r) };
                let rad = if edge {
                    2.0 * rr - rr * 10f64.powf(-8.0 * rng.gen::<f64>())
                } else {
                    2.0 * rr * rng.gen::<f64>().cbrt()
                };
                [cc[0] + rad * u[0], cc[1] + rad * u[1], cc[2] + rad * u[2]]
            }
        };
        pts.push(p);
    }
    pts
}

fn orthonormal(a: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let t = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = crate::scalar::cross3(a, &t);
    let n1 = norm(&e1);
    let e1 = e1.map(|v| v / n1);
    let e2 = crate::scalar::cross3(a, &e1);
    (e1, e2)
}

/// Sampled check of the ratio inequalities against the recorded constant.
pub fn verify_cutoff_bounds(c: &Cutoff, samples: usize) -> BoundReport {
    let pts = sample_points(c, samples, 0x5eed);
    verify_bounds_at(c, &pts, samples)
}

/// Same check at explicit points; `time_samples` points are used for `η`.
pub fn verify_bounds_at(c: &Cutoff, pts: &[[f64; 3]], time_samples: usize) -> BoundReport {
    let rho = c.params.rho;
    let scale = c.scale();
    let psi0 = make_integral_cutoff(c.r0, c.params).expect("validated params");
    let tol = 1.0 + 1e-9;
    let mut rep = BoundReport {
        kind: c.kind,
        samples: pts.len(),
        positive_samples: 0,
        c0: c.c0,
        max_grad_ratio: 0.0,
        max_hessian_ratio: 0.0,
        max_time_ratio: 0.0,
        time_c0: c.temporal.c0,
        grad_ok: true,
        hessian_ok: true,
        time_ok: true,
        range_ok: true,
        outward_gradients: 0,
        above_integral: 0,
    };
    let radial_center = if c.kind == CutoffKind::Integral { [0.0; 3] } else { c.center };
    for x in pts {
        let j = c.jet(*x);
        if !(j.v >= 0.0 && j.v <= 1.0) {
            rep.range_ok = false;
        }
        if j.v > psi0.psi(*x) {
            rep.above_integral += 1;
        }
        if j.v <= 0.0 {
            continue;
        }
        rep.positive_samples += 1;
        let g = scale * j.max_abs_grad() / j.v.powf(rho);
        let h = scale * scale * j.max_abs_hessian() / j.v.powf(2.0 * rho - 1.0);
        rep.max_grad_ratio = rep.max_grad_ratio.max(g);
        rep.max_hessian_ratio = rep.max_hessian_ratio.max(h);
        let out: f64 = (0..3).map(|i| j.g[i] * (x[i] - radial_center[i])).sum();
        if out > 1e-12 * j.grad_norm() * norm(&crate::scalar::sub3(x, &radial_center)) {
            rep.outward_gradients += 1;
        }
    }
    let t = c.temporal.horizon;
    for k in 0..time_samples {
        let u = (k as f64 + 0.5) / time_samples.max(1) as f64;
        let tt = if k % 2 == 0 { t / 3.0 + t / 3.0 * u } else { t / 3.0 + t / 3.0 * 10f64.powf(-8.0 * u) };
        let (e, de) = c.temporal.eval(tt);
        if e > 0.0 {
            rep.max_time_ratio = rep.max_time_ratio.max(t * de.abs() / e.powf(c.params.delta));
        }
    }
    rep.grad_ok = rep.max_grad_ratio <= c.c0 * tol;
    rep.hessian_ok = rep.max_hessian_ratio <= c.c0 * tol;
    rep.time_ok = rep.max_time_ratio <= c.temporal.c0 * tol;
    rep
}

#[cfg(test)]
mod tests;
