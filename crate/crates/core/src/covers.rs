//! `(K1, K2)`-covers of the integral domain `B(0, R0)` by balls of radius `R`.
//!
//! Covers are built from a body-centered-cubic lattice whose covering radius
//! leaves room for a random jitter of each center. Lattice points outside the
//! integral domain are projected onto its boundary sphere; the projection is
//! non-expansive towards points of the ball, so coverage is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm3, sub3, Real, Vec3};

/// Default jitter magnitude as a fraction of `R`.
pub const DEFAULT_JITTER: f64 = 0.1;
/// Default sampling density (`R / spacing`) of the verification oracle.
pub const DEFAULT_SAMPLE_DENSITY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverParams<T> {
    #[serde(rename = "K1")]
    pub k1: u32,
    #[serde(rename = "K2")]
    pub k2: u32,
    #[serde(rename = "R0")]
    pub r0: T,
    #[serde(rename = "R")]
    pub r: T,
}

impl<T: Real> CoverParams<T> {
    pub fn new(k1: u32, k2: u32, r0: T, r: T) -> Result<Self> {
        let p = Self { k1, k2, r0, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 < 1 {
            return Err(Error::param("K1", "must be >= 1"));
        }
        if self.k2 < 1 {
            return Err(Error::param("K2", "must be >= 1"));
        }
        if !(self.r0 > T::zero() && self.r0.is_finite()) {
            return Err(Error::param("R0", "must be > 0"));
        }
        if !(self.r > T::zero() && self.r <= self.r0) {
            return Err(Error::param("R", format!("must lie in (0, R0], got {}", self.r)));
        }
        Ok(())
    }

    /// `(R0 / R)^3`, the minimal admissible number of balls.
    pub fn min_count(&self) -> f64 {
        (self.r0 / self.r).as_f64().powi(3)
    }

    /// `K1 (R0 / R)^3`.
    pub fn max_count(&self) -> f64 {
        self.k1 as f64 * self.min_count()
    }

    fn is_integral_scale(&self) -> bool {
        (self.r0 - self.r).abs() <= T::lit(1e-12) * self.r0
    }
}

/// Lattice used to seed a cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lattice<T> {
    /// Body-centered cubic with cube side `a`; covering radius `a √5 / 4`.
    Bcc { a: T },
    /// Simple cubic with spacing `s`; covering radius `s √3 / 2`.
    Cubic { s: T },
}

impl<T: Real> Lattice<T> {
    pub fn covering_radius(&self) -> T {
        match *self {
            Lattice::Bcc { a } => a * T::lit(5.0).sqrt() / T::lit(4.0),
            Lattice::Cubic { s } => s * T::lit(3.0).sqrt() / T::lit(2.0),
        }
    }

    /// All lattice points (shifted by `offset`) within distance `radius` of the origin.
    pub fn points_within(&self, offset: Vec3<T>, radius: T) -> Vec<Vec3<T>> {
        let (cell, basis): (T, &[[f64; 3]]) = match *self {
            Lattice::Bcc { a } => (a, &[[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]),
            Lattice::Cubic { s } => (s, &[[0.0, 0.0, 0.0]]),
        };
        let m = (radius / cell).ceil().to_i64().unwrap_or(0) + 1;
        let mut out = Vec::new();
        for k in -m..=m {
            for j in -m..=m {
                for i in -m..=m {
                    for b in basis {
                        let p = [
                            (T::lit(i as f64 + b[0])) * cell + offset[0],
                            (T::lit(j as f64 + b[1])) * cell + offset[1],
                            (T::lit(k as f64 + b[2])) * cell + offset[2],
                        ];
                        if norm3(&p) <= radius {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover<T> {
    pub params: CoverParams<T>,
    pub centers: Vec<Vec3<T>>,
}

impl<T: Real> Cover<T> {
    pub fn new(params: CoverParams<T>, centers: Vec<Vec3<T>>) -> Result<Self> {
        params.validate()?;
        let tol = T::one() + T::lit(1e-12);
        for (i, c) in centers.iter().enumerate() {
            if !c.iter().all(|x| x.is_finite()) || norm3(c) > params.r0 * tol {
                return Err(Error::Precondition(format!("center {i} lies outside B(0, R0)")));
            }
        }
        Ok(Self { params, centers })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// True when `B(x_i, R)` is not contained in `B(0, R0)`.
    pub fn is_boundary(&self, i: usize) -> bool {
        norm3(&self.centers[i]) + self.params.r > self.params.r0
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let c: Self = serde_json::from_str(s)?;
        Cover::new(c.params, c.centers)
    }
}

/// Number of centers with `|x − x_i| < R`.
pub fn multiplicity_at<T: Real>(cover: &Cover<T>, x: Vec3<T>) -> usize {
    let r = cover.params.r;
    cover.centers.iter().filter(|c| norm3(&sub3(&x, c)) < r).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub n: usize,
    pub min_count: f64,
    pub max_count: f64,
    pub count_ok: bool,
    pub samples: usize,
    pub coverage_fraction: f64,
    pub max_multiplicity: usize,
    pub multiplicity_ok: bool,
    pub boundary_elements: usize,
}

impl CoverReport {
    pub fn is_valid(&self) -> bool {
        self.count_ok && self.multiplicity_ok && self.coverage_fraction == 1.0
    }
}

/// Samples the open ball `B(0, R0)` on the grid `(R / sample_density) Z^3`
/// and reports the count bounds, covered fraction and largest multiplicity.
pub fn verify_cover<T: Real>(cover: &Cover<T>, sample_density: usize) -> CoverReport {
    let p = &cover.params;
    let hs = p.r.as_f64() / sample_density.max(1) as f64;
    let (r, r0) = (p.r.as_f64(), p.r0.as_f64());
    let m = (r0 / hs).ceil() as i64;
    let side = (2 * m + 1) as usize;
    let idx = |i: i64, j: i64, k: i64| ((i + m) as usize) + side * (((j + m) as usize) + side * (k + m) as usize);
    let mut counts = vec![0u16; side * side * side];
    for c in &cover.centers {
        let c = c.map(|v| v.as_f64());
        let lo: [i64; 3] = std::array::from_fn(|d| (((c[d] - r) / hs).floor() as i64).max(-m));
        let hi: [i64; 3] = std::array::from_fn(|d| (((c[d] + r) / hs).ceil() as i64).min(m));
        for k in lo[2]..=hi[2] {
            let dz = k as f64 * hs - c[2];
            for j in lo[1]..=hi[1] {
                let dy = j as f64 * hs - c[1];
                let rem = r * r - dz * dz - dy * dy;
                if rem <= 0.0 {
                    continue;
                }
                for i in lo[0]..=hi[0] {
                    let dx = i as f64 * hs - c[0];
                    if dx * dx + dy * dy + dz * dz < r * r {
                        let s = idx(i, j, k);
                        counts[s] = counts[s].saturating_add(1);
                    }
                }
            }
        }
    }
    let (mut samples, mut covered, mut max_mult) = (0usize, 0usize, 0usize);
    for k in -m..=m {
        for j in -m..=m {
            for i in -m..=m {
                let (x, y, z) = (i as f64 * hs, j as f64 * hs, k as f64 * hs);
                if (x * x + y * y + z * z).sqrt() >= r0 {
                    continue;
                }
                let c = counts[idx(i, j, k)] as usize;
                samples += 1;
                covered += (c > 0) as usize;
                max_mult = max_mult.max(c);
            }
        }
    }
    let n = cover.len();
    let min_count = p.min_count();
    let max_count = p.max_count();
    let slack = 1e-9 * max_count.max(1.0);
    CoverReport {
        n,
        min_count,
        max_count,
        count_ok: n as f64 + slack >= min_count && n as f64 <= max_count + slack,
        samples,
        coverage_fraction: if samples > 0 { covered as f64 / samples as f64 } else { 0.0 },
        max_multiplicity: max_mult,
        multiplicity_ok: max_mult <= p.k2 as usize,
        boundary_elements: cover.boundary_indices().len(),
    }
}

/// The lattice used by [`generate_cover`]: BCC with covering radius just
/// below `R − jitter`.
pub fn default_lattice<T: Real>(r: T, jitter: T) -> Lattice<T> {
    let a = T::lit(4.0) * (r - jitter) / T::lit(5.0).sqrt() * T::lit(0.999);
    Lattice::Bcc { a }
}

/// Lattice points within `R0 + covering radius`, projected into `B(0, R0)`.
pub fn lattice_cover<T: Real>(
    params: CoverParams<T>,
    lattice: Lattice<T>,
    offset: Vec3<T>,
) -> Result<Cover<T>> {
    params.validate()?;
    let reach = params.r0 + lattice.covering_radius();
    let centers = lattice
        .points_within(offset, reach)
        .into_iter()
        .map(|p| project_into_ball(p, params.r0))
        .collect();
    Cover::new(params, centers)
}

fn project_into_ball<T: Real>(p: Vec3<T>, r0: T) -> Vec3<T> {
    let d = norm3(&p);
    if d > r0 {
        let s = r0 / d;
        [p[0] * s, p[1] * s, p[2] * s]
    } else {
        p
    }
}

/// Jittered lattice cover, deterministic per seed. Fails with an
/// infeasibility error when the lattice needs more than `K1 (R0/R)^3` balls
/// or reaches a sampled multiplicity above `K2`.
pub fn generate_cover<T: Real>(params: CoverParams<T>, seed: u64) -> Result<Cover<T>> {
    generate_cover_with(params, seed, T::lit(DEFAULT_JITTER))
}

pub fn generate_cover_with<T: Real>(
    params: CoverParams<T>,
    seed: u64,
    jitter_fraction: T,
) -> Result<Cover<T>> {
    params.validate()?;
    if !(jitter_fraction >= T::zero() && jitter_fraction < T::lit(0.5)) {
        return Err(Error::param("jitter_fraction", "must lie in [0, 0.5)"));
    }
    if params.is_integral_scale() {
        return Cover::new(params, vec![[T::zero(); 3]]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = jitter_fraction * params.r;
    let lattice = default_lattice(params.r, eps);
    let cell = match lattice {
        Lattice::Bcc { a } => a,
        Lattice::Cubic { s } => s,
    };
    let offset: Vec3<T> = std::array::from_fn(|_| T::lit(rng.gen_range(0.0..1.0)) * cell);
    let reach = params.r0 + lattice.covering_radius();
    let centers: Vec<Vec3<T>> = lattice
        .points_within(offset, reach)
        .into_iter()
        .map(|p| {
            let j: Vec3<T> = random_in_ball(&mut rng);
            let q = [p[0] + j[0] * eps, p[1] + j[1] * eps, p[2] + j[2] * eps];
            project_into_ball(q, params.r0)
        })
        .collect();

    let n = centers.len() as f64;
    if n > params.max_count() {
        return Err(Error::InfeasibleCover {
            bound: "K1",
            detail: format!(
                "lattice needs {n} balls, more than K1 (R0/R)^3 = {:.3}",
                params.max_count()
            ),
        });
    }
    let cover = Cover::new(params, centers)?;
    let report = verify_cover(&cover, DEFAULT_SAMPLE_DENSITY);
    if !report.multiplicity_ok {
        return Err(Error::InfeasibleCover {
            bound: "K2",
            detail: format!(
                "sampled multiplicity {} exceeds K2 = {}",
                report.max_multiplicity, params.k2
            ),
        });
    }
    Ok(cover)
}

fn random_in_ball<T: Real>(rng: &mut ChaCha8Rng) -> Vec3<T> {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= 1.0 {
            return v.map(T::lit);
        }
    }
}
