use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Quintic smoothstep `6s^5 − 15s^4 + 10s^3` on `[0, 1]`, clamped outside,
/// with its first two derivatives.
pub fn smoothstep<T: Real>(s: T) -> (T, T, T) {
    if s <= T::zero() {
        return (T::zero(), T::zero(), T::zero());
    }
    if s >= T::one() {
        return (T::one(), T::zero(), T::zero());
    }
    let s2 = s * s;
    let s3 = s2 * s;
    let v = s3 * (T::lit(10.0) + s * (T::lit(-15.0) + T::lit(6.0) * s));
    let d1 = T::lit(30.0) * s2 * (s - T::one()) * (s - T::one());
    let d2 = T::lit(60.0) * s * (s - T::one()) * (T::lit(2.0) * s - T::one());
    (v, d1, d2)
}

/// Power of the smoothstep that keeps the ratio bounds finite for `rho`.
pub fn ratio_power(rho: f64) -> u32 {
    (2.0 / (1.0 - rho) - 1e-9).ceil().max(1.0) as u32
}

/// Ramp `P(s) = smoothstep(s)^m` with its measured ratio constants
/// `c1 = sup |P'| / P^rho` and `c2 = sup |P''| / P^(2 rho − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub m: u32,
    pub rho: f64,
    pub c1: f64,
    pub c2: f64,
    /// False when the sampled ratios peak at the support edge.
    pub bounded: bool,
}

impl RadialProfile {
    pub fn new(rho: f64) -> Self {
        Self::with_power(ratio_power(rho), rho)
    }

    /// Profile with an explicit power; small powers give unbounded ratios.
    pub fn with_power(m: u32, rho: f64) -> Self {
        let mut p = Self { m, rho, c1: 0.0, c2: 0.0, bounded: true };
        let margin = 1.0 + 1e-6;
        p.c1 = sup_on_ramp(|s| p.ratio1(s)) * margin;
        p.c2 = sup_on_ramp(|s| p.ratio2(s)) * margin;
        let edge = 1e-9;
        p.bounded = p.ratio1(edge) <= p.c1 && p.ratio2(edge) <= p.c2;
        p
    }

    /// Ramp value and derivatives at `s`.
    pub fn ramp<T: Real>(&self, s: T) -> (T, T, T) {
        let (v, d1, d2) = smoothstep(s);
        if v <= T::zero() {
            return (T::zero(), T::zero(), T::zero());
        }
        if v >= T::one() {
            return (T::one(), T::zero(), T::zero());
        }
        let m = self.m as i32;
        let mf = T::lit(self.m as f64);
        let pm2 = if m >= 2 { v.powi(m - 2) } else { T::zero() };
        let pm1 = v.powi(m - 1);
        let val = pm1 * v;
        let p1 = mf * pm1 * d1;
        let p2 = mf * (T::lit(self.m as f64 - 1.0) * pm2 * d1 * d1 + pm1 * d2);
        (val, p1, p2)
    }

    /// `h(r) = P(2 − r)`: one on `[0, 1]`, zero on `[2, ∞)`.
    pub fn radial<T: Real>(&self, r: T) -> (T, T, T) {
        let (v, d1, d2) = self.ramp(T::lit(2.0) - r);
        (v, -d1, d2)
    }

    pub fn ratio1(&self, s: f64) -> f64 {
        let (v, d1, _) = self.ramp(s);
        if v > 0.0 {
            d1.abs() / v.powf(self.rho)
        } else {
            0.0
        }
    }

    pub fn ratio2(&self, s: f64) -> f64 {
        let (v, _, d2) = self.ramp(s);
        if v > 0.0 {
            d2.abs() / v.powf(2.0 * self.rho - 1.0)
        } else {
            0.0
        }
    }

    /// Constant of the radial profile `h(|x|/R)` in units of `R`: the Hessian
    /// picks up the tangential term `h'/(R^2 r)` with `r ≥ 1`.
    pub fn c0(&self) -> f64 {
        self.c1.max(self.c2 + self.c1)
    }
}

/// Supremum over `(0, 1)` by dense sampling and golden-section refinement.
fn sup_on_ramp(f: impl Fn(f64) -> f64) -> f64 {
    const N: usize = 4096;
    let mut best = (0.0, 0.0);
    for i in 1..N {
        let s = i as f64 / N as f64;
        let v = f(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    // an unbounded ratio peaks at the first sample; keep the search off the edge
    let h = 1.0 / N as f64;
    let (mut a, mut b) = ((best.0 - h).max(h), (best.0 + h).min(1.0 - h));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.1.max(f(0.5 * (a + b)))
}

/// `η(t) = P(3t/T − 1)`: zero on `(0, T/3)`, one on `(2T/3, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalCutoff {
    pub horizon: f64,
    pub delta: f64,
    pub profile: RadialProfile,
    /// Bound on `T |η'| / η^delta`.
    pub c0: f64,
}

impl TemporalCutoff {
    pub fn new(horizon: f64, delta: f64) -> Self {
        let profile = RadialProfile::new(delta);
        Self { horizon, delta, profile, c0: 3.0 * profile.c1 }
    }

    /// `(η, η')` at `t`.
    pub fn eval<T: Real>(&self, t: T) -> (T, T) {
        let big_t = T::lit(self.horizon);
        let (v, d1, _) = self.profile.ramp(T::lit(3.0) * t / big_t - T::one());
        (v, d1 * T::lit(3.0) / big_t)
    }
}
