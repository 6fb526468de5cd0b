//! Pseudo-spectral time integration of incompressible 3D MHD.
//!
//! The momentum equation is advanced in rotational form,
//! `u_t = P[u × ω + j × b] + ν Δu`, and the induction equation as
//! `b_t = ∇ × (u × b) + η Δb`. Nonlinear products are dealiased with a
//! cube mask and diffusion is absorbed by an integrating factor inside a
//! classical RK4 step.

mod init;

pub use init::{init_orszag_tang_3d, init_random_solenoidal};

use std::borrow::Cow;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SpectralOps, SpectralVector, VectorField};
use crate::scalar::Real;

/// Advective CFL constant used for the stability check.
pub const CFL_NUMBER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub viscosity: T,
    pub resistivity: T,
    pub dt: T,
    pub t_end: T,
    pub snapshot_stride: usize,
    pub dealias_fraction: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            viscosity: T::one(),
            resistivity: T::one(),
            dt: T::lit(1e-3),
            t_end: T::lit(0.1),
            snapshot_stride: 1,
            dealias_fraction: T::lit(2.0 / 3.0),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        };
        // zero diffusivities are allowed for ideal-limit checks
        if !(self.viscosity >= T::zero()) {
            return Err(Error::param("viscosity", "must be >= 0"));
        }
        if !(self.resistivity >= T::zero()) {
            return Err(Error::param("resistivity", "must be >= 0"));
        }
        pos("dt", self.dt)?;
        pos("t_end", self.t_end)?;
        if self.snapshot_stride == 0 {
            return Err(Error::param("snapshot_stride", "must be positive"));
        }
        if !(self.dealias_fraction > T::zero() && self.dealias_fraction <= T::one()) {
            return Err(Error::param("dealias_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (rounded to the nearest whole step).
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(0)
    }
}

/// Velocity and magnetic field at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MhdState<T> {
    pub u: VectorField<T>,
    pub b: VectorField<T>,
    pub time: T,
}

impl<T: Real> MhdState<T> {
    pub fn new(u: VectorField<T>, b: VectorField<T>, time: T) -> Result<Self> {
        u.grid().check_same(b.grid())?;
        Ok(Self { u, b, time })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { u: VectorField::zeros(grid), b: VectorField::zeros(grid), time: T::zero() }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.u.grid()
    }

    /// `∫ (|u|^2 + |b|^2) / 2`.
    pub fn energy(&self) -> T {
        (self.u.l2_norm_sq() + self.b.l2_norm_sq()) * T::lit(0.5)
    }
}

/// Time-ordered snapshots with uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSeries<T> {
    pub viscosity: T,
    pub resistivity: T,
    pub states: Vec<MhdState<T>>,
}

impl<T: Real> SnapshotSeries<T> {
    pub fn new(viscosity: T, resistivity: T, states: Vec<MhdState<T>>) -> Result<Self> {
        let s = Self { viscosity, resistivity, states };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn grid(&self) -> Option<&GridSpec<T>> {
        self.states.first().map(|s| s.grid())
    }

    /// Strictly increasing, uniformly spaced times on one grid.
    pub fn validate(&self) -> Result<()> {
        check_uniform_times(&self.times())?;
        if let Some(g) = self.grid() {
            for s in &self.states {
                g.check_same(s.grid())?;
            }
        }
        Ok(())
    }

    /// Keeps every `k`-th snapshot (the first is always kept).
    pub fn thinned(&self, k: usize) -> Self {
        Self {
            viscosity: self.viscosity,
            resistivity: self.resistivity,
            states: self.states.iter().step_by(k.max(1)).cloned().collect(),
        }
    }
}

/// Random-access snapshot provider, in memory or on disk.
pub trait SnapshotSource<T: Real> {
    fn len(&self) -> usize;
    fn time(&self, k: usize) -> T;
    fn viscosity(&self) -> T;
    fn resistivity(&self) -> T;
    fn load(&self, k: usize) -> Result<Cow<'_, MhdState<T>>>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn times(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

impl<T: Real> SnapshotSource<T> for SnapshotSeries<T> {
    fn len(&self) -> usize {
        self.states.len()
    }

    fn time(&self, k: usize) -> T {
        self.states[k].time
    }

    fn viscosity(&self) -> T {
        self.viscosity
    }

    fn resistivity(&self) -> T {
        self.resistivity
    }

    fn load(&self, k: usize) -> Result<Cow<'_, MhdState<T>>> {
        Ok(Cow::Borrowed(&self.states[k]))
    }
}

pub(crate) fn check_uniform_times<T: Real>(times: &[T]) -> Result<()> {
    if times.len() < 2 {
        return Ok(());
    }
    let dt0 = times[1] - times[0];
    let span = (times[times.len() - 1] - times[0]).abs().max(T::one());
    for w in times.windows(2) {
        let d = w[1] - w[0];
        if !(d > T::zero()) {
            return Err(Error::Precondition("snapshot times must be strictly increasing".into()));
        }
        if (d - dt0).abs() > T::lit(1e-12) * span {
            return Err(Error::Precondition(format!(
                "snapshot spacing not uniform: {d} vs {dt0}"
            )));
        }
    }
    Ok(())
}

/// Per-emission diagnostics of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub cfl_number: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation_rate: Vec<f64>,
    /// `|ΔE + ∫ D dt| / |∫ D dt|` for each interval between emissions.
    pub energy_residuals: Vec<f64>,
    pub max_energy_residual: f64,
}

/// Spectral MHD integrator owning its state.
pub struct Integrator<T: Real> {
    ops: SpectralOps<T>,
    cfg: SolverConfig<T>,
    mask: Vec<T>,
    u_hat: SpectralVector<T>,
    b_hat: SpectralVector<T>,
    // half- and full-step integrating factors for u and b
    eu_half: Vec<T>,
    eu_full: Vec<T>,
    eb_half: Vec<T>,
    eb_full: Vec<T>,
    steps_taken: usize,
    t0: T,
}

struct Rhs<T> {
    du: SpectralVector<T>,
    db: SpectralVector<T>,
    max_speed: T,
}

impl<T: Real> Integrator<T> {
    pub fn new(state: &MhdState<T>, cfg: SolverConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let grid = *state.grid();
        let ops = SpectralOps::new(grid);
        let mask = ops.dealias_mask(cfg.dealias_fraction);
        let mut u_hat = ops.forward(&state.u);
        let mut b_hat = ops.forward(&state.b);
        ops.project_hat(&mut u_hat);
        ops.project_hat(&mut b_hat);
        let factors = |diff: T, tau: T| -> Vec<T> {
            (0..ops.spectral_len()).map(|s| (-diff * ops.k_sq(s) * tau).exp()).collect()
        };
        let half = cfg.dt * T::lit(0.5);
        Ok(Self {
            eu_half: factors(cfg.viscosity, half),
            eu_full: factors(cfg.viscosity, cfg.dt),
            eb_half: factors(cfg.resistivity, half),
            eb_full: factors(cfg.resistivity, cfg.dt),
            ops,
            cfg,
            mask,
            u_hat,
            b_hat,
            steps_taken: 0,
            t0: state.time,
        })
    }

    pub fn ops(&self) -> &SpectralOps<T> {
        &self.ops
    }

    pub fn time(&self) -> T {
        self.t0 + T::from_usize_lossy(self.steps_taken) * self.cfg.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn state(&self) -> MhdState<T> {
        MhdState {
            u: self.ops.inverse(&self.u_hat),
            b: self.ops.inverse(&self.b_hat),
            time: self.time(),
        }
    }

    pub fn u_hat(&self) -> &SpectralVector<T> {
        &self.u_hat
    }

    pub fn b_hat(&self) -> &SpectralVector<T> {
        &self.b_hat
    }

    /// Total energy from the spectral coefficients.
    pub fn energy(&self) -> T {
        let v = self.ops.grid().volume();
        (self.ops.mean_square_vec(&self.u_hat) + self.ops.mean_square_vec(&self.b_hat))
            * v
            * T::lit(0.5)
    }

    /// `ν ∫|ω|^2 + η ∫|j|^2` from the spectral coefficients.
    pub fn dissipation_rate(&self) -> T {
        let v = self.ops.grid().volume();
        let w = self.ops.curl_hat(&self.u_hat);
        let j = self.ops.curl_hat(&self.b_hat);
        (self.cfg.viscosity * self.ops.mean_square_vec(&w)
            + self.cfg.resistivity * self.ops.mean_square_vec(&j))
            * v
    }

    /// Largest dt the advective CFL bound admits for the current state.
    pub fn admissible_dt(&self) -> T {
        let u = self.ops.inverse(&self.u_hat);
        let b = self.ops.inverse(&self.b_hat);
        admissible_dt(self.ops.grid(), u.max_norm().max(b.max_norm()))
    }

    fn rhs(&self, u_hat: &SpectralVector<T>, b_hat: &SpectralVector<T>) -> Rhs<T> {
        let ops = &self.ops;
        let u = ops.inverse(u_hat);
        let b = ops.inverse(b_hat);
        let w = ops.inverse(&ops.curl_hat(u_hat));
        let j = ops.inverse(&ops.curl_hat(b_hat));
        let len = u.grid().len();
        let mut lorentz: [Vec<T>; 3] = std::array::from_fn(|_| vec![T::zero(); len]);
        let mut emf: [Vec<T>; 3] = std::array::from_fn(|_| vec![T::zero(); len]);
        let mut max_sq = T::zero();
        for i in 0..len {
            let (uv, bv, wv, jv) = (u.at(i), b.at(i), w.at(i), j.at(i));
            let a = crate::scalar::cross3(&uv, &wv);
            let c = crate::scalar::cross3(&jv, &bv);
            let e = crate::scalar::cross3(&uv, &bv);
            for k in 0..3 {
                lorentz[k][i] = a[k] + c[k];
                emf[k][i] = e[k];
            }
            let su = crate::scalar::dot3(&uv, &uv);
            let sb = crate::scalar::dot3(&bv, &bv);
            max_sq = max_sq.max(su).max(sb);
        }
        let fft = ops.fft();
        let mut du = SpectralVector {
            grid: *ops.grid(),
            comps: std::array::from_fn(|k| fft.forward(&lorentz[k])),
        };
        let mut e_hat = SpectralVector {
            grid: *ops.grid(),
            comps: std::array::from_fn(|k| fft.forward(&emf[k])),
        };
        du.scale_by(&self.mask);
        e_hat.scale_by(&self.mask);
        ops.enforce_hermitian_vec(&mut du);
        ops.enforce_hermitian_vec(&mut e_hat);
        ops.project_hat(&mut du);
        let db = ops.curl_hat(&e_hat);
        Rhs { du, db, max_speed: max_sq.sqrt() }
    }

    /// Advances one RK4 step; rejects the step when the CFL bound is violated.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        let half = dt * T::lit(0.5);
        let k1 = self.rhs(&self.u_hat, &self.b_hat);
        let adm = admissible_dt(self.ops.grid(), k1.max_speed);
        if dt > adm {
            return Err(Error::CflViolation {
                step: self.steps_taken,
                dt: dt.as_f64(),
                admissible: adm.as_f64(),
            });
        }

        let ef = |v: &SpectralVector<T>, f: &[T]| {
            let mut out = v.clone();
            out.scale_by(f);
            out
        };
        // stage 2: E (y + dt/2 k1)
        let u2 = ef(&self.u_hat.axpy(half, &k1.du), &self.eu_half);
        let b2 = ef(&self.b_hat.axpy(half, &k1.db), &self.eb_half);
        let k2 = self.rhs(&u2, &b2);
        // stage 3: E y + dt/2 k2
        let ue = ef(&self.u_hat, &self.eu_half);
        let be = ef(&self.b_hat, &self.eb_half);
        let u3 = ue.axpy(half, &k2.du);
        let b3 = be.axpy(half, &k2.db);
        let k3 = self.rhs(&u3, &b3);
        // stage 4: E^2 y + dt E k3
        let u4 = ef(&self.u_hat, &self.eu_full).axpy(dt, &ef(&k3.du, &self.eu_half));
        let b4 = ef(&self.b_hat, &self.eb_full).axpy(dt, &ef(&k3.db, &self.eb_half));
        let k4 = self.rhs(&u4, &b4);

        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        let combine = |y: &SpectralVector<T>,
                       k1: &SpectralVector<T>,
                       k2: &SpectralVector<T>,
                       k3: &SpectralVector<T>,
                       k4: &SpectralVector<T>,
                       e_half: &[T],
                       e_full: &[T]| {
            let mut out = y.clone();
            for c in 0..3 {
                for s in 0..out.comps[c].len() {
                    let acc: Complex<T> = k1.comps[c][s] * e_full[s]
                        + (k2.comps[c][s] + k3.comps[c][s]) * (two * e_half[s])
                        + k4.comps[c][s];
                    out.comps[c][s] = y.comps[c][s] * e_full[s] + acc * sixth;
                }
            }
            out
        };
        let u_new = combine(&self.u_hat, &k1.du, &k2.du, &k3.du, &k4.du, &self.eu_half, &self.eu_full);
        let b_new = combine(&self.b_hat, &k1.db, &k2.db, &k3.db, &k4.db, &self.eb_half, &self.eb_full);
        self.u_hat = u_new;
        self.b_hat = b_new;
        self.steps_taken += 1;

        let e = self.energy();
        if !e.is_finite() {
            return Err(Error::Diverged { step: self.steps_taken, time: self.time().as_f64() });
        }
        Ok(())
    }
}

/// `C_cfl · h / max(|u|, |b|)`; infinite for a quiescent state.
pub fn admissible_dt<T: Real>(grid: &GridSpec<T>, max_speed: T) -> T {
    if max_speed > T::zero() {
        T::lit(CFL_NUMBER) * grid.spacing() / max_speed
    } else {
        T::infinity()
    }
}

/// One RK4 step from `state`.
pub fn step<T: Real>(state: &MhdState<T>, cfg: &SolverConfig<T>) -> Result<MhdState<T>> {
    let mut integ = Integrator::new(state, *cfg)?;
    integ.step()?;
    Ok(integ.state())
}

/// Integrates to `t_end`, handing every `snapshot_stride`-th state (including
/// the initial one) to `sink`.
pub fn run_with<T: Real>(
    init: &MhdState<T>,
    cfg: &SolverConfig<T>,
    mut sink: impl FnMut(MhdState<T>) -> Result<()>,
) -> Result<RunReport> {
    let mut integ = Integrator::new(init, *cfg)?;
    let n_steps = cfg.n_steps();
    let mut report = RunReport { cfl_number: CFL_NUMBER, ..Default::default() };

    let mut d_prev = integ.dissipation_rate();
    let mut dissipated = T::zero();
    let mut e_last = integ.energy();
    let mut emit = |integ: &Integrator<T>, report: &mut RunReport, dissipated: &mut T| -> Result<()> {
        let e = integ.energy();
        if !report.times.is_empty() {
            let de = e - e_last;
            let denom = dissipated.abs();
            let res = if denom > T::zero() {
                ((de + *dissipated).abs() / denom).as_f64()
            } else {
                (de + *dissipated).abs().as_f64()
            };
            report.energy_residuals.push(res);
            report.max_energy_residual = report.max_energy_residual.max(res);
        }
        report.times.push(integ.time().as_f64());
        report.energy.push(e.as_f64());
        report.dissipation_rate.push(integ.dissipation_rate().as_f64());
        e_last = e;
        *dissipated = T::zero();
        sink(integ.state())
    };

    emit(&integ, &mut report, &mut dissipated)?;
    for n in 1..=n_steps {
        integ.step()?;
        let d = integ.dissipation_rate();
        dissipated = dissipated + (d_prev + d) * cfg.dt * T::lit(0.5);
        d_prev = d;
        if n % cfg.snapshot_stride == 0 {
            emit(&integ, &mut report, &mut dissipated)?;
        }
    }
    report.steps = n_steps;
    Ok(report)
}

/// Integrates to `t_end` and collects the emitted snapshots.
pub fn run<T: Real>(
    init: &MhdState<T>,
    cfg: &SolverConfig<T>,
) -> Result<(SnapshotSeries<T>, RunReport)> {
    let mut states = Vec::new();
    let report = run_with(init, cfg, |s| {
        states.push(s);
        Ok(())
    })?;
    let series = SnapshotSeries::new(cfg.viscosity, cfg.resistivity, states)?;
    Ok((series, report))
}

#[cfg(test)]
mod tests;
