//! Localized enstrophy fluxes and the full kinetic/magnetic budget.
//!
//! All quantities are raw integrals (no `1/T` or `1/R^3` prefactors). Field
//! derivatives are spectral; cutoff derivatives come from the closed forms in
//! [`crate::cutoffs`]. Time integrals use the composite trapezoid rule over
//! the snapshots with the temporal cutoff evaluated at `t − t_first`.

use serde::{Deserialize, Serialize};

use crate::cutoffs::{Cutoff, Jet};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, SpectralOps, VectorField};
use crate::scalar::{cross3, Real};
use crate::solver::{check_uniform_times, MhdState, SnapshotSource};

/// Minimum number of snapshots inside `[T/3, T]` for the budget.
pub const MIN_ACTIVE_SNAPSHOTS: usize = 30;

/// A space-time weight `φ = η(t) ψ(x)` with closed-form spatial derivatives.
pub trait SpaceTimeWeight {
    fn jet<T: Real>(&self, x: [T; 3]) -> Jet<T>;
    /// `(η, η')` at local time `t`.
    fn eta<T: Real>(&self, t: T) -> (T, T);
    fn horizon(&self) -> f64;
    fn support_box(&self) -> ([f64; 3], [f64; 3]);
}

impl SpaceTimeWeight for Cutoff {
    fn jet<T: Real>(&self, x: [T; 3]) -> Jet<T> {
        Cutoff::jet(self, x)
    }

    fn eta<T: Real>(&self, t: T) -> (T, T) {
        Cutoff::eta(self, t)
    }

    fn horizon(&self) -> f64 {
        self.temporal.horizon
    }

    fn support_box(&self) -> ([f64; 3], [f64; 3]) {
        Cutoff::support_box(self)
    }
}

/// `ψ`, `∇ψ` and `Δψ` at the grid nodes where `ψ > 0`.
#[derive(Debug, Clone)]
pub struct Stencil<T> {
    pub nodes: Vec<usize>,
    pub psi: Vec<T>,
    pub grad: Vec<[T; 3]>,
    pub lap: Vec<T>,
    cell: T,
}

impl<T: Real> Stencil<T> {
    /// Samples `w` on `grid`; the support must fit inside the box.
    pub fn new<W: SpaceTimeWeight>(w: &W, grid: &GridSpec<T>) -> Result<Self> {
        let (lo, hi) = w.support_box();
        let half = grid.box_length().as_f64() / 2.0;
        if lo.iter().any(|&v| v < -half) || hi.iter().any(|&v| v >= half) {
            return Err(Error::Precondition(format!(
                "cutoff support [{lo:?}, {hi:?}] leaves the periodic box"
            )));
        }
        let ranges: [_; 3] = std::array::from_fn(|d| grid.node_range(T::lit(lo[d]), T::lit(hi[d])));
        let mut s = Self { nodes: Vec::new(), psi: Vec::new(), grad: Vec::new(), lap: Vec::new(), cell: grid.cell_volume() };
        for k in ranges[2].clone() {
            for j in ranges[1].clone() {
                for i in ranges[0].clone() {
                    let x = [grid.coord(i), grid.coord(j), grid.coord(k)];
                    let jet = w.jet(x);
                    if jet.v > T::zero() {
                        s.nodes.push(grid.index(i, j, k));
                        s.psi.push(jet.v);
                        s.grad.push(jet.g);
                        s.lap.push(jet.laplacian());
                    }
                }
            }
        }
        Ok(s)
    }

    /// Volume of one grid cell.
    pub fn cell(&self) -> T {
        self.cell
    }

    /// `∫ f w` with `w` given per stencil node.
    pub fn integrate_with(&self, f: &[T], w: &[T]) -> T {
        self.nodes.iter().zip(w).map(|(&n, &p)| f[n] * p).sum::<T>() * self.cell
    }

    /// `ψ^p` at every stencil node.
    pub fn powered(&self, p: T) -> Vec<T> {
        self.psi.iter().map(|w| w.powf(p)).collect()
    }

    /// `∫ f ψ`.
    pub fn integrate(&self, f: &[T]) -> T {
        self.nodes.iter().zip(&self.psi).map(|(&n, &p)| f[n] * p).sum::<T>() * self.cell
    }

    /// `∫ f Δψ`.
    pub fn integrate_lap(&self, f: &[T]) -> T {
        self.nodes.iter().zip(&self.lap).map(|(&n, &l)| f[n] * l).sum::<T>() * self.cell
    }

    /// `∫ e (u · ∇ψ)`.
    pub fn flux(&self, e: &[T], u: &VectorField<T>) -> T {
        let [u1, u2, u3] = u.components();
        self.nodes
            .iter()
            .zip(&self.grad)
            .map(|(&n, g)| e[n] * (u1[n] * g[0] + u2[n] * g[1] + u3[n] * g[2]))
            .sum::<T>()
            * self.cell
    }
}

fn half_sq<T: Real>(f: &VectorField<T>) -> Vec<T> {
    f.norm_sq().into_values().into_iter().map(|v| v * T::lit(0.5)).collect()
}

/// `∫ ½|ω|² (u · ∇φ)` at time `t` (local to the cutoff's horizon).
pub fn local_flux_kinetic<T: Real, W: SpaceTimeWeight>(
    u: &VectorField<T>,
    omega: &VectorField<T>,
    cutoff: &W,
    t: T,
) -> Result<T> {
    u.grid().check_same(omega.grid())?;
    let st = Stencil::new(cutoff, u.grid())?;
    Ok(cutoff.eta(t).0 * st.flux(&half_sq(omega), u))
}

/// `∫ ½|j|² (u · ∇φ)` at time `t`.
pub fn local_flux_magnetic<T: Real, W: SpaceTimeWeight>(
    u: &VectorField<T>,
    j: &VectorField<T>,
    cutoff: &W,
    t: T,
) -> Result<T> {
    local_flux_kinetic(u, j, cutoff, t)
}

/// `Φ^ω + Φ^j`.
pub fn combined_flux<T: Real, W: SpaceTimeWeight>(
    u: &VectorField<T>,
    omega: &VectorField<T>,
    j: &VectorField<T>,
    cutoff: &W,
    t: T,
) -> Result<T> {
    Ok(local_flux_kinetic(u, omega, cutoff, t)? + local_flux_magnetic(u, j, cutoff, t)?)
}

/// Pointwise densities of every budget term for one snapshot.
pub struct BudgetDensities<T> {
    pub u: VectorField<T>,
    pub e_omega: Vec<T>,
    pub e_j: Vec<T>,
    pub grad_omega_sq: Vec<T>,
    pub grad_j_sq: Vec<T>,
    /// `(ω·∇)u·ω`
    pub stretch_omega: Vec<T>,
    /// `(b·∇)j·ω`
    pub transport_omega: Vec<T>,
    /// `(j·∇)b·ω`
    pub twist_omega: Vec<T>,
    /// `(ω·∇)b·j`
    pub stretch_j: Vec<T>,
    /// `(b·∇)ω·j`
    pub transport_j: Vec<T>,
    /// `(j·∇)u·j`
    pub twist_j: Vec<T>,
    /// `2 Σ_l (∇u_l × ∇b_l)·j`
    pub cross: Vec<T>,
}

fn directional<T: Real>(a: [T; 3], g: &[[Vec<T>; 3]; 3], c: [T; 3], n: usize) -> T {
    // (a·∇)f·c with g[i][k] = ∂_k f_i
    let mut s = T::zero();
    for i in 0..3 {
        for k in 0..3 {
            s = s + c[i] * a[k] * g[i][k][n];
        }
    }
    s
}

impl<T: Real> BudgetDensities<T> {
    pub fn new(state: &MhdState<T>, ops: &SpectralOps<T>) -> Self {
        let u_hat = ops.forward(&state.u);
        let b_hat = ops.forward(&state.b);
        let w_hat = ops.curl_hat(&u_hat);
        let j_hat = ops.curl_hat(&b_hat);
        let w = ops.inverse(&w_hat);
        let j = ops.inverse(&j_hat);
        let gu = ops.gradient_tensor_hat(&u_hat);
        let gb = ops.gradient_tensor_hat(&b_hat);
        let gw = ops.gradient_tensor_hat(&w_hat);
        let gj = ops.gradient_tensor_hat(&j_hat);
        let len = state.u.grid().len();
        let sq = |g: &[[Vec<T>; 3]; 3], n: usize| -> T {
            g.iter().flatten().map(|c| c[n] * c[n]).sum()
        };
        let mut d = Self {
            u: state.u.clone(),
            e_omega: half_sq(&w),
            e_j: half_sq(&j),
            grad_omega_sq: vec![T::zero(); len],
            grad_j_sq: vec![T::zero(); len],
            stretch_omega: vec![T::zero(); len],
            transport_omega: vec![T::zero(); len],
            twist_omega: vec![T::zero(); len],
            stretch_j: vec![T::zero(); len],
            transport_j: vec![T::zero(); len],
            twist_j: vec![T::zero(); len],
            cross: vec![T::zero(); len],
        };
        let two = T::lit(2.0);
        for n in 0..len {
            let (wv, jv, bv) = (w.at(n), j.at(n), state.b.at(n));
            d.grad_omega_sq[n] = sq(&gw, n);
            d.grad_j_sq[n] = sq(&gj, n);
            d.stretch_omega[n] = directional(wv, &gu, wv, n);
            d.transport_omega[n] = directional(bv, &gj, wv, n);
            d.twist_omega[n] = directional(jv, &gb, wv, n);
            d.stretch_j[n] = directional(wv, &gb, jv, n);
            d.transport_j[n] = directional(bv, &gw, jv, n);
            d.twist_j[n] = directional(jv, &gu, jv, n);
            let mut c = [T::zero(); 3];
            for l in 0..3 {
                let x = cross3(
                    &[gu[l][0][n], gu[l][1][n], gu[l][2][n]],
                    &[gb[l][0][n], gb[l][1][n], gb[l][2][n]],
                );
                for i in 0..3 {
                    c[i] = c[i] + x[i];
                }
            }
            d.cross[n] = two * (c[0] * jv[0] + c[1] * jv[1] + c[2] * jv[2]);
        }
        d
    }
}

/// Budget integrands at one snapshot (already multiplied by `η`, `η'`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetSample {
    pub time: f64,
    pub flux_kinetic: f64,
    pub flux_magnetic: f64,
    pub dissipation_kinetic: f64,
    pub dissipation_magnetic: f64,
    pub h_omega: f64,
    pub h_j: f64,
    pub n1_omega: f64,
    pub l_omega: f64,
    pub n2_omega: f64,
    pub n1_j: f64,
    pub l_j: f64,
    pub n2_j: f64,
    pub x: f64,
    /// `∫ ½|ω|² ψ` without the temporal factor.
    pub enstrophy_kinetic: f64,
    pub enstrophy_magnetic: f64,
}

impl BudgetSample {
    pub fn new<T: Real>(
        d: &BudgetDensities<T>,
        st: &Stencil<T>,
        eta: (T, T),
        viscosity: T,
        resistivity: T,
        time: T,
    ) -> Self {
        let (e, de) = eta;
        let f = |v: T| v.as_f64();
        let h = |dens: &[T], diff: T| -> T {
            -(de * st.integrate(dens) + diff * e * st.integrate_lap(dens))
        };
        Self {
            time: f(time),
            flux_kinetic: f(e * st.flux(&d.e_omega, &d.u)),
            flux_magnetic: f(e * st.flux(&d.e_j, &d.u)),
            dissipation_kinetic: f(e * st.integrate(&d.grad_omega_sq)),
            dissipation_magnetic: f(e * st.integrate(&d.grad_j_sq)),
            h_omega: f(h(&d.e_omega, viscosity)),
            h_j: f(h(&d.e_j, resistivity)),
            n1_omega: f(-e * st.integrate(&d.stretch_omega)),
            l_omega: f(-e * st.integrate(&d.transport_omega)),
            n2_omega: f(e * st.integrate(&d.twist_omega)),
            n1_j: f(e * st.integrate(&d.stretch_j)),
            l_j: f(-e * st.integrate(&d.transport_j)),
            n2_j: f(-e * st.integrate(&d.twist_j)),
            x: f(e * st.integrate(&d.cross)),
            enstrophy_kinetic: f(st.integrate(&d.e_omega)),
            enstrophy_magnetic: f(st.integrate(&d.e_j)),
        }
    }
}

/// Every term of the kinetic and magnetic budgets over `(0, T)`.
///
/// Kinetic: `F^ω = ∫½|ω(T)|²ψ + ν∫∫|∇ω|²φ + H^ω + N₁^ω + L^ω + N₂^ω`.
/// Magnetic: `F^j = ∫½|j(T)|²ψ + η∫∫|∇j|²φ + H^j + N₁^j + L^j + N₂^j + X`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FluxBudget {
    pub viscosity: f64,
    pub resistivity: f64,
    pub flux_kinetic: f64,
    pub flux_magnetic: f64,
    pub endpoint_enstrophy_kinetic: f64,
    pub endpoint_enstrophy_magnetic: f64,
    /// `∫∫ |∇ω|² φ` (not yet multiplied by the viscosity).
    pub dissipation_kinetic: f64,
    pub dissipation_magnetic: f64,
    #[serde(rename = "H_omega")]
    pub h_omega: f64,
    #[serde(rename = "H_j")]
    pub h_j: f64,
    #[serde(rename = "N1_omega")]
    pub n1_omega: f64,
    #[serde(rename = "N2_omega")]
    pub n2_omega: f64,
    #[serde(rename = "N1_j")]
    pub n1_j: f64,
    #[serde(rename = "N2_j")]
    pub n2_j: f64,
    #[serde(rename = "L_omega")]
    pub l_omega: f64,
    #[serde(rename = "L_j")]
    pub l_j: f64,
    #[serde(rename = "X")]
    pub x: f64,
    pub closure_residual_kinetic: f64,
    pub closure_residual_magnetic: f64,
}

impl FluxBudget {
    /// Trapezoid integration of every `stride`-th sample (the last sample
    /// must be included, so `len − 1` has to be divisible by `stride`).
    pub fn from_samples(samples: &[BudgetSample], viscosity: f64, resistivity: f64, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        if samples.is_empty() || (samples.len() - 1) % stride != 0 {
            return Err(Error::Precondition("sample count incompatible with stride".into()));
        }
        let picked: Vec<&BudgetSample> = samples.iter().step_by(stride).collect();
        let dt = if picked.len() > 1 { picked[1].time - picked[0].time } else { 0.0 };
        let trap = |g: &dyn Fn(&BudgetSample) -> f64| -> f64 {
            let n = picked.len();
            if n < 2 {
                return 0.0;
            }
            let inner: f64 = picked.iter().map(|s| g(s)).sum();
            dt * (inner - 0.5 * (g(picked[0]) + g(picked[n - 1])))
        };
        let last = picked[picked.len() - 1];
        let mut b = FluxBudget {
            viscosity,
            resistivity,
            flux_kinetic: trap(&|s| s.flux_kinetic),
            flux_magnetic: trap(&|s| s.flux_magnetic),
            endpoint_enstrophy_kinetic: last.enstrophy_kinetic,
            endpoint_enstrophy_magnetic: last.enstrophy_magnetic,
            dissipation_kinetic: trap(&|s| s.dissipation_kinetic),
            dissipation_magnetic: trap(&|s| s.dissipation_magnetic),
            h_omega: trap(&|s| s.h_omega),
            h_j: trap(&|s| s.h_j),
            n1_omega: trap(&|s| s.n1_omega),
            n2_omega: trap(&|s| s.n2_omega),
            n1_j: trap(&|s| s.n1_j),
            n2_j: trap(&|s| s.n2_j),
            l_omega: trap(&|s| s.l_omega),
            l_j: trap(&|s| s.l_j),
            x: trap(&|s| s.x),
            closure_residual_kinetic: 0.0,
            closure_residual_magnetic: 0.0,
        };
        b.closure_residual_kinetic = closure(b.flux_kinetic, &b.rhs_terms_kinetic());
        b.closure_residual_magnetic = closure(b.flux_magnetic, &b.rhs_terms_magnetic());
        Ok(b)
    }

    pub fn rhs_terms_kinetic(&self) -> [f64; 6] {
        [
            self.endpoint_enstrophy_kinetic,
            self.viscosity * self.dissipation_kinetic,
            self.h_omega,
            self.n1_omega,
            self.l_omega,
            self.n2_omega,
        ]
    }

    pub fn rhs_terms_magnetic(&self) -> [f64; 7] {
        [
            self.endpoint_enstrophy_magnetic,
            self.resistivity * self.dissipation_magnetic,
            self.h_j,
            self.n1_j,
            self.l_j,
            self.n2_j,
            self.x,
        ]
    }

    /// Signed `F^ω − Σ RHS`.
    pub fn closure_defect_kinetic(&self) -> f64 {
        self.flux_kinetic - self.rhs_terms_kinetic().iter().sum::<f64>()
    }

    /// Signed `F^j − Σ RHS`.
    pub fn closure_defect_magnetic(&self) -> f64 {
        self.flux_magnetic - self.rhs_terms_magnetic().iter().sum::<f64>()
    }

    /// `F = F^ω + F^j`.
    pub fn combined_flux(&self) -> f64 {
        self.flux_kinetic + self.flux_magnetic
    }
}

/// `|lhs − Σ terms| / max |term|`; zero when every term vanishes.
fn closure(lhs: f64, terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale > 0.0 {
        (lhs - sum).abs() / scale
    } else {
        (lhs - sum).abs()
    }
}

/// Local times `t − t_first` after checking the series spans the horizon
/// with uniform spacing and enough snapshots in `[T/3, T]`.
pub fn local_times<T: Real>(times: &[T], horizon: f64, min_active: usize) -> Result<Vec<f64>> {
    if times.len() < 2 {
        return Err(Error::Precondition("need at least two snapshots".into()));
    }
    check_uniform_times(times)?;
    let t0 = times[0].as_f64();
    let local: Vec<f64> = times.iter().map(|t| t.as_f64() - t0).collect();
    let span = local[local.len() - 1];
    if (span - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(Error::Precondition(format!(
            "snapshots span {span} but the cutoff horizon is {horizon}"
        )));
    }
    let active = local.iter().filter(|&&s| s >= horizon / 3.0 - 1e-12 * horizon).count();
    if active < min_active {
        return Err(Error::Precondition(format!(
            "insufficient snapshot density: {active} snapshots in [T/3, T], need {min_active}"
        )));
    }
    Ok(local)
}

/// Per-snapshot budget integrands for several cutoffs in one pass.
pub fn budget_samples<T: Real, W: SpaceTimeWeight>(
    source: &dyn SnapshotSource<T>,
    cutoffs: &[W],
) -> Result<Vec<Vec<BudgetSample>>> {
    let mut out = vec![Vec::with_capacity(source.len()); cutoffs.len()];
    if cutoffs.is_empty() {
        return Ok(out);
    }
    let horizon = cutoffs[0].horizon();
    if cutoffs.iter().any(|c| (c.horizon() - horizon).abs() > 1e-12 * horizon) {
        return Err(Error::Precondition("cutoffs disagree on the time horizon".into()));
    }
    let local = local_times(&source.times(), horizon, MIN_ACTIVE_SNAPSHOTS)?;
    let first = source.load(0)?;
    let grid = *first.grid();
    drop(first);
    let ops = SpectralOps::new(grid);
    let stencils: Vec<Stencil<T>> = cutoffs.iter().map(|c| Stencil::new(c, &grid)).collect::<Result<_>>()?;
    let (nu, eta_m) = (source.viscosity(), source.resistivity());
    for (k, &s) in local.iter().enumerate() {
        let state = source.load(k)?;
        grid.check_same(state.grid())?;
        let d = BudgetDensities::new(&state, &ops);
        for (i, c) in cutoffs.iter().enumerate() {
            let eta = c.eta(T::lit(s));
            out[i].push(BudgetSample::new(&d, &stencils[i], eta, nu, eta_m, T::lit(s)));
        }
    }
    Ok(out)
}

/// Every (E1)/(E2)-type budget term for one cutoff.
pub fn budget_terms<T: Real, W: SpaceTimeWeight>(
    source: &dyn SnapshotSource<T>,
    cutoff: &W,
) -> Result<FluxBudget> {
    let samples = budget_samples(source, std::slice::from_ref(cutoff))?;
    FluxBudget::from_samples(&samples[0], source.viscosity().as_f64(), source.resistivity().as_f64(), 1)
}

/// Flux densities `u` and `½(|ω|² + |j|²)` for one snapshot.
pub struct FluxDensities<T> {
    pub u: VectorField<T>,
    pub e_omega: Vec<T>,
    pub e_j: Vec<T>,
}

impl<T: Real> FluxDensities<T> {
    pub fn new(state: &MhdState<T>, ops: &SpectralOps<T>) -> Self {
        let w = ops.curl(&state.u);
        let j = ops.curl(&state.b);
        Self { u: state.u.clone(), e_omega: half_sq(&w), e_j: half_sq(&j) }
    }

    pub fn combined(&self) -> Vec<T> {
        self.e_omega.iter().zip(&self.e_j).map(|(a, b)| *a + *b).collect()
    }
}

/// Trapezoid weights `dt (½, 1, …, 1, ½)` for uniformly spaced local times.
pub fn trapezoid_weights(local: &[f64]) -> Vec<f64> {
    let n = local.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let dt = local[1] - local[0];
    (0..n).map(|k| if k == 0 || k == n - 1 { 0.5 * dt } else { dt }).collect()
}

/// `Ψ = (1/T) ∫₀ᵀ ∫ ½(|ω|² + |j|²)(u · ∇φ)` for several cutoffs in one pass.
pub fn time_averaged_fluxes<T: Real, W: SpaceTimeWeight>(
    source: &dyn SnapshotSource<T>,
    cutoffs: &[W],
    min_active: usize,
) -> Result<Vec<f64>> {
    if cutoffs.is_empty() {
        return Ok(Vec::new());
    }
    let horizon = cutoffs[0].horizon();
    let local = local_times(&source.times(), horizon, min_active)?;
    let weights = trapezoid_weights(&local);
    let grid = *source.load(0)?.grid();
    let ops = SpectralOps::new(grid);
    let stencils: Vec<Stencil<T>> = cutoffs.iter().map(|c| Stencil::new(c, &grid)).collect::<Result<_>>()?;
    let mut acc = vec![0.0; cutoffs.len()];
    for (k, &s) in local.iter().enumerate() {
        let state = source.load(k)?;
        grid.check_same(state.grid())?;
        let d = FluxDensities::new(&state, &ops);
        let e = d.combined();
        for (i, c) in cutoffs.iter().enumerate() {
            let (eta, _) = c.eta(T::lit(s));
            if eta > T::zero() {
                acc[i] += weights[k] * (eta * stencils[i].flux(&e, &d.u)).as_f64();
            }
        }
    }
    Ok(acc.into_iter().map(|a| a / horizon).collect())
}

/// `Ψ` for one cutoff.
pub fn time_averaged_flux<T: Real, W: SpaceTimeWeight>(
    source: &dyn SnapshotSource<T>,
    cutoff: &W,
) -> Result<f64> {
    Ok(time_averaged_fluxes(source, std::slice::from_ref(cutoff), MIN_ACTIVE_SNAPSHOTS)?[0])
}
