use super::*;
use crate::grid::{integrate, ScalarField};

fn cfg(nu: f64, eta: f64, dt: f64, t_end: f64) -> SolverConfig<f64> {
    SolverConfig {
        viscosity: nu,
        resistivity: eta,
        dt,
        t_end,
        snapshot_stride: 1,
        dealias_fraction: 2.0 / 3.0,
    }
}

fn max_diff(a: &VectorField<f64>, b: &VectorField<f64>) -> f64 {
    a.sub(b).unwrap().max_abs()
}

fn rel_div(ops: &SpectralOps<f64>, f: &VectorField<f64>) -> f64 {
    let d = ops.divergence(f).max_abs();
    let scale = f.max_abs().max(f64::MIN_POSITIVE) / ops.grid().spacing();
    d / scale
}

#[test]
fn zero_state_is_fixed_point() {
    let g = GridSpec::periodic_2pi(16).unwrap();
    let s = MhdState::zeros(g);
    let (series, report) = run(&s, &cfg(1.0, 1.0, 0.01, 0.05)).unwrap();
    assert_eq!(series.len(), 6);
    for st in &series.states {
        assert_eq!(st.u.max_abs(), 0.0);
        assert_eq!(st.b.max_abs(), 0.0);
    }
    assert!(report.energy.iter().all(|&e| e == 0.0));
}

#[test]
fn single_mode_decays_viscously() {
    let g: GridSpec<f64> = GridSpec::periodic_2pi(16).unwrap();
    let nu = 0.3;
    let dt = 0.01;
    let u = VectorField::from_fn(g, |p| [0.0, 0.7 * (2.0 * p[0]).sin(), 0.0]);
    let mut integ = Integrator::new(&MhdState::new(u.clone(), VectorField::zeros(g), 0.0).unwrap(), cfg(nu, nu, dt, 1.0)).unwrap();
    let mut prev = f64::INFINITY;
    for step in 1..=20 {
        integ.step().unwrap();
        let exact = u.scaled((-nu * 4.0 * dt * step as f64).exp());
        let err = max_diff(&integ.state().u, &exact) / exact.max_abs();
        assert!(err < 1e-8 * step as f64, "step {step}: {err}");
        let amp = integ.state().u.max_abs();
        assert!(amp < prev);
        prev = amp;
    }
}

#[test]
fn alfvenic_state_stays_aligned() {
    // with b = ±u both nonlinear terms vanish identically, so z = u ± b obeys
    // the heat equation and the other Elsasser variable stays zero
    let g = GridSpec::periodic_2pi(16).unwrap();
    let nu = 0.05;
    let dt = 0.01;
    let f = init_random_solenoidal(g, -5.0 / 3.0, 7).u;
    let ops = SpectralOps::new(g);
    for sign in [1.0, -1.0] {
        let st = MhdState::new(f.clone(), f.scaled(sign), 0.0).unwrap();
        let mut integ = Integrator::new(&st, cfg(nu, nu, dt, 1.0)).unwrap();
        for _ in 0..10 {
            integ.step().unwrap();
        }
        let out = integ.state();
        let z = out.u.sub(&out.b.scaled(sign)).unwrap();
        assert!(z.max_abs() < 1e-10 * out.u.max_abs(), "{}", z.max_abs());

        let mut heat = ops.forward(&f);
        let decay: Vec<f64> = (0..ops.spectral_len()).map(|s| (-nu * ops.k_sq(s) * 10.0 * dt).exp()).collect();
        heat.scale_by(&decay);
        let exact = ops.inverse(&heat);
        assert!(max_diff(&out.u, &exact) < 1e-10 * exact.max_abs());
    }
}

#[test]
fn orszag_tang_is_solenoidal_and_linear() {
    let g = GridSpec::periodic_2pi(16).unwrap();
    let ops = SpectralOps::new(g);
    let a = init_orszag_tang_3d(g, 1.0);
    let b = init_orszag_tang_3d(g, 2.0);
    assert!(rel_div(&ops, &a.u) < 1e-10);
    assert!(rel_div(&ops, &a.b) < 1e-10);
    assert_eq!(a.u.scaled(2.0), b.u);
    assert_eq!(a.b.scaled(2.0), b.b);
    let z = init_orszag_tang_3d(g, 0.0);
    assert_eq!(z.u.max_abs(), 0.0);
    assert_eq!(z.b.max_abs(), 0.0);
}

#[test]
fn random_init_is_reproducible_and_solenoidal() {
    let g = GridSpec::periodic_2pi(16).unwrap();
    let ops = SpectralOps::new(g);
    let a = init_random_solenoidal(g, -2.0, 42);
    let b = init_random_solenoidal(g, -2.0, 42);
    let c = init_random_solenoidal(g, -2.0, 43);
    assert_eq!(a, b);
    assert_ne!(a.u, c.u);
    assert_ne!(a.u, a.b);
    assert!(rel_div(&ops, &a.u) < 1e-10);
    assert!(rel_div(&ops, &a.b) < 1e-10);
    let ms = a.u.l2_norm_sq() / g.volume();
    assert!((ms - 1.0).abs() < 1e-10);
}

#[test]
fn random_init_follows_slope() {
    // shell sums from a plain 3D DFT of the physical field
    let n = 16;
    let g = GridSpec::periodic_2pi(n).unwrap();
    let slope = -5.0 / 3.0;
    let st = init_random_solenoidal(g, slope, 3);
    let kmax = init::max_resolved_shell(n);
    let fft = crate::grid::Fft3::new(n);
    let nh = n / 2 + 1;
    let mut shells = vec![0.0; kmax + 1];
    for c in 0..3 {
        let hat = fft.forward(st.u.component(c));
        for (s, z) in hat.iter().enumerate() {
            let kx = s % nh;
            let ky = (s / nh) % n;
            let kz = s / (nh * n);
            let w = |k: usize| if k > n / 2 { k as i64 - n as i64 } else { k as i64 };
            let m = [kx as i64, w(ky), w(kz)];
            let r = ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt().round() as usize;
            let wt = if kx == 0 || kx == n / 2 { 1.0 } else { 2.0 };
            if r <= kmax {
                shells[r] += 0.5 * wt * z.norm_sqr();
            }
        }
    }
    let c0 = shells[1];
    for k in 1..=kmax {
        let expect = c0 * (k as f64).powf(slope);
        assert!((shells[k] / expect - 1.0).abs() < 0.1, "shell {k}: {} vs {}", shells[k], expect);
    }
}

#[test]
fn ideal_limit_conserves_energy() {
    let g = GridSpec::periodic_2pi(16).unwrap();
    let st = init_orszag_tang_3d(g, 0.5);
    let mut integ = Integrator::new(&st, cfg(0.0, 0.0, 1e-3, 1.0)).unwrap();
    let e0 = integ.energy();
    for _ in 0..5 {
        integ.step().unwrap();
    }
    let drift = (integ.energy() - e0).abs() / e0;
    assert!(drift < 1e-6, "{drift}");
}

#[test]
fn gradient_and_vorticity_norms_agree() {
    let g = GridSpec::periodic_2pi(16).unwrap();
    let ops = SpectralOps::new(g);
    let st = init_random_solenoidal(g, -1.0, 11);
    let grad_sq = |f: &VectorField<f64>| -> f64 {
        let t = ops.gradient_tensor(f);
        let s = ScalarField::from_fn(g, |_| 0.0);
        let mut vals = s.into_values();
        for row in &t {
            for col in row {
                for (v, x) in vals.iter_mut().zip(col) {
                    *v += x * x;
                }
            }
        }
        integrate(&ScalarField::new(g, vals).unwrap())
    };
    let lhs = grad_sq(&st.u) + grad_sq(&st.b);
    let rhs = ops.curl(&st.u).l2_norm_sq() + ops.curl(&st.b).l2_norm_sq();
    assert!((lhs - rhs).abs() < 1e-10 * rhs);
}

#[test]
fn cfl_violation_reports_admissible_step() {
    let g = GridSpec::periodic_2pi(16).unwrap();
    let st = init_orszag_tang_3d(g, 10.0);
    let err = step(&st, &cfg(1.0, 1.0, 0.5, 1.0)).unwrap_err();
    match err {
        Error::CflViolation { step, dt, admissible } => {
            assert_eq!(step, 0);
            assert_eq!(dt, 0.5);
            assert!(admissible < dt);
            let h = g.spacing();
            let vmax = st.u.max_norm().max(st.b.max_norm());
            assert!((admissible - 0.5 * h / vmax).abs() < 1e-12);
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn orszag_tang_energy_is_dissipated() {
    let g = GridSpec::periodic_2pi(16).unwrap();
    let st = init_orszag_tang_3d(g, 0.5);
    let mut c = cfg(0.05, 0.05, 0.005, 0.1);
    c.snapshot_stride = 2;
    let (series, report) = run(&st, &c).unwrap();
    assert_eq!(series.len(), 11);
    series.validate().unwrap();
    for w in report.energy.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(report.max_energy_residual < 1e-2, "{}", report.max_energy_residual);
    let ops = SpectralOps::new(g);
    for s in &series.states {
        assert!(rel_div(&ops, &s.u) < 1e-10);
        assert!(rel_div(&ops, &s.b) < 1e-10);
    }
}

#[test]
fn time_refinement_is_fourth_order() {
    let g = GridSpec::periodic_2pi(16).unwrap();
    let st = init_orszag_tang_3d(g, 0.5);
    let terminal = |dt: f64| {
        let mut integ = Integrator::new(&st, cfg(0.05, 0.05, dt, 0.4)).unwrap();
        for _ in 0..(0.4 / dt).round() as usize {
            integ.step().unwrap();
        }
        integ.state()
    };
    let r = terminal(0.0125);
    let e1 = max_diff(&terminal(0.05).u, &r.u);
    let e2 = max_diff(&terminal(0.025).u, &r.u);
    let ratio = e1 / e2;
    assert!((12.0..=20.0).contains(&ratio), "{ratio}");
}

#[test]
fn rejects_bad_config_and_series() {
    let mut c = cfg(1.0, 1.0, 0.01, 0.1);
    c.dt = 0.0;
    assert!(c.validate().is_err());
    let mut c = cfg(1.0, 1.0, 0.01, 0.1);
    c.dealias_fraction = 1.5;
    assert!(c.validate().is_err());
    let g = GridSpec::periodic_2pi(8).unwrap();
    let mk = |t| MhdState { time: t, ..MhdState::zeros(g) };
    assert!(SnapshotSeries::new(1.0, 1.0, vec![mk(0.0), mk(0.1), mk(0.3)]).is_err());
    assert!(SnapshotSeries::new(1.0, 1.0, vec![mk(0.0), mk(0.0)]).is_err());
    assert!(SnapshotSeries::new(1.0, 1.0, vec![mk(0.0), mk(0.1), mk(0.2)]).is_ok());
}
