use super::*;

const R0: f64 = std::f64::consts::PI / 4.0;

fn params() -> CutoffParams {
    CutoffParams::new(0.8, 0.8, 1.0).unwrap()
}

fn fd_check(c: &Cutoff, x: [f64; 3]) {
    let j = c.jet(x);
    let e = 1e-6 * c.r;
    for i in 0..3 {
        let (mut p, mut m) = (x, x);
        p[i] += e;
        m[i] -= e;
        let (jp, jm) = (c.jet(p), c.jet(m));
        let g = (jp.v - jm.v) / (2.0 * e);
        let scale = j.grad_norm().max(1e-3 / c.r);
        assert!((g - j.g[i]).abs() <= 1e-6 * scale, "grad {i} at {x:?}: {g} vs {}", j.g[i]);
        for k in 0..3 {
            let h = (jp.g[k] - jm.g[k]) / (2.0 * e);
            let hs = j.max_abs_hessian().max(1e-3 / (c.r * c.r));
            assert!((h - j.h[i][k]).abs() <= 1e-4 * hs, "hess {i}{k} at {x:?}: {h} vs {}", j.h[i][k]);
        }
    }
}

#[test]
fn params_validation_and_recorded_constant() {
    assert!(CutoffParams::new(0.75, 0.8, 1.0).is_err());
    assert!(CutoffParams::new(0.8, 1.0, 1.0).is_err());
    assert!(CutoffParams::new(0.8, 0.8, 0.0).is_err());
    let p = params();
    assert!(p.c0.is_finite() && p.c0 > 0.0);
    assert_eq!(p.profile().m, 10);
}

#[test]
fn interior_plateau_and_support() {
    let c = make_interior_cutoff([0.1, 0.0, -0.1], 0.2, R0, params()).unwrap();
    let j = c.jet([0.15, 0.05, -0.1]);
    assert_eq!(j.v, 1.0);
    assert_eq!(j.g, [0.0; 3]);
    assert_eq!(c.psi([0.1 + 0.4, 0.0, -0.1]), 0.0);
    assert_eq!(c.psi([0.6, 0.0, -0.1]), 0.0);
    assert!(make_interior_cutoff([1.0, 0.0, 0.0], 0.4, R0, params()).is_err());
}

#[test]
fn interior_bounds_hold_and_psi_below_integral() {
    for (center, r) in [([0.0; 3], R0 / 2.0), ([0.3, -0.2, 0.1], R0 / 4.0)] {
        let c = make_interior_cutoff(center, r, R0, params()).unwrap();
        let rep = verify_cutoff_bounds(&c, 20_000);
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.outward_gradients, 0);
        assert!(rep.max_grad_ratio > 0.5 * c.profile.c1);
    }
}

#[test]
fn integral_cutoff_shape() {
    let c = make_integral_cutoff(R0, params()).unwrap();
    assert_eq!(c.psi([R0 * 0.99, 0.0, 0.0]), 1.0);
    assert_eq!(c.psi([0.0, 2.0 * R0, 0.0]), 0.0);
    assert!(verify_cutoff_bounds(&c, 5000).passed());
}

#[test]
fn analytic_derivatives_match_differences() {
    let p = params();
    let int = make_interior_cutoff([0.05, 0.1, 0.0], 0.3, R0, p).unwrap();
    let bnd = make_boundary_cutoff([0.0, R0 * 0.9, 0.2], R0 / 4.0, R0, p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for c in [&int, &bnd] {
        let pts = sample_points(c, 400, 2);
        let mut checked = 0;
        for x in pts {
            let v = c.psi(x);
            if v > 1e-3 && v < 1.0 - 1e-9 {
                fd_check(c, x);
                checked += 1;
            }
        }
        assert!(checked > 20, "{checked}");
        let _ = rng.gen::<f64>();
    }
}

fn boundary() -> Cutoff {
    let r = R0 / 4.0;
    let c = [0.0, 0.0, R0 - 0.3 * r];
    make_boundary_cutoff(c, r, R0, params()).unwrap()
}

#[test]
fn boundary_matches_integral_inside_inner_cone() {
    let c = boundary();
    let psi0 = make_integral_cutoff(R0, params()).unwrap();
    let cone = c.cone.unwrap();
    let th1 = cone.q_inner.acos();
    for k in 0..200 {
        let r = R0 + (k as f64 / 199.0) * R0;
        let th = th1 * (k % 7) as f64 / 7.0;
        let phi = 0.3 * k as f64;
        let x = [r * th.sin() * phi.cos(), r * th.sin() * phi.sin(), r * th.cos()];
        let (a, b) = (c.jet(x), psi0.jet(x));
        assert_eq!(a.v, b.v);
        assert_eq!(a.g, b.g);
    }
}

#[test]
fn boundary_zero_and_plateau_sets() {
    let c = boundary();
    let cone = c.cone.unwrap();
    let th2 = cone.q_outer.acos();
    for k in 0..100 {
        let r = R0 * (1.0 + k as f64 / 100.0);
        let th = th2 + (std::f64::consts::PI - th2) * (k as f64 + 0.5) / 100.0;
        let x = [r * th.sin(), 0.0, r * th.cos()];
        assert_eq!(c.psi(x), 0.0, "outside outer cone at {x:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..2000 {
        let x: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-R0..R0));
        if norm(&x) >= R0 {
            continue;
        }
        let d = norm(&crate::scalar::sub3(&x, &c.center));
        if d <= c.r {
            assert_eq!(c.psi(x), 1.0);
        }
        if d >= 2.0 * c.r {
            assert_eq!(c.psi(x), 0.0, "outside B(c, 2R) at {x:?}");
        }
    }
}

#[test]
fn boundary_bounds_hold() {
    for (center, r) in [
        ([0.0, 0.0, R0], R0 / 4.0),
        ([R0 * 0.6, 0.0, R0 * 0.6], R0 / 2.0),
        ([0.0, R0 * 0.8, 0.0], R0 / 4.0),
    ] {
        let c = make_boundary_cutoff(center, r, R0, params()).unwrap();
        let rep = verify_cutoff_bounds(&c, 20_000);
        assert!(rep.passed(), "{rep:?}");
    }
}

#[test]
fn boundary_preconditions() {
    let p = params();
    assert!(make_boundary_cutoff([0.0, 0.0, 0.1], R0 / 4.0, R0, p).is_err());
    assert!(make_boundary_cutoff([0.0, 0.0, 0.5 * R0], 0.6 * R0, R0, p).is_err());
}

#[test]
fn sliver_geometry_keeps_zero_set() {
    let r = R0 / 4.0;
    let c = make_boundary_cutoff([0.0, 0.0, R0 + 0.5 * r], r, R0, params()).unwrap();
    let cone = c.cone.unwrap();
    assert!(cone.sliver);
    let th2 = cone.q_outer.acos();
    for k in 0..100 {
        let rad = R0 * (1.0 + 0.3 * k as f64 / 100.0);
        let th = th2 * (1.0 + 1e-9) + 0.2 * k as f64 / 100.0;
        assert_eq!(c.psi([rad * th.sin(), 0.0, rad * th.cos()]), 0.0);
    }
    assert!(verify_cutoff_bounds(&c, 10_000).passed());
}

#[test]
fn broken_profile_fails() {
    let mut c = make_interior_cutoff([0.0; 3], R0 / 2.0, R0, params()).unwrap();
    c.profile = RadialProfile::with_power(1, 0.9);
    c.params.rho = 0.9;
    c.c0 = c.profile.c0();
    let rep = verify_cutoff_bounds(&c, 20_000);
    assert!(!rep.grad_ok);
}

#[test]
fn plateau_points_give_zero_ratios() {
    let c = make_interior_cutoff([0.0; 3], 0.3, R0, params()).unwrap();
    let pts: Vec<[f64; 3]> = (0..100).map(|i| [0.002 * i as f64, 0.0, 0.0]).collect();
    let rep = verify_bounds_at(&c, &pts, 10);
    assert_eq!(rep.max_grad_ratio, 0.0);
    assert_eq!(rep.max_hessian_ratio, 0.0);
    assert!(rep.passed());
}

#[test]
fn cover_elements_get_matching_kinds() {
    use crate::covers::{generate_cover, CoverParams};
    let cover = generate_cover(CoverParams::new(8, 8, R0, R0 / 2.0).unwrap(), 2).unwrap();
    let cuts = cutoffs_for_cover(&cover, params()).unwrap();
    for (i, c) in cuts.iter().enumerate() {
        let kind = if cover.is_boundary(i) { CutoffKind::Boundary } else { CutoffKind::Interior };
        assert_eq!(c.kind, kind);
    }
}
