use super::*;
use crate::grid::GridSpec;
use crate::solver::{init_random_solenoidal, SnapshotSeries};

const R0: f64 = 1.2;
const T_END: f64 = 0.6;
const STEPS: usize = 60;

fn steady(state: &MhdState<f64>) -> SnapshotSeries<f64> {
    let states = (0..=STEPS)
        .map(|k| MhdState { time: k as f64 * T_END / STEPS as f64, ..state.clone() })
        .collect();
    SnapshotSeries::new(0.05, 0.05, states).unwrap()
}

fn grid() -> GridSpec<f64> {
    GridSpec::periodic_2pi(16).unwrap()
}

fn random_state(seed: u64) -> MhdState<f64> {
    let g = grid();
    let a = init_random_solenoidal(g, -1.0, seed);
    let b = init_random_solenoidal(g, -1.0, seed + 1);
    MhdState { u: a.u, b: b.u, time: 0.0 }
}

fn params() -> AnalysisParams {
    AnalysisParams::new(R0, T_END)
}

fn ones(s: &MhdState<f64>, _: &SpectralOps<f64>) -> Vec<f64> {
    vec![1.0; s.grid().len()]
}

#[test]
fn zero_fields_are_degenerate() {
    let s = steady(&MhdState::zeros(grid()));
    let p = params();
    let c = make_integral_cutoff(R0, p.cutoff_params().unwrap()).unwrap();
    let v = time_averaged_integrals(&s, &[c], &Density::Enstrophy, 0.8, true).unwrap();
    assert_eq!(v, vec![0.0]);
    let q = integral_quantities(&s, &p).unwrap();
    assert!(q.degenerate);
    assert_eq!((q.e0, q.big_e0, q.p0, q.sigma0), (0.0, 0.0, 0.0, 0.0));
    let rep = cascade_check(&s, &p, 2, 1).unwrap();
    assert!(rep.degenerate && rep.locality.degenerate);
    assert!(rep.scales.iter().all(|e| e.mean_flux == 0.0 && e.spread.is_none()));
}

#[test]
fn unit_density_is_bracketed_by_ball_volumes() {
    let s = steady(&MhdState::zeros(grid()));
    let p = params();
    let c = make_integral_cutoff(R0, p.cutoff_params().unwrap()).unwrap();
    let f = ones;
    let v = time_averaged_integrals(&s, &[c], &Density::Custom(&f), p.delta, true).unwrap()[0];
    // η^δ ∈ [0, 1], η = 1 on [2T/3, T], η = 0 on [0, T/3]; ψ = 1 on B(R0), 0 off B(2R0)
    let ball = 4.0 / 3.0 * std::f64::consts::PI * R0.powi(3);
    assert!(v >= ball / 3.0 * 0.9, "{v}");
    assert!(v <= 8.0 * ball * 2.0 / 3.0, "{v}");
    let avg = localized_averages(&s, &[c], &Density::Custom(&f), p.delta).unwrap()[0];
    assert!((avg - v / R0.powi(3)).abs() < 1e-12 * v);
}

#[test]
fn single_ball_cover_reproduces_the_integral_scale() {
    let st = random_state(3);
    let s = steady(&st);
    let p = params();
    let cp = p.cutoff_params().unwrap();
    let cover = generate_cover(p.cover_params(R0).unwrap(), 9).unwrap();
    assert_eq!(cover.len(), 1);
    let c = make_integral_cutoff(R0, cp).unwrap();
    for d in [Density::Enstrophy, Density::Energy, Density::CombinedFlux] {
        let a = ensemble_average(&s, &cover, cp, &d, p.delta).unwrap();
        let b = localized_averages(&s, &[c], &d, p.delta).unwrap()[0];
        assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} {b}");
    }
    let chk = interpolation_check(&s, &cover, cp, &Density::Enstrophy).unwrap();
    assert!((chk.ensemble - chk.theta0).abs() <= 1e-12 * chk.theta0);
    assert!(chk.passed);
}

#[test]
fn interpolation_holds_on_smooth_data() {
    let s = steady(&random_state(5));
    let p = params();
    let cp = p.cutoff_params().unwrap();
    for r in [R0 / 2.0, R0 / 4.0] {
        let cover = generate_cover(p.cover_params(r).unwrap(), 17).unwrap();
        for d in [Density::Enstrophy, Density::Energy] {
            let chk = interpolation_check(&s, &cover, cp, &d).unwrap();
            assert!(chk.passed, "{chk:?}");
            assert!(chk.lower_bound < chk.upper_bound);
        }
    }
}

#[test]
fn interpolation_rejects_signed_densities() {
    let s = steady(&random_state(5));
    let p = params();
    let cp = p.cutoff_params().unwrap();
    let cover = generate_cover(p.cover_params(R0 / 2.0).unwrap(), 1).unwrap();
    let signed = |st: &MhdState<f64>, _: &SpectralOps<f64>| st.u.component(0).to_vec();
    let e = interpolation_check(&s, &cover, cp, &Density::Custom(&signed)).unwrap_err();
    assert!(matches!(e, Error::Precondition(_)));
    let e = interpolation_check(&s, &cover, cp, &Density::CombinedFlux).unwrap_err();
    assert!(matches!(e, Error::Precondition(_)));
    let zero = |st: &MhdState<f64>, _: &SpectralOps<f64>| vec![0.0; st.grid().len()];
    let z = interpolation_check(&s, &cover, cp, &Density::Custom(&zero)).unwrap();
    assert!(z.passed && z.theta0 == 0.0 && z.ensemble == 0.0);
}

#[test]
fn integral_ratios_are_amplitude_invariant() {
    let st = random_state(7);
    let p = params();
    let q1 = integral_quantities(&steady(&st), &p).unwrap();
    let a = 3.0;
    let big = MhdState { u: st.u.scaled(a), b: st.b.scaled(a), time: 0.0 };
    let q2 = integral_quantities(&steady(&big), &p).unwrap();
    assert!(!q1.degenerate);
    for (x, y) in [(q1.e0, q2.e0), (q1.big_e0, q2.big_e0), (q1.p0, q2.p0)] {
        assert!((y - a * a * x).abs() < 1e-10 * y);
    }
    assert!((q1.curly_e0 - q2.curly_e0).abs() < 1e-10 * q1.curly_e0);
    assert!((q1.eps0 - q2.eps0).abs() < 1e-10 * q1.eps0);
    assert_eq!(q1.sigma0, q1.curly_e0.max(q1.eps0));
}

#[test]
fn integral_ratios_follow_definitions() {
    let q = IntegralScaleQuantities::from_parts(16.0, 9.0, 1.0);
    assert_eq!((q.curly_e0, q.eps0, q.sigma0), (3.0, 2.0, 3.0));
    assert!(IntegralScaleQuantities::from_parts(1.0, 1.0, 0.0).degenerate);
}

#[test]
fn parameter_validation() {
    let mut p = params();
    assert!(p.validate().is_ok());
    assert_eq!(p.k_star, min_k_star(8, 8));
    p.k_star = 0.99 * min_k_star(8, 8);
    assert!(p.validate().is_err());
    let mut p = params();
    p.beta = 1.0;
    assert!(p.validate().is_err());
    let mut p = params();
    p.scales = vec![2.0 * R0];
    assert!(p.validate().is_err());
    let mut p = params();
    p.rho = 0.7;
    assert!(p.validate().is_err());
}

#[test]
fn locality_bounds_and_chains() {
    let k = 3.0;
    let (lo, hi) = locality_bounds(1.0, 1.0, k);
    assert_eq!((lo, hi), (1.0 / 144.0, 144.0));
    let (lo, hi) = locality_bounds(0.25, 1.0, k);
    assert!((lo - 1.0 / 64.0 / 144.0).abs() < 1e-18 && (hi - 144.0 / 64.0).abs() < 1e-12);
    let (a, b) = dyadic_chain_bounds(2, k);
    let (c, d) = locality_bounds(0.5, 1.0, k);
    assert_eq!((a, b), (c * c, d * d));
    assert!(a < lo && b > hi);
}

fn entry(r: f64, psi: f64) -> ScaleEntry {
    ScaleEntry {
        r,
        n: vec![1],
        per_cover_flux: vec![psi / r.powi(3)],
        mean_flux: psi / r.powi(3),
        min: psi / r.powi(3),
        max: psi / r.powi(3),
        spread: Some(1.0),
        mean_psi: psi,
        lower_bound: 0.0,
        upper_bound: 1.0,
        in_band: true,
        admissible: true,
    }
}

#[test]
fn flat_flux_gives_volume_ratios() {
    let scales = vec![entry(1.0, 2.0), entry(0.5, 0.25), entry(0.25, 2.0 / 64.0)];
    let l = locality_from_scales(&scales, 4.0);
    assert!(l.identity_ok && !l.degenerate);
    assert_eq!(l.pairs.len(), 6);
    for pair in &l.pairs {
        let q = (pair.r / pair.big_r).powi(3);
        assert!((pair.ratio.unwrap() - q).abs() < 1e-14);
        assert_eq!(pair.within, Some(true));
    }
    let off = vec![entry(1.0, 2.0), entry(0.5, 20.0)];
    let l = locality_from_scales(&off, 1.0);
    let pair = l.pairs.iter().find(|p| p.r == 0.5 && p.big_r == 1.0).unwrap();
    assert_eq!(pair.within, Some(false));
    let mut bad = entry(1.0, 1.0);
    bad.mean_flux = 2.0;
    assert!(!locality_from_scales(&[bad], 1.0).identity_ok);
}

#[test]
fn cascade_report_is_deterministic_and_round_trips() {
    let s = steady(&random_state(11));
    let p = params();
    let a = cascade_check(&s, &p, 2, 42).unwrap();
    let b = cascade_check(&s, &p, 2, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.scales.len(), 3);
    assert!(a.locality.identity_ok, "{}", a.locality.identity_error);
    assert_eq!(EnsembleReport::from_json(&a.to_json().unwrap()).unwrap(), a);
    let csv = a.flux_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "R,mean_flux,min,max,lower_bound,upper_bound,in_band");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
    let r: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert_eq!(r, R0);
    assert_eq!(a.scales[0].n, vec![1, 1]);
    assert!(cascade_check(&s, &p, 0, 42).is_err());
}

#[test]
fn inward_velocity_gives_positive_flux() {
    let g = grid();
    // u = −(sin x, sin y, sin z) points toward the origin; b is a Beltrami field
    let u = VectorField::from_fn(g, |p: [f64; 3]| [-p[0].sin(), -p[1].sin(), -p[2].sin()]);
    let b = VectorField::from_fn(g, |p: [f64; 3]| {
        [p[2].sin() + p[1].cos(), p[0].sin() + p[2].cos(), p[1].sin() + p[0].cos()]
    });
    let s = steady(&MhdState { u, b, time: 0.0 });
    let p = params();
    let c = make_integral_cutoff(R0, p.cutoff_params().unwrap()).unwrap();
    let phi = time_averaged_integrals(&s, &[c], &Density::CombinedFlux, 1.0, false).unwrap()[0];
    assert!(phi > 0.0);
    let rep = cascade_check(&s, &p, 2, 5).unwrap();
    assert!(rep.integral.p0 > 0.0);
    assert!(rep.scales[0].mean_flux > 0.0);
    let reversed = MhdState { u: s.states[0].u.scaled(-1.0), ..s.states[0].clone() };
    let neg = time_averaged_integrals(&steady(&reversed), &[c], &Density::CombinedFlux, 1.0, false).unwrap()[0];
    assert!((neg + phi).abs() < 1e-12 * phi);
}
