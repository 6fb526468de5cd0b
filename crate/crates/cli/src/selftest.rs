use std::f64::consts::PI;

use mhd_enstrophy::covers::{generate_cover, multiplicity_at, verify_cover, Cover, CoverParams};
use mhd_enstrophy::cutoffs::{make_integral_cutoff, make_interior_cutoff, CutoffParams};
use mhd_enstrophy::ensemble::{locality_bounds, AnalysisParams};
use mhd_enstrophy::flux::{combined_flux, local_flux_kinetic, local_flux_magnetic};
use mhd_enstrophy::grid::{curl, divergence, gradient, integrate, leray_project, GridSpec, ScalarField, VectorField};
use mhd_enstrophy::io::{decode_snapshot, encode_snapshot};
use mhd_enstrophy::kinematics::{m_kernel, sigma_kernel, strain_decomposition_check};
use mhd_enstrophy::solver::{init_orszag_tang_3d, init_random_solenoidal, step, MhdState, SolverConfig};
use mhd_enstrophy::{Error, Result};

type Check = fn() -> Result<bool>;

fn grid() -> GridSpec<f64> {
    GridSpec::periodic_2pi(16).expect("valid grid")
}

fn close(a: &VectorField<f64>, b: &VectorField<f64>, tol: f64) -> bool {
    a.sub(b).map(|d| d.max_abs() <= tol).unwrap_or(false)
}

fn curl_of_shear() -> Result<bool> {
    let g = grid();
    let f = VectorField::from_fn(g, |p: [f64; 3]| [0.0, p[0].sin(), 0.0]);
    let want = VectorField::from_fn(g, |p: [f64; 3]| [0.0, 0.0, p[0].cos()]);
    Ok(close(&curl(&f), &want, 1e-12))
}

fn abc_is_curl_eigenfield() -> Result<bool> {
    let f = VectorField::from_fn(grid(), |p: [f64; 3]| {
        [p[2].sin() + p[1].cos(), p[0].sin() + p[2].cos(), p[1].sin() + p[0].cos()]
    });
    Ok(close(&curl(&f), &f, 1e-12))
}

fn div_of_curl_vanishes() -> Result<bool> {
    let s = init_random_solenoidal(grid(), -1.0, 1);
    let f = s.u.add(&VectorField::from_fn(grid(), |p: [f64; 3]| [p[1].sin(), p[0].cos() * p[2].sin(), 0.3]))?;
    Ok(divergence(&curl(&f)).max_abs() <= 1e-12 * f.max_abs().max(1.0))
}

fn projection_fixes_solenoidal_fields() -> Result<bool> {
    let s = init_random_solenoidal(grid(), -1.0, 2);
    Ok(close(&leray_project(&s.u), &s.u, 1e-12))
}

fn projection_kills_gradients() -> Result<bool> {
    let s = ScalarField::from_fn(grid(), |p: [f64; 3]| p[0].sin() * p[1].cos() + (2.0 * p[2]).sin());
    Ok(leray_project(&gradient(&s)).max_abs() <= 1e-12)
}

fn gradient_of_product() -> Result<bool> {
    let g = grid();
    let s = ScalarField::from_fn(g, |p: [f64; 3]| p[0].sin() * p[1].sin());
    let want = VectorField::from_fn(g, |p: [f64; 3]| [p[0].cos() * p[1].sin(), p[0].sin() * p[1].cos(), 0.0]);
    Ok(close(&gradient(&s), &want, 1e-12))
}

fn integrals_of_simple_fields() -> Result<bool> {
    let g = grid();
    let one = integrate(&ScalarField::constant(g, 1.0));
    let s = integrate(&ScalarField::from_fn(g, |p: [f64; 3]| p[0].sin()));
    let s2 = integrate(&ScalarField::from_fn(g, |p: [f64; 3]| p[0].sin().powi(2)));
    let v = (2.0 * PI).powi(3);
    Ok((one - v).abs() <= 1e-12 * v && s.abs() <= 1e-12 && (s2 - v / 2.0).abs() <= 1e-10 * v)
}

fn zero_state_is_fixed() -> Result<bool> {
    let z = MhdState::zeros(grid());
    let cfg = SolverConfig { viscosity: 0.1, resistivity: 0.1, dt: 0.01, t_end: 0.01, ..Default::default() };
    let s = step(&z, &cfg)?;
    Ok(s.u.max_abs() == 0.0 && s.b.max_abs() == 0.0)
}

fn single_mode_decays_exactly() -> Result<bool> {
    let g = grid();
    let u = VectorField::from_fn(g, |p: [f64; 3]| [0.0, (2.0 * p[0]).sin(), 0.0]);
    let s0 = MhdState::new(u, VectorField::zeros(g), 0.0)?;
    let (nu, dt) = (0.05, 0.01);
    let cfg = SolverConfig { viscosity: nu, resistivity: nu, dt, t_end: dt, ..Default::default() };
    let s1 = step(&s0, &cfg)?;
    let want = s0.u.scaled((-nu * 4.0 * dt).exp());
    Ok(close(&s1.u, &want, 1e-8 * want.max_abs()))
}

fn init_is_linear_and_solenoidal() -> Result<bool> {
    let g = grid();
    let a = init_orszag_tang_3d(g, 1.0);
    let b = init_orszag_tang_3d(g, 2.0);
    let zero = init_orszag_tang_3d(g, 0.0);
    let r = init_random_solenoidal(g, -5.0 / 3.0, 3);
    Ok(close(&b.u, &a.u.scaled(2.0), 0.0)
        && zero.u.max_abs() == 0.0
        && divergence(&a.b).max_abs() <= 1e-10
        && divergence(&r.u).max_abs() <= 1e-10
        && init_random_solenoidal(g, -5.0 / 3.0, 3) == r)
}

fn single_ball_cover() -> Result<bool> {
    let c = generate_cover(CoverParams::new(8, 8, 1.0, 1.0)?, 0)?;
    Ok(c.len() == 1 && c.centers[0] == [0.0; 3] && verify_cover(&c, 4).is_valid())
}

fn duplicate_centers_flag_multiplicity() -> Result<bool> {
    let c = Cover::new(CoverParams::new(8, 1, 1.0, 1.0)?, vec![[0.0; 3], [0.0; 3]])?;
    let under = Cover::new(CoverParams::new(8, 8, 1.0, 0.5)?, vec![[0.0; 3]])?;
    Ok(!verify_cover(&c, 4).multiplicity_ok && !verify_cover(&under, 4).count_ok && multiplicity_at(&c, [0.0; 3]) == 2)
}

fn cutoff_plateau_and_support() -> Result<bool> {
    let p = CutoffParams::new(0.8, 0.8, 1.0)?;
    let c = make_interior_cutoff([0.1, 0.0, 0.0], 0.5, 2.0, p)?;
    let psi0 = make_integral_cutoff(1.0, p)?;
    let j = c.jet([0.3, 0.1, 0.0]);
    Ok(j.v == 1.0
        && j.grad_norm() == 0.0
        && c.psi([1.2, 0.0, 0.0]) == 0.0
        && psi0.psi([0.0, 0.9, 0.0]) == 1.0
        && psi0.psi([2.0, 0.0, 0.0]) == 0.0
        && c.eta(0.25).0 == 0.0
        && c.eta(0.75).0 == 1.0)
}

fn flux_of_vanishing_fields() -> Result<bool> {
    let g = grid();
    let c = make_integral_cutoff(1.0, CutoffParams::new(0.8, 0.8, 1.0)?)?;
    let s = init_random_solenoidal(g, -1.0, 4);
    let z = VectorField::zeros(g);
    let w = curl(&s.u);
    let k = local_flux_kinetic(&s.u, &w, &c, 1.0)?;
    let m = local_flux_magnetic(&s.u, &w, &c, 1.0)?;
    Ok(local_flux_kinetic(&s.u, &z, &c, 1.0)? == 0.0
        && local_flux_kinetic(&z, &w, &c, 1.0)? == 0.0
        && k == m
        && combined_flux(&s.u, &w, &w, &c, 1.0)? == k + m)
}

fn kernel_examples() -> Result<bool> {
    let s = sigma_kernel([1.0, 0.0, 0.0])?;
    let m = m_kernel([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])?;
    let par = m_kernel([0.0, 1.0, 0.0], [0.0, 3.0, 0.0])?;
    Ok(s == [[2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]
        && m == [[0.0, 0.0, 0.5], [0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]
        && par == [[0.0; 3]; 3])
}

fn strain_decomposition() -> Result<bool> {
    let s = init_random_solenoidal(grid(), -1.0, 5);
    Ok(strain_decomposition_check(&s.u) <= 1e-10 && strain_decomposition_check(&VectorField::<f64>::zeros(grid())) == 0.0)
}

fn locality_same_scale() -> Result<bool> {
    let k = AnalysisParams::new(1.0, 1.0).k_star;
    let (lo, hi) = locality_bounds(1.0, 1.0, k);
    Ok(lo == 1.0 / (16.0 * k * k) && hi == 16.0 * k * k)
}

fn snapshot_round_trip() -> Result<bool> {
    let s = init_random_solenoidal(grid(), -1.0, 6);
    let bytes = encode_snapshot(&s);
    let mut bad = bytes.clone();
    bad[0] = b'X';
    let truncated = matches!(decode_snapshot(&bytes[..100]), Err(Error::Format { offset: 100, .. }));
    Ok(decode_snapshot(&bytes)? == s && matches!(decode_snapshot(&bad), Err(Error::Format { offset: 0, .. })) && truncated)
}

const CHECKS: &[(&str, Check)] = &[
    ("curl of (0, sin x, 0) is (0, 0, cos x)", curl_of_shear),
    ("ABC flow is a curl eigenfield", abc_is_curl_eigenfield),
    ("div curl = 0", div_of_curl_vanishes),
    ("projection leaves solenoidal fields unchanged", projection_fixes_solenoidal_fields),
    ("projection annihilates gradients", projection_kills_gradients),
    ("gradient of sin x sin y", gradient_of_product),
    ("box integrals of 1, sin x, sin^2 x", integrals_of_simple_fields),
    ("zero state is a fixed point", zero_state_is_fixed),
    ("single mode decays viscously", single_mode_decays_exactly),
    ("initial conditions are linear, solenoidal, deterministic", init_is_linear_and_solenoidal),
    ("R = R0 cover is the single ball", single_ball_cover),
    ("multiplicity and count violations are flagged", duplicate_centers_flag_multiplicity),
    ("cutoff plateau, support and time ramp", cutoff_plateau_and_support),
    ("flux of vanishing fields and additivity", flux_of_vanishing_fields),
    ("sigma and M kernel examples", kernel_examples),
    ("strain decomposition", strain_decomposition),
    ("locality bounds at equal scales", locality_same_scale),
    ("snapshot round trip and format errors", snapshot_round_trip),
];

/// Prints one line per check; true when all pass.
pub fn run() -> bool {
    let mut ok = 0;
    for (name, check) in CHECKS {
        let pass = matches!(check(), Ok(true));
        println!("{} {name}", if pass { "PASS" } else { "FAIL" });
        ok += pass as usize;
    }
    println!("{ok}/{} checks passed", CHECKS.len());
    ok == CHECKS.len()
}
