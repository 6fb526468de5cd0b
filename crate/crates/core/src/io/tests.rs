use super::*;
use crate::error::Error;
use crate::grid::GridSpec;
use crate::solver::{init_random_solenoidal, run, MhdState, SnapshotSource, SolverConfig};

fn state() -> MhdState<f64> {
    let mut s = init_random_solenoidal(GridSpec::new(8, 3.5).unwrap(), -1.0, 4);
    s.time = 0.125;
    s
}

#[test]
fn snapshot_round_trip_is_bit_exact() {
    let s = state();
    let bytes = encode_snapshot(&s);
    assert_eq!(bytes.len(), HEADER_LEN + 6 * 8usize.pow(3) * 8);
    assert_eq!(&bytes[..8], MAGIC);
    let back = decode_snapshot(&bytes).unwrap();
    assert_eq!(back.time.to_bits(), s.time.to_bits());
    assert_eq!(back.grid(), s.grid());
    for (a, b) in [(&s.u, &back.u), (&s.b, &back.b)] {
        for c in 0..3 {
            let x: Vec<u64> = a.component(c).iter().map(|v| v.to_bits()).collect();
            let y: Vec<u64> = b.component(c).iter().map(|v| v.to_bits()).collect();
            assert_eq!(x, y);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.mhdsnap");
    write_snapshot(&s, &p).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), bytes);
    assert_eq!(read_snapshot(&p).unwrap(), s);
    assert_eq!(read_header(&p).unwrap(), SnapshotHeader { n: 8, box_length: 3.5, time: 0.125, fields: 6 });
}

#[test]
fn payload_is_x_fastest() {
    let g = GridSpec::new(8, 2.0).unwrap();
    let u = crate::grid::VectorField::from_fn(g, |p: [f64; 3]| [p[0], p[1], p[2]]);
    let s = MhdState::new(u, crate::grid::VectorField::zeros(g), 0.0).unwrap();
    let bytes = encode_snapshot(&s);
    let v = |k: usize| f64::from_le_bytes(bytes[HEADER_LEN + 8 * k..HEADER_LEN + 8 * k + 8].try_into().unwrap());
    assert_eq!([v(0), v(1), v(2), v(3)], [-1.0, -0.75, -0.5, -0.25]);
    assert_eq!(v(8), -1.0);
    assert_eq!(v(8 * 8 * 8 + 8), -0.75);
}

fn format_offset(e: Error) -> u64 {
    match e {
        Error::Format { offset, .. } => offset,
        other => panic!("expected a format error, got {other}"),
    }
}

#[test]
fn malformed_snapshots_name_the_offset() {
    let bytes = encode_snapshot(&state());
    let cut = HEADER_LEN + 1000;
    assert_eq!(format_offset(decode_snapshot(&bytes[..cut]).unwrap_err()), cut as u64);
    assert_eq!(format_offset(decode_snapshot(&bytes[..20]).unwrap_err()), 20);
    let mut bad = bytes.clone();
    bad[3] = b'X';
    assert_eq!(format_offset(decode_snapshot(&bad).unwrap_err()), 0);
    let mut bad = bytes.clone();
    bad[32] = 5;
    assert_eq!(format_offset(decode_snapshot(&bad).unwrap_err()), 32);
    let mut bad = bytes.clone();
    bad[8] = 7;
    assert_eq!(format_offset(decode_snapshot(&bad).unwrap_err()), 8);
    let mut long = bytes.clone();
    long.push(0);
    assert_eq!(format_offset(decode_snapshot(&long).unwrap_err()), bytes.len() as u64);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.mhdsnap");
    std::fs::write(&p, &bytes[..cut]).unwrap();
    assert_eq!(format_offset(read_header(&p).unwrap_err()), cut as u64);
}

#[test]
fn snapshot_directory_serves_the_series() {
    let g = GridSpec::periodic_2pi(8).unwrap();
    let init = init_random_solenoidal(g, -1.0, 2);
    let cfg = SolverConfig { viscosity: 0.1, resistivity: 0.05, dt: 0.01, t_end: 0.05, ..Default::default() };
    let (series, rep) = run(&init, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut w = SnapshotWriter::create(dir.path(), 0.1, 0.05).unwrap();
    for s in &series.states {
        w.push(s).unwrap();
    }
    w.finish(None, Some(rep)).unwrap();
    let d = SnapshotDir::open(dir.path()).unwrap();
    assert_eq!(d.len(), series.len());
    assert_eq!((d.viscosity(), d.resistivity()), (0.1, 0.05));
    assert_eq!(d.times(), series.times());
    for k in 0..d.len() {
        assert_eq!(*d.load(k).unwrap(), series.states[k]);
    }
    assert!(d.meta.report.is_some());

    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(SnapshotDir::open(empty.path()), Err(Error::Precondition(_))));
    std::fs::write(dir.path().join(snapshot_file_name(2)), b"MHDSNAP1").unwrap();
    assert!(matches!(SnapshotDir::open(dir.path()), Err(Error::Format { .. })));
}

#[test]
fn config_defaults_and_overrides() {
    let c = RunConfig::from_toml_str("").unwrap();
    assert_eq!(c, RunConfig::default());
    let p = c.analysis_params().unwrap();
    assert_eq!(p.r0, c.grid.box_length / 8.0);
    assert_eq!(p.horizon, c.solver.t_end);
    assert_eq!(p.scales, vec![p.r0, p.r0 / 2.0, p.r0 / 4.0]);

    let text = r#"
        [grid]
        n = 16
        [solver]
        viscosity = 0.01
        resistivity = 0.02
        dt = 0.005
        t_end = 0.5
        snapshot_stride = 2
        dealias_fraction = 0.6666666666666666
        [init]
        kind = "random"
        seed = 9
        [analysis]
        R0 = 0.5
        K_star = 40.0
        scales = [0.5, 0.25]
        [covers]
        covers_per_scale = 3
        seed = 7
    "#;
    let c = RunConfig::from_toml_str(text).unwrap();
    assert_eq!(c.grid.n, 16);
    assert_eq!(c.init.kind, InitKind::Random);
    let p = c.analysis_params().unwrap();
    assert_eq!((p.r0, p.k_star, p.horizon), (0.5, 40.0, 0.5));
    assert_eq!(RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap(), c);
}

#[test]
fn config_rejects_out_of_range_values() {
    for bad in [
        "[grid]\nn = 7",
        "[solver]\nviscosity = -1.0\nresistivity = 1.0\ndt = 0.1\nt_end = 1.0\nsnapshot_stride = 1\ndealias_fraction = 0.5",
        "[analysis]\ndelta = 0.5",
        "[analysis]\nK_star = 0.1",
        "[analysis]\nR0 = 2.0",
        "[covers]\ncovers_per_scale = 0",
        "[grid]\nsize = 16",
        "not toml",
    ] {
        assert!(RunConfig::from_toml_str(bad).is_err(), "{bad}");
    }
}
