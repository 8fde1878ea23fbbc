use cvkraus::fock_core::{Cutoff, FockState};
use cvkraus::harness::{
    find_identity, identity_ids, parse_grid, run_identity, run_sweep_point, trend_ok, wavefunction_rows,
    write_sweep_csv, write_wavefunction_csv, IdentityReport, SweepSpec, NOISE_FLOOR, SWEEP_HEADER,
    WAVEFUNCTION_HEADER,
};
use cvkraus::gkp_ec::EcVariant;
use cvkraus::{Error, C64};
use proptest::prelude::*;
use std::collections::HashSet;

#[test]
fn registry_matches_golden_list() {
    let golden: Vec<&str> = include_str!("golden/identity_registry.txt").lines().filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(identity_ids(), golden);
    let unique: HashSet<_> = golden.iter().collect();
    assert_eq!(unique.len(), golden.len());
}

#[test]
fn unknown_identity_is_an_error() {
    assert!(matches!(find_identity("no_such_identity"), Err(Error::UnknownIdentity(_))));
    let r = run_identity("no_such_identity", Cutoff::new(20).unwrap(), &[0.1]);
    assert!(matches!(r, Err(Error::UnknownIdentity(_))));
    assert!(matches!(run_identity("epr_cx", Cutoff::new(20).unwrap(), &[]), Err(Error::InvalidParameter(_))));
}

#[test]
fn report_schema() {
    let r = run_identity("measurement_v_mu", Cutoff::new(30).unwrap(), &[0.1, 0.05]).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    keys.sort();
    assert_eq!(keys, ["betas", "cutoff", "id", "pass", "residuals"]);
    assert_eq!(r.residuals.len(), 2);
    let back: IdentityReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, r);
}

#[test]
fn csv_headers() {
    let mut buf = Vec::new();
    write_sweep_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().trim_end(), SWEEP_HEADER.join(","));
    assert_eq!(SWEEP_HEADER.join(","), "squeezing_db,beta,steps,ec_period,mean_fidelity,stderr,n_seeds");

    let rows = wavefunction_rows(&[0.0, 0.5], &[C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
    let mut buf = Vec::new();
    write_wavefunction_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], WAVEFUNCTION_HEADER.join(","));
    assert_eq!(lines[0], "x,re,im,abs2");
    assert_eq!(lines.len(), 3);
    assert_eq!(rows[1].abs2, 4.0);
}

#[test]
fn sweep_point_is_deterministic() {
    let mut spec = SweepSpec::single(Some(EcVariant::AB), 0.1, 2, 2, 3).unwrap();
    spec.cutoff = Cutoff::new(40).unwrap();
    let a = run_sweep_point(&spec, 0.1, 2).unwrap();
    let b = run_sweep_point(&spec, 0.1, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_seeds, 3);
    assert!((a.squeezing_db - 10.0).abs() < 1e-12);
    assert!(a.mean_fidelity > 0.0 && a.mean_fidelity <= 1.0 + 1e-9);
}

#[test]
fn fock_wavefunction_is_normalized_on_grid() {
    let grid = parse_grid("-8:8:0.01").unwrap();
    let s = FockState::basis(3, Cutoff::new(10).unwrap()).unwrap();
    let rows = cvkraus::harness::fock_wavefunction_rows(&s, cvkraus::states::Quadrature::P, &grid).unwrap();
    let mass: f64 = rows.iter().map(|r| r.abs2).sum::<f64>() * 0.01;
    assert!((mass - 1.0).abs() < 1e-8);
}

#[test]
fn malformed_grids_are_rejected() {
    for bad in ["", "1:2", "a:b:c", "1:0:0.1", "0:1:0", "0:1:-0.1", "0:1:0.1:2"] {
        assert!(parse_grid(bad).is_err(), "{bad}");
    }
}

proptest! {
    #[test]
    fn grid_endpoints_and_spacing(min in -10.0f64..0.0, width in 0.5f64..10.0, n in 2usize..200) {
        let step = width / n as f64;
        let max = min + width;
        let g = parse_grid(&format!("{min}:{max}:{step}")).unwrap();
        prop_assert!((g[0] - min).abs() < 1e-12);
        prop_assert!((g[g.len() - 1] - max).abs() < 1e-9 * (1.0 + max.abs()));
        prop_assert!(g.len() == n + 1);
        for w in g.windows(2) {
            prop_assert!((w[1] - w[0] - step).abs() < 1e-9);
        }
    }

    #[test]
    fn trend_accepts_monotone_residuals(mut rs in prop::collection::vec(1e-8f64..1.0, 1..6)) {
        rs.sort_by(|a, b| b.total_cmp(a));
        let betas: Vec<f64> = (0..rs.len()).map(|i| 0.1 / (i + 1) as f64).collect();
        prop_assert!(trend_ok(&betas, &rs));
        // order of the schedule does not matter
        let (rb, rr): (Vec<f64>, Vec<f64>) = betas.iter().zip(&rs).rev().map(|(b, r)| (*b, *r)).unzip();
        prop_assert!(trend_ok(&rb, &rr));
    }

    #[test]
    fn trend_rejects_growth_above_floor(a in 1e-6f64..1.0, grow in 1.01f64..10.0) {
        prop_assert!(!trend_ok(&[0.1, 0.05], &[a, a * grow]));
    }

    #[test]
    fn trend_ignores_noise_below_floor(a in 0.0f64..NOISE_FLOOR, b in 0.0f64..NOISE_FLOOR) {
        prop_assert!(trend_ok(&[0.1, 0.05, 0.02], &[a, b, a]));
    }
}
