mod common;

use common::v;
use nalgebra::DVector;
use ossrf::analysis::{
    critical_exponent, default_radii, directional_holder, graph_box_dimension, graph_box_dimension_values,
    increment_stationarity_check, scaling_check, CheckSettings, Control,
};
use ossrf::{Discretization, Error, Exponent, FieldSpec, Grid, HomogeneousFn, Oracle, Synthesizer};

fn diag_spec(h: f64, scale: f64) -> FieldSpec {
    let e = Exponent::diagonal(&[scale, 2.0 * scale]).unwrap();
    let psi = HomogeneousFn::closed_form(
        Some(e.clone()),
        vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])],
        vec![scale, 2.0 * scale],
        vec![1.0, 1.0],
        1.5 * scale,
    )
    .unwrap();
    FieldSpec::harmonizable(e, psi, h, 2.0).unwrap()
}

fn iso_spec(d: usize, h: f64, alpha: f64) -> FieldSpec {
    let e = Exponent::scalar(d, 1.0).unwrap();
    FieldSpec::harmonizable(e.clone(), HomogeneousFn::isotropic_norm(e).unwrap(), h, alpha).unwrap()
}

fn settings(replicates: usize) -> CheckSettings {
    CheckSettings { replicates, seed: 11, discretization: Discretization::default() }
}

#[test]
fn directional_slopes_follow_spectral_subspaces() {
    let o = Oracle::new(&diag_spec(0.5, 1.0)).unwrap();
    let r1 = directional_holder(&o, &v(&[1.0, 0.0]), &default_radii()).unwrap();
    let r2 = directional_holder(&o, &v(&[0.0, 1.0]), &default_radii()).unwrap();
    assert!((r1.fit.slope - 1.0).abs() <= 0.1, "{r1:?}");
    assert!((r2.fit.slope - 0.5).abs() <= 0.1, "{r2:?}");
    assert_eq!(r1.predicted_exponent, 0.5);
    assert_eq!(r2.predicted_exponent, 0.25);
    // Mixed directions fall in the top subspace.
    let r3 = directional_holder(&o, &v(&[1.0, 1.0]), &default_radii()).unwrap();
    assert_eq!(r3.predicted_exponent, 0.25);

    let iso = Oracle::new(&iso_spec(2, 0.7, 2.0)).unwrap();
    let r = directional_holder(&iso, &v(&[0.6, -0.8]), &default_radii()).unwrap();
    assert!((r.fit.slope - 1.4).abs() < 1e-3, "{r:?}");
}

#[test]
fn slopes_invariant_under_reparametrization() {
    let a = Oracle::new(&diag_spec(0.5, 1.0)).unwrap();
    let b = Oracle::new(&diag_spec(1.0, 2.0)).unwrap();
    for u in [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.3, 0.7])] {
        let sa = directional_holder(&a, &u, &default_radii()).unwrap().fit.slope;
        let sb = directional_holder(&b, &u, &default_radii()).unwrap().fit.slope;
        assert!((sa - sb).abs() < 0.05, "{u:?}: {sa} vs {sb}");
    }
}

#[test]
fn critical_exponent_is_smallest_ratio() {
    let dirs: Vec<DVector<f64>> = (0..12)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.3) / 12.0;
            v(&[t.cos(), t.sin()])
        })
        .collect();
    let o = Oracle::new(&diag_spec(0.5, 1.0)).unwrap();
    let r = critical_exponent(&o, &dirs, &default_radii()).unwrap();
    assert!((r.exponent - 0.25).abs() <= 0.05, "{r:?}");
    assert!(r.warnings.is_empty());

    let iso = Oracle::new(&iso_spec(2, 0.7, 2.0)).unwrap();
    let r = critical_exponent(&iso, &dirs, &default_radii()).unwrap();
    assert!((r.exponent - 0.7).abs() <= 0.03, "{r:?}");

    let r = critical_exponent(&o, &[v(&[1.0, 0.0])], &default_radii()).unwrap();
    assert_eq!(r.warnings.len(), 1);
    assert!(r.exponent > 0.4);
}

#[test]
fn regularity_rejects_bad_input() {
    let o = Oracle::new(&diag_spec(0.5, 1.0)).unwrap();
    assert!(directional_holder(&o, &v(&[0.0, 0.0]), &default_radii()).is_err());
    assert!(matches!(directional_holder(&o, &v(&[1.0, 0.0]), &[0.1, 0.2]), Err(Error::Invalid(_))));
}

#[test]
fn box_dimension_of_flat_and_rough_graphs() {
    let flat = graph_box_dimension_values(&vec![3.0; 4097], &[4097]).unwrap();
    assert!((flat.dimension - 1.0).abs() <= 0.05, "{flat:?}");
    let flat2 = graph_box_dimension_values(&vec![0.0; 129 * 129], &[129, 129]).unwrap();
    assert!((flat2.dimension - 2.0).abs() <= 0.05, "{flat2:?}");

    assert!(matches!(graph_box_dimension_values(&vec![0.0; 256], &[256]), Err(Error::Invalid(_))));
    assert!(matches!(graph_box_dimension_values(&vec![0.0; 64 * 64], &[64, 64]), Err(Error::Invalid(_))));
    assert!(graph_box_dimension_values(&vec![0.0; 10], &[4097]).is_err());

    let n = 1 << 12;
    let grid = Grid::lattice(vec![0.0], vec![1.0 / n as f64], vec![n + 1]).unwrap();
    let mut dims = Vec::new();
    for h in [0.3, 0.5, 0.8] {
        let s = Synthesizer::new(&iso_spec(1, h, 2.0), &grid, &Discretization::default()).unwrap();
        let mean: f64 = (0..4)
            .map(|r| {
                let sample = ossrf::FieldSample { values: s.sample(5, r), ..s.field(5) };
                graph_box_dimension(&sample).unwrap().dimension
            })
            .sum::<f64>()
            / 4.0;
        assert!((mean - (2.0 - h)).abs() <= 0.15, "H = {h}: {mean}");
        dims.push(mean);
    }
    assert!(dims.windows(2).all(|w| w[1] <= w[0]), "{dims:?}");
}

#[test]
fn scaling_check_passes_and_detects_wrong_hurst() {
    let spec = iso_spec(1, 0.5, 2.0);
    let pts = vec![v(&[0.2]), v(&[0.5]), v(&[-0.7])];
    let same = scaling_check(&spec, &pts, 1.0, &settings(200), Control::None).unwrap();
    assert!(same.z_scores.iter().all(|z| *z == 0.0), "{same:?}");
    let ok = scaling_check(&spec, &pts, 2.0, &settings(4000), Control::None).unwrap();
    assert!(ok.pass, "{ok:?}");
    let bad = scaling_check(&spec, &pts, 4.0, &settings(4000), Control::Hurst(0.6)).unwrap();
    assert!(!bad.pass && bad.max_abs_z > 5.0, "{bad:?}");
}

#[test]
fn stationarity_check_passes_and_detects_ramp() {
    let spec = iso_spec(1, 0.5, 2.0);
    let pts = vec![v(&[0.2]), v(&[0.5]), v(&[-0.7])];
    let exact = increment_stationarity_check(&spec, &pts, &v(&[0.0]), &settings(200), Control::None).unwrap();
    assert!(exact.z_scores.iter().all(|z| *z == 0.0), "{exact:?}");
    let ok = increment_stationarity_check(&spec, &pts, &v(&[0.37]), &settings(4000), Control::None).unwrap();
    assert!(ok.pass, "{ok:?}");
    let ramp = increment_stationarity_check(&spec, &pts, &v(&[0.37]), &settings(4000), Control::Ramp(1.0)).unwrap();
    assert!(!ramp.pass, "{ramp:?}");
}

#[test]
fn stable_checks_use_characteristic_functions() {
    let spec = iso_spec(1, 0.5, 1.5);
    let pts = vec![v(&[0.3]), v(&[0.8])];
    let ok = scaling_check(&spec, &pts, 2.0, &settings(4000), Control::None).unwrap();
    assert!(ok.pass, "{ok:?}");
    let bad = scaling_check(&spec, &pts, 4.0, &settings(4000), Control::Hurst(0.8)).unwrap();
    assert!(!bad.pass, "{bad:?}");
}

#[test]
fn checks_are_deterministic() {
    let spec = iso_spec(1, 0.5, 2.0);
    let pts = vec![v(&[0.2]), v(&[0.5])];
    let a = scaling_check(&spec, &pts, 2.0, &settings(300), Control::None).unwrap();
    let b = scaling_check(&spec, &pts, 2.0, &settings(300), Control::None).unwrap();
    assert_eq!(a.z_scores, b.z_scores);
    assert!(scaling_check(&spec, &[], 2.0, &settings(10), Control::None).is_err());
}
