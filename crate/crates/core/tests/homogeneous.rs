mod common;

use common::{one_minus_cos_moment, v};
use nalgebra::{DMatrix, DVector};
use ossrf::homogeneous::{certify_admissibility, certify_homogeneity, Homogeneous, HOMOGENEITY_TOL};
use ossrf::{Error, Exponent, HomogeneousFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn basis() -> Vec<DVector<f64>> {
    vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]
}

fn closed(rho: f64) -> HomogeneousFn {
    HomogeneousFn::closed_form(None, basis(), vec![1.0, 2.0], vec![1.0, 1.5], rho).unwrap()
}

#[test]
fn closed_form_builds_its_exponent() {
    let f = closed(1.5);
    let m = f.exponent().matrix();
    assert!((m - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])).amax() < 1e-12);
    // Non-diagonal eigenbasis.
    let dirs = vec![v(&[1.0, 1.0]), v(&[0.0, 1.0])];
    let g = HomogeneousFn::closed_form(None, dirs.clone(), vec![1.0, 1.5], vec![1.0, 1.0], 1.2).unwrap();
    for (t, l) in dirs.iter().zip([1.0, 1.5]) {
        assert!((g.exponent().matrix().transpose() * t - t * l).norm() < 1e-12);
    }
}

#[test]
fn variants_are_homogeneous() {
    let iso = HomogeneousFn::isotropic_norm(Exponent::from_rows(2, &[0.9, -0.4, 0.4, 0.9]).unwrap()).unwrap();
    let e_int = Exponent::diagonal(&[0.8, 1.3]).unwrap();
    let int = HomogeneousFn::integral_form(e_int, vec![(v(&[1.0, 0.0]), 1.0), (v(&[0.0, 2.0]), 0.5)]).unwrap();
    for (name, f) in [("closed", closed(1.5)), ("isotropic", iso), ("integral", int)] {
        let r = certify_homogeneity(&f, 200, 9).unwrap();
        assert!(r.pass, "{name}: {r:?}");
        assert!(r.max_violation <= HOMOGENEITY_TOL);
    }
}

#[test]
fn integral_form_quadrature_path_is_homogeneous() {
    // A non-eigenvector atom forces the oscillatory radial quadrature.
    let e = Exponent::diagonal(&[0.8, 1.3]).unwrap();
    let f = HomogeneousFn::integral_form(e, vec![(v(&[1.0, 1.0]), 1.0)]).unwrap();
    let r = certify_homogeneity(&f, 12, 4).unwrap();
    assert!(r.pass, "{r:?}");
}

struct Corrupted(HomogeneousFn);

impl Homogeneous for Corrupted {
    fn exponent(&self) -> &Exponent {
        self.0.exponent()
    }
    // First coefficient perturbed by 1e-3 outside the Euclidean unit ball.
    fn value(&self, x: &DVector<f64>) -> ossrf::Result<f64> {
        let c1 = if x.norm() > 1.0 { 1.0 + 1e-3 } else { 1.0 };
        let s = c1 * x[0].abs().powf(1.5) + 1.5 * x[1].abs().powf(0.75);
        Ok(s.powf(1.0 / 1.5))
    }
}

#[test]
fn corrupted_coefficient_fails_certification() {
    let f = Corrupted(closed(1.5));
    let r = certify_homogeneity(&f, 500, 2).unwrap();
    assert!(!r.pass);
    assert!(r.max_violation >= 1e-4, "{r:?}");
}

#[test]
fn integral_and_closed_forms_agree() {
    // psi with exponent E / rho and gamma_j = C_j lambda_j / (rho I_j) equals phi^rho.
    let rho = 1.5;
    let lam = [1.0, 2.0];
    let c = [1.0, 1.5];
    let phi = closed(rho);
    let e_psi = Exponent::diagonal(&[lam[0] / rho, lam[1] / rho]).unwrap();
    let atoms = basis()
        .into_iter()
        .zip(lam.iter().zip(&c))
        .map(|(t, (&l, &cj))| (t, cj * l / (rho * one_minus_cos_moment(rho / l))))
        .collect();
    let psi = HomogeneousFn::integral_form(e_psi, atoms).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = v(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
        let want = phi.eval(&x).unwrap().powf(rho);
        let quad = psi.eval_quadrature(&x).unwrap();
        let fast = psi.eval(&x).unwrap();
        worst = worst.max((quad - want).abs() / want).max((fast - want).abs() / want);
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn hypotheses_are_enforced() {
    let e = HomogeneousFn::closed_form(None, basis(), vec![1.0, 2.0], vec![1.0, 1.0], 2.0).unwrap_err();
    assert!(e.is_hypothesis(), "{e}");
    let e = HomogeneousFn::integral_form(Exponent::diagonal(&[0.5, 1.0]).unwrap(), vec![(v(&[1.0, 1.0]), 1.0)])
        .unwrap_err();
    assert!(e.is_hypothesis(), "{e}");
    let e = HomogeneousFn::integral_form(Exponent::diagonal(&[1.0, 2.0]).unwrap(), vec![(v(&[1.0, 0.0]), 1.0)])
        .unwrap_err();
    assert!(matches!(e, Error::Invalid(_)), "{e}");
    let e = HomogeneousFn::closed_form(
        Some(Exponent::diagonal(&[1.0, 2.0]).unwrap()),
        vec![v(&[1.0, 1.0]), v(&[0.0, 1.0])],
        vec![1.0, 2.0],
        vec![1.0, 1.0],
        1.0,
    )
    .unwrap_err();
    assert!(matches!(e, Error::Invalid(_)), "{e}");
    let e = HomogeneousFn::isotropic_norm(Exponent::diagonal(&[1.0, 2.0]).unwrap()).unwrap_err();
    assert!(matches!(e, Error::Invalid(_)));
}

#[test]
fn admissibility_exponents_follow_the_spectrum() {
    let a = closed(1.5).admissibility();
    assert!((a.beta - 0.75).abs() < 1e-15 && !a.inclusive);
    let b = closed(0.8).admissibility();
    assert!((b.beta - 0.8).abs() < 1e-15 && b.inclusive);
    let iso = HomogeneousFn::isotropic_norm(Exponent::scalar(2, 0.7).unwrap()).unwrap();
    assert_eq!(iso.admissibility().beta, 0.7);
}

#[test]
fn admissibility_probe_separates_exponents() {
    let f = closed(1.5);
    let ok = certify_admissibility(&f, 0.7, 0.5, 2.0, 64, 1).unwrap();
    assert!(ok.pass, "{ok:?}");
    let bad = certify_admissibility(&f, f.exponent().a_min() + 0.2, 0.5, 2.0, 64, 1).unwrap();
    assert!(!bad.pass);
    assert!(bad.exceeds_spectral_bound);
    assert!(bad.growth > 0.1, "{}", bad.growth);
}

#[test]
fn extrema_on_the_sphere_are_positive() {
    let (lo, hi) = closed(1.5).extrema(64).unwrap();
    assert!(lo > 0.0 && hi >= lo && hi.is_finite());
}
