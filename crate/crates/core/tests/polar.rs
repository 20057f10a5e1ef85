mod common;

use std::f64::consts::PI;

use common::{box_integral, test_exponents, v};
use nalgebra::DVector;
use ossrf::analysis::stats::linear_fit;
use ossrf::{polar_integrate, AnisoNorm, Exponent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn norm_of(rows: &nalgebra::DMatrix<f64>) -> AnisoNorm {
    AnisoNorm::new(Exponent::new(rows.clone()).unwrap())
}

#[test]
fn norm_matches_closed_forms() {
    let id = AnisoNorm::new(Exponent::scalar(2, 1.0).unwrap());
    assert!((id.norm0(&v(&[3.0, 4.0])) - 5.0).abs() < 1e-12);
    let a = AnisoNorm::new(Exponent::scalar(3, 2.5).unwrap());
    assert!((a.norm0(&v(&[1.0, 2.0, 2.0])) - 3.0 / 2.5).abs() < 1e-12);
    let d = AnisoNorm::new(Exponent::diagonal(&[1.0, 2.0]).unwrap());
    assert!((d.norm0(&v(&[0.0, 3.0])) - 1.5).abs() < 1e-12);
    assert!((d.norm0(&v(&[-2.0, 0.0])) - 2.0).abs() < 1e-12);
}

#[test]
fn radius_matches_scalar_exponent() {
    // x = tau^a l with ||l|| = a.
    let a = 1.7;
    let n = AnisoNorm::new(Exponent::scalar(2, a).unwrap());
    let x = v(&[0.3, -2.0]);
    let want = (x.norm() / a).powf(1.0 / a);
    assert!((n.radius(&x).unwrap() / want - 1.0).abs() < 1e-10);
}

#[test]
fn origin_has_no_direction() {
    let n = AnisoNorm::new(Exponent::diagonal(&[1.0, 2.0]).unwrap());
    let p = n.polar(&DVector::zeros(2)).unwrap();
    assert_eq!(p.radius, 0.0);
    assert!(p.direction.is_none());
}

#[test]
fn radius_scales_and_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, m) in test_exponents() {
        let n = norm_of(&m);
        let e = n.exponent().clone();
        let d = e.dim();
        let mut worst_scale = 0.0f64;
        let mut worst_rec = 0.0f64;
        for _ in 0..1000 {
            let x = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)))
                * 10f64.powf(rng.random_range(-2.0..2.0));
            let c = 10f64.powf(rng.random_range(-2.0..2.0));
            let p = n.polar(&x).unwrap();
            let tc = n.radius(&(e.power(c).unwrap() * &x)).unwrap();
            worst_scale = worst_scale.max((tc - c * p.radius).abs() / (c * p.radius));
            let l = p.direction.unwrap();
            assert!((n.norm0(&l) - 1.0).abs() < 1e-12);
            let back = e.power(p.radius).unwrap() * l;
            worst_rec = worst_rec.max((back - &x).norm() / x.norm());
        }
        assert!(worst_scale < 1e-8, "{name}: scaling error {worst_scale:e}");
        assert!(worst_rec < 1e-8, "{name}: reconstruction error {worst_rec:e}");
    }
}

#[test]
fn sphere_measure_of_identity() {
    let n2 = AnisoNorm::new(Exponent::scalar(2, 1.0).unwrap());
    let t2 = n2.sphere_measure(64).unwrap().total();
    assert!((t2 / (2.0 * PI) - 1.0).abs() < 0.01, "{t2}");
    let n3 = AnisoNorm::new(Exponent::scalar(3, 1.0).unwrap());
    let t3 = n3.sphere_measure(32).unwrap().total();
    assert!((t3 / (4.0 * PI) - 1.0).abs() < 0.01, "{t3}");
}

#[test]
fn sphere_measure_of_scalar_exponent() {
    // Unit sphere is the circle of radius a; density a^3.
    let a = 0.8;
    let n = AnisoNorm::new(Exponent::scalar(2, a).unwrap());
    let t = n.sphere_measure(64).unwrap().total();
    assert!((t / (2.0 * PI * a.powi(3)) - 1.0).abs() < 1e-6);
}

#[test]
fn coarse_three_dimensional_measure_warns() {
    let n = AnisoNorm::new(Exponent::scalar(3, 1.0).unwrap());
    assert!(!n.sphere_measure(8).unwrap().warnings.is_empty());
    assert!(n.sphere_measure(4).is_err());
}

#[test]
fn unit_ball_volume_for_identity() {
    let n = AnisoNorm::new(Exponent::scalar(2, 1.0).unwrap());
    let m = n.sphere_measure(64).unwrap();
    let vol = polar_integrate(&n, &m, |_| 1.0, 0.0, 1.0, 1e-10).unwrap();
    assert!((vol - PI).abs() < 1e-6, "{vol}");
}

#[test]
fn gaussian_density_integrates_to_one() {
    for (name, m) in test_exponents() {
        let n = norm_of(&m);
        let d = n.dim() as f64;
        let meas = n.sphere_measure(if n.dim() == 2 { 128 } else { 48 }).unwrap();
        let norm_c = (2.0 * PI).powf(-d / 2.0);
        let total = polar_integrate(&n, &meas, |x| norm_c * (-0.5 * x.norm_squared()).exp(), 0.0, 1e4, 1e-9).unwrap();
        assert!((total - 1.0).abs() < 1e-3, "{name}: {total}");
    }
}

#[test]
fn radial_power_matches_sphere_total() {
    for (name, m) in test_exponents() {
        let n = norm_of(&m);
        let meas = n.sphere_measure(if n.dim() == 2 { 64 } else { 24 }).unwrap();
        let q = n.exponent().trace();
        let beta = 0.7;
        // On the quadrature nodes tau(r^E theta) = r exactly.
        let val = polar_integrate(
            &n,
            &meas,
            |x| n.radius(x).unwrap().powf(beta),
            0.0,
            1.0,
            1e-10,
        )
        .unwrap();
        let want = meas.total() / (beta + q);
        assert!((val / want - 1.0).abs() < 1e-6, "{name}: {val} vs {want}");
    }
}

#[test]
fn polar_integration_matches_cartesian_quadrature() {
    let probes: Vec<(&str, Box<dyn Fn(&DVector<f64>) -> f64>)> = vec![
        ("gaussian", Box::new(|x: &DVector<f64>| (-x.norm_squared()).exp())),
        (
            "shifted",
            Box::new(|x: &DVector<f64>| {
                let c = DVector::from_fn(x.len(), |i, _| if i == 0 { 0.5 } else { -0.3 });
                (-(x - c).norm_squared() / 0.5).exp() * (1.0 + x[0] * x[0])
            }),
        ),
        (
            "anisotropic",
            Box::new(|x: &DVector<f64>| {
                let s: f64 = x.iter().enumerate().map(|(i, v)| v * v * (1.0 + i as f64)).sum();
                (-s).exp() * (1.0 + (x[1] * 2.0).cos()) 
            }),
        ),
    ];
    for (name, m) in test_exponents() {
        let n = norm_of(&m);
        let d = n.dim();
        let meas = n.sphere_measure(if d == 2 { 128 } else { 40 }).unwrap();
        for (pname, f) in &probes {
            let polar = polar_integrate(&n, &meas, |x| f(x), 0.0, 1e3, 1e-9).unwrap();
            let lo = vec![-5.0; d];
            let hi = vec![5.0; d];
            let cart = box_integral(|x| f(x), &lo, &hi, if d == 2 { 20 } else { 8 });
            assert!((polar / cart - 1.0).abs() < 0.01, "{name}/{pname}: {polar} vs {cart}");
        }
    }
}

#[test]
fn quasi_triangle_constant_is_one_for_identity() {
    let n = AnisoNorm::new(Exponent::scalar(2, 1.0).unwrap());
    let k = n.quasi_triangle_constant(500, 3).unwrap();
    assert!(k <= 1.0 + 1e-9, "{k}");
    let d = AnisoNorm::new(Exponent::diagonal(&[1.0, 2.0]).unwrap());
    let k = d.quasi_triangle_constant(500, 3).unwrap();
    assert!((1.0..10.0).contains(&k), "{k}");
}

#[test]
fn growth_envelope_holds() {
    for (name, m) in test_exponents() {
        let n = norm_of(&m);
        let r = n.growth_envelope(0.05, 1000, 5).unwrap();
        assert!(r.pass(), "{name}: {r:?}");
    }
}

#[test]
fn shell_integral_is_log_linear() {
    // L(r) = int_{1 <= tau <= r} tau^{-q} dx by Cartesian quadrature in
    // sinh-stretched coordinates.
    let n = AnisoNorm::new(Exponent::diagonal(&[1.0, 2.0]).unwrap());
    let q = 3.0;
    let radii: Vec<f64> = (1..=4).map(|k| (0.5 * k as f64).exp()).collect();
    let m = 280;
    let h = 14.0 / m as f64;
    let mut sums = vec![0.0; radii.len()];
    for i in 0..m {
        let s1 = -7.0 + (i as f64 + 0.5) * h;
        for j in 0..m {
            let s2 = -7.0 + (j as f64 + 0.5) * h;
            let x = v(&[s1.sinh(), s2.sinh()]);
            let t = n.radius(&x).unwrap();
            if t < 1.0 {
                continue;
            }
            let w = s1.cosh() * s2.cosh() * h * h * t.powf(-q);
            for (k, r) in radii.iter().enumerate() {
                if t <= *r {
                    sums[k] += w;
                }
            }
        }
    }
    let pts: Vec<(f64, f64)> = radii.iter().zip(&sums).map(|(r, s)| (r.ln(), *s)).collect();
    let fit = linear_fit(&pts);
    assert!(fit.r2 >= 0.999, "{fit:?}");
    let sigma = n.sphere_measure(128).unwrap().total();
    assert!((fit.slope / sigma - 1.0).abs() < 0.03, "{} vs {sigma}", fit.slope);
}
