#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Taylor series of the matrix exponential with squaring, used as an
/// independent reference for small matrices.
pub fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.amax() * n as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Lanczos approximation of the gamma function (g = 7, n = 9).
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// `int_0^inf (1 - cos s) s^{-1-nu} ds` for `0 < nu < 2`.
pub fn one_minus_cos_moment(nu: f64) -> f64 {
    if (nu - 1.0).abs() < 1e-12 {
        std::f64::consts::FRAC_PI_2
    } else {
        -gamma(-nu) * (std::f64::consts::PI * nu / 2.0).cos()
    }
}

pub fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Composite Gauss-Legendre tensor rule on a box, for Cartesian reference integrals.
pub fn box_integral<F: Fn(&DVector<f64>) -> f64>(f: F, lo: &[f64], hi: &[f64], panels: usize) -> f64 {
    let gl = ossrf::quadrature::gauss_legendre(8);
    let d = lo.len();
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::new();
    for k in 0..d {
        let h = (hi[k] - lo[k]) / panels as f64;
        let mut nodes = Vec::new();
        for p in 0..panels {
            let a = lo[k] + p as f64 * h;
            nodes.extend(gl.mapped(a, a + h));
        }
        axes.push(nodes);
    }
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    loop {
        let x = DVector::from_iterator(d, (0..d).map(|k| axes[k][idx[k]].0));
        let w: f64 = (0..d).map(|k| axes[k][idx[k]].1).product();
        total += w * f(&x);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return total;
            }
        }
    }
}

/// The four exponents used across the polar tests.
pub fn test_exponents() -> Vec<(&'static str, DMatrix<f64>)> {
    vec![
        ("identity", DMatrix::identity(2, 2)),
        ("diag(1,2)", DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])),
        ("rotation", DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0])),
        (
            "mixed 3x3",
            DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, 1.0, 1.0, 0.0, 0.3, 0.0, 1.6]),
        ),
    ]
}
