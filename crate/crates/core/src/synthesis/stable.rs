//! Stable variates.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Normalizing constant of the complex isotropic noise: `Re` of a unit
/// atom has characteristic function `exp(-C0 |t|^alpha)`.
pub const HARMONIZABLE_C0: f64 = 0.25;

/// Symmetric alpha-stable variate with characteristic function `exp(-|t|^alpha)`
/// (Chambers-Mallows-Stuck).
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        return SQRT_2 * rng.sample::<f64, _>(StandardNormal);
    }
    let v: f64 = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = rng.sample(Exp1);
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Positive `a`-stable variate with Laplace transform `exp(-lambda^a)`,
/// `0 < a < 1` (Kanter).
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random_range(0.0..PI);
    let w: f64 = rng.sample(Exp1);
    let s = (a * u).sin() / u.sin().powf(1.0 / a);
    s * (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a)
}

/// Complex isotropic sub-Gaussian variate `W` with
/// `E exp(i t Re(z W)) = exp(-C0 |t z|^alpha)`.
pub fn complex_isotropic<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Complex<f64> {
    let s = HARMONIZABLE_C0.powf(1.0 / alpha) * SQRT_2;
    let a = if alpha == 2.0 {
        1.0
    } else {
        positive_stable(alpha / 2.0, rng)
    };
    let k = s * a.sqrt();
    Complex::new(
        k * rng.sample::<f64, _>(StandardNormal),
        k * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Validates a stability index.
pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("stability index must lie in (0, 2], got {alpha}")))
    }
}
