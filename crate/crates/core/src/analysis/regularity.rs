use nalgebra::DVector;
use serde::Serialize;

use super::stats::{linear_fit, LinearFit};
use crate::error::{Error, Result};
use crate::synthesis::{FieldSpec, Oracle};

/// Log-log fit of the squared scale along one direction.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub direction: Vec<f64>,
    /// Fit of `ln Gamma^2(t u)` on `ln t`.
    pub fit: LinearFit,
    /// `H / a_i` for the spectral subspace containing the direction.
    pub predicted_exponent: f64,
    /// Half the fitted slope.
    pub exponent: f64,
}

/// Default radii for the regularity fits.
pub fn default_radii() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-3.0 + 0.25 * k as f64)).collect()
}

/// Slope of `ln Gamma^2(t u)` in `ln t`, from the oracle.
pub fn directional_holder(oracle: &Oracle, u: &DVector<f64>, radii: &[f64]) -> Result<RegularityReport> {
    let spec: &FieldSpec = oracle.spec();
    if radii.len() < 3 || radii.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Invalid("regularity fit needs at least 3 positive radii".into()));
    }
    let i = spec
        .exponent()
        .spectral_index(u)
        .ok_or_else(|| Error::Domain("direction must be nonzero".into()))?;
    let alpha = spec.alpha();
    let mut pts = Vec::with_capacity(radii.len());
    for &t in radii {
        let g = oracle.gamma_alpha(&(u * t))?;
        pts.push((t.ln(), 2.0 / alpha * g.ln()));
    }
    let fit = linear_fit(&pts);
    Ok(RegularityReport {
        direction: u.as_slice().to_vec(),
        predicted_exponent: spec.hurst() / spec.exponent().real_spectrum()[i],
        exponent: 0.5 * fit.slope,
        fit,
    })
}

/// Minimum over directions of the directional exponents.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalReport {
    pub exponent: f64,
    /// `H / a_p`.
    pub predicted: f64,
    pub per_direction: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn critical_exponent(oracle: &Oracle, directions: &[DVector<f64>], radii: &[f64]) -> Result<CriticalReport> {
    let spec = oracle.spec();
    let e = spec.exponent();
    let p = e.real_spectrum().len() - 1;
    let mut warnings = Vec::new();
    if !directions.iter().any(|u| e.spectral_index(u) == Some(p)) {
        warnings.push("no sampled direction reaches the top spectral subspace; the estimate is biased upward".into());
    }
    let mut per = Vec::with_capacity(directions.len());
    for u in directions {
        per.push(directional_holder(oracle, u, radii)?.exponent);
    }
    Ok(CriticalReport {
        exponent: per.iter().copied().fold(f64::INFINITY, f64::min),
        predicted: spec.hurst() / e.a_max(),
        per_direction: per,
        warnings,
    })
}
