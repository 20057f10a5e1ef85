use nalgebra::DVector;
use serde::Serialize;

use super::stats::{quantile, z_score};
use crate::error::{Error, Result};
use crate::synthesis::{Discretization, FieldSpec, Grid, Synthesizer};

/// Pass threshold on `|z|`.
pub const Z_THRESHOLD: f64 = 3.0;

/// Monte Carlo settings shared by the empirical checks.
#[derive(Debug, Clone)]
pub struct CheckSettings {
    pub replicates: usize,
    pub seed: u64,
    pub discretization: Discretization,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            replicates: 2000,
            seed: 0,
            discretization: Discretization::default(),
        }
    }
}

/// Deliberate defects used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    None,
    /// Test scaling against this Hurst index instead of the true one.
    Hurst(f64),
    /// Add the deterministic ramp `k ||x||^2`, with `k` relative to the field scale.
    Ramp(f64),
}

/// Outcome of an empirical law comparison, one z-score per point.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub z_scores: Vec<f64>,
    pub max_abs_z: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckReport {
    fn new(name: String, z: Vec<f64>) -> Self {
        let m = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Self {
            name,
            max_abs_z: m,
            pass: m <= Z_THRESHOLD,
            threshold: Z_THRESHOLD,
            z_scores: z,
        }
    }
}

/// Paired z-scores comparing the laws of `a[r][i]` and `b[r][i]` over replicates `r`.
///
/// Gaussian fields compare second moments; otherwise the characteristic
/// function at `t = 1 / median |a|`.
fn compare(a: &[Vec<f64>], b: &[Vec<f64>], alpha: f64) -> Vec<f64> {
    let n = a[0].len();
    (0..n)
        .map(|i| {
            let xa: Vec<f64> = a.iter().map(|r| r[i]).collect();
            let xb: Vec<f64> = b.iter().map(|r| r[i]).collect();
            let diffs: Vec<f64> = if alpha == 2.0 {
                xa.iter().zip(&xb).map(|(p, q)| p * p - q * q).collect()
            } else {
                let abs: Vec<f64> = xa.iter().map(|v| v.abs()).collect();
                let med = quantile(&abs, 0.5);
                let t = if med > 0.0 { 1.0 / med } else { 1.0 };
                xa.iter()
                    .zip(&xb)
                    .map(|(p, q)| (t * p).cos() - (t * q).cos())
                    .collect()
            };
            z_score(&diffs)
        })
        .collect()
}

/// Compares `X(c^E x)` with `c^H X(x)` in law at each point.
pub fn scaling_check(
    spec: &FieldSpec,
    points: &[DVector<f64>],
    c: f64,
    settings: &CheckSettings,
    control: Control,
) -> Result<CheckReport> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Invalid("scaling check needs points".into()));
    }
    let m = spec.exponent().power(c)?;
    let mut all: Vec<DVector<f64>> = points.to_vec();
    all.extend(points.iter().map(|x| &m * x));
    let synth = Synthesizer::new(spec, &Grid::points(all), &settings.discretization)?;
    let h = match control {
        Control::Hurst(h) => h,
        _ => spec.hurst(),
    };
    let k = c.powf(h);
    let reps = synth.replicates(settings.seed, settings.replicates);
    let scaled: Vec<Vec<f64>> = reps.iter().map(|r| r[n..].to_vec()).collect();
    let base: Vec<Vec<f64>> = reps.iter().map(|r| r[..n].iter().map(|v| k * v).collect()).collect();
    Ok(CheckReport::new(
        format!("scaling c={c}"),
        compare(&scaled, &base, spec.alpha()),
    ))
}

/// Compares `X(x + h) - X(h)` with `X(x)` in law at each point.
pub fn increment_stationarity_check(
    spec: &FieldSpec,
    points: &[DVector<f64>],
    h: &DVector<f64>,
    settings: &CheckSettings,
    control: Control,
) -> Result<CheckReport> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Invalid("stationarity check needs points".into()));
    }
    let mut all: Vec<DVector<f64>> = points.iter().map(|x| x + h).collect();
    all.push(h.clone());
    all.extend(points.iter().cloned());
    let synth = Synthesizer::new(spec, &Grid::points(all.clone()), &settings.discretization)?;
    let mut reps = synth.replicates(settings.seed, settings.replicates);
    if let Control::Ramp(k) = control {
        let ms: f64 = reps.iter().flat_map(|r| r[n + 1..].iter().map(|v| v * v)).sum::<f64>()
            / (reps.len() * n) as f64;
        let mx: f64 = points.iter().map(|x| x.norm_squared()).sum::<f64>() / n as f64;
        let kk = k * ms.sqrt() / mx.max(1e-300);
        for r in reps.iter_mut() {
            for (v, x) in r.iter_mut().zip(&all) {
                *v += kk * x.norm_squared();
            }
        }
    }
    let inc: Vec<Vec<f64>> = reps
        .iter()
        .map(|r| (0..n).map(|i| r[i] - r[n]).collect())
        .collect();
    let base: Vec<Vec<f64>> = reps.iter().map(|r| r[n + 1..].to_vec()).collect();
    Ok(CheckReport::new(
        format!("stationarity h={:?}", h.as_slice()),
        compare(&inc, &base, spec.alpha()),
    ))
}
