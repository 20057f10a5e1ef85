use serde::Serialize;

use super::stats::{linear_fit, variance, LinearFit};
use crate::error::{Error, Result};
use crate::synthesis::{FieldSample, Grid};

/// Box-counting estimate of the graph dimension.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub dimension: f64,
    pub fit: LinearFit,
    /// `(ln 1/eps, ln N(eps))` for all scales; the fit uses the central ones.
    pub counts: Vec<(f64, f64)>,
}

/// Octaves dropped at each end of the scale range.
const TRIM: usize = 2;

/// Box-counting dimension of the graph of a lattice sample.
///
/// The domain is mapped to the unit cube and values are divided by their
/// sample standard deviation. Needs at least 2^9 points (d = 1) or 2^7 per
/// axis (d = 2).
pub fn graph_box_dimension(sample: &FieldSample) -> Result<DimensionReport> {
    let Grid::Lattice { shape, .. } = &sample.grid else {
        return Err(Error::Invalid("box counting needs a lattice sample".into()));
    };
    graph_box_dimension_values(&sample.values, shape)
}

pub fn graph_box_dimension_values(values: &[f64], shape: &[usize]) -> Result<DimensionReport> {
    let d = shape.len();
    let min = match d {
        1 => 512,
        2 => 128,
        _ => return Err(Error::Unsupported("box counting is implemented for d <= 2".into())),
    };
    if shape.iter().any(|&n| n < min) {
        return Err(Error::Invalid(format!(
            "grid {shape:?} too small for box counting (need {min} per axis)"
        )));
    }
    if values.len() != shape.iter().product::<usize>() {
        return Err(Error::Invalid("value count does not match the grid shape".into()));
    }
    let sd = variance(values).sqrt();
    let v: Vec<f64> = if sd > 0.0 {
        values.iter().map(|x| x / sd).collect()
    } else {
        vec![0.0; values.len()]
    };
    let intervals = shape.iter().map(|&n| n - 1).min().expect("nonempty shape");
    let kmax = (intervals as f64).log2().floor() as usize;
    let mut counts = Vec::new();
    for k in 1..=kmax {
        let cols = 1usize << k;
        let eps = 1.0 / cols as f64;
        let bounds = |n: usize, c: usize| -> (usize, usize) {
            let lo = c * (n - 1) / cols;
            let hi = (c + 1) * (n - 1) / cols;
            (lo, hi)
        };
        let mut total = 0.0;
        if d == 1 {
            for c in 0..cols {
                let (lo, hi) = bounds(shape[0], c);
                let (mn, mx) = v[lo..=hi]
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |a, &x| (a.0.min(x), a.1.max(x)));
                total += ((mx / eps).floor() - (mn / eps).floor() + 1.0).max(1.0);
            }
        } else {
            let n1 = shape[1];
            for c0 in 0..cols {
                let (a0, b0) = bounds(shape[0], c0);
                for c1 in 0..cols {
                    let (a1, b1) = bounds(shape[1], c1);
                    let mut mn = f64::INFINITY;
                    let mut mx = f64::NEG_INFINITY;
                    for i in a0..=b0 {
                        for x in &v[i * n1 + a1..=i * n1 + b1] {
                            mn = mn.min(*x);
                            mx = mx.max(*x);
                        }
                    }
                    total += ((mx / eps).floor() - (mn / eps).floor() + 1.0).max(1.0);
                }
            }
        }
        counts.push(((1.0 / eps).ln(), total.ln()));
    }
    if counts.len() < 2 * TRIM + 2 {
        return Err(Error::Invalid("too few scales after trimming".into()));
    }
    let fit = linear_fit(&counts[TRIM..counts.len() - TRIM]);
    Ok(DimensionReport {
        dimension: fit.slope,
        fit,
        counts,
    })
}
