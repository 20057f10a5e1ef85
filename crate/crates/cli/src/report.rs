//! `ossrf report`: what a configuration resolves to, before sampling.

use std::fmt::Write as _;

use nalgebra::DVector;
use ossrf::synthesis::{DiscretizationSummary, SpecSummary};
use ossrf::{AnisoNorm, Oracle, Representation, Synthesizer};
use serde::Serialize;

use crate::config::Run;
use crate::error::CliError;

/// Grid locations compared against the oracle.
const SCALE_POINTS: usize = 8;
/// Directions on the unit sphere in the profile comparison.
const PROFILE_DIRECTIONS: usize = 16;

#[derive(Debug, Serialize)]
pub struct ScaleRow {
    pub point: Vec<f64>,
    pub oracle: f64,
    pub discretized: Option<f64>,
}

/// `Gamma^alpha` on the unit sphere of `E` for both representations, each
/// divided by its mean over the sampled directions.
#[derive(Debug, Serialize)]
pub struct Profile {
    pub directions: Vec<Vec<f64>>,
    pub moving_average: Vec<f64>,
    pub harmonizable: Vec<f64>,
    pub max_ratio_deviation: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub spec: SpecSummary,
    pub discretization: DiscretizationSummary,
    pub warnings: Vec<String>,
    pub scale: Vec<ScaleRow>,
    /// Gaussian case only; `None` when the other representation cannot be
    /// built from this configuration.
    pub profile: Option<Profile>,
    pub notes: Vec<String>,
}

pub fn build(run: &Run) -> Result<Report, CliError> {
    let synth = Synthesizer::new(&run.spec, &run.config.grid, &run.config.discretization)?;
    let grid = &run.config.grid;
    let disc_scale = synth.discretized_scale();
    let mut notes = Vec::new();
    let mut scale = Vec::new();
    match Oracle::new(&run.spec) {
        Ok(oracle) => {
            let n = grid.len();
            let step = (n / SCALE_POINTS).max(1);
            for k in (step.min(n - 1)..n).step_by(step).take(SCALE_POINTS) {
                let x = grid.point(k);
                scale.push(ScaleRow {
                    point: x.as_slice().to_vec(),
                    oracle: oracle.gamma_alpha(&x)?,
                    discretized: disc_scale.as_ref().map(|s| s[k]),
                });
            }
        }
        Err(e) => notes.push(format!("no oracle: {e}")),
    }
    let profile = if run.spec.alpha() == 2.0 && run.exponent.dim() <= 3 {
        match profile(run) {
            Ok(p) => Some(p),
            Err(e) => {
                notes.push(format!("representation comparison unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };
    Ok(Report {
        spec: run.spec.summary(),
        discretization: synth.summary().clone(),
        warnings: synth.warnings().to_vec(),
        scale,
        profile,
        notes,
    })
}

fn profile(run: &Run) -> Result<Profile, CliError> {
    let h = run.spec.hurst();
    let ma = Oracle::new(&run.config.spec_with(Representation::MovingAverage, h)?)?;
    let harm = Oracle::new(&run.config.spec_with(Representation::Harmonizable, h)?)?;
    let norm = AnisoNorm::new(run.exponent.clone());
    let nodes = norm.sphere_measure(if run.exponent.dim() == 2 { 64 } else { 16 })?.nodes;
    let step = (nodes.len() / PROFILE_DIRECTIONS).max(1);
    let dirs: Vec<DVector<f64>> = nodes.iter().step_by(step).map(|n| n.direction.clone()).collect();
    let mut a = Vec::with_capacity(dirs.len());
    let mut b = Vec::with_capacity(dirs.len());
    for u in &dirs {
        a.push(ma.gamma_alpha(u)?);
        b.push(harm.gamma_alpha(u)?);
    }
    let normalize = |v: &mut Vec<f64>| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x /= m);
    };
    normalize(&mut a);
    normalize(&mut b);
    let dev = a.iter().zip(&b).map(|(x, y)| (x / y - 1.0).abs()).fold(0.0, f64::max);
    Ok(Profile {
        directions: dirs.iter().map(|u| u.as_slice().to_vec()).collect(),
        moving_average: a,
        harmonizable: b,
        max_ratio_deviation: dev,
    })
}

impl Report {
    pub fn text(&self) -> String {
        let mut s = String::new();
        let sp = &self.spec;
        let _ = writeln!(s, "representation  {}", sp.representation.as_str());
        let _ = writeln!(s, "function        {}", sp.function);
        let _ = writeln!(s, "H, alpha        {}, {}", sp.hurst, sp.alpha);
        let _ = writeln!(
            s,
            "admissibility   beta = {} ({})",
            sp.admissibility.beta,
            if sp.admissibility.inclusive { "inclusive" } else { "exclusive" }
        );
        let d = &self.discretization;
        let _ = writeln!(s, "discretization  {}, {} cells", d.method, d.cells);
        for w in &self.warnings {
            let _ = writeln!(s, "warning         {w}");
        }
        if !self.scale.is_empty() {
            let _ = writeln!(s, "\n{:<28} {:>14} {:>14} {:>8}", "point", "oracle", "discretized", "ratio");
            for r in &self.scale {
                let (disc, ratio) = match r.discretized {
                    Some(v) => (format!("{v:.6e}"), format!("{:.4}", v / r.oracle)),
                    None => ("random".into(), "-".into()),
                };
                let _ = writeln!(s, "{:<28} {:>14.6e} {:>14} {:>8}", format!("{:.4?}", r.point), r.oracle, disc, ratio);
            }
        }
        if let Some(p) = &self.profile {
            let _ = writeln!(s, "\nnormalized Gamma^2 on the unit sphere (not asserted equal)");
            let _ = writeln!(s, "{:<28} {:>14} {:>14}", "direction", "moving-avg", "harmonizable");
            for ((u, a), b) in p.directions.iter().zip(&p.moving_average).zip(&p.harmonizable) {
                let _ = writeln!(s, "{:<28} {:>14.6} {:>14.6}", format!("{u:.4?}"), a, b);
            }
            let _ = writeln!(s, "max ratio deviation {:.4}", p.max_ratio_deviation);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note            {n}");
        }
        s
    }
}
