//! Field descriptions, discretized stable measures and field synthesis.

mod lattice;
mod moving_average;
mod oracle;
mod far_field;
pub mod output;
pub mod rng;
mod spectral;
pub mod stable;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentSummary};
use crate::homogeneous::{Admissibility, HomogeneousFn};
use crate::polar::AnisoNorm;

pub use oracle::{covariance_oracle, field_variance, variance_oracle, Oracle};
pub use stable::HARMONIZABLE_C0;

/// Integral representation of the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// `int (phi(x - y)^{H - q/alpha} - phi(-y)^{H - q/alpha}) M_alpha(dy)`.
    MovingAverage,
    /// `Re int (e^{i<x, xi>} - 1) psi(xi)^{-H - q/alpha} W_alpha(d xi)`.
    Harmonizable,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::MovingAverage => "moving-average",
            Representation::Harmonizable => "harmonizable",
        }
    }
}

/// A validated field: exponent `E`, homogeneous function, Hurst index `H`
/// and stability index `alpha`.
///
/// For the moving average the function is `E`-homogeneous; for the
/// harmonizable field it is `E^t`-homogeneous.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    representation: Representation,
    exponent: Exponent,
    function: HomogeneousFn,
    hurst: f64,
    alpha: f64,
}

/// Serializable description of a [`FieldSpec`].
#[derive(Debug, Clone, Serialize)]
pub struct SpecSummary {
    pub representation: Representation,
    pub exponent: ExponentSummary,
    pub function: &'static str,
    pub admissibility: Admissibility,
    pub hurst: f64,
    pub alpha: f64,
}

impl FieldSpec {
    pub fn new(
        representation: Representation,
        exponent: Exponent,
        function: HomogeneousFn,
        hurst: f64,
        alpha: f64,
    ) -> Result<Self> {
        stable::check_alpha(alpha)?;
        if !hurst.is_finite() {
            return Err(Error::Domain(format!("Hurst index must be finite, got {hurst}")));
        }
        let target = match representation {
            Representation::MovingAverage => exponent.matrix().clone(),
            Representation::Harmonizable => exponent.matrix().transpose(),
        };
        let fe = crate::homogeneous::Homogeneous::exponent(&function).matrix();
        if fe.shape() != target.shape()
            || (fe - &target).amax() > 1e-10 * (1.0 + target.amax())
        {
            return Err(Error::Invalid(format!(
                "{} field needs a function homogeneous under {}",
                representation.as_str(),
                match representation {
                    Representation::MovingAverage => "E",
                    Representation::Harmonizable => "E^t",
                }
            )));
        }
        match representation {
            Representation::MovingAverage => {
                let adm = function.admissibility();
                if !(hurst > 0.0 && adm.exceeds(hurst)) {
                    return Err(Error::hypothesis(
                        "moving-average existence requires 0 < H < beta",
                        format!("H = {hurst}, beta = {}", adm.beta),
                    ));
                }
            }
            Representation::Harmonizable => {
                let a1 = exponent.a_min();
                if !(hurst > 0.0 && hurst < a1) {
                    return Err(Error::hypothesis(
                        "harmonizable existence requires H in (0, a_1)",
                        format!("H = {hurst}, a_1 = {a1}"),
                    ));
                }
            }
        }
        Ok(Self {
            representation,
            exponent,
            function,
            hurst,
            alpha,
        })
    }

    pub fn moving_average(exponent: Exponent, phi: HomogeneousFn, hurst: f64, alpha: f64) -> Result<Self> {
        Self::new(Representation::MovingAverage, exponent, phi, hurst, alpha)
    }

    pub fn harmonizable(exponent: Exponent, psi: HomogeneousFn, hurst: f64, alpha: f64) -> Result<Self> {
        Self::new(Representation::Harmonizable, exponent, psi, hurst, alpha)
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }
    pub fn exponent(&self) -> &Exponent {
        &self.exponent
    }
    pub fn function(&self) -> &HomogeneousFn {
        &self.function
    }
    pub fn hurst(&self) -> f64 {
        self.hurst
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn dim(&self) -> usize {
        self.exponent.dim()
    }

    /// Constant `k` in the characteristic function `exp(-k |t|^alpha Gamma^alpha)`.
    pub fn cf_constant(&self) -> f64 {
        match self.representation {
            Representation::MovingAverage => 0.5,
            Representation::Harmonizable => HARMONIZABLE_C0,
        }
    }

    pub fn summary(&self) -> SpecSummary {
        SpecSummary {
            representation: self.representation,
            exponent: self.exponent.summary(),
            function: self.function.kind(),
            admissibility: self.function.admissibility(),
            hurst: self.hurst,
            alpha: self.alpha,
        }
    }
}

/// Evaluation locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Grid {
    /// Regular lattice `origin + i * spacing`, stored row-major
    /// (last axis fastest).
    Lattice {
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
    },
    Points { points: Vec<Vec<f64>> },
}

impl Grid {
    pub fn lattice(origin: Vec<f64>, spacing: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        let g = Grid::Lattice {
            origin,
            spacing,
            shape,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn points(points: Vec<DVector<f64>>) -> Self {
        Grid::Points {
            points: points.into_iter().map(|p| p.as_slice().to_vec()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Grid::Lattice {
                origin,
                spacing,
                shape,
            } => {
                let d = origin.len();
                if d == 0 || spacing.len() != d || shape.len() != d {
                    return Err(Error::Invalid("lattice origin, spacing and shape must agree in length".into()));
                }
                if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) || shape.iter().any(|&n| n == 0) {
                    return Err(Error::Invalid("lattice spacing must be positive and shape nonzero".into()));
                }
            }
            Grid::Points { points } => {
                let d = points.first().map(|p| p.len()).unwrap_or(0);
                if d == 0 || points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
                    return Err(Error::Invalid("point set must be nonempty with equal finite dimensions".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Grid::Lattice { origin, .. } => origin.len(),
            Grid::Points { points } => points[0].len(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Lattice { shape, .. } => shape.iter().product(),
            Grid::Points { points } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the `k`-th location.
    pub fn point(&self, k: usize) -> DVector<f64> {
        match self {
            Grid::Lattice {
                origin,
                spacing,
                shape,
            } => {
                let d = origin.len();
                let mut idx = vec![0usize; d];
                let mut r = k;
                for a in (0..d).rev() {
                    idx[a] = r % shape[a];
                    r /= shape[a];
                }
                DVector::from_iterator(d, (0..d).map(|a| origin[a] + idx[a] as f64 * spacing[a]))
            }
            Grid::Points { points } => DVector::from_column_slice(&points[k]),
        }
    }

    pub fn all_points(&self) -> Vec<DVector<f64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

/// How the control measure is discretized. Unset values are chosen from
/// the grid and the field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    /// Radial window `[r_min, r_max]` of the polar cells, in units of the radial part.
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    /// Radial cells per decade.
    pub per_decade: Option<usize>,
    /// Angular cells per `2 pi`.
    pub angular: Option<usize>,
    /// Harmonizable only: uniform jitter of frequencies inside their cells.
    pub jitter: Option<bool>,
    /// Moving average on point sets: split cells closer than this many
    /// diameters to an evaluation point.
    pub refine_ratio: Option<f64>,
    /// Moving average on point sets: smallest cell diameter relative to the point spread.
    pub min_cell: Option<f64>,
    /// Moving average on lattices: noise cells per lattice spacing.
    pub subdivision: Option<usize>,
    /// Moving average on lattices: margin around the grid, in grid extents.
    pub margin: Option<f64>,
}

/// Discretization actually used, recorded with every sample.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationSummary {
    pub method: &'static str,
    pub cells: usize,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub per_decade: Option<usize>,
    pub angular: Option<usize>,
    pub jitter: Option<bool>,
    pub subdivision: Option<usize>,
    pub margin: Option<f64>,
}

/// One realization on a grid.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub seed: u64,
    pub spec: SpecSummary,
    pub discretization: DiscretizationSummary,
    pub warnings: Vec<String>,
}

enum Engine {
    Cells(moving_average::CellEngine),
    Lattice(lattice::LatticeEngine),
    Spectral(spectral::SpectralEngine),
}

/// Precomputed discretization of a field on a grid; draws realizations.
///
/// Realization `k` of seed `s` depends only on `(s, k)`, never on thread count.
pub struct Synthesizer {
    spec: FieldSpec,
    grid: Grid,
    engine: Engine,
    summary: DiscretizationSummary,
    warnings: Vec<String>,
}

impl Synthesizer {
    pub fn new(spec: &FieldSpec, grid: &Grid, disc: &Discretization) -> Result<Self> {
        grid.validate()?;
        if grid.dim() != spec.dim() {
            return Err(Error::Invalid(format!(
                "grid dimension {} differs from field dimension {}",
                grid.dim(),
                spec.dim()
            )));
        }
        if spec.dim() > 3 {
            return Err(Error::Unsupported("synthesis is implemented for d <= 3".into()));
        }
        let (engine, summary, warnings) = match spec.representation() {
            Representation::Harmonizable => {
                let (e, s, w) = spectral::SpectralEngine::new(spec, grid, disc)?;
                (Engine::Spectral(e), s, w)
            }
            Representation::MovingAverage => {
                let use_lattice = matches!(grid, Grid::Lattice { .. })
                    && spec.dim() <= 2
                    && disc.refine_ratio.is_none()
                    && disc.min_cell.is_none();
                if use_lattice {
                    let (e, s, w) = lattice::LatticeEngine::new(spec, grid, disc)?;
                    (Engine::Lattice(e), s, w)
                } else {
                    let (e, s, w) = moving_average::CellEngine::new(spec, grid, disc)?;
                    (Engine::Cells(e), s, w)
                }
            }
        };
        Ok(Self {
            spec: spec.clone(),
            grid: grid.clone(),
            engine,
            summary,
            warnings,
        })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn summary(&self) -> &DiscretizationSummary {
        &self.summary
    }
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Values of realization `replicate` for root `seed`.
    pub fn sample(&self, seed: u64, replicate: u64) -> Vec<f64> {
        match &self.engine {
            Engine::Cells(e) => e.sample(seed, replicate),
            Engine::Lattice(e) => e.sample(seed, replicate),
            Engine::Spectral(e) => e.sample(seed, replicate),
        }
    }

    /// Realizations `0..n`, in parallel over replicates.
    pub fn replicates(&self, seed: u64, n: usize) -> Vec<Vec<f64>> {
        (0..n as u64)
            .into_par_iter()
            .map(|r| self.sample(seed, r))
            .collect()
    }

    /// Realization 0 packaged with its metadata.
    pub fn field(&self, seed: u64) -> FieldSample {
        FieldSample {
            grid: self.grid.clone(),
            values: self.sample(seed, 0),
            seed,
            spec: self.spec.summary(),
            discretization: self.summary.clone(),
            warnings: self.warnings.clone(),
        }
    }

    /// `sum_c |k_c(x)|^alpha |c|` per location, for deterministic discretizations.
    pub fn discretized_scale(&self) -> Option<Vec<f64>> {
        match &self.engine {
            Engine::Cells(e) => Some(e.scale()),
            Engine::Lattice(e) => Some(e.scale()),
            Engine::Spectral(e) => e.scale(),
        }
    }
}

/// One moving-average realization.
pub fn synth_moving_average(spec: &FieldSpec, grid: &Grid, disc: &Discretization, seed: u64) -> Result<FieldSample> {
    if spec.representation() != Representation::MovingAverage {
        return Err(Error::Invalid("spec is not a moving-average field".into()));
    }
    Ok(Synthesizer::new(spec, grid, disc)?.field(seed))
}

/// One harmonizable realization.
pub fn synth_harmonizable(spec: &FieldSpec, grid: &Grid, disc: &Discretization, seed: u64) -> Result<FieldSample> {
    if spec.representation() != Representation::Harmonizable {
        return Err(Error::Invalid("spec is not a harmonizable field".into()));
    }
    Ok(Synthesizer::new(spec, grid, disc)?.field(seed))
}

/// Smallest and largest radial parts among nonzero points and differences
/// of a grid, in the polar coordinates of `norm`.
pub(crate) fn radial_scales(norm: &AnisoNorm, grid: &Grid) -> Result<(f64, f64)> {
    let pts = match grid {
        Grid::Lattice {
            origin,
            spacing,
            shape,
        } => {
            let d = origin.len();
            let mut v = Vec::new();
            for a in 0..d {
                let mut e = DVector::zeros(d);
                e[a] = spacing[a];
                v.push(e.clone());
                e[a] = spacing[a] * (shape[a].max(2) - 1) as f64;
                v.push(e);
            }
            v.push(grid.point(0));
            v.push(grid.point(grid.len() - 1));
            v
        }
        Grid::Points { points } => {
            let p: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_column_slice(p)).collect();
            let mut v = p.clone();
            let step = (p.len() / 64).max(1);
            for i in (0..p.len()).step_by(step) {
                for j in (i + 1..p.len()).step_by(step) {
                    v.push(&p[i] - &p[j]);
                }
            }
            v
        }
    };
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for p in pts {
        if p.norm() > 0.0 {
            let t = norm.radius(&p)?;
            lo = lo.min(t);
            hi = hi.max(t);
        }
    }
    if !lo.is_finite() {
        lo = 1.0;
        hi = 1.0;
    }
    Ok((lo, hi))
}
