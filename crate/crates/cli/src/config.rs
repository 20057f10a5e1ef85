//! Run configuration: a TOML document describing one field, its grid and
//! what to do with it.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use ossrf::synthesis::output::{Format, FORMAT_VERSION};
use ossrf::{Discretization, Exponent, FieldSpec, Grid, HomogeneousFn, Representation};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schema version; only "1" is accepted.
    #[serde(default = "default_version")]
    pub format_version: String,
    #[serde(default)]
    pub seed: u64,
    pub representation: Representation,
    pub hurst: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Rows of `E`.
    pub exponent: Vec<Vec<f64>>,
    pub function: FunctionConfig,
    pub grid: Grid,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

/// The homogeneous function. It is built for `E` (moving average) or for
/// `E^t` (harmonizable), so closed-form directions are eigenvectors of the
/// transpose of that matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionConfig {
    ClosedForm {
        directions: Vec<Vec<f64>>,
        /// Defaults to the Rayleigh quotients of the directions.
        eigenvalues: Option<Vec<f64>>,
        coefficients: Option<Vec<f64>>,
        rho: f64,
    },
    IntegralForm {
        atoms: Vec<AtomConfig>,
    },
    IsotropicNorm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub direction: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub stem: String,
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            stem: "field".into(),
            format: "bin".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub replicates: usize,
    /// Points for the scaling and stationarity checks; defaults depend on the dimension.
    pub points: Option<Vec<Vec<f64>>>,
    pub scales: Vec<f64>,
    pub offsets: Option<Vec<Vec<f64>>>,
    /// Negative control: test scaling against `H + hurst_offset`.
    pub hurst_offset: f64,
    /// Negative control: add a deterministic ramp of this relative size.
    pub ramp: f64,
    /// Sample paths averaged by the dimension suite.
    pub paths: usize,
    /// Tolerance on fitted exponents in the regularity suite.
    pub exponent_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            replicates: 2000,
            points: None,
            scales: vec![0.5, 2.0, 4.0],
            offsets: None,
            hurst_offset: 0.0,
            ramp: 0.0,
            paths: 4,
            exponent_tol: 0.05,
        }
    }
}

fn default_version() -> String {
    FORMAT_VERSION.into()
}

fn default_alpha() -> f64 {
    2.0
}

/// A loaded and validated configuration.
pub struct Run {
    pub config: RunConfig,
    pub spec: FieldSpec,
    pub exponent: Exponent,
    pub format: Format,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if config.format_version != FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "unsupported format_version '{}', expected '{FORMAT_VERSION}'",
                config.format_version
            )));
        }
        Ok(config)
    }

    pub fn exponent(&self) -> Result<Exponent, CliError> {
        let d = self.exponent.len();
        if d == 0 || self.exponent.iter().any(|r| r.len() != d) {
            return Err(CliError::Config("exponent must be a square matrix given by rows".into()));
        }
        let entries: Vec<f64> = self.exponent.iter().flatten().copied().collect();
        Ok(Exponent::from_rows(d, &entries)?)
    }

    /// Builds the function for the given homogeneity exponent.
    pub fn function(&self, target: &Exponent) -> Result<HomogeneousFn, CliError> {
        let d = target.dim();
        let vector = |x: &[f64], what: &str| -> Result<DVector<f64>, CliError> {
            if x.len() != d {
                return Err(CliError::Config(format!("{what} must have {d} entries")));
            }
            Ok(DVector::from_column_slice(x))
        };
        Ok(match &self.function {
            FunctionConfig::ClosedForm {
                directions,
                eigenvalues,
                coefficients,
                rho,
            } => {
                let dirs = directions
                    .iter()
                    .map(|t| vector(t, "closed-form direction"))
                    .collect::<Result<Vec<_>, _>>()?;
                let at: DMatrix<f64> = target.matrix().transpose();
                let lams = match eigenvalues {
                    Some(l) => l.clone(),
                    None => dirs.iter().map(|t| (&at * t).dot(t) / t.norm_squared()).collect(),
                };
                let coef = coefficients.clone().unwrap_or_else(|| vec![1.0; dirs.len()]);
                HomogeneousFn::closed_form(Some(target.clone()), dirs, lams, coef, *rho)?
            }
            FunctionConfig::IntegralForm { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| Ok((vector(&a.direction, "atom direction")?, a.weight)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                HomogeneousFn::integral_form(target.clone(), atoms)?
            }
            FunctionConfig::IsotropicNorm => HomogeneousFn::isotropic_norm(target.clone())?,
        })
    }

    /// Field spec for `hurst`, re-checking every existence hypothesis.
    pub fn spec_with(&self, representation: Representation, hurst: f64) -> Result<FieldSpec, CliError> {
        let e = self.exponent()?;
        let target = match representation {
            Representation::MovingAverage => e.clone(),
            Representation::Harmonizable => e.transpose(),
        };
        let f = self.function(&target)?;
        Ok(FieldSpec::new(representation, e, f, hurst, self.alpha)?)
    }

    pub fn validate(self, format: Option<&str>) -> Result<Run, CliError> {
        self.grid.validate()?;
        let exponent = self.exponent()?;
        if self.grid.dim() != exponent.dim() {
            return Err(CliError::Config(format!(
                "grid dimension {} does not match exponent dimension {}",
                self.grid.dim(),
                exponent.dim()
            )));
        }
        let format: Format = format.unwrap_or(&self.output.format).parse()?;
        let spec = self.spec_with(self.representation, self.hurst)?;
        Ok(Run {
            config: self,
            spec,
            exponent,
            format,
        })
    }
}
