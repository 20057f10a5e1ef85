//! Stable random fields with matrix scaling exponents.
//!
//! The crate covers the matrix exponent algebra (`c^E`, spectral split),
//! anisotropic polar coordinates, `E`-homogeneous functions, synthesis of
//! moving-average and harmonizable fields, and empirical checks of their
//! scaling, stationarity, regularity and graph dimension.

pub mod analysis;
pub mod error;
pub mod exponent;
pub mod homogeneous;
pub mod polar;
pub mod quadrature;
pub mod synthesis;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use homogeneous::{HomogeneousFn, Homogeneous};
pub use polar::{polar_integrate, AnisoNorm, Polar, SphereMeasure};
pub use synthesis::{
    Discretization, FieldSample, FieldSpec, Grid, Oracle, Representation, Synthesizer,
};
