//! Empirical and oracle-based checks of scaling, stationarity, regularity
//! and graph dimension.

mod checks;
mod dimension;
mod regularity;
pub mod stats;

pub use checks::{increment_stationarity_check, scaling_check, CheckReport, CheckSettings, Control};
pub use dimension::{graph_box_dimension, graph_box_dimension_values, DimensionReport};
pub use regularity::{critical_exponent, default_radii, directional_holder, CriticalReport, RegularityReport};
