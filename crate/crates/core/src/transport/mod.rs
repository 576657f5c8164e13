//! Optimal transport on the line, exact discrete oracles and warped grids.

mod line;
mod oracle;
mod radial;
mod warped;
mod wasserstein;

use thiserror::Error;

pub use line::{cdf, quantile, LineMeasure};
pub use oracle::{discrete_ot_oracle, permutation_oracle, DiscretePlan, MAX_ATOMS};
pub use radial::{glued_line_positions, pushforward_glued, pushforward_radial, RadialPushforward};
pub use warped::{radial_transport_check, RadialCheckOptions, RadialReport, WarpedGridSpace};
pub use wasserstein::{hoeffding_frechet_plan, w1_area, wasserstein_p, TransportPlan};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("quantile integral {quantile} disagrees with CDF area {area}")]
    Inconsistent { quantile: f64, area: f64 },
    #[error("unsupported exponent p = {0}")]
    UnsupportedExponent(u32),
    #[error("measures of mass {mass_a} and {mass_b} cannot be coupled")]
    Infeasible { mass_a: f64, mass_b: f64 },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}
