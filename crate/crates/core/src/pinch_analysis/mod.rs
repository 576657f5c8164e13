//! Diffusion CDFs along the flow, the two estimators of the rate of
//! `int F dr`, concentrated families, the glued-space W1 decomposition, the
//! contractivity monitor and the contradiction report.

mod cdf;
mod family;
mod glued;
mod monitor;
mod report;

pub use cdf::{cdf_mass_rate, cdf_of_diffusion, cdf_of_frame, CdfSeries, RateSample};
pub use family::{concentrated_family, gamma_cutoff, ConcentratedFamily, FamilyOptions};
pub use glued::{w1_glued_decomposition, W1Decomposition};
pub use monitor::{contractivity_monitor, ContractivityReport, MonitorOptions, MonitorRow};
pub use report::{contradiction_report, synthetic_neck, ContradictionReport, PinchOptions, SweepRow, W1Row};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowError;
use crate::geometry::GeometryError;
use crate::heat::HeatError;
use crate::transport::TransportError;

/// Tolerance on `|int u dvol - 1|` for frames entering a CDF.
pub const MASS_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PinchError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("frame at tau = {tau} has mass {mass}, expected 1")]
    NotNormalized { tau: f64, mass: f64 },
    #[error("eps = {eps}, delta = {delta} inadmissible: {reason}")]
    Inadmissible { eps: f64, delta: f64, reason: String },
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("W1 decomposition {decomposed} differs from the direct value {direct}")]
    Decomposition { decomposed: f64, direct: f64 },
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// End of the meridian from which arclength is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// The `x = -1` end.
    #[default]
    South,
    /// The `x = +1` end.
    North,
}

impl Origin {
    pub fn reversed(self) -> Self {
        match self {
            Origin::South => Origin::North,
            Origin::North => Origin::South,
        }
    }

    /// `+1` when arclength from this origin increases with `x`.
    pub(crate) fn sign(self) -> f64 {
        match self {
            Origin::South => 1.0,
            Origin::North => -1.0,
        }
    }
}
