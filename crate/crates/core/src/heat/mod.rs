//! Conjugate heat diffusion backward along a stored flow, the geodesic-sphere
//! operators `sigma`, `theta`, `A`, their Trotter-Chernov products, and weak
//! diffusions on glued spaces.

mod pde;
mod sphere;
mod trotter;
mod weak;

pub use pde::{conjugate_heat_solve, HeatMode, HeatOptions};
pub use sphere::{a_step, sigma_avg, theta_scale, GeodesicSpheres, OperatorParams};
pub use trotter::{trotter_product, ProductOrder, TrotterOptions};
pub use weak::{dirac_bump, weak_diffusion_glued, CapMetrics, GluedDensity, GluedDiffusionState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowError;
use crate::geometry::{GeometryError, GridProfile};

#[derive(Debug, Error)]
pub enum HeatError {
    #[error("invalid diffusion input: {0}")]
    InvalidInput(String),
    #[error("averaging radius {r} outside [{min}, {max}] at tau = {tau}; {hint}")]
    RadiusOutOfRange { r: f64, min: f64, max: f64, tau: f64, hint: String },
    #[error("diffusion failed at tau = {tau}: {reason}")]
    Numerical { tau: f64, reason: String },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Backward time `tau = t_ref - t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardClock {
    pub t_ref: f64,
}

impl BackwardClock {
    pub fn new(t_ref: f64) -> Self {
        BackwardClock { t_ref }
    }

    pub fn t_of(&self, tau: f64) -> f64 {
        self.t_ref - tau
    }

    pub fn tau_of(&self, t: f64) -> f64 {
        self.t_ref - t
    }
}

/// Density `u` with respect to `dvol_{g(tau)}` on a smooth profile.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionState {
    pub tau: f64,
    /// Arclength of each node at this `tau`.
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// Dual-cell volumes, so that `sum(u * dvol) = total_mass`.
    pub dvol: Vec<f64>,
    pub total_mass: f64,
}

impl DiffusionState {
    pub fn new(p: &GridProfile, tau: f64, u: Vec<f64>) -> Self {
        let dvol = p.volume_cells().weights();
        let total_mass = mass(&u, &dvol);
        DiffusionState { tau, r: p.arclength(), u, dvol, total_mass }
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn mass(u: &[f64], dvol: &[f64]) -> f64 {
    u.iter().zip(dvol).map(|(u, w)| u * w).sum()
}

/// Scales `u` to unit mass on `p`.
pub fn normalized(p: &GridProfile, u: &[f64]) -> Result<Vec<f64>, HeatError> {
    let m = mass(u, &p.volume_cells().weights());
    if !(m > 0.0 && m.is_finite()) {
        return Err(HeatError::InvalidInput(format!("density has mass {m}")));
    }
    Ok(u.iter().map(|v| v / m).collect())
}
