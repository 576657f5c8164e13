//! Rotationally symmetric metrics `g = phi(x)^2 dx^2 + psi(x)^2 g_can` on
//! `S^{n+1}`, their curvature, and the glued singular space.

mod curvature;
mod glued;
pub mod interp;
mod profile;
pub mod stencil;

pub(crate) use curvature::r_derivatives;
pub use curvature::{curvature, radial_laplacian, CurvatureSample, RadialDerivatives};
pub use glued::{glued_distance, CapAttachment, GluedPoint, GluedSpace};
pub use profile::{arclength, build_profile, perturbed_dumbbell, sphere_area, GridProfile, ProfileKind, VolumeCells};
pub use stencil::{EndKind, Parity};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid profile parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed grid: {0}")]
    MalformedGrid(String),
    #[error("singular profile: psi = {psi} <= 0 at interior node {node}")]
    SingularInterior { node: usize, psi: f64 },
    #[error("invalid glued space: {0}")]
    InvalidGluedSpace(String),
}
