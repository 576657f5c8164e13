//! Numerical lab for rotationally symmetric Ricci flow, conjugate heat
//! diffusions, one-dimensional optimal transport and neckpinch diagnostics.

// `!(x > 0.0)` is the idiom for rejecting NaN along with nonpositive values,
// and the stencil loops index several arrays in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod flow;
pub mod geometry;
pub mod harness;
pub mod heat;
pub mod pinch_analysis;
pub mod transport;

use thiserror::Error;

/// Any numerical failure raised by the library modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Flow(#[from] flow::FlowError),
    #[error(transparent)]
    Heat(#[from] heat::HeatError),
    #[error(transparent)]
    Transport(#[from] transport::TransportError),
    #[error(transparent)]
    Pinch(#[from] pinch_analysis::PinchError),
}

fn geometry_input(e: &geometry::GeometryError) -> bool {
    use geometry::GeometryError::*;
    matches!(e, InvalidParameter(_) | MalformedGrid(_) | InvalidGluedSpace(_))
}

fn flow_input(e: &flow::FlowError) -> bool {
    match e {
        flow::FlowError::InvalidInput(_) | flow::FlowError::OutOfRange { .. } => true,
        flow::FlowError::Geometry(g) => geometry_input(g),
        flow::FlowError::StepFailure { .. } => false,
    }
}

fn heat_input(e: &heat::HeatError) -> bool {
    match e {
        heat::HeatError::InvalidInput(_) | heat::HeatError::RadiusOutOfRange { .. } => true,
        heat::HeatError::Flow(f) => flow_input(f),
        heat::HeatError::Geometry(g) => geometry_input(g),
        heat::HeatError::Numerical { .. } => false,
    }
}

fn transport_input(e: &transport::TransportError) -> bool {
    use transport::TransportError::*;
    match e {
        InvalidMeasure(_) | UnsupportedExponent(_) | Infeasible { .. } => true,
        Geometry(g) => geometry_input(g),
        Inconsistent { .. } => false,
    }
}

impl Error {
    /// Whether the input was rejected before or during the computation, as
    /// opposed to the computation failing.
    pub fn is_input_error(&self) -> bool {
        use pinch_analysis::PinchError as P;
        match self {
            Error::Geometry(e) => geometry_input(e),
            Error::Flow(e) => flow_input(e),
            Error::Heat(e) => heat_input(e),
            Error::Transport(e) => transport_input(e),
            Error::Pinch(e) => match e {
                P::InvalidInput(_) | P::Inadmissible { .. } => true,
                P::Heat(h) => heat_input(h),
                P::Transport(t) => transport_input(t),
                P::Flow(f) => flow_input(f),
                P::Geometry(g) => geometry_input(g),
                P::NotNormalized { .. } | P::SupportViolation(_) | P::Decomposition { .. } => false,
            },
        }
    }

    /// Whether a computed result violates an invariant the library asserts.
    pub fn is_property_violation(&self) -> bool {
        use pinch_analysis::PinchError as P;
        matches!(
            self,
            Error::Pinch(P::SupportViolation(_) | P::Decomposition { .. })
                | Error::Transport(transport::TransportError::Inconsistent { .. })
        )
    }
}

/// Worker threads for parallel loops: `NECKFLOW_THREADS` if set to a
/// positive integer, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("NECKFLOW_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}
