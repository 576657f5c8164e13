//! Ricci flow of warped-product metrics, trajectory storage and pinch
//! diagnostics.

mod evolve;
mod pinch;
mod step;

pub use evolve::{evolve, EvolveOptions};
pub use pinch::{detect_pinch, neck_radius, type_one_monitor, PinchClass, PinchReport};
pub use step::{flow_rhs, flow_step, GaugeState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, GridProfile};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid flow input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("step failure at t = {t} (step {step}): {reason}")]
    StepFailure { t: f64, step: usize, reason: String, partial: Box<FlowTrajectory> },
    #[error("time {t} outside the trajectory range [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    /// Metric on the fixed x-grid of the manifold.
    pub profile: GridProfile,
    pub step_index: usize,
    pub dt_last: f64,
    pub gauge: GaugeState,
}

impl FlowState {
    pub fn new(profile: GridProfile) -> Result<Self, FlowError> {
        let gauge = GaugeState::from_profile(&profile)?;
        Ok(FlowState { profile, step_index: 0, dt_last: 0.0, gauge })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    PinchDetected,
    StepFailure,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub snapshots: Vec<FlowState>,
    /// Minimum of `psi` over interior nodes, per snapshot.
    pub min_psi: Vec<f64>,
    /// Neck radius (see [`neck_radius`]), per snapshot.
    pub neck: Vec<f64>,
    pub t0: f64,
    pub t_end: f64,
    pub termination: Termination,
}

pub(crate) fn min_interior_psi(p: &GridProfile) -> f64 {
    p.psi[1..p.len() - 1].iter().copied().fold(f64::INFINITY, f64::min)
}

impl FlowTrajectory {
    pub(crate) fn push(&mut self, s: FlowState) {
        self.min_psi.push(min_interior_psi(&s.gauge.deturck));
        self.neck.push(neck_radius(&s.gauge.deturck).0);
        self.t_end = s.profile.t;
        self.snapshots.push(s);
    }

    pub(crate) fn start(s: FlowState) -> Self {
        let t0 = s.profile.t;
        let mut tr = FlowTrajectory {
            snapshots: Vec::new(),
            min_psi: Vec::new(),
            neck: Vec::new(),
            t0,
            t_end: t0,
            termination: Termination::ReachedTEnd,
        };
        tr.push(s);
        tr
    }

    /// Static metric on `[t0, t1]`, for diffusions on frozen geometry.
    pub fn frozen(p: &GridProfile, t0: f64, t1: f64) -> Result<Self, FlowError> {
        if !(t1 > t0) {
            return Err(FlowError::InvalidInput(format!("frozen range [{t0}, {t1}] is empty")));
        }
        let mut a = p.clone();
        a.t = t0;
        let mut b = p.clone();
        b.t = t1;
        let mut tr = FlowTrajectory::start(FlowState::new(a)?);
        tr.push(FlowState::new(b)?);
        Ok(tr)
    }

    /// Trajectory through stored snapshot metrics, e.g. read back from disk.
    /// Gauge data is rebuilt from each profile.
    pub fn from_profiles(profiles: Vec<GridProfile>, termination: Termination) -> Result<Self, FlowError> {
        let mut it = profiles.into_iter();
        let first = it.next().ok_or_else(|| FlowError::InvalidInput("trajectory has no snapshots".into()))?;
        let mut tr = FlowTrajectory::start(FlowState::new(first)?);
        for p in it {
            if !(p.t > tr.t_end) || p.len() != tr.first().len() {
                return Err(FlowError::InvalidInput(format!(
                    "snapshot at t = {} does not follow t = {} on the same grid",
                    p.t, tr.t_end
                )));
            }
            tr.push(FlowState::new(p)?);
        }
        tr.termination = termination;
        Ok(tr)
    }

    /// Whether every snapshot carries the same metric.
    pub fn is_static(&self) -> bool {
        let first = self.first();
        self.snapshots.iter().all(|s| s.profile.phi == first.phi && s.profile.psi == first.psi)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.profile.t).collect()
    }

    pub fn first(&self) -> &GridProfile {
        &self.snapshots[0].profile
    }

    pub fn last(&self) -> &GridProfile {
        &self.snapshots[self.snapshots.len() - 1].profile
    }

    /// Metric at time `t`, linear in `(phi, psi)` between snapshots.
    pub fn profile_at(&self, t: f64) -> Result<GridProfile, FlowError> {
        let t0 = self.first().t;
        let t1 = self.last().t;
        let tol = 1e-12 * t0.abs().max(t1.abs()).max(1.0);
        if !(t >= t0 - tol && t <= t1 + tol) {
            return Err(FlowError::OutOfRange { t, t0, t1 });
        }
        let k = self.snapshots.partition_point(|s| s.profile.t <= t);
        if k == 0 {
            return Ok(self.first().clone());
        }
        if k == self.snapshots.len() {
            return Ok(self.last().clone());
        }
        let a = &self.snapshots[k - 1].profile;
        let b = &self.snapshots[k].profile;
        let w = (t - a.t) / (b.t - a.t);
        let mut p = a.lerp(b, w);
        p.t = t;
        Ok(p)
    }
}
