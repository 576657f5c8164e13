//! Weak diffusions on two caps glued by an interval.
//!
//! Spheres centred on the interval or at a singular point have zero area, so
//! every averaging operator vanishes there and no mass crosses the interval.
//! Each cap is therefore evolved on its own by the operator product.

use serde::{Deserialize, Serialize};

use crate::flow::FlowTrajectory;
use crate::geometry::{GluedSpace, GridProfile};

use super::trotter::{product_with, TrotterOptions};
use super::{mass, BackwardClock, HeatError};

/// Metrics of the caps along the diffusion.
#[derive(Clone, Debug)]
pub enum CapMetrics {
    /// The caps of the glued space at every `tau`.
    Frozen,
    /// Cap metrics `traj[k].profile_at(clock.t_of(tau))`.
    Evolving { traj: Box<[FlowTrajectory; 2]>, clock: BackwardClock },
}

/// Density with respect to volume on cap 1, the interval and cap 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluedDensity {
    pub cap1: Vec<f64>,
    /// Values at equally spaced points of `[0, L]`; the interval has zero
    /// volume, so only the zero density is admissible.
    pub interval: Vec<f64>,
    pub cap2: Vec<f64>,
}

impl GluedDensity {
    pub fn zeros(g: &GluedSpace, interval_nodes: usize) -> Self {
        GluedDensity {
            cap1: vec![0.0; g.cap1.len()],
            interval: vec![0.0; interval_nodes],
            cap2: vec![0.0; g.cap2.len()],
        }
    }

    pub fn cap(&self, k: usize) -> &[f64] {
        if k == 0 {
            &self.cap1
        } else {
            &self.cap2
        }
    }

    fn cap_mut(&mut self, k: usize) -> &mut Vec<f64> {
        if k == 0 {
            &mut self.cap1
        } else {
            &mut self.cap2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluedDiffusionState {
    pub tau: f64,
    /// Density normalized to unit total mass.
    pub density: GluedDensity,
    /// Masses of cap 1 and cap 2 after normalization.
    pub cap_mass: [f64; 2],
    pub interval_mass: f64,
    /// Total mass of the operator product before normalization.
    pub raw_mass: f64,
    /// Dual-cell volumes of the two caps at `tau`.
    pub dvol: [Vec<f64>; 2],
}

/// Normalized bump `(1 - (d / w)^2)^2` of half-width two radial cells about
/// arclength `r0`.
pub fn dirac_bump(p: &GridProfile, r0: f64) -> Result<Vec<f64>, HeatError> {
    let r = p.arclength();
    let r_max = r[r.len() - 1];
    if !(0.0..=r_max).contains(&r0) {
        return Err(HeatError::InvalidInput(format!("bump centre {r0} outside [0, {r_max}]")));
    }
    let k = r.partition_point(|&v| v < r0).clamp(1, r.len() - 1);
    let w = 2.0 * (r[k] - r[k - 1]);
    let bump: Vec<f64> = r
        .iter()
        .map(|&ri| {
            let q = (ri - r0) / w;
            if q.abs() < 1.0 {
                (1.0 - q * q).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let dvol = p.volume_cells().weights();
    let m = mass(&bump, &dvol);
    if !(m > 0.0) {
        return Err(HeatError::InvalidInput(format!("bump at {r0} carries no volume")));
    }
    Ok(bump.iter().map(|v| v / m).collect())
}

/// Operator-product diffusion of `init` on `g`, one state per entry of
/// `tau_grid`; each state is `U(tau)` applied to `init` with `m` slices of `j`
/// steps.
pub fn weak_diffusion_glued(
    g: &GluedSpace,
    caps: &CapMetrics,
    init: &GluedDensity,
    tau_grid: &[f64],
    m: usize,
    j: usize,
    opts: &TrotterOptions,
) -> Result<Vec<GluedDiffusionState>, HeatError> {
    if init.interval.iter().any(|&v| v != 0.0) {
        return Err(HeatError::InvalidInput("initial measure charges the interval, which has zero volume".into()));
    }
    if init.cap1.len() != g.cap1.len() || init.cap2.len() != g.cap2.len() {
        return Err(HeatError::InvalidInput("initial density does not match the cap grids".into()));
    }
    if tau_grid.windows(2).any(|w| w[1] < w[0]) || tau_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(HeatError::InvalidInput("tau grid must be nonnegative and nondecreasing".into()));
    }
    let metric = |k: usize, tau: f64| -> Result<GridProfile, HeatError> {
        match caps {
            CapMetrics::Frozen => Ok(if k == 0 { g.cap1.clone() } else { g.cap2.clone() }),
            CapMetrics::Evolving { traj, clock } => Ok(traj[k].profile_at(clock.t_of(tau))?),
        }
    };
    let frozen = matches!(caps, CapMetrics::Frozen);
    let mut out = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let mut density = GluedDensity { interval: vec![0.0; init.interval.len()], ..init.clone() };
        let mut dvol: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut cap_mass = [0.0; 2];
        for k in 0..2 {
            let f = init.cap(k);
            if f.iter().any(|&v| v != 0.0) {
                *density.cap_mut(k) = product_with(|t| metric(k, t), frozen, f, tau, m, j, opts)?;
            }
            dvol[k] = metric(k, tau)?.volume_cells().weights();
            cap_mass[k] = mass(density.cap(k), &dvol[k]);
        }
        let raw_mass = cap_mass[0] + cap_mass[1];
        if !(raw_mass > 0.0 && raw_mass.is_finite()) {
            return Err(HeatError::Numerical { tau, reason: format!("weak diffusion has mass {raw_mass}") });
        }
        for k in 0..2 {
            for v in density.cap_mut(k).iter_mut() {
                *v /= raw_mass;
            }
            cap_mass[k] /= raw_mass;
        }
        out.push(GluedDiffusionState { tau, density, cap_mass, interval_mass: 0.0, raw_mass, dvol });
    }
    Ok(out)
}
