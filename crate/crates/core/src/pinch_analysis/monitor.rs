//! Wasserstein distance between two diffusions along a flow, checked for
//! monotonicity in `tau`.

use serde::{Deserialize, Serialize};

use crate::flow::FlowTrajectory;
use crate::heat::{conjugate_heat_solve, BackwardClock, HeatOptions};
use crate::transport::{pushforward_radial, wasserstein_p};

use super::PinchError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorOptions {
    pub heat: HeatOptions,
    /// Allowed increase between frames, relative to `W(tau_start)`.
    pub rel_tol: f64,
    /// On failure, rerun with half the time step and report the result.
    pub step_study: bool,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions { heat: HeatOptions::default(), rel_tol: 1e-4, step_study: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub tau: f64,
    pub w1: f64,
    pub w2: f64,
}

/// An increase of `W1` or `W2` beyond tolerance between consecutive frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub p: u32,
    pub tau_from: f64,
    pub tau_to: f64,
    pub increase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStudy {
    pub c_cfl: f64,
    /// Largest frame-to-frame increase of `W1` at the reduced step.
    pub max_increase_w1: f64,
    pub pass_w1: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractivityReport {
    pub rows: Vec<MonitorRow>,
    pub pass_w1: bool,
    pub pass_w2: bool,
    pub violations: Vec<Violation>,
    pub step_study: Option<StepStudy>,
}

impl ContractivityReport {
    pub fn pass(&self) -> bool {
        self.pass_w1 && self.pass_w2
    }
}

fn series(
    tr: &FlowTrajectory,
    clock: BackwardClock,
    u: [&[f64]; 2],
    tau: (f64, f64),
    heat: &HeatOptions,
) -> Result<Vec<MonitorRow>, PinchError> {
    let a = conjugate_heat_solve(tr, clock, u[0], tau.0, tau.1, heat)?;
    let b = conjugate_heat_solve(tr, clock, u[1], tau.0, tau.1, heat)?;
    a.iter()
        .zip(&b)
        .map(|(sa, sb)| {
            let p = tr.profile_at(clock.t_of(sa.tau))?;
            let ma = pushforward_radial(&p, &sa.u)?.measure;
            let mb = pushforward_radial(&p, &sb.u)?.measure;
            Ok(MonitorRow { tau: sa.tau, w1: wasserstein_p(&ma, &mb, 1)?, w2: wasserstein_p(&ma, &mb, 2)? })
        })
        .collect()
}

fn violations(rows: &[MonitorRow], p: u32, rel_tol: f64) -> Vec<Violation> {
    let w = |r: &MonitorRow| if p == 1 { r.w1 } else { r.w2 };
    let tol = rel_tol * w(&rows[0]);
    rows.windows(2)
        .filter_map(|pair| {
            let increase = w(&pair[1]) - w(&pair[0]);
            (increase > tol).then_some(Violation { p, tau_from: pair[0].tau, tau_to: pair[1].tau, increase })
        })
        .collect()
}

/// Solves the conjugate heat equation from `u1` and `u2` on `tr` and tracks
/// `W1`, `W2` of their radial pushforwards in the metric of each frame.
pub fn contractivity_monitor(
    tr: &FlowTrajectory,
    clock: BackwardClock,
    u1: &[f64],
    u2: &[f64],
    tau_start: f64,
    tau_end: f64,
    opts: &MonitorOptions,
) -> Result<ContractivityReport, PinchError> {
    if !(opts.rel_tol >= 0.0) {
        return Err(PinchError::InvalidInput(format!("rel_tol = {} must be >= 0", opts.rel_tol)));
    }
    let rows = series(tr, clock, [u1, u2], (tau_start, tau_end), &opts.heat)?;
    let mut found = violations(&rows, 1, opts.rel_tol);
    let pass_w1 = found.is_empty();
    let v2 = violations(&rows, 2, opts.rel_tol);
    let pass_w2 = v2.is_empty();
    found.extend(v2);
    let step_study = if !pass_w1 && opts.step_study {
        let heat = HeatOptions { c_cfl: 0.5 * opts.heat.c_cfl, ..opts.heat.clone() };
        let fine = series(tr, clock, [u1, u2], (tau_start, tau_end), &heat)?;
        let max_increase_w1 = fine.windows(2).map(|p| p[1].w1 - p[0].w1).fold(f64::NEG_INFINITY, f64::max);
        Some(StepStudy { c_cfl: heat.c_cfl, max_increase_w1, pass_w1: violations(&fine, 1, opts.rel_tol).is_empty() })
    } else {
        None
    };
    Ok(ContractivityReport { rows, pass_w1, pass_w2, violations: found, step_study })
}
