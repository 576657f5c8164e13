use serde::{Deserialize, Serialize};

use crate::geometry::{EndKind, GridProfile};

use super::pinch::neck_radius;
use super::step::{advance, GaugeState};
use super::{min_interior_psi, FlowError, FlowState, FlowTrajectory, Termination};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveOptions {
    pub t_end: Option<f64>,
    /// Stop once the neck radius drops below this value.
    pub delta_pinch: f64,
    pub c_cfl: f64,
    /// Target number of stored snapshots.
    pub snapshots: usize,
    pub max_steps: usize,
    pub max_halvings: u32,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            t_end: None,
            delta_pinch: 1e-3,
            c_cfl: 0.2,
            snapshots: 200,
            max_steps: 50_000_000,
            max_halvings: 20,
        }
    }
}

fn stable_dt(p: &GridProfile, c_cfl: f64) -> f64 {
    let h = p.h();
    let hr = p.phi.iter().fold(f64::INFINITY, |m, phi| m.min(phi * h));
    let scale = hr.min(min_interior_psi(p));
    c_cfl * scale * scale
}

/// Runs the flow until the neck radius falls below `delta_pinch` or `t_end`
/// is reached. Snapshots are kept roughly uniform in t: once more than twice
/// the target are stored, every other one is dropped and the spacing doubles.
pub fn evolve(p: GridProfile, opts: &EvolveOptions) -> Result<FlowTrajectory, FlowError> {
    if !(opts.delta_pinch > 0.0) {
        return Err(FlowError::InvalidInput(format!("delta_pinch = {} must be positive", opts.delta_pinch)));
    }
    if !(opts.c_cfl > 0.0 && opts.c_cfl <= 0.5) {
        return Err(FlowError::InvalidInput(format!("c_cfl = {} must lie in (0, 0.5]", opts.c_cfl)));
    }
    if opts.snapshots < 2 {
        return Err(FlowError::InvalidInput("need at least two snapshots".into()));
    }
    if let Some(t_end) = opts.t_end {
        if !(t_end > p.t) {
            return Err(FlowError::InvalidInput(format!("t_end = {t_end} must exceed t0 = {}", p.t)));
        }
    }
    if p.ends.contains(&EndKind::Singular) {
        return Err(FlowError::InvalidInput("cannot flow a profile with a singular end".into()));
    }
    let t0 = p.t;
    let mut spacing = match opts.t_end {
        Some(t_end) => (t_end - t0) / opts.snapshots as f64,
        None => {
            // half the lifetime of a round sphere of the neck's radius
            let neck = neck_radius(&p).0;
            neck * neck / (4.0 * p.n as f64) / opts.snapshots as f64
        }
    };
    let template = p.clone();
    let first = FlowState::new(p)?;
    let mut gauge = first.gauge.clone();
    let mut tr = FlowTrajectory::start(first);
    let mut step_index = 0;
    let mut dt_last = 0.0;
    let mut next_due = t0 + spacing;
    let state_of = |gauge: &GaugeState, step_index, dt_last| FlowState {
        profile: gauge.material_profile(&template),
        step_index,
        dt_last,
        gauge: gauge.clone(),
    };

    loop {
        let t = gauge.deturck.t;
        if neck_radius(&gauge.deturck).0 < opts.delta_pinch {
            tr.termination = Termination::PinchDetected;
            break;
        }
        if let Some(t_end) = opts.t_end {
            if t >= t_end * (1.0 - 1e-14) {
                tr.termination = Termination::ReachedTEnd;
                break;
            }
        }
        if step_index >= opts.max_steps {
            return Err(failure(tr, state_of(&gauge, step_index, dt_last), "step budget exhausted".into()));
        }
        let mut dt = stable_dt(&gauge.deturck, opts.c_cfl);
        if let Some(t_end) = opts.t_end {
            dt = dt.min(t_end - t);
        }
        let mut halvings = 0;
        gauge = loop {
            match advance(&gauge, dt) {
                Ok(g) => break g,
                Err(reason) => {
                    halvings += 1;
                    if halvings > opts.max_halvings {
                        let reason = format!("{reason} after {} dt halvings", opts.max_halvings);
                        return Err(failure(tr, state_of(&gauge, step_index, dt_last), reason));
                    }
                    dt *= 0.5;
                }
            }
        };
        step_index += 1;
        dt_last = dt;

        if gauge.deturck.t >= next_due {
            tr.push(state_of(&gauge, step_index, dt_last));
            next_due += spacing;
            if tr.snapshots.len() > 2 * opts.snapshots {
                thin(&mut tr);
                spacing *= 2.0;
                next_due = tr.last().t + spacing;
            }
        }
    }
    if tr.last().t < gauge.deturck.t {
        tr.push(state_of(&gauge, step_index, dt_last));
    }
    Ok(tr)
}

fn failure(mut tr: FlowTrajectory, state: FlowState, reason: String) -> FlowError {
    let (t, step) = (state.profile.t, state.step_index);
    if tr.last().t < t {
        tr.push(state);
    }
    tr.termination = Termination::StepFailure;
    FlowError::StepFailure { t, step, reason, partial: Box::new(tr) }
}

fn every_other<T>(v: &mut Vec<T>) {
    let mut i = 0;
    v.retain(|_| {
        i += 1;
        i % 2 == 1
    });
}

fn thin(tr: &mut FlowTrajectory) {
    every_other(&mut tr.snapshots);
    every_other(&mut tr.min_psi);
    every_other(&mut tr.neck);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, ProfileKind};

    #[test]
    fn cylinder_matches_the_shrinking_soliton() {
        let p = build_profile(&ProfileKind::Cylinder { c: 1.0 }, 2, 65).unwrap();
        let opts = EvolveOptions { t_end: Some(0.25), ..Default::default() };
        let tr = evolve(p, &opts).unwrap();
        assert_eq!(tr.termination, Termination::ReachedTEnd);
        let last = tr.last();
        assert!((last.t - 0.25).abs() < 1e-12);
        assert!(last.psi.iter().all(|v| (v - 0.5f64.sqrt()).abs() < 1e-4));
        let n = tr.snapshots.len();
        assert!((200..=402).contains(&n), "{n} snapshots");
    }

    #[test]
    fn snapshot_times_increase() {
        let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 65).unwrap();
        let opts = EvolveOptions { delta_pinch: 0.3, snapshots: 20, ..Default::default() };
        let tr = evolve(p, &opts).unwrap();
        assert_eq!(tr.termination, Termination::PinchDetected);
        assert!(tr.times().windows(2).all(|w| w[1] > w[0]));
        assert!((20..=41).contains(&tr.snapshots.len()));
        assert!(*tr.neck.last().unwrap() < 0.3);
    }

    #[test]
    fn rejects_bad_options() {
        let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 65).unwrap();
        let bad = EvolveOptions { delta_pinch: 0.0, ..Default::default() };
        assert!(evolve(p.clone(), &bad).is_err());
        let bad = EvolveOptions { t_end: Some(-1.0), ..Default::default() };
        assert!(evolve(p, &bad).is_err());
    }
}
