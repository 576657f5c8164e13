use serde::{Deserialize, Serialize};

use crate::geometry::{curvature, GridProfile};

use super::{FlowError, FlowTrajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinchClass {
    Neckpinch,
    GlobalCollapse,
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PinchReport {
    /// Extrapolated singular time; `None` when the fit is impossible.
    pub t_est: Option<f64>,
    pub t_last: f64,
    pub x0_est: f64,
    pub x0_index: usize,
    pub neck_min_curve: Vec<(f64, f64)>,
    pub classification: PinchClass,
    pub type_one_sup: Option<f64>,
}

/// Smallest strict interior local minimum of `psi` with its node. Profiles
/// without one (round spheres, cylinders) report the maximum of `psi`, the
/// scale that goes to zero under a global collapse.
pub fn neck_radius(p: &GridProfile) -> (f64, usize) {
    let psi = &p.psi;
    let mut best: Option<(f64, usize)> = None;
    for i in 1..psi.len() - 1 {
        if psi[i] < psi[i - 1] && psi[i] < psi[i + 1] && best.is_none_or(|(v, _)| psi[i] < v) {
            best = Some((psi[i], i));
        }
    }
    best.unwrap_or_else(|| {
        let i = (0..psi.len()).max_by(|&a, &b| psi[a].total_cmp(&psi[b])).expect("non-empty grid");
        (psi[i], i)
    })
}

fn has_interior_neck(p: &GridProfile) -> Option<usize> {
    let psi = &p.psi;
    let (_, i) = neck_radius(p);
    let interior = i >= 2 && i + 2 < psi.len() && psi[i] < psi[i - 1] && psi[i] < psi[i + 1];
    interior.then_some(i)
}

/// Least-squares line through `(t, neck^2)` over the last fifth of the
/// snapshots; its zero is the estimated singular time.
fn fit_singular_time(tr: &FlowTrajectory) -> Option<f64> {
    let count = tr.snapshots.len();
    let k = (count / 5).max(3);
    if count < 5 {
        return None;
    }
    let ts = tr.times();
    let pts: Vec<(f64, f64)> = (count - k..count).map(|i| (ts[i], tr.neck[i] * tr.neck[i])).collect();
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (t - mt), b + (t - mt) * (y - my)));
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    let t_star = mt - my / slope;
    Some(t_star.max(ts[count - 1]))
}

/// Classifies the end of a trajectory. The neck is measured in the DeTurck
/// frame, where the flow was stopped; `x0` is located on the material grid.
pub fn detect_pinch(tr: &FlowTrajectory, delta_pinch: f64) -> PinchReport {
    let last = tr.last();
    let frame = &tr.snapshots[tr.snapshots.len() - 1].gauge.deturck;
    let neck_min_curve: Vec<(f64, f64)> = tr.times().into_iter().zip(tr.neck.iter().copied()).collect();
    let (neck, _) = neck_radius(frame);
    let t_est = fit_singular_time(tr);

    let classification = if t_est.is_none() || neck > delta_pinch {
        PinchClass::None
    } else {
        let bulb = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        match has_interior_neck(frame) {
            Some(i) if bulb(&frame.psi[..i]).min(bulb(&frame.psi[i..])) > 4.0 * neck => PinchClass::Neckpinch,
            _ => PinchClass::GlobalCollapse,
        }
    };
    let psi = &last.psi;
    let x0_index = (1..psi.len() - 1).min_by(|&a, &b| psi[a].total_cmp(&psi[b])).unwrap_or(0);
    let type_one_sup = t_est.and_then(|t| type_one_monitor(tr, t).ok());
    PinchReport {
        t_est,
        t_last: last.t,
        x0_est: last.xs[x0_index],
        x0_index,
        neck_min_curve,
        classification,
        type_one_sup,
    }
}

/// `sup_t (T - t) max(|k_rad|, |k_sph|)` over snapshots before `t_est`,
/// evaluated in the DeTurck frame. Snapshots whose neck radius is below the
/// local radial grid spacing are skipped.
pub fn type_one_monitor(tr: &FlowTrajectory, t_est: f64) -> Result<f64, FlowError> {
    let mut sup: f64 = 0.0;
    for s in &tr.snapshots {
        let p = &s.gauge.deturck;
        let (neck, i) = neck_radius(p);
        if p.t >= t_est || neck < p.phi[i] * p.h() {
            continue;
        }
        let k = curvature(p)?.max_abs_sectional();
        sup = sup.max((t_est - p.t) * k);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, ProfileKind};

    #[test]
    fn neck_of_a_dumbbell_is_the_middle() {
        let p = build_profile(&ProfileKind::Dumbbell { a: 0.9 }, 2, 129).unwrap();
        let (v, i) = neck_radius(&p);
        assert_eq!(i, 64);
        assert!((v - 0.1).abs() < 1e-14);
    }

    #[test]
    fn sphere_reports_its_maximum() {
        let p = build_profile(&ProfileKind::Round { rho: 2.0 }, 2, 129).unwrap();
        let (v, i) = neck_radius(&p);
        assert_eq!(i, 64);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
