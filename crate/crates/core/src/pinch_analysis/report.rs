//! The inequality chain ruling out an interval pinch: rate bounds for
//! concentrated diffusions on both caps force `dL/dtau <= -2M` for every `M`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{curvature, EndKind, GluedSpace, GridProfile, ProfileKind};
use crate::heat::{dirac_bump, weak_diffusion_glued, CapMetrics, GluedDensity, TrotterOptions};

use super::family::{concentrated_family, ConcentratedFamily, FamilyOptions};
use super::glued::{far_pole, w1_glued_decomposition};
use super::PinchError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PinchOptions {
    /// The demanded rate bound.
    pub m: f64,
    /// Sweep `eps_k = eps0 2^-k`, `k = 0..sweep`.
    pub eps0: f64,
    pub sweep: usize,
    /// Window half-width; shrunk to the admissible maximum when too large.
    pub delta: Option<f64>,
    /// Frames of the observed W1 series after the initial one; 0 skips it.
    pub w1_frames: usize,
    pub w1_tau_end: f64,
    /// Distance of the two initial bumps from the junction points.
    pub bump_dist: f64,
    /// Trotter slices and steps per slice for the weak diffusions.
    pub trotter_m: usize,
    pub trotter_j: usize,
}

impl Default for PinchOptions {
    fn default() -> Self {
        PinchOptions {
            m: 10.0,
            eps0: 0.1,
            sweep: 5,
            delta: None,
            w1_frames: 4,
            w1_tau_end: 0.02,
            bump_dist: 0.3,
            trotter_m: 8,
            trotter_j: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    /// `(n + 1) / (n 2^(n+1) eps)`.
    pub floor: f64,
    pub delta: [f64; 2],
    pub lambda: [f64; 2],
    pub curvature_term: [f64; 2],
    /// `floor - curvature_term` per cap.
    pub bound: [f64; 2],
    /// Rate of `int F dr` forced by the constructed CDF, per cap.
    pub rate: [f64; 2],
    /// `min(bound)`.
    pub m_k: f64,
    /// `-2 m_k`.
    pub required_dl_dtau: f64,
    /// `-(rate_1 + rate_2)`.
    pub measured_dl_dtau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct W1Row {
    pub tau: f64,
    pub int_f: f64,
    pub int_g: f64,
    /// `W1` with the interval length held fixed.
    pub w1_fixed_l: f64,
    /// Largest `L(tau)` keeping `W1` at or below its initial value.
    pub l_required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContradictionReport {
    pub n: usize,
    pub m: f64,
    pub l: f64,
    pub sweep: Vec<SweepRow>,
    /// `eps` at which the closed-form floor equals `m`.
    pub eps_for_m: f64,
    /// `min` over caps of `floor - curvature_term` at `eps_for_m`, if admissible.
    pub bound_at_eps_for_m: Option<f64>,
    pub bounds_increasing: bool,
    pub rates_exceed_bounds: bool,
    pub min_scalar_curvature: f64,
    pub scalar_nonnegative: bool,
    pub w1_series: Vec<W1Row>,
    /// Whether `W1` stayed nonincreasing with `L` held fixed.
    pub contractive_with_fixed_l: Option<bool>,
    /// The sweep reaches `m` with increasing bounds, so a bounded `dL/dtau`
    /// is inconsistent with contractivity.
    pub single_point_pinch: bool,
}

/// Two round caps `psi = sin r` on `[0, pi]`, each glued at its antipodal
/// point, joined by an interval of length `l`.
pub fn synthetic_neck(n: usize, nodes: usize, l: f64) -> Result<GluedSpace, PinchError> {
    if nodes < 5 {
        return Err(PinchError::InvalidInput(format!("caps need >= 5 nodes, got {nodes}")));
    }
    let h = 2.0 / (nodes - 1) as f64;
    let xs: Vec<f64> = (0..nodes).map(|i| if i == nodes - 1 { 1.0 } else { -1.0 + i as f64 * h }).collect();
    let psi = xs
        .iter()
        .enumerate()
        .map(|(i, x)| if i == 0 || i == nodes - 1 { 0.0 } else { (PI / 2.0 * (x + 1.0)).sin() })
        .collect();
    let cap = GridProfile::from_table(
        n,
        xs,
        vec![PI / 2.0; nodes],
        psi,
        [EndKind::SmoothPole, EndKind::Singular],
        0.0,
        ProfileKind::Custom { label: "round_cap".into() },
    )?;
    let mirrored = cap.reflected();
    Ok(GluedSpace::new(cap, mirrored, l)?)
}

fn family_on_cap(g: &GluedSpace, k: usize, eps: f64, delta: Option<f64>) -> Result<ConcentratedFamily, PinchError> {
    let origin = far_pole(g.attachments[k]);
    let opts = FamilyOptions { eps, delta: None, origin };
    let widest = concentrated_family(g.cap(k), &opts)?;
    match delta {
        Some(d) if d < widest.delta => concentrated_family(g.cap(k), &FamilyOptions { delta: Some(d), ..opts }),
        _ => Ok(widest),
    }
}

fn w1_series(g: &GluedSpace, opts: &PinchOptions) -> Result<Vec<W1Row>, PinchError> {
    let init = |k: usize| -> Result<GluedDensity, PinchError> {
        let p = g.cap(k);
        let r0 = match far_pole(g.attachments[k]) {
            super::Origin::South => p.r_max() - opts.bump_dist,
            super::Origin::North => opts.bump_dist,
        };
        let mut d = GluedDensity::zeros(g, 2);
        let u = dirac_bump(p, r0)?;
        if k == 0 {
            d.cap1 = u;
        } else {
            d.cap2 = u;
        }
        Ok(d)
    };
    let taus: Vec<f64> = (0..=opts.w1_frames).map(|i| opts.w1_tau_end * i as f64 / opts.w1_frames as f64).collect();
    let trotter = TrotterOptions::default();
    let run = |k| {
        weak_diffusion_glued(g, &CapMetrics::Frozen, &init(k)?, &taus, opts.trotter_m, opts.trotter_j, &trotter)
            .map_err(PinchError::from)
    };
    let (a, b) = (run(0)?, run(1)?);
    let mut rows: Vec<W1Row> = Vec::with_capacity(taus.len());
    for (sa, sb) in a.iter().zip(&b) {
        let dec = w1_glued_decomposition(g, &sa.density, &sb.density)?;
        let l_required = match rows.first() {
            Some(r0) => g.l - (dec.int_f + dec.int_g - r0.int_f - r0.int_g),
            None => g.l,
        };
        rows.push(W1Row { tau: sa.tau, int_f: dec.int_f, int_g: dec.int_g, w1_fixed_l: dec.w1_direct, l_required });
    }
    Ok(rows)
}

/// Evaluates the rate bounds on both caps of `g` over the `eps` sweep and
/// the induced requirement on `dL/dtau`.
pub fn contradiction_report(g: &GluedSpace, opts: &PinchOptions) -> Result<ContradictionReport, PinchError> {
    if !(opts.m > 0.0 && opts.eps0 > 0.0) || opts.sweep == 0 {
        return Err(PinchError::InvalidInput("need m > 0, eps0 > 0 and a nonempty sweep".into()));
    }
    let n = g.cap1.n;
    let nf = n as f64;
    let mut sweep = Vec::with_capacity(opts.sweep);
    for k in 0..opts.sweep {
        let eps = opts.eps0 / 2f64.powi(k as i32);
        let fams = [family_on_cap(g, 0, eps, opts.delta)?, family_on_cap(g, 1, eps, opts.delta)?];
        let bound = [fams[0].bound_value, fams[1].bound_value];
        let rate = [fams[0].measured_rate, fams[1].measured_rate];
        let m_k = bound[0].min(bound[1]);
        sweep.push(SweepRow {
            eps,
            floor: fams[0].floor,
            delta: [fams[0].delta, fams[1].delta],
            lambda: [fams[0].lambda, fams[1].lambda],
            curvature_term: [fams[0].curvature_term, fams[1].curvature_term],
            bound,
            rate,
            m_k,
            required_dl_dtau: -2.0 * m_k,
            measured_dl_dtau: -(rate[0] + rate[1]),
        });
    }
    let eps_for_m = (nf + 1.0) / (nf * 2f64.powi(n as i32 + 1) * opts.m);
    let bound_at_eps_for_m = match (family_on_cap(g, 0, eps_for_m, None), family_on_cap(g, 1, eps_for_m, None)) {
        (Ok(a), Ok(b)) => Some(a.bound_value.min(b.bound_value)),
        _ => None,
    };
    let bounds_increasing = sweep.windows(2).all(|w| w[1].m_k > w[0].m_k);
    let rates_exceed_bounds = sweep.iter().all(|r| r.rate[0] >= r.bound[0] && r.rate[1] >= r.bound[1]);
    let min_scalar_curvature = [&g.cap1, &g.cap2]
        .iter()
        .map(|p| curvature(p).map(|c| c.min_scalar()))
        .try_fold(f64::INFINITY, |m, v| v.map(|v| m.min(v)))?;
    let w1 = if opts.w1_frames > 0 { w1_series(g, opts)? } else { Vec::new() };
    let contractive_with_fixed_l =
        (!w1.is_empty()).then(|| w1.windows(2).all(|w| w[1].w1_fixed_l <= w[0].w1_fixed_l + 1e-12));
    let reaches_m = sweep.last().is_some_and(|r| r.m_k >= opts.m);
    Ok(ContradictionReport {
        n,
        m: opts.m,
        l: g.l,
        sweep,
        eps_for_m,
        bound_at_eps_for_m,
        bounds_increasing,
        rates_exceed_bounds,
        min_scalar_curvature,
        scalar_nonnegative: min_scalar_curvature >= 0.0,
        w1_series: w1,
        contractive_with_fixed_l,
        single_point_pinch: bounds_increasing && rates_exceed_bounds && reaches_m,
    })
}
