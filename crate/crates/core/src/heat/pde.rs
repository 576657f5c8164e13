//! Conjugate heat equation `u_tau = Delta u - R u` backward along a flow.

use serde::{Deserialize, Serialize};

use crate::flow::FlowTrajectory;
use crate::geometry::{curvature, radial_laplacian, sphere_area, EndKind, GridProfile};

use super::{BackwardClock, DiffusionState, HeatError};

const MAX_STEPS: usize = 5_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatMode {
    /// Finite volumes on the mass `W_i u_i` with the cell volumes of
    /// `g(tau)`; `R` enters through the change of volume, so mass is conserved
    /// to rounding.
    #[default]
    Conservative,
    /// `u_tau = radial_laplacian(u) - R u` with `u = 0` at singular ends; the
    /// reaction term is applied as the factor `exp(-R dt)` after each step.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatOptions {
    pub mode: HeatMode,
    /// Fraction of the stability limit used as the time step.
    pub c_cfl: f64,
    /// Number of equally spaced output frames after the initial one.
    pub frames: usize,
}

impl Default for HeatOptions {
    fn default() -> Self {
        HeatOptions { mode: HeatMode::Conservative, c_cfl: 0.5, frames: 10 }
    }
}

/// Discrete operator of one metric.
struct Slice {
    p: GridProfile,
    w: Vec<f64>,
    /// Face conductances between nodes `i` and `i + 1`.
    cond: Vec<f64>,
    scalar: Vec<f64>,
    /// Largest decay rate of the explicit operator.
    rate: f64,
}

impl Slice {
    fn new(tr: &FlowTrajectory, clock: BackwardClock, tau: f64, mode: HeatMode) -> Result<Self, HeatError> {
        let p = tr.profile_at(clock.t_of(tau))?;
        let w = p.volume_cells().weights();
        let r = p.arclength();
        let len = p.len();
        let (psi_i, _) = p.x_interpolants();
        let area = sphere_area(p.n);
        let h = p.h();
        let cond: Vec<f64> = (0..len - 1)
            .map(|i| {
                let psi = psi_i.eval(p.xs[i] + 0.5 * h).0.max(0.0);
                area * psi.powi(p.n as i32) / (r[i + 1] - r[i])
            })
            .collect();
        let (scalar, rate) = match mode {
            HeatMode::Conservative => {
                let rate = (0..len)
                    .map(|i| {
                        let left = if i > 0 { cond[i - 1] } else { 0.0 };
                        let right = if i + 1 < len { cond[i] } else { 0.0 };
                        (left + right) / w[i]
                    })
                    .fold(0.0, f64::max);
                (Vec::new(), rate)
            }
            HeatMode::Explicit => {
                let scalar: Vec<f64> =
                    curvature(&p)?.scalar.into_iter().map(|v| if v.is_finite() { v } else { 0.0 }).collect();
                let dr = r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                (scalar, 16.0 / 3.0 * (p.n as f64 + 1.0) / (dr * dr))
            }
        };
        Ok(Slice { p, w, cond, scalar, rate })
    }

    /// `d/dtau` of the mass per cell (conservative) or of `u` (explicit).
    fn rhs(&self, mode: HeatMode, u: &[f64]) -> Result<Vec<f64>, HeatError> {
        match mode {
            HeatMode::Conservative => {
                let mut out = vec![0.0; u.len()];
                for (i, c) in self.cond.iter().enumerate() {
                    let flux = c * (u[i + 1] - u[i]);
                    out[i] += flux;
                    out[i + 1] -= flux;
                }
                Ok(out)
            }
            HeatMode::Explicit => Ok(radial_laplacian(&self.p, u)?),
        }
    }

    fn clamp_singular(&self, u: &mut [f64]) {
        let last = u.len() - 1;
        if self.p.ends[0] == EndKind::Singular {
            u[0] = 0.0;
        }
        if self.p.ends[1] == EndKind::Singular {
            u[last] = 0.0;
        }
    }
}

/// One Heun step from `a` to `b`.
fn heun(a: &Slice, b: &Slice, mode: HeatMode, u: &[f64], dt: f64) -> Result<Vec<f64>, HeatError> {
    match mode {
        HeatMode::Conservative => {
            let m: Vec<f64> = u.iter().zip(&a.w).map(|(u, w)| u * w).collect();
            let k1 = a.rhs(mode, u)?;
            let u_star: Vec<f64> = (0..u.len()).map(|i| (m[i] + dt * k1[i]) / b.w[i]).collect();
            let k2 = b.rhs(mode, &u_star)?;
            Ok((0..u.len()).map(|i| (m[i] + 0.5 * dt * (k1[i] + k2[i])) / b.w[i]).collect())
        }
        HeatMode::Explicit => {
            let k1 = a.rhs(mode, u)?;
            let mut u_star: Vec<f64> = u.iter().zip(&k1).map(|(u, k)| u + dt * k).collect();
            b.clamp_singular(&mut u_star);
            let k2 = b.rhs(mode, &u_star)?;
            let mut out: Vec<f64> =
                (0..u.len()).map(|i| (u[i] + 0.5 * dt * (k1[i] + k2[i])) * (-b.scalar[i] * dt).exp()).collect();
            b.clamp_singular(&mut out);
            Ok(out)
        }
    }
}

/// Solves the conjugate heat equation on `[tau_start, tau_end]`, with the
/// metric `g(tau) = tr.profile_at(clock.t_of(tau))`. Returns the initial state
/// and `opts.frames` equally spaced frames. The density is not renormalized.
pub fn conjugate_heat_solve(
    tr: &FlowTrajectory,
    clock: BackwardClock,
    u_init: &[f64],
    tau_start: f64,
    tau_end: f64,
    opts: &HeatOptions,
) -> Result<Vec<DiffusionState>, HeatError> {
    if !(tau_end >= tau_start) {
        return Err(HeatError::InvalidInput(format!("tau range [{tau_start}, {tau_end}] is reversed")));
    }
    if !(opts.c_cfl > 0.0 && opts.c_cfl <= 1.0) {
        return Err(HeatError::InvalidInput(format!("c_cfl = {} must lie in (0, 1]", opts.c_cfl)));
    }
    if opts.frames == 0 {
        return Err(HeatError::InvalidInput("need at least one output frame".into()));
    }
    let mode = opts.mode;
    tr.profile_at(clock.t_of(tau_end))?;
    let mut a = Slice::new(tr, clock, tau_start, mode)?;
    let is_static = tr.is_static();
    if u_init.len() != a.p.len() || u_init.iter().any(|v| !v.is_finite()) {
        return Err(HeatError::InvalidInput(format!(
            "initial density needs {} finite values, got {}",
            a.p.len(),
            u_init.len()
        )));
    }
    let mut u = u_init.to_vec();
    if mode == HeatMode::Explicit {
        a.clamp_singular(&mut u);
    }
    let mut out = vec![DiffusionState::new(&a.p, tau_start, u.clone())];
    let mut tau = tau_start;
    let mut steps = 0;
    for k in 1..=opts.frames {
        let target = tau_start + (tau_end - tau_start) * k as f64 / opts.frames as f64;
        while tau < target {
            let dt = (opts.c_cfl / a.rate).min(target - tau);
            let next = if target - tau - dt <= 1e-14 * target.abs().max(1.0) { target } else { tau + dt };
            if is_static {
                u = heun(&a, &a, mode, &u, next - tau)?;
            } else {
                let b = Slice::new(tr, clock, next, mode)?;
                u = heun(&a, &b, mode, &u, next - tau)?;
                a = b;
            }
            if let Some(i) = u.iter().position(|v| !v.is_finite()) {
                return Err(HeatError::Numerical { tau: next, reason: format!("non-finite density at node {i}") });
            }
            steps += 1;
            if steps > MAX_STEPS {
                return Err(HeatError::Numerical { tau: next, reason: "step budget exhausted".into() });
            }
            tau = next;
        }
        let mut p = a.p.clone();
        p.t = clock.t_of(tau);
        out.push(DiffusionState::new(&p, tau, u.clone()));
    }
    Ok(out)
}
