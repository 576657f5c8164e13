//! Time stepping.
//!
//! Stepping `psi` and `phi` directly on the fixed x-grid is unstable at smooth
//! poles: `psi_rr/psi` there depends on the regularity `psi_x = phi`, which the
//! discrete update does not preserve. The metric is therefore advanced by the
//! Ricci-DeTurck flow `g_t = -2 Ric + L_W g` with the initial metric as
//! background, which is strictly parabolic in both `phi` and `psi` and pulls
//! the pole slope back to 1. With `E = phî_x/phî` and `B = psî psî_x/phî^2`:
//!
//! `psi_t = psi_xx/phi^2 - (n-1)/psi - psi_x^2/(phi^2 psi) + n B psi_x/psi^2 - E psi_x/phi^2`
//! `phi_t = (phi_x/phi^2)_x - (E/phi)_x + n (B phi/psi^2)_x + n psi_x^2/(phi psi^2)`
//! `w = phi_x/phi^3 - E/phi^2 - n psi_x/(phi^2 psi) + n B/psi^2`
//!
//! The Ricci flow itself is `Phi_t^* g`, where `Phi_t` follows `-w`. Each
//! x-grid point of the manifold is tracked through its DeTurck position `X`
//! and stretch `J = dX/dx`, giving `psi = psĩ(X)`, `phi = phĩ(X) J`.

use crate::geometry::interp::QuinticHermite;
use crate::geometry::stencil::{derivatives, EndKind, Parity};
use crate::geometry::{GeometryError, GridProfile};

use super::{FlowError, FlowState, FlowTrajectory};

fn cell_length(phi: &[f64], phi_x: &[f64], h: f64, i: usize) -> f64 {
    0.5 * h * (phi[i] + phi[i + 1]) + h * h / 12.0 * (phi_x[i] - phi_x[i + 1])
}

/// Time derivatives `(psi_t, phi_t)` of the warped-product Ricci flow at fixed
/// x: `psi_t = psi_rr - (n-1)(1 - psi_r^2)/psi`, `phi_t = n (psi_rr/psi) phi`.
pub fn flow_rhs(p: &GridProfile) -> (Vec<f64>, Vec<f64>) {
    let len = p.len();
    let h = p.h();
    let n = p.n as f64;
    let (psi_x, psi_xx) = derivatives(&p.psi, h, p.ends, Parity::Odd);
    let (phi_x, _) = derivatives(&p.phi, h, p.ends, Parity::Even);
    let mut psi_t = vec![0.0; len];
    let mut k = vec![0.0; len];
    for i in 0..len {
        if p.psi[i] > 0.0 {
            let phi = p.phi[i];
            let psi_r = psi_x[i] / phi;
            let psi_rr = (psi_xx[i] - psi_x[i] * phi_x[i] / phi) / (phi * phi);
            psi_t[i] = psi_rr - (n - 1.0) * (1.0 - psi_r * psi_r) / p.psi[i];
            k[i] = -psi_rr / p.psi[i];
        }
    }
    for (end, i, a, b) in [(p.ends[0], 0, 1, 2), (p.ends[1], len - 1, len - 2, len - 3)] {
        if end == EndKind::SmoothPole {
            let (c1, c2) = if i == 0 { (0, 1) } else { (len - 2, len - 3) };
            let s1 = cell_length(&p.phi, &phi_x, h, c1);
            let s2 = s1 + cell_length(&p.phi, &phi_x, h, c2);
            k[i] = (s2 * s2 * k[a] - s1 * s1 * k[b]) / (s2 * s2 - s1 * s1);
        }
    }
    let phi_t = k.iter().zip(&p.phi).map(|(k, phi)| -n * k * phi).collect();
    (psi_t, phi_t)
}

/// Background terms of the DeTurck vector field.
#[derive(Clone, Debug, PartialEq)]
struct Background {
    e: Vec<f64>,
    e_x: Vec<f64>,
    b: Vec<f64>,
    b_x: Vec<f64>,
}

impl Background {
    fn of(p: &GridProfile) -> Self {
        let h = p.h();
        let (phi_x, _) = derivatives(&p.phi, h, p.ends, Parity::Even);
        let (psi_x, _) = derivatives(&p.psi, h, p.ends, Parity::Odd);
        let e: Vec<f64> = phi_x.iter().zip(&p.phi).map(|(d, f)| d / f).collect();
        let b: Vec<f64> = (0..p.len()).map(|i| p.psi[i] * psi_x[i] / (p.phi[i] * p.phi[i])).collect();
        let (e_x, _) = derivatives(&e, h, p.ends, Parity::Odd);
        let (b_x, _) = derivatives(&b, h, p.ends, Parity::Odd);
        Background { e, e_x, b, b_x }
    }
}

/// Metric in the DeTurck frame together with the DeTurck position and stretch
/// of every x-grid point of the manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeState {
    pub deturck: GridProfile,
    pub material_x: Vec<f64>,
    pub stretch: Vec<f64>,
    background: Background,
}

struct Rates {
    psi_t: Vec<f64>,
    phi_t: Vec<f64>,
    x_t: Vec<f64>,
    stretch_t: Vec<f64>,
}

/// `B - psi psi_x/phi^2`, which is `O(s^3)` at a smooth pole. Its linear part,
/// a discrete cone-angle defect, would put a `1/s` term into `w`, so it is
/// removed with multiples of `B` blended linearly across the grid.
fn slope_defect(g: &GridProfile, b: &[f64], psi_x: &[f64]) -> Vec<f64> {
    let len = g.len();
    let h = g.h();
    let mut d: Vec<f64> = (0..len).map(|i| b[i] - g.psi[i] * psi_x[i] / (g.phi[i] * g.phi[i])).collect();
    let (d_x, _) = derivatives(&d, h, g.ends, Parity::Odd);
    let blends = [
        (0, g.ends[0], g.xs.iter().map(|x| 0.5 * (1.0 - x)).collect::<Vec<_>>()),
        (len - 1, g.ends[1], g.xs.iter().map(|x| 0.5 * (1.0 + x)).collect::<Vec<_>>()),
    ];
    for (i, end, weight) in blends {
        if !end.is_pole() {
            continue;
        }
        let q: Vec<f64> = b.iter().zip(&weight).map(|(b, w)| b * w).collect();
        let (q_x, _) = derivatives(&q, h, g.ends, Parity::Odd);
        let c = d_x[i] / q_x[i];
        for (d, q) in d.iter_mut().zip(&q) {
            *d -= c * q;
        }
    }
    d
}

/// Nodes next to a pole where the DeTurck field is replaced by an odd cubic.
const POLE_FIT: usize = 3;

/// Replaces an odd quantity near each pole by `a s + b s^3` through the next
/// two nodes, `s` being the node offset from the pole.
fn odd_pole_fit(v: &mut [f64], ends: [EndKind; 2]) {
    let len = v.len();
    let (m, k) = (POLE_FIT as f64, POLE_FIT as f64 + 1.0);
    let fit = |vm: f64, vk: f64| {
        let (qm, qk) = (vm / m, vk / k);
        let b = (qk - qm) / (k * k - m * m);
        (qm - b * m * m, b)
    };
    if ends[0].is_pole() {
        let (a, b) = fit(v[POLE_FIT], v[POLE_FIT + 1]);
        for (i, vi) in v.iter_mut().enumerate().take(POLE_FIT) {
            let s = i as f64;
            *vi = a * s + b * s * s * s;
        }
    }
    if ends[1].is_pole() {
        let (a, b) = fit(v[len - 1 - POLE_FIT], v[len - 2 - POLE_FIT]);
        for i in 0..POLE_FIT {
            let s = i as f64;
            v[len - 1 - i] = a * s + b * s * s * s;
        }
    }
}

/// Extrapolates an even quantity to the pole from the two nearest nodes.
fn pole_limit(v: &mut [f64], ends: [EndKind; 2]) {
    let len = v.len();
    if ends[0].is_pole() {
        v[0] = (4.0 * v[1] - v[2]) / 3.0;
    }
    if ends[1].is_pole() {
        v[len - 1] = (4.0 * v[len - 2] - v[len - 3]) / 3.0;
    }
}

impl GaugeState {
    pub(crate) fn from_profile(p: &GridProfile) -> Result<Self, GeometryError> {
        p.validate()?;
        Ok(GaugeState {
            deturck: p.clone(),
            material_x: p.xs.clone(),
            stretch: vec![1.0; p.len()],
            background: Background::of(p),
        })
    }

    fn rates(&self) -> Rates {
        let g = &self.deturck;
        let bg = &self.background;
        let len = g.len();
        let h = g.h();
        let n = g.n as f64;
        let (px, pxx) = derivatives(&g.psi, h, g.ends, Parity::Odd);
        let (fx, fxx) = derivatives(&g.phi, h, g.ends, Parity::Even);

        let defect = slope_defect(g, &bg.b, &px);
        let mut psi_t = vec![0.0; len];
        let mut singular = vec![0.0; len];
        let mut w = vec![0.0; len];
        for i in 0..len {
            let (phi, psi) = (g.phi[i], g.psi[i]);
            if psi <= 0.0 {
                continue;
            }
            let phi2 = phi * phi;
            let psi2 = psi * psi;
            psi_t[i] = pxx[i] / phi2 - (n - 1.0) / psi - px[i] * px[i] / (phi2 * psi) + n * bg.b[i] * px[i] / psi2
                - px[i] * bg.e[i] / phi2;
            singular[i] = n
                * (bg.b_x[i] * phi / psi2 + bg.b[i] * fx[i] / psi2 - 2.0 * bg.b[i] * phi * px[i] / (psi2 * psi)
                    + px[i] * px[i] / (phi * psi2));
            w[i] = fx[i] / (phi2 * phi) - bg.e[i] / phi2 + n * defect[i] / psi2;
        }
        pole_limit(&mut singular, g.ends);
        let phi_t: Vec<f64> = (0..len)
            .map(|i| {
                let phi = g.phi[i];
                fxx[i] / (phi * phi) - 2.0 * fx[i] * fx[i] / (phi * phi * phi) - bg.e_x[i] / phi
                    + bg.e[i] * fx[i] / (phi * phi)
                    + singular[i]
            })
            .collect();

        odd_pole_fit(&mut w, g.ends);
        let (w_x, w_xx) = derivatives(&w, h, g.ends, Parity::Odd);
        let (w_xi, w_xxi) = derivatives(&w_x, h, g.ends, Parity::Even);
        let wi = QuinticHermite::new(g.xs.clone(), w, w_x.clone(), w_xx);
        let wxi = QuinticHermite::new(g.xs.clone(), w_x, w_xi, w_xxi);
        let mut x_t = Vec::with_capacity(len);
        let mut stretch_t = Vec::with_capacity(len);
        for (&x, &j) in self.material_x.iter().zip(&self.stretch) {
            let x = x.clamp(-1.0, 1.0);
            x_t.push(-wi.eval(x).0);
            stretch_t.push(-wxi.eval(x).0 * j);
        }
        for (end, i) in [(g.ends[0], 0), (g.ends[1], len - 1)] {
            if end.is_pole() {
                x_t[i] = 0.0;
            }
        }
        Rates { psi_t, phi_t, x_t, stretch_t }
    }

    fn advanced(&self, k: &Rates, dt: f64, t: f64) -> GaugeState {
        let step = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(v, d)| v + dt * d).collect::<Vec<f64>>();
        let mut g = self.deturck.clone();
        g.psi = step(&g.psi, &k.psi_t);
        g.phi = step(&g.phi, &k.phi_t);
        g.pin_poles();
        g.t = t;
        GaugeState {
            deturck: g,
            material_x: step(&self.material_x, &k.x_t),
            stretch: step(&self.stretch, &k.stretch_t),
            background: self.background.clone(),
        }
    }

    /// The Ricci-flow metric on the fixed x-grid of the manifold.
    pub fn material_profile(&self, template: &GridProfile) -> GridProfile {
        let g = &self.deturck;
        let h = g.h();
        let (px, pxx) = derivatives(&g.psi, h, g.ends, Parity::Odd);
        let (fx, fxx) = derivatives(&g.phi, h, g.ends, Parity::Even);
        let psi_i = QuinticHermite::new(g.xs.clone(), g.psi.clone(), px, pxx);
        let phi_i = QuinticHermite::new(g.xs.clone(), g.phi.clone(), fx, fxx);
        let mut p = template.clone();
        p.t = g.t;
        for i in 0..p.len() {
            let x = self.material_x[i].clamp(-1.0, 1.0);
            p.psi[i] = psi_i.eval(x).0;
            p.phi[i] = phi_i.eval(x).0 * self.stretch[i];
        }
        p.pin_poles();
        p
    }

    fn check(&self) -> Result<(), String> {
        let g = &self.deturck;
        let len = g.len();
        if let Some(j) = (1..len - 1).find(|&j| !(g.psi[j].is_finite() && g.psi[j] > 0.0)) {
            return Err(format!("psi = {} at interior node {j}", g.psi[j]));
        }
        for (end, j) in [(g.ends[0], 0), (g.ends[1], len - 1)] {
            if end == EndKind::Open && !(g.psi[j].is_finite() && g.psi[j] > 0.0) {
                return Err(format!("psi = {} at open end {j}", g.psi[j]));
            }
        }
        if let Some(j) = (0..len).find(|&j| !(g.phi[j].is_finite() && g.phi[j] > 0.0)) {
            return Err(format!("phi = {} at node {j}", g.phi[j]));
        }
        if let Some(j) = self.stretch.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(format!("grid stretch {} at node {j}", self.stretch[j]));
        }
        Ok(())
    }
}

/// One explicit midpoint (RK2) step of the DeTurck system and the material
/// frame. Returns the reason when the result is not admissible.
pub(crate) fn advance(g: &GaugeState, dt: f64) -> Result<GaugeState, String> {
    let t = g.deturck.t;
    let k1 = g.rates();
    let mid = g.advanced(&k1, 0.5 * dt, t + 0.5 * dt);
    mid.check()?;
    let k2 = mid.rates();
    let next = g.advanced(&k2, dt, t + dt);
    next.check()?;
    Ok(next)
}

/// One explicit midpoint (RK2) step.
pub fn flow_step(s: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FlowError::InvalidInput(format!("time step {dt} must be positive")));
    }
    if s.profile.ends.contains(&EndKind::Singular) {
        return Err(FlowError::InvalidInput("cannot flow a profile with a singular end".into()));
    }
    let next = advance(&s.gauge, dt).map_err(|reason| FlowError::StepFailure {
        t: s.profile.t,
        step: s.step_index,
        reason,
        partial: Box::new(FlowTrajectory::start(s.clone())),
    })?;
    let profile = next.material_profile(&s.profile);
    Ok(FlowState { profile, step_index: s.step_index + 1, dt_last: dt, gauge: next })
}
