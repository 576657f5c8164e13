use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::interp::QuinticHermite;
use super::stencil::{derivatives, EndKind, Parity};
use super::GeometryError;

/// How a profile was produced; persisted in the JSON sidecar of a profile CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `psi(r) = rho sin(r / rho)` on `[0, rho pi]`.
    Round { rho: f64 },
    /// Neck segment `psi = c` with open ends.
    Cylinder { c: f64 },
    /// `psi(r) = sin r (1 - a sin^2 r)` on `[0, pi]`.
    Dumbbell { a: f64 },
    /// Tabulated data.
    Custom { label: String },
}

/// Discretized warped-product metric on the fixed grid `x in [-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridProfile {
    /// Fiber-sphere dimension; the manifold has dimension `n + 1`.
    pub n: usize,
    pub xs: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub t: f64,
    pub ends: [EndKind; 2],
    pub kind: ProfileKind,
}

/// Surface area of the unit `n`-sphere in `R^{n+1}`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_area(n - 2),
    }
}

fn uniform_grid(nodes: usize) -> Vec<f64> {
    let h = 2.0 / (nodes - 1) as f64;
    (0..nodes).map(|i| if i == nodes - 1 { 1.0 } else { -1.0 + i as f64 * h }).collect()
}

/// Builds one of the analytic profile families on `nodes` grid points.
pub fn build_profile(kind: &ProfileKind, n: usize, nodes: usize) -> Result<GridProfile, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidParameter(format!("fiber dimension n = {n} must be >= 2")));
    }
    if nodes < 33 {
        return Err(GeometryError::InvalidParameter(format!("grid needs >= 33 nodes, got {nodes}")));
    }
    let xs = uniform_grid(nodes);
    let (phi, psi, ends) = match *kind {
        ProfileKind::Round { rho } => {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(GeometryError::InvalidParameter(format!("radius rho = {rho} must be positive")));
            }
            let phi = vec![rho * PI / 2.0; nodes];
            let psi = xs.iter().map(|x| rho * (PI * (x + 1.0) / 2.0).sin()).collect();
            (phi, psi, [EndKind::SmoothPole; 2])
        }
        ProfileKind::Dumbbell { a } => {
            if !(a > 1.0 / 3.0 && a < 1.0) {
                return Err(GeometryError::InvalidParameter(format!(
                    "dumbbell parameter a = {a} must lie in (1/3, 1)"
                )));
            }
            let phi = vec![PI / 2.0; nodes];
            let psi = xs
                .iter()
                .map(|x| {
                    let s = (PI * (x + 1.0) / 2.0).sin();
                    s * (1.0 - a * s * s)
                })
                .collect();
            (phi, psi, [EndKind::SmoothPole; 2])
        }
        ProfileKind::Cylinder { c } => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(GeometryError::InvalidParameter(format!("cylinder radius c = {c} must be positive")));
            }
            (vec![1.0; nodes], vec![c; nodes], [EndKind::Open; 2])
        }
        ProfileKind::Custom { .. } => {
            return Err(GeometryError::InvalidParameter(
                "custom profiles are built with GridProfile::from_table".into(),
            ))
        }
    };
    let mut p = GridProfile { n, xs, phi, psi, t: 0.0, ends, kind: kind.clone() };
    p.pin_poles();
    p.validate()?;
    Ok(p)
}

/// Dumbbell with the asymmetric factor `1 + amp sin^2 r cos r`, which keeps the
/// pole conditions and breaks the reflection symmetry about `r = pi/2`.
pub fn perturbed_dumbbell(a: f64, amp: f64, n: usize, nodes: usize) -> Result<GridProfile, GeometryError> {
    let mut p = build_profile(&ProfileKind::Dumbbell { a }, n, nodes)?;
    if !(amp.abs() < 0.5) {
        return Err(GeometryError::InvalidParameter(format!("perturbation amplitude {amp} must be below 0.5")));
    }
    for (psi, x) in p.psi.iter_mut().zip(&p.xs) {
        let r = PI * (x + 1.0) / 2.0;
        *psi *= 1.0 + amp * r.sin().powi(2) * r.cos();
    }
    p.kind = ProfileKind::Custom { label: format!("perturbed_dumbbell(a={a},amp={amp})") };
    p.validate()?;
    Ok(p)
}

/// Arclength `r_i = int_{-1}^{x_i} phi dx`, measured from the `x = -1` end.
pub fn arclength(p: &GridProfile) -> Vec<f64> {
    let h = p.h();
    let (phi_x, _) = derivatives(&p.phi, h, p.ends, Parity::Even);
    let mut r = Vec::with_capacity(p.len());
    r.push(0.0);
    for i in 1..p.len() {
        // trapezoid with the cubic end correction
        let cell = 0.5 * h * (p.phi[i - 1] + p.phi[i]) + h * h / 12.0 * (phi_x[i - 1] - phi_x[i]);
        r.push(r[i - 1] + cell);
    }
    r
}

/// Riemannian volume of the dual cell around each node, split into the halves
/// left and right of the node. Includes the fiber area `|S^n| psi^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeCells {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl VolumeCells {
    pub fn weight(&self, i: usize) -> f64 {
        self.left[i] + self.right[i]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.left.iter().zip(&self.right).map(|(l, r)| l + r).collect()
    }

    pub fn total(&self) -> f64 {
        self.left.iter().chain(&self.right).sum()
    }
}

impl GridProfile {
    /// Builds a profile from tabulated values on a uniform grid over `[-1, 1]`.
    pub fn from_table(
        n: usize,
        xs: Vec<f64>,
        phi: Vec<f64>,
        psi: Vec<f64>,
        ends: [EndKind; 2],
        t: f64,
        kind: ProfileKind,
    ) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::InvalidParameter(format!("fiber dimension n = {n} must be >= 2")));
        }
        let p = GridProfile { n, xs, phi, psi, t, ends, kind };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Grid spacing in x.
    pub fn h(&self) -> f64 {
        2.0 / (self.len() - 1) as f64
    }

    pub fn arclength(&self) -> Vec<f64> {
        arclength(self)
    }

    /// Total length of the meridian from `x = -1` to `x = +1`.
    pub fn r_max(&self) -> f64 {
        *self.arclength().last().expect("non-empty grid")
    }

    /// Manifold dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub(crate) fn pin_poles(&mut self) {
        let last = self.len() - 1;
        if self.ends[0].is_pole() {
            self.psi[0] = 0.0;
        }
        if self.ends[1].is_pole() {
            self.psi[last] = 0.0;
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let len = self.len();
        if len < 5 || self.phi.len() != len || self.psi.len() != len {
            return Err(GeometryError::MalformedGrid(format!(
                "need >= 5 nodes with matching columns (x: {}, phi: {}, psi: {})",
                len,
                self.phi.len(),
                self.psi.len()
            )));
        }
        if self.xs[0] != -1.0 || self.xs[len - 1] != 1.0 {
            return Err(GeometryError::MalformedGrid("grid must start at -1 and end at +1".into()));
        }
        let h = self.h();
        for (i, w) in self.xs.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
                return Err(GeometryError::MalformedGrid(format!("grid is not uniform at node {i}")));
            }
        }
        if let Some(i) = self.phi.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GeometryError::MalformedGrid(format!("phi must be positive, got {} at node {i}", self.phi[i])));
        }
        for (end, idx) in [(self.ends[0], 0), (self.ends[1], len - 1)] {
            let v = self.psi[idx];
            if end.is_pole() && v != 0.0 {
                return Err(GeometryError::MalformedGrid(format!("psi must vanish at pole node {idx}, got {v}")));
            }
            if end == EndKind::Open && !(v > 0.0) {
                return Err(GeometryError::MalformedGrid(format!("psi must be positive at open end {idx}")));
            }
        }
        for i in 1..len - 1 {
            let v = self.psi[i];
            if !(v.is_finite() && v > 0.0) {
                return Err(GeometryError::SingularInterior { node: i, psi: v });
            }
        }
        Ok(())
    }

    /// Profile under `x -> -x`.
    pub fn reflected(&self) -> Self {
        let mut p = self.clone();
        p.phi.reverse();
        p.psi.reverse();
        p.ends = [self.ends[1], self.ends[0]];
        p
    }

    /// Linear interpolation `(1 - w) self + w other` of `phi`, `psi` and `t`.
    pub fn lerp(&self, other: &Self, w: f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect();
        GridProfile {
            n: self.n,
            xs: self.xs.clone(),
            phi: mix(&self.phi, &other.phi),
            psi: mix(&self.psi, &other.psi),
            t: (1.0 - w) * self.t + w * other.t,
            ends: self.ends,
            kind: self.kind.clone(),
        }
    }

    /// Quintic interpolants of `psi` and `phi` in x.
    pub(crate) fn x_interpolants(&self) -> (QuinticHermite, QuinticHermite) {
        let h = self.h();
        let (psi_x, psi_xx) = derivatives(&self.psi, h, self.ends, Parity::Odd);
        let (phi_x, phi_xx) = derivatives(&self.phi, h, self.ends, Parity::Even);
        (
            QuinticHermite::new(self.xs.clone(), self.psi.clone(), psi_x, psi_xx),
            QuinticHermite::new(self.xs.clone(), self.phi.clone(), phi_x, phi_xx),
        )
    }

    /// Dual-cell volumes by Simpson's rule on each half cell.
    pub fn volume_cells(&self) -> VolumeCells {
        let (psi_i, phi_i) = self.x_interpolants();
        let n = self.n as i32;
        let c = sphere_area(self.n);
        let q = |x: f64| {
            let psi = psi_i.eval(x).0.max(0.0);
            c * psi.powi(n) * phi_i.eval(x).0
        };
        let h = self.h();
        let len = self.len();
        let mut left = vec![0.0; len];
        let mut right = vec![0.0; len];
        for i in 0..len {
            let x = self.xs[i];
            let qi = c * self.psi[i].powi(n) * self.phi[i];
            if i > 0 {
                left[i] = h / 12.0 * (q(x - 0.5 * h) + 4.0 * q(x - 0.25 * h) + qi);
            }
            if i + 1 < len {
                right[i] = h / 12.0 * (qi + 4.0 * q(x + 0.25 * h) + q(x + 0.5 * h));
            }
        }
        VolumeCells { left, right }
    }

    pub fn volume(&self) -> f64 {
        self.volume_cells().total()
    }

    /// One-sided slopes `psi_r` at the two end nodes.
    pub fn end_slopes(&self) -> (f64, f64) {
        let (psi_x, _) = derivatives(&self.psi, self.h(), self.ends, Parity::Odd);
        let last = self.len() - 1;
        (psi_x[0] / self.phi[0], psi_x[last] / self.phi[last])
    }
}
