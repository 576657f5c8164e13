//! Trotter-Chernov products of the averaging operators `A`.

use serde::{Deserialize, Serialize};

use crate::flow::FlowTrajectory;
use crate::geometry::GridProfile;

use super::sphere::{GeodesicSpheres, OperatorParams};
use super::{BackwardClock, HeatError};

/// Which time slice acts first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductOrder {
    /// `A_{m-1}^j ... A_0^j f`: slice 0 acts first.
    #[default]
    Chronological,
    /// `A_0^j ... A_{m-1}^j f`: slice `m - 1` acts first.
    Reversed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrotterOptions {
    pub order: ProductOrder,
    /// Gauss-Jacobi directions per geodesic sphere.
    pub directions: usize,
}

impl Default for TrotterOptions {
    fn default() -> Self {
        TrotterOptions { order: ProductOrder::Chronological, directions: 24 }
    }
}

/// Averaging radius `sqrt(8 (n + 1) tau / (j m))` of one factor.
pub fn trotter_radius(dim: usize, tau: f64, m: usize, j: usize) -> f64 {
    (8.0 * dim as f64 * tau / (j * m) as f64).sqrt()
}

/// Applies the product on metrics `metric(tau_i)`, `tau_i = i tau / m`.
pub(crate) fn product_with<F>(
    metric: F,
    frozen: bool,
    f: &[f64],
    tau: f64,
    m: usize,
    j: usize,
    opts: &TrotterOptions,
) -> Result<Vec<f64>, HeatError>
where
    F: Fn(f64) -> Result<GridProfile, HeatError>,
{
    if m == 0 || j == 0 {
        return Err(HeatError::InvalidInput(format!("m = {m} and j = {j} must be >= 1")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(HeatError::InvalidInput(format!("tau = {tau} must be >= 0")));
    }
    if tau == 0.0 {
        return Ok(f.to_vec());
    }
    let slices: Vec<usize> = match opts.order {
        ProductOrder::Chronological => (0..m).collect(),
        ProductOrder::Reversed => (0..m).rev().collect(),
    };
    let mut u = f.to_vec();
    let mut cached: Option<GeodesicSpheres> = None;
    for i in slices {
        let tau_i = tau * i as f64 / m as f64;
        let spheres = match (&cached, frozen) {
            (Some(s), true) => s.clone(),
            _ => {
                let p = metric(tau_i)?;
                if u.len() != p.len() {
                    return Err(HeatError::InvalidInput(format!(
                        "function has {} values on a {}-node grid",
                        u.len(),
                        p.len()
                    )));
                }
                let r = trotter_radius(p.dim(), tau, m, j);
                GeodesicSpheres::with_directions(&p, OperatorParams { r, tau: tau_i }, opts.directions)?
            }
        };
        for _ in 0..j {
            u = spheres.a(&u);
        }
        cached = Some(spheres);
    }
    Ok(u)
}

/// `U(tau) f` approximated by `m` time slices of `j` averaging steps each,
/// with `g(tau_i) = tr.profile_at(clock.t_of(tau_i))`.
pub fn trotter_product(
    tr: &FlowTrajectory,
    clock: BackwardClock,
    f: &[f64],
    tau: f64,
    m: usize,
    j: usize,
    opts: &TrotterOptions,
) -> Result<Vec<f64>, HeatError> {
    let metric = |tau_i: f64| Ok(tr.profile_at(clock.t_of(tau_i))?);
    product_with(metric, false, f, tau, m, j, opts)
}
