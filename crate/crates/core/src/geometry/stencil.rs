//! Fourth-order finite differences on the uniform x-grid.
//!
//! Interior nodes use the five-point central stencils. Near an end the array is
//! extended by two ghost nodes: at a smooth pole the ghosts follow the parity
//! of the field about the pole (the fiber radius is odd in the distance to the
//! pole, the length density and all rotationally symmetric functions are
//! even); at open or singular ends the ghosts come from quartic extrapolation.

use serde::{Deserialize, Serialize};

/// Boundary behavior of a profile at `x = -1` or `x = +1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    /// `psi = 0` with `psi_r -> -/+1`: the metric closes up smoothly.
    SmoothPole,
    /// `psi = 0` without pole regularity (a pinched end of a cap).
    Singular,
    /// Non-compact end (neck segment); `psi > 0`.
    Open,
}

impl EndKind {
    pub fn is_pole(self) -> bool {
        matches!(self, EndKind::SmoothPole | EndKind::Singular)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

const GHOSTS: usize = 2;

fn extrapolate(a: f64, b: f64, c: f64, d: f64, e: f64) -> f64 {
    // quartic through five equispaced values, evaluated one step before `a`
    5.0 * a - 10.0 * b + 10.0 * c - 5.0 * d + e
}

/// Returns `values` with two ghost nodes prepended and appended.
pub(crate) fn extend(values: &[f64], ends: [EndKind; 2], parity: Parity) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "stencils need at least five nodes");
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let mut out = vec![0.0; n + 2 * GHOSTS];
    out[GHOSTS..GHOSTS + n].copy_from_slice(values);

    match ends[0] {
        EndKind::SmoothPole => {
            out[1] = sign * values[1];
            out[0] = sign * values[2];
        }
        _ => {
            out[1] = extrapolate(values[0], values[1], values[2], values[3], values[4]);
            out[0] = extrapolate(out[1], values[0], values[1], values[2], values[3]);
        }
    }
    let last = n + GHOSTS - 1;
    match ends[1] {
        EndKind::SmoothPole => {
            out[last + 1] = sign * values[n - 2];
            out[last + 2] = sign * values[n - 3];
        }
        _ => {
            out[last + 1] = extrapolate(values[n - 1], values[n - 2], values[n - 3], values[n - 4], values[n - 5]);
            out[last + 2] = extrapolate(out[last + 1], values[n - 1], values[n - 2], values[n - 3], values[n - 4]);
        }
    }
    out
}

/// First and second x-derivatives of `values` on a uniform grid of spacing `h`.
pub fn derivatives(values: &[f64], h: f64, ends: [EndKind; 2], parity: Parity) -> (Vec<f64>, Vec<f64>) {
    let ext = extend(values, ends, parity);
    let n = values.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        let k = i + GHOSTS;
        let (fm2, fm1, f0, fp1, fp2) = (ext[k - 2], ext[k - 1], ext[k], ext[k + 1], ext[k + 2]);
        d1[i] = ((fm2 - fp2) + 8.0 * (fp1 - fm1)) / (12.0 * h);
        d2[i] = (-(fm2 + fp2) + 16.0 * (fm1 + fp1) - 30.0 * f0) / (12.0 * h * h);
    }
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> (Vec<f64>, f64) {
        let h = 2.0 / (n - 1) as f64;
        ((0..n).map(|i| -1.0 + i as f64 * h).collect(), h)
    }

    #[test]
    fn quartic_is_differentiated_exactly_with_extrapolated_ends() {
        let (xs, h) = grid(17);
        let f: Vec<f64> = xs.iter().map(|x| 1.0 + x - 2.0 * x * x + x.powi(3) + 0.5 * x.powi(4)).collect();
        let (d1, d2) = derivatives(&f, h, [EndKind::Open, EndKind::Open], Parity::Even);
        for (i, x) in xs.iter().enumerate() {
            let e1 = 1.0 - 4.0 * x + 3.0 * x * x + 2.0 * x.powi(3);
            let e2 = -4.0 + 6.0 * x + 6.0 * x * x;
            assert!((d1[i] - e1).abs() < 1e-9, "d1 at {x}: {} vs {e1}", d1[i]);
            assert!((d2[i] - e2).abs() < 1e-8, "d2 at {x}: {} vs {e2}", d2[i]);
        }
    }

    #[test]
    fn odd_reflection_gives_zero_second_derivative_at_pole() {
        let (xs, h) = grid(33);
        let f: Vec<f64> = xs.iter().map(|x| (std::f64::consts::FRAC_PI_2 * (x + 1.0)).sin()).collect();
        let (d1, d2) = derivatives(&f, h, [EndKind::SmoothPole; 2], Parity::Odd);
        assert!(d2[0].abs() < 1e-12);
        assert!((d1[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-5);
        assert!((d1[32] + std::f64::consts::FRAC_PI_2).abs() < 1e-5);
    }

    #[test]
    fn fourth_order_convergence_in_the_interior() {
        let err = |n: usize| {
            let (xs, h) = grid(n);
            let f: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin()).collect();
            let (_, d2) = derivatives(&f, h, [EndKind::Open; 2], Parity::Even);
            xs.iter().zip(&d2).map(|(x, d)| (d + 4.0 * (2.0 * x).sin()).abs()).fold(0.0, f64::max)
        };
        let order = (err(65) / err(129)).log2();
        // extrapolated ghosts cost one order at the two end nodes
        assert!(order > 2.8, "observed order {order}");
    }
}
