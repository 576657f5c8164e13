//! CDFs of axially symmetric diffusions and the rate of `int_0^{r_max} F dr`.

use crate::flow::FlowTrajectory;
use crate::geometry::{curvature, sphere_area, GridProfile, RadialDerivatives};
use crate::heat::{BackwardClock, DiffusionState};
use crate::transport::{w1_area, LineMeasure};

use super::{Origin, PinchError, MASS_TOL};

/// Per-frame CDFs of a diffusion on the arclength line measured from `origin`.
#[derive(Clone, Debug)]
pub struct CdfSeries {
    pub origin: Origin,
    pub taus: Vec<f64>,
    pub measures: Vec<LineMeasure>,
    pub r_max: Vec<f64>,
    /// `int_0^{r_max} F dr` per frame.
    pub int_f: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateSample {
    pub tau: f64,
    /// Finite difference of `int F dr` in `tau`.
    pub rate_fd: f64,
    /// `int (F_rr - H F_r + kappa F) dr` from the frame itself.
    pub rate_integrand: f64,
    /// `rate_fd` is one-sided (first or last frame).
    pub one_sided: bool,
}

/// Arclength of each node measured from `origin`.
pub(crate) fn oriented_arclength(p: &GridProfile, origin: Origin) -> Vec<f64> {
    let r = p.arclength();
    match origin {
        Origin::South => r,
        Origin::North => {
            let r_max = r[r.len() - 1];
            r.iter().map(|v| r_max - v).collect()
        }
    }
}

/// Line measure with density `|S^n| psi^n u` at the oriented arclength of
/// each node, rescaled to unit mass, and `r_max`.
pub(crate) fn oriented_line(p: &GridProfile, u: &[f64], origin: Origin) -> Result<(LineMeasure, f64), PinchError> {
    if u.len() != p.len() {
        return Err(PinchError::InvalidInput(format!("{} density values on a {}-node grid", u.len(), p.len())));
    }
    if let Some(v) = u.iter().find(|v| !v.is_finite() || **v < -1e-12) {
        return Err(PinchError::InvalidInput(format!("density value {v} is negative or not finite")));
    }
    let s = oriented_arclength(p, origin);
    let c = sphere_area(p.n);
    let mut pts: Vec<(f64, f64)> =
        s.iter().zip(&p.psi).zip(u).map(|((&s, psi), u)| (s, c * psi.max(0.0).powi(p.n as i32) * u.max(0.0))).collect();
    if origin == Origin::North {
        pts.reverse();
    }
    let (grid, dens): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let r_max = grid[grid.len() - 1];
    Ok((LineMeasure::normalized(vec![], grid, dens)?, r_max))
}

/// `int_0^{r_max} F dr`, exact for the piecewise-linear line density.
pub(crate) fn integral_of_cdf(mu: &LineMeasure, r_max: f64) -> Result<f64, PinchError> {
    Ok(w1_area(mu, &LineMeasure::from_atoms(vec![(r_max, 1.0)])?))
}

/// CDF of one frame with density `u` on `p`, and `int F dr`.
pub fn cdf_of_frame(p: &GridProfile, tau: f64, u: &[f64], origin: Origin) -> Result<(LineMeasure, f64), PinchError> {
    let mass: f64 = u.iter().zip(p.volume_cells().weights()).map(|(u, w)| u * w).sum();
    if !((mass - 1.0).abs() <= MASS_TOL) {
        return Err(PinchError::NotNormalized { tau, mass });
    }
    let (mu, r_max) = oriented_line(p, u, origin)?;
    let int_f = integral_of_cdf(&mu, r_max)?;
    Ok((mu, int_f))
}

/// CDFs of diffusion frames along `tr`, with `g(tau)` taken from the flow.
pub fn cdf_of_diffusion(
    tr: &FlowTrajectory,
    clock: BackwardClock,
    states: &[DiffusionState],
    origin: Origin,
) -> Result<CdfSeries, PinchError> {
    let mut series = CdfSeries { origin, taus: vec![], measures: vec![], r_max: vec![], int_f: vec![] };
    for s in states {
        let p = tr.profile_at(clock.t_of(s.tau))?;
        let (mu, int_f) = cdf_of_frame(&p, s.tau, &s.u, origin)?;
        series.taus.push(s.tau);
        series.r_max.push(p.r_max());
        series.measures.push(mu);
        series.int_f.push(int_f);
    }
    Ok(series)
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]).abs()).sum()
}

/// `int (F_rr - H F_r + kappa F) dr` on one frame, where `kappa` is
/// `Ric(d_r, d_r)` along a Ricci flow and 0 on a static metric.
pub(crate) fn rate_from_frame(
    p: &GridProfile,
    u: &[f64],
    mu: &LineMeasure,
    origin: Origin,
    evolving: bool,
) -> Result<f64, PinchError> {
    let s = oriented_arclength(p, origin);
    let d = RadialDerivatives::of(p);
    let kappa: Vec<f64> = if evolving {
        curvature(p)?.ric_rr.into_iter().map(|v| if v.is_finite() { v } else { 0.0 }).collect()
    } else {
        vec![0.0; p.len()]
    };
    let n = p.n as i32;
    let c = sphere_area(p.n);
    let sign = origin.sign();
    let f_s: Vec<f64> = (0..p.len()).map(|i| c * p.psi[i].max(0.0).powi(n) * u[i]).collect();
    let integrand: Vec<f64> = (0..p.len())
        .map(|i| {
            let h_fr = n as f64 * c * p.psi[i].max(0.0).powi(n - 1) * sign * d.psi_r[i] * u[i];
            -h_fr + kappa[i] * mu.cdf(s[i])
        })
        .collect();
    // int F_rr dr = F_r(r_max) - F_r(0)
    let last = p.len() - 1;
    let boundary = match origin {
        Origin::South => f_s[last] - f_s[0],
        Origin::North => f_s[0] - f_s[last],
    };
    Ok(trapezoid(&s, &integrand) + boundary)
}

/// Both estimators of `d/dtau int F dr` at every frame.
pub fn cdf_mass_rate(
    series: &CdfSeries,
    tr: &FlowTrajectory,
    clock: BackwardClock,
    states: &[DiffusionState],
) -> Result<Vec<RateSample>, PinchError> {
    let k = series.taus.len();
    if k < 2 || states.len() != k {
        return Err(PinchError::InvalidInput(format!(
            "need >= 2 frames matching the series, got {} states for {k} CDFs",
            states.len()
        )));
    }
    let (t, f) = (&series.taus, &series.int_f);
    let evolving = !tr.is_static();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let (rate_fd, one_sided) = if i == 0 {
            ((f[1] - f[0]) / (t[1] - t[0]), true)
        } else if i == k - 1 {
            ((f[i] - f[i - 1]) / (t[i] - t[i - 1]), true)
        } else {
            let (h1, h2) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let d = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1];
            (d, false)
        };
        let p = tr.profile_at(clock.t_of(t[i]))?;
        let rate_integrand = rate_from_frame(&p, &states[i].u, &series.measures[i], series.origin, evolving)?;
        out.push(RateSample { tau: t[i], rate_fd, rate_integrand, one_sided });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, ProfileKind};
    use std::f64::consts::PI;

    fn uniform(p: &GridProfile) -> Vec<f64> {
        vec![1.0 / p.volume(); p.len()]
    }

    #[test]
    fn uniform_round_cdf_is_closed_form() {
        let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 513).unwrap();
        let (mu, int_f) = cdf_of_frame(&p, 0.0, &uniform(&p), Origin::South).unwrap();
        for r in [0.3f64, 1.0, 2.0, 2.9] {
            let want = (2.0 * r - (2.0 * r).sin()) / (2.0 * PI);
            assert!((mu.cdf(r) - want).abs() < 1e-5, "{r}: {} vs {want}", mu.cdf(r));
        }
        assert!((int_f - PI / 2.0).abs() < 1e-5);
        assert_eq!(mu.cdf(0.0), 0.0);
        assert!((mu.cdf(PI) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn far_bump_has_tiny_integral() {
        let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 257).unwrap();
        let u = crate::heat::dirac_bump(&p, p.r_max()).unwrap();
        let (_, int_f) = cdf_of_frame(&p, 0.0, &u, Origin::South).unwrap();
        assert!(int_f < 0.03, "{int_f}");
    }

    #[test]
    fn reversing_the_origin_reflects_the_cdf() {
        let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 129).unwrap();
        let r = p.arclength();
        let u = crate::heat::normalized(&p, &r.iter().map(|r| 1.0 + r).collect::<Vec<_>>()).unwrap();
        let (s, _) = cdf_of_frame(&p, 0.0, &u, Origin::South).unwrap();
        let (n, _) = cdf_of_frame(&p, 0.0, &u, Origin::North).unwrap();
        let r_max = p.r_max();
        for &ri in &r {
            assert!((n.cdf(ri) - (1.0 - s.cdf(r_max - ri))).abs() < 1e-13);
        }
    }

    #[test]
    fn unnormalized_frames_are_rejected() {
        let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 65).unwrap();
        let u = vec![1.0; p.len()];
        assert!(matches!(cdf_of_frame(&p, 0.0, &u, Origin::South), Err(PinchError::NotNormalized { .. })));
    }

    #[test]
    fn static_uniform_density_has_zero_rate() {
        let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 257).unwrap();
        let tr = FlowTrajectory::frozen(&p, 0.0, 0.1).unwrap();
        let clock = BackwardClock::new(0.1);
        let states: Vec<DiffusionState> =
            [0.0, 0.05, 0.1].iter().map(|&tau| DiffusionState::new(&p, tau, uniform(&p))).collect();
        let series = cdf_of_diffusion(&tr, clock, &states, Origin::South).unwrap();
        for s in cdf_mass_rate(&series, &tr, clock, &states).unwrap() {
            assert!(s.rate_fd.abs() < 1e-6 && s.rate_integrand.abs() < 1e-6, "{s:?}");
        }
    }
}
