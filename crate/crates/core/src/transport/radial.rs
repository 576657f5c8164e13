//! Pushforward of axially symmetric densities to the meridian coordinate.

use crate::geometry::{sphere_area, GluedSpace, GridProfile};

use super::line::LineMeasure;
use super::TransportError;

const NEGATIVE_TOL: f64 = 1e-12;

/// Line measure with density `|S^n| psi^n u` on arclength, rescaled to unit
/// mass, together with the two unnormalized masses.
#[derive(Clone, Debug)]
pub struct RadialPushforward {
    pub measure: LineMeasure,
    /// `sum u dvol` with the profile's cell volumes.
    pub volume_mass: f64,
    /// Mass of the piecewise-linear line density before rescaling.
    pub line_mass: f64,
}

fn clip(u: &[f64]) -> Result<Vec<f64>, TransportError> {
    u.iter()
        .map(|&v| {
            if !v.is_finite() || v < -NEGATIVE_TOL {
                Err(TransportError::InvalidMeasure(format!("density value {v} is negative or not finite")))
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

fn line_density(p: &GridProfile, u: &[f64]) -> Vec<f64> {
    let area = sphere_area(p.n);
    p.psi.iter().zip(u).map(|(psi, u)| area * psi.max(0.0).powi(p.n as i32) * u).collect()
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0])).sum()
}

pub fn pushforward_radial(p: &GridProfile, u: &[f64]) -> Result<RadialPushforward, TransportError> {
    if u.len() != p.len() {
        return Err(TransportError::InvalidMeasure(format!("{} density values on a {}-node grid", u.len(), p.len())));
    }
    let u = clip(u)?;
    let r = p.arclength();
    let g = line_density(p, &u);
    let line_mass = trapezoid(&r, &g);
    let volume_mass = u.iter().zip(p.volume_cells().weights()).map(|(u, w)| u * w).sum();
    let measure = LineMeasure::normalized(Vec::new(), r, g)?;
    Ok(RadialPushforward { measure, volume_mass, line_mass })
}

/// Line coordinate of every node of the two caps: cap 1 occupies
/// `[0, D1]` with its singular point at `D1`, the interval `[D1, D1 + L]`,
/// and cap 2 starts at `D1 + L` with its singular point there.
pub fn glued_line_positions(g: &GluedSpace) -> [Vec<f64>; 2] {
    let d1 = g.dist_to_pole(0);
    let depth = d1.iter().copied().fold(0.0, f64::max);
    let cap1 = d1.iter().map(|d| depth - d).collect();
    let cap2 = g.dist_to_pole(1).iter().map(|d| depth + g.l + d).collect();
    [cap1, cap2]
}

/// Pushforward of densities on the two caps to the glued line coordinate.
pub fn pushforward_glued(g: &GluedSpace, u: [&[f64]; 2]) -> Result<RadialPushforward, TransportError> {
    let pos = glued_line_positions(g);
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut volume_mass = 0.0;
    for k in 0..2 {
        let cap = g.cap(k);
        if u[k].len() != cap.len() {
            return Err(TransportError::InvalidMeasure(format!(
                "{} density values on the {}-node cap {}",
                u[k].len(),
                cap.len(),
                k + 1
            )));
        }
        let uk = clip(u[k])?;
        volume_mass += uk.iter().zip(cap.volume_cells().weights()).map(|(u, w)| u * w).sum::<f64>();
        points.extend(pos[k].iter().copied().zip(line_density(cap, &uk)));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    // with L = 0 the two singular points share a position; both carry density 0
    points.dedup_by(|a, b| {
        let same = a.0 == b.0;
        if same {
            b.1 += a.1;
        }
        same
    });
    let (x, y): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let line_mass = trapezoid(&x, &y);
    let measure = LineMeasure::normalized(Vec::new(), x, y)?;
    Ok(RadialPushforward { measure, volume_mass, line_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, ProfileKind};

    #[test]
    fn uniform_round_density_pushes_to_sin_squared() {
        let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 257).unwrap();
        let u = vec![1.0 / p.volume(); p.len()];
        let push = pushforward_radial(&p, &u).unwrap();
        assert!((push.measure.total_mass() - 1.0).abs() < 1e-8);
        assert!((push.volume_mass - 1.0).abs() < 1e-8);
        assert!((push.line_mass - 1.0).abs() < 1e-8);
        // F_r recovered by differencing the CDF
        let r = p.arclength();
        let c = sphere_area(2);
        for i in (1..p.len() - 1).step_by(16) {
            let eps = 1e-8;
            let f_r = (push.measure.cdf(r[i] + eps) - push.measure.cdf(r[i])) / eps;
            let want = c * p.psi[i].powi(2) * u[i] / push.line_mass;
            assert!((f_r - want).abs() < 1e-6, "node {i}: {f_r} vs {want}");
            assert!((want - r[i].sin().powi(2) * 2.0 / std::f64::consts::PI).abs() < 1e-6);
        }
    }

    #[test]
    fn glued_line_has_an_empty_interval() {
        let g = GluedSpace::dumbbell_halves(2, 65, 0.4).unwrap();
        let pos = glued_line_positions(&g);
        let d1 = pos[0][pos[0].len() - 1];
        assert!((pos[1][0] - d1 - 0.4).abs() < 1e-14);
        let u1 = vec![1.0; g.cap1.len()];
        let u2 = vec![1.0; g.cap2.len()];
        let push = pushforward_glued(&g, [&u1, &u2]).unwrap();
        let m = &push.measure;
        assert!((m.cdf(d1 + 0.4) - m.cdf(d1)).abs() < 1e-15);
        assert!((m.cdf(d1) - 0.5).abs() < 1e-12);
    }
}
