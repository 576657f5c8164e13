//! CDFs concentrated near a pole, built from a cutoff of `psi`, with the
//! lower bound on the rate of `int F dr` they force.

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::geometry::interp::QuinticHermite;
use crate::geometry::GridProfile;
use crate::transport::LineMeasure;

use super::{Origin, PinchError};

const GAUSS_POINTS: usize = 16;
const SUBPANELS: usize = 8;
const DENSITY_SAMPLES: usize = 257;

/// Cutoff equal to 1 on `[0, eps]`, 0 from `2 eps` on, with a C^1 smoothstep
/// in between.
pub fn gamma_cutoff(rho: f64, eps: f64) -> f64 {
    if rho <= eps {
        1.0
    } else if rho >= 2.0 * eps {
        0.0
    } else {
        let t = (rho - eps) / eps;
        1.0 - t * t * (3.0 - 2.0 * t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyOptions {
    pub eps: f64,
    /// Half-width of the window next to the far pole; `None` takes the
    /// largest admissible value.
    pub delta: Option<f64>,
    /// The family concentrates at the pole opposite this origin.
    pub origin: Origin,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions { eps: 0.1, delta: None, origin: Origin::South }
    }
}

#[derive(Clone, Debug)]
pub struct ConcentratedFamily {
    pub eps: f64,
    pub delta: f64,
    /// Largest admissible `delta`: half the distance from the pole to
    /// `psi = 2 eps`.
    pub delta_max: f64,
    /// `psi_r` lies in `[-1 - ., -1 + lambda]` on the window.
    pub lambda: f64,
    pub r_max: f64,
    /// `(n + 1) / (n 2^(n+1) eps)`.
    pub floor: f64,
    /// `int gamma rho^(n-1) / int gamma rho^n` over `[0, 2 eps]`.
    pub gamma_ratio: f64,
    /// `sup |Ric(d_r, d_r)|` on the window.
    pub ric_sup: f64,
    /// `2 delta ||Ric||^2`.
    pub curvature_term: f64,
    /// `floor - curvature_term`.
    pub bound_value: f64,
    /// `int -H F_r dr` for the constructed `F`.
    pub h_part: f64,
    /// `int Ric(d_r, d_r) F dr`.
    pub ric_part: f64,
    /// `h_part + ric_part`: the rate of `int F dr` forced by this `F`.
    pub measured_rate: f64,
    /// The constructed CDF on the arclength line from the origin.
    pub measure: LineMeasure,
}

struct Meridian {
    psi: QuinticHermite,
    phi: QuinticHermite,
    n: i32,
    /// Far-end x and the direction from it into the interior.
    x_far: f64,
    inward: f64,
    rule: GaussLegendre,
}

struct Sample {
    psi: f64,
    /// `d psi / ds` with `s` increasing toward the far pole.
    psi_s: f64,
    ric: f64,
    /// `ds / dx` in absolute value.
    phi: f64,
}

impl Meridian {
    fn at(&self, x: f64) -> Sample {
        let (psi, psi_x, psi_xx) = self.psi.eval(x);
        let (phi, phi_x, _) = self.phi.eval(x);
        let psi_r = psi_x / phi;
        let psi_rr = (psi_xx - psi_x * phi_x / phi) / (phi * phi);
        Sample { psi, psi_s: -self.inward * psi_r, ric: -(self.n as f64) * psi_rr / psi, phi }
    }

    /// Gauss nodes and `ds` weights on the x-segment between `a` and `b`.
    fn panel(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = (a.min(b), a.max(b));
        let mut out = Vec::with_capacity(SUBPANELS * GAUSS_POINTS);
        for k in 0..SUBPANELS {
            let (p0, p1) =
                (lo + (hi - lo) * k as f64 / SUBPANELS as f64, lo + (hi - lo) * (k + 1) as f64 / SUBPANELS as f64);
            for &(z, w) in self.rule.as_node_weight_pairs() {
                out.push((0.5 * (p0 + p1) + 0.5 * (p1 - p0) * z, 0.5 * (p1 - p0) * w));
            }
        }
        out
    }

    /// Quadrature nodes on `[x, x_far]` split at grid knots.
    fn nodes_to_far(&self, x: f64) -> Vec<(f64, f64)> {
        let knots = self.psi.knots();
        let mut cuts: Vec<f64> = knots
            .iter()
            .copied()
            .filter(|&k| (k - x) * self.inward < 0.0 && (k - self.x_far) * self.inward > 0.0)
            .collect();
        cuts.push(x);
        cuts.push(self.x_far);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2).flat_map(|w| self.panel(w[0], w[1])).collect()
    }

    /// Arclength from `x` to the far pole.
    fn dist_to_far(&self, x: f64) -> f64 {
        self.nodes_to_far(x).iter().map(|&(z, w)| w * self.phi.eval(z).0).sum()
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f(lo) < 0 <= f(hi) in the sense of the caller's orientation
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `int_0^rho gamma(sigma) sigma^k d sigma`, exact.
fn gamma_moment(rule: &GaussLegendre, rho: f64, eps: f64, k: i32) -> f64 {
    let head = rho.min(eps).powi(k + 1) / (k + 1) as f64;
    if rho <= eps {
        return head;
    }
    let (a, b) = (eps, rho.min(2.0 * eps));
    head + rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(z, w)| {
            let s = 0.5 * (a + b) + 0.5 * (b - a) * z;
            0.5 * (b - a) * w * gamma_cutoff(s, eps) * s.powi(k)
        })
        .sum::<f64>()
}

/// Builds `F` with `F_r = beta psi^n` on the window `[r_max - 2 delta, r_max]`
/// next to the pole opposite `opts.origin`, where
/// `beta = -gamma(psi) psi_r / int gamma(rho) rho^n`.
pub fn concentrated_family(p: &GridProfile, opts: &FamilyOptions) -> Result<ConcentratedFamily, PinchError> {
    let eps = opts.eps;
    let inadmissible = |delta: f64, reason: String| PinchError::Inadmissible { eps, delta, reason };
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(inadmissible(f64::NAN, "eps must be positive".into()));
    }
    let len = p.len();
    let (far, inward) = match opts.origin {
        Origin::South => (len - 1, -1.0),
        Origin::North => (0, 1.0),
    };
    if p.psi[far] != 0.0 {
        return Err(inadmissible(f64::NAN, format!("psi = {} at the far end, not a pole", p.psi[far])));
    }
    let (psi, phi) = p.x_interpolants();
    let rule = GaussLegendre::new(GAUSS_POINTS.try_into().expect("nonzero"));
    let m = Meridian { psi, phi, n: p.n as i32, x_far: p.xs[far], inward, rule };

    // first node inward from the pole with psi >= 2 eps
    let step = |k: usize| if inward < 0.0 { far - k } else { far + k };
    let mut k = 1;
    while k < len && p.psi[step(k)] < 2.0 * eps {
        k += 1;
    }
    if k == len {
        return Err(inadmissible(f64::NAN, format!("psi stays below 2 eps = {}", 2.0 * eps)));
    }
    let x_star = bisect(p.xs[step(k - 1)], p.xs[step(k)], |x| m.psi.eval(x).0 - 2.0 * eps);
    let delta_max = 0.5 * m.dist_to_far(x_star);
    let delta = opts.delta.unwrap_or(delta_max);
    if !(delta > 0.0 && delta <= delta_max * (1.0 + 1e-12)) {
        return Err(inadmissible(delta, format!("admissible delta lies in (0, {delta_max}]")));
    }
    let x_w = if delta >= delta_max { x_star } else { bisect(x_star, m.x_far, |x| m.dist_to_far(x) - 2.0 * delta) };

    let quad = m.nodes_to_far(x_w);
    let samples: Vec<(Sample, f64)> = quad.iter().map(|&(x, w)| (m.at(x), w)).collect();
    let max_slope = samples.iter().map(|(s, _)| s.psi_s).fold(f64::NEG_INFINITY, f64::max);
    if !(max_slope < 0.0) {
        return Err(inadmissible(delta, format!("psi is not strictly decreasing toward the pole (slope {max_slope})")));
    }
    let lambda = 1.0 + max_slope;
    if lambda >= 1.0 {
        return Err(inadmissible(delta, format!("lambda = {lambda} >= 1")));
    }

    let n = p.n as i32;
    let psi_w = m.psi.eval(x_w).0;
    let z = gamma_moment(&m.rule, psi_w, eps, n);
    let cdf = |psi: f64| 1.0 - gamma_moment(&m.rule, psi.max(0.0), eps, n) / z;
    let mut h_part = 0.0;
    let mut ric_part = 0.0;
    let mut ric_sup: f64 = 0.0;
    for (s, w) in &samples {
        let ds = w * s.phi;
        h_part += ds * n as f64 * gamma_cutoff(s.psi, eps) * s.psi.powi(n - 1) * s.psi_s * s.psi_s / z;
        ric_part += ds * s.ric * cdf(s.psi);
        ric_sup = ric_sup.max(s.ric.abs());
    }

    let r_max = p.r_max();
    let mut grid = Vec::with_capacity(DENSITY_SAMPLES);
    let mut dens = Vec::with_capacity(DENSITY_SAMPLES);
    for i in 0..DENSITY_SAMPLES {
        let x = x_w + (m.x_far - x_w) * i as f64 / (DENSITY_SAMPLES - 1) as f64;
        let s = m.at(x);
        let psi = s.psi.max(0.0);
        grid.push(r_max - if i + 1 == DENSITY_SAMPLES { 0.0 } else { m.dist_to_far(x) });
        dens.push(if i + 1 == DENSITY_SAMPLES { 0.0 } else { gamma_cutoff(psi, eps) * psi.powi(n) * (-s.psi_s) / z });
    }
    let measure = LineMeasure::normalized(vec![], grid, dens)?;

    let nf = p.n as f64;
    let floor = (nf + 1.0) / (nf * 2f64.powi(n + 1) * eps);
    let gamma_ratio = gamma_moment(&m.rule, 2.0 * eps, eps, n - 1) / gamma_moment(&m.rule, 2.0 * eps, eps, n);
    let curvature_term = 2.0 * delta * ric_sup * ric_sup;
    Ok(ConcentratedFamily {
        eps,
        delta,
        delta_max,
        lambda,
        r_max,
        floor,
        gamma_ratio,
        ric_sup,
        curvature_term,
        bound_value: floor - curvature_term,
        h_part,
        ric_part,
        measured_rate: h_part + ric_part,
        measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, ProfileKind};

    fn round() -> GridProfile {
        build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 513).unwrap()
    }

    #[test]
    fn floor_is_the_closed_form() {
        let fam = concentrated_family(&round(), &FamilyOptions { eps: 0.1, ..Default::default() }).unwrap();
        assert!((fam.floor - 1.875).abs() < 1e-15);
        assert!(fam.gamma_ratio >= fam.floor);
        assert!((fam.delta_max - 0.2f64.asin() / 2.0).abs() < 1e-6, "{}", fam.delta_max);
        assert!(fam.lambda < 0.03, "{}", fam.lambda);
        assert!(fam.measured_rate >= fam.bound_value);
    }

    #[test]
    fn cdf_is_pinned_and_monotone() {
        let p = round();
        for origin in [Origin::South, Origin::North] {
            let fam = concentrated_family(&p, &FamilyOptions { eps: 0.1, delta: None, origin }).unwrap();
            let mu = &fam.measure;
            assert_eq!(mu.cdf(0.0), 0.0);
            assert!((mu.cdf(fam.r_max) - 1.0).abs() < 1e-14);
            let mut prev = 0.0;
            for i in 0..=400 {
                let f = mu.cdf(fam.r_max * i as f64 / 400.0);
                assert!(f >= prev);
                prev = f;
            }
            assert_eq!(mu.cdf(fam.r_max - 2.0 * fam.delta - 1e-9), 0.0);
        }
    }

    #[test]
    fn halving_eps_doubles_the_bound() {
        let p = round();
        let b = |eps| concentrated_family(&p, &FamilyOptions { eps, ..Default::default() }).unwrap().bound_value;
        assert!(b(0.05) >= 2.0 * b(0.1), "{} vs {}", b(0.05), b(0.1));
    }

    #[test]
    fn too_wide_windows_are_rejected() {
        let p = round();
        let err = concentrated_family(&p, &FamilyOptions { eps: 0.1, delta: Some(0.5), ..Default::default() });
        assert!(matches!(err, Err(PinchError::Inadmissible { .. })));
        let err = concentrated_family(&p, &FamilyOptions { eps: 0.6, ..Default::default() });
        assert!(matches!(err, Err(PinchError::Inadmissible { .. })));
    }

    #[test]
    fn narrower_window_keeps_the_bound() {
        let fam = concentrated_family(&round(), &FamilyOptions { eps: 0.1, delta: Some(0.03), ..Default::default() })
            .unwrap();
        assert!(fam.h_part >= fam.floor);
        assert!((fam.measure.cdf(fam.r_max) - 1.0).abs() < 1e-14);
    }
}
