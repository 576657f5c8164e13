use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::stencil::EndKind;
use super::{GeometryError, GridProfile, ProfileKind};

/// Which end of a cap's x-grid is the singular point glued to the interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapAttachment {
    /// `P` sits at `x = -1`.
    Lower,
    /// `P` sits at `x = +1`.
    Upper,
}

/// Two caps `M1`, `M2` joined by `[0, L]` with `P1 ~ 0` and `P2 ~ L`.
#[derive(Clone, Debug)]
pub struct GluedSpace {
    pub cap1: GridProfile,
    pub cap2: GridProfile,
    pub l: f64,
    pub attachments: [CapAttachment; 2],
}

/// A point of the glued space; cap points are located on a meridian by their
/// distance to the cap's singular point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GluedPoint {
    Cap { cap: usize, dist_to_pole: f64 },
    Interval { s: f64 },
}

fn attachment(cap: &GridProfile, which: usize) -> Result<CapAttachment, GeometryError> {
    match cap.ends {
        [EndKind::Singular, EndKind::SmoothPole] => Ok(CapAttachment::Lower),
        [EndKind::SmoothPole, EndKind::Singular] => Ok(CapAttachment::Upper),
        ends => Err(GeometryError::InvalidGluedSpace(format!(
            "cap {which} must have one singular and one smooth pole, got {ends:?}"
        ))),
    }
}

impl GluedSpace {
    pub fn new(cap1: GridProfile, cap2: GridProfile, l: f64) -> Result<Self, GeometryError> {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(GeometryError::InvalidGluedSpace(format!("interval length {l} must be >= 0")));
        }
        if cap1.n != cap2.n {
            return Err(GeometryError::InvalidGluedSpace(format!(
                "caps have fiber dimensions {} and {}",
                cap1.n, cap2.n
            )));
        }
        let attachments = [attachment(&cap1, 1)?, attachment(&cap2, 2)?];
        cap1.validate()?;
        cap2.validate()?;
        Ok(GluedSpace { cap1, cap2, l, attachments })
    }

    /// Two halves of the `a -> 1` dumbbell, `psi = sin r cos^2 r` on
    /// `[0, pi/2]`, with `P1` at the upper end of cap 1 and `P2` at the lower
    /// end of cap 2.
    pub fn dumbbell_halves(n: usize, nodes: usize, l: f64) -> Result<Self, GeometryError> {
        if nodes < 33 {
            return Err(GeometryError::InvalidParameter(format!("grid needs >= 33 nodes, got {nodes}")));
        }
        let h = 2.0 / (nodes - 1) as f64;
        let xs: Vec<f64> = (0..nodes).map(|i| if i == nodes - 1 { 1.0 } else { -1.0 + i as f64 * h }).collect();
        let phi = vec![PI / 4.0; nodes];
        let psi: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                if i == 0 || i == nodes - 1 {
                    0.0
                } else {
                    let r = PI / 4.0 * (x + 1.0);
                    r.sin() * r.cos().powi(2)
                }
            })
            .collect();
        let kind = ProfileKind::Custom { label: "dumbbell_half".into() };
        let cap1 = GridProfile::from_table(n, xs, phi, psi, [EndKind::SmoothPole, EndKind::Singular], 0.0, kind)?;
        let cap2 = cap1.reflected();
        GluedSpace::new(cap1, cap2, l)
    }

    pub fn cap(&self, i: usize) -> &GridProfile {
        if i == 0 {
            &self.cap1
        } else {
            &self.cap2
        }
    }

    /// Distance from the singular point `P` of cap `i` to each node.
    pub fn dist_to_pole(&self, i: usize) -> Vec<f64> {
        let r = self.cap(i).arclength();
        let total = *r.last().expect("non-empty grid");
        match self.attachments[i] {
            CapAttachment::Lower => r,
            CapAttachment::Upper => r.iter().map(|v| total - v).collect(),
        }
    }

    pub fn node_point(&self, cap: usize, node: usize) -> GluedPoint {
        GluedPoint::Cap { cap, dist_to_pole: self.dist_to_pole(cap)[node] }
    }

    pub fn contains(&self, p: GluedPoint) -> bool {
        match p {
            GluedPoint::Interval { s } => (0.0..=self.l).contains(&s),
            GluedPoint::Cap { cap, dist_to_pole } => {
                cap < 2 && dist_to_pole >= 0.0 && dist_to_pole <= self.cap(cap).r_max() * (1.0 + 1e-12)
            }
        }
    }

    pub fn p1(&self) -> GluedPoint {
        GluedPoint::Interval { s: 0.0 }
    }

    pub fn p2(&self) -> GluedPoint {
        GluedPoint::Interval { s: self.l }
    }
}

/// Composite distance `D`: cap distances are radial separations along a
/// meridian, and every path between the pieces runs through `P1` or `P2`.
pub fn glued_distance(g: &GluedSpace, a: GluedPoint, b: GluedPoint) -> f64 {
    use GluedPoint::*;
    // position of P_i on the interval
    let anchor = |cap: usize| if cap == 0 { 0.0 } else { g.l };
    match (a, b) {
        (Interval { s }, Interval { s: t }) => (s - t).abs(),
        (Cap { cap: i, dist_to_pole: x }, Cap { cap: j, dist_to_pole: y }) if i == j => (x - y).abs(),
        (Cap { dist_to_pole: x, .. }, Cap { dist_to_pole: y, .. }) => x + g.l + y,
        (Cap { cap, dist_to_pole }, Interval { s }) | (Interval { s }, Cap { cap, dist_to_pole }) => {
            dist_to_pole + (anchor(cap) - s).abs()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> GluedSpace {
        GluedSpace::dumbbell_halves(2, 65, 0.5).unwrap()
    }

    #[test]
    fn poles_are_l_apart() {
        let g = space();
        assert_eq!(glued_distance(&g, g.p1(), g.p2()), 0.5);
        let p1 = GluedPoint::Cap { cap: 0, dist_to_pole: 0.0 };
        let p2 = GluedPoint::Cap { cap: 1, dist_to_pole: 0.0 };
        assert_eq!(glued_distance(&g, p1, p2), 0.5);
    }

    #[test]
    fn displayed_cases() {
        let g = space();
        let a = GluedPoint::Cap { cap: 0, dist_to_pole: 0.3 };
        assert!((glued_distance(&g, a, g.p2()) - 0.8).abs() < 1e-15);
        let b = GluedPoint::Cap { cap: 0, dist_to_pole: 0.1 };
        assert!((glued_distance(&g, b, GluedPoint::Interval { s: 0.3 }) - 0.4).abs() < 1e-15);
        let i1 = GluedPoint::Interval { s: 0.2 };
        let i2 = GluedPoint::Interval { s: 0.7 };
        assert!((glued_distance(&g, i1, i2) - 0.5).abs() < 1e-15);
        assert_eq!(glued_distance(&g, a, a), 0.0);
    }

    #[test]
    fn caps_are_oriented_toward_the_interval() {
        let g = space();
        assert_eq!(g.attachments, [CapAttachment::Upper, CapAttachment::Lower]);
        let d1 = g.dist_to_pole(0);
        assert!((d1[0] - PI / 2.0).abs() < 1e-12 && d1[64].abs() < 1e-15);
        let d2 = g.dist_to_pole(1);
        assert!(d2[0].abs() < 1e-15 && (d2[64] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_smooth_caps_and_negative_length() {
        let g = space();
        assert!(GluedSpace::new(g.cap1.clone(), g.cap2.clone(), -1.0).is_err());
        let round = crate::geometry::build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 65).unwrap();
        assert!(GluedSpace::new(round, g.cap2.clone(), 0.5).is_err());
    }
}
