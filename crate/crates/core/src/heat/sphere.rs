//! Averages over geodesic spheres of a rotationally symmetric metric.
//!
//! A geodesic sphere about a point at arclength `r0` is the orbit, under the
//! rotations of the fiber fixing that point, of a curve in the totally geodesic
//! meridian plane `dr^2 + psi(r)^2 dtheta^2`. The curve is traced by shooting
//! geodesics in every direction `omega` together with the Jacobi field `J` of
//! the direction variation; its points carry the area element
//! `(psi |sin theta|)^{n-1} |J| domega`. Directions are integrated with a
//! Gauss-Jacobi rule in `cos omega` for the weight `sin^{n-1} omega`.

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi};
use serde::{Deserialize, Serialize};

use crate::geometry::interp::{HermiteWeights, QuinticHermite};
use crate::geometry::{curvature, r_derivatives, EndKind, GridProfile, Parity, RadialDerivatives};

use super::HeatError;

const DIRECTIONS: usize = 24;

/// Averaging radius `r`, in units of `g(tau)`, and the backward time of the
/// metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub r: f64,
    pub tau: f64,
}

impl OperatorParams {
    /// Admissible radii on `p`: from the smallest radial cell to `r_max / 4`.
    pub fn bounds(p: &GridProfile) -> (f64, f64) {
        let r = p.arclength();
        let min_cell = r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        (min_cell, r[r.len() - 1] / 4.0)
    }

    pub fn check(&self, p: &GridProfile) -> Result<(), HeatError> {
        let (min, max) = Self::bounds(p);
        if self.r >= min && self.r <= max {
            return Ok(());
        }
        let hint = if self.r < min { "increase the grid resolution or decrease j*m" } else { "increase j*m" };
        Err(HeatError::RadiusOutOfRange { r: self.r, min, max, tau: self.tau, hint: hint.into() })
    }
}

/// The meridian `psi(r)`, continued oddly through smooth poles and evenly
/// through open ends.
struct Meridian {
    r: Vec<f64>,
    psi: QuinticHermite,
    k_rad: Vec<f64>,
    ends: [EndKind; 2],
}

struct Local {
    psi: f64,
    psi_r: f64,
    gauss: f64,
}

impl Meridian {
    fn new(p: &GridProfile) -> Result<Self, HeatError> {
        let d = RadialDerivatives::of(p);
        let psi = QuinticHermite::new(d.r.clone(), p.psi.clone(), d.psi_r, d.psi_rr);
        let k_rad = curvature(p)?.k_rad;
        Ok(Meridian { r: d.r, psi, k_rad, ends: p.ends })
    }

    fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    /// Maps `r` into `[0, r_max]`; returns the folded position and the signs
    /// picked up by `psi` and `psi_r`, or `None` next to a singular end.
    fn fold(&self, r: f64) -> Option<(f64, f64, f64)> {
        let last = self.r.len() - 1;
        let reflect = |end: EndKind, r_in: f64| match end {
            EndKind::SmoothPole => Some((r_in, -1.0, 1.0)),
            EndKind::Open => Some((r_in, 1.0, -1.0)),
            EndKind::Singular => None,
        };
        let folded = if r < 0.0 {
            reflect(self.ends[0], -r)?
        } else if r > self.r_max() {
            reflect(self.ends[1], 2.0 * self.r_max() - r)?
        } else {
            (r, 1.0, 1.0)
        };
        let r_in = folded.0.clamp(0.0, self.r_max());
        if (self.ends[0] == EndKind::Singular && r_in < self.r[1])
            || (self.ends[1] == EndKind::Singular && r_in > self.r[last - 1])
        {
            return None;
        }
        Some((r_in, folded.1, folded.2))
    }

    fn local(&self, r: f64) -> Option<Local> {
        let (r_in, s_psi, s_dpsi) = self.fold(r)?;
        let (psi, psi_r, psi_rr) = self.psi.eval(r_in);
        let last = self.r.len() - 1;
        let r_max = self.r_max();
        // near a smooth pole -psi_rr/psi is 0/0; use K = a + b d^2 through nodes 1, 2
        let poles = [
            (self.ends[0], r_in, [self.r[1], self.r[2]], [1, 2]),
            (self.ends[1], r_max - r_in, [r_max - self.r[last - 1], r_max - self.r[last - 2]], [last - 1, last - 2]),
        ];
        let near = poles.into_iter().find(|&(end, d, [_, d2], _)| end == EndKind::SmoothPole && d < d2);
        let gauss = match near {
            Some((_, d, [d1, d2], [i1, i2])) => {
                let b = (self.k_rad[i2] - self.k_rad[i1]) / (d2 * d2 - d1 * d1);
                self.k_rad[i1] + b * (d * d - d1 * d1)
            }
            None => -psi_rr / psi,
        };
        Some(Local { psi: s_psi * psi, psi_r: s_dpsi * psi_r, gauss })
    }
}

/// Geodesic state `(r, r', theta, J, J')`.
type State = [f64; 5];

fn rhs(m: &Meridian, c: f64, y: &State) -> Option<State> {
    let l = m.local(y[0])?;
    if l.psi == 0.0 && c != 0.0 {
        return None;
    }
    let (force, turn) = if c == 0.0 { (0.0, 0.0) } else { (c * c * l.psi_r / l.psi.powi(3), c / (l.psi * l.psi)) };
    Some([y[1], force, turn, y[4], -l.gauss * y[3]])
}

/// Endpoint of the unit-speed geodesic of length `s` leaving `r0` at angle
/// `omega` from `d/dr`.
fn shoot(m: &Meridian, r0: f64, psi0: f64, omega: f64, s: f64) -> Option<State> {
    let c = psi0 * omega.sin();
    let mut y: State = [r0, omega.cos(), 0.0, 0.0, 1.0];
    let mut done = 0.0;
    let add = |y: &State, k: &State, a: f64| -> State { std::array::from_fn(|i| y[i] + a * k[i]) };
    while done < s {
        // psi changes by at most ds per step; resolve the approach to a pole
        let psi = m.local(y[0])?.psi.abs();
        let mut ds = (s / 24.0).min(0.2 * psi);
        if c != 0.0 {
            ds = ds.min(0.05 * psi * psi / c.abs());
        }
        ds = ds.min(s - done).max(1e-9 * s);
        let k1 = rhs(m, c, &y)?;
        let k2 = rhs(m, c, &add(&y, &k1, 0.5 * ds))?;
        let k3 = rhs(m, c, &add(&y, &k2, 0.5 * ds))?;
        let k4 = rhs(m, c, &add(&y, &k3, ds))?;
        y = std::array::from_fn(|i| y[i] + ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        done += ds;
    }
    Some(y)
}

/// Sampled geodesic spheres of one radius about every node of a profile.
#[derive(Clone, Debug)]
pub struct GeodesicSpheres {
    pub radius: f64,
    profile: GridProfile,
    knots: Vec<f64>,
    /// Interpolation weights and normalized averaging weights per node.
    samples: Vec<Vec<(HermiteWeights, f64)>>,
    area_ratio: Vec<f64>,
}

impl GeodesicSpheres {
    pub fn new(p: &GridProfile, params: OperatorParams) -> Result<Self, HeatError> {
        Self::with_directions(p, params, DIRECTIONS)
    }

    pub fn with_directions(p: &GridProfile, params: OperatorParams, directions: usize) -> Result<Self, HeatError> {
        params.check(p)?;
        let directions = std::num::NonZeroUsize::new(directions)
            .ok_or_else(|| HeatError::InvalidInput("need at least one direction".into()))?;
        let s = params.r;
        let n = p.n as i32;
        let m = Meridian::new(p)?;
        let expo = FiniteAboveNegOneF64::new(0.5 * (p.n as f64 - 2.0)).expect("n >= 2");
        let rule = GaussJacobi::new(directions, expo, expo);
        let total_weight: f64 = rule.weights().sum();
        let last = p.len() - 1;

        let mut samples = Vec::with_capacity(p.len());
        let mut area_ratio = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            let end = match i {
                0 => Some(p.ends[0]),
                i if i == last => Some(p.ends[1]),
                _ => None,
            };
            match end {
                Some(EndKind::Singular) => {
                    samples.push(Vec::new());
                    area_ratio.push(0.0);
                }
                Some(EndKind::SmoothPole) => {
                    // the sphere is the fiber at distance s
                    let r = if i == 0 { s } else { m.r_max() - s };
                    let psi = m.psi.eval(r).0;
                    samples.push(vec![(QuinticHermite::weights(&m.r, r), 1.0)]);
                    area_ratio.push((psi / s).powi(n));
                }
                _ => {
                    let r0 = m.r[i];
                    let psi0 = p.psi[i];
                    let mut node = Vec::with_capacity(directions.get());
                    let mut area = 0.0;
                    for &(u, w) in rule.as_node_weight_pairs() {
                        let omega = u.acos();
                        let Some(y) = shoot(&m, r0, psi0, omega, s) else { continue };
                        let Some((r_in, _, _)) = m.fold(y[0]) else { continue };
                        let Some(l) = m.local(y[0]) else { continue };
                        let orbit = (l.psi * y[2].sin()).abs() / omega.sin();
                        let g = w * orbit.powi(n - 1) * y[3].abs();
                        area += g;
                        node.push((QuinticHermite::weights(&m.r, r_in), g));
                    }
                    if area > 0.0 {
                        for (_, g) in node.iter_mut() {
                            *g /= area;
                        }
                    }
                    samples.push(node);
                    area_ratio.push(area / (total_weight * s.powi(n)));
                }
            }
        }
        Ok(GeodesicSpheres { radius: s, profile: p.clone(), knots: m.r, samples, area_ratio })
    }

    /// `area(dB(x, r)) / area(dB(0, r) in R^{n+1})` per node; 0 where the
    /// sphere has zero area.
    pub fn area_ratio(&self) -> &[f64] {
        &self.area_ratio
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Sphere averages of the fiber-constant function with node values `f`.
    pub fn sigma(&self, f: &[f64]) -> Vec<f64> {
        let (f_r, f_rr) = r_derivatives(&self.profile, f, Parity::Even);
        self.samples
            .iter()
            .zip(&self.area_ratio)
            .map(|(node, &ratio)| {
                if ratio == 0.0 {
                    return 0.0;
                }
                node.iter().map(|(hw, g)| g * hw.apply(f, &f_r, &f_rr)).sum()
            })
            .collect()
    }

    pub fn theta(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.area_ratio).map(|(f, a)| a * f).collect()
    }

    /// `A = sigma / 4 + 3 theta / 4`.
    pub fn a(&self, f: &[f64]) -> Vec<f64> {
        let s = self.sigma(f);
        let t = self.theta(f);
        s.iter().zip(&t).map(|(s, t)| 0.25 * s + 0.75 * t).collect()
    }
}

pub fn sigma_avg(p: &GridProfile, f: &[f64], params: OperatorParams) -> Result<Vec<f64>, HeatError> {
    Ok(GeodesicSpheres::new(p, params)?.sigma(f))
}

pub fn theta_scale(p: &GridProfile, f: &[f64], params: OperatorParams) -> Result<Vec<f64>, HeatError> {
    Ok(GeodesicSpheres::new(p, params)?.theta(f))
}

pub fn a_step(p: &GridProfile, f: &[f64], params: OperatorParams) -> Result<Vec<f64>, HeatError> {
    Ok(GeodesicSpheres::new(p, params)?.a(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, radial_laplacian, GluedSpace, ProfileKind};

    fn round(nodes: usize) -> GridProfile {
        build_profile(&ProfileKind::Round { rho: 1.0 }, 2, nodes).unwrap()
    }

    fn dumbbell(nodes: usize) -> GridProfile {
        build_profile(&ProfileKind::Dumbbell { a: 0.6 }, 2, nodes).unwrap()
    }

    fn spheres(p: &GridProfile, r: f64) -> GeodesicSpheres {
        GeodesicSpheres::new(p, OperatorParams { r, tau: 0.0 }).unwrap()
    }

    /// Richardson limit of `coef(s)` from `s` and `s / 2`, for an `O(s^2)` error.
    fn richardson(coef: impl Fn(f64) -> Vec<f64>, s: f64) -> Vec<f64> {
        let a = coef(s);
        let b = coef(s / 2.0);
        a.iter().zip(&b).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
    }

    fn rel_err(got: &[f64], want: &[f64], nodes: impl Iterator<Item = usize>) -> f64 {
        let scale = want.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        nodes.map(|i| (got[i] - want[i]).abs()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn constants_average_to_themselves() {
        for p in [round(129), dumbbell(129)] {
            let s = spheres(&p, 0.2);
            for v in s.sigma(&vec![1.0; p.len()]) {
                assert!((v - 1.0).abs() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn pole_average_of_the_distance_cosine_is_exact() {
        let p = round(257);
        let f: Vec<f64> = p.arclength().iter().map(|r| r.cos()).collect();
        for s in [0.1, 0.3, 0.6] {
            let sig = spheres(&p, s).sigma(&f);
            assert!((sig[0] - s.cos()).abs() < 1e-9, "{} vs {}", sig[0], s.cos());
        }
    }

    #[test]
    fn round_area_ratio_is_exact() {
        let p = round(257);
        for s in [0.05, 0.2, 0.5] {
            let sp = spheres(&p, s);
            let exact = (s.sin() / s).powi(2);
            for (i, a) in sp.area_ratio().iter().enumerate() {
                assert!((a - exact).abs() < 1e-5, "s = {s}, node {i}: {a} vs {exact}");
            }
        }
    }

    #[test]
    fn sigma_expansion_gives_the_laplacian() {
        for p in [round(257), dumbbell(257)] {
            let d = p.dim() as f64;
            let r = p.arclength();
            let r_max = r[r.len() - 1];
            // psi is only Lipschitz at the poles, so it is tested on balls that avoid them
            let away: Vec<usize> = (0..p.len()).filter(|&i| r[i] > 0.1 && r[i] < r_max - 0.1).collect();
            let all: Vec<usize> = (0..p.len()).collect();
            for (f, nodes) in [(r.iter().map(|r| r.cos()).collect::<Vec<_>>(), &all), (p.psi.clone(), &away)] {
                let lap = radial_laplacian(&p, &f).unwrap();
                let coef = |s: f64| -> Vec<f64> {
                    let sig = spheres(&p, s).sigma(&f);
                    sig.iter().zip(&f).map(|(a, b)| (a - b) * 2.0 * d / (s * s)).collect()
                };
                let est = richardson(coef, 0.05);
                let want: Vec<f64> = nodes.iter().map(|&i| lap[i]).collect();
                let got: Vec<f64> = nodes.iter().map(|&i| est[i]).collect();
                let e = rel_err(&got, &want, 0..want.len());
                assert!(e < 0.05, "relative error {e}");
            }
        }
    }

    #[test]
    fn area_ratio_expansion_gives_the_scalar_curvature() {
        for p in [round(257), dumbbell(257)] {
            let d = p.dim() as f64;
            let scalar = curvature(&p).unwrap().scalar;
            let coef = |s: f64| -> Vec<f64> {
                spheres(&p, s).area_ratio().iter().map(|a| (1.0 - a) * 6.0 * d / (s * s)).collect()
            };
            let est = richardson(coef, 0.1);
            let e = rel_err(&est, &scalar, 0..p.len());
            assert!(e < 0.05, "relative error {e}");
        }
    }

    #[test]
    fn a_expansion_gives_the_conjugate_operator() {
        let p = round(257);
        let d = p.dim() as f64;
        let f: Vec<f64> = p.arclength().iter().map(|r| r.cos()).collect();
        let lap = radial_laplacian(&p, &f).unwrap();
        let scalar = curvature(&p).unwrap().scalar;
        let want: Vec<f64> = (0..p.len()).map(|i| lap[i] - scalar[i] * f[i]).collect();
        let coef = |s: f64| -> Vec<f64> {
            let a = spheres(&p, s).a(&f);
            a.iter().zip(&f).map(|(a, b)| (a - b) * 8.0 * d / (s * s)).collect()
        };
        let est = richardson(coef, 0.05);
        assert!(rel_err(&est, &want, 0..p.len()) < 0.05);
    }

    #[test]
    fn a_is_the_stated_combination() {
        let p = dumbbell(129);
        let sp = spheres(&p, 0.15);
        let f: Vec<f64> = (0..p.len()).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let (s, t, a) = (sp.sigma(&f), sp.theta(&f), sp.a(&f));
        for i in 0..p.len() {
            assert!((a[i] - (0.25 * s[i] + 0.75 * t[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_points_have_zero_area() {
        let g = GluedSpace::dumbbell_halves(2, 129, 0.2).unwrap();
        let p = &g.cap1;
        let sp = spheres(p, 0.1);
        let last = p.len() - 1;
        assert_eq!(sp.area_ratio()[last], 0.0);
        let f = vec![1.0; p.len()];
        assert_eq!(sp.a(&f)[last], 0.0);
        assert!(sp.area_ratio()[last / 2] > 0.0);
    }

    #[test]
    fn radius_bounds_are_enforced() {
        let p = round(65);
        let (min, max) = OperatorParams::bounds(&p);
        assert!(OperatorParams { r: 0.5 * min, tau: 0.0 }.check(&p).is_err());
        assert!(OperatorParams { r: 1.01 * max, tau: 0.0 }.check(&p).is_err());
        assert!(OperatorParams { r: 0.5 * (min + max), tau: 0.0 }.check(&p).is_ok());
    }
}
