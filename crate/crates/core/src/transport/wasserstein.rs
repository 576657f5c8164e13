//! Wasserstein distances on the line and the comonotone coupling.

use gauss_quad::GaussLegendre;

use super::line::LineMeasure;
use super::TransportError;

const W1_AGREEMENT: f64 = 1e-8;
const GAUSS_POINTS: usize = 16;
const ADAPTIVE_TOL: f64 = 1e-14;
const MAX_DEPTH: u32 = 30;

/// Coupling given as a list of `(x, y, mass)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransportPlan {
    pub pairs: Vec<(f64, f64, f64)>,
}

impl TransportPlan {
    /// `sum mass |x - y|^p`.
    pub fn cost(&self, p: u32) -> f64 {
        self.pairs.iter().map(|&(x, y, m)| m * (x - y).abs().powi(p as i32)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).sum()
    }

    /// First marginal as atoms, merged by position.
    pub fn marginal_x(&self) -> Vec<(f64, f64)> {
        merge(self.pairs.iter().map(|p| (p.0, p.2)))
    }

    pub fn marginal_y(&self) -> Vec<(f64, f64)> {
        merge(self.pairs.iter().map(|p| (p.1, p.2)))
    }

    /// `H(x, y) = pi((-inf, x] x (-inf, y])`.
    pub fn joint_cdf(&self, x: f64, y: f64) -> f64 {
        self.pairs.iter().filter(|p| p.0 <= x && p.1 <= y).map(|p| p.2).sum()
    }

    /// Largest violation of `max(F + G - 1, 0) <= H <= min(F, G)` over the
    /// product of the given evaluation points.
    pub fn frechet_violation(&self, mu: &LineMeasure, nu: &LineMeasure, xs: &[f64], ys: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &x in xs {
            let f = mu.cdf(x);
            for &y in ys {
                let g = nu.cdf(y);
                let h = self.joint_cdf(x, y);
                worst = worst.max((f + g - 1.0).max(0.0) - h).max(h - f.min(g));
            }
        }
        worst
    }
}

fn merge(points: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = points.collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (x, m) in v {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += m,
            _ => out.push((x, m)),
        }
    }
    out
}

/// Sorted breakpoints in `t` of both quantile functions.
fn t_pieces(mu: &LineMeasure, nu: &LineMeasure) -> Vec<(f64, f64)> {
    let mut t: Vec<f64> = mu.t_breaks().chain(nu.t_breaks()).map(|v| v.clamp(0.0, 1.0)).chain([0.0, 1.0]).collect();
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    t.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect()
}

/// Nodes and weights on `[a, b]` after the substitution `t = a + (b - a)
/// (3 s^2 - 2 s^3)`, which smooths square-root behaviour at both ends.
fn smooth_rule(rule: &GaussLegendre, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    rule.as_node_weight_pairs().iter().map(move |&(x, w)| {
        let s = 0.5 * (x + 1.0);
        let t = a + (b - a) * s * s * (3.0 - 2.0 * s);
        (t, 0.5 * w * (b - a) * 6.0 * s * (1.0 - s))
    })
}

fn legendre() -> GaussLegendre {
    GaussLegendre::new(GAUSS_POINTS.try_into().expect("nonzero"))
}

/// Bisects until the two halves reproduce the whole to rounding level.
fn adaptive(rule: &GaussLegendre, f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = smooth_rule(rule, a, m).map(|(t, w)| w * f(t)).sum::<f64>();
    let right = smooth_rule(rule, m, b).map(|(t, w)| w * f(t)).sum::<f64>();
    let halves = left + right;
    if depth >= MAX_DEPTH || (halves - whole).abs() <= ADAPTIVE_TOL * (1.0 + halves.abs()) {
        halves
    } else {
        adaptive(rule, f, a, m, left, depth + 1) + adaptive(rule, f, m, b, right, depth + 1)
    }
}

/// `int_0^1 |F^{-1} - G^{-1}|^p dt`, integrating piece by piece between the
/// breakpoints of both quantile functions and splitting at sign changes.
fn quantile_integral(mu: &LineMeasure, nu: &LineMeasure, p: u32) -> f64 {
    let rule = legendre();
    let diff = |t: f64| mu.quantile(t) - nu.quantile(t);
    let mut total = 0.0;
    for (a, b) in t_pieces(mu, nu) {
        let mut cuts = vec![a];
        if p == 1 {
            // split where the two quantiles cross
            let samples = 32;
            let mut prev = (a, diff(a + (b - a) * 1e-12));
            for k in 1..=samples {
                let t = if k == samples { b - (b - a) * 1e-12 } else { a + (b - a) * k as f64 / samples as f64 };
                let cur = (t, diff(t));
                if cur.1 == 0.0 && k < samples {
                    cuts.push(t);
                } else if prev.1 * cur.1 < 0.0 {
                    let (mut lo, mut hi) = (prev.0, cur.0);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if diff(mid) * prev.1 > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    cuts.push(0.5 * (lo + hi));
                }
                prev = cur;
            }
        }
        cuts.push(b);
        let integrand = |t: f64| diff(t).abs().powi(p as i32);
        for w in cuts.windows(2) {
            let whole = smooth_rule(&rule, w[0], w[1]).map(|(t, wt)| wt * integrand(t)).sum::<f64>();
            total += adaptive(&rule, &integrand, w[0], w[1], whole, 0);
        }
    }
    total
}

/// `int |F - G| dx`, exact: on each piece `F - G` is a quadratic in `x`.
pub fn w1_area(mu: &LineMeasure, nu: &LineMeasure) -> f64 {
    let mut xs: Vec<f64> = mu.knots().iter().chain(nu.knots()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let (f, df, sf) = mu.local_poly(x0);
        let (g, dg, sg) = nu.local_poly(x0);
        // D(s) = c0 + c1 s + c2 s^2 on [0, h]
        let (c0, c1, c2) = (f - g, df - dg, 0.5 * (sf - sg));
        let h = x1 - x0;
        let mut roots = vec![0.0, h];
        if c2 != 0.0 {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc > 0.0 {
                let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
                for r in [q / c2, if q != 0.0 { c0 / q } else { f64::NAN }] {
                    if r > 0.0 && r < h {
                        roots.push(r);
                    }
                }
            }
        } else if c1 != 0.0 {
            let r = -c0 / c1;
            if r > 0.0 && r < h {
                roots.push(r);
            }
        }
        roots.sort_by(f64::total_cmp);
        let anti = |s: f64| s * (c0 + s * (0.5 * c1 + s * c2 / 3.0));
        for r in roots.windows(2) {
            total += (anti(r[1]) - anti(r[0])).abs();
        }
    }
    total
}

/// `W_p(mu, nu)` for `p` in `{1, 2}` from the quantile formula. For `p = 1`
/// the area formula is evaluated as well and the two must agree.
pub fn wasserstein_p(mu: &LineMeasure, nu: &LineMeasure, p: u32) -> Result<f64, TransportError> {
    match p {
        1 => {
            let q = quantile_integral(mu, nu, 1);
            let a = w1_area(mu, nu);
            if (q - a).abs() > W1_AGREEMENT * a.max(1.0) {
                return Err(TransportError::Inconsistent { quantile: q, area: a });
            }
            Ok(q)
        }
        2 => Ok(quantile_integral(mu, nu, 2).sqrt()),
        _ => Err(TransportError::UnsupportedExponent(p)),
    }
}

/// The comonotone coupling `H(x, y) = min(F(x), G(y))`. Exact for atoms;
/// continuous parts are discretized with Gauss nodes in `t`.
pub fn hoeffding_frechet_plan(mu: &LineMeasure, nu: &LineMeasure) -> TransportPlan {
    let rule = legendre();
    let mut pairs = Vec::new();
    for (a, b) in t_pieces(mu, nu) {
        let mid = 0.5 * (a + b);
        let (x0, x1) = (mu.quantile(a + 1e-12 * (b - a)), mu.quantile(b - 1e-12 * (b - a)));
        let (y0, y1) = (nu.quantile(a + 1e-12 * (b - a)), nu.quantile(b - 1e-12 * (b - a)));
        if x0 == x1 && y0 == y1 {
            pairs.push((mu.quantile(mid), nu.quantile(mid), b - a));
        } else {
            pairs.extend(smooth_rule(&rule, a, b).map(|(t, w)| (mu.quantile(t), nu.quantile(t), w)));
        }
    }
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(pairs.len());
    for p in pairs {
        match merged.last_mut() {
            Some(last) if last.0 == p.0 && last.1 == p.1 => last.2 += p.2,
            _ => merged.push(p),
        }
    }
    TransportPlan { pairs: merged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(v: &[(f64, f64)]) -> LineMeasure {
        LineMeasure::from_atoms(v.to_vec()).unwrap()
    }

    #[test]
    fn diracs_are_their_distance_apart() {
        let (a, b) = (atoms(&[(0.3, 1.0)]), atoms(&[(-1.2, 1.0)]));
        for p in [1, 2] {
            assert!((wasserstein_p(&a, &b, p).unwrap() - 1.5).abs() < 1e-14);
        }
        let plan = hoeffding_frechet_plan(&a, &b);
        assert_eq!(plan.pairs, vec![(0.3, -1.2, 1.0)]);
    }

    #[test]
    fn translated_uniforms_are_the_shift_apart() {
        let u = LineMeasure::from_density(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let c = 0.37;
        let v = u.shifted(c);
        for p in [1, 2] {
            assert!((wasserstein_p(&u, &v, p).unwrap() - c).abs() < 1e-12);
        }
        assert!((w1_area(&u, &v) - c).abs() < 1e-14);
    }

    #[test]
    fn area_formula_handles_crossing_cdfs() {
        // uniform on [0, 1] vs uniform on [0.25, 0.75]: F - G changes sign at 0.5
        let u = LineMeasure::from_density(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let v = LineMeasure::from_density(vec![0.25, 0.75], vec![2.0, 2.0]).unwrap();
        assert!((w1_area(&u, &v) - 0.125).abs() < 1e-14);
        assert!((wasserstein_p(&u, &v, 1).unwrap() - 0.125).abs() < 1e-12);
        // W2^2 = int_0^1 (t - (0.25 + t/2))^2 dt = 1/48
        assert!((wasserstein_p(&u, &v, 2).unwrap() - (1.0f64 / 48.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn comonotone_plan_has_the_right_marginals_and_cost() {
        let a = atoms(&[(0.0, 0.2), (1.0, 0.5), (3.0, 0.3)]);
        let b = atoms(&[(-1.0, 0.6), (2.0, 0.4)]);
        let plan = hoeffding_frechet_plan(&a, &b);
        for (got, want) in plan.marginal_x().iter().zip(a.atoms()) {
            assert!((got.0 - want.0).abs() < 1e-15 && (got.1 - want.1).abs() < 1e-12);
        }
        for (got, want) in plan.marginal_y().iter().zip(b.atoms()) {
            assert!((got.0 - want.0).abs() < 1e-15 && (got.1 - want.1).abs() < 1e-12);
        }
        for p in [1, 2] {
            let w = wasserstein_p(&a, &b, p).unwrap().powi(p as i32);
            assert!((plan.cost(p) - w).abs() < 1e-12);
        }
        let grid = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0, 4.0];
        assert!(plan.frechet_violation(&a, &b, &grid, &grid) < 1e-12);
    }

    #[test]
    fn only_p_one_and_two() {
        let a = atoms(&[(0.0, 1.0)]);
        assert!(matches!(wasserstein_p(&a, &a, 3), Err(TransportError::UnsupportedExponent(3))));
    }
}
