//! Discrete warped products `R x_f S^1` and the radial-transport check.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::oracle::{discrete_ot_oracle, DiscretePlan, MAX_ATOMS};
use super::TransportError;

/// Nodes `(t_k, 2 pi l / L)` with graph distances of the line element
/// `dt^2 + f(t)^2 dp^2` on the 8-neighbour graph.
#[derive(Clone, Debug)]
pub struct WarpedGridSpace {
    pub t: Vec<f64>,
    pub fiber: usize,
    pub warp: Vec<f64>,
    dist: Vec<f64>,
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl WarpedGridSpace {
    pub fn new(t: Vec<f64>, fiber: usize, warp: Vec<f64>) -> Result<Self, TransportError> {
        if t.len() < 2 || fiber < 3 || warp.len() != t.len() {
            return Err(TransportError::InvalidMeasure(format!(
                "warped grid needs >= 2 radial nodes, >= 3 fiber nodes and one warp value per radial node \
                 (got {}, {}, {})",
                t.len(),
                fiber,
                warp.len()
            )));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || warp.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(TransportError::InvalidMeasure(
                "radial grid must increase and the warp must be positive".into(),
            ));
        }
        let mut w = WarpedGridSpace { t, fiber, warp, dist: Vec::new() };
        w.dist = w.all_distances();
        Ok(w)
    }

    /// Uniform radial grid on `[t_min, t_max]` with warp `f`.
    pub fn from_fn(
        t_min: f64,
        t_max: f64,
        radial: usize,
        fiber: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, TransportError> {
        if radial < 2 {
            return Err(TransportError::InvalidMeasure("need >= 2 radial nodes".into()));
        }
        let t: Vec<f64> = (0..radial).map(|k| t_min + (t_max - t_min) * k as f64 / (radial - 1) as f64).collect();
        let warp = t.iter().map(|&t| f(t)).collect();
        Self::new(t, fiber, warp)
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.fiber
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, k: usize, l: usize) -> usize {
        k * self.fiber + l % self.fiber
    }

    /// `(radial index, fiber index)` of a node.
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i / self.fiber, i % self.fiber)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (k, l) = self.coords(i);
        let dp = 2.0 * PI / self.fiber as f64;
        let radial = self.t.len() as isize;
        (-1isize..=1).flat_map(move |dk| {
            (-1isize..=1).filter_map(move |dl| {
                let k2 = k as isize + dk;
                if (dk == 0 && dl == 0) || k2 < 0 || k2 >= radial {
                    return None;
                }
                let k2 = k2 as usize;
                let l2 = (l as isize + dl).rem_euclid(self.fiber as isize) as usize;
                let dt = self.t[k2] - self.t[k];
                let f = 0.5 * (self.warp[k] + self.warp[k2]);
                Some((self.node(k2, l2), (dt * dt + (f * dl as f64 * dp).powi(2)).sqrt()))
            })
        })
    }

    fn distances_from(&self, s: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::from([Item(0.0, s)]);
        dist[s] = 0.0;
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (v, w) in self.neighbours(u) {
                if d + w < dist[v] {
                    dist[v] = d + w;
                    heap.push(Item(d + w, v));
                }
            }
        }
        dist
    }

    fn all_distances(&self) -> Vec<f64> {
        let n = self.len();
        let workers = crate::worker_count().min(n).max(1);
        let chunk = n.div_ceil(workers);
        let mut table = vec![0.0; n * n];
        std::thread::scope(|scope| {
            for (c, rows) in table.chunks_mut(chunk * n).enumerate() {
                scope.spawn(move || {
                    for (r, row) in rows.chunks_mut(n).enumerate() {
                        row.copy_from_slice(&self.distances_from(c * chunk + r));
                    }
                });
            }
        });
        table
    }

    /// Unit mass spread evenly over the nodes with `t` in `[lo, hi]`.
    pub fn slab_measure(&self, lo: f64, hi: f64) -> Result<Vec<f64>, TransportError> {
        let inside: Vec<bool> = (0..self.len()).map(|i| (lo..=hi).contains(&self.t[self.coords(i).0])).collect();
        let count = inside.iter().filter(|b| **b).count();
        if count == 0 {
            return Err(TransportError::InvalidMeasure(format!("no radial node in [{lo}, {hi}]")));
        }
        Ok(inside.iter().map(|&b| if b { 1.0 / count as f64 } else { 0.0 }).collect())
    }

    /// `mu` rotated by `shift` fiber nodes.
    pub fn rotated(&self, mu: &[f64], shift: usize) -> Vec<f64> {
        let mut out = vec![0.0; mu.len()];
        for (i, m) in mu.iter().enumerate() {
            let (k, l) = self.coords(i);
            out[self.node(k, l + shift)] = *m;
        }
        out
    }

    /// Whether every fiber carries constant mass.
    pub fn is_axially_symmetric(&self, mu: &[f64]) -> bool {
        (0..self.t.len()).all(|k| {
            let first = mu[self.node(k, 0)];
            (1..self.fiber).all(|l| (mu[self.node(k, l)] - first).abs() <= 1e-12 * first.abs().max(1e-300))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadialCheckOptions {
    /// Exponent of the distance in the cost.
    pub p: u32,
    /// Allowed non-radial plan mass.
    pub eps_grid: f64,
}

impl Default for RadialCheckOptions {
    fn default() -> Self {
        RadialCheckOptions { p: 2, eps_grid: 0.05 }
    }
}

#[derive(Clone, Debug)]
pub struct RadialReport {
    /// Plan mass on pairs with equal fiber coordinate.
    pub radial_fraction: f64,
    /// Both measures are axially symmetric.
    pub applicable: bool,
    pub pass: bool,
    pub cost: f64,
    /// Plan over the support indices in `support_a`, `support_b`.
    pub plan: DiscretePlan,
    pub support_a: Vec<usize>,
    pub support_b: Vec<usize>,
}

/// Solves the discrete transport problem between node measures `mu0`, `mu1`
/// with cost `d^p` and measures how much mass moves along radial lines.
pub fn radial_transport_check(
    w: &WarpedGridSpace,
    mu0: &[f64],
    mu1: &[f64],
    opts: &RadialCheckOptions,
) -> Result<RadialReport, TransportError> {
    if mu0.len() != w.len() || mu1.len() != w.len() {
        return Err(TransportError::InvalidMeasure(format!("measures need {} node masses", w.len())));
    }
    let support = |mu: &[f64]| -> Vec<usize> { (0..mu.len()).filter(|&i| mu[i] > 0.0).collect() };
    let (sa, sb) = (support(mu0), support(mu1));
    if sa.len() > MAX_ATOMS || sb.len() > MAX_ATOMS {
        return Err(TransportError::InvalidMeasure(format!(
            "supports of {} and {} nodes exceed the oracle limit {MAX_ATOMS}",
            sa.len(),
            sb.len()
        )));
    }
    let a: Vec<f64> = sa.iter().map(|&i| mu0[i]).collect();
    let b: Vec<f64> = sb.iter().map(|&j| mu1[j]).collect();
    let cost: Vec<Vec<f64>> = sa.iter().map(|&i| sb.iter().map(|&j| w.distance(i, j)).collect()).collect();
    let plan = discrete_ot_oracle(&a, &b, &cost, opts.p)?;
    let total: f64 = plan.pairs.iter().map(|p| p.2).sum();
    let radial: f64 = plan.pairs.iter().filter(|&&(i, j, _)| w.coords(sa[i]).1 == w.coords(sb[j]).1).map(|p| p.2).sum();
    let radial_fraction = radial / total;
    let applicable = w.is_axially_symmetric(mu0) && w.is_axially_symmetric(mu1);
    let pass = applicable && radial_fraction >= 1.0 - opts.eps_grid;
    Ok(RadialReport { radial_fraction, applicable, pass, cost: plan.cost, plan, support_a: sa, support_b: sb })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_form_a_metric() {
        let w = WarpedGridSpace::from_fn(-1.0, 1.0, 9, 8, |t| 1.0 + 0.3 * t * t).unwrap();
        let n = w.len();
        for i in 0..n {
            assert_eq!(w.distance(i, i), 0.0);
            for j in 0..n {
                assert!((w.distance(i, j) - w.distance(j, i)).abs() < 1e-12);
                for k in (0..n).step_by(7) {
                    assert!(w.distance(i, j) <= w.distance(i, k) + w.distance(k, j) + 1e-12);
                }
            }
        }
        // straight radial lines are exact
        assert!((w.distance(w.node(0, 3), w.node(8, 3)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn same_slab_is_the_identity() {
        let w = WarpedGridSpace::from_fn(-1.5, 1.5, 16, 8, |_| 1.0).unwrap();
        let mu = w.slab_measure(-1.1, -0.9).unwrap();
        let rep = radial_transport_check(&w, &mu, &mu, &RadialCheckOptions::default()).unwrap();
        assert_eq!(rep.radial_fraction, 1.0);
        assert!(rep.cost.abs() < 1e-15 && rep.pass);
    }

    #[test]
    fn opposite_slabs_move_radially() {
        let w = WarpedGridSpace::from_fn(-1.0, 1.0, 16, 8, |_| 1.0).unwrap();
        let mu0 = w.slab_measure(-1.0, -1.0).unwrap();
        let mu1 = w.slab_measure(1.0, 1.0).unwrap();
        let rep = radial_transport_check(&w, &mu0, &mu1, &RadialCheckOptions::default()).unwrap();
        assert!(rep.applicable && rep.radial_fraction >= 0.95, "{}", rep.radial_fraction);
    }

    #[test]
    fn rotated_blob_is_flagged() {
        let w = WarpedGridSpace::from_fn(-1.0, 1.0, 16, 8, |_| 1.0).unwrap();
        let mut mu0 = vec![0.0; w.len()];
        mu0[w.node(0, 2)] = 0.5;
        mu0[w.node(0, 3)] = 0.5;
        let moved = w.rotated(&mu0, 1);
        let mut mu1 = vec![0.0; w.len()];
        for l in 0..w.fiber {
            mu1[w.node(15, l)] = moved[w.node(0, l)];
        }
        let rep = radial_transport_check(&w, &mu0, &mu1, &RadialCheckOptions::default()).unwrap();
        assert!(!rep.applicable && !rep.pass);
        assert!(rep.radial_fraction < 1.0);
    }
}
