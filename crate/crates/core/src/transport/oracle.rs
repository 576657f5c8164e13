//! Exact discrete optimal transport by successive shortest paths on the
//! integer-scaled transportation network.

use std::collections::VecDeque;

use super::TransportError;

pub const MAX_ATOMS: usize = 64;
const MASS_TOL: f64 = 1e-9;

/// Plan as `(i, j, mass)` over atom indices, with its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePlan {
    pub pairs: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

impl DiscretePlan {
    pub fn marginals(&self, na: usize, nb: usize) -> (Vec<f64>, Vec<f64>) {
        let mut a = vec![0.0; na];
        let mut b = vec![0.0; nb];
        for &(i, j, m) in &self.pairs {
            a[i] += m;
            b[j] += m;
        }
        (a, b)
    }
}

/// Best rational approximation `p / q` with `q <= max_den`, if within `tol`.
fn rational(x: f64, max_den: u64, tol: f64) -> Option<u64> {
    let (mut h0, mut h1, mut k0, mut k1) = (0u64, 1u64, 1u64, 0u64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        let a_int = a as u64;
        let (h2, k2) = (a_int.checked_mul(h1)?.checked_add(h0)?, a_int.checked_mul(k1)?.checked_add(k0)?);
        if k2 > max_den {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol {
            return Some(k2);
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = v - a;
        if frac < 1e-15 {
            return None;
        }
        v = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Common denominator of all masses when they are rational with small
/// denominators; otherwise a fixed binary scale.
fn scale_for(masses: &[f64]) -> u64 {
    let mut l: u64 = 1;
    for &m in masses {
        match rational(m, 1_000_000, 1e-13) {
            Some(q) => match (l / gcd(l, q)).checked_mul(q) {
                Some(v) if v <= 1 << 40 => l = v,
                _ => return 1 << 40,
            },
            None => return 1 << 40,
        }
    }
    l
}

fn to_integers(masses: &[f64], scale: u64, total: i64) -> Vec<i64> {
    let mut v: Vec<i64> = masses.iter().map(|m| (m * scale as f64).round() as i64).collect();
    let diff = total - v.iter().sum::<i64>();
    if diff != 0 {
        let k = (0..v.len()).max_by_key(|&i| v[i]).expect("nonempty");
        v[k] += diff;
    }
    v
}

struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

struct Network {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network { edges: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0, cost: -cost });
    }

    /// Shortest path tree from `s` in the residual graph (label-correcting).
    fn shortest(&self, s: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut via = vec![None; n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::from([s]);
        dist[s] = 0.0;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if edge.cap <= 0 {
                    continue;
                }
                let d = dist[u] + edge.cost;
                if d < dist[edge.to] - 1e-12 * (1.0 + d.abs()) {
                    dist[edge.to] = d;
                    via[edge.to] = Some(e);
                    if !queued[edge.to] {
                        queued[edge.to] = true;
                        queue.push_back(edge.to);
                    }
                }
            }
        }
        (dist, via)
    }
}

/// Minimum of `sum pi_ij cost_ij^p` over couplings of the atom masses `a`
/// and `b`.
pub fn discrete_ot_oracle(a: &[f64], b: &[f64], cost: &[Vec<f64>], p: u32) -> Result<DiscretePlan, TransportError> {
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 || na > MAX_ATOMS || nb > MAX_ATOMS {
        return Err(TransportError::InvalidMeasure(format!(
            "oracle takes 1 to {MAX_ATOMS} atoms per side, got {na} and {nb}"
        )));
    }
    if cost.len() != na || cost.iter().any(|row| row.len() != nb) {
        return Err(TransportError::InvalidMeasure(format!("cost table must be {na} x {nb}")));
    }
    if a.iter().chain(b).any(|m| !(*m >= 0.0 && m.is_finite())) {
        return Err(TransportError::InvalidMeasure("atom masses must be finite and nonnegative".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > MASS_TOL * sa.max(sb).max(1.0) {
        return Err(TransportError::Infeasible { mass_a: sa, mass_b: sb });
    }
    let scale = scale_for(&a.iter().chain(b).map(|m| m / sa).collect::<Vec<_>>());
    let total = scale as i64;
    let ia = to_integers(&a.iter().map(|m| m / sa).collect::<Vec<_>>(), scale, total);
    let ib = to_integers(&b.iter().map(|m| m / sb).collect::<Vec<_>>(), scale, total);

    let (source, sink) = (0, na + nb + 1);
    let mut net = Network::new(na + nb + 2);
    for i in 0..na {
        net.add(source, 1 + i, ia[i], 0.0);
    }
    for j in 0..nb {
        net.add(1 + na + j, sink, ib[j], 0.0);
    }
    let first_pair = net.edges.len();
    for i in 0..na {
        for j in 0..nb {
            net.add(1 + i, 1 + na + j, total, cost[i][j].powi(p as i32));
        }
    }

    let mut sent = 0;
    while sent < total {
        let (dist, via) = net.shortest(source);
        if !dist[sink].is_finite() {
            return Err(TransportError::Infeasible { mass_a: sa, mass_b: sb });
        }
        let mut push = total - sent;
        let mut v = sink;
        while let Some(e) = via[v] {
            push = push.min(net.edges[e].cap);
            v = net.edges[e ^ 1].to;
        }
        let mut v = sink;
        while let Some(e) = via[v] {
            net.edges[e].cap -= push;
            net.edges[e ^ 1].cap += push;
            v = net.edges[e ^ 1].to;
        }
        sent += push;
    }

    let mut pairs = Vec::new();
    let mut value = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let e = first_pair + 2 * (i * nb + j);
            let flow = net.edges[e ^ 1].cap;
            if flow > 0 {
                let m = flow as f64 / scale as f64 * sa;
                pairs.push((i, j, m));
                value += m * cost[i][j].powi(p as i32);
            }
        }
    }
    Ok(DiscretePlan { pairs, cost: value })
}

/// Cost of the best bijection between equal-mass atom sets, by enumerating
/// all permutations (for cross-checking the oracle on `<= 8` atoms).
pub fn permutation_oracle(cost: &[Vec<f64>], p: u32) -> f64 {
    let n = cost.len();
    assert!(n <= 8 && cost.iter().all(|r| r.len() == n), "enumeration needs a square table of size <= 8");
    fn search(cost: &[Vec<f64>], p: u32, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                search(cost, p, row + 1, used, acc + cost[row][j].powi(p as i32), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    search(cost, p, 0, &mut vec![false; n], 0.0, &mut best);
    best / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_cost(x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
        x.iter().map(|a| y.iter().map(|b| (a - b).abs()).collect()).collect()
    }

    #[test]
    fn identical_sets_cost_nothing() {
        let x = [0.0, 1.0, 2.5];
        let plan = discrete_ot_oracle(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5], &line_cost(&x, &x), 1).unwrap();
        assert_eq!(plan.cost, 0.0);
        for &(i, j, _) in &plan.pairs {
            assert_eq!(i, j);
        }
    }

    #[test]
    fn two_by_two_tie_costs_two() {
        let plan = discrete_ot_oracle(&[0.5, 0.5], &[0.5, 0.5], &line_cost(&[0.0, 1.0], &[2.0, 3.0]), 1).unwrap();
        assert!((plan.cost - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unequal_mass_is_infeasible() {
        let c = line_cost(&[0.0], &[1.0, 2.0]);
        assert!(matches!(discrete_ot_oracle(&[1.0], &[0.5, 0.6], &c, 1), Err(TransportError::Infeasible { .. })));
    }

    #[test]
    fn matches_enumeration_on_a_fixed_instance() {
        let x: [f64; 5] = [0.3, -1.0, 2.2, 0.9, 1.7];
        let y: [f64; 5] = [1.1, -0.4, 0.0, 2.5, 3.0];
        let cost: Vec<Vec<f64>> =
            x.iter().map(|a| y.iter().map(|b| ((a - b) * (a - b) + (a * b).sin().abs()).sqrt()).collect()).collect();
        let m = [0.2; 5];
        for p in [1, 2] {
            let plan = discrete_ot_oracle(&m, &m, &cost, p).unwrap();
            assert!((plan.cost - permutation_oracle(&cost, p)).abs() < 1e-12);
            let (ma, mb) = plan.marginals(5, 5);
            assert!(ma.iter().chain(&mb).all(|v| (v - 0.2).abs() < 1e-12));
        }
    }

    #[test]
    fn irrational_masses_are_scaled_in_binary() {
        let a = [1.0 / 3.0_f64.sqrt(), 1.0 - 1.0 / 3.0_f64.sqrt()];
        let b = [0.5, 0.5];
        let plan = discrete_ot_oracle(&a, &b, &line_cost(&[0.0, 1.0], &[0.0, 1.0]), 1).unwrap();
        assert!((plan.cost - (a[0] - 0.5)).abs() < 1e-11);
    }
}
