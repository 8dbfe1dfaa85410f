//! Projection of a node-by-cluster score matrix onto balanced assignments
//! (every node in one cluster, every cluster holding exactly `s` nodes).
//!
//! The projection is a transportation problem with `N` unit sources and `M`
//! sinks of capacity `s`. It is solved incrementally: nodes are inserted one
//! at a time and each insertion follows a cheapest augmenting path through
//! the small cluster graph, where the arc `a -> b` costs the least loss of
//! moving some node currently in `a` over to `b`. After every insertion the
//! partial assignment is optimal for the nodes inserted so far.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    /// Row-major `n x m` scores.
    pub fn new(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * m || m == 0 {
            return Err(Error::params("score matrix shape mismatch"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::params("score matrix entries must be finite"));
        }
        Ok(Self { n, m, data })
    }

    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(n, m, (0..n * m).map(|t| f(t / m, t % m)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.data[i * self.m + c]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// `sum_i X[i, labels[i]]`.
    pub fn objective(&self, labels: &[usize]) -> f64 {
        labels.iter().enumerate().map(|(i, &c)| self.get(i, c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BalancedAssignment {
    m: usize,
    labels: Vec<usize>,
}

impl BalancedAssignment {
    pub fn new(m: usize, labels: Vec<usize>) -> Result<Self> {
        if m == 0 || !labels.len().is_multiple_of(m) {
            return Err(Error::params("N must be a multiple of M"));
        }
        let s = labels.len() / m;
        let mut counts = vec![0usize; m];
        for &c in &labels {
            if c >= m {
                return Err(Error::params(format!("cluster id {c} out of range")));
            }
            counts[c] += 1;
        }
        if counts.iter().any(|&c| c != s) {
            return Err(Error::params("assignment is not balanced"));
        }
        Ok(Self { m, labels })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The 0/1 indicator matrix, row-major `N x M`.
    pub fn indicator(&self) -> Vec<u8> {
        let mut h = vec![0u8; self.labels.len() * self.m];
        for (i, &c) in self.labels.iter().enumerate() {
            h[i * self.m + c] = 1;
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub assignment: BalancedAssignment,
    pub objective: f64,
    /// Another balanced assignment attains the same objective (to within
    /// floating-point tolerance).
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    loss: f64,
    node: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.loss.total_cmp(&other.loss).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Incremental<'a> {
    x: &'a ScoreMatrix,
    labels: Vec<usize>,
    counts: Vec<usize>,
    // moves[a * m + b]: nodes in a keyed by the loss of moving them to b.
    moves: Vec<BinaryHeap<Reverse<Key>>>,
}

impl Incremental<'_> {
    fn place(&mut self, node: usize, c: usize) {
        let m = self.x.m;
        self.labels[node] = c;
        self.counts[c] += 1;
        for b in (0..m).filter(|&b| b != c) {
            let loss = self.x.get(node, c) - self.x.get(node, b);
            self.moves[c * m + b].push(Reverse(Key { loss, node }));
        }
    }

    /// Cheapest node currently in `a` to move to `b`, dropping stale entries.
    fn cheapest(&mut self, a: usize, b: usize) -> Option<Key> {
        let heap = &mut self.moves[a * self.x.m + b];
        while let Some(Reverse(top)) = heap.peek() {
            if self.labels[top.node] == a {
                return Some(*top);
            }
            heap.pop();
        }
        None
    }

    fn arc_costs(&mut self) -> Vec<Option<Key>> {
        let m = self.x.m;
        let mut arcs = vec![None; m * m];
        for a in 0..m {
            for b in (0..m).filter(|&b| b != a) {
                arcs[a * m + b] = self.cheapest(a, b);
            }
        }
        arcs
    }

    fn insert(&mut self, node: usize, s: usize) {
        let m = self.x.m;
        let arcs = self.arc_costs();
        let mut dist: Vec<f64> = (0..m).map(|c| -self.x.get(node, c)).collect();
        let mut pred: Vec<Option<usize>> = vec![None; m];
        for _ in 1..m {
            let mut changed = false;
            for a in 0..m {
                for b in (0..m).filter(|&b| b != a) {
                    if let Some(key) = arcs[a * m + b] {
                        let cand = dist[a] + key.loss;
                        if cand + EPS * (1.0 + dist[b].abs()) < dist[b] {
                            dist[b] = cand;
                            pred[b] = Some(a);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let end = (0..m)
            .filter(|&c| self.counts[c] < s)
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
            .expect("a cluster with free capacity exists while nodes remain");

        let mut path = vec![end];
        while let Some(prev) = pred[*path.last().unwrap()] {
            path.push(prev);
            assert!(path.len() <= m, "negative cycle in the cluster graph");
        }
        path.reverse();
        let movers: Vec<(usize, usize)> = path
            .windows(2)
            .map(|w| (arcs[w[0] * m + w[1]].expect("arc on path").node, w[1]))
            .collect();
        for (mover, to) in movers {
            self.counts[self.labels[mover]] -= 1;
            self.place(mover, to);
        }
        self.place(node, path[0]);
    }

    /// Whether some cycle of moves has zero total loss.
    fn has_zero_cycle(&mut self, scale: f64) -> bool {
        let m = self.x.m;
        let arcs = self.arc_costs();
        let mut d: Vec<f64> = arcs
            .iter()
            .map(|a| a.map_or(f64::INFINITY, |k| k.loss))
            .collect();
        for via in 0..m {
            for a in 0..m {
                for b in 0..m {
                    let alt = d[a * m + via] + d[via * m + b];
                    if alt < d[a * m + b] {
                        d[a * m + b] = alt;
                    }
                }
            }
        }
        (0..m).any(|a| d[a * m + a] <= 1e-9 * scale)
    }
}

/// Maximizer of `sum_i X[i, label_i]` over balanced assignments with cluster
/// size `s`. Ties are broken by node order: earlier nodes keep the lowest
/// cluster ids they can.
pub fn project_onto_h(x: &ScoreMatrix, s: usize) -> Result<Projection> {
    let (n, m) = (x.n, x.m);
    if s == 0 || n != m * s {
        return Err(Error::params(format!("N = {n} is not M * s = {m} * {s}")));
    }
    let mut state = Incremental {
        x,
        labels: vec![usize::MAX; n],
        counts: vec![0; m],
        moves: (0..m * m).map(|_| BinaryHeap::new()).collect(),
    };
    for node in 0..n {
        state.insert(node, s);
    }
    let scale = x.data.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tie = m > 1 && state.has_zero_cycle(scale);
    let objective = x.objective(&state.labels);
    let assignment = BalancedAssignment::new(m, state.labels)?;
    Ok(Projection { assignment, objective, tie })
}

pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Number of balanced assignments, `N! / (s!)^M`, saturating.
pub fn count_balanced(n: usize, m: usize) -> u128 {
    let s = n / m;
    let mut total: u128 = 1;
    let mut remaining = n as u128;
    for _ in 0..m {
        // multiply by C(remaining, s)
        let mut binom: u128 = 1;
        for t in 0..s as u128 {
            binom = binom.saturating_mul(remaining - t) / (t + 1);
        }
        total = total.saturating_mul(binom);
        remaining -= s as u128;
    }
    total
}

/// Exhaustive enumeration of all balanced assignments. Returns the optimal
/// objective and every assignment within `1e-9` (relative) of it.
pub fn brute_force_project(x: &ScoreMatrix, s: usize) -> Result<(f64, Vec<BalancedAssignment>)> {
    let (n, m) = (x.n, x.m);
    if s == 0 || n != m * s {
        return Err(Error::params(format!("N = {n} is not M * s = {m} * {s}")));
    }
    let count = count_balanced(n, m);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { count, limit: BRUTE_FORCE_LIMIT });
    }
    let mut all = Vec::new();
    let mut labels = vec![0usize; n];
    let mut counts = vec![0usize; m];
    enumerate(x, s, 0, 0.0, &mut labels, &mut counts, &mut all);
    let best = all.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * best.abs().max(1.0);
    let maximizers = all
        .into_iter()
        .filter(|(v, _)| *v >= best - tol)
        .map(|(_, l)| BalancedAssignment { m, labels: l })
        .collect();
    Ok((best, maximizers))
}

fn enumerate(
    x: &ScoreMatrix,
    s: usize,
    node: usize,
    acc: f64,
    labels: &mut Vec<usize>,
    counts: &mut Vec<usize>,
    out: &mut Vec<(f64, Vec<usize>)>,
) {
    if node == x.n {
        out.push((acc, labels.clone()));
        return;
    }
    for c in 0..x.m {
        if counts[c] < s {
            counts[c] += 1;
            labels[node] = c;
            enumerate(x, s, node + 1, acc + x.get(node, c), labels, counts, out);
            counts[c] -= 1;
        }
    }
}
