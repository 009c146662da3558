//! Leiden community detection for weighted undirected graphs, optimising
//! modularity with a resolution parameter.
//!
//! Each level runs fast local moving, refines every community by randomised
//! merges of well-connected singletons, and aggregates the graph on the
//! refined partition while seeding the aggregate with the unrefined one.
//! All randomness comes from a seeded ChaCha stream, and neighbour
//! communities are always visited in ascending id order.

use std::collections::VecDeque;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Randomness of the refinement merge step, in modularity units.
const THETA: f64 = 0.01;
const MAX_LEVELS: usize = 64;

#[derive(Clone, Debug)]
pub struct WeightedGraph<T> {
    adj: Vec<Vec<(usize, T)>>,
    self_loops: Vec<T>,
    degree: Vec<T>,
    /// Sum of degrees, i.e. twice the total edge weight.
    total: T,
}

impl<T: Scalar> WeightedGraph<T> {
    /// Graph from a symmetric weight matrix; the diagonal and non-positive
    /// entries are ignored.
    pub fn from_dense(w: &Array2<T>) -> Self {
        let n = w.nrows();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j && w[[i, j]] > T::zero() {
                    adj[i].push((j, w[[i, j]]));
                }
            }
        }
        Self::from_parts(adj, vec![T::zero(); n])
    }

    fn from_parts(adj: Vec<Vec<(usize, T)>>, self_loops: Vec<T>) -> Self {
        let degree: Vec<T> = adj
            .iter()
            .zip(&self_loops)
            .map(|(row, &s)| row.iter().map(|&(_, w)| w).sum::<T>() + s + s)
            .collect();
        let total = degree.iter().copied().sum();
        WeightedGraph { adj, self_loops, degree, total }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    fn aggregate(&self, membership: &[usize], n_comms: usize) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_comms];
        let mut self_loops = vec![T::zero(); n_comms];
        for (v, &cv) in membership.iter().enumerate() {
            self_loops[cv] = self_loops[cv] + self.self_loops[v];
            for &(u, w) in &self.adj[v] {
                let cu = membership[u];
                if cu == cv {
                    // each internal edge is seen from both ends
                    if v < u {
                        self_loops[cv] = self_loops[cv] + w;
                    }
                } else {
                    rows[cv].push((cu, w));
                }
            }
        }
        let adj = rows
            .into_iter()
            .map(|mut r| {
                r.sort_by_key(|&(c, _)| c);
                let mut merged: Vec<(usize, T)> = Vec::with_capacity(r.len());
                for (c, w) in r {
                    match merged.last_mut() {
                        Some((lc, lw)) if *lc == c => *lw = *lw + w,
                        _ => merged.push((c, w)),
                    }
                }
                merged
            })
            .collect();
        Self::from_parts(adj, self_loops)
    }
}

/// Modularity of `membership` on `g` with resolution `gamma`.
pub fn modularity<T: Scalar>(g: &WeightedGraph<T>, membership: &[usize], gamma: T) -> T {
    if g.total <= T::zero() {
        return T::zero();
    }
    let n_comms = membership.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![T::zero(); n_comms];
    let mut tot = vec![T::zero(); n_comms];
    for v in 0..g.len() {
        let c = membership[v];
        tot[c] = tot[c] + g.degree[v];
        internal[c] = internal[c] + g.self_loops[v] + g.self_loops[v];
        for &(u, w) in &g.adj[v] {
            if membership[u] == c {
                internal[c] = internal[c] + w;
            }
        }
    }
    let m2 = g.total;
    internal
        .iter()
        .zip(&tot)
        .map(|(&i, &k)| i / m2 - gamma * (k / m2) * (k / m2))
        .sum()
}

struct Partition<T> {
    membership: Vec<usize>,
    weight: Vec<T>,
    size: Vec<usize>,
}

impl<T: Scalar> Partition<T> {
    fn from_membership(g: &WeightedGraph<T>, membership: Vec<usize>) -> Self {
        let n = g.len();
        let mut weight = vec![T::zero(); n];
        let mut size = vec![0; n];
        for (v, &c) in membership.iter().enumerate() {
            weight[c] = weight[c] + g.degree[v];
            size[c] += 1;
        }
        Partition { membership, weight, size }
    }

    fn singletons(g: &WeightedGraph<T>) -> Self {
        Self::from_membership(g, (0..g.len()).collect())
    }

    fn count(&self) -> usize {
        self.size.iter().filter(|&&s| s > 0).count()
    }

    /// Relabels communities to 0..k in order of first appearance.
    fn renumbered(&self) -> (Vec<usize>, usize) {
        let mut map = vec![usize::MAX; self.size.len()];
        let mut next = 0;
        let out = self
            .membership
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect();
        (out, next)
    }
}

/// Scratch buffer accumulating edge weight from one node to each community.
struct NeighborWeights<T> {
    weight: Vec<T>,
    touched: Vec<usize>,
}

impl<T: Scalar> NeighborWeights<T> {
    fn new(n: usize) -> Self {
        NeighborWeights { weight: vec![T::zero(); n], touched: Vec::new() }
    }

    fn collect<F: Fn(usize) -> bool>(&mut self, g: &WeightedGraph<T>, v: usize, membership: &[usize], keep: F) {
        for &c in &self.touched {
            self.weight[c] = T::zero();
        }
        self.touched.clear();
        for &(u, w) in &g.adj[v] {
            if !keep(u) {
                continue;
            }
            let c = membership[u];
            if !self.touched.contains(&c) {
                self.touched.push(c);
            }
            self.weight[c] = self.weight[c] + w;
        }
        self.touched.sort_unstable();
    }
}

fn move_nodes_fast<T: Scalar>(g: &WeightedGraph<T>, p: &mut Partition<T>, gamma: T, rng: &mut ChaCha8Rng) {
    let n = g.len();
    let m2 = g.total;
    let eps = T::epsilon() * T::from_count(64) * m2;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut queue: VecDeque<usize> = order.into();
    let mut queued = vec![true; n];
    let mut empty: Vec<usize> = (0..n).filter(|&c| p.size[c] == 0).rev().collect();
    let mut nw = NeighborWeights::new(n);

    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        let old = p.membership[v];
        let kv = g.degree[v];
        nw.collect(g, v, &p.membership, |_| true);
        p.weight[old] = p.weight[old] - kv;
        p.size[old] -= 1;
        if p.size[old] == 0 {
            empty.push(old);
        }

        let gain = |c: usize, w_vc: T| w_vc - gamma * kv * p.weight[c] / m2;
        let mut best = old;
        let mut best_gain = gain(old, nw.weight[old]);
        for &c in &nw.touched {
            let gc = gain(c, nw.weight[c]);
            if gc > best_gain + eps {
                best = c;
                best_gain = gc;
            }
        }
        if T::zero() > best_gain + eps {
            // an empty community beats every neighbour
            best = *empty.last().expect("old community is empty at worst");
        }
        if p.size[best] == 0 {
            let pos = empty.iter().rposition(|&c| c == best).expect("empty community tracked");
            empty.remove(pos);
        }
        p.membership[v] = best;
        p.weight[best] = p.weight[best] + kv;
        p.size[best] += 1;

        if best != old {
            for &(u, _) in &g.adj[v] {
                if !queued[u] && p.membership[u] != best {
                    queued[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
}

fn refine<T: Scalar>(g: &WeightedGraph<T>, p: &Partition<T>, gamma: T, rng: &mut ChaCha8Rng) -> Partition<T> {
    let n = g.len();
    let m2 = g.total;
    let m = m2 / (T::one() + T::one());
    let theta = T::from_f64_lossy(THETA);
    let mut r = Partition::singletons(g);
    // weight from each refined community to the rest of its parent community
    let mut external = vec![T::zero(); n];
    let mut nw = NeighborWeights::new(n);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, &c) in p.membership.iter().enumerate() {
        members[c].push(v);
    }

    for (parent, nodes) in members.iter().enumerate() {
        if nodes.len() < 2 {
            continue;
        }
        let total_s = p.weight[parent];
        for &v in nodes {
            external[v] = g.adj[v]
                .iter()
                .filter(|&&(u, _)| p.membership[u] == parent)
                .map(|&(_, w)| w)
                .sum();
        }
        let mut candidates: Vec<usize> = nodes
            .iter()
            .copied()
            .filter(|&v| external[v] >= gamma * g.degree[v] * (total_s - g.degree[v]) / m2)
            .collect();
        candidates.shuffle(rng);

        for v in candidates {
            let own = r.membership[v];
            if r.size[own] != 1 {
                continue;
            }
            let kv = g.degree[v];
            nw.collect(g, v, &r.membership, |u| p.membership[u] == parent);

            let mut options: Vec<(usize, T, T)> = Vec::with_capacity(nw.touched.len() + 1);
            options.push((own, T::zero(), T::zero()));
            for &c in &nw.touched {
                if c == own {
                    continue;
                }
                let kc = r.weight[c];
                if external[c] < gamma * kc * (total_s - kc) / m2 {
                    continue;
                }
                let dq = (nw.weight[c] - gamma * kv * kc / m2) / m;
                if dq >= T::zero() {
                    options.push((c, dq, nw.weight[c]));
                }
            }
            let max_dq = options.iter().map(|o| o.1).fold(T::zero(), T::max);
            let weights: Vec<T> = options.iter().map(|o| ((o.1 - max_dq) / theta).exp()).collect();
            let sum: T = weights.iter().copied().sum();
            let mut draw = T::from_f64_lossy(rng.gen::<f64>()) * sum;
            let mut chosen = options.len() - 1;
            for (i, &w) in weights.iter().enumerate() {
                if draw < w {
                    chosen = i;
                    break;
                }
                draw = draw - w;
            }
            let (target, _, w_vt) = options[chosen];
            if target == own {
                continue;
            }
            r.membership[v] = target;
            r.weight[own] = r.weight[own] - kv;
            r.size[own] -= 1;
            r.weight[target] = r.weight[target] + kv;
            r.size[target] += 1;
            external[target] = external[target] + external[v] - (w_vt + w_vt);
        }
    }
    r
}

/// Runs Leiden and returns a community index per node, numbered 0..k in
/// order of first appearance.
pub fn leiden<T: Scalar>(graph: &WeightedGraph<T>, resolution: T, seed: u64) -> Vec<usize> {
    let n = graph.len();
    if n == 0 {
        return Vec::new();
    }
    if graph.total <= T::zero() {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = graph.clone();
    let mut p = Partition::singletons(&g);
    // aggregate node that each original node currently belongs to
    let mut node_of: Vec<usize> = (0..n).collect();

    for _ in 0..MAX_LEVELS {
        move_nodes_fast(&g, &mut p, resolution, &mut rng);
        if p.count() == g.len() {
            break;
        }
        let refined = refine(&g, &p, resolution, &mut rng);
        let (refined_ids, n_refined) = refined.renumbered();
        let (parent_ids, _) = p.renumbered();
        let mut seed_membership = vec![0; n_refined];
        for (v, &rc) in refined_ids.iter().enumerate() {
            seed_membership[rc] = parent_ids[v];
        }
        let agg = g.aggregate(&refined_ids, n_refined);
        for slot in node_of.iter_mut() {
            *slot = refined_ids[*slot];
        }
        g = agg;
        p = Partition::from_membership(&g, seed_membership);
    }

    let (final_ids, _) = p.renumbered();
    node_of.iter().map(|&a| final_ids[a]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blocks(n: usize, within: f64, across: f64) -> Array2<f64> {
        Array2::from_shape_fn((2 * n, 2 * n), |(i, j)| {
            if i == j {
                1.0
            } else if (i < n) == (j < n) {
                within
            } else {
                across
            }
        })
    }

    #[test]
    fn recovers_planted_blocks() {
        let w = two_blocks(5, 0.9, 0.01);
        let g = WeightedGraph::from_dense(&w);
        let m = leiden(&g, 1.0, 7);
        assert!(m[..5].iter().all(|&c| c == m[0]));
        assert!(m[5..].iter().all(|&c| c == m[5]));
        assert_ne!(m[0], m[5]);
    }

    #[test]
    fn ring_of_cliques() {
        // six 4-cliques joined in a ring by single weak edges
        let k = 4;
        let cliques = 6;
        let n = k * cliques;
        let mut w = Array2::zeros((n, n));
        for c in 0..cliques {
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        w[[c * k + i, c * k + j]] = 1.0;
                    }
                }
            }
            let a = c * k;
            let b = ((c + 1) % cliques) * k + 1;
            w[[a, b]] = 0.1;
            w[[b, a]] = 0.1;
        }
        let g = WeightedGraph::from_dense(&w);
        let m = leiden(&g, 1.0, 3);
        for c in 0..cliques {
            let block = &m[c * k..(c + 1) * k];
            assert!(block.iter().all(|&x| x == block[0]));
        }
        let distinct: std::collections::BTreeSet<_> = m.iter().collect();
        assert_eq!(distinct.len(), cliques);
        let q = modularity(&g, &m, 1.0);
        assert!(q > 0.7, "modularity {q}");
    }

    #[test]
    fn deterministic_for_seed() {
        let w = Array2::from_shape_fn((12, 12), |(i, j)| if i == j { 0.0 } else { 1.0 / (1.0 + (i as f64 - j as f64).abs()) });
        let g = WeightedGraph::from_dense(&w);
        assert_eq!(leiden(&g, 1.0, 11), leiden(&g, 1.0, 11));
    }

    #[test]
    fn edgeless_graph_is_all_singletons() {
        let g = WeightedGraph::from_dense(&Array2::<f64>::zeros((3, 3)));
        assert_eq!(leiden(&g, 1.0, 0), vec![0, 1, 2]);
    }

    #[test]
    fn modularity_of_planted_partition() {
        let w = two_blocks(3, 1.0, 0.0);
        let g = WeightedGraph::from_dense(&w);
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1], 1.0);
        assert!((q - 0.5).abs() < 1e-12);
        assert!(modularity(&g, &[0; 6], 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregation_preserves_total_weight() {
        let w = two_blocks(4, 0.5, 0.2);
        let g = WeightedGraph::from_dense(&w);
        let agg = g.aggregate(&[0, 0, 1, 1, 2, 2, 3, 3], 4);
        assert!((agg.total - g.total).abs() < 1e-12);
        assert_eq!(agg.len(), 4);
    }
}
