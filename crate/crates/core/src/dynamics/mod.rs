//! Clustering of subfield growth trajectories in the scaled
//! (consolidating, disruptive) phase plane.
//!
//! Pipeline: pairwise DTW distances, Gaussian-kernel similarities, Leiden
//! communities on the complete similarity graph, then per-cluster mean
//! trajectories.

pub mod dtw;
pub mod kernel;
pub mod leiden;

use std::collections::BTreeMap;

use crate::breakthrough::SeriesTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use dtw::{distance_matrix, dtw_distance, DistanceMatrix, DtwMode};
pub use kernel::{default_sigma, resolve_sigma, similarity_matrix, SigmaPolicy, SimilarityMatrix};
pub use leiden::{leiden, modularity, WeightedGraph};

/// Time-ordered phase-plane points of one subfield (or one cluster mean).
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub id: u32,
    pub years: Vec<i32>,
    pub points: Vec<[T; 2]>,
}

/// Trajectories for `subfields` (all series when `None`), in label order.
pub fn trajectories_from_series<T: Scalar>(table: &SeriesTable<T>, subfields: Option<&[u32]>) -> Vec<Trajectory<T>> {
    let pick = |id: &u32| subfields.map_or(true, |s| s.contains(id));
    table
        .series
        .iter()
        .filter(|(id, _)| pick(id))
        .map(|(&id, s)| Trajectory { id, years: s.years.clone(), points: s.phase_points() })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringResult<T> {
    /// Labels in ascending order.
    pub labels: Vec<u32>,
    /// Cluster number (1 = largest) for members of communities of size >= 2.
    pub cluster: Vec<Option<u32>>,
    pub singleton: Vec<bool>,
    pub seed: u64,
    pub resolution: T,
    pub modularity: T,
}

impl<T: Scalar> ClusteringResult<T> {
    pub fn cluster_of(&self, label: u32) -> Option<u32> {
        let i = self.labels.binary_search(&label).ok()?;
        self.cluster[i]
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster.iter().flatten().max().copied().unwrap_or(0) as usize
    }

    pub fn singleton_count(&self) -> usize {
        self.singleton.iter().filter(|&&s| s).count()
    }

    /// Members per cluster number.
    pub fn members(&self) -> BTreeMap<u32, Vec<u32>> {
        let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (l, c) in self.labels.iter().zip(&self.cluster) {
            if let Some(c) = c {
                out.entry(*c).or_default().push(*l);
            }
        }
        out
    }
}

/// Leiden communities on the similarity graph (diagonal excluded).
///
/// Input rows are first put in ascending label order so the result does not
/// depend on how the caller ordered them. Clusters are numbered by
/// decreasing size, ties by smallest member label; size-1 communities are
/// flagged as singletons and left unnumbered.
pub fn leiden_clusters<T: Scalar>(sim: &SimilarityMatrix<T>, resolution: T, seed: u64) -> Result<ClusteringResult<T>> {
    let n = sim.labels.len();
    if n < 2 {
        return Err(Error::invalid("clustering needs at least two trajectories"));
    }
    if !(resolution > T::zero()) {
        return Err(Error::invalid("resolution must be positive"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| sim.labels[i]);
    if order.windows(2).any(|w| sim.labels[w[0]] == sim.labels[w[1]]) {
        return Err(Error::invalid("duplicate trajectory labels"));
    }
    let labels: Vec<u32> = order.iter().map(|&i| sim.labels[i]).collect();
    let weights = ndarray::Array2::from_shape_fn((n, n), |(i, j)| sim.values[[order[i], order[j]]]);
    let graph = WeightedGraph::from_dense(&weights);
    let community = leiden(&graph, resolution, seed);
    let q = modularity(&graph, &community, resolution);

    let k = community.iter().copied().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in community.iter().enumerate() {
        groups[c].push(i);
    }
    // members are in label order, so g[0] is the smallest label
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut cluster = vec![None; n];
    let mut singleton = vec![false; n];
    let mut next = 1u32;
    for g in &groups {
        if g.len() == 1 {
            singleton[g[0]] = true;
        } else {
            for &i in g {
                cluster[i] = Some(next);
            }
            next += 1;
        }
    }
    Ok(ClusteringResult { labels, cluster, singleton, seed, resolution, modularity: q })
}

/// Pointwise mean trajectory of every numbered cluster.
pub fn cluster_mean_trajectory<T: Scalar>(
    result: &ClusteringResult<T>,
    trajectories: &[Trajectory<T>],
) -> Result<BTreeMap<u32, Trajectory<T>>> {
    let by_id: BTreeMap<u32, &Trajectory<T>> = trajectories.iter().map(|t| (t.id, t)).collect();
    let mut out = BTreeMap::new();
    for (cluster, members) in result.members() {
        let first = by_id
            .get(&members[0])
            .ok_or_else(|| Error::invalid(format!("no trajectory for label {}", members[0])))?;
        let mut sums = vec![[T::zero(); 2]; first.points.len()];
        for m in &members {
            let t = by_id
                .get(m)
                .ok_or_else(|| Error::invalid(format!("no trajectory for label {m}")))?;
            if t.years != first.years || t.points.len() != first.points.len() {
                return Err(Error::invalid(format!("trajectory {m} is on a different year grid")));
            }
            for (s, p) in sums.iter_mut().zip(&t.points) {
                s[0] = s[0] + p[0];
                s[1] = s[1] + p[1];
            }
        }
        let k = T::from_count(members.len() as u64);
        let points = sums.into_iter().map(|[a, b]| [a / k, b / k]).collect();
        out.insert(cluster, Trajectory { id: cluster, years: first.years.clone(), points });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn block_similarity(labels: Vec<u32>, block_of: impl Fn(usize) -> usize) -> SimilarityMatrix<f64> {
        let n = labels.len();
        let values = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                1.0
            } else if block_of(i) == block_of(j) {
                0.9
            } else {
                0.01
            }
        });
        SimilarityMatrix { labels, values, sigma: 1.0 }
    }

    #[test]
    fn planted_blocks_two_clusters() {
        let sim = block_similarity((10..18).collect(), |i| i / 4);
        let r = leiden_clusters(&sim, 1.0, 42).unwrap();
        assert_eq!(r.cluster_count(), 2);
        assert_eq!(r.singleton_count(), 0);
        let m = r.members();
        assert_eq!(m[&1], vec![10, 11, 12, 13]);
        assert_eq!(m[&2], vec![14, 15, 16, 17]);
        assert_eq!(r, leiden_clusters(&sim, 1.0, 42).unwrap());
    }

    #[test]
    fn input_order_does_not_matter() {
        let labels: Vec<u32> = vec![5, 3, 9, 1, 7, 2];
        let sim = block_similarity(labels.clone(), |i| labels[i] as usize % 2);
        let perm = [3, 0, 5, 1, 4, 2];
        let plabels: Vec<u32> = perm.iter().map(|&i| labels[i]).collect();
        let pvalues = Array2::from_shape_fn((6, 6), |(i, j)| sim.values[[perm[i], perm[j]]]);
        let psim = SimilarityMatrix { labels: plabels, values: pvalues, sigma: 1.0 };
        assert_eq!(leiden_clusters(&sim, 1.0, 1).unwrap(), leiden_clusters(&psim, 1.0, 1).unwrap());
    }

    #[test]
    fn uniform_similarity_is_deterministic() {
        let n = 6;
        let sim = SimilarityMatrix { labels: (0..n as u32).collect(), values: Array2::from_elem((n, n), 0.5), sigma: 1.0 };
        for res in [0.5, 1.0, 3.0] {
            let a = leiden_clusters(&sim, res, 9).unwrap();
            assert_eq!(a, leiden_clusters(&sim, res, 9).unwrap());
            for (c, s) in a.cluster.iter().zip(&a.singleton) {
                assert_eq!(c.is_none(), *s);
            }
        }
    }

    #[test]
    fn too_few_labels() {
        let sim = SimilarityMatrix { labels: vec![1], values: Array2::from_elem((1, 1), 1.0), sigma: 1.0 };
        assert!(leiden_clusters(&sim, 1.0, 0).is_err());
    }

    fn traj(id: u32, p: [f64; 2]) -> Trajectory<f64> {
        Trajectory { id, years: vec![2000, 2001, 2002], points: vec![p; 3] }
    }

    fn result_with(labels: Vec<u32>, cluster: Vec<Option<u32>>) -> ClusteringResult<f64> {
        let singleton = cluster.iter().map(Option::is_none).collect();
        ClusteringResult { labels, cluster, singleton, seed: 0, resolution: 1.0, modularity: 0.0 }
    }

    #[test]
    fn mean_of_constant_trajectories() {
        let r = result_with(vec![1, 2, 3], vec![Some(1), Some(1), None]);
        let ts = [traj(1, [0.0, 0.0]), traj(2, [1.0, 1.0]), traj(3, [0.3, 0.3])];
        let means = cluster_mean_trajectory(&r, &ts).unwrap();
        assert_eq!(means.len(), 1);
        assert_eq!(means[&1].points, vec![[0.5, 0.5]; 3]);
    }

    #[test]
    fn mean_of_identical_members_is_member() {
        for k in 2..6u32 {
            let labels: Vec<u32> = (0..k).collect();
            let r = result_with(labels.clone(), vec![Some(1); k as usize]);
            let ts: Vec<_> = labels
                .iter()
                .map(|&l| Trajectory { id: l, years: vec![1, 2], points: vec![[0.1, 0.7], [0.3, 0.2]] })
                .collect();
            let means = cluster_mean_trajectory(&r, &ts).unwrap();
            for (m, p) in means[&1].points.iter().zip(&ts[0].points) {
                assert!((m[0] - p[0]).abs() < 1e-15 && (m[1] - p[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let r = result_with(vec![1, 2], vec![Some(1), Some(1)]);
        let mut b = traj(2, [1.0, 1.0]);
        b.years = vec![2000, 2001, 2003];
        assert!(cluster_mean_trajectory(&r, &[traj(1, [0.0, 0.0]), b]).is_err());
    }
}
