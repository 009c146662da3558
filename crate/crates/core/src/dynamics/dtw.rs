use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Local-cost convention for two-component trajectories.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtwMode {
    /// One alignment, Euclidean distance between 2-D points.
    #[default]
    Euclidean,
    /// Independent 1-D alignments of each component, summed.
    PerComponent,
}

/// Unconstrained DTW with steps {match, insert, delete} and no path
/// normalisation.
pub fn dtw_with<P, T, F>(a: &[P], b: &[P], cost: F) -> Result<T>
where
    T: Scalar,
    F: Fn(&P, &P) -> T,
{
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("DTW needs non-empty series"));
    }
    let m = b.len();
    let mut prev = vec![T::infinity(); m];
    let mut curr = vec![T::infinity(); m];
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            let best = if i == 0 && j == 0 {
                T::zero()
            } else {
                let up = if i > 0 { prev[j] } else { T::infinity() };
                let left = if j > 0 { curr[j - 1] } else { T::infinity() };
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { T::infinity() };
                up.min(left).min(diag)
            };
            curr[j] = cost(pa, pb) + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

#[inline]
pub fn euclidean<T: Scalar>(p: &[T; 2], q: &[T; 2]) -> T {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

pub fn dtw_distance<T: Scalar>(a: &[[T; 2]], b: &[[T; 2]], mode: DtwMode) -> Result<T> {
    match mode {
        DtwMode::Euclidean => dtw_with(a, b, euclidean),
        DtwMode::PerComponent => {
            let x = dtw_with(a, b, |p: &[T; 2], q: &[T; 2]| (p[0] - q[0]).abs())?;
            let y = dtw_with(a, b, |p: &[T; 2], q: &[T; 2]| (p[1] - q[1]).abs())?;
            Ok(x + y)
        }
    }
}

/// Symmetric matrix of pairwise DTW distances with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T> {
    pub labels: Vec<u32>,
    pub values: Array2<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn off_diagonal(&self) -> Vec<T> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.values[[i, j]]);
            }
        }
        out
    }
}

/// Pairwise distances; pairs are computed in parallel and assembled in a
/// fixed order.
pub fn distance_matrix<T: Scalar>(labels: &[u32], series: &[Vec<[T; 2]>], mode: DtwMode) -> Result<DistanceMatrix<T>> {
    if labels.len() != series.len() {
        return Err(Error::invalid("label and series counts differ"));
    }
    for s in series {
        if s.is_empty() {
            return Err(Error::invalid("DTW needs non-empty series"));
        }
    }
    let n = series.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| dtw_distance(&series[i], &series[j], mode))
        .collect::<Result<Vec<T>>>()?;
    let mut values = Array2::zeros((n, n));
    for (&(i, j), &d) in pairs.iter().zip(&dists) {
        values[[i, j]] = d;
        values[[j, i]] = d;
    }
    Ok(DistanceMatrix { labels: labels.to_vec(), values })
}
