use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::eigen::{top_eigenpairs, EigenOptions, Eigenpairs};
use super::ranking::{rank_scores, RankTable};
use super::rca::{degree_vectors, BinaryAdjacency};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Countries,
    Subfields,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Countries => "countries",
            Side::Subfields => "subfields",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenepyOptions<T> {
    /// Number of leading eigenpairs entering the score.
    pub eigen_count: usize,
    pub eigen: EigenOptions<T>,
}

impl<T: Scalar> Default for GenepyOptions<T> {
    fn default() -> Self {
        GenepyOptions { eigen_count: 2, eigen: EigenOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenepyResult<T> {
    pub side: Side,
    /// Retained entities, in input order.
    pub labels: Vec<String>,
    pub pruned: Vec<String>,
    /// Leading eigenvalues, at most `eigen_count` of them.
    pub eigenvalues: Vec<T>,
    /// Matching eigenvectors as columns (entity × pair).
    pub eigenvectors: Array2<T>,
    pub scores: Vec<T>,
    /// 1 = highest score; a permutation of 1..=labels.len().
    pub ranks: Vec<usize>,
    /// Competition rank: tied scores share the best rank of their group.
    pub tie_ranks: Vec<usize>,
    pub iterations: usize,
    pub max_residual: T,
    /// Extra pairs pulled in because the last requested eigenvalue is degenerate.
    pub degenerate_extra: usize,
}

impl<T: Scalar> GenepyResult<T> {
    pub fn table(&self) -> RankTable<T> {
        super::ranking::rank_table(self)
    }

    pub fn score_of(&self, label: &str) -> Option<T> {
        self.labels.iter().position(|l| l == label).map(|i| self.scores[i])
    }
}

/// Zero-diagonal proximity matrices U = A·Aᵀ (countries) and V = Aᵀ·A
/// (subfields), with A_cs = M_cs / (k_c·k'_s).
pub fn proximity_matrices<T: Scalar>(m: &BinaryAdjacency) -> Result<(Array2<T>, Array2<T>)> {
    let (k, kp) = degree_vectors::<T>(m)?;
    let a = Array2::from_shape_fn(m.m.dim(), |(c, s)| {
        if m.m[[c, s]] != 0 {
            T::one() / (k[c] * kp[s])
        } else {
            T::zero()
        }
    });
    let mut u = a.dot(&a.t());
    let mut v = a.t().dot(&a);
    u.diag_mut().fill(T::zero());
    v.diag_mut().fill(T::zero());
    Ok((u, v))
}

/// (Σ λ_i X_ei²)² + 2 Σ λ_i² X_ei² over the leading `r` pairs. When the r-th
/// eigenvalue is degenerate, the squared components of that eigenspace are
/// averaged so the score does not depend on the basis picked inside it.
pub fn composite_scores<T: Scalar>(pairs: &Eigenpairs<T>, r: usize) -> Vec<T> {
    let n = pairs.vectors.nrows();
    let r = r.min(pairs.len());
    let mut linear = Array1::<T>::zeros(n);
    let mut quad = Array1::<T>::zeros(n);
    for cl in &pairs.clusters {
        if cl.start >= r {
            break;
        }
        let inside = cl.end.min(r) - cl.start;
        let weight = T::from_count(inside as u64) / T::from_count(cl.len() as u64);
        let lambda = cl.clone().map(|i| pairs.values[i]).sum::<T>() / T::from_count(cl.len() as u64);
        for e in 0..n {
            let sq: T = cl.clone().map(|i| pairs.vectors[[e, i]] * pairs.vectors[[e, i]]).sum();
            let sq = weight * sq;
            linear[e] = linear[e] + lambda * sq;
            quad[e] = quad[e] + lambda * lambda * sq;
        }
    }
    let two = T::one() + T::one();
    (0..n).map(|e| linear[e] * linear[e] + two * quad[e]).collect()
}

fn side_result<T: Scalar>(
    side: Side,
    p: &Array2<T>,
    labels: &[String],
    pruned: &[String],
    opts: &GenepyOptions<T>,
) -> Result<GenepyResult<T>> {
    let pairs = top_eigenpairs(p, opts.eigen_count, &opts.eigen)?;
    let r = opts.eigen_count.min(pairs.len());
    let scores = composite_scores(&pairs, r);
    let (ranks, tie_ranks) = rank_scores(labels.len(), &scores);
    Ok(GenepyResult {
        side,
        labels: labels.to_vec(),
        pruned: pruned.to_vec(),
        eigenvalues: pairs.values[..r].to_vec(),
        eigenvectors: pairs.vectors.slice(ndarray::s![.., ..r]).to_owned(),
        scores,
        ranks,
        tie_ranks,
        iterations: pairs.iterations,
        max_residual: pairs.max_residual(),
        degenerate_extra: pairs.len() - r,
    })
}

/// Country and subfield complexity from a pruned binary adjacency.
pub fn genepy_scores<T: Scalar>(
    m: &BinaryAdjacency,
    opts: &GenepyOptions<T>,
) -> Result<(GenepyResult<T>, GenepyResult<T>)> {
    if m.is_empty() {
        return Err(Error::InsufficientData("binary adjacency is empty after pruning".into()));
    }
    if opts.eigen_count == 0 {
        return Err(Error::invalid("eigen_count must be at least 1"));
    }
    let (u, v) = proximity_matrices::<T>(m)?;
    let countries = side_result(Side::Countries, &u, &m.rows, &m.pruned_rows, opts)?;
    let subfields = side_result(Side::Subfields, &v, &m.cols, &m.pruned_cols, opts)?;
    Ok((countries, subfields))
}
