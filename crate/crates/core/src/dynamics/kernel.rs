use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::dtw::DistanceMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How the Gaussian kernel width is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaPolicy {
    /// Population standard deviation of the off-diagonal distances.
    #[default]
    OffDiagonalStd,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix<T> {
    pub labels: Vec<u32>,
    pub values: Array2<T>,
    pub sigma: T,
}

/// Standard deviation of the off-diagonal entries. Falls back to their mean
/// when all distances coincide, and to 1 when they are all zero. Entries are
/// summed in sorted order so the result does not depend on row order.
pub fn default_sigma<T: Scalar>(d: &DistanceMatrix<T>) -> T {
    let mut xs = d.off_diagonal();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if xs.is_empty() {
        return T::one();
    }
    let n = T::from_count(xs.len() as u64);
    let mean = xs.iter().copied().sum::<T>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    let sd = var.sqrt();
    if sd > T::zero() {
        sd
    } else if mean > T::zero() {
        mean
    } else {
        T::one()
    }
}

pub fn resolve_sigma<T: Scalar>(d: &DistanceMatrix<T>, policy: SigmaPolicy) -> T {
    match policy {
        SigmaPolicy::OffDiagonalStd => default_sigma(d),
        SigmaPolicy::Fixed(s) => T::from_f64_lossy(s),
    }
}

/// DT(i,j) = exp(-D(i,j)^2 / (2 sigma^2)).
pub fn similarity_matrix<T: Scalar>(d: &DistanceMatrix<T>, sigma: T) -> Result<SimilarityMatrix<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::invalid(format!("kernel width must be positive, got {sigma}")));
    }
    let two_s2 = (sigma * sigma) + (sigma * sigma);
    let values = d.values.mapv(|x| (-(x * x) / two_s2).exp());
    Ok(SimilarityMatrix { labels: d.labels.clone(), values, sigma })
}
