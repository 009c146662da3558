//! Leading eigenpairs of small dense symmetric matrices.
//!
//! Block power iteration on a shifted operator with a Rayleigh-Ritz
//! projection after every step. Pairs that meet the residual tolerance are
//! reported; if the requested pairs end inside a run of (numerically) equal
//! eigenvalues, the block grows until the whole run is captured so callers can
//! treat the degenerate eigenspace as a unit.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const START_SEED: u64 = 0x6765_6e65_7079;
const GUARD: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenOrder {
    /// Largest algebraic value first; negative eigenvalues rank lowest.
    #[default]
    Algebraic,
    /// Largest absolute value first.
    Magnitude,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions<T> {
    pub tolerance: T,
    pub max_iterations: usize,
    pub order: EigenOrder,
}

impl<T: Scalar> Default for EigenOptions<T> {
    fn default() -> Self {
        EigenOptions {
            tolerance: T::solver_tolerance(),
            max_iterations: 100_000,
            order: EigenOrder::Algebraic,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpairs<T> {
    /// Eigenvalues in the requested order.
    pub values: Vec<T>,
    /// Unit eigenvectors as columns, largest-magnitude component non-negative.
    pub vectors: Array2<T>,
    /// Runs of equal eigenvalues (within the degeneracy tolerance).
    pub clusters: Vec<Range<usize>>,
    /// ‖A x − λ x‖∞ per pair.
    pub residuals: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> Eigenpairs<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_residual(&self) -> T {
        self.residuals.iter().copied().fold(T::zero(), T::max)
    }
}

fn ranks_before<T: Scalar>(a: T, b: T, order: EigenOrder) -> std::cmp::Ordering {
    let key = |x: T| match order {
        EigenOrder::Algebraic => x,
        EigenOrder::Magnitude => x.abs(),
    };
    key(b)
        .partial_cmp(&key(a))
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(b.partial_cmp(&a).unwrap_or(std::cmp::Ordering::Equal))
}

/// Cyclic Jacobi rotation method for a small symmetric matrix. Returns
/// eigenvalues sorted by `order` and the matching eigenvector columns.
pub fn jacobi_eigen<T: Scalar>(h: &Array2<T>, order: EigenOrder) -> (Vec<T>, Array2<T>) {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v = Array2::<T>::eye(n);
    let two = T::one() + T::one();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + a[[i, i]] * a[[i, i]];
            for j in i + 1..n {
                off = off + a[[i, j]] * a[[i, j]];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| ranks_before(a[[i, i]], a[[j, j]], order).then(i.cmp(&j)));
    let values = idx.iter().map(|&i| a[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, idx[c]]]);
    (values, vectors)
}

fn random_column<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Array1<T> {
    Array1::from_shape_fn(n, |_| T::from_f64_lossy(rng.gen_range(-1.0..1.0)))
}

fn norm<T: Scalar>(x: ArrayView1<T>) -> T {
    x.dot(&x).sqrt()
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass; columns that
/// collapse are replaced by fresh random directions.
fn orthonormalize<T: Scalar>(q: &mut Array2<T>, rng: &mut ChaCha8Rng) {
    let (n, p) = q.dim();
    let floor = T::epsilon().sqrt();
    for j in 0..p {
        for attempt in 0..8 {
            let before = norm(q.column(j));
            for _ in 0..2 {
                for i in 0..j {
                    let proj = q.column(i).dot(&q.column(j));
                    let qi = q.column(i).to_owned();
                    q.column_mut(j).scaled_add(-proj, &qi);
                }
            }
            let after = norm(q.column(j));
            if after > floor * before.max(T::min_positive_value()) && after > T::zero() {
                q.column_mut(j).mapv_inplace(|x| x / after);
                break;
            }
            assert!(attempt < 7, "could not extend orthonormal basis");
            let fresh = random_column::<T>(n, rng);
            q.column_mut(j).assign(&fresh);
        }
    }
}

fn residual<T: Scalar>(a: &Array2<T>, x: ArrayView1<T>, lambda: T) -> T {
    let ax = a.dot(&x);
    ax.iter()
        .zip(x.iter())
        .map(|(&y, &xi)| (y - lambda * xi).abs())
        .fold(T::zero(), T::max)
}

fn fix_sign<T: Scalar>(v: &mut Array2<T>) {
    for mut col in v.axis_iter_mut(Axis(1)) {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < T::zero() {
            col.mapv_inplace(|x| -x);
        }
    }
}

fn group_clusters<T: Scalar>(values: &[T], tol: T) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i] - values[start]).abs() > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Tolerance under which two eigenvalues are treated as one degenerate value.
pub fn degeneracy_tolerance<T: Scalar>(scale: T, tolerance: T) -> T {
    T::from_count(1000) * tolerance * scale.max(T::one())
}

/// The `r` leading eigenpairs of symmetric `a` (more if the `r`-th eigenvalue
/// is degenerate).
pub fn top_eigenpairs<T: Scalar>(a: &Array2<T>, r: usize, opts: &EigenOptions<T>) -> Result<Eigenpairs<T>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::invalid("eigenproblem needs a non-empty square matrix"));
    }
    if r == 0 {
        return Err(Error::invalid("at least one eigenpair must be requested"));
    }
    let r = r.min(n);
    let shift = a
        .axis_iter(Axis(0))
        .map(|row| row.iter().map(|x| x.abs()).sum::<T>())
        .fold(T::zero(), T::max);
    let deg_tol = degeneracy_tolerance(shift, opts.tolerance);
    let apply = |q: &Array2<T>| -> Array2<T> {
        match opts.order {
            EigenOrder::Algebraic => {
                let mut z = a.dot(q);
                z.scaled_add(shift, q);
                z
            }
            EigenOrder::Magnitude => a.dot(&a.dot(q)),
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut p = (r + GUARD).min(n);
    let mut q = Array2::from_shape_fn((n, p), |_| T::from_f64_lossy(rng.gen_range(-1.0..1.0)));
    orthonormalize(&mut q, &mut rng);
    let mut worst = T::infinity();

    for iter in 1..=opts.max_iterations {
        let mut z = apply(&q);
        orthonormalize(&mut z, &mut rng);
        let mut h = z.t().dot(&a.dot(&z));
        let ht = h.t().to_owned();
        h = (h + ht).mapv(|x| x / (T::one() + T::one()));
        let (theta, w) = jacobi_eigen(&h, opts.order);
        q = z.dot(&w);

        let mut need = r;
        while need < p && (theta[need] - theta[r - 1]).abs() <= deg_tol {
            need += 1;
        }
        if need == p && p < n {
            let grown = (2 * p).min(n);
            let mut bigger = Array2::zeros((n, grown));
            bigger.slice_mut(s![.., ..p]).assign(&q);
            for j in p..grown {
                bigger.column_mut(j).assign(&random_column::<T>(n, &mut rng));
            }
            orthonormalize(&mut bigger, &mut rng);
            q = bigger;
            p = grown;
            continue;
        }
        let residuals: Vec<T> = (0..need).map(|i| residual(a, q.column(i), theta[i])).collect();
        worst = residuals.iter().copied().fold(T::zero(), T::max);
        if worst <= opts.tolerance {
            let mut vectors = q.slice(s![.., ..need]).to_owned();
            fix_sign(&mut vectors);
            let values = theta[..need].to_vec();
            let clusters = group_clusters(&values, deg_tol);
            return Ok(Eigenpairs { values, vectors, clusters, residuals, iterations: iter });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual: worst.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn jacobi_diagonalises() {
        let h = array![[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        let (vals, vecs) = jacobi_eigen(&h, EigenOrder::Algebraic);
        let r2 = 2f64.sqrt();
        assert!((vals[0] - (2.0 + r2)).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!((vals[2] - (2.0 - r2)).abs() < 1e-12);
        for k in 0..3 {
            assert!(residual(&h, vecs.column(k), vals[k]) < 1e-12);
        }
    }

    #[test]
    fn algebraic_versus_magnitude() {
        // eigenvalues 3, 1, -5
        let a = array![[3.0f64, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -5.0]];
        let alg = top_eigenpairs(&a, 2, &EigenOptions::default()).unwrap();
        assert!((alg.values[0] - 3.0).abs() < 1e-10 && (alg.values[1] - 1.0).abs() < 1e-10);
        let mag = top_eigenpairs(&a, 2, &EigenOptions { order: EigenOrder::Magnitude, ..Default::default() }).unwrap();
        assert!((mag.values[0] + 5.0).abs() < 1e-10 && (mag.values[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_tail_is_captured() {
        // J - I on 6 nodes: 5 once, -1 five times
        let n = 6;
        let a = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0f64 } else { 1.0 });
        let e = top_eigenpairs(&a, 2, &EigenOptions::default()).unwrap();
        assert_eq!(e.len(), 6);
        assert_eq!(e.clusters, vec![0..1, 1..6]);
        assert!((e.values[0] - 5.0).abs() < 1e-10);
        for v in &e.values[1..] {
            assert!((v + 1.0).abs() < 1e-10);
        }
        assert!(e.max_residual() <= 1e-10);
    }

    #[test]
    fn sign_convention() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let e = top_eigenpairs(&a, 1, &EigenOptions::default()).unwrap();
        let col = e.vectors.column(0);
        assert!(col[0] > 0.0 || col[1] > 0.0);
    }

    #[test]
    fn zero_matrix() {
        let a = Array2::<f64>::zeros((3, 3));
        let e = top_eigenpairs(&a, 2, &EigenOptions::default()).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let a = array![[1.0, 0.3, 0.0, 0.0, 0.2, 0.1], [0.3, 0.9, 0.1, 0.0, 0.0, 0.0], [0.0, 0.1, 0.5, 0.2, 0.0, 0.0], [0.0, 0.0, 0.2, 0.4, 0.1, 0.0], [0.2, 0.0, 0.0, 0.1, 0.3, 0.05], [0.1, 0.0, 0.0, 0.0, 0.05, 0.2]];
        let opts = EigenOptions { tolerance: 1e-300, max_iterations: 3, order: EigenOrder::Algebraic };
        match top_eigenpairs(&a, 1, &opts) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
