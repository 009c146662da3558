use ndarray::{Array2, Axis};

use crate::breakthrough::{PanelMatrix, YearWindow};
use crate::error::{Error, Result};
use crate::impact::BreakthroughClass;
use crate::scalar::Scalar;

/// Revealed comparative advantage of each country (row) in each subfield
/// (column).
#[derive(Clone, Debug, PartialEq)]
pub struct RcaMatrix<T> {
    pub window: Option<YearWindow>,
    pub kind: Option<BreakthroughClass>,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Array2<T>,
    /// Rows whose total count is zero; their RCA is pinned to 0.
    pub zero_rows: Vec<bool>,
    pub zero_cols: Vec<bool>,
}

impl<T: Scalar> RcaMatrix<T> {
    /// Builds from a raw non-negative matrix with explicit labels.
    pub fn from_counts(counts: &Array2<T>, rows: Vec<String>, cols: Vec<String>) -> Result<Self> {
        if rows.len() != counts.nrows() || cols.len() != counts.ncols() {
            return Err(Error::invalid("label count does not match matrix shape"));
        }
        let (values, zero_rows, zero_cols) = rca_values(counts)?;
        Ok(RcaMatrix { window: None, kind: None, rows, cols, values, zero_rows, zero_cols })
    }
}

/// RCA_cs = (X_cs / row_c) / (col_s / total), evaluated as
/// X_cs·total / (row_c·col_s) so integer counts stay exact.
pub fn rca_values<T: Scalar>(x: &Array2<T>) -> Result<(Array2<T>, Vec<bool>, Vec<bool>)> {
    if x.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::invalid("counts must be finite and non-negative"));
    }
    let rows: Vec<T> = x.sum_axis(Axis(1)).to_vec();
    let cols: Vec<T> = x.sum_axis(Axis(0)).to_vec();
    let total: T = rows.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::invalid("RCA of an all-zero matrix is undefined"));
    }
    let zero_rows: Vec<bool> = rows.iter().map(|r| *r == T::zero()).collect();
    let zero_cols: Vec<bool> = cols.iter().map(|c| *c == T::zero()).collect();
    let values = Array2::from_shape_fn(x.dim(), |(c, s)| {
        if zero_rows[c] || zero_cols[s] {
            T::zero()
        } else {
            x[[c, s]] * total / (rows[c] * cols[s])
        }
    });
    Ok((values, zero_rows, zero_cols))
}

pub fn rca<T: Scalar>(panel: &PanelMatrix) -> Result<RcaMatrix<T>> {
    let counts = panel.counts.mapv(T::from_count);
    let mut m = RcaMatrix::from_counts(
        &counts,
        panel.countries.iter().map(|c| c.to_string()).collect(),
        panel.subfields.iter().map(|s| s.to_string()).collect(),
    )?;
    m.window = Some(panel.window);
    m.kind = Some(panel.kind);
    Ok(m)
}

/// Pruned 0/1 country×subfield matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryAdjacency {
    pub window: Option<YearWindow>,
    pub kind: Option<BreakthroughClass>,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub m: Array2<u8>,
    pub pruned_rows: Vec<String>,
    pub pruned_cols: Vec<String>,
}

impl BinaryAdjacency {
    /// Prunes all-zero rows and columns of an arbitrary 0/1 matrix. Non-zero
    /// entries count as 1.
    pub fn from_matrix(m: &Array2<u8>, rows: Vec<String>, cols: Vec<String>) -> Result<Self> {
        if rows.len() != m.nrows() || cols.len() != m.ncols() {
            return Err(Error::invalid("label count does not match matrix shape"));
        }
        let keep_r: Vec<usize> = (0..m.nrows()).filter(|&i| m.row(i).iter().any(|&v| v != 0)).collect();
        let keep_c: Vec<usize> = (0..m.ncols()).filter(|&j| m.column(j).iter().any(|&v| v != 0)).collect();
        let pruned_rows = (0..m.nrows()).filter(|i| !keep_r.contains(i)).map(|i| rows[i].clone()).collect();
        let pruned_cols = (0..m.ncols()).filter(|j| !keep_c.contains(j)).map(|j| cols[j].clone()).collect();
        let out = Array2::from_shape_fn((keep_r.len(), keep_c.len()), |(i, j)| u8::from(m[[keep_r[i], keep_c[j]]] != 0));
        Ok(BinaryAdjacency {
            window: None,
            kind: None,
            rows: keep_r.iter().map(|&i| rows[i].clone()).collect(),
            cols: keep_c.iter().map(|&j| cols[j].clone()).collect(),
            m: out,
            pruned_rows,
            pruned_cols,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.m.dim()
    }
}

/// M_cs = 1 iff RCA_cs ≥ r_star, then zero rows/columns are dropped.
pub fn binarize<T: Scalar>(rca: &RcaMatrix<T>, r_star: T) -> Result<BinaryAdjacency> {
    if !(r_star > T::zero()) || !r_star.is_finite() {
        return Err(Error::invalid(format!("RCA threshold must be positive, got {r_star}")));
    }
    let raw = rca.values.mapv(|v| u8::from(v >= r_star));
    let mut out = BinaryAdjacency::from_matrix(&raw, rca.rows.clone(), rca.cols.clone())?;
    out.window = rca.window;
    out.kind = rca.kind;
    Ok(out)
}

/// Diversity k_c = Σ_s M_cs and adjusted ubiquity k'_s = Σ_c M_cs / k_c.
pub fn degree_vectors<T: Scalar>(m: &BinaryAdjacency) -> Result<(Vec<T>, Vec<T>)> {
    let k: Vec<T> = m
        .m
        .axis_iter(Axis(0))
        .map(|row| T::from_count(row.iter().map(|&v| u64::from(v)).sum()))
        .collect();
    if k.iter().any(|v| *v == T::zero()) {
        return Err(Error::invalid("adjacency has an empty row; prune first"));
    }
    let kp: Vec<T> = m
        .m
        .axis_iter(Axis(1))
        .map(|col| col.iter().zip(&k).filter(|(&v, _)| v != 0).map(|(_, &kc)| T::one() / kc).sum())
        .collect();
    if kp.iter().any(|v| *v == T::zero()) {
        return Err(Error::invalid("adjacency has an empty column; prune first"));
    }
    Ok((k, kp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn labels(n: usize, p: &str) -> Vec<String> {
        (0..n).map(|i| format!("{p}{i}")).collect()
    }

    #[test]
    fn two_by_two() {
        let x = array![[4.0f64, 1.0], [1.0, 4.0]];
        let (r, _, _) = rca_values(&x).unwrap();
        // share-ratio form
        assert!((r[[0, 0]] - (4.0 / 5.0) / (5.0 / 10.0)).abs() < 1e-15);
        assert!((r[[0, 0]] - 1.6).abs() < 1e-15 && (r[[0, 1]] - 0.4).abs() < 1e-15);
        assert!((r[[1, 0]] - 0.4).abs() < 1e-15 && (r[[1, 1]] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn uniform_is_one() {
        let x = Array2::from_elem((3, 4), 7.0f64);
        let (r, _, _) = rca_values(&x).unwrap();
        assert!(r.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_row_flagged() {
        let x = array![[1.0f64, 2.0], [0.0, 0.0], [3.0, 1.0]];
        let (r, zr, zc) = rca_values(&x).unwrap();
        assert_eq!(zr, vec![false, true, false]);
        assert_eq!(zc, vec![false, false]);
        assert!(r.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_zero_rejected() {
        assert!(rca_values(&Array2::<f64>::zeros((2, 2))).is_err());
        assert!(rca_values(&array![[1.0, -1.0]]).is_err());
    }

    #[test]
    fn threshold_and_pruning() {
        let rca = RcaMatrix::from_counts(&array![[4.0, 1.0], [1.0, 4.0]], labels(2, "c"), labels(2, "s")).unwrap();
        let m = binarize(&rca, 1.0).unwrap();
        assert_eq!(m.m, array![[1, 0], [0, 1]]);

        let eq = RcaMatrix::<f64> {
            window: None,
            kind: None,
            rows: labels(2, "c"),
            cols: labels(2, "s"),
            values: array![[1.0, 0.5], [0.2, 0.3]],
            zero_rows: vec![false; 2],
            zero_cols: vec![false; 2],
        };
        let m = binarize(&eq, 1.0).unwrap();
        assert_eq!(m.m, array![[1]]);
        assert_eq!(m.rows, vec!["c0"]);
        assert_eq!(m.pruned_rows, vec!["c1"]);
        assert_eq!(m.pruned_cols, vec!["s1"]);
        assert!(binarize(&eq, 0.0).is_err());
    }

    #[test]
    fn degrees() {
        let m = BinaryAdjacency::from_matrix(&array![[1, 1], [1, 0]], labels(2, "c"), labels(2, "s")).unwrap();
        let (k, kp) = degree_vectors::<f64>(&m).unwrap();
        assert_eq!(k, vec![2.0, 1.0]);
        assert_eq!(kp, vec![1.5, 0.5]);

        let one = BinaryAdjacency::from_matrix(&array![[1]], labels(1, "c"), labels(1, "s")).unwrap();
        assert_eq!(degree_vectors::<f64>(&one).unwrap(), (vec![1.0], vec![1.0]));

        let full = BinaryAdjacency::from_matrix(&Array2::from_elem((3, 5), 1), labels(3, "c"), labels(5, "s")).unwrap();
        let (k, kp) = degree_vectors::<f64>(&full).unwrap();
        assert!(k.iter().all(|&v| v == 5.0));
        assert!(kp.iter().all(|&v| (v - 0.6).abs() < 1e-15));
    }
}
