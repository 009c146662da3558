mod common;

use breakthru::complexity::{
    binarize, genepy_scores, proximity_matrices, rank_scores, BinaryAdjacency, GenepyOptions, RcaMatrix,
};
use common::{proximity_oracle, rca_shares};
use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

fn random_counts(rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (r, c) = (rng.gen_range(1..=25), rng.gen_range(1..=25));
    let zero_p = rng.gen_range(0.0..0.8);
    Array2::from_shape_fn((r, c), |_| if rng.gen_bool(zero_p) { 0.0 } else { f64::from(rng.gen_range(1..500u32)) })
}

#[test]
fn rca_weighted_mean_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 100 {
        let x = random_counts(&mut rng);
        if x.sum() == 0.0 {
            continue;
        }
        let (r, c) = x.dim();
        let m = RcaMatrix::from_counts(&x, labels("c", r), labels("s", c)).unwrap();
        let total = x.sum();
        for s in 0..c {
            if m.zero_cols[s] {
                assert!(m.values.column(s).iter().all(|&v| v == 0.0));
                continue;
            }
            let mean: f64 = (0..r).map(|i| x.row(i).sum() / total * m.values[[i, s]]).sum();
            assert!((mean - 1.0).abs() <= 1e-12, "column {s}: {mean}");
        }
        let rows: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
        let want = rca_shares(&rows);
        for i in 0..r {
            for s in 0..c {
                let (a, b) = (m.values[[i, s]], want[i][s]);
                assert!((a - b).abs() <= 1e-12 * b.max(1.0));
            }
        }
        checked += 1;
    }
}

#[test]
fn count_scaling_leaves_rca_m_and_scores_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    while checked < 40 {
        let x = random_counts(&mut rng);
        if x.sum() == 0.0 {
            continue;
        }
        let (r, c) = x.dim();
        let a = RcaMatrix::from_counts(&x, labels("c", r), labels("s", c)).unwrap();
        let ma = binarize(&a, 1.0).unwrap();
        if ma.is_empty() {
            continue;
        }
        let (ca, sa) = genepy_scores::<f64>(&ma, &GenepyOptions::default()).unwrap();
        // integer factors keep every product exact, so RCA must match bit for bit
        for k in [3.0, 17.0, 1024.0] {
            let b = RcaMatrix::from_counts(&x.mapv(|v| v * k), labels("c", r), labels("s", c)).unwrap();
            assert_eq!(a.values, b.values);
            let mb = binarize(&b, 1.0).unwrap();
            assert_eq!(ma, mb);
            let (cb, sb) = genepy_scores::<f64>(&mb, &GenepyOptions::default()).unwrap();
            assert_eq!(ca.scores, cb.scores);
            assert_eq!(sa.scores, sb.scores);
        }
        // arbitrary real factors only perturb the last bits
        let k = rng.gen_range(0.01..100.0);
        let b = RcaMatrix::from_counts(&x.mapv(|v| v * k), labels("c", r), labels("s", c)).unwrap();
        for (p, q) in a.values.iter().zip(&b.values) {
            assert!((p - q).abs() <= 1e-12 * p.max(1.0));
        }
        checked += 1;
    }
}

fn random_binary(rng: &mut ChaCha8Rng, max: usize) -> Option<BinaryAdjacency> {
    let (r, c) = (rng.gen_range(2..=max), rng.gen_range(2..=max));
    let p = rng.gen_range(0.15..0.75);
    let m = Array2::from_shape_fn((r, c), |_| u8::from(rng.gen_bool(p)));
    let adj = BinaryAdjacency::from_matrix(&m, labels("c", r), labels("s", c)).unwrap();
    (!adj.is_empty()).then_some(adj)
}

#[test]
fn proximity_matches_oracle_and_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..60 {
        let Some(adj) = random_binary(&mut rng, 20) else { continue };
        let rows: Vec<Vec<u8>> = adj.m.outer_iter().map(|r| r.to_vec()).collect();
        let (u, v) = proximity_matrices::<f64>(&adj).unwrap();
        let (uo, vo) = proximity_oracle(&rows);
        for (got, want) in [(&u, &uo), (&v, &vo)] {
            let n = got.nrows();
            for i in 0..n {
                assert_eq!(got[[i, i]], 0.0);
                for j in 0..n {
                    assert!(got[[i, j]] >= 0.0);
                    assert!((got[[i, j]] - got[[j, i]]).abs() <= 1e-15);
                    assert!((got[[i, j]] - want[[i, j]]).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn reported_residuals_are_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let Some(adj) = random_binary(&mut rng, 30) else { continue };
        let (u, v) = proximity_matrices::<f64>(&adj).unwrap();
        let (c, s) = genepy_scores::<f64>(&adj, &GenepyOptions::default()).unwrap();
        for (p, res) in [(&u, &c), (&v, &s)] {
            assert!(res.max_residual <= 1e-9);
            for (i, &l) in res.eigenvalues.iter().enumerate() {
                assert!(common::inf_residual(p, res.eigenvectors.column(i), l) <= 1e-9);
            }
        }
    }
}

#[test]
fn permuting_countries_permutes_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 50 {
        let Some(adj) = random_binary(&mut rng, 15) else { continue };
        let n = adj.m.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let pm = Array2::from_shape_fn(adj.m.dim(), |(i, j)| adj.m[[perm[i], j]]);
        let prows: Vec<String> = perm.iter().map(|&i| adj.rows[i].clone()).collect();
        let padj = BinaryAdjacency::from_matrix(&pm, prows, adj.cols.clone()).unwrap();

        let (c, s) = genepy_scores::<f64>(&adj, &GenepyOptions::default()).unwrap();
        let (pc, ps) = genepy_scores::<f64>(&padj, &GenepyOptions::default()).unwrap();
        let scale = c.scores.iter().chain(&s.scores).fold(0.0f64, |m, v| m.max(v.abs()));
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * scale;
        for (i, label) in pc.labels.iter().enumerate() {
            let want = c.score_of(label).unwrap();
            assert!(close(pc.scores[i], want), "{label}: {} vs {want}", pc.scores[i]);
            assert_eq!(pc.tie_ranks[i], c.tie_ranks[c.labels.iter().position(|l| l == label).unwrap()], "{label}: {:?} {:?} / {:?} {:?}", c.labels, c.scores, pc.labels, pc.scores);
        }
        for (a, b) in s.scores.iter().zip(&ps.scores) {
            assert!(close(*a, *b));
        }
        assert_eq!(s.tie_ranks, ps.tie_ranks);
        checked += 1;
    }
}

#[test]
fn complete_bipartite_ties_every_country() {
    for (r, c) in [(2, 2), (3, 5), (7, 4), (12, 12)] {
        let adj = BinaryAdjacency::from_matrix(&Array2::from_elem((r, c), 1u8), labels("c", r), labels("s", c)).unwrap();
        let (cs, ss) = genepy_scores::<f64>(&adj, &GenepyOptions::default()).unwrap();
        assert!(cs.tie_ranks.iter().all(|&t| t == 1), "{r}x{c}: {:?}", cs.scores);
        assert!(ss.tie_ranks.iter().all(|&t| t == 1));
    }
}

fn oracle_composite(adj: &BinaryAdjacency) -> Vec<f64> {
    let (u, _) = proximity_matrices::<f64>(adj).unwrap();
    let (vals, vecs) = common::dense_eigen(&u);
    (0..u.nrows())
        .map(|e| {
            let lin: f64 = (0..2).map(|i| vals[i] * vecs[(e, i)].powi(2)).sum();
            let quad: f64 = (0..2).map(|i| vals[i].powi(2) * vecs[(e, i)].powi(2)).sum();
            lin * lin + 2.0 * quad
        })
        .collect()
}

/// Staircase: country i holds advantage in subfields 0..=i. With the
/// diagonal of U zeroed, the top row loses the self-proximity of its
/// exclusive subfield and drops below the row under it; the ranking must
/// follow the oracle there too.
#[test]
fn staircase_follows_oracle_order() {
    for n in 3..=8 {
        let m = Array2::from_shape_fn((n, n), |(i, j)| u8::from(j <= i));
        let adj = BinaryAdjacency::from_matrix(&m, labels("c", n), labels("s", n)).unwrap();
        let oracle = oracle_composite(&adj);
        let (c, _) = genepy_scores::<f64>(&adj, &GenepyOptions::default()).unwrap();
        for i in 0..n {
            assert!((c.scores[i] - oracle[i]).abs() <= 1e-9 * oracle[i].abs().max(1e-12));
        }
        for i in 1..n - 1 {
            assert!(c.tie_ranks[i] < c.tie_ranks[i - 1], "n={n} row {i}: {:?}", c.scores);
        }
        assert!(oracle[n - 1] < oracle[n - 2]);
    }
}

/// Fixtures where every strict superset outranks its subset.
#[test]
fn nested_fixtures_rank_supersets_higher() {
    let fixtures: Vec<Array2<u8>> = vec![
        ndarray::array![[1, 1, 1, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 1, 0, 1]],
        ndarray::array![[1, 1, 1, 1, 0], [1, 1, 0, 0, 0], [1, 0, 0, 0, 0], [0, 0, 1, 1, 1], [0, 0, 0, 1, 1]],
        ndarray::array![[1, 1, 1, 0, 0, 1], [1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 1, 0], [0, 0, 0, 1, 1, 1], [0, 1, 0, 0, 1, 0]],
    ];
    for (f, m) in fixtures.iter().enumerate() {
        let (r, c) = m.dim();
        let adj = BinaryAdjacency::from_matrix(m, labels("c", r), labels("s", c)).unwrap();
        let oracle = oracle_composite(&adj);
        let (res, _) = genepy_scores::<f64>(&adj, &GenepyOptions::default()).unwrap();
        for a in 0..r {
            for b in 0..r {
                let superset = (0..c).all(|s| m[[a, s]] >= m[[b, s]]) && m.row(a).sum() > m.row(b).sum();
                if superset {
                    assert!(oracle[a] > oracle[b], "fixture {f}: oracle {a} vs {b}");
                    assert!(res.tie_ranks[a] < res.tie_ranks[b], "fixture {f}: {a} vs {b}");
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn rank_scores_are_permutations(scores in prop::collection::vec(0.0f64..10.0, 1..40)) {
        let (ranks, ties) = rank_scores(scores.len(), &scores);
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (1..=scores.len()).collect::<Vec<_>>());
        for i in 0..scores.len() {
            prop_assert!(ties[i] <= ranks[i]);
            for j in 0..scores.len() {
                if scores[i] > scores[j] {
                    prop_assert!(ranks[i] < ranks[j]);
                }
            }
        }
    }
}
