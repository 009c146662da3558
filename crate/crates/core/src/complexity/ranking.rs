use std::cmp::Ordering;

use super::genepy::{GenepyResult, Side};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct RankEntry<T> {
    pub label: String,
    /// `None` for pruned entities.
    pub score: Option<T>,
    pub rank: usize,
    pub tie_rank: usize,
    pub pruned: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankTable<T> {
    pub side: Side,
    pub entries: Vec<RankEntry<T>>,
}

impl<T: Scalar> RankTable<T> {
    pub fn rank_of(&self, label: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.rank)
    }

    pub fn retained(&self) -> impl Iterator<Item = &RankEntry<T>> {
        self.entries.iter().filter(|e| !e.pruned)
    }
}

/// Ordinal and competition ranks for `scores` (descending). Scores within a
/// relative tie tolerance of the group leader share a competition rank; the
/// ordinal rank breaks ties by input position.
pub fn rank_scores<T: Scalar>(n: usize, scores: &[T]) -> (Vec<usize>, Vec<usize>) {
    debug_assert_eq!(n, scores.len());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let scale = scores.iter().map(|s| s.abs()).fold(T::zero(), T::max).max(T::min_positive_value());
    let tol = T::tie_tolerance() * scale;
    // ties are grouped before the label tiebreak so near-equal scores that
    // straddle a float boundary still land in input order
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if (scores[g[0]] - scores[i]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut ranks = vec![0; n];
    let mut tie_ranks = vec![0; n];
    let mut next = 1;
    for mut g in groups {
        g.sort_unstable();
        let lead = next;
        for i in g {
            ranks[i] = next;
            tie_ranks[i] = lead;
            next += 1;
        }
    }
    (ranks, tie_ranks)
}

/// Entities by rank, pruned ones appended with a shared trailing rank.
pub fn rank_table<T: Scalar>(result: &GenepyResult<T>) -> RankTable<T> {
    let mut entries: Vec<RankEntry<T>> = (0..result.labels.len())
        .map(|i| RankEntry {
            label: result.labels[i].clone(),
            score: Some(result.scores[i]),
            rank: result.ranks[i],
            tie_rank: result.tie_ranks[i],
            pruned: false,
        })
        .collect();
    entries.sort_by_key(|e| e.rank);
    let trailing = result.labels.len() + 1;
    entries.extend(result.pruned.iter().map(|l| RankEntry {
        label: l.clone(),
        score: None,
        rank: trailing,
        tie_rank: trailing,
        pruned: true,
    }));
    RankTable { side: result.side, entries }
}
