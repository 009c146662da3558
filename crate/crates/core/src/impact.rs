//! Network-normalised citation score (NBNC) and the CD disruption index.
//!
//! For a focal work `f` and year offset `t`, the yearly term is
//!
//! ```text
//! ĉ_t = N_{f;t} · c_t / Σ_j γ^t(j)
//! ```
//!
//! where `c_t` counts citers of `f` published `t` years after it, the sum runs
//! over the co-cited bag of those citers (size `N_{f;t}`), and `γ^t(j)` is the
//! number of citations `j` receives `t` years after its own publication. NBNC
//! is the sum of `ĉ_t` over `t = 0..=T`.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CitationCorpus, CocitationMode, WorkIdx};
use crate::error::Result;
use crate::scalar::Scalar;

pub const DEFAULT_HORIZON: u32 = 10;

/// Which year a co-cited work's γ^t is evaluated at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaReference {
    /// `t` years after the co-cited work's own publication.
    #[default]
    OwnAge,
    /// The calendar year `pub_year(f) + t` of the focal work.
    FocalCalendar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NbncOptions {
    pub horizon: u32,
    pub cocitation: CocitationMode,
    pub gamma_reference: GammaReference,
}

impl Default for NbncOptions {
    fn default() -> Self {
        NbncOptions {
            horizon: DEFAULT_HORIZON,
            cocitation: CocitationMode::Multiset,
            gamma_reference: GammaReference::OwnAge,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NbncScore<T> {
    pub work: WorkIdx,
    pub horizon: u32,
    pub value: T,
    pub yearly_terms: Vec<T>,
    /// The horizon runs past the last year present in the corpus.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdScore<T> {
    pub work: WorkIdx,
    pub horizon: u32,
    pub value: T,
    pub c_x: u64,
    pub c_y: u64,
    pub c_refs: u64,
    pub zero_denominator: bool,
    pub truncated: bool,
}

impl<T> CdScore<T> {
    pub fn c_total(&self) -> u64 {
        self.c_x + self.c_y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BreakthroughClass {
    #[serde(rename = "DI")]
    Disruptive,
    #[serde(rename = "CN")]
    Consolidating,
}

impl BreakthroughClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BreakthroughClass::Disruptive => "DI",
            BreakthroughClass::Consolidating => "CN",
        }
    }
}

impl std::fmt::Display for BreakthroughClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BreakthroughClass {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DI" => Ok(BreakthroughClass::Disruptive),
            "CN" => Ok(BreakthroughClass::Consolidating),
            other => Err(crate::Error::invalid(format!("unknown class `{other}`"))),
        }
    }
}

/// Disruptive iff CD is strictly positive.
pub fn classify<T: Scalar>(cd: T) -> BreakthroughClass {
    if cd > T::zero() {
        BreakthroughClass::Disruptive
    } else {
        BreakthroughClass::Consolidating
    }
}

fn is_truncated(corpus: &CitationCorpus, focal: WorkIdx, horizon: u32) -> bool {
    match corpus.year_span() {
        Some((_, last)) => i64::from(corpus.year(focal)) + i64::from(horizon) > i64::from(last),
        None => false,
    }
}

/// γ^t(j) for every work and every t up to the horizon, own-age convention.
struct GammaTable {
    width: usize,
    counts: Vec<u32>,
}

impl GammaTable {
    fn build(corpus: &CitationCorpus, horizon: u32) -> Self {
        let width = horizon as usize + 1;
        let mut counts = vec![0u32; corpus.len() * width];
        for citer in corpus.indices() {
            let y = corpus.year(citer);
            for &r in corpus.references(citer) {
                let off = y - corpus.year(r);
                if off >= 0 && (off as usize) < width {
                    counts[r.get() * width + off as usize] += 1;
                }
            }
        }
        GammaTable { width, counts }
    }

    #[inline]
    fn get(&self, work: WorkIdx, t: u32) -> u32 {
        self.counts[work.get() * self.width + t as usize]
    }
}

enum GammaSource<'a> {
    Table(&'a GammaTable),
    Direct,
}

impl GammaSource<'_> {
    fn gamma(&self, corpus: &CitationCorpus, opts: &NbncOptions, j: WorkIdx, focal_year: i32, t: u32) -> u64 {
        match (self, opts.gamma_reference) {
            (GammaSource::Table(tab), GammaReference::OwnAge) => u64::from(tab.get(j, t)),
            (_, GammaReference::OwnAge) => u64::from(corpus.citations_in_year(j, corpus.year(j) + t as i32)),
            (_, GammaReference::FocalCalendar) => u64::from(corpus.citations_in_year(j, focal_year + t as i32)),
        }
    }
}

fn nbnc_inner<T: Scalar>(
    corpus: &CitationCorpus,
    focal: WorkIdx,
    opts: &NbncOptions,
    source: &GammaSource<'_>,
) -> NbncScore<T> {
    let width = opts.horizon as usize + 1;
    let base = corpus.year(focal);
    let mut cites = vec![0u64; width];
    let mut bags: Vec<Vec<WorkIdx>> = vec![Vec::new(); width];
    for &citer in corpus.citers(focal) {
        let off = corpus.year(citer) - base;
        if off < 0 || off as usize >= width {
            continue;
        }
        cites[off as usize] += 1;
        bags[off as usize].extend(corpus.references(citer).iter().copied().filter(|&r| r != focal));
    }
    let mut yearly_terms = Vec::with_capacity(width);
    for (t, bag) in bags.iter_mut().enumerate() {
        let c = cites[t];
        if opts.cocitation == CocitationMode::Set {
            bag.sort_unstable();
            bag.dedup();
        }
        let n = bag.len() as u64;
        let denom: u64 = bag
            .iter()
            .map(|&j| source.gamma(corpus, opts, j, base, t as u32))
            .sum();
        let term = if c == 0 || denom == 0 {
            T::zero()
        } else {
            T::from_count(n * c) / T::from_count(denom)
        };
        yearly_terms.push(term);
    }
    let value = yearly_terms.iter().fold(T::zero(), |acc, &x| acc + x);
    NbncScore {
        work: focal,
        horizon: opts.horizon,
        value,
        yearly_terms,
        truncated: is_truncated(corpus, focal, opts.horizon),
    }
}

/// NBNC of a single work.
pub fn nbnc<T: Scalar>(corpus: &CitationCorpus, focal: WorkIdx, opts: &NbncOptions) -> Result<NbncScore<T>> {
    corpus.check(focal)?;
    Ok(nbnc_inner(corpus, focal, opts, &GammaSource::Direct))
}

fn works_in(corpus: &CitationCorpus, years: &RangeInclusive<i32>) -> Vec<WorkIdx> {
    corpus
        .years()
        .filter(|(y, _)| years.contains(y))
        .flat_map(|(_, w)| w.iter().copied())
        .collect()
}

/// NBNC for every work published in `years`; identical to calling [`nbnc`]
/// on each work.
pub fn nbnc_all<T: Scalar>(
    corpus: &CitationCorpus,
    opts: &NbncOptions,
    years: RangeInclusive<i32>,
) -> BTreeMap<WorkIdx, NbncScore<T>> {
    let works = works_in(corpus, &years);
    if works.is_empty() {
        return BTreeMap::new();
    }
    let table = (opts.gamma_reference == GammaReference::OwnAge).then(|| GammaTable::build(corpus, opts.horizon));
    let source = match &table {
        Some(t) => GammaSource::Table(t),
        None => GammaSource::Direct,
    };
    works
        .par_iter()
        .map(|&w| (w, nbnc_inner(corpus, w, opts, &source)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn cites_any(sorted_refs: &[WorkIdx], targets: &[WorkIdx]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < sorted_refs.len() && j < targets.len() {
        match sorted_refs[i].cmp(&targets[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// CD index over citers published within `horizon` years of the focal work.
///
/// `c_refs` counts distinct works in the same window that cite at least one of
/// the focal work's references without citing the focal work itself.
pub fn cd_index<T: Scalar>(corpus: &CitationCorpus, focal: WorkIdx, horizon: u32) -> Result<CdScore<T>> {
    corpus.check(focal)?;
    let lo = corpus.year(focal);
    let hi = lo + horizon as i32;
    let in_window = |w: WorkIdx| {
        let y = corpus.year(w);
        y >= lo && y <= hi
    };
    let refs = corpus.references(focal);
    let (mut c_x, mut c_y) = (0u64, 0u64);
    for &citer in corpus.citers(focal) {
        if !in_window(citer) {
            continue;
        }
        if cites_any(corpus.references(citer), refs) {
            c_y += 1;
        } else {
            c_x += 1;
        }
    }
    let mut others: Vec<WorkIdx> = refs
        .iter()
        .flat_map(|&r| corpus.citers(r).iter().copied())
        .filter(|&w| w != focal && in_window(w) && corpus.references(w).binary_search(&focal).is_err())
        .collect();
    others.sort_unstable();
    others.dedup();
    let c_refs = others.len() as u64;

    let denom = c_x + c_y + c_refs;
    let value = if denom == 0 {
        T::zero()
    } else {
        (T::from_count(c_x) - T::from_count(c_y)) / T::from_count(denom)
    };
    Ok(CdScore {
        work: focal,
        horizon,
        value,
        c_x,
        c_y,
        c_refs,
        zero_denominator: denom == 0,
        truncated: is_truncated(corpus, focal, horizon),
    })
}

pub fn cd_all<T: Scalar>(
    corpus: &CitationCorpus,
    horizon: u32,
    years: RangeInclusive<i32>,
) -> BTreeMap<WorkIdx, CdScore<T>> {
    works_in(corpus, &years)
        .par_iter()
        .map(|&w| (w, cd_index(corpus, w, horizon).expect("index from corpus")))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Both scores for one work.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpactScores<T> {
    pub nbnc: NbncScore<T>,
    pub cd: CdScore<T>,
}

impl<T: Scalar> ImpactScores<T> {
    pub fn class(&self) -> BreakthroughClass {
        classify(self.cd.value)
    }
}

/// NBNC and CD for every work in `years`, keyed by work.
pub fn score_all<T: Scalar>(
    corpus: &CitationCorpus,
    opts: &NbncOptions,
    years: RangeInclusive<i32>,
) -> BTreeMap<WorkIdx, ImpactScores<T>> {
    let nbnc = nbnc_all::<T>(corpus, opts, years.clone());
    let mut cd = cd_all::<T>(corpus, opts.horizon, years);
    nbnc.into_iter()
        .map(|(w, n)| {
            let c = cd.remove(&w).expect("same work set");
            (w, ImpactScores { nbnc: n, cd: c })
        })
        .collect()
}
