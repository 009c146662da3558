//! Yearly breakthrough selection and the aggregations built on it: subfield
//! time series (raw and scaled by subfield output) and country x subfield
//! panels per time window.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{CitationCorpus, CountryCode, SubfieldId, WorkIdx};
use crate::error::{Error, Result};
use crate::impact::{classify, BreakthroughClass, ImpactScores};
use crate::scalar::Scalar;

pub const DEFAULT_TOP_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct BreakthroughRecord<T> {
    pub work: WorkIdx,
    pub work_id: String,
    pub year: i32,
    pub subfield: Option<SubfieldId>,
    pub countries: Vec<CountryCode>,
    pub nbnc: T,
    pub cd: T,
    pub class: BreakthroughClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection<T> {
    /// Ordered by year, then by rank within the year.
    pub records: Vec<BreakthroughRecord<T>>,
    /// Number of scored works per year that had any.
    pub scored_per_year: BTreeMap<i32, usize>,
    /// Years in the requested range without a single scored work.
    pub skipped_years: Vec<i32>,
}

impl<T> Selection<T> {
    pub fn in_year(&self, year: i32) -> impl Iterator<Item = &BreakthroughRecord<T>> {
        self.records.iter().filter(move |r| r.year == year)
    }
}

/// `max(1, ceil(q·n))`, treating products within 1e-9 of an integer as that
/// integer so that e.g. 0.07·100 selects 7.
pub fn selection_size(q: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let x = q * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    (k as usize).clamp(1, n)
}

/// Selects the top `q` fraction of works by NBNC in every year of `years`.
/// Ties at the cut go to the lexicographically smaller work id.
pub fn select_breakthroughs<T: Scalar>(
    corpus: &CitationCorpus,
    scores: &BTreeMap<WorkIdx, ImpactScores<T>>,
    q: f64,
    years: RangeInclusive<i32>,
) -> Result<Selection<T>> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("top fraction must lie in (0, 1), got {q}")));
    }
    let mut by_year: BTreeMap<i32, Vec<(WorkIdx, &ImpactScores<T>)>> = BTreeMap::new();
    for (&w, s) in scores {
        let y = corpus.year(w);
        if years.contains(&y) {
            by_year.entry(y).or_default().push((w, s));
        }
    }
    let mut records = Vec::new();
    let mut scored_per_year = BTreeMap::new();
    let mut skipped_years = Vec::new();
    for year in years {
        let Some(mut items) = by_year.remove(&year) else {
            skipped_years.push(year);
            continue;
        };
        scored_per_year.insert(year, items.len());
        items.sort_by(|(wa, a), (wb, b)| {
            b.nbnc
                .value
                .partial_cmp(&a.nbnc.value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| corpus.id(*wa).cmp(corpus.id(*wb)))
        });
        let k = selection_size(q, items.len());
        for (w, s) in items.into_iter().take(k) {
            records.push(BreakthroughRecord {
                work: w,
                work_id: corpus.id(w).to_string(),
                year,
                subfield: corpus.subfield(w),
                countries: corpus.countries(w).to_vec(),
                nbnc: s.nbnc.value,
                cd: s.cd.value,
                class: classify(s.cd.value),
            });
        }
    }
    Ok(Selection { records, scored_per_year, skipped_years })
}

/// Breakthrough counts of one subfield over a contiguous year grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SubfieldSeries<T> {
    pub subfield: SubfieldId,
    pub years: Vec<i32>,
    pub bt: Vec<u64>,
    pub cn: Vec<u64>,
    pub di: Vec<u64>,
    /// All works published in the subfield, breakthrough or not.
    pub totals: Vec<u64>,
    pub scaled_cn: Vec<T>,
    pub scaled_di: Vec<T>,
    /// Years where `totals` is zero and the scaled values were set to 0.
    pub zero_total: Vec<bool>,
}

impl<T: Scalar> SubfieldSeries<T> {
    fn empty(subfield: SubfieldId, years: &[i32]) -> Self {
        let n = years.len();
        SubfieldSeries {
            subfield,
            years: years.to_vec(),
            bt: vec![0; n],
            cn: vec![0; n],
            di: vec![0; n],
            totals: vec![0; n],
            scaled_cn: vec![T::zero(); n],
            scaled_di: vec![T::zero(); n],
            zero_total: vec![false; n],
        }
    }

    /// Phase-plane points (Ñ^CN, Ñ^DI) per year.
    pub fn phase_points(&self) -> Vec<[T; 2]> {
        self.scaled_cn
            .iter()
            .zip(&self.scaled_di)
            .map(|(&c, &d)| [c, d])
            .collect()
    }
}

/// Fills Ñ = N / N_s per year; years with N_s = 0 get 0 and a flag.
pub fn scaled_counts<T: Scalar>(mut series: SubfieldSeries<T>) -> SubfieldSeries<T> {
    for i in 0..series.years.len() {
        let total = series.totals[i];
        series.zero_total[i] = total == 0;
        if total == 0 {
            series.scaled_cn[i] = T::zero();
            series.scaled_di[i] = T::zero();
        } else {
            series.scaled_cn[i] = T::from_count(series.cn[i]) / T::from_count(total);
            series.scaled_di[i] = T::from_count(series.di[i]) / T::from_count(total);
        }
    }
    series
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable<T> {
    pub years: Vec<i32>,
    pub series: BTreeMap<SubfieldId, SubfieldSeries<T>>,
    /// Selected records without a subfield label, per year.
    pub unlabeled: Vec<u64>,
    /// Selected records whose subfield is outside the allowlist, per year.
    pub excluded: Vec<u64>,
}

/// Counts breakthroughs by subfield, year and class, with totals taken from
/// the whole corpus. Without an allowlist every subfield seen in the corpus
/// within `years` gets a series.
pub fn subfield_series<T: Scalar>(
    records: &[BreakthroughRecord<T>],
    corpus: &CitationCorpus,
    years: RangeInclusive<i32>,
    allowlist: Option<&BTreeSet<SubfieldId>>,
) -> SeriesTable<T> {
    let grid: Vec<i32> = years.clone().collect();
    let first = *years.start();
    let mut universe: BTreeSet<SubfieldId> = BTreeSet::new();
    match allowlist {
        Some(a) => universe.extend(a.iter().copied()),
        None => {
            for (y, works) in corpus.years() {
                if years.contains(&y) {
                    universe.extend(works.iter().filter_map(|&w| corpus.subfield(w)));
                }
            }
        }
    }
    let mut series: BTreeMap<SubfieldId, SubfieldSeries<T>> = universe
        .iter()
        .map(|&s| (s, SubfieldSeries::empty(s, &grid)))
        .collect();
    for (y, works) in corpus.years() {
        if !years.contains(&y) {
            continue;
        }
        let i = (y - first) as usize;
        for &w in works {
            if let Some(s) = corpus.subfield(w).and_then(|s| series.get_mut(&s)) {
                s.totals[i] += 1;
            }
        }
    }
    let mut unlabeled = vec![0; grid.len()];
    let mut excluded = vec![0; grid.len()];
    for r in records {
        if !years.contains(&r.year) {
            continue;
        }
        let i = (r.year - first) as usize;
        let Some(sf) = r.subfield else {
            unlabeled[i] += 1;
            continue;
        };
        let Some(s) = series.get_mut(&sf) else {
            excluded[i] += 1;
            continue;
        };
        s.bt[i] += 1;
        match r.class {
            BreakthroughClass::Disruptive => s.di[i] += 1,
            BreakthroughClass::Consolidating => s.cn[i] += 1,
        }
    }
    let series = series.into_iter().map(|(k, s)| (k, scaled_counts(s))).collect();
    SeriesTable { years: grid, series, unlabeled, excluded }
}

/// Inclusive year interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearWindow {
    pub start: i32,
    pub end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if end < start {
            return Err(Error::invalid(format!("empty window {start}-{end}")));
        }
        Ok(YearWindow { start, end })
    }

    pub fn contains(&self, year: i32) -> bool {
        year >= self.start && year <= self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.start, self.end)
    }
}

/// Consecutive windows of `length` years covering `start..=end`; the last
/// window is cut short at `end`.
pub fn window_grid(start: i32, end: i32, length: u32) -> Result<Vec<YearWindow>> {
    if length == 0 || end < start {
        return Err(Error::invalid("window grid needs length > 0 and end >= start"));
    }
    let mut out = Vec::new();
    let mut s = start;
    while s <= end {
        let e = (s + length as i32 - 1).min(end);
        out.push(YearWindow { start: s, end: e });
        s += length as i32;
    }
    Ok(out)
}

/// Row and column universe shared by every panel of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PanelLabels {
    pub countries: Vec<CountryCode>,
    pub subfields: Vec<SubfieldId>,
}

impl PanelLabels {
    pub fn from_records<T>(records: &[BreakthroughRecord<T>], allowlist: Option<&BTreeSet<SubfieldId>>) -> Self {
        let countries: BTreeSet<CountryCode> = records.iter().flat_map(|r| r.countries.iter().copied()).collect();
        let subfields: BTreeSet<SubfieldId> = match allowlist {
            Some(a) => a.clone(),
            None => records.iter().filter_map(|r| r.subfield).collect(),
        };
        PanelLabels {
            countries: countries.into_iter().collect(),
            subfields: subfields.into_iter().collect(),
        }
    }
}

/// Country x subfield breakthrough counts for one window and class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PanelMatrix {
    pub window: YearWindow,
    pub kind: BreakthroughClass,
    pub countries: Vec<CountryCode>,
    pub subfields: Vec<SubfieldId>,
    pub counts: Array2<u64>,
    /// Matching records without any country.
    pub unattributed: u64,
    /// Matching records whose subfield is missing or outside the labels.
    pub unlabeled: u64,
}

impl PanelMatrix {
    pub fn zeros(window: YearWindow, kind: BreakthroughClass, labels: &PanelLabels) -> Self {
        PanelMatrix {
            window,
            kind,
            countries: labels.countries.clone(),
            subfields: labels.subfields.clone(),
            counts: Array2::zeros((labels.countries.len(), labels.subfields.len())),
            unattributed: 0,
            unlabeled: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }

    /// Adds another partial tally over the same labels.
    pub fn merge(&mut self, other: &PanelMatrix) -> Result<()> {
        if self.countries != other.countries || self.subfields != other.subfields || self.kind != other.kind {
            return Err(Error::invalid("cannot merge panels with different labels"));
        }
        self.counts += &other.counts;
        self.unattributed += other.unattributed;
        self.unlabeled += other.unlabeled;
        Ok(())
    }
}

/// Full counting: every country listed on a record receives one unit.
pub fn country_subfield_counts<T>(
    records: &[BreakthroughRecord<T>],
    window: YearWindow,
    kind: BreakthroughClass,
    labels: &PanelLabels,
) -> PanelMatrix {
    let mut panel = PanelMatrix::zeros(window, kind, labels);
    for r in records.iter().filter(|r| r.class == kind && window.contains(r.year)) {
        let col = r.subfield.and_then(|s| labels.subfields.binary_search(&s).ok());
        let Some(col) = col else {
            panel.unlabeled += 1;
            continue;
        };
        if r.countries.is_empty() {
            panel.unattributed += 1;
            continue;
        }
        for c in &r.countries {
            if let Ok(row) = labels.countries.binary_search(c) {
                panel.counts[[row, col]] += 1;
            }
        }
    }
    panel
}
