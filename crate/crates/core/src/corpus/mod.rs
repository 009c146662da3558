//! Immutable citation graph with per-work labels and temporal queries.
//!
//! Works are addressed internally by a dense [`WorkIdx`] assigned in ingestion
//! order. Both adjacency directions are stored in compressed sparse row form
//! with neighbour lists sorted by index, so every traversal is deterministic.

mod ingest;
mod path;
mod snapshot;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{ingest_files, ingest_works, CorpusBuilder, IngestReport, IngestSchema, Rejection};
pub use path::FieldPath;
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

/// Dense index of a work inside a [`CitationCorpus`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(transparent)]
pub struct WorkIdx(pub u32);

impl WorkIdx {
    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

pub type SubfieldId = u32;

/// ISO 3166-1 alpha-2 country code, stored upper-case.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    pub fn as_str(&self) -> &str {
        // constructed only from ASCII letters
        std::str::from_utf8(&self.0).expect("ascii country code")
    }

    pub fn bytes(self) -> [u8; 2] {
        self.0
    }

    pub fn from_bytes(b: [u8; 2]) -> Option<Self> {
        if b.iter().all(u8::is_ascii_alphabetic) {
            Some(CountryCode([b[0].to_ascii_uppercase(), b[1].to_ascii_uppercase()]))
        } else {
            None
        }
    }
}

impl FromStr for CountryCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.trim().as_bytes();
        if b.len() != 2 {
            return Err(Error::invalid(format!("country code `{s}` is not two letters")));
        }
        CountryCode::from_bytes([b[0], b[1]])
            .ok_or_else(|| Error::invalid(format!("country code `{s}` is not alphabetic")))
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CountryCode({})", self.as_str())
    }
}

impl Serialize for CountryCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A single scholarly work as handed to the corpus builder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkRecord {
    pub work_id: String,
    pub pub_year: i32,
    pub references: Vec<String>,
    pub subfield: Option<SubfieldId>,
    pub countries: Vec<CountryCode>,
}

impl WorkRecord {
    pub fn new(work_id: impl Into<String>, pub_year: i32) -> Self {
        WorkRecord {
            work_id: work_id.into(),
            pub_year,
            references: Vec::new(),
            subfield: None,
            countries: Vec::new(),
        }
    }

    pub fn with_references<I, S>(mut self, refs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.references = refs.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_subfield(mut self, subfield: SubfieldId) -> Self {
        self.subfield = Some(subfield);
        self
    }

    pub fn with_countries(mut self, countries: impl IntoIterator<Item = CountryCode>) -> Self {
        self.countries = countries.into_iter().collect();
        self
    }
}

/// How often a co-cited work is counted when it appears alongside the focal
/// work in several citers' reference lists.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CocitationMode {
    /// Once per citing reference list.
    #[default]
    Multiset,
    /// Once per distinct co-cited work.
    Set,
}

/// Compressed sparse row adjacency.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Csr {
    pub(crate) offsets: Vec<u64>,
    pub(crate) targets: Vec<WorkIdx>,
}

impl Csr {
    #[inline]
    fn row(&self, i: usize) -> &[WorkIdx] {
        let lo = self.offsets[i] as usize;
        let hi = self.offsets[i + 1] as usize;
        &self.targets[lo..hi]
    }

    /// Builds the transpose; rows of the result come out sorted because
    /// sources are visited in ascending order.
    fn transpose(&self, n: usize) -> Csr {
        let mut counts = vec![0u64; n + 1];
        for t in &self.targets {
            counts[t.get() + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut targets = vec![WorkIdx(0); self.targets.len()];
        for src in 0..n {
            for &dst in self.row(src) {
                let slot = &mut fill[dst.get()];
                targets[*slot as usize] = WorkIdx(src as u32);
                *slot += 1;
            }
        }
        Csr { offsets, targets }
    }
}

/// Immutable citation network. Safe to share across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CitationCorpus {
    ids: Vec<String>,
    lookup: HashMap<String, WorkIdx>,
    years: Vec<i32>,
    subfields: Vec<Option<SubfieldId>>,
    countries: Vec<Vec<CountryCode>>,
    out_adj: Csr,
    in_adj: Csr,
    year_index: BTreeMap<i32, Vec<WorkIdx>>,
    backdated: u64,
}

/// Raw columns of a corpus; the out-adjacency rows must already be sorted,
/// deduplicated and free of self references.
pub(crate) struct CorpusParts {
    pub ids: Vec<String>,
    pub years: Vec<i32>,
    pub subfields: Vec<Option<SubfieldId>>,
    pub countries: Vec<Vec<CountryCode>>,
    pub out_adj: Csr,
}

impl CitationCorpus {
    pub(crate) fn from_parts(parts: CorpusParts) -> Result<Self> {
        let n = parts.ids.len();
        if parts.years.len() != n || parts.subfields.len() != n || parts.countries.len() != n {
            return Err(Error::invalid("corpus columns have mismatched lengths"));
        }
        if parts.out_adj.offsets.len() != n + 1 {
            return Err(Error::invalid("adjacency offsets do not match work count"));
        }
        let mut lookup = HashMap::with_capacity(n);
        for (i, id) in parts.ids.iter().enumerate() {
            if lookup.insert(id.clone(), WorkIdx(i as u32)).is_some() {
                return Err(Error::invalid(format!("duplicate work id `{id}`")));
            }
        }
        let in_adj = parts.out_adj.transpose(n);
        let mut year_index: BTreeMap<i32, Vec<WorkIdx>> = BTreeMap::new();
        for (i, &y) in parts.years.iter().enumerate() {
            year_index.entry(y).or_default().push(WorkIdx(i as u32));
        }
        let mut backdated = 0;
        for src in 0..n {
            for &dst in parts.out_adj.row(src) {
                if parts.years[src] < parts.years[dst.get()] {
                    backdated += 1;
                }
            }
        }
        Ok(CitationCorpus {
            ids: parts.ids,
            lookup,
            years: parts.years,
            subfields: parts.subfields,
            countries: parts.countries,
            out_adj: parts.out_adj,
            in_adj,
            year_index,
            backdated,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.targets.len()
    }

    pub fn indices(&self) -> impl Iterator<Item = WorkIdx> + '_ {
        (0..self.ids.len() as u32).map(WorkIdx)
    }

    pub fn index_of(&self, work_id: &str) -> Option<WorkIdx> {
        self.lookup.get(work_id).copied()
    }

    pub fn lookup(&self, work_id: &str) -> Result<WorkIdx> {
        self.index_of(work_id)
            .ok_or_else(|| Error::UnknownWork(work_id.to_string()))
    }

    pub(crate) fn check(&self, idx: WorkIdx) -> Result<()> {
        if idx.get() < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownWork(format!("#{}", idx.0)))
        }
    }

    pub fn id(&self, idx: WorkIdx) -> &str {
        &self.ids[idx.get()]
    }

    pub fn year(&self, idx: WorkIdx) -> i32 {
        self.years[idx.get()]
    }

    pub fn subfield(&self, idx: WorkIdx) -> Option<SubfieldId> {
        self.subfields[idx.get()]
    }

    pub fn countries(&self, idx: WorkIdx) -> &[CountryCode] {
        &self.countries[idx.get()]
    }

    /// Works cited by `idx`, sorted by index.
    pub fn references(&self, idx: WorkIdx) -> &[WorkIdx] {
        self.out_adj.row(idx.get())
    }

    /// Works citing `idx`, sorted by index.
    pub fn citers(&self, idx: WorkIdx) -> &[WorkIdx] {
        self.in_adj.row(idx.get())
    }

    pub fn works_in_year(&self, year: i32) -> &[WorkIdx] {
        self.year_index.get(&year).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn years(&self) -> impl Iterator<Item = (i32, &[WorkIdx])> + '_ {
        self.year_index.iter().map(|(y, w)| (*y, w.as_slice()))
    }

    /// First and last publication year present in the corpus.
    pub fn year_span(&self) -> Option<(i32, i32)> {
        let first = *self.year_index.keys().next()?;
        let last = *self.year_index.keys().next_back()?;
        Some((first, last))
    }

    /// Citation edges whose citing work predates the cited one.
    pub fn backdated_citations(&self) -> u64 {
        self.backdated
    }

    pub(crate) fn out_csr(&self) -> &Csr {
        &self.out_adj
    }

    /// Per-year citation counts γ^t for t = 0..=horizon, measured from the
    /// work's own publication year.
    pub fn yearly_citation_series(&self, work: WorkIdx, horizon: u32) -> Result<YearlyCitationSeries> {
        self.check(work)?;
        let base = self.year(work);
        let mut gamma = vec![0u32; horizon as usize + 1];
        let mut backdated = 0;
        for &c in self.citers(work) {
            let offset = self.year(c) - base;
            if offset < 0 {
                backdated += 1;
            } else if offset as u32 <= horizon {
                gamma[offset as usize] += 1;
            }
        }
        Ok(YearlyCitationSeries { work, gamma, backdated })
    }

    /// Number of citations `work` receives from works published in `year`.
    pub fn citations_in_year(&self, work: WorkIdx, year: i32) -> u32 {
        self.citers(work).iter().filter(|&&c| self.year(c) == year).count() as u32
    }

    /// Works co-cited with `focal` by citers published `t` years after it.
    pub fn cocited_bag(&self, focal: WorkIdx, t: u32, mode: CocitationMode) -> Result<CocitedBag> {
        self.check(focal)?;
        let year = self.year(focal) + t as i32;
        let mut all: Vec<WorkIdx> = Vec::new();
        for &citer in self.citers(focal) {
            if self.year(citer) != year {
                continue;
            }
            all.extend(self.references(citer).iter().copied().filter(|&r| r != focal));
        }
        all.sort_unstable();
        let mut members: Vec<(WorkIdx, u32)> = Vec::new();
        for w in all {
            match members.last_mut() {
                Some((last, n)) if *last == w => {
                    if mode == CocitationMode::Multiset {
                        *n += 1;
                    }
                }
                _ => members.push((w, 1)),
            }
        }
        let size = members.iter().map(|&(_, n)| u64::from(n)).sum();
        Ok(CocitedBag { focal, t, members, size })
    }
}

/// γ^t for one work.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YearlyCitationSeries {
    pub work: WorkIdx,
    pub gamma: Vec<u32>,
    /// Citers published before the work itself; excluded from `gamma`.
    pub backdated: u32,
}

impl YearlyCitationSeries {
    pub fn total(&self) -> u64 {
        self.gamma.iter().map(|&g| u64::from(g)).sum()
    }
}

/// Multiset of co-cited works with multiplicities, ordered by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CocitedBag {
    pub focal: WorkIdx,
    pub t: u32,
    pub members: Vec<(WorkIdx, u32)>,
    /// N_{f;t}: total multiplicity.
    pub size: u64,
}

impl CocitedBag {
    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn multiplicity(&self, work: WorkIdx) -> u32 {
        self.members
            .binary_search_by_key(&work, |&(w, _)| w)
            .map(|i| self.members[i].1)
            .unwrap_or(0)
    }
}
