use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::ops::RangeInclusive;
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CitationCorpus, CorpusParts, CountryCode, Csr, FieldPath, SubfieldId, WorkIdx, WorkRecord};
use crate::error::{Error, Result};

/// Maps source JSON fields onto [`WorkRecord`] fields. Defaults follow the
/// OpenAlex works export layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSchema {
    pub id: FieldPath,
    pub year: FieldPath,
    pub references: FieldPath,
    pub subfield: FieldPath,
    pub countries: FieldPath,
}

impl Default for IngestSchema {
    fn default() -> Self {
        let p = |s: &str| s.parse().expect("static field path");
        IngestSchema {
            id: p("id"),
            year: p("publication_year"),
            references: p("referenced_works"),
            subfield: p("primary_topic.subfield.id"),
            countries: p("authorships[].countries[]"),
        }
    }
}

/// Per-reason counters collected while building a corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines_read: u64,
    pub blank_lines: u64,
    pub works: u64,
    pub edges: u64,
    pub malformed_json: u64,
    pub missing_id: u64,
    pub missing_year: u64,
    pub invalid_year: u64,
    pub year_out_of_range: u64,
    pub duplicate_id: u64,
    pub dangling_refs: u64,
    pub duplicate_refs: u64,
    pub self_refs: u64,
    pub invalid_references: u64,
    pub invalid_countries: u64,
    pub unlabeled_subfield: u64,
    pub unattributed: u64,
    pub backdated_citations: u64,
}

impl IngestReport {
    pub fn rejected(&self) -> u64 {
        self.malformed_json
            + self.missing_id
            + self.missing_year
            + self.invalid_year
            + self.year_out_of_range
            + self.duplicate_id
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    DuplicateId,
    YearOutOfRange,
}

/// Single-writer accumulator; references are resolved in [`finish`](Self::finish)
/// once every id is known.
#[derive(Debug)]
pub struct CorpusBuilder {
    years: RangeInclusive<i32>,
    records: Vec<WorkRecord>,
    seen: HashMap<String, WorkIdx>,
    report: IngestReport,
}

impl CorpusBuilder {
    pub fn new(years: RangeInclusive<i32>) -> Self {
        CorpusBuilder {
            years,
            records: Vec::new(),
            seen: HashMap::new(),
            report: IngestReport::default(),
        }
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn push(&mut self, mut record: WorkRecord) -> std::result::Result<WorkIdx, Rejection> {
        if !self.years.contains(&record.pub_year) {
            self.report.year_out_of_range += 1;
            return Err(Rejection::YearOutOfRange);
        }
        if self.seen.contains_key(&record.work_id) {
            self.report.duplicate_id += 1;
            return Err(Rejection::DuplicateId);
        }
        let idx = WorkIdx(self.records.len() as u32);
        self.seen.insert(record.work_id.clone(), idx);
        record.countries.sort_unstable();
        record.countries.dedup();
        if record.subfield.is_none() {
            self.report.unlabeled_subfield += 1;
        }
        if record.countries.is_empty() {
            self.report.unattributed += 1;
        }
        self.records.push(record);
        Ok(idx)
    }

    /// Parses one JSON line with `schema` and pushes the result. Problems are
    /// tallied in the report rather than returned.
    pub fn push_json_line(&mut self, line: &str, schema: &IngestSchema) {
        self.report.lines_read += 1;
        if line.trim().is_empty() {
            self.report.blank_lines += 1;
            return;
        }
        let value: Value = match serde_json::from_str(line) {
            Ok(v @ Value::Object(_)) => v,
            _ => {
                self.report.malformed_json += 1;
                return;
            }
        };
        let Some(work_id) = schema.id.first(&value).and_then(scalar_string) else {
            self.report.missing_id += 1;
            return;
        };
        let year = match schema.year.first(&value) {
            None => {
                self.report.missing_year += 1;
                return;
            }
            Some(v) => match v.as_i64().and_then(|y| i32::try_from(y).ok()) {
                Some(y) => y,
                None => {
                    self.report.invalid_year += 1;
                    return;
                }
            },
        };
        let mut references = Vec::new();
        for r in schema.references.resolve(&value) {
            match r {
                Value::Array(items) => {
                    for item in items {
                        match item.as_str() {
                            Some(s) => references.push(s.to_string()),
                            None => self.report.invalid_references += 1,
                        }
                    }
                }
                Value::String(s) => references.push(s.clone()),
                _ => self.report.invalid_references += 1,
            }
        }
        let subfield = schema.subfield.first(&value).and_then(parse_subfield);
        let mut countries = Vec::new();
        for c in schema.countries.resolve(&value) {
            match c.as_str().map(str::parse::<CountryCode>) {
                Some(Ok(code)) => countries.push(code),
                _ => self.report.invalid_countries += 1,
            }
        }
        let record = WorkRecord {
            work_id,
            pub_year: year,
            references,
            subfield,
            countries,
        };
        let _ = self.push(record);
    }

    pub fn finish(self) -> (CitationCorpus, IngestReport) {
        let CorpusBuilder { records, seen, mut report, .. } = self;
        let n = records.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u64);
        let mut targets = Vec::new();
        let mut ids = Vec::with_capacity(n);
        let mut years = Vec::with_capacity(n);
        let mut subfields = Vec::with_capacity(n);
        let mut countries = Vec::with_capacity(n);
        for (i, rec) in records.into_iter().enumerate() {
            let mut refs = rec.references;
            refs.sort_unstable();
            let before = refs.len();
            refs.dedup();
            report.duplicate_refs += (before - refs.len()) as u64;
            let start = targets.len();
            for r in &refs {
                match seen.get(r) {
                    Some(&j) if j.get() == i => report.self_refs += 1,
                    Some(&j) => targets.push(j),
                    None => report.dangling_refs += 1,
                }
            }
            targets[start..].sort_unstable();
            offsets.push(targets.len() as u64);
            ids.push(rec.work_id);
            years.push(rec.pub_year);
            subfields.push(rec.subfield);
            countries.push(rec.countries);
        }
        report.works = n as u64;
        report.edges = targets.len() as u64;
        let corpus = CitationCorpus::from_parts(CorpusParts {
            ids,
            years,
            subfields,
            countries,
            out_adj: Csr { offsets, targets },
        })
        .expect("builder enforces unique ids and aligned columns");
        report.backdated_citations = corpus.backdated_citations();
        (corpus, report)
    }
}

fn scalar_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.trim().is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Accepts a bare integer or an id whose trailing path segment is numeric
/// (`https://openalex.org/subfields/3104`).
fn parse_subfield(v: &Value) -> Option<SubfieldId> {
    match v {
        Value::Number(n) => n.as_u64().and_then(|x| u32::try_from(x).ok()),
        Value::String(s) => s.rsplit('/').next()?.trim().parse().ok(),
        _ => None,
    }
}

/// Ingests newline-delimited JSON records from a single reader.
pub fn ingest_works<R: BufRead>(
    reader: R,
    schema: &IngestSchema,
    years: RangeInclusive<i32>,
) -> Result<(CitationCorpus, IngestReport)> {
    let mut builder = CorpusBuilder::new(years);
    feed(&mut builder, reader, schema)?;
    Ok(builder.finish())
}

/// Ingests several files in order; gzip input is detected from its magic bytes.
pub fn ingest_files<P: AsRef<Path>>(
    paths: &[P],
    schema: &IngestSchema,
    years: RangeInclusive<i32>,
) -> Result<(CitationCorpus, IngestReport)> {
    let mut builder = CorpusBuilder::new(years);
    for p in paths {
        let reader = open_maybe_gz(p.as_ref())?;
        feed(&mut builder, reader, schema)?;
    }
    Ok(builder.finish())
}

fn feed<R: BufRead>(builder: &mut CorpusBuilder, mut reader: R, schema: &IngestSchema) -> Result<()> {
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        match std::str::from_utf8(&buf) {
            Ok(line) => builder.push_json_line(line, schema),
            Err(_) => {
                builder.report.lines_read += 1;
                builder.report.malformed_json += 1;
            }
        }
    }
    Ok(())
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut file = File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    let head = std::io::Cursor::new(magic[..n].to_vec());
    let chained = head.chain(file);
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(chained))))
    } else {
        Ok(Box::new(BufReader::new(chained)))
    }
}
