//! Delimited-text tables written by the pipeline, and their readers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::breakthrough::{BreakthroughRecord, PanelLabels, PanelMatrix, SeriesTable, SubfieldSeries, YearWindow};
use crate::complexity::RankTable;
use crate::corpus::{CitationCorpus, CountryCode, WorkIdx};
use crate::error::{Error, Result};
use crate::impact::{BreakthroughClass, CdScore, ImpactScores, NbncScore};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes files below a root and remembers what was written.
#[derive(Debug)]
pub struct Outputs {
    root: PathBuf,
    written: Vec<OutputFile>,
}

impl Outputs {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Outputs { root, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.written.push(OutputFile { path: rel.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_str(&mut self, rel: &str, text: &str) -> Result<()> {
        self.write(rel, text.as_bytes())
    }

    /// Files written since the last call.
    pub fn take(&mut self) -> Vec<OutputFile> {
        std::mem::take(&mut self.written)
    }
}

fn field(s: &str) -> Result<&str> {
    if s.contains(['\t', '\n', '\r']) {
        return Err(Error::invalid(format!("value {s:?} cannot be written to a tab-separated table")));
    }
    Ok(s)
}

pub fn labels_text<I: IntoIterator<Item = S>, S: std::fmt::Display>(labels: I) -> String {
    labels.into_iter().fold(String::new(), |mut s, l| {
        let _ = writeln!(s, "{l}");
        s
    })
}

pub fn matrix_text<T: std::fmt::Display>(m: &Array2<T>) -> String {
    let mut s = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join("\t"));
        s.push('\n');
    }
    s
}

fn join_countries(cs: &[CountryCode]) -> String {
    cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Header-addressed rows of a tab-separated file.
pub struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Table> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, head)) = lines.next() else {
            return Err(Error::Parse { path: path.into(), line: 1, message: "empty table".into() });
        };
        let header: Vec<String> = head.split('\t').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, l) in lines {
            let cells: Vec<String> = l.split('\t').map(str::to_string).collect();
            if cells.len() != header.len() {
                return Err(Error::Parse {
                    path: path.into(),
                    line: i + 1,
                    message: format!("expected {} columns, found {}", header.len(), cells.len()),
                });
            }
            rows.push((i + 1, cells));
        }
        Ok(Table { path: path.into(), header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            line: 1,
            message: format!("missing column {name:?}"),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Parses cell `col` of every row.
    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.rows.iter().map(move |(line, cells)| Row { table: self, line: *line, cells })
    }
}

pub struct Row<'a> {
    table: &'a Table,
    line: usize,
    cells: &'a [String],
}

impl Row<'_> {
    pub fn str(&self, col: usize) -> &str {
        &self.cells[col]
    }

    pub fn parse<V: std::str::FromStr>(&self, col: usize) -> Result<V>
    where
        V::Err: std::fmt::Display,
    {
        self.cells[col].parse().map_err(|e: V::Err| self.error(format!("column {}: {e}", self.table.header[col])))
    }

    pub fn parse_opt<V: std::str::FromStr>(&self, col: usize) -> Result<Option<V>>
    where
        V::Err: std::fmt::Display,
    {
        if self.cells[col].is_empty() {
            Ok(None)
        } else {
            self.parse(col).map(Some)
        }
    }

    pub fn error(&self, message: String) -> Error {
        Error::Parse { path: self.table.path.clone(), line: self.line, message }
    }
}

pub const METRICS_HEADER: &str =
    "work_id\tyear\tsubfield\tnbnc\tcd\tc_x\tc_y\tc_refs\tcd_zero_denominator\ttruncated";

pub fn metrics_text(corpus: &CitationCorpus, scores: &BTreeMap<WorkIdx, ImpactScores<f64>>) -> Result<String> {
    let mut order: Vec<WorkIdx> = scores.keys().copied().collect();
    order.sort_by(|a, b| corpus.year(*a).cmp(&corpus.year(*b)).then_with(|| corpus.id(*a).cmp(corpus.id(*b))));
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for w in order {
        let sc = &scores[&w];
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            field(corpus.id(w))?,
            corpus.year(w),
            opt(corpus.subfield(w)),
            sc.nbnc.value,
            sc.cd.value,
            sc.cd.c_x,
            sc.cd.c_y,
            sc.cd.c_refs,
            u8::from(sc.cd.zero_denominator),
            u8::from(sc.nbnc.truncated || sc.cd.truncated),
        );
    }
    Ok(s)
}

/// Reads a metrics table back. Yearly NBNC terms are not stored and come
/// back empty.
pub fn read_metrics(path: &Path, corpus: &CitationCorpus) -> Result<BTreeMap<WorkIdx, ImpactScores<f64>>> {
    let t = Table::read(path)?;
    let [id, nb, cd, cx, cy, cr, zd, tr] =
        ["work_id", "nbnc", "cd", "c_x", "c_y", "c_refs", "cd_zero_denominator", "truncated"].map(|c| t.column(c));
    let (id, nb, cd, cx, cy, cr, zd, tr) = (id?, nb?, cd?, cx?, cy?, cr?, zd?, tr?);
    let mut out = BTreeMap::new();
    for row in t.rows() {
        let w = corpus
            .index_of(row.str(id))
            .ok_or_else(|| row.error(format!("work {} is not in the corpus", row.str(id))))?;
        let truncated = row.parse::<u8>(tr)? != 0;
        out.insert(
            w,
            ImpactScores {
                nbnc: NbncScore { work: w, horizon: 0, value: row.parse(nb)?, yearly_terms: Vec::new(), truncated },
                cd: CdScore {
                    work: w,
                    horizon: 0,
                    value: row.parse(cd)?,
                    c_x: row.parse(cx)?,
                    c_y: row.parse(cy)?,
                    c_refs: row.parse(cr)?,
                    zero_denominator: row.parse::<u8>(zd)? != 0,
                    truncated,
                },
            },
        );
    }
    Ok(out)
}

pub const BREAKTHROUGH_HEADER: &str = "work_id\tyear\tsubfield\tcountries\tnbnc\tcd\tclass";

pub fn breakthroughs_text(records: &[BreakthroughRecord<f64>]) -> Result<String> {
    let mut s = String::from(BREAKTHROUGH_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            field(&r.work_id)?,
            r.year,
            opt(r.subfield),
            join_countries(&r.countries),
            r.nbnc,
            r.cd,
            r.class
        );
    }
    Ok(s)
}

/// Reads breakthrough records; work indices are looked up in `corpus`.
pub fn read_breakthroughs(path: &Path, corpus: &CitationCorpus) -> Result<Vec<BreakthroughRecord<f64>>> {
    let t = Table::read(path)?;
    let cols = ["work_id", "year", "subfield", "countries", "nbnc", "cd", "class"].map(|c| t.column(c));
    let [id, year, sf, cs, nb, cd, class] = cols;
    let (id, year, sf, cs, nb, cd, class) = (id?, year?, sf?, cs?, nb?, cd?, class?);
    let mut out = Vec::new();
    for row in t.rows() {
        let work = corpus
            .index_of(row.str(id))
            .ok_or_else(|| row.error(format!("work {} is not in the corpus", row.str(id))))?;
        let countries = row
            .str(cs)
            .split(';')
            .filter(|c| !c.is_empty())
            .map(|c| c.parse::<CountryCode>().map_err(|e| row.error(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        out.push(BreakthroughRecord {
            work,
            work_id: row.str(id).to_string(),
            year: row.parse(year)?,
            subfield: row.parse_opt(sf)?,
            countries,
            nbnc: row.parse(nb)?,
            cd: row.parse(cd)?,
            class: row.parse::<BreakthroughClass>(class)?,
        });
    }
    Ok(out)
}

pub const SERIES_HEADER: &str = "subfield\tyear\tbt\tcn\tdi\ttotal\tscaled_cn\tscaled_di\tzero_total";

pub fn series_text(table: &SeriesTable<f64>) -> String {
    let mut s = String::from(SERIES_HEADER);
    s.push('\n');
    for (sf, ser) in &table.series {
        for i in 0..ser.years.len() {
            let _ = writeln!(
                s,
                "{sf}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                ser.years[i],
                ser.bt[i],
                ser.cn[i],
                ser.di[i],
                ser.totals[i],
                ser.scaled_cn[i],
                ser.scaled_di[i],
                u8::from(ser.zero_total[i])
            );
        }
    }
    s
}

/// Reads a series table. Per-year unlabeled/excluded tallies are not stored
/// and come back as zeros.
pub fn read_series(path: &Path) -> Result<SeriesTable<f64>> {
    let t = Table::read(path)?;
    let cols = ["subfield", "year", "bt", "cn", "di", "total", "scaled_cn", "scaled_di", "zero_total"].map(|c| t.column(c));
    let [sf, yr, bt, cn, di, tot, scn, sdi, zt] = cols;
    let (sf, yr, bt, cn, di, tot, scn, sdi, zt) = (sf?, yr?, bt?, cn?, di?, tot?, scn?, sdi?, zt?);
    let mut series: BTreeMap<u32, SubfieldSeries<f64>> = BTreeMap::new();
    for row in t.rows() {
        let id: u32 = row.parse(sf)?;
        let s = series.entry(id).or_insert_with(|| SubfieldSeries {
            subfield: id,
            years: vec![],
            bt: vec![],
            cn: vec![],
            di: vec![],
            totals: vec![],
            scaled_cn: vec![],
            scaled_di: vec![],
            zero_total: vec![],
        });
        let year: i32 = row.parse(yr)?;
        if let Some(&last) = s.years.last() {
            if year != last + 1 {
                return Err(row.error(format!("subfield {id}: years must be consecutive")));
            }
        }
        s.years.push(year);
        s.bt.push(row.parse(bt)?);
        s.cn.push(row.parse(cn)?);
        s.di.push(row.parse(di)?);
        s.totals.push(row.parse(tot)?);
        s.scaled_cn.push(row.parse(scn)?);
        s.scaled_di.push(row.parse(sdi)?);
        s.zero_total.push(row.parse::<u8>(zt)? != 0);
    }
    let years = series.values().next().map(|s| s.years.clone()).unwrap_or_default();
    if series.values().any(|s| s.years != years) {
        return Err(Error::Parse { path: path.into(), line: 1, message: "subfields cover different years".into() });
    }
    let n = years.len();
    Ok(SeriesTable { years, series, unlabeled: vec![0; n], excluded: vec![0; n] })
}

pub fn panel_file(window: YearWindow, kind: BreakthroughClass) -> String {
    format!("{}_{}.tsv", window.label(), kind)
}

pub const PANEL_SUMMARY_HEADER: &str = "window\tkind\tfile\ttotal\tunattributed\tunlabeled";

/// Writes panel matrices plus shared label files under `dir`.
pub fn write_panels(out: &mut Outputs, dir: &str, labels: &PanelLabels, panels: &[PanelMatrix]) -> Result<()> {
    out.write_str(&format!("{dir}/countries.txt"), &labels_text(&labels.countries))?;
    out.write_str(&format!("{dir}/subfields.txt"), &labels_text(&labels.subfields))?;
    let mut summary = String::from(PANEL_SUMMARY_HEADER);
    summary.push('\n');
    for p in panels {
        let file = panel_file(p.window, p.kind);
        out.write_str(&format!("{dir}/{file}"), &matrix_text(&p.counts))?;
        let _ = writeln!(summary, "{}\t{}\t{file}\t{}\t{}\t{}", p.window.label(), p.kind, p.total(), p.unattributed, p.unlabeled);
    }
    out.write_str(&format!("{dir}/summary.tsv"), &summary)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)?.lines().filter(|l| !l.is_empty()).map(str::to_string).collect())
}

pub fn read_panels(dir: &Path) -> Result<(PanelLabels, Vec<PanelMatrix>)> {
    let countries = read_lines(&dir.join("countries.txt"))?
        .iter()
        .map(|c| c.parse::<CountryCode>())
        .collect::<Result<Vec<_>>>()?;
    let subfields = read_lines(&dir.join("subfields.txt"))?
        .iter()
        .map(|s| s.parse::<u32>().map_err(|e| Error::invalid(format!("subfield label {s:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let labels = PanelLabels { countries, subfields };
    let t = Table::read(&dir.join("summary.tsv"))?;
    let [w, k, f, ua, ul] = ["window", "kind", "file", "unattributed", "unlabeled"].map(|c| t.column(c));
    let (w, k, f, ua, ul) = (w?, k?, f?, ua?, ul?);
    let mut panels = Vec::new();
    for row in t.rows() {
        let (a, b) = row.str(w).split_once('-').ok_or_else(|| row.error("window must look like 1950-1959".into()))?;
        let window = YearWindow::new(
            a.parse().map_err(|_| row.error("bad window start".into()))?,
            b.parse().map_err(|_| row.error("bad window end".into()))?,
        )?;
        let kind: BreakthroughClass = row.parse(k)?;
        let mut p = PanelMatrix::zeros(window, kind, &labels);
        let body = std::fs::read_to_string(dir.join(row.str(f)))?;
        let lines: Vec<&str> = body.lines().filter(|l| !l.is_empty()).collect();
        if lines.len() != labels.countries.len() && !labels.subfields.is_empty() {
            return Err(row.error(format!("{} has {} rows, expected {}", row.str(f), lines.len(), labels.countries.len())));
        }
        for (i, l) in lines.iter().enumerate() {
            let cells: Vec<&str> = l.split('\t').collect();
            if cells.len() != labels.subfields.len() {
                return Err(row.error(format!("{} row {} has {} columns", row.str(f), i + 1, cells.len())));
            }
            for (j, c) in cells.iter().enumerate() {
                p.counts[[i, j]] = c.parse().map_err(|_| row.error(format!("bad count {c:?} in {}", row.str(f))))?;
            }
        }
        p.unattributed = row.parse(ua)?;
        p.unlabeled = row.parse(ul)?;
        panels.push(p);
    }
    Ok((labels, panels))
}

pub const RANK_HEADER: &str = "label\tscore\trank\ttie_rank\tpruned";

pub fn rank_table_text(t: &RankTable<f64>) -> String {
    let mut s = String::from(RANK_HEADER);
    s.push('\n');
    for e in &t.entries {
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", e.label, opt(e.score), e.rank, e.tie_rank, u8::from(e.pruned));
    }
    s
}

/// Competition ranks of the retained entities of a rank table file.
pub fn read_rank_table(path: &Path) -> Result<BTreeMap<String, f64>> {
    let t = Table::read(path)?;
    let (l, tr, pr) = (t.column("label")?, t.column("tie_rank")?, t.column("pruned")?);
    let mut out = BTreeMap::new();
    for row in t.rows() {
        if row.parse::<u8>(pr)? == 0 {
            out.insert(row.str(l).to_string(), row.parse::<f64>(tr)?);
        }
    }
    Ok(out)
}
