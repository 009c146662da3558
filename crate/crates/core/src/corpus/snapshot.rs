//! Versioned binary snapshot of a [`CitationCorpus`].
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes   "BTCORPUS"
//! version    u32
//! n_works    u64
//! n_edges    u64
//! per work:  year i32 | subfield u32 (u32::MAX = none) | n_countries u16
//!            | countries 2 bytes each | id_len u32 | id bytes (utf-8)
//! offsets    (n_works + 1) x u64
//! targets    n_edges x u32
//! ```
//!
//! The in-adjacency is not stored; it is rebuilt as the transpose on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CitationCorpus, CorpusParts, CountryCode, Csr, WorkIdx};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"BTCORPUS";
pub const SNAPSHOT_VERSION: u32 = 1;

const NO_SUBFIELD: u32 = u32::MAX;

pub fn write_snapshot<W: Write>(corpus: &CitationCorpus, mut w: W) -> Result<()> {
    let n = corpus.len();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(corpus.edge_count() as u64).to_le_bytes())?;
    for idx in corpus.indices() {
        w.write_all(&corpus.year(idx).to_le_bytes())?;
        w.write_all(&corpus.subfield(idx).unwrap_or(NO_SUBFIELD).to_le_bytes())?;
        let cs = corpus.countries(idx);
        let nc = u16::try_from(cs.len()).map_err(|_| Error::Snapshot("too many countries".into()))?;
        w.write_all(&nc.to_le_bytes())?;
        for c in cs {
            w.write_all(&c.bytes())?;
        }
        let id = corpus.id(idx).as_bytes();
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id)?;
    }
    let csr = corpus.out_csr();
    for off in &csr.offsets {
        w.write_all(&off.to_le_bytes())?;
    }
    for t in &csr.targets {
        w.write_all(&t.0.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<CitationCorpus> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Snapshot("truncated header".into()))?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic bytes".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported version {version} (expected {SNAPSHOT_VERSION})"
        )));
    }
    let n = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)? as usize;
    let mut ids = Vec::with_capacity(n);
    let mut years = Vec::with_capacity(n);
    let mut subfields = Vec::with_capacity(n);
    let mut countries = Vec::with_capacity(n);
    for _ in 0..n {
        years.push(read_u32(&mut r)? as i32);
        let sf = read_u32(&mut r)?;
        subfields.push((sf != NO_SUBFIELD).then_some(sf));
        let mut nc = [0u8; 2];
        read(&mut r, &mut nc)?;
        let nc = u16::from_le_bytes(nc);
        let mut cs = Vec::with_capacity(nc as usize);
        for _ in 0..nc {
            let mut b = [0u8; 2];
            read(&mut r, &mut b)?;
            cs.push(CountryCode::from_bytes(b).ok_or_else(|| Error::Snapshot("bad country code".into()))?);
        }
        countries.push(cs);
        let len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        read(&mut r, &mut buf)?;
        ids.push(String::from_utf8(buf).map_err(|_| Error::Snapshot("id is not utf-8".into()))?);
    }
    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(read_u64(&mut r)?);
    }
    let mut targets = Vec::with_capacity(m);
    for _ in 0..m {
        targets.push(WorkIdx(read_u32(&mut r)?));
    }
    if offsets.first() != Some(&0) || offsets.last() != Some(&(m as u64)) || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Snapshot("inconsistent adjacency offsets".into()));
    }
    for i in 0..n {
        let row = &targets[offsets[i] as usize..offsets[i + 1] as usize];
        if row.iter().any(|t| t.get() >= n || t.get() == i) || row.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Snapshot(format!("invalid adjacency row {i}")));
        }
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Snapshot("trailing bytes after adjacency".into()));
    }
    CitationCorpus::from_parts(CorpusParts {
        ids,
        years,
        subfields,
        countries,
        out_adj: Csr { offsets, targets },
    })
    .map_err(|e| Error::Snapshot(e.to_string()))
}

impl CitationCorpus {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_snapshot(self, BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_snapshot(BufReader::new(File::open(path)?))
    }
}

fn read<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Snapshot("unexpected end of snapshot".into()))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}
