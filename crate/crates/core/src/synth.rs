//! Deterministic synthetic corpora in OpenAlex work shape, plus matching
//! country indicators. Used for fixtures, benchmarks and smoke runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{CountryCode, WorkRecord};
use crate::error::{Error, Result};
use crate::pipeline::config::IndicatorSource;
use crate::pipeline::PipelineConfig;
use crate::stats::IndicatorTable;

const COUNTRY_POOL: [&str; 48] = [
    "US", "CN", "GB", "DE", "JP", "FR", "IT", "CA", "IN", "ES", "AU", "KR", "NL", "BR", "CH", "SE", "RU", "PL",
    "BE", "IL", "DK", "AT", "FI", "NO", "TW", "SG", "PT", "IE", "MX", "GR", "CZ", "NZ", "AR", "TR", "ZA", "HU",
    "IR", "CL", "EG", "PK", "MY", "TH", "SA", "CO", "NG", "UA", "RO", "VN",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub works: usize,
    pub seed: u64,
    pub first_year: i32,
    pub last_year: i32,
    pub subfields: usize,
    pub countries: usize,
    pub mean_references: f64,
    /// Share of references pointing at works outside the corpus.
    pub dangling_fraction: f64,
    pub unlabeled_fraction: f64,
    pub unattributed_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            works: 2_000,
            seed: 7,
            first_year: 1950,
            last_year: 2013,
            subfields: 16,
            countries: 24,
            mean_references: 10.0,
            dangling_fraction: 0.02,
            unlabeled_fraction: 0.01,
            unattributed_fraction: 0.01,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.works == 0 || self.last_year < self.first_year {
            return Err(Error::invalid("synthetic corpus needs works > 0 and a non-empty year range"));
        }
        if self.subfields == 0 || self.countries == 0 || self.countries > COUNTRY_POOL.len() {
            return Err(Error::invalid(format!(
                "subfields must be > 0 and countries in 1..={}",
                COUNTRY_POOL.len()
            )));
        }
        for (name, v) in [
            ("dangling_fraction", self.dangling_fraction),
            ("unlabeled_fraction", self.unlabeled_fraction),
            ("unattributed_fraction", self.unattributed_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.mean_references >= 0.0) {
            return Err(Error::invalid("mean_references must be non-negative"));
        }
        Ok(())
    }

    pub fn country_codes(&self) -> Vec<CountryCode> {
        COUNTRY_POOL[..self.countries].iter().map(|c| c.parse().expect("valid code")).collect()
    }

    pub fn subfield_ids(&self) -> Vec<u32> {
        (0..self.subfields as u32).map(|i| 1100 + 7 * i).collect()
    }
}

pub fn work_id(i: usize) -> String {
    format!("https://openalex.org/W{}", 1_000_000 + i)
}

/// Works per year growing roughly exponentially; every year gets at least one.
fn year_sizes(cfg: &SynthConfig) -> Vec<usize> {
    let span = (cfg.last_year - cfg.first_year + 1) as usize;
    let weights: Vec<f64> = (0..span).map(|i| (0.045 * i as f64).exp()).collect();
    let total: f64 = weights.iter().sum();
    let spare = cfg.works.saturating_sub(span);
    let mut sizes: Vec<usize> = weights.iter().map(|w| (w / total * spare as f64).floor() as usize).collect();
    let mut rem = spare - sizes.iter().sum::<usize>();
    let mut i = span;
    while rem > 0 {
        i = if i == 0 { span - 1 } else { i - 1 };
        sizes[i] += 1;
        rem -= 1;
    }
    if cfg.works >= span {
        sizes.iter_mut().for_each(|s| *s += 1);
    } else {
        // fewer works than years: spread them over the latest years
        sizes = vec![0; span];
        for k in 0..cfg.works {
            sizes[span - 1 - (k % span)] += 1;
        }
    }
    sizes
}

fn weighted_pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Generates work records in publication order. Reference lists may contain
/// dangling ids and occasional duplicates, as real dumps do.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<WorkRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let countries = cfg.country_codes();
    let subfields = cfg.subfield_ids();
    let ns = subfields.len();

    // subfield popularity drifts linearly in time at a per-subfield rate
    let base: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.3..1.0)).collect();
    let drift: Vec<f64> = (0..ns).map(|_| rng.gen_range(-1.0..1.5)).collect();
    // how strongly citers also cite a cited work's own references
    let closure: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.0..0.35)).collect();
    let size: Vec<f64> = (0..countries.len()).map(|i| 1.0 / (1.0 + i as f64).powf(0.9)).collect();
    let affinity: Vec<Vec<f64>> = (0..countries.len())
        .map(|_| (0..ns).map(|_| rng.gen_range(0.05..1.0f64).powi(2)).collect())
        .collect();

    let sizes = year_sizes(cfg);
    let span = sizes.len() as f64;
    let mut records: Vec<WorkRecord> = Vec::with_capacity(cfg.works);
    let mut field_of: Vec<Option<usize>> = Vec::with_capacity(cfg.works);
    let mut ref_idx: Vec<Vec<usize>> = Vec::with_capacity(cfg.works);
    // urns: one entry per work plus one per citation received
    let mut urn: Vec<usize> = Vec::new();
    let mut field_urn: Vec<Vec<usize>> = vec![Vec::new(); ns];
    let mut dangling_serial = 0usize;

    for (yi, &count) in sizes.iter().enumerate() {
        let year = cfg.first_year + yi as i32;
        let frac = yi as f64 / span.max(1.0);
        let pop: Vec<f64> = (0..ns).map(|s| (base[s] + drift[s] * frac).max(0.05)).collect();
        let mut cited_this_year: Vec<usize> = Vec::new();
        for _ in 0..count {
            let id = records.len();
            let s = weighted_pick(&mut rng, &pop);
            let labeled = !rng.gen_bool(cfg.unlabeled_fraction);
            let n_refs = if urn.is_empty() {
                0
            } else {
                rng.gen_range(0..=(2.0 * cfg.mean_references).round() as usize)
            };
            let mut refs: Vec<usize> = Vec::with_capacity(n_refs);
            let mut dangling = Vec::new();
            while refs.len() + dangling.len() < n_refs {
                if rng.gen_bool(cfg.dangling_fraction) {
                    dangling.push(format!("https://openalex.org/W{}", 90_000_000 + dangling_serial));
                    dangling_serial += 1;
                    continue;
                }
                let pool = if !field_urn[s].is_empty() && rng.gen_bool(0.7) { &field_urn[s] } else { &urn };
                // favour recent entries half of the time
                let lo = if rng.gen_bool(0.5) { pool.len() * 2 / 3 } else { 0 };
                let target = pool[rng.gen_range(lo..pool.len())];
                refs.push(target);
                if rng.gen_bool(closure[s]) && refs.len() + dangling.len() < n_refs {
                    if let Some(&hop) = ref_idx[target].choose(&mut rng) {
                        refs.push(hop);
                    }
                }
            }
            cited_this_year.extend(&refs);
            let mut ref_ids: Vec<String> = refs.iter().map(|&r| work_id(r)).collect();
            ref_ids.extend(dangling);
            ref_ids.shuffle(&mut rng);

            let mut cs: Vec<CountryCode> = Vec::new();
            if !rng.gen_bool(cfg.unattributed_fraction) {
                let k = 1 + usize::from(rng.gen_bool(0.3)) + usize::from(rng.gen_bool(0.1));
                let w: Vec<f64> = (0..countries.len()).map(|c| size[c] * affinity[c][s]).collect();
                for _ in 0..k {
                    let c = countries[weighted_pick(&mut rng, &w)];
                    if !cs.contains(&c) {
                        cs.push(c);
                    }
                }
            }
            let mut rec = WorkRecord::new(work_id(id), year).with_references(ref_ids).with_countries(cs);
            if labeled {
                rec = rec.with_subfield(subfields[s]);
            }
            records.push(rec);
            field_of.push(labeled.then_some(s));
            ref_idx.push(refs);
        }
        // this year's works become citable from next year on
        let first_new = records.len() - count;
        for id in first_new..records.len() {
            urn.push(id);
            if let Some(s) = field_of[id] {
                field_urn[s].push(id);
            }
        }
        for &t in &cited_this_year {
            urn.push(t);
            if let Some(s) = field_of[t] {
                field_urn[s].push(t);
            }
        }
    }
    Ok(records)
}

/// One OpenAlex-style JSON object.
pub fn to_openalex_json(rec: &WorkRecord) -> serde_json::Value {
    let mut obj = json!({
        "id": rec.work_id,
        "publication_year": rec.pub_year,
        "referenced_works": rec.references,
        "authorships": rec.countries.iter().map(|c| json!({"countries": [c.to_string()]})).collect::<Vec<_>>(),
    });
    if let Some(s) = rec.subfield {
        obj["primary_topic"] = json!({
            "subfield": {"id": format!("https://openalex.org/subfields/{s}"), "display_name": format!("Subfield {s}")}
        });
    }
    obj
}

pub fn write_jsonl<W: Write>(records: &[WorkRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &to_openalex_json(r))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Indicators aligned with the generator's country sizes: a research rank
/// (period `all`, 1 = strongest), yearly R&D spend as % of GDP, and GDP.
pub struct SynthIndicators {
    pub research_rank: IndicatorTable,
    pub gerd_percent: IndicatorTable,
    pub gdp: IndicatorTable,
}

pub fn generate_indicators(cfg: &SynthConfig) -> Result<SynthIndicators> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1d1c_a70e);
    let codes = cfg.country_codes();
    let strength: Vec<f64> =
        (0..codes.len()).map(|i| 1.0 / (1.0 + i as f64).powf(0.9) * rng.gen_range(0.6..1.6)).collect();
    let mut order: Vec<usize> = (0..codes.len()).collect();
    order.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]).then(a.cmp(&b)));
    let mut research_rank = IndicatorTable::default();
    for (r, &c) in order.iter().enumerate() {
        research_rank.insert(&codes[c].to_string(), "all", (r + 1) as f64);
    }
    let mut gerd_percent = IndicatorTable::default();
    let mut gdp = IndicatorTable::default();
    for (c, code) in codes.iter().enumerate() {
        let pct0 = 0.4 + 2.5 * strength[c] * rng.gen_range(0.7..1.3);
        let gdp0 = 5.0e11 * strength[c].powf(1.2) * rng.gen_range(0.5..2.0);
        for year in cfg.first_year..=cfg.last_year {
            // gaps in reporting
            if rng.gen_bool(0.08) {
                continue;
            }
            let t = f64::from(year - cfg.first_year);
            let pct = pct0 * (1.0 + 0.01 * t) * rng.gen_range(0.95..1.05);
            let g = gdp0 * (1.0 + 0.03f64).powf(t) * rng.gen_range(0.97..1.03);
            gerd_percent.insert(&code.to_string(), &year.to_string(), pct);
            gdp.insert(&code.to_string(), &year.to_string(), g);
        }
    }
    Ok(SynthIndicators { research_rank, gerd_percent, gdp })
}


/// Writes `works.jsonl`, the three indicator tables and a matching
/// `config.toml` into `dir`; returns the config path.
pub fn write_bundle(cfg: &SynthConfig, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let records = generate(cfg)?;
    write_jsonl(&records, BufWriter::new(File::create(dir.join("works.jsonl"))?))?;
    let ind = generate_indicators(cfg)?;
    std::fs::write(dir.join("research_rank.tsv"), ind.research_rank.to_tsv())?;
    std::fs::write(dir.join("gerd_percent.tsv"), ind.gerd_percent.to_tsv())?;
    std::fs::write(dir.join("gdp.tsv"), ind.gdp.to_tsv())?;
    let mut pc = PipelineConfig::new(vec!["works.jsonl".into()]);
    pc.metrics.first_year = cfg.first_year;
    pc.metrics.last_year = cfg.last_year;
    pc.windows.start = cfg.first_year;
    pc.windows.end = cfg.last_year;
    pc.analysis.indicators = vec![IndicatorSource { name: "research_rank".into(), path: "research_rank.tsv".into() }];
    pc.analysis.gerd_percent = Some("gerd_percent.tsv".into());
    pc.analysis.gdp = Some("gdp.tsv".into());
    let path = dir.join("config.toml");
    std::fs::write(&path, pc.to_toml_string()?)?;
    Ok(path)
}
