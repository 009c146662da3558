use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::breakthrough::{window_grid, YearWindow};
use crate::complexity::{EigenOptions, EigenOrder, GenepyOptions};
use crate::corpus::{CocitationMode, IngestSchema};
use crate::dynamics::{DtwMode, SigmaPolicy};
use crate::error::{Error, Result};
use crate::impact::{GammaReference, NbncOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// JSON-lines files (optionally gzip-compressed), read in order.
    pub paths: Vec<PathBuf>,
    #[serde(default = "default_ingest_first")]
    pub first_year: i32,
    #[serde(default = "default_ingest_last")]
    pub last_year: i32,
    #[serde(default)]
    pub schema: IngestSchema,
}

fn default_ingest_first() -> i32 {
    1800
}
fn default_ingest_last() -> i32 {
    2100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub horizon: u32,
    pub cocitation: CocitationMode,
    pub gamma_reference: GammaReference,
    /// Publication years that get scored and selected.
    pub first_year: i32,
    pub last_year: i32,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            horizon: 10,
            cocitation: CocitationMode::Multiset,
            gamma_reference: GammaReference::OwnAge,
            first_year: 1950,
            last_year: 2013,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub top_fraction: f64,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection { top_fraction: 0.05 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSection {
    /// Subfields to keep; empty keeps every subfield in the corpus.
    pub subfields: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub start: i32,
    pub end: i32,
    pub length: u32,
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection { start: 1950, end: 2013, length: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    /// Fixed kernel width; omitted means the spread of the DTW distances.
    pub sigma: Option<f64>,
    pub dtw: DtwMode,
    pub seed: u64,
    pub resolution: f64,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        ClusteringSection { sigma: None, dtw: DtwMode::Euclidean, seed: 42, resolution: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankingSection {
    pub rca_threshold: f64,
    pub eigen_count: usize,
    pub eigen_order: EigenOrder,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RankingSection {
    fn default() -> Self {
        RankingSection {
            rca_threshold: 1.0,
            eigen_count: 2,
            eigen_order: EigenOrder::Algebraic,
            tolerance: 1e-10,
            max_iterations: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSource {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Country indicators correlated against complexity ranks.
    pub indicators: Vec<IndicatorSource>,
    /// Yearly R&D expenditure as % of GDP.
    pub gerd_percent: Option<PathBuf>,
    pub gdp: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub root: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { root: PathBuf::from("runs") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: CorpusSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub series: SeriesSection,
    #[serde(default)]
    pub windows: WindowSection,
    #[serde(default)]
    pub clustering: ClusteringSection,
    #[serde(default)]
    pub ranking: RankingSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory relative paths are resolved against; not part of the hash.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(paths: Vec<PathBuf>) -> Self {
        PipelineConfig {
            corpus: CorpusSection {
                paths,
                first_year: default_ingest_first(),
                last_year: default_ingest_last(),
                schema: IngestSchema::default(),
            },
            metrics: MetricsSection::default(),
            selection: SelectionSection::default(),
            series: SeriesSection::default(),
            windows: WindowSection::default(),
            clustering: ClusteringSection::default(),
            ranking: RankingSection::default(),
            analysis: AnalysisSection::default(),
            output: OutputSection::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = PathBuf::from(".");
        Ok(cfg)
    }

    /// Loads a config file; relative paths inside it resolve against its
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if cfg.base_dir.as_os_str().is_empty() {
            cfg.base_dir = PathBuf::from(".");
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn corpus_paths(&self) -> Vec<PathBuf> {
        self.corpus.paths.iter().map(|p| self.resolve(p)).collect()
    }

    /// The config with the output location reset; what a run records and hashes.
    pub fn canonical(&self) -> PipelineConfig {
        let mut canon = self.clone();
        canon.output = OutputSection::default();
        canon
    }

    /// SHA-256 over the JSON form of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.canonical()).expect("config serialises");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Run directory: `<output.root>/<first 16 hex digits of the hash>`.
    pub fn run_dir(&self) -> PathBuf {
        self.resolve(&self.output.root).join(&self.hash()[..16])
    }

    pub fn nbnc_options(&self) -> NbncOptions {
        NbncOptions {
            horizon: self.metrics.horizon,
            cocitation: self.metrics.cocitation,
            gamma_reference: self.metrics.gamma_reference,
        }
    }

    pub fn windows(&self) -> Result<Vec<YearWindow>> {
        window_grid(self.windows.start, self.windows.end, self.windows.length)
    }

    pub fn allowlist(&self) -> Option<BTreeSet<u32>> {
        (!self.series.subfields.is_empty()).then(|| self.series.subfields.iter().copied().collect())
    }

    pub fn sigma_policy(&self) -> SigmaPolicy {
        match self.clustering.sigma {
            Some(s) => SigmaPolicy::Fixed(s),
            None => SigmaPolicy::OffDiagonalStd,
        }
    }

    pub fn genepy_options(&self) -> GenepyOptions<f64> {
        GenepyOptions {
            eigen_count: self.ranking.eigen_count,
            eigen: EigenOptions {
                tolerance: self.ranking.tolerance,
                max_iterations: self.ranking.max_iterations,
                order: self.ranking.eigen_order,
            },
        }
    }

    /// Checks ranges and that every referenced input file exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.corpus.paths.is_empty() {
            return bad("corpus.paths is empty".into());
        }
        for p in self.corpus_paths() {
            if !p.is_file() {
                return bad(format!("corpus file not found: {}", p.display()));
            }
        }
        if self.corpus.last_year < self.corpus.first_year {
            return bad("corpus.last_year precedes corpus.first_year".into());
        }
        if self.metrics.horizon > 200 {
            return bad(format!("metrics.horizon {} is out of range 0..=200", self.metrics.horizon));
        }
        if self.metrics.last_year < self.metrics.first_year {
            return bad("metrics.last_year precedes metrics.first_year".into());
        }
        let q = self.selection.top_fraction;
        if !(q > 0.0 && q < 1.0) {
            return bad(format!("selection.top_fraction must lie in (0, 1), got {q}"));
        }
        if self.windows.length == 0 || self.windows.end < self.windows.start {
            return bad("windows need length > 0 and end >= start".into());
        }
        if let Some(s) = self.clustering.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("clustering.sigma must be positive, got {s}"));
            }
        }
        if !(self.clustering.resolution > 0.0 && self.clustering.resolution.is_finite()) {
            return bad("clustering.resolution must be positive".into());
        }
        if !(self.ranking.rca_threshold > 0.0 && self.ranking.rca_threshold.is_finite()) {
            return bad("ranking.rca_threshold must be positive".into());
        }
        if self.ranking.eigen_count == 0 {
            return bad("ranking.eigen_count must be at least 1".into());
        }
        if !(self.ranking.tolerance > 0.0) || self.ranking.max_iterations == 0 {
            return bad("ranking.tolerance and ranking.max_iterations must be positive".into());
        }
        let mut names = BTreeSet::new();
        for ind in &self.analysis.indicators {
            if !names.insert(ind.name.as_str()) || ind.name.is_empty() || ind.name.contains(['\t', '\n']) {
                return bad(format!("indicator name {:?} is empty, repeated or has tabs", ind.name));
            }
            if !self.resolve(&ind.path).is_file() {
                return bad(format!("indicator file not found: {}", ind.path.display()));
            }
        }
        match (&self.analysis.gerd_percent, &self.analysis.gdp) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                for p in [a, b] {
                    if !self.resolve(p).is_file() {
                        return bad(format!("indicator file not found: {}", p.display()));
                    }
                }
            }
            _ => return bad("analysis.gerd_percent and analysis.gdp must be given together".into()),
        }
        Ok(())
    }
}
