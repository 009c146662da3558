use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use breakthru::complexity::EigenOrder;
use breakthru::corpus::CocitationMode;
use breakthru::dynamics::DtwMode;
use breakthru::impact::GammaReference;
use breakthru::pipeline::{self, io, Outputs, PipelineConfig, RunStatus};
use breakthru::stats::{loglog_fit, read_indicator_file, spearman};
use breakthru::synth::{self, SynthConfig};
use breakthru::CitationCorpus;

#[derive(Parser)]
#[command(name = "breakthru", version, about = "Citation breakthrough analytics")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse OpenAlex-style JSON lines into a corpus snapshot.
    Ingest(IngestCmd),
    /// Score every work with NBNC and the CD index.
    Metrics(MetricsCmd),
    /// Pick the top fraction of each publication year.
    Select(SelectCmd),
    /// Build subfield series and country x subfield panels.
    Panel(PanelCmd),
    /// Cluster subfield trajectories (DTW + Gaussian kernel + Leiden).
    Cluster(ClusterCmd),
    /// RCA filtering and GENEPY complexity ranks for every panel.
    Rank(RankCmd),
    /// Spearman correlation between a rank table and an indicator.
    Correlate(CorrelateCmd),
    /// Log-log least-squares fit between two indicator files.
    Fit(FitCmd),
    /// Run the whole pipeline from a config file.
    Run(RunCmd),
    /// Write a synthetic corpus, matching indicators and a config.
    Synth(SynthCmd),
}

#[derive(Args, Clone, Default)]
struct YearArgs {
    /// First publication year scored and selected.
    #[arg(long)]
    first_year: Option<i32>,
    /// Last publication year scored and selected.
    #[arg(long)]
    last_year: Option<i32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cocitation {
    Multiset,
    Set,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gamma {
    OwnAge,
    FocalCalendar,
}

#[derive(Args, Clone, Default)]
struct MetricArgs {
    /// Citation horizon T in years.
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long, value_enum)]
    cocitation: Option<Cocitation>,
    #[arg(long, value_enum)]
    gamma_reference: Option<Gamma>,
}

#[derive(Args, Clone, Default)]
struct WindowArgs {
    #[arg(long)]
    window_start: Option<i32>,
    #[arg(long)]
    window_end: Option<i32>,
    #[arg(long)]
    window_length: Option<u32>,
    /// Comma-separated subfield allowlist.
    #[arg(long, value_delimiter = ',')]
    subfields: Option<Vec<u32>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dtw {
    Euclidean,
    PerComponent,
}

#[derive(Args, Clone, Default)]
struct ClusterArgs {
    /// Fixed kernel width; default is the spread of the DTW distances.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long, value_enum)]
    dtw: Option<Dtw>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Algebraic,
    Magnitude,
}

#[derive(Args, Clone, Default)]
struct RankArgs {
    #[arg(long)]
    rca_threshold: Option<f64>,
    /// Number of leading eigenpairs in the composite score.
    #[arg(long)]
    eigen_count: Option<usize>,
    #[arg(long, value_enum)]
    eigen_order: Option<Order>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Args)]
struct IngestCmd {
    /// Input files, optionally gzip-compressed.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    /// Works published outside this range are rejected.
    #[arg(long, default_value_t = 1800)]
    min_year: i32,
    #[arg(long, default_value_t = 2100)]
    max_year: i32,
}

#[derive(Args)]
struct MetricsCmd {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    years: YearArgs,
    #[command(flatten)]
    metric: MetricArgs,
}

#[derive(Args)]
struct SelectCmd {
    #[arg(long)]
    snapshot: PathBuf,
    /// Table written by `metrics`.
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    top_fraction: Option<f64>,
    #[command(flatten)]
    years: YearArgs,
}

#[derive(Args)]
struct PanelCmd {
    #[arg(long)]
    snapshot: PathBuf,
    /// Table written by `select`.
    #[arg(long)]
    breakthroughs: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    years: YearArgs,
    #[command(flatten)]
    windows: WindowArgs,
}

#[derive(Args)]
struct ClusterCmd {
    /// `series/series.tsv` written by `panel`.
    #[arg(long)]
    series: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    cluster: ClusterArgs,
}

#[derive(Args)]
struct RankCmd {
    /// `panels` directory written by `panel`.
    #[arg(long)]
    panels: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    rank: RankArgs,
}

#[derive(Args)]
struct CorrelateCmd {
    /// Rank table (`countries.tsv` from `rank`).
    #[arg(long)]
    ranks: PathBuf,
    /// Indicator file: country, period, value.
    #[arg(long)]
    indicator: PathBuf,
    /// Indicator period to use; defaults to the only period present.
    #[arg(long)]
    period: Option<String>,
}

#[derive(Args)]
struct FitCmd {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    /// Period to take from both files; defaults to the only shared one.
    #[arg(long)]
    period: Option<String>,
}

#[derive(Args)]
struct RunCmd {
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `output.root`.
    #[arg(long)]
    output_root: Option<PathBuf>,
    #[arg(long)]
    top_fraction: Option<f64>,
    #[command(flatten)]
    years: YearArgs,
    #[command(flatten)]
    metric: MetricArgs,
    #[command(flatten)]
    windows: WindowArgs,
    #[command(flatten)]
    cluster: ClusterArgs,
    #[command(flatten)]
    rank: RankArgs,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    works: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    first_year: Option<i32>,
    #[arg(long)]
    last_year: Option<i32>,
    #[arg(long)]
    subfields: Option<usize>,
    #[arg(long)]
    countries: Option<usize>,
}

impl YearArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(y) = self.first_year {
            cfg.metrics.first_year = y;
        }
        if let Some(y) = self.last_year {
            cfg.metrics.last_year = y;
        }
    }
}

impl MetricArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(h) = self.horizon {
            cfg.metrics.horizon = h;
        }
        if let Some(c) = self.cocitation {
            cfg.metrics.cocitation = match c {
                Cocitation::Multiset => CocitationMode::Multiset,
                Cocitation::Set => CocitationMode::Set,
            };
        }
        if let Some(g) = self.gamma_reference {
            cfg.metrics.gamma_reference = match g {
                Gamma::OwnAge => GammaReference::OwnAge,
                Gamma::FocalCalendar => GammaReference::FocalCalendar,
            };
        }
    }
}

impl WindowArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.window_start {
            cfg.windows.start = v;
        }
        if let Some(v) = self.window_end {
            cfg.windows.end = v;
        }
        if let Some(v) = self.window_length {
            cfg.windows.length = v;
        }
        if let Some(v) = &self.subfields {
            cfg.series.subfields = v.clone();
        }
    }
}

impl ClusterArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if self.sigma.is_some() {
            cfg.clustering.sigma = self.sigma;
        }
        if let Some(v) = self.seed {
            cfg.clustering.seed = v;
        }
        if let Some(v) = self.resolution {
            cfg.clustering.resolution = v;
        }
        if let Some(d) = self.dtw {
            cfg.clustering.dtw = match d {
                Dtw::Euclidean => DtwMode::Euclidean,
                Dtw::PerComponent => DtwMode::PerComponent,
            };
        }
    }
}

impl RankArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.rca_threshold {
            cfg.ranking.rca_threshold = v;
        }
        if let Some(v) = self.eigen_count {
            cfg.ranking.eigen_count = v;
        }
        if let Some(o) = self.eigen_order {
            cfg.ranking.eigen_order = match o {
                Order::Algebraic => EigenOrder::Algebraic,
                Order::Magnitude => EigenOrder::Magnitude,
            };
        }
        if let Some(v) = self.tolerance {
            cfg.ranking.tolerance = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.ranking.max_iterations = v;
        }
    }
}

/// Config for a single stage run outside `run`; corpus paths are not used.
fn stage_config() -> PipelineConfig {
    PipelineConfig::new(Vec::new())
}

fn load_corpus(path: &Path) -> Result<CitationCorpus> {
    CitationCorpus::load(path).with_context(|| format!("loading snapshot {}", path.display()))
}

fn print_written(out: &mut Outputs) {
    for f in out.take() {
        println!("{}\t{}", out.root().join(&f.path).display(), f.sha256);
    }
}

fn pick_period(given: &Option<String>, available: &[String], what: &str) -> Result<String> {
    match given {
        Some(p) => Ok(p.clone()),
        None if available.len() == 1 => Ok(available[0].clone()),
        None => bail!("{what} has periods {available:?}; choose one with --period"),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::Ingest(c) => {
            let mut cfg = PipelineConfig::new(c.inputs.clone());
            cfg.corpus.first_year = c.min_year;
            cfg.corpus.last_year = c.max_year;
            let mut out = Outputs::new(&c.out)?;
            let (corpus, report) = pipeline::stage_ingest(&cfg, &mut out)?;
            eprintln!(
                "{} works, {} edges, {} lines rejected, {} dangling references",
                corpus.len(),
                corpus.edge_count(),
                report.rejected(),
                report.dangling_refs
            );
            print_written(&mut out);
        }
        Command::Metrics(c) => {
            let mut cfg = stage_config();
            c.years.apply(&mut cfg);
            c.metric.apply(&mut cfg);
            let corpus = load_corpus(&c.snapshot)?;
            let mut out = Outputs::new(&c.out)?;
            pipeline::stage_metrics(&cfg, &corpus, &mut out)?;
            print_written(&mut out);
        }
        Command::Select(c) => {
            let mut cfg = stage_config();
            c.years.apply(&mut cfg);
            if let Some(q) = c.top_fraction {
                cfg.selection.top_fraction = q;
            }
            let corpus = load_corpus(&c.snapshot)?;
            let scores = io::read_metrics(&c.metrics, &corpus)?;
            let mut out = Outputs::new(&c.out)?;
            pipeline::stage_select(&cfg, &corpus, &scores, &mut out)?;
            print_written(&mut out);
        }
        Command::Panel(c) => {
            let mut cfg = stage_config();
            c.years.apply(&mut cfg);
            c.windows.apply(&mut cfg);
            let corpus = load_corpus(&c.snapshot)?;
            let records = io::read_breakthroughs(&c.breakthroughs, &corpus)?;
            let mut out = Outputs::new(&c.out)?;
            pipeline::stage_panels(&cfg, &corpus, &records, &mut out)?;
            print_written(&mut out);
        }
        Command::Cluster(c) => {
            let mut cfg = stage_config();
            c.cluster.apply(&mut cfg);
            let series = io::read_series(&c.series)?;
            let mut out = Outputs::new(&c.out)?;
            let res = pipeline::stage_cluster(&cfg, &series, &mut out)?;
            eprintln!("{} clusters, {} singletons", res.cluster_count(), res.singleton_count());
            print_written(&mut out);
        }
        Command::Rank(c) => {
            let mut cfg = stage_config();
            c.rank.apply(&mut cfg);
            let (_, panels) = io::read_panels(&c.panels)?;
            let mut out = Outputs::new(&c.out)?;
            pipeline::stage_rank(&cfg, &panels, &mut out)?;
            print_written(&mut out);
        }
        Command::Correlate(c) => {
            let ranks = io::read_rank_table(&c.ranks)?;
            let table = read_indicator_file(&c.indicator)?;
            let period = pick_period(&c.period, &table.periods(), "indicator")?;
            let res = spearman(&ranks, &table.for_period(&period))?;
            println!("{}", serde_json::to_string_pretty(&res)?);
        }
        Command::Fit(c) => {
            let x = read_indicator_file(&c.x)?;
            let y = read_indicator_file(&c.y)?;
            let shared: Vec<String> = x.periods().into_iter().filter(|p| y.periods().contains(p)).collect();
            let period = pick_period(&c.period, &shared, "the inputs")?;
            let (xm, ym) = (x.for_period(&period), y.for_period(&period));
            let keys: Vec<&String> = xm.keys().filter(|k| ym.contains_key(*k)).collect();
            let xs: Vec<f64> = keys.iter().map(|k| xm[*k]).collect();
            let ys: Vec<f64> = keys.iter().map(|k| ym[*k]).collect();
            let fit = loglog_fit(&xs, &ys)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
        }
        Command::Run(c) => {
            let mut cfg = PipelineConfig::from_file(&c.config)?;
            if let Some(root) = c.output_root {
                // relative to the working directory, not the config file
                cfg.output.root = std::path::absolute(&root)?;
            }
            if let Some(q) = c.top_fraction {
                cfg.selection.top_fraction = q;
            }
            c.years.apply(&mut cfg);
            c.metric.apply(&mut cfg);
            c.windows.apply(&mut cfg);
            c.cluster.apply(&mut cfg);
            c.rank.apply(&mut cfg);
            let summary = pipeline::run_pipeline(&cfg)?;
            for s in &summary.manifest.stages {
                eprintln!("{:<9} {:>8.3}s  {} files", s.name, s.seconds, s.outputs.len());
            }
            if summary.manifest.status != RunStatus::Complete {
                bail!("run incomplete");
            }
            println!("{}", summary.run_dir.display());
        }
        Command::Synth(c) => {
            let mut sc = SynthConfig { works: c.works, seed: c.seed, ..Default::default() };
            if let Some(v) = c.first_year {
                sc.first_year = v;
            }
            if let Some(v) = c.last_year {
                sc.last_year = v;
            }
            if let Some(v) = c.subfields {
                sc.subfields = v;
            }
            if let Some(v) = c.countries {
                sc.countries = v;
            }
            let config = synth::write_bundle(&sc, &c.out)?;
            info!("wrote {} works to {}", sc.works, c.out.display());
            println!("{}", config.display());
        }
    }
    Ok(())
}

