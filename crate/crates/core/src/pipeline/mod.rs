//! End-to-end orchestration: ingest, scoring, selection, series and panels,
//! trajectory clustering, complexity ranking and comparison statistics.
//!
//! Every stage writes delimited-text outputs below the run directory and
//! records their checksums in `manifest.json`.

pub mod config;
pub mod io;
pub mod manifest;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use log::info;
use serde::Serialize;

pub use config::PipelineConfig;
pub use io::{OutputFile, Outputs};
pub use manifest::{Manifest, RunStatus, StageRecord, StageStatus};

use crate::breakthrough::{
    country_subfield_counts, select_breakthroughs, subfield_series, BreakthroughRecord, PanelLabels, PanelMatrix,
    SeriesTable, Selection, YearWindow,
};
use crate::complexity::{binarize, genepy_scores, rca, GenepyResult};
use crate::corpus::{ingest_files, write_snapshot, CitationCorpus, IngestReport, WorkIdx};
use crate::dynamics::{
    cluster_mean_trajectory, distance_matrix, leiden_clusters, resolve_sigma, similarity_matrix,
    trajectories_from_series, ClusteringResult,
};
use crate::error::{Error, Result};
use crate::impact::{score_all, BreakthroughClass, ImpactScores};
use crate::stats::{gerd_window_mean, loglog_fit, read_indicator_file, spearman, IndicatorTable};

pub const STAGES: [&str; 7] = ["ingest", "metrics", "select", "panels", "cluster", "rank", "analysis"];

const KINDS: [BreakthroughClass; 2] = [BreakthroughClass::Disruptive, BreakthroughClass::Consolidating];

pub fn stage_ingest(cfg: &PipelineConfig, out: &mut Outputs) -> Result<(CitationCorpus, IngestReport)> {
    let (corpus, report) =
        ingest_files(&cfg.corpus_paths(), &cfg.corpus.schema, cfg.corpus.first_year..=cfg.corpus.last_year)?;
    if corpus.is_empty() {
        return Err(Error::InsufficientData("no works survived ingestion".into()));
    }
    let mut snap = Vec::new();
    write_snapshot(&corpus, &mut snap)?;
    out.write("corpus.snapshot", &snap)?;
    out.write_str("ingest_report.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    info!("ingested {} works, {} edges", corpus.len(), corpus.edge_count());
    Ok((corpus, report))
}

pub fn stage_metrics(
    cfg: &PipelineConfig,
    corpus: &CitationCorpus,
    out: &mut Outputs,
) -> Result<BTreeMap<WorkIdx, ImpactScores<f64>>> {
    let scores = score_all::<f64>(corpus, &cfg.nbnc_options(), cfg.metrics.first_year..=cfg.metrics.last_year);
    out.write_str("metrics.tsv", &io::metrics_text(corpus, &scores)?)?;
    info!("scored {} works", scores.len());
    Ok(scores)
}

pub fn stage_select(
    cfg: &PipelineConfig,
    corpus: &CitationCorpus,
    scores: &BTreeMap<WorkIdx, ImpactScores<f64>>,
    out: &mut Outputs,
) -> Result<Selection<f64>> {
    let sel = select_breakthroughs(
        corpus,
        scores,
        cfg.selection.top_fraction,
        cfg.metrics.first_year..=cfg.metrics.last_year,
    )?;
    out.write_str("breakthroughs.tsv", &io::breakthroughs_text(&sel.records)?)?;
    let mut per_year = String::from("year\tscored\tselected\n");
    for (year, n) in &sel.scored_per_year {
        let k = sel.in_year(*year).count();
        let _ = writeln!(per_year, "{year}\t{n}\t{k}");
    }
    out.write_str("selection.tsv", &per_year)?;
    info!("selected {} breakthroughs", sel.records.len());
    Ok(sel)
}

pub struct PanelOutputs {
    pub series: SeriesTable<f64>,
    pub labels: PanelLabels,
    pub panels: Vec<PanelMatrix>,
}

pub fn stage_panels(
    cfg: &PipelineConfig,
    corpus: &CitationCorpus,
    records: &[BreakthroughRecord<f64>],
    out: &mut Outputs,
) -> Result<PanelOutputs> {
    let allow = cfg.allowlist();
    let series = subfield_series(records, corpus, cfg.metrics.first_year..=cfg.metrics.last_year, allow.as_ref());
    out.write_str("series/series.tsv", &io::series_text(&series))?;
    out.write_str("series/subfields.txt", &io::labels_text(series.series.keys()))?;
    let labels = PanelLabels::from_records(records, allow.as_ref());
    let mut panels = Vec::new();
    for w in cfg.windows()? {
        for kind in KINDS {
            panels.push(country_subfield_counts(records, w, kind, &labels));
        }
    }
    io::write_panels(out, "panels", &labels, &panels)?;
    Ok(PanelOutputs { series, labels, panels })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterSummary {
    pub trajectories: usize,
    pub sigma: f64,
    pub seed: u64,
    pub resolution: f64,
    pub modularity: f64,
    pub clusters: usize,
    pub singletons: usize,
}

pub fn stage_cluster(
    cfg: &PipelineConfig,
    series: &SeriesTable<f64>,
    out: &mut Outputs,
) -> Result<ClusteringResult<f64>> {
    let traj = trajectories_from_series(series, None);
    if traj.len() < 2 {
        return Err(Error::InsufficientData(format!("{} subfield trajectories, need at least 2", traj.len())));
    }
    let labels: Vec<u32> = traj.iter().map(|t| t.id).collect();
    let points: Vec<Vec<[f64; 2]>> = traj.iter().map(|t| t.points.clone()).collect();
    let d = distance_matrix(&labels, &points, cfg.clustering.dtw)?;
    let sigma = resolve_sigma(&d, cfg.sigma_policy());
    let sim = similarity_matrix(&d, sigma)?;
    let res = leiden_clusters(&sim, cfg.clustering.resolution, cfg.clustering.seed)?;
    let means = cluster_mean_trajectory(&res, &traj)?;

    out.write_str("clusters/labels.txt", &io::labels_text(&d.labels))?;
    out.write_str("clusters/dtw.tsv", &io::matrix_text(&d.values))?;
    out.write_str("clusters/similarity.tsv", &io::matrix_text(&sim.values))?;
    let mut assign = String::from("subfield\tcluster\tsingleton\n");
    for (i, l) in res.labels.iter().enumerate() {
        let c = res.cluster[i].map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(assign, "{l}\t{c}\t{}", u8::from(res.singleton[i]));
    }
    out.write_str("clusters/assignments.tsv", &assign)?;
    let mut mt = String::from("cluster\tyear\tscaled_cn\tscaled_di\n");
    for (c, t) in &means {
        for (y, p) in t.years.iter().zip(&t.points) {
            let _ = writeln!(mt, "{c}\t{y}\t{}\t{}", p[0], p[1]);
        }
    }
    out.write_str("clusters/mean_trajectories.tsv", &mt)?;
    let summary = ClusterSummary {
        trajectories: traj.len(),
        sigma,
        seed: res.seed,
        resolution: res.resolution,
        modularity: res.modularity,
        clusters: res.cluster_count(),
        singletons: res.singleton_count(),
    };
    out.write_str("clusters/summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    info!("{} clusters, {} singletons", summary.clusters, summary.singletons);
    Ok(res)
}

/// Complexity ranking of one window and class.
#[derive(Clone, Debug)]
pub struct WindowRanking {
    pub window: YearWindow,
    pub kind: BreakthroughClass,
    /// `None` when the panel had nothing to rank.
    pub result: Option<(GenepyResult<f64>, GenepyResult<f64>)>,
    pub note: Option<String>,
}

#[derive(Serialize)]
struct RankDiagnostics {
    window: String,
    kind: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    countries: usize,
    subfields: usize,
    pruned_countries: Vec<String>,
    pruned_subfields: Vec<String>,
    eigenvalues_countries: Vec<f64>,
    eigenvalues_subfields: Vec<f64>,
    iterations: [usize; 2],
    max_residual: [f64; 2],
    degenerate_extra: [usize; 2],
}

fn eigen_text(r: &GenepyResult<f64>) -> String {
    let mut s = String::from("label");
    for i in 0..r.eigenvalues.len() {
        let _ = write!(s, "\tx{}", i + 1);
    }
    s.push('\n');
    for (e, l) in r.labels.iter().enumerate() {
        s.push_str(l);
        for i in 0..r.eigenvalues.len() {
            let _ = write!(s, "\t{}", r.eigenvectors[[e, i]]);
        }
        s.push('\n');
    }
    s
}

pub fn stage_rank(cfg: &PipelineConfig, panels: &[PanelMatrix], out: &mut Outputs) -> Result<Vec<WindowRanking>> {
    let opts = cfg.genepy_options();
    let mut rankings = Vec::new();
    let mut diags = Vec::new();
    for p in panels {
        let dir = format!("ranks/{}_{}", p.window.label(), p.kind);
        let mut diag = RankDiagnostics {
            window: p.window.label(),
            kind: p.kind.to_string(),
            status: "skipped",
            note: None,
            countries: 0,
            subfields: 0,
            pruned_countries: vec![],
            pruned_subfields: vec![],
            eigenvalues_countries: vec![],
            eigenvalues_subfields: vec![],
            iterations: [0; 2],
            max_residual: [0.0; 2],
            degenerate_extra: [0; 2],
        };
        if p.total() == 0 {
            diag.note = Some("empty panel".into());
            rankings.push(WindowRanking { window: p.window, kind: p.kind, result: None, note: diag.note.clone() });
            diags.push(diag);
            continue;
        }
        let r = rca::<f64>(p)?;
        let m = binarize(&r, cfg.ranking.rca_threshold)?;
        out.write_str(&format!("{dir}/rca.tsv"), &io::matrix_text(&r.values))?;
        out.write_str(&format!("{dir}/rca_rows.txt"), &io::labels_text(&r.rows))?;
        out.write_str(&format!("{dir}/rca_cols.txt"), &io::labels_text(&r.cols))?;
        out.write_str(&format!("{dir}/m.tsv"), &io::matrix_text(&m.m))?;
        out.write_str(&format!("{dir}/m_rows.txt"), &io::labels_text(&m.rows))?;
        out.write_str(&format!("{dir}/m_cols.txt"), &io::labels_text(&m.cols))?;
        diag.pruned_countries = m.pruned_rows.clone();
        diag.pruned_subfields = m.pruned_cols.clone();
        if m.is_empty() {
            diag.note = Some("no entry reaches the RCA threshold".into());
            rankings.push(WindowRanking { window: p.window, kind: p.kind, result: None, note: diag.note.clone() });
            diags.push(diag);
            continue;
        }
        let (c, s) = genepy_scores(&m, &opts).inspect_err(|e| {
            log::error!("ranking {} {} failed: {e}", p.window.label(), p.kind);
        })?;
        let mut ev = String::from("side\tindex\teigenvalue\n");
        for r in [&c, &s] {
            for (i, l) in r.eigenvalues.iter().enumerate() {
                let _ = writeln!(ev, "{}\t{}\t{l}", r.side.as_str(), i + 1);
            }
        }
        out.write_str(&format!("{dir}/eigenvalues.tsv"), &ev)?;
        out.write_str(&format!("{dir}/eigenvectors_countries.tsv"), &eigen_text(&c))?;
        out.write_str(&format!("{dir}/eigenvectors_subfields.tsv"), &eigen_text(&s))?;
        out.write_str(&format!("{dir}/countries.tsv"), &io::rank_table_text(&c.table()))?;
        out.write_str(&format!("{dir}/subfields.tsv"), &io::rank_table_text(&s.table()))?;
        diag.status = "ok";
        diag.countries = c.labels.len();
        diag.subfields = s.labels.len();
        diag.eigenvalues_countries = c.eigenvalues.clone();
        diag.eigenvalues_subfields = s.eigenvalues.clone();
        diag.iterations = [c.iterations, s.iterations];
        diag.max_residual = [c.max_residual, s.max_residual];
        diag.degenerate_extra = [c.degenerate_extra, s.degenerate_extra];
        diags.push(diag);
        rankings.push(WindowRanking { window: p.window, kind: p.kind, result: Some((c, s)), note: None });
    }
    out.write_str("ranks/manifest.json", &(serde_json::to_string_pretty(&diags)? + "\n"))?;
    Ok(rankings)
}

fn na_or<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Spearman correlations against each configured indicator and log-log fits
/// of breakthrough counts and ranks against mean R&D expenditure.
pub fn stage_analysis(
    cfg: &PipelineConfig,
    rankings: &[WindowRanking],
    panels: &[PanelMatrix],
    out: &mut Outputs,
) -> Result<()> {
    let mut corr = String::from("indicator\twindow\tkind\tperiod\tn\trho\tonly_ranked\tonly_indicator\n");
    for ind in &cfg.analysis.indicators {
        let table = read_indicator_file(&cfg.resolve(&ind.path))?;
        for r in rankings {
            let Some((countries, _)) = &r.result else { continue };
            let label = r.window.label();
            let period = if table.periods().contains(&label) { label.clone() } else { "all".to_string() };
            let values = table.for_period(&period);
            let ranks: BTreeMap<String, f64> =
                countries.labels.iter().cloned().zip(countries.tie_ranks.iter().map(|&t| t as f64)).collect();
            let (n, rho, a, b) = match spearman(&ranks, &values) {
                Ok(s) => (Some(s.n), Some(s.rho), s.only_in_a.join(";"), s.only_in_b.join(";")),
                Err(Error::InsufficientData(_)) | Err(Error::InvalidArgument(_)) => (None, None, String::new(), String::new()),
                Err(e) => return Err(e),
            };
            let _ = writeln!(corr, "{}\t{label}\t{}\t{period}\t{}\t{}\t{a}\t{b}", ind.name, r.kind, na_or(n), na_or(rho));
        }
    }
    out.write_str("analysis/correlations.tsv", &corr)?;

    let mut counts: BTreeMap<BreakthroughClass, IndicatorTable> = BTreeMap::new();
    for p in panels {
        let t = counts.entry(p.kind).or_default();
        for (i, c) in p.countries.iter().enumerate() {
            let n: u64 = p.counts.row(i).sum();
            if n > 0 {
                t.insert(&c.to_string(), &p.window.label(), n as f64);
            }
        }
    }
    for (kind, t) in &counts {
        out.write_str(&format!("analysis/counts_{kind}.tsv"), &t.to_tsv())?;
    }

    let mut fits = String::from("window\tkind\ttarget\tn\texponent\tprefactor\tresidual\n");
    if let (Some(pct), Some(gdp)) = (&cfg.analysis.gerd_percent, &cfg.analysis.gdp) {
        let pct = read_indicator_file(&cfg.resolve(pct))?;
        let gdp = read_indicator_file(&cfg.resolve(gdp))?;
        let mut gerd = IndicatorTable::default();
        let mut coverage = String::from("country\twindow\tyears_covered\tcoverage\n");
        let windows = cfg.windows()?;
        for w in &windows {
            for (c, g) in gerd_window_mean(&pct, &gdp, *w) {
                gerd.insert(&c, &w.label(), g.value);
                let _ = writeln!(coverage, "{c}\t{}\t{}\t{}", w.label(), g.years_covered, g.coverage);
            }
        }
        out.write_str("analysis/gerd.tsv", &gerd.to_tsv())?;
        out.write_str("analysis/gerd_coverage.tsv", &coverage)?;
        for r in rankings {
            let label = r.window.label();
            let x = gerd.for_period(&label);
            let count_y = counts.get(&r.kind).map(|t| t.for_period(&label)).unwrap_or_default();
            let rank_y: BTreeMap<String, f64> = match &r.result {
                Some((c, _)) => c.labels.iter().cloned().zip(c.tie_ranks.iter().map(|&t| t as f64)).collect(),
                None => BTreeMap::new(),
            };
            for (target, y) in [("count", &count_y), ("rank", &rank_y)] {
                let keys: Vec<&String> = x.keys().filter(|k| y.contains_key(*k)).collect();
                let xs: Vec<f64> = keys.iter().map(|k| x[*k]).collect();
                let ys: Vec<f64> = keys.iter().map(|k| y[*k]).collect();
                let fit = loglog_fit(&xs, &ys).ok();
                let _ = writeln!(
                    fits,
                    "{label}\t{}\t{target}\t{}\t{}\t{}\t{}",
                    r.kind,
                    keys.len(),
                    na_or(fit.map(|f| f.exponent)),
                    na_or(fit.map(|f| f.prefactor)),
                    na_or(fit.map(|f| f.residual))
                );
            }
        }
    }
    out.write_str("analysis/fits.tsv", &fits)?;
    Ok(())
}

#[derive(Debug)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub manifest: Manifest,
}

fn prepare_run_dir(dir: &std::path::Path) -> Result<()> {
    if dir.exists() {
        if !dir.join(Manifest::FILE).is_file() {
            return Err(Error::Config(format!(
                "{} exists but holds no run manifest; refusing to overwrite it",
                dir.display()
            )));
        }
        std::fs::remove_dir_all(dir)?;
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Runs every stage in order. A failing stage is recorded in the manifest,
/// later stages are left as not run, and the error is returned with the
/// stage name attached.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let run_dir = cfg.run_dir();
    prepare_run_dir(&run_dir)?;
    let mut out = Outputs::new(&run_dir)?;
    out.write_str("config.toml", &cfg.canonical().to_toml_string()?)?;
    let config_file = out.take();
    let mut manifest = Manifest::new(cfg.hash(), &STAGES);
    manifest.save(&run_dir)?;

    let mut run = |name: &'static str, manifest: &mut Manifest, f: &mut dyn FnMut(&mut Outputs) -> Result<()>| {
        info!("stage {name}");
        let t0 = Instant::now();
        let res = f(&mut out);
        let rec = manifest.stage_mut(name);
        rec.seconds = t0.elapsed().as_secs_f64();
        rec.outputs = out.take();
        if name == STAGES[0] {
            rec.outputs.splice(0..0, config_file.iter().cloned());
        }
        match res {
            Ok(()) => {
                rec.status = StageStatus::Ok;
                manifest.save(&run_dir)?;
                Ok(())
            }
            Err(e) => {
                rec.status = StageStatus::Failed;
                rec.error = Some(e.to_string());
                manifest.save(&run_dir)?;
                Err(Error::Stage { stage: name, source: Box::new(e) })
            }
        }
    };

    let mut corpus = None;
    run("ingest", &mut manifest, &mut |o| {
        corpus = Some(stage_ingest(cfg, o)?.0);
        Ok(())
    })?;
    let corpus = corpus.expect("set by ingest");
    let mut scores = BTreeMap::new();
    run("metrics", &mut manifest, &mut |o| {
        scores = stage_metrics(cfg, &corpus, o)?;
        Ok(())
    })?;
    let mut selection = None;
    run("select", &mut manifest, &mut |o| {
        selection = Some(stage_select(cfg, &corpus, &scores, o)?);
        Ok(())
    })?;
    let selection = selection.expect("set by select");
    let mut panels = None;
    run("panels", &mut manifest, &mut |o| {
        panels = Some(stage_panels(cfg, &corpus, &selection.records, o)?);
        Ok(())
    })?;
    let panels = panels.expect("set by panels");
    run("cluster", &mut manifest, &mut |o| stage_cluster(cfg, &panels.series, o).map(|_| ()))?;
    let mut rankings = Vec::new();
    run("rank", &mut manifest, &mut |o| {
        rankings = stage_rank(cfg, &panels.panels, o)?;
        Ok(())
    })?;
    run("analysis", &mut manifest, &mut |o| stage_analysis(cfg, &rankings, &panels.panels, o))?;

    manifest.status = RunStatus::Complete;
    manifest.save(&run_dir)?;
    Ok(RunSummary { run_dir, manifest })
}
