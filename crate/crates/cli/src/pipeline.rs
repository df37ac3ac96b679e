//! Pipeline stages shared by the standalone subcommands and `pipeline`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use sbk_core::debruijn::{build_debruijn, count_kmers_with, solid_kmers, DeBruijnGraph};
use sbk_core::edgelist::{names_path, read_graph, read_names, write_graph, write_names};
use sbk_core::fastx::read_fastx_file;
use sbk_core::report::{self, BubbleRecord, DetectionReport};
use sbk_core::stats::{build_report, SuperbubbleReport};
use sbk_core::superbubble::{enumerate_parallel, DetectOptions};
use sbk_core::unipath::{compact, UnipathGraph};
use sbk_core::{DirectedMultigraph, Error, Result, Superbubble};
use serde::Serialize;

pub const DEFAULT_K: usize = 27;
pub const DEFAULT_D: u64 = 3;
pub const DEFAULT_MIN_SIZE: usize = 2;
pub const DEFAULT_THRESHOLD: f64 = 1.05;
pub const DEFAULT_STATS_MIN_SIZE: usize = 5;

pub const DEBRUIJN_FILE: &str = "debruijn.tsv";
pub const UNIPATH_FILE: &str = "unipath.tsv";
pub const BUBBLES_TSV: &str = "bubbles.tsv";
pub const BUBBLES_JSON: &str = "bubbles.json";
pub const STATS_JSON: &str = "stats.json";

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub reads: PathBuf,
    pub out_dir: PathBuf,
    pub k: usize,
    pub d: u64,
    pub canonical: bool,
    pub min_size: usize,
    pub threshold: f64,
    pub stats_min_size: usize,
    pub threads: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(reads: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            reads: reads.into(),
            out_dir: out_dir.into(),
            k: DEFAULT_K,
            d: DEFAULT_D,
            canonical: false,
            min_size: DEFAULT_MIN_SIZE,
            threshold: DEFAULT_THRESHOLD,
            stats_min_size: DEFAULT_STATS_MIN_SIZE,
            threads: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_params(self.k, self.d, self.min_size, self.threads)
    }
}

pub fn check_params(k: usize, d: u64, min_size: usize, threads: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::usage(format!("k must be at least 2, got {k}")));
    }
    if d < 1 {
        return Err(Error::usage("d must be at least 1"));
    }
    if min_size < 2 {
        return Err(Error::usage(format!(
            "min-size must be at least 2, got {min_size}"
        )));
    }
    if threads < 1 {
        return Err(Error::usage("threads must be at least 1"));
    }
    Ok(())
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::usage(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn build_graph_stage(
    reads: &Path,
    k: usize,
    d: u64,
    canonical: bool,
    out: &Path,
) -> Result<DeBruijnGraph> {
    let start = Instant::now();
    let reads = read_fastx_file(reads)?;
    let table = count_kmers_with(&reads, k, canonical)?;
    let solid = solid_kmers(&table, d)?;
    let dbg = build_debruijn(&solid, k)?;
    write_graph(out, &dbg.graph)?;
    write_names(&names_path(out), dbg.names())?;
    info!(
        "stage=build-graph reads={} distinct_kmers={} solid={} vertices={} edges={} secs={:.3}",
        reads.len(),
        table.len(),
        solid.len(),
        dbg.graph.vertex_count(),
        dbg.graph.edge_count(),
        start.elapsed().as_secs_f64()
    );
    Ok(dbg)
}

/// Loads `path` and, when present, its `.names` side table.
pub fn load_graph_with_names(path: &Path) -> Result<(DirectedMultigraph, Option<Vec<Vec<u8>>>)> {
    let g = read_graph(path)?;
    let names_file = names_path(path);
    let names = if names_file.exists() {
        Some(read_names(&names_file)?)
    } else {
        None
    };
    Ok((g, names))
}

pub fn compact_stage(input: &Path, out: &Path) -> Result<UnipathGraph> {
    let start = Instant::now();
    let (g, names) = load_graph_with_names(input)?;
    let u = compact(&g, names.as_deref()).map_err(|e| match e {
        Error::Usage(m) => Error::input_nolines(m),
        other => other,
    })?;
    write_graph(out, &u.graph)?;
    if let Some(names) = u.names() {
        write_names(&names_path(out), names)?;
    }
    info!(
        "stage=compact in_vertices={} in_edges={} vertices={} edges={} secs={:.3}",
        g.vertex_count(),
        g.edge_count(),
        u.graph.vertex_count(),
        u.graph.edge_count(),
        start.elapsed().as_secs_f64()
    );
    Ok(u)
}

/// Enumerates superbubbles (on the current rayon pool) and keeps those with
/// at least `min_size` vertices.
pub fn detect(g: &DirectedMultigraph, min_size: usize) -> Result<DetectionReport> {
    let start = Instant::now();
    let found = enumerate_parallel(g, &DetectOptions::default())?;
    let wall = start.elapsed().as_secs_f64();
    let kept: Vec<BubbleRecord> = found
        .bubbles
        .iter()
        .filter(|sb| sb.size() >= min_size)
        .map(BubbleRecord::from)
        .collect();
    info!(
        "stage=find-superbubbles vertices={} edges={} superbubbles={} reported={} visited={} secs={:.3}",
        g.vertex_count(),
        g.edge_count(),
        found.bubbles.len(),
        kept.len(),
        found.visited_total,
        wall
    );
    Ok(DetectionReport {
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        min_size,
        visited_total: found.visited_total,
        aborts: found.aborts,
        wall_time_seconds: wall,
        superbubbles: kept,
    })
}

pub fn report_bubbles(report: &DetectionReport) -> Vec<Superbubble> {
    report
        .superbubbles
        .iter()
        .cloned()
        .map(Superbubble::from)
        .collect()
}

pub fn write_bubbles_tsv<W: Write>(report: &DetectionReport, w: W) -> std::io::Result<()> {
    report::write_tsv(&report_bubbles(report), w)
}

/// A bubble list is either a TSV listing or a JSON detection report.
pub enum BubbleSource {
    Tsv(Vec<Superbubble>),
    Report(DetectionReport),
}

impl BubbleSource {
    pub fn bubbles(&self) -> Vec<Superbubble> {
        match self {
            BubbleSource::Tsv(b) => b.clone(),
            BubbleSource::Report(r) => report_bubbles(r),
        }
    }
}

pub fn read_bubbles(path: &Path) -> Result<BubbleSource> {
    let mut text = String::new();
    File::open(path)
        .map(BufReader::new)
        .and_then(|mut r| r.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('{') {
        let report: DetectionReport = serde_json::from_str(&text).map_err(|e| Error::Input {
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        Ok(BubbleSource::Report(report))
    } else {
        Ok(BubbleSource::Tsv(report::read_tsv(text.as_bytes())?))
    }
}

pub fn stats_stage(
    g: &DirectedMultigraph,
    source: &BubbleSource,
    threshold: f64,
    min_size: usize,
) -> Result<SuperbubbleReport> {
    let bubbles = source.bubbles();
    for sb in &bubbles {
        for v in sb.vertex_set() {
            if v.index() >= g.vertex_count() {
                return Err(Error::input_nolines(format!(
                    "superbubble <{}, {}> names vertex {v} outside the graph",
                    sb.entrance, sb.exit
                )));
            }
        }
    }
    let mut report = build_report(g, &bubbles, threshold, min_size)?;
    if let BubbleSource::Report(r) = source {
        report.visited_total = Some(r.visited_total);
        report.wall_time_seconds = Some(r.wall_time_seconds);
    }
    info!(
        "stage=stats superbubbles={} ratio_min_size={} qualifying={} total={} fraction={:.4}",
        report.superbubbles,
        min_size,
        report.ratio_summary.qualifying,
        report.ratio_summary.total,
        report.ratio_summary.fraction
    );
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineSummary {
    pub debruijn_vertices: usize,
    pub debruijn_edges: usize,
    pub unipath_vertices: usize,
    pub unipath_edges: usize,
    pub superbubbles: usize,
    pub visited_total: u64,
}

/// build-graph, compact, find-superbubbles and stats, writing every
/// intermediate artifact into `config.out_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let dbg_path = config.out_dir.join(DEBRUIJN_FILE);
    let uni_path = config.out_dir.join(UNIPATH_FILE);
    let tsv_path = config.out_dir.join(BUBBLES_TSV);
    let json_path = config.out_dir.join(BUBBLES_JSON);
    let stats_path = config.out_dir.join(STATS_JSON);

    with_threads(config.threads, || -> Result<PipelineSummary> {
        let dbg = build_graph_stage(
            &config.reads,
            config.k,
            config.d,
            config.canonical,
            &dbg_path,
        )?;
        let uni = compact_stage(&dbg_path, &uni_path)?;
        let detection = detect(&uni.graph, config.min_size)?;
        write_bubbles_tsv(&detection, create(&tsv_path)?).map_err(|e| Error::io(&tsv_path, e))?;
        write_json(&json_path, &detection)?;
        let source = BubbleSource::Report(detection);
        let stats = stats_stage(&uni.graph, &source, config.threshold, config.stats_min_size)?;
        write_json(&stats_path, &stats)?;
        let BubbleSource::Report(detection) = source else {
            unreachable!()
        };
        Ok(PipelineSummary {
            debruijn_vertices: dbg.graph.vertex_count(),
            debruijn_edges: dbg.graph.edge_count(),
            unipath_vertices: uni.graph.vertex_count(),
            unipath_edges: uni.graph.edge_count(),
            superbubbles: detection.superbubbles.len(),
            visited_total: detection.visited_total,
        })
    })?
}
