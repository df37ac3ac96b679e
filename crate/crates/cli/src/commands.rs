use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbk_core::edgelist::{read_graph, write_graph};
use sbk_core::oracle::{self, Verdict};
use sbk_core::randgen::{self, BranchingModel, ExpectedSize, PlantedGraphSpec, DEFAULT_MAX_NODES};
use sbk_core::report;
use sbk_core::{Error, Result, VertexId};

use crate::pipeline::{self, PipelineConfig};

#[derive(Parser, Debug)]
#[command(
    name = "sbk",
    version,
    propagate_version = true,
    about = "Superbubble detection in assembly graphs"
)]
pub struct Cli {
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1, env = "SBK_THREADS")]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a de Bruijn graph over solid k-mers of a FASTA/FASTQ file.
    BuildGraph(BuildGraphArgs),
    /// Compact a graph into its unipath graph.
    Compact(CompactArgs),
    /// Enumerate superbubbles.
    FindSuperbubbles(FindArgs),
    /// Check the superbubble conditions by brute force.
    OracleCheck(OracleCheckArgs),
    /// List every superbubble of a small graph by brute force.
    OracleEnum(OracleEnumArgs),
    /// Generate a graph with planted superbubbles.
    GenRandom(GenRandomArgs),
    /// Monte-Carlo estimate of Galton-Watson tree sizes.
    GwSim(GwSimArgs),
    /// Size histogram and path-length ratios of a superbubble list.
    Stats(StatsArgs),
    /// build-graph, compact, find-superbubbles and stats in one run.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
pub struct KmerArgs {
    /// k-mer length.
    #[arg(short = 'k', long, default_value_t = pipeline::DEFAULT_K, env = "SBK_K")]
    pub k: usize,
    /// Minimum multiplicity of a solid k-mer.
    #[arg(short = 'd', long, default_value_t = pipeline::DEFAULT_D, env = "SBK_D")]
    pub d: u64,
    /// Merge each k-mer with its reverse complement.
    #[arg(long, env = "SBK_CANONICAL")]
    pub canonical: bool,
}

#[derive(Args, Debug)]
pub struct BuildGraphArgs {
    #[arg(long)]
    pub reads: PathBuf,
    #[command(flatten)]
    pub kmer: KmerArgs,
    /// Edge list (`.sbg` for binary); k-mer names go to `<out>.names`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompactArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Tsv,
}

#[derive(Args, Debug)]
pub struct FindArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Smallest superbubble to report, in vertices.
    #[arg(long, default_value_t = pipeline::DEFAULT_MIN_SIZE, env = "SBK_MIN_SIZE")]
    pub min_size: usize,
    #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
    pub report: ReportFormat,
    /// Print the size histogram to stderr.
    #[arg(long)]
    pub stats: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Check one ordered pair instead of every reachable pair.
    #[arg(long, num_args = 2, value_names = ["S", "T"])]
    pub pair: Option<Vec<u32>>,
    #[arg(long, default_value_t = oracle::DEFAULT_MAX_VERTICES)]
    pub max_vertices: usize,
}

#[derive(Args, Debug)]
pub struct OracleEnumArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = oracle::DEFAULT_MAX_VERTICES)]
    pub max_vertices: usize,
}

#[derive(Args, Debug)]
pub struct GenRandomArgs {
    /// JSON generator spec.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the known superbubbles here as TSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Overrides the seed in the spec.
    #[arg(long, env = "SBK_SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GwSimArgs {
    /// Probability that a node has indegree one.
    #[arg(short = 'p', long)]
    pub p: f64,
    /// Child-count distribution as `i:p_i,...`.
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0, env = "SBK_SEED")]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    pub max_nodes: u64,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Superbubble list, TSV or JSON report.
    #[arg(long)]
    pub bubbles: PathBuf,
    #[arg(long, default_value_t = pipeline::DEFAULT_THRESHOLD, env = "SBK_THRESHOLD")]
    pub threshold: f64,
    /// Smallest superbubble entering the ratio summary.
    #[arg(long, default_value_t = pipeline::DEFAULT_STATS_MIN_SIZE)]
    pub min_size: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[arg(long)]
    pub reads: PathBuf,
    #[command(flatten)]
    pub kmer: KmerArgs,
    #[arg(long, default_value_t = pipeline::DEFAULT_MIN_SIZE, env = "SBK_MIN_SIZE")]
    pub min_size: usize,
    #[arg(long, default_value_t = pipeline::DEFAULT_THRESHOLD, env = "SBK_THRESHOLD")]
    pub threshold: f64,
    #[arg(long, default_value_t = pipeline::DEFAULT_STATS_MIN_SIZE)]
    pub stats_min_size: usize,
    #[arg(long, default_value_t = 0, env = "SBK_SEED")]
    pub seed: u64,
    /// Directory for all artifacts.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::io(path.unwrap_or(Path::new("<stdout>")), e)
}

fn verdict_row(w: &mut dyn Write, s: VertexId, t: VertexId, v: &Verdict) -> io::Result<()> {
    let b = |x: bool| if x { "yes" } else { "no" };
    writeln!(
        w,
        "{s}\t{t}\t{}\t{}\t{}\t{}\t{}",
        b(v.reachability),
        b(v.matching),
        b(v.acyclicity),
        b(v.minimality),
        b(v.is_superbubble())
    )
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    if threads < 1 {
        return Err(Error::usage("threads must be at least 1"));
    }
    match cli.command {
        Command::BuildGraph(a) => {
            pipeline::check_params(a.kmer.k, a.kmer.d, pipeline::DEFAULT_MIN_SIZE, threads)?;
            pipeline::with_threads(threads, || {
                pipeline::build_graph_stage(&a.reads, a.kmer.k, a.kmer.d, a.kmer.canonical, &a.out)
            })??;
        }
        Command::Compact(a) => {
            pipeline::compact_stage(&a.input, &a.out)?;
        }
        Command::FindSuperbubbles(a) => {
            if a.min_size < 2 {
                return Err(Error::usage(format!(
                    "min-size must be at least 2, got {}",
                    a.min_size
                )));
            }
            let g = read_graph(&a.input)?;
            let detection = pipeline::with_threads(threads, || pipeline::detect(&g, a.min_size))??;
            if a.stats {
                let h = sbk_core::stats::size_histogram(&pipeline::report_bubbles(&detection));
                eprintln!("size\tcount");
                for (label, count) in sbk_core::stats::BUCKET_LABELS.iter().zip(h.counts) {
                    eprintln!("{label}\t{count}");
                }
                eprintln!("visited_total\t{}", detection.visited_total);
                eprintln!("wall_time_seconds\t{:.6}", detection.wall_time_seconds);
            }
            let out = a.out.as_deref();
            let mut w = output(out)?;
            match a.report {
                ReportFormat::Tsv => {
                    pipeline::write_bubbles_tsv(&detection, &mut w).map_err(io_err(out))?
                }
                ReportFormat::Json => {
                    serde_json::to_writer_pretty(&mut w, &detection)
                        .map_err(|e| io_err(out)(io::Error::other(e)))?;
                    w.write_all(b"\n").map_err(io_err(out))?;
                }
            }
            w.flush().map_err(io_err(out))?;
        }
        Command::OracleCheck(a) => {
            let g = read_graph(&a.input)?;
            let mut w = output(None)?;
            writeln!(
                w,
                "#s\tt\treachability\tmatching\tacyclicity\tminimality\tsuperbubble"
            )
            .map_err(io_err(None))?;
            match a.pair {
                Some(pair) => {
                    let (s, t) = (VertexId(pair[0]), VertexId(pair[1]));
                    let v = oracle::is_superbubble(&g, s, t)?;
                    verdict_row(&mut w, s, t, &v).map_err(io_err(None))?;
                }
                None => {
                    if g.vertex_count() > a.max_vertices {
                        return Err(Error::usage(format!(
                            "all-pairs check limited to {} vertices, graph has {}; use --pair or --max-vertices",
                            a.max_vertices,
                            g.vertex_count()
                        )));
                    }
                    for s in g.vertices() {
                        for t in g.vertices().filter(|&t| t != s) {
                            let v = oracle::is_superbubble(&g, s, t)?;
                            if v.reachability {
                                verdict_row(&mut w, s, t, &v).map_err(io_err(None))?;
                            }
                        }
                    }
                }
            }
            w.flush().map_err(io_err(None))?;
        }
        Command::OracleEnum(a) => {
            let g = read_graph(&a.input)?;
            let found = oracle::enumerate_brute_force_bounded(&g, a.max_vertices)?;
            let mut w = output(None)?;
            report::write_tsv(&found, &mut w).map_err(io_err(None))?;
        }
        Command::GenRandom(a) => {
            let text = std::fs::read_to_string(&a.spec).map_err(|e| Error::io(&a.spec, e))?;
            let mut spec: PlantedGraphSpec =
                serde_json::from_str(&text).map_err(|e| Error::Input {
                    line: Some(e.line()),
                    message: e.to_string(),
                })?;
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
            let planted = randgen::generate_planted_graph(&spec)?;
            write_graph(&a.out, &planted.graph)?;
            if let Some(truth) = a.truth.as_deref() {
                let mut w = output(Some(truth))?;
                report::write_tsv(&planted.truth, &mut w).map_err(io_err(Some(truth)))?;
            }
            log::info!(
                "stage=gen-random vertices={} edges={} superbubbles={} seed={}",
                planted.graph.vertex_count(),
                planted.graph.edge_count(),
                planted.truth.len(),
                spec.seed
            );
        }
        Command::GwSim(a) => {
            let model = BranchingModel::with_dist_str(a.p, &a.dist)?;
            let summary = pipeline::with_threads(threads, || {
                randgen::run_gw_trials(&model, a.trials, a.seed, a.max_nodes)
            })??;
            let mut w = output(None)?;
            if a.json {
                serde_json::to_writer_pretty(&mut w, &summary)
                    .map_err(|e| io_err(None)(io::Error::other(e)))?;
                writeln!(w).map_err(io_err(None))?;
            } else {
                let expected = match summary.expected {
                    ExpectedSize::Finite(x) => format!("{x:.6}"),
                    ExpectedSize::Infinite => "inf".to_string(),
                };
                writeln!(
                    w,
                    "trials\t{}\ntruncated\t{}\nr\t{:.6}\nmean\t{:.6}\nvariance\t{:.6}\nstandard_error\t{:.6}\nexpected_1_over_1_minus_r\t{}",
                    summary.trials,
                    summary.truncated,
                    summary.r,
                    summary.mean,
                    summary.variance,
                    summary.standard_error,
                    expected
                )
                .map_err(io_err(None))?;
            }
            w.flush().map_err(io_err(None))?;
        }
        Command::Stats(a) => {
            let g = read_graph(&a.input)?;
            let source = pipeline::read_bubbles(&a.bubbles)?;
            let report = pipeline::stats_stage(&g, &source, a.threshold, a.min_size)?;
            match a.out.as_deref() {
                Some(p) => pipeline::write_json(p, &report)?,
                None => {
                    let mut w = output(None)?;
                    serde_json::to_writer_pretty(&mut w, &report)
                        .map_err(|e| io_err(None)(io::Error::other(e)))?;
                    writeln!(w).and_then(|_| w.flush()).map_err(io_err(None))?;
                }
            }
        }
        Command::Pipeline(a) => {
            let config = PipelineConfig {
                reads: a.reads,
                out_dir: a.out_dir,
                k: a.kmer.k,
                d: a.kmer.d,
                canonical: a.kmer.canonical,
                min_size: a.min_size,
                threshold: a.threshold,
                stats_min_size: a.stats_min_size,
                threads,
                seed: a.seed,
            };
            let summary = pipeline::run_pipeline(&config)?;
            log::info!(
                "stage=pipeline debruijn_vertices={} unipath_vertices={} superbubbles={} out_dir={}",
                summary.debruijn_vertices,
                summary.unipath_vertices,
                summary.superbubbles,
                config.out_dir.display()
            );
        }
    }
    Ok(())
}
