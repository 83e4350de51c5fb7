//! Command-line frontend wiring ingestion, clustering, labeling, evaluation,
//! and benchmarking into reproducible runs.
//!
//! Every command is a pure function of (arguments, input files, seed):
//! re-running reproduces outputs bit-identically, timings excluded. The
//! effective configuration is echoed to stderr and stamped as a `#` header
//! into every emitted curve file.

use clap::{Args, Parser, Subcommand};
use modeseek::dataset::Dataset;
use modeseek::evaluation::{
    classification_error, learning_curve, nmi, timing_benchmark, CurveMethod, CurvePoint,
};
use modeseek::exact::ms_cluster;
use modeseek::fast::fms_cluster;
use modeseek::io::{
    ascii_grid, load_artifact, load_dataset, save_artifact, write_curves_csv, write_curves_svg,
    AxisScale, ClusteringArtifact, DataFormat, DatasetFile, LabelColumn,
};
use modeseek::kmeans::{kmeans_multilevel, KMeansOptions};
use modeseek::labeling::{
    active_label_capped, nest_levels, propagate_confidences, reject_curve, ConfidenceMatrix,
    LabelOracle,
};
use modeseek::multilevel::MultiLevelClustering;
use modeseek::schedule::NeighborhoodSchedule;
use modeseek::{Error, RandomSource};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "modeseek", version, about = "Multi-resolution kNN mode seeking clustering")]
struct Cli {
    /// Cap the number of worker threads (default: all cores). Outputs are
    /// identical for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a clusterer over a neighborhood schedule (or cluster counts) and
    /// write a clustering artifact.
    Cluster(ClusterArgs),
    /// Score an artifact against ground-truth labels (NMI per level).
    Evaluate(EvaluateArgs),
    /// Label prototypes through an oracle and classify the whole dataset.
    ActiveLearn(ActiveLearnArgs),
    /// Sweep confidence thresholds and report error against reject rate.
    Reject(RejectArgs),
    /// Measure wall-time scaling over dataset subsets and fit the exponent.
    Bench(BenchArgs),
}

#[derive(Args, Serialize)]
struct DataArgs {
    /// Input data file (csv, raw-f32, or idx).
    data: PathBuf,
    /// Format override; inferred from the extension when omitted.
    #[arg(long)]
    data_format: Option<String>,
    /// CSV label column: a 1-based index or a header name.
    #[arg(long)]
    label_col: Option<String>,
    /// Label file: side-car text labels (raw-f32) or an IDX label tensor.
    #[arg(long)]
    label_file: Option<PathBuf>,
    /// Treat the first CSV row as a header.
    #[arg(long)]
    csv_header: bool,
    /// Normalize every feature vector to sum to one.
    #[arg(long)]
    normalize: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Error> {
        let format = match &self.data_format {
            Some(name) => name.parse()?,
            None => DataFormat::from_extension(&self.data).ok_or_else(|| Error::Parse {
                path: self.data.display().to_string(),
                location: "extension".into(),
                message: "cannot infer format; pass --data-format".into(),
            })?,
        };
        let mut spec = DatasetFile::new(&self.data, format);
        if let Some(col) = &self.label_col {
            spec.label_column = Some(col.parse::<LabelColumn>()?);
        }
        spec.label_file = self.label_file.clone();
        spec.has_header = self.csv_header;
        spec.normalize = self.normalize;
        load_dataset(&spec)
    }
}

#[derive(Args, Serialize)]
struct ScheduleArgs {
    /// First neighborhood size of the geometric schedule.
    #[arg(long, default_value_t = modeseek::schedule::DEFAULT_BASE)]
    base: usize,
    /// Growth factor between consecutive sizes.
    #[arg(long, default_value_t = modeseek::schedule::DEFAULT_RATIO)]
    ratio: f64,
    /// Sizes stay below this fraction of the dataset.
    #[arg(long, default_value_t = modeseek::schedule::DEFAULT_CAP_FRACTION)]
    cap: f64,
}

impl ScheduleArgs {
    fn build(&self, n: usize) -> Result<NeighborhoodSchedule, Error> {
        NeighborhoodSchedule::geometric(n, self.base, self.ratio, self.cap)
    }
}

#[derive(Args, Serialize)]
struct ClusterArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Clusterer: ms, fms, or kmeans.
    #[arg(long, default_value = "fms")]
    algo: String,
    /// Cell complexity for fms.
    #[arg(long, default_value_t = 6)]
    c: usize,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// kMeans cluster counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    counts: Vec<usize>,
    /// kMeans iteration cap per count.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// kMeans wall-clock budget per count, seconds.
    #[arg(long)]
    time_budget_secs: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output artifact path.
    #[arg(long, default_value = "clustering.json")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    /// Clustering artifact produced by `cluster`.
    #[arg(long)]
    artifact: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output CSV of per-level NMI.
    #[arg(long, default_value = "nmi.csv")]
    out: PathBuf,
    /// Optional SVG chart.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LevelSelect {
    /// Exact level index in the artifact (low resolution first).
    #[arg(long)]
    level: Option<usize>,
    /// Pick the level whose cluster count is closest to this labeling
    /// budget (default 1000 when neither option is given).
    #[arg(long)]
    budget: Option<usize>,
}

impl LevelSelect {
    fn pick(&self, clustering: &MultiLevelClustering) -> Result<usize, Error> {
        match (self.level, self.budget) {
            (Some(level), _) => {
                if level >= clustering.levels.len() {
                    return Err(Error::InvalidParameter {
                        name: "level",
                        message: format!(
                            "level {level} out of range ({} levels)",
                            clustering.levels.len()
                        ),
                    });
                }
                Ok(level)
            }
            (None, Some(budget)) => Ok(clustering.level_closest_to_budget(budget)),
            (None, None) => Ok(clustering.level_closest_to_budget(1000)),
        }
    }
}

#[derive(Args, Serialize)]
struct ActiveLearnArgs {
    #[arg(long)]
    artifact: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Labeling method: al (single level), alc (confidence propagation),
    /// or aln (nested propagation).
    #[arg(long, default_value = "alc")]
    method: String,
    #[command(flatten)]
    select: LevelSelect,
    /// Oracle source: `labels` (ground truth) or `interactive` (prompts on
    /// stdout, answers on stdin, `?` skips a cluster).
    #[arg(long, default_value = "labels")]
    oracle: String,
    /// Stop prompting after this many queries (al only); the remaining
    /// clusters stay unlabeled and a partial report is written.
    #[arg(long)]
    max_queries: Option<usize>,
    /// Predictions CSV (object_id, label, confidence).
    #[arg(long, default_value = "predictions.csv")]
    predictions: PathBuf,
    /// Learning-curve CSV over all levels (ground-truth oracle only).
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long)]
    curves_svg: Option<PathBuf>,
    /// Include a Random-1NN baseline in the learning curves.
    #[arg(long)]
    baseline: bool,
    /// Baseline repetitions to average.
    #[arg(long, default_value_t = 10)]
    baseline_reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct RejectArgs {
    #[arg(long)]
    artifact: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    select: LevelSelect,
    /// Explicit thresholds, comma separated; overrides --threshold-steps.
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
    /// Number of uniform thresholds spanning [0, 1].
    #[arg(long, default_value_t = 51)]
    threshold_steps: usize,
    #[arg(long, default_value = "reject.csv")]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Algorithm to time: ms or fms.
    #[arg(long, default_value = "fms")]
    algo: String,
    #[arg(long, default_value_t = 6)]
    c: usize,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Subset sizes to time, comma separated (at least 3).
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Timed repetitions per size; the fastest run is recorded.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "timing.csv")]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: cannot configure {workers} workers: {e}");
            std::process::exit(1);
        }
    }
    let outcome = match cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::ActiveLearn(args) => cmd_active_learn(args),
        Command::Reject(args) => cmd_reject(args),
        Command::Bench(args) => cmd_bench(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// JSON echo of the effective configuration, logged and stamped on outputs.
fn config_echo(command: &str, args: &impl Serialize) -> String {
    let json = serde_json::to_string(args).unwrap_or_else(|_| "{}".into());
    let echo = format!(
        "modeseek {} {command} config: {json}",
        env!("CARGO_PKG_VERSION")
    );
    eprintln!("{echo}");
    echo
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), Error> {
    let echo = config_echo("cluster", &args);
    let dataset = args.data.load()?;
    let n = dataset.len();
    let mut params = BTreeMap::new();
    params.insert("config".to_string(), echo);

    let started = Instant::now();
    let clustering = match args.algo.as_str() {
        "ms" => {
            let schedule = args.schedule.build(n)?;
            params.insert("schedule".into(), format!("{:?}", schedule.sizes()));
            ms_cluster(&dataset, &schedule)?
        }
        "fms" => {
            let schedule = args.schedule.build(n)?;
            params.insert("schedule".into(), format!("{:?}", schedule.sizes()));
            params.insert("c".into(), args.c.to_string());
            let mut rng = RandomSource::new(args.seed);
            let out = fms_cluster(&dataset, &schedule, args.c, &mut rng)?;
            if out.stats.effective_c < args.c {
                eprintln!(
                    "warning: complexity clamped from {} to {} (prototype count)",
                    args.c, out.stats.effective_c
                );
            }
            let clamped: u64 = out.stats.clamp_counts.iter().map(|&(_, c)| c).sum();
            eprintln!(
                "cells: {} sampled, {} pruned, mean overlapping size {:.1}, {} clamped searches",
                out.stats.initial_prototypes,
                out.stats.pruned_cells,
                out.stats.mean_q_cell_size,
                clamped
            );
            params.insert(
                "distance_computations".into(),
                out.stats.distance_computations.to_string(),
            );
            out.clustering
        }
        "kmeans" => {
            if args.counts.is_empty() {
                return Err(Error::InvalidParameter {
                    name: "counts",
                    message: "kmeans needs --counts, e.g. --counts 10,100".into(),
                });
            }
            params.insert("counts".into(), format!("{:?}", args.counts));
            params.insert("max_iters".into(), args.max_iters.to_string());
            let options = KMeansOptions {
                max_iterations: args.max_iters,
                time_budget: args
                    .time_budget_secs
                    .map(std::time::Duration::from_secs_f64),
            };
            let rng = RandomSource::new(args.seed);
            kmeans_multilevel(&dataset, &args.counts, &options, &rng)?
        }
        other => {
            return Err(Error::InvalidParameter {
                name: "algo",
                message: format!("unknown algorithm `{other}` (expected ms, fms, or kmeans)"),
            });
        }
    };
    let seconds = started.elapsed().as_secs_f64();

    println!("{:>8} {:>10} {:>10}", "k", "clusters", "seconds");
    for level in &clustering.levels {
        println!("{:>8} {:>10} {:>10}", level.k, level.num_clusters(), "");
    }
    println!("{:>8} {:>10} {:>10.3}", "total", "", seconds);

    let artifact =
        ClusteringArtifact::from_clustering(&clustering, dataset.checksum(), params);
    save_artifact(&artifact, &args.out)?;
    eprintln!("artifact written to {}", args.out.display());
    Ok(())
}

/// Loads the artifact, the dataset, and verifies they belong together.
fn load_pair(
    artifact_path: &PathBuf,
    data: &DataArgs,
) -> Result<(ClusteringArtifact, Dataset, MultiLevelClustering), Error> {
    let artifact = load_artifact(artifact_path)?;
    let dataset = data.load()?;
    artifact.check_dataset(&dataset.checksum())?;
    let clustering = artifact.to_clustering()?;
    Ok((artifact, dataset, clustering))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let echo = config_echo("evaluate", &args);
    let (_, dataset, clustering) = load_pair(&args.artifact, &args.data)?;
    let labels = dataset.label_values().ok_or(Error::MissingLabels)?;

    let series = format!("nmi:{}", clustering.provenance.algorithm);
    let mut points = Vec::with_capacity(clustering.levels.len());
    println!("{:>8} {:>10} {:>10}", "k", "clusters", "nmi");
    for level in &clustering.levels {
        let value = nmi(&level.assignment, labels)?;
        println!("{:>8} {:>10} {:>10.4}", level.k, level.num_clusters(), value);
        points.push(CurvePoint {
            series: series.clone(),
            x: level.num_clusters() as f64,
            y: value,
        });
    }
    write_curves_csv(&points, &args.out, &[echo])?;
    if let Some(svg) = &args.svg {
        write_curves_svg(
            &points,
            svg,
            AxisScale::LogX,
            "clusters",
            "NMI",
            "clustering quality",
        )?;
    }
    eprintln!("curves written to {}", args.out.display());
    Ok(())
}

fn make_oracle(kind: &str, dataset: &Dataset) -> Result<LabelOracle, Error> {
    match kind {
        "labels" => LabelOracle::ground_truth(dataset),
        "interactive" => {
            let alphabet = dataset
                .labels()
                .map(|l| l.alphabet.clone())
                .unwrap_or_default();
            let rows: Vec<Vec<f64>> = (0..dataset.len())
                .map(|i| dataset.row(i).to_vec())
                .collect();
            let stdin = std::io::BufReader::new(std::io::stdin());
            Ok(
                LabelOracle::interactive(stdin, std::io::stdout(), alphabet).with_renderer(
                    move |id| rows.get(id).and_then(|row| ascii_grid(row)),
                ),
            )
        }
        other => Err(Error::InvalidParameter {
            name: "oracle",
            message: format!("unknown oracle `{other}` (expected labels or interactive)"),
        }),
    }
}

fn write_predictions(
    path: &PathBuf,
    echo: &str,
    predictions: &[Option<u32>],
    confidences: Option<&ConfidenceMatrix>,
    names: &[String],
) -> Result<(), Error> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# {echo}")?;
    writeln!(file, "object_id,label,confidence")?;
    for (i, pred) in predictions.iter().enumerate() {
        let label = match pred {
            Some(p) => names
                .get(*p as usize)
                .cloned()
                .unwrap_or_else(|| p.to_string()),
            None => "?".to_string(),
        };
        match confidences {
            Some(conf) => writeln!(file, "{i},{label},{}", conf.max_confidence(i))?,
            None => writeln!(file, "{i},{label},")?,
        }
    }
    Ok(())
}

fn cmd_active_learn(args: ActiveLearnArgs) -> Result<(), Error> {
    let echo = config_echo("active-learn", &args);
    let (_, dataset, clustering) = load_pair(&args.artifact, &args.data)?;

    let walked = match args.method.as_str() {
        "aln" => nest_levels(&clustering),
        "al" | "alc" => clustering.clone(),
        other => {
            return Err(Error::InvalidParameter {
                name: "method",
                message: format!("unknown method `{other}` (expected al, alc, or aln)"),
            });
        }
    };
    let level_index = args.select.pick(&walked)?;
    let level = &walked.levels[level_index];
    eprintln!(
        "labeling level {level_index} (k={}, {} clusters)",
        level.k,
        level.num_clusters()
    );

    let mut oracle = make_oracle(&args.oracle, &dataset)?;
    let (predictions, confidences, queries) = match args.method.as_str() {
        "al" => {
            let al = active_label_capped(level, &mut oracle, args.max_queries)?;
            if al.unlabeled_clusters > 0 {
                eprintln!(
                    "partial labeling: {} of {} clusters unlabeled",
                    al.unlabeled_clusters,
                    level.num_clusters()
                );
            }
            (al.object_labels, None, al.queries)
        }
        _ => {
            let prop = propagate_confidences(&walked, level_index, &mut oracle)?;
            let preds = prop.confidences.predictions().into_iter().map(Some).collect();
            (preds, Some(prop.confidences), prop.initial.queries)
        }
    };

    let names: Vec<String> = oracle.alphabet().names().to_vec();
    write_predictions(
        &args.predictions,
        &echo,
        &predictions,
        confidences.as_ref(),
        &names,
    )?;
    eprintln!("predictions written to {}", args.predictions.display());

    if let Some(truth) = dataset.label_values() {
        match classification_error(&predictions, truth) {
            Some(error) => println!(
                "{:>10} {:>10} {:>10.4}",
                queries,
                predictions.iter().filter(|p| p.is_some()).count(),
                error
            ),
            None => println!("{queries:>10} {:>10} {:>10}", 0, "n/a"),
        }
    }

    if let Some(curve_path) = &args.curves {
        if args.oracle != "labels" {
            return Err(Error::InvalidParameter {
                name: "curves",
                message: "learning curves need the ground-truth oracle".into(),
            });
        }
        let method = match args.method.as_str() {
            "al" => CurveMethod::ActiveLabel,
            "alc" => CurveMethod::Propagated,
            _ => CurveMethod::NestedPropagated,
        };
        let rng = RandomSource::new(args.seed);
        let mut points = learning_curve(&clustering, method, &dataset, &rng)?;
        if args.baseline {
            points.extend(learning_curve(
                &clustering,
                CurveMethod::RandomNn1 {
                    repetitions: args.baseline_reps,
                },
                &dataset,
                &rng,
            )?);
        }
        write_curves_csv(&points, curve_path, &[echo.clone()])?;
        if let Some(svg) = &args.curves_svg {
            write_curves_svg(
                &points,
                svg,
                AxisScale::LogX,
                "labeled objects",
                "classification error",
                "learning curves",
            )?;
        }
        eprintln!("learning curves written to {}", curve_path.display());
    }
    Ok(())
}

fn cmd_reject(args: RejectArgs) -> Result<(), Error> {
    let echo = config_echo("reject", &args);
    let (_, dataset, clustering) = load_pair(&args.artifact, &args.data)?;
    let truth = dataset.label_values().ok_or(Error::MissingLabels)?.to_vec();

    let level_index = args.select.pick(&clustering)?;
    let mut oracle = make_oracle("labels", &dataset)?;
    let prop = propagate_confidences(&clustering, level_index, &mut oracle)?;
    let predictions: Vec<Option<u32>> =
        prop.confidences.predictions().into_iter().map(Some).collect();

    let thresholds: Vec<f64> = if args.thresholds.is_empty() {
        let steps = args.threshold_steps.max(2);
        (0..steps)
            .map(|i| i as f64 / (steps - 1) as f64)
            .collect()
    } else {
        args.thresholds.clone()
    };
    let curve = reject_curve(&prop.confidences, &predictions, &truth, &thresholds)?;

    let points: Vec<CurvePoint> = curve
        .iter()
        .map(|p| CurvePoint {
            series: "reject:alc".into(),
            x: p.reject_rate,
            y: p.error_on_accepted.unwrap_or(f64::NAN),
        })
        .collect();
    write_curves_csv(&points, &args.out, &[echo])?;
    if let Some(svg) = &args.svg {
        write_curves_svg(
            &points,
            svg,
            AxisScale::Linear,
            "reject rate",
            "error on accepted",
            "reject curve",
        )?;
    }
    println!(
        "{:>10.4} {:>10.4}",
        curve.first().map(|p| p.reject_rate).unwrap_or(f64::NAN),
        curve
            .first()
            .and_then(|p| p.error_on_accepted)
            .unwrap_or(f64::NAN)
    );
    eprintln!("reject curve written to {}", args.out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let echo = config_echo("bench", &args);
    let dataset = args.data.load()?;
    let mut rng = RandomSource::new(args.seed);

    let schedule_args = &args.schedule;
    let series = format!("time:{}", args.algo);
    let report = match args.algo.as_str() {
        "ms" => timing_benchmark(&dataset, &args.sizes, args.reps, &series, &mut rng, |subset| {
            let schedule = schedule_args.build(subset.len())?;
            ms_cluster(subset, &schedule).map(|_| ())
        })?,
        "fms" => {
            let c = args.c;
            let seed = args.seed;
            timing_benchmark(&dataset, &args.sizes, args.reps, &series, &mut rng, move |subset| {
                let schedule = schedule_args.build(subset.len())?;
                let mut run_rng = RandomSource::new(seed);
                fms_cluster(subset, &schedule, c, &mut run_rng).map(|_| ())
            })?
        }
        other => {
            return Err(Error::InvalidParameter {
                name: "algo",
                message: format!("unknown algorithm `{other}` (expected ms or fms)"),
            });
        }
    };

    println!("{:>10} {:>12}", "n", "seconds");
    for p in &report.points {
        println!("{:>10} {:>12.4}", p.x as u64, p.y);
    }
    println!("fitted log-log exponent: {:.3}", report.exponent);
    write_curves_csv(&report.points, &args.out, &[echo])?;
    if let Some(svg) = &args.svg {
        write_curves_svg(
            &report.points,
            svg,
            AxisScale::LogLog,
            "dataset size",
            "seconds",
            "wall-time scaling",
        )?;
    }
    Ok(())
}
