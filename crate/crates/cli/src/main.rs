mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hierclass::benchmark::{run_benchmark, SyntheticConfig};
use hierclass::dataio::{load_csv, load_features, load_labels, load_model, save_model, write_labels, DatasetSchema};
use hierclass::memory::TrackingAllocator;
use hierclass::{evaluate, fit, Error, Hierarchy, LearnerKind, LearnerSpec, Strategy, DEFAULT_SEPARATOR};

use config::FileConfig;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

/// Hierarchical classification: train, predict, evaluate, benchmark.
///
/// Exit status is 0 on success, 1 on a data or runtime error and 2 on a
/// usage or configuration error.
#[derive(Debug, Parser)]
#[command(name = "hierclass", version)]
struct Cli {
    /// TOML file supplying any option below (keys use underscores, e.g.
    /// `learning_rate = 0.05`); command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model on a labelled CSV file and save it.
    Train(TrainArgs),
    /// Predict label paths for a feature CSV file.
    Predict(PredictArgs),
    /// Hierarchical precision, recall and F-score of predictions.
    Evaluate(EvaluateArgs),
    /// Flat vs. local strategies on synthetic hierarchical data.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Input CSV file.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label columns, shallowest level first.
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Feature columns [default: every non-label column].
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Field delimiter [default: ,].
    #[arg(long)]
    delimiter: Option<char>,
    /// The file has no header row; columns are named 0, 1, 2, ...
    #[arg(long)]
    no_header: bool,
}

impl TableArgs {
    fn schema(&self, file: &FileConfig) -> Result<DatasetSchema, Failure> {
        Ok(DatasetSchema {
            feature_columns: self.features.clone().or(file.features.clone()).unwrap_or_default(),
            label_columns: self.labels.clone().or(file.labels.clone()).unwrap_or_default(),
            delimiter: config::delimiter(self.delimiter.or(file.delimiter))?,
            has_header: !(self.no_header || file.no_header.unwrap_or(false)),
        })
    }

    fn data(&self, file: &FileConfig) -> Result<PathBuf, Failure> {
        config::required(self.data.clone().or(file.data.clone()), "data")
    }
}

#[derive(Debug, Args)]
struct LearnerArgs {
    /// Base learner: logistic_regression or constant.
    #[arg(long)]
    kind: Option<String>,
    /// Gradient descent step size [default: 0.1].
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Full-batch gradient descent iterations [default: 500].
    #[arg(long)]
    epochs: Option<usize>,
    /// L2 penalty on weights [default: 0].
    #[arg(long)]
    l2_penalty: Option<f64>,
    /// Random seed [default: 0 for training, 42 for benchmark data].
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel learner fits [default: $HIERCLASS_WORKERS or 1].
    #[arg(long)]
    workers: Option<usize>,
}

impl LearnerArgs {
    fn spec(&self, file: &FileConfig) -> Result<LearnerSpec, Failure> {
        let d = LearnerSpec::default();
        let kind = match self.kind.as_ref().or(file.kind.as_ref()) {
            Some(k) => k.parse::<LearnerKind>()?,
            None => d.kind,
        };
        let spec = LearnerSpec {
            kind,
            learning_rate: self.learning_rate.or(file.learning_rate).unwrap_or(d.learning_rate),
            epochs: self.epochs.or(file.epochs).unwrap_or(d.epochs),
            l2_penalty: self.l2_penalty.or(file.l2_penalty).unwrap_or(d.l2_penalty),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn workers(&self, file: &FileConfig) -> Result<usize, Failure> {
        config::workers(self.workers, file.workers)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    table: TableArgs,
    #[command(flatten)]
    learner: LearnerArgs,
    /// flat, lcpn, lcppn or lcpl [default: lcpn].
    #[arg(long)]
    strategy: Option<String>,
    /// Where to write the model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Separator used in canonical node names [default: ://].
    #[arg(long)]
    separator: Option<String>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output CSV [default: stdout]. Columns are named by --labels, else level_1, level_2, ...
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// CSV with the true labels.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// CSV with the predicted labels.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Label columns of the truth file [default: all columns].
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Label columns of the prediction file [default: all columns].
    #[arg(long, value_delimiter = ',')]
    pred_labels: Option<Vec<String>>,
    /// Field delimiter of both files [default: ,].
    #[arg(long)]
    delimiter: Option<char>,
    /// Neither file has a header row.
    #[arg(long)]
    no_header: bool,
    /// Also write the report as JSON to this file.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    learner: LearnerArgs,
    /// Levels in the synthetic hierarchy [default: 2].
    #[arg(long)]
    depth: Option<usize>,
    /// Children per node [default: 3].
    #[arg(long)]
    branching: Option<usize>,
    /// Samples drawn around each leaf [default: 200].
    #[arg(long)]
    samples_per_leaf: Option<usize>,
    /// Feature dimension [default: 4].
    #[arg(long)]
    n_features: Option<usize>,
    /// Distance scale between sibling leaves [default: 4].
    #[arg(long)]
    leaf_separation: Option<f64>,
    /// Growth of that distance per level upwards [default: 3].
    #[arg(long)]
    level_scale: Option<f64>,
    /// Noise as a fraction of the leaf separation [default: 0.15].
    #[arg(long)]
    overlap: Option<f64>,
    /// Held-out fraction used for scoring [default: 0.25].
    #[arg(long)]
    test_fraction: Option<f64>,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration: exit 2.
    Usage(String),
    /// Bad data, missing files, failed fits: exit 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidLearnerSpec(_) | Error::InvalidSchema(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn train(args: &TrainArgs, file: &FileConfig) -> Result<(), Failure> {
    let strategy = match args.strategy.as_ref().or(file.strategy.as_ref()) {
        Some(s) => s.parse::<Strategy>().map_err(|e| Failure::Usage(e.to_string()))?,
        None => Strategy::PerNode,
    };
    let spec = args.learner.spec(file)?;
    let workers = args.learner.workers(file)?;
    let model_path = config::required(args.model.clone().or(file.model.clone()), "model")?;
    let schema = args.table.schema(file)?;
    if schema.label_columns.is_empty() {
        return Err(Failure::Usage("missing required option --labels".into()));
    }
    let separator = args
        .separator
        .clone()
        .or(file.separator.clone())
        .unwrap_or_else(|| DEFAULT_SEPARATOR.to_string());

    let start = Instant::now();
    let (x, y) = load_csv(args.table.data(file)?, &schema)?;
    let h = Hierarchy::build(&y, &separator)?;
    let model = fit(strategy, &h, &x, &y, spec, workers)?;
    save_model(&model, &model_path)?;
    println!("strategy={}", strategy.tag());
    println!("samples={}", x.n_samples());
    println!("nodes={}", h.len());
    println!("learners={}", model.learners().len());
    println!("wall_ms={:.3}", start.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

fn predict(args: &PredictArgs, file: &FileConfig) -> Result<(), Failure> {
    let model_path = config::required(args.model.clone().or(file.model.clone()), "model")?;
    let schema = args.table.schema(file)?;
    let model = load_model(model_path)?;
    let x = load_features(args.table.data(file)?, &schema)?;
    let pred = model.predict(&x)?;

    let headers = if schema.label_columns.is_empty() {
        (1..=pred.n_levels()).map(|k| format!("level_{k}")).collect()
    } else if schema.label_columns.len() == pred.n_levels() {
        schema.label_columns.clone()
    } else {
        return Err(Failure::Usage(format!(
            "{} label names given for a {}-level model",
            schema.label_columns.len(),
            pred.n_levels()
        )));
    };
    match args.output.clone().or(file.output.clone()) {
        Some(path) => write_labels(File::create(path)?, &headers, &pred, schema.delimiter)?,
        None => write_labels(io::stdout().lock(), &headers, &pred, schema.delimiter)?,
    }
    Ok(())
}

fn evaluate_cmd(args: &EvaluateArgs, file: &FileConfig) -> Result<(), Failure> {
    let truth_path = config::required(args.truth.clone().or(file.truth.clone()), "truth")?;
    let pred_path = config::required(args.pred.clone().or(file.pred.clone()), "pred")?;
    let base = DatasetSchema {
        delimiter: config::delimiter(args.delimiter.or(file.delimiter))?,
        has_header: !(args.no_header || file.no_header.unwrap_or(false)),
        ..DatasetSchema::default()
    };
    let truth = load_labels(
        truth_path,
        &DatasetSchema {
            label_columns: args.labels.clone().or(file.labels.clone()).unwrap_or_default(),
            ..base.clone()
        },
    )?;
    let pred = load_labels(
        pred_path,
        &DatasetSchema {
            label_columns: args.pred_labels.clone().or(file.pred_labels.clone()).unwrap_or_default(),
            ..base
        },
    )?;
    let report = evaluate(&truth, &pred)?;
    println!("{report}");
    if let Some(path) = args.json.clone().or(file.json.clone()) {
        let mut out = File::create(path)?;
        serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Runtime(e.to_string()))?;
        writeln!(out)?;
    }
    Ok(())
}

fn benchmark(args: &BenchmarkArgs, file: &FileConfig) -> Result<(), Failure> {
    let d = SyntheticConfig::default();
    let cfg = SyntheticConfig {
        depth: args.depth.or(file.depth).unwrap_or(d.depth),
        branching: args.branching.or(file.branching).unwrap_or(d.branching),
        samples_per_leaf: args.samples_per_leaf.or(file.samples_per_leaf).unwrap_or(d.samples_per_leaf),
        n_features: args.n_features.or(file.n_features).unwrap_or(d.n_features),
        leaf_separation: args.leaf_separation.or(file.leaf_separation).unwrap_or(d.leaf_separation),
        level_scale: args.level_scale.or(file.level_scale).unwrap_or(d.level_scale),
        overlap: args.overlap.or(file.overlap).unwrap_or(d.overlap),
        test_fraction: args.test_fraction.or(file.test_fraction).unwrap_or(d.test_fraction),
        seed: args.learner.seed.or(file.seed).unwrap_or(d.seed),
    };
    cfg.validate()?;
    let spec = args.learner.spec(file)?;
    let workers = args.learner.workers(file)?;

    let report = run_benchmark(&cfg, &spec, workers)?;
    println!("train_samples={}", report.train_samples);
    println!("test_samples={}", report.test_samples);
    println!("centroid_accuracy={:.6}", report.centroid_accuracy);
    println!();
    print!("{}", report.render_table());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Train(a) => train(a, &file),
        Command::Predict(a) => predict(a, &file),
        Command::Evaluate(a) => evaluate_cmd(a, &file),
        Command::Benchmark(a) => benchmark(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
