//! `handover`: generate, split, train, evaluate, assess and encode.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use handover_core::dataset::{self, Dataset, LogitsRecord};
use handover_core::eval::{MetricsReport, Provenance};
use handover_core::learner::{self, Encoding, EpochMetrics};
use handover_core::oracle::BandThresholds;
use handover_core::post::{self, Assessment};
use handover_core::{message, text, wire, ErrorKind, GenConfig, LabelVector, Logits, Model, Scenario};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "handover", version, about = "Semantic UAV handover assessment toolkit")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset.
    Gen {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        /// JSON generator config; --seed and --count override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Stratified train/test split.
    Split {
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Train the classifier; writes the model and a JSON-lines epoch log.
    Train {
        #[arg(long)]
        train: PathBuf,
        /// Held-out split for per-epoch validation metrics.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        hyper: Hyper,
    },
    /// Evaluate a trained model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = post::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Also write the model's raw logits for the dataset.
        #[arg(long)]
        logits_out: Option<PathBuf>,
    },
    /// Evaluate externally produced logits against a dataset.
    ImportLogits {
        #[arg(long)]
        logits: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = post::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Assess one scenario given as canonical text or JSON.
    Assess {
        #[command(flatten)]
        input: ScenarioInput,
        /// Use a trained model instead of the rule oracle.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = post::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Encode one scenario's oracle assessment as a wire frame (hex).
    Encode {
        #[command(flatten)]
        input: ScenarioInput,
    },
    /// Decode a hex wire frame.
    Decode {
        #[arg(long)]
        hex: String,
    },
    /// Size accounting over a dataset.
    Report {
        #[arg(long)]
        overhead: bool,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write the label schema as JSON.
    Schema {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ScenarioInput {
    /// File with the six-line scenario text.
    #[arg(long)]
    text_file: Option<PathBuf>,
    /// File with one scenario as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct Hyper {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Hidden layer widths, e.g. `64,64`.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    encoding: Option<EncodingArg>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncodingArg {
    /// The 18 standardized base features.
    Standardized,
    /// Base features plus unit-step thermometer bits.
    Thermometer,
}

impl Hyper {
    fn config(&self) -> handover_core::TrainConfig {
        let d = handover_core::TrainConfig::default();
        handover_core::TrainConfig {
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            momentum: self.momentum.unwrap_or(d.momentum),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            hidden: self.hidden.clone().unwrap_or(d.hidden),
            encoding: match self.encoding {
                None => d.encoding,
                Some(EncodingArg::Standardized) => Encoding::Standardized,
                Some(EncodingArg::Thermometer) => Encoding::Thermometer,
            },
            seed: self.seed,
        }
    }
}

/// Failure with the exit class it maps to.
struct Failure {
    kind: ErrorKind,
    message: String,
}

impl<E: Into<handover_core::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn fail(kind: ErrorKind, message: impl Into<String>) -> Failure {
    Failure {
        kind,
        message: message.into(),
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 3,
        ErrorKind::Parse => 4,
        ErrorKind::Integrity => 5,
        ErrorKind::Divergence => 6,
        ErrorKind::Io => 7,
        ErrorKind::Input => 8,
    }
}

type Outcome = Result<(), Failure>;

fn io_fail(path: &Path, e: io::Error) -> Failure {
    fail(ErrorKind::Io, format!("{}: {e}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| io_fail(path, e))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_fail(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| io_fail(path, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

/// Writes one line to stdout; a closed pipe (`| head`) is not an error.
fn say(line: &str) -> Outcome {
    match writeln!(io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(fail(ErrorKind::Io, format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

/// Prints JSON to stdout and optionally writes it to `path`.
fn emit_json<T: serde::Serialize>(v: &T, path: Option<&Path>) -> Outcome {
    let s = to_json(v);
    say(&s)?;
    match path {
        Some(p) => write_file(p, format!("{s}\n").as_bytes()),
        None => Ok(()),
    }
}

/// Reads a dataset and returns it with the SHA-256 of the file bytes.
fn load_dataset(path: &Path) -> Result<(Dataset, String), Failure> {
    let bytes = read_bytes(path)?;
    let ds = Dataset::read_from(&bytes[..])?;
    Ok((ds, sha256_hex(&bytes)))
}

fn load_model(path: &Path) -> Result<(Model, String), Failure> {
    let bytes = read_bytes(path)?;
    let m = Model::from_bytes(&bytes)?;
    Ok((m, sha256_hex(&bytes)))
}

fn load_scenario(input: &ScenarioInput) -> Result<Scenario, Failure> {
    if let Some(p) = &input.text_file {
        return Ok(text::parse(&read_text(p)?)?);
    }
    let p = input.json.as_ref().expect("clap enforces one input");
    let s: Scenario = serde_json::from_str(&read_text(p)?)
        .map_err(|e| fail(ErrorKind::Parse, format!("{}: {e}", p.display())))?;
    s.validate()?;
    Ok(s)
}

fn check_threshold(t: f64) -> Outcome {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(post::PostError::Threshold(t).into())
    }
}

/// Post-processed and raw-thresholded predictions for a batch of logits.
fn predictions(logits: &[Logits], threshold: f64) -> Result<(Vec<LabelVector>, Vec<LabelVector>), Failure> {
    let schema = handover_core::canonical_schema();
    let mut pred = Vec::with_capacity(logits.len());
    let mut raw = Vec::with_capacity(logits.len());
    for l in logits {
        pred.push(post::decide(l, &schema, threshold)?.to_label_vector());
        raw.push(post::threshold_all(l, threshold));
    }
    Ok((pred, raw))
}

fn gen(seed: u64, count: usize, out: &Path, config: Option<&Path>) -> Outcome {
    let mut cfg = match config {
        Some(p) => serde_json::from_str::<GenConfig>(&read_text(p)?)
            .map_err(|e| fail(ErrorKind::Config, format!("{}: {e}", p.display())))?,
        None => GenConfig::default(),
    };
    cfg.seed = seed;
    cfg.count = count;
    let ds = Dataset::generate(&cfg)?;
    dataset::write_dataset(&ds, out)?;
    eprintln!("wrote {} records to {}", ds.len(), out.display());
    Ok(())
}

fn split(ratio: f64, seed: u64, input: &Path, train_out: &Path, test_out: &Path) -> Outcome {
    let (ds, _) = load_dataset(input)?;
    let (train, test) = dataset::split_stratified(&ds, ratio, seed)?;
    dataset::write_dataset(&train, train_out)?;
    dataset::write_dataset(&test, test_out)?;
    eprintln!("train {} / test {}", train.len(), test.len());
    Ok(())
}

fn train(train_path: &Path, test: Option<&Path>, model_out: &Path, log: Option<&Path>, hyper: &Hyper) -> Outcome {
    let config = hyper.config();
    let (train_ds, _) = load_dataset(train_path)?;
    let val = match test {
        Some(p) => Some(load_dataset(p)?.0.pairs()),
        None => None,
    };
    let mut log_writer = match log {
        Some(p) => Some((p, BufWriter::new(File::create(p).map_err(|e| io_fail(p, e))?))),
        None => None,
    };
    let mut log_error = None;
    let model = learner::train(&train_ds.pairs(), val.as_deref(), &config, |e: &EpochMetrics| {
        if let Some((p, w)) = &mut log_writer {
            let line = serde_json::to_string(e).expect("plain data serializes");
            if let Err(err) = writeln!(w, "{line}") {
                log_error.get_or_insert_with(|| io_fail(p, err));
            }
        }
        if e.epoch == 1 || e.epoch.is_multiple_of(20) || e.epoch == config.epochs {
            eprintln!("epoch {:>4}  loss {:.5}", e.epoch, e.train_loss);
        }
    })?;
    if let Some(err) = log_error {
        return Err(err);
    }
    if let Some((p, mut w)) = log_writer {
        w.flush().map_err(|e| io_fail(p, e))?;
    }
    write_file(model_out, &model.to_bytes())
}

fn eval(model_path: &Path, test: &Path, report: Option<&Path>, threshold: f64, logits_out: Option<&Path>) -> Outcome {
    check_threshold(threshold)?;
    let (model, model_sha) = load_model(model_path)?;
    let (ds, ds_sha) = load_dataset(test)?;
    let logits = model.predict_batch(&ds.scenarios());
    if let Some(p) = logits_out {
        let records: Vec<LogitsRecord> = ds
            .records
            .iter()
            .zip(&logits)
            .map(|(r, l)| LogitsRecord {
                id: r.id,
                logits: l.values().to_vec(),
            })
            .collect();
        let f = File::create(p).map_err(|e| io_fail(p, e))?;
        dataset::write_logits(&records, BufWriter::new(f)).map_err(|e| io_fail(p, e))?;
    }
    let (pred, raw) = predictions(&logits, threshold)?;
    let mut r = MetricsReport::compute(&ds.labels(), &pred, Some(&raw))?;
    r.provenance = Some(Provenance {
        dataset_sha256: ds_sha,
        model_sha256: Some(model_sha),
        logits_sha256: None,
        threshold,
    });
    emit_json(&r, report)
}

fn import_logits(logits_path: &Path, test: &Path, threshold: f64, report: Option<&Path>) -> Outcome {
    check_threshold(threshold)?;
    let (ds, ds_sha) = load_dataset(test)?;
    let bytes = read_bytes(logits_path)?;
    let records = dataset::read_logits_from(&bytes[..], &ds)?;
    let logits: Vec<Logits> = records.iter().map(LogitsRecord::logit_vector).collect();
    let (pred, raw) = predictions(&logits, threshold)?;
    let mut r = MetricsReport::compute(&ds.labels(), &pred, Some(&raw))?;
    r.provenance = Some(Provenance {
        dataset_sha256: ds_sha,
        model_sha256: None,
        logits_sha256: Some(sha256_hex(&bytes)),
        threshold,
    });
    emit_json(&r, report)
}

#[derive(serde::Serialize)]
struct AssessOutput {
    source: &'static str,
    decision: String,
    tags: Vec<&'static str>,
    message: String,
    wire_hex: String,
}

fn assess(input: &ScenarioInput, model: Option<&Path>, threshold: f64) -> Outcome {
    check_threshold(threshold)?;
    let s = load_scenario(input)?;
    let (source, a) = match model {
        Some(p) => {
            let (m, _) = load_model(p)?;
            let a = post::decide(&m.predict_logits(&s), &handover_core::canonical_schema(), threshold)?;
            ("model", a)
        }
        None => ("oracle", Assessment::from_oracle(&s, &BandThresholds::default())),
    };
    let frame = wire::encode(&a, &s)?;
    emit_json(
        &AssessOutput {
            source,
            decision: a.decision.name().to_string(),
            tags: a.tag_names(),
            message: message::compose(&a, &s),
            wire_hex: hex::encode(frame),
        },
        None,
    )
}

fn encode(input: &ScenarioInput) -> Outcome {
    let s = load_scenario(input)?;
    let a = Assessment::from_oracle(&s, &BandThresholds::default());
    say(&hex::encode(wire::encode(&a, &s)?))
}

#[derive(serde::Serialize)]
struct DecodeOutput {
    decision: String,
    tags: Vec<&'static str>,
    scenario: wire::ScenarioDigest,
}

fn decode(hex_frame: &str) -> Outcome {
    let bytes = hex::decode(hex_frame.trim())
        .map_err(|e| fail(ErrorKind::Parse, format!("bad hex: {e}")))?;
    let (a, digest) = wire::decode(&bytes)?;
    emit_json(
        &DecodeOutput {
            decision: a.decision.name().to_string(),
            tags: a.tag_names(),
            scenario: digest,
        },
        None,
    )
}

fn report(overhead: bool, input: &Path) -> Outcome {
    if !overhead {
        return Err(fail(ErrorKind::Config, "nothing to report; pass --overhead"));
    }
    let (ds, _) = load_dataset(input)?;
    let schema = handover_core::canonical_schema();
    let pairs: Vec<(Scenario, Assessment)> = ds
        .records
        .iter()
        .map(|r| Ok((r.scenario, Assessment::from_label_vector(&r.label_vector(), &schema)?)))
        .collect::<Result<_, Failure>>()?;
    let summary = message::summarize_overhead(pairs.iter().map(|(s, a)| (s, a)))
        .ok_or_else(|| fail(ErrorKind::Input, "dataset has no records"))?;
    emit_json(&summary, None)
}

fn schema(out: Option<&Path>) -> Outcome {
    let json = to_json(&handover_core::canonical_schema().to_json());
    match out {
        Some(p) => write_file(p, format!("{json}\n").as_bytes()),
        None => say(&json),
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| fail(ErrorKind::Config, format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Gen { seed, count, out, config } => gen(seed, count, &out, config.as_deref()),
        Command::Split { ratio, seed, input, train_out, test_out } => {
            split(ratio, seed, &input, &train_out, &test_out)
        }
        Command::Train { train: t, test, model_out, log, hyper } => {
            train(&t, test.as_deref(), &model_out, log.as_deref(), &hyper)
        }
        Command::Eval { model, test, report: r, threshold, logits_out } => {
            eval(&model, &test, r.as_deref(), threshold, logits_out.as_deref())
        }
        Command::ImportLogits { logits, test, threshold, report: r } => {
            import_logits(&logits, &test, threshold, r.as_deref())
        }
        Command::Assess { input, model, threshold } => assess(&input, model.as_deref(), threshold),
        Command::Encode { input } => encode(&input),
        Command::Decode { hex } => decode(&hex),
        Command::Report { overhead, input } => report(overhead, &input),
        Command::Schema { out } => schema(out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(exit_code(f.kind))
        }
    }
}
