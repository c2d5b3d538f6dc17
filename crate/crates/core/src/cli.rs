//! Command-line front end. Exit codes: 0 success, 1 I/O, 2 empty or
//! invalid input, 3 backend failure.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::annotator::annotate;
use crate::config::{BackendKind, Config, DocumentSource};
use crate::corpus::{
    load_corpus, mine_corpus, split_corpus, Corpus, CorpusSplit, DocumentFetcher, HttpSearchFetcher, LocalDirFetcher,
    MinedCorpus, TrainingExample,
};
use crate::discovery::{discover_schema, DiscoveredSchema};
use crate::json::{parse_json, to_canonical_string};
use crate::llm::{export_training, GenerationBackend, HttpBackend, ReplayBackend, StubBackend};
use crate::metrics::{evaluate_run, EvalOptions, TestSchema};
use crate::schema::SchemaNode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "schema-annotator", version, about = "Discover, annotate and evaluate JSON Schemas")]
pub struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// stub, http or replay.
    #[arg(long, global = true)]
    pub backend: Option<BackendKind>,
    /// Recorded outputs for the replay backend (repeatable).
    #[arg(long = "replay", global = true)]
    pub replay: Vec<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    /// More log output on standard error (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer a schema from a directory of JSON documents.
    Discover(DiscoverArgs),
    /// Mine training and evaluation examples from a schema corpus.
    Extract(ExtractArgs),
    /// Filter keywords, name definitions and add descriptions.
    Annotate(AnnotateArgs),
    /// Score regenerated annotations on the test split.
    Evaluate(EvaluateArgs),
    /// Write fine-tuning datasets and the hyperparameter manifest.
    ExportTrain(ExportArgs),
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    pub input_dir: PathBuf,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub min_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    pub corpus_dir: PathBuf,
    /// Conforming documents; defaults to `<corpus>/documents`.
    #[arg(long)]
    pub docs: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write the train/validation/test split.
    #[arg(long)]
    pub split_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    pub schema: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Report file; defaults to `<output>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub corpus_dir: PathBuf,
    #[arg(long)]
    pub docs: Option<PathBuf>,
    /// Split file written by `extract --split-out`; computed from the
    /// corpus, seed and ratios when absent.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Per-item rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub examples: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Keep only schemas of one part of this split.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// train, validation or test.
    #[arg(long, default_value = "train")]
    pub part: String,
    /// Manifest override such as `batchSize=4` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn io(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_IO, message: message.to_string() }
    }

    fn input(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_INPUT, message: message.to_string() }
    }

    fn backend(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_BACKEND, message: message.to_string() }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn effective_config(cli: &Cli) -> CliResult<Config> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| match e {
            crate::config::ConfigError::Io { .. } => Failure::io(e),
            crate::config::ConfigError::Invalid { .. } => Failure::input(e),
        })?,
        None => Config::default(),
    };
    if let Some(jobs) = cli.jobs {
        config.jobs = Some(jobs);
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(backend) = cli.backend {
        config.backend = backend;
    }
    if !cli.replay.is_empty() {
        config.replay_files = cli.replay.clone();
    }
    Ok(config)
}

fn execute(cli: Cli) -> CliResult {
    let config = effective_config(&cli)?;
    if cli.print_config {
        println!("{}", config.to_pretty_json());
        return Ok(());
    }
    if let Some(jobs) = config.jobs {
        // Fails only if a pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    match cli.command {
        Some(Command::Discover(args)) => cmd_discover(&args, &config),
        Some(Command::Extract(args)) => cmd_extract(&args, &config),
        Some(Command::Annotate(args)) => cmd_annotate(&args, &config),
        Some(Command::Evaluate(args)) => cmd_evaluate(&args, &config),
        Some(Command::ExportTrain(args)) => cmd_export_train(&args, &config),
        None => Err(Failure::input("no subcommand given (see --help)")),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Failure::io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

/// Pretty JSON with canonical key order and numbers.
fn pretty_canonical(value: &serde_json::Value) -> String {
    let canonical = parse_json(&to_canonical_string(value)).expect("canonical JSON parses");
    let mut text = serde_json::to_string_pretty(&canonical).expect("value serializes");
    text.push('\n');
    text
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let value = serde_json::to_value(value).expect("value serializes");
    write_file(path, pretty_canonical(&value).as_bytes())
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn read_documents(dir: &Path) -> CliResult<Vec<serde_json::Value>> {
    if !dir.is_dir() {
        return Err(Failure::io(format!("{}: not a directory", dir.display())));
    }
    let mut documents = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(Failure::io)?;
        if !entry.file_type().is_file() || entry.path().extension().is_none_or(|x| x != "json") {
            continue;
        }
        match parse_json(&read_text(entry.path())?) {
            Ok(doc) => documents.push(doc),
            Err(e) => log::warn!("{}: skipped: {e}", entry.path().display()),
        }
    }
    Ok(documents)
}

fn cmd_discover(args: &DiscoverArgs, config: &Config) -> CliResult {
    let documents = read_documents(&args.input_dir)?;
    let min_count = args.min_count.unwrap_or(config.min_count);
    let discovered = discover_schema(&documents, min_count)
        .map_err(|e| Failure::input(format!("{}: {e}", args.input_dir.display())))?;
    let text = pretty_canonical(&discovered.root.to_value());
    log::info!("discovered schema from {} documents", documents.len());
    match &args.output {
        Some(path) => write_file(path, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Failure::io),
    }
}

fn fetcher_for(config: &Config, corpus: &Corpus, docs: Option<&Path>) -> Box<dyn DocumentFetcher> {
    match config.fetch.source {
        DocumentSource::Http => Box::new(HttpSearchFetcher::new(config.fetch.search.clone())),
        DocumentSource::Local => {
            let dir = docs.map(Path::to_path_buf).or_else(|| config.fetch.documents_dir.clone());
            Box::new(LocalDirFetcher::new(dir.unwrap_or_else(|| corpus.documents_dir())))
        }
    }
}

fn load_and_mine(corpus_dir: &Path, docs: Option<&Path>, config: &Config) -> CliResult<(Corpus, MinedCorpus)> {
    let corpus = load_corpus(corpus_dir).map_err(|e| match e {
        crate::corpus::CorpusError::Io { .. } => Failure::io(e),
        other => Failure::input(other),
    })?;
    if corpus.entries.is_empty() {
        return Err(Failure::input(format!("{}: no parseable schemas", corpus_dir.display())));
    }
    let fetcher = fetcher_for(config, &corpus, docs);
    let mined =
        mine_corpus(&corpus, Some(fetcher.as_ref()), config.min_count, &config.fetch.retry).map_err(Failure::io)?;
    Ok((corpus, mined))
}

fn corpus_split(corpus: &Corpus, config: &Config) -> CliResult<CorpusSplit> {
    split_corpus(&corpus.ids(), config.split, config.seed).map_err(Failure::input)
}

fn cmd_extract(args: &ExtractArgs, config: &Config) -> CliResult {
    let (corpus, mined) = load_and_mine(&args.corpus_dir, args.docs.as_deref(), config)?;
    let mut out = Vec::new();
    for example in &mined.examples {
        serde_json::to_writer(&mut out, example).expect("examples serialize");
        out.push(b'\n');
    }
    write_file(&args.output, &out)?;
    if let Some(path) = &args.split_out {
        write_json(path, &corpus_split(&corpus, config)?)?;
    }
    let s = &mined.stats;
    eprintln!(
        "schemas={} skipped={} descriptions={} definitions={} selectionPositive={} selectionNegative={} documents={} rejectedDocuments={}",
        s.schemas,
        corpus.skipped.len(),
        s.descriptions,
        s.definitions,
        s.selection_positive,
        s.selection_negative,
        s.documents,
        s.rejected_documents
    );
    Ok(())
}

fn build_backend(config: &Config) -> CliResult<Box<dyn GenerationBackend>> {
    match config.backend {
        BackendKind::Stub => Ok(Box::new(StubBackend)),
        BackendKind::Http => {
            if let Some(var) = &config.http.token_env {
                if std::env::var(var).map_or(true, |v| v.is_empty()) {
                    return Err(Failure::backend(format!(
                        "environment variable {var} with the backend token is not set"
                    )));
                }
            }
            Ok(Box::new(HttpBackend::new(config.http.clone())))
        }
        BackendKind::Replay => {
            if config.replay_files.is_empty() {
                return Err(Failure::input("replay backend needs --replay files"));
            }
            let paths: Vec<&Path> = config.replay_files.iter().map(PathBuf::as_path).collect();
            Ok(Box::new(ReplayBackend::from_jsonl(&paths).map_err(Failure::io)?))
        }
    }
}

fn cmd_annotate(args: &AnnotateArgs, config: &Config) -> CliResult {
    let schema = SchemaNode::parse(&read_text(&args.schema)?)
        .map_err(|e| Failure::input(format!("{}: {e}", args.schema.display())))?;
    let report_path = args.report.clone().unwrap_or_else(|| {
        let mut name = args.output.as_os_str().to_owned();
        name.push(".report.json");
        PathBuf::from(name)
    });
    let backend = build_backend(config)?;
    match annotate(&DiscoveredSchema::from_schema(schema), backend.as_ref(), &config.prompts, config.stages) {
        Ok((annotated, report)) => {
            write_file(&args.output, pretty_canonical(&annotated.root.to_value()).as_bytes())?;
            write_json(&report_path, &report)
        }
        Err(failure) => {
            write_json(&report_path, &failure.partial)?;
            Err(Failure::backend(failure))
        }
    }
}

fn cmd_evaluate(args: &EvaluateArgs, config: &Config) -> CliResult {
    let (corpus, mined) = load_and_mine(&args.corpus_dir, args.docs.as_deref(), config)?;
    let split: CorpusSplit = match &args.split {
        Some(path) => {
            serde_json::from_str(&read_text(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        }
        None => corpus_split(&corpus, config)?,
    };
    let tests: Vec<TestSchema> = corpus
        .entries
        .iter()
        .filter(|e| split.test.contains(&e.id))
        .map(|e| TestSchema {
            id: e.id.clone(),
            schema: e.schema.clone(),
            selection: mined
                .examples
                .iter()
                .filter_map(|x| match x {
                    TrainingExample::Selection(s) if s.schema_id == e.id => Some(s.clone()),
                    _ => None,
                })
                .collect(),
        })
        .collect();
    if tests.is_empty() {
        return Err(Failure::input("test split is empty"));
    }
    let backend = build_backend(config)?;
    let embedder = config.embedder.build();
    let scorer = config.scorer.build();
    let options = EvalOptions { bleu_max_n: config.bleu_max_n };
    let report =
        evaluate_run(&tests, &split, backend.as_ref(), embedder.as_ref(), scorer.as_ref(), &config.prompts, options)
            .map_err(Failure::input)?;
    write_json(&args.output, &report)?;
    if let Some(path) = &args.csv {
        let mut bytes = Vec::new();
        report.write_csv(&mut bytes).map_err(Failure::io)?;
        write_file(path, &bytes)?;
    }
    print!("{}", report.headline());
    let failures = report.description.failures + report.definition.failures + report.selection.failures;
    if failures > 0 {
        eprintln!("{failures} item(s) failed in the backend; see the report rows");
    }
    Ok(())
}

fn apply_override(manifest: &mut crate::llm::TrainingManifest, assignment: &str) -> CliResult {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| Failure::input(format!("expected KEY=VALUE, got {assignment:?}")))?;
    let mut value = serde_json::to_value(&*manifest).expect("manifest serializes");
    let parsed = parse_json(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    match value.as_object_mut().and_then(|m| m.get_mut(key)) {
        Some(slot) => *slot = parsed,
        None => return Err(Failure::input(format!("unknown manifest key {key:?}"))),
    }
    *manifest = serde_json::from_value(value).map_err(|e| Failure::input(format!("{assignment}: {e}")))?;
    Ok(())
}

fn cmd_export_train(args: &ExportArgs, config: &Config) -> CliResult {
    let text = read_text(&args.examples)?;
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let example: TrainingExample = serde_json::from_str(line)
            .map_err(|e| Failure::input(format!("{}:{}: {e}", args.examples.display(), i + 1)))?;
        examples.push(example);
    }
    if let Some(path) = &args.split {
        let split: CorpusSplit =
            serde_json::from_str(&read_text(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let keep: &BTreeSet<String> =
            split.part(&args.part).ok_or_else(|| Failure::input(format!("unknown split part {:?}", args.part)))?;
        examples.retain(|e| keep.contains(e.schema_id()));
    } else {
        log::warn!("no --split given: exporting every example");
    }
    if examples.is_empty() {
        return Err(Failure::input("no examples to export"));
    }
    let mut manifest = config.manifest.clone();
    for assignment in &args.overrides {
        apply_override(&mut manifest, assignment)?;
    }
    let summary = export_training(&examples, &manifest, &config.prompts, &args.output).map_err(Failure::io)?;
    eprintln!("description={} definition={} selection={}", summary.description, summary.definition, summary.selection);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("schema-annotator").chain(args.iter().copied()))
    }

    #[test]
    fn discover_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty");
        std::fs::create_dir(&empty).unwrap();
        assert_eq!(run_args(&["discover", empty.to_str().unwrap()]), EXIT_INPUT);
        let docs = dir.path().join("docs");
        std::fs::create_dir(&docs).unwrap();
        std::fs::write(docs.join("a.json"), r#"{"xs":[1,2]}"#).unwrap();
        let out = dir.path().join("out/schema.json");
        assert_eq!(run_args(&["discover", docs.to_str().unwrap(), "-o", out.to_str().unwrap()]), EXIT_OK);
        assert!(std::fs::read_to_string(&out).unwrap().contains("\"maxItems\": 2"));
        let blocked = dir.path().join("docs/a.json/x.json");
        assert_eq!(run_args(&["discover", docs.to_str().unwrap(), "-o", blocked.to_str().unwrap()]), EXIT_IO);
    }

    #[test]
    fn manifest_overrides() {
        let mut m = crate::llm::TrainingManifest::default();
        apply_override(&mut m, "batchSize=4").unwrap();
        apply_override(&mut m, "schedule=linear").unwrap();
        assert_eq!((m.batch_size, m.schedule.as_str()), (4, "linear"));
        assert_eq!(apply_override(&mut m, "nope=1").unwrap_err().code, EXIT_INPUT);
        assert_eq!(apply_override(&mut m, "batchSize=x").unwrap_err().code, EXIT_INPUT);
    }

    #[test]
    fn http_backend_without_token_fails_early() {
        let mut config = Config { backend: BackendKind::Http, ..Config::default() };
        config.http.token_env = Some("SCHEMA_ANNOTATOR_TEST_TOKEN_THAT_IS_UNSET".into());
        assert_eq!(build_backend(&config).err().unwrap().code, EXIT_BACKEND);
    }

    #[test]
    fn no_subcommand_and_print_config() {
        assert_eq!(run_args(&[]), EXIT_INPUT);
        assert_eq!(run_args(&["--print-config", "--seed", "7"]), EXIT_OK);
        assert_eq!(run_args(&["--backend", "bogus", "discover", "."]), EXIT_INPUT);
    }
}
