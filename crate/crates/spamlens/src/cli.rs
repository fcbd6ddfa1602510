//! Command-line pipeline: argument parsing, configuration files, the ten
//! stages and their run manifests.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use spamlens_core::corpus::cleanse;
use spamlens_core::eval::{
    average_precision_at_k, confusion, prf_metrics, precision_at_k, rank_baseline, roc_auc, RankingMethod,
    RankingResult,
};
use spamlens_core::features::{
    lambda_max, lasso_logistic, pearson_correlation_matrix, FeatureMatrix, FeatureOptions, FEATURE_COUNT, FEATURE_NAMES,
};
use spamlens_core::models::{
    cross_val_predict, cross_validate, default_search_space, random_search, train, train_test_split, Algorithm,
    CvResult, Dataset, ModelSpec, TrainedModel,
};
use spamlens_core::sentiment::{SentimentLexicon, SentimentScorer};
use spamlens_core::synthgen::{generate, pseudo_newsgroups, SynthConfig};
use spamlens_core::text::{parse_word_list, TokenizerConfig};
use spamlens_core::topics::{
    train_topic_classifier, ExternalTagger, OfflineTagger, TaxonomyMapping, TopicAlgorithm, TopicHyperparams,
    TopicModel, UnifiedTopic,
};

use crate::charts::{bar_chart, line_chart, Series};
use crate::error::{AppError, AppResult};
use crate::io::{self, fmt_f64};
use crate::nlu::{HttpNlu, NLU_URL_ENV};
use crate::pipeline::{self, PSEUDO_TEST_PER_GROUP, PSEUDO_TRAIN_PER_GROUP};

/// Environment variable naming a "bydate" 20 Newsgroups root.
pub const NEWSGROUPS_ENV: &str = "SPAMLENS_20NG_DIR";
pub const DEFAULT_NEWSGROUPS_DIR: &str = "data/20news-bydate";

#[derive(Debug, Parser)]
#[command(name = "spamlens", version, about = "Topic-aware social spammer detection pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Directory read by the command.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Directory written by the command (defaults to --input).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Designated unified topic.
    #[arg(long, global = true)]
    pub topic: Option<String>,
    /// Number of cross-validation folds.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Fail on dangling references instead of quarantining them.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Hyperparameter override `key=value`; repeatable.
    #[arg(long = "hp", global = true, value_name = "KEY=VALUE")]
    pub hp: Vec<String>,
    /// Algorithm name (classifier, or newsgroup model for train-topics).
    #[arg(long, global = true)]
    pub algo: Option<String>,
    /// `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Validate, cleanse and deduplicate a JSON Lines corpus.
    Ingest,
    /// Train the newsgroup topic classifier on a "bydate" 20 Newsgroups tree.
    TrainTopics,
    /// Label every tweet with the two-tagger agreement rule.
    Tag {
        /// Topic model JSON (defaults to topic_model.json in --input, else a
        /// built-in model).
        #[arg(long)]
        model: Option<PathBuf>,
        /// `source<TAB>label<TAB>unified_topic` mapping overrides.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Minimum score both taggers must reach.
        #[arg(long)]
        min_score: Option<f64>,
        /// External tagger timeout in seconds.
        #[arg(long)]
        nlu_timeout: Option<f64>,
    },
    /// Build the eighteen per-user features.
    Features {
        /// `token<TAB>valence` sentiment lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Stopword list, one token per line.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Score replies with the external service instead of the lexicon.
        #[arg(long)]
        nlu_sentiment: bool,
        #[arg(long)]
        nlu_timeout: Option<f64>,
    },
    /// Lasso feature selection and its regularization path.
    Select {
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Fit a classifier on the training split.
    Train {
        /// Random-search budget over the algorithm's tuning grid.
        #[arg(long)]
        search: Option<usize>,
        /// Restrict to features listed in selected_features.txt.
        #[arg(long)]
        selected: bool,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Cross-validate and score the held-out split.
    Evaluate,
    /// Rank users with the model and the baselines; P@k and AP@k.
    Rank {
        /// Comma-separated cutoffs for P@k and AP@k.
        #[arg(long)]
        at: Option<String>,
    },
    /// Generate a labeled synthetic corpus.
    Synth {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        spam_ratio: Option<f64>,
    },
    /// Render SVG charts from the report CSVs.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::TrainTopics => "train-topics",
            Command::Tag { .. } => "tag",
            Command::Features { .. } => "features",
            Command::Select { .. } => "select",
            Command::Train { .. } => "train",
            Command::Evaluate => "evaluate",
            Command::Rank { .. } => "rank",
            Command::Synth { .. } => "synth",
            Command::Report => "report",
        }
    }
}

const CONFIG_KEYS: [&str; 21] = [
    "input",
    "output",
    "topic",
    "k",
    "seed",
    "threads",
    "strict",
    "hp",
    "algo",
    "model",
    "mapping",
    "min_score",
    "nlu_timeout",
    "lexicon",
    "stopwords",
    "nlu_sentiment",
    "lambda",
    "search",
    "selected",
    "test_fraction",
    "at",
];
const CONFIG_KEYS_SYNTH: [&str; 2] = ["n", "spam_ratio"];

/// Parses `key = value` lines; `#` starts a comment line and `hp` may
/// repeat.
pub fn parse_config(text: &str) -> AppResult<BTreeMap<String, Vec<String>>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| AppError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) && !CONFIG_KEYS_SYNTH.contains(&key.as_str()) {
            return Err(AppError::Usage(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        let values = out.entry(key.clone()).or_default();
        if key != "hp" && !values.is_empty() {
            return Err(AppError::Usage(format!("config line {}: `{key}` given twice", i + 1)));
        }
        values.push(value.trim().to_string());
    }
    Ok(out)
}

/// Flag values merged over the configuration file.
struct Settings {
    config: BTreeMap<String, Vec<String>>,
    /// Every resolved value, echoed into the run manifest.
    resolved: BTreeMap<String, String>,
}

impl Settings {
    fn get<T>(&mut self, key: &str, flag: Option<T>) -> AppResult<Option<T>>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.config.get(key).and_then(|v| v.first()) {
                Some(text) => Some(
                    text.parse::<T>()
                        .map_err(|e| AppError::Usage(format!("config `{key}`: `{text}`: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    fn get_or<T>(&mut self, key: &str, flag: Option<T>, default: T) -> AppResult<T>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let v = self.get(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    fn flag(&mut self, key: &str, flag: bool) -> AppResult<bool> {
        let v = if flag { true } else { self.get::<bool>(key, None)?.unwrap_or(false) };
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    fn path(&mut self, key: &str, flag: Option<PathBuf>) -> AppResult<Option<PathBuf>> {
        Ok(self
            .get::<String>(key, flag.map(|p| p.to_string_lossy().into_owned()))?
            .map(PathBuf::from))
    }
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    tool_version: &'a str,
    seed: u64,
    input: String,
    output: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    config: &'a BTreeMap<String, String>,
    duration_ms: u128,
}

/// Shared state of one command run.
struct Run {
    settings: Settings,
    input: PathBuf,
    output: PathBuf,
    seed: u64,
    topic: UnifiedTopic,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    command: &'static str,
}

impl Run {
    fn progress(&self, message: impl std::fmt::Display) {
        eprintln!("[{}] {message}", self.command);
    }

    fn input_file(&mut self, name: &str) -> PathBuf {
        let p = self.input.join(name);
        self.inputs.push(p.clone());
        p
    }

    fn write(&mut self, name: &str, contents: &str) -> AppResult<()> {
        let p = self.output.join(name);
        io::write_text(&p, contents)?;
        self.outputs.push(p);
        Ok(())
    }
}

/// Parses arguments and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> AppResult<()> {
    let config = match &cli.global.config {
        Some(p) => parse_config(&io::read_text(p)?)?,
        None => BTreeMap::new(),
    };
    let mut settings = Settings {
        config,
        resolved: BTreeMap::new(),
    };
    if !matches!(cli.command, Command::Synth { .. }) {
        if let Some(k) = CONFIG_KEYS_SYNTH.iter().find(|k| settings.config.contains_key(**k)) {
            settings.resolved.insert(format!("ignored_config_{k}"), "synth only".into());
        }
    }
    let threads = settings.get("threads", cli.global.threads)?;
    if threads == Some(0) {
        return Err(AppError::Usage("--threads must be at least 1".into()));
    }
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| AppError::Internal(e.to_string()))?
    };
    pool.install(|| run_in_pool(cli, settings))
}

fn default_input(command: &Command) -> PathBuf {
    match command {
        Command::TrainTopics => std::env::var_os(NEWSGROUPS_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_NEWSGROUPS_DIR)),
        _ => PathBuf::from("."),
    }
}

fn run_in_pool(cli: Cli, mut settings: Settings) -> AppResult<()> {
    let started = Instant::now();
    let command = cli.command.name();
    let input = settings
        .path("input", cli.global.input.clone())?
        .unwrap_or_else(|| default_input(&cli.command));
    let output = match settings.path("output", cli.global.output.clone())? {
        Some(p) => p,
        None if matches!(cli.command, Command::TrainTopics) => PathBuf::from("."),
        None => input.clone(),
    };
    settings.resolved.insert("input".into(), input.display().to_string());
    settings.resolved.insert("output".into(), output.display().to_string());
    let seed = settings.get_or("seed", cli.global.seed, 0u64)?;
    let topic_name = settings.get_or("topic", cli.global.topic.clone(), UnifiedTopic::TechnologyAndComputing.as_str().to_string())?;
    let topic = topic_name.parse().map_err(|e| AppError::Usage(format!("--topic: {e}")))?;
    let mut run = Run {
        settings,
        input,
        output,
        seed,
        topic,
        inputs: Vec::new(),
        outputs: Vec::new(),
        command,
    };
    match cli.command.clone() {
        Command::Ingest => ingest(&mut run, &cli.global),
        Command::TrainTopics => train_topics(&mut run, &cli.global),
        Command::Tag {
            model,
            mapping,
            min_score,
            nlu_timeout,
        } => tag(&mut run, &cli.global, model, mapping, min_score, nlu_timeout),
        Command::Features {
            lexicon,
            stopwords,
            nlu_sentiment,
            nlu_timeout,
        } => features(&mut run, lexicon, stopwords, nlu_sentiment, nlu_timeout),
        Command::Select { lambda } => select(&mut run, lambda),
        Command::Train {
            search,
            selected,
            test_fraction,
        } => train_cmd(&mut run, &cli.global, search, selected, test_fraction),
        Command::Evaluate => evaluate(&mut run, &cli.global),
        Command::Rank { at } => rank(&mut run, &cli.global, at),
        Command::Synth { n, spam_ratio } => synth(&mut run, n, spam_ratio),
        Command::Report => report(&mut run),
    }?;
    let manifest = RunManifest {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: run.seed,
        input: run.input.display().to_string(),
        output: run.output.display().to_string(),
        inputs: run.inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: run.outputs.iter().map(|p| p.display().to_string()).collect(),
        config: &run.settings.resolved,
        duration_ms: started.elapsed().as_millis(),
    };
    let text = io::to_json_pretty(&manifest)?;
    io::write_text(&run.output.join(format!("run-{command}.json")), &text)?;
    run.progress(format!("wrote {} files in {:?}", run.outputs.len(), started.elapsed()));
    Ok(())
}

fn core_err(path: &Path) -> impl Fn(spamlens_core::error::Error) -> AppError + '_ {
    move |e| AppError::from_core(path, e)
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn ingest(run: &mut Run, global: &GlobalArgs) -> AppResult<()> {
    let strict = run.settings.flag("strict", global.strict)?;
    if same_dir(&run.input, &run.output) {
        return Err(AppError::Usage(
            "ingest writes a cleaned corpus under the same file names; choose an --output directory different from --input".into(),
        ));
    }
    for f in [io::USERS_FILE, io::TWEETS_FILE, io::REPLIES_FILE] {
        run.input_file(f);
    }
    let (corpus, ingest_report) = io::read_corpus(&run.input, strict)?;
    let before = corpus.sizes();
    let (clean, cleanse_report) = cleanse(&corpus);
    let after = clean.sizes();
    run.progress(format!(
        "{} users, {} tweets, {} replies; {} quarantined; {} duplicate tweets, {} media urls removed",
        after.0,
        after.1,
        after.2,
        ingest_report.quarantined(),
        cleanse_report.duplicate_tweets,
        cleanse_report.media_urls
    ));
    let files = io::write_corpus(&run.output, &clean)?;
    run.outputs.extend(files);
    #[derive(Serialize)]
    struct Report<'a> {
        ingest: &'a spamlens_core::corpus::IngestReport,
        cleanse: &'a spamlens_core::corpus::CleanseReport,
        before: (usize, usize, usize),
        after: (usize, usize, usize),
    }
    let text = io::to_json_pretty(&Report {
        ingest: &ingest_report,
        cleanse: &cleanse_report,
        before,
        after,
    })?;
    run.write("ingest_report.json", &text)
}

fn train_topics(run: &mut Run, global: &GlobalArgs) -> AppResult<()> {
    let algo_name = run
        .settings
        .get_or("algo", global.algo.clone(), TopicAlgorithm::SgdSoftmax.as_str().to_string())?;
    let algorithm: TopicAlgorithm = algo_name.parse().map_err(|e| AppError::Usage(format!("--algo: {e}")))?;
    let root = run.input.clone();
    run.inputs.push(root.clone());
    let (train_docs, test_docs) = io::read_newsgroups(&root).map_err(|e| match e {
        AppError::Data { path, message } => AppError::Data {
            path,
            message: format!("{message} (set --input or {NEWSGROUPS_ENV} to a 20news-bydate root)"),
        },
        other => other,
    })?;
    run.progress(format!("{} training and {} test documents", train_docs.len(), test_docs.len()));
    let hp = TopicHyperparams {
        seed: run.seed,
        ..TopicHyperparams::default()
    };
    let model = train_topic_classifier(&train_docs, algorithm, &hp).map_err(core_err(&root))?;
    let test_accuracy = model.accuracy(&test_docs);
    run.progress(format!("{algorithm}: test accuracy {test_accuracy:.4}"));
    run.write(io::TOPIC_MODEL_FILE, &io::to_json_pretty(&model)?)?;
    let csv = io::csv_text(
        &["algorithm", "train_docs", "test_docs", "train_accuracy", "test_accuracy"],
        &[vec![
            algorithm.as_str().to_string(),
            train_docs.len().to_string(),
            test_docs.len().to_string(),
            fmt_f64(model.training_accuracy),
            fmt_f64(test_accuracy),
        ]],
    )?;
    run.write("topic_eval.csv", &csv)
}

fn nlu_timeout(run: &mut Run, flag: Option<f64>) -> AppResult<Duration> {
    let secs = run.settings.get_or("nlu_timeout", flag, 10.0)?;
    if !(secs > 0.0 && secs.is_finite()) {
        return Err(AppError::Usage("--nlu-timeout must be a positive number of seconds".into()));
    }
    Ok(Duration::from_secs_f64(secs))
}

fn load_topic_model(run: &mut Run, flag: Option<PathBuf>) -> AppResult<(TopicModel, String)> {
    if let Some(p) = run.settings.path("model", flag)? {
        run.inputs.push(p.clone());
        return Ok((io::read_json(&p)?, p.display().to_string()));
    }
    let default = run.input.join(io::TOPIC_MODEL_FILE);
    if default.exists() {
        run.inputs.push(default.clone());
        return Ok((io::read_json(&default)?, default.display().to_string()));
    }
    run.progress("no topic model given; training the built-in pseudo-newsgroup model");
    let model = pipeline::default_topic_model(run.seed).map_err(|e| AppError::Internal(e.to_string()))?;
    Ok((model, "built-in".into()))
}

fn tag(
    run: &mut Run,
    global: &GlobalArgs,
    model_flag: Option<PathBuf>,
    mapping_flag: Option<PathBuf>,
    min_score: Option<f64>,
    timeout: Option<f64>,
) -> AppResult<()> {
    let strict = run.settings.flag("strict", global.strict)?;
    let min_score = run.settings.get_or("min_score", min_score, 0.0)?;
    let timeout = nlu_timeout(run, timeout)?;
    for f in [io::USERS_FILE, io::TWEETS_FILE, io::REPLIES_FILE] {
        run.input_file(f);
    }
    let (corpus, _) = io::read_corpus(&run.input, strict)?;
    let (model, model_source) = load_topic_model(run, model_flag)?;
    run.settings.resolved.insert("topic_model".into(), model_source);
    let mut mapping = TaxonomyMapping::default();
    if let Some(p) = run.settings.path("mapping", mapping_flag)? {
        run.inputs.push(p.clone());
        mapping = mapping.with_overrides_tsv(&io::read_text(&p)?).map_err(core_err(&p))?;
    }
    let http = HttpNlu::from_env(timeout);
    let offline = OfflineTagger {
        model: &model,
        mapping: &mapping,
    };
    let tagger: &dyn ExternalTagger = match &http {
        Some(h) => {
            run.progress(format!("external tagger at {}", h.url()));
            run.settings.resolved.insert("external_tagger".into(), h.url().to_string());
            h
        }
        None => {
            run.progress(format!("{NLU_URL_ENV} not set; using the offline tagger"));
            run.settings.resolved.insert("external_tagger".into(), "offline".into());
            &offline
        }
    };
    let tagging = spamlens_core::topics::tag_corpus(&corpus, &model, tagger, &mapping, min_score);
    run.progress(format!(
        "{} of {} tweets accepted; {} tagger failures",
        tagging.stats.accepted, tagging.stats.total_tweets, tagging.stats.tagger_failures
    ));
    run.write(io::ASSIGNMENTS_FILE, &io::to_jsonl(tagging.assignments.values())?)?;
    let rows: Vec<Vec<String>> = tagging
        .stats
        .per_topic
        .iter()
        .map(|(t, m)| {
            vec![
                t.as_str().to_string(),
                m.count_a.to_string(),
                m.count_b.to_string(),
                m.matched.to_string(),
                fmt_f64(100.0 * m.matching_ratio()),
            ]
        })
        .collect();
    run.write(
        "matching.csv",
        &io::csv_text(&["topic", "count_a", "count_b", "matched", "pct_matching"], &rows)?,
    )?;
    run.write("tag_stats.json", &io::to_json_pretty(&tagging.stats)?)
}

fn features(
    run: &mut Run,
    lexicon_flag: Option<PathBuf>,
    stopwords_flag: Option<PathBuf>,
    nlu_sentiment: bool,
    timeout: Option<f64>,
) -> AppResult<()> {
    let nlu_sentiment = run.settings.flag("nlu_sentiment", nlu_sentiment)?;
    let timeout = nlu_timeout(run, timeout)?;
    for f in [io::USERS_FILE, io::TWEETS_FILE, io::REPLIES_FILE] {
        run.input_file(f);
    }
    let (corpus, _) = io::read_corpus(&run.input, false)?;
    let assignments_path = run.input_file(io::ASSIGNMENTS_FILE);
    let assignments = io::read_assignments(&assignments_path)?;
    let mut tokenizer = TokenizerConfig::default();
    if let Some(p) = run.settings.path("stopwords", stopwords_flag)? {
        run.inputs.push(p.clone());
        tokenizer = tokenizer.with_stopwords(parse_word_list(&io::read_text(&p)?));
    }
    let lexicon = match run.settings.path("lexicon", lexicon_flag)? {
        Some(p) => {
            run.inputs.push(p.clone());
            SentimentLexicon::from_tsv(&io::read_text(&p)?).map_err(core_err(&p))?
        }
        None => SentimentLexicon::default(),
    };
    let http;
    let scorer: &dyn SentimentScorer = if nlu_sentiment {
        http = HttpNlu::from_env(timeout)
            .ok_or_else(|| AppError::Usage(format!("--nlu-sentiment needs {NLU_URL_ENV}")))?;
        &http
    } else {
        &lexicon
    };
    let scores = spamlens_core::features::score_replies(&corpus, scorer).map_err(core_err(&run.input))?;
    let options = FeatureOptions {
        designated_topic: run.topic,
        as_of: None,
        tokenizer,
    };
    let matrix = spamlens_core::features::build_feature_matrix(&corpus, &assignments, &scores, &options)
        .map_err(core_err(&run.input))?;
    run.progress(format!("{} users, designated topic {}", matrix.len(), run.topic));
    run.write(io::FEATURES_FILE, &io::features_csv(&matrix)?)?;
    run.write(io::FEATURES_AUX_FILE, &io::features_aux_csv(&matrix)?)?;
    let labeled = matrix.rows.iter().all(|r| r.label.is_some());
    match pearson_correlation_matrix(&matrix, labeled) {
        Ok(c) => {
            let mut header = vec!["feature"];
            header.extend(c.names.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = c
                .names
                .iter()
                .zip(&c.values)
                .map(|(n, vals)| {
                    let mut r = vec![n.clone()];
                    r.extend(vals.iter().map(|v| v.map(fmt_f64).unwrap_or_default()));
                    r
                })
                .collect();
            run.write("correlation.csv", &io::csv_text(&header, &rows)?)
        }
        Err(e) => {
            run.progress(format!("correlation skipped: {e}"));
            Ok(())
        }
    }
}

fn read_matrix(run: &mut Run) -> AppResult<(FeatureMatrix, PathBuf)> {
    let path = run.input_file(io::FEATURES_FILE);
    let aux = run.input.join(io::FEATURES_AUX_FILE);
    if aux.exists() {
        run.inputs.push(aux);
    }
    Ok((io::read_features(&path, run.topic)?, path))
}

/// Rows restricted to `names`, in that column order.
pub fn dataset_for(matrix: &FeatureMatrix, names: &[String]) -> spamlens_core::error::Result<Dataset> {
    let columns: Vec<Vec<f64>> = names
        .iter()
        .map(|n| matrix.column_by_name(n))
        .collect::<spamlens_core::error::Result<_>>()?;
    let rows = (0..matrix.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    Dataset::new(names.to_vec(), rows, matrix.labels()?)
}

fn all_features() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

fn select(run: &mut Run, lambda_flag: Option<f64>) -> AppResult<()> {
    let (matrix, path) = read_matrix(run)?;
    let y = matrix.labels().map_err(core_err(&path))?;
    let names = all_features();
    let columns: Vec<Vec<f64>> = (0..FEATURE_COUNT).map(|i| matrix.column(i)).collect();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let max = lambda_max(&columns, &yf);
    let lambda = run.settings.get_or("lambda", lambda_flag, 0.05 * max)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(AppError::Usage("--lambda must be a non-negative number".into()));
    }
    let mut path_rows = Vec::new();
    for i in 0..20 {
        let l = max * 10f64.powf(-3.0 * f64::from(i) / 19.0);
        let r = lasso_logistic(&names, &columns, &y, l).map_err(core_err(&path))?;
        path_rows.push(vec![fmt_f64(l), r.nonzero_count().to_string(), r.selected.join(" ")]);
    }
    run.write(
        "lasso_path.csv",
        &io::csv_text(&["lambda", "selected_count", "selected"], &path_rows)?,
    )?;
    let chosen = lasso_logistic(&names, &columns, &y, lambda).map_err(core_err(&path))?;
    run.progress(format!("lambda {lambda:.6}: {} of 18 features selected", chosen.nonzero_count()));
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(&chosen.weights)
        .map(|(n, w)| vec![n.clone(), fmt_f64(*w), chosen.selected.contains(n).to_string()])
        .collect();
    run.write("lasso.csv", &io::csv_text(&["feature", "weight", "selected"], &rows)?)?;
    let mut list = chosen.selected.join("\n");
    if !list.is_empty() {
        list.push('\n');
    }
    run.write(io::SELECTED_FILE, &list)
}

fn parse_hp(hp: &[String]) -> AppResult<Vec<(String, String)>> {
    hp.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| AppError::Usage(format!("--hp `{kv}` is not key=value")))
        })
        .collect()
}

fn hp_overrides(run: &mut Run, global: &GlobalArgs) -> AppResult<Vec<(String, String)>> {
    let mut all = run.settings.config.get("hp").cloned().unwrap_or_default();
    all.extend(global.hp.iter().cloned());
    let parsed = parse_hp(&all)?;
    for (k, v) in &parsed {
        run.settings.resolved.insert(format!("hp.{k}"), v.clone());
    }
    Ok(parsed)
}

fn parse_algorithm(name: &str) -> AppResult<Algorithm> {
    name.parse().map_err(|e| AppError::Usage(format!("--algo: {e}")))
}

fn spec_for(run: &mut Run, global: &GlobalArgs, algorithm: Algorithm) -> AppResult<ModelSpec> {
    let mut spec = ModelSpec::new(algorithm, run.seed);
    for (k, v) in hp_overrides(run, global)? {
        spec.set(&k, &v).map_err(|e| AppError::Usage(e.to_string()))?;
    }
    spec.validate().map_err(|e| AppError::Usage(e.to_string()))?;
    Ok(spec)
}

fn split_csv(matrix: &FeatureMatrix, test: &[usize]) -> AppResult<String> {
    let mut is_test = vec![false; matrix.len()];
    for &i in test {
        is_test[i] = true;
    }
    let rows: Vec<Vec<String>> = matrix
        .rows
        .iter()
        .zip(&is_test)
        .map(|(r, t)| vec![r.user_id.clone(), if *t { "test" } else { "train" }.to_string()])
        .collect();
    io::csv_text(&["user_id", "set"], &rows)
}

fn train_cmd(
    run: &mut Run,
    global: &GlobalArgs,
    search: Option<usize>,
    selected: bool,
    test_fraction: Option<f64>,
) -> AppResult<()> {
    let algo_name = run.settings.get_or("algo", global.algo.clone(), "random_forest".to_string())?;
    let algorithm = parse_algorithm(&algo_name)?;
    let mut spec = spec_for(run, global, algorithm)?;
    let search = run.settings.get("search", search)?;
    let selected = run.settings.flag("selected", selected)?;
    let fraction = run.settings.get_or("test_fraction", test_fraction, 0.2)?;
    let k = run.settings.get_or("k", global.k, 10usize)?;
    let (matrix, path) = read_matrix(run)?;
    let names = if selected {
        let p = run.input_file(io::SELECTED_FILE);
        let list: Vec<String> = io::read_text(&p)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
        if list.is_empty() {
            return Err(AppError::data(&p, "no selected features"));
        }
        list
    } else {
        all_features()
    };
    let data = dataset_for(&matrix, &names).map_err(core_err(&path))?;
    let (train_idx, test_idx) = train_test_split(&data.labels, fraction, true, run.seed).map_err(|e| AppError::Usage(e.to_string()))?;
    let train_data = data.subset(&train_idx);
    if let Some(budget) = search {
        let space = default_search_space(algorithm);
        let outcome = random_search(&spec, &space, &train_data, budget, k, run.seed).map_err(core_err(&path))?;
        let rows: Vec<Vec<String>> = outcome
            .trials
            .iter()
            .enumerate()
            .map(|(i, t)| {
                vec![
                    i.to_string(),
                    t.spec.canonical(),
                    t.result.as_ref().map(|r| fmt_f64(r.mean.f1)).unwrap_or_default(),
                    t.result.as_ref().map(|r| fmt_f64(r.mean.auc)).unwrap_or_default(),
                    t.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        run.write("search.csv", &io::csv_text(&["trial", "spec", "f1", "auc", "error"], &rows)?)?;
        run.progress(format!("search best: {}", outcome.best.canonical()));
        spec = outcome.best;
    }
    let model = train(&spec, &train_data).map_err(core_err(&path))?;
    run.progress(format!("{} trained on {} rows", spec.canonical(), train_data.len()));
    run.write(io::MODEL_FILE, &io::model_json(&model)?)?;
    run.write(io::SPLIT_FILE, &split_csv(&matrix, &test_idx)?)?;
    let rows: Vec<Vec<String>> = model
        .feature_importance()
        .into_iter()
        .map(|(n, v)| vec![n, fmt_f64(v)])
        .collect();
    run.write("importance.csv", &io::csv_text(&["feature", "importance"], &rows)?)
}

fn read_split(path: &Path, matrix: &FeatureMatrix) -> AppResult<(Vec<usize>, Vec<usize>)> {
    let (_, rows) = io::read_csv(path)?;
    let sets: BTreeMap<&str, &str> = rows
        .iter()
        .filter(|r| r.len() == 2)
        .map(|r| (r[0].as_str(), r[1].as_str()))
        .collect();
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (i, r) in matrix.rows.iter().enumerate() {
        match sets.get(r.user_id.as_str()) {
            Some(&"test") => test_idx.push(i),
            Some(&"train") => train_idx.push(i),
            _ => return Err(AppError::data(path, format!("user `{}` missing from split", r.user_id))),
        }
    }
    Ok((train_idx, test_idx))
}

struct Evaluated {
    method: String,
    cv: CvResult,
    holdout: Option<(Vec<f64>, Vec<u8>, Vec<String>)>,
}

fn metrics_rows(e: &Evaluated) -> AppResult<Vec<Vec<String>>> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut rows: Vec<Vec<String>> = e
        .cv
        .folds
        .iter()
        .map(|f| {
            vec![
                e.method.clone(),
                f.fold.to_string(),
                f.test_size.to_string(),
                fmt_f64(f.accuracy),
                fmt_f64(f.precision),
                fmt_f64(f.recall),
                fmt_f64(f.f1),
                opt(f.auc),
            ]
        })
        .collect();
    for (name, s) in [("mean", &e.cv.mean), ("std", &e.cv.std)] {
        rows.push(vec![
            e.method.clone(),
            name.into(),
            String::new(),
            fmt_f64(s.accuracy),
            fmt_f64(s.precision),
            fmt_f64(s.recall),
            fmt_f64(s.f1),
            fmt_f64(s.auc),
        ]);
    }
    if let Some((p, y, _)) = &e.holdout {
        let m = prf_metrics(&confusion(p, y, 0.5).map_err(|e| AppError::Internal(e.to_string()))?)
            .map_err(|e| AppError::Internal(e.to_string()))?;
        let auc = roc_auc(p, y).ok().map(|r| r.auc);
        rows.push(vec![
            e.method.clone(),
            "holdout".into(),
            y.len().to_string(),
            fmt_f64(m.accuracy),
            fmt_f64(m.precision),
            fmt_f64(m.recall),
            fmt_f64(m.f1),
            opt(auc),
        ]);
    }
    Ok(rows)
}

fn evaluate(run: &mut Run, global: &GlobalArgs) -> AppResult<()> {
    let k = run.settings.get_or("k", global.k, 10usize)?;
    let algo = run.settings.get("algo", global.algo.clone())?;
    let (matrix, path) = read_matrix(run)?;
    let split_path = run.input.join(io::SPLIT_FILE);
    let split = if split_path.exists() {
        run.inputs.push(split_path.clone());
        Some(read_split(&split_path, &matrix)?)
    } else {
        None
    };
    // (spec, features, fitted model for the held-out split when already trained)
    let mut jobs: Vec<(ModelSpec, Vec<String>, Option<TrainedModel>)> = Vec::new();
    match algo.as_deref() {
        Some(list) => {
            let algos: Vec<Algorithm> = if list == "all" {
                Algorithm::ALL.to_vec()
            } else {
                list.split(',').map(|a| parse_algorithm(a.trim())).collect::<AppResult<_>>()?
            };
            let hp = hp_overrides(run, global)?;
            if algos.len() > 1 && !hp.is_empty() {
                return Err(AppError::Usage("--hp applies to a single --algo".into()));
            }
            for a in algos {
                let mut spec = ModelSpec::new(a, run.seed);
                for (k, v) in &hp {
                    spec.set(k, v).map_err(|e| AppError::Usage(e.to_string()))?;
                }
                jobs.push((spec, all_features(), None));
            }
        }
        None => {
            let model_path = run.input_file(io::MODEL_FILE);
            let model = io::read_model(&model_path)?;
            jobs.push((model.spec.clone(), model.feature_names.clone(), Some(model)));
        }
    }
    let mut results = Vec::new();
    for (spec, names, fitted) in jobs {
        let data = dataset_for(&matrix, &names).map_err(core_err(&path))?;
        let cv = cross_validate(&spec, &data, k, true, run.seed).map_err(core_err(&path))?;
        run.progress(format!("{}: {k}-fold mean F1 {:.4}, AUC {:.4}", spec.algorithm, cv.mean.f1, cv.mean.auc));
        let holdout = match &split {
            Some((train_idx, test_idx)) => {
                let model = match fitted {
                    Some(m) => m,
                    None => train(&spec, &data.subset(train_idx)).map_err(core_err(&path))?,
                };
                let test = data.subset(test_idx);
                let p = model.predict_proba_batch(&test.rows).map_err(core_err(&path))?;
                let ids = test_idx.iter().map(|&i| matrix.rows[i].user_id.clone()).collect();
                Some((p, test.labels, ids))
            }
            None => None,
        };
        results.push(Evaluated {
            method: spec.algorithm.as_str().to_string(),
            cv,
            holdout,
        });
    }
    let mut metric_rows = Vec::new();
    let mut roc_rows = Vec::new();
    let mut prediction_rows = Vec::new();
    for e in &results {
        metric_rows.extend(metrics_rows(e)?);
        if let Some((p, y, ids)) = &e.holdout {
            if let Ok(curve) = roc_auc(p, y) {
                for pt in &curve.points {
                    roc_rows.push(vec![e.method.clone(), fmt_f64(pt.fpr), fmt_f64(pt.tpr), fmt_f64(pt.threshold)]);
                }
            }
            for ((s, l), id) in p.iter().zip(y).zip(ids) {
                prediction_rows.push(vec![e.method.clone(), id.clone(), fmt_f64(*s), l.to_string()]);
            }
        }
    }
    run.write(
        "metrics.csv",
        &io::csv_text(&["method", "fold", "test_size", "accuracy", "precision", "recall", "f1", "auc"], &metric_rows)?,
    )?;
    if split.is_some() {
        run.write("roc.csv", &io::csv_text(&["method", "fpr", "tpr", "threshold"], &roc_rows)?)?;
        run.write(
            "predictions.csv",
            &io::csv_text(&["method", "user_id", "score", "label"], &prediction_rows)?,
        )?;
    }
    Ok(())
}

fn parse_cutoffs(text: &str) -> AppResult<Vec<usize>> {
    let cutoffs: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| AppError::Usage(format!("--at `{s}`: {e}"))))
        .collect::<AppResult<_>>()?;
    if cutoffs.contains(&0) {
        return Err(AppError::Usage("--at cutoffs must be positive".into()));
    }
    Ok(cutoffs)
}

fn rank(run: &mut Run, global: &GlobalArgs, at: Option<String>) -> AppResult<()> {
    let k = run.settings.get_or("k", global.k, 10usize)?;
    let at = run
        .settings
        .get_or("at", at, "10,20,30,40,50,60,70,80,90,100".to_string())?;
    let cutoffs = parse_cutoffs(&at)?;
    let (matrix, path) = read_matrix(run)?;
    let mut rankings: Vec<RankingResult> = Vec::new();
    let model_path = run.input.join(io::MODEL_FILE);
    if model_path.exists() {
        run.inputs.push(model_path.clone());
        let model = io::read_model(&model_path)?;
        let data = dataset_for(&matrix, &model.feature_names).map_err(core_err(&path))?;
        // out-of-fold scores, so no user is ranked by a model trained on it
        let scores = cross_val_predict(&model.spec, &data, k, true, run.seed).map_err(core_err(&path))?;
        let entries = matrix.rows.iter().map(|r| r.user_id.clone()).zip(scores).collect();
        rankings.push(RankingResult::from_scores(RankingMethod::Model, entries));
    }
    for method in RankingMethod::BASELINES {
        rankings.push(rank_baseline(method, &matrix).map_err(core_err(&path))?);
    }
    let labels: BTreeMap<String, Option<bool>> = matrix
        .rows
        .iter()
        .map(|r| (r.user_id.clone(), r.label.map(|l| l.is_spammer())))
        .collect();
    let mut rows = Vec::new();
    for r in &rankings {
        for (i, (id, score)) in r.entries.iter().enumerate() {
            let label = labels[id].map(|b| u8::from(b).to_string()).unwrap_or_default();
            rows.push(vec![r.method.as_str().to_string(), (i + 1).to_string(), id.clone(), fmt_f64(*score), label]);
        }
    }
    run.write(
        "ranking.csv",
        &io::csv_text(&["method", "rank", "user_id", "score", "label"], &rows)?,
    )?;
    if labels.values().any(Option::is_none) {
        run.progress("unlabeled users present; apk.csv skipped");
        return Ok(());
    }
    let truth: BTreeMap<String, bool> = labels.into_iter().map(|(u, l)| (u, l.unwrap_or(false))).collect();
    let mut apk = Vec::new();
    for r in &rankings {
        for &c in cutoffs.iter().filter(|&&c| c <= r.len()) {
            let p = precision_at_k(r, &truth, c).map_err(core_err(&path))?;
            let ap = average_precision_at_k(r, &truth, c).map_err(core_err(&path))?;
            apk.push(vec![r.method.as_str().to_string(), c.to_string(), fmt_f64(p), fmt_f64(ap)]);
        }
        if let Some(&c) = cutoffs.iter().find(|&&c| c <= r.len()) {
            let ap = average_precision_at_k(r, &truth, c).map_err(core_err(&path))?;
            run.progress(format!("{}: AP@{c} {ap:.4}", r.method));
        }
    }
    run.write("apk.csv", &io::csv_text(&["method", "k", "p_at_k", "ap_at_k"], &apk)?)
}

fn synth(run: &mut Run, n: Option<u32>, spam_ratio: Option<f64>) -> AppResult<()> {
    let defaults = SynthConfig::default();
    let n = run.settings.get_or("n", n, defaults.n_users)?;
    let spam_ratio = run.settings.get_or("spam_ratio", spam_ratio, defaults.spam_ratio)?;
    let config = SynthConfig {
        n_users: n,
        spam_ratio,
        seed: run.seed,
        designated_topic: run.topic,
        ..defaults
    };
    let out = generate(&config).map_err(|e| AppError::Usage(e.to_string()))?;
    run.progress(format!(
        "{} users ({} spammers), {} tweets, {} replies",
        out.users.len(),
        config.spammer_count(),
        out.tweets.len(),
        out.replies.len()
    ));
    let files = io::write_corpus_records(&run.output, &out.users, &out.tweets, &out.replies)?;
    run.outputs.extend(files);
    run.write("manifest.json", &io::to_json_pretty(&out.manifest)?)?;
    let (train_docs, test_docs) = pseudo_newsgroups(run.seed, PSEUDO_TRAIN_PER_GROUP, PSEUDO_TEST_PER_GROUP);
    let root = run.output.join("20news-bydate");
    io::write_newsgroups(&root, &train_docs, &test_docs)?;
    run.outputs.push(root);
    Ok(())
}

fn float_cells(path: &Path, row: &[String], from: usize) -> AppResult<Vec<f64>> {
    row[from..]
        .iter()
        .map(|c| {
            if c.is_empty() {
                Ok(f64::NAN)
            } else {
                c.parse::<f64>().map_err(|e| AppError::data(path, format!("`{c}`: {e}")))
            }
        })
        .collect()
}

fn check_header(path: &Path, header: &[String], expected: &[&str]) -> AppResult<()> {
    if header != expected {
        return Err(AppError::data(path, format!("header must be `{}`", expected.join(","))));
    }
    Ok(())
}

fn report(run: &mut Run) -> AppResult<()> {
    let mut rendered = 0;
    let metrics = run.input.join("metrics.csv");
    if metrics.exists() {
        run.inputs.push(metrics.clone());
        let (header, rows) = io::read_csv(&metrics)?;
        check_header(&metrics, &header, &["method", "fold", "test_size", "accuracy", "precision", "recall", "f1", "auc"])?;
        let mut methods: Vec<String> = Vec::new();
        let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in rows.iter().filter(|r| r[1] == "mean") {
            methods.push(r[0].clone());
            values.insert(r[0].clone(), float_cells(&metrics, r, 3)?);
        }
        let names = ["accuracy", "precision", "recall", "f1", "auc"];
        let series: Vec<Vec<f64>> = (0..names.len())
            .map(|m| methods.iter().map(|name| values[name][m]).collect())
            .collect();
        let svg = bar_chart(
            "Cross-validated metrics",
            "score",
            &methods,
            &names.map(String::from),
            &series,
            Some((0.0, 1.0)),
        );
        run.write("metrics.svg", &svg)?;
        rendered += 1;
    }
    let roc = run.input.join("roc.csv");
    if roc.exists() {
        run.inputs.push(roc.clone());
        let (header, rows) = io::read_csv(&roc)?;
        check_header(&roc, &header, &["method", "fpr", "tpr", "threshold"])?;
        let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for r in &rows {
            let v = float_cells(&roc, r, 1)?;
            series.entry(r[0].clone()).or_default().push((v[0], v[1]));
        }
        let mut lines: Vec<Series> = series.into_iter().map(|(name, points)| Series { name, points }).collect();
        lines.push(Series {
            name: "chance".into(),
            points: vec![(0.0, 0.0), (1.0, 1.0)],
        });
        let svg = line_chart("ROC (held-out split)", "false positive rate", "true positive rate", &lines, Some((0.0, 1.0)), Some((0.0, 1.0)));
        run.write("roc.svg", &svg)?;
        rendered += 1;
    }
    let apk = run.input.join("apk.csv");
    if apk.exists() {
        run.inputs.push(apk.clone());
        let (header, rows) = io::read_csv(&apk)?;
        check_header(&apk, &header, &["method", "k", "p_at_k", "ap_at_k"])?;
        for (col, file, title) in [(2, "pk.svg", "P@k"), (3, "apk.svg", "AP@k")] {
            let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for r in &rows {
                let v = float_cells(&apk, r, 1)?;
                series.entry(r[0].clone()).or_default().push((v[0], v[col - 1]));
            }
            let lines: Vec<Series> = series.into_iter().map(|(name, points)| Series { name, points }).collect();
            run.write(file, &line_chart(title, "k", title, &lines, None, Some((0.0, 1.0))))?;
        }
        rendered += 1;
    }
    let importance = run.input.join("importance.csv");
    if importance.exists() {
        run.inputs.push(importance.clone());
        let (header, rows) = io::read_csv(&importance)?;
        check_header(&importance, &header, &["feature", "importance"])?;
        let names: Vec<String> = rows.iter().map(|r| r[0].clone()).collect();
        let vals: Vec<f64> = rows
            .iter()
            .map(|r| float_cells(&importance, r, 1).map(|v| v[0]))
            .collect::<AppResult<_>>()?;
        let svg = bar_chart("Feature importance", "importance", &names, &["importance".into()], &[vals], None);
        run.write("importance.svg", &svg)?;
        rendered += 1;
    }
    if rendered == 0 {
        return Err(AppError::data(
            &run.input,
            "none of metrics.csv, roc.csv, apk.csv or importance.csv found",
        ));
    }
    Ok(())
}
