//! The `uop` command line: four subcommands driven by one TOML config file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    count_points, load_external_points, load_neighborhoods, nearest_distance_comparison, term_frequencies,
    write_comparison_csv, write_term_frequencies_csv, write_zscores_csv, z_scores,
};
use crate::config::PipelineConfig;
use crate::corpus_io::{
    load_corpus, load_lexicons, read_geojson_points, resolve, write_geojson, LexiconBundle, ADJECTIVES_FILE,
    CONTRACTIONS_FILE, SENTIMENT_FILE, STOPWORDS_FILE,
};
use crate::dictionary::{assemble_dictionary, build_graph, k_clique_communities, prune, UopDictionary};
use crate::embeddings::{train, EmbeddingModel, TrainConfig};
use crate::error::Error;
use crate::extract::extract_perceptions;
use crate::preprocess::{extract_qualifiers, preprocess_corpus};
use crate::sentiment::SentimentLexicon;

pub const DICTIONARY_FILE: &str = "dictionary.json";
pub const MODEL_FILE: &str = "model.vec";
pub const PERCEPTIONS_FILE: &str = "perceptions.geojson";
pub const STAGE_COUNTS_FILE: &str = "stage_counts.csv";
pub const ZSCORES_FILE: &str = "zscores.csv";
pub const TERM_FREQUENCIES_FILE: &str = "term_frequencies.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Debug, Parser)]
#[command(
    name = "uop",
    version,
    about = "Mine urban outdoor perceptions from reviews and geolocated posts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train embeddings on the review corpus and build the perception dictionary.
    BuildDict(CommonArgs),
    /// Label, filter and cluster the geolocated corpus.
    Extract(CommonArgs),
    /// Per-neighborhood z-scores and term frequencies.
    Analyze(CommonArgs),
    /// Distances from external perception points to ours.
    Compare(CommonArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides `seed` from the config file.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides `out_dir` from the config file.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Everything one config file can set. Relative paths are resolved against
/// the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
    pub reviews: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    pub geo_corpus: Option<PathBuf>,
    pub neighborhoods: Option<PathBuf>,
    pub external_points: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Defaults to `out_dir/dictionary.json`.
    pub dictionary: Option<PathBuf>,
    /// Defaults to `out_dir/model.vec`.
    pub model: Option<PathBuf>,
    /// Defaults to `out_dir/perceptions.geojson`.
    pub perceptions: Option<PathBuf>,
    /// `key=LABEL`, where key is an automatic label or a member word.
    #[serde(default)]
    pub label_overrides: Vec<String>,
    /// Run name written into the stage-count report.
    #[serde(default = "default_run_label")]
    pub run_label: String,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_run_label() -> String {
    "run".into()
}

const RUN_KEYS: [&str; 11] = [
    "reviews",
    "lexicons",
    "geo_corpus",
    "neighborhoods",
    "external_points",
    "out_dir",
    "dictionary",
    "model",
    "perceptions",
    "label_overrides",
    "run_label",
];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let pipeline_keys = toml::Table::try_from(PipelineConfig::default()).expect("config serializes");
        for key in table.keys() {
            if !pipeline_keys.contains_key(key) && !RUN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key {key:?}")));
            }
        }
        let config: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.pipeline.validate()?;
        config.overrides()?;
        Ok(config)
    }

    /// Load, resolve relative paths, and apply command-line overrides.
    pub fn load(args: &CommonArgs) -> Result<Self, Error> {
        let text = fs::read_to_string(&args.config).map_err(|e| Error::read(&args.config, e))?;
        let mut config = Self::parse(&text)?;
        let base = args.config.parent().unwrap_or(Path::new("."));
        for p in [
            &mut config.reviews,
            &mut config.lexicons,
            &mut config.geo_corpus,
            &mut config.neighborhoods,
            &mut config.external_points,
            &mut config.dictionary,
            &mut config.model,
            &mut config.perceptions,
        ]
        .into_iter()
        .flatten()
        {
            *p = resolve(base, p);
        }
        config.out_dir = match &args.out {
            Some(out) => out.clone(),
            None => resolve(base, &config.out_dir),
        };
        if let Some(seed) = args.seed {
            config.pipeline.seed = seed;
        }
        Ok(config)
    }

    pub fn overrides(&self) -> Result<BTreeMap<String, String>, Error> {
        self.label_overrides
            .iter()
            .map(|entry| match entry.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => {
                    Ok((k.trim().to_uppercase(), v.trim().to_string()))
                }
                _ => Err(Error::Config(format!("label override {entry:?} is not key=LABEL"))),
            })
            .collect()
    }

    fn required(&self, field: &'static str, value: &Option<PathBuf>) -> Result<PathBuf, Error> {
        value
            .clone()
            .ok_or_else(|| Error::Config(format!("config needs `{field}` for this command")))
    }

    fn dictionary_path(&self) -> PathBuf {
        self.dictionary
            .clone()
            .unwrap_or_else(|| self.out_dir.join(DICTIONARY_FILE))
    }

    fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out_dir.join(MODEL_FILE))
    }

    fn perceptions_path(&self) -> PathBuf {
        self.perceptions
            .clone()
            .unwrap_or_else(|| self.out_dir.join(PERCEPTIONS_FILE))
    }
}

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

type StageResult<T> = Result<T, StageError>;

trait AtStage<T> {
    fn at(self, stage: &'static str) -> StageResult<T>;
}

impl<T> AtStage<T> for Result<T, Error> {
    fn at(self, stage: &'static str) -> StageResult<T> {
        self.map_err(|source| StageError { stage, source })
    }
}

pub fn sha256_file(path: &Path) -> Result<String, Error> {
    let bytes = fs::read(path).map_err(|e| Error::read(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Bookkeeping for one run: timings, counts, inputs, and the outputs to
/// delete again if the run fails.
struct Run {
    command: &'static str,
    config: RunConfig,
    started: Instant,
    timings: BTreeMap<&'static str, f64>,
    counts: BTreeMap<String, Value>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    committed: bool,
}

impl Run {
    fn new(command: &'static str, config: RunConfig) -> StageResult<Self> {
        fs::create_dir_all(&config.out_dir)
            .map_err(|e| Error::write(&config.out_dir, e))
            .at("setup")?;
        Ok(Run {
            command,
            config,
            started: Instant::now(),
            timings: BTreeMap::new(),
            counts: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            committed: false,
        })
    }

    fn stage<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T, Error>) -> StageResult<T> {
        let t = Instant::now();
        log::info!("{}: {name}", self.command);
        let out = f().at(name);
        self.timings.insert(name, t.elapsed().as_secs_f64());
        out
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn lexicon_inputs(&mut self, dir: &Path) {
        for name in [STOPWORDS_FILE, CONTRACTIONS_FILE, SENTIMENT_FILE, ADJECTIVES_FILE] {
            self.input(&dir.join(name));
        }
    }

    fn count(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.counts
            .insert(key.into(), serde_json::to_value(value).expect("count serializes"));
    }

    /// Path of a new output file, registered for cleanup on failure.
    fn output(&mut self, name: &str) -> PathBuf {
        let p = self.config.out_dir.join(name);
        self.outputs.push(p.clone());
        p
    }

    fn finish(mut self) -> StageResult<PathBuf> {
        let manifest_path = self.output(&format!("manifest_{}.json", self.command.replace('-', "_")));
        let digests = |paths: &[PathBuf]| -> Result<BTreeMap<String, String>, Error> {
            paths
                .iter()
                .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
                .collect()
        };
        let outputs: Vec<PathBuf> = self.outputs[..self.outputs.len() - 1].to_vec();
        let manifest = json!({
            "command": self.command,
            "config": self.config,
            "inputs": digests(&self.inputs).at("manifest")?,
            "outputs": digests(&outputs).at("manifest")?,
            "stage_counts": self.counts,
            "timings_s": self.timings,
            "total_s": self.started.elapsed().as_secs_f64(),
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&manifest_path, text)
            .map_err(|e| Error::write(&manifest_path, e))
            .at("manifest")?;
        self.committed = true;
        Ok(manifest_path)
    }
}

impl Drop for Run {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.outputs {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn load_lexicon_bundle(run: &mut Run) -> StageResult<LexiconBundle> {
    let dir = run.config.required("lexicons", &run.config.lexicons).at("load")?;
    run.lexicon_inputs(&dir);
    run.stage("load", || load_lexicons(&dir))
}

pub fn cmd_build_dict(config: RunConfig) -> StageResult<PathBuf> {
    let mut run = Run::new("build-dict", config)?;
    let cfg = run.config.pipeline.clone();
    let reviews = run.config.required("reviews", &run.config.reviews).at("load")?;
    run.input(&reviews);
    let lex = load_lexicon_bundle(&mut run)?;
    let corpus = run.stage("load", || load_corpus(&reviews, false))?;
    run.count("records", corpus.records.len());
    run.count("rejected", corpus.rejected.len());

    let docs = run.stage("preprocess", || Ok(preprocess_corpus(&corpus.records, &lex)))?;
    let sentences: Vec<_> = docs.iter().flat_map(|d| d.sentences.iter().cloned()).collect();
    let (model, report) = run.stage("train", || train(&sentences, &TrainConfig::from(&cfg)))?;
    run.count("vocabulary", model.len());
    run.count("training_tokens", report.training_tokens);
    run.count("epoch_loss", &report.epoch_loss);

    let qualifiers = run.stage("qualifiers", || Ok(extract_qualifiers(&docs, &lex)))?;
    run.count("qualifiers", qualifiers.len());
    let sentiment = SentimentLexicon::new(lex.sentiment.clone());
    let built = run.stage("graph", || {
        build_graph(&qualifiers, &model, &sentiment, cfg.alpha, cfg.k)
    })?;
    if !built.out_of_vocabulary.is_empty() {
        log::warn!(
            "{} qualifiers missing from the model were dropped",
            built.out_of_vocabulary.len()
        );
    }
    run.count("graph_vertices", built.graph.vertex_count());
    run.count("graph_edges", built.graph.edge_count());
    run.count("out_of_vocabulary", &built.out_of_vocabulary);

    let pruned = run.stage("prune", || prune(&built.graph, cfg.beta, cfg.prune_rule))?;
    run.count("pruned_vertices", pruned.vertex_count());
    run.count("pruned_edges", pruned.edge_count());

    let communities = run.stage("percolation", || {
        let c = k_clique_communities(&pruned, cfg.k);
        if c.is_empty() {
            return Err(Error::NoCommunities);
        }
        Ok(c)
    })?;
    run.count("communities", communities.len());

    let overrides = run.config.overrides().at("dictionary")?;
    let dictionary = run.stage("dictionary", || {
        let (c, report) = assemble_dictionary(&communities, &sentiment, &model, cfg.alpha, &overrides)?;
        if !report.fallback_labels.is_empty() {
            log::warn!("labels taken from overlapping words: {:?}", report.fallback_labels);
        }
        UopDictionary::new(c, cfg.alpha, cfg.beta, cfg.k)
    })?;
    run.count("labels", dictionary.labels().collect::<Vec<_>>());

    let dict_path = run.output(DICTIONARY_FILE);
    let model_path = run.output(MODEL_FILE);
    run.stage("write", || {
        dictionary.save(&dict_path)?;
        model.save(&model_path)
    })?;
    run.finish()
}

pub fn cmd_extract(config: RunConfig) -> StageResult<PathBuf> {
    let mut run = Run::new("extract", config)?;
    let cfg = run.config.pipeline.clone();
    let geo = run.config.required("geo_corpus", &run.config.geo_corpus).at("load")?;
    let (dict_path, model_path) = (run.config.dictionary_path(), run.config.model_path());
    run.input(&geo);
    run.input(&dict_path);
    run.input(&model_path);
    let lex = load_lexicon_bundle(&mut run)?;
    let corpus = run.stage("load", || load_corpus(&geo, true))?;
    let dict = run.stage("load", || UopDictionary::load(&dict_path))?;
    let model = run.stage("load", || EmbeddingModel::load(&model_path))?;
    run.count("rejected", corpus.rejected.len());

    let docs = run.stage("preprocess", || Ok(preprocess_corpus(&corpus.records, &lex)))?;
    let (clusters, report) = run.stage("extract", || extract_perceptions(docs, &dict, &model, &cfg))?;
    for (stage, count) in report.rows() {
        run.count(stage, count);
    }
    run.count("clusters", clusters.len());

    let geojson = run.output(PERCEPTIONS_FILE);
    let stages = run.output(STAGE_COUNTS_FILE);
    let label = run.config.run_label.clone();
    run.stage("write", || {
        write_geojson(&clusters, &geojson)?;
        report.write_csv(&stages, &label)
    })?;
    run.finish()
}

pub fn cmd_analyze(config: RunConfig) -> StageResult<PathBuf> {
    let mut run = Run::new("analyze", config)?;
    let cfg = run.config.pipeline.clone();
    let hoods_path = run
        .config
        .required("neighborhoods", &run.config.neighborhoods)
        .at("load")?;
    let points_path = run.config.perceptions_path();
    let dict_path = run.config.dictionary_path();
    run.input(&hoods_path);
    run.input(&points_path);
    let neighborhoods = run.stage("load", || load_neighborhoods(&hoods_path))?;
    let points = run.stage("load", || read_geojson_points(&points_path))?;
    let categories: Vec<String> = if dict_path.exists() {
        run.input(&dict_path);
        let dict = run.stage("load", || UopDictionary::load(&dict_path))?;
        dict.labels().map(str::to_string).collect()
    } else {
        let labels: BTreeSet<&String> = points.iter().flat_map(|p| &p.labels).collect();
        labels.into_iter().cloned().collect()
    };

    let report = run.stage("zscores", || {
        let counts = count_points(&points, &neighborhoods, &categories);
        z_scores(&counts, cfg.std_divisor)
    })?;
    run.count("neighborhoods", neighborhoods.len());
    run.count("points", points.len());
    run.count("zscore_rows", report.entries.len());

    let freqs = match &run.config.geo_corpus {
        Some(geo) => {
            let geo = geo.clone();
            run.input(&geo);
            let lex = load_lexicon_bundle(&mut run)?;
            let ids: BTreeSet<&str> = points.iter().map(|p| p.doc_id.as_str()).collect();
            run.stage("term_frequencies", || {
                let corpus = load_corpus(&geo, true)?;
                let kept: Vec<_> = corpus
                    .records
                    .into_iter()
                    .filter(|r| ids.contains(r.id.as_str()))
                    .collect();
                Ok(term_frequencies(&preprocess_corpus(&kept, &lex)))
            })?
        }
        None => {
            log::warn!("no geo_corpus configured; term frequencies will be empty");
            Vec::new()
        }
    };
    run.count("distinct_stems", freqs.len());

    let z_path = run.output(ZSCORES_FILE);
    let tf_path = run.output(TERM_FREQUENCIES_FILE);
    run.stage("write", || {
        write_zscores_csv(&report, &z_path)?;
        write_term_frequencies_csv(&freqs, &tf_path)
    })?;
    run.finish()
}

pub fn cmd_compare(config: RunConfig) -> StageResult<PathBuf> {
    let mut run = Run::new("compare", config)?;
    let cfg = run.config.pipeline.clone();
    let ext_path = run
        .config
        .required("external_points", &run.config.external_points)
        .at("load")?;
    let hoods_path = run
        .config
        .required("neighborhoods", &run.config.neighborhoods)
        .at("load")?;
    let points_path = run.config.perceptions_path();
    let dict_path = run.config.dictionary_path();
    run.input(&ext_path);
    run.input(&hoods_path);
    run.input(&points_path);
    let external = run.stage("load", || load_external_points(&ext_path))?;
    let neighborhoods = run.stage("load", || load_neighborhoods(&hoods_path))?;
    let points = run.stage("load", || read_geojson_points(&points_path))?;
    let dict = if dict_path.exists() {
        run.input(&dict_path);
        Some(run.stage("load", || UopDictionary::load(&dict_path))?)
    } else {
        None
    };

    let rows = run.stage("compare", || {
        nearest_distance_comparison(&external, &points, &neighborhoods, cfg.counterpart_scope, dict.as_ref())
    })?;
    run.count("external_points", external.len());
    run.count("rows", rows.len());
    run.count("absent_rows", rows.iter().filter(|r| r.mean_m.is_none()).count());
    let small: Vec<String> = rows
        .iter()
        .filter(|r| r.small_sample)
        .map(|r| format!("{}/{}", r.neighborhood, r.polarity))
        .collect();
    run.count("small_sample", small);

    let out = run.output(COMPARISON_FILE);
    run.stage("write", || write_comparison_csv(&rows, &out))?;
    run.finish()
}

/// Run a parsed command line. Returns the manifest path.
pub fn run(cli: Cli) -> Result<PathBuf, Box<dyn std::error::Error>> {
    let (args, cmd): (&CommonArgs, fn(RunConfig) -> StageResult<PathBuf>) = match &cli.command {
        Command::BuildDict(a) => (a, cmd_build_dict),
        Command::Extract(a) => (a, cmd_extract),
        Command::Analyze(a) => (a, cmd_analyze),
        Command::Compare(a) => (a, cmd_compare),
    };
    let config = RunConfig::load(args).at("config")?;
    Ok(cmd(config)?)
}
