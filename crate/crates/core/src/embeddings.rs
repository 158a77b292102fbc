//! Skip-gram word vectors trained with a Huffman-tree hierarchical softmax.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::preprocess::{Document, Sentence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub ws: usize,
    pub min_count: usize,
    pub m: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub workers: usize,
}

impl From<&PipelineConfig> for TrainConfig {
    fn from(c: &PipelineConfig) -> Self {
        TrainConfig {
            ws: c.ws,
            min_count: c.min_count,
            m: c.m,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            seed: c.seed,
            workers: c.workers,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::from(&PipelineConfig::default())
    }
}

/// Vocabulary words with counts, most frequent first (ties by word).
#[derive(Debug, Clone)]
pub struct Vocab {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a str>, min_count: usize) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in tokens {
            *counts.entry(t).or_default() += 1;
        }
        let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count as u64).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocab {
            counts: kept.iter().map(|&(_, c)| c).collect(),
            words,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// Root-to-leaf path of a word in the Huffman tree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HuffmanPath {
    /// Internal node indices in `0..n-1`.
    pub nodes: Vec<usize>,
    /// Branch taken below each node.
    pub codes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct HuffmanTree {
    pub paths: Vec<HuffmanPath>,
    pub internal_nodes: usize,
}

impl HuffmanTree {
    /// Build from counts sorted in non-increasing order.
    pub fn build(counts: &[u64]) -> Self {
        let n = counts.len();
        if n <= 1 {
            return HuffmanTree {
                paths: vec![HuffmanPath::default(); n],
                internal_nodes: 0,
            };
        }
        let mut count = Vec::with_capacity(2 * n - 1);
        count.extend_from_slice(counts);
        count.resize(2 * n - 1, u64::MAX);
        let mut parent = vec![0usize; 2 * n - 1];
        let mut branch = vec![0u8; 2 * n - 1];
        // Leaves are consumed from the tail (smallest first), merged nodes from the front.
        let mut leaf: isize = n as isize - 1;
        let mut merged = n;
        let mut take_min = |count: &Vec<u64>| {
            if leaf >= 0 && count[leaf as usize] < count[merged] {
                leaf -= 1;
                (leaf + 1) as usize
            } else {
                merged += 1;
                merged - 1
            }
        };
        for a in 0..n - 1 {
            let first = take_min(&count);
            let second = take_min(&count);
            count[n + a] = count[first].saturating_add(count[second]);
            parent[first] = n + a;
            parent[second] = n + a;
            branch[second] = 1;
        }
        let root = 2 * n - 2;
        let paths = (0..n)
            .map(|w| {
                let mut nodes = Vec::new();
                let mut codes = Vec::new();
                let mut b = w;
                while b != root {
                    codes.push(branch[b]);
                    nodes.push(parent[b] - n);
                    b = parent[b];
                }
                nodes.reverse();
                codes.reverse();
                HuffmanPath { nodes, codes }
            })
            .collect();
        HuffmanTree {
            paths,
            internal_nodes: n - 1,
        }
    }
}

/// `f32` cell that several training threads may update without locks.
#[derive(Default)]
struct Cell(AtomicU32);

impl Cell {
    fn new(v: f32) -> Self {
        Cell(AtomicU32::new(v.to_bits()))
    }
    #[inline]
    fn get(&self) -> f32 {
        f32::from_bits(self.0.load(Ordering::Relaxed))
    }
    #[inline]
    fn add(&self, x: f32) {
        self.0.store((self.get() + x).to_bits(), Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean negative log-likelihood per (center, context) pair, one entry per epoch.
    pub epoch_loss: Vec<f64>,
    pub training_tokens: u64,
    pub huffman_internal_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f32>,
    pub config: TrainConfig,
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

struct Trainer<'a> {
    input: &'a [Cell],
    output: &'a [Cell],
    paths: &'a [HuffmanPath],
    m: usize,
    window: usize,
    lr0: f64,
    total_steps: f64,
    progress: &'a AtomicU64,
}

impl Trainer<'_> {
    /// One pass over `sentences`; returns (summed loss, pairs seen).
    fn run(&self, sentences: &[&[usize]]) -> (f64, u64) {
        let m = self.m;
        let mut grad = vec![0f32; m];
        let mut loss = 0.0;
        let mut pairs = 0u64;
        for sent in sentences {
            for (pos, &center) in sent.iter().enumerate() {
                let done = self.progress.fetch_add(1, Ordering::Relaxed) as f64;
                let lr = (self.lr0 * (1.0 - 0.9 * done / self.total_steps)).max(self.lr0 / 10.0) as f32;
                let lo = pos.saturating_sub(self.window);
                let hi = (pos + self.window).min(sent.len() - 1);
                let path = &self.paths[center];
                for (ctx_pos, &context) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    let inp = &self.input[context * m..(context + 1) * m];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for (&node, &code) in path.nodes.iter().zip(&path.codes) {
                        let out = &self.output[node * m..(node + 1) * m];
                        let dot: f32 = inp.iter().zip(out).map(|(a, b)| a.get() * b.get()).sum();
                        let dot = dot as f64;
                        // Branch 0 is the positive class.
                        let (label, z) = if code == 0 { (1.0, dot) } else { (0.0, -dot) };
                        loss -= log_sigmoid(z);
                        let f = 1.0 / (1.0 + (-dot).exp());
                        let g = ((label - f) as f32) * lr;
                        for ((acc, o), i) in grad.iter_mut().zip(out).zip(inp) {
                            *acc += g * o.get();
                            o.add(g * i.get());
                        }
                    }
                    for (cell, g) in inp.iter().zip(&grad) {
                        cell.add(*g);
                    }
                    pairs += 1;
                }
            }
        }
        (loss, pairs)
    }
}

/// Train on the surface tokens of `corpus`.
pub fn train(corpus: &[Sentence], config: &TrainConfig) -> Result<(EmbeddingModel, TrainReport)> {
    let token_lists: Vec<&[String]> = corpus.iter().map(|s| s.surfaces.as_slice()).collect();
    train_tokens(&token_lists, config)
}

pub fn train_tokens<S: AsRef<[String]>>(
    sentences: &[S],
    config: &TrainConfig,
) -> Result<(EmbeddingModel, TrainReport)> {
    if config.m == 0 || config.ws == 0 || config.epochs == 0 || config.workers == 0 {
        return Err(Error::Config("m, ws, epochs and workers must be positive".into()));
    }
    let vocab = Vocab::build(
        sentences.iter().flat_map(|s| s.as_ref().iter().map(String::as_str)),
        config.min_count,
    );
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_count: config.min_count,
        });
    }
    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.as_ref().iter().filter_map(|w| vocab.get(w)).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    let training_tokens: u64 = encoded.iter().map(|s| s.len() as u64).sum();

    let tree = HuffmanTree::build(&vocab.counts);
    let n = vocab.len();
    let m = config.m;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let half = 0.5 / m as f32;
    let input: Vec<Cell> = (0..n * m).map(|_| Cell::new(rng.random_range(-half..half))).collect();
    let output: Vec<Cell> = (0..tree.internal_nodes * m).map(|_| Cell::default()).collect();

    let progress = AtomicU64::new(0);
    let trainer = Trainer {
        input: &input,
        output: &output,
        paths: &tree.paths,
        m,
        window: config.ws.saturating_sub(1),
        lr0: config.learning_rate,
        total_steps: (training_tokens * config.epochs as u64).max(1) as f64,
        progress: &progress,
    };

    let slices: Vec<&[usize]> = encoded.iter().map(Vec::as_slice).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (loss, pairs) = if config.workers == 1 {
            trainer.run(&slices)
        } else {
            let chunk = slices.len().div_ceil(config.workers).max(1);
            std::thread::scope(|scope| {
                let handles: Vec<_> = slices
                    .chunks(chunk)
                    .map(|part| {
                        let trainer = &trainer;
                        scope.spawn(move || trainer.run(part))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .fold((0.0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1))
            })
        };
        epoch_loss.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }

    let report = TrainReport {
        epoch_loss,
        training_tokens,
        huffman_internal_nodes: tree.internal_nodes,
    };
    let model = EmbeddingModel::from_parts(vocab.words, input.iter().map(Cell::get).collect(), config.clone())?;
    Ok((model, report))
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    cosine64(a.iter().map(|&x| x as f64), b.iter().map(|&x| x as f64))
}

fn cosine64(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

impl EmbeddingModel {
    pub fn from_parts(words: Vec<String>, vectors: Vec<f32>, config: TrainConfig) -> Result<Self> {
        if vectors.len() != words.len() * config.m {
            return Err(Error::DimensionMismatch {
                expected: words.len() * config.m,
                found: vectors.len(),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite vector component".into()));
        }
        let index: HashMap<String, usize> = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        if index.len() != words.len() {
            return Err(Error::Invalid("duplicate vocabulary word".into()));
        }
        Ok(EmbeddingModel {
            words,
            index,
            vectors,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.m
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        let m = self.dim();
        self.index.get(word).map(|&i| &self.vectors[i * m..(i + 1) * m])
    }

    fn require(&self, word: &str) -> Result<&[f32]> {
        self.vector(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }

    /// Cosine similarity of two word vectors.
    pub fn w2v_sim(&self, w1: &str, w2: &str) -> Result<f64> {
        Ok(cosine(self.require(w1)?, self.require(w2)?))
    }

    /// Mean vector of the in-vocabulary words, or `None` if there are none.
    pub fn mean_vector<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Option<Vec<f64>> {
        let mut acc = vec![0.0f64; self.dim()];
        let mut n = 0usize;
        for v in words.into_iter().filter_map(|w| self.vector(w)) {
            for (a, &x) in acc.iter_mut().zip(v) {
                *a += x as f64;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        acc.iter_mut().for_each(|a| *a /= n as f64);
        Some(acc)
    }

    /// Similarity of a document to a word community on a 0..=100 scale:
    /// the cosine between the document's mean word vector and the
    /// community centroid, clamped at zero.
    pub fn doc_community_score(&self, doc: &Document, community: &BTreeSet<String>) -> Result<f64> {
        let centroid = self
            .mean_vector(community.iter().map(String::as_str))
            .ok_or(Error::CommunityOutOfVocabulary)?;
        let Some(doc_vec) = self.mean_vector(doc.surfaces()) else {
            return Ok(0.0);
        };
        let cos = cosine64(doc_vec.into_iter(), centroid.into_iter());
        Ok(100.0 * cos.max(0.0))
    }

    /// Text format: a header `n m ws min_count epochs learning_rate seed`,
    /// then one `word v1 .. vm` row per word.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::write(path, e))?;
        let mut w = BufWriter::new(file);
        let c = &self.config;
        let io = |e| Error::write(path, e);
        writeln!(
            w,
            "{} {} {} {} {} {} {}",
            self.len(),
            c.m,
            c.ws,
            c.min_count,
            c.epochs,
            c.learning_rate,
            c.seed
        )
        .map_err(io)?;
        let m = self.dim();
        for (i, word) in self.words.iter().enumerate() {
            w.write_all(word.as_bytes()).map_err(io)?;
            for x in &self.vectors[i * m..(i + 1) * m] {
                write!(w, " {x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::read(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::read(path, e))?
            .ok_or_else(|| Error::malformed(path, 1, "empty model file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::malformed(path, 1, "bad header");
        if fields.len() != 7 {
            return Err(bad_header());
        }
        let int = |i: usize| fields[i].parse::<usize>().map_err(|_| bad_header());
        let n = int(0)?;
        let config = TrainConfig {
            m: int(1)?,
            ws: int(2)?,
            min_count: int(3)?,
            epochs: int(4)?,
            learning_rate: fields[5].parse().map_err(|_| bad_header())?,
            seed: fields[6].parse().map_err(|_| bad_header())?,
            workers: 1,
        };
        let mut words = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * config.m);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line.map_err(|e| Error::read(path, e))?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default().to_string();
            let before = vectors.len();
            for p in parts {
                let v: f32 = p
                    .parse()
                    .map_err(|_| Error::malformed(path, line_no, format!("bad float {p:?}")))?;
                vectors.push(v);
            }
            let found = vectors.len() - before;
            if found != config.m {
                return Err(Error::DimensionMismatch {
                    expected: config.m,
                    found,
                });
            }
            words.push(word);
        }
        if words.len() != n {
            return Err(Error::malformed(
                path,
                0,
                format!("header announces {n} words, file has {}", words.len()),
            ));
        }
        EmbeddingModel::from_parts(words, vectors, config)
    }
}
