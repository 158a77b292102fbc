#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urban_perception::dictionary::WordGraph;

/// Adjusted Rand index between two labelings; `None` (noise) is its own class.
pub fn adjusted_rand_index(truth: &[usize], predicted: &[Option<usize>]) -> f64 {
    assert_eq!(truth.len(), predicted.len());
    let pred: Vec<usize> = predicted.iter().map(|p| p.map_or(0, |c| c + 1)).collect();
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(&pred) {
        *table.entry((t, p)).or_default() += 1;
        *rows.entry(t).or_default() += 1;
        *cols.entry(p).or_default() += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.values().map(|&x| c2(x)).sum();
    let a: f64 = rows.values().map(|&x| c2(x)).sum();
    let b: f64 = cols.values().map(|&x| c2(x)).sum();
    let expected = a * b / c2(truth.len() as u64);
    let max = (a + b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> WordGraph {
    let mut g = WordGraph::new((0..n).map(|i| format!("v{i:02}")));
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                g.add_edge(u, v, 1.0).unwrap();
            }
        }
    }
    g
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra] = rb;
    }
}

fn names(g: &WordGraph, vs: impl IntoIterator<Item = usize>) -> BTreeSet<String> {
    vs.into_iter().map(|v| g.vertices()[v].clone()).collect()
}

/// Clique percolation by definition: every k-clique, adjacency on k-1 shared
/// vertices, connected components, union of members.
pub fn brute_force_communities(g: &WordGraph, k: usize) -> BTreeSet<BTreeSet<String>> {
    let cliques: Vec<Vec<usize>> = (0..g.vertex_count())
        .combinations(k)
        .filter(|c| c.iter().array_combinations().all(|[&a, &b]| g.weight(a, b).is_some()))
        .collect();
    let mut parent: Vec<usize> = (0..cliques.len()).collect();
    for i in 0..cliques.len() {
        for j in i + 1..cliques.len() {
            let shared = cliques[i].iter().filter(|v| cliques[j].contains(v)).count();
            if shared == k - 1 {
                union(&mut parent, i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, c) in cliques.iter().enumerate() {
        groups.entry(find(&mut parent, i)).or_default().extend(c);
    }
    groups.into_values().map(|vs| names(g, vs)).collect()
}

/// Connected components with at least one edge, via union-find over edges.
pub fn edge_components(g: &WordGraph) -> BTreeSet<BTreeSet<String>> {
    let mut parent: Vec<usize> = (0..g.vertex_count()).collect();
    for (u, v, _) in g.edges() {
        union(&mut parent, u, v);
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (u, v, _) in g.edges() {
        let r = find(&mut parent, u);
        groups.entry(r).or_default().extend([u, v]);
    }
    groups.into_values().map(|vs| names(g, vs)).collect()
}

pub struct Trained {
    pub lexicons: urban_perception::corpus_io::LexiconBundle,
    pub model: urban_perception::embeddings::EmbeddingModel,
    pub dictionary: urban_perception::dictionary::UopDictionary,
}

pub fn sample_train_config(seed: u64) -> urban_perception::embeddings::TrainConfig {
    urban_perception::embeddings::TrainConfig {
        ws: 8,
        min_count: 5,
        m: 32,
        epochs: 5,
        learning_rate: 0.025,
        seed,
        workers: 1,
    }
}

/// Dictionary and model learned from the planted review corpus.
pub fn train_planted(reviews: usize, corpus_seed: u64, train_seed: u64, k: usize) -> Trained {
    use urban_perception::config::PruneRule;
    use urban_perception::dictionary::{assemble_dictionary, build_graph, k_clique_communities, prune, UopDictionary};
    use urban_perception::embeddings::train;
    use urban_perception::preprocess::{extract_qualifiers, preprocess_corpus};
    use urban_perception::sentiment::SentimentLexicon;
    use urban_perception::synth::{planted_reviews, sample_lexicons};

    let planted = planted_reviews(reviews, corpus_seed);
    let lexicons = sample_lexicons();
    let docs = preprocess_corpus(&planted.records, &lexicons);
    let sentences: Vec<_> = docs.iter().flat_map(|d| d.sentences.iter().cloned()).collect();
    let (model, _) = train(&sentences, &sample_train_config(train_seed)).unwrap();
    let sentiment = SentimentLexicon::new(lexicons.sentiment.clone());
    let built = build_graph(&extract_qualifiers(&docs, &lexicons), &model, &sentiment, 0.8, k).unwrap();
    let pruned = prune(&built.graph, 1.13, PruneRule::Both).unwrap();
    let communities = k_clique_communities(&pruned, k);
    let (c, _) = assemble_dictionary(&communities, &sentiment, &model, 0.8, &Default::default()).unwrap();
    let dictionary = UopDictionary::new(c, 0.8, 1.13, k).unwrap();
    Trained {
        lexicons,
        model,
        dictionary,
    }
}
