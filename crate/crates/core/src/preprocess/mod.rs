//! Text cleaning, stemming and qualifier extraction.

mod porter;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{LexiconBundle, RawRecord};
use crate::geo::GeoPoint;

pub use porter::stem;

const SENTENCE_TERMINATORS: [char; 4] = ['.', '!', '?', ';'];
const MIN_TOKEN_LEN: usize = 2;
const ADJECTIVE_SUFFIXES: [&str; 5] = ["ful", "ous", "ive", "able", "less"];

/// Cleaned sentence: stems with the surface tokens they came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Sentence {
    pub stems: Vec<String>,
    pub surfaces: Vec<String>,
}

impl Sentence {
    pub fn from_surfaces(surfaces: Vec<String>) -> Self {
        let stems = surfaces.iter().map(|w| stem(w)).collect();
        Sentence { stems, surfaces }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub timestamp: i64,
    pub geo: Option<GeoPoint>,
}

impl Document {
    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.sentences
            .iter()
            .flat_map(|s| s.surfaces.iter().map(String::as_str))
    }

    pub fn stems(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flat_map(|s| s.stems.iter().map(String::as_str))
    }
}

fn is_url(chunk: &str) -> bool {
    let c = chunk.trim_start_matches(|ch: char| !ch.is_alphanumeric());
    c.starts_with("http://") || c.starts_with("https://") || c.starts_with("www.") || c.contains("://")
}

fn expand_contraction(chunk: &str, lex: &LexiconBundle) -> String {
    let is_core = |c: char| c.is_alphanumeric() || c == '\'';
    let Some(start) = chunk.find(is_core) else {
        return chunk.to_string();
    };
    let end = chunk
        .rfind(is_core)
        .map(|i| i + chunk[i..].chars().next().unwrap().len_utf8())
        .unwrap();
    match lex.contractions.get(&chunk[start..end]) {
        Some(expansion) => format!("{}{}{}", &chunk[..start], expansion, &chunk[end..]),
        None => chunk.to_string(),
    }
}

fn keep_token(token: &str, lex: &LexiconBundle) -> bool {
    token.len() >= MIN_TOKEN_LEN && token.bytes().all(|b| b.is_ascii_lowercase()) && !lex.stopwords.contains(token)
}

/// Split raw text into cleaned, stemmed sentences.
///
/// Contractions are expanded and URLs dropped before sentences are split on
/// `. ! ? ;`; tokens are then split on any non-alphanumeric character and
/// only lowercase ASCII words of two or more letters that are not stopwords
/// survive.
pub fn normalize(text: &str, lex: &LexiconBundle) -> Vec<Sentence> {
    let lowered = text.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'");
    let rebuilt: Vec<String> = lowered
        .split_whitespace()
        .filter(|chunk| !is_url(chunk))
        .map(|chunk| expand_contraction(chunk, lex))
        .collect();
    let joined = rebuilt.join(" ");
    joined
        .split(SENTENCE_TERMINATORS)
        .map(|sentence| {
            sentence
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| keep_token(t, lex))
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .filter(|tokens| !tokens.is_empty())
        .map(Sentence::from_surfaces)
        .collect()
}

pub fn preprocess_record(rec: &RawRecord, lex: &LexiconBundle) -> Document {
    Document {
        id: rec.id.clone(),
        sentences: normalize(&rec.text, lex),
        timestamp: rec.timestamp,
        geo: rec.geo(),
    }
}

/// Preprocess records in parallel; output order follows input order.
pub fn preprocess_corpus(records: &[RawRecord], lex: &LexiconBundle) -> Vec<Document> {
    records.par_iter().map(|r| preprocess_record(r, lex)).collect()
}

/// Rule tagger: adjective-lexicon membership, falling back to common
/// adjective suffixes for words the lexicon does not know.
pub fn tagged_adjective(word: &str, lex: &LexiconBundle) -> bool {
    if lex.adjectives.contains(word) {
        return true;
    }
    ADJECTIVE_SUFFIXES
        .iter()
        .any(|suf| word.len() > suf.len() + 2 && word.ends_with(suf))
}

/// Surface words that the tagger marks as adjectives and that the adjective
/// lexicon confirms.
pub fn extract_qualifiers(corpus: &[Document], lex: &LexiconBundle) -> BTreeSet<String> {
    corpus
        .iter()
        .flat_map(Document::surfaces)
        .filter(|w| tagged_adjective(w, lex) && lex.adjectives.contains(*w))
        .map(str::to_string)
        .collect()
}
