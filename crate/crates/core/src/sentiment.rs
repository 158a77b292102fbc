//! Word polarity lookup and the pairwise sentiment product.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    scores: BTreeMap<String, f64>,
}

impl SentimentLexicon {
    /// Build from word scores; keys are lowercased and scores clamped to [-1, 1].
    pub fn new(scores: impl IntoIterator<Item = (String, f64)>) -> Self {
        SentimentLexicon {
            scores: scores
                .into_iter()
                .filter(|(_, s)| s.is_finite())
                .map(|(w, s)| (w.to_lowercase(), s.clamp(-1.0, 1.0)))
                .collect(),
        }
    }

    /// Lexicon score, or 0 for unknown words.
    pub fn polarity(&self, word: &str) -> f64 {
        if let Some(&s) = self.scores.get(word) {
            return s;
        }
        self.scores.get(&word.to_lowercase()).copied().unwrap_or(0.0)
    }

    /// Product of the two polarities: positive for agreeing signs, negative
    /// for opposing ones, zero when either word is neutral.
    pub fn sent_sim(&self, w1: &str, w2: &str) -> f64 {
        self.polarity(w1) * self.polarity(w2)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}
