use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use super::LabeledExample;
use crate::error::{Error, Result};

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;
const FIRST_WORD_INDEX: usize = 2;

/// Word ↔ index mapping. Index 0 is padding and 1 is the unknown word; real
/// words start at 2, ordered by descending corpus frequency with ties broken
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    word_to_index: HashMap<String, usize>,
    words: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from words already in index order (index 2 first).
    pub fn from_ordered(words: Vec<String>) -> Result<Self> {
        let mut word_to_index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if word_to_index
                .insert(w.clone(), i + FIRST_WORD_INDEX)
                .is_some()
            {
                return Err(Error::InvalidInput(format!(
                    "duplicate vocabulary word `{w}`"
                )));
            }
        }
        Ok(Self {
            word_to_index,
            words,
        })
    }

    /// Number of real words, excluding the two reserved indices.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Rows needed by an embedding matrix aligned to this vocabulary.
    pub fn index_space(&self) -> usize {
        self.words.len() + FIRST_WORD_INDEX
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.word_to_index.get(word).copied()
    }

    pub fn word_at(&self, index: usize) -> Option<&str> {
        index
            .checked_sub(FIRST_WORD_INDEX)
            .and_then(|i| self.words.get(i))
            .map(String::as_str)
    }

    /// `(index, word)` pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| (i + FIRST_WORD_INDEX, w.as_str()))
    }

    /// One `index<TAB>word` line per real word.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for (i, w) in self.iter() {
            writeln!(out, "{i}\t{w}").expect("write to Vec");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn build_vocabulary(corpus: &[LabeledExample]) -> Result<Vocabulary> {
    vocabulary_from_tokens(corpus.iter().map(|ex| ex.tokens()))
}

pub(crate) fn vocabulary_from_tokens<I>(sentences: I) -> Result<Vocabulary>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut freq: HashMap<String, u64> = HashMap::new();
    for tokens in sentences {
        for t in tokens {
            *freq.entry(t).or_default() += 1;
        }
    }
    if freq.is_empty() {
        return Err(Error::InvalidInput("corpus yields zero tokens".into()));
    }
    let mut ranked: Vec<(String, u64)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_ordered(ranked.into_iter().map(|(w, _)| w).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedExample {
    /// Exactly `max_len` entries; padding (0) only as a trailing run.
    pub indices: Vec<usize>,
    pub label: u8,
}

impl EncodedExample {
    /// The non-padding prefix.
    pub fn tokens(&self) -> &[usize] {
        let end = self
            .indices
            .iter()
            .position(|&i| i == PAD_INDEX)
            .unwrap_or(self.indices.len());
        &self.indices[..end]
    }
}

pub fn encode(example: &LabeledExample, vocab: &Vocabulary, max_len: usize) -> EncodedExample {
    encode_tokens(&example.tokens(), example.label, vocab, max_len)
}

pub fn encode_tokens<S: AsRef<str>>(
    tokens: &[S],
    label: u8,
    vocab: &Vocabulary,
    max_len: usize,
) -> EncodedExample {
    assert!(max_len >= 1, "max_len must be positive");
    let mut indices: Vec<usize> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.index_of(t.as_ref()).unwrap_or(UNK_INDEX))
        .collect();
    indices.resize(max_len, PAD_INDEX);
    EncodedExample { indices, label }
}
