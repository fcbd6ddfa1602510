//! Tokenization and smoothed TF-IDF vectors.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Bundled English stopword list, one word per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub min_token_len: usize,
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            strip_urls: true,
            strip_mentions: true,
            min_token_len: 2,
            stopwords: parse_word_list(DEFAULT_STOPWORDS),
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len == 0 {
            return Err(Error::InvalidArgument("min_token_len must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_stopwords(mut self, stopwords: BTreeSet<String>) -> Self {
        self.stopwords = stopwords;
        self
    }
}

/// One token per line; blank lines and `#` comments ignored. Entries are
/// lowercased.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

fn starts_with_url(s: &str) -> bool {
    let head: String = s.chars().take(8).collect::<String>().to_ascii_lowercase();
    head.starts_with("http://") || head.starts_with("https://")
}

fn push_token(token: &mut String, out: &mut Vec<String>, config: &TokenizerConfig) {
    if token.is_empty() {
        return;
    }
    let word = if config.lowercase {
        token.to_lowercase()
    } else {
        token.clone()
    };
    token.clear();
    if word.chars().count() >= config.min_token_len && !config.stopwords.contains(&word) {
        out.push(word);
    }
}

/// Splits text into maximal alphanumeric runs after removing URLs and
/// @-mentions. Hashtag words survive without their `#`.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut token = String::new();
    for piece in text.split_whitespace() {
        // URLs run from their scheme to the next whitespace.
        let piece = if config.strip_urls {
            let cut = piece
                .char_indices()
                .find(|&(i, _)| starts_with_url(&piece[i..]))
                .map(|(i, _)| i);
            match cut {
                Some(i) => &piece[..i],
                None => piece,
            }
        } else {
            piece
        };
        let mut chars = piece.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '@' && config.strip_mentions {
                push_token(&mut token, &mut out, config);
                while chars.peek().is_some_and(|n| n.is_alphanumeric() || *n == '_') {
                    chars.next();
                }
            } else if c.is_alphanumeric() {
                token.push(c);
            } else {
                push_token(&mut token, &mut out, config);
            }
        }
        push_token(&mut token, &mut out, config);
    }
    out
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| dense[i] * v).sum()
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Vocabulary plus smoothed inverse document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vectorizer {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub doc_freq: Vec<usize>,
    pub doc_count: usize,
    pub config: TokenizerConfig,
}

impl Vectorizer {
    /// Fits on tokenized documents. Column indices follow sorted token order.
    ///
    /// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
    pub fn fit(documents: &[Vec<String>], config: TokenizerConfig) -> Result<Vectorizer> {
        config.validate()?;
        if documents.iter().all(Vec::is_empty) {
            return Err(Error::NoDocuments);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in documents {
            let unique: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
            for token in unique {
                *df.entry(token).or_insert(0) += 1;
            }
        }
        let n = documents.len();
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        let mut doc_freq = Vec::with_capacity(df.len());
        for (i, (token, count)) in df.into_iter().enumerate() {
            vocabulary.insert(token.to_string(), i);
            idf.push(math::ln((1 + n) as f64 / (1 + count) as f64) + 1.0);
            doc_freq.push(count);
        }
        Ok(Vectorizer {
            vocabulary,
            idf,
            doc_freq,
            doc_count: n,
            config,
        })
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.config)
    }

    /// L2-normalized tf·idf vector; out-of-vocabulary tokens are ignored.
    pub fn transform(&self, document: &[String]) -> SparseVector {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for token in document {
            if let Some(&i) = self.vocabulary.get(token) {
                *tf.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut v = SparseVector {
            indices: tf.keys().copied().collect(),
            values: tf.iter().map(|(&i, &c)| c * self.idf[i]).collect(),
        };
        let norm = v.norm();
        if norm > 0.0 {
            for x in &mut v.values {
                *x /= norm;
            }
        }
        v
    }

    pub fn transform_text(&self, text: &str) -> SparseVector {
        self.transform(&self.tokenize(text))
    }
}
