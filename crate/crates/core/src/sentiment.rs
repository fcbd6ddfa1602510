//! Reply sentiment: a mean-valence lexicon scorer and per-topic sums.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{tokenize, TokenizerConfig};

pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.tsv");

/// Anything that turns a reply text into a score in `[-1, 1]`.
pub trait SentimentScorer: Sync {
    fn score(&self, text: &str) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentLexicon {
    valences: BTreeMap<String, f64>,
    tokenizer: TokenizerConfig,
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        SentimentLexicon::from_tsv(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

impl SentimentLexicon {
    /// Builds a lexicon from `(token, valence)` pairs; every valence must lie
    /// in `[-1, 1]`.
    pub fn new<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let mut valences = BTreeMap::new();
        for (token, v) in entries {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "valence {v} for `{token}` outside [-1, 1]"
                )));
            }
            valences.insert(token.to_lowercase(), v);
        }
        Ok(SentimentLexicon {
            valences,
            tokenizer: TokenizerConfig::default(),
        })
    }

    /// Parses `token<TAB>valence` lines.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |message: String| Error::MalformedLine { line: i + 1, message };
            let (token, value) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected token<TAB>valence".into()))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| malformed(alloc::format!("bad valence `{}`", value.trim())))?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(malformed(alloc::format!("valence {v} outside [-1, 1]")));
            }
            entries.push((token.trim().to_string(), v));
        }
        SentimentLexicon::new(entries)
    }

    pub fn len(&self) -> usize {
        self.valences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valences.is_empty()
    }

    /// Mean valence of matched tokens; 0 when nothing matches.
    pub fn score_text(&self, text: &str) -> f64 {
        let matched: Vec<f64> = tokenize(text, &self.tokenizer)
            .iter()
            .filter_map(|t| self.valences.get(t).copied())
            .collect();
        if matched.is_empty() {
            return 0.0;
        }
        (matched.iter().sum::<f64>() / matched.len() as f64).clamp(-1.0, 1.0)
    }
}

impl SentimentScorer for SentimentLexicon {
    fn score(&self, text: &str) -> Result<f64> {
        Ok(self.score_text(text))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Neutral,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplySentiment {
    pub reply_id: String,
    pub score: f64,
    pub polarity: Polarity,
}

impl ReplySentiment {
    /// Clamps the score into `[-1, 1]` and derives its polarity.
    pub fn new(reply_id: impl Into<String>, score: f64) -> Self {
        let score = if score.is_nan() { 0.0 } else { score.clamp(-1.0, 1.0) };
        let polarity = if score > 0.0 {
            Polarity::Positive
        } else if score < 0.0 {
            Polarity::Negative
        } else {
            Polarity::Neutral
        };
        ReplySentiment {
            reply_id: reply_id.into(),
            score,
            polarity,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SentimentTotals {
    pub pos_sum: f64,
    pub neg_sum: f64,
    /// All replies, neutral included.
    pub reply_count: u64,
}

/// Sums strictly positive and strictly negative scores separately.
///
/// Scores are clamped to `[-1, 1]` and summed in sorted order, so any
/// permutation of the input gives bit-identical totals.
pub fn aggregate_scores(scores: &[f64]) -> SentimentTotals {
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for s in scores.iter().map(|s| ReplySentiment::new("", *s).score) {
        if s > 0.0 {
            pos.push(s);
        } else if s < 0.0 {
            neg.push(s);
        }
    }
    SentimentTotals {
        pos_sum: crate::math::order_free_sum(&mut pos),
        neg_sum: crate::math::order_free_sum(&mut neg),
        reply_count: scores.len() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn lex() -> SentimentLexicon {
        SentimentLexicon::new(vec![("good".to_string(), 0.7), ("bad".to_string(), -0.6)]).unwrap()
    }

    #[test]
    fn mean_valence() {
        assert!((lex().score_text("good good bad") - 0.8 / 3.0).abs() < 1e-12);
        assert!((lex().score_text("good good bad") - 0.2667).abs() < 1e-4);
        assert_eq!(lex().score_text(""), 0.0);
        assert_eq!(lex().score_text("neither here nor there"), 0.0);
    }

    #[test]
    fn lexicon_validation() {
        assert!(SentimentLexicon::new(vec![("x".to_string(), 1.5)]).is_err());
        assert!(matches!(
            SentimentLexicon::from_tsv("ok\t0.5\nbroken line\n"),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        let bundled = SentimentLexicon::default();
        assert!(bundled.len() > 50);
        assert!(bundled.score_text("great, thanks!") > 0.0);
        assert!(bundled.score_text("this is spam, a scam") < 0.0);
    }

    #[test]
    fn polarity_boundaries() {
        assert_eq!(ReplySentiment::new("r", 0.0).polarity, Polarity::Neutral);
        assert_eq!(ReplySentiment::new("r", 1e-9).polarity, Polarity::Positive);
        assert_eq!(ReplySentiment::new("r", -2.0).score, -1.0);
    }

    #[test]
    fn totals() {
        let t = aggregate_scores(&[0.53, -0.2, 0.1]);
        assert!((t.pos_sum - 0.63).abs() < 1e-12);
        assert!((t.neg_sum + 0.2).abs() < 1e-12);
        assert_eq!(t.reply_count, 3);
        assert_eq!(aggregate_scores(&[]), SentimentTotals::default());
        let neutral = aggregate_scores(&[0.0, 0.0]);
        assert_eq!((neutral.pos_sum, neutral.neg_sum, neutral.reply_count), (0.0, 0.0, 2));
    }

    proptest! {
        #[test]
        fn totals_are_signed_and_order_free(mut scores in proptest::collection::vec(-1.5f64..1.5, 0..40), seed in any::<u64>()) {
            let a = aggregate_scores(&scores);
            prop_assert!(a.pos_sum >= 0.0 && a.neg_sum <= 0.0);
            let clamped: f64 = scores.iter().map(|s| s.clamp(-1.0, 1.0)).sum();
            prop_assert!((a.pos_sum + a.neg_sum - clamped).abs() < 1e-9);
            // deterministic shuffle
            let n = scores.len();
            if n > 1 {
                let mut state = seed;
                for i in (1..n).rev() {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    scores.swap(i, (state >> 33) as usize % (i + 1));
                }
            }
            let b = aggregate_scores(&scores);
            prop_assert_eq!(a, b);
        }
    }
}
