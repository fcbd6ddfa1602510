use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::classifier::{TopicModel, TopicPrediction};
use super::taxonomy::{TaxonomyMapping, TopicSource, UnifiedTopic};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    /// Category path such as `/sports/hockey`.
    pub label: String,
    pub score: f64,
}

/// What an external NLU service returns for one text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalAnalysis {
    #[serde(default)]
    pub categories: Vec<CategoryScore>,
    #[serde(default)]
    pub sentiment: Option<f64>,
}

impl ExternalAnalysis {
    /// Highest-scoring category; the earlier entry wins ties.
    pub fn top_category(&self) -> Option<&CategoryScore> {
        self.categories
            .iter()
            .fold(None, |best: Option<&CategoryScore>, c| match best {
                Some(b) if b.score >= c.score => Some(b),
                _ => Some(c),
            })
    }
}

/// Text in, ranked category paths (and optionally sentiment) out.
pub trait ExternalTagger: Sync {
    fn analyze(&self, text: &str) -> Result<ExternalAnalysis>;

    /// True for taggers that merely echo the newsgroup model, which makes
    /// agreement trivially high.
    fn is_offline_stub(&self) -> bool {
        false
    }
}

/// Offline stand-in for an external service: classifies with the newsgroup
/// model and reports the mapped unified topic as a one-level category path.
pub struct OfflineTagger<'a> {
    pub model: &'a TopicModel,
    pub mapping: &'a TaxonomyMapping,
}

impl ExternalTagger for OfflineTagger<'_> {
    fn analyze(&self, text: &str) -> Result<ExternalAnalysis> {
        let categories = self
            .model
            .classify_text(text)
            .and_then(|p| {
                self.mapping
                    .map(TopicSource::Newsgroup, &p.label)
                    .map(|t| CategoryScore {
                        label: format!("/{}", t.display_name()),
                        score: p.score,
                    })
            })
            .into_iter()
            .collect();
        Ok(ExternalAnalysis {
            categories,
            sentiment: None,
        })
    }

    fn is_offline_stub(&self) -> bool {
        true
    }
}

/// The combined verdict of both taggers for one tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub tweet_id: String,
    /// Set only when accepted.
    pub topic: Option<UnifiedTopic>,
    pub external: Option<CategoryScore>,
    pub newsgroup: Option<TopicPrediction>,
    pub accepted: bool,
}

/// Accepts a tweet's topic only when both taggers map to the same unified
/// topic with scores of at least `min_score`.
pub fn agree_label(
    tweet_id: &str,
    external: Option<&CategoryScore>,
    newsgroup: Option<&TopicPrediction>,
    mapping: &TaxonomyMapping,
    min_score: f64,
) -> TopicAssignment {
    let a = external.and_then(|e| mapping.map(TopicSource::External, &e.label));
    let b = newsgroup.and_then(|n| mapping.map(TopicSource::Newsgroup, &n.label));
    let scores_ok = external.is_some_and(|e| e.score >= min_score)
        && newsgroup.is_some_and(|n| n.score >= min_score);
    let topic = match (a, b) {
        (Some(x), Some(y)) if x == y && scores_ok => Some(x),
        _ => None,
    };
    TopicAssignment {
        tweet_id: tweet_id.into(),
        topic,
        external: external.cloned(),
        newsgroup: newsgroup.cloned(),
        accepted: topic.is_some(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicMatch {
    /// Tweets the external tagger put in this topic.
    pub count_a: usize,
    /// Tweets the newsgroup model put in this topic.
    pub count_b: usize,
    /// Accepted tweets in this topic.
    pub matched: usize,
}

impl TopicMatch {
    /// `matched / count_a`, 0 when the external tagger saw no such tweets.
    pub fn matching_ratio(&self) -> f64 {
        if self.count_a == 0 {
            0.0
        } else {
            self.matched as f64 / self.count_a as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchingStats {
    pub per_topic: BTreeMap<UnifiedTopic, TopicMatch>,
    pub total_tweets: usize,
    pub accepted: usize,
    pub tagger_failures: usize,
    pub offline_stub: bool,
}

/// Tweet-level tagging output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tagging {
    pub assignments: BTreeMap<String, TopicAssignment>,
    pub stats: MatchingStats,
}

/// Labels every tweet of the corpus and tallies agreement per topic.
///
/// A failing external call is treated as no signal for that tweet and counted
/// in `tagger_failures`.
pub fn tag_corpus(
    corpus: &Corpus,
    model: &TopicModel,
    tagger: &dyn ExternalTagger,
    mapping: &TaxonomyMapping,
    min_score: f64,
) -> Tagging {
    let tweets: Vec<_> = corpus.tweets().values().collect();
    let results = par::map_indexed(tweets.len(), |i| {
        let tweet = tweets[i];
        let newsgroup = model.classify_text(&tweet.text);
        let (external, failed) = match tagger.analyze(&tweet.text) {
            Ok(analysis) => (analysis.top_category().cloned(), false),
            Err(_) => (None, true),
        };
        let assignment = agree_label(&tweet.tweet_id, external.as_ref(), newsgroup.as_ref(), mapping, min_score);
        (assignment, failed)
    });

    let mut stats = MatchingStats {
        per_topic: UnifiedTopic::ALL.iter().map(|t| (*t, TopicMatch::default())).collect(),
        total_tweets: tweets.len(),
        offline_stub: tagger.is_offline_stub(),
        ..MatchingStats::default()
    };
    let mut assignments = BTreeMap::new();
    for (assignment, failed) in results {
        stats.tagger_failures += usize::from(failed);
        if let Some(t) = assignment
            .external
            .as_ref()
            .and_then(|e| mapping.map(TopicSource::External, &e.label))
        {
            stats.per_topic.get_mut(&t).expect("all topics present").count_a += 1;
        }
        if let Some(t) = assignment
            .newsgroup
            .as_ref()
            .and_then(|n| mapping.map(TopicSource::Newsgroup, &n.label))
        {
            stats.per_topic.get_mut(&t).expect("all topics present").count_b += 1;
        }
        if let Some(t) = assignment.topic {
            stats.per_topic.get_mut(&t).expect("all topics present").matched += 1;
            stats.accepted += 1;
        }
        assignments.insert(assignment.tweet_id.clone(), assignment);
    }
    Tagging { assignments, stats }
}
