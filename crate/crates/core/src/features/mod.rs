//! Per-user topic profiles, the eighteen features, correlation and lasso
//! selection.

mod correlation;
mod lasso;
mod profile;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

pub use correlation::{pearson_columns, pearson_correlation_matrix, CorrelationMatrix};
pub use lasso::{lambda_max, lasso_logistic, lasso_select, LassoResult, SELECTION_THRESHOLD};
pub use profile::{
    build_topic_profile, extract_features, followers_friends_ratio, inverse_topic_frequency,
    FeatureMatrix, FeatureRow, FeatureVector, TopicProfile, TopicRecord, FEATURE_COUNT,
    FEATURE_DESCRIPTIONS, FEATURE_NAMES,
};

use crate::corpus::{Corpus, Timestamp};
use crate::error::Result;
use crate::par;
use crate::sentiment::SentimentScorer;
use crate::text::TokenizerConfig;
use crate::topics::{TopicAssignment, UnifiedTopic};

/// Settings for turning a tagged corpus into a feature matrix.
#[derive(Debug, Clone)]
pub struct FeatureOptions {
    pub designated_topic: UnifiedTopic,
    /// Defaults to the latest timestamp in the corpus.
    pub as_of: Option<Timestamp>,
    pub tokenizer: TokenizerConfig,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            designated_topic: UnifiedTopic::TechnologyAndComputing,
            as_of: None,
            tokenizer: TokenizerConfig::default(),
        }
    }
}

/// Scores every reply once, keyed by reply id.
pub fn score_replies(corpus: &Corpus, scorer: &dyn SentimentScorer) -> Result<BTreeMap<String, f64>> {
    let replies: Vec<_> = corpus.replies().values().collect();
    let scores = par::map_indexed(replies.len(), |i| scorer.score(&replies[i].text));
    replies
        .iter()
        .zip(scores)
        .map(|(r, s)| Ok((r.reply_id.clone(), s?.clamp(-1.0, 1.0))))
        .collect()
}

/// Builds one feature row per user, in user-id order.
pub fn build_feature_matrix(
    corpus: &Corpus,
    assignments: &BTreeMap<String, TopicAssignment>,
    reply_scores: &BTreeMap<String, f64>,
    options: &FeatureOptions,
) -> Result<FeatureMatrix> {
    let as_of = match options.as_of.or_else(|| corpus.latest_timestamp()) {
        Some(t) => t,
        None => return Ok(FeatureMatrix::default()),
    };
    let by_user = corpus.tweets_by_user();
    let mut scores_by_tweet: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for reply in corpus.replies().values() {
        let score = reply_scores.get(&reply.reply_id).copied().unwrap_or(0.0);
        scores_by_tweet.entry(reply.tweet_id.as_str()).or_default().push(score);
    }
    let users: Vec<_> = corpus.users().values().collect();
    let rows = par::map_indexed(users.len(), |i| {
        let user = users[i];
        let tweets = by_user.get(user.user_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let profile = build_topic_profile(&user.user_id, tweets, assignments, &scores_by_tweet, &options.tokenizer);
        let features = extract_features(&profile, user, options.designated_topic, as_of)?;
        Ok(FeatureRow {
            user_id: user.user_id.clone(),
            features,
            label: user.label,
            topic_tweets: profile.record(options.designated_topic).tweet_count,
        })
    });
    Ok(FeatureMatrix {
        rows: rows.into_iter().collect::<Result<Vec<_>>>()?,
    })
}
