use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{account_age_years, url_host, Label, RawTweet, Timestamp, UserProfile};
use crate::error::{Error, Result};
use crate::math;
use crate::sentiment::aggregate_scores;
use crate::text::{tokenize, TokenizerConfig};
use crate::topics::{TopicAssignment, UnifiedTopic};

/// Per-topic activity aggregates of one user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicRecord {
    pub tweet_count: u64,
    pub word_count: u64,
    pub unique_words: u64,
    pub url_count: u64,
    pub unique_urls: u64,
    pub unique_url_hosts: u64,
    pub retweet_sum: u64,
    pub like_sum: u64,
    pub reply_count: u64,
    pub pos_sentiment_sum: f64,
    pub neg_sentiment_sum: f64,
    pub hashtag_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicProfile {
    pub user_id: String,
    /// Only topics with at least one accepted tweet appear.
    pub topics: BTreeMap<UnifiedTopic, TopicRecord>,
    /// Number of topics with `tweet_count > 0`.
    pub topic_frequency: u32,
    /// Hashtags over all of the user's tweets, accepted or not.
    pub hashtag_total: u64,
    /// Distinct (case-folded) hashtags over all tweets.
    pub distinct_hashtags: u64,
}

impl TopicProfile {
    pub fn record(&self, topic: UnifiedTopic) -> TopicRecord {
        self.topics.get(&topic).copied().unwrap_or_default()
    }
}

/// Aggregates a user's tweets per accepted topic.
///
/// `reply_scores` maps a tweet id to the sentiment scores of its replies.
/// Tweets without an accepted assignment contribute only to the hashtag
/// totals.
pub fn build_topic_profile(
    user_id: &str,
    tweets: &[&RawTweet],
    assignments: &BTreeMap<String, TopicAssignment>,
    reply_scores: &BTreeMap<&str, Vec<f64>>,
    tokenizer: &TokenizerConfig,
) -> TopicProfile {
    #[derive(Default)]
    struct Acc<'a> {
        record: TopicRecord,
        words: BTreeSet<String>,
        urls: BTreeSet<&'a str>,
        hosts: BTreeSet<String>,
        scores: Vec<f64>,
    }

    let mut per_topic: BTreeMap<UnifiedTopic, Acc<'_>> = BTreeMap::new();
    let mut hashtags: BTreeSet<String> = BTreeSet::new();
    let mut hashtag_total = 0u64;

    for tweet in tweets {
        hashtag_total += tweet.hashtags.len() as u64;
        hashtags.extend(tweet.hashtags.iter().map(|h| h.to_lowercase()));

        let Some(topic) = assignments
            .get(&tweet.tweet_id)
            .filter(|a| a.accepted)
            .and_then(|a| a.topic)
        else {
            continue;
        };
        let acc = per_topic.entry(topic).or_default();
        let tokens = tokenize(&tweet.text, tokenizer);
        acc.record.tweet_count += 1;
        acc.record.word_count += tokens.len() as u64;
        acc.words.extend(tokens);
        acc.record.url_count += tweet.urls.len() as u64;
        for url in &tweet.urls {
            acc.urls.insert(url.as_str());
            acc.hosts.insert(url_host(url));
        }
        acc.record.retweet_sum += tweet.retweet_count;
        acc.record.like_sum += tweet.like_count;
        acc.record.hashtag_count += tweet.hashtags.len() as u64;
        if let Some(scores) = reply_scores.get(tweet.tweet_id.as_str()) {
            acc.scores.extend_from_slice(scores);
        }
    }

    let topics: BTreeMap<UnifiedTopic, TopicRecord> = per_topic
        .into_iter()
        .map(|(topic, acc)| {
            let mut r = acc.record;
            r.unique_words = acc.words.len() as u64;
            r.unique_urls = acc.urls.len() as u64;
            r.unique_url_hosts = acc.hosts.len() as u64;
            let totals = aggregate_scores(&acc.scores);
            r.reply_count = totals.reply_count;
            r.pos_sentiment_sum = totals.pos_sum;
            r.neg_sentiment_sum = totals.neg_sum;
            (topic, r)
        })
        .collect();

    TopicProfile {
        user_id: user_id.to_string(),
        topic_frequency: topics.values().filter(|r| r.tweet_count > 0).count() as u32,
        topics,
        hashtag_total,
        distinct_hashtags: hashtags.len() as u64,
    }
}

/// `log10(n / df)`, with 0 for a user without topics.
pub fn inverse_topic_frequency(topic_frequency: u32, n_topics: u32) -> f64 {
    if topic_frequency == 0 || n_topics == 0 {
        return 0.0;
    }
    math::log10(f64::from(n_topics) / f64::from(topic_frequency))
}

/// Age-weighted followers/friends ratio.
///
/// `(FOL - FRD) / FOL * age / 100` when followers exceed friends, otherwise
/// `1 / FOL * age / 100` with `FOL` floored at 1.
pub fn followers_friends_ratio(followers: u64, friends: u64, age_years: f64) -> f64 {
    let age = age_years.max(0.0) / 100.0;
    if followers > friends {
        (followers - friends) as f64 / followers as f64 * age
    } else {
        age / followers.max(1) as f64
    }
}

pub const FEATURE_COUNT: usize = 18;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9", "x10", "x11", "x12", "x13", "x14", "x15",
    "x16", "x17", "x18",
];

/// Human-readable descriptions, index-aligned with [`FEATURE_NAMES`].
pub const FEATURE_DESCRIPTIONS: [&str; FEATURE_COUNT] = [
    "words",
    "unique words",
    "URLs",
    "unique URLs",
    "unique URL hosts",
    "topic frequency",
    "inverse topic frequency",
    "retweets",
    "likes",
    "replies",
    "positive reply sentiment",
    "negative reply sentiment",
    "followers",
    "friends",
    "followers-friends ratio",
    "hashtags",
    "distinct hashtags",
    "topic hashtag ratio",
];

/// The eighteen user features; `values[i]` is `x(i+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub designated_topic: UnifiedTopic,
}

impl FeatureVector {
    /// One-based accessor: `x(6)` is the topic frequency.
    pub fn x(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// Checks the structural invariants of an extracted vector.
    pub fn check_invariants(&self) -> core::result::Result<(), &'static str> {
        let x = |i| self.x(i);
        if x(2) > x(1) {
            return Err("x2 > x1");
        }
        if x(4) > x(3) {
            return Err("x4 > x3");
        }
        if x(5) > x(4) {
            return Err("x5 > x4");
        }
        if x(17) > x(16) {
            return Err("x17 > x16");
        }
        if !(0.0..=UnifiedTopic::COUNT as f64).contains(&x(6)) {
            return Err("x6 outside [0, 8]");
        }
        if x(7) < 0.0 {
            return Err("x7 < 0");
        }
        if x(11) < 0.0 {
            return Err("x11 < 0");
        }
        if x(12) > 0.0 {
            return Err("x12 > 0");
        }
        if x(15) < 0.0 {
            return Err("x15 < 0");
        }
        Ok(())
    }
}

/// Reads the designated topic's aggregates and the user's account data into
/// the eighteen features.
pub fn extract_features(
    profile: &TopicProfile,
    user: &UserProfile,
    designated_topic: UnifiedTopic,
    as_of: Timestamp,
) -> Result<FeatureVector> {
    if profile.user_id != user.user_id {
        return Err(Error::InvalidArgument(alloc::format!(
            "profile for `{}` paired with user `{}`",
            profile.user_id, user.user_id
        )));
    }
    let r = profile.record(designated_topic);
    let age = account_age_years(user, as_of)?;
    let hashtag_ratio = if r.tweet_count == 0 {
        0.0
    } else {
        r.hashtag_count as f64 / r.tweet_count as f64
    };
    let values = [
        r.word_count as f64,
        r.unique_words as f64,
        r.url_count as f64,
        r.unique_urls as f64,
        r.unique_url_hosts as f64,
        f64::from(profile.topic_frequency),
        inverse_topic_frequency(profile.topic_frequency, UnifiedTopic::COUNT as u32),
        r.retweet_sum as f64,
        r.like_sum as f64,
        r.reply_count as f64,
        r.pos_sentiment_sum,
        r.neg_sentiment_sum,
        user.followers_count as f64,
        user.friends_count as f64,
        followers_friends_ratio(user.followers_count, user.friends_count, age),
        profile.hashtag_total as f64,
        profile.distinct_hashtags as f64,
        hashtag_ratio,
    ];
    Ok(FeatureVector {
        values,
        designated_topic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub user_id: String,
    pub features: FeatureVector,
    pub label: Option<Label>,
    /// Tweets in the designated topic (needed by the DFM url ratio).
    #[serde(default)]
    pub topic_tweets: u64,
}

/// Users × features, with column names fixed to `x1..x18`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features.values[index]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<f64>> {
        let i = FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.column(i))
    }

    /// Binary labels (1 = spammer); errors when any row is unlabeled.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| {
                r.label
                    .map(Label::as_binary)
                    .ok_or_else(|| Error::InvalidArgument(alloc::format!("user `{}` has no label", r.user_id)))
            })
            .collect()
    }
}
