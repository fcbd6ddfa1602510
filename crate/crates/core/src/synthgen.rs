//! Deterministic synthetic microblog populations with planted spammer and
//! legitimate behaviour, plus pseudo-newsgroup documents for the topic
//! classifier.
//!
//! Generated text is built from per-newsgroup vocabularies, so tweets are
//! labelled by the classifier rather than carrying their topic directly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::DateTime;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, IngestPolicy, Label, RawTweet, Reply, Timestamp, UserProfile};
use crate::error::{Error, Result};
use crate::math;
use crate::text::DEFAULT_STOPWORDS;
use crate::topics::{LabeledDocument, TaxonomyMapping, UnifiedTopic, NEWSGROUPS};

/// `newsgroup<TAB>space-separated terms`, one newsgroup per line.
pub const NEWSGROUP_VOCABULARY: &str = include_str!("../data/newsgroup_vocab.tsv");

/// Topic-indicative terms per newsgroup.
pub fn newsgroup_vocabulary() -> BTreeMap<&'static str, Vec<&'static str>> {
    NEWSGROUP_VOCABULARY
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t'))
        .map(|(g, terms)| (g.trim(), terms.split_whitespace().collect()))
        .collect()
}

const POSITIVE_REPLY_WORDS: [&str; 10] = [
    "great", "love", "thanks", "useful", "awesome", "helpful", "interesting", "brilliant", "excellent", "nice",
];
const NEGATIVE_REPLY_WORDS: [&str; 10] = [
    "spam", "scam", "fake", "junk", "clickbait", "garbage", "misleading", "phishing", "useless", "stupid",
];
const SYLLABLES: [&str; 24] = [
    "ba", "ke", "ri", "to", "mu", "sa", "ne", "lo", "vi", "du", "pa", "zo", "fi", "ga", "ru", "te", "mi", "no",
    "ka", "le", "si", "po", "ju", "ve",
];
const TEMPLATES: [&str; 6] = [
    "{} today",
    "reading about {}",
    "new thoughts on {}",
    "{} thread",
    "anyone else into {}",
    "quick note {}",
];

/// Behaviour of one class of users. Counts marked as rates are Poisson
/// means per tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    /// Inclusive range of tweets per user.
    pub tweets: (u32, u32),
    /// Relative weight of having 1..=8 topics.
    pub topic_count_weights: [f64; 8],
    /// Probability that the designated topic is among a user's topics.
    pub designated_affinity: f64,
    /// Share of tweets in the designated topic when the user has it and
    /// other topics too; uniform over topics when `None`.
    pub designated_share: Option<f64>,
    pub topic_words: (u32, u32),
    pub filler_words: (u32, u32),
    pub url_rate: f64,
    /// Hosts per user and distinct paths per host.
    pub url_hosts: (u32, u32),
    pub url_paths: u32,
    pub hashtag_rate: f64,
    pub retweet_mean: f64,
    pub like_mean: f64,
    pub reply_rate: f64,
    pub reply_positive: f64,
    pub reply_negative: f64,
    /// Log-normal `(mu, sigma)` of follower and friend counts.
    pub followers: (f64, f64),
    pub friends: (f64, f64),
    pub age_years: (f64, f64),
}

impl ClassProfile {
    pub fn legitimate() -> Self {
        ClassProfile {
            tweets: (5, 80),
            topic_count_weights: [0.35, 0.4, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0],
            designated_affinity: 1.0,
            designated_share: Some(0.6),
            topic_words: (3, 6),
            filler_words: (2, 5),
            url_rate: 0.35,
            url_hosts: (3, 12),
            url_paths: 60,
            hashtag_rate: 0.5,
            retweet_mean: 3.0,
            like_mean: 8.0,
            reply_rate: 1.0,
            reply_positive: 0.5,
            reply_negative: 0.15,
            followers: (6.0, 1.2),
            friends: (5.8, 1.0),
            age_years: (0.5, 12.0),
        }
    }

    pub fn spammer() -> Self {
        ClassProfile {
            tweets: (10, 50),
            topic_count_weights: [0.45, 0.03, 0.02, 0.02, 0.03, 0.05, 0.15, 0.25],
            designated_affinity: 1.0,
            designated_share: None,
            topic_words: (2, 5),
            filler_words: (1, 4),
            url_rate: 0.8,
            url_hosts: (1, 3),
            url_paths: 6,
            hashtag_rate: 0.7,
            retweet_mean: 0.5,
            like_mean: 1.0,
            reply_rate: 0.6,
            reply_positive: 0.2,
            reply_negative: 0.45,
            followers: (5.85, 1.2),
            friends: (6.1, 0.9),
            age_years: (0.1, 6.0),
        }
    }

    /// Long-lived, highly active accounts with heavy positive engagement and
    /// no negative replies, used as a background population for fixtures of
    /// individual spammer accounts.
    pub fn established() -> Self {
        ClassProfile {
            tweets: (1500, 2500),
            topic_count_weights: [0.35, 0.4, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0],
            designated_affinity: 1.0,
            designated_share: Some(0.8),
            topic_words: (8, 14),
            filler_words: (4, 8),
            url_rate: 0.3,
            url_hosts: (60, 120),
            url_paths: 200,
            hashtag_rate: 0.3,
            retweet_mean: 1.0,
            like_mean: 2.0,
            reply_rate: 0.5,
            reply_positive: 0.6,
            reply_negative: 0.0,
            followers: (6.7, 1.0),
            friends: (6.0, 1.0),
            age_years: (5.0, 12.0),
        }
    }

    /// This profile's topic spread and account traits with `other`'s content
    /// and engagement behaviour.
    pub fn mimicking(&self, other: &ClassProfile) -> ClassProfile {
        ClassProfile {
            topic_count_weights: self.topic_count_weights,
            designated_affinity: self.designated_affinity,
            designated_share: self.designated_share,
            followers: self.followers,
            friends: self.friends,
            age_years: self.age_years,
            ..other.clone()
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |what: &str| Err(Error::InfeasibleConfig(format!("{name}: {what}")));
        if self.tweets.0 > self.tweets.1 || self.tweets.1 == 0 {
            return bad("tweets range is empty");
        }
        if self.topic_words.0 > self.topic_words.1 || self.topic_words.1 == 0 {
            return bad("topic_words range is empty");
        }
        if self.filler_words.0 > self.filler_words.1 {
            return bad("filler_words range is empty");
        }
        if self.url_hosts.0 > self.url_hosts.1 || self.url_hosts.0 == 0 || self.url_paths == 0 {
            return bad("url host or path range is empty");
        }
        if self.age_years.0 > self.age_years.1 || self.age_years.0 <= 0.0 {
            return bad("age range must be positive and non-empty");
        }
        if self.topic_count_weights.iter().any(|w| !(*w >= 0.0)) || self.topic_count_weights.iter().sum::<f64>() <= 0.0 {
            return bad("topic count weights must be non-negative with a positive sum");
        }
        let probs = [self.designated_affinity, self.reply_positive, self.reply_negative];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || self.reply_positive + self.reply_negative > 1.0 {
            return bad("probabilities must lie in [0, 1]");
        }
        if let Some(s) = self.designated_share {
            if !(0.0..=1.0).contains(&s) {
                return bad("designated_share must lie in [0, 1]");
            }
        }
        let rates = [self.url_rate, self.hashtag_rate, self.retweet_mean, self.like_mean, self.reply_rate];
        if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return bad("rates must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: u32,
    pub spam_ratio: f64,
    pub seed: u64,
    pub designated_topic: UnifiedTopic,
    /// Every timestamp lies at or before this instant.
    pub collection_end: Timestamp,
    /// Tweets fall within this many days before `collection_end`.
    pub window_days: u32,
    /// Reject configurations that leave a class empty.
    pub require_both_classes: bool,
    /// Probability that a spammer copies the legitimate content and
    /// engagement behaviour, keeping only its topic spread and account traits.
    pub mimicry: f64,
    pub legitimate: ClassProfile,
    pub spammer: ClassProfile,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 4000,
            spam_ratio: 0.3775,
            seed: 0,
            designated_topic: UnifiedTopic::TechnologyAndComputing,
            collection_end: DateTime::from_timestamp(1_561_852_800, 0).expect("valid instant"),
            window_days: 365,
            require_both_classes: true,
            mimicry: 0.3,
            legitimate: ClassProfile::legitimate(),
            spammer: ClassProfile::spammer(),
        }
    }
}

impl SynthConfig {
    /// Classes that differ only in how many topics they discuss: legitimate
    /// users cover 2 or 3 topics, spammers 5 to 8, with the same share of
    /// tweets in the designated topic.
    pub fn topic_only(n_users: u32, seed: u64) -> Self {
        let mut legitimate = ClassProfile::legitimate();
        legitimate.topic_count_weights = [0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        legitimate.tweets = (20, 80);
        let mut spammer = legitimate.clone();
        spammer.topic_count_weights = [0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25];
        SynthConfig {
            n_users,
            seed,
            mimicry: 0.0,
            legitimate,
            spammer,
            ..SynthConfig::default()
        }
    }

    /// `round(n_users * spam_ratio)`.
    pub fn spammer_count(&self) -> u32 {
        libm::round(f64::from(self.n_users) * self.spam_ratio) as u32
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users < 1 {
            return Err(Error::InfeasibleConfig("n_users must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.spam_ratio) {
            return Err(Error::InfeasibleConfig(format!("spam_ratio {} outside [0, 1]", self.spam_ratio)));
        }
        if !(0.0..=1.0).contains(&self.mimicry) {
            return Err(Error::InfeasibleConfig(format!("mimicry {} outside [0, 1]", self.mimicry)));
        }
        if self.window_days == 0 {
            return Err(Error::InfeasibleConfig("window_days must be positive".into()));
        }
        if self.require_both_classes {
            let spam = self.spammer_count();
            if self.n_users < 2 || spam == 0 || spam == self.n_users {
                return Err(Error::InfeasibleConfig(format!(
                    "{} users at spam ratio {} leave a class empty",
                    self.n_users, self.spam_ratio
                )));
            }
        }
        self.legitimate.validate("legitimate")?;
        self.spammer.validate("spammer")
    }
}

/// Ground truth of a generated population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub labels: BTreeMap<String, Label>,
    /// The topic each tweet was written about.
    pub tweet_topics: BTreeMap<String, UnifiedTopic>,
}

/// Raw records of a generated population, in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub users: Vec<UserProfile>,
    pub tweets: Vec<RawTweet>,
    pub replies: Vec<Reply>,
    pub manifest: SynthManifest,
}

impl SynthOutput {
    pub fn corpus(&self) -> Result<Corpus> {
        let (corpus, _) = Corpus::assemble(
            self.users.clone(),
            self.tweets.clone(),
            self.replies.clone(),
            IngestPolicy { strict: true },
        )?;
        Ok(corpus)
    }
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda > 30.0 {
        let v = lambda + math::sqrt(lambda) * standard_normal(rng);
        return libm::round(v.max(0.0)) as u64;
    }
    let limit = math::exp(-lambda);
    let mut k = 0u64;
    let mut p: f64 = rng.gen();
    while p > limit {
        k += 1;
        p *= rng.gen::<f64>();
    }
    k
}

/// Box-Muller.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    math::sqrt(-2.0 * math::ln(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

fn log_normal(rng: &mut ChaCha8Rng, (mu, sigma): (f64, f64)) -> u64 {
    libm::round(math::exp(mu + sigma * standard_normal(rng))) as u64
}

fn weighted_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Pronounceable non-words shared by every topic, excluding stopwords,
/// vocabulary terms and sentiment words.
pub fn filler_words() -> Vec<String> {
    let vocab = newsgroup_vocabulary();
    let mut banned: BTreeSet<&str> = DEFAULT_STOPWORDS.lines().map(str::trim).collect();
    banned.extend(vocab.values().flatten().copied());
    banned.extend(POSITIVE_REPLY_WORDS);
    banned.extend(NEGATIVE_REPLY_WORDS);
    let lexicon_words: Vec<&str> = crate::sentiment::DEFAULT_LEXICON
        .lines()
        .filter_map(|l| l.split('\t').next())
        .collect();
    banned.extend(lexicon_words);
    let mut out = Vec::new();
    for a in SYLLABLES {
        for b in SYLLABLES {
            for c in SYLLABLES {
                let w = format!("{a}{b}{c}");
                if !banned.contains(w.as_str()) {
                    out.push(w);
                }
            }
        }
    }
    out
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    config: &'a SynthConfig,
    vocab: BTreeMap<&'static str, Vec<&'static str>>,
    groups_by_topic: BTreeMap<UnifiedTopic, Vec<&'static str>>,
    filler: Vec<String>,
    end_ms: i64,
}

impl Generator<'_> {
    fn range(&mut self, (lo, hi): (u32, u32)) -> u32 {
        self.rng.gen_range(lo..=hi)
    }

    fn timestamp(&self, ms: i64) -> Timestamp {
        DateTime::from_timestamp_millis(ms).expect("timestamp within chrono range")
    }

    fn pick_topics(&mut self, profile: &ClassProfile) -> Vec<UnifiedTopic> {
        let k = weighted_index(&mut self.rng, &profile.topic_count_weights) + 1;
        let designated = self.config.designated_topic;
        let mut others: Vec<UnifiedTopic> = UnifiedTopic::ALL.into_iter().filter(|t| *t != designated).collect();
        others.shuffle(&mut self.rng);
        let include = k == UnifiedTopic::COUNT || self.rng.gen::<f64>() < profile.designated_affinity;
        let mut topics = Vec::with_capacity(k);
        if include {
            topics.push(designated);
        }
        topics.extend(others.into_iter().take(k - topics.len()));
        topics
    }

    fn tweet_topic(&mut self, profile: &ClassProfile, topics: &[UnifiedTopic]) -> UnifiedTopic {
        let designated = self.config.designated_topic;
        match profile.designated_share {
            Some(share) if topics.len() > 1 && topics[0] == designated => {
                if self.rng.gen::<f64>() < share {
                    designated
                } else {
                    topics[self.rng.gen_range(1..topics.len())]
                }
            }
            _ => topics[self.rng.gen_range(0..topics.len())],
        }
    }

    fn words(&mut self, group: &str, topic_words: u32, filler_words: u32) -> Vec<String> {
        let terms = &self.vocab[group];
        let mut words: Vec<String> = (0..topic_words)
            .map(|_| terms[self.rng.gen_range(0..terms.len())].to_string())
            .collect();
        for _ in 0..filler_words {
            let w = self.filler[self.rng.gen_range(0..self.filler.len())].clone();
            words.push(w);
        }
        words.shuffle(&mut self.rng);
        words
    }
}

/// Generates a population. The same config always yields the same records.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mapping = TaxonomyMapping::default();
    let groups_by_topic = UnifiedTopic::ALL
        .into_iter()
        .map(|t| (t, mapping.newsgroups_for(t).into_iter().map(static_group).collect()))
        .collect();
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        config,
        vocab: newsgroup_vocabulary(),
        groups_by_topic,
        filler: filler_words(),
        end_ms: config.collection_end.timestamp_millis(),
    };

    let n = config.n_users as usize;
    let spam = config.spammer_count() as usize;
    let mut labels: Vec<Label> = (0..n)
        .map(|i| if i < spam { Label::Spammer } else { Label::Legitimate })
        .collect();
    labels.shuffle(&mut g.rng);

    let mut users = Vec::with_capacity(n);
    let mut tweets = Vec::new();
    let mut replies = Vec::new();
    let mut manifest_labels = BTreeMap::new();
    let mut tweet_topics = BTreeMap::new();
    let day_ms = 86_400_000i64;
    let window_start = g.end_ms - i64::from(config.window_days) * day_ms;

    for (u, label) in labels.into_iter().enumerate() {
        let mimic;
        let profile = match label {
            Label::Spammer if g.rng.gen::<f64>() < config.mimicry => {
                mimic = config.spammer.mimicking(&config.legitimate);
                &mimic
            }
            Label::Spammer => &config.spammer,
            Label::Legitimate => &config.legitimate,
        };
        let user_id = format!("u{u:05}");
        let age: f64 = g.rng.gen_range(profile.age_years.0..=profile.age_years.1);
        let created_ms = g.end_ms - libm::round(age * 365.25 * day_ms as f64) as i64;
        users.push(UserProfile {
            user_id: user_id.clone(),
            followers_count: log_normal(&mut g.rng, profile.followers),
            friends_count: log_normal(&mut g.rng, profile.friends),
            created_at: g.timestamp(created_ms),
            label: Some(label),
        });
        manifest_labels.insert(user_id.clone(), label);

        let topics = g.pick_topics(profile);
        let n_tweets = g.range(profile.tweets).max(topics.len() as u32);
        let host_count = g.range(profile.url_hosts);
        let host_pool = match label {
            Label::Spammer => "promo",
            Label::Legitimate => "news",
        };
        let hosts: Vec<String> = (0..host_count)
            .map(|_| format!("{host_pool}{}.example.com", g.rng.gen_range(0..200)))
            .collect();
        let mut texts: BTreeSet<String> = BTreeSet::new();
        let start_ms = window_start.max(created_ms);

        for k in 0..n_tweets {
            // the first tweets cover every topic once
            let topic = if (k as usize) < topics.len() {
                topics[k as usize]
            } else {
                g.tweet_topic(profile, &topics)
            };
            let groups = g.groups_by_topic[&topic].clone();
            let group = groups[g.rng.gen_range(0..groups.len())];
            let hashtag_count = poisson(&mut g.rng, profile.hashtag_rate);
            let url_count = poisson(&mut g.rng, profile.url_rate);
            let urls: Vec<String> = (0..url_count)
                .map(|_| {
                    let host = &hosts[g.rng.gen_range(0..hosts.len())];
                    format!("https://{host}/p/{}", g.rng.gen_range(0..profile.url_paths))
                })
                .collect();
            let text = loop {
                let tw = g.range(profile.topic_words);
                let fw = g.range(profile.filler_words);
                let body = g.words(group, tw, fw).join(" ");
                let template = TEMPLATES[g.rng.gen_range(0..TEMPLATES.len())];
                let mut text = template.replacen("{}", &body, 1);
                for url in &urls {
                    text.push(' ');
                    text.push_str(url);
                }
                if texts.insert(text.clone()) {
                    break text;
                }
            };
            let hashtags: Vec<String> = (0..hashtag_count)
                .map(|_| {
                    let terms = &g.vocab[group];
                    terms[g.rng.gen_range(0..terms.len())].to_string()
                })
                .collect();
            let mut text = text;
            for h in &hashtags {
                text.push_str(" #");
                text.push_str(h);
            }
            let tweet_id = format!("t{:08}", tweets.len());
            let created = g.rng.gen_range(start_ms..=g.end_ms);
            let n_replies = poisson(&mut g.rng, profile.reply_rate);
            let mut reply_texts: BTreeSet<String> = BTreeSet::new();
            for _ in 0..n_replies {
                let r: f64 = g.rng.gen();
                let pool: &[&str] = if r < profile.reply_positive {
                    &POSITIVE_REPLY_WORDS
                } else if r < profile.reply_positive + profile.reply_negative {
                    &NEGATIVE_REPLY_WORDS
                } else {
                    &[]
                };
                let reply_text = loop {
                    let mut words: Vec<String> = Vec::new();
                    if !pool.is_empty() {
                        words.push(pool[g.rng.gen_range(0..pool.len())].to_string());
                    }
                    for _ in 0..g.rng.gen_range(1..=3) {
                        words.push(g.filler[g.rng.gen_range(0..g.filler.len())].clone());
                    }
                    let t = format!("@{} {}", user_id, words.join(" "));
                    if reply_texts.insert(t.clone()) {
                        break t;
                    }
                };
                replies.push(Reply {
                    reply_id: format!("r{:09}", replies.len()),
                    tweet_id: tweet_id.clone(),
                    text: reply_text,
                });
            }
            tweets.push(RawTweet {
                tweet_id: tweet_id.clone(),
                user_id: user_id.clone(),
                created_at: g.timestamp(created),
                text,
                urls,
                hashtags,
                retweet_count: poisson(&mut g.rng, profile.retweet_mean),
                like_count: poisson(&mut g.rng, profile.like_mean),
            });
            tweet_topics.insert(tweet_id, topic);
        }
    }

    Ok(SynthOutput {
        users,
        tweets,
        replies,
        manifest: SynthManifest {
            config: config.clone(),
            labels: manifest_labels,
            tweet_topics,
        },
    })
}

fn static_group(name: &str) -> &'static str {
    NEWSGROUPS.iter().copied().find(|g| *g == name).expect("mapping covers only known newsgroups")
}

/// Newsgroup-style documents: mostly terms of their group, mixed with shared
/// filler words. Returns `(train, test)`.
pub fn pseudo_newsgroups(seed: u64, train_per_group: usize, test_per_group: usize) -> (Vec<LabeledDocument>, Vec<LabeledDocument>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = newsgroup_vocabulary();
    let filler = filler_words();
    let make = |group: &str, rng: &mut ChaCha8Rng| {
        let terms = &vocab[group];
        let len = rng.gen_range(30..=80);
        let words: Vec<&str> = (0..len)
            .map(|_| {
                if rng.gen::<f64>() < 0.55 {
                    terms[rng.gen_range(0..terms.len())]
                } else {
                    filler[rng.gen_range(0..filler.len())].as_str()
                }
            })
            .collect();
        LabeledDocument {
            label: group.to_string(),
            text: words.join(" "),
        }
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for group in NEWSGROUPS {
        for _ in 0..train_per_group {
            train.push(make(group, &mut rng));
        }
        for _ in 0..test_per_group {
            test.push(make(group, &mut rng));
        }
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::cleanse;

    fn small(n: u32, seed: u64) -> SynthConfig {
        SynthConfig {
            n_users: n,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn vocabulary_covers_every_newsgroup() {
        let v = newsgroup_vocabulary();
        assert_eq!(v.len(), 20);
        for g in NEWSGROUPS {
            assert!(v[g].len() >= 20, "{g}");
        }
        let filler = filler_words();
        assert!(filler.len() > 10_000);
        assert!(!filler.iter().any(|w| w == "the"));
    }

    #[test]
    fn spammer_count_is_rounded_ratio() {
        assert_eq!(SynthConfig::default().spammer_count(), 1510);
        let two = SynthConfig {
            n_users: 2,
            spam_ratio: 0.5,
            ..SynthConfig::default()
        };
        let out = generate(&two).unwrap();
        let spam = out.manifest.labels.values().filter(|l| l.is_spammer()).count();
        assert_eq!(spam, 1);
    }

    #[test]
    fn infeasible_configs_rejected() {
        let zero = SynthConfig {
            spam_ratio: 0.0,
            ..small(10, 0)
        };
        assert!(matches!(generate(&zero), Err(Error::InfeasibleConfig(_))));
        let allowed = SynthConfig {
            require_both_classes: false,
            ..zero
        };
        assert!(generate(&allowed).is_ok());
        let one = SynthConfig {
            spam_ratio: 0.01,
            ..small(20, 0)
        };
        assert!(generate(&one).is_err());
        let mut bad = small(10, 0);
        bad.spammer.tweets = (5, 2);
        assert!(generate(&bad).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small(60, 5)).unwrap();
        let b = generate(&small(60, 5)).unwrap();
        assert_eq!(a, b);
        let c = generate(&small(60, 6)).unwrap();
        assert_ne!(a.tweets, c.tweets);
    }

    #[test]
    fn output_is_clean_and_consistent() {
        let out = generate(&small(80, 7)).unwrap();
        let corpus = out.corpus().unwrap();
        let (_, report) = cleanse(&corpus);
        assert!(report.is_clean(), "{report:?}");
        for u in &out.users {
            assert_eq!(u.label, Some(out.manifest.labels[&u.user_id]));
        }
        let latest = corpus.latest_timestamp().unwrap();
        assert!(latest <= out.manifest.config.collection_end);
        for t in &out.tweets {
            let user = corpus.users().get(&t.user_id).unwrap();
            assert!(t.created_at >= user.created_at);
        }
    }

    #[test]
    fn spammer_topic_counts_are_bimodal() {
        let out = generate(&small(600, 8)).unwrap();
        let mut df: BTreeMap<&str, BTreeSet<UnifiedTopic>> = BTreeMap::new();
        for t in &out.tweets {
            df.entry(t.user_id.as_str()).or_default().insert(out.manifest.tweet_topics[&t.tweet_id]);
        }
        let mut spam = [0usize; 9];
        let mut legit = [0usize; 9];
        for (u, topics) in &df {
            match out.manifest.labels[*u] {
                Label::Spammer => spam[topics.len()] += 1,
                Label::Legitimate => legit[topics.len()] += 1,
            }
        }
        assert!(spam[1] + spam[7] + spam[8] > spam[3] + spam[4] + spam[5]);
        let legit_mode = (1..=8).max_by_key(|&k| (legit[k], core::cmp::Reverse(k))).unwrap();
        assert!((1..=3).contains(&legit_mode));
    }

    #[test]
    fn pseudo_newsgroups_shape() {
        let (train, test) = pseudo_newsgroups(1, 5, 2);
        assert_eq!(train.len(), 100);
        assert_eq!(test.len(), 40);
        assert!(train.iter().all(|d| NEWSGROUPS.contains(&d.label.as_str())));
    }
}
