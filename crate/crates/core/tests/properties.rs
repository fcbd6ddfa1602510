//! Property tests over randomized corpora, rankings and score vectors.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{TimeZone, Utc};
use proptest::prelude::*;

use spamlens_core::corpus::{cleanse, Corpus, IngestPolicy, RawTweet, Reply, UserProfile};
use spamlens_core::eval::{
    average_precision_at_k, confusion, precision_at_k, rank_baseline, roc_auc, RankingMethod, RankingResult,
};
use spamlens_core::features::{
    build_feature_matrix, followers_friends_ratio, inverse_topic_frequency, FeatureMatrix, FeatureOptions,
};
use spamlens_core::sentiment::aggregate_scores;
use spamlens_core::text::{tokenize, TokenizerConfig, Vectorizer};
use spamlens_core::topics::{TopicAssignment, UnifiedTopic};

const WORDS: [&str; 8] = ["linux", "kernel", "hockey", "goal", "church", "prayer", "engine", "launch"];
const URLS: [&str; 5] = [
    "http://a.example/x",
    "http://a.example/y",
    "https://b.example/z",
    "https://pic.example/p.jpg",
    "http://c.example/",
];

#[derive(Debug, Clone)]
struct TweetSeed {
    user: usize,
    words: Vec<usize>,
    urls: Vec<usize>,
    tags: Vec<usize>,
    minute: i64,
    retweets: u64,
    likes: u64,
    topic: Option<usize>,
}

#[derive(Debug, Clone)]
struct CorpusSeed {
    users: Vec<(u64, u64, i64)>,
    tweets: Vec<TweetSeed>,
    replies: Vec<(usize, Vec<usize>, i8)>,
}

fn corpus_seed() -> impl Strategy<Value = CorpusSeed> {
    let users = prop::collection::vec((0u64..5000, 0u64..5000, 0i64..4000), 1..5);
    let tweet = (
        0usize..5,
        prop::collection::vec(0usize..WORDS.len(), 0..5),
        prop::collection::vec(0usize..URLS.len(), 0..3),
        prop::collection::vec(0usize..4, 0..3),
        0i64..1000,
        0u64..20,
        0u64..20,
        prop::option::of(0usize..UnifiedTopic::COUNT),
    )
        .prop_map(|(user, words, urls, tags, minute, retweets, likes, topic)| TweetSeed {
            user,
            words,
            urls,
            tags,
            minute,
            retweets,
            likes,
            topic,
        });
    let tweets = prop::collection::vec(tweet, 0..20);
    let replies = prop::collection::vec((0usize..25, prop::collection::vec(0usize..WORDS.len(), 0..3), -3i8..4), 0..12);
    (users, tweets, replies).prop_map(|(users, tweets, replies)| CorpusSeed { users, tweets, replies })
}

struct Built {
    users: Vec<UserProfile>,
    tweets: Vec<RawTweet>,
    replies: Vec<Reply>,
    assignments: BTreeMap<String, TopicAssignment>,
    reply_scores: BTreeMap<String, f64>,
}

fn build(seed: &CorpusSeed) -> Built {
    let base = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
    let users: Vec<UserProfile> = seed
        .users
        .iter()
        .enumerate()
        .map(|(i, &(followers, friends, days))| UserProfile {
            user_id: format!("u{i}"),
            followers_count: followers,
            friends_count: friends,
            created_at: base - chrono::Duration::days(days),
            label: None,
        })
        .collect();
    let mut assignments = BTreeMap::new();
    let tweets: Vec<RawTweet> = seed
        .tweets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let id = format!("t{i:03}");
            let topic = t.topic.map(|k| UnifiedTopic::ALL[k]);
            assignments.insert(
                id.clone(),
                TopicAssignment {
                    tweet_id: id.clone(),
                    topic,
                    external: None,
                    newsgroup: None,
                    accepted: topic.is_some(),
                },
            );
            RawTweet {
                tweet_id: id,
                // some tweets point at missing users and get quarantined
                user_id: format!("u{}", t.user),
                created_at: base + chrono::Duration::minutes(t.minute),
                text: t.words.iter().map(|w| WORDS[*w]).collect::<Vec<_>>().join(" "),
                urls: t.urls.iter().map(|u| URLS[*u].to_string()).collect(),
                hashtags: t.tags.iter().map(|h| format!("tag{h}")).collect(),
                retweet_count: t.retweets,
                like_count: t.likes,
            }
        })
        .collect();
    let mut reply_scores = BTreeMap::new();
    let replies: Vec<Reply> = seed
        .replies
        .iter()
        .enumerate()
        .map(|(i, (parent, words, score))| {
            let id = format!("r{i:03}");
            reply_scores.insert(id.clone(), f64::from(*score) / 3.0);
            Reply {
                reply_id: id,
                tweet_id: format!("t{parent:03}"),
                text: words.iter().map(|w| WORDS[*w]).collect::<Vec<_>>().join(" "),
            }
        })
        .collect();
    Built {
        users,
        tweets,
        replies,
        assignments,
        reply_scores,
    }
}

fn assemble(b: &Built) -> Corpus {
    Corpus::assemble(b.users.clone(), b.tweets.clone(), b.replies.clone(), IngestPolicy { strict: false })
        .unwrap()
        .0
}

fn matrix(corpus: &Corpus, b: &Built, topic: UnifiedTopic) -> FeatureMatrix {
    let options = FeatureOptions {
        designated_topic: topic,
        as_of: None,
        tokenizer: TokenizerConfig::default(),
    };
    build_feature_matrix(corpus, &b.assignments, &b.reply_scores, &options).unwrap()
}

fn ranking_of(relevance: &[bool]) -> (RankingResult, BTreeMap<String, bool>) {
    let n = relevance.len();
    let entries = (0..n).map(|i| (format!("u{i:04}"), (n - i) as f64)).collect();
    let labels = relevance.iter().enumerate().map(|(i, r)| (format!("u{i:04}"), *r)).collect();
    (RankingResult::from_scores(RankingMethod::Model, entries), labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn cleanse_is_idempotent_and_shrinking(seed in corpus_seed()) {
        let b = build(&seed);
        let corpus = assemble(&b);
        let (once, _) = cleanse(&corpus);
        let (twice, report) = cleanse(&once);
        prop_assert_eq!(&once, &twice);
        prop_assert!(report.is_clean());
        let (a, c) = (corpus.sizes(), once.sizes());
        prop_assert!(c.0 <= a.0 && c.1 <= a.1 && c.2 <= a.2);
        let mut seen = BTreeSet::new();
        for t in once.tweets().values() {
            prop_assert!(seen.insert((t.user_id.clone(), t.text.trim().to_string())));
        }
    }

    #[test]
    fn serialized_corpus_reassembles_identically(seed in corpus_seed()) {
        let b = build(&seed);
        let corpus = assemble(&b);
        let users: Vec<UserProfile> = corpus.users().values()
            .map(|u| serde_json::from_str(&serde_json::to_string(u).unwrap()).unwrap()).collect();
        let tweets: Vec<RawTweet> = corpus.tweets().values()
            .map(|t| serde_json::from_str(&serde_json::to_string(t).unwrap()).unwrap()).collect();
        let replies: Vec<Reply> = corpus.replies().values()
            .map(|r| serde_json::from_str(&serde_json::to_string(r).unwrap()).unwrap()).collect();
        let (again, report) = Corpus::assemble(users, tweets, replies, IngestPolicy { strict: true }).unwrap();
        prop_assert_eq!(report.quarantined(), 0);
        prop_assert_eq!(again, corpus);
    }

    #[test]
    fn feature_vectors_satisfy_invariants(seed in corpus_seed(), topic in 0usize..UnifiedTopic::COUNT) {
        let b = build(&seed);
        let corpus = assemble(&b);
        let m = matrix(&corpus, &b, UnifiedTopic::ALL[topic]);
        prop_assert_eq!(m.len(), corpus.users().len());
        for row in &m.rows {
            prop_assert!(row.features.check_invariants().is_ok(), "{:?}", row.features.check_invariants());
        }
    }

    #[test]
    fn features_ignore_tweet_order(seed in corpus_seed()) {
        let b = build(&seed);
        let mut shuffled = Built {
            users: b.users.iter().rev().cloned().collect(),
            tweets: b.tweets.iter().rev().cloned().collect(),
            replies: b.replies.iter().rev().cloned().collect(),
            assignments: b.assignments.clone(),
            reply_scores: b.reply_scores.clone(),
        };
        shuffled.tweets.rotate_left(b.tweets.len() / 2);
        let topic = UnifiedTopic::TechnologyAndComputing;
        prop_assert_eq!(matrix(&assemble(&b), &b, topic), matrix(&assemble(&shuffled), &shuffled, topic));
    }

    #[test]
    fn tokenize_ignores_outer_whitespace(words in prop::collection::vec(0usize..WORDS.len(), 0..6), pad in "[ \t\n]{0,4}") {
        let text = words.iter().map(|w| WORDS[*w]).collect::<Vec<_>>().join(" ");
        let cfg = TokenizerConfig::default();
        prop_assert_eq!(tokenize(&text, &cfg), tokenize(&format!("{pad}{text}{pad}"), &cfg));
    }

    #[test]
    fn tfidf_rows_have_unit_or_zero_norm(
        docs in prop::collection::vec(prop::collection::vec(0usize..WORDS.len(), 0..6), 1..8),
        query in prop::collection::vec(0usize..WORDS.len(), 0..6),
    ) {
        let docs: Vec<Vec<String>> = docs.iter().map(|d| d.iter().map(|w| WORDS[*w].to_string()).collect()).collect();
        let Ok(v) = Vectorizer::fit(&docs, TokenizerConfig::default()) else { return Ok(()); };
        prop_assert!(v.idf.iter().all(|x| *x > 0.0));
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v.doc_freq[i] < v.doc_freq[j] {
                    prop_assert!(v.idf[i] > v.idf[j]);
                }
            }
        }
        let q: Vec<String> = query.iter().map(|w| WORDS[*w].to_string()).collect();
        let norm = v.transform(&q).norm();
        prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sentiment_totals_are_signed_and_order_free(scores in prop::collection::vec(-1.5f64..1.5, 0..30)) {
        let t = aggregate_scores(&scores);
        prop_assert!(t.pos_sum >= 0.0 && t.neg_sum <= 0.0);
        let expected: f64 = scores.iter().map(|s| s.clamp(-1.0, 1.0)).sum();
        prop_assert!((t.pos_sum + t.neg_sum - expected).abs() < 1e-9);
        let mut rev = scores.clone();
        rev.reverse();
        let r = aggregate_scores(&rev);
        prop_assert!((r.pos_sum - t.pos_sum).abs() < 1e-12 && (r.neg_sum - t.neg_sum).abs() < 1e-12);
    }

    #[test]
    fn topic_feature_shapes(df in 1u32..8, followers in 0u64..10_000, friends in 0u64..10_000, age in 0.01f64..20.0, c in 0.1f64..5.0) {
        prop_assert!(inverse_topic_frequency(df, 8) > inverse_topic_frequency(df + 1, 8));
        prop_assert_eq!(inverse_topic_frequency(8, 8), 0.0);
        let r = followers_friends_ratio(followers, friends, age);
        let scaled = followers_friends_ratio(followers, friends, age * c);
        prop_assert!((scaled - c * r).abs() <= 1e-12 * scaled.abs().max(1.0));
        let near = followers_friends_ratio(followers, friends, age + 1e-9);
        prop_assert!((near - r).abs() < 1e-9);
    }

    #[test]
    fn average_precision_is_one_exactly_when_top_is_relevant(rel in prop::collection::vec(any::<bool>(), 1..40), k in 1usize..40) {
        let k = k.min(rel.len());
        let (ranking, labels) = ranking_of(&rel);
        let Ok(ap) = average_precision_at_k(&ranking, &labels, k) else { return Ok(()); };
        prop_assert!((0.0..=1.0).contains(&ap));
        let r = rel.iter().filter(|x| **x).count();
        let perfect = r > 0 && rel[..k.min(r)].iter().all(|x| *x);
        prop_assert_eq!(ap == 1.0, perfect);
    }

    #[test]
    fn cutoff_metrics_ignore_order_below_k(rel in prop::collection::vec(any::<bool>(), 2..40), k in 1usize..40, rot in 0usize..40) {
        let k = k.min(rel.len());
        let (ranking, labels) = ranking_of(&rel);
        let mut tail = rel[k..].to_vec();
        if !tail.is_empty() {
            let len = tail.len();
            tail.rotate_left(rot % len);
        }
        let permuted: Vec<bool> = rel[..k].iter().copied().chain(tail).collect();
        let (ranking2, labels2) = ranking_of(&permuted);
        prop_assert_eq!(precision_at_k(&ranking, &labels, k).unwrap(), precision_at_k(&ranking2, &labels2, k).unwrap());
        let a = average_precision_at_k(&ranking, &labels, k);
        let b = average_precision_at_k(&ranking2, &labels2, k);
        prop_assert_eq!(a.ok(), b.ok());
    }

    #[test]
    fn auc_ignores_monotone_transforms(pairs in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60)) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let labels: Vec<u8> = pairs.iter().map(|p| u8::from(p.1)).collect();
        let Ok(a) = roc_auc(&scores, &labels) else { return Ok(()); };
        let squashed: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-s).exp()) * 3.0 - 7.0).collect();
        let b = roc_auc(&squashed, &labels).unwrap();
        prop_assert!((a.auc - b.auc).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.auc));
    }

    #[test]
    fn confusion_counts_every_example(pairs in prop::collection::vec((0.0f64..1.0, any::<bool>()), 0..60), thr in 0.0f64..1.0) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let labels: Vec<u8> = pairs.iter().map(|p| u8::from(p.1)).collect();
        let c = confusion(&scores, &labels, thr).unwrap();
        prop_assert_eq!(c.tp + c.tn + c.fp + c.fn_, pairs.len() as u64);
        let everything = confusion(&scores, &labels, 0.0).unwrap();
        prop_assert_eq!(everything.fn_, 0);
    }

    #[test]
    fn baselines_ignore_monotone_column_transforms(seed in corpus_seed()) {
        let b = build(&seed);
        let m = matrix(&assemble(&b), &b, UnifiedTopic::TechnologyAndComputing);
        if m.len() < 2 {
            return Ok(());
        }
        let mut cubed = m.clone();
        for row in &mut cubed.rows {
            for v in &mut row.features.values {
                *v = *v * *v * *v + 2.0 * *v;
            }
        }
        // DFM reads raw follower counts rather than percentiles
        for method in RankingMethod::BASELINES.into_iter().filter(|m| *m != RankingMethod::Dfm) {
            let a = rank_baseline(method, &m).unwrap();
            let c = rank_baseline(method, &cubed).unwrap();
            prop_assert_eq!(a.entries, c.entries);
        }
    }
}
