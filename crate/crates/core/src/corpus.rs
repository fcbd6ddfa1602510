//! Users, tweets and replies: referential assembly, cleansing and account age.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Timestamp = DateTime<Utc>;

/// Path extensions treated as photo or video links.
pub const MEDIA_EXTENSIONS: [&str; 5] = [".jpg", ".jpeg", ".png", ".gif", ".mp4"];

const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Spammer,
    Legitimate,
}

impl Label {
    pub fn is_spammer(self) -> bool {
        self == Label::Spammer
    }

    /// 1 for spammers, 0 for legitimate users.
    pub fn as_binary(self) -> u8 {
        u8::from(self.is_spammer())
    }

    pub fn from_binary(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Legitimate),
            1 => Some(Label::Spammer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTweet {
    pub tweet_id: String,
    pub user_id: String,
    pub created_at: Timestamp,
    pub text: String,
    #[serde(default)]
    pub urls: Vec<String>,
    /// Without the leading `#`.
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub retweet_count: u64,
    #[serde(default)]
    pub like_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reply {
    pub reply_id: String,
    /// Parent tweet.
    pub tweet_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub followers_count: u64,
    pub friends_count: u64,
    pub created_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

/// How [`Corpus::assemble`] treats dirty input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestPolicy {
    /// Escalate dangling references and repeated identical records to errors.
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Tweets whose `user_id` matched no user.
    pub quarantined_tweets: Vec<String>,
    /// Replies whose `tweet_id` matched no tweet.
    pub quarantined_replies: Vec<String>,
    /// Records repeated verbatim under the same id, collapsed to one.
    pub collapsed_duplicates: usize,
}

impl IngestReport {
    pub fn quarantined(&self) -> usize {
        self.quarantined_tweets.len() + self.quarantined_replies.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanseReport {
    pub duplicate_tweets: usize,
    pub duplicate_replies: usize,
    pub media_urls: usize,
    /// Replies moved from a removed duplicate tweet onto its survivor.
    pub reparented_replies: usize,
}

impl CleanseReport {
    pub fn is_clean(&self) -> bool {
        *self == CleanseReport::default()
    }
}

/// An immutable, referentially consistent collection of users, tweets and
/// replies. Every tweet belongs to a known user and every reply to a known
/// tweet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    users: BTreeMap<String, UserProfile>,
    tweets: BTreeMap<String, RawTweet>,
    replies: BTreeMap<String, Reply>,
}

trait Keyed {
    const KIND: &'static str;
    fn key(&self) -> &str;
}

impl Keyed for UserProfile {
    const KIND: &'static str = "user";
    fn key(&self) -> &str {
        &self.user_id
    }
}

impl Keyed for RawTweet {
    const KIND: &'static str = "tweet";
    fn key(&self) -> &str {
        &self.tweet_id
    }
}

impl Keyed for Reply {
    const KIND: &'static str = "reply";
    fn key(&self) -> &str {
        &self.reply_id
    }
}

fn index_by_id<T: Keyed + PartialEq>(
    records: Vec<T>,
    policy: IngestPolicy,
    report: &mut IngestReport,
) -> Result<BTreeMap<String, T>> {
    let mut out: BTreeMap<String, T> = BTreeMap::new();
    for record in records {
        let id = record.key().to_string();
        if id.is_empty() {
            return Err(Error::InvalidArgument(alloc::format!("empty {} id", T::KIND)));
        }
        match out.get(&id) {
            Some(existing) if *existing == record && !policy.strict => {
                report.collapsed_duplicates += 1;
            }
            Some(_) => return Err(Error::DuplicateId { kind: T::KIND, id }),
            None => {
                out.insert(id, record);
            }
        }
    }
    Ok(out)
}

impl Corpus {
    /// Builds a corpus from loaded records, resolving references.
    ///
    /// Records that point at an unknown parent are quarantined (listed in the
    /// report) unless the policy is strict, in which case they are errors. A
    /// repeated id with differing content is always an error.
    pub fn assemble(
        users: Vec<UserProfile>,
        tweets: Vec<RawTweet>,
        replies: Vec<Reply>,
        policy: IngestPolicy,
    ) -> Result<(Corpus, IngestReport)> {
        let mut report = IngestReport::default();
        let users = index_by_id(users, policy, &mut report)?;
        let mut tweets = index_by_id(tweets, policy, &mut report)?;
        let mut replies = index_by_id(replies, policy, &mut report)?;

        let dangling: Vec<String> = tweets
            .values()
            .filter(|t| !users.contains_key(&t.user_id))
            .map(|t| t.tweet_id.clone())
            .collect();
        for id in dangling {
            let tweet = tweets.remove(&id).expect("listed above");
            if policy.strict {
                return Err(Error::DanglingReference {
                    kind: "tweet",
                    id,
                    parent_kind: "user",
                    parent: tweet.user_id,
                });
            }
            report.quarantined_tweets.push(id);
        }

        let dangling: Vec<String> = replies
            .values()
            .filter(|r| !tweets.contains_key(&r.tweet_id))
            .map(|r| r.reply_id.clone())
            .collect();
        for id in dangling {
            let reply = replies.remove(&id).expect("listed above");
            if policy.strict {
                return Err(Error::DanglingReference {
                    kind: "reply",
                    id,
                    parent_kind: "tweet",
                    parent: reply.tweet_id,
                });
            }
            report.quarantined_replies.push(id);
        }

        Ok((Corpus { users, tweets, replies }, report))
    }

    pub fn users(&self) -> &BTreeMap<String, UserProfile> {
        &self.users
    }

    pub fn tweets(&self) -> &BTreeMap<String, RawTweet> {
        &self.tweets
    }

    pub fn replies(&self) -> &BTreeMap<String, Reply> {
        &self.replies
    }

    /// (users, tweets, replies)
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.users.len(), self.tweets.len(), self.replies.len())
    }

    /// Tweets grouped by author, each group ordered by (created_at, tweet_id).
    /// Users without tweets are present with an empty list.
    pub fn tweets_by_user(&self) -> BTreeMap<&str, Vec<&RawTweet>> {
        let mut out: BTreeMap<&str, Vec<&RawTweet>> =
            self.users.keys().map(|k| (k.as_str(), Vec::new())).collect();
        for tweet in self.tweets.values() {
            out.entry(tweet.user_id.as_str()).or_default().push(tweet);
        }
        for list in out.values_mut() {
            list.sort_by(|a, b| a.created_at.cmp(&b.created_at).then(a.tweet_id.cmp(&b.tweet_id)));
        }
        out
    }

    /// Replies grouped by parent tweet, ordered by reply id.
    pub fn replies_by_tweet(&self) -> BTreeMap<&str, Vec<&Reply>> {
        let mut out: BTreeMap<&str, Vec<&Reply>> = BTreeMap::new();
        for reply in self.replies.values() {
            out.entry(reply.tweet_id.as_str()).or_default().push(reply);
        }
        out
    }

    /// Latest `created_at` over tweets and users.
    pub fn latest_timestamp(&self) -> Option<Timestamp> {
        let tweets = self.tweets.values().map(|t| t.created_at);
        let users = self.users.values().map(|u| u.created_at);
        tweets.chain(users).max()
    }
}

/// Whether a URL's path ends in a photo or video extension (case-insensitive).
pub fn is_media_url(url: &str) -> bool {
    let path = url_path(url).to_ascii_lowercase();
    MEDIA_EXTENSIONS.iter().any(|ext| path.ends_with(ext))
}

fn strip_scheme(url: &str) -> &str {
    match url.find("://") {
        Some(i) => &url[i + 3..],
        None => url,
    }
}

fn url_path(url: &str) -> &str {
    let rest = strip_scheme(url.trim());
    let rest = rest.split(['?', '#']).next().unwrap_or("");
    match rest.find('/') {
        Some(i) => &rest[i..],
        None => "",
    }
}

/// Authority component of a URL (lowercased, user-info dropped).
pub fn url_host(url: &str) -> String {
    let rest = strip_scheme(url.trim());
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let authority = &rest[..end];
    let authority = match authority.rfind('@') {
        Some(i) => &authority[i + 1..],
        None => authority,
    };
    authority.to_ascii_lowercase()
}

/// Removes exact duplicate tweets and replies and strips media URLs.
///
/// Tweets sharing author and trimmed text collapse onto the earliest one
/// (ties on timestamp go to the smallest tweet id); replies of removed tweets
/// move to the survivor. Replies sharing parent and trimmed text collapse onto
/// the smallest reply id. Retweets are ordinary tweets here and are kept.
pub fn cleanse(corpus: &Corpus) -> (Corpus, CleanseReport) {
    let mut report = CleanseReport::default();

    let mut survivor_of: BTreeMap<(&str, &str), &RawTweet> = BTreeMap::new();
    for tweet in corpus.tweets.values() {
        let key = (tweet.user_id.as_str(), tweet.text.trim());
        match survivor_of.get(&key) {
            Some(current)
                if (current.created_at, current.tweet_id.as_str())
                    <= (tweet.created_at, tweet.tweet_id.as_str()) => {}
            _ => {
                survivor_of.insert(key, tweet);
            }
        }
    }

    let mut redirect: BTreeMap<&str, &str> = BTreeMap::new();
    let mut tweets = BTreeMap::new();
    for tweet in corpus.tweets.values() {
        let survivor = survivor_of[&(tweet.user_id.as_str(), tweet.text.trim())];
        if survivor.tweet_id != tweet.tweet_id {
            report.duplicate_tweets += 1;
            redirect.insert(tweet.tweet_id.as_str(), survivor.tweet_id.as_str());
            continue;
        }
        let mut kept = tweet.clone();
        let before = kept.urls.len();
        kept.urls.retain(|u| !is_media_url(u));
        report.media_urls += before - kept.urls.len();
        tweets.insert(kept.tweet_id.clone(), kept);
    }

    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut replies = BTreeMap::new();
    for reply in corpus.replies.values() {
        let mut kept = reply.clone();
        if let Some(target) = redirect.get(reply.tweet_id.as_str()) {
            kept.tweet_id = (*target).to_string();
            report.reparented_replies += 1;
        }
        if !seen.insert((kept.tweet_id.clone(), kept.text.trim().to_string())) {
            report.duplicate_replies += 1;
            continue;
        }
        replies.insert(kept.reply_id.clone(), kept);
    }

    let cleaned = Corpus {
        users: corpus.users.clone(),
        tweets,
        replies,
    };
    (cleaned, report)
}

/// Account age in years of 365.25 days at `as_of`.
pub fn account_age_years(profile: &UserProfile, as_of: Timestamp) -> Result<f64> {
    if as_of < profile.created_at {
        return Err(Error::ClockInconsistency {
            earlier: profile.created_at.to_rfc3339(),
            later: as_of.to_rfc3339(),
        });
    }
    let seconds = (as_of - profile.created_at).num_milliseconds() as f64 / 1000.0;
    Ok(seconds / 86_400.0 / DAYS_PER_YEAR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use chrono::TimeZone;

    fn ts(y: i32, m: u32, d: u32) -> Timestamp {
        Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
    }

    fn user(id: &str) -> UserProfile {
        UserProfile {
            user_id: id.into(),
            followers_count: 10,
            friends_count: 5,
            created_at: ts(2015, 1, 1),
            label: None,
        }
    }

    fn tweet(id: &str, user: &str, text: &str, day: u32) -> RawTweet {
        RawTweet {
            tweet_id: id.into(),
            user_id: user.into(),
            created_at: ts(2020, 1, day),
            text: text.into(),
            urls: vec![],
            hashtags: vec![],
            retweet_count: 0,
            like_count: 0,
        }
    }

    fn reply(id: &str, parent: &str, text: &str) -> Reply {
        Reply {
            reply_id: id.into(),
            tweet_id: parent.into(),
            text: text.into(),
        }
    }

    #[test]
    fn consistent_records_load_fully() {
        let (c, report) = Corpus::assemble(
            vec![user("u1"), user("u2")],
            vec![tweet("t1", "u1", "a", 1), tweet("t2", "u1", "b", 2), tweet("t3", "u2", "c", 3)],
            vec![reply("r1", "t1", "nice")],
            IngestPolicy::default(),
        )
        .unwrap();
        assert_eq!(c.sizes(), (2, 3, 1));
        assert_eq!(report.quarantined(), 0);
    }

    #[test]
    fn dangling_reply_is_quarantined_or_rejected() {
        let users = vec![user("u1")];
        let tweets = vec![tweet("t1", "u1", "a", 1)];
        let replies = vec![reply("r1", "missing", "x")];
        let (c, report) =
            Corpus::assemble(users.clone(), tweets.clone(), replies.clone(), IngestPolicy::default())
                .unwrap();
        assert_eq!(c.sizes(), (1, 1, 0));
        assert_eq!(report.quarantined(), 1);
        assert_eq!(report.quarantined_replies, vec!["r1".to_string()]);

        let err = Corpus::assemble(users, tweets, replies, IngestPolicy { strict: true }).unwrap_err();
        assert!(matches!(err, Error::DanglingReference { kind: "reply", .. }));
    }

    #[test]
    fn repeated_identical_tweet_line() {
        let lines = vec![tweet("t1", "u1", "same", 1), tweet("t1", "u1", "same", 1)];
        let (c, report) =
            Corpus::assemble(vec![user("u1")], lines.clone(), vec![], IngestPolicy::default()).unwrap();
        assert_eq!(c.tweets().len(), 1);
        assert_eq!(report.collapsed_duplicates, 1);

        let err = Corpus::assemble(vec![user("u1")], lines, vec![], IngestPolicy { strict: true })
            .unwrap_err();
        assert_eq!(err, Error::DuplicateId { kind: "tweet", id: "t1".into() });
    }

    #[test]
    fn conflicting_duplicate_id_is_an_error() {
        let err = Corpus::assemble(
            vec![user("u1")],
            vec![tweet("t1", "u1", "one", 1), tweet("t1", "u1", "two", 1)],
            vec![],
            IngestPolicy::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("t1"));
    }

    #[test]
    fn cleanse_drops_duplicates_and_keeps_earliest() {
        let (c, _) = Corpus::assemble(
            vec![user("u1")],
            vec![tweet("t2", "u1", " hello ", 5), tweet("t1", "u1", "hello", 9)],
            vec![reply("r1", "t1", "hi"), reply("r2", "t2", "hi")],
            IngestPolicy::default(),
        )
        .unwrap();
        let (clean, report) = cleanse(&c);
        assert_eq!(report.duplicate_tweets, 1);
        assert!(clean.tweets().contains_key("t2"));
        assert_eq!(report.reparented_replies, 1);
        assert_eq!(report.duplicate_replies, 1);
        assert_eq!(clean.replies().len(), 1);
        assert_eq!(clean.replies()["r1"].tweet_id, "t2");
    }

    #[test]
    fn cleanse_removes_media_urls() {
        let mut t = tweet("t1", "u1", "look", 1);
        t.urls = vec!["http://a.com/p.jpg".into(), "http://b.com/x".into()];
        let (c, _) = Corpus::assemble(vec![user("u1")], vec![t], vec![], IngestPolicy::default()).unwrap();
        let (clean, report) = cleanse(&c);
        assert_eq!(clean.tweets()["t1"].urls, vec!["http://b.com/x".to_string()]);
        assert_eq!(report.media_urls, 1);
    }

    #[test]
    fn clean_corpus_is_unchanged() {
        let (c, _) = Corpus::assemble(
            vec![user("u1")],
            vec![tweet("t1", "u1", "a", 1), tweet("t2", "u1", "b", 1)],
            vec![reply("r1", "t1", "x")],
            IngestPolicy::default(),
        )
        .unwrap();
        let (clean, report) = cleanse(&c);
        assert!(report.is_clean());
        assert_eq!(clean, c);
    }

    #[test]
    fn media_detection() {
        assert!(is_media_url("https://X.com/a/B.JPEG?size=large"));
        assert!(is_media_url("http://v.com/clip.mp4#t=3"));
        assert!(!is_media_url("http://jpg.com/"));
        assert!(!is_media_url("http://a.com/page.html"));
    }

    #[test]
    fn host_extraction() {
        assert_eq!(url_host("http://a.com/1"), "a.com");
        assert_eq!(url_host("https://user@Sub.Example.org:8080/x?q"), "sub.example.org:8080");
        assert_eq!(url_host("a.com"), "a.com");
    }

    #[test]
    fn account_age() {
        let mut u = user("u");
        u.created_at = ts(2010, 1, 1);
        let years = account_age_years(&u, ts(2020, 1, 1)).unwrap();
        assert!((years - 3652.0 / 365.25).abs() < 1e-12);
        assert_eq!(account_age_years(&u, u.created_at).unwrap(), 0.0);
        u.created_at = ts(2019, 7, 2);
        let years = account_age_years(&u, ts(2020, 7, 1)).unwrap();
        assert!((years - 0.999).abs() < 0.003);
        assert!(matches!(
            account_age_years(&u, ts(2019, 1, 1)),
            Err(Error::ClockInconsistency { .. })
        ));
    }
}
