//! On-disk formats: JSON Lines corpora, feature and report CSVs, model and
//! manifest JSON, word lists and the newsgroup directory layout.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use spamlens_core::corpus::{Corpus, IngestPolicy, IngestReport, Label, RawTweet, Reply, UserProfile};
use spamlens_core::features::{FeatureMatrix, FeatureRow, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use spamlens_core::models::{TrainedModel, MODEL_FORMAT_VERSION};
use spamlens_core::topics::{LabeledDocument, TopicAssignment, UnifiedTopic};

use crate::error::{AppError, AppResult};

pub const USERS_FILE: &str = "users.jsonl";
pub const TWEETS_FILE: &str = "tweets.jsonl";
pub const REPLIES_FILE: &str = "replies.jsonl";
pub const ASSIGNMENTS_FILE: &str = "assignments.jsonl";
pub const FEATURES_FILE: &str = "features.csv";
pub const FEATURES_AUX_FILE: &str = "features_aux.csv";
pub const MODEL_FILE: &str = "model.json";
pub const TOPIC_MODEL_FILE: &str = "topic_model.json";
pub const SPLIT_FILE: &str = "split.csv";
pub const SELECTED_FILE: &str = "selected_features.txt";

pub fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::data(path, e))
}

/// Writes `contents`, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> AppResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| AppError::data(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| AppError::data(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| AppError::data(path, format!("line {}: {e}", i + 1)))?;
        out.push(value);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> AppResult<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).map_err(|e| AppError::Internal(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> AppResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| AppError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| AppError::data(path, e))
}

/// Loads the three corpus files of `dir`; a missing replies file counts as
/// no replies.
pub fn read_corpus(dir: &Path, strict: bool) -> AppResult<(Corpus, IngestReport)> {
    let users: Vec<UserProfile> = read_jsonl(&dir.join(USERS_FILE))?;
    let tweets: Vec<RawTweet> = read_jsonl(&dir.join(TWEETS_FILE))?;
    let replies_path = dir.join(REPLIES_FILE);
    let replies: Vec<Reply> = if replies_path.exists() {
        read_jsonl(&replies_path)?
    } else {
        Vec::new()
    };
    Corpus::assemble(users, tweets, replies, IngestPolicy { strict }).map_err(|e| AppError::from_core(dir, e))
}

pub fn write_corpus_records(dir: &Path, users: &[UserProfile], tweets: &[RawTweet], replies: &[Reply]) -> AppResult<Vec<PathBuf>> {
    let files = [
        (dir.join(USERS_FILE), to_jsonl(users)?),
        (dir.join(TWEETS_FILE), to_jsonl(tweets)?),
        (dir.join(REPLIES_FILE), to_jsonl(replies)?),
    ];
    for (path, text) in &files {
        write_text(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

pub fn write_corpus(dir: &Path, corpus: &Corpus) -> AppResult<Vec<PathBuf>> {
    let users: Vec<UserProfile> = corpus.users().values().cloned().collect();
    let tweets: Vec<RawTweet> = corpus.tweets().values().cloned().collect();
    let replies: Vec<Reply> = corpus.replies().values().cloned().collect();
    write_corpus_records(dir, &users, &tweets, &replies)
}

pub fn read_assignments(path: &Path) -> AppResult<BTreeMap<String, TopicAssignment>> {
    let records: Vec<TopicAssignment> = read_jsonl(path)?;
    Ok(records.into_iter().map(|a| (a.tweet_id.clone(), a)).collect())
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

/// Renders rows of string cells as CSV text.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> AppResult<String> {
    let mut w = csv_writer();
    let internal = |e: csv::Error| AppError::Internal(e.to_string());
    w.write_record(header).map_err(internal)?;
    for r in rows {
        w.write_record(r).map_err(internal)?;
    }
    let bytes = w.into_inner().map_err(|e| AppError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| AppError::Internal(e.to_string()))
}

/// Header and rows of a CSV file.
pub fn read_csv(path: &Path) -> AppResult<(Vec<String>, Vec<Vec<String>>)> {
    let text = read_text(path)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| AppError::data(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| AppError::data(path, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn label_cell(label: Option<Label>) -> String {
    label.map(|l| l.as_binary().to_string()).unwrap_or_default()
}

pub fn features_csv(matrix: &FeatureMatrix) -> AppResult<String> {
    let mut header = vec!["user_id"];
    header.extend(FEATURE_NAMES);
    header.push("label");
    let rows: Vec<Vec<String>> = matrix
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.user_id.clone()];
            cells.extend(r.features.values.iter().map(|v| fmt_f64(*v)));
            cells.push(label_cell(r.label));
            cells
        })
        .collect();
    csv_text(&header, &rows)
}

pub fn features_aux_csv(matrix: &FeatureMatrix) -> AppResult<String> {
    let rows: Vec<Vec<String>> = matrix
        .rows
        .iter()
        .map(|r| {
            vec![
                r.user_id.clone(),
                r.topic_tweets.to_string(),
                r.features.designated_topic.as_str().to_string(),
            ]
        })
        .collect();
    csv_text(&["user_id", "topic_tweets", "designated_topic"], &rows)
}

fn parse_cell<T: std::str::FromStr>(path: &Path, row: usize, column: &str, cell: &str) -> AppResult<T>
where
    T::Err: std::fmt::Display,
{
    cell.parse()
        .map_err(|e| AppError::data(path, format!("row {row}, column {column}: `{cell}`: {e}")))
}

/// Reads `features.csv` and, when present next to it, `features_aux.csv`.
/// Without the auxiliary file every row gets `topic_tweets = 0` and
/// `default_topic`.
pub fn read_features(path: &Path, default_topic: UnifiedTopic) -> AppResult<FeatureMatrix> {
    let (header, rows) = read_csv(path)?;
    let mut expected = vec!["user_id".to_string()];
    expected.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    expected.push("label".into());
    if header != expected {
        return Err(AppError::data(path, format!("header must be `{}`", expected.join(","))));
    }
    let aux_path = path.with_file_name(FEATURES_AUX_FILE);
    let mut aux: BTreeMap<String, (u64, UnifiedTopic)> = BTreeMap::new();
    if aux_path.exists() {
        let (_, aux_rows) = read_csv(&aux_path)?;
        for (i, r) in aux_rows.iter().enumerate() {
            if r.len() != 3 {
                return Err(AppError::data(&aux_path, format!("row {}: expected 3 fields", i + 1)));
            }
            let tweets = parse_cell(&aux_path, i + 1, "topic_tweets", &r[1])?;
            let topic = parse_cell(&aux_path, i + 1, "designated_topic", &r[2])?;
            aux.insert(r[0].clone(), (tweets, topic));
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let mut values = [0.0; FEATURE_COUNT];
        for (j, v) in values.iter_mut().enumerate() {
            *v = parse_cell(path, i + 1, FEATURE_NAMES[j], &r[j + 1])?;
        }
        let label = match r[FEATURE_COUNT + 1].as_str() {
            "" => None,
            "0" => Some(Label::Legitimate),
            "1" => Some(Label::Spammer),
            other => return Err(AppError::data(path, format!("row {}: label `{other}` not in {{0,1,\"\"}}", i + 1))),
        };
        let (topic_tweets, designated_topic) = aux.get(&r[0]).copied().unwrap_or((0, default_topic));
        out.push(FeatureRow {
            user_id: r[0].clone(),
            features: FeatureVector {
                values,
                designated_topic,
            },
            label,
            topic_tweets,
        });
    }
    Ok(FeatureMatrix { rows: out })
}

pub fn model_json(model: &TrainedModel) -> AppResult<String> {
    to_json_pretty(model)
}

/// Loads a model file, rejecting unknown format versions.
pub fn read_model(path: &Path) -> AppResult<TrainedModel> {
    let value: serde_json::Value = read_json(path)?;
    match value.get("model_format_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(MODEL_FORMAT_VERSION) => {}
        Some(v) => return Err(AppError::data(path, format!("unsupported model_format_version {v}"))),
        None => return Err(AppError::data(path, "missing model_format_version")),
    }
    serde_json::from_value(value).map_err(|e| AppError::data(path, e))
}

/// Reads a newsgroup tree laid out as `<root>/<group>/<document>`, one file
/// per document. Bytes that are not UTF-8 are replaced.
pub fn read_newsgroup_dir(root: &Path) -> AppResult<Vec<LabeledDocument>> {
    let mut groups: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| AppError::data(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    groups.sort();
    let mut docs = Vec::new();
    for g in groups {
        let label = g.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let mut files: Vec<PathBuf> = fs::read_dir(&g)
            .map_err(|e| AppError::data(&g, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for f in files {
            let bytes = fs::read(&f).map_err(|e| AppError::data(&f, e))?;
            docs.push(LabeledDocument {
                label: label.clone(),
                text: String::from_utf8_lossy(&bytes).into_owned(),
            });
        }
    }
    if docs.is_empty() {
        return Err(AppError::data(root, "no newsgroup documents found"));
    }
    Ok(docs)
}

pub const NEWSGROUP_TRAIN_DIR: &str = "20news-bydate-train";
pub const NEWSGROUP_TEST_DIR: &str = "20news-bydate-test";

/// Train and test documents of a "bydate" newsgroup root.
pub fn read_newsgroups(root: &Path) -> AppResult<(Vec<LabeledDocument>, Vec<LabeledDocument>)> {
    Ok((
        read_newsgroup_dir(&root.join(NEWSGROUP_TRAIN_DIR))?,
        read_newsgroup_dir(&root.join(NEWSGROUP_TEST_DIR))?,
    ))
}

/// Writes documents in the "bydate" layout, numbering files per group.
pub fn write_newsgroups(root: &Path, train: &[LabeledDocument], test: &[LabeledDocument]) -> AppResult<()> {
    for (sub, docs) in [(NEWSGROUP_TRAIN_DIR, train), (NEWSGROUP_TEST_DIR, test)] {
        let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
        for d in docs {
            let n = counters.entry(d.label.as_str()).or_default();
            *n += 1;
            write_text(&root.join(sub).join(&d.label).join(format!("{n:05}")), &d.text)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use spamlens_core::models::{train, Algorithm, Dataset, ModelSpec};

    fn matrix() -> FeatureMatrix {
        let mut v = [0.0; FEATURE_COUNT];
        for (i, x) in v.iter_mut().enumerate() {
            *x = (i as f64 + 1.0) / 3.0 - 2.0;
        }
        FeatureMatrix {
            rows: vec![
                FeatureRow {
                    user_id: "a,b".into(),
                    features: FeatureVector {
                        values: v,
                        designated_topic: UnifiedTopic::Sports,
                    },
                    label: Some(Label::Spammer),
                    topic_tweets: 4,
                },
                FeatureRow {
                    user_id: "c".into(),
                    features: FeatureVector {
                        values: [1e-300; FEATURE_COUNT],
                        designated_topic: UnifiedTopic::Sports,
                    },
                    label: None,
                    topic_tweets: 0,
                },
            ],
        }
    }

    #[test]
    fn features_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let m = matrix();
        let path = dir.path().join(FEATURES_FILE);
        write_text(&path, &features_csv(&m).unwrap()).unwrap();
        write_text(&dir.path().join(FEATURES_AUX_FILE), &features_aux_csv(&m).unwrap()).unwrap();
        assert_eq!(read_features(&path, UnifiedTopic::News).unwrap(), m);
    }

    #[test]
    fn features_header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FEATURES_FILE);
        write_text(&path, "user_id,x1\nu,1\n").unwrap();
        assert!(matches!(read_features(&path, UnifiedTopic::News), Err(AppError::Data { .. })));
    }

    #[test]
    fn bad_label_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FEATURES_FILE);
        let text = features_csv(&matrix()).unwrap().replace(",1\n", ",7\n");
        write_text(&path, &text).unwrap();
        let err = read_features(&path, UnifiedTopic::News).unwrap_err();
        assert!(err.to_string().contains("features.csv"), "{err}");
    }

    #[test]
    fn model_file_round_trip_and_version_check() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i) / 7.0, f64::from(i % 5)]).collect();
        let labels = (0..40).map(|i| u8::from(i >= 20)).collect();
        let data = Dataset::new(vec!["p".into(), "q".into()], rows, labels).unwrap();
        let model = train(&ModelSpec::new(Algorithm::Mlp, 1), &data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(MODEL_FILE);
        write_text(&path, &model_json(&model).unwrap()).unwrap();
        assert_eq!(read_model(&path).unwrap(), model);
        let bumped = model_json(&model).unwrap().replace("\"model_format_version\": 1", "\"model_format_version\": 99");
        write_text(&path, &bumped).unwrap();
        assert!(read_model(&path).is_err());
    }

    #[test]
    fn jsonl_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(USERS_FILE);
        write_text(&path, "{\"user_id\":\"u\",\"followers_count\":1,\"friends_count\":1,\"created_at\":\"2019-01-01T00:00:00Z\"}\n{oops\n").unwrap();
        let err = read_jsonl::<UserProfile>(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn newsgroup_layout_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let doc = |l: &str, t: &str| LabeledDocument {
            label: l.into(),
            text: t.into(),
        };
        let train_docs = vec![doc("rec.autos", "engine"), doc("sci.space", "orbit"), doc("rec.autos", "brakes")];
        let test_docs = vec![doc("sci.space", "launch")];
        write_newsgroups(dir.path(), &train_docs, &test_docs).unwrap();
        let (tr, te) = read_newsgroups(dir.path()).unwrap();
        assert_eq!(tr, vec![doc("rec.autos", "engine"), doc("rec.autos", "brakes"), doc("sci.space", "orbit")]);
        assert_eq!(te, test_docs);
    }
}
