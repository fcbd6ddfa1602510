//! Newsgroup topic classification, the unified taxonomy and the two-tagger
//! agreement rule.

mod agreement;
mod classifier;
mod taxonomy;

pub use agreement::{
    agree_label, tag_corpus, CategoryScore, ExternalAnalysis, ExternalTagger, MatchingStats,
    OfflineTagger, Tagging, TopicAssignment, TopicMatch,
};
pub use classifier::{
    train_topic_classifier, LabeledDocument, LearningSchedule, TopicAlgorithm, TopicHyperparams,
    TopicModel, TopicPrediction,
};
pub use taxonomy::{normalize_category, TaxonomyMapping, TopicSource, UnifiedTopic, NEWSGROUPS};
