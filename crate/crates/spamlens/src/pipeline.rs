//! Stage functions shared by the command line and the acceptance suite.

use std::collections::BTreeMap;

use spamlens_core::corpus::Corpus;
use spamlens_core::error::Result;
use spamlens_core::features::{build_feature_matrix, score_replies, FeatureMatrix, FeatureOptions};
use spamlens_core::sentiment::SentimentScorer;
use spamlens_core::synthgen::{generate, pseudo_newsgroups, SynthConfig, SynthOutput};
use spamlens_core::topics::{
    tag_corpus, train_topic_classifier, ExternalTagger, OfflineTagger, Tagging, TaxonomyMapping, TopicAlgorithm,
    TopicHyperparams, TopicModel,
};

/// Documents per newsgroup in the built-in pseudo-newsgroup corpus.
pub const PSEUDO_TRAIN_PER_GROUP: usize = 60;
pub const PSEUDO_TEST_PER_GROUP: usize = 20;

/// The newsgroup classifier used when no trained model is supplied: SGD
/// softmax on the built-in pseudo-newsgroup corpus.
pub fn default_topic_model(seed: u64) -> Result<TopicModel> {
    let (train, _) = pseudo_newsgroups(seed, PSEUDO_TRAIN_PER_GROUP, PSEUDO_TEST_PER_GROUP);
    let hp = TopicHyperparams {
        seed,
        ..TopicHyperparams::default()
    };
    train_topic_classifier(&train, TopicAlgorithm::SgdSoftmax, &hp)
}

/// Tags a corpus and turns it into the feature matrix.
pub fn featurize(
    corpus: &Corpus,
    model: &TopicModel,
    tagger: &dyn ExternalTagger,
    scorer: &dyn SentimentScorer,
    mapping: &TaxonomyMapping,
    options: &FeatureOptions,
) -> Result<(Tagging, FeatureMatrix)> {
    let tagging = tag_corpus(corpus, model, tagger, mapping, 0.0);
    let scores: BTreeMap<String, f64> = score_replies(corpus, scorer)?;
    let matrix = build_feature_matrix(corpus, &tagging.assignments, &scores, options)?;
    Ok((tagging, matrix))
}

/// Generates a synthetic population and runs it through tagging and feature
/// extraction with the offline tagger and the bundled lexicon.
pub fn synthetic_features(config: &SynthConfig) -> Result<(SynthOutput, FeatureMatrix)> {
    let output = generate(config)?;
    let corpus = output.corpus()?;
    let model = default_topic_model(config.seed)?;
    let mapping = TaxonomyMapping::default();
    let tagger = OfflineTagger {
        model: &model,
        mapping: &mapping,
    };
    let lexicon = spamlens_core::sentiment::SentimentLexicon::default();
    let options = FeatureOptions {
        designated_topic: config.designated_topic,
        ..FeatureOptions::default()
    };
    let (_, matrix) = featurize(&corpus, &model, &tagger, &lexicon, &mapping, &options)?;
    Ok((output, matrix))
}
