//! Published per-feature values for three spammer accounts, used as a
//! ranking and formula fixture.

use spamlens_core::corpus::Label;
use spamlens_core::features::{FeatureRow, FeatureVector, FEATURE_COUNT};
use spamlens_core::topics::UnifiedTopic;

/// `SPAMMERS[j][i]` is feature x(i+1) of spammer j+1.
pub const SPAMMERS: [[f64; FEATURE_COUNT]; 3] = [
    [
        18861.0, 538.0, 101.0, 34.0, 21.0, 5.0, 0.699, 16.0, 66.0, 45.0, 6.947, -1.013, 910.0, 253.0, 0.073, 335.0,
        201.0, 118.0,
    ],
    [
        12767.0, 766.0, 62.0, 21.0, 20.0, 3.0, 0.47, 11.0, 128.0, 95.0, 11.821, -11.53, 952.0, 767.0, 0.013, 133.0,
        97.0, 43.0,
    ],
    [
        19914.0, 238.0, 212.0, 83.0, 56.0, 8.0, 0.0, 42.0, 7.0, 250.0, 5.76, -45.52, 581.0, 417.0, 0.028, 720.0,
        408.0, 304.0,
    ],
];

pub fn spammer_id(j: usize) -> String {
    format!("fixture_spammer{}", j + 1)
}

pub fn spammer_rows() -> Vec<FeatureRow> {
    SPAMMERS
        .iter()
        .enumerate()
        .map(|(j, values)| FeatureRow {
            user_id: spammer_id(j),
            features: FeatureVector {
                values: *values,
                designated_topic: UnifiedTopic::TechnologyAndComputing,
            },
            label: Some(Label::Spammer),
            topic_tweets: 0,
        })
        .collect()
}
