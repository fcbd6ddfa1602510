use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight high-level topics shared by both taggers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnifiedTopic {
    TechnologyAndComputing,
    BusinessAndIndustrial,
    AutomotiveAndVehicles,
    Sports,
    Science,
    News,
    LawGovtAndPolitics,
    ReligionAndSpirituality,
}

impl UnifiedTopic {
    pub const ALL: [UnifiedTopic; 8] = [
        UnifiedTopic::TechnologyAndComputing,
        UnifiedTopic::BusinessAndIndustrial,
        UnifiedTopic::AutomotiveAndVehicles,
        UnifiedTopic::Sports,
        UnifiedTopic::Science,
        UnifiedTopic::News,
        UnifiedTopic::LawGovtAndPolitics,
        UnifiedTopic::ReligionAndSpirituality,
    ];

    /// Taxonomy size, the `n` of the inverse topic frequency.
    pub const COUNT: usize = 8;

    pub fn as_str(self) -> &'static str {
        match self {
            UnifiedTopic::TechnologyAndComputing => "technology_and_computing",
            UnifiedTopic::BusinessAndIndustrial => "business_and_industrial",
            UnifiedTopic::AutomotiveAndVehicles => "automotive_and_vehicles",
            UnifiedTopic::Sports => "sports",
            UnifiedTopic::Science => "science",
            UnifiedTopic::News => "news",
            UnifiedTopic::LawGovtAndPolitics => "law_govt_and_politics",
            UnifiedTopic::ReligionAndSpirituality => "religion_and_spirituality",
        }
    }

    /// Category name as an external NLU service spells it.
    pub fn display_name(self) -> &'static str {
        match self {
            UnifiedTopic::TechnologyAndComputing => "technology and computing",
            UnifiedTopic::BusinessAndIndustrial => "business and industrial",
            UnifiedTopic::AutomotiveAndVehicles => "automotive and vehicles",
            UnifiedTopic::Sports => "sports",
            UnifiedTopic::Science => "science",
            UnifiedTopic::News => "news",
            UnifiedTopic::LawGovtAndPolitics => "law, govt and politics",
            UnifiedTopic::ReligionAndSpirituality => "religion and spirituality",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for UnifiedTopic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnifiedTopic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = normalize_category(s);
        UnifiedTopic::ALL
            .into_iter()
            .find(|t| t.as_str() == key)
            .ok_or_else(|| Error::UnknownName {
                kind: "topic",
                value: s.to_string(),
            })
    }
}

/// The 20 Newsgroups labels, sorted.
pub const NEWSGROUPS: [&str; 20] = [
    "alt.atheism",
    "comp.graphics",
    "comp.os.ms-windows.misc",
    "comp.sys.ibm.pc.hardware",
    "comp.sys.mac.hardware",
    "comp.windows.x",
    "misc.forsale",
    "rec.autos",
    "rec.motorcycles",
    "rec.sport.baseball",
    "rec.sport.hockey",
    "sci.crypt",
    "sci.electronics",
    "sci.med",
    "sci.space",
    "soc.religion.christian",
    "talk.politics.guns",
    "talk.politics.mideast",
    "talk.politics.misc",
    "talk.religion.misc",
];

const DEFAULT_NEWSGROUP_MAP: [(&str, UnifiedTopic); 20] = {
    use UnifiedTopic::*;
    [
        ("comp.graphics", TechnologyAndComputing),
        ("comp.os.ms-windows.misc", TechnologyAndComputing),
        ("comp.sys.ibm.pc.hardware", TechnologyAndComputing),
        ("comp.sys.mac.hardware", TechnologyAndComputing),
        ("comp.windows.x", TechnologyAndComputing),
        ("sci.electronics", TechnologyAndComputing),
        ("misc.forsale", BusinessAndIndustrial),
        ("rec.autos", AutomotiveAndVehicles),
        ("rec.motorcycles", AutomotiveAndVehicles),
        ("rec.sport.baseball", Sports),
        ("rec.sport.hockey", Sports),
        ("sci.crypt", Science),
        ("sci.med", Science),
        ("sci.space", Science),
        ("talk.politics.guns", News),
        ("talk.politics.mideast", News),
        ("talk.politics.misc", LawGovtAndPolitics),
        ("talk.religion.misc", ReligionAndSpirituality),
        ("alt.atheism", ReligionAndSpirituality),
        ("soc.religion.christian", ReligionAndSpirituality),
    ]
};

/// Which tagger produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicSource {
    Newsgroup,
    External,
}

impl FromStr for TopicSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "newsgroup" => Ok(TopicSource::Newsgroup),
            "external" => Ok(TopicSource::External),
            _ => Err(Error::UnknownName {
                kind: "topic source",
                value: s.to_string(),
            }),
        }
    }
}

/// Lowercases and collapses every non-alphanumeric run to `_`, so
/// "law, govt and politics" and "law_govt_and_politics" coincide.
pub fn normalize_category(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut gap = false;
    for c in s.trim().chars() {
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push('_');
            }
            gap = false;
            out.extend(c.to_lowercase());
        } else {
            gap = true;
        }
    }
    out
}

fn top_level_segment(path: &str) -> &str {
    path.trim().trim_start_matches('/').split('/').next().unwrap_or("")
}

/// Maps newsgroup labels and external category paths onto [`UnifiedTopic`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyMapping {
    newsgroup: BTreeMap<String, UnifiedTopic>,
    /// Keyed by the normalized top-level category segment.
    external: BTreeMap<String, UnifiedTopic>,
}

impl Default for TaxonomyMapping {
    fn default() -> Self {
        TaxonomyMapping {
            newsgroup: DEFAULT_NEWSGROUP_MAP
                .iter()
                .map(|(g, t)| ((*g).to_string(), *t))
                .collect(),
            external: UnifiedTopic::ALL
                .iter()
                .map(|t| (normalize_category(t.display_name()), *t))
                .collect(),
        }
    }
}

impl TaxonomyMapping {
    /// Applies `source<TAB>label<TAB>unified_topic` overrides on top of the
    /// default mapping. Blank lines and `#` comments are skipped.
    pub fn with_overrides_tsv(mut self, tsv: &str) -> Result<Self> {
        for (i, line) in tsv.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let malformed = |message: String| Error::MalformedLine { line: i + 1, message };
            if fields.len() != 3 {
                return Err(malformed(alloc::format!("expected 3 tab-separated fields, got {}", fields.len())));
            }
            let source: TopicSource = fields[0].parse().map_err(|e: Error| malformed(e.to_string()))?;
            let topic: UnifiedTopic = fields[2].parse().map_err(|e: Error| malformed(e.to_string()))?;
            match source {
                TopicSource::Newsgroup => {
                    self.newsgroup.insert(fields[1].trim().to_string(), topic);
                }
                TopicSource::External => {
                    self.external
                        .insert(normalize_category(top_level_segment(fields[1])), topic);
                }
            }
        }
        Ok(self)
    }

    pub fn map(&self, source: TopicSource, label: &str) -> Option<UnifiedTopic> {
        match source {
            TopicSource::Newsgroup => self.newsgroup.get(label.trim()).copied(),
            TopicSource::External => self
                .external
                .get(&normalize_category(top_level_segment(label)))
                .copied(),
        }
    }

    pub fn newsgroups(&self) -> &BTreeMap<String, UnifiedTopic> {
        &self.newsgroup
    }

    /// Newsgroups mapped onto `topic`, sorted.
    pub fn newsgroups_for(&self, topic: UnifiedTopic) -> Vec<&str> {
        self.newsgroup
            .iter()
            .filter(|(_, t)| **t == topic)
            .map(|(g, _)| g.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_map() {
        let m = TaxonomyMapping::default();
        assert_eq!(m.map(TopicSource::Newsgroup, "rec.autos"), Some(UnifiedTopic::AutomotiveAndVehicles));
        assert_eq!(
            m.map(TopicSource::Newsgroup, "sci.electronics"),
            Some(UnifiedTopic::TechnologyAndComputing)
        );
        assert_eq!(m.map(TopicSource::External, "/health and fitness/disease/epidemic"), None);
        assert_eq!(m.map(TopicSource::External, "/sports/hockey"), Some(UnifiedTopic::Sports));
        assert_eq!(
            m.map(TopicSource::External, "/law, govt and politics/legal issues"),
            Some(UnifiedTopic::LawGovtAndPolitics)
        );
        assert_eq!(m.map(TopicSource::Newsgroup, "comp.unknown"), None);
    }

    #[test]
    fn every_newsgroup_maps_once() {
        let m = TaxonomyMapping::default();
        assert_eq!(m.newsgroups().len(), 20);
        for g in NEWSGROUPS {
            assert!(m.map(TopicSource::Newsgroup, g).is_some(), "{g}");
        }
        let total: usize = UnifiedTopic::ALL.iter().map(|t| m.newsgroups_for(*t).len()).sum();
        assert_eq!(total, 20);
        for t in UnifiedTopic::ALL {
            assert!(!m.newsgroups_for(t).is_empty());
            assert_eq!(m.map(TopicSource::External, &alloc::format!("/{}", t.display_name())), Some(t));
        }
    }

    #[test]
    fn overrides() {
        let m = TaxonomyMapping::default()
            .with_overrides_tsv("# comment\nnewsgroup\tsci.med\tnews\nexternal\t/health and fitness\tscience\n")
            .unwrap();
        assert_eq!(m.map(TopicSource::Newsgroup, "sci.med"), Some(UnifiedTopic::News));
        assert_eq!(m.map(TopicSource::External, "/health and fitness/disease"), Some(UnifiedTopic::Science));
        let err = TaxonomyMapping::default().with_overrides_tsv("newsgroup\tx\tnowhere").unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn topic_names_round_trip() {
        for t in UnifiedTopic::ALL {
            assert_eq!(t.as_str().parse::<UnifiedTopic>().unwrap(), t);
            assert_eq!(t.display_name().parse::<UnifiedTopic>().unwrap(), t);
        }
        assert!("bogus".parse::<UnifiedTopic>().is_err());
    }
}
