//! Client for an external natural-language-understanding service that
//! classifies text into category paths and scores its sentiment.
//!
//! Request: `POST <url>` with `{"text": "..."}`.
//! Response: `{"categories": [{"label": "/a/b", "score": 0.9}], "sentiment": {"score": -0.2}}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use spamlens_core::error::{Error, Result};
use spamlens_core::sentiment::SentimentScorer;
use spamlens_core::topics::{CategoryScore, ExternalAnalysis, ExternalTagger};

/// Environment variable holding the service URL.
pub const NLU_URL_ENV: &str = "SPAMLENS_NLU_URL";

#[derive(Serialize)]
struct Request<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct SentimentBody {
    score: f64,
}

#[derive(Deserialize)]
struct ResponseBody {
    #[serde(default)]
    categories: Vec<CategoryScore>,
    #[serde(default)]
    sentiment: Option<SentimentBody>,
}

/// Blocking HTTP client. `ureq` agents are safe to share across threads, so
/// concurrent stages may call it directly.
pub struct HttpNlu {
    url: String,
    agent: ureq::Agent,
}

impl HttpNlu {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).build();
        HttpNlu {
            url: url.into(),
            agent: config.into(),
        }
    }

    /// A client for the URL in `SPAMLENS_NLU_URL`, if set and non-empty.
    pub fn from_env(timeout: Duration) -> Option<Self> {
        std::env::var(NLU_URL_ENV)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .map(|u| HttpNlu::new(u.trim(), timeout))
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl ExternalTagger for HttpNlu {
    fn analyze(&self, text: &str) -> Result<ExternalAnalysis> {
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(Request { text })
            .map_err(|e| Error::Tagger(e.to_string()))?;
        let body: ResponseBody = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Tagger(e.to_string()))?;
        if body.categories.iter().any(|c| !c.score.is_finite()) {
            return Err(Error::Tagger("non-finite category score".into()));
        }
        Ok(ExternalAnalysis {
            categories: body.categories,
            sentiment: body.sentiment.map(|s| s.score),
        })
    }
}

impl SentimentScorer for HttpNlu {
    fn score(&self, text: &str) -> Result<f64> {
        match self.analyze(text)?.sentiment {
            Some(s) if s.is_finite() => Ok(s.clamp(-1.0, 1.0)),
            _ => Err(Error::Tagger("response carries no sentiment score".into())),
        }
    }
}
