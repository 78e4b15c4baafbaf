//! Semantic similarity of tool parameters and outputs.
//!
//! STS is the cosine between whole-text embeddings; the BERTScore-style
//! triple greedily matches token embeddings (no IDF weighting). Scores are
//! relative to the [`EmbeddingProvider`] used, so reports carry its name.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::fnv1a;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextMetricError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("embedding provider `{provider}` failed: {message}")]
    Provider { provider: String, message: String },
}

/// Maps text to unit-norm vectors of a fixed dimension. The same text must
/// always map to the same vector.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, TextMetricError>;

    fn embed_many(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, TextMetricError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Offline embedder: character n-grams (n = 1..=3) of the text, padded with
/// boundary markers, hashed into `dim` buckets and L2-normalized.
#[derive(Debug, Clone)]
pub struct HashedNgramEmbedder {
    dim: usize,
}

impl HashedNgramEmbedder {
    pub const NAME: &'static str = "hashed-char-ngram-v1";

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        HashedNgramEmbedder { dim }
    }
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        Self::new(256)
    }
}

impl EmbeddingProvider for HashedNgramEmbedder {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, TextMetricError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(TextMetricError::InvalidInput("cannot embed empty text".into()));
        }
        let chars: Vec<char> = std::iter::once('<')
            .chain(trimmed.to_lowercase().chars())
            .chain(std::iter::once('>'))
            .collect();
        let mut v = vec![0.0; self.dim];
        let mut buf = String::new();
        for n in 1..=3 {
            for w in chars.windows(n) {
                buf.clear();
                buf.push(char::from(b'0' + n as u8));
                buf.extend(w);
                v[(fnv1a(buf.as_bytes()) % self.dim as u64) as usize] += 1.0;
            }
        }
        normalize(&mut v);
        Ok(v)
    }
}

pub(crate) fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Splits into maximal alphanumeric runs; every other non-space character
/// is a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl BertScore {
    fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        BertScore { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalScores {
    pub sts: f64,
    pub bert_p: f64,
    pub bert_r: f64,
    pub bert_f1: f64,
}

/// Cosine of the whole-text embeddings, clamped to `[0, 1]`.
pub fn sts(a: &str, b: &str, provider: &dyn EmbeddingProvider) -> Result<f64, TextMetricError> {
    if a.trim().is_empty() || b.trim().is_empty() {
        return Err(TextMetricError::InvalidInput("sts needs two non-empty texts".into()));
    }
    if a == b {
        return Ok(1.0);
    }
    let va = provider.embed(a)?;
    let vb = provider.embed(b)?;
    Ok(dot(&va, &vb).clamp(0.0, 1.0))
}

/// Greedy token matching: precision averages, over candidate tokens, the
/// best cosine against any reference token; recall is the mirror image.
pub fn bertscore(candidate: &str, reference: &str, provider: &dyn EmbeddingProvider) -> Result<BertScore, TextMetricError> {
    let (ct, rt) = (tokenize(candidate), tokenize(reference));
    if ct.is_empty() || rt.is_empty() {
        return Err(TextMetricError::InvalidInput("bertscore needs at least one token on each side".into()));
    }
    let cv = provider.embed_many(&ct.iter().map(String::as_str).collect::<Vec<_>>())?;
    let rv = provider.embed_many(&rt.iter().map(String::as_str).collect::<Vec<_>>())?;
    let sim: Vec<Vec<f64>> = ct
        .iter()
        .zip(&cv)
        .map(|(c, a)| {
            rt.iter()
                .zip(&rv)
                .map(|(r, b)| if c == r { 1.0 } else { dot(a, b).clamp(0.0, 1.0) })
                .collect()
        })
        .collect();
    let precision = sim.iter().map(|row| row.iter().copied().fold(0.0, f64::max)).sum::<f64>() / ct.len() as f64;
    let recall = (0..rt.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(0.0, f64::max))
        .sum::<f64>()
        / rt.len() as f64;
    Ok(BertScore::from_pr(precision, recall))
}

pub fn local_scores(candidate: &str, reference: &str, provider: &dyn EmbeddingProvider) -> Result<LocalScores, TextMetricError> {
    let b = bertscore(candidate, reference, provider)?;
    Ok(LocalScores {
        sts: sts(candidate, reference, provider)?,
        bert_p: b.precision,
        bert_r: b.recall,
        bert_f1: b.f1,
    })
}

/// Embedding service reached over HTTP: `POST {"texts": [...]}` answered
/// by `{"vectors": [[...], ...]}`. Vectors are L2-normalized on receipt.
#[cfg(feature = "http")]
pub mod remote {
    use std::time::Duration;

    use serde::{Deserialize, Serialize};

    use super::{normalize, EmbeddingProvider, TextMetricError};

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct RemoteEmbedderConfig {
        pub endpoint: String,
        #[serde(default)]
        pub api_key: Option<String>,
        pub dim: usize,
        #[serde(default = "default_timeout")]
        pub timeout_secs: u64,
    }

    fn default_timeout() -> u64 {
        30
    }

    pub struct RemoteEmbedder {
        cfg: RemoteEmbedderConfig,
        agent: ureq::Agent,
    }

    #[derive(Serialize)]
    struct Request<'a> {
        texts: &'a [&'a str],
    }

    #[derive(Deserialize)]
    struct Response {
        vectors: Vec<Vec<f64>>,
    }

    impl RemoteEmbedder {
        pub fn new(cfg: RemoteEmbedderConfig) -> Self {
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
                .build()
                .into();
            RemoteEmbedder { cfg, agent }
        }

        fn fail(&self, message: impl Into<String>) -> TextMetricError {
            TextMetricError::Provider { provider: self.cfg.endpoint.clone(), message: message.into() }
        }
    }

    impl EmbeddingProvider for RemoteEmbedder {
        fn name(&self) -> &str {
            &self.cfg.endpoint
        }

        fn dim(&self) -> usize {
            self.cfg.dim
        }

        fn embed(&self, text: &str) -> Result<Vec<f64>, TextMetricError> {
            Ok(self.embed_many(&[text])?.remove(0))
        }

        fn embed_many(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, TextMetricError> {
            let mut req = self.agent.post(&self.cfg.endpoint);
            if let Some(key) = &self.cfg.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = req.send_json(Request { texts }).map_err(|e| self.fail(e.to_string()))?;
            let body: Response = resp.body_mut().read_json().map_err(|e| self.fail(e.to_string()))?;
            if body.vectors.len() != texts.len() {
                return Err(self.fail(format!("expected {} vectors, got {}", texts.len(), body.vectors.len())));
            }
            body.vectors
                .into_iter()
                .map(|mut v| {
                    if v.len() != self.cfg.dim {
                        return Err(self.fail(format!("expected dimension {}, got {}", self.cfg.dim, v.len())));
                    }
                    if !normalize(&mut v) {
                        return Err(self.fail("zero or non-finite vector"));
                    }
                    Ok(v)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One-hot per distinct token; distinct tokens are orthogonal.
    struct OneHot;

    impl EmbeddingProvider for OneHot {
        fn name(&self) -> &str {
            "one-hot"
        }
        fn dim(&self) -> usize {
            64
        }
        fn embed(&self, text: &str) -> Result<Vec<f64>, TextMetricError> {
            let mut v = vec![0.0; 64];
            v[(fnv1a(text.as_bytes()) % 64) as usize] = 1.0;
            Ok(v)
        }
    }

    #[test]
    fn bundled_provider_is_unit_norm_and_deterministic() {
        let p = HashedNgramEmbedder::default();
        let a = p.embed("solve the heat equation").unwrap();
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(a, p.embed("solve the heat equation").unwrap());
        assert!(p.embed("   ").is_err());
    }

    #[test]
    fn tokenizer_splits_punctuation() {
        assert_eq!(tokenize("alpha: 1.0, domain:1"), vec!["alpha", ":", "1", ".", "0", ",", "domain", ":", "1"]);
        assert!(tokenize("  ").is_empty());
    }

    #[test]
    fn identical_texts() {
        let p = HashedNgramEmbedder::default();
        assert_eq!(sts("domain:1 interval [0, 1]", "domain:1 interval [0, 1]", &p).unwrap(), 1.0);
        let b = bertscore("heat alpha 1.0", "heat alpha 1.0", &p).unwrap();
        assert_eq!(b, BertScore { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn sts_matches_direct_dot_product() {
        let p = HashedNgramEmbedder::default();
        let (a, b) = ("interval from 0 to 1", "rectangle from 0 to 2");
        let (va, vb) = (p.embed(a).unwrap(), p.embed(b).unwrap());
        let mut oracle = 0.0;
        for i in 0..va.len() {
            oracle += va[i] * vb[i];
        }
        assert!((sts(a, b, &p).unwrap() - oracle).abs() < 1e-15);
        assert_eq!(sts(a, b, &p).unwrap(), sts(a, b, &p).unwrap());
    }

    #[test]
    fn orthogonal_tokens_score_zero() {
        let b = bertscore("alpha beta", "gamma", &OneHot).unwrap();
        assert_eq!(b, BertScore { precision: 0.0, recall: 0.0, f1: 0.0 });
    }

    #[test]
    fn three_by_two_matches_exhaustive_matrix() {
        let p = HashedNgramEmbedder::default();
        let cand = ["heat", "equation", "solver"];
        let refs = ["heat", "solve"];
        let mut m = [[0.0; 2]; 3];
        for i in 0..3 {
            for j in 0..2 {
                let (a, b) = (p.embed(cand[i]).unwrap(), p.embed(refs[j]).unwrap());
                m[i][j] = if cand[i] == refs[j] { 1.0 } else { a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>().max(0.0) };
            }
        }
        let prec = (0..3).map(|i| m[i][0].max(m[i][1])).sum::<f64>() / 3.0;
        let rec = (0..2).map(|j| m[0][j].max(m[1][j]).max(m[2][j])).sum::<f64>() / 2.0;
        let got = bertscore("heat equation solver", "heat solve", &p).unwrap();
        assert!((got.precision - prec).abs() < 1e-12);
        assert!((got.recall - rec).abs() < 1e-12);
        assert!((got.f1 - 2.0 * prec * rec / (prec + rec)).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let p = HashedNgramEmbedder::default();
        assert!(matches!(sts("", "x", &p), Err(TextMetricError::InvalidInput(_))));
        assert!(matches!(bertscore("x", "   ", &p), Err(TextMetricError::InvalidInput(_))));
    }

    #[test]
    fn reference_order_does_not_change_precision() {
        let p = HashedNgramEmbedder::default();
        let a = bertscore("nx 101 nt 200", "nt 200 scheme implicit nx 101", &p).unwrap();
        let b = bertscore("nx 101 nt 200", "implicit scheme 101 nx 200 nt", &p).unwrap();
        assert!((a.precision - b.precision).abs() < 1e-12);
    }
}
