use std::collections::HashMap;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::text::tokenize;
use super::Prf;

/// Maps tokens to unit vectors of a fixed dimension.
pub trait TokenEmbedder: Send + Sync {
    fn name(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed(&self, tokens: &[String]) -> Vec<Vec<f64>>;
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One axis per distinct token, assigned on first sight. Panics once more
/// distinct tokens than `capacity` have been seen.
#[derive(Debug)]
pub struct OneHotEmbedder {
    capacity: usize,
    vocabulary: Mutex<HashMap<String, usize>>,
}

impl OneHotEmbedder {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, vocabulary: Mutex::new(HashMap::new()) }
    }

    fn index(&self, token: &str) -> usize {
        let mut vocab = self.vocabulary.lock().unwrap_or_else(|p| p.into_inner());
        let next = vocab.len();
        let i = *vocab.entry(token.to_string()).or_insert(next);
        assert!(i < self.capacity, "one-hot vocabulary exceeded {} tokens", self.capacity);
        i
    }
}

impl TokenEmbedder for OneHotEmbedder {
    fn name(&self) -> String {
        format!("one-hot-{}", self.capacity)
    }

    fn dimension(&self) -> usize {
        self.capacity
    }

    fn embed(&self, tokens: &[String]) -> Vec<Vec<f64>> {
        tokens
            .iter()
            .map(|t| {
                let mut v = vec![0.0; self.capacity];
                v[self.index(t)] = 1.0;
                v
            })
            .collect()
    }
}

/// Hashed bag of padded character trigrams per token. Lexical stand-in
/// for a contextual model.
#[derive(Debug, Clone)]
pub struct TrigramEmbedder {
    pub dimension: usize,
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        Self { dimension: 512 }
    }
}

impl TokenEmbedder for TrigramEmbedder {
    fn name(&self) -> String {
        format!("trigram-hash-{}", self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, tokens: &[String]) -> Vec<Vec<f64>> {
        tokens
            .iter()
            .map(|t| {
                let mut v = vec![0.0; self.dimension];
                let padded: Vec<char> = format!("<{t}>").chars().collect();
                for gram in padded.windows(3) {
                    let gram: String = gram.iter().collect();
                    let digest = Sha256::digest(gram.as_bytes());
                    let bucket = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
                    v[(bucket % self.dimension as u64) as usize] += 1.0;
                }
                normalize(v)
            })
            .collect()
    }
}

fn greedy(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    let total: f64 = from.iter().map(|a| to.iter().map(|b| dot(a, b)).fold(f64::NEG_INFINITY, f64::max)).sum();
    (total / from.len() as f64).clamp(0.0, 1.0)
}

/// Greedy max-cosine matching without IDF weighting or rescaling.
pub fn embedding_f1(candidate: &str, reference: &str, embedder: &dyn TokenEmbedder) -> Prf {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    if c.is_empty() || r.is_empty() {
        log::warn!("embedding F1 of an empty side is zero");
        return Prf::default();
    }
    let (ce, re) = (embedder.embed(&c), embedder.embed(&r));
    Prf::new(greedy(&ce, &re), greedy(&re, &ce))
}
