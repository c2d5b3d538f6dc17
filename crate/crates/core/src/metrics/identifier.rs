use std::collections::BTreeMap;

use super::MetricError;

/// Similarity of two identifiers in [0, 1]; symmetric, 1 on equal input.
pub trait IdentifierScorer: Send + Sync {
    fn name(&self) -> String;
    fn similarity(&self, a: &str, b: &str) -> f64;
}

/// Lowercased subtokens split at camel-case boundaries, digits runs and
/// `_`, `-`, `:`, `.`, `/`, whitespace.
pub fn split_subtokens(identifier: &str) -> Vec<String> {
    let mut out = Vec::new();
    for part in identifier.split(|c: char| !c.is_alphanumeric()).filter(|p| !p.is_empty()) {
        let chars: Vec<char> = part.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower)
                || (prev.is_ascii_digit() != cur.is_ascii_digit());
            if boundary {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    out
}

/// Cosine similarity of character-trigram counts over the space-joined,
/// space-padded subtoken sequence.
#[derive(Debug, Clone, Default)]
pub struct TrigramIdentifierScorer;

fn trigrams(identifier: &str) -> BTreeMap<String, f64> {
    let joined: Vec<char> = format!(" {} ", split_subtokens(identifier).join(" ")).chars().collect();
    let mut counts = BTreeMap::new();
    for gram in joined.windows(3) {
        *counts.entry(gram.iter().collect()).or_insert(0.0) += 1.0;
    }
    counts
}

impl IdentifierScorer for TrigramIdentifierScorer {
    fn name(&self) -> String {
        "subtoken-trigram-cosine".into()
    }

    fn similarity(&self, a: &str, b: &str) -> f64 {
        let (ta, tb) = (trigrams(a), trigrams(b));
        let dot: f64 = ta.iter().map(|(g, x)| x * tb.get(g).copied().unwrap_or(0.0)).sum();
        let norm = |t: &BTreeMap<String, f64>| t.values().map(|x| x * x).sum::<f64>().sqrt();
        let denom = norm(&ta) * norm(&tb);
        if denom == 0.0 {
            return 0.0;
        }
        (dot / denom).clamp(0.0, 1.0)
    }
}

pub fn identifier_similarity(a: &str, b: &str, scorer: &dyn IdentifierScorer) -> Result<f64, MetricError> {
    if a.trim().is_empty() || b.trim().is_empty() {
        return Err(MetricError::EmptyIdentifier);
    }
    Ok(scorer.similarity(a, b))
}
