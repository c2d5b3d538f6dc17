use std::collections::HashMap;

use super::Prf;

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[b.len()]
}

/// LCS-based precision/recall/F1 over shared-tokenizer tokens.
pub fn rouge_l(candidate: &str, reference: &str) -> Prf {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    if c.is_empty() || r.is_empty() {
        return Prf::default();
    }
    let lcs = lcs_len(&c, &r) as f64;
    Prf::new(lcs / c.len() as f64, lcs / r.len() as f64)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and the candidate's n-gram count.
pub fn modified_precision(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let matches = cand.iter().map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0))).sum();
    (matches, (candidate.len() + 1).saturating_sub(n.max(1)))
}

/// Sentence BLEU with floor smoothing and brevity penalty; the n-gram
/// order is capped at the candidate length.
pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    if c.is_empty() || r.is_empty() || max_n == 0 {
        return 0.0;
    }
    let order = max_n.min(c.len());
    let mut log_sum = 0.0;
    for n in 1..=order {
        let (matches, total) = modified_precision(&c, &r, n);
        let p = if matches == 0 { 1.0 / (2.0 * total as f64) } else { matches as f64 / total as f64 };
        log_sum += p.ln();
    }
    let penalty = if c.len() < r.len() { (1.0 - r.len() as f64 / c.len() as f64).exp() } else { 1.0 };
    (penalty * (log_sum / order as f64).exp()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenizer() {
        assert_eq!(toks("A list of Azure-Webjobs!"), ["a", "list", "of", "azure", "webjobs"]);
        assert!(toks(" ,; ").is_empty());
    }

    #[test]
    fn rouge_examples() {
        let s = rouge_l("the cat", "the cat sat");
        assert!((s.precision - 1.0).abs() < 1e-12);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.f1 - 0.8).abs() < 1e-12);
        assert_eq!(rouge_l("a b c", "a b c").f1, 1.0);
        assert_eq!(rouge_l("abc", "xyz").f1, 0.0);
        assert_eq!(rouge_l("", "x"), Prf::default());
    }

    #[test]
    fn bleu_examples() {
        assert!((bleu("the quick brown fox jumps", "the quick brown fox jumps", 4) - 1.0).abs() < 1e-12);
        assert!((bleu("short", "short", 4) - 1.0).abs() < 1e-12);
        assert_eq!(modified_precision(&toks("the the the"), &toks("the cat"), 1), (1, 3));
        assert_eq!(bleu("", "anything", 4), 0.0);
        // Unigram-only: p1 = 1/3, no brevity penalty (3 >= 2).
        assert!((bleu("the the the", "the cat", 1) - 1.0 / 3.0).abs() < 1e-12);
        // Brevity: c=1, r=2, p1=1 -> exp(1-2).
        assert!((bleu("the", "the cat", 4) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn bleu_smoothing_hand_computed() {
        // c = "a b c d", r = "a b x d": p1 = 3/4, p2 = 1/3, p3 = 0 -> 1/(2*2), p4 = 0 -> 1/(2*1)
        let expected = (0.75f64.ln() + (1.0f64 / 3.0).ln() + 0.25f64.ln() + 0.5f64.ln()) / 4.0;
        assert!((bleu("a b c d", "a b x d", 4) - expected.exp()).abs() < 1e-12);
    }
}
