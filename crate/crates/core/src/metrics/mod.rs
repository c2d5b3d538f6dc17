//! Text, identifier and classification metrics, and the evaluation run
//! that applies them to held-out schemas.

mod embed;
mod eval;
mod identifier;
mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{embedding_f1, OneHotEmbedder, TokenEmbedder, TrigramEmbedder};
pub use eval::{evaluate_run, EvalOptions, MetricReport, MetricRow, TaskSummary, TestSchema};
pub use identifier::{identifier_similarity, split_subtokens, IdentifierScorer, TrigramIdentifierScorer};
pub use text::{bleu, modified_precision, rouge_l, tokenize};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("predictions and labels differ in length ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("nothing to score")]
    Empty,
    #[error("identifier must not be empty")]
    EmptyIdentifier,
    #[error("schema {0} is not in the test split")]
    NotInTestSplit(String),
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { precision, recall, f1 }
    }
}

/// Fraction of predictions equal to their label; `None` (abstention)
/// never matches.
pub fn selection_accuracy(predictions: &[Option<bool>], labels: &[bool]) -> Result<f64, MetricError> {
    if predictions.len() != labels.len() {
        return Err(MetricError::LengthMismatch { predictions: predictions.len(), labels: labels.len() });
    }
    if labels.is_empty() {
        return Err(MetricError::Empty);
    }
    let correct = predictions.iter().zip(labels).filter(|(p, l)| **p == Some(**l)).count();
    Ok(correct as f64 / labels.len() as f64)
}

/// More frequent label; ties go to `true`.
pub fn majority_label(labels: &[bool]) -> bool {
    let positives = labels.iter().filter(|l| **l).count();
    positives * 2 >= labels.len()
}

/// Accuracy with each abstention replaced by the majority label.
pub fn abstention_free_accuracy(predictions: &[Option<bool>], labels: &[bool]) -> Result<f64, MetricError> {
    let fallback = majority_label(labels);
    let filled: Vec<Option<bool>> = predictions.iter().map(|p| Some(p.unwrap_or(fallback))).collect();
    selection_accuracy(&filled, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_counting() {
        assert_eq!(selection_accuracy(&[Some(true), Some(false)], &[true, false]).unwrap(), 1.0);
        let acc = selection_accuracy(&[Some(true), Some(false), None], &[true, true, true]).unwrap();
        assert!((acc - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(selection_accuracy(&[], &[]), Err(MetricError::Empty)));
        assert!(matches!(selection_accuracy(&[None], &[]), Err(MetricError::LengthMismatch { .. })));
    }

    #[test]
    fn abstention_free_uses_majority() {
        let labels = [true, false, false, false];
        assert_eq!(abstention_free_accuracy(&[None; 4], &labels).unwrap(), 0.75);
        assert!(majority_label(&[true, false]));
    }
}
