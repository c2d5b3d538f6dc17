use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.8, validation: 0.1, test: 0.1 }
    }
}

impl SplitRatios {
    pub fn check(&self) -> Result<(), CorpusError> {
        let parts = [self.train, self.validation, self.test];
        let sum: f64 = parts.iter().sum();
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::BadRatios(parts));
        }
        Ok(())
    }
}

/// Disjoint partition of schema ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: BTreeSet<String>,
    pub validation: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl CorpusSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }

    pub fn part(&self, name: &str) -> Option<&BTreeSet<String>> {
        match name {
            "train" => Some(&self.train),
            "validation" => Some(&self.validation),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

fn seeded_hash(seed: u64, id: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(id.as_bytes());
    hasher.finalize().into()
}

/// Splits whole schemas into train/validation/test. Ids are ordered by a
/// seeded hash and cut at rounded ratio counts, so the result depends only
/// on the id set and the seed.
pub fn split_corpus(ids: &[String], ratios: SplitRatios, seed: u64) -> Result<CorpusSplit, CorpusError> {
    ratios.check()?;
    let unique: BTreeSet<&String> = ids.iter().collect();
    let mut ordered: Vec<(&String, [u8; 32])> = unique.into_iter().map(|id| (id, seeded_hash(seed, id))).collect();
    ordered.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let n = ordered.len();
    let n_train = ((n as f64) * ratios.train).round() as usize;
    let n_train = n_train.min(n);
    let n_val = (((n as f64) * ratios.validation).round() as usize).min(n - n_train);

    let mut split = CorpusSplit::default();
    for (i, (id, _)) in ordered.into_iter().enumerate() {
        let part = if i < n_train {
            &mut split.train
        } else if i < n_train + n_val {
            &mut split.validation
        } else {
            &mut split.test
        };
        part.insert(id.clone());
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("schema-{i}")).collect()
    }

    #[test]
    fn ten_ids_default_ratios() {
        let split = split_corpus(&ids(10), SplitRatios::default(), 42).unwrap();
        assert_eq!(split.sizes(), (8, 1, 1));
    }

    #[test]
    fn deterministic() {
        let a = split_corpus(&ids(25), SplitRatios::default(), 7).unwrap();
        let b = split_corpus(&ids(25), SplitRatios::default(), 7).unwrap();
        assert_eq!(a, b);
        let c = split_corpus(&ids(25), SplitRatios::default(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn all_train() {
        let ratios = SplitRatios { train: 1.0, validation: 0.0, test: 0.0 };
        let split = split_corpus(&ids(9), ratios, 0).unwrap();
        assert_eq!(split.sizes(), (9, 0, 0));
    }

    #[test]
    fn bad_ratios() {
        let ratios = SplitRatios { train: 0.8, validation: 0.1, test: 0.2 };
        assert!(matches!(split_corpus(&ids(3), ratios, 0), Err(CorpusError::BadRatios(_))));
        let ratios = SplitRatios { train: 1.1, validation: -0.1, test: 0.0 };
        assert!(split_corpus(&ids(3), ratios, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_exhaustive_and_order_free(
            n in 0usize..60, seed in any::<u64>(), rotate in 0usize..60,
        ) {
            let mut list = ids(n);
            let split = split_corpus(&list, SplitRatios::default(), seed).unwrap();
            let all: BTreeSet<String> = list.iter().cloned().collect();
            let union: BTreeSet<String> =
                split.train.union(&split.validation).chain(split.test.iter()).cloned().collect();
            prop_assert_eq!(union, all);
            prop_assert_eq!(split.train.len() + split.validation.len() + split.test.len(), n);
            if n > 0 {
                list.rotate_left(rotate % n);
                list.reverse();
            }
            prop_assert_eq!(split_corpus(&list, SplitRatios::default(), seed).unwrap(), split);
        }
    }
}
