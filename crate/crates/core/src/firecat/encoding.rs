use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Source of the prior `P` blended into each ordered statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// Mean label of all rows earlier in the permutation (0 for the first).
    /// Never reads the row's own label.
    Prefix,
    Fixed(f64),
}

/// Per-category smoothed label means for inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingTable {
    /// Full-data prior; also the value for unseen categories.
    pub prior: f64,
    pub prior_weight: f64,
    pub permutation_seed: u64,
    pub stats: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, usize>,
}

impl EncodingTable {
    pub fn encode(&self, category: &str) -> f64 {
        self.stats.get(category).copied().unwrap_or(self.prior)
    }
}

/// Ordered target statistics. Row `permutation[t]` is encoded from rows
/// `permutation[..t]` only:
/// `(sum of earlier same-category labels + a * P) / (earlier count + a)`.
pub fn encode_categorical(
    column: &[String],
    labels: &[usize],
    permutation: &[usize],
    prior_weight: f64,
    prior: PriorMode,
    permutation_seed: u64,
) -> (Vec<f64>, EncodingTable) {
    assert_eq!(column.len(), labels.len(), "column and labels differ in length");
    assert_eq!(column.len(), permutation.len(), "permutation has the wrong length");
    assert!(prior_weight > 0.0, "prior weight must be positive");

    let mut encoded = vec![0.0; column.len()];
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut seen_sum = 0.0;
    for (t, &i) in permutation.iter().enumerate() {
        let p = match prior {
            PriorMode::Prefix if t == 0 => 0.0,
            PriorMode::Prefix => seen_sum / t as f64,
            PriorMode::Fixed(p) => p,
        };
        let entry = sums.entry(column[i].as_str()).or_insert((0.0, 0));
        encoded[i] = (entry.0 + prior_weight * p) / (entry.1 as f64 + prior_weight);
        entry.0 += labels[i] as f64;
        entry.1 += 1;
        seen_sum += labels[i] as f64;
    }

    let full_prior = match prior {
        PriorMode::Prefix if labels.is_empty() => 0.0,
        PriorMode::Prefix => seen_sum / labels.len() as f64,
        PriorMode::Fixed(p) => p,
    };
    let table = EncodingTable {
        prior: full_prior,
        prior_weight,
        permutation_seed,
        stats: sums
            .iter()
            .map(|(c, (s, n))| (c.to_string(), (s + prior_weight * full_prior) / (*n as f64 + prior_weight)))
            .collect(),
        counts: sums.iter().map(|(c, (_, n))| (c.to_string(), *n)).collect(),
    };
    (encoded, table)
}
