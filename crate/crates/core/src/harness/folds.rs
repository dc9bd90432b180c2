//! Per-class sample selection and stratified k-fold plans.
//!
//! Test folds are built per class by dealing a seeded shuffle round-robin,
//! so class counts not divisible by `k` leave some folds one short. Each
//! fold's validation set is drawn per class from the non-test remainder,
//! matching the class's test count but always leaving one training sample.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::signal_io::Class;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FoldError {
    #[error("class {class} has {available} samples, {requested} requested")]
    InsufficientSamples { class: &'static str, available: usize, requested: usize },
    #[error("class {class} has {available} samples, fewer than {k} folds")]
    TooFewSamples { class: &'static str, available: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// 1-based.
    pub fold_index: usize,
    pub test_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub train_ids: Vec<String>,
}

/// Indices of `per_class` samples of each class, drawn uniformly without
/// replacement. Normal indices come first; each block is ascending.
pub fn select_samples(labels: &[Class], per_class: usize, seed: u64) -> Result<Vec<usize>, FoldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * per_class);
    for class in Class::ALL {
        let mut pool: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if pool.len() < per_class {
            return Err(FoldError::InsufficientSamples { class: class.name(), available: pool.len(), requested: per_class });
        }
        let (chosen, _) = pool.partial_shuffle(&mut rng, per_class);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        out.extend(chosen);
    }
    Ok(out)
}

pub fn make_folds(samples: &[(String, Class)], k: usize, seed: u64) -> Result<Vec<FoldPlan>, FoldError> {
    if k < 2 {
        return Err(FoldError::InvalidK(k));
    }
    let mut seen = HashSet::new();
    for (id, _) in samples {
        if !seen.insert(id.as_str()) {
            return Err(FoldError::DuplicateId(id.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // per class: shuffled ids, then the test fold of each position
    let mut classes: Vec<Vec<&str>> = Vec::new();
    for class in Class::ALL {
        let mut ids: Vec<&str> = samples.iter().filter(|(_, c)| *c == class).map(|(id, _)| id.as_str()).collect();
        if ids.len() < k {
            return Err(FoldError::TooFewSamples { class: class.name(), available: ids.len(), k });
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        classes.push(ids);
    }

    let mut plans = Vec::with_capacity(k);
    for f in 0..k {
        let mut fold_rng = ChaCha8Rng::seed_from_u64(seed);
        fold_rng.set_stream(1 + f as u64);
        let mut plan = FoldPlan { fold_index: f + 1, test_ids: Vec::new(), val_ids: Vec::new(), train_ids: Vec::new() };
        for ids in &classes {
            let (test, mut rest): (Vec<(usize, &str)>, Vec<(usize, &str)>) =
                ids.iter().copied().enumerate().partition(|(i, _)| i % k == f);
            let n_val = test.len().min(rest.len().saturating_sub(1));
            rest.shuffle(&mut fold_rng);
            let (val, train) = rest.split_at(n_val);
            plan.test_ids.extend(test.iter().map(|(_, s)| s.to_string()));
            plan.val_ids.extend(val.iter().map(|(_, s)| s.to_string()));
            plan.train_ids.extend(train.iter().map(|(_, s)| s.to_string()));
        }
        plans.push(plan);
    }
    Ok(plans)
}
