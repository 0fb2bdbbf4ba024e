use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Default number of cross-validation folds.
pub const DEFAULT_FOLDS: usize = 10;

/// Assignment of samples to K folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_count: usize,
    /// `assignments[i]` is the fold of sample `i`.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

/// Seeded permutation dealt round-robin into `k` folds.
pub fn make_folds(sample_count: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Domain(format!("fold count must be >= 2, got {k}")));
    }
    if sample_count < k {
        return Err(Error::Degenerate(format!("{sample_count} samples cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..sample_count).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut assignments = vec![0; sample_count];
    for (slot, &sample) in order.iter().enumerate() {
        assignments[sample] = slot % k;
    }
    Ok(FoldPlan { fold_count: k, assignments, seed })
}

impl FoldPlan {
    pub fn sample_count(&self) -> usize {
        self.assignments.len()
    }

    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        self.assignments.iter().enumerate().filter(|(_, &f)| f == fold).map(|(i, _)| i).collect()
    }

    pub fn training(&self, fold: usize) -> Vec<usize> {
        self.assignments.iter().enumerate().filter(|(_, &f)| f != fold).map(|(i, _)| i).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        self.assignments.iter().for_each(|&f| sizes[f] += 1);
        sizes
    }
}
