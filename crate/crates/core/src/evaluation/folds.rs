use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// A k-fold assignment: `assignment[i]` is the fold of sample `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n_samples(&self) -> usize {
        self.assignment.len()
    }

    /// Sample indices in fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == f).collect()
    }

    /// Sample indices outside fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != f).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Restrict to the samples at `rows`, keeping each sample's fold. Used
    /// when rows are dropped after the plan was made.
    pub fn restrict(&self, rows: &[usize]) -> Self {
        Self {
            k: self.k,
            assignment: rows.iter().map(|&i| self.assignment[i]).collect(),
            seed: self.seed,
        }
    }
}

/// Shuffle `0..n` with the seed, then deal the shuffled samples into folds
/// round-robin.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("{k} folds for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut assignment = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok(FoldPlan { k, assignment, seed })
}

/// Train/test index split with `round(test_fraction · n)` test rows, both
/// sorted ascending.
pub fn holdout_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} of {n} samples leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Split a matrix into `(train, test)`.
pub fn holdout_split(m: &FeatureMatrix, test_fraction: f64, seed: u64) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let (train, test) = holdout_indices(m.n_samples(), test_fraction, seed)?;
    Ok((m.select_rows(&train)?, m.select_rows(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_sizes_balance() {
        let p = make_folds(10, 10, 3).unwrap();
        assert_eq!(p.fold_sizes(), vec![1; 10]);
        let mut sizes = make_folds(11, 10, 3).unwrap().fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [vec![1; 9], vec![2]].concat());
        assert_eq!(make_folds(11, 10, 3).unwrap(), make_folds(11, 10, 3).unwrap());
        assert!(make_folds(3, 4, 0).is_err());
        assert!(make_folds(3, 1, 0).is_err());
    }

    #[test]
    fn holdout_sizes() {
        let (train, test) = holdout_indices(141, 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (113, 28));
        let (train, test) = holdout_indices(10, 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let mut all = [train, test].concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(holdout_indices(3, 0.1, 0).is_err());
        assert!(holdout_indices(3, 1.0, 0).is_err());
    }
}
