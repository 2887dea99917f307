use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ClassifierError;

/// Splits ids into train and validation parts, `round(ratio · N)` of them for
/// training.
///
/// The ids are sorted before the seeded shuffle, so the partition depends only
/// on the id set and the seed, never on input order.
pub fn split_dataset(
    ids: &[String],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>), ClassifierError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(ClassifierError::InvalidConfig(format!(
            "split ratio {ratio} outside (0, 1)"
        )));
    }
    if ids.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let mut sorted = ids.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(ClassifierError::InvalidConfig("duplicate ids in split".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let n_train = (ratio * sorted.len() as f64).round() as usize;
    let validation = sorted.split_off(n_train);
    Ok((sorted, validation))
}

/// True when `train` and `validation` partition `ids` exactly.
pub fn is_partition(ids: &[String], train: &[String], validation: &[String]) -> bool {
    let all: HashSet<&String> = ids.iter().collect();
    let t: HashSet<&String> = train.iter().collect();
    let v: HashSet<&String> = validation.iter().collect();
    t.len() == train.len()
        && v.len() == validation.len()
        && t.is_disjoint(&v)
        && t.union(&v).copied().collect::<HashSet<_>>() == all
}
