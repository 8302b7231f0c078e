use rand::seq::SliceRandom;

use crate::neural::Rng;

use super::TrainError;

pub const DEFAULT_RATIO: f64 = 0.7;

/// Per-label shuffle, then `⌈ratio·n_c⌉` of each label goes to training.
///
/// Returns sorted index lists into `labels`. Labels are processed in
/// ascending order so the RNG consumption is fixed for a given input.
pub fn stratified_split(labels: &[usize], ratio: f64, rng: &mut Rng) -> Result<(Vec<usize>, Vec<usize>), TrainError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(TrainError::InvalidConfig(format!("split ratio must lie in (0, 1], got {ratio}")));
    }
    let n_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); n_labels];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (label, group) in groups.iter_mut().enumerate() {
        if group.len() == 1 {
            return Err(TrainError::ClassTooSmall { label, count: 1 });
        }
        group.shuffle(rng);
        let n_train = train_count(group.len(), ratio);
        train.extend_from_slice(&group[..n_train]);
        val.extend_from_slice(&group[n_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

fn train_count(n: usize, ratio: f64) -> usize {
    // The small offset keeps products like 0.7·10 = 7.000000000000001 at 7.
    ((ratio * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// `w_c = N / (K·n_c)` with K the number of entries in `counts`.
pub fn class_weights(counts: &[usize]) -> Result<Vec<f64>, TrainError> {
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(TrainError::ZeroCount { class });
    }
    let total: usize = counts.iter().sum();
    let k = counts.len() as f64;
    Ok(counts.iter().map(|&c| total as f64 / (k * c as f64)).collect())
}
