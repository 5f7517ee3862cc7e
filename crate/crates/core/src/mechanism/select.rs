use std::cmp::Ordering;

use crate::error::{invalid, Result};

/// Indices of the `m` largest values, largest first. Equal values are ordered
/// by ascending index.
pub fn select_top<T: Ord>(values: &[T], m: usize) -> Result<Vec<usize>> {
    if m > values.len() {
        return Err(invalid(format!(
            "cannot select {m} of {} values",
            values.len()
        )));
    }
    Ok(select_among(values, (0..values.len()).collect(), m))
}

/// [`select_top`] restricted to `candidates` (indices into `values`).
pub(crate) fn select_among<T: Ord>(
    values: &[T],
    mut candidates: Vec<usize>,
    m: usize,
) -> Vec<usize> {
    let by_rank = |a: &usize, b: &usize| -> Ordering { values[*b].cmp(&values[*a]).then(a.cmp(b)) };
    if m == 0 {
        return Vec::new();
    }
    if m < candidates.len() {
        candidates.select_nth_unstable_by(m - 1, by_rank);
        candidates.truncate(m);
    }
    candidates.sort_unstable_by(by_rank);
    candidates
}

/// True iff any two of `values` are equal.
pub fn has_tie<T: Ord>(values: &[T]) -> bool {
    let mut refs: Vec<&T> = values.iter().collect();
    refs.sort_unstable();
    refs.windows(2).any(|w| w[0] == w[1])
}

/// Tie check for a run already sorted in descending order.
pub(crate) fn has_adjacent_tie<T: Eq>(values: &[T], sorted_indices: &[usize]) -> bool {
    sorted_indices
        .windows(2)
        .any(|w| values[w[0]] == values[w[1]])
}

/// Indices whose value is at least the `(k + 2)`-th largest value (counted
/// with multiplicity). Everything outside the pool is strictly below `k + 2`
/// other queries, and refinement can never lift it past them.
pub fn prune_pool<T: Ord>(values: &[T], k: usize) -> Vec<usize> {
    let window = k + 2;
    if values.len() <= window {
        return (0..values.len()).collect();
    }
    let top = select_among(values, (0..values.len()).collect(), window);
    let threshold = &values[top[window - 1]];
    (0..values.len())
        .filter(|&i| values[i] >= *threshold)
        .collect()
}

/// Pool step inside the secure loop: keeps the members of `live` at or above
/// the value of the last selected query.
pub(crate) fn retain_pool<T: Ord>(values: &[T], live: &mut Vec<usize>, selected: &[usize]) {
    if let Some(&last) = selected.last() {
        let threshold = &values[last];
        live.retain(|&i| values[i] >= *threshold);
    }
}
