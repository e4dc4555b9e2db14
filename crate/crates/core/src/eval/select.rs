use std::collections::BTreeMap;

/// Epoch with the highest dev macro-F1; the earlier epoch wins ties.
pub fn select_checkpoint(dev_results: &BTreeMap<usize, f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (&epoch, &score) in dev_results {
        if best.map_or(true, |(_, b)| score > b) {
            best = Some((epoch, score));
        }
    }
    best.map(|(e, _)| e)
}

/// Index of the best candidate by score; ties go to the lowest learning rate,
/// then to the earlier candidate.
pub fn select_by_score_then_lr(candidates: &[(f64, f64)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(score, lr)) in candidates.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) => {
                let (bs, blr) = candidates[b];
                if score > bs || (score == bs && lr < blr) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_with_earlier_epoch_on_ties() {
        assert_eq!(select_checkpoint(&[(1, 0.75), (2, 0.77)].into()), Some(2));
        assert_eq!(select_checkpoint(&[(1, 0.40), (2, 0.38)].into()), Some(1));
        assert_eq!(select_checkpoint(&[(1, 0.5), (2, 0.5)].into()), Some(1));
        assert_eq!(select_checkpoint(&BTreeMap::new()), None);
    }

    #[test]
    fn sweep_ties_prefer_lower_learning_rate() {
        let c = [(0.6, 5e-5), (0.6, 1e-5), (0.5, 1e-6)];
        assert_eq!(select_by_score_then_lr(&c), Some(1));
        assert_eq!(select_by_score_then_lr(&[(0.1, 3e-5)]), Some(0));
    }
}
