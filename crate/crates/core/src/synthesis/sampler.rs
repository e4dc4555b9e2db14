//! Top-k then top-p (nucleus) filtering of a categorical distribution.

use rand::Rng;

use crate::error::{Error, Result};

/// Keeps the `top_k` most probable entries, renormalizes, then keeps the
/// smallest prefix whose mass reaches `top_p` and renormalizes again.
/// Returns `(index, probability)` in decreasing probability; ties keep index
/// order.
pub fn filter_top_k_top_p(probs: &[f64], top_k: usize, top_p: f64) -> Result<Vec<(usize, f64)>> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    if !(top_p > 0.0 && top_p <= 1.0) {
        return Err(Error::InvalidArgument(format!("top_p must lie in (0, 1], got {top_p}")));
    }
    if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
    }
    let mut order: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::InvalidArgument("distribution has no mass".into()));
    }
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order.truncate(top_k);
    let z: f64 = order.iter().map(|&i| probs[i]).sum();
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for &i in &order {
        let p = probs[i] / z;
        kept.push((i, p));
        mass += p;
        if mass >= top_p {
            break;
        }
    }
    let z: f64 = kept.iter().map(|(_, p)| p).sum();
    Ok(kept.into_iter().map(|(i, p)| (i, p / z)).collect())
}

/// Draws one index from the filtered distribution.
pub fn sample_top_k_top_p<R: Rng + ?Sized>(probs: &[f64], top_k: usize, top_p: f64, rng: &mut R) -> Result<usize> {
    let kept = filter_top_k_top_p(probs, top_k, top_p)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(i, p) in &kept {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(kept.last().expect("non-empty support").0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probe_support_and_weights() {
        let kept = filter_top_k_top_p(&[0.5, 0.3, 0.1, 0.1], 2, 0.95).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].0, 0);
        assert_eq!(kept[1].0, 1);
        assert!((kept[0].1 - 0.625).abs() < 1e-15);
        assert!((kept[1].1 - 0.375).abs() < 1e-15);
    }

    #[test]
    fn nucleus_cut() {
        let kept = filter_top_k_top_p(&[0.1, 0.6, 0.3], 10, 0.5).unwrap();
        assert_eq!(kept, vec![(1, 1.0)]);
        let kept = filter_top_k_top_p(&[0.1, 0.6, 0.3], 10, 0.9).unwrap();
        assert_eq!(kept.iter().map(|k| k.0).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn k_one_is_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_top_k_top_p(&[0.2, 0.25, 0.55], 1, 0.95, &mut rng).unwrap(), 2);
        }
    }

    #[test]
    fn invalid_settings() {
        assert!(filter_top_k_top_p(&[1.0], 0, 0.9).is_err());
        assert!(filter_top_k_top_p(&[1.0], 1, 0.0).is_err());
        assert!(filter_top_k_top_p(&[0.0, 0.0], 1, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn kept_set_is_top_k_and_minimal_nucleus(
            raw in proptest::collection::vec(0.01f64..1.0, 1..20),
            k in 1usize..25,
            p in 0.05f64..1.0,
        ) {
            let z: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|x| x / z).collect();
            let kept = filter_top_k_top_p(&probs, k, p).unwrap();
            prop_assert!(kept.len() <= k);
            let mut sorted = probs.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let kth = sorted[k.min(sorted.len()) - 1];
            for &(i, _) in &kept {
                prop_assert!(probs[i] >= kth);
            }
            let topk: f64 = sorted.iter().take(k).sum();
            let mass: f64 = kept.iter().map(|&(i, _)| probs[i]).sum::<f64>() / topk;
            prop_assert!(mass >= p - 1e-12);
            let without_last = mass - probs[kept.last().unwrap().0] / topk;
            prop_assert!(without_last < p + 1e-12);
            prop_assert!((kept.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
