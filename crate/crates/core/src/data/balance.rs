use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DomainDataset, Window};
use crate::error::{Error, Result};

/// Brings every dataset up to the size of the largest one by appending
/// examples drawn uniformly with replacement from that dataset. Windows of a
/// drawn example are duplicated along with it.
pub fn upsample_domains(train_sets: &[DomainDataset], seed: u64) -> Result<Vec<DomainDataset>> {
    if train_sets.is_empty() {
        return Err(Error::EmptyDataset("no training sets given".into()));
    }
    if let Some(empty) = train_sets.iter().find(|d| d.is_empty()) {
        return Err(Error::EmptyDataset(empty.name.clone()));
    }
    let target = train_sets.iter().map(|d| d.len()).max().unwrap();
    let mut out = Vec::with_capacity(train_sets.len());
    for (i, ds) in train_sets.iter().enumerate() {
        let mut ds = ds.clone();
        let missing = target - ds.len();
        if missing > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((i as u64 + 1) << 32));
            let n = ds.len();
            for _ in 0..missing {
                let pick = ds.examples[rng.gen_range(0..n)].clone();
                let extra: Vec<Window> = ds
                    .windows
                    .iter()
                    .filter(|w| w.qid == pick.qid)
                    .cloned()
                    .collect();
                ds.examples.push(pick);
                ds.windows.extend(extra);
            }
        }
        out.push(ds);
    }
    Ok(out)
}

/// A mini-batch of windows from one domain.
#[derive(Clone, Debug)]
pub struct Batch<'a> {
    pub domain: &'a str,
    pub windows: Vec<&'a Window>,
}

/// One epoch of single-domain batches: each domain's windows are shuffled and
/// chunked (the last chunk may be short), then the batch order is shuffled.
/// Deterministic in `seed`.
pub fn single_domain_batches(train_sets: &[DomainDataset], batch_size: usize, seed: u64) -> Vec<Batch<'_>> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batches = Vec::new();
    for ds in train_sets {
        let mut order: Vec<&Window> = ds.windows.iter().collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            batches.push(Batch {
                domain: ds.name.as_str(),
                windows: chunk.to_vec(),
            });
        }
    }
    batches.shuffle(&mut rng);
    batches
}
