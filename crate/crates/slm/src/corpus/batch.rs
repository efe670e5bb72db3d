//! Epoch batching.
//!
//! Produces seed-deterministic batches of item indices. Optional length
//! bucketing sorts items by length before chunking, then shuffles the batch
//! order, so each batch holds similar-length fragments without fixing the
//! visit order across the epoch.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Result, SlmError};

pub fn make_batches<R: Rng>(
    lengths: &[usize],
    batch_size: usize,
    bucket_by_length: bool,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(SlmError::InvalidArgument("batch_size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.shuffle(rng);
    if bucket_by_length {
        // stable so equal lengths keep their shuffled order
        order.sort_by_key(|&i| lengths[i]);
    }
    let mut batches: Vec<Vec<usize>> =
        order.chunks(batch_size).map(|c| c.to_vec()).collect();
    if bucket_by_length {
        batches.shuffle(rng);
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_item_appears_exactly_once() {
        let lengths: Vec<usize> = (0..103).map(|i| (i * 7) % 13 + 1).collect();
        for bucket in [false, true] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let batches = make_batches(&lengths, 10, bucket, &mut rng).unwrap();
            let mut seen: Vec<usize> = batches.iter().flatten().copied().collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..103).collect::<Vec<_>>());
            assert!(batches.iter().all(|b| b.len() <= 10));
        }
    }

    #[test]
    fn same_seed_same_batches() {
        let lengths: Vec<usize> = (0..50).map(|i| i % 9 + 1).collect();
        let a = make_batches(&lengths, 8, true, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = make_batches(&lengths, 8, true, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        let c = make_batches(&lengths, 8, true, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bucketing_groups_similar_lengths() {
        let lengths: Vec<usize> = (0..100).map(|i| if i < 50 { 2 } else { 40 }).collect();
        let batches =
            make_batches(&lengths, 10, true, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for b in &batches {
            let ls: Vec<usize> = b.iter().map(|&i| lengths[i]).collect();
            let min = ls.iter().min().unwrap();
            let max = ls.iter().max().unwrap();
            assert_eq!(min, max, "mixed-length batch {ls:?}");
        }
    }

    #[test]
    fn rejects_zero_batch_size() {
        assert!(make_batches(&[1, 2], 0, false, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
