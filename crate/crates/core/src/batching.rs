use rand::seq::SliceRandom;
use rand::Rng;

/// Endless stream of mini-batches: indices come from a shuffled permutation
/// of the pool and the permutation is redrawn whenever it runs out.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    batch: usize,
}

impl BatchSampler {
    /// Batches are `min(batch, len)` long.
    pub fn new(len: usize, batch: usize) -> Self {
        BatchSampler {
            order: (0..len).collect(),
            pos: len,
            batch: batch.min(len).max(1),
        }
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn next_batch<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.batch);
        while out.len() < self.batch {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            let take = (self.batch - out.len()).min(self.order.len() - self.pos);
            out.extend_from_slice(&self.order[self.pos..self.pos + take]);
            self.pos += take;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covers_every_index_once_per_pass() {
        let mut rng = crate::seed::rng(3);
        let mut s = BatchSampler::new(10, 5);
        let mut seen: Vec<usize> = (0..2).flat_map(|_| s.next_batch(&mut rng)).collect();
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn small_pools_shrink_the_batch() {
        let mut rng = crate::seed::rng(3);
        let mut s = BatchSampler::new(3, 128);
        assert_eq!(s.next_batch(&mut rng).len(), 3);
    }
}
