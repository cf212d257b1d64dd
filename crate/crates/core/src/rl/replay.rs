use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::env::Observation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    /// Continuous action, or the chosen level for discrete agents.
    pub action: f64,
    /// Index into the discrete action set (0 for continuous agents).
    pub action_index: usize,
    pub reward: f64,
    pub next_obs: Observation,
    /// Gap violation: the target is the reward alone.
    pub terminal: bool,
}

/// Fixed-capacity ring of transitions with a seeded minibatch sampler.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    head: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity),
            head: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Overwrites the oldest entry once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `n` distinct entries drawn uniformly.
    pub fn sample(&mut self, n: usize) -> Result<Vec<Transition>> {
        if n > self.items.len() {
            return Err(Error::invalid(format!("cannot sample {n} of {} transitions", self.items.len())));
        }
        Ok(index::sample(&mut self.rng, self.items.len(), n)
            .into_iter()
            .map(|i| self.items[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn tr(i: usize) -> Transition {
        Transition {
            obs: [i as f64, 0.0, 0.0],
            action: 0.0,
            action_index: 0,
            reward: i as f64,
            next_obs: [0.0; 3],
            terminal: false,
        }
    }

    #[test]
    fn ring_drops_the_oldest() {
        let mut b = ReplayBuffer::new(5, 0).unwrap();
        for i in 0..12 {
            b.push(tr(i));
        }
        assert_eq!(b.len(), 5);
        let mut kept: Vec<usize> = b.iter().map(|t| t.reward as usize).collect();
        kept.sort();
        assert_eq!(kept, vec![7, 8, 9, 10, 11]);
        assert!(ReplayBuffer::new(0, 0).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_needs_enough_data() {
        let mut a = ReplayBuffer::new(100, 3).unwrap();
        let mut b = ReplayBuffer::new(100, 3).unwrap();
        for i in 0..50 {
            a.push(tr(i));
            b.push(tr(i));
        }
        assert_eq!(a.sample(10).unwrap(), b.sample(10).unwrap());
        assert!(a.sample(51).is_err());
        assert_eq!(a.sample(50).unwrap().len(), 50);
    }

    proptest! {
        #[test]
        fn minibatches_have_no_repeats(cap in 1usize..64, pushes in 1usize..200, seed in 0u64..1000) {
            let mut b = ReplayBuffer::new(cap, seed).unwrap();
            for i in 0..pushes {
                b.push(tr(i));
            }
            prop_assert!(b.len() <= cap);
            prop_assert_eq!(b.len(), pushes.min(cap));
            let batch = b.sample(b.len()).unwrap();
            let mut ids: Vec<usize> = batch.iter().map(|t| t.reward as usize).collect();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), b.len());
            prop_assert!(ids.iter().all(|&i| i + cap >= pushes));
        }
    }
}
