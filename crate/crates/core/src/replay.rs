//! Fixed-capacity experience replay with uniform sampling.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::qnet::JointAction;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: JointAction,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

impl Transition {
    fn validate(&self, shape: Option<(usize, usize, usize)>) -> Result<()> {
        if self.state.len() != self.next_state.len() {
            return Err(Error::Validation(format!(
                "state has {} entries but next_state has {}",
                self.state.len(),
                self.next_state.len()
            )));
        }
        if !self.reward.is_finite() {
            return Err(Error::Validation("reward is not finite".into()));
        }
        if let Some((state_dim, branches, sub_actions)) = shape {
            if self.state.len() != state_dim {
                return Err(Error::dim("transition state", state_dim, self.state.len()));
            }
            self.action.validate(branches, sub_actions)?;
        }
        Ok(())
    }
}

/// Ring buffer of transitions; the oldest entry is overwritten once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
    /// `(state_dim, branches, sub_actions)` every stored transition must match.
    shape: Option<(usize, usize, usize)>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            items: Vec::new(),
            cursor: 0,
            shape: None,
        })
    }

    /// Buffer that also checks state width and action ranges on `store`.
    pub fn with_shape(capacity: usize, state_dim: usize, branches: usize, sub_actions: usize) -> Result<Self> {
        let mut b = Self::new(capacity)?;
        b.shape = Some((state_dim, branches, sub_actions));
        Ok(b)
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

    pub fn store(&mut self, t: Transition) -> Result<()> {
        t.validate(self.shape)?;
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// `batch_size` draws, uniform with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if self.items.len() < batch_size || self.items.is_empty() {
            return Err(Error::InsufficientData {
                requested: batch_size,
                available: self.items.len(),
            });
        }
        Ok((0..batch_size)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(tag: f64) -> Transition {
        Transition {
            state: vec![tag],
            action: JointAction::new(vec![0]),
            reward: tag,
            next_state: vec![tag + 1.0],
            done: false,
        }
    }

    #[test]
    fn store_grows_until_capacity_then_evicts_oldest() {
        let mut b = ReplayBuffer::new(2).unwrap();
        b.store(t(1.0)).unwrap();
        assert_eq!(b.len(), 1);
        b.store(t(2.0)).unwrap();
        b.store(t(3.0)).unwrap();
        assert_eq!(b.len(), 2);
        let rewards: Vec<f64> = b.iter().map(|x| x.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0]);
    }

    #[test]
    fn iteration_follows_insertion_order() {
        let mut b = ReplayBuffer::new(10).unwrap();
        for k in 0..4 {
            b.store(t(k as f64)).unwrap();
        }
        let rewards: Vec<f64> = b.iter().map(|x| x.reward).collect();
        assert_eq!(rewards, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn singleton_sample_repeats() {
        let mut b = ReplayBuffer::new(4).unwrap();
        b.store(t(7.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = b.sample(1, &mut rng).unwrap();
        assert_eq!(s.len(), 1);
        // Batches larger than the stored count are refused.
        assert!(matches!(
            b.sample(3, &mut rng),
            Err(Error::InsufficientData { requested: 3, available: 1 })
        ));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let mut b = ReplayBuffer::new(100).unwrap();
        for k in 0..50 {
            b.store(t(k as f64)).unwrap();
        }
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            b.sample(20, &mut rng).unwrap().iter().map(|x| x.reward).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn malformed_transitions_are_rejected() {
        let mut b = ReplayBuffer::with_shape(4, 1, 1, 3).unwrap();
        let mut bad = t(0.0);
        bad.next_state.push(0.0);
        assert!(matches!(b.store(bad), Err(Error::Validation(_))));
        let mut bad = t(0.0);
        bad.action = JointAction::new(vec![3]);
        assert!(matches!(b.store(bad), Err(Error::Validation(_))));
        assert!(b.is_empty());
        assert!(ReplayBuffer::new(0).is_err());
    }
}
