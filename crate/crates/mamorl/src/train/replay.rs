//! Fixed-capacity FIFO replay with uniform sampling.

use rand::Rng;

use crate::prefs::GlobalPreference;

/// One stored environment transition. Observations are cached so actor
/// and target evaluations never need to re-derive them from the state.
#[derive(Clone, Debug)]
pub struct Transition {
    pub state: Vec<f64>,
    pub next_state: Vec<f64>,
    pub observations: Vec<Vec<f64>>,
    pub next_observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<Vec<f64>>,
    pub prefs: GlobalPreference,
}

/// Ring buffer; at capacity the oldest entry is overwritten.
pub struct ReplayBuffer {
    data: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { data: Vec::new(), capacity, cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.data[index]
    }

    /// `n` transitions uniformly with replacement, or `None` while the
    /// buffer holds fewer than `n` (caller skips the update).
    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> Option<Vec<Transition>> {
        if self.data.len() < n {
            return None;
        }
        Some(
            (0..n)
                .map(|_| self.data[rng.gen_range(0..self.data.len())].clone())
                .collect(),
        )
    }

    /// Index sequence `sample` would draw; used by the distribution test.
    pub fn sample_indices(&self, rng: &mut impl Rng, n: usize) -> Option<Vec<usize>> {
        if self.data.len() < n {
            return None;
        }
        Some((0..n).map(|_| rng.gen_range(0..self.data.len())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::PreferenceVector;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn t(tag: f64) -> Transition {
        Transition {
            state: vec![tag],
            next_state: vec![tag],
            observations: vec![vec![tag]],
            next_observations: vec![vec![tag]],
            actions: vec![vec![0.0, 0.0]],
            rewards: vec![vec![0.0, 0.0]],
            prefs: GlobalPreference::new(vec![PreferenceVector::uniform(2)]),
        }
    }

    #[test]
    fn overwrites_oldest_at_capacity() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..4 {
            buf.push(t(i as f64));
        }
        assert_eq!(buf.len(), 3);
        let stored: Vec<f64> = (0..3).map(|i| buf.get(i).state[0]).collect();
        assert!(!stored.contains(&0.0), "first item must be gone");
        assert!(stored.contains(&3.0));
    }

    #[test]
    fn cursor_wraps_after_capacity_pushes() {
        let mut buf = ReplayBuffer::new(5);
        for i in 0..5 {
            buf.push(t(i as f64));
        }
        assert_eq!(buf.cursor(), 0);
    }

    #[test]
    fn single_item_sampling_and_not_ready_signal() {
        let mut buf = ReplayBuffer::new(8);
        let mut rng = StdRng::seed_from_u64(0);
        assert!(buf.sample(&mut rng, 1).is_none());
        buf.push(t(7.0));
        let batch = buf.sample(&mut rng, 1).unwrap();
        assert_eq!(batch[0].state[0], 7.0);
        assert!(buf.sample(&mut rng, 2).is_none());
    }

    #[test]
    fn sampling_is_seed_reproducible() {
        let mut buf = ReplayBuffer::new(16);
        for i in 0..16 {
            buf.push(t(i as f64));
        }
        let a = buf.sample_indices(&mut StdRng::seed_from_u64(5), 16).unwrap();
        let b = buf.sample_indices(&mut StdRng::seed_from_u64(5), 16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_uniform_by_chi_squared() {
        // 20 bins, 1e5 draws; chi^2 critical value at p = 0.01 for
        // df = 19 is 36.191.
        let mut buf = ReplayBuffer::new(20);
        for i in 0..20 {
            buf.push(t(i as f64));
        }
        let mut rng = StdRng::seed_from_u64(11);
        let mut counts = [0usize; 20];
        for _ in 0..5000 {
            for d in buf.sample_indices(&mut rng, 20).unwrap() {
                counts[d] += 1;
            }
        }
        let expected = 100_000.0 / 20.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 36.191, "chi^2 = {chi2}");
    }
}
