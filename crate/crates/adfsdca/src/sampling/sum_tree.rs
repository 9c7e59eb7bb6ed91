//! Complete binary tree over nonnegative leaf weights with subtree sums in
//! the internal nodes: proportional sampling in O(log n) per draw and O(log n)
//! per single-weight update.

use rand::Rng;

use super::SamplingError;

#[derive(Clone, Debug)]
pub struct SumTree {
    n: usize,
    cap: usize,
    /// 1-based heap layout: root at 1, leaves at `cap..cap + n`.
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn build(weights: &[f64]) -> Result<Self, SamplingError> {
        let n = weights.len();
        if n == 0 || !(weights.iter().sum::<f64>() > 0.0) {
            return Err(SamplingError::DegenerateDistribution);
        }
        assert!(
            weights.iter().all(|w| *w >= 0.0 && w.is_finite()),
            "sum tree weights must be finite and nonnegative"
        );
        let cap = n.next_power_of_two();
        let mut nodes = vec![0.0f64; 2 * cap];
        nodes[cap..cap + n].copy_from_slice(weights);
        for i in (1..cap).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Ok(Self { n, cap, nodes })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.cap + i]
    }

    /// Replace weight `i` and recompute the root-to-leaf path sums.
    ///
    /// Parents are recomputed as child sums rather than adjusted by a delta,
    /// so internal nodes stay exactly consistent with their children.
    pub fn update(&mut self, i: usize, weight: f64) {
        assert!(i < self.n, "index {i} out of bounds for {} leaves", self.n);
        assert!(
            weight >= 0.0 && weight.is_finite(),
            "sum tree weights must be finite and nonnegative"
        );
        let mut idx = self.cap + i;
        self.nodes[idx] = weight;
        while idx > 1 {
            idx /= 2;
            self.nodes[idx] = self.nodes[2 * idx] + self.nodes[2 * idx + 1];
        }
    }

    /// Draw an index with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, SamplingError> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(SamplingError::DegenerateDistribution);
        }
        let mut u = rng.gen::<f64>() * total;
        let mut idx = 1usize;
        while idx < self.cap {
            let left = 2 * idx;
            if u < self.nodes[left] {
                idx = left;
            } else {
                u -= self.nodes[left];
                idx = left + 1;
            }
        }
        let mut leaf = idx - self.cap;
        // Rounding at the last comparison can land on a zero or padding
        // leaf; walk forward to the next positive weight.
        if leaf >= self.n || self.nodes[self.cap + leaf] == 0.0 {
            for step in 1..=self.cap {
                let cand = (leaf + step) % self.cap;
                if cand < self.n && self.nodes[self.cap + cand] > 0.0 {
                    leaf = cand;
                    break;
                }
            }
        }
        Ok(leaf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn root_holds_total() {
        let t = SumTree::build(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.total(), 6.0);
    }

    #[test]
    fn single_positive_weight_always_sampled() {
        let t = SumTree::build(&[3.0, 0.0, 0.0]).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(t.sample(&mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn all_zero_is_degenerate() {
        assert!(matches!(
            SumTree::build(&[0.0, 0.0]),
            Err(SamplingError::DegenerateDistribution)
        ));
        let mut t = SumTree::build(&[1.0]).unwrap();
        t.update(0, 0.0);
        let mut rng = StdRng::seed_from_u64(1);
        assert!(t.sample(&mut rng).is_err());
    }

    #[test]
    fn zeroed_leaf_never_sampled() {
        let mut t = SumTree::build(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        t.update(0, 0.0);
        let mut rng = StdRng::seed_from_u64(5);
        let draws = 100_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[t.sample(&mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[0], 0);
        // Remaining three are uniform at 1/3 each; 6-sigma envelope.
        let p = 1.0 / 3.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 - draws as f64 * p).abs() <= 6.0 * sigma);
        }
    }

    #[test]
    fn internal_nodes_stay_consistent_under_fuzzed_updates() {
        let mut rng = StdRng::seed_from_u64(99);
        let n = 37; // not a power of two
        let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let mut t = SumTree::build(&w).unwrap();
        for _ in 0..10_000 {
            let i = rng.gen_range(0..n);
            let new_w = if rng.gen::<f64>() < 0.1 { 0.0 } else { rng.gen::<f64>() * 10.0 };
            t.update(i, new_w);
        }
        let total = t.total();
        for i in 1..t.cap {
            let got = t.nodes[i];
            let want = t.nodes[2 * i] + t.nodes[2 * i + 1];
            assert_eq!(got, want, "node {i} out of sync");
        }
        let leaf_sum: f64 = (0..n).map(|i| t.get(i)).sum();
        assert!((total - leaf_sum).abs() <= n as f64 * 1e-12 * total.max(1.0));
    }

    #[test]
    fn draw_frequencies_proportional_to_weights() {
        let w = [1.0, 2.0, 3.0, 4.0];
        let t = SumTree::build(&w).unwrap();
        let total: f64 = w.iter().sum();
        let mut rng = StdRng::seed_from_u64(11);
        let draws = 1_000_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[t.sample(&mut rng).unwrap()] += 1;
        }
        for i in 0..4 {
            let p = w[i] / total;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[i] as f64 - draws as f64 * p).abs() <= 6.0 * sigma, "i={i}");
        }
    }
}
