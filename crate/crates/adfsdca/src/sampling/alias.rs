//! Walker/Vose alias method: any n-valued discrete distribution as a mixture
//! of n two-point distributions, giving constant-time draws.

use rand::Rng;

use super::SamplingError;

/// Alias table over `n` outcomes.
///
/// Bucket `i` keeps outcome `i` with probability `prob[i]` and defers to
/// `alias[i]` otherwise, so the represented distribution satisfies
/// `p_i = (prob[i] + sum_{k: alias[k]=i} (1 - prob[k])) / n`.
#[derive(Clone, Debug)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Build from nonnegative weights; the distribution is the normalized
    /// weight vector.
    pub fn build(weights: &[f64]) -> Result<Self, SamplingError> {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        if n == 0 || !(total > 0.0) {
            return Err(SamplingError::DegenerateDistribution);
        }
        debug_assert!(weights.iter().all(|w| *w >= 0.0 && w.is_finite()));

        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![1.0f64; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small: Vec<usize> = Vec::with_capacity(n);
        let mut large: Vec<usize> = Vec::with_capacity(n);
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers are 1.0 up to rounding; both stacks drain to prob = 1.
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
        }
        Ok(Self { prob, alias })
    }

    /// Draw one outcome using a single uniform variate: the integer part
    /// picks the bucket, the fractional part decides keep-vs-alias.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.prob.len();
        let x = rng.gen::<f64>() * n as f64;
        let i = (x as usize).min(n - 1);
        let frac = x - i as f64;
        if frac < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }

    /// Recover the represented distribution from the table contents.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut p = vec![0.0f64; n];
        for i in 0..n {
            p[i] += self.prob[i];
            p[self.alias[i]] += 1.0 - self.prob[i];
        }
        for x in &mut p {
            *x /= n as f64;
        }
        p
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }
}
