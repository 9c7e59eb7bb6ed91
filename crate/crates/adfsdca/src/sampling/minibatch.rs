//! Non-uniform mini-batch sampling with a fixed batch size.
//!
//! Given a marginal vector `q` with `q_i` in (0,1) and `sum q_i = b`, the
//! peeling decomposition writes the sampling as a convex combination of
//! components `(r_k, i_k, j_k)`: component `k` always includes the `i_k - 1`
//! largest-marginal coordinates and fills the batch with a uniform
//! `(b - i_k + 1)`-subset of sorted positions `i_k..=j_k`. Every draw has
//! exactly `b` distinct coordinates and the per-coordinate inclusion
//! probabilities reproduce `q` exactly.

use rand::Rng;

use super::SamplingError;

/// Marginal values within `EPS_SCALE * b` of the pivot count as equal during
/// peeling; exact equality would stall on accumulated rounding.
const EPS_SCALE: f64 = 1e-12;

/// Water-filling cap applied by [`clip_marginals`]: marginals are pushed to
/// at most `1 - CAP_MARGIN` so the clipped vector stays strictly inside (0,1).
const CAP_MARGIN: f64 = 1e-9;

/// Tolerance on `sum q_i = b`.
const SUM_TOL: f64 = 1e-9;

/// One mixture component over *sorted* (descending-marginal) positions,
/// 1-based: fix positions `1..lo-1`, then draw `b - lo + 1` positions
/// uniformly from `lo..=hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureComponent {
    /// Mixture weight `r_k`; the weights sum to 1.
    pub weight: f64,
    /// `i_k`, 1-based first position of the pivot plateau.
    pub lo: usize,
    /// `j_k`, 1-based last position of the pivot plateau.
    pub hi: usize,
}

/// The mixture decomposition of a fixed-size non-uniform batch sampling.
#[derive(Clone, Debug)]
pub struct BatchMixture {
    batch: usize,
    n: usize,
    components: Vec<MixtureComponent>,
    /// `perm[sorted_pos] = original coordinate id` (0-based).
    perm: Vec<usize>,
}

impl BatchMixture {
    /// Peel the sorted marginals into mixture components.
    ///
    /// Each step locates the plateau of values equal to the b-th largest,
    /// peels off the largest component weight that keeps the remaining
    /// vector sorted, and stops once everything is zero. The plateau merges
    /// with a neighbour value every step, so at most `n` steps run; a guard
    /// errors out if that budget is ever exceeded.
    pub fn decompose(q: &[f64], batch: usize) -> Result<Self, SamplingError> {
        let n = q.len();
        if batch < 1 || batch >= n {
            return Err(SamplingError::InvalidMarginal(format!(
                "batch size {batch} out of range 1..{n}"
            )));
        }
        if let Some(bad) = q.iter().find(|x| !(0.0 < **x && **x < 1.0)) {
            return Err(SamplingError::InvalidMarginal(format!(
                "marginals must lie strictly in (0,1), got {bad}"
            )));
        }
        let sum: f64 = q.iter().sum();
        if (sum - batch as f64).abs() > SUM_TOL {
            return Err(SamplingError::InvalidMarginal(format!(
                "marginals sum to {sum}, expected {batch}"
            )));
        }

        // Stable descending sort, remembering original ids.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| q[b].partial_cmp(&q[a]).unwrap());
        let mut vals: Vec<f64> = order.iter().map(|&i| q[i]).collect();

        let eps = EPS_SCALE * batch as f64;
        let b = batch;
        let bf = b as f64;
        let mut components: Vec<MixtureComponent> = Vec::new();

        loop {
            if vals.iter().all(|x| *x <= eps) {
                break;
            }
            if components.len() > n {
                return Err(SamplingError::NonTermination);
            }
            let pivot = vals[b - 1];
            let mut lo = b - 1;
            while lo > 0 && vals[lo - 1] - pivot <= eps {
                lo -= 1;
            }
            let mut hi = b - 1;
            while hi + 1 < n && pivot - vals[hi + 1] <= eps {
                hi += 1;
            }
            let len = (hi - lo + 1) as f64;
            let next = if hi + 1 < n { vals[hi + 1] } else { 0.0 };

            let r = if lo == 0 {
                ((hi + 1) as f64 / bf) * (pivot - next)
            } else {
                // Keep the plateau above its right neighbour ...
                let toward_next = len / (b - lo) as f64 * (pivot - next);
                // ... and below its left neighbour (vacuous when hi+1 = b).
                if hi + 1 == b {
                    toward_next
                } else {
                    toward_next.min(len / (hi + 1 - b) as f64 * (vals[lo - 1] - pivot))
                }
            };

            components.push(MixtureComponent {
                weight: r,
                lo: lo + 1,
                hi: hi + 1,
            });
            let frac = (b - lo) as f64 / len;
            for x in &mut vals[..lo] {
                *x -= r;
            }
            for x in &mut vals[lo..=hi] {
                *x -= frac * r;
            }
        }

        if components.is_empty() {
            return Err(SamplingError::InvalidMarginal(
                "no mixture components produced".into(),
            ));
        }
        // Fold the leftover peeling residue into the weights so they sum to
        // exactly one.
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in &mut components {
            c.weight /= total;
        }

        Ok(Self {
            batch,
            n,
            components,
            perm: order,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// `perm[sorted_pos] = original coordinate id`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Draw a batch: pick a component by weight, then its uniform subset.
    /// Always returns `b` distinct original coordinate ids, sorted.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let k = self.pick_component(rng.gen::<f64>());
        self.sample_from_component(k, rng)
    }

    /// Component index for a uniform variate `u` in [0,1).
    pub fn pick_component(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                return k;
            }
        }
        self.components.len() - 1
    }

    /// Draw the batch conditional on component `k`.
    pub fn sample_from_component<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        let c = self.components[k];
        let take = self.batch - (c.lo - 1);
        let mut range: Vec<usize> = (c.lo - 1..c.hi).collect(); // 0-based sorted positions
        // Partial Fisher-Yates: the first `take` slots end up a uniform subset.
        for slot in 0..take {
            let j = rng.gen_range(slot..range.len());
            range.swap(slot, j);
        }
        let mut out: Vec<usize> = (0..c.lo - 1)
            .chain(range[..take].iter().copied())
            .map(|pos| self.perm[pos])
            .collect();
        out.sort_unstable();
        out
    }

    /// Analytic per-coordinate inclusion probabilities, in original order:
    /// position `p` is covered with probability 1 by components with
    /// `p < lo` and with probability `(b - lo + 1)/(hi - lo + 1)` by
    /// components whose plateau contains it.
    pub fn marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.n];
        for (pos, &orig) in self.perm.iter().enumerate() {
            let p = pos + 1; // 1-based sorted position
            let mut m = 0.0;
            for c in &self.components {
                if p < c.lo {
                    m += c.weight;
                } else if p <= c.hi {
                    m += c.weight * (self.batch - (c.lo - 1)) as f64 / (c.hi - c.lo + 1) as f64;
                }
            }
            out[orig] = m;
        }
        out
    }
}

/// Turn a probability vector into a batch-`b` marginal: `q = b p`, with
/// iterative water-filling when some `b p_i` exceeds 1. Offending entries are
/// capped at `1 - 1e-9` and the excess is redistributed proportionally over
/// the uncapped entries until everything fits; the sum `b` is preserved.
pub fn clip_marginals(p: &[f64], batch: usize) -> Result<Vec<f64>, SamplingError> {
    let n = p.len();
    let total: f64 = p.iter().sum();
    if n == 0 || !(total > 0.0) {
        return Err(SamplingError::DegenerateDistribution);
    }
    let positive = p.iter().filter(|x| **x > 0.0).count();
    if batch > positive {
        return Err(SamplingError::InfeasibleMarginal(format!(
            "batch size {batch} exceeds the {positive} coordinates with positive probability"
        )));
    }
    let bf = batch as f64;
    let mut q: Vec<f64> = p.iter().map(|pi| bf * pi / total).collect();
    let cap = 1.0 - CAP_MARGIN;
    if q.iter().all(|x| *x <= cap) {
        return Ok(q);
    }
    let mut capped = vec![false; n];
    loop {
        let mut excess = 0.0;
        for i in 0..n {
            if !capped[i] && q[i] > cap {
                excess += q[i] - cap;
                q[i] = cap;
                capped[i] = true;
            }
        }
        if excess == 0.0 {
            break;
        }
        let open_mass: f64 = (0..n)
            .filter(|&i| !capped[i] && q[i] > 0.0)
            .map(|i| q[i])
            .sum();
        if !(open_mass > 0.0) {
            return Err(SamplingError::InfeasibleMarginal(
                "no uncapped coordinate left to absorb clipped mass".into(),
            ));
        }
        let scale = excess / open_mass;
        for i in 0..n {
            if !capped[i] && q[i] > 0.0 {
                q[i] += scale * q[i];
            }
        }
    }
    Ok(q)
}
