//! Dual-free coordinate ascent solvers with adaptive sampling.
//!
//! All variants maintain the primal-dual mapping
//! `w = (1/(lambda n)) sum_i alpha_i x_i` and drive the dual residues
//! `kappa_i = alpha_i + phi'_i(x_i^T w)` to zero:
//!
//! - `AdfSdca`: residues feed a fresh sampling distribution
//!   `p*_i ∝ sqrt(v_i gamma + n lambda^2) |kappa_i|` every iteration
//!   (alias-table draw),
//! - `AdfSdcaPlus`: the distribution is rebuilt only at epoch boundaries and
//!   lives in a sum tree; a drawn coordinate's weight is divided by the
//!   shrink factor `s` so it is unlikely to be drawn again soon,
//! - `MiniBatch`: `b` coordinates per iteration from a mixture-decomposed
//!   non-uniform batch sampling consistent with `p*` (clipped where
//!   `b p*_i > 1`), with the matching conservative step size built from the
//!   ESO constants `v'_i`,
//! - `UniformBaseline`: fixed uniform sampling with the classical safe step
//!   `lambda / (lambda n + L̃ max_i v_i)`.
//!
//! A single run is strictly sequential. Margins are maintained
//! incrementally through the dataset's column view, so an update touches
//! only the samples that share features with the updated coordinate.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{Dataset, Regime};
use crate::losses::{LossKind, LossModel};
use crate::metrics::{self, RunRecord};
use crate::sampling::{clip_marginals, AliasTable, BatchMixture, SamplingError, SumTree};

/// Step sizes live in the open interval (0, 1).
const THETA_MAX: f64 = 1.0 - 1e-12;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Which update schedule to run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant {
    AdfSdca,
    /// Heuristic variant; `shrink > 1` divides a drawn coordinate's weight.
    AdfSdcaPlus { shrink: f64 },
    /// Non-uniform mini-batch of fixed size `batch`.
    MiniBatch { batch: usize },
    UniformBaseline,
}

impl Variant {
    /// Coordinates updated per iteration.
    pub fn batch_size(&self) -> usize {
        match self {
            Variant::MiniBatch { batch } => *batch,
            _ => 1,
        }
    }
}

/// Step-size schedule: the per-iteration optimum or the constant lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaMode {
    PerIteration,
    FixedThetaStar,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub lambda: f64,
    pub loss: LossKind,
    pub variant: Variant,
    pub regime: Regime,
    pub epochs: usize,
    pub seed: u64,
    pub theta_mode: ThetaMode,
    /// Stop once the duality gap at an epoch boundary falls below this.
    pub gap_tol: f64,
}

impl SolverConfig {
    pub fn validate(&self, n: usize) -> Result<(), SolverError> {
        if !(self.lambda > 0.0) {
            return Err(SolverError::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        match self.variant {
            Variant::AdfSdcaPlus { shrink } => {
                // shrink = 1 is the no-shrink, epoch-frozen special case.
                if !(shrink >= 1.0) {
                    return Err(SolverError::Config(format!(
                        "shrink parameter must be at least 1, got {shrink}"
                    )));
                }
            }
            Variant::MiniBatch { batch } => {
                if batch < 1 || batch > n {
                    return Err(SolverError::Config(format!(
                        "batch size {batch} out of range 1..={n}"
                    )));
                }
            }
            _ => {}
        }
        if self.gap_tol < 0.0 {
            return Err(SolverError::Config("gap tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Mutable iterate of a run: primal weights, pseudo-dual variables, cached
/// margins `z_i = x_i^T w` and dual residues `kappa_i = alpha_i + phi'_i(z_i)`.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub w: Vec<f64>,
    pub alpha: Vec<f64>,
    pub margins: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Iterations taken.
    pub t: u64,
    /// Completed epochs.
    pub epoch: u64,
}

impl SolverState {
    /// Build the mapped state for a given `alpha`: `w` from the primal-dual
    /// mapping, margins and residues recomputed from scratch.
    pub fn from_alpha(ds: &Dataset, loss: &LossModel, lambda: f64, alpha: Vec<f64>) -> Self {
        assert_eq!(alpha.len(), ds.n());
        let mut w = vec![0.0f64; ds.d()];
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let (cols, vals) = ds.row(i);
                for (&f, &x) in cols.iter().zip(vals) {
                    w[f] += a * x;
                }
            }
        }
        let scale = 1.0 / (lambda * ds.n() as f64);
        for x in &mut w {
            *x *= scale;
        }
        let margins: Vec<f64> = (0..ds.n()).map(|i| ds.row_dot(i, &w)).collect();
        let residuals: Vec<f64> = margins
            .iter()
            .zip(ds.labels())
            .zip(&alpha)
            .map(|((&z, &y), &a)| a + loss.derivative(z, y))
            .collect();
        Self {
            w,
            alpha,
            margins,
            residuals,
            t: 0,
            epoch: 0,
        }
    }
}

/// Dual residues `kappa_i = alpha_i + phi'_i(z_i)` from the cached margins.
pub fn dual_residuals(ds: &Dataset, loss: &LossModel, state: &SolverState) -> Vec<f64> {
    state
        .margins
        .iter()
        .zip(ds.labels())
        .zip(&state.alpha)
        .map(|((&z, &y), &a)| a + loss.derivative(z, y))
        .collect()
}

/// The step-size-maximizing sampling distribution
/// `p*_i = sqrt(v_i gamma + n lambda^2) |kappa_i| / (normalizer)`,
/// zero off the residue support. Returns `None` when `kappa = 0` (optimum).
pub fn adaptive_probabilities(kappa: &[f64], v: &[f64], gamma: f64, lambda: f64) -> Option<Vec<f64>> {
    let n = kappa.len() as f64;
    let nls = n * lambda * lambda;
    let mut total = 0.0;
    let mut p: Vec<f64> = kappa
        .iter()
        .zip(v)
        .map(|(&k, &vi)| {
            let w = (vi * gamma + nls).sqrt() * k.abs();
            total += w;
            w
        })
        .collect();
    if !(total > 0.0) {
        return None;
    }
    for x in &mut p {
        *x /= total;
    }
    Some(p)
}

/// The largest provably safe step for sampling distribution `p`:
/// `Theta(kappa, p) = b n lambda^2 sum kappa_i^2
///  / sum (n lambda^2 + v_i gamma) kappa_i^2 / p_i`,
/// summed over the residue support and clamped into (0, 1). For a mini-batch
/// pass `v` must carry the ESO constants `v'` and `p` the effective
/// per-coordinate probabilities `q_i / b`.
pub fn step_size(kappa: &[f64], p: &[f64], v: &[f64], gamma: f64, lambda: f64, batch: usize) -> f64 {
    let n = kappa.len() as f64;
    let nls = n * lambda * lambda;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..kappa.len() {
        let k = kappa[i];
        if k != 0.0 {
            assert!(p[i] > 0.0, "p must be coherent with kappa (p[{i}] = {})", p[i]);
            num += k * k;
            den += (nls + v[i] * gamma) * k * k / p[i];
        }
    }
    (batch as f64 * nls * num / den).min(THETA_MAX)
}

/// `Theta(kappa, p*)` in closed form:
/// `b n lambda^2 sum kappa_i^2 / (sum sqrt(v_i gamma + n lambda^2)|kappa_i|)^2`.
pub fn optimal_step_size(kappa: &[f64], v: &[f64], gamma: f64, lambda: f64, batch: usize) -> f64 {
    let n = kappa.len() as f64;
    let nls = n * lambda * lambda;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (&k, &vi) in kappa.iter().zip(v) {
        s1 += k * k;
        s2 += (vi * gamma + nls).sqrt() * k.abs();
    }
    (batch as f64 * nls * s1 / (s2 * s2)).min(THETA_MAX)
}

/// The sampling-weighted mean update direction
/// `sum_i p_i * kappa_i x_i / (n p_i)`, computed literally through `p`.
/// For any `p` coherent with `kappa` this equals `grad P(w)` whenever the
/// primal-dual mapping holds.
pub fn expected_update_direction(ds: &Dataset, kappa: &[f64], p: &[f64]) -> Vec<f64> {
    let n = ds.n() as f64;
    let mut g = vec![0.0f64; ds.d()];
    for i in 0..ds.n() {
        if p[i] > 0.0 {
            let coeff = p[i] * (kappa[i] / (n * p[i]));
            let (cols, vals) = ds.row(i);
            for (&f, &x) in cols.iter().zip(vals) {
                g[f] += coeff * x;
            }
        }
    }
    g
}

/// Potential `D = (1/n)||alpha - alpha*||^2 + gamma ||w - w*||^2` against a
/// reference state.
pub fn potential(state: &SolverState, reference: &SolverState, gamma: f64) -> f64 {
    let n = state.alpha.len() as f64;
    let da: f64 = state
        .alpha
        .iter()
        .zip(&reference.alpha)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let dw: f64 = state
        .w
        .iter()
        .zip(&reference.w)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    da / n + gamma * dw
}

/// Final state of a run plus the per-epoch records it emitted.
#[derive(Debug)]
pub struct SolveResult {
    pub state: SolverState,
    pub records: Vec<RunRecord>,
    /// True when the run stopped because every residue reached exactly zero.
    pub converged: bool,
}

/// One solver run over an immutable dataset. Exposes single-iteration
/// stepping; [`solve`] drives whole epochs.
pub struct Solver<'a> {
    ds: &'a Dataset,
    loss: LossModel,
    config: SolverConfig,
    state: SolverState,
    rng: ChaCha8Rng,
    /// `gamma` (all-convex) or `gamma-bar` (average-convex).
    gamma: f64,
    theta_star: f64,
    uniform_theta: f64,
    /// `v` for serial variants, ESO `v'` for the mini-batch variant.
    v_eff: Vec<f64>,
    /// `sqrt(v_eff_i * gamma + n lambda^2)`.
    weight_factor: Vec<f64>,
    /// Running `sum kappa_i^2` over all coordinates.
    sum_kappa_sq: f64,
    /// Running `sum weight_factor_i |kappa_i|`.
    sum_weighted_abs: f64,
    tree: Option<SumTree>,
    last_theta: f64,
    converged: bool,
    // Scratch reused across iterations.
    weights_buf: Vec<f64>,
    support_buf: Vec<usize>,
    items_buf: Vec<(usize, f64)>,
    dw: Vec<f64>,
    feat_stamp: Vec<u64>,
    touched_feats: Vec<usize>,
    sample_stamp: Vec<u64>,
    touched_samples: Vec<usize>,
    stamp: u64,
}

impl<'a> Solver<'a> {
    pub fn new(ds: &'a Dataset, config: SolverConfig) -> Result<Self, SolverError> {
        config.validate(ds.n())?;
        let loss = LossModel::new(config.loss);
        let b = config.variant.batch_size();
        let constants = ds
            .theory_constants(&loss, config.lambda, config.regime, b)
            .map_err(|e| SolverError::Config(e.to_string()))?;
        let v_eff = match config.variant {
            Variant::MiniBatch { batch } => ds
                .eso_constants(batch)
                .map_err(|e| SolverError::Config(e.to_string()))?,
            _ => ds.squared_norms().to_vec(),
        };
        let n = ds.n();
        let nls = n as f64 * config.lambda * config.lambda;
        let weight_factor: Vec<f64> = v_eff
            .iter()
            .map(|vi| (vi * constants.gamma + nls).sqrt())
            .collect();
        let max_v = ds.squared_norms().iter().cloned().fold(0.0, f64::max);
        let uniform_theta =
            config.lambda / (config.lambda * n as f64 + loss.lipschitz() * max_v);
        let state = SolverState::from_alpha(ds, &loss, config.lambda, vec![0.0; n]);
        let mut solver = Self {
            ds,
            loss,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            gamma: constants.gamma,
            theta_star: constants.theta_star,
            uniform_theta,
            v_eff,
            weight_factor,
            sum_kappa_sq: 0.0,
            sum_weighted_abs: 0.0,
            tree: None,
            last_theta: 0.0,
            converged: false,
            weights_buf: Vec::with_capacity(n),
            support_buf: Vec::with_capacity(n),
            items_buf: Vec::with_capacity(b),
            dw: vec![0.0; ds.d()],
            feat_stamp: vec![0; ds.d()],
            touched_feats: Vec::with_capacity(ds.d()),
            sample_stamp: vec![0; n],
            touched_samples: Vec::with_capacity(n),
            stamp: 0,
            state,
            config,
        };
        solver.refresh_sums();
        Ok(solver)
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }

    pub fn last_theta(&self) -> f64 {
        self.last_theta
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Fractional passes over the data so far.
    pub fn epochs_fraction(&self) -> f64 {
        (self.state.t * self.config.variant.batch_size() as u64) as f64 / self.ds.n() as f64
    }

    fn refresh_sums(&mut self) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (i, &k) in self.state.residuals.iter().enumerate() {
            s1 += k * k;
            s2 += self.weight_factor[i] * k.abs();
        }
        self.sum_kappa_sq = s1;
        self.sum_weighted_abs = s2;
    }

    /// Per-iteration optimal step from the maintained residue sums, or the
    /// fixed lower bound.
    fn select_theta(&self, batch: usize) -> f64 {
        match self.config.theta_mode {
            ThetaMode::FixedThetaStar => self.theta_star.min(THETA_MAX),
            ThetaMode::PerIteration => {
                let s1 = self.sum_kappa_sq.max(0.0);
                let s2 = self.sum_weighted_abs.max(0.0);
                let nls = self.ds.n() as f64 * self.config.lambda * self.config.lambda;
                let raw = batch as f64 * nls * s1 / (s2 * s2);
                if raw.is_finite() && raw > 0.0 {
                    raw.min(THETA_MAX)
                } else {
                    self.theta_star.min(THETA_MAX)
                }
            }
        }
    }

    /// Apply one iteration's coordinate updates.
    ///
    /// `items` holds `(coordinate, effective probability)` pairs;
    /// `denom_scale` is 1 for serial updates and `b` for mini-batch updates,
    /// so a residue is scaled by `theta / (denom_scale * p_i)`. All alpha
    /// updates read the residues as of the start of the call, then the
    /// accumulated weight change is pushed through the column view into the
    /// margin cache and the touched residues and sums are refreshed.
    pub fn apply_updates(&mut self, items: &[(usize, f64)], theta: f64, denom_scale: usize) {
        self.last_theta = theta;
        let ds = self.ds;
        let n_lambda = ds.n() as f64 * self.config.lambda;
        self.stamp += 1;
        let stamp = self.stamp;

        for &(i, p) in items {
            let kappa = self.state.residuals[i];
            if kappa == 0.0 {
                continue; // no-op iteration; still consumes the slot
            }
            debug_assert!(p > 0.0);
            let d_alpha = -theta * kappa / (denom_scale as f64 * p);
            self.state.alpha[i] += d_alpha;
            let coef = d_alpha / n_lambda;
            let (cols, vals) = ds.row(i);
            for (&f, &x) in cols.iter().zip(vals) {
                if self.feat_stamp[f] != stamp {
                    self.feat_stamp[f] = stamp;
                    self.touched_feats.push(f);
                }
                self.dw[f] += coef * x;
            }
            if self.sample_stamp[i] != stamp {
                self.sample_stamp[i] = stamp;
                self.touched_samples.push(i);
                let old = self.state.residuals[i];
                self.sum_kappa_sq -= old * old;
                self.sum_weighted_abs -= self.weight_factor[i] * old.abs();
            }
        }

        let mut fi = 0;
        while fi < self.touched_feats.len() {
            let f = self.touched_feats[fi];
            fi += 1;
            let dwf = self.dw[f];
            self.dw[f] = 0.0;
            if dwf == 0.0 {
                continue;
            }
            self.state.w[f] += dwf;
            let (rows, vals) = ds.col(f);
            for (&j, &x) in rows.iter().zip(vals) {
                if self.sample_stamp[j] != stamp {
                    self.sample_stamp[j] = stamp;
                    self.touched_samples.push(j);
                    let old = self.state.residuals[j];
                    self.sum_kappa_sq -= old * old;
                    self.sum_weighted_abs -= self.weight_factor[j] * old.abs();
                }
                self.state.margins[j] += dwf * x;
            }
        }
        self.touched_feats.clear();

        let touched = std::mem::take(&mut self.touched_samples);
        for &j in &touched {
            let k =
                self.state.alpha[j] + self.loss.derivative(self.state.margins[j], ds.labels()[j]);
            self.state.residuals[j] = k;
            self.sum_kappa_sq += k * k;
            self.sum_weighted_abs += self.weight_factor[j] * k.abs();
        }
        self.touched_samples = touched;
        self.touched_samples.clear();

        self.state.t += 1;
    }

    /// Run one iteration. Returns `Ok(false)` once the residue vector is
    /// exactly zero (nothing left to do).
    pub fn step(&mut self) -> Result<bool, SolverError> {
        if self.converged {
            return Ok(false);
        }
        match self.config.variant {
            Variant::AdfSdca => self.step_adaptive(),
            Variant::AdfSdcaPlus { shrink } => self.step_heuristic(shrink),
            Variant::MiniBatch { batch } => self.step_minibatch(batch),
            Variant::UniformBaseline => self.step_uniform(),
        }
    }

    fn step_adaptive(&mut self) -> Result<bool, SolverError> {
        // Fresh sampling weights and exact sums every iteration.
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        self.weights_buf.clear();
        for (i, &k) in self.state.residuals.iter().enumerate() {
            let w = self.weight_factor[i] * k.abs();
            s1 += k * k;
            s2 += w;
            self.weights_buf.push(w);
        }
        self.sum_kappa_sq = s1;
        self.sum_weighted_abs = s2;
        if !(s2 > 0.0) {
            self.converged = true;
            return Ok(false);
        }
        let table = AliasTable::build(&self.weights_buf)?;
        let theta = self.select_theta(1);
        let i = table.sample(&mut self.rng);
        let p_i = self.weights_buf[i] / s2;
        self.apply_updates(&[(i, p_i)], theta, 1);
        Ok(true)
    }

    fn step_heuristic(&mut self, shrink: f64) -> Result<bool, SolverError> {
        let n = self.ds.n() as u64;
        if self.state.t % n == 0 || self.tree.is_none() {
            // Epoch boundary: exact sums and a fresh sampling tree.
            self.refresh_sums();
            if !(self.sum_weighted_abs > 0.0) {
                self.converged = true;
                return Ok(false);
            }
            self.weights_buf.clear();
            for (i, &k) in self.state.residuals.iter().enumerate() {
                self.weights_buf.push(self.weight_factor[i] * k.abs());
            }
            self.tree = Some(SumTree::build(&self.weights_buf)?);
        }
        let tree = self.tree.as_ref().expect("tree built above");
        let i = tree.sample(&mut self.rng)?;
        let p_i = tree.get(i) / tree.total();
        let theta = self.select_theta(1);
        self.apply_updates(&[(i, p_i)], theta, 1);
        let tree = self.tree.as_mut().expect("tree built above");
        tree.update(i, tree.get(i) / shrink);
        Ok(true)
    }

    fn step_minibatch(&mut self, batch: usize) -> Result<bool, SolverError> {
        let lambda = self.config.lambda;
        let nls = self.ds.n() as f64 * lambda * lambda;
        // Fresh support and exact sums every iteration.
        let mut support = std::mem::take(&mut self.support_buf);
        support.clear();
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (i, &k) in self.state.residuals.iter().enumerate() {
            if k != 0.0 {
                support.push(i);
            }
            s1 += k * k;
            s2 += self.weight_factor[i] * k.abs();
        }
        self.sum_kappa_sq = s1;
        self.sum_weighted_abs = s2;
        if support.is_empty() {
            self.support_buf = support;
            self.converged = true;
            return Ok(false);
        }

        let mut items = std::mem::take(&mut self.items_buf);
        items.clear();
        let theta;
        if support.len() <= batch {
            // Fewer live residues than the batch: update them all
            // deterministically (inclusion probability 1 each).
            for &i in &support {
                items.push((i, 1.0 / batch as f64));
            }
            theta = match self.config.theta_mode {
                ThetaMode::FixedThetaStar => self.theta_star.min(THETA_MAX),
                ThetaMode::PerIteration => {
                    let den: f64 = support
                        .iter()
                        .map(|&i| {
                            let k = self.state.residuals[i];
                            (nls + self.v_eff[i] * self.gamma) * k * k
                        })
                        .sum();
                    (nls * s1 / den).min(THETA_MAX)
                }
            };
        } else {
            let p_support: Vec<f64> = support
                .iter()
                .map(|&i| self.weight_factor[i] * self.state.residuals[i].abs() / s2)
                .collect();
            let q = clip_marginals(&p_support, batch)?;
            let mixture = BatchMixture::decompose(&q, batch)?;
            let chosen = mixture.sample(&mut self.rng);
            theta = match self.config.theta_mode {
                ThetaMode::FixedThetaStar => self.theta_star.min(THETA_MAX),
                ThetaMode::PerIteration => {
                    let bf = batch as f64;
                    let den: f64 = support
                        .iter()
                        .zip(&q)
                        .map(|(&i, &qi)| {
                            let k = self.state.residuals[i];
                            (nls + self.v_eff[i] * self.gamma) * k * k * bf / qi
                        })
                        .sum();
                    (bf * nls * s1 / den).min(THETA_MAX)
                }
            };
            for &pos in &chosen {
                items.push((support[pos], q[pos] / batch as f64));
            }
        }
        self.apply_updates(&items, theta, batch);
        self.items_buf = items;
        self.support_buf = support;
        Ok(true)
    }

    fn step_uniform(&mut self) -> Result<bool, SolverError> {
        let n = self.ds.n();
        let i = self.rng.gen_range(0..n);
        let theta = self.uniform_theta;
        self.apply_updates(&[(i, 1.0 / n as f64)], theta, 1);
        Ok(true)
    }

    /// Metrics row for the current state.
    pub fn make_record(&self, started: Instant) -> RunRecord {
        let primal =
            metrics::primal_objective(self.ds, &self.loss, self.config.lambda, &self.state);
        let dual =
            metrics::dual_objective_mapped(self.ds, &self.loss, self.config.lambda, &self.state);
        let residual_sq_norm: f64 = self.state.residuals.iter().map(|k| k * k).sum();
        RunRecord {
            epoch: self.epochs_fraction(),
            primal,
            dual,
            gap: primal - dual,
            residual_sq_norm,
            theta_used: self.last_theta,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        }
    }

    #[cfg(test)]
    fn set_state_for_test(&mut self, state: SolverState) {
        self.state = state;
        self.refresh_sums();
    }
}

/// Run a full configuration and collect per-epoch records.
pub fn solve(ds: &Dataset, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    solve_with(ds, config, |_| {})
}

/// As [`solve`], invoking `on_record` as each per-epoch record is produced
/// (including the initial state at epoch 0).
pub fn solve_with(
    ds: &Dataset,
    config: &SolverConfig,
    mut on_record: impl FnMut(&RunRecord),
) -> Result<SolveResult, SolverError> {
    let mut solver = Solver::new(ds, config.clone())?;
    let started = Instant::now();
    let batch = config.variant.batch_size();
    let iters_per_epoch = ds.n().div_ceil(batch);
    let mut records = Vec::with_capacity(config.epochs + 1);

    let first = solver.make_record(started);
    on_record(&first);
    let mut reached_tol = first.gap <= config.gap_tol;
    records.push(first);

    if !reached_tol {
        for _ in 1..=config.epochs {
            for _ in 0..iters_per_epoch {
                if !solver.step()? {
                    break;
                }
            }
            solver.state.epoch += 1;
            let record = solver.make_record(started);
            on_record(&record);
            reached_tol = record.gap <= config.gap_tol;
            records.push(record);
            if solver.converged() || reached_tol {
                break;
            }
        }
    }

    let converged = solver.converged();
    Ok(SolveResult {
        state: solver.into_state(),
        records,
        converged,
    })
}
