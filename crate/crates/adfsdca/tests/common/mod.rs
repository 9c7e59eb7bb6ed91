//! Shared fixtures for the integration suites: synthetic instances built
//! through the LIBSVM parser, and small numeric helpers.

use adfsdca::data::{Dataset, Regime};
use adfsdca::losses::{LossKind, LossModel};
use adfsdca::solver::{SolverConfig, SolverState, ThetaMode, Variant};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Standard normal via Box-Muller.
pub fn gauss(rng: &mut StdRng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Dense synthetic instance with row norms log-uniform in
/// `[norm_lo, norm_hi]`, labels from a planted linear model. Built as LIBSVM
/// text and parsed, so it exercises the ingestion path.
pub fn synthetic_dataset(
    n: usize,
    d: usize,
    seed: u64,
    norm_lo: f64,
    norm_hi: f64,
    loss: LossKind,
) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let w_true: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
    let mut text = String::new();
    for _ in 0..n {
        let mut row: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
        let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let target = norm_lo * (norm_hi / norm_lo).powf(rng.gen::<f64>());
        for x in &mut row {
            *x *= target / norm;
        }
        let margin: f64 = row.iter().zip(&w_true).map(|(x, w)| x * w).sum();
        let label = match loss {
            LossKind::Quadratic => margin + 0.1 * gauss(&mut rng),
            LossKind::Logistic => {
                if margin + 0.5 * gauss(&mut rng) >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        text.push_str(&format!("{label}"));
        for (j, x) in row.iter().enumerate() {
            text.push_str(&format!(" {}:{}", j + 1, x));
        }
        text.push('\n');
    }
    Dataset::parse_libsvm(&text).expect("synthetic instance parses")
}

pub fn base_config(variant: Variant, lambda: f64, seed: u64) -> SolverConfig {
    SolverConfig {
        lambda,
        loss: LossKind::Quadratic,
        variant,
        regime: Regime::AllConvex,
        epochs: 100,
        seed,
        theta_mode: ThetaMode::PerIteration,
        gap_tol: 0.0,
    }
}

/// First recorded epoch at which the gap reached `tol`.
pub fn epochs_to_gap(records: &[adfsdca::metrics::RunRecord], tol: f64) -> Option<f64> {
    records.iter().find(|r| r.gap <= tol).map(|r| r.epoch)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Primal objective at an arbitrary weight vector, margins recomputed from
/// scratch (used as the base function for finite-difference gradients).
pub fn primal_at(ds: &Dataset, loss: &LossModel, lambda: f64, w: &[f64]) -> f64 {
    let n = ds.n() as f64;
    let data: f64 = (0..ds.n())
        .map(|i| loss.value(ds.row_dot(i, w), ds.labels()[i]))
        .sum();
    let reg: f64 = w.iter().map(|x| x * x).sum();
    data / n + 0.5 * lambda * reg
}

/// Mapped state for a random pseudo-dual vector.
pub fn random_state(ds: &Dataset, loss: &LossModel, lambda: f64, rng: &mut StdRng) -> SolverState {
    let alpha: Vec<f64> = (0..ds.n()).map(|_| gauss(rng)).collect();
    SolverState::from_alpha(ds, loss, lambda, alpha)
}
