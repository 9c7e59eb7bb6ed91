//! Loss functions: values, derivatives, convex conjugates and smoothness
//! constants for the quadratic and logistic losses.
//!
//! Both losses are smooth: the scalar derivative is `L̃`-Lipschitz with
//! `L̃ = 1` (quadratic) and `L̃ = 1/4` (logistic). The sample-level constant
//! is `L_i = ||x_i||^2 * L̃`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    /// Conjugate argument outside the domain of the conjugate function.
    #[error("conjugate domain violation: {0}")]
    Domain(String),
    #[error("empty input")]
    EmptyInput,
}

/// Which loss is in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// `phi(z) = (z - y)^2 / 2`
    Quadratic,
    /// `phi(z) = log(1 + exp(-y z))`, labels in {-1, +1}
    Logistic,
}

/// A loss kind together with its derivative Lipschitz constant.
#[derive(Clone, Copy, Debug)]
pub struct LossModel {
    kind: LossKind,
    lipschitz: f64,
}

/// Per-sample smoothness constants `L_i = v_i * L̃` and their maximum.
#[derive(Clone, Debug)]
pub struct SmoothnessConstants {
    pub per_sample: Vec<f64>,
    /// `L = max_i L_i`
    pub max: f64,
    /// Derivative Lipschitz constant `L̃` shared by all samples.
    pub lipschitz: f64,
}

/// Slack allowed before a logistic conjugate argument counts as out of domain.
const CONJUGATE_DOMAIN_TOL: f64 = 1e-12;

impl LossModel {
    pub fn new(kind: LossKind) -> Self {
        let lipschitz = match kind {
            LossKind::Quadratic => 1.0,
            LossKind::Logistic => 0.25,
        };
        Self { kind, lipschitz }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    /// The derivative Lipschitz constant `L̃`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `phi(z)` at margin `z` for a sample with label `y`.
    ///
    /// The logistic branch is the softplus form `log1p(exp(-|yz|)) + max(0, -yz)`,
    /// finite for any representable margin.
    pub fn value(&self, margin: f64, label: f64) -> f64 {
        match self.kind {
            LossKind::Quadratic => {
                let r = margin - label;
                0.5 * r * r
            }
            LossKind::Logistic => {
                let m = label * margin;
                if m >= 0.0 {
                    (-m).exp().ln_1p()
                } else {
                    -m + m.exp().ln_1p()
                }
            }
        }
    }

    /// `phi'(z)`: `z - y` (quadratic) or `-y / (1 + exp(yz))` (logistic).
    pub fn derivative(&self, margin: f64, label: f64) -> f64 {
        match self.kind {
            LossKind::Quadratic => margin - label,
            LossKind::Logistic => {
                let m = label * margin;
                if m >= 0.0 {
                    let e = (-m).exp();
                    -label * e / (1.0 + e)
                } else {
                    -label / (1.0 + m.exp())
                }
            }
        }
    }

    /// The conjugate `phi*(-a)` evaluated at a pseudo-dual value `a`.
    ///
    /// Quadratic: `a^2/2 - a y` for any real `a`. Logistic: with `s = a y`,
    /// `s log s + (1 - s) log(1 - s)`, defined for `s` in `[0, 1]` with the
    /// convention `0 log 0 = 0`.
    pub fn conjugate(&self, dual: f64, label: f64) -> Result<f64, LossError> {
        match self.kind {
            LossKind::Quadratic => Ok(0.5 * dual * dual - dual * label),
            LossKind::Logistic => {
                let s = dual * label;
                if !(-CONJUGATE_DOMAIN_TOL..=1.0 + CONJUGATE_DOMAIN_TOL).contains(&s) {
                    return Err(LossError::Domain(format!(
                        "logistic conjugate needs a*y in [0,1], got {s}"
                    )));
                }
                let s = s.clamp(0.0, 1.0);
                Ok(xlogx(s) + xlogx(1.0 - s))
            }
        }
    }

    /// `L_i = v_i * L̃` for each sample, plus `L = max_i L_i`.
    pub fn smoothness_constants(&self, v: &[f64]) -> Result<SmoothnessConstants, LossError> {
        if v.is_empty() {
            return Err(LossError::EmptyInput);
        }
        let per_sample: Vec<f64> = v.iter().map(|vi| vi * self.lipschitz).collect();
        let max = per_sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(SmoothnessConstants {
            per_sample,
            max,
            lipschitz: self.lipschitz,
        })
    }
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn quad() -> LossModel {
        LossModel::new(LossKind::Quadratic)
    }

    fn logi() -> LossModel {
        LossModel::new(LossKind::Logistic)
    }

    #[test]
    fn values() {
        assert_eq!(quad().value(1.0, 1.0), 0.0);
        assert_eq!(quad().value(3.0, 1.0), 2.0); // (3-1)^2/2
        assert!((logi().value(0.0, 1.0) - LN2).abs() < 1e-15);
    }

    #[test]
    fn derivatives() {
        assert_eq!(quad().derivative(1.0, 1.0), 0.0);
        assert_eq!(logi().derivative(0.0, 1.0), -0.5);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        // Central-difference oracle, h = 1e-5, tolerance 1e-6.
        let h = 1e-5;
        for model in [quad(), logi()] {
            for &y in &[-1.0, 1.0] {
                for k in -20..=20 {
                    let z = k as f64 * 0.35 + 0.7; // includes the (0.7, -1) case
                    let fd = (model.value(z + h, y) - model.value(z - h, y)) / (2.0 * h);
                    let an = model.derivative(z, y);
                    assert!(
                        (fd - an).abs() < 1e-6,
                        "kind={:?} z={z} y={y}: fd={fd} analytic={an}",
                        model.kind()
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_is_lipschitz() {
        for model in [quad(), logi()] {
            let lt = model.lipschitz();
            for k in 0..200 {
                let z = (k as f64 - 100.0) * 0.13;
                let delta = 0.017 * (k as f64 + 1.0);
                let lhs = (model.derivative(z, 1.0) - model.derivative(z + delta, 1.0)).abs();
                assert!(lhs <= lt * delta + 1e-12, "kind={:?}", model.kind());
            }
        }
    }

    #[test]
    fn conjugate_values() {
        assert_eq!(quad().conjugate(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(quad().conjugate(2.0, 1.0).unwrap(), 0.0); // 4/2 - 2
        let s_half = logi().conjugate(0.5, 1.0).unwrap();
        assert!((s_half - (-LN2)).abs() < 1e-15); // binary entropy at 1/2
    }

    #[test]
    fn conjugate_endpoints_are_finite() {
        // 0 log 0 = 0 exactly at s in {0, 1}.
        assert_eq!(logi().conjugate(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(logi().conjugate(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(logi().conjugate(-1.0, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn conjugate_domain_error() {
        assert!(logi().conjugate(1.5, 1.0).is_err());
        assert!(logi().conjugate(-0.5, 1.0).is_err());
        // Within tolerance of the boundary is clamped, not rejected.
        assert!(logi().conjugate(1.0 + 1e-13, 1.0).is_ok());
    }

    #[test]
    fn fenchel_young_equality_at_mapped_point() {
        // With a = -phi'(z): phi(z) + phi*(-a) = -a z.
        for model in [quad(), logi()] {
            for &y in &[-1.0, 1.0] {
                for k in -30..=30 {
                    let z = k as f64 * 0.21;
                    let a = -model.derivative(z, y);
                    let lhs = model.value(z, y) + model.conjugate(a, y).unwrap();
                    assert!(
                        (lhs - (-a * z)).abs() < 1e-9,
                        "kind={:?} z={z} y={y}",
                        model.kind()
                    );
                }
            }
        }
    }

    #[test]
    fn logistic_is_stable_for_large_margins() {
        for &z in &[1e4, -1e4, 3e3, -3e3] {
            for &y in &[-1.0, 1.0] {
                let v = logi().value(z, y);
                let g = logi().derivative(z, y);
                assert!(v.is_finite() && g.is_finite(), "z={z} y={y}");
                assert!(g.abs() <= 1.0);
            }
        }
    }

    #[test]
    fn smoothness_constants_scale_v() {
        let q = quad().smoothness_constants(&[1.0, 1.0]).unwrap();
        assert_eq!(q.per_sample, vec![1.0, 1.0]);
        let l = logi().smoothness_constants(&[4.0, 8.0]).unwrap();
        assert_eq!(l.per_sample, vec![1.0, 2.0]);
        let q2 = quad().smoothness_constants(&[0.25, 9.0]).unwrap();
        assert_eq!(q2.per_sample, vec![0.25, 9.0]);
        assert_eq!(q2.max, 9.0);
        assert!(quad().smoothness_constants(&[]).is_err());
    }
}
