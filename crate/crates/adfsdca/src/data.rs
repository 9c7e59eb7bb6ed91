//! LIBSVM-format ingestion and sparse sample storage.
//!
//! A [`Dataset`] keeps the sample matrix twice: compressed rows (needed to
//! evaluate margins `x_i^T w`) and compressed columns (needed to propagate a
//! coordinate update to exactly the margins it touches). It also precomputes
//! the squared row norms `v_i = ||x_i||^2` and the per-feature nonzero counts
//! `|J_j|` that the step-size theory consumes.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use thiserror::Error;

use crate::losses::LossModel;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("index error at line {line}: {msg}")]
    Index { line: usize, msg: String },
    #[error("{0}")]
    Range(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convexity assumption the step-size constants are derived under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Every individual loss is convex: `gamma = lambda * L̃`.
    AllConvex,
    /// Only the average loss is convex: `gamma = (1/n) sum_i L_i^2`.
    AverageConvex,
}

/// Immutable sparse dataset with row and column views.
#[derive(Clone, Debug)]
pub struct Dataset {
    n: usize,
    d: usize,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    labels: Vec<f64>,
    v: Vec<f64>,
    feature_nnz: Vec<usize>,
}

impl Dataset {
    /// Parse LIBSVM text: `label idx:val idx:val ...` per line, indices
    /// 1-based and strictly increasing within a line.
    pub fn parse_libsvm(text: &str) -> Result<Self, DataError> {
        Self::parse_libsvm_with_dim(text, None)
    }

    /// As [`Dataset::parse_libsvm`], with the feature count forced to
    /// `dim_override` (to align a train set with a held-out set).
    pub fn parse_libsvm_with_dim(text: &str, dim_override: Option<usize>) -> Result<Self, DataError> {
        let mut labels = Vec::new();
        let mut row_ptr = vec![0usize];
        let mut row_cols: Vec<usize> = Vec::new();
        let mut row_vals: Vec<f64> = Vec::new();
        let mut max_idx = 0usize;

        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim();
            if line.is_empty() {
                return Err(DataError::Parse {
                    line: line_no,
                    msg: "blank line".into(),
                });
            }
            let mut tokens = line.split_whitespace();
            let label_tok = tokens.next().expect("non-empty line has a first token");
            let label: f64 = label_tok.parse().map_err(|_| DataError::Parse {
                line: line_no,
                msg: format!("bad label `{label_tok}`"),
            })?;
            labels.push(label);

            let mut prev_idx = 0usize;
            for tok in tokens {
                let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| DataError::Parse {
                    line: line_no,
                    msg: format!("expected idx:val, got `{tok}`"),
                })?;
                let idx: usize = idx_s.parse().map_err(|_| DataError::Parse {
                    line: line_no,
                    msg: format!("bad feature index `{idx_s}`"),
                })?;
                let val: f64 = val_s.parse().map_err(|_| DataError::Parse {
                    line: line_no,
                    msg: format!("bad feature value `{val_s}`"),
                })?;
                if idx == 0 {
                    return Err(DataError::Index {
                        line: line_no,
                        msg: "feature indices are 1-based".into(),
                    });
                }
                if idx == prev_idx {
                    return Err(DataError::Parse {
                        line: line_no,
                        msg: format!("duplicate feature index {idx}"),
                    });
                }
                if idx < prev_idx {
                    return Err(DataError::Index {
                        line: line_no,
                        msg: format!("non-increasing feature index {idx} after {prev_idx}"),
                    });
                }
                prev_idx = idx;
                max_idx = max_idx.max(idx);
                if val != 0.0 {
                    row_cols.push(idx - 1);
                    row_vals.push(val);
                }
            }
            row_ptr.push(row_cols.len());
        }

        if labels.is_empty() {
            return Err(DataError::Parse {
                line: 0,
                msg: "empty input".into(),
            });
        }

        let d = match dim_override {
            Some(d) if d < max_idx => {
                return Err(DataError::Index {
                    line: 0,
                    msg: format!("dimension override {d} below max feature index {max_idx}"),
                })
            }
            Some(d) => d,
            None => max_idx,
        };
        if d == 0 {
            return Err(DataError::Parse {
                line: 0,
                msg: "no features".into(),
            });
        }

        normalize_binary_labels(&mut labels);

        let n = labels.len();
        let v: Vec<f64> = (0..n)
            .map(|i| {
                row_vals[row_ptr[i]..row_ptr[i + 1]]
                    .iter()
                    .fold(0.0, |acc, x| acc + x * x)
            })
            .collect();

        // Column view, filled by scanning rows in order so each column ends
        // up sorted by sample index.
        let mut feature_nnz = vec![0usize; d];
        for &c in &row_cols {
            feature_nnz[c] += 1;
        }
        let mut col_ptr = vec![0usize; d + 1];
        for j in 0..d {
            col_ptr[j + 1] = col_ptr[j] + feature_nnz[j];
        }
        let mut cursor = col_ptr.clone();
        let mut col_rows = vec![0usize; row_cols.len()];
        let mut col_vals = vec![0.0f64; row_cols.len()];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = row_cols[k];
                col_rows[cursor[j]] = i;
                col_vals[cursor[j]] = row_vals[k];
                cursor[j] += 1;
            }
        }

        Ok(Self {
            n,
            d,
            row_ptr,
            row_cols,
            row_vals,
            col_ptr,
            col_rows,
            col_vals,
            labels,
            v,
            feature_nnz,
        })
    }

    /// Load from a file path; `.gz` suffixes are decompressed transparently.
    pub fn load_path(path: &Path, dim_override: Option<usize>) -> Result<Self, DataError> {
        let file = File::open(path)?;
        let mut text = String::new();
        if path.extension().is_some_and(|e| e == "gz") {
            flate2::read::GzDecoder::new(BufReader::new(file)).read_to_string(&mut text)?;
        } else {
            BufReader::new(file).read_to_string(&mut text)?;
        }
        Self::parse_libsvm_with_dim(&text, dim_override)
    }

    /// Serialize back to LIBSVM text (1-based indices, shortest exact float
    /// formatting, so a re-parse reproduces the same nonzeros and labels).
    pub fn to_libsvm_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            out.push_str(&format!("{}", self.labels[i]));
            let (cols, vals) = self.row(i);
            for (c, x) in cols.iter().zip(vals) {
                out.push_str(&format!(" {}:{}", c + 1, x));
            }
            out.push('\n');
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Squared row norms `v_i = ||x_i||^2`.
    pub fn squared_norms(&self) -> &[f64] {
        &self.v
    }

    /// Per-feature nonzero counts `|J_j|`.
    pub fn feature_nnz(&self) -> &[usize] {
        &self.feature_nnz
    }

    pub fn max_feature_nnz(&self) -> usize {
        self.feature_nnz.iter().copied().max().unwrap_or(0)
    }

    /// Sparse row `x_i` as parallel (column indices, values) slices.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.row_cols[lo..hi], &self.row_vals[lo..hi])
    }

    /// Sparse column `j` as parallel (sample indices, values) slices.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        (&self.col_rows[lo..hi], &self.col_vals[lo..hi])
    }

    /// `x_i^T w`.
    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).fold(0.0, |acc, (&c, &x)| acc + x * w[c])
    }

    /// ESO constants `v'_i = min{b, max_j |J_j|} * v_i` for batch size `b`.
    pub fn eso_constants(&self, b: usize) -> Result<Vec<f64>, DataError> {
        if b < 1 || b > self.n {
            return Err(DataError::Range(format!(
                "batch size {b} out of range 1..={}",
                self.n
            )));
        }
        let scale = b.min(self.max_feature_nnz()) as f64;
        Ok(self.v.iter().map(|vi| scale * vi).collect())
    }

    /// All constants the convergence theory needs for this dataset, loss,
    /// regularization and batch size.
    pub fn theory_constants(
        &self,
        loss: &LossModel,
        lambda: f64,
        regime: Regime,
        b: usize,
    ) -> Result<TheoryConstants, DataError> {
        if lambda <= 0.0 {
            return Err(DataError::Range(format!("lambda must be positive, got {lambda}")));
        }
        let n = self.n as f64;
        let l_tilde = loss.lipschitz();
        let gamma = match regime {
            Regime::AllConvex => lambda * l_tilde,
            Regime::AverageConvex => {
                // gamma-bar = (1/n) sum L_i^2 with L_i = v_i * L̃.
                self.v.iter().map(|vi| (vi * l_tilde).powi(2)).sum::<f64>() / n
            }
        };
        let v_prime = self.eso_constants(b)?;
        let q = self.v.iter().sum::<f64>() / n;
        let q_prime = v_prime.iter().sum::<f64>() / n;
        let big_m = q * (1.0 + gamma * q / (lambda * lambda * n));
        let n_lambda_sq = n * lambda * lambda;
        let theta_star = if b == 1 {
            n_lambda_sq / self.v.iter().map(|vi| vi * gamma + n_lambda_sq).sum::<f64>()
        } else {
            n_lambda_sq * b as f64
                / v_prime.iter().map(|vi| vi * gamma + n_lambda_sq).sum::<f64>()
        };
        let l_max = self.v.iter().cloned().fold(0.0, f64::max) * l_tilde;
        Ok(TheoryConstants {
            lambda,
            gamma,
            q,
            q_prime,
            big_m,
            theta_star,
            regime,
            batch: b,
            n: self.n,
            l_tilde,
            l_max,
        })
    }
}

/// Datasets mix label conventions; map binary {0,1} and {1,2} onto {-1,+1}.
fn normalize_binary_labels(labels: &mut [f64]) {
    let mut distinct: Vec<f64> = Vec::new();
    for &y in labels.iter() {
        if !distinct.contains(&y) {
            distinct.push(y);
            if distinct.len() > 2 {
                return;
            }
        }
    }
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let map: &[(f64, f64, f64, f64)] = &[(0.0, 1.0, -1.0, 1.0), (1.0, 2.0, 1.0, -1.0)];
    for &(lo, hi, lo_to, hi_to) in map {
        if distinct == [lo, hi] {
            for y in labels.iter_mut() {
                *y = if *y == lo { lo_to } else { hi_to };
            }
            return;
        }
    }
}

/// Derived constants: step-size lower bound, variance constant and the
/// quantities entering the iteration-count bounds.
#[derive(Clone, Debug)]
pub struct TheoryConstants {
    pub lambda: f64,
    /// `gamma` (all-convex) or `gamma-bar` (average-convex).
    pub gamma: f64,
    /// `Q = (1/n) sum v_i`.
    pub q: f64,
    /// `Q' = (1/n) sum v'_i`.
    pub q_prime: f64,
    /// `M = Q (1 + gamma Q / (lambda^2 n))`.
    pub big_m: f64,
    /// Guaranteed geometric contraction rate per iteration.
    pub theta_star: f64,
    pub regime: Regime,
    pub batch: usize,
    pub n: usize,
    pub l_tilde: f64,
    pub l_max: f64,
}

impl TheoryConstants {
    /// Iterations sufficient for expected primal suboptimality `epsilon`,
    /// starting from potential `c0`. Reporting aid only; nothing gates on it.
    pub fn iteration_bound(&self, c0: f64, epsilon: f64) -> f64 {
        let n = self.n as f64;
        let lambda = self.lambda;
        if self.batch > 1 {
            let b = self.batch as f64;
            (n / b + self.l_tilde * self.q_prime / (b * lambda))
                * ((lambda + self.l_tilde) * c0 / (lambda * self.l_tilde * epsilon)).ln()
        } else {
            match self.regime {
                Regime::AllConvex => (n + self.l_tilde * self.q / lambda)
                    * ((lambda + self.l_max) * c0 / (2.0 * lambda * self.l_tilde * epsilon)).ln(),
                Regime::AverageConvex => (n + self.gamma * self.q / (lambda * lambda))
                    * ((lambda + self.l_max) * c0 / (2.0 * self.gamma * epsilon)).ln(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossKind;

    #[test]
    fn parses_two_sample_example() {
        let ds = Dataset::parse_libsvm("+1 1:1 3:2\n-1 2:1\n").unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.d(), 3);
        assert_eq!(ds.squared_norms(), &[5.0, 1.0]);
        assert_eq!(ds.feature_nnz(), &[1, 1, 1]);
        assert_eq!(ds.labels(), &[1.0, -1.0]);
    }

    #[test]
    fn empty_input_is_a_parse_error() {
        assert!(matches!(
            Dataset::parse_libsvm(""),
            Err(DataError::Parse { .. })
        ));
    }

    #[test]
    fn malformed_tokens_carry_line_numbers() {
        let err = Dataset::parse_libsvm("+1 1:1\n-1 2:x\n").unwrap_err();
        match err {
            DataError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_increasing_indices_rejected() {
        assert!(matches!(
            Dataset::parse_libsvm("+1 3:1 2:1\n"),
            Err(DataError::Index { .. })
        ));
        assert!(matches!(
            Dataset::parse_libsvm("+1 2:1 2:1\n"),
            Err(DataError::Parse { .. })
        ));
        assert!(matches!(
            Dataset::parse_libsvm("+1 0:1\n"),
            Err(DataError::Index { .. })
        ));
    }

    #[test]
    fn label_normalization() {
        let ds = Dataset::parse_libsvm("0 1:1\n1 1:2\n").unwrap();
        assert_eq!(ds.labels(), &[-1.0, 1.0]);
        let ds = Dataset::parse_libsvm("1 1:1\n2 1:2\n").unwrap();
        assert_eq!(ds.labels(), &[1.0, -1.0]);
        // Regression labels stay as given.
        let ds = Dataset::parse_libsvm("0.5 1:1\n-2 1:2\n").unwrap();
        assert_eq!(ds.labels(), &[0.5, -2.0]);
    }

    #[test]
    fn dim_override() {
        let ds = Dataset::parse_libsvm_with_dim("+1 1:1\n", Some(7)).unwrap();
        assert_eq!(ds.d(), 7);
        assert!(Dataset::parse_libsvm_with_dim("+1 5:1\n", Some(3)).is_err());
    }

    #[test]
    fn row_col_views_agree() {
        let text = "1 1:0.5 4:-2\n-1 2:1 4:3\n1 1:1 2:2 3:3 4:4\n";
        let ds = Dataset::parse_libsvm(text).unwrap();
        let mut from_rows: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..ds.n() {
            let (cols, vals) = ds.row(i);
            for (&c, &x) in cols.iter().zip(vals) {
                from_rows.push((i, c, x));
            }
        }
        let mut from_cols: Vec<(usize, usize, f64)> = Vec::new();
        for j in 0..ds.d() {
            let (rows, vals) = ds.col(j);
            for (&i, &x) in rows.iter().zip(vals) {
                from_cols.push((i, j, x));
            }
        }
        from_rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        from_cols.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(from_rows, from_cols);
    }

    #[test]
    fn libsvm_round_trip() {
        let text = "1 1:0.1234567890123457 3:-2e-17\n-1 2:1\n0.5 1:3 2:0.333333333333333\n";
        let ds = Dataset::parse_libsvm(text).unwrap();
        let ds2 = Dataset::parse_libsvm(&ds.to_libsvm_string()).unwrap();
        assert_eq!(ds.labels(), ds2.labels());
        assert_eq!(ds.squared_norms(), ds2.squared_norms());
        assert_eq!(ds.feature_nnz(), ds2.feature_nnz());
        assert_eq!(ds.row_cols, ds2.row_cols);
        assert_eq!(ds.row_vals, ds2.row_vals);
    }

    #[test]
    fn eso_constants_cases() {
        let ds = Dataset::parse_libsvm("+1 1:1 3:2\n-1 2:1\n").unwrap();
        // b = 1: min{1, .} = 1, so v' = v.
        assert_eq!(ds.eso_constants(1).unwrap(), ds.squared_norms());
        // b = 2 with max_j |J_j| = 1 (hand count: every column has one entry).
        assert_eq!(ds.eso_constants(2).unwrap(), ds.squared_norms());
        assert!(ds.eso_constants(0).is_err());
        assert!(ds.eso_constants(3).is_err());
    }

    #[test]
    fn eso_constants_min_caps_at_max_nnz() {
        // Single sample, v = (3); one feature column, so max|J_j| = 1 < b is
        // impossible here; use two samples sharing both features instead.
        let ds = Dataset::parse_libsvm("1 1:1 2:1\n1 1:1 2:1\n").unwrap();
        // max|J_j| = 2, so b = 4 is capped... but b <= n = 2; use b = 2.
        assert_eq!(ds.eso_constants(2).unwrap(), vec![4.0, 4.0]);
    }

    #[test]
    fn theta_star_examples() {
        // n=2, lambda=1, v=(1,1), quadratic so gamma = 1: theta* = 2/(3+3).
        let ds = Dataset::parse_libsvm("1 1:1\n1 2:1\n").unwrap();
        let loss = LossModel::new(LossKind::Quadratic);
        let tc = ds.theory_constants(&loss, 1.0, Regime::AllConvex, 1).unwrap();
        assert!((tc.theta_star - 1.0 / 3.0).abs() < 1e-15);

        // Batch form with v' = v (max|J_j| = 1): theta* doubles at b = 2.
        let tc2 = ds.theory_constants(&loss, 1.0, Regime::AllConvex, 2).unwrap();
        assert!((tc2.theta_star - 2.0 / 3.0).abs() < 1e-15);

        // Degenerate x = 0 sample: theta* = n lambda^2 / (n lambda^2) = 1.
        let ds0 = Dataset::parse_libsvm_with_dim("1 1:0\n", Some(1)).unwrap();
        let tc0 = ds0.theory_constants(&loss, 1.0, Regime::AllConvex, 1).unwrap();
        assert_eq!(tc0.theta_star, 1.0);

        assert!(ds.theory_constants(&loss, 0.0, Regime::AllConvex, 1).is_err());
    }

    #[test]
    fn theta_star_monotone_in_gamma_and_linear_in_b() {
        let ds = Dataset::parse_libsvm("1 1:1 2:2\n1 1:3\n1 2:1\n").unwrap();
        // theta* strictly decreases as gamma increases, all else fixed.
        let n_lambda_sq = ds.n() as f64;
        let mut prev = f64::INFINITY;
        for &gamma in &[0.1, 0.5, 1.0, 5.0] {
            let theta = n_lambda_sq
                / ds.squared_norms()
                    .iter()
                    .map(|vi| vi * gamma + n_lambda_sq)
                    .sum::<f64>();
            assert!(theta < prev);
            prev = theta;
        }
        // Diagonal data keeps max|J_j| = 1, so v' = v for every b and theta*
        // is exactly linear in b.
        let diag = Dataset::parse_libsvm("1 1:1\n1 2:2\n1 3:1\n1 4:0.5\n").unwrap();
        let loss = LossModel::new(LossKind::Quadratic);
        let base = diag.theory_constants(&loss, 0.7, Regime::AllConvex, 1).unwrap();
        for b in 2..=diag.n() {
            let tc = diag.theory_constants(&loss, 0.7, Regime::AllConvex, b).unwrap();
            assert!((tc.theta_star - b as f64 * base.theta_star).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_bar_average_convex() {
        let ds = Dataset::parse_libsvm("1 1:1\n1 1:2\n").unwrap(); // v = (1,4)
        let loss = LossModel::new(LossKind::Quadratic);
        let tc = ds
            .theory_constants(&loss, 1.0, Regime::AverageConvex, 1)
            .unwrap();
        // gamma-bar = (1^2 + 4^2)/2 = 8.5
        assert!((tc.gamma - 8.5).abs() < 1e-15);
    }

    #[test]
    fn gzip_load() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.txt.gz");
        let f = File::create(&path).unwrap();
        let mut gz = flate2::write::GzEncoder::new(f, flate2::Compression::default());
        gz.write_all(b"+1 1:1 3:2\n-1 2:1\n").unwrap();
        gz.finish().unwrap();
        let ds = Dataset::load_path(&path, None).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.squared_norms(), &[5.0, 1.0]);
    }
}
