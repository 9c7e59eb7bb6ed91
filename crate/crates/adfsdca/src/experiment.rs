//! Experiment harness: run a grid of solver variants over seeds against one
//! dataset, writing one metrics CSV per run plus a summary table.
//!
//! Runs are independent (each owns its state and RNG over a shared immutable
//! [`Dataset`]), so the sweep is dispatched through [`map_runs`]: a rayon
//! parallel iterator when the `parallel` feature is enabled, a plain
//! sequential loop otherwise. Outputs are keyed by (variant, seed) and do not
//! depend on the dispatch order.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data::{DataError, Dataset, Regime};
use crate::losses::LossKind;
use crate::metrics::{self, RunRecord};
use crate::solver::{self, SolverConfig, SolverError, ThetaMode, Variant};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to load {path}: {source}")]
    Data {
        path: PathBuf,
        source: DataError,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One solver configuration within a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantSpec {
    pub variant: Variant,
    pub theta_mode: ThetaMode,
    pub regime: Regime,
}

impl VariantSpec {
    /// Parse `adfsdca | plus:s=S | minibatch:b=B | uniform`, with optional
    /// comma-separated options `theta={per-iter|star}` and
    /// `regime={convex|avg}` after the colon.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (base, opts) = match text.split_once(':') {
            Some((b, o)) => (b, Some(o)),
            None => (text, None),
        };
        let mut shrink: Option<f64> = None;
        let mut batch: Option<usize> = None;
        let mut theta_mode = ThetaMode::PerIteration;
        let mut regime = Regime::AllConvex;
        if let Some(opts) = opts {
            for kv in opts.split(',').filter(|s| !s.is_empty()) {
                let (key, value) = kv
                    .split_once('=')
                    .ok_or_else(|| format!("expected key=value in variant option `{kv}`"))?;
                match key {
                    "s" => {
                        let s: f64 = value
                            .parse()
                            .map_err(|_| format!("bad shrink value `{value}`"))?;
                        if !(s >= 1.0) {
                            return Err(format!(
                                "shrink parameter s must be at least 1, got {s}"
                            ));
                        }
                        shrink = Some(s);
                    }
                    "b" => {
                        let b: usize = value
                            .parse()
                            .map_err(|_| format!("bad batch size `{value}`"))?;
                        if b < 1 {
                            return Err("batch size b must be at least 1".into());
                        }
                        batch = Some(b);
                    }
                    "theta" => {
                        theta_mode = match value {
                            "per-iter" => ThetaMode::PerIteration,
                            "star" => ThetaMode::FixedThetaStar,
                            other => return Err(format!("unknown theta mode `{other}`")),
                        }
                    }
                    "regime" => {
                        regime = match value {
                            "convex" => Regime::AllConvex,
                            "avg" => Regime::AverageConvex,
                            other => return Err(format!("unknown regime `{other}`")),
                        }
                    }
                    other => return Err(format!("unknown variant option `{other}`")),
                }
            }
        }
        let variant = match base {
            "adfsdca" => Variant::AdfSdca,
            "plus" => Variant::AdfSdcaPlus {
                shrink: shrink.ok_or("plus requires s=<shrink>, e.g. plus:s=10")?,
            },
            "minibatch" => Variant::MiniBatch {
                batch: batch.ok_or("minibatch requires b=<batch>, e.g. minibatch:b=8")?,
            },
            "uniform" => Variant::UniformBaseline,
            other => return Err(format!("unknown variant `{other}`")),
        };
        match variant {
            Variant::AdfSdcaPlus { .. } => {}
            _ if shrink.is_some() => return Err(format!("option s= does not apply to `{base}`")),
            _ => {}
        }
        match variant {
            Variant::MiniBatch { .. } => {}
            _ if batch.is_some() => return Err(format!("option b= does not apply to `{base}`")),
            _ => {}
        }
        Ok(Self {
            variant,
            theta_mode,
            regime,
        })
    }

    /// Filesystem-safe name used for run CSVs.
    pub fn file_stem(&self) -> String {
        let mut stem = match self.variant {
            Variant::AdfSdca => "adfsdca".to_string(),
            Variant::AdfSdcaPlus { shrink } => format!("plus_s{shrink}"),
            Variant::MiniBatch { batch } => format!("minibatch_b{batch}"),
            Variant::UniformBaseline => "uniform".to_string(),
        };
        if self.theta_mode == ThetaMode::FixedThetaStar {
            stem.push_str("_tstar");
        }
        if self.regime == Regime::AverageConvex {
            stem.push_str("_ravg");
        }
        stem.replace('.', "p")
    }
}

impl fmt::Display for VariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            Variant::AdfSdca => write!(f, "adfsdca")?,
            Variant::AdfSdcaPlus { shrink } => write!(f, "plus:s={shrink}")?,
            Variant::MiniBatch { batch } => write!(f, "minibatch:b={batch}")?,
            Variant::UniformBaseline => write!(f, "uniform")?,
        }
        if self.theta_mode == ThetaMode::FixedThetaStar {
            write!(f, " (theta=star)")?;
        }
        if self.regime == Regime::AverageConvex {
            write!(f, " (regime=avg)")?;
        }
        Ok(())
    }
}

/// A full sweep description.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub data_path: PathBuf,
    pub loss: LossKind,
    /// `None` resolves to `1/n` once the dataset is loaded.
    pub lambda: Option<f64>,
    pub variants: Vec<VariantSpec>,
    pub epochs: usize,
    pub gap_tol: f64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

/// Per-run summary line.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub variant: String,
    pub seed: u64,
    /// First recorded epoch at which the gap fell below tolerance.
    pub epochs_to_tol: Option<f64>,
    pub final_gap: f64,
    /// Any non-finite value in the metrics marks the run as diverged.
    pub diverged: bool,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub run_files: Vec<PathBuf>,
    pub summaries: Vec<RunSummary>,
    pub summary_file: PathBuf,
    pub any_diverged: bool,
}

/// Map `f` over `0..count`, in parallel when both the `parallel` feature and
/// the `parallel` flag are on. Results keep index order either way.
#[cfg(feature = "parallel")]
pub fn map_runs<T, F>(count: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if parallel {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    } else {
        (0..count).map(f).collect()
    }
}

/// Sequential fallback: the `parallel` flag is accepted and ignored.
#[cfg(not(feature = "parallel"))]
pub fn map_runs<T, F>(count: usize, _parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Run the sweep with the default dispatch (parallel when compiled in).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, ExperimentError> {
    run_experiment_with(spec, cfg!(feature = "parallel"))
}

/// Run the sweep, forcing parallel or sequential dispatch.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    parallel: bool,
) -> Result<ExperimentOutcome, ExperimentError> {
    fs::create_dir_all(&spec.out_dir).map_err(|e| ExperimentError::Io {
        path: spec.out_dir.clone(),
        source: e,
    })?;
    let ds = Dataset::load_path(&spec.data_path, None).map_err(|e| match e {
        DataError::Io(source) => ExperimentError::Io {
            path: spec.data_path.clone(),
            source,
        },
        other => ExperimentError::Data {
            path: spec.data_path.clone(),
            source: other,
        },
    })?;
    let lambda = spec.lambda.unwrap_or(1.0 / ds.n() as f64);

    let runs: Vec<(usize, u64)> = spec
        .variants
        .iter()
        .enumerate()
        .flat_map(|(vi, _)| spec.seeds.iter().map(move |&s| (vi, s)))
        .collect();

    let results = map_runs(runs.len(), parallel, |idx| {
        let (vi, seed) = runs[idx];
        let vs = &spec.variants[vi];
        let config = SolverConfig {
            lambda,
            loss: spec.loss,
            variant: vs.variant,
            regime: vs.regime,
            epochs: spec.epochs,
            seed,
            theta_mode: vs.theta_mode,
            gap_tol: spec.gap_tol,
        };
        let result = solver::solve(&ds, &config)?;
        let path = spec.out_dir.join(format!("{}_{seed}.csv", vs.file_stem()));
        write_records(&path, &result.records)?;
        Ok::<_, ExperimentError>((path, summarize(vs, seed, spec.gap_tol, &result.records)))
    });

    let mut run_files = Vec::with_capacity(results.len());
    let mut summaries = Vec::with_capacity(results.len());
    for r in results {
        let (path, summary) = r?;
        run_files.push(path);
        summaries.push(summary);
    }

    let summary_file = spec.out_dir.join("summary.csv");
    write_summary(&summary_file, &spec.variants, &summaries)?;
    let any_diverged = summaries.iter().any(|s| s.diverged);
    Ok(ExperimentOutcome {
        run_files,
        summaries,
        summary_file,
        any_diverged,
    })
}

fn summarize(vs: &VariantSpec, seed: u64, gap_tol: f64, records: &[RunRecord]) -> RunSummary {
    let epochs_to_tol = records
        .iter()
        .find(|r| r.gap <= gap_tol)
        .map(|r| r.epoch);
    let final_gap = records.last().map(|r| r.gap).unwrap_or(f64::NAN);
    let diverged = records.iter().any(|r| {
        !(r.primal.is_finite()
            && r.dual.is_finite()
            && r.gap.is_finite()
            && r.residual_sq_norm.is_finite())
    });
    RunSummary {
        variant: vs.file_stem(),
        seed,
        epochs_to_tol,
        final_gap,
        diverged,
    }
}

fn write_records(path: &Path, records: &[RunRecord]) -> Result<(), ExperimentError> {
    let io_err = |e| ExperimentError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    metrics::write_csv(records, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Per-run rows followed by one `median` row per variant (median of the
/// epochs-to-tolerance over the seeds that reached it).
fn write_summary(
    path: &Path,
    variants: &[VariantSpec],
    summaries: &[RunSummary],
) -> Result<(), ExperimentError> {
    let io_err = |e| ExperimentError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "variant,seed,epochs_to_tol,final_gap,diverged").map_err(io_err)?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.variant,
            s.seed,
            s.epochs_to_tol.map(metrics::format_float).unwrap_or_default(),
            metrics::format_float(s.final_gap),
            s.diverged
        )
        .map_err(io_err)?;
    }
    for vs in variants {
        let stem = vs.file_stem();
        let med = median_epochs(summaries.iter().filter(|s| s.variant == stem));
        writeln!(
            w,
            "{},median,{},,",
            stem,
            med.map(metrics::format_float).unwrap_or_default()
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Median of the runs that reached tolerance; `None` when none did.
pub fn median_epochs<'a>(summaries: impl Iterator<Item = &'a RunSummary>) -> Option<f64> {
    let mut reached: Vec<f64> = summaries.filter_map(|s| s.epochs_to_tol).collect();
    if reached.is_empty() {
        return None;
    }
    reached.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = reached.len();
    Some(if m % 2 == 1 {
        reached[m / 2]
    } else {
        0.5 * (reached[m / 2 - 1] + reached[m / 2])
    })
}
