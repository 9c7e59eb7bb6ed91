//! Command-line entry point for the experiment harness.
//!
//! Flags mirror [`ExperimentSpec`]; a `key=value` config file can hold the
//! same settings, with explicit flags taking precedence. Exit codes: 0 on
//! success, 1 when any run diverged or failed, 2 on usage errors.

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

use crate::experiment::{self, ExperimentSpec, VariantSpec};
use crate::losses::LossKind;
use crate::metrics::format_float;

#[derive(Parser, Debug, Default)]
#[command(
    name = "adfsdca",
    about = "Adaptive dual-free SDCA experiment harness",
    disable_help_flag = false
)]
struct Args {
    /// LIBSVM dataset path (.gz accepted)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Loss function: quadratic | logistic
    #[arg(long)]
    loss: Option<String>,
    /// Regularization strength; defaults to 1/n
    #[arg(long)]
    lambda: Option<f64>,
    /// Solver variant (repeatable): adfsdca | plus:s=S | minibatch:b=B |
    /// uniform, with optional theta=per-iter|star and regime=convex|avg
    #[arg(long = "variant")]
    variants: Vec<String>,
    /// Epoch budget per run
    #[arg(long)]
    epochs: Option<usize>,
    /// RNG seed (repeatable); each seed is an independent run
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Stop a run once the duality gap falls below this
    #[arg(long = "gap-tol")]
    gap_tol: Option<f64>,
    /// Output directory for run CSVs and summary.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value config file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

/// A rejected invocation; the message names the offending flag or key.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Parse argv (`argv[0]` is the program name) into a validated spec.
pub fn parse_args<I, S>(argv: I) -> Result<ExperimentSpec, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args = Args::try_parse_from(argv.into_iter().map(Into::into))
        .map_err(|e| UsageError(e.to_string()))?;
    build_spec(args)
}

fn build_spec(mut args: Args) -> Result<ExperimentSpec, UsageError> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("--config {}: {e}", path.display())))?;
        let file = parse_config_file(&text)?;
        // Flags override the file; file fills whatever is unset.
        args.data = args.data.or(file.data);
        args.loss = args.loss.or(file.loss);
        args.lambda = args.lambda.or(file.lambda);
        args.epochs = args.epochs.or(file.epochs);
        args.gap_tol = args.gap_tol.or(file.gap_tol);
        args.out = args.out.or(file.out);
        if args.variants.is_empty() {
            args.variants = file.variants;
        }
        if args.seeds.is_empty() {
            args.seeds = file.seeds;
        }
    }

    let data_path = args
        .data
        .ok_or_else(|| UsageError("--data is required".into()))?;
    if !data_path.exists() {
        return Err(UsageError(format!(
            "--data {}: path does not exist",
            data_path.display()
        )));
    }
    let loss = match args.loss.as_deref().unwrap_or("quadratic") {
        "quadratic" => LossKind::Quadratic,
        "logistic" => LossKind::Logistic,
        other => {
            return Err(UsageError(format!(
                "--loss must be quadratic or logistic, got `{other}`"
            )))
        }
    };
    if let Some(lambda) = args.lambda {
        if !(lambda > 0.0) {
            return Err(UsageError(format!("--lambda must be positive, got {lambda}")));
        }
    }
    if args.variants.is_empty() {
        return Err(UsageError("at least one --variant is required".into()));
    }
    let variants = args
        .variants
        .iter()
        .map(|v| VariantSpec::parse(v).map_err(|e| UsageError(format!("--variant {v}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let gap_tol = args.gap_tol.unwrap_or(1e-10);
    if gap_tol < 0.0 {
        return Err(UsageError("--gap-tol must be nonnegative".into()));
    }
    let seeds = if args.seeds.is_empty() {
        vec![42]
    } else {
        args.seeds
    };
    Ok(ExperimentSpec {
        data_path,
        loss,
        lambda: args.lambda,
        variants,
        epochs: args.epochs.unwrap_or(30),
        gap_tol,
        seeds,
        out_dir: args.out.unwrap_or_else(|| PathBuf::from("runs")),
    })
}

#[derive(Default)]
struct FileArgs {
    data: Option<PathBuf>,
    loss: Option<String>,
    lambda: Option<f64>,
    variants: Vec<String>,
    epochs: Option<usize>,
    seeds: Vec<u64>,
    gap_tol: Option<f64>,
    out: Option<PathBuf>,
}

/// `key=value` per line; `#` starts a comment; `variant` and `seed` repeat.
fn parse_config_file(text: &str) -> Result<FileArgs, UsageError> {
    let mut out = FileArgs::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            UsageError(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| UsageError(format!("config line {}: bad {what} `{value}`", lineno + 1));
        match key {
            "data" => out.data = Some(PathBuf::from(value)),
            "loss" => out.loss = Some(value.to_string()),
            "lambda" => out.lambda = Some(value.parse().map_err(|_| bad("lambda"))?),
            "variant" => out.variants.push(value.to_string()),
            "epochs" => out.epochs = Some(value.parse().map_err(|_| bad("epochs"))?),
            "seed" => out.seeds.push(value.parse().map_err(|_| bad("seed"))?),
            "gap-tol" | "gap_tol" => {
                out.gap_tol = Some(value.parse().map_err(|_| bad("gap-tol"))?)
            }
            "out" => out.out = Some(PathBuf::from(value)),
            other => {
                return Err(UsageError(format!(
                    "config line {}: unknown key `{other}`",
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}

/// Full CLI flow; returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args = match Args::try_parse_from(argv.into_iter().map(Into::into)) {
        Ok(args) => args,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 2;
        }
    };
    let spec = match build_spec(args) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("usage error: {e}");
            return 2;
        }
    };
    match experiment::run_experiment(&spec) {
        Ok(outcome) => {
            for vs in &spec.variants {
                let stem = vs.file_stem();
                let med = experiment::median_epochs(
                    outcome.summaries.iter().filter(|s| s.variant == stem),
                );
                match med {
                    Some(m) => println!(
                        "{stem}: median epochs to gap <= {} over {} seed(s): {}",
                        format_float(spec.gap_tol),
                        spec.seeds.len(),
                        m
                    ),
                    None => println!(
                        "{stem}: no run reached gap <= {} within {} epochs",
                        format_float(spec.gap_tol),
                        spec.epochs
                    ),
                }
            }
            println!("wrote {} run file(s) and {}", outcome.run_files.len(), outcome.summary_file.display());
            if outcome.any_diverged {
                eprintln!("warning: at least one run diverged (non-finite metrics)");
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tiny_dataset_file(dir: &tempfile::TempDir) -> PathBuf {
        let path = dir.path().join("tiny.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "1 1:1 2:-0.5").unwrap();
        writeln!(f, "-1 2:2").unwrap();
        writeln!(f, "2 1:0.5 2:0.25").unwrap();
        path
    }

    #[test]
    fn minimal_invocation_gets_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let data = tiny_dataset_file(&dir);
        let spec = parse_args([
            "adfsdca".to_string(),
            "--data".into(),
            data.display().to_string(),
            "--loss".into(),
            "quadratic".into(),
            "--lambda".into(),
            "0.01".into(),
            "--variant".into(),
            "adfsdca".into(),
        ])
        .unwrap();
        assert_eq!(spec.variants.len(), 1);
        assert_eq!(spec.epochs, 30);
        assert_eq!(spec.seeds, vec![42]);
        assert_eq!(spec.gap_tol, 1e-10);
        assert_eq!(spec.lambda, Some(0.01));
    }

    #[test]
    fn bad_shrink_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let data = tiny_dataset_file(&dir);
        let err = parse_args([
            "adfsdca".to_string(),
            "--data".into(),
            data.display().to_string(),
            "--variant".into(),
            "plus:s=0.5".into(),
        ])
        .unwrap_err();
        assert!(err.0.contains("s must be at least 1"), "{}", err.0);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let data = tiny_dataset_file(&dir);
        let cfg_path = dir.path().join("run.cfg");
        let mut f = std::fs::File::create(&cfg_path).unwrap();
        writeln!(f, "# sweep settings").unwrap();
        writeln!(f, "data={}", data.display()).unwrap();
        writeln!(f, "lambda=0.5").unwrap();
        writeln!(f, "variant=uniform").unwrap();
        writeln!(f, "variant=plus:s=10").unwrap();
        writeln!(f, "seed=1").unwrap();
        writeln!(f, "seed=2").unwrap();
        writeln!(f, "epochs=7").unwrap();
        drop(f);
        let spec = parse_args([
            "adfsdca".to_string(),
            "--config".into(),
            cfg_path.display().to_string(),
            "--lambda".into(),
            "0.1".into(),
        ])
        .unwrap();
        assert_eq!(spec.lambda, Some(0.1)); // flag wins
        assert_eq!(spec.variants.len(), 2); // from file
        assert_eq!(spec.seeds, vec![1, 2]);
        assert_eq!(spec.epochs, 7);
    }

    #[test]
    fn missing_data_is_rejected() {
        assert!(parse_args(["adfsdca".to_string(), "--variant".into(), "adfsdca".into()]).is_err());
        let err = parse_args([
            "adfsdca".to_string(),
            "--data".into(),
            "/no/such/file".into(),
            "--variant".into(),
            "adfsdca".into(),
        ])
        .unwrap_err();
        assert!(err.0.contains("/no/such/file"), "{}", err.0);
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        assert!(parse_args(["adfsdca".to_string(), "--frobnicate".into()]).is_err());
    }
}
