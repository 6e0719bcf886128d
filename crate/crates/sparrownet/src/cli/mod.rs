//! Command-line front door: `optimize`, `generate`, `train`, `evaluate` and
//! `report`, plus the config and artifact formats they share.
//!
//! Exit codes: 0 success, 2 configuration/usage error (bad flags, bad config
//! file, malformed inputs), 3 missing prerequisite file, 4 artifact
//! consistency error (parameter file does not match the configured codec).
//! Every command is deterministic given flags, config file and seed;
//! `--threads` only changes evaluation parallelism, never results.

mod config;
mod documents;

pub use config::{default_config_text, RunConfig, SsaSettings};
pub use documents::{load_params, save_params, MetricsSummary, ResultsDocument};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::neural::ParamCodec;
use crate::pipeline::{
    self, codec_scope, evaluate, generate_synthetic, load_csv_shaped, network_template,
    prepare_splits, save_csv, train_with_ssa_logged, PipelineError,
};
use crate::ssa::{benchmark_objectives, ssa_optimize_with, SsaError};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or malformed input content. Exit 2.
    Usage(String),
    /// A prerequisite file does not exist. Exit 3.
    MissingInput(String),
    /// Persisted artifacts disagree with the configuration. Exit 4.
    ArtifactMismatch(String),
    /// Everything else (evaluation failures, write errors). Exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
            CliError::MissingInput(_) => 3,
            CliError::ArtifactMismatch(_) => 4,
        }
    }

    fn read(path: &Path, err: std::io::Error) -> CliError {
        if err.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingInput(format!("{} does not exist", path.display()))
        } else {
            CliError::Runtime(format!("reading {}: {err}", path.display()))
        }
    }

    fn write(path: &Path, err: std::io::Error) -> CliError {
        CliError::Runtime(format!("writing {}: {err}", path.display()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m)
            | CliError::MissingInput(m)
            | CliError::ArtifactMismatch(m)
            | CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Io { ref path, ref source }
                if source.kind() == std::io::ErrorKind::NotFound =>
            {
                CliError::MissingInput(format!("{path} does not exist"))
            }
            PipelineError::Parse { .. } | PipelineError::Schema(_) | PipelineError::Config(_) => {
                CliError::Usage(err.to_string())
            }
            PipelineError::Ssa(SsaError::InvalidConfig(m)) => CliError::Usage(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<SsaError> for CliError {
    fn from(err: SsaError) -> Self {
        match err {
            SsaError::InvalidConfig(_) | SsaError::UnknownObjective(_) => {
                CliError::Usage(err.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<crate::neural::NeuralError> for CliError {
    fn from(err: crate::neural::NeuralError) -> Self {
        CliError::Usage(err.to_string())
    }
}

const USAGE: &str = "\
usage: sparrownet <command> [flags]

commands:
  optimize   run the sparrow search on a benchmark objective
  generate   write the synthetic dataset CSV
  train      train the network on a generated dataset
  evaluate   re-score saved parameters on the test split
  report     tabulate metrics across results documents

global flags:
  --config PATH    config file (flat `section.key = value` lines)
  --seed N         override the top-level seed
  --out DIR        output directory (default from config, `out`)
  --threads N      evaluation thread count; never changes results

optimize flags:
  --objective NAME   sphere | rastrigin | rosenbrock (required)
  --dim N            search dimension (default 10)
  --pop N            population size override
  --iters N          iteration count override
  --lower X          lower bound override
  --upper X          upper bound override

report:
  report [--out DIR] FILE...   one results document per row
";

/// Parsed command line.
struct Invocation {
    command: String,
    config_path: Option<String>,
    seed: Option<u64>,
    out: Option<String>,
    threads: Option<usize>,
    objective: Option<String>,
    dim: Option<usize>,
    pop: Option<usize>,
    iters: Option<usize>,
    lower: Option<f64>,
    upper: Option<f64>,
    files: Vec<String>,
}

fn parse_args(args: &[String]) -> Result<Invocation, CliError> {
    let mut it = args.iter();
    let command = it
        .next()
        .ok_or_else(|| CliError::Usage(USAGE.to_string()))?
        .clone();
    let mut inv = Invocation {
        command,
        config_path: None,
        seed: None,
        out: None,
        threads: None,
        objective: None,
        dim: None,
        pop: None,
        iters: None,
        lower: None,
        upper: None,
        files: Vec::new(),
    };
    while let Some(arg) = it.next() {
        let mut take = || {
            it.next()
                .ok_or_else(|| CliError::Usage(format!("flag {arg} expects a value")))
        };
        match arg.as_str() {
            "--config" => inv.config_path = Some(take()?.clone()),
            "--seed" => inv.seed = Some(parse_flag(arg, take()?)?),
            "--out" => inv.out = Some(take()?.clone()),
            "--threads" => inv.threads = Some(parse_flag(arg, take()?)?),
            "--objective" => inv.objective = Some(take()?.clone()),
            "--dim" => inv.dim = Some(parse_flag(arg, take()?)?),
            "--pop" => inv.pop = Some(parse_flag(arg, take()?)?),
            "--iters" => inv.iters = Some(parse_flag(arg, take()?)?),
            "--lower" => inv.lower = Some(parse_flag(arg, take()?)?),
            "--upper" => inv.upper = Some(parse_flag(arg, take()?)?),
            other if other.starts_with("--") => {
                return Err(CliError::Usage(format!("unknown flag `{other}`\n\n{USAGE}")))
            }
            other => inv.files.push(other.to_string()),
        }
    }
    Ok(inv)
}

fn parse_flag<T: std::str::FromStr>(flag: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Usage(format!("flag {flag}: cannot parse `{value}`: {e}")))
}

fn load_config(inv: &Invocation) -> Result<RunConfig, CliError> {
    let text = match &inv.config_path {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::read(Path::new(path), e))?,
        None => String::new(),
    };
    let mut cfg = RunConfig::parse(&text, inv.seed).map_err(CliError::Usage)?;
    if let Some(out) = &inv.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir).map_err(|e| CliError::write(&dir, e))?;
    Ok(dir)
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_from_args(args: &[String]) -> i32 {
    match run(args) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

pub fn run(args: &[String]) -> Result<(), CliError> {
    let inv = parse_args(args)?;
    if let Some(threads) = inv.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Ignore the error from re-initialization (tests call run() more
        // than once in-process); the pool only affects scheduling.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match inv.command.as_str() {
        "optimize" => cmd_optimize(&inv),
        "generate" => cmd_generate(&inv),
        "train" => cmd_train(&inv),
        "evaluate" => cmd_evaluate(&inv),
        "report" => cmd_report(&inv),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown command `{other}`\n\n{USAGE}"
        ))),
    }
}

fn cmd_optimize(inv: &Invocation) -> Result<(), CliError> {
    let mut cfg = load_config(inv)?;
    let out_dir = ensure_out_dir(&cfg)?;
    let name = inv
        .objective
        .as_deref()
        .ok_or_else(|| CliError::Usage("optimize requires --objective".into()))?;
    let benchmark = benchmark_objectives(name)?;
    let dim = inv.dim.unwrap_or(10);
    if let Some(pop) = inv.pop {
        cfg.ssa.pop_size = pop;
    }
    if let Some(iters) = inv.iters {
        cfg.ssa.iterations = iters;
    }
    let lower = inv.lower.unwrap_or(benchmark.lower);
    let upper = inv.upper.unwrap_or(benchmark.upper);
    let ssa_cfg = cfg.ssa.to_ssa_config(dim, lower, upper);
    ssa_cfg.validate()?;

    let started = Instant::now();
    let result = ssa_optimize_with(&benchmark, &ssa_cfg, |iteration, best| {
        println!("iter {iteration:4}  best {best:.6e}");
    })?;
    let doc = ResultsDocument {
        artifact_version: ResultsDocument::artifact_version(),
        command: "optimize".into(),
        seed: ssa_cfg.seed,
        config: cfg,
        objective: Some(name.to_string()),
        history: result.history,
        best_fitness: result.best_fitness,
        best_position: Some(result.best_position),
        metrics: None,
        roc_points: None,
        codec_hash: None,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    let path = out_dir.join(format!("optimize-{name}.json"));
    doc.save(&path)?;
    println!(
        "{name} d={dim}: best {:.6e} after {} iterations -> {}",
        doc.best_fitness,
        ssa_cfg.iter_max,
        path.display()
    );
    Ok(())
}

fn cmd_generate(inv: &Invocation) -> Result<(), CliError> {
    let cfg = load_config(inv)?;
    let out_dir = ensure_out_dir(&cfg)?;
    let samples = generate_synthetic(&cfg.generator)?;
    let path = out_dir.join("dataset.csv");
    save_csv(&samples, &path)?;
    let anomalies = samples.iter().filter(|s| s.label == 1).count();
    println!(
        "wrote {} samples ({anomalies} anomalous) of {} {}x{} frames -> {}",
        samples.len(),
        cfg.generator.t,
        cfg.generator.height,
        cfg.generator.width,
        path.display()
    );
    Ok(())
}

fn load_dataset(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<pipeline::SequenceSample>, CliError> {
    let path = out_dir.join("dataset.csv");
    if !path.exists() {
        return Err(CliError::MissingInput(format!(
            "{} does not exist (run `generate` first)",
            path.display()
        )));
    }
    Ok(load_csv_shaped(&path, cfg.generator.height, cfg.generator.width)?)
}

fn cmd_train(inv: &Invocation) -> Result<(), CliError> {
    let cfg = load_config(inv)?;
    let out_dir = ensure_out_dir(&cfg)?;
    let samples = load_dataset(&cfg, &out_dir)?;

    let codec = ParamCodec::new(&cfg.network, codec_scope(&cfg.network))?;
    let ssa_cfg = cfg.ssa.to_weight_search_config(codec.total_count());
    ssa_cfg.validate()?;
    println!(
        "training: {} parameters ({:?}), population {}, {} iterations",
        codec.total_count(),
        codec.scope(),
        ssa_cfg.pop_size,
        ssa_cfg.iter_max
    );
    let result = train_with_ssa_logged(
        &samples,
        &cfg.network,
        &ssa_cfg,
        &cfg.split,
        |iteration, best| {
            println!("iter {iteration:4}  1-AUC {best:.6}");
        },
    )?;

    let params_path = out_dir.join("params.txt");
    save_params(&params_path, &result.best_params, result.codec_hash)?;
    let doc = ResultsDocument {
        artifact_version: ResultsDocument::artifact_version(),
        command: "train".into(),
        seed: cfg.ssa.seed,
        config: cfg,
        objective: None,
        history: result.history.clone(),
        best_fitness: *result
            .history
            .last()
            .expect("history holds the initial entry"),
        best_position: None,
        metrics: Some(MetricsSummary::from_report(&result.report)),
        roc_points: result.report.roc.as_ref().map(|r| r.points.clone()),
        codec_hash: Some(format!("{:016x}", result.codec_hash)),
        wall_seconds: result.wall_seconds,
    };
    let results_path = out_dir.join("train-results.json");
    doc.save(&results_path)?;
    let summary = doc.metrics.as_ref().expect("train always carries metrics");
    println!(
        "test accuracy {:.4}, AUC {} -> {}, {}",
        summary.accuracy,
        summary
            .auc
            .map_or("n/a".to_string(), |a| format!("{a:.4}")),
        params_path.display(),
        results_path.display()
    );
    Ok(())
}

fn cmd_evaluate(inv: &Invocation) -> Result<(), CliError> {
    let cfg = load_config(inv)?;
    let out_dir = ensure_out_dir(&cfg)?;
    let samples = load_dataset(&cfg, &out_dir)?;

    let codec = ParamCodec::new(&cfg.network, codec_scope(&cfg.network))?;
    let params_path = out_dir.join("params.txt");
    if !params_path.exists() {
        return Err(CliError::MissingInput(format!(
            "{} does not exist (run `train` first)",
            params_path.display()
        )));
    }
    let values = load_params(&params_path, codec.layout_hash())?;

    let started = Instant::now();
    let prepared = prepare_splits(&samples, &cfg.split, cfg.ssa.seed)?;
    let mut net = network_template(&cfg.network, cfg.ssa.seed)?;
    codec
        .unflatten_into(&mut net, &values)
        .map_err(|e| CliError::ArtifactMismatch(e.to_string()))?;
    let report = evaluate(&net, &prepared.splits.test)?;

    let doc = ResultsDocument {
        artifact_version: ResultsDocument::artifact_version(),
        command: "evaluate".into(),
        seed: cfg.ssa.seed,
        config: cfg,
        objective: None,
        history: Vec::new(),
        best_fitness: report.auc.map_or(f64::NAN, |a| 1.0 - a),
        best_position: None,
        metrics: Some(MetricsSummary::from_report(&report)),
        roc_points: report.roc.as_ref().map(|r| r.points.clone()),
        codec_hash: Some(format!("{:016x}", codec.layout_hash())),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    let path = out_dir.join("evaluate-report.json");
    doc.save(&path)?;
    let summary = doc.metrics.as_ref().expect("evaluate always carries metrics");
    println!(
        "test accuracy {:.4}, AUC {} -> {}",
        summary.accuracy,
        summary
            .auc
            .map_or("n/a".to_string(), |a| format!("{a:.4}")),
        path.display()
    );
    Ok(())
}

fn format_opt(value: Option<f64>) -> String {
    value.map_or("-".to_string(), |v| format!("{v:.4}"))
}

fn cmd_report(inv: &Invocation) -> Result<(), CliError> {
    if inv.files.is_empty() {
        return Err(CliError::Usage(
            "report requires at least one results document".into(),
        ));
    }
    let mut rows = Vec::new();
    for file in &inv.files {
        let doc = ResultsDocument::load(Path::new(file))?;
        let name = Path::new(file)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.clone());
        rows.push((name, doc));
    }

    let header = ["run", "mae", "mape%", "rmse", "mse", "accuracy", "auc"];
    let mut table: Vec<[String; 7]> = vec![header.map(String::from)];
    for (name, doc) in &rows {
        let row = match &doc.metrics {
            Some(m) => [
                name.clone(),
                format!("{:.4}", m.mae),
                format_opt(m.mape_percent),
                format!("{:.4}", m.rmse),
                format!("{:.4}", m.mse),
                format!("{:.4}", m.accuracy),
                format_opt(m.auc),
            ],
            None => [
                name.clone(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                format!("best {:.3e}", doc.best_fitness),
            ],
        };
        table.push(row);
    }
    let widths: Vec<usize> = (0..7)
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        println!("{}", line.join("  ").trim_end());
    }

    if let Some(out) = &inv.out {
        let dir = PathBuf::from(out);
        fs::create_dir_all(&dir).map_err(|e| CliError::write(&dir, e))?;
        let mut csv = String::from("run,mae,mape_percent,rmse,mse,accuracy,auc\n");
        for (name, doc) in &rows {
            match &doc.metrics {
                Some(m) => csv.push_str(&format!(
                    "{name},{},{},{},{},{},{}\n",
                    m.mae,
                    m.mape_percent.map_or(String::from(""), |v| v.to_string()),
                    m.rmse,
                    m.mse,
                    m.accuracy,
                    m.auc.map_or(String::from(""), |v| v.to_string()),
                )),
                None => csv.push_str(&format!("{name},,,,,,\n")),
            }
        }
        let path = dir.join("report.csv");
        fs::write(&path, csv).map_err(|e| CliError::write(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_command_and_flags_are_usage_errors() {
        let err = run(&["frobnicate".to_string()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(&["optimize".into(), "--bogus".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(&[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn optimize_requires_known_objective() {
        let err = run(&["optimize".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let args = vec![
            "optimize".to_string(),
            "--objective".into(),
            "ackley".into(),
            "--out".into(),
            std::env::temp_dir()
                .join("sparrownet-cli-unknown")
                .display()
                .to_string(),
        ];
        let err = run(&args).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_dataset_is_exit_three() {
        let out = std::env::temp_dir().join("sparrownet-cli-missing");
        let _ = std::fs::remove_dir_all(&out);
        let args = vec![
            "train".to_string(),
            "--out".into(),
            out.display().to_string(),
        ];
        let err = run(&args).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
