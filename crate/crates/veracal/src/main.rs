use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use veracal::experiments::{
    emit_distributions, run_bsdetector, run_elicitation_comparison, run_method_comparison,
    run_sample_size_ablation, run_scale_and_version_comparison, run_temperature_ablation,
    BackendConfig, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "veracal",
    version,
    about = "Uncertainty quantification harness for LLM misinformation classifiers"
)]
struct Cli {
    /// Configuration file (.toml or .json); defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Backend override: `http` or `simulator`
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Seed override for fold splits and the simulator
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Dataset override: a LIAR-format TSV file or directory
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,

    /// Dataset split override: train|valid|test|all
    #[arg(long, global = true)]
    split: Option<String>,

    /// Evaluate only the first N records
    #[arg(long, global = true)]
    limit: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the six consistency estimators' calibration
    Methods,
    /// Sample-size ablation over k_values
    AblateK,
    /// Temperature ablation over temperatures
    AblateTemp,
    /// Single- vs two-step verbalized confidence comparison
    Elicit,
    /// Full hybrid pipeline with cross-validated alpha search
    Bsdetector,
    /// Truth-scale and model-version comparison
    Scales,
    /// Confidence-score histograms per method and elicitation mode
    Distributions,
}

fn resolve_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(backend) = &cli.backend {
        config.backend = match backend.as_str() {
            "simulator" => match config.backend {
                BackendConfig::Simulator { .. } => config.backend,
                _ => BackendConfig::default(),
            },
            "http" => match config.backend {
                BackendConfig::Http { .. } => config.backend,
                _ => BackendConfig::Http {
                    settings: Default::default(),
                },
            },
            other => anyhow::bail!("unknown backend {other:?} (expected http or simulator)"),
        };
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
        if let BackendConfig::Simulator { profile } = &mut config.backend {
            profile.seed = seed;
        }
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some(dataset) = &cli.dataset {
        config.dataset.path = dataset.clone();
    }
    if let Some(split) = &cli.split {
        config.dataset.split = split.parse::<veracal::dataset::Split>()?;
    }
    if let Some(limit) = cli.limit {
        config.dataset.limit = Some(limit);
    }
    config.validate()?;
    Ok(config)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let config = resolve_config(&cli)?;

    match cli.command {
        Command::Methods => {
            let (report, _) = run_method_comparison(&config)?;
            println!(
                "method comparison (k = {}, T = {})",
                report.k, report.temperature
            );
            println!("{:<22}{:>10}{:>10}{:>8}", "method", "ece", "brier", "n");
            for row in &report.rows {
                println!(
                    "{:<22}{:>10.4}{:>10.4}{:>8}",
                    row.method.to_string(),
                    row.ece,
                    row.brier,
                    row.n
                );
            }
        }
        Command::AblateK => {
            let (report, _) = run_sample_size_ablation(&config)?;
            println!("sample-size ablation (T = {})", report.temperature);
            println!(
                "{:<22}{:>6}{:>10}{:>10}{:>8}",
                "method", "k", "ece", "brier", "n"
            );
            for row in &report.rows {
                println!(
                    "{:<22}{:>6}{:>10.4}{:>10.4}{:>8}",
                    row.method.to_string(),
                    row.k,
                    row.ece,
                    row.brier,
                    row.n
                );
            }
        }
        Command::AblateTemp => {
            let (report, _) = run_temperature_ablation(&config)?;
            println!("temperature ablation (k = {})", report.k);
            println!(
                "{:<22}{:>6}{:>10}{:>10}{:>8}",
                "method", "T", "ece", "brier", "n"
            );
            for row in &report.rows {
                println!(
                    "{:<22}{:>6}{:>10.4}{:>10.4}{:>8}",
                    row.method.to_string(),
                    row.temperature,
                    row.ece,
                    row.brier,
                    row.n
                );
            }
        }
        Command::Elicit => {
            let (report, _) = run_elicitation_comparison(&config)?;
            println!(
                "{:<14}{:>10}{:>10}{:>10}{:>10}{:>10}",
                "mode", "bin_acc", "ece", "brier", "nn_rate", "n"
            );
            for row in &report.modes {
                println!(
                    "{:<14}{:>10}{:>10}{:>10}{:>10.4}{:>10}",
                    row.mode,
                    opt(row.binary_accuracy),
                    opt(row.ece),
                    opt(row.brier),
                    row.nn_rate,
                    row.n_scored
                );
            }
            if let Some(ks) = &report.ks {
                println!(
                    "k-s test: D = {:.4}, p = {:.6}{}",
                    ks.d,
                    ks.p_value,
                    if ks.significant_at_0_05 {
                        " (distributions differ at 0.05)"
                    } else {
                        ""
                    }
                );
            }
            for row in &report.conditional {
                println!(
                    "{}: accuracy {} above certainty 50 (n = {}), {} at or below (n = {})",
                    row.mode,
                    opt(row.above_50_accuracy),
                    row.above_50_count,
                    opt(row.at_or_below_50_accuracy),
                    row.at_or_below_50_count
                );
            }
        }
        Command::Bsdetector => {
            let (report, _) = run_bsdetector(&config)?;
            println!(
                "hybrid pipeline (k = {}, T = {})",
                report.k, report.temperature
            );
            println!(
                "{:<22}{:>7}{:>10}{:>10}{:>10}{:>10}{:>8}",
                "method", "alpha", "ece", "brier", "oof_ece", "oof_brier", "n"
            );
            for row in &report.rows {
                println!(
                    "{:<22}{:>7.1}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>8}",
                    row.method.to_string(),
                    row.alpha_star,
                    row.ece,
                    row.brier,
                    row.oof_ece,
                    row.oof_brier,
                    row.n
                );
            }
        }
        Command::Scales => {
            let (report, _) = run_scale_and_version_comparison(&config)?;
            println!(
                "{:<24}{:>10}{:>10}{:>10}{:>10}",
                "scale", "bin_acc", "auc", "nn_rate", "6pt_acc"
            );
            for row in &report.scales {
                println!(
                    "{:<24}{:>10}{:>10}{:>10.4}{:>10}",
                    row.scale,
                    opt(row.binary_accuracy),
                    opt(row.auc),
                    row.nn_rate,
                    opt(row.sixpoint_accuracy)
                );
            }
            println!();
            println!(
                "{:<24}{:<20}{:>10}{:>10}{:>10}{:>10}",
                "model", "prompt", "bin_acc", "auc", "6pt_acc", "nn_rate"
            );
            for row in &report.versions {
                println!(
                    "{:<24}{:<20}{:>10}{:>10}{:>10}{:>10.4}",
                    row.model,
                    row.prompt,
                    opt(row.binary_accuracy),
                    opt(row.auc),
                    opt(row.sixpoint_accuracy),
                    row.nn_rate
                );
            }
        }
        Command::Distributions => {
            let (report, _) = emit_distributions(&config)?;
            for (name, hist) in &report.histograms {
                println!(
                    "{name}: n = {}, nonzero buckets = {}",
                    hist.n,
                    hist.counts.iter().filter(|&&c| c > 0).count()
                );
            }
        }
    }

    eprintln!("outputs written under {}", config.out_dir.display());
    Ok(())
}
