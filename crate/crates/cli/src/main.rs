use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use harmonica_client::Client;
use harmonica_core::control::RunState;
use harmonica_core::harness::{
    compare, comparison_csv, default_scenario, drift_scenario, generate_trace, resolve_dataset, run_scenario_detailed, RunConfig,
    RunSummary, TraceParams, SYNTHETIC,
};
use harmonica_core::knowledge::LogKind;
use harmonica_core::pipeline::dataset_csv;

#[derive(Parser)]
#[command(name = "harmonica", version, about = "Self-adaptive, energy-aware time-series inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "HARMONICA_PORT", default_value_t = harmonica_service::DEFAULT_PORT)]
        port: u16,
        /// Uploaded datasets and exported logs live here.
        #[arg(long, default_value = "harmonica-data")]
        data_dir: PathBuf,
    },
    /// Run one experiment and print its summary.
    Run {
        /// RunConfig JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Where to write the summary JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run on a Harmonica service instead of in-process.
        #[arg(long)]
        server: Option<String>,
        /// Also write telemetry.csv and adaptations.csv here.
        #[arg(long)]
        logs_dir: Option<PathBuf>,
    },
    /// Average several policies over repeated runs and write a CSV table.
    Compare {
        /// Comma-separated policy names.
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        /// CSV file or synthetic id. Without --config it is replayed with two
        /// injected drift chunks; the default is the built-in 14-day trace.
        #[arg(long)]
        dataset: Option<String>,
        /// RunConfig JSON supplying everything but the policy (and the
        /// dataset, when --dataset is given).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic traffic-flow trace.
    GenTrace {
        #[arg(long, default_value_t = 14)]
        days: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_local(config: &RunConfig, logs_dir: Option<&Path>) -> Result<RunSummary> {
    let points = resolve_dataset(&config.dataset_id)?;
    let (out, store) = run_scenario_detailed(config, &points)?;
    if let Some(dir) = logs_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("telemetry.csv"), store.export_csv(LogKind::Telemetry))?;
        std::fs::write(dir.join("adaptations.csv"), store.export_csv(LogKind::Adaptations))?;
    }
    Ok(out.summary)
}

async fn run_remote(server: &str, mut config: RunConfig, logs_dir: Option<&Path>) -> Result<RunSummary> {
    let client = Client::new(server);
    // local files are uploaded first; anything else is resolved by the service
    if !config.dataset_id.starts_with(SYNTHETIC) && Path::new(&config.dataset_id).is_file() {
        let points = resolve_dataset(&config.dataset_id)?;
        config.dataset_id = client.upload_dataset(dataset_csv(&points)).await?;
    }
    client.start_run(&config).await?;
    let status = client.wait_for_run(Duration::from_millis(100), Duration::from_secs(3600)).await?;
    if status.state != RunState::Finished {
        bail!("run ended in state {:?}: {}", status.state, status.error.unwrap_or_default());
    }
    if let Some(dir) = logs_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("telemetry.csv"), client.telemetry_csv().await?)?;
        std::fs::write(dir.join("adaptations.csv"), client.adaptations_csv().await?)?;
    }
    status.summary.context("finished run reported no summary")
}

#[tokio::main]
async fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Serve { port, data_dir } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
                .await
                .with_context(|| format!("binding port {port}"))?;
            tracing::info!(port, data_dir = %data_dir.display(), "serving");
            harmonica_service::serve(listener, data_dir).await?;
        }
        Command::Run { config, out, server, logs_dir } => {
            let config = read_config(&config)?;
            let summary = match server {
                Some(url) => run_remote(&url, config, logs_dir.as_deref()).await?,
                None => tokio::task::spawn_blocking(move || run_local(&config, logs_dir.as_deref())).await??,
            };
            let mut text = serde_json::to_string_pretty(&summary)?;
            text.push('\n');
            write_or_print(out.as_deref(), &text)?;
        }
        Command::Compare { policies, dataset, config, reps, out } => {
            let (base, points) = match (config, dataset) {
                (Some(path), dataset) => {
                    let mut base = read_config(&path)?;
                    if let Some(id) = dataset {
                        base.dataset_id = id;
                    }
                    let points = resolve_dataset(&base.dataset_id)?;
                    (base, points)
                }
                (None, Some(id)) => {
                    let points = resolve_dataset(&id)?;
                    (drift_scenario(&id, points.len()), points)
                }
                (None, None) => default_scenario(),
            };
            let rows = tokio::task::spawn_blocking(move || compare(&policies, &base, &points, reps)).await??;
            write_or_print(out.as_deref(), &comparison_csv(&rows))?;
        }
        Command::GenTrace { days, seed, out } => {
            if days == 0 {
                bail!("--days must be at least 1");
            }
            let points = generate_trace(&TraceParams { days, seed, ..TraceParams::default() });
            std::fs::write(&out, dataset_csv(&points)).with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}
