use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qoe_forge::distortion::CRF_LEVELS;
use qoe_forge_workbench::commands::{self, PlanOptions};
use qoe_forge_workbench::config::{required, Config};
use qoe_forge_workbench::manifest::Manifest;
use qoe_forge_workbench::server::{self, AppState};
use qoe_forge_workbench::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "qoe-forge",
    version,
    about = "Stalled-video corpus and QoE evaluation workbench"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Log debug detail to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ManifestArg {
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a corpus manifest with the standard layout.
    Plan {
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        sources_per_cell: usize,
        #[arg(long, value_delimiter = ',', default_values_t = CRF_LEVELS)]
        crf: Vec<u32>,
        #[arg(long, default_value_t = 3)]
        modes_per_video: usize,
        /// Also write uniform source sidecars of this many seconds.
        #[arg(long)]
        source_seconds: Option<f64>,
    },
    /// Sample recipes and write output timing sidecars.
    Distort {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write render schedules from output sidecars.
    Restructure {
        #[command(flatten)]
        manifest: ManifestArg,
    },
    /// Screen subjects and compute MOS from a ratings CSV.
    Mos {
        #[arg(long)]
        ratings: PathBuf,
        /// MOS CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-subject screening log as JSON.
        #[arg(long)]
        rejection_log: Option<PathBuf>,
    },
    /// Evaluate predictor scores against the MOS of a ratings CSV.
    Evaluate {
        #[arg(long)]
        ratings: PathBuf,
        /// `video_id,score` CSV; repeat for several models.
        #[arg(long, required = true)]
        scores: Vec<PathBuf>,
        /// Report JSON path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MOS aggregates per distortion factor.
    Summarize {
        #[arg(long)]
        mos: PathBuf,
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the rating-session service.
    Serve {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        port: Option<u16>,
        /// Ratings CSV to append to.
        #[arg(long)]
        ratings: Option<PathBuf>,
        /// Seed of the playlist shuffles.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(path, text).map_err(|e| CliError::io(path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_manifest(arg: ManifestArg, config: &Config) -> CliResult<Manifest> {
    Manifest::load(&required(arg.manifest, &config.manifest, "manifest")?)
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Plan {
            out,
            sources_per_cell,
            crf,
            modes_per_video,
            source_seconds,
        } => {
            let out = required(out, &config.out, "out")?;
            let options = PlanOptions {
                sources_per_cell,
                crf,
                modes_per_video,
                source_seconds,
            };
            let m = commands::plan(&out, &options)?;
            let stalled = m.entries.iter().filter(|e| e.is_stalled()).count();
            println!(
                "{}",
                json!({
                    "manifest": out.join(commands::MANIFEST_FILE),
                    "entries": m.entries.len(),
                    "stalled": stalled,
                    "clean": m.entries.len() - stalled,
                })
            );
        }
        Command::Distort { manifest, seed } => {
            let manifest = load_manifest(manifest, &config)?;
            let seed = required(seed, &config.seed, "seed")?;
            let summary = commands::distort(&manifest, seed, config.encoder.as_ref())?;
            println!(
                "{}",
                serde_json::to_string(&summary).expect("summary serializes")
            );
        }
        Command::Restructure { manifest } => {
            let manifest = load_manifest(manifest, &config)?;
            let n = commands::restructure(&manifest)?;
            println!("{}", json!({ "schedules": n }));
        }
        Command::Mos {
            ratings,
            out,
            rejection_log,
        } => {
            let (rejection, table, csv) = commands::mos(&ratings)?;
            tracing::info!(
                retained = rejection.retained.len(),
                rejected = ?rejection.rejected,
                videos = table.rows.len(),
                "subject screening"
            );
            if let Some(path) = rejection_log {
                let text = serde_json::to_string_pretty(&rejection).expect("log serializes") + "\n";
                emit(Some(&path), &text)?;
            }
            emit(out.or(config.out).as_deref(), &csv)?;
        }
        Command::Evaluate {
            ratings,
            scores,
            out,
        } => {
            let report = commands::evaluate(&ratings, &scores)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            emit(out.or(config.out).as_deref(), &text)?;
        }
        Command::Summarize { mos, manifest, out } => {
            let manifest = load_manifest(manifest, &config)?;
            let csv = commands::summarize(&mos, &manifest)?;
            emit(out.or(config.out).as_deref(), &csv)?;
        }
        Command::Serve {
            manifest,
            port,
            ratings,
            seed,
        } => {
            let manifest = load_manifest(manifest, &config)?;
            let port = required(port, &config.port, "port")?;
            let seed = required(seed, &config.seed, "seed")?;
            let ratings = required(ratings, &config.serve.ratings, "ratings")?;
            let host: IpAddr = config
                .serve
                .host
                .as_deref()
                .unwrap_or("127.0.0.1")
                .parse()
                .map_err(|e| CliError::input(format!("serve.host: {e}")))?;
            let state = AppState::load(&manifest, ratings, config.serve.sessions.clone(), seed)?;
            let runtime =
                tokio::runtime::Runtime::new().map_err(|e| CliError::Other(e.to_string()))?;
            runtime.block_on(server::serve(Arc::new(state), SocketAddr::new(host, port)))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(if cli.verbose {
            tracing::Level::DEBUG
        } else {
            tracing::Level::INFO
        })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
