use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use medshare::cli::{self, CliError, RunConfig};
use medshare::datastore::{load_csv, Schema};

#[derive(Parser)]
#[command(name = "medshare", version, about = "Mediated private sharing of hospital records")]
struct Args {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic hospital records as CSV.
    GenData {
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Run one session end to end in the simulator.
    Run,
    /// Audit a transcript against the providers' source tables.
    Audit {
        #[arg(long)]
        transcript: PathBuf,
        /// Source CSVs. Defaults to the providers in --config.
        #[arg(long = "source")]
        sources: Vec<PathBuf>,
    },
    /// Moment-recovery error over a grid of sizes and noise levels.
    Stats,
    /// Walk through one key exchange.
    KeysDemo {
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
}

fn load_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(0, vec![]),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(args: &Args) -> Result<(), CliError> {
    match &args.command {
        Command::GenData { n } => {
            let out = args.out.clone().unwrap_or_else(|| "synthetic.csv".into());
            cli::gen_data_to(*n, args.seed.unwrap_or(0), &out)?;
            println!("wrote {n} rows to {}", out.display());
        }
        Command::Run => {
            let Some(_) = &args.config else {
                return Err(CliError::Config("run needs --config".into()));
            };
            let cfg = load_config(args)?;
            let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
            let report = cli::run_end_to_end(&cfg, &out)?;
            println!(
                "N = {}, {} rows -> {}",
                report.n.unwrap_or(0),
                report.result_rows,
                report.result_path.display()
            );
        }
        Command::Audit { transcript, sources } => {
            let tables = if sources.is_empty() {
                let cfg = load_config(args)?;
                cfg.providers.iter().map(cli::load_source).collect::<Result<Vec<_>, _>>()?
            } else {
                let schema = Schema::hospital();
                sources.iter().map(|p| load_csv(p, &schema)).collect::<Result<Vec<_>, _>>()?
            };
            let refs: Vec<_> = tables.iter().collect();
            let report = cli::audit_file(transcript, &refs)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            match &args.out {
                Some(path) => std::fs::write(path, &json).map_err(|e| CliError::Io {
                    path: path.clone(),
                    source: e,
                })?,
                None => println!("{json}"),
            }
            if !report.pass {
                let failed: Vec<&str> = [
                    ("source anonymity", &report.source_anonymity),
                    ("payload opacity", &report.payload_opacity),
                    ("step ordering", &report.step_ordering),
                    ("N consistency", &report.n_consistency),
                ]
                .iter()
                .filter(|(_, c)| !c.pass)
                .map(|(name, _)| *name)
                .collect();
                return Err(CliError::AuditFailed(failed.join(", ")));
            }
        }
        Command::Stats => {
            let cfg = load_config(args)?;
            let rows = cli::stats_experiment(&cfg.stats, cfg.seed)?;
            match &args.out {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(|e| CliError::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    cli::write_stats_csv(&rows, file)?;
                }
                None => cli::write_stats_csv(&rows, std::io::stdout())?,
            }
        }
        Command::KeysDemo { m } => {
            let text = cli::keys_demo(*m, args.seed.unwrap_or(0)).map_err(|e| CliError::Config(e.to_string()))?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
