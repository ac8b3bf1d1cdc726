use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twistmod::itinerary::{self, Codebook};
use twistmod_cli::config::{BoundsConfig, Experiment, ExperimentConfig};
use twistmod_cli::error::CliError;
use twistmod_cli::{load_config, run, sweep, write_table};

/// Chaotic-map parameter modulation experiments.
#[derive(Parser)]
#[command(name = "twistmod", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path (overrides the config; default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trial count (overrides the config).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run a config once per value of one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
    },
    /// Scalar bound quantities at one (alpha, gamma).
    Bounds {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        p_bar: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        cost_p: f64,
    },
    /// Build or inspect itinerary codebooks.
    Codebook {
        #[command(subcommand)]
        action: CodebookAction,
    },
}

#[derive(Subcommand)]
enum CodebookAction {
    /// Build the codebook of an itinerary-scheme config and save it.
    Build {
        path: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Print a codebook as CSV (index, psi, letters).
    Dump { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads)
        .build_global()
        .map_err(|e| CliError::Invalid {
            field: "threads".into(),
            message: e.to_string(),
        })?;
    match cli.command {
        Command::Run { config } => {
            let cfg = configure(&config, &cli.common)?;
            let table = run(&cfg)?;
            write_table(&table, cfg.out.as_deref())
        }
        Command::Sweep { config, axis, values } => {
            let cfg = configure(&config, &cli.common)?;
            let values = parse_values(&values)?;
            let table = sweep(&cfg, &axis, &values)?;
            write_table(&table, cfg.out.as_deref())
        }
        Command::Bounds {
            alpha,
            gamma,
            p_bar,
            cost_p,
        } => {
            let experiment = Experiment::Bounds(BoundsConfig {
                alpha,
                gamma,
                cost_p,
                p_bar,
                p_bars: Vec::new(),
                alpha_grid: None,
            });
            experiment.validate()?;
            let cfg = ExperimentConfig {
                seed: cli.common.seed.unwrap_or(0),
                out: cli.common.out.clone(),
                experiment,
            };
            write_table(&run(&cfg)?, cfg.out.as_deref())
        }
        Command::Codebook { action } => codebook(action, &cli.common),
    }
}

fn configure(path: &Path, common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = load_config(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(t) = common.trials {
        cfg.experiment.set_trials(t)?;
        cfg.experiment.validate()?;
    }
    Ok(cfg)
}

fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|_| CliError::Invalid {
                field: "values".into(),
                message: format!("`{s}` is not a number"),
            })
        })
        .collect()
}

fn codebook(action: CodebookAction, common: &Common) -> Result<(), CliError> {
    let io = |path: &Path, e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        source: e,
    };
    match action {
        CodebookAction::Build { path, config } => {
            let cfg = configure(&config, common)?;
            let Experiment::ItineraryScheme(s) = &cfg.experiment else {
                return Err(CliError::Invalid {
                    field: "kind".into(),
                    message: "codebook build needs an itinerary-scheme config".into(),
                });
            };
            let book = itinerary::build_codebook(&s.scheme_config(cfg.seed)?)?;
            std::fs::write(&path, book.to_bytes()).map_err(|e| io(&path, e))
        }
        CodebookAction::Dump { path } => {
            let bytes = std::fs::read(&path).map_err(|e| io(&path, e))?;
            let book = Codebook::from_bytes(&bytes)?;
            let mut out = format!(
                "# n: {}\n# m: {}\n# r_cw: {}\n# delta: {}\n# seed: {}\nindex,psi",
                book.n, book.m, book.r_cw, book.delta, book.seed
            );
            for t in 1..=book.n {
                out.push_str(&format!(",c{t}"));
            }
            out.push('\n');
            for i in 0..book.m {
                out.push_str(&format!("{i},{}", book.psi[i]));
                for c in book.codeword(i) {
                    out.push_str(&format!(",{c}"));
                }
                out.push('\n');
            }
            match &common.out {
                Some(p) => std::fs::write(p, out).map_err(|e| io(p, e)),
                None => {
                    print!("{out}");
                    Ok(())
                }
            }
        }
    }
}
