use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oqlearn::config::ExperimentConfig;
use oqlearn::data::{generate_data, read_dataset, true_parameters, write_dataset};
use oqlearn::error::{HarnessError, Result};
use oqlearn::experiment::{run_to_dir, ExperimentOutcome};
use oqlearn::figures::{reproduce, Figure, DEFAULT_SEED};
use oqlearn::simulate::{run_sse, simulate};
use oqlearn::verify::{verify_suite, CheckGroup};

#[derive(Parser)]
#[command(name = "oqlearn", version, about = "Simulate and identify Lindblad dynamics")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expectation trajectories of the true model.
    Simulate,
    /// Synthetic measurement data.
    GenerateData,
    /// Identify the model from generated or loaded data.
    Learn {
        /// Fit this dataset file instead of generating one.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Trajectory-averaged density matrix of the true model.
    Sse,
    /// Run the self-checks; exits 1 if any fails.
    Verify {
        /// Restrict to these groups.
        #[arg(long, value_enum, value_delimiter = ',')]
        only: Vec<CheckGroup>,
    },
    /// Run a canned experiment.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new("."))).map_err(HarnessError::io(path))?;
    std::fs::write(path, text).map_err(HarnessError::io(path))
}

fn report(name: &str, o: &ExperimentOutcome) {
    println!(
        "{name}: {:?} after {} accepted iterations, relative error {:.3e}, φ {:.3e}, {:.1} s",
        o.history.termination,
        o.history.accepted_iterations(),
        o.final_rel_error(),
        o.history.last().phi,
        o.wall_time_s
    );
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate => {
            let config = load_config(cli)?;
            let path = cli.out.join("trajectory.csv");
            write(&path, &simulate(&config)?)?;
            println!("wrote {}", path.display());
        }
        Command::GenerateData => {
            let config = load_config(cli)?;
            let data = generate_data(&config)?;
            std::fs::create_dir_all(&cli.out).map_err(HarnessError::io(&cli.out))?;
            let path = cli.out.join("dataset.csv");
            write_dataset(&path, &config, &data.dataset)?;
            println!("wrote {}", path.display());
        }
        Command::Learn { data } => {
            let outcome = match data {
                Some(path) => {
                    let (header, dataset) = read_dataset(path)?;
                    let mut config = match &cli.config {
                        Some(_) => load_config(cli)?,
                        None => header.config,
                    };
                    if let Some(seed) = cli.seed {
                        config.seed = seed;
                    }
                    run_to_dir(&config, Some((true_parameters(&config), dataset)), &cli.out)?
                }
                None => run_to_dir(&load_config(cli)?, None, &cli.out)?,
            };
            report("learn", &outcome);
        }
        Command::Sse => {
            let config = load_config(cli)?;
            let path = cli.out.join("sse.json");
            write(&path, &(serde_json::to_string_pretty(&run_sse(&config)?)? + "\n"))?;
            println!("wrote {}", path.display());
        }
        Command::Verify { only } => {
            let groups = if only.is_empty() { CheckGroup::ALL.to_vec() } else { only.clone() };
            let rep = verify_suite(&groups)?;
            let path = cli.out.join("verify.csv");
            write(&path, &rep.to_csv())?;
            for c in rep.failures() {
                println!("FAIL {}: {:e} not in [{:e}, {:e}]", c.name, c.value, c.lower, c.upper);
            }
            let failed = rep.failures().count();
            println!("{} checks, {failed} failed; report in {}", rep.checks.len(), path.display());
            return Ok(failed == 0);
        }
        Command::Reproduce { figure } => {
            let dir = cli.out.join(figure.name());
            for (name, outcome) in reproduce(*figure, &dir, cli.seed.unwrap_or(DEFAULT_SEED))? {
                report(name, &outcome);
            }
            println!("wrote {}", dir.display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
