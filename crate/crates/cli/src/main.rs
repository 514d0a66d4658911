use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use levy_sde::scenarios::{MODULUS_SUMMARIES, SCENARIO_SUMMARIES};
use levy_sde_cli::config::ExperimentConfig;
use levy_sde_cli::runner::{run_experiment, EXIT_CONFIG};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "LEVY_SDE_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "levy-sde",
    version,
    about = "Jump-diffusion SDE experiments: successive-approximation solves, \
             coefficient-condition checks, and mean-square stability diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's path count.
        #[arg(long)]
        paths: Option<usize>,
        /// Override the config's grid steps (power of two).
        #[arg(long)]
        steps: Option<usize>,
        /// Output directory (falls back to config, then $LEVY_SDE_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// List the built-in moduli.
    ListModuli,
    /// Parse and validate a config file, reporting every problem.
    CheckConfig { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            seed,
            paths,
            steps,
            out,
        } => run(config, seed, paths, steps, out),
        Command::ListScenarios => {
            for (name, summary) in SCENARIO_SUMMARIES {
                println!("{name}\n    {summary}");
            }
            0
        }
        Command::ListModuli => {
            for (name, summary) in MODULUS_SUMMARIES {
                println!("{name}\n    {summary}");
            }
            0
        }
        Command::CheckConfig { config } => check_config(config),
    };
    ExitCode::from(code as u8)
}

fn load_with_overrides(
    path: &Path,
    seed: Option<u64>,
    paths: Option<usize>,
    steps: Option<usize>,
) -> Result<ExperimentConfig, i32> {
    let mut config = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("invalid config {}:", path.display());
            eprint!("{errors}");
            return Err(EXIT_CONFIG);
        }
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(p) = paths {
        config.paths = p;
    }
    if let Some(m) = steps {
        config.grid.steps = m;
    }
    let issues = config.validate();
    if !issues.is_empty() {
        eprintln!("invalid configuration after overrides:");
        for issue in issues {
            eprintln!("- {issue}");
        }
        return Err(EXIT_CONFIG);
    }
    Ok(config)
}

fn run(
    path: PathBuf,
    seed: Option<u64>,
    paths: Option<usize>,
    steps: Option<usize>,
    out: Option<PathBuf>,
) -> i32 {
    let config = match load_with_overrides(&path, seed, paths, steps) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let out_dir = out
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("levy-out"));

    match run_experiment(&config, &out_dir) {
        Ok(outcome) => {
            for o in &outcome.outcomes {
                println!(
                    "diagnostic {}: {} ({})",
                    o.name,
                    if o.pass { "pass" } else { "FAIL" },
                    o.detail
                );
            }
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if outcome.exit_code != 0 {
                let failing: Vec<&str> = outcome
                    .outcomes
                    .iter()
                    .filter(|o| !o.pass)
                    .map(|o| o.name)
                    .collect();
                eprintln!("failed diagnostics: {}", failing.join(", "));
            }
            println!("outputs in {}", out_dir.display());
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}

fn check_config(path: PathBuf) -> i32 {
    match ExperimentConfig::load(&path) {
        Ok(config) => {
            println!("{} is valid; resolved configuration:", path.display());
            print!("{}", config.canonical_toml());
            0
        }
        Err(errors) => {
            eprintln!("invalid config {}:", path.display());
            eprint!("{errors}");
            EXIT_CONFIG
        }
    }
}
