use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irrmc_cli::acceptance::{run_all, Scale};
use irrmc_cli::{parse_config, run_experiment, CliError, ExperimentKind, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "irrmc", version, about = "Euler-Maruyama and MLMC experiments for irregular payoffs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// q-th moment error curve and fitted rate.
    Rate(RunArgs),
    /// Monte Carlo check of the irregular-payoff inequality.
    Inequality(RunArgs),
    /// Weak-type and pointwise maximal-function checks.
    Maximal(RunArgs),
    /// One adaptive MLMC run.
    Mlmc(RunArgs),
    /// MLMC cost over an epsilon sweep.
    Complexity(RunArgs),
    /// Terminal-density histograms and Gaussian envelopes.
    Density(RunArgs),
    /// The acceptance suite at reduced sample sizes.
    Selftest {
        /// Run at the full acceptance sample sizes.
        #[arg(long)]
        full: bool,
        /// Write selftest.json here.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config and the environment.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if config.experiment != kind {
        return Err(CliError::Config(format!(
            "config describes a {} experiment, not {}",
            config.experiment.name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        config.params.seed = Some(seed);
    }
    let out = args
        .out
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("irrmc-out"));
    let summary = run_experiment(&config, &out)?;
    for c in &summary.checks {
        println!("{:<14} {:<22} {}", format!("{:?}", c.status).to_lowercase(), c.name, c.detail);
    }
    println!("artifacts in {}: {}", out.display(), summary.artifacts.join(", "));
    Ok(!summary.failed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Rate(a) => run(ExperimentKind::Rate, a),
        Command::Inequality(a) => run(ExperimentKind::Inequality, a),
        Command::Maximal(a) => run(ExperimentKind::Maximal, a),
        Command::Mlmc(a) => run(ExperimentKind::Mlmc, a),
        Command::Complexity(a) => run(ExperimentKind::Complexity, a),
        Command::Density(a) => run(ExperimentKind::Density, a),
        Command::Selftest { full, out } => {
            let scale = if full { Scale::Full } else { Scale::Reduced };
            let results = run_all(scale, |o| println!("{}", o.line()));
            let ok = results.iter().all(|o| o.passed);
            match out {
                Some(dir) => std::fs::create_dir_all(&dir)
                    .and_then(|_| {
                        let text = serde_json::to_string_pretty(&results).expect("outcomes serialise");
                        std::fs::write(dir.join("selftest.json"), text + "\n")
                    })
                    .map(|_| ok)
                    .map_err(|source| CliError::Io {
                        path: dir.display().to_string(),
                        source,
                    }),
                None => Ok(ok),
            }
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
