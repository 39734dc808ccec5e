use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sicperf::experiment::{figure_preset, run_experiment, Engine, ExperimentSpec, RunOptions};
use sicperf::Error;

#[derive(Parser)]
#[command(name = "sicperf", version, about = "SIC outage and error-rate experiments under hardware and CSI impairments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec (TOML).
    Run {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in figure preset.
    Preset {
        #[arg(value_parser = ["fig1", "fig2", "fig3", "fig4", "fig5"])]
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the preset as TOML and exit.
        #[arg(long)]
        print_spec: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check a spec without running it.
    Validate { spec: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Comma-separated engines to run.
    #[arg(long, value_delimiter = ',')]
    engines: Option<Vec<EngineArg>>,
    /// Monte-Carlo worker threads (0 = all cores).
    #[arg(long, env = "THREADS", default_value_t = 0)]
    threads: usize,
    /// Monte-Carlo trials per point.
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate and list the outputs without computing.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Mc,
}

fn apply(spec: &mut ExperimentSpec, c: &Common) {
    if let Some(e) = &c.engines {
        spec.engines = e
            .iter()
            .map(|e| match e {
                EngineArg::Analytic => Engine::Analytic,
                EngineArg::Mc => Engine::Mc,
            })
            .collect();
    }
    if let Some(t) = c.trials {
        spec.trials = Some(t);
    }
    if let Some(o) = &c.out {
        spec.output = o.display().to_string();
    }
}

fn execute(spec: &ExperimentSpec, c: &Common) -> Result<(), Error> {
    let resolved = spec.resolve()?;
    if c.dry_run {
        for q in &resolved {
            println!("{}", PathBuf::from(&spec.output).join(format!("{}.csv", q.id)).display());
        }
        eprintln!("{} queries x {} SNR points; nothing computed", resolved.len(), spec.snr_db.len());
        return Ok(());
    }
    for p in run_experiment(spec, RunOptions { threads: c.threads })? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { spec, common } => {
            let mut s = ExperimentSpec::load(&spec)?;
            apply(&mut s, &common);
            execute(&s, &common)
        }
        Command::Preset {
            name,
            seed,
            print_spec,
            common,
        } => {
            let mut s = figure_preset(&name)?;
            apply(&mut s, &common);
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if print_spec {
                print!("{}", s.to_toml()?);
                return Ok(());
            }
            execute(&s, &common)
        }
        Command::Validate { spec } => {
            let s = ExperimentSpec::load(&spec)?;
            let r = s.resolve()?;
            println!("ok: {} queries, {} SNR points", r.len(), s.snr_db.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidInput(_) | Error::Unsupported(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
