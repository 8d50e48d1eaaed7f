use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use frontlab::config::{load_config, Mode};
use frontlab::run;
use frontlab::Error;

#[derive(Parser)]
#[command(name = "frontlab", version, about = "Front motion laboratory for saturated aggregation profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run description.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one profile across the regularization ladder.
    Simulate(CommonArgs),
    /// Scan tail-coefficient ratios and bracket the critical one.
    Sweep(CommonArgs),
    /// Run the seeded invariant suites.
    Verify(CommonArgs),
    /// Contrast a run against its aggregation-free counterpart.
    Baseline(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(c) | Command::Sweep(c) | Command::Verify(c) | Command::Baseline(c) => c,
        }
    }
}

fn dispatch(cli: &Cli) -> frontlab::Result<bool> {
    let args = cli.command.common();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Error::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    }
    let mut cfg = load_config(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    match cli.command {
        Command::Simulate(_) => {
            cfg.mode.get_or_insert(Mode::Simulate);
            run::cmd_simulate(&cfg, args.seed)?;
            Ok(true)
        }
        Command::Sweep(_) => {
            cfg.mode.get_or_insert(Mode::Sweep);
            run::cmd_sweep(&cfg, args.seed)?;
            Ok(true)
        }
        Command::Verify(_) => {
            cfg.mode.get_or_insert(Mode::Verify);
            run::cmd_verify(&cfg, args.seed)
        }
        Command::Baseline(_) => {
            cfg.mode.get_or_insert(Mode::Baseline);
            run::cmd_baseline(&cfg, args.seed)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed; see verify_suites.csv");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
