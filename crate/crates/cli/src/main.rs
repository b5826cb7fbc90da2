use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pstlab::experiment::config::IdentitiesSection;
use pstlab::experiment::{self, ExperimentConfig, ExperimentError, ExperimentKind, RunOptions, RunOutput};

#[derive(Parser)]
#[command(name = "pstlab", about = "Pseudo-twirling and KIK mitigation experiments", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the identity self-test suite.
    Identities {
        /// Qubit count to check; all of 1, 2 and 3 when omitted.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        n: Option<u8>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the version.
    Version,
}

#[derive(Args)]
struct Common {
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Output directory; beats `[output].dir` and $PSTLAB_OUT_DIR.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions { seed: self.seed, out_dir: self.out_dir.clone() }
    }
}

fn in_pool<T: Send>(threads: Option<u16>, f: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(usize::from(t));
    }
    let pool = builder.build().map_err(|e| ExperimentError::Numeric(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn report(out: &RunOutput) {
    for (stem, table) in &out.tables {
        if table.label_column().is_some() {
            let residual = table.column("max_residual").unwrap_or_default();
            let n = table.column("n").unwrap_or_default();
            let passed = table.column("passed").unwrap_or_default();
            for (i, label) in table.labels().iter().enumerate() {
                let status = if passed[i] == 1.0 { "pass" } else { "FAIL" };
                println!("{status} n={} {label:<20} max residual {:.3e}", n[i], residual[i]);
            }
        } else {
            println!("{stem}: {} rows", table.len());
        }
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Version => {
            println!("pstlab {}", experiment::VERSION);
            Ok(())
        }
        Command::Run { config, common } => {
            let cfg = ExperimentConfig::load(&config)?;
            run(&cfg, &common)
        }
        Command::Identities { n, common } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::Identities, common.seed.unwrap_or(0));
            cfg.identities = Some(IdentitiesSection { n: n.map(usize::from), ..Default::default() });
            run(&cfg, &common)
        }
    }
}

fn run(cfg: &ExperimentConfig, common: &Common) -> Result<(), ExperimentError> {
    let out = in_pool(common.threads, || experiment::run(cfg, &common.options()))??;
    report(&out);
    out.check_identities()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pstlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
