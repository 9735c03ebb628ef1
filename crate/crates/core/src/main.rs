use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use homlab::experiment::{self, RunOutcome};

#[derive(Parser)]
#[command(name = "homlab", version, about = "Experiments on evolutionary systems of changing type and their homogenized limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to a `key = value` config file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write field and trace CSVs.
    Solve(Common),
    /// Pair fine-scale solutions for every n in `sweep` against the limit.
    Sweep(Common),
    /// Fit the post-forcing decay rate and classify the tail.
    Stability(Common),
    /// Per-mode eigenvalues of the limit system.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Highest mode number.
        #[arg(long, default_value_t = 16)]
        kmax: usize,
    },
    /// Run the invariant battery.
    Validate(Common),
    /// Compare the final spatial mean with its predicted value.
    MeanCheck(Common),
}

fn run(cmd: &Command) -> homlab::Result<RunOutcome> {
    let cfg = |c: &Common| experiment::load_config(&c.config);
    match cmd {
        Command::Solve(c) => experiment::run_solve(&cfg(c)?),
        Command::Sweep(c) => experiment::run_sweep(&cfg(c)?),
        Command::Stability(c) => experiment::run_stability(&cfg(c)?),
        Command::Spectrum { common, kmax } => experiment::run_spectrum(&cfg(common)?, *kmax),
        Command::Validate(c) => experiment::run_validate(&cfg(c)?),
        Command::MeanCheck(c) => experiment::run_mean_check(&cfg(c)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(out) => {
            // a closed pipe must not turn a finished run into a panic
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", out.summary);
            for f in &out.files {
                let _ = writeln!(stdout, "  wrote {}", f.display());
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
