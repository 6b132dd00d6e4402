use axiswirl::cli;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "axiswirl",
    about = "Axisymmetric swirl flow simulator with an a priori estimate monitor",
    version
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}")))
        .collect()
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured flow, writing monitor CSV, estimate JSON and
    /// final-state dumps to the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Exit with code 2 if a swirl restriction is violated.
        #[arg(long)]
        strict: bool,
        /// Worker threads for the per-mode solves (env AXISWIRL_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the desk-scale verification suite (Hardy corpus, elliptic
    /// constants, MMS convergence, decay envelope, iteration lemma,
    /// restriction detection, structure identities).
    Verify {
        /// Comma-separated group list (hardy, elliptic, mms, decay,
        /// iteration, restriction, structure); default: all.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Self-test hook: scale the Hardy constants (0.9 must fail).
        #[arg(long, default_value_t = 1.0)]
        hardy_scale: f64,
    },
    /// Manufactured-solution convergence study.
    Mms {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter sweep over the cut-off radius r0 and the viscosity nu.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated r0 values (default: the configured r0).
        #[arg(long, value_parser = parse_f64_list, default_value = "")]
        r0: Vec<Vec<f64>>,
        /// Comma-separated nu values (default: the configured nu).
        #[arg(long, value_parser = parse_f64_list, default_value = "")]
        nu: Vec<Vec<f64>>,
        /// Worker threads for the per-mode solves (env AXISWIRL_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn thread_count(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("AXISWIRL_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(1)
}

fn main() {
    let args = Args::parse();
    let code = match args.command {
        Command::Run {
            config,
            out,
            strict,
            threads,
        } => cli::cmd_run(&config, &out, strict, thread_count(threads)),
        Command::Verify { only, hardy_scale } => cli::cmd_verify(&only, hardy_scale),
        Command::Mms { out } => cli::cmd_mms(out.as_deref()),
        Command::Sweep {
            config,
            out,
            r0,
            nu,
            threads,
        } => {
            let r0_flat: Vec<f64> = r0.into_iter().flatten().collect();
            let nu_flat: Vec<f64> = nu.into_iter().flatten().collect();
            cli::cmd_sweep(&config, &out, &r0_flat, &nu_flat, thread_count(threads))
        }
    };
    std::process::exit(code);
}
