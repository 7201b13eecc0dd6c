use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaussphase::harness::{cmd_gen_state, cmd_reconstruct, cmd_report, cmd_verify, render_report, ExperimentConfig};
use gaussphase::reconstruction::ShearChoice;

#[derive(Parser)]
#[command(name = "gaussphase", version, about = "Gaussian-state tomography from total phases")]
struct Cli {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $GAUSSPHASE_OUT, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// State spec: vacuum:n=2, thermal:n=1,nu=1.5, tms:r=1, random-pure:n=3,
    /// random-mixed:n=2,nu_max=2, or file:<path>.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a Gaussian state to <out>/state.json.
    GenState {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate the phase measurements and reconstruct the covariance matrix.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        strategy: Option<u8>,
        /// Total shots per phase; 0 uses exact phases.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, value_parser = parse_shear)]
        shear: Option<ShearChoice>,
    },
    /// Compare closed-form traces with the truncated Fock-space oracle.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Summarize a stored report.json.
    Report { path: PathBuf },
}

fn parse_shear(s: &str) -> Result<ShearChoice, String> {
    match s {
        "position" => Ok(ShearChoice::Position),
        "momentum" => Ok(ShearChoice::Momentum),
        "both" => Ok(ShearChoice::Both),
        _ => Err(format!("expected position, momentum or both, got '{s}'")),
    }
}

fn config(cli: &Cli, common: &Common) -> gaussphase::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &common.state {
        cfg.state = s.clone();
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if cli.out.is_some() {
        cfg.output_dir = cli.out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> gaussphase::Result<u8> {
    match &cli.command {
        Command::GenState { common } => {
            let (_, path) = cmd_gen_state(&config(cli, common)?)?;
            println!("{}", path.display());
            Ok(0)
        }
        Command::Reconstruct { common, strategy, shots, shear } => {
            let mut cfg = config(cli, common)?;
            if let Some(k) = strategy {
                cfg.strategy = *k;
            }
            if let Some(s) = shots {
                cfg.shots = *s;
            }
            if let Some(s) = shear {
                cfg.shear = *s;
            }
            let outcome = cmd_reconstruct(&cfg)?;
            print!("{}", render_report(&outcome.report));
            println!("wrote {} and {}", outcome.json_path.display(), outcome.csv_path.display());
            Ok(outcome.exit_code as u8)
        }
        Command::Verify { common, cutoff } => {
            let mut cfg = config(cli, common)?;
            if cutoff.is_some() {
                cfg.cutoff = *cutoff;
            }
            let table = cmd_verify(&cfg)?;
            print!("{}", table.render());
            Ok(if table.passed() { 0 } else { 1 })
        }
        Command::Report { path } => {
            print!("{}", cmd_report(path)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
