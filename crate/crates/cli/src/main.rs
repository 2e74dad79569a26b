use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sqmem_cli::{execute, load_config, manifest, CliError, Command, Scale};

#[derive(Parser)]
#[command(name = "sqmem", version, about = "Squeezed-vacuum EIT delay and storage simulator")]
struct Args {
    /// Config file (`section.key = value` lines). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides run.out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the default config with every key documented.
    Defaults,
    /// Fit the source, medium and storage channel; print the values.
    Calibrate,
    /// Stationary source and transmitted noise spectra.
    Spectrum,
    /// Pulsed noise timelines of every scenario.
    Timeline,
    /// Estimate timelines from recorded HODT files.
    Analyze {
        /// Vacuum (shot-noise) trace file; repeat for several.
        #[arg(long, required = true)]
        shot: Vec<PathBuf>,
        /// Signal trace files.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Quick internal consistency checks.
    Selftest,
}

fn run(args: Args) -> Result<(), CliError> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.run.out_dir = out.display().to_string();
    }
    let scale = match args.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    let command = match args.command {
        Cmd::Defaults => Command::Defaults,
        Cmd::Calibrate => Command::Calibrate,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Timeline => Command::Timeline,
        Cmd::Analyze { shot, files } => Command::Analyze { shot, signal: files },
        Cmd::Selftest => Command::SelfTest,
    };
    let outcome = execute(&command, &cfg, scale)?;
    print!("{}", outcome.stdout);
    if let Some(m) = &outcome.manifest {
        let dir = PathBuf::from(&cfg.run.out_dir);
        manifest::write_outputs(&dir, &outcome.files, m)?;
        eprintln!("wrote {} files to {}", outcome.files.len() + 1, dir.display());
    }
    if outcome.failed_checks > 0 {
        return Err(CliError::SelfTest(outcome.failed_checks));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
