use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use nusspid::cli::{self, Preset, RunOptions, SweepOptions};
use nusspid::controller::ControllerKind;

#[derive(Parser)]
#[command(
    name = "nusspid",
    version,
    about = "Nussbaum-gain adaptive PID tracking control of a two-link planar arm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its CSV trace
    Run {
        /// JSON config file; missing keys fall back to the built-in preset
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV output path (default: output.csv_path from the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Horizon override (s)
        #[arg(long)]
        duration: Option<f64>,
        /// Step override (s)
        #[arg(long)]
        dt: Option<f64>,
        /// Control law: nussbaum-pid or fixed-pid
        #[arg(long, value_parser = ControllerKind::from_str)]
        controller: Option<ControllerKind>,
        /// Scale factor applied to the actuator matrix
        #[arg(long = "kappa-scale")]
        kappa_scale: Option<f64>,
        /// Actuator preset: paper (I), flip (-I) or skew (diag(0.5, -2))
        #[arg(long, value_parser = Preset::from_str)]
        preset: Option<Preset>,
        /// Hold the control over each step instead of integrating it
        #[arg(long)]
        hold: bool,
    },
    /// Run one scenario per parameter value, concurrently
    Sweep {
        /// Parameter to vary (e.g. kappa-scale, k_delta, gamma)
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long)]
        values: String,
        /// JSON config file shared by every scenario
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory receiving one CSV per value
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the numerical property suite
    Verify,
}

fn main() {
    let parsed = match Cli::try_parse() {
        Ok(parsed) => parsed,
        Err(err) => {
            // --help/--version exit 0; usage errors exit 1
            let code = if err.use_stderr() {
                cli::exit_code::CONFIG
            } else {
                0
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    let status = match parsed.command {
        Command::Run {
            config,
            out,
            duration,
            dt,
            controller,
            kappa_scale,
            preset,
            hold,
        } => cli::run_command(&RunOptions {
            config,
            out,
            duration,
            dt,
            controller,
            kappa_scale,
            preset,
            hold,
        }),
        Command::Sweep {
            param,
            values,
            config,
            out,
        } => cli::sweep_command(&SweepOptions {
            param,
            values,
            config,
            out_dir: out,
        }),
        Command::Verify => cli::verify_command(),
    };
    std::process::exit(status);
}
