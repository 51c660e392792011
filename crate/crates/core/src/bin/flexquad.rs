use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flexquad::adaptive::ReferenceKind;
use flexquad::cli::{self, CliError, StabmapOverrides};

#[derive(Parser)]
#[command(name = "flexquad", version, about = "Flexible-arm quadrotor analysis and simulation")]
struct Args {
    /// Configuration file (TOML). Defaults to $FLEXQUAD_CONFIG_DIR/flexquad.toml,
    /// then to the built-in configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Controller {
    Mrac,
    Crm,
}

#[derive(Subcommand)]
enum Command {
    /// Arm natural frequencies and mode-shape data.
    Modal {
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop scenario simulation.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        controller: Option<Controller>,
        /// Let the delayed operator fly the altitude channel.
        #[arg(long)]
        operator: bool,
    },
    /// Rightmost-root map over operator gains.
    Stabmap {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_parser = cli::parse_range)]
        kp_range: Option<[f64; 2]>,
        #[arg(long, value_parser = cli::parse_range)]
        tp_range: Option<[f64; 2]>,
        /// Chebyshev order of the delay discretisation.
        #[arg(long)]
        cheb_order: Option<usize>,
    },
    /// Tracking-metric table over simulation output directories.
    Compare {
        #[arg(required = true, num_args = 2..)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    if let Command::Compare { dirs, out } = &args.command {
        print!("{}", cli::cmd_compare(dirs, out.as_deref())?);
        return Ok(());
    }
    let (mut cfg, source) = cli::load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    match args.command {
        Command::Modal { modes, out } => {
            print!("{}", cli::cmd_modal(&cfg, &source, modes, out.as_deref())?);
        }
        Command::Simulate { out, controller, operator } => {
            if let Some(c) = controller {
                cfg.controller.mode = match c {
                    Controller::Mrac => ReferenceKind::Mrac,
                    Controller::Crm => ReferenceKind::Crm,
                };
            }
            cfg.operator.enabled |= operator;
            let report = cli::cmd_simulate(&cfg, &source, &out)?;
            let s = &report.summary;
            println!(
                "{}: me = [{:.4e}, {:.4e}, {:.4e}, {:.4e}], tip rms = {:.4e}, saturations = {}",
                s.label, s.metric[0], s.metric[1], s.metric[2], s.metric[3], s.tip_rms, s.saturation_count
            );
        }
        Command::Stabmap { out, grid, kp_range, tp_range, cheb_order } => {
            let o = StabmapOverrides { kp_range, tp_range, grid, order: cheb_order };
            let map = cli::cmd_stabmap(&cfg, &source, &o, &out)?;
            println!(
                "{} cells: {} stable, {} unstable, {} failed",
                map.cells.len(),
                map.stable_count(),
                map.unstable_count(),
                map.failed_count()
            );
        }
        Command::Compare { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
