use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weightcond::bench::config::{CondParams, HessianParams, QuadParams, TrainCompareParams, VdsParams};
use weightcond::bench::{run, Arm, Experiment, ExperimentConfig};
use weightcond::Error;

#[derive(Parser)]
#[command(name = "wcond", version, about = "Weight conditioning lab")]
struct Cli {
    /// Print the available normalization/conditioning arms and exit.
    #[arg(long, global = true)]
    list_arms: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root directory for run outputs (default: the config's
    /// `output_dir`, else `runs`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Condition numbers of a matrix file before and after each preconditioner.
    Cond {
        matrix_file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Van der Sluis sweep over random diagonal scalings.
    Vds(Common),
    /// Gradient descent on a quadratic with and without preconditioning.
    Quad(Common),
    /// Training comparison across normalization/conditioning arms.
    Train(Common),
    /// Hessian condition numbers of plain vs equilibrated networks.
    Hessian(Common),
}

fn load(common: &Common, default: Experiment) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(default.clone(), 0),
    };
    if std::mem::discriminant(&cfg.experiment) != std::mem::discriminant(&default) {
        return Err(Error::Config(format!(
            "config describes a `{}` experiment, but this subcommand runs `{}`",
            cfg.experiment.kind(),
            default.kind()
        )));
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.list_arms {
        for arm in Arm::ALL {
            println!("{:<10} {}", arm.as_str(), arm.describe());
        }
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no subcommand given; see `wcond --help`");
        return ExitCode::from(2);
    };
    let prepared = match &command {
        Command::Cond { matrix_file, common } => {
            load(common, Experiment::CondReport(CondParams::default())).map(|mut c| {
                if let Experiment::CondReport(p) = &mut c.experiment {
                    p.matrix_file = Some(matrix_file.clone());
                }
                (c, common)
            })
        }
        Command::Vds(c) => load(c, Experiment::Vds(VdsParams::default())).map(|x| (x, c)),
        Command::Quad(c) => load(c, Experiment::Quad(QuadParams::default())).map(|x| (x, c)),
        Command::Train(c) => load(c, Experiment::TrainCompare(TrainCompareParams::default())).map(|x| (x, c)),
        Command::Hessian(c) => load(c, Experiment::HessianCompare(HessianParams::default())).map(|x| (x, c)),
    };
    let result = prepared.and_then(|(cfg, common)| {
        let root = common
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("runs"));
        run(&cfg, &root)
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("outputs in {}", outcome.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
