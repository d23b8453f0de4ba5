use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use epsnet::models::ArchitectureKind;
use epsnet::pipeline::{
    cmd_evaluate, cmd_preprocess, cmd_report, cmd_synth, cmd_train, Profile, RunConfig,
};

#[derive(Parser)]
#[command(name = "epsnet", version, about = "Quarterly EPS forecasting with LSTM and TCN networks")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run configuration; omitted sections keep the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = ProfileArg::Desk)]
    profile: ProfileArg,

    /// Worker threads for training repetitions.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Base training seed (repetition r uses seed + r).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run directory; relative paths resolve against $EPSNET_RUN_ROOT.
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,

    /// Config override, e.g. `--set train.epochs=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Lstm,
    Tcn,
    All,
}

impl KindArg {
    fn kinds(self) -> Vec<ArchitectureKind> {
        match self {
            KindArg::Lstm => vec![ArchitectureKind::Lstm],
            KindArg::Tcn => vec![ArchitectureKind::Tcn],
            KindArg::All => ArchitectureKind::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic quarterly and daily panels.
    Synth {
        /// Output directory (default: <run_dir>/data).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit transforms and build the train/validation/test stores of datasets A and B.
    Preprocess,
    /// Train all repetitions of one or both architectures.
    Train {
        #[arg(long, value_enum, default_value_t = KindArg::All)]
        kind: KindArg,
    },
    /// Score trained models against the persistent model and analysts.
    Evaluate,
    /// Print the stored evaluation report.
    Report,
    /// synth, preprocess, train (both kinds) and evaluate in one go.
    Run,
}

fn load_config(args: &GlobalArgs) -> Result<RunConfig> {
    let profile = match args.profile {
        ProfileArg::Desk => Profile::Desk,
        ProfileArg::Paper => Profile::Paper,
    };
    let mut config = RunConfig::load(args.config.as_deref(), profile, &args.overrides)
        .context("loading configuration")?;
    if let Some(seed) = args.seed {
        config.train.seed = seed;
    }
    if let Some(dir) = &args.run_dir {
        config.paths.run_dir = dir.clone();
    }
    Ok(config)
}

fn train(config: &RunConfig, kinds: &[ArchitectureKind], jobs: usize) -> Result<()> {
    for &kind in kinds {
        let manifest = cmd_train(config, kind, jobs).with_context(|| format!("training {kind}"))?;
        for f in &manifest.failures {
            eprintln!("warning: {kind} repetition {} failed: {}", f.repetition, f.error);
        }
    }
    Ok(())
}

fn evaluate(config: &RunConfig) -> Result<()> {
    cmd_evaluate(config).context("evaluating")?;
    print!("{}", cmd_report(config)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.global)?;
    let jobs = cli.global.jobs;
    match cli.command {
        Command::Synth { out } => {
            let m = cmd_synth(&config, out.as_deref()).context("generating synthetic data")?;
            println!(
                "wrote {} firms to {} and {} (seed {})",
                m.firms,
                m.quarterly.display(),
                m.daily.display(),
                m.seed
            );
        }
        Command::Preprocess => {
            for d in cmd_preprocess(&config).context("preprocessing")? {
                let (tr, va, te) = d.counts();
                println!(
                    "dataset {}: {tr} train, {va} validation, {te} test samples",
                    d.dataset.as_str()
                );
            }
        }
        Command::Train { kind } => train(&config, &kind.kinds(), jobs)?,
        Command::Evaluate => evaluate(&config)?,
        Command::Report => print!("{}", cmd_report(&config)?),
        Command::Run => {
            let start = Instant::now();
            cmd_synth(&config, None).context("generating synthetic data")?;
            cmd_preprocess(&config).context("preprocessing")?;
            train(&config, &ArchitectureKind::ALL, jobs)?;
            evaluate(&config)?;
            println!("finished in {:.1}s", start.elapsed().as_secs_f64());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
