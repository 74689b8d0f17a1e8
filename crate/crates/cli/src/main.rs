use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnlp_cli::config::SEED_ENV;
use qnlp_cli::{pipeline, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "qnlp",
    version,
    about = "Quantum-kernel sentence classification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the dataset and its train/test split.
    GenData,
    /// Train the explicit model for every seed.
    Train,
    /// Compute training and test Gram matrices for every seed.
    Gram,
    /// Fit SVMs on the stored Gram matrices.
    Svm,
    /// Run every stage with both kernels and write summary.json.
    Full,
}

/// Each flag overrides the config key of the same name.
#[derive(Args)]
struct Flags {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Runs a single seed, replacing the seed list.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Comma-separated seed list.
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// exact, shots or noisy.
    #[arg(long, global = true)]
    backend: Option<String>,
    #[arg(long, global = true)]
    shots: Option<String>,
    /// transition or swap.
    #[arg(long, global = true)]
    kernel: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    noise_profile: Option<String>,
    #[arg(long, global = true)]
    lexicon: Option<String>,
    #[arg(long, global = true)]
    dataset: Option<String>,
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    ratio: Option<String>,
    #[arg(long, global = true)]
    q_n: Option<String>,
    #[arg(long, global = true)]
    q_s: Option<String>,
    #[arg(long, global = true)]
    layers: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<String>,
    #[arg(long, global = true)]
    spsa_a: Option<String>,
    #[arg(long, global = true)]
    spsa_c: Option<String>,
    #[arg(long, global = true)]
    spsa_big_a: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<String>,
    #[arg(long, global = true)]
    eps: Option<String>,
    /// SVM box constraint.
    #[arg(long, global = true)]
    c: Option<String>,
    #[arg(long, global = true)]
    tol: Option<String>,
    #[arg(long, global = true)]
    max_passes: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("seeds", &self.seeds),
            ("backend", &self.backend),
            ("shots", &self.shots),
            ("kernel", &self.kernel),
            ("out", &self.out),
            ("noise_profile", &self.noise_profile),
            ("lexicon", &self.lexicon),
            ("dataset", &self.dataset),
            ("n", &self.n),
            ("ratio", &self.ratio),
            ("q_n", &self.q_n),
            ("q_s", &self.q_s),
            ("layers", &self.layers),
            ("epochs", &self.epochs),
            ("spsa_a", &self.spsa_a),
            ("spsa_c", &self.spsa_c),
            ("spsa_big_a", &self.spsa_big_a),
            ("alpha", &self.alpha),
            ("gamma", &self.gamma),
            ("eps", &self.eps),
            ("c", &self.c),
            ("tol", &self.tol),
            ("max_passes", &self.max_passes),
            ("seeds", &self.seed),
        ]
    }
}

fn resolve(flags: &Flags) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_env_seed(std::env::var(SEED_ENV).ok().as_deref())?;
    for (key, value) in flags.pairs() {
        if let Some(v) = value {
            cfg.set(key, v, Path::new("."))?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli.flags)?;
    match cli.command {
        Command::GenData => pipeline::cmd_gen_data(&cfg),
        Command::Train => pipeline::cmd_train(&cfg).map(drop),
        Command::Gram => pipeline::cmd_gram(&cfg),
        Command::Svm => pipeline::cmd_svm(&cfg).map(drop),
        Command::Full => pipeline::cmd_full(&cfg).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
