use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod args;
mod io;
mod mesh_cmds;
mod seam_cmds;
mod train_cmds;

use args::{
    DetokenizeArgs, EvaluateArgs, GenerateArgs, MaskArgs, RankArgs, SeamCommand, TokenizeArgs, TrainCommand,
};

/// Mesh tokenization, quality ranking, preference training and seam cutting.
///
/// Stdout carries JSON only; diagnostics go to stderr. Exit status is 0 on
/// success, 2 for bad input or usage, 3 for numeric failure.
#[derive(Debug, Parser)]
#[command(name = "meshtopo", version)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode an OBJ mesh as one token record.
    Tokenize(TokenizeArgs),
    /// Decode a token record back into an OBJ mesh.
    Detokenize(DetokenizeArgs),
    /// Score a mesh against a reference point cloud.
    Evaluate(EvaluateArgs),
    /// Build preference triplets from quality reports and token records.
    Rank(RankArgs),
    /// Per-token quality mask of one token record.
    Mask(MaskArgs),
    /// Train the sequence model.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Sample tokens from a trained model.
    Generate(GenerateArgs),
    /// Seam codec and the cut / flatten / distortion pipeline.
    #[command(subcommand)]
    Seam(SeamCommand),
}

/// Failure that is numeric even though no library error carries it.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct NumericFailure(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err.chain().any(|c| {
        c.downcast_ref::<NumericFailure>().is_some()
            || c.downcast_ref::<meshtopo::Error>().is_some_and(meshtopo::Error::is_numeric)
    });
    if numeric {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Tokenize(a) => mesh_cmds::tokenize(&a),
        Command::Detokenize(a) => mesh_cmds::detokenize(&a),
        Command::Evaluate(a) => mesh_cmds::evaluate(&a),
        Command::Rank(a) => mesh_cmds::rank(&a),
        Command::Mask(a) => mesh_cmds::mask(&a),
        Command::Train(t) => train_cmds::train(&t),
        Command::Generate(a) => train_cmds::generate(&a),
        Command::Seam(s) => seam_cmds::seam(&s),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
