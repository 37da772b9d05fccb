//! segstruct: structural similarity loss tools for segmentation maps.
//!
//! Subcommands: `ssim` (index between two maps), `ssl-map` (structural
//! error, hard mask, and loss between labels and probabilities), `train`,
//! `eval`, and `sweep`. Inputs are binary PGM label maps (value = class
//! id, 255 = void) and SEGT tensors. Numerical outputs are CSV or
//! key=value lines.
//!
//! Exit codes: 0 success, 2 missing/unreadable file, 3 malformed file,
//! 4 shape mismatch, 1 any other failure.

mod commands;
mod heatmap;
mod inputs;

use clap::Parser;
use segstruct_core::Error;

use commands::{Cli, Command};

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
        Error::Io(_) => 2,
        Error::Format { .. } => 3,
        Error::ShapeMismatch { .. } => 4,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ssim(args) => commands::ssim::run(args),
        Command::SslMap(args) => commands::ssl_map::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
