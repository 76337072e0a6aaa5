mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{
    AlphaArgs, DecomposeArgs, Globals, InvarianceArgs, MatrixArgs, NetArgs, OneParamArgs, PeriodArgs,
    TranslationArgs,
};

/// Grid verifiers for invariance and constancy of generalized functions.
#[derive(Parser, Debug)]
#[command(name = "ginvariant", version, about)]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Asymptotic class of a net (moderate, negligible order).
    Classify(NetArgs),
    /// Whether f∘g − f is negligible for one group element.
    Invariance(InvarianceArgs),
    /// Real-parameter hypothesis and generalized-parameter conclusion for a flow.
    OneParam(OneParamArgs),
    /// Invariance under a rotation matrix, factor by factor and in full.
    Rotation(MatrixArgs),
    /// Invariance under a proper orthochronous Lorentz matrix.
    Lorentz(MatrixArgs),
    /// Planar-rotation schedule of an orthogonal matrix.
    DecomposeSo(DecomposeArgs),
    /// Rotation-boost-rotation factorization of a Lorentz matrix.
    DecomposeLorentz(DecomposeArgs),
    /// Pair (k, l) with l <= N and |k − lα| <= 1/N.
    Dirichlet(AlphaArgs),
    /// Liouville constant and exponent M of an algebraic number.
    Liouville(AlphaArgs),
    /// Pair (k, l) with 1/R^M <= |k − lα| <= 2/R.
    CorollaryPair(AlphaArgs),
    /// Constancy of a net with periods 1 and an algebraic α.
    TwoPeriod(PeriodArgs),
    /// Constancy of a translation-invariant net.
    Translation(TranslationArgs),
    /// Two-period machinery for a non-algebraic ratio (no theorem behind it).
    ExploreOpenQuestion(PeriodArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.globals) {
        Ok(positive) => ExitCode::from(if positive { 0 } else { 1 }),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
