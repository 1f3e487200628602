use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use spinterp_core::Mode;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "spinterp", version, about = "Sparse interpolation of integer polynomials from black boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random sparse polynomial.
    Gen(GenArgs),
    /// Interpolate the polynomial behind an explicit, product or circuit file.
    Interp(InterpArgs),
    /// Time interpolation of a product of random sparse factors.
    Bench(BenchArgs),
    /// Compare two sparse polynomial files.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Heuristic,
    Provable,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Heuristic => Mode::Heuristic,
            ModeArg::Provable => Mode::Provable,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Explicit,
    Product,
    Circuit,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    nvars: usize,
    #[arg(long)]
    terms: usize,
    /// Partial degrees are below this bound.
    #[arg(long)]
    degree: BigUint,
    /// Coefficients lie in [-height, height].
    #[arg(long)]
    height: BigUint,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Heuristic)]
    mode: ModeArg,
    /// Verified reruns; 0 skips verification.
    #[arg(long, default_value_t = 2)]
    retries: u32,
    /// Testing hook: fixed coefficient prime.
    #[arg(long)]
    force_q: Option<u64>,
    /// Testing hook: fixed diversification element.
    #[arg(long)]
    force_alpha: Option<u64>,
    /// Testing hook: fixed small primes.
    #[arg(long, value_delimiter = ',')]
    force_primes: Option<Vec<u64>>,
}

#[derive(Args, Debug)]
struct InterpArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Explicit)]
    kind: Kind,
    /// Required for circuits; checked against the file otherwise.
    #[arg(long)]
    nvars: Option<usize>,
    #[arg(long)]
    terms: usize,
    /// Defaults to the file's bound (explicit) or the bound implied by the
    /// factors (product). Required for circuits.
    #[arg(long)]
    degree: Option<BigUint>,
    #[arg(long)]
    height: BigUint,
    #[command(flatten)]
    run: RunArgs,
    /// Output file; standard output if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Number of random factors multiplied together.
    #[arg(long, default_value_t = 1)]
    factors: usize,
    #[arg(long, default_value_t = 20)]
    nvars: usize,
    /// Per-factor degree bound.
    #[arg(long, default_value = "40")]
    degree: BigUint,
    /// Terms per factor.
    #[arg(long, default_value_t = 3)]
    terms: usize,
    /// Per-factor coefficient bound.
    #[arg(long, default_value = "1073741824")]
    height: BigUint,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    a: PathBuf,
    b: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::Interp(args) => commands::interp(args),
        Command::Bench(args) => commands::bench(args),
        Command::Verify(args) => commands::verify(args),
    };
    match result {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
