use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Symmetric B·B* − C·C* factorizations of structured matrices.
///
/// Exit codes: 0 success, 2 verification failed, 3 parse error or dimension
/// mismatch, 4 size cap exceeded, 5 precondition or numeric failure.
#[derive(Parser, Debug)]
#[command(name = "symfact", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Hankel,
    Toeplitz,
    Displacement,
    InverseHankel,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchKind {
    Hankel,
    Toeplitz,
    Displacement,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    Hankel,
    Toeplitz,
    /// Inverse of a random well-conditioned Hankel matrix, as a dense document.
    HankelInverse,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Factor a matrix document and write the factor pair as JSON.
    Factor {
        kind: FactorKind,
        /// Generator document (hankel, toeplitz, inverse-hankel) or dense document (displacement).
        input: String,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<String>,
        /// Materialize B·B* − C·C* and compare with the input.
        #[arg(long)]
        verify: bool,
        /// Relative Frobenius tolerance for --verify. For inverse-hankel it is
        /// multiplied by the condition number of the input.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Largest order that may be materialized.
        #[arg(long, default_value_t = 4096)]
        cap: usize,
        /// Claimed displacement rank (displacement only).
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Seed for the optional eigenvalue perturbation (displacement, inverse-hankel).
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-level generators as JSON (hankel only).
        #[arg(long)]
        dump_levels: Option<String>,
    },
    /// Apply B·B* − C·C* to a vector and print the result as a JSON array.
    Apply { factor: String, vector: String },
    /// Compare a factor pair with a matrix document.
    Verify {
        factor: String,
        matrix: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 4096)]
        cap: usize,
    },
    /// Difference-of-squares certificate for an even-degree polynomial.
    Sos {
        /// Ascending coefficients "a0,a1,...", a JSON array, or a file holding either.
        coeffs: String,
        #[arg(long)]
        out: Option<String>,
        /// Residual tolerance relative to the largest coefficient.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Batched Krylov products checked against the dense Krylov matrix.
    Krylov {
        /// Sparse n×n matrix A: triplet lines or JSON.
        a: String,
        /// Block width s; the block count is n / s.
        #[arg(long)]
        s: usize,
        /// Sparse n×s matrix G; random when omitted.
        #[arg(long)]
        g: Option<String>,
        /// Nonzeros per column of the random G.
        #[arg(long, default_value_t = 4)]
        density: usize,
        /// Columns of the random test block.
        #[arg(long, default_value_t = 8)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Time factorizations over a range of sizes.
    Bench {
        kind: BenchKind,
        /// Comma-separated orders; defaults to 4096,8192,16384,32768 (64,128,256 for displacement).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Repetitions per size; the fastest is reported.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a random input document.
    Generate {
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => commands::EXIT_PARSE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(commands::run(cli.command))
}
