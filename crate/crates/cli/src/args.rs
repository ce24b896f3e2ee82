use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Positivity scans, canonical forms and purification search for
/// translationally invariant MPS/MPDO.
///
/// Words are 0-indexed: letter `k` in a word is matrix `A_k`. Certificates
/// also list `letters`, the same word counted from 1.
#[derive(Debug, Parser)]
#[command(name = "tnpur", version)]
pub struct Cli {
    /// Machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Cap on dense d^L constructions (overrides TNPUR_CAP).
    #[arg(long, global = true)]
    pub cap: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the 7-letter reduction tensor from five integer 3x3 matrices.
    Reduce(ReduceArgs),
    /// Search for a word with negative trace up to a length cap.
    Scan(ScanArgs),
    /// Canonical form of a tensor, optionally compared against another.
    Canonical(CanonicalArgs),
    /// Power sums, Newton identities and multiset recovery.
    Powersum(PowersumArgs),
    /// Fit a purification tensor to a classical target.
    Purify(PurifyArgs),
    /// Check a purification tensor against a target.
    Verify(VerifyArgs),
    /// Interleave purification fits and positivity scans.
    Loop(LoopArgs),
    /// Cross-check reduction traces against their closed forms.
    VerifyIdentities(IdentitiesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rational,
    Orthonormal,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// JSON array of five 3x3 integer matrices.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "rational")]
    pub mode: Mode,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tolerance for the simultaneous-triangularization check.
    #[arg(long, default_value_t = 1e-8)]
    pub promise_tol: f64,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub max_len: usize,
    #[arg(long, default_value_t = 1)]
    pub min_len: usize,
    /// Decide signs in rational arithmetic (requires a rational tensor).
    #[arg(long)]
    pub exact: bool,
    /// Random word sampling instead of exhaustive enumeration.
    #[arg(long, conflicts_with = "general")]
    pub heuristic: bool,
    /// Number of sampled words in heuristic mode.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Dense spectral scan of the full MPDO.
    #[arg(long)]
    pub general: bool,
    /// Physical dimension p when the tensor holds p^2 MPDO letters;
    /// without it the tensor is read as a classical (diagonal) MPDO.
    #[arg(long, requires = "general")]
    pub physical: Option<usize>,
    /// Relative eigenvalue tolerance for the spectral scan.
    #[arg(long, default_value_t = tnpur::positivity::SCAN_GENERAL_TOL)]
    pub tol: f64,
    /// Re-check the witness with copies of this letter appended
    /// (5 for reduction tensors).
    #[arg(long)]
    pub pad: Option<usize>,
    /// Number of appended copies checked with --pad.
    #[arg(long, default_value_t = 4)]
    pub extend: usize,
}

#[derive(Debug, Args)]
pub struct CanonicalArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long, default_value_t = tnpur::canonical::FIXED_POINT_TOL)]
    pub tol: f64,
    /// Use D! as blocking factor instead of the lcm of detected periods.
    #[arg(long)]
    pub force_factorial: bool,
    /// Decide proportionality of the two states at every length.
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Largest length examined with --against.
    #[arg(long, default_value_t = 1000)]
    pub max_len: usize,
    /// Relative tolerance of the proportionality test for float tensors.
    #[arg(long, default_value_t = 1e-9)]
    pub prop_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PowersumArgs {
    #[command(subcommand)]
    pub op: PowersumOp,
}

#[derive(Debug, Subcommand)]
pub enum PowersumOp {
    /// Multiset with the given first n power sums.
    Recover {
        /// Comma-separated s_1, s_2, ... (`3`, `3/2`, `1+2i`).
        #[arg(long)]
        sums: String,
        #[arg(long)]
        n: usize,
        /// Rational arithmetic: report the polynomial instead of roots.
        #[arg(long)]
        exact: bool,
    },
    /// First n power sums of a multiset.
    Sums {
        #[arg(long)]
        values: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Elementary symmetric polynomials from power sums.
    Elementary {
        #[arg(long)]
        sums: String,
        #[arg(long)]
        exact: bool,
    },
    /// Smallest L with a nonzero L-th power sum.
    FirstNonzero {
        #[arg(long)]
        values: String,
        #[arg(long)]
        exact: bool,
    },
    /// Proportionality of grouped power-sum families over a window.
    Families {
        /// Groups separated by `;`, values by `,`.
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        /// Defaults to L0^2.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        exact: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Lbfgs,
    Pattern,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Lengths as `1..8`, `1..=8` or `1,2,5`.
    #[arg(long, default_value = "1..8")]
    pub lengths: String,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: u64,
    #[arg(long, value_enum, default_value = "lbfgs")]
    pub optimizer: OptimizerArg,
}

#[derive(Debug, Args)]
pub struct PurifyArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub bond: usize,
    /// Environment dimension (default bond * d).
    #[arg(long)]
    pub env: Option<usize>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub purification: PathBuf,
    #[arg(long, default_value = "1..8")]
    pub lengths: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct LoopArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub max_bond: usize,
    #[arg(long)]
    pub max_len: usize,
    /// Float sign decisions in the scans (default exact for rational tensors).
    #[arg(long)]
    pub float: bool,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Where to write a purification tensor if one is found.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdentitiesArgs {
    /// JSON array of five 3x3 integer matrices.
    #[arg(long)]
    pub input: PathBuf,
    /// Reduction tensor to check; built from the input when omitted.
    #[arg(long)]
    pub tensor: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
}
