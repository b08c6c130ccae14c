use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "disconj",
    version,
    about = "Disconjugacy intervals of linear ODEs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide disconjugacy at one value of M.
    Check {
        file: PathBuf,
        /// Defaults to the file's m_ref.
        #[arg(long, allow_negative_numbers = true)]
        at: Option<f64>,
        /// Relative tolerance of the Wronskian zero search.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-k eigenvalues and the disconjugacy interval around m_ref.
    Interval {
        file: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// W_k sampled on the grid as CSV (t, W).
    Trace {
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        at: Option<f64>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Green's function of the (k, n-k) problem as CSV (t, s, g) plus a
    /// sign report.
    Green {
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        at: Option<f64>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        mesh: Option<usize>,
        /// Relative tolerance of the sign check.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Largest |M - m_ref| scanned.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Smallest scan step in M.
    #[arg(long)]
    pub step: Option<f64>,
}
