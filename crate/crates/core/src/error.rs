use core::fmt;

use crate::expr::DomainError;

/// Scan direction in the parameter `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Decreasing `M`, i.e. positive eigenvalues `λ = M̄ - M`.
    Down,
    /// Increasing `M`, i.e. negative eigenvalues.
    Up,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Down => "down (positive eigenvalue)",
            Direction::Up => "up (negative eigenvalue)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(&'static str),
    #[error("coefficient a_{index}: {source}")]
    Coefficient { index: usize, source: DomainError },
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: &'static str },
    #[error("unresolved near-zero dip of W_{k} at t = {t}; refine the grid")]
    AmbiguousZero { k: usize, t: f64 },
    #[error("equation is not disconjugate at M = {m}: W_{witness_k} vanishes at t = {omega}")]
    NotDisconjugate {
        m: f64,
        omega: f64,
        witness_k: usize,
    },
    #[error("characteristic function of X_{k} touches zero without changing sign near M = {m}")]
    TangentialRoot { k: usize, m: f64 },
    #[error("no eigenvalue for X_{k} scanning {direction} within |M - M_ref| <= {reached}")]
    Inconclusive {
        k: usize,
        direction: Direction,
        reached: f64,
    },
    #[error("eigenvalue of X_{k} at M = {m} has multiplicity above one")]
    Multiplicity { k: usize, m: f64 },
    #[error("M = {m} is an eigenvalue of X_{k}; the boundary problem is singular")]
    SingularBoundary { k: usize, m: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
