//! Disconjugacy of linear n-th order differential equations
//!
//! ```text
//! u^(n) + a_1(t) u^(n-1) + ... + a_{n-1}(t) u' + (a_n(t) + M) u = 0,  t in [a, b]
//! ```
//!
//! decided through the Wronskians of the canonical fundamental system, and
//! the exact parameter interval of disconjugacy obtained from the
//! closest-to-zero eigenvalues of the `(k, n-k)` boundary value problems.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod eigen;
pub mod error;
pub mod expr;
pub mod green;
pub mod linalg;
pub mod ode;
pub mod roots;
pub mod wronskian;

pub use eigen::{
    analyze, assemble_interval, characteristic, closest_eigenvalues, disconjugacy_interval,
    eigenfunction_samples, scan_eigenvalues, Analysis, ClosestEigenvalues, DisconjugacyInterval,
    EigenRecord, Eigenfunction, ScanSettings, SolverSettings,
};
pub use error::{Direction, Error, Result};
pub use expr::{parse, Expr, SourcePos};
pub use green::{build_green, cauchy_solution, verify_sign, GreenGrid, Parity, SignReport};
pub use ode::{integrate_fundamental, FundamentalSystem, GridSpec, ProblemDef};
pub use wronskian::{
    disconjugacy_of, first_zero, is_disconjugate, trace, wronskian_at, wronskian_derivative_at,
    DisconjugacyReport, WronskianTrace, ZeroKind, ZeroOptions,
};
