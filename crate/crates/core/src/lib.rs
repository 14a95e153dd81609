//! Numerical stability analysis of invertible operators on `C^n`.
//!
//! Given an invertible matrix `V`, the crate solves the one-parameter
//! fixed-point equation
//!
//! ```text
//! Q = V^* (Q + tI)(I + tQ)^{-1} V,        0 < t <= 1,
//! ```
//!
//! follows the solution along a decreasing `t`-grid, and extracts the limit
//! operators `X0 = lim t Q_t`, `Y0 = lim t Q_t^{-1}` and
//! `R0 = lim (I + Q_t)^{-1}`. These encode how powers of `V` act: `Ran Y0^{1/2}`
//! is exactly the set of vectors with square-summable orbit, and the space
//! splits orthogonally into contracting, neutral and expanding parts
//! `H = Ran Y0 (+) (Ker X0 /\ Ker Y0) (+) Ran X0`.
//!
//! On top of the solver sit per-vector stability classifiers, a
//! similarity-to-unitary verdict, a spectral-dichotomy comparison against an
//! ordered-Schur projector, and independent oracles (a closed form for normal
//! `V`, Neumann power sums) used to cross-check every limit.

pub mod error;
pub mod limits;
pub mod linalg;
pub mod operator;
pub mod oracle;
pub mod schur;
pub mod solver;
pub mod subspaces;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use operator::{OperatorMatrix, Tolerances};
pub use solver::{QSample, SolveConfig};

/// Verdict for a property that a finite procedure can only sometimes
/// decide; `Unknown` is an honest answer, not a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriState {
    True,
    False,
    Unknown,
}

impl TriState {
    pub fn is_true(self) -> bool {
        self == TriState::True
    }

    pub fn is_false(self) -> bool {
        self == TriState::False
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TriState::True => "true",
            TriState::False => "false",
            TriState::Unknown => "unknown",
        }
    }
}

impl std::fmt::Display for TriState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
