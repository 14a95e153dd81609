//! Error type shared by every analysis stage.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {limit:.3e}")]
    NotHermitian { defect: f64, limit: f64 },

    #[error("matrix is not positive semidefinite: lambda_min = {lambda_min:.3e}")]
    NotPsd { lambda_min: f64 },

    #[error("matrix is not normal: commutator norm {defect:.3e} exceeds {limit:.3e}")]
    NotNormal { defect: f64, limit: f64 },

    #[error("matrix is numerically singular: 1/cond = {inv_cond:.3e} <= floor {floor:.3e}")]
    Singular { inv_cond: f64, floor: f64 },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error(
        "fixed-point iteration stopped after {iterations} iterations with residual {residual:.3e}"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Relative changes sampled at geometrically spaced iterations.
        trace: Vec<f64>,
    },

    #[error("upper/lower start solutions disagree: relative gap {gap:.3e} exceeds {limit:.3e}")]
    BracketMismatch { gap: f64, limit: f64 },

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("stability subspaces do not fill the space ({lt}+{eq}+{gt} vs dim {dim}): {detail}")]
    RankDeficit {
        lt: usize,
        eq: usize,
        gt: usize,
        dim: usize,
        detail: String,
    },

    #[error("basis columns are not orthonormal: defect {defect:.3e}")]
    NotOrthonormal { defect: f64 },

    #[error("operator has no numerically positive directions; witness is vacuous")]
    ZeroRange,

    #[error("spectral gap {gap:.3e} below floor {floor:.3e}; dichotomy comparison refused")]
    GapTooSmall { gap: f64, floor: f64 },

    #[error("limit net not converged: {0}")]
    NotConverged(String),

    #[error("classification chain violated: {0}")]
    InconsistentVerdict(String),

    #[error("power horizon {0} too short, need at least 16")]
    HorizonTooShort(usize),

    #[error("power sum overflowed after {terms} terms")]
    Overflow { terms: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}
