//! The central input type: a square complex matrix certified invertible at
//! construction, together with the numerical tolerances used everywhere.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, CMatrix, C64};

/// Numerical tolerances shared by all analysis stages.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Allowed Hermitian defect (relative) before an eigensolve refuses.
    pub eig_tol: f64,
    /// Allowed negative-eigenvalue magnitude in Loewner / PSD checks.
    pub psd_tol: f64,
    /// Relative eigenvalue cutoff for numerical rank decisions.
    pub rank_tol: f64,
    /// Reciprocal-condition floor below which a matrix counts as singular.
    pub singularity_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_tol: 1e-10,
            psd_tol: 1e-9,
            rank_tol: 1e-8,
            singularity_floor: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eig_tol", self.eig_tol),
            ("psd_tol", self.psd_tol),
            ("rank_tol", self.rank_tol),
            ("singularity_floor", self.singularity_floor),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::BadParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.rank_tol >= 1.0 {
            return Err(Error::BadParameter(format!(
                "rank_tol must be below 1, got {}",
                self.rank_tol
            )));
        }
        Ok(())
    }
}

/// A square complex matrix certified invertible at construction.
///
/// The constructor computes the Gram matrix `V^* V` once and keeps its
/// spectral extremes, the operator norms of `V` and `V^{-1}`, and the
/// explicit inverse; all downstream stages read these instead of
/// refactoring.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    dim: usize,
    entries: CMatrix,
    inverse: CMatrix,
    gram: CMatrix,
    gram_min: f64,
    gram_max: f64,
    inv_cond_estimate: f64,
}

impl OperatorMatrix {
    pub fn new(entries: CMatrix, tol: &Tolerances) -> Result<Self> {
        tol.validate()?;
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::BadParameter(format!(
                "operator must be square with dim >= 1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BadParameter(
                "operator entries must be finite".into(),
            ));
        }
        let gram = entries.adjoint() * &entries;
        let eig = hermitian_eig(&gram, tol)?;
        let gram_min = eig.lambda_min();
        let gram_max = eig.lambda_max();
        let inv_cond = if gram_max > 0.0 && gram_min > 0.0 {
            (gram_min / gram_max).sqrt()
        } else {
            0.0
        };
        if inv_cond <= tol.singularity_floor {
            return Err(Error::Singular {
                inv_cond,
                floor: tol.singularity_floor,
            });
        }
        let inverse = entries
            .clone()
            .try_inverse()
            .ok_or(Error::Singular {
                inv_cond,
                floor: tol.singularity_floor,
            })?;
        Ok(OperatorMatrix {
            dim: n,
            entries,
            inverse,
            gram,
            gram_min,
            gram_max,
            inv_cond_estimate: inv_cond,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.inverse
    }

    /// `V^* V`, computed once at construction.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// Smallest eigenvalue of `V^* V`.
    pub fn gram_min(&self) -> f64 {
        self.gram_min
    }

    pub fn gram_max(&self) -> f64 {
        self.gram_max
    }

    /// Operator 2-norm of `V`.
    pub fn norm(&self) -> f64 {
        self.gram_max.max(0.0).sqrt()
    }

    /// Operator 2-norm of `V^{-1}`.
    pub fn inv_norm(&self) -> f64 {
        1.0 / self.gram_min.max(f64::MIN_POSITIVE).sqrt()
    }

    pub fn inv_cond_estimate(&self) -> f64 {
        self.inv_cond_estimate
    }

    /// The operator `(V^*)^{-1} = (V^{-1})^*` as a certified operator.
    pub fn adjoint_inverse_operator(&self, tol: &Tolerances) -> Result<OperatorMatrix> {
        OperatorMatrix::new(self.inverse.adjoint(), tol)
    }

    /// `V^* M V`.
    pub fn sandwich(&self, m: &CMatrix) -> CMatrix {
        self.entries.adjoint() * m * &self.entries
    }
}

/// Identity operator, occasionally useful as a trivial test input.
pub fn identity_operator(dim: usize, tol: &Tolerances) -> Result<OperatorMatrix> {
    OperatorMatrix::new(CMatrix::identity(dim, dim), tol)
}

/// Convenience constructor from a real 1x1 value.
pub fn scalar_operator(v: f64, tol: &Tolerances) -> Result<OperatorMatrix> {
    OperatorMatrix::new(
        CMatrix::from_element(1, 1, Complex::new(v, 0.0)),
        tol,
    )
}

/// Diagonal operator from real entries.
pub fn diagonal_operator(diag: &[f64], tol: &Tolerances) -> Result<OperatorMatrix> {
    let n = diag.len();
    OperatorMatrix::new(
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        tol,
    )
}
