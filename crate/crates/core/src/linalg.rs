//! Dense Hermitian primitives: eigendecomposition, matrix functions,
//! positive-semidefinite square roots, Loewner-order comparisons and
//! range-membership tests. Everything else in the crate is built on top
//! of these.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::Tolerances;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are eigenvectors, ordered like `values`.
    pub basis: CMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuild `basis * diag(f(values)) * basis^*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.basis.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = C64::new(f(v), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= fv;
            }
        }
        &scaled * self.basis.adjoint()
    }

    pub fn recompose(&self) -> CMatrix {
        self.apply(|v| v)
    }
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Frobenius distance to the adjoint.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// Operator 2-norm of a Hermitian matrix.
pub fn op_norm_hermitian(a: &CMatrix, tol: &Tolerances) -> Result<f64> {
    let eig = hermitian_eig(a, tol)?;
    Ok(eig.lambda_min().abs().max(eig.lambda_max().abs()))
}

/// Operator 2-norm of an arbitrary matrix, as the largest singular value.
pub fn op_norm(a: &CMatrix, tol: &Tolerances) -> f64 {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let gram = a.adjoint() * a;
    // The Gram matrix is Hermitian by construction.
    let eig = hermitian_eig(&gram, tol).expect("gram matrix must be Hermitian");
    eig.lambda_max().max(0.0).sqrt()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending.
///
/// The input is symmetrized before factoring; inputs whose Hermitian defect
/// exceeds `eig_tol * ||A||` are rejected.
pub fn hermitian_eig(a: &CMatrix, tol: &Tolerances) -> Result<HermEig> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.norm();
    let defect = hermitian_defect(a);
    let limit = tol.eig_tol * scale;
    if defect > limit {
        return Err(Error::NotHermitian { defect, limit });
    }
    let sym = hermitian_part(a);
    let se = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 1_000_000).ok_or(
        Error::NoConvergence {
            iterations: 1_000_000,
            residual: f64::NAN,
            trace: Vec::new(),
        },
    )?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut basis = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        basis.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(HermEig { values, basis })
}

/// Positive-semidefinite square root. Negative dust below
/// `psd_tol * ||A||` is clipped to zero; anything below that fails.
pub fn psd_sqrt(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let eig = hermitian_eig(a, tol)?;
    let scale = eig.lambda_max().abs().max(eig.lambda_min().abs());
    if eig.lambda_min() < -tol.psd_tol * scale.max(1.0) {
        return Err(Error::NotPsd {
            lambda_min: eig.lambda_min(),
        });
    }
    Ok(eig.apply(|v| v.max(0.0).sqrt()))
}

/// Result of a Loewner-order comparison `A <= B`.
#[derive(Debug, Clone, Copy)]
pub struct LoewnerCheck {
    pub holds: bool,
    /// Smallest eigenvalue of `B - A`; negative when the order fails.
    pub margin: f64,
}

/// Decide `A <= B` in the Loewner order via the signed margin
/// `lambda_min(B - A)`, tolerating `-psd_tol * max(||A||, ||B||, 1)`.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: &Tolerances) -> Result<LoewnerCheck> {
    let ea = hermitian_eig(a, tol)?;
    let eb = hermitian_eig(b, tol)?;
    let diff = b - a;
    let margin = hermitian_eig(&diff, tol)?.lambda_min();
    let scale = ea
        .lambda_max()
        .abs()
        .max(ea.lambda_min().abs())
        .max(eb.lambda_max().abs())
        .max(eb.lambda_min().abs())
        .max(1.0);
    Ok(LoewnerCheck {
        holds: margin >= -tol.psd_tol * scale,
        margin,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RangeMembership {
    pub member: bool,
    /// Least `c` with `x x^* <= c Y`, i.e. `x^* Y^+ x`; infinite outside the range.
    pub c_min: f64,
    /// Norm of the component of `x` in the numerical kernel of `Y`.
    pub kernel_residual: f64,
}

/// Test `x in Ran Y^{1/2}` for PSD `Y` by splitting `x` against the
/// rank_tol-thresholded eigenspaces of `Y`.
pub fn range_membership(y: &CMatrix, x: &CVector, tol: &Tolerances) -> Result<RangeMembership> {
    range_membership_with_floor(y, x, 0.0, tol)
}

/// Same as [`range_membership`] with an extra absolute floor on the rank
/// threshold, for operators that are only known up to some resolution.
pub fn range_membership_with_floor(
    y: &CMatrix,
    x: &CVector,
    rank_floor: f64,
    tol: &Tolerances,
) -> Result<RangeMembership> {
    if y.nrows() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator of dim {} vs vector of dim {}",
            y.nrows(),
            x.len()
        )));
    }
    let eig = hermitian_eig(y, tol)?;
    let lmax = eig.lambda_max();
    if eig.lambda_min() < -tol.psd_tol * lmax.abs().max(1.0) {
        return Err(Error::NotPsd {
            lambda_min: eig.lambda_min(),
        });
    }
    let cut = (tol.rank_tol * lmax.max(0.0)).max(rank_floor);
    let coords = eig.basis.adjoint() * x;
    let mut kernel_sq = 0.0;
    let mut c_min = 0.0;
    for (i, &v) in eig.values.iter().enumerate() {
        let w = coords[i].norm_sqr();
        if v <= cut {
            kernel_sq += w;
        } else {
            c_min += w / v;
        }
    }
    let kernel_residual = kernel_sq.sqrt();
    let member = kernel_residual <= tol.rank_tol * x.norm();
    Ok(RangeMembership {
        member,
        c_min: if member { c_min } else { f64::INFINITY },
        kernel_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn cm(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_fn(rows, cols, |i, j| C64::new(data[i * cols + j], 0.0))
    }

    #[test]
    fn eig_of_diagonal_is_identity_basis() {
        let a = cm(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let eig = hermitian_eig(&a, &tols()).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 4.0).abs() < 1e-14);
        let recon = eig.recompose();
        assert!((recon - a).norm() < 1e-14);
    }

    #[test]
    fn eig_of_swap_matrix() {
        let a = cm(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let eig = hermitian_eig(&a, &tols()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        // eigenvectors are (1, -1)/sqrt(2) and (1, 1)/sqrt(2) up to phase
        for j in 0..2 {
            let col = eig.basis.column(j);
            assert!((col[0].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
            assert!((col[1].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let b = CMatrix::from_fn(8, 8, |i, j| {
            C64::new(((i * 13 + j * 7) % 11) as f64 - 5.0, ((i + 3 * j) % 7) as f64 - 3.0)
        });
        let a = hermitian_part(&b);
        let eig = hermitian_eig(&a, &tols()).unwrap();
        assert!((eig.recompose() - &a).norm() <= 1e-12 * a.norm().max(1.0));
        let unit = eig.basis.adjoint() * &eig.basis;
        assert!((unit - CMatrix::identity(8, 8)).norm() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = cm(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            hermitian_eig(&a, &tols()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let a = cm(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let s = psd_sqrt(&a, &tols()).unwrap();
        let expect = cm(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!((s - expect).norm() < 1e-14);

        let id = CMatrix::identity(3, 3);
        assert!((psd_sqrt(&id, &tols()).unwrap() - &id).norm() < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let b = CMatrix::from_fn(6, 6, |i, j| {
            C64::new((((i * 5 + j) % 13) as f64 - 6.0) / 3.0, (((i + j * 11) % 9) as f64 - 4.0) / 3.0)
        });
        let a = b.adjoint() * &b;
        let s = psd_sqrt(&a, &tols()).unwrap();
        assert!((&s * &s - &a).norm() <= 1e-11 * a.norm());
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let a = cm(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(psd_sqrt(&a, &tols()), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn loewner_simple_orders() {
        let t = tols();
        let id = CMatrix::identity(3, 3);
        let two = &id * C64::new(2.0, 0.0);
        let up = loewner_leq(&id, &two, &t).unwrap();
        assert!(up.holds && (up.margin - 1.0).abs() < 1e-14);
        let down = loewner_leq(&two, &id, &t).unwrap();
        assert!(!down.holds && (down.margin + 1.0).abs() < 1e-14);
    }

    #[test]
    fn range_membership_examples() {
        let t = tols();
        let id = CMatrix::identity(2, 2);
        let x = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)]);
        let m = range_membership(&id, &x, &t).unwrap();
        assert!(m.member && (m.c_min - 1.0).abs() < 1e-12);

        let y = cm(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e2 = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let m = range_membership(&y, &e2, &t).unwrap();
        assert!(!m.member && m.c_min.is_infinite());

        let y = cm(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let e1 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let m = range_membership(&y, &e1, &t).unwrap();
        assert!(m.member && (m.c_min - 0.25).abs() < 1e-12);
    }
}
