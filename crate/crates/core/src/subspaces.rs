//! The orthogonal splitting `H = Ran Y0 (+) (Ker X0 /\ Ker Y0) (+) Ran X0`
//! built from the limit operators, per-vector stability classification, and
//! the contraction witness carried by the contracting part.

use crate::error::{Error, Result};
use crate::limits::LimitBundle;
use crate::linalg::{
    hermitian_eig, op_norm, range_membership_with_floor, CMatrix, CVector, C64,
};
use crate::operator::{OperatorMatrix, Tolerances};
use crate::TriState;

/// Orthonormal bases of the three stability subspaces.
///
/// `basis_lt` spans `Ran Y0` (the part where powers of `V` contract),
/// `basis_gt` spans `Ran X0` (where the inverse powers contract), and
/// `basis_eq` the orthogonal complement `Ker X0 /\ Ker Y0`.
#[derive(Debug, Clone)]
pub struct Trichotomy {
    pub basis_lt: CMatrix,
    pub basis_eq: CMatrix,
    pub basis_gt: CMatrix,
    pub ranks: (usize, usize, usize),
    /// Measured mutual orthogonality defect between the extracted bases.
    pub ortho_defect: f64,
}

impl Trichotomy {
    pub fn dim(&self) -> usize {
        self.basis_lt.nrows()
    }
}

/// Rank cutoff for a numerically known limit operator: relative to the top
/// eigenvalue, but never below the resolution the net actually reached
/// (limits with unit-modulus directions carry spurious eigenvalues of size
/// comparable to the last sweep step).
fn rank_cut(lambda_max: f64, resolution: f64, tol: &Tolerances) -> f64 {
    (tol.rank_tol * lambda_max.max(0.0)).max(10.0 * resolution.min(1e50))
}

fn basis_above_cut(m: &CMatrix, resolution: f64, tol: &Tolerances) -> Result<(CMatrix, usize)> {
    let eig = hermitian_eig(m, tol)?;
    let cut = rank_cut(eig.lambda_max(), resolution, tol);
    let n = eig.dim();
    let selected: Vec<usize> = (0..n).filter(|&i| eig.values[i] > cut).collect();
    let r = selected.len();
    let mut basis = CMatrix::zeros(n, r);
    for (dst, &src) in selected.iter().enumerate() {
        basis.set_column(dst, &eig.basis.column(src));
    }
    Ok((basis, r))
}

/// Build the trichotomy from a converged limit bundle.
pub fn trichotomy(bundle: &LimitBundle, tol: &Tolerances) -> Result<Trichotomy> {
    if !bundle.x_converged || !bundle.y_converged {
        return Err(Error::NotConverged(
            "X/Y nets have not stagnated; subspace ranks are not trustworthy".into(),
        ));
    }
    let n = bundle.dim();
    let (basis_lt, r_lt) = basis_above_cut(&bundle.y0, bundle.y_resolution(), tol)?;
    let (basis_gt, r_gt) = basis_above_cut(&bundle.x0, bundle.x_resolution(), tol)?;
    if r_lt + r_gt > n {
        return Err(Error::RankDeficit {
            lt: r_lt,
            eq: 0,
            gt: r_gt,
            dim: n,
            detail: "contracting and expanding ranges overlap".into(),
        });
    }
    let r_eq = n - r_lt - r_gt;

    // Complement of span([lt | gt]) from the spectral split of B B^*.
    let mut b = CMatrix::zeros(n, r_lt + r_gt);
    for j in 0..r_lt {
        b.set_column(j, &basis_lt.column(j));
    }
    for j in 0..r_gt {
        b.set_column(r_lt + j, &basis_gt.column(j));
    }
    let gram = &b * b.adjoint();
    let eig = hermitian_eig(&gram, tol)?;
    let spanned = eig.values.iter().filter(|&&l| l > 0.5).count();
    if spanned != r_lt + r_gt {
        return Err(Error::RankDeficit {
            lt: r_lt,
            eq: r_eq,
            gt: r_gt,
            dim: n,
            detail: format!(
                "joint span has numerical rank {spanned}, expected {}",
                r_lt + r_gt
            ),
        });
    }
    let mut basis_eq = CMatrix::zeros(n, r_eq);
    for j in 0..r_eq {
        basis_eq.set_column(j, &eig.basis.column(j));
    }
    let leak_eq = eig.values[..r_eq]
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.max(0.0)))
        .sqrt();
    let cross = op_norm(&(basis_lt.adjoint() * &basis_gt), tol);
    Ok(Trichotomy {
        basis_lt,
        basis_eq,
        basis_gt,
        ranks: (r_lt, r_eq, r_gt),
        ortho_defect: cross.max(leak_eq),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurinvarianceMode {
    /// Test `V . span(B) = span(B)`.
    V,
    /// Test `(V^*)^{-1} . span(B) = span(B)`.
    VStarInv,
}

/// Defect `||(I - B B^*) M B||` of `M span(B)` leaving `span(B)`. Since `M`
/// is invertible, a zero defect means the image equals the span, not merely
/// sits inside it.
pub fn surinvariance_defect(
    v: &OperatorMatrix,
    basis: &CMatrix,
    mode: SurinvarianceMode,
    tol: &Tolerances,
) -> Result<f64> {
    let r = basis.ncols();
    if r == 0 {
        return Ok(0.0);
    }
    if basis.nrows() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "basis rows {} vs operator dim {}",
            basis.nrows(),
            v.dim()
        )));
    }
    let gram_defect = (basis.adjoint() * basis - CMatrix::identity(r, r)).norm();
    if gram_defect > 1e-7 {
        return Err(Error::NotOrthonormal {
            defect: gram_defect,
        });
    }
    let adjoint_inverse;
    let m = match mode {
        SurinvarianceMode::V => v.matrix(),
        SurinvarianceMode::VStarInv => {
            adjoint_inverse = v.inverse().adjoint();
            &adjoint_inverse
        }
    };
    let image = m * basis;
    let projected = &image - basis * (basis.adjoint() * &image);
    Ok(op_norm(&projected, tol))
}

/// Numeric evidence backing a [`VectorVerdict`].
#[derive(Debug, Clone)]
pub struct ClassifyEvidence {
    /// `||V^n x||` for `n = 0..=horizon` (possibly truncated on overflow).
    pub orbit_norms: Vec<f64>,
    /// Fitted slope of `ln ||V^n x||` per step over the tail.
    pub orbit_slope: f64,
    /// `(t, <x, Q_t x>)` along the sweep.
    pub q_trace: Vec<(f64, f64)>,
    /// Fitted exponent `beta` in `<x, Q_t x> ~ t^beta`.
    pub q_exponent: f64,
    /// Largest `<x, Q_t x>/t` seen; finite-sweep stand-in for the least
    /// `c` with `<x, Q_t x> <= c t`.
    pub slope_quotient_max: f64,
    pub range_member: bool,
    pub range_c_min: f64,
    pub range_kernel_residual: f64,
    /// Outcome of the slope test for square-summable orbits.
    pub slope_bounded: TriState,
}

/// Membership report for one vector in the stability hierarchy.
///
/// The asymptotically defined sets carry tri-state verdicts: a finite
/// horizon cannot always separate, say, an orbit tending to zero from one
/// stabilizing at a small plateau, and the classifier says so rather than
/// guessing.
#[derive(Debug, Clone)]
pub struct VectorVerdict {
    /// `x in Ran Y0^{1/2}`, i.e. the orbit is square-summable.
    pub l2_member: bool,
    /// Least `c` with `x x^* <= c Y0` when a member.
    pub c_min: f64,
    /// `||V^n x|| -> 0`.
    pub stab0: TriState,
    /// `sup_n ||V^n x|| < inf`.
    pub stab: TriState,
    /// `sup_t <x, Q_t x> < inf`.
    pub finq: TriState,
    /// `<x, Q_t x> -> 0` as `t -> 0`.
    pub kerq0: TriState,
    /// Estimate of `limsup ||V^n x||^{1/n}`.
    pub growth_exponent: f64,
    pub power_horizon: usize,
    pub evidence: ClassifyEvidence,
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in points {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

const GROWTH_TOL: f64 = 1e-3;

/// Classify one vector against the stability hierarchy using the power
/// orbit up to `horizon` and the sweep trace `<x, Q_t x>`.
///
/// Emits `InconsistentVerdict` when the produced verdicts violate the
/// inclusion chains `l2 => stab0 => kerq0` or `stab => finq`; unknown
/// verdicts never violate a chain.
pub fn classify_vector(
    v: &OperatorMatrix,
    x: &CVector,
    bundle: &LimitBundle,
    horizon: usize,
    tol: &Tolerances,
) -> Result<VectorVerdict> {
    if horizon < 16 {
        return Err(Error::HorizonTooShort(horizon));
    }
    if x.len() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector dim {} vs operator dim {}",
            x.len(),
            v.dim()
        )));
    }
    let norm = x.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::BadParameter("vector must be nonzero finite".into()));
    }
    let x = x / C64::new(norm, 0.0);

    // Power orbit.
    let mut orbit_norms = Vec::with_capacity(horizon + 1);
    orbit_norms.push(1.0);
    let mut w = x.clone();
    for _ in 0..horizon {
        w = v.matrix() * &w;
        let n = w.norm();
        orbit_norms.push(n);
        if !(n.is_finite()) || n > 1e140 || n < 1e-140 {
            break;
        }
    }
    let reached = orbit_norms.len() - 1;
    let tail_start = orbit_norms.len() / 2;
    let tail: Vec<(f64, f64)> = orbit_norms[tail_start..]
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0.0)
        .map(|(i, &n)| ((tail_start + i) as f64, n.ln()))
        .collect();
    let orbit_slope = fit_slope(&tail);
    let growth_exponent = orbit_slope.exp();

    let max_norm = orbit_norms.iter().cloned().fold(0.0f64, f64::max);
    let last_norm = *orbit_norms.last().unwrap();
    let decayed = last_norm <= 1e-8 * max_norm.max(1.0);
    let overflowed = max_norm > 1e100;

    let (stab0, stab) = if decayed {
        (TriState::True, TriState::True)
    } else if overflowed || growth_exponent >= 1.0 + GROWTH_TOL {
        (TriState::False, TriState::False)
    } else if growth_exponent <= 1.0 - GROWTH_TOL {
        (TriState::True, TriState::True)
    } else {
        // Flat band: boundedness is judged from first-half vs second-half
        // peaks; convergence to zero stays unknown.
        let half = orbit_norms.len() / 2;
        let head_max = orbit_norms[..half].iter().cloned().fold(0.0f64, f64::max);
        let tail_max = orbit_norms[half..].iter().cloned().fold(0.0f64, f64::max);
        let stab = if tail_max <= 1.05 * head_max {
            TriState::True
        } else if tail_max >= 1.5 * head_max {
            TriState::False
        } else {
            TriState::Unknown
        };
        (TriState::Unknown, stab)
    };

    // Sweep trace.
    let mut q_trace = Vec::with_capacity(bundle.samples.len());
    let mut slope_quotient_max = 0.0f64;
    for s in &bundle.samples {
        let qx = (x.adjoint() * &s.q * &x)[(0, 0)].re.max(0.0);
        q_trace.push((s.t, qx));
        slope_quotient_max = slope_quotient_max.max(qx / s.t);
    }
    let fit_from = q_trace.len() / 2;
    let log_points: Vec<(f64, f64)> = q_trace[fit_from..]
        .iter()
        .filter(|&&(_, q)| q > 1e-300)
        .map(|&(t, q)| (t.ln(), q.ln()))
        .collect();
    let q_exponent = fit_slope(&log_points);
    let q_first = q_trace.first().map(|&(_, q)| q).unwrap_or(0.0);
    let q_last = q_trace.last().map(|&(_, q)| q).unwrap_or(0.0);
    let q_scale = 1.0 + q_first;

    let finq = if q_exponent >= -0.05 {
        TriState::True
    } else if q_exponent <= -0.5 {
        TriState::False
    } else {
        TriState::Unknown
    };
    let kerq0 = if q_last <= 1e-10 * q_scale || q_exponent >= 0.3 {
        TriState::True
    } else if q_exponent <= 0.05 && q_last >= 1e-6 * q_scale {
        TriState::False
    } else {
        TriState::Unknown
    };

    // Square-summability: the range test against Y0 cross-checked by the
    // slope criterion <x, Q_t x> <= c t; a conclusive slope wins, since the
    // range test inherits the sweep's finite resolution.
    let slope_bounded = if q_exponent >= 0.9 {
        TriState::True
    } else if q_exponent <= 0.6 {
        TriState::False
    } else {
        TriState::Unknown
    };
    let range = range_membership_with_floor(
        &bundle.y0,
        &x,
        10.0 * bundle.y_resolution(),
        tol,
    )?;
    let l2_member = match slope_bounded {
        TriState::True => true,
        TriState::False => false,
        TriState::Unknown => range.member,
    };
    let c_min = if range.member {
        range.c_min
    } else if l2_member {
        slope_quotient_max
    } else {
        f64::INFINITY
    };

    let evidence = ClassifyEvidence {
        orbit_norms,
        orbit_slope,
        q_trace,
        q_exponent,
        slope_quotient_max,
        range_member: range.member,
        range_c_min: range.c_min,
        range_kernel_residual: range.kernel_residual,
        slope_bounded,
    };
    let verdict = VectorVerdict {
        l2_member,
        c_min,
        stab0,
        stab,
        finq,
        kerq0,
        growth_exponent,
        power_horizon: reached,
        evidence,
    };

    // Inclusion chains; Unknown can never violate.
    let l2_tri = if verdict.l2_member {
        TriState::True
    } else {
        TriState::False
    };
    let chains: [(&str, TriState, TriState); 4] = [
        ("l2 => stab0", l2_tri, verdict.stab0),
        ("l2 => kerq0", l2_tri, verdict.kerq0),
        ("stab0 => kerq0", verdict.stab0, verdict.kerq0),
        ("stab => finq", verdict.stab, verdict.finq),
    ];
    for (name, from, to) in chains {
        if from == TriState::True && to == TriState::False {
            return Err(Error::InconsistentVerdict(format!(
                "{name} violated (growth={:.4}, q_exponent={:.3}, range_member={}, \
                 kernel_residual={:.3e})",
                verdict.growth_exponent,
                verdict.evidence.q_exponent,
                verdict.evidence.range_member,
                verdict.evidence.range_kernel_residual,
            )));
        }
    }
    Ok(verdict)
}

/// The contraction induced on `Ran Y0^{1/2}` by `W Y0^{1/2} = Y0^{1/2} V^*`,
/// materialized in the orthonormal eigenbasis of the range.
#[derive(Debug, Clone)]
pub struct ContractionWitness {
    /// `W` as an `r x r` matrix in the range basis.
    pub w: CMatrix,
    pub norm_w: f64,
    /// Smallest singular value; bounded below by `1/(1 + ||Y0||)`.
    pub lower_w: f64,
    /// Orthonormal basis of `Ran Y0` (columns).
    pub basis: CMatrix,
    /// Eigenvalues of `Y0` on the range, matching `basis` columns.
    pub lambdas: Vec<f64>,
    /// `|| W^* W - (I + Lambda)^{-1} ||` restricted to the range.
    pub gram_residual: f64,
}

impl ContractionWitness {
    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    /// `Y0^{1/2}` as a full-space matrix (zero on the complement).
    pub fn y_half(&self) -> CMatrix {
        let n = self.basis.nrows();
        let r = self.rank();
        let mut scaled = self.basis.clone();
        for j in 0..r {
            let s = C64::new(self.lambdas[j].sqrt(), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.basis.adjoint()
    }
}

/// Build the contraction witness from `Y0`. `rank_floor` is an absolute
/// floor on the rank cutoff (pass the bundle's `y` resolution when `Y0`
/// came from a sweep, `0.0` for an exact operator).
pub fn contraction_witness(
    v: &OperatorMatrix,
    y0: &CMatrix,
    rank_floor: f64,
    tol: &Tolerances,
) -> Result<ContractionWitness> {
    let eig = hermitian_eig(y0, tol)?;
    let cut = rank_cut(eig.lambda_max(), rank_floor / 10.0, tol);
    let n = eig.dim();
    let selected: Vec<usize> = (0..n).filter(|&i| eig.values[i] > cut).collect();
    let r = selected.len();
    if r == 0 {
        return Err(Error::ZeroRange);
    }
    let mut basis = CMatrix::zeros(n, r);
    let mut lambdas = Vec::with_capacity(r);
    for (dst, &src) in selected.iter().enumerate() {
        basis.set_column(dst, &eig.basis.column(src));
        lambdas.push(eig.values[src]);
    }
    // W = Lambda^{1/2} (B^* V^* B) Lambda^{-1/2}
    let core = basis.adjoint() * v.matrix().adjoint() * &basis;
    let mut w = core;
    for i in 0..r {
        for j in 0..r {
            w[(i, j)] *= C64::new((lambdas[i] / lambdas[j]).sqrt(), 0.0);
        }
    }
    let gram = w.adjoint() * &w;
    let geig = hermitian_eig(&gram, tol)?;
    let norm_w = geig.lambda_max().max(0.0).sqrt();
    let lower_w = geig.lambda_min().max(0.0).sqrt();
    let expected = CMatrix::from_fn(r, r, |i, j| {
        if i == j {
            C64::new(1.0 / (1.0 + lambdas[i]), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let residual_eig = hermitian_eig(&(&gram - &expected), tol)?;
    let gram_residual = residual_eig
        .lambda_min()
        .abs()
        .max(residual_eig.lambda_max().abs());
    Ok(ContractionWitness {
        w,
        norm_w,
        lower_w,
        basis,
        lambdas,
        gram_residual,
    })
}

/// How `R0` acts on the trichotomy: identity on the contracting part, zero
/// on the expanding part, and its range inside `Ker X0`.
#[derive(Debug, Clone, Copy)]
pub struct R0ChainReport {
    /// `||(I - R0) B_lt||`
    pub defect_lt: f64,
    /// `||R0 B_gt||`
    pub defect_gt: f64,
    /// `||X0 R0|| / (1 + ||X0||)`
    pub x0_r0_defect: f64,
    /// `||Y0 - R0 Y0|| / (1 + ||Y0||)`
    pub y0_r0_defect: f64,
}

pub fn r0_identity_check(
    bundle: &LimitBundle,
    tri: &Trichotomy,
    tol: &Tolerances,
) -> Result<R0ChainReport> {
    let n = bundle.dim();
    let id = CMatrix::identity(n, n);
    let defect_lt = op_norm(&((&id - &bundle.r0) * &tri.basis_lt), tol);
    let defect_gt = op_norm(&(&bundle.r0 * &tri.basis_gt), tol);
    let x0_r0 = &bundle.x0 * &bundle.r0;
    let x0_r0_defect = op_norm(&x0_r0, tol) / (1.0 + op_norm(&bundle.x0, tol));
    let y0_r0 = &bundle.y0 - &bundle.r0 * &bundle.y0;
    let y0_r0_defect = op_norm(&y0_r0, tol) / (1.0 + op_norm(&bundle.y0, tol));
    Ok(R0ChainReport {
        defect_lt,
        defect_gt,
        x0_r0_defect,
        y0_r0_defect,
    })
}
