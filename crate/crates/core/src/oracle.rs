//! Independent ground truth: the closed-form solution for normal operators,
//! spectral-subspace orthoprojectors from the ordered Schur form, the
//! similarity-to-unitary verdict, and reproducible generators for test
//! operators.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::limits::LimitBundle;
use crate::linalg::{hermitian_eig, op_norm, CMatrix, C64};
use crate::operator::{OperatorMatrix, Tolerances};
use crate::schur::{reorder, schur};
use crate::solver::QSample;
use crate::TriState;

/// Closed-form solution of the equation for normal `V`:
/// with `A = V^* V`,
/// `Q_t = [ -(I - A)/2 + sqrt(((I - A)/2)^2 + t^2 A) ] / t`,
/// evaluated as a scalar function of `A` through its eigendecomposition.
pub fn normal_closed_form(v: &OperatorMatrix, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::BadParameter(format!(
            "t must lie in (0, 1], got {t}"
        )));
    }
    check_normal(v)?;
    let eig = hermitian_eig(v.gram(), tol)?;
    Ok(eig.apply(|a| scalar_q(a.max(0.0), t)))
}

/// The scalar solution `q(a, t)` for a normal eigenvalue modulus `sqrt(a)`.
///
/// For `a < 1` the textbook form `-d + sqrt(d^2 + t^2 a)` (with
/// `d = (1-a)/2 > 0`) cancels catastrophically at small `t`; the conjugate
/// form `t a / (d + sqrt(d^2 + t^2 a))` is used instead.
pub fn scalar_q(a: f64, t: f64) -> f64 {
    let d = (1.0 - a) / 2.0;
    if a >= 1.0 {
        (-d + (d * d + t * t * a).sqrt()) / t
    } else {
        t * a / (d + (d * d + t * t * a).sqrt())
    }
}

fn check_normal(v: &OperatorMatrix) -> Result<()> {
    let m = v.matrix();
    let commutator = v.gram() - m * m.adjoint();
    let defect = commutator.norm();
    let limit = 1e-10 * v.norm().powi(2);
    if defect > limit {
        return Err(Error::NotNormal { defect, limit });
    }
    Ok(())
}

/// Closed-form limit operators for normal `V`. With the spectral projectors
/// `E` of `A = V^* V`:
/// `X0 = (A - I) E(1, inf)`, `Y0 = (A^{-1} - I) E(0, 1)`,
/// `R0 = E(0, 1) + E({1})/2`. Eigenvalues within `rank_tol` of 1 are
/// assigned to the unit cluster `E({1})`.
pub fn normal_limits(
    v: &OperatorMatrix,
    tol: &Tolerances,
) -> Result<(CMatrix, CMatrix, CMatrix)> {
    check_normal(v)?;
    let eig = hermitian_eig(v.gram(), tol)?;
    let unit = |a: f64| (a - 1.0).abs() <= tol.rank_tol;
    let x0 = eig.apply(|a| if !unit(a) && a > 1.0 { a - 1.0 } else { 0.0 });
    let y0 = eig.apply(|a| if !unit(a) && a < 1.0 { 1.0 / a - 1.0 } else { 0.0 });
    let r0 = eig.apply(|a| {
        if unit(a) {
            0.5
        } else if a < 1.0 {
            1.0
        } else {
            0.0
        }
    });
    Ok((x0, y0, r0))
}

/// Orthoprojector onto the invariant subspace for the eigenvalues inside
/// the open unit disc, plus the gap of the whole spectrum to the circle.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    /// Hermitian orthoprojector onto the inside-disc invariant subspace.
    pub p_in: CMatrix,
    /// Orthonormal columns spanning that subspace (leading Schur vectors).
    pub basis_in: CMatrix,
    /// `min | |lambda| - 1 |` over the whole spectrum.
    pub gap: f64,
    /// Eigenvalue counts (inside, on circle, outside), where "on circle"
    /// means within `rank_tol` of unit modulus.
    pub dims: (usize, usize, usize),
    pub eigenvalues: Vec<C64>,
}

/// Ordered Schur route to the inside-disc spectral projector: triangularize,
/// bubble the inside eigenvalues to the leading positions, and take the
/// leading Schur vectors. The projector is the orthogonal one onto the
/// invariant subspace, matching the Hermitian limit operators it is
/// compared against.
pub fn inside_spectral_projector(v: &OperatorMatrix, tol: &Tolerances) -> Result<SpectralSplit> {
    let dec = schur(v.matrix())?;
    let circle_tol = tol.rank_tol;
    let on_circle = |l: C64| (l.norm() - 1.0).abs() <= circle_tol;
    let inside = |l: C64| l.norm() < 1.0 && !on_circle(l);
    let dec = reorder(dec, inside);
    let eigenvalues = dec.eigenvalues();
    let mut dims = (0usize, 0usize, 0usize);
    let mut gap = f64::INFINITY;
    for &l in &eigenvalues {
        gap = gap.min((l.norm() - 1.0).abs());
        if on_circle(l) {
            dims.1 += 1;
        } else if l.norm() < 1.0 {
            dims.0 += 1;
        } else {
            dims.2 += 1;
        }
    }
    let k = dims.0;
    let basis_in = CMatrix::from_fn(v.dim(), k, |i, j| dec.z[(i, j)]);
    let p_in = &basis_in * basis_in.adjoint();
    Ok(SpectralSplit {
        p_in,
        basis_in,
        gap,
        dims,
        eigenvalues,
    })
}

#[derive(Debug, Clone)]
pub struct DichotomyReport {
    /// `|| R0 - P_in ||` in operator norm.
    pub distance: f64,
    /// `(t, ||(I - R_t) P_in||)` along the sweep; tends to zero when the
    /// spectrum avoids the circle.
    pub trace: Vec<(f64, f64)>,
    /// Whether the trace is eventually decreasing and ends below `1e-4`.
    pub trace_ok: bool,
}

pub const DEFAULT_GAP_FLOOR: f64 = 0.05;

/// Compare the limit `R0` against the spectral orthoprojector. Refuses when
/// the spectral gap is below `gap_floor` or the `R` net has not converged.
pub fn dichotomy_compare(
    bundle: &LimitBundle,
    split: &SpectralSplit,
    gap_floor: f64,
    tol: &Tolerances,
) -> Result<DichotomyReport> {
    if split.gap < gap_floor {
        return Err(Error::GapTooSmall {
            gap: split.gap,
            floor: gap_floor,
        });
    }
    if !bundle.r_converged {
        return Err(Error::NotConverged(
            "R net has not stagnated; R0 is not trustworthy".into(),
        ));
    }
    let diff = &bundle.r0 - &split.p_in;
    let eig = hermitian_eig(&diff, tol)?;
    let distance = eig.lambda_min().abs().max(eig.lambda_max().abs());
    let n = bundle.dim();
    let id = CMatrix::identity(n, n);
    let mut trace = Vec::with_capacity(bundle.samples.len());
    for s in &bundle.samples {
        let m = (&id - &s.r) * &split.p_in;
        trace.push((s.t, op_norm(&m, tol)));
    }
    let tail = trace.len().saturating_sub(3);
    let mut trace_ok = trace
        .last()
        .map(|&(_, d)| d <= 1e-4)
        .unwrap_or(false);
    for w in trace[tail..].windows(2) {
        if w[1].1 > w[0].1 * 1.05 + 1e-12 {
            trace_ok = false;
        }
    }
    Ok(DichotomyReport {
        distance,
        trace,
        trace_ok,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct UnitaryVerdict {
    pub similar: TriState,
    /// Largest `max(lambda_max(Q_t), 1/lambda_min(Q_t))` seen on the sweep.
    pub m_est: f64,
}

pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 1e6;

/// Decide similarity to a unitary operator from the sweep: `V` is similar
/// to a unitary exactly when `Q_t` admits two-sided bounds `1/M <= Q_t <= M`
/// uniformly in `t`. A stagnating bound witnesses similarity; a bound that
/// keeps growing like a power of `1/t` (or exceeds `divergence_factor`)
/// refutes it; anything else stays unknown.
pub fn unitary_similarity_verdict(
    samples: &[QSample],
    divergence_factor: f64,
) -> Result<UnitaryVerdict> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: 3,
        });
    }
    let t_first = samples[0].t;
    let t_last = samples[samples.len() - 1].t;
    if t_first / t_last < 100.0 {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: 3,
        });
    }
    let bound = |s: &QSample| s.q_eig_max.max(1.0 / s.q_eig_min);
    let m: Vec<f64> = samples.iter().map(bound).collect();
    let m_est = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = m.len();
    let r1 = m[k - 1] / m[k - 2];
    let r2 = m[k - 2] / m[k - 3];
    let g1 = samples[k - 2].t / samples[k - 1].t;
    let g2 = samples[k - 3].t / samples[k - 2].t;
    // Growth exponents: alpha ~ 1 means the bound scales like 1/t.
    let a1 = r1.ln() / g1.ln();
    let a2 = r2.ln() / g2.ln();

    let similar = if r1 <= 1.0 + 1e-3 && r2 <= 1.0 + 1e-3 {
        TriState::True
    } else if m_est > divergence_factor || (a1 >= 0.45 && a2 >= 0.45) {
        TriState::False
    } else {
        TriState::Unknown
    };
    Ok(UnitaryVerdict { similar, m_est })
}

/// Families of reproducible test operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Unitarily diagonalizable with prescribed eigenvalue moduli.
    Normal,
    /// `S U S^{-1}` with `U` unitary and `cond(S)` prescribed.
    UnitarySimilar,
    /// `S D S^{-1}`, diagonalizable with all eigenvalue moduli outside
    /// `[1 - gap, 1 + gap]`.
    Dichotomous,
    /// Jordan blocks with unit-modulus eigenvalues (the first block pinned
    /// at eigenvalue 1).
    JordanUnit,
    /// Dense complex Gaussian, certified invertible.
    RandomInvertible,
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    /// Range of eigenvalue moduli for Normal / Dichotomous.
    pub modulus_range: (f64, f64),
    /// Annulus half-width kept free of eigenvalues for Dichotomous.
    pub gap: f64,
    /// Condition number of the similarity `S`.
    pub cond: f64,
    /// Number of eigenvalues of modulus exactly 1 planted in Normal.
    pub planted_unit: usize,
    /// Moduli to avoid when sampling Normal, e.g. `(0.95, 1.05)`.
    pub exclude_annulus: Option<(f64, f64)>,
    /// Resampling floor on 1/cond for RandomInvertible.
    pub min_inv_cond: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            modulus_range: (0.2, 5.0),
            gap: 0.3,
            cond: 10.0,
            planted_unit: 0,
            exclude_annulus: None,
            min_inv_cond: 1e-6,
        }
    }
}

fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    let scale = 1.0 / (2.0 * rows as f64).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Haar-distributed random unitary via the phase-fixed QR of a Gaussian.
fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = ginibre(rng, n, n);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

fn random_phase(rng: &mut ChaCha8Rng) -> C64 {
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    C64::new(theta.cos(), theta.sin())
}

/// Similarity factor with prescribed condition number: `W1 diag(s) W2`
/// with singular values geometric between `sqrt(c)` and `1/sqrt(c)`.
/// Returns `(S, S^{-1})` built from the same factors.
fn conditioned_similarity(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> (CMatrix, CMatrix) {
    let w1 = random_unitary(rng, n);
    let w2 = random_unitary(rng, n);
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                cond.powf(0.5 - i as f64 / (n as f64 - 1.0))
            }
        })
        .collect();
    let diag = |vals: &[f64]| {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(vals[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };
    let inv_sigma: Vec<f64> = sigma.iter().map(|s| 1.0 / s).collect();
    let s = &w1 * diag(&sigma) * &w2;
    let s_inv = w2.adjoint() * diag(&inv_sigma) * w1.adjoint();
    (s, s_inv)
}

fn sample_modulus(rng: &mut ChaCha8Rng, params: &GenParams) -> f64 {
    let (lo, hi) = params.modulus_range;
    loop {
        let m = rng.random_range(lo..hi);
        if let Some((alo, ahi)) = params.exclude_annulus {
            if m > alo && m < ahi {
                continue;
            }
        }
        return m;
    }
}

/// Deterministic seeded generator for the test-operator families.
pub fn generate_test_operator(
    kind: OperatorKind,
    dim: usize,
    seed: u64,
    params: &GenParams,
    tol: &Tolerances,
) -> Result<OperatorMatrix> {
    if dim == 0 {
        return Err(Error::BadParameter("dim must be at least 1".into()));
    }
    let (lo, hi) = params.modulus_range;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::BadParameter(format!(
            "modulus_range must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = match kind {
        OperatorKind::Normal => {
            if params.planted_unit > dim {
                return Err(Error::BadParameter(
                    "planted_unit exceeds dimension".into(),
                ));
            }
            let u = random_unitary(&mut rng, dim);
            let lambdas: Vec<C64> = (0..dim)
                .map(|i| {
                    let modulus = if i < params.planted_unit {
                        1.0
                    } else {
                        sample_modulus(&mut rng, params)
                    };
                    random_phase(&mut rng) * modulus
                })
                .collect();
            let mut scaled = u.clone();
            for (j, l) in lambdas.iter().enumerate() {
                for i in 0..dim {
                    scaled[(i, j)] *= *l;
                }
            }
            &scaled * u.adjoint()
        }
        OperatorKind::UnitarySimilar => {
            if !(params.cond >= 1.0) {
                return Err(Error::BadParameter("cond must be at least 1".into()));
            }
            let u = random_unitary(&mut rng, dim);
            let (s, s_inv) = conditioned_similarity(&mut rng, dim, params.cond);
            &s * u * &s_inv
        }
        OperatorKind::Dichotomous => {
            if !(params.gap > 0.0 && params.gap < 1.0) {
                return Err(Error::BadParameter(format!(
                    "gap must lie in (0, 1), got {}",
                    params.gap
                )));
            }
            if !(lo <= 1.0 - params.gap && hi >= 1.0 + params.gap) {
                return Err(Error::BadParameter(
                    "modulus_range too narrow for the requested gap".into(),
                ));
            }
            let lambdas: Vec<C64> = (0..dim)
                .map(|_| {
                    let modulus = if rng.random_bool(0.5) {
                        rng.random_range(lo..=(1.0 - params.gap))
                    } else {
                        rng.random_range((1.0 + params.gap)..=hi)
                    };
                    random_phase(&mut rng) * modulus
                })
                .collect();
            let (s, s_inv) = conditioned_similarity(&mut rng, dim, params.cond);
            let mut scaled = s.clone();
            for (j, l) in lambdas.iter().enumerate() {
                for i in 0..dim {
                    scaled[(i, j)] *= *l;
                }
            }
            &scaled * s_inv
        }
        OperatorKind::JordanUnit => {
            let mut m = CMatrix::zeros(dim, dim);
            let mut i = 0;
            let mut block = 0;
            while i < dim {
                let size = if dim - i >= 2 { 2 } else { 1 };
                let lambda = if block == 0 {
                    C64::new(1.0, 0.0)
                } else {
                    random_phase(&mut rng)
                };
                for k in 0..size {
                    m[(i + k, i + k)] = lambda;
                    if k + 1 < size {
                        m[(i + k, i + k + 1)] = C64::new(1.0, 0.0);
                    }
                }
                i += size;
                block += 1;
            }
            m
        }
        OperatorKind::RandomInvertible => {
            let mut attempt = 0;
            loop {
                let g = ginibre(&mut rng, dim, dim) * C64::new((2.0f64).sqrt(), 0.0);
                if let Ok(op) = OperatorMatrix::new(g.clone(), tol) {
                    if op.inv_cond_estimate() >= params.min_inv_cond {
                        return Ok(op);
                    }
                }
                attempt += 1;
                if attempt > 64 {
                    return Err(Error::BadParameter(
                        "could not draw an invertible matrix above the conditioning floor".into(),
                    ));
                }
            }
        }
    };
    OperatorMatrix::new(m, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::{analyze_limits, SweepConfig};
    use crate::operator::{diagonal_operator, identity_operator, scalar_operator};
    use crate::solver::{solve_qt, SolveConfig};

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn closed_form_identity() {
        let t = tols();
        let v = identity_operator(3, &t).unwrap();
        for tt in [1.0, 0.5, 0.01] {
            let q = normal_closed_form(&v, tt, &t).unwrap();
            assert!((q - CMatrix::identity(3, 3)).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_scalar() {
        let t = tols();
        let v = scalar_operator(2.0, &t).unwrap();
        let q = normal_closed_form(&v, 0.5, &t).unwrap();
        assert!((q[(0, 0)].re - 6.605551275463989).abs() < 1e-12);
    }

    #[test]
    fn closed_form_is_fixed_point() {
        let t = tols();
        let v = diagonal_operator(&[0.5, 2.0], &t).unwrap();
        for tt in [0.25, 0.01] {
            let q = normal_closed_form(&v, tt, &t).unwrap();
            let phi = crate::solver::phi_map(&v, &q, tt, &t).unwrap();
            assert!((phi - &q).norm() / q.norm() <= 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_solver() {
        let t = tols();
        let v = diagonal_operator(&[0.5, 2.0], &t).unwrap();
        for tt in [1.0, 0.3, 0.1] {
            let s = solve_qt(&v, &SolveConfig::default().with_t(tt), &t).unwrap();
            let q = normal_closed_form(&v, tt, &t).unwrap();
            assert!((&s.q - &q).norm() / q.norm() < 1e-9);
        }
    }

    #[test]
    fn closed_form_rejects_non_normal() {
        let t = tols();
        let m = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else if j > i {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let v = OperatorMatrix::new(m, &t).unwrap();
        assert!(matches!(
            normal_closed_form(&v, 0.5, &t),
            Err(Error::NotNormal { .. })
        ));
    }

    #[test]
    fn normal_limits_examples() {
        let t = tols();
        let v = identity_operator(2, &t).unwrap();
        let (x0, y0, r0) = normal_limits(&v, &t).unwrap();
        assert!(x0.norm() < 1e-14 && y0.norm() < 1e-14);
        assert!((r0 - CMatrix::identity(2, 2) * C64::new(0.5, 0.0)).norm() < 1e-14);

        let v = diagonal_operator(&[0.5, 2.0], &t).unwrap();
        let (x0, y0, r0) = normal_limits(&v, &t).unwrap();
        assert!((x0[(1, 1)].re - 3.0).abs() < 1e-12 && x0[(0, 0)].re.abs() < 1e-14);
        assert!((y0[(0, 0)].re - 3.0).abs() < 1e-12 && y0[(1, 1)].re.abs() < 1e-14);
        assert!((r0[(0, 0)].re - 1.0).abs() < 1e-14 && r0[(1, 1)].re.abs() < 1e-14);

        let v = diagonal_operator(&[0.5, 1.0, 2.0], &t).unwrap();
        let (_, _, r0) = normal_limits(&v, &t).unwrap();
        assert!((r0[(1, 1)].re - 0.5).abs() < 1e-14, "unit eigenvalue gets 1/2");
    }

    #[test]
    fn projector_for_diagonal_and_triangular() {
        let t = tols();
        let v = diagonal_operator(&[0.5, 2.0], &t).unwrap();
        let split = inside_spectral_projector(&v, &t).unwrap();
        assert_eq!(split.dims, (1, 0, 1));
        assert!((split.gap - 0.5).abs() < 1e-12);
        assert!((split.p_in[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(split.p_in[(1, 1)].re.abs() < 1e-12);

        // Triangular case: the inside invariant subspace is span(e1) even
        // though the matrix is not normal.
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(2.0, 0.0);
        let v = OperatorMatrix::new(m, &t).unwrap();
        let split = inside_spectral_projector(&v, &t).unwrap();
        assert_eq!(split.dims, (1, 0, 1));
        assert!((split.gap - 0.5).abs() < 1e-12);
        let expect = CMatrix::from_fn(2, 2, |i, j| {
            if i == 0 && j == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!((&split.p_in - expect).norm() < 1e-10);
        // Projector law and invariance of the subspace.
        assert!((&split.p_in * &split.p_in - &split.p_in).norm() < 1e-10);
        let defect = (CMatrix::identity(2, 2) - &split.p_in) * v.matrix() * &split.p_in;
        assert!(defect.norm() <= 1e-8 * v.norm());
    }

    #[test]
    fn projector_unitary_is_all_circle() {
        let t = tols();
        let v = identity_operator(3, &t).unwrap();
        let split = inside_spectral_projector(&v, &t).unwrap();
        assert_eq!(split.dims, (0, 3, 0));
        assert!(split.gap.abs() < 1e-12);
        assert!(split.p_in.norm() < 1e-12);
    }

    #[test]
    fn dichotomy_diag_case() {
        let t = tols();
        let v = diagonal_operator(&[0.5, 2.0], &t).unwrap();
        let cfg = SweepConfig {
            t_min: 1e-6,
            ..SweepConfig::default()
        };
        let bundle = analyze_limits(&v, &cfg, &t).unwrap();
        let split = inside_spectral_projector(&v, &t).unwrap();
        let report = dichotomy_compare(&bundle, &split, DEFAULT_GAP_FLOOR, &t).unwrap();
        assert!(report.distance <= 1e-5, "distance {:.3e}", report.distance);
        assert!(report.trace_ok);
    }

    #[test]
    fn dichotomy_outside_only() {
        // All spectrum outside: R0 = 0 and the inside projector is empty.
        let t = tols();
        let v = diagonal_operator(&[3.0, 3.0], &t).unwrap();
        let cfg = SweepConfig {
            t_min: 1e-6,
            ..SweepConfig::default()
        };
        let bundle = analyze_limits(&v, &cfg, &t).unwrap();
        let split = inside_spectral_projector(&v, &t).unwrap();
        assert_eq!(split.dims, (0, 0, 2));
        let report = dichotomy_compare(&bundle, &split, DEFAULT_GAP_FLOOR, &t).unwrap();
        assert!(report.distance <= 1e-5);
    }

    #[test]
    fn dichotomy_refuses_small_gap() {
        let t = tols();
        let v = identity_operator(2, &t).unwrap();
        let bundle = analyze_limits(&v, &SweepConfig::default(), &t).unwrap();
        let split = inside_spectral_projector(&v, &t).unwrap();
        assert!(matches!(
            dichotomy_compare(&bundle, &split, DEFAULT_GAP_FLOOR, &t),
            Err(Error::GapTooSmall { .. })
        ));
    }

    #[test]
    fn verdict_unitary_true() {
        let t = tols();
        let v = identity_operator(2, &t).unwrap();
        let bundle = analyze_limits(&v, &SweepConfig::default(), &t).unwrap();
        let verdict =
            unitary_similarity_verdict(&bundle.samples, DEFAULT_DIVERGENCE_FACTOR).unwrap();
        assert_eq!(verdict.similar, TriState::True);
        assert!((verdict.m_est - 1.0).abs() < 1e-6);
    }

    #[test]
    fn verdict_dichotomous_false() {
        let t = tols();
        let v = diagonal_operator(&[0.5, 2.0], &t).unwrap();
        let bundle = analyze_limits(&v, &SweepConfig::default(), &t).unwrap();
        let verdict =
            unitary_similarity_verdict(&bundle.samples, DEFAULT_DIVERGENCE_FACTOR).unwrap();
        assert_eq!(verdict.similar, TriState::False);
    }

    #[test]
    fn generators_are_deterministic_and_structured() {
        let t = tols();
        let p = GenParams::default();
        let a = generate_test_operator(OperatorKind::Normal, 4, 1, &p, &t).unwrap();
        let b = generate_test_operator(OperatorKind::Normal, 4, 1, &p, &t).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let comm = a.gram() - a.matrix() * a.matrix().adjoint();
        assert!(comm.norm() <= 1e-12 * a.norm().powi(2), "normality");

        let d = generate_test_operator(OperatorKind::Dichotomous, 8, 2, &p, &t).unwrap();
        for l in crate::schur::eigenvalues(d.matrix()).unwrap() {
            let m = l.norm();
            assert!(
                m <= 1.0 - p.gap + 1e-8 || m >= 1.0 + p.gap - 1e-8,
                "modulus {m} inside the annulus"
            );
        }

        let j = generate_test_operator(OperatorKind::JordanUnit, 2, 0, &p, &t).unwrap();
        let mut expect = CMatrix::identity(2, 2);
        expect[(0, 1)] = C64::new(1.0, 0.0);
        assert_eq!(j.matrix(), &expect);
    }

    #[test]
    fn generated_unitary_similar_has_unit_spectrum() {
        let t = tols();
        let p = GenParams {
            cond: 10.0,
            ..GenParams::default()
        };
        let v = generate_test_operator(OperatorKind::UnitarySimilar, 6, 3, &p, &t).unwrap();
        for l in crate::schur::eigenvalues(v.matrix()).unwrap() {
            assert!((l.norm() - 1.0).abs() < 1e-8);
        }
    }
}
