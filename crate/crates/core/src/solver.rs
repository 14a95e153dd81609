//! Fixed-point solver for the one-parameter operator equation
//! `Q = V^* (Q + tI)(I + tQ)^{-1} V` at a fixed `t`, together with the
//! derived operators and the order-bracket / gauge certificates.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, hermitian_part, CMatrix, C64};
use crate::operator::{OperatorMatrix, Tolerances};

/// Which endpoint of the order bracket seeds the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    /// Seed with `t V^* V` (below the solution).
    Lower,
    /// Seed with `V^* V / t` (above the solution).
    Upper,
    /// Run both and require them to meet; witnesses uniqueness.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceleration {
    Plain,
    /// Mix `(Q_old + Q_new)/2` whenever successive steps point in
    /// opposite directions.
    Averaged,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    /// Equation parameter, in `(0, 1]`.
    pub t: f64,
    /// Relative fixed-point residual target.
    pub fp_tol: f64,
    /// Hard iteration cap; the effective cap also scales as `1000/t`.
    pub max_iter: usize,
    pub acceleration: Acceleration,
    pub start: StartMode,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            t: 1.0,
            fp_tol: 1e-11,
            max_iter: 100_000,
            acceleration: Acceleration::Averaged,
            start: StartMode::Both,
        }
    }
}

impl SolveConfig {
    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t <= 1.0) || !self.t.is_finite() {
            return Err(Error::BadParameter(format!(
                "t must lie in (0, 1], got {}",
                self.t
            )));
        }
        if !(self.fp_tol > 0.0) || !self.fp_tol.is_finite() {
            return Err(Error::BadParameter(format!(
                "fp_tol must be positive, got {}",
                self.fp_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::BadParameter("max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Convergence degrades like `1 - 2t` near unit-modulus spectrum, so the
    /// cap grows as `t` shrinks, bounded by `max_iter`.
    fn effective_max_iter(&self) -> usize {
        let scaled = (1000.0 / self.t).ceil();
        if scaled.is_finite() && (scaled as usize) < self.max_iter {
            scaled as usize
        } else {
            self.max_iter
        }
    }
}

/// The solved equation at one `t` with every derived operator.
///
/// `Q^{-1}` is not inverted out of `Q`: it solves its own dual equation
/// (the one for `(V^*)^{-1}`, whose solution is exactly `Q_t^{-1}`).
/// At small `t` the condition number of `Q_t` grows like `1/t^2`, and the
/// small eigenvalues of `Q` — which carry the entire contracting-part limit
/// `Y0` — would otherwise drown in the `eps * ||Q||` noise of a spectral
/// inversion.
#[derive(Debug, Clone)]
pub struct QSample {
    pub t: f64,
    /// Solution of the equation, Hermitian and uniformly positive.
    pub q: CMatrix,
    /// `Q_t^{-1}`, solved independently through the dual equation.
    pub q_inv: CMatrix,
    /// Relative fixed-point residual `||Q - Phi_t(Q)|| / ||Q||` as measured.
    pub residual: f64,
    /// Residual of the dual solve.
    pub residual_dual: f64,
    pub iterations: usize,
    /// `t Q_t`, monotone nonincreasing as `t` decreases.
    pub x: CMatrix,
    /// `t Q_t^{-1}`, monotone nonincreasing as `t` decreases.
    pub y: CMatrix,
    /// `(I + Q_t)^{-1}`, always in `[0, I]`.
    pub r: CMatrix,
    /// Gauge `(I + t Q^{-1})^{1/2} (I + t Q)^{-1/2}`; `j V` is similar to a
    /// unitary for every fixed `t`.
    pub j: CMatrix,
    /// Distance between upper-start and lower-start solutions, when both ran.
    pub bracket_gap: Option<f64>,
    pub q_eig_min: f64,
    pub q_eig_max: f64,
    /// Spectral extremes of the gauge, kept for the bound checks.
    pub j_min: f64,
    pub j_max: f64,
}

impl QSample {
    fn build(
        t: f64,
        q: CMatrix,
        q_inv: CMatrix,
        residual: f64,
        residual_dual: f64,
        iterations: usize,
        bracket_gap: Option<f64>,
        tol: &Tolerances,
    ) -> Result<QSample> {
        let eig = hermitian_eig(&q, tol)?;
        let eig_inv = hermitian_eig(&q_inv, tol)?;
        if eig.lambda_min() <= 0.0 || eig_inv.lambda_min() <= 0.0 {
            return Err(Error::NotPsd {
                lambda_min: eig.lambda_min().min(eig_inv.lambda_min()),
            });
        }
        // Each factor reads its extremes off its own well-resolved end.
        let q_eig_max = eig.lambda_max();
        let q_eig_min = 1.0 / eig_inv.lambda_max();
        let x = &q * C64::new(t, 0.0);
        let y = &q_inv * C64::new(t, 0.0);
        let r = eig.apply(|l| 1.0 / (1.0 + l));
        // j^2 = (I + tQ^{-1})(I + tQ)^{-1}; the factors commute, so j is the
        // product of the half-power of each, symmetrized to shed roundoff.
        let left = eig_inv.apply(|m| (1.0 + t * m.max(0.0)).sqrt());
        let right = eig.apply(|l| 1.0 / (1.0 + t * l.max(0.0)).sqrt());
        let j = hermitian_part(&(left * right));
        let jeig = hermitian_eig(&j, tol)?;
        Ok(QSample {
            t,
            q,
            q_inv,
            residual,
            residual_dual,
            iterations,
            x,
            y,
            r,
            j,
            bracket_gap,
            q_eig_min,
            q_eig_max,
            j_min: jeig.lambda_min(),
            j_max: jeig.lambda_max(),
        })
    }

    pub fn q_inverse(&self) -> &CMatrix {
        &self.q_inv
    }
}

/// One application of the defining map
/// `Phi_t(Q) = V^* (Q + tI)(I + tQ)^{-1} V`.
///
/// The middle factor is a scalar function of `Q` (the two factors commute),
/// so it is evaluated through the eigendecomposition of `Q` with the
/// eigenvalue map `q -> (q + t) / (1 + t q)`, which keeps the result
/// Hermitian PSD regardless of how small `t` is.
pub fn phi_map(v: &OperatorMatrix, q: &CMatrix, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    if !(t > 0.0 && t <= 1.0) || !t.is_finite() {
        return Err(Error::BadParameter(format!(
            "t must lie in (0, 1], got {t}"
        )));
    }
    let eig = hermitian_eig(q, tol)?;
    let scale = eig.lambda_max().abs().max(eig.lambda_min().abs()).max(1.0);
    if eig.lambda_min() < -tol.psd_tol * scale {
        return Err(Error::NotPsd {
            lambda_min: eig.lambda_min(),
        });
    }
    let mapped = eig.apply(|l| {
        let l = l.max(0.0);
        (l + t) / (1.0 + t * l)
    });
    Ok(hermitian_part(&v.sandwich(&mapped)))
}

fn frobenius_inner_re(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

struct IterateOutcome {
    q: CMatrix,
    residual: f64,
    iterations: usize,
}

fn iterate(
    v: &OperatorMatrix,
    q0: CMatrix,
    cfg: &SolveConfig,
    tol: &Tolerances,
) -> Result<IterateOutcome> {
    let cap = cfg.effective_max_iter();
    let t = cfg.t;
    // Below this relative change the iteration is at the rounding floor and
    // cannot improve further.
    let machine_floor = 32.0 * f64::EPSILON;
    let mut q = q0;
    let mut prev_step: Option<CMatrix> = None;
    let mut changes: [f64; 3] = [f64::INFINITY; 3];
    let mut trace = Vec::new();
    let mut iterations = 0usize;
    while iterations < cap {
        let next = phi_map(v, &q, t, tol)?;
        iterations += 1;
        let step = &next - &q;
        let change = step.norm() / next.norm().max(f64::MIN_POSITIVE);
        if iterations.is_power_of_two() {
            trace.push(change);
        }
        let oscillating = prev_step
            .as_ref()
            .map_or(false, |p| frobenius_inner_re(p, &step) < 0.0);
        if cfg.acceleration == Acceleration::Averaged && oscillating {
            q = (&q + &next) * C64::new(0.5, 0.0);
        } else {
            q = next;
        }
        prev_step = Some(step);
        changes = [changes[1], changes[2], change];

        // Linear convergence leaves the iterate change/(1-rho) away from the
        // fixed point; stop on that distance estimate, with the observed
        // contraction ratio taken pessimistically over the last two steps.
        let converged = if change <= machine_floor {
            true
        } else if change <= cfg.fp_tol {
            let r1 = changes[2] / changes[1];
            let r2 = changes[1] / changes[0];
            let rho = r1.max(r2);
            rho < 1.0 && change * rho / (1.0 - rho) <= cfg.fp_tol
        } else {
            false
        };
        if converged {
            let check = phi_map(v, &q, t, tol)?;
            iterations += 1;
            let residual = (&check - &q).norm() / q.norm().max(f64::MIN_POSITIVE);
            if residual <= cfg.fp_tol {
                trace.push(residual);
                return Ok(IterateOutcome {
                    q,
                    residual,
                    iterations,
                });
            }
            q = check;
            changes = [changes[1], changes[2], residual];
        }
    }
    trace.push(changes[2]);
    Err(Error::NoConvergence {
        iterations,
        residual: changes[2],
        trace,
    })
}

struct SolvedPair {
    q: IterateOutcome,
    q_inv: IterateOutcome,
    bracket_gap: Option<f64>,
}

/// Run one side (primal for `V` or dual for `(V^*)^{-1}`) from the bracket
/// endpoints dictated by the start mode.
fn solve_side(v: &OperatorMatrix, cfg: &SolveConfig, tol: &Tolerances) -> Result<(IterateOutcome, Option<f64>)> {
    let t = cfg.t;
    let lower = || v.gram() * C64::new(t, 0.0);
    let upper = || v.gram() * C64::new(1.0 / t, 0.0);
    match cfg.start {
        StartMode::Lower => Ok((iterate(v, lower(), cfg, tol)?, None)),
        StartMode::Upper => Ok((iterate(v, upper(), cfg, tol)?, None)),
        StartMode::Both => {
            let lo = iterate(v, lower(), cfg, tol)?;
            let up = iterate(v, upper(), cfg, tol)?;
            let gap = (&up.q - &lo.q).norm() / lo.q.norm().max(f64::MIN_POSITIVE);
            let limit = 10.0 * cfg.fp_tol;
            if gap > limit {
                return Err(Error::BracketMismatch { gap, limit });
            }
            let mut out = lo;
            out.iterations += up.iterations;
            Ok((out, Some(gap)))
        }
    }
}

fn solve_pair(
    v: &OperatorMatrix,
    cfg: &SolveConfig,
    seeds: Option<(&CMatrix, &CMatrix)>,
    tol: &Tolerances,
) -> Result<SolvedPair> {
    let dual = v.adjoint_inverse_operator(tol)?;
    match seeds {
        None => {
            let (q, bracket_gap) = solve_side(v, cfg, tol)?;
            let (q_inv, _) = solve_side(&dual, cfg, tol)?;
            Ok(SolvedPair {
                q,
                q_inv,
                bracket_gap,
            })
        }
        Some((seed_q, seed_q_inv)) => Ok(SolvedPair {
            q: iterate(v, seed_q.clone(), cfg, tol)?,
            q_inv: iterate(&dual, seed_q_inv.clone(), cfg, tol)?,
            bracket_gap: None,
        }),
    }
}

/// Solve the equation at `cfg.t` by fixed-point iteration from the order
/// bracket endpoints `t V^* V` and `V^* V / t`, together with the dual
/// equation whose solution is `Q_t^{-1}`.
///
/// With `StartMode::Both` the two bracket runs must agree to within
/// `10 * fp_tol` relative; a larger gap signals a solver defect, since the
/// solution is unique.
pub fn solve_qt(v: &OperatorMatrix, cfg: &SolveConfig, tol: &Tolerances) -> Result<QSample> {
    cfg.validate()?;
    let pair = solve_pair(v, cfg, None, tol)?;
    QSample::build(
        cfg.t,
        pair.q.q,
        pair.q_inv.q,
        pair.q.residual,
        pair.q_inv.residual,
        pair.q.iterations + pair.q_inv.iterations,
        pair.bracket_gap,
        tol,
    )
}

/// Solve at `cfg.t` starting from explicit seeds for `Q` and `Q^{-1}`,
/// e.g. the solutions at a neighbouring `t` during a sweep.
pub fn solve_qt_warm(
    v: &OperatorMatrix,
    cfg: &SolveConfig,
    seed_q: &CMatrix,
    seed_q_inv: &CMatrix,
    tol: &Tolerances,
) -> Result<QSample> {
    cfg.validate()?;
    let pair = solve_pair(v, cfg, Some((seed_q, seed_q_inv)), tol)?;
    QSample::build(
        cfg.t,
        pair.q.q,
        pair.q_inv.q,
        pair.q.residual,
        pair.q_inv.residual,
        pair.q.iterations + pair.q_inv.iterations,
        None,
        tol,
    )
}

/// The four Loewner margins of the order bracket
/// `t V^* V <= Q_t <= V^* V / t` and its inverse counterpart.
#[derive(Debug, Clone, Copy)]
pub struct BracketCertificate {
    /// `lambda_min(Q - t V^* V)`
    pub lower_q: f64,
    /// `lambda_min(V^* V / t - Q)`
    pub upper_q: f64,
    /// `lambda_min(Q^{-1} - t V^{-1} V^{-*})`
    pub lower_q_inv: f64,
    /// `lambda_min(V^{-1} V^{-*} / t - Q^{-1})`
    pub upper_q_inv: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl BracketCertificate {
    pub fn worst_margin(&self) -> f64 {
        self.lower_q
            .min(self.upper_q)
            .min(self.lower_q_inv)
            .min(self.upper_q_inv)
    }
}

/// Certify the order bracket for a solved sample. Margins are reported
/// even when the certificate fails.
pub fn verify_bracket(
    v: &OperatorMatrix,
    s: &QSample,
    tol: &Tolerances,
) -> Result<BracketCertificate> {
    let t = s.t;
    let gram = v.gram();
    let inv_gram = v.inverse() * v.inverse().adjoint();
    let q_inv = s.q_inverse();
    let margin = |m: &CMatrix| -> Result<f64> { Ok(hermitian_eig(m, tol)?.lambda_min()) };

    let lower_q = margin(&(&s.q - gram * C64::new(t, 0.0)))?;
    let upper_q = margin(&(gram * C64::new(1.0 / t, 0.0) - &s.q))?;
    let lower_q_inv = margin(&(q_inv - &inv_gram * C64::new(t, 0.0)))?;
    let upper_q_inv = margin(&(&inv_gram * C64::new(1.0 / t, 0.0) - q_inv))?;
    let threshold = -tol.psd_tol * v.norm().powi(2);
    let pass = lower_q >= threshold
        && upper_q >= threshold
        && lower_q_inv >= threshold
        && upper_q_inv >= threshold;
    Ok(BracketCertificate {
        lower_q,
        upper_q,
        lower_q_inv,
        upper_q_inv,
        threshold,
        pass,
    })
}

/// Residual and spectral bounds of the gauge identity
/// `(jV)^* Q (jV) = Q`.
#[derive(Debug, Clone, Copy)]
pub struct GaugeCheck {
    pub identity_residual: f64,
    /// `lambda_min(j)`, to compare against `(1 + ||V||^2)^{-1/2}`.
    pub lower: f64,
    /// `lambda_max(j)`, to compare against `(1 + ||V^{-1}||^2)^{1/2}`.
    pub upper: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub pass: bool,
}

pub fn gauge_check(
    v: &OperatorMatrix,
    s: &QSample,
    fp_tol: f64,
    tol: &Tolerances,
) -> GaugeCheck {
    let jv = &s.j * v.matrix();
    let transported = jv.adjoint() * &s.q * &jv;
    let identity_residual = (&transported - &s.q).norm() / s.q.norm().max(f64::MIN_POSITIVE);
    let lower_bound = (1.0 + v.norm().powi(2)).powf(-0.5);
    let upper_bound = (1.0 + v.inv_norm().powi(2)).sqrt();
    let pass = identity_residual <= 100.0 * fp_tol
        && s.j_min >= lower_bound - tol.psd_tol
        && s.j_max <= upper_bound + tol.psd_tol;
    GaugeCheck {
        identity_residual,
        lower: s.j_min,
        upper: s.j_max,
        lower_bound,
        upper_bound,
        pass,
    }
}

/// Solve the equation independently for `V` and `(V^*)^{-1}` and return
/// `|| Q_t((V^*)^{-1}) * Q_t(V) - I ||`; the two solutions are exact
/// inverses of each other.
pub fn inverse_duality_check(
    v: &OperatorMatrix,
    t: f64,
    fp_tol: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let cfg = SolveConfig {
        t,
        fp_tol,
        start: StartMode::Lower,
        ..SolveConfig::default()
    };
    let dual = v.adjoint_inverse_operator(tol)?;
    let sample = solve_qt(v, &cfg, tol)?;
    let dual_sample = solve_qt(&dual, &cfg, tol)?;
    let n = v.dim();
    let prod = &dual_sample.q * &sample.q;
    Ok((prod - CMatrix::identity(n, n)).norm())
}
