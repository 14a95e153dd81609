//! Decreasing-`t` sweeps, extraction of the limit operators `X0`, `Y0`,
//! `R0` with convergence diagnostics, and the independent Neumann-sum
//! oracles for the same limits.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, hermitian_part, CMatrix};
use crate::operator::{OperatorMatrix, Tolerances};
use crate::solver::{solve_qt, solve_qt_warm, QSample, SolveConfig};

/// Geometric grid `t_k = t_start * ratio^k` driven down to `t_min`, with a
/// per-solve configuration template (its `t` field is overwritten at each
/// step).
#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub t_start: f64,
    pub ratio: f64,
    pub t_min: f64,
    /// Once the successive deltas of all of `X_t`, `Y_t`, `R_t` drop below
    /// this, the sweep stops early.
    pub stagnation_tol: f64,
    pub solve: SolveConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            t_start: 1.0,
            ratio: 0.5,
            t_min: 1e-5,
            stagnation_tol: 1e-7,
            solve: SolveConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min < self.t_start && self.t_start <= 1.0) {
            return Err(Error::BadParameter(format!(
                "need 0 < t_min < t_start <= 1, got t_min={}, t_start={}",
                self.t_min, self.t_start
            )));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::BadParameter(format!(
                "ratio must lie in (0, 1), got {}",
                self.ratio
            )));
        }
        if !(self.stagnation_tol > 0.0) {
            return Err(Error::BadParameter(
                "stagnation_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A solve failure partway through a sweep. The samples gathered before the
/// failure are still returned.
#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub t: f64,
    pub error: Error,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Samples in decreasing `t` order.
    pub samples: Vec<QSample>,
    pub failure: Option<SweepFailure>,
}

/// Solve the equation along the decreasing grid with warm starts (the
/// solution at the previous, larger `t` seeds the next solve; the nets
/// `t -> X_t, Y_t` are monotone, so neighbours are close).
///
/// The first solve honours `cfg.solve.start` (both-ended by default, which
/// witnesses uniqueness once per sweep); later solves are warm-started.
pub fn sweep(v: &OperatorMatrix, cfg: &SweepConfig, tol: &Tolerances) -> Result<SweepOutcome> {
    cfg.validate()?;
    cfg.solve.validate()?;
    let mut samples: Vec<QSample> = Vec::new();
    let mut failure = None;
    let mut t = cfg.t_start;
    loop {
        let step_cfg = SolveConfig { t, ..cfg.solve };
        let solved = match samples.last() {
            None => solve_qt(v, &step_cfg, tol),
            Some(prev) => solve_qt_warm(v, &step_cfg, &prev.q, &prev.q_inv, tol),
        };
        match solved {
            Ok(s) => samples.push(s),
            Err(error) => {
                failure = Some(SweepFailure { t, error });
                break;
            }
        }
        if samples.len() >= 2 {
            let a = &samples[samples.len() - 2];
            let b = &samples[samples.len() - 1];
            let dx = op_delta(&a.x, &b.x, tol)?;
            let dy = op_delta(&a.y, &b.y, tol)?;
            let dr = op_delta(&a.r, &b.r, tol)?;
            if dx < cfg.stagnation_tol && dy < cfg.stagnation_tol && dr < cfg.stagnation_tol {
                break;
            }
        }
        let next = t * cfg.ratio;
        if next < cfg.t_min {
            break;
        }
        t = next;
    }
    Ok(SweepOutcome { samples, failure })
}

/// Operator-norm distance between two Hermitian matrices.
fn op_delta(a: &CMatrix, b: &CMatrix, tol: &Tolerances) -> Result<f64> {
    let eig = hermitian_eig(&(a - b), tol)?;
    Ok(eig.lambda_min().abs().max(eig.lambda_max().abs()))
}

/// Numerical limit operators with their convergence diagnostics.
#[derive(Debug, Clone)]
pub struct LimitBundle {
    pub samples: Vec<QSample>,
    /// `lim t Q_t`: the expanding-part limit (last sample's `X`).
    pub x0: CMatrix,
    /// `lim t Q_t^{-1}`: the contracting-part limit (last sample's `Y`).
    pub y0: CMatrix,
    /// Limit point of `(I + Q_t)^{-1}` (last sample's `R`).
    pub r0: CMatrix,
    pub x_converged: bool,
    pub y_converged: bool,
    pub r_converged: bool,
    /// Successive operator-norm deltas of each net, one entry per step.
    pub x_deltas: Vec<f64>,
    pub y_deltas: Vec<f64>,
    pub r_deltas: Vec<f64>,
    /// Worst `lambda_min(X_prev - X_next)` across the sweep; the net is
    /// monotone nonincreasing, so this should only be rounding-negative.
    pub x_mono_margin: f64,
    pub y_mono_margin: f64,
    /// Carried over from the sweep when a solve failed partway.
    pub failure: Option<SweepFailure>,
}

impl LimitBundle {
    pub fn last(&self) -> &QSample {
        self.samples.last().expect("bundle holds >= 3 samples")
    }

    pub fn dim(&self) -> usize {
        self.x0.nrows()
    }

    pub fn t_min_reached(&self) -> f64 {
        self.last().t
    }

    /// Resolution of the `X` net: a bound on how far `x0` may still be from
    /// the true limit, estimated from the last deltas.
    pub fn x_resolution(&self) -> f64 {
        net_resolution(&self.x_deltas)
    }

    pub fn y_resolution(&self) -> f64 {
        net_resolution(&self.y_deltas)
    }

    pub fn converged(&self) -> bool {
        self.x_converged && self.y_converged && self.r_converged && self.failure.is_none()
    }
}

fn net_resolution(deltas: &[f64]) -> f64 {
    match deltas {
        [] => f64::INFINITY,
        [.., prev, last] => {
            // Geometric tail estimate: remaining change ~ d * rho / (1 - rho).
            let rho = (last / prev.max(f64::MIN_POSITIVE)).min(0.9);
            (last * rho / (1.0 - rho)).max(*last)
        }
        [last] => *last,
    }
}

/// A net counts as converged when its deltas are below the stagnation
/// tolerance, or keep shrinking geometrically (the nets whose limits are
/// zero decay like O(t), so a fixed absolute tolerance alone would
/// misreport those).
fn net_converged(deltas: &[f64], stagnation_tol: f64) -> bool {
    match deltas {
        [] => false,
        [.., d2, d1, d0] => *d0 < stagnation_tol || (*d0 <= 0.85 * d1 && *d1 <= 0.85 * d2),
        [.., d1, d0] => *d0 < stagnation_tol || *d0 <= 0.85 * d1,
        [d0] => *d0 < stagnation_tol,
    }
}

/// Take the limits off the smallest-`t` sample and grade the convergence of
/// each net.
pub fn extract_limits(
    outcome: SweepOutcome,
    cfg: &SweepConfig,
    tol: &Tolerances,
) -> Result<LimitBundle> {
    let samples = outcome.samples;
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: 3,
        });
    }
    let mut x_deltas = Vec::with_capacity(samples.len() - 1);
    let mut y_deltas = Vec::with_capacity(samples.len() - 1);
    let mut r_deltas = Vec::with_capacity(samples.len() - 1);
    let mut x_mono_margin = f64::INFINITY;
    let mut y_mono_margin = f64::INFINITY;
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let ex = hermitian_eig(&(&a.x - &b.x), tol)?;
        x_deltas.push(ex.lambda_min().abs().max(ex.lambda_max().abs()));
        x_mono_margin = x_mono_margin.min(ex.lambda_min());
        let ey = hermitian_eig(&(&a.y - &b.y), tol)?;
        y_deltas.push(ey.lambda_min().abs().max(ey.lambda_max().abs()));
        y_mono_margin = y_mono_margin.min(ey.lambda_min());
        r_deltas.push(op_delta(&a.r, &b.r, tol)?);
    }
    let clean = outcome.failure.is_none();
    let last = samples.last().expect("nonempty");
    Ok(LimitBundle {
        x0: last.x.clone(),
        y0: last.y.clone(),
        r0: last.r.clone(),
        x_converged: clean && net_converged(&x_deltas, cfg.stagnation_tol),
        y_converged: clean && net_converged(&y_deltas, cfg.stagnation_tol),
        r_converged: clean && net_converged(&r_deltas, cfg.stagnation_tol),
        x_deltas,
        y_deltas,
        r_deltas,
        x_mono_margin,
        y_mono_margin,
        failure: outcome.failure,
        samples,
    })
}

/// Convenience: sweep and extract in one call.
pub fn analyze_limits(
    v: &OperatorMatrix,
    cfg: &SweepConfig,
    tol: &Tolerances,
) -> Result<LimitBundle> {
    extract_limits(sweep(v, cfg, tol)?, cfg, tol)
}

#[derive(Debug, Clone)]
pub struct NeumannSum {
    pub limit: CMatrix,
    /// Number of power-sum terms consumed.
    pub terms: usize,
    /// Whether the inverse stagnated below `tail_tol` before `n_max`.
    pub stagnated: bool,
}

/// Limit of `(V^*V + V^{*2}V^2 + ... + V^{*n}V^n)^{-1}`, an independent
/// route to `Y0`.
///
/// The partial sums satisfy `S_n = V^*(I + S_{n-1})V`, so their inverses
/// obey `W_n = V^{-1} W_{n-1}(I + W_{n-1})^{-1} V^{-*}`, which is evaluated
/// directly: every intermediate stays bounded by `||(V^*V)^{-1}||`, whereas
/// the raw sums diverge in expanding directions and wash out the small
/// eigenvalues that carry the limit. Term for term the recursion equals the
/// inverted power sum exactly; divergent directions decay to zero on their
/// own.
pub fn neumann_y0(
    v: &OperatorMatrix,
    n_max: usize,
    tail_tol: f64,
    tol: &Tolerances,
) -> Result<NeumannSum> {
    if n_max < 1 {
        return Err(Error::BadParameter("n_max must be at least 1".into()));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::BadParameter("tail_tol must be positive".into()));
    }
    let v_inv = v.inverse();
    let v_inv_adj = v_inv.adjoint();
    // W_1 = (V^* V)^{-1}
    let mut w = hermitian_part(&(v_inv * &v_inv_adj));
    let mut terms = 1usize;
    let mut stagnated = false;
    while terms < n_max {
        let eig = hermitian_eig(&w, tol)?;
        let contracted = eig.apply(|l| {
            let l = l.max(0.0);
            l / (1.0 + l)
        });
        let next = hermitian_part(&(v_inv * contracted * &v_inv_adj));
        terms += 1;
        let delta = (&next - &w).norm();
        w = next;
        if delta <= tail_tol {
            stagnated = true;
            break;
        }
    }
    if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow { terms });
    }
    Ok(NeumannSum {
        limit: w,
        terms,
        stagnated,
    })
}

/// Limit of `((V^*V)^{-1} + (V^{*2}V^2)^{-1} + ...)^{-1}`, an independent
/// route to `X0`. The summands are the Gram powers of `(V^*)^{-1}`, so this
/// is `neumann_y0` applied to that operator.
pub fn neumann_x0(
    v: &OperatorMatrix,
    n_max: usize,
    tail_tol: f64,
    tol: &Tolerances,
) -> Result<NeumannSum> {
    let dual = v.adjoint_inverse_operator(tol)?;
    neumann_y0(&dual, n_max, tail_tol, tol)
}

/// Residuals of the limit equations: `X0` must solve
/// `X = V^* X (I + X)^{-1} V` and `Y0` must solve `V Y V^* = Y (I + Y)^{-1}`
/// (they are the maximal solutions).
pub fn maximal_solution_residuals(
    v: &OperatorMatrix,
    bundle: &LimitBundle,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let ex = hermitian_eig(&bundle.x0, tol)?;
    let x_contracted = ex.apply(|l| {
        let l = l.max(0.0);
        l / (1.0 + l)
    });
    let rx = (&bundle.x0 - v.sandwich(&x_contracted)).norm() / (1.0 + bundle.x0.norm());

    let ey = hermitian_eig(&bundle.y0, tol)?;
    let y_contracted = ey.apply(|l| {
        let l = l.max(0.0);
        l / (1.0 + l)
    });
    let lhs = v.matrix() * &bundle.y0 * v.matrix().adjoint();
    let ry = (lhs - y_contracted).norm() / (1.0 + bundle.y0.norm());
    Ok((rx, ry))
}
