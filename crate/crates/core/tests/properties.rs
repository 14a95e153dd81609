//! Property tests for the algebraic identities every solved sample must
//! satisfy, and for the Hermitian substrate primitives.

use proptest::prelude::*;
use stabq::limits::{analyze_limits, SweepConfig};
use stabq::linalg::{
    hermitian_eig, hermitian_part, loewner_leq, psd_sqrt, range_membership,
};
use stabq::operator::diagonal_operator;
use stabq::oracle::{generate_test_operator, GenParams, OperatorKind};
use stabq::solver::{phi_map, solve_qt, SolveConfig};
use stabq::{CMatrix, CVector, OperatorMatrix, Tolerances, C64};

fn tols() -> Tolerances {
    Tolerances::default()
}

/// Small deterministic generator for raw test matrices.
struct Xorshift(u64);

impl Xorshift {
    fn new(seed: u64) -> Self {
        Xorshift(seed.wrapping_mul(0x9e3779b97f4a7c15) | 1)
    }

    fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn matrix(&mut self, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| C64::new(self.next_f64(), self.next_f64()))
    }

    fn psd(&mut self, n: usize) -> CMatrix {
        let b = self.matrix(n);
        b.adjoint() * b
    }

    fn vector(&mut self, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| C64::new(self.next_f64(), self.next_f64()))
    }
}

#[test]
fn psd_sqrt_squares_back_on_corpus() {
    let t = tols();
    let mut rng = Xorshift::new(7);
    for k in 0..100 {
        let n = 1 + (k % 32);
        let a = rng.psd(n);
        let s = psd_sqrt(&a, &t).unwrap();
        let err = (&s * &s - &a).norm();
        assert!(
            err <= 1e-10 * a.norm().max(1.0),
            "case {k}: residual {err:.3e}"
        );
    }
}

#[test]
fn loewner_is_a_partial_order_on_samples() {
    let t = tols();
    let mut rng = Xorshift::new(13);
    for k in 0..40 {
        let n = 2 + (k % 8);
        let a = rng.psd(n);
        // Reflexive.
        let refl = loewner_leq(&a, &a, &t).unwrap();
        assert!(refl.holds && refl.margin.abs() <= 1e-12 * a.norm().max(1.0));

        // Transitive: a <= a + p1 <= a + p1 + p2.
        let p1 = rng.psd(n);
        let p2 = rng.psd(n);
        let b = &a + &p1;
        let c = &b + &p2;
        assert!(loewner_leq(&a, &b, &t).unwrap().holds);
        assert!(loewner_leq(&b, &c, &t).unwrap().holds);
        assert!(loewner_leq(&a, &c, &t).unwrap().holds);

        // Antisymmetric within tolerance: mutual order forces near-equality.
        let dust = rng.psd(n) * C64::new(1e-13, 0.0);
        let a2 = &a + &dust;
        if loewner_leq(&a, &a2, &t).unwrap().holds && loewner_leq(&a2, &a, &t).unwrap().holds {
            assert!((&a - &a2).norm() <= 1e-9 * a.norm().max(1.0));
        }
    }
}

#[test]
fn range_membership_accepts_sqrt_images() {
    let t = tols();
    let mut rng = Xorshift::new(29);
    for k in 0..100 {
        let n = 1 + (k % 16);
        // Rank-deficient half the time.
        let y = if k % 2 == 0 {
            rng.psd(n)
        } else {
            let b = rng.matrix(n);
            let tall = CMatrix::from_fn(n, (n + 1) / 2, |i, j| b[(i, j)]);
            &tall * tall.adjoint()
        };
        let half = psd_sqrt(&y, &t).unwrap();
        let x = &half * rng.vector(n);
        if x.norm() < 1e-12 {
            continue;
        }
        let res = range_membership(&y, &x, &t).unwrap();
        assert!(res.member, "case {k}: sqrt image must lie in the range");
        // The certificate c really dominates: x x^* <= c_min Y within dust.
        let outer = &x * x.adjoint();
        let scaled = &y * C64::new(res.c_min * (1.0 + 1e-8) + 1e-12, 0.0);
        assert!(loewner_leq(&outer, &scaled, &t).unwrap().holds);
    }
}

#[test]
fn sample_identities_hold_across_operators_and_t() {
    let t = tols();
    let p = GenParams {
        modulus_range: (0.4, 2.2),
        ..GenParams::default()
    };
    for (i, kind) in [
        OperatorKind::Normal,
        OperatorKind::Dichotomous,
        OperatorKind::RandomInvertible,
    ]
    .iter()
    .enumerate()
    {
        for (j, tt) in [1.0, 0.4, 0.1].iter().enumerate() {
            let n = 3 + 2 * i + j;
            let v = generate_test_operator(*kind, n, (17 * i + j) as u64, &p, &t).unwrap();
            let cfg = SolveConfig::default().with_t(*tt);
            let s = solve_qt(&v, &cfg, &t).unwrap();
            let id = CMatrix::identity(n, n);

            assert!(s.residual <= cfg.fp_tol, "primal residual");
            assert!(s.residual_dual <= cfg.fp_tol, "dual residual");

            // X Y = Y X = t^2 I, with the product error budget set by the
            // two independent solves: fp_tol relative to ||X|| ||Y||.
            let t2 = &id * C64::new(tt * tt, 0.0);
            let budget = 100.0 * cfg.fp_tol * (s.x.norm() * s.y.norm()).max(tt * tt);
            assert!(
                ((&s.x * &s.y) - &t2).norm() <= budget,
                "XY = t^2: {:.3e} vs {budget:.3e}",
                ((&s.x * &s.y) - &t2).norm()
            );
            assert!(((&s.y * &s.x) - &t2).norm() <= budget);

            // R X = X R = t(I - R).
            let t_one_minus_r = (&id - &s.r) * C64::new(*tt, 0.0);
            assert!(((&s.r * &s.x) - &t_one_minus_r).norm() <= 1e-9 * (1.0 + s.x.norm()));
            assert!(((&s.x * &s.r) - &t_one_minus_r).norm() <= 1e-9 * (1.0 + s.x.norm()));

            // Y (I - R) = t (I + Q)^{-1} = t R.
            let tr = &s.r * C64::new(*tt, 0.0);
            assert!(
                ((&s.y * (&id - &s.r)) - &tr).norm() <= 1e-9 * (1.0 + s.y.norm()),
                "Y(I-R) = tR"
            );

            // Substitution bound: Q <= V^*(zQ + (1-z)I)V at z = (1-t)/(1+t).
            let z = (1.0 - tt) / (1.0 + tt);
            let shifted = &s.q * C64::new(z, 0.0) + &id * C64::new(1.0 - z, 0.0);
            let bound = v.sandwich(&shifted) - &s.q;
            let margin = hermitian_eig(&hermitian_part(&bound), &t)
                .unwrap()
                .lambda_min();
            assert!(
                margin >= -t.psd_tol * v.norm().powi(2) * (1.0 + s.q.norm()),
                "substitution bound margin {margin:.3e}"
            );
        }
    }
}

#[test]
fn warm_sweep_equals_cold_solves() {
    // A sweep with warm starts must land on the same solutions as
    // independent cold solves at the same grid.
    let t = tols();
    let v = generate_test_operator(
        OperatorKind::Dichotomous,
        5,
        99,
        &GenParams::default(),
        &t,
    )
    .unwrap();
    let cfg = SweepConfig {
        t_min: 2e-2,
        ..SweepConfig::default()
    };
    let bundle = analyze_limits(&v, &cfg, &t).unwrap();
    for s in &bundle.samples {
        let cold = solve_qt(&v, &SolveConfig::default().with_t(s.t), &t).unwrap();
        let gap = (&cold.q - &s.q).norm() / s.q.norm();
        assert!(gap <= 1e-9, "warm/cold mismatch {gap:.3e} at t={}", s.t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The defining map keeps Hermitian PSD matrices Hermitian PSD and
    /// respects the bracket `t V^*V <= Phi(Q) <= V^*V / t` for any PSD Q.
    #[test]
    fn phi_map_stays_in_bracket(seed in 0u64..1000, tpick in 0usize..3) {
        let t = tols();
        let tt = [1.0, 0.3, 0.05][tpick];
        let mut rng = Xorshift::new(seed);
        let n = 2 + (seed % 5) as usize;
        let v = generate_test_operator(
            OperatorKind::RandomInvertible, n, seed, &GenParams::default(), &t,
        ).unwrap();
        let q = rng.psd(n);
        let out = phi_map(&v, &q, tt, &t).unwrap();
        prop_assert!((&out - out.adjoint()).norm() <= 1e-12 * out.norm().max(1.0));
        let lower = v.gram() * C64::new(tt, 0.0);
        let upper = v.gram() * C64::new(1.0 / tt, 0.0);
        prop_assert!(loewner_leq(&lower, &out, &t).unwrap().holds);
        prop_assert!(loewner_leq(&out, &upper, &t).unwrap().holds);
    }

    /// Scalar diagonal operators obey the closed form at every t.
    #[test]
    fn diagonal_solution_matches_scalar_formula(a in 0.05f64..4.0, tpick in 0usize..3) {
        let t = tols();
        let tt = [1.0, 0.45, 0.12][tpick];
        let v = diagonal_operator(&[a.sqrt()], &t).unwrap();
        let s = solve_qt(&v, &SolveConfig::default().with_t(tt), &t).unwrap();
        let expect = stabq::oracle::scalar_q(a, tt);
        prop_assert!((s.q[(0, 0)].re - expect).abs() <= 1e-9 * expect.max(1.0));
    }
}

#[test]
fn operator_matrix_rejects_rectangular() {
    let t = tols();
    let m = CMatrix::from_fn(2, 3, |i, j| C64::new((i + j) as f64, 0.0));
    assert!(OperatorMatrix::new(m, &t).is_err());
}
