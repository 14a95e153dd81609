//! Complex Schur decomposition `A = Z T Z^*` (Z unitary, T upper
//! triangular) with eigenvalue reordering, used to build orthonormal bases
//! of spectral invariant subspaces.
//!
//! Single-shift QR with Givens rotations on the Hessenberg form; dimensions
//! here are desk scale, so rotations are applied across full rows/columns
//! rather than packed.


use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

#[derive(Debug, Clone)]
pub struct SchurDecomposition {
    /// Upper triangular factor; eigenvalues on the diagonal.
    pub t: CMatrix,
    /// Unitary factor, `A = Z T Z^*`.
    pub z: CMatrix,
}

impl SchurDecomposition {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    pub fn recompose(&self) -> CMatrix {
        &self.z * &self.t * self.z.adjoint()
    }
}

/// Unitary 2x2 rotation `[[c, s], [-conj(s), c]]` with real `c >= 0`
/// mapping `(f, g)` to `(r, 0)`.
fn givens(f: C64, g: C64) -> (f64, C64) {
    let gn = g.norm();
    if gn == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let fn_ = f.norm();
    if fn_ == 0.0 {
        return (0.0, g.conj() / gn);
    }
    let d = fn_.hypot(gn);
    let c = fn_ / d;
    let s = (f / fn_) * g.conj() / d;
    (c, s)
}

/// Apply the rotation to rows `(i, i+1)` over columns `cols`.
fn rotate_rows(m: &mut CMatrix, i: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let a = m[(i, j)];
        let b = m[(i + 1, j)];
        m[(i, j)] = a * c + s * b;
        m[(i + 1, j)] = -s.conj() * a + b * c;
    }
}

/// Apply the adjoint rotation to columns `(i, i+1)` over rows `rows`.
fn rotate_cols(m: &mut CMatrix, i: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for j in rows {
        let a = m[(j, i)];
        let b = m[(j, i + 1)];
        m[(j, i)] = a * c + s.conj() * b;
        m[(j, i + 1)] = -s * a + b * c;
    }
}

/// Reduce to upper Hessenberg form by Householder reflections; returns the
/// accumulated unitary similarity.
fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut z = CMatrix::identity(n, n);
    for k in 0..n.saturating_sub(2) {
        let mut u = CVector::zeros(n - k - 1);
        for i in 0..u.len() {
            u[i] = h[(k + 1 + i, k)];
        }
        let norm = u.norm();
        if norm <= f64::MIN_POSITIVE {
            continue;
        }
        let phase = if u[0].norm() > 0.0 {
            u[0] / u[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        u[0] += phase * norm;
        let usq = u.norm_squared();
        if usq <= f64::MIN_POSITIVE {
            continue;
        }
        let beta = 2.0 / usq;
        // Left: H <- (I - beta u u^*) H on rows k+1.., columns k..
        for j in k..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..u.len() {
                dot += u[i].conj() * h[(k + 1 + i, j)];
            }
            dot *= beta;
            for i in 0..u.len() {
                h[(k + 1 + i, j)] -= u[i] * dot;
            }
        }
        // Right: H <- H (I - beta u u^*) on columns k+1.., all rows.
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for j in 0..u.len() {
                dot += h[(i, k + 1 + j)] * u[j];
            }
            dot *= beta;
            for j in 0..u.len() {
                h[(i, k + 1 + j)] -= dot * u[j].conj();
            }
        }
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for j in 0..u.len() {
                dot += z[(i, k + 1 + j)] * u[j];
            }
            dot *= beta;
            for j in 0..u.len() {
                z[(i, k + 1 + j)] -= dot * u[j].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    (h, z)
}

/// Eigenvalue of the trailing 2x2 block closest to its bottom-right entry.
fn wilkinson_shift(h: &CMatrix, hi: usize) -> C64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let l1 = d + half + disc;
    let l2 = d + half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition by shifted QR iteration.
pub fn schur(a: &CMatrix) -> Result<SchurDecomposition> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::BadParameter("empty matrix".into()));
    }
    let (mut h, mut z) = hessenberg(a);
    if n <= 1 {
        return Ok(SchurDecomposition { t: h, z });
    }

    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut stalled = 0usize;
    let mut total = 0usize;
    let max_total = 100 * n * n + 1000;
    loop {
        // Deflate negligible subdiagonals.
        for i in 0..hi {
            let bound = eps * (h[(i, i)].norm() + h[(i + 1, i + 1)].norm());
            if h[(i + 1, i)].norm() <= bound.max(f64::MIN_POSITIVE) {
                h[(i + 1, i)] = C64::new(0.0, 0.0);
            }
        }
        while hi > 0 && h[(hi, hi - 1)].norm() == 0.0 {
            hi -= 1;
            stalled = 0;
        }
        if hi == 0 {
            break;
        }
        let mut lo = hi;
        while lo > 0 && h[(lo, lo - 1)].norm() != 0.0 {
            lo -= 1;
        }

        total += 1;
        stalled += 1;
        if total > max_total {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: h[(hi, hi - 1)].norm(),
                trace: Vec::new(),
            });
        }
        let mu = if stalled % 25 == 0 {
            // Exceptional shift to break symmetry-induced stalls.
            let kick = h[(hi, hi - 1)].norm() + if hi >= 2 { h[(hi - 1, hi - 2)].norm() } else { 0.0 };
            h[(hi, hi)] + C64::new(0.75 * kick, 0.0)
        } else {
            wilkinson_shift(&h, hi)
        };

        // Explicit single-shift QR step on the active window:
        // factor H - mu I = Q R (left pass), then H <- R Q + mu I.
        for i in lo..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
            rotate_rows(&mut h, i, c, s, i..n);
            h[(i + 1, i)] = C64::new(0.0, 0.0);
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let i = lo + idx;
            rotate_cols(&mut h, i, c, s, 0..(i + 2).min(n));
            rotate_cols(&mut z, i, c, s, 0..n);
        }
        for i in lo..=hi {
            h[(i, i)] += mu;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok(SchurDecomposition { t: h, z })
}

/// Swap the adjacent diagonal entries `(k, k+1)` of an upper triangular `T`
/// by a unitary similarity, updating `Z` alongside.
fn swap_adjacent(t: &mut CMatrix, z: &mut CMatrix, k: usize) {
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let d = t[(k + 1, k + 1)];
    // Eigenvector of [[a, b], [0, d]] for eigenvalue d.
    let x0 = b;
    let x1 = d - a;
    let norm = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if norm <= f64::MIN_POSITIVE {
        // Equal diagonal with zero coupling: nothing to move.
        return;
    }
    let u0 = x0 / norm;
    let u1 = x1 / norm;
    // G = [[u0, -conj(u1)], [u1, conj(u0)]], first column the eigenvector.
    let n = t.nrows();
    // T <- G^* T on rows (k, k+1)
    for j in 0..n {
        let r0 = t[(k, j)];
        let r1 = t[(k + 1, j)];
        t[(k, j)] = u0.conj() * r0 + u1.conj() * r1;
        t[(k + 1, j)] = -u1 * r0 + u0 * r1;
    }
    // T <- T G on columns (k, k+1)
    for i in 0..n {
        let c0 = t[(i, k)];
        let c1 = t[(i, k + 1)];
        t[(i, k)] = c0 * u0 + c1 * u1;
        t[(i, k + 1)] = -c0 * u1.conj() + c1 * u0.conj();
    }
    for i in 0..n {
        let c0 = z[(i, k)];
        let c1 = z[(i, k + 1)];
        z[(i, k)] = c0 * u0 + c1 * u1;
        z[(i, k + 1)] = -c0 * u1.conj() + c1 * u0.conj();
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
}

/// Reorder the decomposition so the eigenvalues selected by `select` occupy
/// the leading diagonal positions; their invariant subspace is then spanned
/// by the leading columns of `Z`.
pub fn reorder(mut dec: SchurDecomposition, select: impl Fn(C64) -> bool) -> SchurDecomposition {
    let n = dec.t.nrows();
    let mut target = 0usize;
    for k in 0..n {
        if select(dec.t[(k, k)]) {
            let mut pos = k;
            while pos > target {
                swap_adjacent(&mut dec.t, &mut dec.z, pos - 1);
                pos -= 1;
            }
            target += 1;
        }
    }
    dec
}

/// Eigenvalues of a general square complex matrix.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    Ok(schur(a)?.eigenvalues())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_schur(a: &CMatrix, dec: &SchurDecomposition, tol: f64) {
        let n = a.nrows();
        let scale = a.norm().max(1.0);
        assert!(
            (dec.recompose() - a).norm() <= tol * scale,
            "reconstruction failed: {:.3e}",
            (dec.recompose() - a).norm() / scale
        );
        let unit = dec.z.adjoint() * &dec.z;
        assert!((unit - CMatrix::identity(n, n)).norm() <= tol * (n as f64));
        for j in 0..n {
            for i in j + 1..n {
                assert!(
                    dec.t[(i, j)].norm() <= tol * scale,
                    "not triangular at ({i},{j})"
                );
            }
        }
    }

    fn pseudo_random(n: usize, seed: u64) -> CMatrix {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn schur_reconstructs_random() {
        for (n, seed) in [(2usize, 1u64), (5, 2), (8, 3), (16, 4)] {
            let a = pseudo_random(n, seed);
            let dec = schur(&a).unwrap();
            check_schur(&a, &dec, 1e-12);
        }
    }

    #[test]
    fn schur_of_triangular_keeps_diagonal() {
        let mut a = pseudo_random(6, 9);
        for j in 0..6 {
            for i in j + 1..6 {
                a[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        let mut expect: Vec<f64> = (0..6).map(|i| a[(i, i)].norm()).collect();
        let dec = schur(&a).unwrap();
        check_schur(&a, &dec, 1e-12);
        let mut got: Vec<f64> = dec.eigenvalues().iter().map(|l| l.norm()).collect();
        expect.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        for (e, g) in expect.iter().zip(&got) {
            assert!((e - g).abs() < 1e-10);
        }
    }

    #[test]
    fn schur_handles_hermitian_and_defective() {
        // Jordan block: defective, eigenvalue 1 twice.
        let mut a = CMatrix::identity(2, 2);
        a[(0, 1)] = C64::new(1.0, 0.0);
        let dec = schur(&a).unwrap();
        check_schur(&a, &dec, 1e-10);
        for l in dec.eigenvalues() {
            assert!((l - C64::new(1.0, 0.0)).norm() < 1e-7);
        }

        let b = pseudo_random(7, 5);
        let herm = (&b + b.adjoint()) * C64::new(0.5, 0.0);
        let dec = schur(&herm).unwrap();
        check_schur(&herm, &dec, 1e-11);
        for l in dec.eigenvalues() {
            assert!(l.im.abs() < 1e-10, "Hermitian eigenvalues must be real");
        }
    }

    #[test]
    fn reorder_moves_selected_first() {
        let a = pseudo_random(8, 7);
        let dec = schur(&a).unwrap();
        let reordered = reorder(dec, |l| l.norm() < 0.5);
        check_schur(&a, &reordered, 1e-11);
        let vals = reordered.eigenvalues();
        let k = vals.iter().filter(|l| l.norm() < 0.5).count();
        for (i, l) in vals.iter().enumerate() {
            assert_eq!(l.norm() < 0.5, i < k, "selection not contiguous");
        }
    }

    #[test]
    fn reorder_preserves_eigenvalues() {
        let a = pseudo_random(6, 11);
        let before = {
            let mut v: Vec<(f64, f64)> = schur(&a)
                .unwrap()
                .eigenvalues()
                .iter()
                .map(|l| (l.re, l.im))
                .collect();
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            v
        };
        let after = {
            let dec = reorder(schur(&a).unwrap(), |l| l.re > 0.0);
            let mut v: Vec<(f64, f64)> =
                dec.eigenvalues().iter().map(|l| (l.re, l.im)).collect();
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            v
        };
        for (b, c) in before.iter().zip(&after) {
            assert!((b.0 - c.0).abs() < 1e-9 && (b.1 - c.1).abs() < 1e-9);
        }
    }
}
