//! Complex QZ for matrix pencils (S − λT) and ordered complex Schur forms.
//!
//! Single-shift QZ with Hessenberg–triangular reduction, deflation of
//! negligible subdiagonals, and chasing of zero diagonal entries of T so that
//! infinite eigenvalues split off cleanly.

use num_complex::Complex64;

use crate::error::{numerical, Result};
use crate::linalg::{cr, eye, fro, CMat};

/// Generalized Schur form A = Q S Z*, B = Q T Z* with S, T upper triangular.
#[derive(Debug, Clone)]
pub struct GenSchur {
    pub s: CMat,
    pub t: CMat,
    pub q: CMat,
    pub z: CMat,
}

impl GenSchur {
    /// Diagonal pairs (α, β); eigenvalue α/β, infinite when β = 0.
    pub fn pairs(&self) -> Vec<(Complex64, Complex64)> {
        (0..self.s.nrows()).map(|i| (self.s[(i, i)], self.t[(i, i)])).collect()
    }
}

/// Left rotation G = [[c, s], [−s̄, c]] that maps (f, g) to (r, 0).
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    if g.norm() == 0.0 {
        return (1.0, cr(0.0));
    }
    if f.norm() == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let nrm = f.norm().hypot(g.norm());
    let ph = f / f.norm();
    (f.norm() / nrm, ph * g.conj() / nrm)
}

fn rot_rows(m: &mut CMat, i: usize, j: usize, c: f64, s: Complex64) {
    for k in 0..m.ncols() {
        let a = m[(i, k)];
        let b = m[(j, k)];
        m[(i, k)] = a * c + s * b;
        m[(j, k)] = -s.conj() * a + b * c;
    }
}

/// Apply G* to columns (i, j) from the right: M ← M G*.
fn rot_cols_adj(m: &mut CMat, i: usize, j: usize, c: f64, s: Complex64) {
    for k in 0..m.nrows() {
        let a = m[(k, i)];
        let b = m[(k, j)];
        m[(k, i)] = a * c + b * s.conj();
        m[(k, j)] = -a * s + b * c;
    }
}

/// Right rotation R on columns (i, j) that zeroes the `i` entry of the row vector [x y].
fn right_zero(x: Complex64, y: Complex64) -> Option<[[Complex64; 2]; 2]> {
    let n = x.norm().hypot(y.norm());
    if x.norm() == 0.0 || n == 0.0 {
        return None;
    }
    Some([[-y / n, x.conj() / n], [x / n, y.conj() / n]])
}

fn apply_right(m: &mut CMat, i: usize, j: usize, r: &[[Complex64; 2]; 2]) {
    for k in 0..m.nrows() {
        let a = m[(k, i)];
        let b = m[(k, j)];
        m[(k, i)] = a * r[0][0] + b * r[1][0];
        m[(k, j)] = a * r[0][1] + b * r[1][1];
    }
}

struct Work {
    s: CMat,
    t: CMat,
    q: CMat,
    z: CMat,
}

impl Work {
    fn left(&mut self, i: usize, j: usize, f: Complex64, g: Complex64) {
        let (c, s) = givens(f, g);
        rot_rows(&mut self.s, i, j, c, s);
        rot_rows(&mut self.t, i, j, c, s);
        rot_cols_adj(&mut self.q, i, j, c, s);
    }

    fn right(&mut self, i: usize, j: usize, x: Complex64, y: Complex64) {
        if let Some(r) = right_zero(x, y) {
            apply_right(&mut self.s, i, j, &r);
            apply_right(&mut self.t, i, j, &r);
            apply_right(&mut self.z, i, j, &r);
        }
    }
}

/// Complex QZ decomposition of the pencil (A, B).
pub fn qz(a: &CMat, b: &CMat) -> Result<GenSchur> {
    let n = a.nrows();
    assert_eq!(a.shape(), (n, n));
    assert_eq!(b.shape(), (n, n));
    if n == 0 {
        return Ok(GenSchur { s: a.clone(), t: b.clone(), q: eye(0), z: eye(0) });
    }
    let qr = b.clone().qr();
    let q0 = qr.q();
    let mut w = Work { s: q0.adjoint() * a, t: qr.r(), q: q0, z: eye(n) };
    for i in 0..n {
        for j in 0..i {
            w.t[(i, j)] = cr(0.0);
        }
    }

    // Hessenberg–triangular reduction.
    for j in 0..n.saturating_sub(2) {
        for i in ((j + 2)..n).rev() {
            let f = w.s[(i - 1, j)];
            let g = w.s[(i, j)];
            w.left(i - 1, i, f, g);
            w.s[(i, j)] = cr(0.0);
            let x = w.t[(i, i - 1)];
            let y = w.t[(i, i)];
            w.right(i - 1, i, x, y);
            w.t[(i, i - 1)] = cr(0.0);
        }
    }

    let ulp = f64::EPSILON;
    let atol = ulp * fro(&w.s).max(f64::MIN_POSITIVE);
    let btol = ulp * fro(&w.t).max(f64::MIN_POSITIVE);
    let max_iter = 60 * n;
    let mut iter = 0;
    let mut since_deflation = 0;
    let mut ilast = n - 1;

    while ilast > 0 {
        if w.s[(ilast, ilast - 1)].norm() <= atol {
            w.s[(ilast, ilast - 1)] = cr(0.0);
            ilast -= 1;
            since_deflation = 0;
            continue;
        }
        if w.t[(ilast, ilast)].norm() <= btol {
            // infinite eigenvalue at the bottom: rotate S(ilast, ilast−1) away
            w.t[(ilast, ilast)] = cr(0.0);
            let x = w.s[(ilast, ilast - 1)];
            let y = w.s[(ilast, ilast)];
            w.right(ilast - 1, ilast, x, y);
            w.s[(ilast, ilast - 1)] = cr(0.0);
            w.t[(ilast, ilast - 1)] = cr(0.0);
            ilast -= 1;
            since_deflation = 0;
            continue;
        }

        let mut ifirst = 0;
        let mut zero_t = None;
        for j in (0..ilast).rev() {
            if w.t[(j, j)].norm() <= btol {
                zero_t = Some(j);
                break;
            }
            if j > 0 && w.s[(j, j - 1)].norm() <= atol {
                w.s[(j, j - 1)] = cr(0.0);
                ifirst = j;
                break;
            }
        }

        if let Some(j) = zero_t {
            // chase the zero on the diagonal of T down to position ilast
            w.t[(j, j)] = cr(0.0);
            for jch in j..ilast {
                let f = w.t[(jch, jch + 1)];
                let g = w.t[(jch + 1, jch + 1)];
                w.left(jch, jch + 1, f, g);
                w.t[(jch + 1, jch + 1)] = cr(0.0);
                w.t[(jch + 1, jch)] = cr(0.0);
                if jch > 0 {
                    let x = w.s[(jch + 1, jch - 1)];
                    let y = w.s[(jch + 1, jch)];
                    w.right(jch - 1, jch, x, y);
                    w.s[(jch + 1, jch - 1)] = cr(0.0);
                    w.t[(jch, jch - 1)] = cr(0.0);
                }
            }
            continue;
        }

        iter += 1;
        since_deflation += 1;
        if iter > max_iter {
            return numerical(format!("QZ failed to converge after {max_iter} iterations"));
        }

        let shift = if since_deflation % 11 == 10 {
            // exceptional shift
            let t = w.t[(ilast, ilast)];
            w.s[(ilast, ilast)] / t + cr(w.s[(ilast, ilast - 1)].norm() / t.norm().max(1e-300))
        } else {
            wilkinson_shift(&w.s, &w.t, ilast)
        };

        let f = w.s[(ifirst, ifirst)] - shift * w.t[(ifirst, ifirst)];
        let g = w.s[(ifirst + 1, ifirst)];
        w.left(ifirst, ifirst + 1, f, g);
        for k in ifirst..ilast {
            let x = w.t[(k + 1, k)];
            let y = w.t[(k + 1, k + 1)];
            w.right(k, k + 1, x, y);
            w.t[(k + 1, k)] = cr(0.0);
            if k + 2 <= ilast {
                let f = w.s[(k + 1, k)];
                let g = w.s[(k + 2, k)];
                w.left(k + 1, k + 2, f, g);
                w.s[(k + 2, k)] = cr(0.0);
            }
        }
    }

    for i in 0..n {
        for j in 0..i {
            w.s[(i, j)] = cr(0.0);
            w.t[(i, j)] = cr(0.0);
        }
    }
    Ok(GenSchur { s: w.s, t: w.t, q: w.q, z: w.z })
}

fn wilkinson_shift(s: &CMat, t: &CMat, k: usize) -> Complex64 {
    let (s11, s12, s21, s22) = (s[(k - 1, k - 1)], s[(k - 1, k)], s[(k, k - 1)], s[(k, k)]);
    let (t11, t12, t22) = (t[(k - 1, k - 1)], t[(k - 1, k)], t[(k, k)]);
    let target = s22 / t22;
    let qa = t11 * t22;
    let qb = -(s11 * t22 + s22 * t11) + s21 * t12;
    let qc = s11 * s22 - s12 * s21;
    if qa.norm() <= f64::EPSILON * (qb.norm() + qc.norm()) {
        return target;
    }
    let disc = (qb * qb - qa * qc * 4.0).sqrt();
    let r1 = (-qb + disc) / (qa * 2.0);
    let r2 = (-qb - disc) / (qa * 2.0);
    let pick = if (r1 - target).norm() <= (r2 - target).norm() { r1 } else { r2 };
    if pick.is_finite() {
        pick
    } else {
        target
    }
}

/// Swap adjacent diagonal entries k, k+1 of an upper-triangular T (A = Q T Q*).
pub fn schur_swap(t: &mut CMat, q: &mut CMat, k: usize) {
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let d = t[(k + 1, k + 1)];
    let v0 = b;
    let v1 = d - a;
    let nrm = v0.norm().hypot(v1.norm());
    if nrm == 0.0 {
        return;
    }
    let u = [[v0 / nrm, -v1.conj() / nrm], [v1 / nrm, v0.conj() / nrm]];
    // T ← U* T U on rows/cols k, k+1
    apply_right(t, k, k + 1, &u);
    let uh = [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]];
    for col in 0..t.ncols() {
        let x = t[(k, col)];
        let y = t[(k + 1, col)];
        t[(k, col)] = uh[0][0] * x + uh[0][1] * y;
        t[(k + 1, col)] = uh[1][0] * x + uh[1][1] * y;
    }
    apply_right(q, k, k + 1, &u);
    t[(k + 1, k)] = cr(0.0);
}

/// Complex Schur form with all eigenvalues satisfying `select` moved to the
/// leading block. Returns (Q, T, number selected) with A = Q T Q*.
pub fn ordered_schur(a: &CMat, select: impl Fn(Complex64) -> bool) -> (CMat, CMat, usize) {
    let (mut q, mut t) = a.clone().schur().unpack();
    let n = t.nrows();
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = cr(0.0);
        }
    }
    let mut pos = 0;
    for i in 0..n {
        if select(t[(i, i)]) {
            let mut k = i;
            while k > pos {
                schur_swap(&mut t, &mut q, k - 1);
                k -= 1;
            }
            pos += 1;
        }
    }
    (q, t, pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real, zeros};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn qz_reconstructs_pencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 5, 9] {
            let a = rand_mat(n, &mut rng);
            let b = rand_mat(n, &mut rng);
            let g = qz(&a, &b).unwrap();
            assert!(fro(&(&g.q * &g.s * g.z.adjoint() - &a)) < 1e-12 * (1.0 + fro(&a)));
            assert!(fro(&(&g.q * &g.t * g.z.adjoint() - &b)) < 1e-12 * (1.0 + fro(&b)));
            // eigenvalues agree with those of B⁻¹A
            let m = b.clone().try_inverse().unwrap() * &a;
            let ev = m.schur().eigenvalues().unwrap();
            for (al, be) in g.pairs() {
                let l = al / be;
                let d = ev.iter().map(|e| (e - l).norm()).fold(f64::MAX, f64::min);
                assert!(d < 1e-8 * (1.0 + l.norm()), "n={n} λ={l}");
            }
        }
    }

    #[test]
    fn qz_splits_infinite_eigenvalue() {
        // λ·diag(1,0) − I : one finite eigenvalue 1, one infinite
        let a = -eye(2);
        let b = from_real(2, 2, &[-1.0, 0.0, 0.0, 0.0]);
        let g = qz(&a, &b).unwrap();
        let mut fin = vec![];
        let mut inf = 0;
        for (al, be) in g.pairs() {
            if be.norm() < 1e-12 {
                inf += 1;
            } else {
                fin.push(al / be);
            }
        }
        assert_eq!(inf, 1);
        assert!((fin[0] - cr(1.0)).norm() < 1e-14);
    }

    #[test]
    fn qz_with_interior_zero_on_t_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = rand_mat(4, &mut rng);
        let mut b = rand_mat(4, &mut rng);
        for j in 0..4 {
            b[(1, j)] = cr(0.0);
            b[(2, j)] = cr(0.0);
        }
        let g = qz(&a, &b).unwrap();
        let inf = g.pairs().iter().filter(|(_, be)| be.norm() < 1e-12).count();
        assert_eq!(inf, 2);
        assert!(fro(&(&g.q * &g.s * g.z.adjoint() - &a)) < 1e-12);
    }

    #[test]
    fn ordered_schur_moves_selection_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = rand_mat(6, &mut rng);
        let (q, t, k) = ordered_schur(&a, |z| z.im > 0.0);
        assert!(fro(&(&q * &t * q.adjoint() - &a)) < 1e-12);
        for i in 0..6 {
            assert_eq!(t[(i, i)].im > 0.0, i < k);
        }
        let _ = zeros(1, 1);
    }
}
