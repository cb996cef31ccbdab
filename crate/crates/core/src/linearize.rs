//! Linearizations of matrix polynomials and their indefinite-metric symmetrizers.

use crate::error::{validation, Result};
use crate::linalg::{cr, eye, from_blocks, herm_part, imag_part, inverse, rank, sign_hermitian, CMat};
use crate::pencil::MatrixPolynomial;

/// First companion pencil 𝒜₀ − λ𝒜₁ acting on (y, λy, …, λⁿ⁻¹y).
#[derive(Debug, Clone)]
pub struct CompanionPair {
    pub a0_hat: CMat,
    pub a1_hat: CMat,
}

/// Monic companion Ã acting on (λⁿ⁻¹y, …, λy, y).
#[derive(Debug, Clone)]
pub struct MonicCompanion {
    pub a_tilde: CMat,
}

#[derive(Debug, Clone)]
pub struct SymmetrizerFamily {
    /// W_q for q = 0..=n.
    pub w: Vec<CMat>,
    pub v0: CMat,
    pub v1: CMat,
    /// Linearization the W_q act on: first block row A₀⁻¹A₁ … A₀⁻¹Aₙ, −I on the subdiagonal.
    pub a_lin: CMat,
}

#[derive(Debug, Clone)]
pub struct QuadLinearization {
    pub t_big: CMat,
    pub w_big: CMat,
    /// diag(F, T): congruent to W_big on the metric side, used for inertia.
    pub w_eff: CMat,
    /// Matrix sign of T.
    pub j: CMat,
}

fn zero_blocks(n: usize, m: usize) -> Vec<Vec<CMat>> {
    vec![vec![CMat::zeros(m, m); n]; n]
}

pub fn companion_first(p: &MatrixPolynomial) -> Result<CompanionPair> {
    let n = p.degree();
    if n == 0 {
        return validation("companion pencil needs degree at least 1");
    }
    let m = p.size();
    let mut a0 = zero_blocks(n, m);
    let mut a1 = zero_blocks(n, m);
    for j in 0..n {
        a0[0][j] = p.coeff(j).clone();
    }
    a1[0][n - 1] = -p.coeff(n);
    for i in 1..n {
        a0[i][i] = eye(m);
        a1[i][i - 1] = eye(m);
    }
    Ok(CompanionPair { a0_hat: from_blocks(&a0), a1_hat: from_blocks(&a1) })
}

pub fn companion_monic(p: &MatrixPolynomial, tol_rank: f64) -> Result<MonicCompanion> {
    let n = p.degree();
    let m = p.size();
    if n == 0 {
        return validation("companion matrix needs degree at least 1");
    }
    if p.leading_rank(tol_rank) < m {
        return validation("leading coefficient is rank deficient; use the first companion pencil (QZ path)");
    }
    let inv = inverse(p.leading()).ok_or_else(|| crate::error::PencilError::Validation("leading coefficient singular".into()))?;
    let mut b = zero_blocks(n, m);
    for j in 0..n {
        b[0][j] = -(&inv * p.coeff(n - 1 - j));
    }
    for i in 1..n {
        b[i][i - 1] = eye(m);
    }
    Ok(MonicCompanion { a_tilde: from_blocks(&b) })
}

/// Hermitian symmetrizer G of Ã: G·Ã is Hermitian for Hermitian coefficients.
/// Upper anti-triangular Hankel with Aₙ on the anti-diagonal and Aₙ₋₁ … A₁ below it.
pub fn symmetrizer(p: &MatrixPolynomial) -> Result<CMat> {
    let p = p.hermitian_checked()?;
    let n = p.degree();
    if n == 0 {
        return validation("symmetrizer needs degree at least 1");
    }
    let m = p.size();
    let mut g = zero_blocks(n, m);
    for i in 0..n {
        for j in 0..n {
            if i + j >= n - 1 {
                g[i][j] = p.coeff(2 * n - 1 - i - j).clone();
            }
        }
    }
    Ok(from_blocks(&g))
}

/// Block companion C on (y, λy, …, λⁿ⁻¹y) with last block row −Aₙ⁻¹[A₀ … Aₙ₋₁], together with
/// the Hankel matrix B = [A_{i+j+1}] for which B·C is Hermitian and
/// A⁻¹(λ) is the leading m×m block of (λB − BC)⁻¹.
pub fn hermitian_companion(p: &MatrixPolynomial, tol_rank: f64) -> Result<(CMat, CMat)> {
    let n = p.degree();
    let m = p.size();
    if n == 0 {
        return validation("degree must be at least 1");
    }
    if p.leading_rank(tol_rank) < m {
        return validation("leading coefficient must be invertible");
    }
    let inv = inverse(p.leading()).ok_or_else(|| crate::error::PencilError::Validation("leading coefficient singular".into()))?;
    let mut c = zero_blocks(n, m);
    let mut b = zero_blocks(n, m);
    for i in 0..n {
        if i + 1 < n {
            c[i][i + 1] = eye(m);
        }
        c[n - 1][i] = -(&inv * p.coeff(i));
        for j in 0..n {
            if i + j < n {
                b[i][j] = p.coeff(i + j + 1).clone();
            }
        }
    }
    Ok((from_blocks(&b), from_blocks(&c)))
}

/// Lower anti-triangular Hankel in A₀ … Aₙ₋₁, the form pairing full-length derived chains
/// with chain heads at a real eigenvalue of a dissipative pencil.
pub fn chain_form_matrix(p: &MatrixPolynomial) -> CMat {
    let n = p.degree();
    let m = p.size();
    let mut g = zero_blocks(n, m);
    for i in 0..n {
        for j in 0..n {
            if i + j >= n - 1 {
                g[i][j] = p.coeff(i + j + 1 - n).clone();
            }
        }
    }
    from_blocks(&g)
}

/// Linearization with A₀⁻¹ in the first block row, −I on the subdiagonal.
pub fn inverse_companion(p: &MatrixPolynomial, tol_rank: f64) -> Result<CMat> {
    let n = p.degree();
    let m = p.size();
    if n == 0 {
        return validation("degree must be at least 1");
    }
    if rank(p.coeff(0), tol_rank) < m {
        return validation("A₀ must be invertible (shift the spectral parameter first)");
    }
    let inv = inverse(p.coeff(0)).ok_or_else(|| crate::error::PencilError::Validation("A₀ singular".into()))?;
    let mut b = zero_blocks(n, m);
    for j in 0..n {
        b[0][j] = &inv * p.coeff(j + 1);
    }
    for i in 1..n {
        b[i][i - 1] = -eye(m);
    }
    Ok(from_blocks(&b))
}

/// Hermitian matrix with blocks 2C_{2s}ᴵ on the diagonal and C_{2s+1}ᴵ beside it, s = 0..=⌈d/2⌉,
/// where C are the given coefficients of degree d. (VX, X) = 2 Im(C(λ)x, x) for X = (x, λx, …).
fn imag_tridiagonal(coeffs: &[CMat]) -> CMat {
    let d = coeffs.len() - 1;
    let m = coeffs[0].nrows();
    let nb = d.div_ceil(2) + 1;
    let im = |k: usize| if k <= d { imag_part(&coeffs[k]) } else { CMat::zeros(m, m) };
    let mut g = zero_blocks(nb, m);
    for s in 0..nb {
        g[s][s] = im(2 * s) * cr(2.0);
        if s + 1 < nb {
            g[s][s + 1] = im(2 * s + 1);
            g[s + 1][s] = im(2 * s + 1);
        }
    }
    from_blocks(&g)
}

/// V₀: (V₀X, X) = 2 Im(A(λ)x, x) on X = (x, λx, …, λ^{⌈n/2⌉}x).
pub fn v0_matrix(p: &MatrixPolynomial) -> CMat {
    imag_tridiagonal(p.coeffs())
}

/// V₁: the V₀ matrix of λA(λ) with its first block row and column removed.
/// Represents 2 Im(λA(λ)x, x) exactly when A₀ is Hermitian.
pub fn v1_matrix(p: &MatrixPolynomial) -> CMat {
    let m = p.size();
    let mut c = vec![CMat::zeros(m, m)];
    c.extend(p.coeffs().iter().cloned());
    let full = imag_tridiagonal(&c);
    let k = full.nrows();
    full.view((m, m), (k - m, k - m)).into_owned()
}

fn hankel_lower(p: &MatrixPolynomial, len: usize) -> Vec<Vec<CMat>> {
    // rows [0 … A₀], …, [A₀ … A_{len−1}]
    let m = p.size();
    let mut g = zero_blocks(len, m);
    for i in 0..len {
        for j in 0..len {
            if i + j + 1 >= len {
                g[i][j] = p.coeff(i + j + 1 - len).clone();
            }
        }
    }
    g
}

fn hankel_upper(p: &MatrixPolynomial, len: usize) -> Vec<Vec<CMat>> {
    // rows [A_{n−len+1} … Aₙ], …, [Aₙ 0 … 0]
    let n = p.degree();
    let m = p.size();
    let mut g = zero_blocks(len, m);
    for i in 0..len {
        for j in 0..len {
            let k = n + 1 - len + i + j;
            if k <= n {
                g[i][j] = p.coeff(k).clone();
            }
        }
    }
    g
}

/// The W_q family: F_q = diag(T₀*, T₁) from G·A^q = diag(T₀, T₁); W_q takes F_q above the
/// diagonal, F_q* below it and the Hermitian part of F_q on the diagonal blocks.
pub fn wq_family(p: &MatrixPolynomial, tol_rank: f64) -> Result<SymmetrizerFamily> {
    let n = p.degree();
    let m = p.size();
    let a_lin = inverse_companion(p, tol_rank)?;
    let mut w = Vec::with_capacity(n + 1);
    for q in 0..=n {
        let mut f = zero_blocks(n, m);
        let s0 = if q % 2 == 0 { 1.0 } else { -1.0 };
        let t0 = hankel_lower(p, n - q);
        for i in 0..n - q {
            for j in 0..n - q {
                f[i][j] = t0[j][i].adjoint() * cr(s0);
            }
        }
        let t1 = hankel_upper(p, q);
        for i in 0..q {
            for j in 0..q {
                f[n - q + i][n - q + j] = &t1[i][j] * cr(-s0);
            }
        }
        let mut wb = zero_blocks(n, m);
        for i in 0..n {
            for j in 0..n {
                wb[i][j] = match i.cmp(&j) {
                    std::cmp::Ordering::Less => f[i][j].clone(),
                    std::cmp::Ordering::Greater => f[j][i].adjoint(),
                    std::cmp::Ordering::Equal => herm_part(&f[i][i]),
                };
            }
        }
        w.push(from_blocks(&wb));
    }
    Ok(SymmetrizerFamily { w, v0: v0_matrix(p), v1: v1_matrix(p), a_lin })
}

impl SymmetrizerFamily {
    /// W_q·A − (W_q·A)*.
    pub fn commutator(&self, q: usize) -> CMat {
        let x = &self.w[q] * &self.a_lin;
        &x - x.adjoint()
    }

    /// Residual of the commutator identities for even degree n = 2l:
    /// W_{2r}A − (W_{2r}A)* = i·diag(0, V₀, 0) with V₀ starting at block l−1−r, and
    /// W_{2r−1}A − (W_{2r−1}A)* = −i·diag(0, V₁, 0) with V₁ starting at block l−r.
    /// `None` where no identity is asserted (odd n, q = n).
    pub fn identity_residual(&self, q: usize) -> Option<f64> {
        let nm = self.a_lin.nrows();
        let n = self.w.len() - 1;
        let m = nm / n;
        if n % 2 == 1 || q >= n {
            return None;
        }
        let l = n / 2;
        let (v, off, phase) = if q % 2 == 0 {
            (&self.v0, l - 1 - q / 2, crate::linalg::I)
        } else {
            (&self.v1, l - (q + 1) / 2, -crate::linalg::I)
        };
        let k = v.nrows();
        let mut e = CMat::zeros(nm, nm);
        e.view_mut((off * m, off * m), (k, k)).copy_from(&(v * phase));
        let cm = self.commutator(q);
        Some(crate::linalg::fro(&(cm - e)))
    }
}

/// Linearization of λ²F + λ(D + iG) + T as T_big − λW_big on (λv, v).
pub fn quad_linearization(f: &CMat, d: &CMat, g: &CMat, t: &CMat) -> Result<QuadLinearization> {
    let m = f.nrows();
    for (name, x) in [("F", f), ("D", d), ("G", g), ("T", t)] {
        if x.nrows() != m || x.ncols() != m {
            return validation(format!("{name} must be {m}x{m}"));
        }
        if !crate::linalg::is_hermitian(x, 1e-12) {
            return validation(format!("{name} must be Hermitian"));
        }
    }
    let j = sign_hermitian(t).map_err(|_| crate::error::PencilError::Validation("T must be invertible".into()))?;
    let z = CMat::zeros(m, m);
    let damp = d + g * crate::linalg::I;
    let t_big = -from_blocks(&[vec![damp, t.clone()], vec![-&j, z.clone()]]);
    let w_big = from_blocks(&[vec![f.clone(), z.clone()], vec![z.clone(), j.clone()]]);
    let w_eff = from_blocks(&[vec![f.clone(), z.clone()], vec![z, t.clone()]]);
    Ok(QuadLinearization { t_big, w_big, w_eff, j })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, fro, max_abs};
    use crate::qz::qz;

    fn s(c: &[f64]) -> MatrixPolynomial {
        MatrixPolynomial::scalar(&c.iter().map(|&x| cr(x)).collect::<Vec<_>>())
    }

    #[test]
    fn first_companion_layout() {
        let cp = companion_first(&s(&[-1.0, 0.0, 1.0])).unwrap();
        assert_eq!(cp.a0_hat, crate::linalg::from_real(2, 2, &[-1.0, 0.0, 0.0, 1.0]));
        assert_eq!(cp.a1_hat, crate::linalg::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let mut ev: Vec<f64> = qz(&cp.a0_hat, &cp.a1_hat).unwrap().pairs().iter().map(|(a, b)| (a / b).re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
        assert!(companion_first(&s(&[1.0])).is_err());
    }

    #[test]
    fn singular_leading_gives_singular_a1() {
        let cp = companion_first(&s(&[-1.0, 1.0, 0.0])).unwrap();
        assert_eq!(rank(&cp.a1_hat, 1e-12), 1);
    }

    #[test]
    fn monic_companion_examples() {
        let a = companion_monic(&s(&[-1.0, 0.0, 1.0]), 1e-12).unwrap().a_tilde;
        assert_eq!(a, crate::linalg::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let b = crate::linalg::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let p = MatrixPolynomial::new(vec![-b.clone(), eye(2)]).unwrap();
        assert!(max_abs(&(companion_monic(&p, 1e-12).unwrap().a_tilde - b)) < 1e-15);
        assert!(companion_monic(&s(&[-1.0, 1.0, 0.0]), 1e-12).is_err());
    }

    #[test]
    fn symmetrizer_makes_companion_hermitian() {
        let p = crate::fixtures::random_hermitian(3, 3, 7);
        let g = symmetrizer(&p).unwrap();
        let a = companion_monic(&p, 1e-12).unwrap().a_tilde;
        let ga = &g * &a;
        assert!(fro(&(&ga - ga.adjoint())) < 1e-10 * fro(&ga));
        let bad = MatrixPolynomial::scalar(&[cr(1.0), c(0.0, 1.0), cr(1.0)]);
        assert!(symmetrizer(&bad).is_err());
    }

    #[test]
    fn wq_quadratic_examples() {
        let p = crate::fixtures::random_general(2, 2, 11);
        let fam = wq_family(&p, 1e-12).unwrap();
        let a = p.coeffs();
        let z = CMat::zeros(2, 2);
        let w0 = from_blocks(&[vec![z.clone(), a[0].adjoint()], vec![a[0].clone(), herm_part(&a[1])]]);
        let w1 = from_blocks(&[vec![-herm_part(&a[0]), z.clone()], vec![z.clone(), herm_part(&a[2])]]);
        // overall sign fixed by the commutation identity
        let w2 = -from_blocks(&[vec![herm_part(&a[1]), a[2].clone()], vec![a[2].adjoint(), z.clone()]]);
        assert!(max_abs(&(&fam.w[0] - w0)) < 1e-14);
        assert!(max_abs(&(&fam.w[1] - w1)) < 1e-14);
        assert!(max_abs(&(&fam.w[2] - w2)) < 1e-14);
        for w in &fam.w {
            assert!(fro(&(w - w.adjoint())) < 1e-12 * (1.0 + fro(w)));
        }
    }

    #[test]
    fn commutator_identities_even_degree() {
        for (n, seed) in [(2, 1), (4, 2), (2, 3), (4, 4)] {
            let p = crate::fixtures::random_general(3, n, seed);
            let mut cs = p.coeffs().to_vec();
            cs[0] = herm_part(&cs[0]);
            let p = MatrixPolynomial::new(cs).unwrap();
            let fam = wq_family(&p, 1e-12).unwrap();
            let scale = 1.0 + fam.a_lin.norm() * fam.w.iter().map(fro).fold(0.0, f64::max);
            for q in 0..n {
                let r = fam.identity_residual(q).unwrap();
                assert!(r < 1e-10 * scale, "n={n} q={q} residual {r}");
            }
        }
        let odd = wq_family(&crate::fixtures::random_general(2, 3, 1), 1e-12).unwrap();
        assert!(odd.identity_residual(0).is_none());
        assert!(odd.w.iter().all(|w| fro(&(w - w.adjoint())) < 1e-12));
    }

    #[test]
    fn hermitian_companion_resolvent() {
        let p = crate::fixtures::random_hermitian(2, 3, 5);
        let (b, cm) = hermitian_companion(&p, 1e-12).unwrap();
        let bc = &b * &cm;
        assert!(fro(&(&bc - bc.adjoint())) < 1e-10 * fro(&bc));
        let lam = c(0.3, 0.7);
        let big = crate::linalg::inverse(&(&b * lam - &bc)).unwrap();
        let inv = crate::linalg::inverse(&p.evaluate(lam)).unwrap();
        assert!(max_abs(&(big.view((0, 0), (2, 2)) - inv)) < 1e-10);
    }

    #[test]
    fn v0_scalar_example() {
        let p = MatrixPolynomial::scalar(&[cr(1.0), c(0.0, 1.0), cr(1.0)]);
        let v0 = v0_matrix(&p);
        assert_eq!(v0, crate::linalg::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(crate::linalg::hermitian_eig(&v0).0[0] < 0.0);
    }

    #[test]
    fn quad_linearization_examples() {
        let one = CMat::from_element(1, 1, cr(1.0));
        let zero = CMat::zeros(1, 1);
        let q = quad_linearization(&one, &zero, &zero, &one).unwrap();
        let mut ev: Vec<_> = qz(&q.t_big, &q.w_big).unwrap().pairs().iter().map(|(a, b)| a / b).collect();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-14 && (ev[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert_eq!(q.w_eff, eye(2));
        let q = quad_linearization(&one, &one, &zero, &(-&one)).unwrap();
        let mut ev: Vec<f64> = qz(&q.t_big, &q.w_big).unwrap().pairs().iter().map(|(a, b)| (a / b).re).collect();
        ev.sort_by(f64::total_cmp);
        let r5 = 5f64.sqrt();
        assert!((ev[0] - (-1.0 - r5) / 2.0).abs() < 1e-13 && (ev[1] - (-1.0 + r5) / 2.0).abs() < 1e-13);
        assert!(quad_linearization(&one, &zero, &zero, &zero).is_err());
    }
}
