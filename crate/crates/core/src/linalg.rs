//! Dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{PencilError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn zeros(r: usize, k: usize) -> CMat {
    CMat::zeros(r, k)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(r: usize, k: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(r, k, data.iter().map(|&x| cr(x)))
}

pub fn diag_real(d: &[f64]) -> CMat {
    let mut m = zeros(d.len(), d.len());
    for (i, &x) in d.iter().enumerate() {
        m[(i, i)] = cr(x);
    }
    m
}

pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// (A + A*)/2
pub fn herm_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * cr(0.5)
}

/// (A − A*)/(2i), the Hermitian "imaginary part".
pub fn imag_part(a: &CMat) -> CMat {
    (a - a.adjoint()) * c(0.0, -0.5)
}

pub fn is_hermitian(a: &CMat, rel: f64) -> bool {
    fro(&(a - a.adjoint())) <= rel * (1.0 + fro(a))
}

/// Eigen-decomposition of the Hermitian part of `a`, ascending eigenvalues.
pub fn hermitian_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let e = herm_part(a).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap());
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let mut vecs = zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &e.eigenvectors.column(i));
    }
    (vals, vecs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Inertia {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

/// Inertia of a Hermitian matrix; eigenvalues below `rel`·max|eig| count as zero.
pub fn inertia(a: &CMat, rel: f64) -> Inertia {
    let (vals, _) = hermitian_eig(a);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = rel * scale.max(f64::MIN_POSITIVE);
    let mut out = Inertia { pos: 0, neg: 0, zero: 0 };
    for v in vals {
        if v > tol {
            out.pos += 1;
        } else if v < -tol {
            out.neg += 1;
        } else {
            out.zero += 1;
        }
    }
    out
}

/// Eigenvalues of a general square matrix from its complex Schur form.
pub fn eigvals(a: &CMat) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return vec![];
    }
    let (_, t) = a.clone().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Matrix sign function of a Hermitian matrix, computed spectrally.
pub fn sign_hermitian(a: &CMat) -> Result<CMat> {
    let (vals, u) = hermitian_eig(a);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut d = zeros(vals.len(), vals.len());
    for (i, &v) in vals.iter().enumerate() {
        if v.abs() <= 1e-12 * scale.max(1e-300) {
            return Err(PencilError::Validation("sign function of a singular matrix".into()));
        }
        d[(i, i)] = cr(v.signum());
    }
    Ok(&u * d * u.adjoint())
}

/// Thin SVD with singular values sorted descending: (U, s, V) with A = U diag(s) V*.
pub fn svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (r, k) = a.shape();
    let p = r.min(k);
    if p == 0 {
        return (zeros(r, 0), vec![], zeros(k, 0));
    }
    let s = a.clone().svd(true, true);
    let u = s.u.unwrap();
    let vt = s.v_t.unwrap();
    let mut idx: Vec<usize> = (0..p).collect();
    idx.sort_by(|&i, &j| s.singular_values[j].partial_cmp(&s.singular_values[i]).unwrap());
    let mut uu = zeros(r, p);
    let mut vv = zeros(k, p);
    let mut ss = Vec::with_capacity(p);
    for (t, &i) in idx.iter().enumerate() {
        uu.set_column(t, &u.column(i));
        vv.set_column(t, &vt.row(i).adjoint());
        ss.push(s.singular_values[i]);
    }
    (uu, ss, vv)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    svd(a).1
}

pub fn spectral_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Numerical rank with an explicit ambiguity band.
///
/// Singular values `σ ≤ tol·σ_max` are treated as zero. If any singular value
/// falls within one decade of the threshold on either side, the decision is
/// reported as ambiguous instead of guessed.
pub fn rank_decision(s: &[f64], tol_rel: f64) -> Result<usize> {
    rank_decision_floor(s, tol_rel, 0.0)
}

/// As `rank_decision`, with the threshold tol·max(σ_max, floor) so that a matrix that is
/// small compared with its natural scale counts as zero.
pub fn rank_decision_floor(s: &[f64], tol_rel: f64, floor: f64) -> Result<usize> {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    let thr = tol_rel * smax.max(floor);
    let rank = s.iter().filter(|&&x| x > thr).count();
    if let Some(&amb) = s.iter().find(|&&x| x > thr / 10.0 && x <= thr * 10.0) {
        return Err(PencilError::Numerical(format!(
            "rank decision ambiguous: singular value {amb:.3e} within a decade of threshold {thr:.3e} (σ_max {smax:.3e})"
        )));
    }
    Ok(rank)
}

pub fn rank(a: &CMat, tol_rel: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > tol_rel * smax).count()
}

/// Full right-singular basis (k×k) of an r×k matrix; rows padded with zeros when r < k.
fn full_right_basis(a: &CMat) -> (Vec<f64>, CMat) {
    let (r, k) = a.shape();
    let padded = if r < k {
        let mut p = zeros(k, k);
        p.view_mut((0, 0), (r, k)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let (_, s, v) = svd(&padded);
    (s, v)
}

/// Orthonormal nullspace basis with rank decided by `rank_decision`.
pub fn nullspace(a: &CMat, tol_rel: f64) -> Result<CMat> {
    nullspace_floor(a, tol_rel, 0.0)
}

/// Nullspace with the scale floor of `rank_decision_floor`.
pub fn nullspace_floor(a: &CMat, tol_rel: f64, floor: f64) -> Result<CMat> {
    let k = a.ncols();
    if k == 0 {
        return Ok(zeros(0, 0));
    }
    if a.nrows() == 0 {
        return Ok(eye(k));
    }
    let (s, v) = full_right_basis(a);
    let r = rank_decision_floor(&s, tol_rel, floor)?;
    Ok(v.columns(r, k - r).into_owned())
}

/// Orthonormal basis of the `d` right-singular directions with smallest singular values.
pub fn smallest_right_singular(a: &CMat, d: usize) -> (CMat, Vec<f64>) {
    let k = a.ncols();
    let (s, v) = full_right_basis(a);
    let mut sv = s.clone();
    sv.resize(k, 0.0);
    (v.columns(k - d, d).into_owned(), sv[k - d..].to_vec())
}

/// Orthonormal basis of range(a), rank decided with a plain relative cutoff.
pub fn orth(a: &CMat, tol_rel: f64) -> CMat {
    let (u, s, _) = svd(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let r = s.iter().filter(|&&x| x > tol_rel * smax).count();
    u.columns(0, r).into_owned()
}

/// Moore–Penrose pseudo-inverse with relative cutoff.
pub fn pinv(a: &CMat, tol_rel: f64) -> CMat {
    let (u, s, v) = svd(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut out = zeros(a.ncols(), a.nrows());
    for (i, &si) in s.iter().enumerate() {
        if si > tol_rel * smax && si > 0.0 {
            out += v.column(i) * u.column(i).adjoint() * cr(1.0 / si);
        }
    }
    out
}

/// Minimum-norm least-squares solution of A X = B.
pub fn lstsq(a: &CMat, b: &CMat, tol_rel: f64) -> CMat {
    pinv(a, tol_rel) * b
}

pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

pub fn det(a: &CMat) -> Complex64 {
    if a.nrows() == 0 {
        return cr(1.0);
    }
    a.clone().lu().determinant()
}

pub fn cond(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Block-diagonal assembly of square blocks.
pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let k: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(n, k);
    let (mut r, mut cc) = (0, 0);
    for b in blocks {
        out.view_mut((r, cc), b.shape()).copy_from(*b);
        r += b.nrows();
        cc += b.ncols();
    }
    out
}

/// Assemble a matrix from a grid of equally-sized m×m blocks.
pub fn from_blocks(grid: &[Vec<CMat>]) -> CMat {
    let br = grid.len();
    let bc = grid[0].len();
    let m = grid[0][0].nrows();
    let mut out = zeros(br * m, bc * m);
    for (i, row) in grid.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            out.view_mut((i * m, j * m), (m, m)).copy_from(b);
        }
    }
    out
}

pub fn block(a: &CMat, i: usize, j: usize, m: usize) -> CMat {
    a.view((i * m, j * m), (m, m)).into_owned()
}

/// Stack column vectors side by side.
pub fn hstack(cols: &[CVec], rows: usize) -> CMat {
    let mut out = zeros(rows, cols.len());
    for (j, v) in cols.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Normalize every column to unit 2-norm (zero columns stay zero).
pub fn normalize_columns(a: &CMat) -> CMat {
    let mut out = a.clone();
    for j in 0..a.ncols() {
        let n = a.column(j).norm();
        if n > 0.0 {
            out.column_mut(j).scale_mut(1.0 / n);
        }
    }
    out
}

/// Rotate a vector so its largest-modulus entry is real positive (deterministic phase).
pub fn fix_phase(v: &mut CVec) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v.len() > 0 && v[best].norm() > 0.0 {
        let ph = v[best].conj() / v[best].norm();
        for z in v.iter_mut() {
            *z *= ph;
        }
    }
}

pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, b| a * b as f64)
}
