//! Eigenvalues with multiplicities, Jordan chains, adjoint chains and Keldysh derived chains.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, PencilError, Result};
use crate::linalg::{binom, cr, eye, fro, lstsq, nullspace_floor, rank, rank_decision, singular_values, svd, CMat, CVec};
use crate::linearize::companion_first;
use crate::pencil::{MatrixPolynomial, Tolerances};
use crate::qz::qz;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub eigenvalue: Complex64,
    pub geometric: usize,
    /// Chain lengths p_k + 1, non-increasing.
    pub partial: Vec<usize>,
    pub algebraic: usize,
    pub is_real: bool,
    pub is_semisimple: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub finite: Vec<EigenData>,
    /// Algebraic multiplicity of the eigenvalue at infinity.
    pub infinite: usize,
    /// Chain lengths at infinity (from the reversed polynomial at 0).
    pub infinite_partial: Vec<usize>,
    pub size: usize,
    pub degree: usize,
}

impl Spectrum {
    pub fn finite_count(&self) -> usize {
        self.finite.iter().map(|e| e.algebraic).sum()
    }

    /// Eigenvalues repeated by algebraic multiplicity.
    pub fn multiset(&self) -> Vec<Complex64> {
        self.finite.iter().flat_map(|e| std::iter::repeat_n(e.eigenvalue, e.algebraic)).collect()
    }

    /// Half the distance from λ₀ to the nearest other finite eigenvalue.
    pub fn isolation_radius(&self, lambda0: Complex64) -> f64 {
        let d = self
            .finite
            .iter()
            .map(|e| (e.eigenvalue - lambda0).norm())
            .filter(|&d| d > 1e-9 * (1.0 + lambda0.norm()))
            .fold(f64::INFINITY, f64::min);
        if d.is_finite() {
            0.5 * d
        } else {
            0.5 * (1.0 + lambda0.norm())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSystem {
    pub eigenvalue: Complex64,
    /// chains[k][h] = y_k^h; chains ordered by non-increasing length.
    pub chains: Vec<Vec<CVec>>,
    /// Adjoint chains z_k^h of A*(λ) at the conjugate eigenvalue, filled by `attach_adjoint`.
    pub adjoint: Option<Vec<Vec<CVec>>>,
}

impl CanonicalSystem {
    pub fn lengths(&self) -> Vec<usize> {
        self.chains.iter().map(Vec::len).collect()
    }

    pub fn algebraic(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn max_length(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Largest chain-equation residual, relative to (1 + max‖B_j‖)·max‖y‖.
    pub fn residual(&self, p: &MatrixPolynomial) -> f64 {
        chains_residual(p, self.eigenvalue, &self.chains)
    }

    /// Same for the adjoint chains against A* at the conjugate point.
    pub fn adjoint_residual(&self, p: &MatrixPolynomial) -> Option<f64> {
        self.adjoint.as_ref().map(|z| chains_residual(&p.adjoint(), self.eigenvalue.conj(), z))
    }
}

fn chains_residual(p: &MatrixPolynomial, lambda0: Complex64, chains: &[Vec<CVec>]) -> f64 {
    let b = p.shift(lambda0);
    let scale = 1.0 + b.max_coeff_norm();
    let mut worst = 0.0f64;
    for ch in chains {
        let ynorm = ch.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        for s in 0..ch.len() {
            let mut r = CVec::zeros(p.size());
            for t in 0..=s.min(p.degree()) {
                r += b.coeff(t) * &ch[s - t];
            }
            worst = worst.max(r.norm() / (scale * ynorm));
        }
    }
    worst
}

/// Lower block-triangular Toeplitz matrix with blocks B_0 … on and below the diagonal.
pub fn block_toeplitz(taylor: &[CMat], k: usize) -> CMat {
    let m = taylor[0].nrows();
    let mut t = CMat::zeros(k * m, k * m);
    for i in 0..k {
        for j in 0..=i {
            if i - j < taylor.len() {
                t.view_mut((i * m, j * m), (m, m)).copy_from(&taylor[i - j]);
            }
        }
    }
    t
}

/// Kernel dimensions d_k = dim ker T_k for k = 1, 2, … until they stop growing.
/// Returns the orthonormal kernel bases alongside.
fn toeplitz_kernels(taylor: &[CMat], tol_rank: f64, cap: usize) -> Result<Vec<CMat>> {
    let floor = taylor.iter().map(crate::linalg::spectral_norm).fold(0.0, f64::max);
    let mut out: Vec<CMat> = Vec::new();
    let mut prev = 0;
    for k in 1..=cap + 1 {
        let t = block_toeplitz(taylor, k);
        let n = nullspace_floor(&t, tol_rank, floor)?;
        let d = n.ncols();
        if d == prev {
            break;
        }
        if k > cap {
            return numerical("Jordan chains longer than the algebraic multiplicity allows");
        }
        prev = d;
        out.push(n);
    }
    Ok(out)
}

/// Chain lengths from kernel dimensions: r_L = d_L − d_{L−1} chains have length ≥ L.
fn lengths_from_dims(dims: &[usize]) -> Vec<usize> {
    let mut r: Vec<usize> = Vec::with_capacity(dims.len());
    let mut prev = 0;
    for &d in dims {
        r.push(d - prev);
        prev = d;
    }
    let mut lengths = Vec::new();
    for l in (1..=r.len()).rev() {
        let next = if l < r.len() { r[l] } else { 0 };
        for _ in 0..r[l - 1].saturating_sub(next) {
            lengths.push(l);
        }
    }
    lengths
}

pub(crate) fn default_rank_tol(p: &MatrixPolynomial, tol: &Tolerances) -> f64 {
    tol.rank_tol(p.size(), p.degree())
}

/// Orthonormal basis of Ker A(λ₀), rank decided against the scale of the Taylor coefficients.
pub fn kernel_at(p: &MatrixPolynomial, lambda0: Complex64, tol: &Tolerances) -> Result<CMat> {
    let taylor = p.shift(lambda0);
    let floor = taylor.coeffs().iter().map(crate::linalg::spectral_norm).fold(0.0, f64::max);
    nullspace_floor(taylor.coeff(0), default_rank_tol(p, tol), floor)
}

/// Jordan chain lengths at λ₀ from the rank staircase of the Taylor Toeplitz matrices.
pub fn partial_multiplicities(p: &MatrixPolynomial, lambda0: Complex64, tol: &Tolerances) -> Result<Vec<usize>> {
    let taylor = p.shift(lambda0).coeffs().to_vec();
    let cap = p.size() * p.degree().max(1);
    let ks = toeplitz_kernels(&taylor, default_rank_tol(p, tol), cap)?;
    Ok(lengths_from_dims(&ks.iter().map(|n| n.ncols()).collect::<Vec<_>>()))
}

/// True when det A(λ) vanishes at every one of 2n+1 pseudo-random sample points.
pub fn is_singular(p: &MatrixPolynomial) -> bool {
    let mut r = crate::fixtures::rng(0x5eed);
    let scale = 1.0 + p.max_coeff_norm();
    (0..2 * p.degree() + 1).all(|_| {
        let z = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)) * scale;
        let a = p.evaluate(z);
        rank(&a, 1e-11) < p.size()
    })
}

fn reversed(p: &MatrixPolynomial) -> MatrixPolynomial {
    MatrixPolynomial::new(p.coeffs().iter().rev().cloned().collect()).unwrap()
}

/// Single-linkage clustering with relative radius tol·max(1, |λ|).
pub fn cluster(values: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let nx = p[j];
            p[j] = r;
            j = nx;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let s = 1f64.max(values[i].norm()).max(values[j].norm());
            if (values[i] - values[j]).norm() <= tol * s {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

pub fn snap_real(z: Complex64, tol_real: f64) -> (Complex64, bool) {
    if z.im.abs() < tol_real * (1.0 + z.norm()) {
        (cr(z.re), true)
    } else {
        (z, false)
    }
}

/// A Jordan block of size k splits under rounding into k eigenvalues about ε^{1/k} apart.
/// Coarser single-linkage groups are accepted when the rank staircase at their mean confirms
/// the full multiplicity.
fn merge_defective(p: &MatrixPolynomial, vals: &[Complex64], mut groups: Vec<Vec<usize>>, tol: &Tolerances) -> Vec<Vec<usize>> {
    for radius in [1e-6, 1e-5, 1e-4, 1e-3] {
        if radius <= tol.tol_cluster {
            continue;
        }
        for coarse in cluster(vals, radius) {
            let inside: Vec<usize> = (0..groups.len()).filter(|&g| coarse.contains(&groups[g][0])).collect();
            if inside.len() < 2 {
                continue;
            }
            let mean = coarse.iter().map(|&i| vals[i]).sum::<Complex64>() / coarse.len() as f64;
            let (lambda, _) = snap_real(mean, tol.tol_real);
            let confirmed = partial_multiplicities(p, lambda, tol).map(|pm| pm.iter().sum::<usize>() == coarse.len());
            if confirmed == Ok(true) {
                groups = groups
                    .into_iter()
                    .enumerate()
                    .filter(|(g, _)| !inside.contains(g))
                    .map(|(_, v)| v)
                    .chain(std::iter::once(coarse.clone()))
                    .collect();
            }
        }
    }
    groups
}

/// All eigenvalues: QZ on the first companion pencil, clustering, Jordan structure per cluster.
pub fn eigenvalues(p: &MatrixPolynomial, tol: &Tolerances) -> Result<Spectrum> {
    let m = p.size();
    let n = p.degree();
    if n == 0 {
        if is_singular(p) {
            return Err(PencilError::SingularPencil);
        }
        return Ok(Spectrum { finite: vec![], infinite: 0, infinite_partial: vec![], size: m, degree: 0 });
    }
    if is_singular(p) {
        return Err(PencilError::SingularPencil);
    }
    // infinite structure: Jordan structure of the reversed polynomial at 0
    let rev = reversed(p);
    let infinite_partial = if p.leading_rank(default_rank_tol(p, tol)) == m {
        vec![]
    } else {
        partial_multiplicities(&rev, cr(0.0), tol)?
    };
    let infinite: usize = infinite_partial.iter().sum();
    let cp = companion_first(p)?;
    let gs = qz(&cp.a0_hat, &cp.a1_hat)?;
    let mut pairs = gs.pairs();
    // most infinite first
    pairs.sort_by(|x, y| {
        let rx = x.1.norm() / (x.0.norm() + x.1.norm());
        let ry = y.1.norm() / (y.0.norm() + y.1.norm());
        rx.total_cmp(&ry)
    });
    let finite_vals: Vec<Complex64> = pairs[infinite..].iter().map(|(a, b)| a / b).collect();
    let groups = merge_defective(p, &finite_vals, cluster(&finite_vals, tol.tol_cluster), tol);
    let mut finite = Vec::with_capacity(groups.len());
    for g in groups {
        let mean = g.iter().map(|&i| finite_vals[i]).sum::<Complex64>() / g.len() as f64;
        let (lambda, is_real) = snap_real(mean, tol.tol_real);
        let partial = partial_multiplicities(p, lambda, tol)?;
        let total: usize = partial.iter().sum();
        if total != g.len() {
            return numerical(format!(
                "Jordan structure at {lambda:.6e} accounts for {total} of {} clustered eigenvalues",
                g.len()
            ));
        }
        finite.push(EigenData {
            eigenvalue: lambda,
            geometric: partial.len(),
            is_semisimple: partial.iter().all(|&l| l == 1),
            algebraic: g.len(),
            partial,
            is_real,
        });
    }
    finite.sort_by(|a, b| a.eigenvalue.re.total_cmp(&b.eigenvalue.re).then(a.eigenvalue.im.total_cmp(&b.eigenvalue.im)));
    Ok(Spectrum { finite, infinite, infinite_partial, size: m, degree: n })
}

/// Canonical system of Jordan chains at λ₀ with maximal lengths and orthonormal heads.
pub fn canonical_system(p: &MatrixPolynomial, lambda0: Complex64, tol: &Tolerances) -> Result<CanonicalSystem> {
    let m = p.size();
    let taylor = p.shift(lambda0).coeffs().to_vec();
    let cap = m * p.degree().max(1);
    let kers = toeplitz_kernels(&taylor, default_rank_tol(p, tol), cap)?;
    if kers.is_empty() {
        return validation(format!("{lambda0} is not an eigenvalue at the current rank tolerance"));
    }
    let dims: Vec<usize> = kers.iter().map(|n| n.ncols()).collect();
    let big_k = kers.len();
    let mut r = vec![0usize; big_k + 2];
    for l in 1..=big_k {
        r[l] = dims[l - 1] - if l > 1 { dims[l - 2] } else { 0 };
    }
    // heads[L]: orthonormal basis of the heads of chains of length ≥ L
    let mut heads: Vec<CMat> = vec![CMat::zeros(m, 0); big_k + 2];
    for l in 1..=big_k {
        let first = kers[l - 1].rows(0, m).into_owned();
        let (u, _, _) = svd(&first);
        heads[l] = u.columns(0, r[l]).into_owned();
    }
    let mut chains = Vec::new();
    for l in (1..=big_k).rev() {
        let count = r[l] - r[l + 1];
        if count == 0 {
            continue;
        }
        let q_next = &heads[l + 1];
        let proj = eye(m) - q_next * q_next.adjoint();
        let x = &proj * &heads[l];
        let (u, _, _) = svd(&x);
        let nl = &kers[l - 1];
        let first = nl.rows(0, m).into_owned();
        for c in 0..count {
            let target = u.column(c).into_owned();
            let coef = lstsq(&first, &CMat::from_column_slice(m, 1, target.as_slice()), 1e-12);
            let v = nl * coef;
            let mut chain: Vec<CVec> = (0..l).map(|h| v.view((h * m, 0), (m, 1)).column(0).into_owned()).collect();
            chain[0] = target;
            chains.push(chain);
        }
    }
    Ok(CanonicalSystem { eigenvalue: lambda0, chains, adjoint: None })
}

/// Principal part R_{−1}, …, R_{−q} of A⁻¹ at λ₀ (index j−1 holds R_{−j}),
/// from the 2q-block Toeplitz system A·A⁻¹ = I.
pub fn principal_part(p: &MatrixPolynomial, lambda0: Complex64, q: usize, tol: &Tolerances) -> Vec<CMat> {
    let m = p.size();
    let taylor = p.shift(lambda0).coeffs().to_vec();
    let t = block_toeplitz(&taylor, 2 * q);
    let mut e = CMat::zeros(2 * q * m, m);
    e.view_mut((q * m, 0), (m, m)).copy_from(&eye(m));
    let x = lstsq(&t, &e, default_rank_tol(p, tol));
    (1..=q).map(|j| x.view(((q - j) * m, 0), (m, m)).into_owned()).collect()
}

/// Same principal part by the trapezoid rule on a circle: R_{−j} = (1/2πi)∮(λ−λ₀)^{j−1}A⁻¹dλ.
pub fn contour_principal_part(p: &MatrixPolynomial, lambda0: Complex64, radius: f64, q: usize, nodes: usize) -> Result<Vec<CMat>> {
    let m = p.size();
    let mut out = vec![CMat::zeros(m, m); q];
    for k in 0..nodes {
        let th = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
        let w = Complex64::from_polar(radius, th);
        let inv = crate::linalg::inverse(&p.evaluate(lambda0 + w))
            .ok_or_else(|| PencilError::Numerical("contour passes through an eigenvalue".into()))?;
        // dλ = i w dθ, (1/2πi)·i w·(2π/N) = w/N
        let mut pw = w / nodes as f64;
        for r in out.iter_mut() {
            *r += &inv * pw;
            pw *= w;
        }
    }
    Ok(out)
}

/// Keldysh form of the principal part from chains y and adjoint chains z:
/// the coefficient of (λ−λ₀)^{−(p_k+1−h)} is Σ_{s≤h} y_k^s (z_k^{h−s})*.
pub fn keldysh_principal_part(chains: &[Vec<CVec>], adjoint: &[Vec<CVec>], q: usize) -> Vec<CMat> {
    let m = chains[0][0].len();
    let mut out = vec![CMat::zeros(m, m); q];
    for (y, z) in chains.iter().zip(adjoint) {
        let len = y.len();
        for h in 0..len {
            let j = len - h;
            for s in 0..=h {
                out[j - 1] += &y[s] * z[h - s].adjoint();
            }
        }
    }
    out
}

/// Solve for the adjoint chains given the direct ones and verify them against a contour residue.
pub fn attach_adjoint(p: &MatrixPolynomial, cs: &mut CanonicalSystem, radius: f64, tol: &Tolerances) -> Result<AdjointReport> {
    let m = p.size();
    let q = cs.max_length();
    let rpp = principal_part(p, cs.eigenvalue, q, tol);
    // unknowns conj(z_k^h[b]); one column per b
    let mut index = Vec::new();
    for (k, ch) in cs.chains.iter().enumerate() {
        for h in 0..ch.len() {
            index.push((k, h));
        }
    }
    let nz = index.len();
    let mut mat = CMat::zeros(q * m, nz);
    for (col, &(k, t)) in index.iter().enumerate() {
        let y = &cs.chains[k];
        let len = y.len();
        // z_k^t appears in coefficient h = t + s with weight y_k^s, at j = len − h
        for s in 0..len - t {
            let j = len - (t + s);
            for a in 0..m {
                mat[((j - 1) * m + a, col)] += y[s][a];
            }
        }
    }
    let mut rhs = CMat::zeros(q * m, m);
    for j in 0..q {
        rhs.view_mut((j * m, 0), (m, m)).copy_from(&rpp[j]);
    }
    let sol = lstsq(&mat, &rhs, 1e-12);
    let fit = fro(&(&mat * &sol - &rhs)) / (1.0 + fro(&rhs));
    let mut adj: Vec<Vec<CVec>> = cs.chains.iter().map(|ch| vec![CVec::zeros(m); ch.len()]).collect();
    for (row, &(k, h)) in index.iter().enumerate() {
        adj[k][h] = sol.row(row).transpose().map(|z| z.conj());
    }
    let contour = contour_principal_part(p, cs.eigenvalue, radius, q, 64)?;
    let recon = keldysh_principal_part(&cs.chains, &adj, q);
    let scale = 1.0 + contour.iter().map(fro).fold(0.0, f64::max);
    let contour_mismatch = recon.iter().zip(&contour).map(|(a, b)| fro(&(a - b))).fold(0.0, f64::max) / scale;
    cs.adjoint = Some(adj);
    let adjoint_residual = cs.adjoint_residual(p).unwrap_or(0.0);
    if fit > 1e-6 || contour_mismatch > 1e-6 {
        return numerical(format!(
            "adjoint chains do not reproduce the principal part: fit {fit:.2e}, contour mismatch {contour_mismatch:.2e}"
        ));
    }
    Ok(AdjointReport { fit_residual: fit, contour_mismatch, adjoint_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointReport {
    pub fit_residual: f64,
    pub contour_mismatch: f64,
    pub adjoint_residual: f64,
}

/// Canonical systems with adjoint chains for every finite eigenvalue.
pub fn all_canonical_systems(p: &MatrixPolynomial, spec: &Spectrum, tol: &Tolerances, with_adjoint: bool) -> Result<Vec<CanonicalSystem>> {
    spec.finite
        .iter()
        .map(|e| {
            let mut cs = canonical_system(p, e.eigenvalue, tol)?;
            if with_adjoint {
                attach_adjoint(p, &mut cs, spec.isolation_radius(e.eigenvalue), tol)?;
            }
            Ok(cs)
        })
        .collect()
}

/// Derived vector ỹ^h of length `len` for a chain at λ: block r is Σ_j C(r,j) λ^{r−j} y^{h−j}.
pub fn derived_vector(lambda: Complex64, chain: &[CVec], h: usize, len: usize) -> CVec {
    let m = chain[0].len();
    let mut v = CVec::zeros(len * m);
    for r in 0..len {
        let mut acc = CVec::zeros(m);
        for j in 0..=r.min(h) {
            acc += &chain[h - j] * (lambda.powi((r - j) as i32) * binom(r, j));
        }
        v.rows_mut(r * m, m).copy_from(&acc);
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedChainSystem {
    pub length: usize,
    pub vectors: Vec<CVec>,
    /// (system index, chain index, height) per vector.
    pub provenance: Vec<(usize, usize, usize)>,
}

impl DerivedChainSystem {
    pub fn stacked(&self) -> CMat {
        let rows = self.vectors.first().map(|v| v.len()).unwrap_or(0);
        crate::linalg::hstack(&self.vectors, rows)
    }
}

/// Derived chains of every chain vector in the given systems.
pub fn derived_chains(systems: &[CanonicalSystem], len: usize) -> DerivedChainSystem {
    let mut vectors = Vec::new();
    let mut provenance = Vec::new();
    for (si, cs) in systems.iter().enumerate() {
        for (k, ch) in cs.chains.iter().enumerate() {
            for h in 0..ch.len() {
                vectors.push(derived_vector(cs.eigenvalue, ch, h, len));
                provenance.push((si, k, h));
            }
        }
    }
    DerivedChainSystem { length: len, vectors, provenance }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisReport {
    pub columns: usize,
    pub rank: usize,
    pub deficiency: usize,
    pub predicted_deficiency: usize,
    pub leading_invertible: bool,
    /// deficiency = 0 exactly when Aₙ is invertible, and deficiency = predicted.
    pub rank_claim_holds: bool,
}

/// Multiplicity of μ = 0 for (𝒜₀ − σ𝒜₁)⁻¹𝒜₁, σ chosen so that A(σ) is invertible.
pub fn companion_zero_multiplicity(p: &MatrixPolynomial, tol: &Tolerances) -> Result<usize> {
    let cp = companion_first(p)?;
    let mut r = crate::fixtures::rng(0xa11ce);
    let scale = 1.0 + p.max_coeff_norm();
    for _ in 0..20 {
        let sigma = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)) * scale;
        let shifted = &cp.a0_hat - &cp.a1_hat * sigma;
        let s = singular_values(&shifted);
        if s.last().copied().unwrap_or(0.0) < 1e-8 * s[0] {
            continue;
        }
        let mmat = crate::linalg::solve(&shifted, &cp.a1_hat).ok_or_else(|| PencilError::Numerical("shifted companion singular".into()))?;
        let k = mmat.nrows();
        // Jordan structure at 0 of the linear pencil M − μI
        let taylor = vec![mmat, -eye(k)];
        let ks = toeplitz_kernels(&taylor, tol.rank_tol(k, 1), k)?;
        return Ok(ks.last().map(|n| n.ncols()).unwrap_or(0));
    }
    numerical("no regular shift found for the companion pencil")
}

/// Rank of the full-length derived chains against the kernel-at-infinity prediction.
pub fn basis_check(p: &MatrixPolynomial, tol: &Tolerances) -> Result<BasisReport> {
    let spec = eigenvalues(p, tol)?;
    let systems = all_canonical_systems(p, &spec, tol, false)?;
    let dc = derived_chains(&systems, p.degree());
    let mn = p.size() * p.degree();
    let stacked = crate::linalg::normalize_columns(&dc.stacked());
    let rk = if stacked.ncols() == 0 { 0 } else { rank_decision(&singular_values(&stacked), 1e-8)? };
    let predicted = companion_zero_multiplicity(p, tol)?;
    let leading_invertible = p.leading_rank(default_rank_tol(p, tol)) == p.size();
    let deficiency = mn - rk;
    Ok(BasisReport {
        columns: stacked.ncols(),
        rank: rk,
        deficiency,
        predicted_deficiency: predicted,
        leading_invertible,
        rank_claim_holds: (deficiency == 0) == leading_invertible && deficiency == predicted,
    })
}

/// Max deviation from [y_k^h, z_j^s] = −δ_{kj}δ_{h,p_j−s} for a linear pencil T − λW,
/// with [x, y] = (Wx, y) and W = −A₁. Chains at different eigenvalues are paired too.
pub fn biorthogonality_check(p: &MatrixPolynomial, systems: &[CanonicalSystem]) -> Result<f64> {
    if p.degree() != 1 {
        return validation("biorthogonality relations are checked for linear pencils");
    }
    let w = -p.coeff(1);
    let mut flat: Vec<(usize, usize, usize, &CVec, &CVec)> = Vec::new();
    // (global chain id, height, chain length, y, z)
    let mut id = 0;
    for cs in systems {
        let adj = cs.adjoint.as_ref().ok_or_else(|| PencilError::Validation("adjoint chains missing".into()))?;
        for (ch, zc) in cs.chains.iter().zip(adj) {
            for h in 0..ch.len() {
                flat.push((id, h, ch.len(), &ch[h], &zc[h]));
            }
            id += 1;
        }
    }
    let mut worst = 0.0f64;
    for &(k, h, _, y, _) in &flat {
        for &(j, s, len, _, z) in &flat {
            let val = z.dotc(&(&w * y));
            let expect = if k == j && h + s + 1 == len { -1.0 } else { 0.0 };
            worst = worst.max((val - cr(expect)).norm());
        }
    }
    Ok(worst)
}
