//! Sign characteristics of real eigenvalues: semisimple inertia rule, normal canonical systems
//! of Hermitian pencils, regular canonical systems of dissipative pencils, group velocity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, PencilError, Result};
use crate::linalg::{cr, eye, fro, herm_part, hermitian_eig, lstsq, orth, singular_values, smallest_right_singular, CMat, CVec};
use crate::linearize::{chain_form_matrix, hermitian_companion};
use crate::pencil::{MatrixPolynomial, Tolerances};
use crate::spectral::{
    attach_adjoint, canonical_system, contour_principal_part, derived_vector, eigenvalues, kernel_at,
    keldysh_principal_part, partial_multiplicities, CanonicalSystem,
};

/// How the signs of a system were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignRoute {
    /// Inertia of the kernel form (semisimple eigenvalue).
    KernelForm,
    /// Indefinite form of the Hermitian companion on the root subspace.
    Normal,
    /// Adjoint middle elements projected modulo S⁰.
    Projection,
    /// Chain form on derived middle elements (middle elements vanish modulo S⁰).
    ChainForm,
}

#[derive(Debug, Clone)]
pub struct SignedCanonicalSystem {
    pub system: CanonicalSystem,
    /// +1/−1 for odd-length chains, 0 for even-length chains of dissipative pencils.
    pub signs: Vec<i8>,
    pub route: SignRoute,
    /// Largest violation of the defining relation after normalization.
    pub relation_residual: f64,
    /// Whether the chain-form orientation agrees with the returned signs where it is defined.
    pub chain_form_agrees: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSign {
    pub eigenvalue: Complex64,
    pub sign: i8,
    pub length: usize,
}

impl SignedCanonicalSystem {
    pub fn summary(&self) -> Vec<ChainSign> {
        self.system
            .chains
            .iter()
            .zip(&self.signs)
            .map(|(ch, &sign)| ChainSign { eigenvalue: self.system.eigenvalue, sign, length: ch.len() })
            .collect()
    }

    pub fn count(&self, sign: i8) -> usize {
        self.signs.iter().filter(|&&s| s == sign).count()
    }
}

#[derive(Debug, Clone)]
pub struct SemisimpleSigns {
    pub eigenvalue: Complex64,
    /// Kernel basis with |(A'(λ₀)w,w)| = 1 and (A'(λ₀)w_j,w_k) = 0 for j ≠ k.
    pub vectors: Vec<CVec>,
    pub signs: Vec<i8>,
    /// Eigenvalues of the kernel form in the orthonormal kernel basis.
    pub form_eigenvalues: Vec<f64>,
    /// ‖Σ ε w w* − residue‖ relative to the contour residue.
    pub residue_mismatch: f64,
}

impl SemisimpleSigns {
    pub fn residue(&self) -> CMat {
        let m = self.vectors.first().map_or(0, |v| v.len());
        let mut r = CMat::zeros(m, m);
        for (w, &e) in self.vectors.iter().zip(&self.signs) {
            r += w * w.adjoint() * cr(e as f64);
        }
        r
    }
}

fn require_real(lambda0: Complex64, tol: &Tolerances) -> Result<f64> {
    if lambda0.im.abs() > tol.tol_real * (1.0 + lambda0.norm()) {
        return validation(format!("{lambda0} is not real"));
    }
    Ok(lambda0.re)
}

/// (A'(λ₀)·,·) restricted to the span of `basis`.
pub fn kernel_form(p: &MatrixPolynomial, lambda0: Complex64, basis: &CMat) -> CMat {
    basis.adjoint() * p.derivative(1).evaluate(lambda0) * basis
}

fn residue_radius(p: &MatrixPolynomial, lambda0: Complex64, tol: &Tolerances) -> Result<f64> {
    Ok(eigenvalues(p, tol)?.isolation_radius(lambda0))
}

pub fn sign_characteristics_semisimple(p: &MatrixPolynomial, lambda0: Complex64, tol: &Tolerances) -> Result<SemisimpleSigns> {
    let c = cr(require_real(lambda0, tol)?);
    let k = kernel_at(p, c, tol)?;
    if k.ncols() == 0 {
        return validation(format!("{c} is not an eigenvalue"));
    }
    let g = kernel_form(p, c, &k);
    let scale = fro(&g).max(1e-300);
    if fro(&(&g - g.adjoint())) > 1e-8 * (1.0 + scale) {
        return validation("kernel form is not Hermitian: pencil is neither Hermitian nor dissipative near λ₀");
    }
    let (vals, u) = hermitian_eig(&g);
    let dscale = p.derivative(1).evaluate(c).norm().max(1e-300);
    if let Some(v) = vals.iter().find(|v| v.abs() < 1e-8 * dscale) {
        return numerical(format!("kernel form is degenerate (eigenvalue {v:.3e}); λ₀ is not semisimple"));
    }
    let basis = &k * &u;
    let vectors: Vec<CVec> = vals.iter().enumerate().map(|(i, v)| basis.column(i) / cr(v.abs().sqrt())).collect();
    let signs: Vec<i8> = vals.iter().map(|v| if *v > 0.0 { 1 } else { -1 }).collect();
    let mut out = SemisimpleSigns { eigenvalue: c, vectors, signs, form_eigenvalues: vals, residue_mismatch: 0.0 };
    let contour = contour_principal_part(p, c, residue_radius(p, c, tol)?, 1, 64)?;
    out.residue_mismatch = fro(&(out.residue() - &contour[0])) / (1.0 + fro(&contour[0]));
    if out.residue_mismatch > 1e-6 {
        return numerical(format!("signed kernel basis does not reproduce the residue (mismatch {:.2e})", out.residue_mismatch));
    }
    Ok(out)
}

fn mat_pow(a: &CMat, k: usize) -> CMat {
    let mut r = eye(a.nrows());
    for _ in 0..k {
        r = a * r;
    }
    r
}

/// Normal canonical system of a Hermitian pencil with invertible leading coefficient:
/// adjoint chains equal ε_k times the direct chains.
pub fn normal_canonical_system(p: &MatrixPolynomial, lambda0: Complex64, tol: &Tolerances) -> Result<SignedCanonicalSystem> {
    let p = p.hermitian_checked()?;
    let c = require_real(lambda0, tol)?;
    let (m, n) = (p.size(), p.degree());
    let mut lengths = partial_multiplicities(&p, cr(c), tol)?;
    if lengths.is_empty() {
        return validation(format!("{c} is not an eigenvalue"));
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    let alg: usize = lengths.iter().sum();
    let (b, cm) = hermitian_companion(&p, tol.rank_tol(m, n))?;
    let shifted = &cm - eye(n * m) * cr(c);
    let (v, _) = smallest_right_singular(&mat_pow(&shifted, alg), alg);
    let nil = v.adjoint() * &shifted * &v;
    let bf = herm_part(&(v.adjoint() * &b * &v));
    let form = |x: &CVec, y: &CVec| -> Complex64 { y.dotc(&(&bf * x)) };

    let mut x = eye(alg);
    let mut chains_c: Vec<Vec<CVec>> = Vec::new();
    let mut signs = Vec::new();
    for &q in &lengths {
        let nq = mat_pow(&nil, q - 1);
        let phi = herm_part(&(x.adjoint() * &bf * &nq * &x));
        let (vals, u) = hermitian_eig(&phi);
        let idx = (0..vals.len()).max_by(|&i, &j| vals[i].abs().total_cmp(&vals[j].abs())).unwrap();
        let mu = vals[idx];
        if mu.abs() < 1e-10 * fro(&bf).max(1e-300) {
            return numerical("indefinite form degenerate on the root subspace");
        }
        let eps: i8 = if mu > 0.0 { 1 } else { -1 };
        let mut top: CVec = &x * u.column(idx) / cr(mu.abs().sqrt());
        for k in (0..q.saturating_sub(1)).rev() {
            let g = form(&(mat_pow(&nil, k) * &top), &top).re;
            top -= mat_pow(&nil, q - 1 - k) * &top * cr(g / (2.0 * eps as f64));
        }
        let chain: Vec<CVec> = (0..q).map(|h| mat_pow(&nil, q - 1 - h) * &top).collect();
        let e = crate::linalg::hstack(&chain, alg);
        let rest = x.ncols() - q;
        if rest > 0 {
            let cons = e.adjoint() * &bf * &x;
            let (coef, _) = smallest_right_singular(&cons, rest);
            x = orth(&(&x * coef), 1e-10);
        } else {
            x = CMat::zeros(alg, 0);
        }
        chains_c.push(chain);
        signs.push(eps);
    }

    // Gram of the constructed basis should be blockdiag(ε Sip).
    let all: Vec<CVec> = chains_c.iter().flatten().cloned().collect();
    let e = crate::linalg::hstack(&all, alg);
    let gram = e.adjoint() * &bf * &e;
    let mut target = CMat::zeros(alg, alg);
    let mut off = 0;
    for (ch, &s) in chains_c.iter().zip(&signs) {
        let q = ch.len();
        for h in 0..q {
            target[(off + h, off + q - 1 - h)] = cr(s as f64);
        }
        off += q;
    }
    let gram_residual = fro(&(&gram - &target)) / (alg as f64).sqrt();

    let chains: Vec<Vec<CVec>> = chains_c
        .iter()
        .map(|ch| ch.iter().map(|e| (&v * e).rows(0, m).into_owned()).collect())
        .collect();
    let adjoint: Vec<Vec<CVec>> =
        chains.iter().zip(&signs).map(|(ch, &s)| ch.iter().map(|y| y * cr(s as f64)).collect()).collect();
    let q = lengths[0];
    let contour = contour_principal_part(&p, cr(c), residue_radius(&p, cr(c), tol)?, q, 64)?;
    let recon = keldysh_principal_part(&chains, &adjoint, q);
    let scale = 1.0 + contour.iter().map(fro).fold(0.0, f64::max);
    let mismatch = recon.iter().zip(&contour).map(|(a, b)| fro(&(a - b))).fold(0.0, f64::max) / scale;
    if mismatch > 1e-6 {
        return numerical(format!("normal system does not reproduce the principal part (mismatch {mismatch:.2e})"));
    }
    let system = CanonicalSystem { eigenvalue: cr(c), chains, adjoint: Some(adjoint) };
    let agrees = chain_form_orientation(&p, &system, &signs);
    Ok(SignedCanonicalSystem {
        system,
        signs,
        route: SignRoute::Normal,
        relation_residual: mismatch.max(gram_residual * 1e-3),
        chain_form_agrees: agrees,
    })
}

/// −(G w̃, w̃)/λⁿ for the derived middle element of each odd chain.
fn chain_form_gram(p: &MatrixPolynomial, lambda0: Complex64, chains: &[&Vec<CVec>]) -> CMat {
    let n = p.degree();
    let g = chain_form_matrix(p);
    let cols: Vec<CVec> = chains.iter().map(|ch| derived_vector(lambda0, ch, (ch.len() - 1) / 2, n)).collect();
    let x = crate::linalg::hstack(&cols, n * p.size());
    (x.adjoint() * g * x) * (-1.0 / lambda0.powi(n as i32))
}

fn chain_form_orientation(p: &MatrixPolynomial, cs: &CanonicalSystem, signs: &[i8]) -> Option<bool> {
    if cs.eigenvalue.norm() < 1e-12 {
        return None;
    }
    let odd: Vec<usize> = (0..cs.chains.len()).filter(|&k| cs.chains[k].len() % 2 == 1).collect();
    if odd.is_empty() {
        return None;
    }
    let refs: Vec<&Vec<CVec>> = odd.iter().map(|&k| &cs.chains[k]).collect();
    let g = chain_form_gram(p, cs.eigenvalue, &refs);
    let mut ok = true;
    let mut any = false;
    for (i, &k) in odd.iter().enumerate() {
        let v = g[(i, i)].re;
        if v.abs() > 1e-8 * (1.0 + fro(&g)) {
            any = true;
            ok &= (v > 0.0) == (signs[k] > 0);
        }
    }
    any.then_some(ok)
}

/// Recombine the chains `group` by U (direct) and U^{−*} (adjoint).
fn recombine(cs: &mut CanonicalSystem, group: &[usize], u: &CMat) -> Result<()> {
    let uinv_star = crate::linalg::inverse(u)
        .ok_or_else(|| PencilError::Numerical("singular recombination".into()))?
        .adjoint();
    let len = cs.chains[group[0]].len();
    let old_w: Vec<Vec<CVec>> = group.iter().map(|&k| cs.chains[k].clone()).collect();
    let adj = cs.adjoint.as_mut().expect("adjoint chains attached");
    let old_z: Vec<Vec<CVec>> = group.iter().map(|&k| adj[k].clone()).collect();
    for (j, &k) in group.iter().enumerate() {
        for h in 0..len {
            let mut w = CVec::zeros(old_w[0][h].len());
            let mut z = w.clone();
            for i in 0..group.len() {
                w += &old_w[i][h] * u[(i, j)];
                z += &old_z[i][h] * uinv_star[(i, j)];
            }
            cs.chains[k][h] = w;
            adj[k][h] = z;
        }
    }
    Ok(())
}

/// Regular canonical system of a dissipative pencil at a real nonzero eigenvalue.
pub fn regular_canonical_system(p: &MatrixPolynomial, lambda0: Complex64, tol: &Tolerances) -> Result<SignedCanonicalSystem> {
    if !p.classify().is_dissipative() {
        return validation("pencil is not certified dissipative");
    }
    local_regular_system(p, lambda0, tol)
}

/// As `regular_canonical_system`, trusting the caller that the pencil is dissipative near λ₀.
pub fn local_regular_system(p: &MatrixPolynomial, lambda0: Complex64, tol: &Tolerances) -> Result<SignedCanonicalSystem> {
    let c = cr(require_real(lambda0, tol)?);
    if c.norm() <= tol.tol_real {
        return validation("regular systems need λ₀ ≠ 0; shift the pencil first");
    }
    let m = p.size();
    let mut cs = canonical_system(p, c, tol)?;
    attach_adjoint(p, &mut cs, residue_radius(p, c, tol)?, tol)?;

    let mut s0: Vec<CVec> = Vec::new();
    for ch in &cs.chains {
        s0.extend(ch.iter().take(ch.len() / 2).cloned());
    }
    let q = if s0.is_empty() { CMat::zeros(m, 0) } else { orth(&crate::linalg::hstack(&s0, m), 1e-8) };
    let proj = eye(m) - &q * q.adjoint();

    let odd: Vec<usize> = (0..cs.chains.len()).filter(|&k| cs.chains[k].len() % 2 == 1).collect();
    let mut signs: Vec<i8> = vec![0; cs.chains.len()];
    if odd.is_empty() {
        let agrees = None;
        return Ok(SignedCanonicalSystem { system: cs, signs, route: SignRoute::Projection, relation_residual: 0.0, chain_form_agrees: agrees });
    }
    let middle = |cs: &CanonicalSystem, k: usize, adj: bool| -> CVec {
        let ch = if adj { &cs.adjoint.as_ref().unwrap()[k] } else { &cs.chains[k] };
        &proj * &ch[(ch.len() - 1) / 2]
    };
    let mw = crate::linalg::hstack(&odd.iter().map(|&k| middle(&cs, k, false)).collect::<Vec<_>>(), m);
    let mz = crate::linalg::hstack(&odd.iter().map(|&k| middle(&cs, k, true)).collect::<Vec<_>>(), m);
    let raw_scale = odd
        .iter()
        .map(|&k| cs.chains[k][(cs.chains[k].len() - 1) / 2].norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let smin = singular_values(&mw).get(odd.len() - 1).copied().unwrap_or(0.0);
    let projection = odd.len() <= m && smin > 1e-6 * raw_scale;

    // gram[i][j] couples odd chains i and j; the transformation law differs by route.
    let gram = if projection {
        let cmat = lstsq(&mw, &mz, 1e-12);
        let fit = fro(&(&mw * &cmat - &mz)) / (1e-300 + fro(&mz));
        if fit > 1e-6 {
            return numerical(format!("adjoint middle elements are not determined modulo S⁰ (fit {fit:.2e})"));
        }
        cmat
    } else {
        let refs: Vec<&Vec<CVec>> = odd.iter().map(|&k| &cs.chains[k]).collect();
        chain_form_gram(p, c, &refs)
    };
    let gscale = fro(&gram).max(1e-300);
    if fro(&(&gram - gram.adjoint())) > 1e-6 * gscale {
        return numerical(format!("sign form is not Hermitian (anti-Hermitian part {:.2e})", fro(&(&gram - gram.adjoint())) / gscale));
    }
    for (i, &a) in odd.iter().enumerate() {
        for (j, &b) in odd.iter().enumerate() {
            if cs.chains[a].len() != cs.chains[b].len() && gram[(i, j)].norm() > 1e-6 * gscale {
                return numerical("chains of different lengths couple in the sign form");
            }
        }
    }
    let mut lens: Vec<usize> = odd.iter().map(|&k| cs.chains[k].len()).collect();
    lens.dedup();
    for len in lens {
        let local: Vec<usize> = (0..odd.len()).filter(|&i| cs.chains[odd[i]].len() == len).collect();
        let group: Vec<usize> = local.iter().map(|&i| odd[i]).collect();
        let sub = CMat::from_fn(local.len(), local.len(), |a, b| gram[(local[a], local[b])]);
        let (vals, v) = hermitian_eig(&sub);
        if let Some(x) = vals.iter().find(|x| x.abs() < 1e-9 * gscale) {
            return numerical(format!("sign form degenerate (eigenvalue {x:.3e})"));
        }
        let d: Vec<f64> = vals.iter().map(|x| if projection { x.abs().sqrt() } else { 1.0 / x.abs().sqrt() }).collect();
        let u = &v * crate::linalg::diag_real(&d);
        recombine(&mut cs, &group, &u)?;
        for (a, &k) in group.iter().enumerate() {
            signs[k] = if vals[a] > 0.0 { 1 } else { -1 };
        }
    }

    // relation check on the recombined chains
    let mut residual = 0.0f64;
    if projection {
        for &k in &odd {
            let w = middle(&cs, k, false);
            let z = middle(&cs, k, true);
            let coef = w.dotc(&z) / cr(w.norm_squared());
            if (coef - cr(signs[k] as f64)).norm() > 1e-6 {
                return numerical(format!("projection coefficient {coef:.6} is not ±1"));
            }
            residual = residual.max((z - &w * cr(signs[k] as f64)).norm() / w.norm());
        }
    } else {
        let refs: Vec<&Vec<CVec>> = odd.iter().map(|&k| &cs.chains[k]).collect();
        let g = chain_form_gram(p, c, &refs);
        for (i, &k) in odd.iter().enumerate() {
            let coef = g[(i, i)];
            if (coef - cr(signs[k] as f64)).norm() > 1e-6 {
                return numerical(format!("chain-form coefficient {coef:.6} is not ±1"));
            }
            residual = residual.max((coef - cr(signs[k] as f64)).norm());
        }
    }
    let agrees = if projection { chain_form_orientation(p, &cs, &signs) } else { None };
    Ok(SignedCanonicalSystem {
        system: cs,
        signs,
        route: if projection { SignRoute::Projection } else { SignRoute::ChainForm },
        relation_residual: residual,
        chain_form_agrees: agrees,
    })
}

/// λ²A + λB + C − ω²R.
#[derive(Debug, Clone)]
pub struct OmegaFamily {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub r: CMat,
}

impl OmegaFamily {
    pub fn at(&self, omega: f64) -> MatrixPolynomial {
        MatrixPolynomial::new(vec![&self.c - &self.r * cr(omega * omega), self.b.clone(), self.a.clone()])
            .expect("consistent sizes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupVelocityReport {
    pub eigenvalue: f64,
    pub amplitude: Vec<Complex64>,
    /// 1/λ'(ω) = (L'(λ)w,w) / (2ω(Rw,w)).
    pub value: f64,
    /// (L'(λ)w,w).
    pub form_value: f64,
    /// 1/λ'(ω) from centred differences of the tracked eigenvalue.
    pub finite_difference: f64,
    pub signs_agree: bool,
}

pub fn group_velocity(fam: &OmegaFamily, lambda_k: f64, omega: f64, tol: &Tolerances) -> Result<GroupVelocityReport> {
    if omega <= 0.0 {
        return validation("ω must be positive");
    }
    let p = fam.at(omega);
    let lam = cr(lambda_k);
    let lengths = partial_multiplicities(&p, lam, tol)?;
    if lengths != [1] {
        return validation(format!("λ = {lambda_k} is not a simple eigenvalue at ω = {omega} (resonant)"));
    }
    let spec = eigenvalues(&p, tol)?;
    let sep = 1e3 * tol.tol_cluster;
    if spec.finite.iter().any(|e| (e.eigenvalue - lam).norm() > 1e-9 * (1.0 + lambda_k.abs()) && (e.eigenvalue - lam).norm() <= sep) {
        return validation("eigenvalue not separated from its neighbours (resonant)");
    }
    let w: CVec = kernel_at(&p, lam, tol)?.column(0).into_owned();
    let form_value = w.dotc(&(p.derivative(1).evaluate(lam) * &w)).re;
    let rw = w.dotc(&(&fam.r * &w)).re;
    let value = form_value / (2.0 * omega * rw);

    let delta = 1e-5 * omega.max(1.0);
    let track = |om: f64| -> Result<Complex64> {
        let s = eigenvalues(&fam.at(om), tol)?;
        s.finite
            .iter()
            .map(|e| e.eigenvalue)
            .min_by(|a, b| (a - lam).norm().total_cmp(&(b - lam).norm()))
            .ok_or_else(|| PencilError::Numerical("eigenvalue lost during continuation".into()))
    };
    let dl = (track(omega + delta)? - track(omega - delta)?) / (2.0 * delta);
    let finite_difference = 1.0 / dl.re;
    Ok(GroupVelocityReport {
        eigenvalue: lambda_k,
        amplitude: w.iter().copied().collect(),
        value,
        form_value,
        finite_difference,
        signs_agree: (value > 0.0) == (form_value > 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{rand_matrix, rng};
    use crate::linalg::{c, diag_real, inertia};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn simple_scalar_signs() {
        let p = MatrixPolynomial::scalar(&[cr(-1.0), cr(0.0), cr(1.0)]);
        assert_eq!(sign_characteristics_semisimple(&p, cr(1.0), &tol()).unwrap().signs, vec![1]);
        assert_eq!(sign_characteristics_semisimple(&p, cr(-1.0), &tol()).unwrap().signs, vec![-1]);
    }

    #[test]
    fn mixed_semisimple_pair() {
        let d = diag_real(&[1.0, -1.0]);
        let p = MatrixPolynomial::new(vec![-&d, CMat::zeros(2, 2), d]).unwrap();
        let s = sign_characteristics_semisimple(&p, cr(1.0), &tol()).unwrap();
        let mut e = s.signs.clone();
        e.sort();
        assert_eq!(e, vec![-1, 1]);
        assert!(s.residue_mismatch < 1e-8);
        let n = normal_canonical_system(&p, cr(1.0), &tol()).unwrap();
        assert_eq!((n.count(1), n.count(-1)), (1, 1));
    }

    #[test]
    fn kernel_inertia_basis_free() {
        let mut r = rng(11);
        let d = diag_real(&[1.0, -1.0, 2.0]);
        let p = MatrixPolynomial::new(vec![-&d, CMat::zeros(3, 3), d]).unwrap();
        let k = kernel_at(&p, cr(1.0), &tol()).unwrap();
        let u = rand_matrix(&mut r, 3, 3).qr().q();
        let i1 = inertia(&kernel_form(&p, cr(1.0), &k), 1e-10);
        let i2 = inertia(&kernel_form(&p, cr(1.0), &(&k * u)), 1e-10);
        assert_eq!(i1, i2);
        assert_eq!((i1.pos, i1.neg), (2, 1));
    }

    #[test]
    fn double_root_normal_system() {
        // (λ−1)² and −(λ−1)²
        for (s, expect) in [(1.0, 1i8), (-1.0, -1)] {
            let p = MatrixPolynomial::scalar(&[cr(s), cr(-2.0 * s), cr(s)]);
            let n = normal_canonical_system(&p, cr(1.0), &tol()).unwrap();
            assert_eq!(n.system.lengths(), vec![2]);
            assert_eq!(n.signs, vec![expect]);
            assert!(n.system.residual(&p) < 1e-8);
        }
    }

    #[test]
    fn triple_root_chain_form() {
        // (λ−1)³ and −(λ−1)³: the middle element vanishes modulo S⁰ = ℂ
        for (s, expect) in [(1.0, 1i8), (-1.0, -1)] {
            let p = MatrixPolynomial::scalar(&[cr(-s), cr(3.0 * s), cr(-3.0 * s), cr(s)]);
            let n = normal_canonical_system(&p, cr(1.0), &tol()).unwrap();
            assert_eq!(n.signs, vec![expect]);
            let r = local_regular_system(&p, cr(1.0), &tol()).unwrap();
            assert_eq!(r.route, SignRoute::ChainForm);
            assert_eq!(r.signs, vec![expect]);
        }
    }

    #[test]
    fn regular_matches_normal_on_hermitian() {
        for seed in 0..10 {
            let p = crate::fixtures::random_hermitian(3, 2, 100 + seed);
            let spec = eigenvalues(&p, &tol()).unwrap();
            for e in spec.finite.iter().filter(|e| e.is_real && e.eigenvalue.norm() > 1e-6) {
                let n = normal_canonical_system(&p, e.eigenvalue, &tol()).unwrap();
                let r = regular_canonical_system(&p, e.eigenvalue, &tol());
                let s = sign_characteristics_semisimple(&p, e.eigenvalue, &tol()).unwrap();
                let (mut a, mut b) = (n.signs.clone(), s.signs.clone());
                a.sort();
                b.sort();
                assert_eq!(a, b);
                if let Ok(r) = r {
                    assert_eq!(r.signs, n.signs, "seed {seed}");
                    assert_ne!(r.chain_form_agrees, Some(false));
                }
            }
        }
    }

    #[test]
    fn even_chain_has_no_sign() {
        // I − P₀ − iCλ² shifted to a nonzero eigenvalue: resolvent i(·,e₀)e₀/λ² at the origin
        let a0 = diag_real(&[0.0, 1.0]);
        let a2 = diag_real(&[1.0, 2.0]) * c(0.0, -1.0);
        let p = MatrixPolynomial::new(vec![a0, CMat::zeros(2, 2), a2]).unwrap().shift(cr(-0.5));
        let r = regular_canonical_system(&p, cr(0.5), &tol()).unwrap();
        assert_eq!(r.system.lengths(), vec![2]);
        assert_eq!(r.signs, vec![0]);
    }

    #[test]
    fn helmholtz_group_velocity() {
        let pi2 = std::f64::consts::PI.powi(2);
        let fam = OmegaFamily {
            a: eye(1),
            b: CMat::zeros(1, 1),
            c: CMat::from_element(1, 1, cr(pi2)),
            r: eye(1),
        };
        let omega = 3.5;
        let lam = (omega * omega - pi2).sqrt();
        let g = group_velocity(&fam, lam, omega, &tol()).unwrap();
        assert!((g.value - lam / omega).abs() < 1e-10);
        assert!((g.value - 0.441).abs() < 1e-3);
        assert!((g.finite_difference - g.value).abs() < 1e-6);
        assert!(g.signs_agree);
        let s = sign_characteristics_semisimple(&fam.at(omega), cr(lam), &tol()).unwrap();
        assert_eq!(s.signs, vec![1]);
        let s = sign_characteristics_semisimple(&fam.at(omega), cr(-lam), &tol()).unwrap();
        assert_eq!(s.signs, vec![-1]);
    }
}
