//! Right divisors A(λ) = L(λ)K(λ) from invariant graph subspaces of the monic companion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, PencilError, Result};
use crate::halfrange::{select_chains, HalfKind, SelectedChain};
use crate::io::PencilJson;
use crate::linalg::{cond, eye, herm_part, hermitian_eig, hstack, orth, CMat, CVec};
use crate::linearize::companion_monic;
use crate::pencil::{MatrixPolynomial, Tolerances};
use crate::qz::ordered_schur;
use crate::spectral::{derived_vector, eigenvalues, CanonicalSystem};

const GRAPH_COND_LIMIT: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct GraphSubspace {
    /// Orthonormal basis of the invariant subspace of Ã (mn × mk).
    pub basis: CMat,
    /// Top m(n−k) rows expressed through the bottom mk rows.
    pub k_graph: CMat,
    pub bottom_cond: f64,
    pub invariance_residual: f64,
    pub k: usize,
    /// Eigenvalues of Ã restricted to the subspace.
    pub restricted_spectrum: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct FactorizationResult {
    pub k_poly: MatrixPolynomial,
    pub l_poly: MatrixPolynomial,
    /// max‖A_j − (LK)_j‖ / max‖A_j‖.
    pub residual: f64,
    /// Remainder of the right division A ÷ K, relative.
    pub remainder: f64,
    pub divisor_spectrum: Vec<Complex64>,
    /// Largest distance between σ(K) and the selected eigenvalues after matching.
    pub spectrum_mismatch: f64,
    pub selection: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorSummary {
    pub k: PencilJson,
    pub l: PencilJson,
    pub residual: f64,
    pub remainder: f64,
    pub divisor_spectrum: Vec<Complex64>,
    pub spectrum_mismatch: f64,
    pub selection: String,
}

impl FactorizationResult {
    pub fn summary(&self) -> FactorSummary {
        FactorSummary {
            k: PencilJson::from(&self.k_poly),
            l: PencilJson::from(&self.l_poly),
            residual: self.residual,
            remainder: self.remainder,
            divisor_spectrum: self.divisor_spectrum.clone(),
            spectrum_mismatch: self.spectrum_mismatch,
            selection: self.selection.clone(),
        }
    }
}

fn a_tilde(p: &MatrixPolynomial, tol: &Tolerances) -> Result<CMat> {
    Ok(companion_monic(p, tol.rank_tol(p.size(), p.degree()))?.a_tilde)
}

/// Graph representation of an invariant subspace given by any basis.
pub fn graph_from_basis(at: &CMat, basis: &CMat, m: usize, k: usize) -> Result<GraphSubspace> {
    let nm = at.nrows();
    let q = orth(basis, 1e-10);
    if q.ncols() != m * k {
        return validation(format!("subspace has dimension {}, expected m·k = {}", q.ncols(), m * k));
    }
    let proj = &q * q.adjoint();
    let aq = at * &q;
    let invariance_residual = crate::linalg::fro(&(&aq - &proj * &aq)) / (1.0 + crate::linalg::fro(at));
    let bottom = q.rows(nm - m * k, m * k).into_owned();
    let bottom_cond = cond(&bottom);
    if !bottom_cond.is_finite() || bottom_cond > GRAPH_COND_LIMIT {
        return numerical(format!("not a graph subspace: bottom block condition {bottom_cond:.3e}"));
    }
    let inv = crate::linalg::inverse(&bottom).ok_or_else(|| PencilError::Numerical("not a graph subspace: bottom block singular".into()))?;
    let top = q.rows(0, nm - m * k).into_owned();
    let k_graph = &top * &inv;
    let restricted = q.adjoint() * at * &q;
    let restricted_spectrum = crate::linalg::eigvals(&restricted);
    Ok(GraphSubspace { basis: q, k_graph, bottom_cond, invariance_residual, k, restricted_spectrum })
}

/// Invariant subspace of Ã for the eigenvalues accepted by `select`, via ordered Schur.
pub fn invariant_subspace(p: &MatrixPolynomial, select: impl Fn(Complex64) -> bool, k: usize, tol: &Tolerances) -> Result<GraphSubspace> {
    let m = p.size();
    let at = a_tilde(p, tol)?;
    let (q, _, count) = ordered_schur(&at, select);
    if count != m * k {
        return validation(format!("selection has multiplicity {count}, expected m·k = {}", m * k));
    }
    graph_from_basis(&at, &q.columns(0, count).into_owned(), m, k)
}

fn match_spectra(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|u, v| u.1.total_cmp(&v.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Spectrum of a monic matrix polynomial through its companion matrix.
fn monic_spectrum(k: &MatrixPolynomial, tol: &Tolerances) -> Result<Vec<Complex64>> {
    Ok(crate::linalg::eigvals(&a_tilde(k, tol)?))
}

/// Divisor K(λ) = λᵏI − Σ K_j λʲ read from the graph operator, quotient L by right division.
pub fn divisor_from_subspace(p: &MatrixPolynomial, gs: &GraphSubspace, tol: &Tolerances) -> Result<FactorizationResult> {
    let (m, n, k) = (p.size(), p.degree(), gs.k);
    if k == 0 || k > n {
        return validation("divisor degree must lie in 1..=n");
    }
    let mut coeffs = vec![CMat::zeros(m, m); k + 1];
    coeffs[k] = eye(m);
    if k < n {
        // last top block row pairs λᵏy with the bottom blocks (λ^{k−1}y, …, y)
        let row = (n - k - 1) * m;
        for j in 0..k {
            let b = k - 1 - j;
            coeffs[j] = -gs.k_graph.view((row, b * m), (m, m)).into_owned();
        }
    } else {
        return validation("k = n leaves no quotient; the divisor is Aₙ⁻¹A itself");
    }
    let kp = MatrixPolynomial::new(coeffs)?;
    let (l, rem) = p.right_divide(&kp)?;
    let scale = p.max_coeff_norm().max(1e-300);
    let remainder = rem.max_coeff_norm() / scale;
    let residual = p.distance(&l.mul(&kp)?) / scale;
    let divisor_spectrum = monic_spectrum(&kp, tol)?;
    let spectrum_mismatch = match_spectra(&divisor_spectrum, &gs.restricted_spectrum);
    if residual > 1e-6 {
        return numerical(format!(
            "factorization residual {residual:.2e} (bottom block condition {:.2e}, invariance residual {:.2e})",
            gs.bottom_cond, gs.invariance_residual
        ));
    }
    Ok(FactorizationResult {
        k_poly: kp,
        l_poly: l,
        residual,
        remainder,
        divisor_spectrum,
        spectrum_mismatch,
        selection: String::new(),
    })
}

/// Factorization with the divisor carrying the eigenvalues accepted by `select`.
pub fn factor_by_selection(
    p: &MatrixPolynomial,
    select: impl Fn(Complex64) -> bool,
    k: usize,
    label: &str,
    tol: &Tolerances,
) -> Result<FactorizationResult> {
    let gs = invariant_subspace(p, select, k, tol)?;
    let mut r = divisor_from_subspace(p, &gs, tol)?;
    r.selection = label.to_string();
    Ok(r)
}

/// Sample point where the Hermitian part of A(x) is definite, which keeps 0 out of the
/// numerical range. 21 points spread over the real line by a tangent map.
pub fn condition_c_point(p: &MatrixPolynomial) -> Option<f64> {
    let r = 1.0 + p.max_coeff_norm();
    (0..21).map(|j| r * (0.49 * std::f64::consts::PI * (2.0 * j as f64 / 20.0 - 1.0)).tan()).find(|&x| {
        let h = herm_part(&p.evaluate(Complex64::new(x, 0.0)));
        let (vals, _) = hermitian_eig(&h);
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        vals.iter().all(|&v| v > 1e-10 * scale) || vals.iter().all(|&v| v < -1e-10 * scale)
    })
}

#[derive(Debug, Clone)]
pub struct HalfFactorization {
    pub result: FactorizationResult,
    pub graph: GraphSubspace,
    /// Point where condition (c) was confirmed, if any.
    pub condition_c: Option<f64>,
    /// Largest residual of the selected chains as Jordan chains of K.
    pub chain_residual: f64,
    pub chains: Vec<SelectedChain>,
}

/// Derived vector of length n reordered to the Ã convention (λⁿ⁻¹y, …, y).
fn companion_vector(lam: Complex64, chain: &[CVec], h: usize, n: usize, m: usize) -> CVec {
    let d = derived_vector(lam, chain, h, n);
    let mut out = CVec::zeros(n * m);
    for b in 0..n {
        out.rows_mut((n - 1 - b) * m, m).copy_from(&d.rows(b * m, m));
    }
    out
}

/// Divisor of degree n/2 whose root vectors are the E⁺ system (dissipative pencils)
/// or the Y⁻ system (pencils with Im(λA(λ)x,x) ≤ 0).
pub fn half_factorization(p: &MatrixPolynomial, kind: HalfKind, tol: &Tolerances) -> Result<HalfFactorization> {
    let (m, n) = (p.size(), p.degree());
    if n % 2 != 0 {
        return validation("half factorizations need even degree (odd orders with indefinite Aₙ are unsupported)");
    }
    if p.leading_rank(tol.rank_tol(m, n)) < m {
        return validation("leading coefficient must be invertible");
    }
    match kind {
        HalfKind::Eplus => {
            if !p.classify().is_dissipative() {
                return validation("pencil is not certified dissipative");
            }
        }
        HalfKind::Yminus => {
            if !crate::halfrange::lambda_times(p).classify().is_dissipative() {
                return validation("condition Im(λA(λ)x,x) ≤ 0 not certified");
            }
            for (name, a) in [("A₀", p.coeff(0)), ("Aₙ", p.leading())] {
                if hermitian_eig(a).0.first().copied().unwrap_or(0.0) <= 0.0 {
                    return validation(format!("{name} must be positive definite"));
                }
            }
        }
        _ => return validation("half factorizations use E⁺ or Y⁻"),
    }
    let l = n / 2;
    let spec = eigenvalues(p, tol)?;
    let (chains, _) = select_chains(p, &spec, kind, tol)?;
    let at = a_tilde(p, tol)?;
    let upper = kind == HalfKind::Eplus;
    let off_axis = |z: Complex64| z.im.abs() > tol.tol_real * (1.0 + z.norm()) && (z.im > 0.0) == upper;
    // nonreal part from an ordered Schur basis, real part from the selected derived chains
    let (q, _, count) = ordered_schur(&at, |z| {
        let near_real = spec.finite.iter().any(|e| e.is_real && (e.eigenvalue - z).norm() < 1e-4 * (1.0 + z.norm()));
        off_axis(z) && !near_real
    });
    let mut cols: Vec<CVec> = (0..count).map(|j| q.column(j).into_owned()).collect();
    for sc in chains.iter().filter(|s| s.eigenvalue.im == 0.0) {
        for h in 0..sc.selected {
            cols.push(companion_vector(sc.eigenvalue, &sc.chain, h, n, m));
        }
    }
    let condition_c = condition_c_point(p);
    let basis = hstack(&cols, n * m);
    let graph = graph_from_basis(&at, &basis, m, l).map_err(|e| match e {
        PencilError::Numerical(msg) => PencilError::Numerical(format!(
            "{msg}; condition (c) {}",
            if condition_c.is_some() { "holds at a sample point" } else { "unverified at all sample points" }
        )),
        other => other,
    })?;
    let mut result = divisor_from_subspace(p, &graph, tol)?;
    result.selection = format!("{kind:?}");
    let expected: Vec<Complex64> = chains.iter().flat_map(|s| std::iter::repeat_n(s.eigenvalue, s.selected)).collect();
    result.spectrum_mismatch = result.spectrum_mismatch.max(match_spectra(&result.divisor_spectrum, &expected));
    let mut chain_residual = 0.0f64;
    for sc in &chains {
        if sc.selected == 0 {
            continue;
        }
        let cs = CanonicalSystem { eigenvalue: sc.eigenvalue, chains: vec![sc.chain[..sc.selected].to_vec()], adjoint: None };
        chain_residual = chain_residual.max(cs.residual(&result.k_poly));
    }
    Ok(HalfFactorization { result, graph, condition_c, chain_residual, chains })
}

pub fn dissipative_factorization(p: &MatrixPolynomial, tol: &Tolerances) -> Result<HalfFactorization> {
    half_factorization(p, HalfKind::Eplus, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{helmholtz_strip, radzievskii, rand_matrix, rng};
    use crate::linalg::{c, cr, fro};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn scalar_square_roots() {
        let p = MatrixPolynomial::scalar(&[cr(-1.0), cr(0.0), cr(1.0)]);
        let r = factor_by_selection(&p, |z| z.re > 0.0, 1, "re>0", &tol()).unwrap();
        assert!((r.k_poly.coeff(0)[(0, 0)] - cr(-1.0)).norm() < 1e-12);
        assert!((r.l_poly.coeff(0)[(0, 0)] - cr(1.0)).norm() < 1e-12);
        assert!(r.residual < 1e-14);
        let p = MatrixPolynomial::new(vec![eye(2), CMat::zeros(2, 2), eye(2)]).unwrap();
        let r = factor_by_selection(&p, |z| z.im > 0.0, 1, "upper", &tol()).unwrap();
        assert!(fro(&(r.k_poly.coeff(0) + eye(2) * c(0.0, 1.0))) < 1e-12);
        let d = dissipative_factorization(&p, &tol()).unwrap();
        assert!(fro(&(d.result.k_poly.coeff(0) + eye(2) * c(0.0, 1.0))) < 1e-10);
    }

    #[test]
    fn radzievskii_has_no_graph() {
        let e = half_factorization(&radzievskii(), HalfKind::Eplus, &tol()).unwrap_err();
        assert!(matches!(e, PencilError::Numerical(ref s) if s.contains("graph")), "{e}");
        assert!(invariant_subspace(&radzievskii(), |z| z.im > 0.0, 1, &tol()).is_err());
    }

    #[test]
    fn solvent_of_monic_quadratic() {
        let mut r = rng(4);
        let a0 = rand_matrix(&mut r, 3, 3);
        let a1 = rand_matrix(&mut r, 3, 3);
        let p = MatrixPolynomial::new(vec![a0.clone(), a1.clone(), eye(3)]).unwrap();
        let spec = eigenvalues(&p, &tol()).unwrap().multiset();
        let mut re: Vec<f64> = spec.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let cut = 0.5 * (re[2] + re[3]);
        let f = factor_by_selection(&p, |z| z.re < cut, 1, "left", &tol()).unwrap();
        // K = λ − X with X² + A₁X + A₀ = 0
        let x = -f.k_poly.coeff(0);
        let solvent = &x * &x + &a1 * &x + &a0;
        assert!(fro(&solvent) < 1e-10 * (1.0 + fro(&a0)));
        assert!(f.spectrum_mismatch < 1e-8);
    }

    #[test]
    fn quartic_hermitian_split() {
        let p = crate::fixtures::random_hermitian(2, 4, 17);
        let spec = eigenvalues(&p, &tol()).unwrap();
        let upper = spec.multiset().iter().filter(|z| z.im > 1e-9).count();
        if upper <= 4 && spec.finite.iter().all(|e| e.is_semisimple) {
            let need = 4 - upper;
            let reals: Vec<f64> = spec.finite.iter().filter(|e| e.is_real).map(|e| e.eigenvalue.re).collect();
            if reals.len() >= need {
                let chosen: Vec<f64> = reals[..need].to_vec();
                let f = factor_by_selection(&p, |z| z.im > 1e-9 || chosen.iter().any(|r| (z.re - r).abs() < 1e-6 && z.im.abs() < 1e-6), 2, "mix", &tol())
                    .unwrap();
                assert!(f.residual < 1e-8);
            }
        }
    }

    #[test]
    fn helmholtz_divisor_spectrum() {
        let p = helmholtz_strip(3, 3.5);
        let d = dissipative_factorization(&p, &tol()).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let expect = [cr((12.25 - pi2).sqrt()), c(0.0, (4.0 * pi2 - 12.25).sqrt()), c(0.0, (9.0 * pi2 - 12.25).sqrt())];
        assert!(match_spectra(&d.result.divisor_spectrum, &expect) < 1e-8);
        assert!(d.chain_residual < 1e-8);
    }

    #[test]
    fn krein_langer_upper_spectrum() {
        let mut r = rng(9);
        let x = rand_matrix(&mut r, 3, 3);
        let cmat = &x * x.adjoint() + eye(3) * cr(0.1);
        let b = crate::linalg::herm_part(&rand_matrix(&mut r, 3, 3));
        let p = MatrixPolynomial::new(vec![eye(3), b, cmat]).unwrap();
        let d = dissipative_factorization(&p, &tol()).unwrap();
        assert!(d.condition_c.is_some());
        assert!(d.result.divisor_spectrum.iter().all(|z| z.im > -1e-8));
        assert!(d.result.residual < 1e-8);
    }
}
