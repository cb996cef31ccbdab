//! Instability index of λ²F + λ(D + iG) + T, sign characteristics on the imaginary axis,
//! counting identities for linear dissipative pencils T − λW and the nonreal-eigenvalue bound
//! for Hermitian quadratics.
//!
//! Counting convention for a real eigenvalue with chains of lengths L_k and signs ε_k:
//! the chain contributes ε_k⁺ + ⌊L_k/2⌋ to the maximal W-nonnegative part of the root subspace
//! and ε_k⁻ + ⌊L_k/2⌋ to the maximal W-nonpositive part (ε_k = 0 for even L_k).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, Result};
use crate::linalg::{cr, eigvals, eye, fro, hermitian_eig, inertia, inverse, is_hermitian, smallest_right_singular, CMat, Inertia};
use crate::pencil::{MatrixPolynomial, Tolerances};
use crate::signchar::local_regular_system;
use crate::spectral::{eigenvalues, kernel_at, partial_multiplicities};

/// Relative threshold for inertia decisions on Gram matrices.
const GRAM_TOL: f64 = 1e-8;
/// Maximal allowed disagreement between the energy and metric forms.
const FORM_AGREEMENT: f64 = 1e-10;

/// One Jordan chain at a real point: length L and sign ε (0 for even L).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedChain {
    pub length: usize,
    pub sign: i8,
}

impl SignedChain {
    pub fn plus(&self) -> usize {
        (self.sign > 0) as usize + self.length / 2
    }

    pub fn minus(&self) -> usize {
        (self.sign < 0) as usize + self.length / 2
    }
}

fn sum_plus(ch: &[SignedChain]) -> usize {
    ch.iter().map(SignedChain::plus).sum()
}

fn sum_minus(ch: &[SignedChain]) -> usize {
    ch.iter().map(SignedChain::minus).sum()
}

fn check_square(name: &str, x: &CMat, m: usize) -> Result<()> {
    if x.nrows() != m || x.ncols() != m {
        return validation(format!("{name} must be {m}x{m}"));
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return validation(format!("{name} has non-finite entries"));
    }
    Ok(())
}

fn check_hermitian(name: &str, x: &CMat, m: usize) -> Result<()> {
    check_square(name, x, m)?;
    if !is_hermitian(x, 1e-12) {
        return validation(format!("{name} must be Hermitian"));
    }
    Ok(())
}

fn check_invertible(name: &str, x: &CMat) -> Result<Inertia> {
    let i = inertia(x, 1e-12);
    if i.zero > 0 {
        return validation(format!("{name} is numerically singular"));
    }
    Ok(i)
}

/// Sign rule on a Hermitian Gram matrix: −1/+1 per eigenvalue, error on a zero eigenvalue.
fn signs_of(g: &CMat, flip: bool) -> Option<Vec<i8>> {
    let (vals, _) = hermitian_eig(g);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(vals.len());
    for v in vals {
        if v.abs() <= GRAM_TOL * scale || v.abs() < 1e-14 {
            return None;
        }
        let s = if v > 0.0 { 1 } else { -1 };
        out.push(if flip { -s } else { s });
    }
    Some(out)
}

/// Sign characteristics of odd chains at a real point λ₀ of a pencil that is dissipative near λ₀.
/// `flip` negates the pencil first. Shifts so the regular-system construction sees λ₀ = 1.
fn chain_signs(p: &MatrixPolynomial, lambda0: f64, flip: bool, tol: &Tolerances) -> Result<Vec<SignedChain>> {
    let q = if flip { p.scale(cr(-1.0)) } else { p.clone() };
    let shifted = q.shift(cr(lambda0 - 1.0));
    let sys = local_regular_system(&shifted, cr(1.0), tol)?;
    Ok(sys.system.lengths().into_iter().zip(sys.signs).map(|(length, sign)| SignedChain { length, sign }).collect())
}

// ---------------------------------------------------------------------------------------------
// Quadratic instability index
// ---------------------------------------------------------------------------------------------

/// Sign data of an imaginary eigenvalue iζ of λ²F + λ(D + iG) + T.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImaginarySigns {
    pub zeta: f64,
    pub chains: Vec<SignedChain>,
    /// Eigenvalues of ζ²F + T on the kernel.
    pub energy: Vec<f64>,
    /// Eigenvalues of ζ(2ζF + G) on the kernel.
    pub metric: Vec<f64>,
    /// ‖energy Gram − metric Gram‖ relative to the Gram scale.
    pub form_gap: f64,
}

impl ImaginarySigns {
    pub fn algebraic(&self) -> usize {
        self.chains.iter().map(|c| c.length).sum()
    }

    /// Σ ε⁺ + ⌊L/2⌋ over the chains.
    pub fn plus_count(&self) -> usize {
        sum_plus(&self.chains)
    }
}

/// The pencil ζ ↦ A(iζ) = T + ζ(iD − G) − ζ²F whose real eigenvalues are the imaginary ones of A.
pub fn rotated_quadratic(f: &CMat, d: &CMat, g: &CMat, t: &CMat) -> Result<MatrixPolynomial> {
    let i = crate::linalg::I;
    MatrixPolynomial::new(vec![t.clone(), d * i - g, -f])
}

fn validate_quadratic(f: &CMat, d: &CMat, g: &CMat, t: &CMat) -> Result<(Inertia, Inertia)> {
    let m = f.nrows();
    check_hermitian("F", f, m)?;
    check_hermitian("D", d, m)?;
    check_hermitian("G", g, m)?;
    check_hermitian("T", t, m)?;
    let fi = check_invertible("F", f)?;
    let ti = check_invertible("T", t)?;
    let dmin = hermitian_eig(d).0.first().copied().unwrap_or(0.0);
    if dmin < -1e-12 * crate::linalg::spectral_norm(d).max(1.0) {
        return validation("D must be positive semidefinite");
    }
    Ok((fi, ti))
}

/// Signs of the chains at iζ. Semisimple: ε = −sign of the energy form; Jordan: regular
/// system of −sign(ζ)·A(iζ), negated, which reduces to the same rule on simple chains.
pub fn imaginary_sign_characteristics(f: &CMat, d: &CMat, g: &CMat, t: &CMat, zeta: f64, tol: &Tolerances) -> Result<ImaginarySigns> {
    validate_quadratic(f, d, g, t)?;
    let b = rotated_quadratic(f, d, g, t)?;
    let z = cr(zeta);
    let k = kernel_at(&b, z, tol)?;
    if k.ncols() == 0 {
        return validation(format!("i·{zeta} is not an eigenvalue"));
    }
    let energy = k.adjoint() * (f * cr(zeta * zeta) + t) * &k;
    let metric = k.adjoint() * ((f * cr(2.0 * zeta) + g) * cr(zeta)) * &k;
    let scale = fro(&energy).max(fro(&metric)).max(f64::MIN_POSITIVE);
    let form_gap = fro(&(&energy - &metric)) / scale;
    if form_gap > FORM_AGREEMENT {
        return numerical(format!("energy and metric forms disagree by {form_gap:.2e} at ζ = {zeta}"));
    }
    let herm = crate::linalg::herm_part(&energy);
    let ev = hermitian_eig(&herm).0;
    let mv = hermitian_eig(&crate::linalg::herm_part(&metric)).0;
    let partial = partial_multiplicities(&b, z, tol)?;
    let chains = if partial.iter().all(|&l| l == 1) {
        match signs_of(&herm, true) {
            Some(s) => s.into_iter().map(|sign| SignedChain { length: 1, sign }).collect(),
            None => return numerical(format!("energy form is degenerate at ζ = {zeta} although the eigenvalue looks semisimple")),
        }
    } else {
        let flip = zeta > 0.0;
        chain_signs(&b, zeta, flip, tol)?.into_iter().map(|c| SignedChain { length: c.length, sign: -c.sign }).collect()
    };
    Ok(ImaginarySigns { zeta, chains, energy: ev, metric: mv, form_gap })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexReport {
    /// Algebraic count of eigenvalues with Re λ > 0.
    pub kappa: usize,
    pub nu_f: usize,
    pub nu_t: usize,
    pub imaginary: Vec<ImaginarySigns>,
    /// Σ over imaginary chains of ε⁺ + ⌊L/2⌋.
    pub eps_plus: usize,
    pub formula_holds: bool,
    /// Count of Re λ > 0 from the Schur form of the monic companion matrix.
    pub oracle_kappa: usize,
    /// Eigenvalues whose real part falls in the ambiguity band.
    pub ambiguous: Vec<Complex64>,
    pub indeterminate: bool,
}

/// Real-part band: |Re λ| ≤ tol_real·(1+|λ|) is imaginary; up to ten times that is ambiguous.
fn band(re: f64, modulus: f64, tol: &Tolerances) -> std::cmp::Ordering {
    let r = re.abs() / (1.0 + modulus);
    if r <= tol.tol_real {
        std::cmp::Ordering::Equal
    } else if r <= 10.0 * tol.tol_real {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

fn oracle_kappa(f: &CMat, d: &CMat, g: &CMat, t: &CMat) -> Result<usize> {
    let m = f.nrows();
    let finv = inverse(f).ok_or_else(|| crate::error::PencilError::Validation("F is singular".into()))?;
    let mut comp = CMat::zeros(2 * m, 2 * m);
    comp.view_mut((0, m), (m, m)).copy_from(&eye(m));
    comp.view_mut((m, 0), (m, m)).copy_from(&(-&finv * t));
    comp.view_mut((m, m), (m, m)).copy_from(&(-&finv * (d + g * crate::linalg::I)));
    Ok(eigvals(&comp).iter().filter(|l| band(l.re, l.norm(), &Tolerances::default()) == std::cmp::Ordering::Greater && l.re > 0.0).count())
}

pub fn instability_index(f: &CMat, d: &CMat, g: &CMat, t: &CMat, tol: &Tolerances) -> Result<IndexReport> {
    let (fi, ti) = validate_quadratic(f, d, g, t)?;
    let b = rotated_quadratic(f, d, g, t)?;
    let spec = eigenvalues(&b, tol)?;
    let mut kappa = 0;
    let mut imaginary = Vec::new();
    let mut ambiguous = Vec::new();
    for e in &spec.finite {
        // λ = iζ, so Re λ = −Im ζ.
        let lam = crate::linalg::I * e.eigenvalue;
        if e.is_real {
            imaginary.push(imaginary_sign_characteristics(f, d, g, t, e.eigenvalue.re, tol)?);
            continue;
        }
        match band(lam.re, lam.norm(), tol) {
            std::cmp::Ordering::Greater => {
                if lam.re > 0.0 {
                    kappa += e.algebraic;
                }
            }
            _ => ambiguous.push(lam),
        }
    }
    let eps_plus: usize = imaginary.iter().map(ImaginarySigns::plus_count).sum();
    let formula_holds = kappa as i64 == (fi.neg + ti.neg) as i64 - eps_plus as i64;
    let oracle_kappa = oracle_kappa(f, d, g, t)?;
    Ok(IndexReport {
        kappa,
        nu_f: fi.neg,
        nu_t: ti.neg,
        imaginary,
        eps_plus,
        formula_holds,
        oracle_kappa,
        indeterminate: !ambiguous.is_empty(),
        ambiguous,
    })
}

// ---------------------------------------------------------------------------------------------
// Linear dissipative pencils T − λW
// ---------------------------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealPointCount {
    pub eigenvalue: f64,
    pub chains: Vec<SignedChain>,
    /// Inertia of the W-form on the root subspace.
    pub gram: Inertia,
    /// Chain counts agree with the Gram inertia (π + 0 and ν + 0).
    pub routes_agree: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PontryaginReport {
    /// Im(Tx, x) ≥ 0 certified on the anti-Hermitian part.
    pub dissipative: bool,
    pub w_inertia: Inertia,
    pub kappa_upper: usize,
    pub kappa_lower: usize,
    pub real_points: Vec<RealPointCount>,
    /// κ₊ + Σ(ε⁺ + ⌊L/2⌋) over real points.
    pub nonnegative_count: usize,
    /// κ₋ + Σ(ε⁻ + ⌊L/2⌋) over real points.
    pub nonpositive_count: usize,
    /// nonnegative_count = π(W) and nonpositive_count = ν(W).
    pub identity_holds: bool,
    /// κ₊ + Σ⌊L/2⌋ ≤ π(W).
    pub unsigned_inequality: bool,
    /// κ₊ + Σ(ε⁺ + ⌊L/2⌋) ≤ π(W).
    pub signed_inequality: bool,
    /// Some real point fell back to Gram inertia because the sign route failed.
    pub partial: bool,
}

/// Basis of the root subspace of W⁻¹T at μ of known algebraic multiplicity.
fn root_subspace(a: &CMat, mu: f64, alg: usize) -> CMat {
    let n = a.nrows();
    let shifted = a - eye(n) * cr(mu);
    let mut pw = eye(n);
    for _ in 0..alg {
        pw = &shifted * pw;
    }
    smallest_right_singular(&pw, alg).0
}

pub fn pontryagin_count_check(tlin: &CMat, w: &CMat, tol: &Tolerances) -> Result<PontryaginReport> {
    let m = w.nrows();
    check_square("T", tlin, m)?;
    check_hermitian("W", w, m)?;
    let w_inertia = check_invertible("W", w)?;
    let anti = (tlin - tlin.adjoint()) * Complex64::new(0.0, -0.5);
    let amin = hermitian_eig(&anti).0.first().copied().unwrap_or(0.0);
    let dissipative = amin >= -1e-10 * crate::linalg::spectral_norm(tlin).max(1.0);

    let p = MatrixPolynomial::new(vec![tlin.clone(), -w])?;
    let spec = eigenvalues(&p, tol)?;
    let winv = inverse(w).ok_or_else(|| crate::error::PencilError::Validation("W is singular".into()))?;
    let a = &winv * tlin;

    let (mut kappa_upper, mut kappa_lower) = (0, 0);
    let mut real_points = Vec::new();
    let mut partial = false;
    for e in &spec.finite {
        if !e.is_real {
            if e.eigenvalue.im > 0.0 {
                kappa_upper += e.algebraic;
            } else {
                kappa_lower += e.algebraic;
            }
            continue;
        }
        let mu = e.eigenvalue.re;
        let r = root_subspace(&a, mu, e.algebraic);
        let gram = inertia(&crate::linalg::herm_part(&(r.adjoint() * w * &r)), GRAM_TOL);
        // λW − T satisfies Im(A(λ)x, x) ≤ 0 on the real axis.
        let chains = match chain_signs(&p, mu, true, tol) {
            Ok(c) => c,
            Err(_) => {
                partial = true;
                gram_chains(&e.partial, &gram)
            }
        };
        let routes_agree = sum_plus(&chains) == gram.pos + gram.zero && sum_minus(&chains) == gram.neg + gram.zero;
        real_points.push(RealPointCount { eigenvalue: mu, chains, gram, routes_agree });
    }
    let plus: usize = real_points.iter().map(|r| sum_plus(&r.chains)).sum();
    let minus: usize = real_points.iter().map(|r| sum_minus(&r.chains)).sum();
    let floors: usize = real_points.iter().flat_map(|r| r.chains.iter()).map(|c| c.length / 2).sum();
    let nonnegative_count = kappa_upper + plus;
    let nonpositive_count = kappa_lower + minus;
    Ok(PontryaginReport {
        dissipative,
        w_inertia,
        kappa_upper,
        kappa_lower,
        nonnegative_count,
        nonpositive_count,
        identity_holds: nonnegative_count == w_inertia.pos && nonpositive_count == w_inertia.neg,
        unsigned_inequality: kappa_upper + floors <= w_inertia.pos,
        signed_inequality: nonnegative_count <= w_inertia.pos,
        partial,
        real_points,
    })
}

/// Assign signs to odd chains from the Gram inertia surplus when the regular system is unavailable.
fn gram_chains(partial: &[usize], gram: &Inertia) -> Vec<SignedChain> {
    let floors: usize = partial.iter().map(|l| l / 2).sum();
    let mut pos_left = (gram.pos + gram.zero).saturating_sub(floors);
    partial
        .iter()
        .map(|&length| {
            let sign = if length % 2 == 0 {
                0
            } else if pos_left > 0 {
                pos_left -= 1;
                1
            } else {
                -1
            };
            SignedChain { length, sign }
        })
        .collect()
}

// ---------------------------------------------------------------------------------------------
// Nonreal eigenvalues of Hermitian quadratics
// ---------------------------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonrealBoundReport {
    pub a: f64,
    pub b: f64,
    /// Algebraic count of nonreal eigenvalues.
    pub eta: usize,
    pub inertia_a: Inertia,
    pub inertia_b: Inertia,
    /// Σ(ε⁺ + ⌊L/2⌋) over real eigenvalues, ε the sign of (b−a)(μ−a)/(b−μ)·L′(μ) on chains.
    pub delta_plus: usize,
    /// Same with ε⁻.
    pub delta_minus: usize,
    /// π(L(b)) + ν(L(a)) − δ⁺.
    pub bound_plus: i64,
    /// π(L(a)) + ν(L(b)) − δ⁻.
    pub bound_minus: i64,
    /// η/2 ≤ both bounds.
    pub holds: bool,
    /// η/2 ≤ π(L(a)) + ν(L(b)) − δ⁺, which pairs the inertia of one side with the signs of the other.
    pub mixed_holds: bool,
}

pub fn selfadjoint_nonreal_bound(f: &CMat, d: &CMat, t: &CMat, a: f64, b: f64, tol: &Tolerances) -> Result<NonrealBoundReport> {
    let m = f.nrows();
    check_hermitian("F", f, m)?;
    check_hermitian("D", d, m)?;
    check_hermitian("T", t, m)?;
    if !(a.is_finite() && b.is_finite()) || a == b {
        return validation("a and b must be distinct finite reals");
    }
    let p = MatrixPolynomial::new(vec![t.clone(), d.clone(), f.clone()])?;
    let la = p.evaluate(cr(a));
    let lb = p.evaluate(cr(b));
    let inertia_a = inertia(&la, 1e-12);
    let inertia_b = inertia(&lb, 1e-12);
    if inertia_a.zero > 0 || inertia_b.zero > 0 {
        return validation("a and b must not be eigenvalues");
    }
    let spec = eigenvalues(&p, tol)?;
    if spec.infinite > 0 {
        return validation("F must be invertible");
    }
    let mut eta = 0;
    let (mut delta_plus, mut delta_minus) = (0, 0);
    for e in &spec.finite {
        if !e.is_real {
            eta += e.algebraic;
            continue;
        }
        let mu = e.eigenvalue.re;
        let factor = (b - a) * (mu - a) / (b - mu);
        // Hermitian pencils are dissipative; multiplying by sign(factor) carries the weight.
        let chains = if e.is_semisimple {
            let k = kernel_at(&p, cr(mu), tol)?;
            let g = crate::linalg::herm_part(&(k.adjoint() * p.derivative(1).evaluate(cr(mu)) * &k));
            match signs_of(&g, factor < 0.0) {
                Some(s) => s.into_iter().map(|sign| SignedChain { length: 1, sign }).collect(),
                None => return numerical(format!("kernel form is degenerate at {mu}")),
            }
        } else {
            chain_signs(&p, mu, factor < 0.0, tol)?
        };
        delta_plus += sum_plus(&chains);
        delta_minus += sum_minus(&chains);
    }
    let bound_plus = (inertia_b.pos + inertia_a.neg) as i64 - delta_plus as i64;
    let bound_minus = (inertia_a.pos + inertia_b.neg) as i64 - delta_minus as i64;
    let half = (eta / 2) as i64;
    let mixed = (inertia_a.pos + inertia_b.neg) as i64 - delta_plus as i64;
    Ok(NonrealBoundReport {
        a,
        b,
        eta,
        inertia_a,
        inertia_b,
        delta_plus,
        delta_minus,
        bound_plus,
        bound_minus,
        holds: half <= bound_plus && half <= bound_minus,
        mixed_holds: half <= mixed,
    })
}

/// Linearization of the Möbius-transformed pencil (ξ+1)²L((bξ+a)/(ξ+1)) as T̃ − ξW̃ with
/// W̃ = diag(L(b), −L(a)); its counting identity reproduces the bound.
pub fn mobius_linearization(f: &CMat, d: &CMat, t: &CMat, a: f64, b: f64) -> Result<(CMat, CMat)> {
    let p = MatrixPolynomial::new(vec![t.clone(), d.clone(), f.clone()])?;
    let ft = p.evaluate(cr(b));
    let tt = p.evaluate(cr(a));
    // (ξ+1)²L = ξ²L(b) + ξ(2abF + (a+b)D + 2T) + L(a).
    let dt = f * cr(2.0 * a * b) + d * cr(a + b) + t * cr(2.0);
    let z = CMat::zeros(f.nrows(), f.nrows());
    let tl = -crate::linalg::from_blocks(&[vec![dt, tt.clone()], vec![tt.clone(), z.clone()]]);
    let wl = crate::linalg::from_blocks(&[vec![ft, z.clone()], vec![z, -tt]]);
    Ok((tl, wl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{rand_hermitian, rand_hermitian_inertia, rand_pd, rng};
    use crate::linalg::diag_real;

    fn s(x: f64) -> CMat {
        diag_real(&[x])
    }

    #[test]
    fn damped_scalar_index() {
        let r = instability_index(&s(1.0), &s(1.0), &s(0.0), &s(-1.0), &Tolerances::default()).unwrap();
        assert_eq!((r.kappa, r.nu_f, r.nu_t, r.eps_plus), (1, 0, 1, 0));
        assert!(r.formula_holds && r.oracle_kappa == 1 && !r.indeterminate);
    }

    #[test]
    fn gyroscopic_scalar_signs() {
        let r = instability_index(&s(1.0), &s(0.0), &s(3.0), &s(-1.0), &Tolerances::default()).unwrap();
        assert_eq!(r.kappa, 0);
        assert_eq!(r.imaginary.len(), 2);
        let root5 = 5f64.sqrt();
        for im in &r.imaginary {
            let (expect_zeta, expect_sign, expect_energy) = if im.zeta > -1.0 {
                ((-3.0 + root5) / 2.0, 1, ((-3.0 + root5) / 2.0f64).powi(2) - 1.0)
            } else {
                ((-3.0 - root5) / 2.0, -1, ((-3.0 - root5) / 2.0f64).powi(2) - 1.0)
            };
            assert!((im.zeta - expect_zeta).abs() < 1e-10);
            assert_eq!(im.chains, vec![SignedChain { length: 1, sign: expect_sign }]);
            assert!((im.energy[0] - expect_energy).abs() < 1e-9);
        }
        assert_eq!(r.eps_plus, 1);
        assert!(r.formula_holds);
    }

    #[test]
    fn calibration_case_is_negative() {
        for zeta in [1.0, -1.0] {
            let r = imaginary_sign_characteristics(&s(1.0), &s(0.0), &s(0.0), &s(1.0), zeta, &Tolerances::default()).unwrap();
            assert_eq!(r.chains, vec![SignedChain { length: 1, sign: -1 }]);
            assert!((r.energy[0] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn imaginary_jordan_pair_counts_once() {
        // λ² + 2iλ − 1 = (λ + i)²: one chain of length 2 at ζ = −1.
        let r = instability_index(&s(1.0), &s(0.0), &s(2.0), &s(-1.0), &Tolerances::default()).unwrap();
        assert_eq!(r.imaginary.len(), 1);
        assert_eq!(r.imaginary[0].chains, vec![SignedChain { length: 2, sign: 0 }]);
        assert_eq!((r.kappa, r.eps_plus), (0, 1));
        assert!(r.formula_holds);
    }

    #[test]
    fn forms_agree_on_gyroscopic_instances() {
        let tol = Tolerances::default();
        let mut checked = 0;
        for seed in 0..100u64 {
            let mut g = rng(seed);
            let m = 1 + (seed % 3) as usize;
            let f = rand_pd(&mut g, m, 0.5);
            let t = rand_pd(&mut g, m, 0.5);
            let gy = rand_hermitian(&mut g, m) * cr(2.0);
            let z = CMat::zeros(m, m);
            let r = instability_index(&f, &z, &gy, &t, &tol).unwrap();
            assert_eq!(r.kappa, 0);
            assert_eq!(r.eps_plus, 0, "seed {seed}");
            for im in &r.imaginary {
                assert!(im.form_gap <= FORM_AGREEMENT);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn damped_stable_random() {
        for seed in 0..20u64 {
            let mut g = rng(seed);
            let f = eye(3);
            let t = rand_pd(&mut g, 3, 0.3);
            let d = rand_pd(&mut g, 3, 0.3);
            let r = instability_index(&f, &d, &CMat::zeros(3, 3), &t, &Tolerances::default()).unwrap();
            assert_eq!((r.kappa, r.eps_plus, r.oracle_kappa), (0, 0, 0));
            assert!(r.imaginary.is_empty() && r.formula_holds);
        }
    }

    #[test]
    fn singular_t_rejected() {
        let e = instability_index(&s(1.0), &s(0.0), &s(1.0), &s(0.0), &Tolerances::default());
        assert!(e.is_err());
    }

    #[test]
    fn pontryagin_two_by_two() {
        let w = diag_real(&[1.0, -1.0]);
        let t = eye(2) * crate::linalg::I;
        let r = pontryagin_count_check(&t, &w, &Tolerances::default()).unwrap();
        assert!(r.dissipative);
        assert_eq!((r.kappa_upper, r.kappa_lower), (1, 1));
        assert!(r.identity_holds);
    }

    #[test]
    fn pontryagin_hermitian_definite() {
        let mut g = rng(4);
        let w = rand_pd(&mut g, 4, 0.5);
        let t = rand_hermitian(&mut g, 4);
        let r = pontryagin_count_check(&t, &w, &Tolerances::default()).unwrap();
        assert_eq!(r.kappa_upper, 0);
        assert_eq!(r.w_inertia.neg, 0);
        assert!(r.real_points.iter().all(|p| p.chains.iter().all(|c| c.minus() == 0)));
        assert!(r.identity_holds && r.real_points.iter().all(|p| p.routes_agree));
    }

    #[test]
    fn pontryagin_jordan_blocks() {
        // Canonical Hermitian pair: W = s·flip, T = s·flip·(μI + N).
        for (len, sgn) in [(2usize, 1.0), (3, 1.0), (3, -1.0), (4, -1.0), (5, 1.0)] {
            let mut flip = CMat::zeros(len, len);
            let mut jb = eye(len) * cr(0.7);
            for i in 0..len {
                flip[(i, len - 1 - i)] = cr(sgn);
                if i + 1 < len {
                    jb[(i, i + 1)] = cr(1.0);
                }
            }
            let t = &flip * jb;
            let r = pontryagin_count_check(&t, &flip, &Tolerances::default()).unwrap();
            assert_eq!(r.real_points.len(), 1, "len {len}");
            let ch = &r.real_points[0].chains;
            assert_eq!(ch.len(), 1);
            assert_eq!(ch[0].length, len);
            let expect = if len % 2 == 1 { sgn as i8 } else { 0 };
            assert_eq!(ch[0].sign, expect, "len {len} sign {sgn}");
            assert!(r.identity_holds && r.real_points[0].routes_agree, "{r:?}");
        }
    }

    #[test]
    fn pontryagin_mixed_dissipative() {
        // Hermitian block with real spectrum ⊕ strictly dissipative block, then a congruence.
        for seed in 0..10u64 {
            let mut g = rng(100 + seed);
            let w1 = rand_hermitian_inertia(&mut g, 1, 1);
            let t1 = rand_hermitian(&mut g, 2);
            let w2 = rand_hermitian_inertia(&mut g, 1, 2);
            let t2 = rand_hermitian(&mut g, 3) + rand_pd(&mut g, 3, 0.2) * crate::linalg::I;
            let w = crate::linalg::block_diag(&[&w1, &w2]);
            let t = crate::linalg::block_diag(&[&t1, &t2]);
            let x = crate::fixtures::rand_matrix(&mut g, 5, 5) + eye(5) * cr(2.0);
            let r = pontryagin_count_check(&(x.adjoint() * t * &x), &(x.adjoint() * w * &x), &Tolerances::default()).unwrap();
            assert!(r.dissipative);
            assert!(r.identity_holds, "seed {seed}: {r:?}");
            assert!(r.signed_inequality && r.unsigned_inequality);
        }
    }

    #[test]
    fn nonreal_bound_examples() {
        let tol = Tolerances::default();
        // λ² + 1 with a = −1, b = 1.
        let r = selfadjoint_nonreal_bound(&s(1.0), &s(0.0), &s(1.0), -1.0, 1.0, &tol).unwrap();
        assert_eq!((r.eta, r.inertia_a.pos, r.inertia_b.neg), (2, 1, 0));
        assert!(r.holds && r.mixed_holds);
        // diag(λ²+1, λ²−1) with a = −2, b = 2: sharp.
        let t = diag_real(&[1.0, -1.0]);
        let r = selfadjoint_nonreal_bound(&eye(2), &CMat::zeros(2, 2), &t, -2.0, 2.0, &tol).unwrap();
        assert_eq!((r.eta, r.delta_plus, r.delta_minus), (2, 1, 1));
        assert_eq!((r.bound_plus, r.bound_minus), (1, 1));
        assert!(r.holds);
        // λ² − 1 with a = 0, b = 2: the mixed pairing fails, the matched ones hold with equality.
        let r = selfadjoint_nonreal_bound(&s(1.0), &s(0.0), &s(-1.0), 0.0, 2.0, &tol).unwrap();
        assert_eq!((r.eta, r.delta_plus, r.bound_plus, r.bound_minus), (0, 2, 0, 0));
        assert!(r.holds && !r.mixed_holds);
        assert!(selfadjoint_nonreal_bound(&s(1.0), &s(0.0), &s(-1.0), 1.0, 2.0, &tol).is_err());
    }

    #[test]
    fn nonreal_bound_matches_mobius_identity() {
        let tol = Tolerances::default();
        for seed in 0..15u64 {
            let mut g = rng(200 + seed);
            let f = rand_hermitian_inertia(&mut g, 2, 0);
            let d = rand_hermitian(&mut g, 2);
            let t = rand_hermitian_inertia(&mut g, 1, 1);
            let (a, b) = (-0.37, 0.81);
            let r = selfadjoint_nonreal_bound(&f, &d, &t, a, b, &tol).unwrap();
            assert!(r.holds, "seed {seed}: {r:?}");
            let (tl, wl) = mobius_linearization(&f, &d, &t, a, b).unwrap();
            let pc = pontryagin_count_check(&tl, &wl, &tol).unwrap();
            assert!(pc.identity_holds);
            assert_eq!(pc.kappa_upper, r.eta / 2);
            assert_eq!(pc.nonnegative_count as i64 - pc.kappa_upper as i64 - r.delta_plus as i64, 0, "seed {seed}");
        }
    }
}
