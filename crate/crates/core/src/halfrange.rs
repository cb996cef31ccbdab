//! Half systems E± and Y± of eigen and associated vectors, the duality census, and the
//! half-range Cauchy problem solved by superposition of elementary solutions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, PencilError, Result};
use crate::linalg::{binom, cr, factorial, fro, hermitian_eig, normalize_columns, pinv, singular_values, CMat, CVec};
use crate::pencil::{MatrixPolynomial, Tolerances};
use crate::signchar::{local_regular_system, normal_canonical_system, SignedCanonicalSystem};
use crate::spectral::{canonical_system, derived_vector, eigenvalues, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfKind {
    Eplus,
    Eminus,
    Yplus,
    Yminus,
}

impl HalfKind {
    fn upper(self) -> bool {
        matches!(self, HalfKind::Eplus | HalfKind::Yplus)
    }

    fn dual(self) -> HalfKind {
        match self {
            HalfKind::Eplus => HalfKind::Eminus,
            HalfKind::Eminus => HalfKind::Eplus,
            HalfKind::Yplus => HalfKind::Yminus,
            HalfKind::Yminus => HalfKind::Yplus,
        }
    }
}

/// One chain contributing its first `selected` vectors.
#[derive(Debug, Clone)]
pub struct SelectedChain {
    pub eigenvalue: Complex64,
    pub chain: Vec<CVec>,
    pub selected: usize,
    /// ε (E±) or δ (Y±) for real eigenvalues, 0 otherwise.
    pub sign: i8,
}

#[derive(Debug, Clone)]
pub struct HalfSystem {
    pub kind: HalfKind,
    pub chains: Vec<SelectedChain>,
    /// Traces of the selected elementary solutions, one column per selected vector.
    pub stacked: CMat,
    /// Dimension of the space the traces live in.
    pub target_dim: usize,
    /// Some nonreal eigenvalue sits within ten real-axis tolerances of the real line.
    pub unstable: bool,
}

impl HalfSystem {
    pub fn count(&self) -> usize {
        self.stacked.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityCensus {
    pub xplus: usize,
    pub xminus: usize,
    pub total: usize,
    /// n·m.
    pub expected: usize,
    /// (plus, minus) basis flags; None when the leading coefficient is singular.
    pub basis_flags: Option<(bool, bool)>,
    pub sigma_min: (f64, f64),
}

impl DualityCensus {
    pub fn identity_holds(&self) -> bool {
        self.total == self.expected
    }
}

#[derive(Debug, Clone)]
pub struct Minimality {
    pub sigma_min: f64,
    /// Rows of the pseudo-inverse of the normalized stacked matrix when it has full column rank.
    pub biorthogonal: Option<CMat>,
}

/// Smallest singular value of the column-normalized stacked matrix and, when it is safely
/// positive, the biorthogonal system.
pub fn minimality_gram(h: &HalfSystem) -> Minimality {
    minimality_of(&h.stacked, 1e-10)
}

pub fn minimality_of(stacked: &CMat, tol: f64) -> Minimality {
    if stacked.ncols() == 0 {
        return Minimality { sigma_min: f64::INFINITY, biorthogonal: Some(CMat::zeros(0, stacked.nrows())) };
    }
    let a = normalize_columns(stacked);
    let s = singular_values(&a);
    let sigma_min = if a.ncols() > a.nrows() { 0.0 } else { s.get(a.ncols() - 1).copied().unwrap_or(0.0) };
    let biorthogonal = (sigma_min > tol).then(|| pinv(&a, 1e-14));
    Minimality { sigma_min, biorthogonal }
}

/// Polynomial λ·A(λ), whose dissipativity is condition (13).
pub fn lambda_times(p: &MatrixPolynomial) -> MatrixPolynomial {
    let mut c = vec![CMat::zeros(p.size(), p.size())];
    c.extend(p.coeffs().iter().cloned());
    MatrixPolynomial::new(c).expect("same sizes")
}

fn orthobases(a: &CMat) -> Result<(CMat, CMat)> {
    let (vals, u) = hermitian_eig(a);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if vals.iter().any(|v| v.abs() <= 1e-12 * scale) {
        return validation("coefficient has a nontrivial kernel; spectral projectors are degenerate");
    }
    let pos: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.0).collect();
    let neg: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < 0.0).collect();
    let pick = |idx: &[usize]| CMat::from_fn(a.nrows(), idx.len(), |r, k| u[(r, idx[k])]);
    Ok((pick(&pos), pick(&neg)))
}

/// Signed systems at real eigenvalues: normal systems for Hermitian pencils with invertible
/// leading coefficient, regular systems otherwise. Zero is moved off the origin first.
fn real_system(p: &MatrixPolynomial, lambda: Complex64, tol: &Tolerances, hermitian: bool) -> Result<SignedCanonicalSystem> {
    let m = p.size();
    if hermitian && p.leading_rank(tol.rank_tol(m, p.degree())) == m {
        return normal_canonical_system(p, lambda, tol);
    }
    if lambda.norm() <= tol.tol_real {
        // A(μ − 1) has the same Taylor data at μ = 1 as A at 0.
        let mut s = local_regular_system(&p.shift(cr(-1.0)), cr(1.0), tol)?;
        s.system.eigenvalue = lambda;
        return Ok(s);
    }
    local_regular_system(p, lambda, tol)
}

fn floor_half(p: i64) -> i64 {
    p.div_euclid(2)
}

/// Chains of the half system before tracing.
pub fn select_chains(p: &MatrixPolynomial, spec: &Spectrum, kind: HalfKind, tol: &Tolerances) -> Result<(Vec<SelectedChain>, bool)> {
    let hermitian = p.has_hermitian_coeffs();
    let y_kind = matches!(kind, HalfKind::Yplus | HalfKind::Yminus);
    let mut out = Vec::new();
    let mut unstable = false;
    for e in &spec.finite {
        let lam = e.eigenvalue;
        if !e.is_real {
            if lam.im.abs() < 10.0 * tol.tol_real * (1.0 + lam.norm()) {
                unstable = true;
            }
            if (lam.im > 0.0) == kind.upper() {
                let cs = canonical_system(p, lam, tol)?;
                out.extend(cs.chains.into_iter().map(|chain| SelectedChain { eigenvalue: lam, selected: chain.len(), chain, sign: 0 }));
            }
            continue;
        }
        let signed = if y_kind {
            if lam.norm() <= tol.tol_real {
                return validation("zero is an eigenvalue; the Y systems need Ker A₀ = 0");
            }
            // δ = sign(λ)·ε is the sign characteristic of sign(λ)·A, which is dissipative near λ.
            local_regular_system(&p.scale(cr(lam.re.signum())), lam, tol)?
        } else {
            real_system(p, lam, tol, hermitian)?
        };
        for (chain, &s) in signed.system.chains.iter().zip(&signed.signs) {
            let pk = chain.len() as i64 - 1;
            let s_eff = if kind.upper() { s as i64 } else { -(s as i64) };
            let top = floor_half(pk + s_eff);
            out.push(SelectedChain { eigenvalue: lam, chain: chain.clone(), selected: (top + 1).max(0) as usize, sign: s });
        }
    }
    Ok((out, unstable))
}

/// Trace of the elementary solution started by vector h of a chain:
/// blocks (−i d/dz)^r V(0) for r < len, i.e. the derived vector of length `len`.
fn traces(chains: &[SelectedChain], len: usize) -> Vec<CVec> {
    let mut cols = Vec::new();
    for sc in chains {
        for h in 0..sc.selected {
            cols.push(derived_vector(sc.eigenvalue, &sc.chain, h, len));
        }
    }
    cols
}

/// Stack traces with the first block projected onto `first` and the last onto `last`
/// (orthonormal bases; None keeps the block whole).
fn project_traces(cols: &[CVec], m: usize, first: Option<&CMat>, last: Option<&CMat>) -> (CMat, usize) {
    let blocks = cols.first().map_or(0, |c| c.len() / m);
    let mut rows = 0;
    let mut layout = Vec::new();
    for b in 0..blocks {
        let basis = if b == 0 && first.is_some() {
            first
        } else if b + 1 == blocks && last.is_some() {
            last
        } else {
            None
        };
        let d = basis.map_or(m, |q| q.ncols());
        layout.push((b, basis, rows, d));
        rows += d;
    }
    let mut out = CMat::zeros(rows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        for &(b, basis, off, d) in &layout {
            let blk = col.rows(b * m, m).into_owned();
            let v = match basis {
                Some(q) => q.adjoint() * blk,
                None => blk,
            };
            out.view_mut((off, j), (d, 1)).copy_from(&v);
        }
    }
    (out, rows)
}

/// Half system of the given kind with the trace matching the order and structure:
/// E± for even n uses derived chains of length n/2; E± for odd n = 2l+1 appends P±-projected
/// l-th traces; Y± projects the zeroth trace onto the spectral subspaces Q∓ of A₀ and, for
/// even n, the l-th trace onto P± of Aₙ.
pub fn select_half(p: &MatrixPolynomial, kind: HalfKind, tol: &Tolerances) -> Result<HalfSystem> {
    let spec = eigenvalues(p, tol)?;
    select_half_with(p, &spec, kind, tol)
}

pub fn select_half_with(p: &MatrixPolynomial, spec: &Spectrum, kind: HalfKind, tol: &Tolerances) -> Result<HalfSystem> {
    let (n, m) = (p.degree(), p.size());
    let l = n / 2;
    match kind {
        HalfKind::Eplus | HalfKind::Eminus => {
            if !p.classify().is_dissipative() {
                return validation("E± systems need a dissipative (or Hermitian) pencil");
            }
        }
        HalfKind::Yplus | HalfKind::Yminus => {
            if !lambda_times(p).classify().is_dissipative() {
                return validation("Y± systems need Im(λA(λ)x,x) ≤ 0 on the real axis");
            }
        }
    }
    let (chains, unstable) = select_chains(p, spec, kind, tol)?;
    let (stacked, target_dim) = match kind {
        HalfKind::Eplus | HalfKind::Eminus if n % 2 == 0 => {
            let cols = traces(&chains, l);
            project_traces(&cols, m, None, None)
        }
        HalfKind::Eplus | HalfKind::Eminus => {
            let an = p.leading();
            if !crate::linalg::is_hermitian(an, 1e-10) {
                return validation("odd-order half systems need a Hermitian leading coefficient");
            }
            let (pp, pm) = orthobases(an)?;
            let proj = if kind.upper() { pp } else { pm };
            let cols = traces(&chains, l + 1);
            if l == 0 {
                project_traces(&cols, m, Some(&proj), None)
            } else {
                project_traces(&cols, m, None, Some(&proj))
            }
        }
        HalfKind::Yplus | HalfKind::Yminus => {
            let (qp, qm) = orthobases(p.coeff(0))?;
            let q = if kind.upper() { qm } else { qp };
            if n % 2 == 0 {
                let (pp, pm) = orthobases(p.leading())?;
                let pr = if kind.upper() { pp } else { pm };
                let cols = traces(&chains, l + 1);
                if l == 0 {
                    return validation("Y± systems need degree at least 1");
                }
                project_traces(&cols, m, Some(&q), Some(&pr))
            } else {
                let cols = traces(&chains, l + 1);
                project_traces(&cols, m, Some(&q), None)
            }
        }
    };
    let stacked = if stacked.ncols() == 0 { CMat::zeros(target_dim, 0) } else { stacked };
    Ok(HalfSystem { kind, chains, stacked, target_dim, unstable })
}

/// Odd-order E± systems (n = 2l + 1) with the P±-projected top trace.
pub fn odd_order_half(p: &MatrixPolynomial, kind: HalfKind, tol: &Tolerances) -> Result<HalfSystem> {
    if p.degree() % 2 == 0 {
        return validation("odd_order_half needs an odd degree");
    }
    select_half(p, kind, tol)
}

fn is_basis(h: &HalfSystem, tol: f64) -> (bool, f64) {
    let s = minimality_gram(h).sigma_min;
    (h.count() == h.target_dim && s > tol, s)
}

/// Counts of both halves, the identity x⁺ + x⁻ = n·m, and square-nonsingular basis flags.
pub fn duality_census(p: &MatrixPolynomial, kind: HalfKind, tol: &Tolerances) -> Result<(DualityCensus, HalfSystem, HalfSystem)> {
    let spec = eigenvalues(p, tol)?;
    let plus_kind = if kind.upper() { kind } else { kind.dual() };
    let plus = select_half_with(p, &spec, plus_kind, tol)?;
    let minus = select_half_with(p, &spec, plus_kind.dual(), tol)?;
    let (m, n) = (p.size(), p.degree());
    let invertible = p.leading_rank(tol.rank_tol(m, n)) == m;
    let (bp, sp) = is_basis(&plus, 1e-8);
    let (bm, sm) = is_basis(&minus, 1e-8);
    let census = DualityCensus {
        xplus: plus.count(),
        xminus: minus.count(),
        total: plus.count() + minus.count(),
        expected: n * m,
        basis_flags: invertible.then_some((bp, bm)),
        sigma_min: (sp, sm),
    };
    Ok((census, plus, minus))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermInfo {
    pub eigenvalue: Complex64,
    pub height: usize,
    pub coefficient: Complex64,
    pub propagating: bool,
}

#[derive(Debug, Clone)]
pub struct HalfrangeSolution {
    pub terms: Vec<TermInfo>,
    /// chains[k] for each term, truncated to height + 1.
    chains: Vec<Vec<CVec>>,
    pub coeffs: Vec<CMat>,
    /// max over the grid of ‖A(−i d/dz)u‖ relative to Σ‖A_t‖‖(−i d/dz)^t u‖.
    pub ode_residual: f64,
    pub initial_residual: f64,
    /// min Im λ over selected nonreal eigenvalues (∞ if none).
    pub decay_rate: f64,
    /// ‖u₀(z)‖·e^{γz}/(1+z)^{h_max} stays bounded by its value scale on the grid.
    pub decaying_part_ok: bool,
    pub grid: Vec<f64>,
}

impl HalfrangeSolution {
    /// (−i d/dz)^r of the selected part of the solution at z.
    pub fn derivative(&self, z: f64, r: usize, which: Part) -> CVec {
        let m = self.chains[0][0].len();
        let mut out = CVec::zeros(m);
        let iz = Complex64::new(0.0, z);
        for (t, ch) in self.terms.iter().zip(&self.chains) {
            let keep = match which {
                Part::All => true,
                Part::Propagating => t.propagating,
                Part::Decaying => !t.propagating,
            };
            if !keep {
                continue;
            }
            let lam = t.eigenvalue;
            let e = (Complex64::i() * lam * z).exp();
            let h = t.height;
            // (λ − i d/dz)^r applied to Σ_j (iz)^j/j! w^{h−j}
            let mut acc = CVec::zeros(m);
            for s in 0..=r {
                let w = binom(r, s) * 1.0;
                let lp = lam.powi((r - s) as i32) * w;
                for j in s..=h {
                    acc += &ch[h - j] * (lp * iz.powi((j - s) as i32) / factorial(j - s));
                }
            }
            out += acc * (e * t.coefficient);
        }
        out
    }

    pub fn evaluate(&self, z: f64) -> CVec {
        self.derivative(z, 0, Part::All)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    All,
    Propagating,
    Decaying,
}

/// Solve the half-range Cauchy problem A(−i d/dz)u = 0, (−i d/dz)^r u(0) = φ_r for r < n/2,
/// with u built from the elementary solutions of the chosen half system.
pub fn solve_halfrange_cauchy(p: &MatrixPolynomial, phi: &[CVec], kind: HalfKind, tol: &Tolerances) -> Result<HalfrangeSolution> {
    let (n, m) = (p.degree(), p.size());
    if n % 2 != 0 || !matches!(kind, HalfKind::Eplus | HalfKind::Eminus) {
        return validation("the Cauchy solver handles E± for even order");
    }
    let l = n / 2;
    if phi.len() != l || phi.iter().any(|v| v.len() != m) {
        return validation(format!("expected {l} initial vectors of length {m}"));
    }
    let (census, plus, minus) = duality_census(p, kind, tol)?;
    let half = if kind.upper() { plus } else { minus };
    let flag = census.basis_flags.map(|(a, b)| if kind.upper() { a } else { b });
    if flag != Some(true) {
        return Err(PencilError::Numerical(format!(
            "half system is not a basis: {}",
            serde_json::to_string(&census).unwrap_or_default()
        )));
    }
    let mut rhs = CVec::zeros(l * m);
    for (r, v) in phi.iter().enumerate() {
        rhs.rows_mut(r * m, m).copy_from(v);
    }
    let coef = half
        .stacked
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| PencilError::Numerical("stacked matrix singular".into()))?;
    let mut terms = Vec::new();
    let mut chains = Vec::new();
    let mut col = 0;
    let mut hmax = 0;
    let mut gamma = f64::INFINITY;
    for sc in &half.chains {
        for h in 0..sc.selected {
            let propagating = sc.eigenvalue.im.abs() <= tol.tol_real * (1.0 + sc.eigenvalue.norm());
            if !propagating {
                gamma = gamma.min(sc.eigenvalue.im.abs());
            }
            hmax = hmax.max(h);
            terms.push(TermInfo { eigenvalue: sc.eigenvalue, height: h, coefficient: coef[col], propagating });
            chains.push(sc.chain[..=h].to_vec());
            col += 1;
        }
    }
    let zmax = if gamma.is_finite() { (4.0 / gamma).min(10.0) } else { 10.0 };
    let grid: Vec<f64> = (0..32).map(|j| zmax * j as f64 / 31.0).collect();
    let mut sol = HalfrangeSolution {
        terms,
        chains,
        coeffs: p.coeffs().to_vec(),
        ode_residual: 0.0,
        initial_residual: 0.0,
        decay_rate: gamma,
        decaying_part_ok: true,
        grid: grid.clone(),
    };
    let mut init = 0.0f64;
    for (r, v) in phi.iter().enumerate() {
        init = init.max((sol.derivative(0.0, r, Part::All) - v).norm());
    }
    let phin = phi.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    sol.initial_residual = init / phin;
    let mut worst = 0.0f64;
    let mut d0 = 0.0f64;
    for &z in &grid {
        let mut res = CVec::zeros(m);
        let mut scale = 0.0;
        for t in 0..=n {
            let d = sol.derivative(z, t, Part::All);
            scale += fro(p.coeff(t)) * d.norm();
            res += p.coeff(t) * d;
        }
        worst = worst.max(res.norm() / scale.max(1e-300));
        if gamma.is_finite() {
            let u0 = sol.derivative(z, 0, Part::Decaying).norm() * (gamma * z).exp() / (1.0 + z).powi(hmax as i32);
            if z == 0.0 {
                d0 = u0.max(1e-300);
            }
            if u0 > 10.0 * d0 * (1.0 + hmax as f64) {
                sol.decaying_part_ok = false;
            }
        }
    }
    sol.ode_residual = worst;
    if sol.initial_residual > 1e-6 {
        return numerical(format!("initial data not reproduced (residual {:.2e})", sol.initial_residual));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{helmholtz_strip, radzievskii};
    use crate::linalg::{diag_real, eye};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn scalar_oscillator_halves() {
        let p = MatrixPolynomial::scalar(&[cr(1.0), cr(0.0), cr(1.0)]);
        let (c, plus, _) = duality_census(&p, HalfKind::Eplus, &tol()).unwrap();
        assert_eq!((c.xplus, c.xminus), (1, 1));
        assert_eq!(c.basis_flags, Some((true, true)));
        assert!((plus.chains[0].eigenvalue - Complex64::i()).norm() < 1e-10);
        let s = solve_halfrange_cauchy(&p, &[CVec::from_element(1, cr(1.0))], HalfKind::Eplus, &tol()).unwrap();
        for z in [0.0, 0.5, 2.0] {
            assert!((s.evaluate(z)[0] - cr((-z as f64).exp())).norm() < 1e-10);
        }
        assert!(s.ode_residual < 1e-12);
        assert!(s.decaying_part_ok);
    }

    #[test]
    fn two_by_two_oscillator() {
        let p = MatrixPolynomial::new(vec![eye(2), CMat::zeros(2, 2), eye(2)]).unwrap();
        let (c, _, _) = duality_census(&p, HalfKind::Eplus, &tol()).unwrap();
        assert_eq!((c.xplus, c.xminus, c.total), (2, 2, 4));
        assert_eq!(c.basis_flags, Some((true, true)));
    }

    #[test]
    fn radzievskii_not_a_basis() {
        let p = radzievskii();
        let (c, plus, _) = duality_census(&p, HalfKind::Eplus, &tol()).unwrap();
        assert_eq!(c.xplus, 2);
        assert!(c.identity_holds());
        assert!(plus.chains.iter().all(|s| s.eigenvalue.im > 0.0));
        assert!(minimality_gram(&plus).sigma_min < 1e-12);
        assert_eq!(c.basis_flags.map(|f| f.0), Some(false));
    }

    #[test]
    fn helmholtz_outgoing_wave() {
        let p = helmholtz_strip(3, 3.5);
        let (c, plus, minus) = duality_census(&p, HalfKind::Eplus, &tol()).unwrap();
        assert!(c.identity_holds());
        assert_eq!(c.basis_flags, Some((true, true)));
        let l1 = (3.5f64 * 3.5 - std::f64::consts::PI.powi(2)).sqrt();
        assert!(plus.chains.iter().any(|s| (s.eigenvalue - cr(l1)).norm() < 1e-8 && s.sign == 1));
        assert!(minus.chains.iter().any(|s| (s.eigenvalue - cr(-l1)).norm() < 1e-8 && s.sign == -1));
        let phi = vec![CVec::from_column_slice(&[cr(1.0), cr(0.0), cr(0.0)])];
        for (kind, sgn) in [(HalfKind::Eplus, 1.0), (HalfKind::Eminus, -1.0)] {
            let s = solve_halfrange_cauchy(&p, &phi, kind, &tol()).unwrap();
            let z = 1.3;
            let expect = (Complex64::i() * sgn * l1 * z).exp();
            let u = s.evaluate(z);
            assert!((u[0] - expect).norm() < 1e-9 && u[1].norm() < 1e-9);
            assert!(s.terms.iter().filter(|t| t.coefficient.norm() > 1e-12).all(|t| t.propagating));
        }
    }

    #[test]
    fn helmholtz_below_cutoff_matches_sine_series() {
        let omega = 2.0;
        let p = helmholtz_strip(4, omega);
        let phi = vec![CVec::from_column_slice(&[cr(1.0), cr(-0.5), cr(0.25), cr(2.0)])];
        let s = solve_halfrange_cauchy(&p, &phi, HalfKind::Eplus, &tol()).unwrap();
        let pi = std::f64::consts::PI;
        for z in [0.1, 0.4, 1.0] {
            let u = s.evaluate(z);
            for k in 0..4 {
                let kappa = (pi * pi * ((k + 1) * (k + 1)) as f64 - omega * omega).sqrt();
                assert!((u[k] - phi[0][k] * (-kappa * z).exp()).norm() < 1e-10);
            }
        }
        assert!(s.terms.iter().all(|t| !t.propagating));
    }

    #[test]
    fn odd_order_counts() {
        // first order λ − i: l = 0, the single eigenvalue lies in the upper half-plane
        let p = MatrixPolynomial::scalar(&[c64(0.0, -1.0), cr(1.0)]);
        let h = odd_order_half(&p, HalfKind::Eplus, &tol()).unwrap();
        assert_eq!((h.count(), h.target_dim), (1, 1));
        // cubic with A₃ > 0: (λ−i)(λ−2i)(λ+i)
        let r = [Complex64::i(), c64(0.0, 2.0), c64(0.0, -1.0)];
        let c = [-(r[0] * r[1] * r[2]), r[0] * r[1] + r[0] * r[2] + r[1] * r[2], -(r[0] + r[1] + r[2]), cr(1.0)];
        let p = MatrixPolynomial::scalar(&c);
        if p.classify().is_dissipative() {
            let (census, plus, minus) = duality_census(&p, HalfKind::Eplus, &tol()).unwrap();
            assert_eq!((plus.count(), minus.count()), (2, 1));
            assert!(census.identity_holds());
        }
        // indefinite leading coefficient diag(1, −1)
        let d = diag_real(&[1.0, -1.0]);
        let p = MatrixPolynomial::new(vec![CMat::identity(2, 2) * c64(0.0, -1.0), d]).unwrap();
        let (census, plus, minus) = duality_census(&p, HalfKind::Eplus, &tol()).unwrap();
        assert_eq!((plus.target_dim, minus.target_dim), (1, 1));
        assert!(census.identity_holds());
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn y_systems_scalar() {
        // λ² − 2iλ·0.5 + 1: (13) holds since Im a₁ ≤ 0
        let p = MatrixPolynomial::scalar(&[cr(1.0), c64(0.0, -1.0), cr(1.0)]);
        let (census, plus, minus) = duality_census(&p, HalfKind::Yplus, &tol()).unwrap();
        assert_eq!((plus.count(), plus.target_dim), (1, 1));
        assert_eq!((minus.count(), minus.target_dim), (1, 1));
        assert_eq!(census.basis_flags, Some((true, true)));
    }
}
