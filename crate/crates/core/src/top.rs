//! Linear stability of a heavy top with a fluid-filled cavity.
//!
//! State u = (z, w, v): Poisson vector, shell angular velocity, fluid velocity. The fluid is a
//! Galerkin surrogate of dimension m_f (Stokes matrix R, gyroscopic G_f, coupling B: ℂ³ → ℂ^{m_f}).
//! The evolution is W u̇ = iωM u; after the congruence S the generator T = J⁻¹L is J-dissipative.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, PencilError, Result};
use crate::fixtures::rng;
use crate::linalg::{
    c, cr, diag_real, eigvals, eye, fro, herm_part, hermitian_eig, inertia, inverse, is_hermitian, nullspace, zeros,
    CMat, Inertia, I,
};
use crate::pencil::{MatrixPolynomial, Tolerances};
use crate::qz::qz;
use crate::spectral::partial_multiplicities;

/// iHx = [x, e₀].
pub fn gyro_h() -> CMat {
    let mut h = zeros(3, 3);
    h[(1, 2)] = -I;
    h[(2, 1)] = I;
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidSurrogate {
    /// Stokes matrix, Hermitian positive definite.
    pub r: CMat,
    /// Gyroscopic part, Hermitian.
    pub g: CMat,
    /// m_f × 3 coupling.
    pub b: CMat,
}

impl FluidSurrogate {
    /// R = diag((3π²j)^{2/3}), G_f = 0, real B with entries coupling·u/√(m·j), u uniform in [−1, 1].
    pub fn synthetic(m: usize, coupling: f64, seed: u64) -> Self {
        let mut r = rng(seed);
        let rv: Vec<f64> = (1..=m).map(|j| (3.0 * PI * PI * j as f64).powf(2.0 / 3.0)).collect();
        let b = CMat::from_fn(m, 3, |j, _| cr(coupling * r.random_range(-1.0..1.0) / ((m * (j + 1)) as f64).sqrt()));
        FluidSurrogate { r: diag_real(&rv), g: zeros(m, m), b }
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopConfig {
    /// Principal moments a₀, a₁, a₂ of the body with frozen fluid; e₀ is the spin axis.
    pub a: [f64; 3],
    /// Gravity constant k = glm.
    pub kg: f64,
    pub omega: f64,
    pub nu: f64,
    pub fluid: FluidSurrogate,
}

impl TopConfig {
    pub fn new(a: [f64; 3], kg: f64, omega: f64, nu: f64, fluid: FluidSurrogate) -> Result<Self> {
        let cfg = TopConfig { a, kg, omega, nu, fluid };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return validation("principal moments must be positive");
        }
        if !(self.kg.is_finite() && self.kg >= 0.0) {
            return validation("gravity constant must be nonnegative");
        }
        // D = G_f + i(ν/ω)R is dissipative only for ν/ω > 0; reverse the frame for negative spin
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return validation("spin ω must be positive");
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return validation("viscosity must be positive");
        }
        let f = &self.fluid;
        let m = f.dim();
        if f.r.shape() != (m, m) || f.g.shape() != (m, m) || f.b.shape() != (m, 3) {
            return validation("fluid matrices have inconsistent shapes (R, G: m×m, B: m×3)");
        }
        if !is_hermitian(&f.r, 1e-12) || !is_hermitian(&f.g, 1e-12) {
            return validation("fluid R and G must be Hermitian");
        }
        if m > 0 && hermitian_eig(&f.r).0[0] <= 0.0 {
            return validation("Stokes matrix R must be positive definite");
        }
        let shell = self.a_mat() - f.b.adjoint() * &f.b;
        if hermitian_eig(&herm_part(&shell)).0[0] <= 0.0 {
            return validation("A − B*B must be positive definite (the shell has positive inertia)");
        }
        Ok(())
    }

    pub fn a_mat(&self) -> CMat {
        diag_real(&self.a)
    }

    pub fn n1(&self) -> f64 {
        self.a[0] - self.a[1] - self.kg / (self.omega * self.omega)
    }

    pub fn n2(&self) -> f64 {
        self.a[0] - self.a[2] - self.kg / (self.omega * self.omega)
    }

    pub fn n_mat(&self) -> CMat {
        diag_real(&[1.0, self.n1(), self.n2()])
    }

    pub fn pi_minus_n(&self) -> usize {
        [self.n1(), self.n2()].iter().filter(|&&x| x < 0.0).count()
    }

    /// D = G_f + i(ν/ω)R.
    pub fn d_mat(&self) -> CMat {
        &self.fluid.g + &self.fluid.r * c(0.0, self.nu / self.omega)
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        TopConfig { omega, ..self.clone() }
    }

    pub fn with_nu(&self, nu: f64) -> Self {
        TopConfig { nu, ..self.clone() }
    }

    fn size(&self) -> usize {
        6 + self.fluid.dim()
    }
}

/// Block matrix with row heights taken from the first column and widths from the first row.
fn grid(rows: &[&[&CMat]]) -> CMat {
    let heights: Vec<usize> = rows.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = rows[0].iter().map(|b| b.ncols()).collect();
    let mut out = zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (row, h) in rows.iter().zip(&heights) {
        let mut c0 = 0;
        for (b, w) in row.iter().zip(&widths) {
            out.view_mut((r0, c0), (*h, *w)).copy_from(*b);
            c0 += w;
        }
        r0 += h;
    }
    out
}

fn grid3(rows: [[&CMat; 3]; 3]) -> CMat {
    grid(&[&rows[0], &rows[1], &rows[2]])
}

/// W and M of W u̇ = iωM u. Defined for any N, including the singular crossing case.
pub fn evolution_pair(cfg: &TopConfig) -> (CMat, CMat) {
    let m = cfg.fluid.dim();
    let (h, a, b) = (gyro_h(), cfg.a_mat(), &cfg.fluid.b);
    let (z33, z3m, zm3) = (zeros(3, 3), zeros(3, m), zeros(m, 3));
    let w = grid3([[&eye(3), &z33, &z3m], [&z33, &a, &b.adjoint()], [&zm3, b, &eye(m)]]);
    let om = cfg.omega;
    let mm = grid3([
        [&h, &(&h * cr(-1.0 / om)), &z3m],
        [&(&h * cr(cfg.kg / om)), &(&h * (&a - eye(3) * cr(cfg.a[0]))), &(&h * b.adjoint())],
        [&zm3, &zm3, &cfg.d_mat()],
    ]);
    (w, mm)
}

#[derive(Debug, Clone)]
pub struct TopMatrices {
    pub w: CMat,
    pub m: CMat,
    pub s: CMat,
    pub j: CMat,
    pub l: CMat,
    pub n: CMat,
    /// max |S·W − J| and |S·M − L| against the closed-form blocks, relative to the scale.
    pub product_gap: f64,
    pub w_min_eig: f64,
    pub j_inertia: Inertia,
}

impl TopMatrices {
    pub fn t(&self) -> Result<CMat> {
        inverse(&self.j).map(|ji| ji * &self.l).ok_or_else(|| PencilError::Numerical("J is singular".into()))
    }
}

const N_SINGULAR: f64 = 1e-12;

pub fn build_matrices(cfg: &TopConfig) -> Result<TopMatrices> {
    cfg.validate()?;
    if cfg.n1().abs() <= N_SINGULAR || cfg.n2().abs() <= N_SINGULAR {
        return validation("N is singular (n₁n₂ = 0); use critical_crossing for this spin");
    }
    let m = cfg.fluid.dim();
    let (w, mm) = evolution_pair(cfg);
    let (h, a, b, n) = (gyro_h(), cfg.a_mat(), cfg.fluid.b.clone(), cfg.n_mat());
    let (om, kg, a0) = (cfg.omega, cfg.kg, cfg.a[0]);
    let (z3m, zm3) = (zeros(3, m), zeros(m, 3));
    let s = grid3([
        [&((&a + &n) * cr(om * om)), &(eye(3) * cr(-om)), &z3m],
        [&(&a * cr(-om)), &eye(3), &z3m],
        [&(&b * cr(-om)), &zm3, &eye(m)],
    ]);
    // closed forms of S·W and S·M
    let bs = b.adjoint();
    let j = grid3([
        [&((&a + &n) * cr(om * om)), &(&a * cr(-om)), &(&bs * cr(-om))],
        [&(&a * cr(-om)), &a, &bs],
        [&(&b * cr(-om)), &b, &eye(m)],
    ]);
    let cross = &h * cr(kg / om) - &h * &a * cr(om);
    let l = grid3([
        [&(&h * cr(om * om * a0 - 2.0 * kg)), &cross, &(&h * &bs * cr(-om))],
        [&cross.adjoint(), &(&a * &h + &h * &a - &h * cr(a0)), &(&h * &bs)],
        [&(&b * &h * cr(-om)), &(&b * &h), &cfg.d_mat()],
    ]);
    let scale = fro(&j).max(fro(&l)).max(1.0);
    let gap = fro(&(&s * &w - &j)).max(fro(&(&s * &mm - &l))) / scale;
    if gap > 1e-12 {
        return numerical(format!("S·W / S·M differ from the closed-form J, L by {gap:.2e}"));
    }
    let w_min = hermitian_eig(&w).0[0];
    let j_inertia = inertia(&j, 1e-12);
    Ok(TopMatrices { w, m: mm, s, j, l, n, product_gap: gap, w_min_eig: w_min, j_inertia })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub pi_minus_n: usize,
    pub pi_minus_j: usize,
    pub w_positive: bool,
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvalues of T with Im λ < 0 (QZ on λJ − L).
    pub lower_count: usize,
    /// Same count from the Schur form of J⁻¹L.
    pub oracle_lower_count: usize,
    pub kernel_dim: usize,
    /// Eigenvalues of the J-Gram matrix of the orthonormalized kernel basis.
    pub kernel_gram: Vec<f64>,
    /// Distance of Ker T from span{(e₀,0,0), (0,e₀,0)}.
    pub kernel_distance: f64,
    pub kernel_partial: Vec<usize>,
    pub kernel_as_predicted: bool,
    /// Nonzero eigenvalues inside the real-axis band.
    pub real_flags: Vec<Complex64>,
    /// max over λ of dist(−λ̄, σ(T))/(1 + |λ|).
    pub symmetry_gap: f64,
    /// Half-strip |Re λ| ≤ c₀, Im λ ≥ −c₁ from the numerical range of T in the |J| metric.
    pub strip: (f64, f64),
    pub strip_holds: bool,
    pub counts_hold: bool,
}

fn band(z: Complex64, tol: f64) -> bool {
    z.im.abs() <= tol * (1.0 + z.norm())
}

fn lower(z: Complex64, tol: f64) -> bool {
    z.im < 0.0 && !band(z, tol)
}

pub fn symmetry_gap(ev: &[Complex64]) -> f64 {
    ev.iter()
        .map(|l| {
            let t = -l.conj();
            ev.iter().map(|m| (m - t).norm()).fold(f64::INFINITY, f64::min) / (1.0 + l.norm())
        })
        .fold(0.0, f64::max)
}

/// Bounds of the numerical range of T in the inner product (|J|·,·).
fn strip_bounds(j: &CMat, t: &CMat) -> (f64, f64) {
    let (vals, u) = hermitian_eig(j);
    let half = |p: f64| {
        let d = diag_real(&vals.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>());
        &u * d * u.adjoint()
    };
    let k = half(0.5) * t * half(-0.5);
    let re = hermitian_eig(&herm_part(&k)).0;
    let im = hermitian_eig(&((&k - k.adjoint()) * c(0.0, -0.5))).0;
    let c0 = re.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (c0, (-im[0]).max(0.0))
}

pub fn stability_report(cfg: &TopConfig, tol: &Tolerances) -> Result<StabilityReport> {
    let mats = build_matrices(cfg)?;
    let t = mats.t()?;
    let gs = qz(&mats.l, &mats.j)?;
    let eigenvalues: Vec<Complex64> = gs.pairs().into_iter().map(|(a, b)| a / b).collect();
    let oracle = eigvals(&t);
    let lower_count = eigenvalues.iter().filter(|z| lower(**z, tol.tol_real)).count();
    let oracle_lower_count = oracle.iter().filter(|z| lower(**z, tol.tol_real)).count();

    let n = cfg.size();
    let kernel = nullspace(&mats.l, tol.rank_tol(n, 1).max(1e-10))?;
    let kernel_dim = kernel.ncols();
    let mut pred = zeros(n, 2);
    pred[(0, 0)] = cr(1.0);
    pred[(3, 1)] = cr(1.0);
    let kernel_distance = fro(&(&kernel - &pred * (pred.adjoint() * &kernel)));
    let kernel_gram = hermitian_eig(&herm_part(&(kernel.adjoint() * &mats.j * &kernel))).0;
    let pencil = MatrixPolynomial::new(vec![-mats.l.clone(), mats.j.clone()])?;
    let kernel_partial = partial_multiplicities(&pencil, cr(0.0), tol)?;
    let kernel_as_predicted = kernel_dim == 2
        && kernel_distance < 1e-8
        && kernel_gram.iter().all(|&g| g > 0.0)
        && kernel_partial == vec![1, 1];

    let zero_band = 1e-9 * (1.0 + fro(&t));
    let real_flags: Vec<Complex64> =
        eigenvalues.iter().copied().filter(|z| band(*z, tol.tol_real) && z.norm() > zero_band).collect();
    let strip = strip_bounds(&mats.j, &t);
    let slack = 1e-9 * (1.0 + strip.0.max(strip.1));
    let strip_holds = eigenvalues.iter().all(|z| z.re.abs() <= strip.0 + slack && z.im >= -strip.1 - slack);
    let pi_minus_n = cfg.pi_minus_n();
    Ok(StabilityReport {
        pi_minus_n,
        pi_minus_j: mats.j_inertia.neg,
        w_positive: mats.w_min_eig > 0.0,
        symmetry_gap: symmetry_gap(&eigenvalues),
        counts_hold: lower_count == pi_minus_n && oracle_lower_count == pi_minus_n && kernel_as_predicted,
        eigenvalues,
        lower_count,
        oracle_lower_count,
        kernel_dim,
        kernel_gram,
        kernel_distance,
        kernel_partial,
        kernel_as_predicted,
        real_flags,
        strip,
        strip_holds,
    })
}

/// Rigid part V(λ) = λW⁽ˢ⁾ − M⁽ˢ⁾: the projection of the evolution pair onto ℂ³ × ℂ³.
pub fn rigid_pencil(cfg: &TopConfig) -> (CMat, CMat) {
    let (w, m) = evolution_pair(cfg);
    (w.view((0, 0), (6, 6)).into_owned(), m.view((0, 0), (6, 6)).into_owned())
}

/// Nonzero eigenvalues of the rigid pencil.
pub fn rigid_eigenvalues(cfg: &TopConfig) -> Result<Vec<Complex64>> {
    let (ws, ms) = rigid_pencil(cfg);
    let gs = qz(&ms, &ws)?;
    Ok(gs.pairs().into_iter().map(|(a, b)| a / b).filter(|z| z.norm() > 1e-10).collect())
}

/// Nonzero eigenvalues of λ[[A, B*], [B, I]] − i·diag(0, R).
pub fn fluid_eigenvalues(cfg: &TopConfig) -> Result<Vec<Complex64>> {
    let m = cfg.fluid.dim();
    let b = &cfg.fluid.b;
    let f1 = grid(&[&[&cfg.a_mat(), &b.adjoint()], &[b, &eye(m)]]);
    let f0 = crate::linalg::block_diag(&[&zeros(3, 3), &(&cfg.fluid.r * I)]);
    let gs = qz(&f0, &f1)?;
    let scale = 1e-10 * fro(&cfg.fluid.r).max(1.0);
    Ok(gs.pairs().into_iter().map(|(a, b)| a / b).filter(|z| z.norm() > scale).collect())
}

/// Eigenvalues of T = W⁻¹M (equal to those of λJ − L whenever N is invertible).
pub fn evolution_eigenvalues(cfg: &TopConfig) -> Result<Vec<Complex64>> {
    let (w, m) = evolution_pair(cfg);
    let gs = qz(&m, &w)?;
    Ok(gs.pairs().into_iter().map(|(a, b)| a / b).collect())
}

fn nearest(ev: &[Complex64], target: Complex64) -> Complex64 {
    *ev.iter().min_by(|x, y| (*x - target).norm().total_cmp(&(*y - target).norm())).expect("nonempty spectrum")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopePoint {
    pub nu: f64,
    pub mu: f64,
    pub lambda: Complex64,
    /// (λ − λ₀)/(iμ).
    pub ratio: Complex64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeReport {
    pub lambda0: f64,
    /// (J⁽ˢ⁾h₀, h₀) for the normalized rigid eigenvector.
    pub energy: f64,
    /// λ₀²(B*R⁻¹Bw₀, w₀)/(J⁽ˢ⁾h₀, h₀).
    pub c_closed: f64,
    /// The same expression with an extra factor ω.
    pub c_with_omega: f64,
    pub points: Vec<SlopePoint>,
    /// Intercept of ratio ≈ c + d·μ^{1/2} over the points with μ ≤ 1e-3 whose shift clears rounding.
    pub c_fit: f64,
    pub rel_err: f64,
    pub rel_err_with_omega: f64,
}

/// Small-μ slope of the eigenvalue of T near each simple real positive eigenvalue of the rigid pencil.
pub fn real_eigenvalue_slopes(cfg: &TopConfig, nus: &[f64]) -> Result<Vec<SlopeReport>> {
    let (ws, ms) = rigid_pencil(cfg);
    let rigid = rigid_eigenvalues(cfg)?;
    let js = build_matrices(cfg)?.j.view((0, 0), (6, 6)).into_owned();
    let rinv = inverse(&cfg.fluid.r).ok_or_else(|| PencilError::Numerical("R is singular".into()))?;
    let bb = cfg.fluid.b.adjoint() * rinv * &cfg.fluid.b;
    let mut out = Vec::new();
    for l0 in rigid.iter().filter(|z| z.im.abs() < 1e-9 * (1.0 + z.norm()) && z.re > 0.0) {
        let l0 = l0.re;
        if rigid.iter().filter(|z| (*z - cr(l0)).norm() < 1e-6 * (1.0 + l0)).count() != 1 {
            continue;
        }
        let kernel = nullspace(&(&ws * cr(l0) - &ms), 1e-10)?;
        if kernel.ncols() != 1 {
            return numerical("rigid eigenvector is not unique");
        }
        let h0 = kernel.column(0).into_owned();
        let w0 = h0.rows(3, 3).into_owned();
        let q = (w0.adjoint() * &bb * &w0)[(0, 0)].re;
        let energy = (h0.adjoint() * &js * &h0)[(0, 0)].re;
        let c_closed = l0 * l0 * q / energy;
        let c_with_omega = cfg.omega * c_closed;
        let mut points = Vec::new();
        let mut usable = Vec::new();
        for &nu in nus {
            let c = cfg.with_nu(nu);
            let (w, m) = evolution_pair(&c);
            let ev = evolution_eigenvalues(&c)?;
            let mu = cfg.omega / nu;
            let lam = nearest(&ev, cr(l0));
            // QZ resolves shifts only above its backward error ε‖(W, M)‖
            usable.push(mu <= 1e-3 && (lam - l0).norm() > 100.0 * f64::EPSILON * fro(&w).max(fro(&m)));
            points.push(SlopePoint { nu, mu, lambda: lam, ratio: (lam - l0) / (I * mu) });
        }
        let fit: Vec<&SlopePoint> = points.iter().zip(&usable).filter(|(_, u)| **u).map(|(p, _)| p).collect();
        let c_fit = fit_intercept(&fit.iter().map(|p| (p.mu.sqrt(), p.ratio.re)).collect::<Vec<_>>());
        out.push(SlopeReport {
            lambda0: l0,
            energy,
            c_closed,
            c_with_omega,
            rel_err: (c_fit - c_closed).abs() / c_closed.abs(),
            rel_err_with_omega: (c_fit - c_with_omega).abs() / c_with_omega.abs(),
            points,
            c_fit,
        });
    }
    Ok(out)
}

/// Least-squares intercept of y ≈ a + b·x; the plain mean below three points.
fn fit_intercept(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 3 {
        return pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 * p.0, b + p.0 * p.1));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (sy - slope * sx) / n
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub points: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub nus: Vec<f64>,
    pub branches: Vec<Branch>,
    /// (sweep index, branch, branch) for eigenvalues that nearly coincide.
    pub collisions: Vec<(usize, usize, usize)>,
    pub rigid: Vec<Complex64>,
    /// Per ν: max distance from a nonzero rigid eigenvalue to σ(T).
    pub rigid_errors: Vec<f64>,
    /// Log-log slope of rigid_errors against ν.
    pub rigid_rate: f64,
    pub fluid: Vec<Complex64>,
    /// Per ν: max relative distance from λ⁽ᶠ⁾ to σ(T)·ω/ν.
    pub divergent_errors: Vec<f64>,
    pub slopes: Vec<SlopeReport>,
}

/// Spectra of T across a viscosity list with nearest-neighbour continuation.
pub fn viscosity_sweep(cfg: &TopConfig, nus: &[f64]) -> Result<SweepReport> {
    if nus.is_empty() || nus.iter().any(|x| !(x.is_finite() && *x > 0.0)) || nus.windows(2).any(|w| w[0] >= w[1]) {
        return validation("viscosity list must be positive and strictly increasing");
    }
    let rigid = rigid_eigenvalues(cfg)?;
    let fluid = fluid_eigenvalues(cfg)?;
    let mut spectra = Vec::with_capacity(nus.len());
    for &nu in nus {
        spectra.push(evolution_eigenvalues(&cfg.with_nu(nu))?);
    }
    let mut branches: Vec<Branch> =
        spectra[0].iter().enumerate().map(|(id, z)| Branch { id, points: vec![*z] }).collect();
    let mut collisions = Vec::new();
    let bound = 10.0 * rigid.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    for k in 1..nus.len() {
        let preds: Vec<Complex64> = branches
            .iter()
            .map(|b| {
                let last = b.points[k - 1];
                if k >= 2 {
                    let prev = b.points[k - 2];
                    last + (last - prev) * ((nus[k] - nus[k - 1]) / (nus[k - 1] - nus[k - 2]))
                } else if last.norm() > bound {
                    last * (nus[k] / nus[k - 1])
                } else {
                    last
                }
            })
            .collect();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (bi, p) in preds.iter().enumerate() {
            for (ei, e) in spectra[k].iter().enumerate() {
                pairs.push(((e - p).norm() / (1.0 + p.norm()), bi, ei));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut used_b = vec![false; branches.len()];
        let mut used_e = vec![false; branches.len()];
        let mut next = vec![cr(0.0); branches.len()];
        for (_, bi, ei) in pairs {
            if !used_b[bi] && !used_e[ei] {
                used_b[bi] = true;
                used_e[ei] = true;
                next[bi] = spectra[k][ei];
            }
        }
        for (bi, z) in next.into_iter().enumerate() {
            branches[bi].points.push(z);
        }
        for a in 0..branches.len() {
            for b in a + 1..branches.len() {
                let (za, zb) = (branches[a].points[k], branches[b].points[k]);
                if (za - zb).norm() <= 1e-6 * (1.0 + za.norm()) && za.norm() > 1e-8 {
                    collisions.push((k, a, b));
                }
            }
        }
    }
    let rigid_errors: Vec<f64> = spectra
        .iter()
        .map(|ev| rigid.iter().map(|r| (nearest(ev, *r) - r).norm()).fold(0.0, f64::max))
        .collect();
    let divergent_errors: Vec<f64> = spectra
        .iter()
        .zip(nus)
        .map(|(ev, nu)| {
            let scaled: Vec<Complex64> = ev.iter().map(|z| z * (cfg.omega / nu)).collect();
            fluid.iter().map(|f| (nearest(&scaled, *f) - f).norm() / f.norm()).fold(0.0, f64::max)
        })
        .collect();
    // rate from the points clear of the QZ backward error ε‖M(ν)‖
    let rate_pts: Vec<(f64, f64)> = nus
        .iter()
        .zip(&rigid_errors)
        .filter(|(nu, e)| **e > 1e3 * f64::EPSILON * fro(&evolution_pair(&cfg.with_nu(**nu)).1))
        .map(|(n, e)| (n.ln(), e.ln()))
        .collect();
    let rigid_rate = log_slope(&rate_pts);
    let slopes = real_eigenvalue_slopes(cfg, nus)?;
    Ok(SweepReport {
        nus: nus.to_vec(),
        branches,
        collisions,
        rigid,
        rigid_errors,
        rigid_rate,
        fluid,
        divergent_errors,
        slopes,
    })
}

fn log_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 * p.0, b + p.0 * p.1));
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Logarithmically spaced viscosities lo…hi (inclusive), `count` ≥ 2 points.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub eps: f64,
    pub lambda: Complex64,
    /// 2kε/(ω³(D⁻¹Be₁, Be₁)).
    pub predicted: Complex64,
    /// 2kε/(ω²(D⁻¹Be₁, Be₁)).
    pub predicted_omega2: Complex64,
    pub rel_err: f64,
    pub rel_err_omega2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingReport {
    pub omega: f64,
    pub n2: f64,
    pub kernel_dim: usize,
    pub partial: Vec<usize>,
    pub semisimple_triple: bool,
    /// (D⁻¹Be₁, Be₁).
    pub denominator: Complex64,
    pub points: Vec<CrossingPoint>,
    /// Central differences (λ(ε) − λ(−ε))/2ε against the predicted slope, per |ε|.
    pub central: Vec<(f64, Complex64, f64)>,
    /// Im λ(ε) and Im λ(−ε) have opposite signs for every ε.
    pub sign_flip: bool,
}

/// Spin tuned to n₁ = 0: the triple zero eigenvalue and the eigenvalue leaving it as ω → ω ± ε.
pub fn critical_crossing(base: &TopConfig, eps: &[f64], tol: &Tolerances) -> Result<CrossingReport> {
    base.validate()?;
    let gap = base.a[0] - base.a[1];
    if !(gap > 0.0 && base.kg > 0.0) {
        return validation("n₁ = 0 needs a₀ > a₁ and k > 0");
    }
    let omega = (base.kg / gap).sqrt();
    let cfg = base.with_omega(omega);
    if cfg.n2().abs() <= N_SINGULAR {
        return validation("n₂ vanishes together with n₁");
    }
    let (w, m) = evolution_pair(&cfg);
    let kernel_dim = nullspace(&m, 1e-10)?.ncols();
    let partial = partial_multiplicities(&MatrixPolynomial::new(vec![-m.clone(), w])?, cr(0.0), tol)?;
    let d = cfg.d_mat();
    let be1 = cfg.fluid.b.column(1).into_owned();
    let dinv = inverse(&d).ok_or_else(|| PencilError::Numerical("D is singular".into()))?;
    let denominator = (be1.adjoint() * dinv * &be1)[(0, 0)];
    if denominator.re.abs() > 1e-10 * denominator.norm() {
        return validation("(D⁻¹Be₁, Be₁) is not purely imaginary for this fluid surrogate");
    }
    let slope = cr(2.0 * cfg.kg) / (denominator * omega.powi(3));
    let mut points = Vec::new();
    let mut central = Vec::new();
    let mut sign_flip = true;
    for &e in eps {
        let mut pair = [cr(0.0); 2];
        for (s, sg) in [1.0, -1.0].iter().enumerate() {
            let ev = evolution_eigenvalues(&cfg.with_omega(omega + sg * e))?;
            let pred = slope * (sg * e);
            let lam = nearest(&ev, pred);
            pair[s] = lam;
            let pred2 = pred * omega;
            points.push(CrossingPoint {
                eps: sg * e,
                lambda: lam,
                predicted: pred,
                predicted_omega2: pred2,
                rel_err: (lam - pred).norm() / pred.norm(),
                rel_err_omega2: (lam - pred2).norm() / pred2.norm(),
            });
        }
        sign_flip &= pair[0].im * pair[1].im < 0.0;
        let fd = (pair[0] - pair[1]) / (2.0 * e);
        central.push((e, fd, (fd - slope).norm() / slope.norm()));
    }
    Ok(CrossingReport {
        omega,
        n2: cfg.n2(),
        kernel_dim,
        semisimple_triple: kernel_dim == 3 && partial == vec![1, 1, 1],
        partial,
        denominator,
        points,
        central,
        sign_flip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(a: [f64; 3], kg: f64) -> TopConfig {
        TopConfig::new(a, kg, 1.7, 1.0, FluidSurrogate::synthetic(12, 0.1, 7)).unwrap()
    }

    #[test]
    fn closed_forms_and_inertia() {
        for (a, kg, pin) in [([3.0, 2.0, 1.0], 0.0, 0), ([1.0, 2.0, 3.0], 0.0, 2), ([2.0, 3.0, 1.0], 0.3, 1)] {
            let tc = cfg(a, kg);
            let m = build_matrices(&tc).unwrap();
            assert!(m.product_gap <= 1e-12);
            assert!(m.w_min_eig > 0.0);
            assert_eq!(m.j_inertia.neg, pin);
            assert_eq!(tc.pi_minus_n(), pin);
            assert!(is_hermitian(&m.j, 1e-14));
            // Im(Lx, x) = (ν/ω)(Rv, v) ≥ 0
            let skew = (&m.l - m.l.adjoint()) * c(0.0, -0.5);
            assert!(hermitian_eig(&skew).0[0] > -1e-12);
        }
        let n = cfg([3.0, 2.0, 1.0], 0.0).n_mat();
        assert_eq!(n, diag_real(&[1.0, 1.0, 2.0]));
        assert_eq!(cfg([1.0, 2.0, 3.0], 0.0).n_mat(), diag_real(&[1.0, -1.0, -2.0]));
    }

    #[test]
    fn frozen_fluid_limit() {
        let f = FluidSurrogate { r: zeros(0, 0), g: zeros(0, 0), b: zeros(0, 3) };
        let c = TopConfig::new([3.0, 2.0, 1.0], 0.4, 1.3, 1.0, f).unwrap();
        let m = build_matrices(&c).unwrap();
        assert_eq!(m.j.shape(), (6, 6));
        let (ws, ms) = rigid_pencil(&c);
        assert_eq!(ws, m.w);
        assert_eq!(ms, m.m);
    }

    #[test]
    fn invalid_inputs() {
        let f = FluidSurrogate::synthetic(4, 0.1, 1);
        assert!(TopConfig::new([3.0, 2.0, 1.0], 0.0, 0.0, 1.0, f.clone()).is_err());
        assert!(TopConfig::new([3.0, 2.0, 1.0], 0.0, 1.0, 0.0, f.clone()).is_err());
        let heavy = FluidSurrogate { b: &f.b * cr(100.0), ..f.clone() };
        assert!(TopConfig::new([3.0, 2.0, 1.0], 0.0, 1.0, 1.0, heavy).is_err());
        // n₁ = 0
        let c = TopConfig::new([3.0, 2.0, 1.0], 1.0, 1.0, 1.0, f).unwrap();
        assert!(build_matrices(&c).is_err());
    }

    #[test]
    fn axis_counts() {
        let tol = Tolerances::default();
        for (a, want) in [([3.0, 2.0, 1.0], 0), ([1.0, 2.0, 3.0], 2), ([2.0, 3.0, 1.0], 1)] {
            for kg in [0.0, 0.2] {
                let r = stability_report(&cfg(a, kg), &tol).unwrap();
                assert_eq!(r.lower_count, want, "{a:?} {kg}");
                assert_eq!(r.oracle_lower_count, want);
                assert!(r.kernel_as_predicted, "{:?}", r.kernel_gram);
                assert!(r.counts_hold);
                assert!(r.symmetry_gap < 1e-9, "{}", r.symmetry_gap);
                assert!(r.strip_holds);
                // without gravity the Poisson vector precesses freely at λ = ±1
                let free = r.real_flags.iter().filter(|z| (z.norm() - 1.0).abs() < 1e-9 && z.im.abs() < 1e-12).count();
                assert_eq!(free, if kg == 0.0 { 2 } else { 0 });
            }
        }
    }

    #[test]
    fn rigid_spectrum_symmetry() {
        let c = cfg([3.0, 2.0, 1.0], 0.5);
        let r = rigid_eigenvalues(&c).unwrap();
        assert_eq!(r.len(), 4);
        for z in &r {
            assert!(r.iter().any(|w| (w + z.conj()).norm() < 1e-10));
            assert!(r.iter().any(|w| (w - z.conj()).norm() < 1e-10));
        }
    }

    #[test]
    fn large_viscosity_asymptotics() {
        let c = cfg([3.0, 2.0, 1.0], 0.5);
        let sw = viscosity_sweep(&c, &log_grid(1e2, 1e5, 13)).unwrap();
        assert!(sw.rigid_rate < -0.5, "{}", sw.rigid_rate);
        assert!(*sw.divergent_errors.last().unwrap() < 1e-2);
        assert_eq!(sw.slopes.len(), 2);
        for s in &sw.slopes {
            assert!(s.energy > 0.0);
            assert!(s.rel_err < 0.05, "{} vs {}", s.c_fit, s.c_closed);
            // ω = 1.7 separates the two closed forms
            assert!(s.rel_err_with_omega > 0.3);
        }
        assert_eq!(sw.branches.len(), 18);
        assert!(sw.branches.iter().all(|b| b.points.len() == 13));
    }

    #[test]
    fn crossing_slope() {
        let f = FluidSurrogate::synthetic(12, 1.0, 7);
        let base = TopConfig::new([3.0, 2.0, 1.0], 2.0, 1.0, 0.01, f).unwrap();
        let r = critical_crossing(&base, &[1e-3, 1e-4], &Tolerances::default()).unwrap();
        assert!(r.semisimple_triple, "{:?}", r.partial);
        assert!(r.sign_flip);
        assert!(r.points.iter().all(|p| p.rel_err < 0.05), "{:?}", r.points);
        assert!(r.central.iter().all(|c| c.2 < 1e-2));
        assert!(r.points.iter().all(|p| p.rel_err_omega2 > 0.2));
    }
}
