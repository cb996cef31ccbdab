//! Scattering of a plane wave by a 2π-periodic grating y = a(x).
//!
//! After the change of variables η = y − a(x) the Helmholtz equation separates into the quadratic
//! pencil T(λ) = λ²F + λG + H − V acting on quasi-periodic functions, with
//! Hf = −f″ + f, Gf = i(2a′f′ + a″f), Ff = (1 + a′²)f, V = (k² + 1)I.
//! Matrices are taken in the basis e^{iμₙx}, n = −M…M, weighted by the L²(0, 2π) Gram matrix
//! so that c*T(λ)c = (T(λ)f, f).

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, Result};
use crate::linalg::{c, cond, cr, pinv, CMat, CVec, I};
use crate::linearize::companion_first;
use crate::pencil::MatrixPolynomial;
use crate::qz::qz;

/// Real 2π-periodic profile a(x) = Σ_{|j|≤J} â_j e^{ijx}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    /// â_{−J}, …, â_J.
    coeffs: Vec<Complex64>,
    /// Highest retained harmonic is above 1e-12 of the largest one.
    pub tail_warning: bool,
}

impl Profile {
    pub fn flat() -> Self {
        Profile { coeffs: vec![cr(0.0)], tail_warning: false }
    }

    /// Build from â_{−J}…â_J; the conjugate symmetry of a real profile is enforced.
    pub fn from_fourier(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return validation("Fourier coefficients must be indexed −J…J (odd length)");
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return validation("profile coefficients must be finite");
        }
        let big = coeffs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let j = coeffs.len() / 2;
        for s in 0..=j {
            let gap = (coeffs[j + s] - coeffs[j - s].conj()).norm();
            if gap > 1e-12 * big.max(1e-300) && gap > 1e-300 {
                return validation("profile must be real: â₋ⱼ ≠ conj(âⱼ)");
            }
        }
        let mut sym = coeffs.clone();
        sym[j] = cr(coeffs[j].re);
        for s in 1..=j {
            let v = (coeffs[j + s] + coeffs[j - s].conj()) * 0.5;
            sym[j + s] = v;
            sym[j - s] = v.conj();
        }
        let tail = j > 0 && sym[0].norm() > 1e-12 * big;
        Ok(Profile { coeffs: sym, tail_warning: tail })
    }

    /// Interpolate from N samples a(2πl/N), l = 0…N−1.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return validation("no profile samples");
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return validation("profile samples must be finite");
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| cr(x)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let j = (n - 1) / 2;
        let mut coeffs = vec![cr(0.0); 2 * j + 1];
        for s in 0..=j {
            coeffs[j + s] = buf[s] / n as f64;
            coeffs[j - s] = buf[(n - s) % n] / n as f64;
        }
        if n % 2 == 0 && buf[n / 2].norm() > 1e-12 * n as f64 {
            // the Nyquist harmonic cannot be represented symmetrically
            return Self::from_fourier(coeffs).map(|mut p| {
                p.tail_warning = true;
                p
            });
        }
        Self::from_fourier(coeffs)
    }

    /// a(x) = amp·cos(hx).
    pub fn cosine(amp: f64, h: usize) -> Self {
        let mut coeffs = vec![cr(0.0); 2 * h + 1];
        coeffs[0] = cr(amp / 2.0);
        coeffs[2 * h] = cr(amp / 2.0);
        Profile::from_fourier(coeffs).expect("cosine profile is real")
    }

    pub fn harmonics(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// Fourier coefficient of the d-th derivative at harmonic j.
    pub fn coeff(&self, j: i64, d: u32) -> Complex64 {
        let h = self.harmonics() as i64;
        if j.abs() > h {
            return cr(0.0);
        }
        self.coeffs[(j + h) as usize] * (I * j as f64).powu(d)
    }

    pub fn derivative(&self, x: f64, d: u32) -> f64 {
        let h = self.harmonics() as i64;
        (-h..=h).map(|j| self.coeff(j, d) * Complex64::from_polar(1.0, j as f64 * x)).sum::<Complex64>().re
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// Coefficient of a′² at harmonic j (exact convolution).
    fn slope_sq(&self, j: i64) -> Complex64 {
        let h = self.harmonics() as i64;
        (-h..=h).map(|l| self.coeff(l, 1) * self.coeff(j - l, 1)).sum()
    }

    /// max |a| + max |a′| + max |a″| on a fine grid.
    pub fn c2_norm(&self) -> f64 {
        (0..3).map(|d| self.sup(d)).sum()
    }

    pub fn sup(&self, d: u32) -> f64 {
        let n = 64 * (self.harmonics() + 1);
        (0..n).map(|l| self.derivative(2.0 * PI * l as f64 / n as f64, d).abs()).fold(0.0, f64::max)
    }

    pub fn is_flat(&self) -> bool {
        self.coeffs.iter().enumerate().all(|(i, z)| i == self.harmonics() || z.norm() == 0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GratingProblem {
    pub profile: Profile,
    pub k: f64,
    /// ν; the incident wave is e^{i(ν/2π)x − ik·cosφ·y}.
    pub quasimomentum: f64,
    /// Incidence angle when built from one.
    pub phi: Option<f64>,
    /// Truncation: modes −M…M.
    pub modes: usize,
}

impl GratingProblem {
    /// ν = 2πk sin φ. Requires cot φ > max a′ so the wave reaches the whole profile.
    pub fn from_angle(profile: Profile, k: f64, phi: f64, modes: usize) -> Result<Self> {
        if !(phi.is_finite() && phi.abs() < PI / 2.0) {
            return validation("incidence angle must lie in (−π/2, π/2)");
        }
        if phi != 0.0 && 1.0 / phi.abs().tan() <= profile.sup(1) {
            return validation("cot φ must exceed max a′: the incident wave does not reach the whole grating");
        }
        let mut gp = Self::with_quasimomentum(profile, k, 2.0 * PI * k * phi.sin(), modes)?;
        gp.phi = Some(phi);
        Ok(gp)
    }

    pub fn with_quasimomentum(profile: Profile, k: f64, quasimomentum: f64, modes: usize) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return validation("wavenumber must be positive");
        }
        if !quasimomentum.is_finite() {
            return validation("quasimomentum must be finite");
        }
        if modes == 0 {
            return validation("need at least one mode on each side");
        }
        Ok(GratingProblem { profile, k, quasimomentum, phi: None, modes })
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        -(self.modes as i64)..=self.modes as i64
    }

    pub fn mu(&self, n: i64) -> f64 {
        self.quasimomentum / (2.0 * PI) + n as f64
    }

    /// Principal root: λ ≥ 0 or Im λ > 0.
    pub fn lambda(&self, n: i64) -> Complex64 {
        let r = self.k * self.k - self.mu(n).powi(2);
        if r >= 0.0 {
            cr(r.sqrt())
        } else {
            c(0.0, (-r).sqrt())
        }
    }

    fn cos_phi(&self) -> f64 {
        let s = self.quasimomentum / (2.0 * PI * self.k);
        (1.0 - s * s).max(0.0).sqrt()
    }

    /// Incident wave on the profile: e^{i(ν/2π)x − ik cosφ a(x)}.
    pub fn incident_trace(&self, x: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.mu(0) * x - self.k * self.cos_phi() * self.profile.value(x))
    }

    pub fn propagating_count(&self) -> usize {
        self.indices().filter(|&n| self.mu(n).abs() <= self.k).count()
    }
}

/// (2M+1)×(2M+1) quadratic pencil [H − V, G, F] in the Gram-weighted Fourier basis.
pub fn build_pencil(gp: &GratingProblem) -> Result<MatrixPolynomial> {
    if gp.modes < gp.propagating_count() + 4 {
        return validation(format!(
            "M = {} is below the resolution guard (propagating modes + 4 = {})",
            gp.modes,
            gp.propagating_count() + 4
        ));
    }
    let idx: Vec<i64> = gp.indices().collect();
    let nb = idx.len();
    let w = 2.0 * PI;
    let mut h = CMat::zeros(nb, nb);
    let mut g = CMat::zeros(nb, nb);
    let mut f = CMat::zeros(nb, nb);
    for (r, &m) in idx.iter().enumerate() {
        h[(r, r)] = cr(w * (gp.mu(m).powi(2) + 1.0 - gp.k * gp.k - 1.0));
        for (s, &n) in idx.iter().enumerate() {
            let j = m - n;
            // G e_n = (−2μₙa′ + ia″)e_n; written as −i j â_j (μₙ + μ_m) it is Hermitian entrywise.
            g[(r, s)] = -I * (j as f64) * gp.profile.coeff(j, 0) * (gp.mu(n) + gp.mu(m)) * w;
            f[(r, s)] = (gp.profile.slope_sq(j) + if j == 0 { cr(1.0) } else { cr(0.0) }) * w;
        }
    }
    let scale = crate::linalg::fro(&g).max(1e-300);
    if crate::linalg::fro(&(&g - g.adjoint())) > 1e-12 * scale {
        return numerical("assembled G is not Hermitian");
    }
    MatrixPolynomial::new(vec![h, g, f])
}

/// Fourier coefficients ĝ_{−K}…ĝ_K of a periodic function sampled on `nfft` points.
fn periodic_coeffs(fun: impl Fn(f64) -> Complex64, nfft: usize, kmax: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..nfft).map(|l| fun(2.0 * PI * l as f64 / nfft as f64)).collect();
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    (-(kmax as i64)..=kmax as i64).map(|j| buf[j.rem_euclid(nfft as i64) as usize] / nfft as f64).collect()
}

fn fft_size(gp: &GratingProblem) -> usize {
    (16 * (2 * gp.modes + 1) + 16 * gp.profile.harmonics()).next_power_of_two().max(256)
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub n: i64,
    pub mu: f64,
    pub lambda: Complex64,
    /// Coefficients of e^{iλa(x)}e^{iμₙx} in the truncated basis.
    pub plus: CVec,
    /// Coefficients of e^{−iλa(x)}e^{iμₙx}.
    pub minus: CVec,
}

/// Exact eigenfunctions f±ₙ = e^{±iλₙa(x)}e^{iμₙx}, projected onto the truncated basis.
pub fn analytic_modes(gp: &GratingProblem, range: std::ops::RangeInclusive<i64>) -> Vec<Mode> {
    let nb = 2 * gp.modes + 1;
    let m = gp.modes as i64;
    let nfft = fft_size(gp);
    range
        .map(|n| {
            let lam = gp.lambda(n);
            let coeffs = |s: f64| {
                let gh = periodic_coeffs(|x| (I * lam * s * gp.profile.value(x)).exp(), nfft, 2 * gp.modes);
                // basis index m ↔ harmonic m − n of the periodic factor
                CVec::from_iterator(nb, (-m..=m).map(|q| {
                    let j = q - n;
                    if j.unsigned_abs() as usize > 2 * gp.modes {
                        cr(0.0)
                    } else {
                        gh[(j + 2 * m) as usize]
                    }
                }))
            };
            Mode { n, mu: gp.mu(n), lambda: lam, plus: coeffs(1.0), minus: coeffs(-1.0) }
        })
        .collect()
}

/// All 2(2M+1) eigenvalues of the truncated pencil (QZ on the first companion form).
pub fn discrete_spectrum(gp: &GratingProblem) -> Result<Vec<Complex64>> {
    let p = build_pencil(gp)?;
    let cp = companion_first(&p)?;
    let gs = qz(&cp.a0_hat, &cp.a1_hat)?;
    Ok(gs.pairs().into_iter().filter(|(_, b)| b.norm() > 0.0).map(|(a, b)| a / b).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeMatch {
    pub n: i64,
    pub lambda: Complex64,
    /// Relative distance from ±λₙ to the nearest discrete eigenvalue (max over both signs).
    pub rel_error: f64,
}

/// Compare the discrete spectrum against ±λₙ for |n| ≤ nmax.
pub fn mode_errors(gp: &GratingProblem, nmax: i64) -> Result<Vec<ModeMatch>> {
    let ev = discrete_spectrum(gp)?;
    Ok((-nmax..=nmax)
        .map(|n| {
            let lam = gp.lambda(n);
            let err = [lam, -lam]
                .iter()
                .map(|t| ev.iter().map(|e| (e - t).norm()).fold(f64::INFINITY, f64::min) / t.norm().max(1e-300))
                .fold(0.0, f64::max);
            ModeMatch { n, lambda: lam, rel_error: err }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    Propagating,
    Decaying,
    /// λₙ = 0: only the eigenfunction of the length-2 chain is kept.
    Resonant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutgoingMode {
    pub n: i64,
    pub mu: f64,
    pub lambda: Complex64,
    pub kind: ModeKind,
    /// +1 for outgoing propagating modes, 0 for resonant ones, absent for decaying ones.
    pub sign: Option<i8>,
    /// (T′(λₙ)fₙ, fₙ)/(4πλₙ) on the discretized pencil; 1 for exact modes.
    pub form_ratio: Option<f64>,
}

const RESONANCE_TOL: f64 = 1e-10;

/// The half system: λₙ > 0, Im λₙ > 0, and the eigenfunction alone at a resonance.
pub fn outgoing_selection(gp: &GratingProblem) -> Result<Vec<OutgoingMode>> {
    let p = build_pencil(gp)?;
    let dp = p.derivative(1);
    let modes = analytic_modes(gp, gp.indices());
    let mut out = Vec::with_capacity(modes.len());
    for md in modes {
        let radicand = gp.k * gp.k - md.mu * md.mu;
        if radicand.abs() <= RESONANCE_TOL * gp.k * gp.k {
            out.push(OutgoingMode { n: md.n, mu: md.mu, lambda: cr(0.0), kind: ModeKind::Resonant, sign: Some(0), form_ratio: None });
        } else if radicand > 0.0 {
            let lam = md.lambda.re;
            let val = (md.plus.adjoint() * dp.evaluate(cr(lam)) * &md.plus)[(0, 0)];
            let ratio = val.re / (4.0 * PI * lam);
            let sign = if val.re > 0.0 { 1 } else { -1 };
            out.push(OutgoingMode { n: md.n, mu: md.mu, lambda: md.lambda, kind: ModeKind::Propagating, sign: Some(sign), form_ratio: Some(ratio) });
        } else {
            out.push(OutgoingMode { n: md.n, mu: md.mu, lambda: md.lambda, kind: ModeKind::Decaying, sign: None, form_ratio: None });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterSolution {
    pub indices: Vec<i64>,
    pub mu: Vec<f64>,
    pub lambda: Vec<Complex64>,
    pub amplitudes: Vec<Complex64>,
    /// max |u(x, a(x)) − v(x, a(x))| on a grid offset from the collocation points.
    pub boundary_residual: f64,
    pub condition: f64,
    /// Indices of the outgoing propagating modes.
    pub propagating: Vec<i64>,
    profile: Profile,
}

impl ScatterSolution {
    /// u(x, y) = Σ cₙ e^{iμₙx} e^{iλₙy}, defined for y ≥ a(x).
    pub fn field(&self, x: f64, y: f64) -> Result<Complex64> {
        if y < self.profile.value(x) - 1e-12 {
            return validation("the field is only defined above the grating");
        }
        Ok(self.field_unchecked(x, y))
    }

    fn field_unchecked(&self, x: f64, y: f64) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(self.mu.iter().zip(&self.lambda))
            .map(|(cn, (mu, lam))| cn * (I * (*mu * x) + I * lam * y).exp())
            .sum()
    }

    pub fn amplitude(&self, n: i64) -> Option<Complex64> {
        self.indices.iter().position(|&i| i == n).map(|k| self.amplitudes[k])
    }
}

const LS_COND_LIMIT: f64 = 1e10;

/// Expand the boundary trace of the incident wave in {f⁺ₙ} by least squares on 4M+1 points.
pub fn solve_scattering(gp: &GratingProblem) -> Result<ScatterSolution> {
    let indices: Vec<i64> = gp.indices().collect();
    let npts = 4 * gp.modes + 1;
    let xs: Vec<f64> = (0..npts).map(|l| 2.0 * PI * l as f64 / npts as f64).collect();
    let lam: Vec<Complex64> = indices
        .iter()
        .map(|&n| if (gp.k * gp.k - gp.mu(n).powi(2)).abs() <= RESONANCE_TOL * gp.k * gp.k { cr(0.0) } else { gp.lambda(n) })
        .collect();
    let basis = |x: f64, q: usize| (I * lam[q] * gp.profile.value(x) + I * (gp.mu(indices[q]) * x)).exp();
    let a = CMat::from_fn(npts, indices.len(), |r, q| basis(xs[r], q));
    let rhs = CMat::from_fn(npts, 1, |r, _| gp.incident_trace(xs[r]));
    let condition = cond(&a);
    if condition > LS_COND_LIMIT {
        return numerical(format!("least-squares condition {condition:.2e} exceeds 1e10; increase the number of modes"));
    }
    let coef = pinv(&a, 1e-14) * rhs;
    let amplitudes: Vec<Complex64> = coef.column(0).iter().copied().collect();
    let sol = ScatterSolution {
        mu: indices.iter().map(|&n| gp.mu(n)).collect(),
        propagating: indices.iter().copied().filter(|&n| gp.k * gp.k - gp.mu(n).powi(2) > RESONANCE_TOL * gp.k * gp.k).collect(),
        indices,
        lambda: lam,
        amplitudes,
        boundary_residual: 0.0,
        condition,
        profile: gp.profile.clone(),
    };
    let check = 8 * gp.modes + 3;
    let residual = (0..check)
        .map(|l| {
            let x = 2.0 * PI * (l as f64 + 0.5) / check as f64;
            (sol.field_unchecked(x, gp.profile.value(x)) - gp.incident_trace(x)).norm()
        })
        .fold(0.0, f64::max);
    Ok(ScatterSolution { boundary_residual: residual, ..sol })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resonance {
    pub resonant: bool,
    /// n with k² = μₙ².
    pub indices: Vec<i64>,
    /// Two resonant indices (ν/π ∈ ℤ).
    pub double: bool,
}

pub fn resonance_detect(k: f64, quasimomentum: f64) -> Resonance {
    let shift = quasimomentum / (2.0 * PI);
    let mut indices = Vec::new();
    for target in [k, -k] {
        let n = (target - shift).round();
        if ((n + shift).powi(2) - k * k).abs() <= RESONANCE_TOL && !indices.contains(&(n as i64)) {
            indices.push(n as i64);
        }
    }
    indices.sort();
    Resonance { resonant: !indices.is_empty(), double: indices.len() == 2, indices }
}
