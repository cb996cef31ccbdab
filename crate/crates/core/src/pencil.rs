//! Matrix polynomials A(λ) = A₀ + λA₁ + … + λⁿAₙ with square complex coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::linalg::{binom, cr, eye, fro, hermitian_eig, imag_part, rank, CMat};

/// Relative tolerance for the Hermitian coefficient check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Numerical thresholds shared by the spectral routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value threshold; `None` means m·n·2⁻⁴⁰.
    pub tol_rank: Option<f64>,
    pub tol_real: f64,
    pub tol_cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol_rank: None, tol_real: 1e-7, tol_cluster: 1e-7 }
    }
}

impl Tolerances {
    pub fn rank_tol(&self, m: usize, n: usize) -> f64 {
        self.tol_rank.unwrap_or((m * n.max(1)) as f64 * 2f64.powi(-40))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    coeffs: Vec<CMat>,
}

impl MatrixPolynomial {
    /// Build from ascending coefficients A₀…Aₙ. The trailing coefficient is kept even if zero.
    pub fn new(coeffs: Vec<CMat>) -> Result<Self> {
        if coeffs.is_empty() {
            return validation("a matrix polynomial needs at least one coefficient");
        }
        let m = coeffs[0].nrows();
        if m == 0 {
            return validation("coefficient size must be positive");
        }
        for (j, a) in coeffs.iter().enumerate() {
            if a.nrows() != m || a.ncols() != m {
                return validation(format!("coefficient {j} is {}x{}, expected {m}x{m}", a.nrows(), a.ncols()));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return validation(format!("coefficient {j} has a non-finite entry"));
            }
        }
        Ok(MatrixPolynomial { coeffs })
    }

    /// Scalar polynomial (m = 1) from ascending coefficients.
    pub fn scalar(c: &[Complex64]) -> Self {
        Self::new(c.iter().map(|&z| CMat::from_element(1, 1, z)).collect()).expect("finite scalar coefficients")
    }

    pub fn zero(m: usize) -> Self {
        MatrixPolynomial { coeffs: vec![CMat::zeros(m, m)] }
    }

    pub fn size(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> &CMat {
        &self.coeffs[j]
    }

    pub fn leading(&self) -> &CMat {
        self.coeffs.last().unwrap()
    }

    /// Horner evaluation of Σ λʲAⱼ.
    pub fn evaluate(&self, lambda: Complex64) -> CMat {
        let mut acc = self.leading().clone();
        for a in self.coeffs.iter().rev().skip(1) {
            acc = acc * lambda + a;
        }
        acc
    }

    /// Formal derivative of order s; s > n gives the zero polynomial of degree 0.
    pub fn derivative(&self, s: usize) -> Self {
        let n = self.degree();
        let m = self.size();
        if s > n {
            return Self::zero(m);
        }
        let coeffs = (s..=n)
            .map(|j| {
                let f: f64 = ((j - s + 1)..=j).map(|t| t as f64).product();
                &self.coeffs[j] * cr(f)
            })
            .collect();
        MatrixPolynomial { coeffs }
    }

    /// A*(λ) = [A(λ̄)]*, coefficients Aⱼ*.
    pub fn adjoint(&self) -> Self {
        MatrixPolynomial { coeffs: self.coeffs.iter().map(|a| a.adjoint()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.size() != other.size() {
            return validation("size mismatch in polynomial product");
        }
        let m = self.size();
        let mut coeffs = vec![CMat::zeros(m, m); self.degree() + other.degree() + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Ok(MatrixPolynomial { coeffs })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.size() != other.size() {
            return validation("size mismatch in polynomial sum");
        }
        let m = self.size();
        let n = self.degree().max(other.degree());
        let coeffs = (0..=n)
            .map(|j| {
                let mut c = CMat::zeros(m, m);
                if j < self.coeffs.len() {
                    c += &self.coeffs[j];
                }
                if j < other.coeffs.len() {
                    c += &other.coeffs[j];
                }
                c
            })
            .collect();
        Ok(MatrixPolynomial { coeffs })
    }

    pub fn scale(&self, z: Complex64) -> Self {
        MatrixPolynomial { coeffs: self.coeffs.iter().map(|a| a * z).collect() }
    }

    /// Left multiplication of every coefficient by a constant matrix.
    pub fn premul(&self, c: &CMat) -> Self {
        MatrixPolynomial { coeffs: self.coeffs.iter().map(|a| c * a).collect() }
    }

    /// Right division by a monic K: self = quotient·K + remainder, deg remainder < deg K.
    pub fn right_divide(&self, k: &Self) -> Result<(Self, Self)> {
        let m = self.size();
        if k.size() != m {
            return validation("size mismatch in right division");
        }
        let kd = k.degree();
        let n = self.degree();
        if kd > n {
            return validation("divisor degree exceeds dividend degree");
        }
        if fro(&(k.leading() - eye(m))) > 1e-12 * (1.0 + fro(k.leading())) {
            return validation("divisor must be monic (leading coefficient I)");
        }
        let mut r = self.coeffs.clone();
        let mut q = vec![CMat::zeros(m, m); n - kd + 1];
        for d in (kd..=n).rev() {
            let c = r[d].clone();
            for (j, kj) in k.coeffs.iter().enumerate() {
                r[d - kd + j] -= &c * kj;
            }
            q[d - kd] = c;
        }
        let rem = if kd == 0 { vec![CMat::zeros(m, m)] } else { r[..kd].to_vec() };
        Ok((MatrixPolynomial { coeffs: q }, MatrixPolynomial { coeffs: rem }))
    }

    /// Taylor coefficients at c: A(λ) = Σ Bⱼ (λ − c)ʲ, returned as the polynomial in μ = λ − c.
    pub fn shift(&self, c: Complex64) -> Self {
        let n = self.degree();
        let m = self.size();
        let mut pw = vec![cr(1.0); n + 1];
        for i in 1..=n {
            pw[i] = pw[i - 1] * c;
        }
        let coeffs = (0..=n)
            .map(|j| {
                let mut b = CMat::zeros(m, m);
                for i in j..=n {
                    b += &self.coeffs[i] * (pw[i - j] * binom(i, j));
                }
                b
            })
            .collect();
        MatrixPolynomial { coeffs }
    }

    /// Largest Frobenius norm among the coefficients.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(fro).fold(0.0, f64::max)
    }

    /// Max coefficient-wise Frobenius distance to another polynomial (degrees padded).
    pub fn distance(&self, other: &Self) -> f64 {
        let n = self.degree().max(other.degree());
        let m = self.size();
        let z = CMat::zeros(m, m);
        (0..=n)
            .map(|j| fro(&(self.coeffs.get(j).unwrap_or(&z) - other.coeffs.get(j).unwrap_or(&z))))
            .fold(0.0, f64::max)
    }

    /// Numerical rank of the leading coefficient.
    pub fn leading_rank(&self, tol_rel: f64) -> usize {
        let a = self.leading();
        if fro(a) == 0.0 {
            return 0;
        }
        rank(a, tol_rel)
    }

    /// Coefficient-wise Hermitian check at the library tolerance.
    pub fn has_hermitian_coeffs(&self) -> bool {
        self.coeffs.iter().all(|a| fro(&(a - a.adjoint())) <= HERMITIAN_TOL * (1.0 + fro(a)))
    }

    /// Hermitian copy: symmetrizes silently within tolerance, rejects otherwise.
    pub fn hermitian_checked(&self) -> Result<Self> {
        if !self.has_hermitian_coeffs() {
            return validation("pencil coefficients are not Hermitian");
        }
        Ok(MatrixPolynomial { coeffs: self.coeffs.iter().map(crate::linalg::herm_part).collect() })
    }

    /// Structural classification: Hermitian flag and dissipativity certificate.
    pub fn classify(&self) -> PencilClassification {
        let tol = Tolerances::default().rank_tol(self.size(), self.degree().max(1));
        let v0 = crate::linearize::v0_matrix(self);
        let v1 = crate::linearize::v1_matrix(self);
        let scale = 1.0 + self.max_coeff_norm();
        let nsd = |v: &CMat| hermitian_eig(v).0.last().copied().unwrap_or(0.0) <= 1e-12 * scale;
        let grid = grid_violation(self);
        let a0_imag = fro(&imag_part(&self.coeffs[0]));
        let cert = if nsd(&v0) {
            DissipativeCertificate::CertifiedByV0
        } else if a0_imag <= 1e-12 * scale && nsd(&v1) {
            DissipativeCertificate::CertifiedByV1
        } else if grid <= 1e-12 * scale {
            DissipativeCertificate::GridVerified(grid.max(0.0))
        } else {
            DissipativeCertificate::Unknown
        };
        let m = self.size();
        let r0 = if fro(&self.coeffs[0]) == 0.0 { 0 } else { rank(&self.coeffs[0], tol) };
        PencilClassification {
            is_hermitian_on_real_axis: self.has_hermitian_coeffs(),
            dissipative_certificate: cert,
            grid_max_violation: grid.max(0.0),
            leading_invertible: self.leading_rank(tol) == m,
            zero_invertible: r0 == m,
        }
    }
}

/// Max over a Chebyshev grid on [−R, R] of the largest eigenvalue of Im A(λ) = (A − A*)/2i.
pub fn grid_violation(p: &MatrixPolynomial) -> f64 {
    let r = 1.0 + 2.0 * p.max_coeff_norm();
    let npts = 101;
    (0..npts)
        .map(|j| {
            let x = r * (std::f64::consts::PI * j as f64 / (npts - 1) as f64).cos();
            let im = imag_part(&p.evaluate(cr(x)));
            hermitian_eig(&im).0.last().copied().unwrap_or(0.0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DissipativeCertificate {
    CertifiedByV0,
    CertifiedByV1,
    GridVerified(f64),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilClassification {
    pub is_hermitian_on_real_axis: bool,
    pub dissipative_certificate: DissipativeCertificate,
    /// max over the real grid of λ_max(Im A(λ)), clamped at 0; always computed.
    pub grid_max_violation: f64,
    pub leading_invertible: bool,
    pub zero_invertible: bool,
}

impl PencilClassification {
    pub fn is_dissipative(&self) -> bool {
        !matches!(self.dissipative_certificate, DissipativeCertificate::Unknown)
    }
}
