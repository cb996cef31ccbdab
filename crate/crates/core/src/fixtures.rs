//! Reproducible test pencils: seeded random families and a few named examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, cr, diag_real, eye, from_real, herm_part, CMat};
use crate::pencil::MatrixPolynomial;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in the unit square of ℂ centred at 0.
pub fn rand_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

pub fn rand_hermitian(r: &mut impl Rng, m: usize) -> CMat {
    herm_part(&rand_matrix(r, m, m))
}

/// X X* + shift·I.
pub fn rand_pd(r: &mut impl Rng, m: usize, shift: f64) -> CMat {
    let x = rand_matrix(r, m, m);
    &x * x.adjoint() + eye(m) * cr(shift)
}

/// Hermitian matrix with prescribed numbers of positive and negative eigenvalues.
pub fn rand_hermitian_inertia(r: &mut impl Rng, pos: usize, neg: usize) -> CMat {
    let m = pos + neg;
    let q = rand_matrix(r, m, m).qr().q();
    let d: Vec<f64> = (0..m)
        .map(|i| {
            let mag = r.random_range(0.5..2.0);
            if i < pos {
                mag
            } else {
                -mag
            }
        })
        .collect();
    &q * diag_real(&d) * q.adjoint()
}

pub fn random_general(m: usize, n: usize, seed: u64) -> MatrixPolynomial {
    let mut r = rng(seed);
    MatrixPolynomial::new((0..=n).map(|_| rand_matrix(&mut r, m, m)).collect()).unwrap()
}

pub fn random_hermitian(m: usize, n: usize, seed: u64) -> MatrixPolynomial {
    let mut r = rng(seed);
    MatrixPolynomial::new((0..=n).map(|_| rand_hermitian(&mut r, m)).collect()).unwrap()
}

/// Quadratic λ²A₂ + λA₁ + A₀ with Re A₂ ≻ 0 and V₀ ⪯ 0.
/// `damping` scales the anti-Hermitian parts; 0 gives a Hermitian pencil with real eigenvalues.
pub fn random_dissipative_quadratic(m: usize, seed: u64, damping: f64) -> MatrixPolynomial {
    let mut r = rng(seed);
    let h0 = rand_hermitian(&mut r, m) * cr(2.0);
    let h1 = rand_hermitian(&mut r, m) * cr(2.0);
    let a2 = rand_pd(&mut r, m, 0.5);
    let p0 = rand_pd(&mut r, m, 0.3) * cr(0.5);
    let q2 = rand_pd(&mut r, m, 0.3) * cr(0.5);
    let k = rand_hermitian(&mut r, m);
    // [[−2P₀, K], [K, −2Q₂]] ⪯ 0 once ‖K‖ ≤ 2·min(λ_min(P₀), λ_min(Q₂))
    let floor = 2.0 * crate::linalg::hermitian_eig(&p0).0[0].min(crate::linalg::hermitian_eig(&q2).0[0]);
    let k = &k * cr(0.9 * floor / crate::linalg::spectral_norm(&k).max(1e-300));
    let i = crate::linalg::I;
    let a0 = h0 - p0 * (i * damping);
    let a1 = h1 + k * (i * damping);
    let a2 = a2 - q2 * (i * damping);
    MatrixPolynomial::new(vec![a0, a1, a2]).unwrap()
}

/// A₀ = [[0,1],[1,0]], A₁ = [[0,−3i],[3i,0]], A₂ = −[[0,2],[2,0]]: the eigenvalues i and i/2
/// share the eigenvector e₁, so the upper half of the spectrum is not a half-range basis.
pub fn radzievskii() -> MatrixPolynomial {
    let a0 = from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let a1 = CMat::from_row_slice(2, 2, &[cr(0.0), c(0.0, -3.0), c(0.0, 3.0), cr(0.0)]);
    let a2 = from_real(2, 2, &[0.0, -2.0, -2.0, 0.0]);
    MatrixPolynomial::new(vec![a0, a1, a2]).unwrap()
}

/// Sine-mode reduction of the Helmholtz strip: λ² + π²k² − ω² for k = 1..=modes.
pub fn helmholtz_strip(modes: usize, omega: f64) -> MatrixPolynomial {
    let pi2 = std::f64::consts::PI.powi(2);
    let d: Vec<f64> = (1..=modes).map(|k| pi2 * (k * k) as f64 - omega * omega).collect();
    MatrixPolynomial::new(vec![diag_real(&d), CMat::zeros(modes, modes), eye(modes)]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dissipative_family_is_certified() {
        for seed in 0..20 {
            let p = random_dissipative_quadratic(3, seed, 1.0);
            assert!(p.classify().is_dissipative());
        }
        assert!(random_dissipative_quadratic(3, 1, 0.0).has_hermitian_coeffs());
    }

    #[test]
    fn inertia_prescribed() {
        let mut r = rng(3);
        let h = rand_hermitian_inertia(&mut r, 2, 3);
        let i = crate::linalg::inertia(&h, 1e-12);
        assert_eq!((i.pos, i.neg, i.zero), (2, 3, 0));
    }
}
