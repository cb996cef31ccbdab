//! Randomized checks of the classical s-number inequalities, the trace bound and the
//! Fredholm determinant identities at matrix scale, plus a truncated ℓ₂ model of a
//! self-adjoint operator in a Pontryagin space with a degenerate root subspace at 0.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::fixtures::{rand_matrix, rng};
use crate::linalg::{c, cr, det, eigvals, eye, hermitian_eig, inverse, singular_values, svd, zeros, CMat};

/// Violations above this (relative to the size of the compared quantities) are bugs.
pub const PROPERTY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyReport {
    pub id: String,
    pub trials: usize,
    pub max_violation: f64,
    pub witness: Option<String>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= PROPERTY_TOL
    }
}

struct Tracker {
    id: &'static str,
    worst: f64,
    witness: Option<String>,
}

impl Tracker {
    fn new(id: &'static str) -> Self {
        Tracker { id, worst: 0.0, witness: None }
    }

    fn record(&mut self, v: f64, detail: impl FnOnce() -> String) {
        if v > self.worst || v.is_nan() {
            self.worst = if v.is_nan() { f64::INFINITY } else { v };
            if self.worst > PROPERTY_TOL {
                self.witness = Some(detail());
            }
        }
    }

    /// lhs ≤ rhs up to rounding.
    fn le(&mut self, trial: usize, what: &str, lhs: f64, rhs: f64) {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        self.record((lhs - rhs).max(0.0) / scale, || {
            format!("trial {trial}, {what}: lhs {lhs:.6e} > rhs {rhs:.6e}")
        });
    }

    fn eq(&mut self, trial: usize, what: &str, lhs: Complex64, rhs: Complex64) {
        let scale = lhs.norm().max(rhs.norm()).max(1.0);
        self.record((lhs - rhs).norm() / scale, || {
            format!("trial {trial}, {what}: {lhs:.6e} vs {rhs:.6e}")
        });
    }

    fn finish(self, trials: usize) -> PropertyReport {
        PropertyReport { id: self.id.into(), trials, max_violation: self.worst, witness: self.witness }
    }
}

/// s_k with 1-based k; zero past the dimension.
fn sk(s: &[f64], k: usize) -> f64 {
    if k == 0 {
        return f64::INFINITY;
    }
    s.get(k - 1).copied().unwrap_or(0.0)
}

/// Eigenvalues ordered by decreasing modulus.
fn eig_desc(a: &CMat) -> Vec<Complex64> {
    let mut l = eigvals(a);
    l.sort_by(|x, y| y.norm().partial_cmp(&x.norm()).unwrap());
    l
}

/// Operator norm through the Hermitian eigenproblem of X*X, kept apart from the SVD path.
fn norm_via_gram(x: &CMat) -> f64 {
    let (vals, _) = hermitian_eig(&(x.adjoint() * x));
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

fn rand_low_rank(r: &mut impl Rng, m: usize, rank: usize) -> CMat {
    if rank == 0 {
        return zeros(m, m);
    }
    rand_matrix(r, m, rank) * rand_matrix(r, rank, m)
}

/// Rescaled to operator norm 1/2.
fn half_norm(x: CMat) -> CMat {
    let n = norm_via_gram(&x);
    if n > 0.0 {
        x * cr(0.5 / n)
    } else {
        x
    }
}

/// Random m×m complex matrices with varied scale and, half of the time, a non-normal
/// strictly triangular part added so the eigenvalue inequalities are not trivially tight.
fn rand_test_matrix(r: &mut impl Rng, m: usize) -> CMat {
    let scale = 10f64.powf(r.random_range(-1.0..1.0));
    let mut a = rand_matrix(r, m, m) * cr(scale);
    if r.random_bool(0.5) {
        let n = rand_matrix(r, m, m).upper_triangle() * cr(3.0 * scale);
        a += n;
    }
    a
}

pub fn snumber_battery(m: usize, trials: usize, seed: u64) -> Result<Vec<PropertyReport>> {
    if m == 0 || m > 16 {
        return validation(format!("matrix size {m} outside 1..=16"));
    }
    let mut r = rng(seed);
    let mut p1 = Tracker::new("1-adjoint");
    let mut p2 = Tracker::new("2-bounded-factor");
    let mut p3 = Tracker::new("3-approximation");
    let mut p3r = Tracker::new("3-finite-rank-shift");
    let mut p4 = Tracker::new("4-sum");
    let mut p4s = Tracker::new("4-sum-sharp");
    let mut p4q = Tracker::new("4-sum-q-fold");
    let mut p5 = Tracker::new("5-product");
    let mut p5q = Tracker::new("5-product-q-fold");
    let mut p6 = Tracker::new("6-weyl-product");
    let mut p7 = Tracker::new("7-power-sums");
    let mut p8 = Tracker::new("8-shifted-product");
    let mut p9 = Tracker::new("9-partial-sums-add");
    let mut p10 = Tracker::new("10-partial-sums-mul");
    let mut tr = Tracker::new("trace-bound");
    let mut lid = Tracker::new("trace-eigenvalue-sum");

    for t in 0..trials {
        let a = rand_test_matrix(&mut r, m);
        let b = rand_test_matrix(&mut r, m);
        let d = rand_test_matrix(&mut r, m);
        let sa = singular_values(&a);
        let sb = singular_values(&b);

        let sas = singular_values(&a.adjoint());
        for k in 1..=m {
            p1.eq(t, &format!("k={k}"), cr(sk(&sa, k)), cr(sk(&sas, k)));
        }

        let dn = norm_via_gram(&d);
        let sda = singular_values(&(&d * &a));
        let sad = singular_values(&(&a * &d));
        for k in 1..=m {
            p2.le(t, &format!("DA k={k}"), sk(&sda, k), dn * sk(&sa, k));
            p2.le(t, &format!("AD k={k}"), sk(&sad, k), dn * sk(&sa, k));
        }

        // Best rank-k approximation: the truncated SVD attains s_{k+1}, and no random
        // rank-k operator beats it.
        let (u, s, v) = svd(&a);
        for k in 0..m {
            let mut fk = zeros(m, m);
            for j in 0..k {
                fk += u.column(j) * v.column(j).adjoint() * cr(s[j]);
            }
            let attained = norm_via_gram(&(&a - &fk));
            p3.eq(t, &format!("truncation k={k}"), cr(attained), cr(sk(&s, k + 1)));
            let f = rand_low_rank(&mut r, m, k);
            p3.le(t, &format!("random rank {k}"), sk(&s, k + 1), norm_via_gram(&(&a - f)));
        }
        let rank = r.random_range(0..m);
        let f = rand_low_rank(&mut r, m, rank);
        let saf = singular_values(&(&a + f));
        for k in rank + 1..=m {
            p3r.le(t, &format!("r={rank} k={k}"), sk(&saf, k), sk(&sa, k - rank));
        }

        let sab_sum = singular_values(&(&a + &b));
        let sab_mul = singular_values(&(&a * &b));
        for k in 1..=m {
            for j in 1..=m {
                p4.le(t, &format!("k={k} m={j}"), sk(&sab_sum, k + j + 1), sk(&sa, k) + sk(&sb, j));
                p4s.le(t, &format!("k={k} m={j}"), sk(&sab_sum, k + j - 1), sk(&sa, k) + sk(&sb, j));
                p5.le(t, &format!("k={k} m={j}"), sk(&sab_mul, k + j - 1), sk(&sa, k) * sk(&sb, j));
            }
        }

        let q = r.random_range(2..=4);
        let terms: Vec<CMat> = (0..q).map(|_| rand_test_matrix(&mut r, m)).collect();
        let svals: Vec<Vec<f64>> = terms.iter().map(singular_values).collect();
        let sum = terms.iter().fold(zeros(m, m), |acc, x| acc + x);
        let prod = terms.iter().fold(eye(m), |acc, x| acc * x);
        let ssum = singular_values(&sum);
        let sprod = singular_values(&prod);
        for k in 1..=m {
            let k1 = (k - 1) / q + 1;
            let rhs_sum: f64 = svals.iter().map(|s| sk(s, k1)).sum();
            let rhs_prod: f64 = svals.iter().map(|s| sk(s, k1)).product();
            p4q.le(t, &format!("q={q} k={k}"), sk(&ssum, k), rhs_sum);
            p5q.le(t, &format!("q={q} k={k}"), sk(&sprod, k), rhs_prod);
        }

        let lam = eig_desc(&a);
        let p = r.random_range(0.1..4.0);
        let rr = 10f64.powf(r.random_range(-2.0..2.0));
        let (mut lp, mut sp) = (1.0, 1.0);
        let (mut lpow, mut spow) = (0.0, 0.0);
        let (mut lsh, mut ssh) = (1.0, 1.0);
        for k in 1..=m {
            let l = lam[k - 1].norm();
            lp *= l;
            sp *= sa[k - 1];
            lpow += l.powf(p);
            spow += sa[k - 1].powf(p);
            lsh *= 1.0 + rr * l;
            ssh *= 1.0 + rr * sa[k - 1];
            p6.le(t, &format!("k={k}"), lp, sp);
            p7.le(t, &format!("p={p:.3} k={k}"), lpow, spow);
            p8.le(t, &format!("r={rr:.3e} k={k}"), lsh, ssh);
        }

        let (mut l9, mut r9, mut l10, mut r10) = (0.0, 0.0, 0.0, 0.0);
        for k in 1..=m {
            l9 += sk(&sab_sum, k);
            r9 += sk(&sa, k) + sk(&sb, k);
            l10 += sk(&sab_mul, k);
            r10 += sk(&sa, k) * sk(&sb, k);
            p9.le(t, &format!("k={k}"), l9, r9);
            p10.le(t, &format!("k={k}"), l10, r10);
        }

        let trace = a.trace();
        tr.le(t, "|Tr A| vs nuclear norm", trace.norm(), sa.iter().sum());
        lid.eq(t, "Tr A vs eigenvalue sum", trace, lam.iter().sum());
    }

    Ok([p1, p2, p3, p3r, p4, p4s, p4q, p5, p5q, p6, p7, p8, p9, p10, tr, lid]
        .into_iter()
        .map(|x| x.finish(trials))
        .collect())
}

/// Fredholm determinant det(I − A) as the product of 1 − λₖ(A).
pub fn fredholm_det(a: &CMat) -> Complex64 {
    eigvals(a).into_iter().fold(cr(1.0), |acc, l| acc * (cr(1.0) - l))
}

pub fn nuclear_norm(a: &CMat) -> f64 {
    singular_values(a).iter().sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityPoint {
    pub distance: f64,
    /// Mean of |det(I−A) − det(I−B)| over the trials.
    pub mean_change: f64,
    /// Worst |det(I−A) − det(I−B)| / (γM²|det(I−A)|·‖A−B‖₁).
    pub max_constant_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetReport {
    pub properties: Vec<PropertyReport>,
    pub trend: Vec<ContinuityPoint>,
    pub trend_monotone: bool,
    /// Largest resolvent norm on the segment [0, 1] seen over all samples.
    pub sampled_m: f64,
}

pub const CONTINUITY_DISTANCES: [f64; 3] = [1e-2, 1e-4, 1e-6];

/// Determinant identities and the continuity estimate on the contour Γ = [0, 1] (γ = 1).
/// A and B are scaled to operator norm ≤ 1/2, so M = 2 bounds the resolvents on Γ.
pub fn det_continuity_check(m: usize, trials: usize, seed: u64) -> Result<DetReport> {
    if m == 0 || m > 16 {
        return validation(format!("matrix size {m} outside 1..=16"));
    }
    let mut r = rng(seed);
    let id = eye(m);
    let mut rank1 = Tracker::new("det-rank-one");
    let mut routes = Tracker::new("det-eigen-vs-lu");
    let mut mult = Tracker::new("det-multiplicativity");
    let mut quot = Tracker::new("det-quotient");
    let mut cont = Tracker::new("det-continuity");
    let mut trend: Vec<ContinuityPoint> = CONTINUITY_DISTANCES
        .iter()
        .map(|&d| ContinuityPoint { distance: d, mean_change: 0.0, max_constant_ratio: 0.0 })
        .collect();
    let mut sampled_m: f64 = 0.0;
    let gamma = 1.0;
    let big_m = 2.0;


    for t in 0..trials {
        let mut e = rand_matrix(&mut r, m, 1);
        e /= cr(e.norm());
        let alpha = c(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let a1 = &e * e.adjoint() * alpha;
        rank1.eq(t, "eigen route", fredholm_det(&a1), cr(1.0) - alpha);
        rank1.eq(t, "LU route", det(&(&id - &a1)), cr(1.0) - alpha);

        let a = half_norm(rand_test_matrix(&mut r, m)) * cr(r.random_range(0.2..1.0));
        let b = half_norm(rand_test_matrix(&mut r, m)) * cr(r.random_range(0.2..1.0));
        let da = fredholm_det(&a);
        let db = fredholm_det(&b);
        routes.eq(t, "det(I-A)", da, det(&(&id - &a)));

        // (I−A)(I−B) = I − (A + B − AB)
        let ab = &a + &b - &a * &b;
        mult.eq(t, "product", fredholm_det(&ab), da * db);

        let inv_b = inverse(&(&id - &b)).expect("‖B‖ ≤ 1/2 keeps I − B invertible");
        let q = &id - (&id - &a) * inv_b;
        quot.eq(t, "quotient", fredholm_det(&q), da / db);

        for z in 0..=32 {
            let zeta = z as f64 / 32.0;
            for x in [&a, &b] {
                let res = inverse(&(&id - x * cr(zeta))).expect("resolvent on [0,1]");
                sampled_m = sampled_m.max(norm_via_gram(&res));
            }
        }

        for (i, &dist) in CONTINUITY_DISTANCES.iter().enumerate() {
            let pert = rand_test_matrix(&mut r, m);
            let pert = &pert * cr(dist / nuclear_norm(&pert));
            let bb = &a + pert;
            let dbb = fredholm_det(&bb);
            let change = (da - dbb).norm();
            let x = gamma * big_m * big_m * dist;
            // |1 − e^w| ≤ |w|e^{|w|} turns the first-order estimate into a bound.
            cont.le(t, &format!("‖A−B‖₁={dist:.0e}"), change, da.norm() * x * x.exp());
            trend[i].mean_change += change / trials as f64;
            trend[i].max_constant_ratio = trend[i].max_constant_ratio.max(change / (da.norm() * x));
        }
    }

    let trend_monotone = trials > 0
        && trend.windows(2).all(|w| w[1].mean_change < w[0].mean_change)
        && trend.windows(2).all(|w| {
            let ratio = (w[0].mean_change / w[0].distance) / (w[1].mean_change / w[1].distance);
            (0.5..2.0).contains(&ratio)
        });

    Ok(DetReport {
        properties: [rank1, routes, mult, quot, cont].into_iter().map(|x| x.finish(trials)).collect(),
        trend,
        trend_monotone,
        sampled_m,
    })
}

/// scale·k^(−exponent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRule {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerRule {
    pub fn new(scale: f64, exponent: f64) -> Self {
        PowerRule { scale, exponent }
    }

    pub fn at(&self, k: usize) -> f64 {
        self.scale * (k as f64).powf(-self.exponent)
    }
}

/// N×N section of the model: A has the unit (2,1) entry, αₖ in row 2, ᾱₖ in column 1 and βₖ on
/// the diagonal from k = 3; G swaps the first two coordinates and is the identity elsewhere.
#[derive(Debug, Clone)]
pub struct PontryaginFixture {
    pub n: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub a: CMat,
    pub g: CMat,
    /// 1 − Σ|αₖ|²/βₖ over the truncation; zero makes y¹ an eigenvector.
    pub gamma: f64,
    /// Columns y¹, y², …, yᴺ: y¹ the associated (or eigen) vector at 0, y² = e₂, yᵏ for βₖ.
    pub root_vectors: CMat,
}

impl PontryaginFixture {
    pub fn new(n: usize, alpha: PowerRule, beta: PowerRule) -> Result<Self> {
        if n < 3 {
            return validation(format!("truncation {n} below 3"));
        }
        // index k − 3 holds αₖ, βₖ
        let al: Vec<f64> = (3..=n).map(|k| alpha.at(k)).collect();
        let be: Vec<f64> = (3..=n).map(|k| beta.at(k)).collect();
        if al.iter().chain(&be).any(|x| !x.is_finite()) {
            return validation("non-finite sequence value");
        }
        if be.iter().any(|&b| b <= 0.0) || be.windows(2).any(|w| w[1] >= w[0]) {
            return validation("β must be positive and strictly decreasing");
        }
        let mut a = zeros(n, n);
        let mut g = eye(n);
        a[(1, 0)] = cr(1.0);
        g[(0, 0)] = cr(0.0);
        g[(1, 1)] = cr(0.0);
        g[(0, 1)] = cr(1.0);
        g[(1, 0)] = cr(1.0);
        for k in 3..=n {
            let (i, x) = (k - 1, k - 3);
            a[(1, i)] = cr(al[x]);
            a[(i, 0)] = cr(al[x]).conj();
            a[(i, i)] = cr(be[x]);
        }
        let gamma = 1.0 - al.iter().zip(&be).map(|(x, y)| x * x / y).sum::<f64>();

        let mut y = zeros(n, n);
        let mut y1 = zeros(n, 1);
        y1[0] = cr(-1.0);
        for k in 3..=n {
            y1[k - 1] = cr(al[k - 3] / be[k - 3]).conj();
        }
        if gamma.abs() > 1e-12 {
            y1 *= cr(-1.0 / gamma);
        }
        y.set_column(0, &y1.column(0));
        y[(1, 1)] = cr(1.0);
        for k in 3..=n {
            y[(1, k - 1)] = cr(al[k - 3] / be[k - 3]);
            y[(k - 1, k - 1)] = cr(1.0);
        }
        Ok(PontryaginFixture { n, alpha: al, beta: be, a, g, gamma, root_vectors: y })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PontryaginDiagnostics {
    pub n: usize,
    pub gamma: f64,
    /// max over k ≥ 3 of ‖A yᵏ − βₖ yᵏ‖∞.
    pub eigvec_residual: f64,
    /// ‖A y¹ − y²‖∞, or ‖A y¹‖∞ when γ = 0.
    pub associated_residual: f64,
    /// ‖GA − (GA)*‖∞.
    pub ga_hermitian_gap: f64,
    /// Distance between the Schur eigenvalues and {βₖ} ∪ {0, 0}, sorted by real part.
    pub spectrum_gap: f64,
    /// G-form [y², y²]; zero marks the degenerate root subspace at 0.
    pub gram_y2: f64,
    /// Σ_{k≤N} |αₖ/βₖ|², the partial sum deciding the basis dichotomy.
    pub ratio_partial_sum: f64,
    /// Condition number of the column-normalized root-vector matrix [y¹ … yᴺ].
    pub root_condition: f64,
    /// Smallest singular value of the column-normalized [y² … yᴺ].
    pub sigma_min_tail: f64,
}

fn max_abs(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn pontryagin_diagnostics(f: &PontryaginFixture) -> PontryaginDiagnostics {
    let n = f.n;
    let y = &f.root_vectors;
    let mut eig_res: f64 = 0.0;
    for k in 3..=n {
        let v = y.column(k - 1);
        let res = &f.a * v - v * cr(f.beta[k - 3]);
        eig_res = eig_res.max(res.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let ay1 = &f.a * y.column(0);
    let target = if f.gamma.abs() > 1e-12 { y.column(1).into_owned() } else { ay1.clone() * cr(0.0) };
    let assoc = (ay1 - target).iter().map(|z| z.norm()).fold(0.0, f64::max);

    let ga = &f.g * &f.a;
    let gap = max_abs(&(&ga - ga.adjoint()));

    let mut computed = eigvals(&f.a);
    computed.sort_by(|x, z| z.re.partial_cmp(&x.re).unwrap());
    let mut expected: Vec<f64> = f.beta.clone();
    expected.extend([0.0, 0.0]);
    let spectrum_gap = computed.iter().zip(&expected).map(|(l, &e)| (l - e).norm()).fold(0.0, f64::max);

    let y2 = y.column(1);
    let gram_y2 = (y2.adjoint() * &f.g * y2)[(0, 0)].re;

    let ratio_partial_sum = f.alpha.iter().zip(&f.beta).map(|(a, b)| (a / b).powi(2)).sum();

    let normalized = crate::linalg::normalize_columns(y);
    let s = singular_values(&normalized);
    let root_condition = s[0] / s[n - 1];
    let tail = normalized.columns(1, n - 1).into_owned();
    let sigma_min_tail = *singular_values(&tail).last().unwrap();

    PontryaginDiagnostics {
        n,
        gamma: f.gamma,
        eigvec_residual: eig_res,
        associated_residual: assoc,
        ga_hermitian_gap: gap,
        spectrum_gap,
        gram_y2,
        ratio_partial_sum,
        root_condition,
        sigma_min_tail,
    }
}

pub const PONTRYAGIN_TRUNCATIONS: [usize; 4] = [8, 16, 32, 64];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PontryaginTrend {
    pub alpha: PowerRule,
    pub beta: PowerRule,
    pub points: Vec<PontryaginDiagnostics>,
    /// Largest over smallest root-vector condition number across the truncations.
    pub condition_spread: f64,
    pub sigma_min_decreasing: bool,
}

pub fn pontryagin_example(ns: &[usize], alpha: PowerRule, beta: PowerRule) -> Result<PontryaginTrend> {
    let points = ns
        .iter()
        .map(|&n| PontryaginFixture::new(n, alpha, beta).map(|f| pontryagin_diagnostics(&f)))
        .collect::<Result<Vec<_>>>()?;
    let conds: Vec<f64> = points.iter().map(|p| p.root_condition).collect();
    let hi = conds.iter().cloned().fold(0.0, f64::max);
    let lo = conds.iter().cloned().fold(f64::INFINITY, f64::min);
    let sigma_min_decreasing = points.windows(2).all(|w| w[1].sigma_min_tail < w[0].sigma_min_tail);
    Ok(PontryaginTrend { alpha, beta, points, condition_spread: hi / lo, sigma_min_decreasing })
}
