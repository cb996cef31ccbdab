//! End-to-end checks over seeded random families and the fixed fixtures.
//! Runs as a plain binary so every criterion prints one line whether it passes or not.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use polypencil::factorize::{condition_c_point, half_factorization};
use polypencil::fixtures::*;
use polypencil::grating::{discrete_spectrum, mode_errors, outgoing_selection, solve_scattering, GratingProblem, ModeKind, Profile};
use polypencil::halfrange::{duality_census, HalfKind};
use polypencil::index::{instability_index, pontryagin_count_check};
use polypencil::linalg::*;
use polypencil::pencil::{MatrixPolynomial, Tolerances};
use polypencil::snumbers::{det_continuity_check, pontryagin_example, snumber_battery, PowerRule, PONTRYAGIN_TRUNCATIONS};
use polypencil::spectral::basis_check;
use polypencil::top::{log_grid, stability_report, viscosity_sweep, FluidSurrogate, TopConfig};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn pencil_with_singular_leading(m: usize, n: usize, seed: u64) -> MatrixPolynomial {
    let mut g = rng(seed);
    let mut coeffs: Vec<CMat> = (0..n).map(|_| rand_matrix(&mut g, m, m)).collect();
    let r = g.random_range(1..m);
    coeffs.push(rand_matrix(&mut g, m, r) * rand_matrix(&mut g, r, m));
    MatrixPolynomial::new(coeffs).unwrap()
}

fn basis_rank(tol: &Tolerances) -> Outcome {
    let (mut bad, mut singular) = (0, 0);
    for seed in 0..100u64 {
        let m = 1 + (seed % 4) as usize;
        let n = 1 + (seed / 4 % 3) as usize;
        let p = if m > 1 && seed % 3 == 0 {
            singular += 1;
            pencil_with_singular_leading(m, n, 100 + seed)
        } else {
            random_general(m, n, 100 + seed)
        };
        match basis_check(&p, tol) {
            Ok(r) if r.rank_claim_holds && r.leading_invertible == (r.deficiency == 0) => {}
            Ok(r) => {
                bad += 1;
                eprintln!("  basis seed {seed}: deficiency {} predicted {}", r.deficiency, r.predicted_deficiency);
            }
            Err(e) => {
                bad += 1;
                eprintln!("  basis seed {seed}: {e}");
            }
        }
    }
    outcome(bad == 0, format!("100 pencils, {singular} with singular leading coefficient, {bad} failures"))
}

fn duality(tol: &Tolerances) -> Outcome {
    let mut bad = 0;
    for seed in 0..100u64 {
        let m = 1 + (seed % 4) as usize;
        let damping = if seed % 2 == 0 { 0.0 } else { 1.0 };
        let p = random_dissipative_quadratic(m, 200 + seed, damping);
        match duality_census(&p, HalfKind::Eplus, tol) {
            Ok((c, _, _)) if c.identity_holds() && c.expected == 2 * m => {}
            Ok((c, _, _)) => {
                bad += 1;
                eprintln!("  census seed {seed}: {} + {} vs {}", c.xplus, c.xminus, c.expected);
            }
            Err(e) => {
                bad += 1;
                eprintln!("  census seed {seed}: {e}");
            }
        }
    }
    let (rc, _, _) = match duality_census(&radzievskii(), HalfKind::Eplus, tol) {
        Ok(x) => x,
        Err(e) => return outcome(false, format!("Radzievskii fixture: {e}")),
    };
    let non_basis = matches!(rc.basis_flags, Some((false, _))) && rc.sigma_min.0 < 1e-12;
    outcome(
        bad == 0 && non_basis && rc.identity_holds(),
        format!("100 quadratics, {bad} census failures; Radzievskii E+ sigma_min {:.1e}", rc.sigma_min.0),
    )
}

fn factorization(tol: &Tolerances) -> Outcome {
    let (mut bad, mut taken, mut skipped) = (0, 0, 0);
    let (mut worst_res, mut worst_spec) = (0.0f64, 0.0f64);
    let mut seed = 0u64;
    while taken < 200 && seed < 1000 {
        let m = 1 + (seed % 3) as usize;
        let p = random_dissipative_quadratic(m, 300 + seed, 1.0);
        seed += 1;
        if !p.classify().is_dissipative() || condition_c_point(&p).is_none() {
            skipped += 1;
            continue;
        }
        taken += 1;
        match half_factorization(&p, HalfKind::Eplus, tol) {
            Ok(h) => {
                let r = &h.result;
                let scale = 1.0 + r.divisor_spectrum.iter().fold(0.0f64, |a, z| a.max(z.norm()));
                let spec = r.spectrum_mismatch / scale;
                worst_res = worst_res.max(r.residual);
                worst_spec = worst_spec.max(spec);
                if !(r.residual <= 1e-8 && spec <= 1e-7) {
                    bad += 1;
                    eprintln!("  factor seed {}: residual {:.1e} spectrum {:.1e}", seed - 1, r.residual, spec);
                }
            }
            Err(e) => {
                bad += 1;
                eprintln!("  factor seed {}: {e}", seed - 1);
            }
        }
    }
    outcome(
        bad == 0 && taken == 200,
        format!("{taken} quadratics ({skipped} skipped), {bad} failures, worst residual {worst_res:.1e}, worst spectrum {worst_spec:.1e}"),
    )
}

/// Tally for one index family: (checked, failures, indeterminate).
#[derive(Default)]
struct Tally {
    checked: usize,
    failed: usize,
    indeterminate: usize,
}

impl Tally {
    fn record(&mut self, label: &str, r: polypencil::error::Result<polypencil::index::IndexReport>, extra: impl Fn(&polypencil::index::IndexReport) -> bool) {
        match r {
            Ok(r) if r.indeterminate => self.indeterminate += 1,
            Ok(r) => {
                self.checked += 1;
                if !(r.formula_holds && r.kappa == r.oracle_kappa && extra(&r)) {
                    self.failed += 1;
                    eprintln!("  {label}: kappa {} oracle {} nu_f {} nu_t {} eps+ {}", r.kappa, r.oracle_kappa, r.nu_f, r.nu_t, r.eps_plus);
                }
            }
            Err(e) => {
                self.checked += 1;
                self.failed += 1;
                eprintln!("  {label}: {e}");
            }
        }
    }
}

fn signed_inertia(g: &mut impl Rng, m: usize) -> CMat {
    let neg = g.random_range(0..=m);
    rand_hermitian_inertia(g, m - neg, neg)
}

fn index_formula(tol: &Tolerances) -> Outcome {
    let mut damped = Tally::default();
    for seed in 0..200u64 {
        let mut g = rng(4000 + seed);
        let m = 1 + (seed % 4) as usize;
        let f = signed_inertia(&mut g, m);
        let t = signed_inertia(&mut g, m);
        let d = rand_pd(&mut g, m, 0.3);
        let gy = if seed % 2 == 0 { CMat::zeros(m, m) } else { rand_hermitian(&mut g, m) };
        damped.record(&format!("damped seed {seed}"), instability_index(&f, &d, &gy, &t, tol), |r| r.eps_plus == 0);
    }

    let mut gyro = Tally::default();
    let s = |x: f64| from_real(1, 1, &[x]);
    let hand = instability_index(&s(1.0), &s(0.0), &s(3.0), &s(-1.0), tol);
    let hand_ok = matches!(&hand, Ok(r) if (r.kappa, r.nu_t, r.eps_plus) == (0, 1, 1));
    gyro.record("gyroscopic m=1", hand, |_| true);
    let (mut seed, mut not_semisimple) = (0u64, 0);
    while gyro.checked + gyro.indeterminate < 200 && seed < 1000 {
        let mut g = rng(5000 + seed);
        let m = 1 + (seed % 4) as usize;
        seed += 1;
        let (f, t) = if seed % 3 == 0 {
            (rand_pd(&mut g, m, 0.5), rand_pd(&mut g, m, 0.5))
        } else {
            (signed_inertia(&mut g, m), signed_inertia(&mut g, m))
        };
        let gy = rand_hermitian(&mut g, m) * cr(2.0);
        let r = instability_index(&f, &CMat::zeros(m, m), &gy, &t, tol);
        if let Ok(rep) = &r {
            if rep.imaginary.iter().any(|im| im.chains.iter().any(|c| c.length > 1)) {
                not_semisimple += 1;
                continue;
            }
        }
        gyro.record(&format!("gyroscopic seed {}", seed - 1), r, |_| true);
    }

    let mut mixed = Tally::default();
    for seed in 0..50u64 {
        let mut g = rng(9000 + seed);
        let m1 = 1 + (seed % 2) as usize;
        let m2 = 1 + (seed % 3) as usize;
        let (fneg, tneg) = (seed as usize % m2, seed as usize / 3 % m1);
        let f = block_diag(&[&rand_hermitian_inertia(&mut g, m1, 0), &rand_hermitian_inertia(&mut g, m2 - fneg, fneg)]);
        let t = block_diag(&[&rand_hermitian_inertia(&mut g, m1 - tneg, tneg), &rand_hermitian_inertia(&mut g, m2, 0)]);
        let gy = block_diag(&[&(rand_hermitian(&mut g, m1) * cr(3.0)), &rand_hermitian(&mut g, m2)]);
        let d = block_diag(&[&CMat::zeros(m1, m1), &rand_pd(&mut g, m2, 0.3)]);
        let m = m1 + m2;
        let x = rand_matrix(&mut g, m, m) + eye(m) * cr(2.0);
        let cg = |a: &CMat| x.adjoint() * a * &x;
        mixed.record(&format!("mixed seed {seed}"), instability_index(&cg(&f), &cg(&d), &cg(&gy), &cg(&t), tol), |_| true);
    }

    let fams = [("damped", &damped), ("gyroscopic", &gyro), ("mixed", &mixed)];
    let failed: usize = fams.iter().map(|(_, t)| t.failed).sum();
    let enough = damped.checked + damped.indeterminate == 200 && gyro.checked + gyro.indeterminate >= 200 && mixed.checked + mixed.indeterminate == 50;
    let parts: Vec<String> = fams.iter().map(|(n, t)| format!("{n} {}/{} ok, {} indeterminate", t.checked - t.failed, t.checked, t.indeterminate)).collect();
    outcome(
        failed == 0 && hand_ok && enough,
        format!("{}; {not_semisimple} non-semisimple gyroscopic draws skipped; m=1 case {}", parts.join("; "), if hand_ok { "ok" } else { "wrong" }),
    )
}

/// (flip·J, flip): a single Jordan block at μ whose sign characteristic is `sgn`.
fn jordan_pair(len: usize, mu: f64, sgn: f64) -> (CMat, CMat) {
    let mut flip = CMat::zeros(len, len);
    let mut jb = eye(len) * cr(mu);
    for i in 0..len {
        flip[(i, len - 1 - i)] = cr(sgn);
        if i + 1 < len {
            jb[(i, i + 1)] = cr(1.0);
        }
    }
    (&flip * jb, flip)
}

fn pontryagin_counts(tol: &Tolerances) -> Outcome {
    let (mut bad, mut partial) = (0, 0);
    for seed in 0..100u64 {
        let mut g = rng(7000 + seed);
        let (mut ws, mut ts) = (vec![], vec![]);
        let len = g.random_range(1..=3usize);
        let sgn = if g.random_bool(0.5) { 1.0 } else { -1.0 };
        let (tj, wj) = jordan_pair(len, g.random_range(-1.0..1.0), sgn);
        ws.push(wj);
        ts.push(tj);
        let k = g.random_range(1..=3usize);
        let kn = g.random_range(0..=k);
        ws.push(rand_hermitian_inertia(&mut g, k - kn, kn));
        ts.push(rand_hermitian(&mut g, k));
        let q = g.random_range(1..=3usize);
        let qn = g.random_range(0..=q);
        ws.push(rand_hermitian_inertia(&mut g, q - qn, qn));
        ts.push(rand_hermitian(&mut g, q) + rand_pd(&mut g, q, 0.2) * I);
        let w = block_diag(&ws.iter().collect::<Vec<_>>());
        let t = block_diag(&ts.iter().collect::<Vec<_>>());
        let m = w.nrows();
        let x = rand_matrix(&mut g, m, m) + eye(m) * cr(2.5);
        match pontryagin_count_check(&(x.adjoint() * &t * &x), &(x.adjoint() * &w * &x), tol) {
            Ok(r) => {
                if r.partial {
                    partial += 1;
                }
                let routes = r.real_points.iter().all(|p| p.routes_agree);
                let ok = r.dissipative && routes && if r.partial { r.signed_inequality && r.unsigned_inequality } else { r.identity_holds };
                if !ok {
                    bad += 1;
                    eprintln!("  pontryagin seed {seed}: identity {} signed {} routes {routes}", r.identity_holds, r.signed_inequality);
                }
            }
            Err(e) => {
                bad += 1;
                eprintln!("  pontryagin seed {seed}: {e}");
            }
        }
    }
    outcome(bad == 0, format!("100 pencils, {partial} partially certified, {bad} failures"))
}

fn grating() -> Outcome {
    // 0.02 cos x + 0.002 sin 2x
    let smooth = Profile::from_fourier(vec![c(0.0, 0.001), cr(0.01), cr(0.0), cr(0.01), c(0.0, -0.001)]).unwrap();
    let run = || -> polypencil::error::Result<Outcome> {
        let a = GratingProblem::from_angle(smooth.clone(), 2.5, 0.0, 32)?;
        let b = GratingProblem::from_angle(Profile::cosine(0.02, 1), 2.5, 0.0, 32)?;
        let ea = mode_errors(&a, 28)?;
        let eb = mode_errors(&b, 28)?;
        let analytic = ea.iter().chain(&eb).map(|e| e.rel_error).fold(0.0, f64::max);

        // nearest discrete eigenvalue of each profile to ±λₙ, compared with each other
        let (sa, sb) = (discrete_spectrum(&a)?, discrete_spectrum(&b)?);
        let nearest = |s: &[Complex64], z: Complex64| *s.iter().min_by(|u, v| (*u - z).norm().total_cmp(&(*v - z).norm())).unwrap();
        let independence = ea
            .iter()
            .flat_map(|e| [e.lambda, -e.lambda])
            .map(|z| (nearest(&sa, z) - nearest(&sb, z)).norm() / z.norm().max(1e-300))
            .fold(0.0, f64::max);

        let sel = outgoing_selection(&a)?;
        let prop: Vec<_> = sel.iter().filter(|m| m.kind == ModeKind::Propagating).collect();
        let form = prop.iter().map(|m| m.form_ratio.map_or(f64::INFINITY, |r| (r - 1.0).abs())).fold(0.0, f64::max);
        let signs = prop.iter().all(|m| m.sign == Some(1));

        let s = solve_scattering(&a)?;
        let flat = solve_scattering(&GratingProblem::from_angle(Profile::flat(), 2.5, 0.0, 32)?)?;
        let specular = flat
            .indices
            .iter()
            .zip(&flat.amplitudes)
            .map(|(n, z)| (z - cr(if *n == 0 { 1.0 } else { 0.0 })).norm())
            .fold(0.0, f64::max);

        let rough = GratingProblem::from_angle(Profile::cosine(0.05, 1), 2.5, 0.0, 32)?;
        let rough_err = mode_errors(&rough, 28)?.iter().map(|e| e.rel_error).fold(0.0, f64::max);

        let pass = analytic < 1e-8 && independence < 1e-8 && form < 1e-8 && signs && !prop.is_empty() && s.boundary_residual <= 1e-6 && specular < 1e-10;
        Ok(outcome(
            pass,
            format!(
                "modes {analytic:.1e}, profile gap {independence:.1e}, form {form:.1e} over {} propagating, residual {:.1e}, flat {specular:.1e} (0.05 cos x modes {rough_err:.1e}, informational)",
                prop.len(),
                s.boundary_residual
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e.to_string()))
}

fn top_config(a: [f64; 3], kg: f64) -> TopConfig {
    TopConfig::new(a, kg, 1.7, 1.0, FluidSurrogate::synthetic(12, 0.1, 7)).unwrap()
}

fn top_stability(tol: &Tolerances) -> Outcome {
    let mut lines = vec![];
    let mut pass = true;
    for (a, want) in [([3.0, 2.0, 1.0], 0), ([1.0, 2.0, 3.0], 2), ([2.0, 3.0, 1.0], 1)] {
        for kg in [0.0, 0.2] {
            let cfg = top_config(a, kg);
            match stability_report(&cfg, tol) {
                Ok(r) => {
                    let ok = r.lower_count == want && r.lower_count == cfg.pi_minus_n() && r.oracle_lower_count == want && r.kernel_as_predicted && r.symmetry_gap < 1e-9;
                    pass &= ok;
                    if kg > 0.0 {
                        lines.push(format!("{:?}: {} lower (symmetry {:.0e})", a, r.lower_count, r.symmetry_gap));
                    }
                }
                Err(e) => {
                    pass = false;
                    lines.push(format!("{a:?} kg {kg}: {e}"));
                }
            }
        }
    }
    outcome(pass, lines.join(", "))
}

fn top_asymptotics() -> Outcome {
    let nus = log_grid(1e2, 1e6, 17);
    let sw = match viscosity_sweep(&top_config([3.0, 2.0, 1.0], 0.5), &nus) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let at = nus.iter().enumerate().min_by(|x, y| (x.1.log10() - 5.0).abs().total_cmp(&(y.1.log10() - 5.0).abs())).unwrap().0;
    let divergent = sw.divergent_errors[at];
    let slope = sw.slopes.iter().map(|s| s.rel_err).fold(0.0, f64::max);
    let with_omega = sw.slopes.iter().map(|s| s.rel_err_with_omega).fold(f64::INFINITY, f64::min);
    outcome(
        !sw.slopes.is_empty() && slope < 0.05 && divergent < 1e-2,
        format!("{} slopes, worst error {:.2}% (with extra ω factor {:.0}%), divergent error {:.1e} at ν = 1e5", sw.slopes.len(), 100.0 * slope, 100.0 * with_omega, divergent),
    )
}

fn snumbers() -> Outcome {
    let battery = match snumber_battery(8, 1000, 11) {
        Ok(b) => b,
        Err(e) => return outcome(false, e.to_string()),
    };
    let det = match det_continuity_check(8, 1000, 12) {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let reports: Vec<_> = battery.iter().chain(&det.properties).collect();
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.id.as_str()).collect();
    let worst = reports.iter().map(|r| r.max_violation).fold(0.0, f64::max);
    outcome(
        failed.is_empty(),
        format!("{} properties over 1000 trials, worst violation {worst:.1e}{}", reports.len(), if failed.is_empty() { String::new() } else { format!(", failed: {}", failed.join(" ")) }),
    )
}

fn pontryagin_trends() -> Outcome {
    let ok = pontryagin_example(&PONTRYAGIN_TRUNCATIONS, PowerRule::new(1.0, 2.0), PowerRule::new(1.0, 1.0));
    let bad = pontryagin_example(&PONTRYAGIN_TRUNCATIONS, PowerRule::new(1.0, 1.0), PowerRule::new(1.0, 2.0));
    match (ok, bad) {
        (Ok(ok), Ok(bad)) => {
            let first = bad.points.first().map_or(f64::NAN, |p| p.sigma_min_tail);
            let last = bad.points.last().map_or(f64::NAN, |p| p.sigma_min_tail);
            outcome(
                ok.condition_spread < 1.5 && bad.sigma_min_decreasing && last < 0.1 * first,
                format!("bounded regime spread {:.2}; failing regime sigma_min {first:.1e} -> {last:.1e}", ok.condition_spread),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e.to_string()),
    }
}

fn main() {
    let tol = Tolerances::default();
    let criteria: Vec<(&str, u64, Box<dyn Fn() -> Outcome>)> = vec![
        ("derived-chain basis rank", 10, Box::new(|| basis_rank(&tol))),
        ("half-range duality count", 10, Box::new(|| duality(&tol))),
        ("dissipative factorization", 60, Box::new(|| factorization(&tol))),
        ("instability index formula", 120, Box::new(|| index_formula(&tol))),
        ("W-dissipative counting identity", 30, Box::new(|| pontryagin_counts(&tol))),
        ("grating modes and scattering", 30, Box::new(grating)),
        ("top stability counts", 20, Box::new(|| top_stability(&tol))),
        ("top large-viscosity asymptotics", 60, Box::new(top_asymptotics)),
        ("s-number battery", 30, Box::new(snumbers)),
        ("Pontryagin example trends", 10, Box::new(pontryagin_trends)),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = run();
        let dt = t0.elapsed();
        let in_time = dt <= Duration::from_secs(*budget);
        let pass = o.pass && in_time;
        if !pass {
            failures += 1;
        }
        let time = if in_time { String::new() } else { format!(" over the {budget} s budget") };
        println!("criterion {:>2} {name}: {} ({}; {:.2} s{time})", i + 1, if pass { "PASS" } else { "FAIL" }, o.detail, dt.as_secs_f64());
    }
    if failures > 0 {
        eprintln!("{failures} criteria failed");
        std::process::exit(1);
    }
}
