use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use polypencil::error::PencilError;
use polypencil::grating::{self, GratingProblem, ModeKind, Profile};
use polypencil::halfrange::{duality_census, solve_halfrange_cauchy, HalfKind, HalfSystem};
use polypencil::index::instability_index;
use polypencil::io::{self, encode_vector, MatrixJson};
use polypencil::linearize::{companion_first, companion_monic, wq_family};
use polypencil::pencil::{MatrixPolynomial, Tolerances};
use polypencil::signchar::{local_regular_system, normal_canonical_system, ChainSign, SignRoute, SignedCanonicalSystem};
use polypencil::spectral::{all_canonical_systems, canonical_system, eigenvalues};
use polypencil::{factorize, snumbers, top};
use serde::Serialize;

use crate::manifest::{Envelope, RunManifest};
use crate::parse;
use crate::{Cmd, Format, Global, LinKind, Suite};

/// CSV cell: plain decimal in the mid range, exponent form outside it. Both round-trip.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Output {
    pub stdout: String,
    pub verdict: Option<bool>,
}

struct Ctx<'a> {
    manifest: RunManifest,
    global: &'a Global,
    tol: Tolerances,
}

impl Ctx<'_> {
    fn pencil(&mut self, path: &Path) -> Result<MatrixPolynomial> {
        let text = self.manifest.read(path)?;
        io::parse_pencil(&text).with_context(|| path.display().to_string())
    }

    fn matrix(&mut self, path: &Path) -> Result<polypencil::linalg::CMat> {
        let text = self.manifest.read(path)?;
        io::parse_matrix(&text).with_context(|| path.display().to_string())
    }

    fn json<T: Serialize>(&self, result: &T, verdict: Option<bool>) -> Result<Output> {
        let env = Envelope { manifest: &self.manifest, verdict, result };
        let mut s = serde_json::to_string_pretty(&env)?;
        s.push('\n');
        Ok(Output { stdout: s, verdict })
    }

    /// CSV on stdout when requested, JSON otherwise.
    fn emit<T: Serialize>(&self, result: &T, verdict: Option<bool>, csv: Option<String>) -> Result<Output> {
        match (self.global.format, csv) {
            (Format::Csv, Some(table)) => Ok(Output { stdout: table, verdict }),
            (Format::Csv, None) => Err(PencilError::Validation(format!("{} has no CSV form", self.manifest.subcommand)).into()),
            (Format::Json, _) => self.json(result, verdict),
        }
    }

    fn write_side(&self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.global.out_dir {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn run(name: &str, cmd: &Cmd, global: &Global) -> Result<Output> {
    let tol = global.tolerances();
    let mut ctx = Ctx { manifest: RunManifest::new(name, tol, global.seed), global, tol };
    match cmd {
        Cmd::Eig { input } => eig(&mut ctx, input),
        Cmd::Chains { input, at } => chains(&mut ctx, input, *at),
        Cmd::Signs { input, at } => signs(&mut ctx, input, *at),
        Cmd::Half { input, kind, solve } => half(&mut ctx, input, *kind, solve.as_deref()),
        Cmd::Factor { input, select, k } => factor(&mut ctx, input, select, *k),
        Cmd::Index { f, d, g, t, suite } => match suite {
            Some(dir) => index_suite(&mut ctx, dir),
            None => {
                let need = |p: &Option<std::path::PathBuf>, flag: &str| {
                    p.clone().ok_or_else(|| anyhow!(PencilError::Validation(format!("--{flag} is required without --suite"))))
                };
                index(&mut ctx, &need(f, "F")?, &need(d, "D")?, &need(g, "G")?, &need(t, "T")?)
            }
        },
        Cmd::Grating { profile, k, phi, modes, field_grid } => grating_cmd(&mut ctx, profile, *k, *phi, *modes, *field_grid),
        Cmd::Top { config, sweep } => top_cmd(&mut ctx, config, sweep.as_ref().map(|s| s.0.as_slice())),
        Cmd::Props { suite, trials, size } => props(&ctx, *suite, *trials, *size),
        Cmd::Linearize { input, kind } => linearize(&mut ctx, input, *kind),
    }
}

fn eig(ctx: &mut Ctx, input: &Path) -> Result<Output> {
    let p = ctx.pencil(input)?;
    let spec = eigenvalues(&p, &ctx.tol)?;
    let mut csv = String::from("re,im,geo,alg\n");
    for e in &spec.finite {
        writeln!(csv, "{},{},{},{}", num(e.eigenvalue.re), num(e.eigenvalue.im), e.geometric, e.algebraic)?;
    }
    ctx.emit(&spec, None, Some(csv))
}

#[derive(Serialize)]
struct ChainsOut {
    eigenvalue: Complex64,
    lengths: Vec<usize>,
    residual: f64,
    chains: Vec<Vec<Vec<[f64; 2]>>>,
}

fn chains(ctx: &mut Ctx, input: &Path, at: Option<Complex64>) -> Result<Output> {
    let p = ctx.pencil(input)?;
    let systems = match at {
        Some(l) => vec![canonical_system(&p, l, &ctx.tol)?],
        None => all_canonical_systems(&p, &eigenvalues(&p, &ctx.tol)?, &ctx.tol, false)?,
    };
    let out: Vec<ChainsOut> = systems
        .iter()
        .map(|cs| ChainsOut {
            eigenvalue: cs.eigenvalue,
            lengths: cs.lengths(),
            residual: cs.residual(&p),
            chains: cs.chains.iter().map(|ch| ch.iter().map(encode_vector).collect()).collect(),
        })
        .collect();
    ctx.emit(&out, None, None)
}

#[derive(Serialize)]
struct SignsOut {
    eigenvalue: Complex64,
    route: SignRoute,
    relation_residual: f64,
    chains: Vec<ChainSign>,
}

fn signed_system(p: &MatrixPolynomial, lambda: Complex64, tol: &Tolerances) -> Result<SignedCanonicalSystem> {
    let cls = p.classify();
    if p.has_hermitian_coeffs() && cls.leading_invertible {
        return Ok(normal_canonical_system(p, lambda, tol)?);
    }
    if cls.is_dissipative() {
        // regular systems need a nonzero point; sign characteristics are shift invariant
        if lambda.norm() <= tol.tol_real {
            return Ok(local_regular_system(&p.shift(Complex64::new(-1.0, 0.0)), Complex64::new(1.0, 0.0), tol)?);
        }
        return Ok(local_regular_system(p, lambda, tol)?);
    }
    Err(PencilError::Validation(
        "sign characteristics need a Hermitian pencil with invertible leading coefficient or a dissipative pencil".into(),
    )
    .into())
}

fn signs(ctx: &mut Ctx, input: &Path, at: Option<Complex64>) -> Result<Output> {
    let p = ctx.pencil(input)?;
    let points: Vec<Complex64> = match at {
        Some(l) => vec![l],
        None => eigenvalues(&p, &ctx.tol)?.finite.iter().filter(|e| e.is_real).map(|e| e.eigenvalue).collect(),
    };
    let mut out = Vec::with_capacity(points.len());
    for l in points {
        let s = signed_system(&p, l, &ctx.tol)?;
        let chains = s.summary().into_iter().map(|c| ChainSign { eigenvalue: l, ..c }).collect();
        out.push(SignsOut { eigenvalue: l, route: s.route, relation_residual: s.relation_residual, chains });
    }
    ctx.emit(&out, None, None)
}

#[derive(Serialize)]
struct SelectedOut {
    eigenvalue: Complex64,
    selected: usize,
    chain_length: usize,
    sign: i8,
}

#[derive(Serialize)]
struct HalfOut {
    kind: HalfKind,
    census: polypencil::halfrange::DualityCensus,
    selected: Vec<SelectedOut>,
    target_dim: usize,
    unstable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<SolutionOut>,
}

#[derive(Serialize)]
struct SolutionOut {
    terms: Vec<polypencil::halfrange::TermInfo>,
    ode_residual: f64,
    initial_residual: f64,
    decay_rate: Option<f64>,
    decaying_part_ok: bool,
}

fn half(ctx: &mut Ctx, input: &Path, kind: HalfKind, solve: Option<&Path>) -> Result<Output> {
    let p = ctx.pencil(input)?;
    let (census, plus, minus) = duality_census(&p, kind, &ctx.tol)?;
    let h: &HalfSystem = if plus.kind == kind { &plus } else { &minus };
    let selected = h
        .chains
        .iter()
        .filter(|c| c.selected > 0)
        .map(|c| SelectedOut { eigenvalue: c.eigenvalue, selected: c.selected, chain_length: c.chain.len(), sign: c.sign })
        .collect();
    let solution = match solve {
        Some(path) => {
            let phi = io::parse_vectors(&ctx.manifest.read(path)?).with_context(|| path.display().to_string())?;
            let s = solve_halfrange_cauchy(&p, &phi, kind, &ctx.tol)?;
            Some(SolutionOut {
                terms: s.terms.clone(),
                ode_residual: s.ode_residual,
                initial_residual: s.initial_residual,
                decay_rate: s.decay_rate.is_finite().then_some(s.decay_rate),
                decaying_part_ok: s.decaying_part_ok,
            })
        }
        None => None,
    };
    let verdict = census.identity_holds();
    let out = HalfOut { kind, census, selected, target_dim: h.target_dim, unstable: h.unstable, solution };
    ctx.emit(&out, Some(verdict), None)
}

/// Relative residual below which a computed factorization counts as exact.
const FACTOR_RESIDUAL: f64 = 1e-8;

fn factor(ctx: &mut Ctx, input: &Path, select: &str, k: Option<usize>) -> Result<Output> {
    let p = ctx.pencil(input)?;
    let tol = ctx.tol;
    let need_k = || k.ok_or_else(|| anyhow!(PencilError::Validation(format!("--k is required for --select {select}"))));
    let result = match select {
        "upper" => factorize::factor_by_selection(&p, |z| z.im > 0.0, need_k()?, "upper", &tol)?,
        "lower" => factorize::factor_by_selection(&p, |z| z.im < 0.0, need_k()?, "lower", &tol)?,
        "dissipative" => factorize::dissipative_factorization(&p, &tol)?.result,
        s if s.starts_with("list:") => {
            let wanted = parse::complex_list(&s[5..]).map_err(PencilError::Validation)?;
            let radius = tol.tol_cluster.max(1e-6);
            let pick = move |z: Complex64| wanted.iter().any(|w| (z - w).norm() <= radius * (1.0 + w.norm()));
            factorize::factor_by_selection(&p, pick, need_k()?, s, &tol)?
        }
        s => {
            let kind = parse::half_kind(s).map_err(PencilError::Validation)?;
            factorize::half_factorization(&p, kind, &tol)?.result
        }
    };
    if let Some(k) = k {
        if result.k_poly.degree() != k {
            bail!(PencilError::Validation(format!("selection gives a divisor of degree {}, not {k}", result.k_poly.degree())));
        }
    }
    let summary = result.summary();
    let verdict = summary.residual <= FACTOR_RESIDUAL;
    ctx.emit(&summary, Some(verdict), None)
}

fn index(ctx: &mut Ctx, f: &Path, d: &Path, g: &Path, t: &Path) -> Result<Output> {
    let (f, d, g, t) = (ctx.matrix(f)?, ctx.matrix(d)?, ctx.matrix(g)?, ctx.matrix(t)?);
    let report = instability_index(&f, &d, &g, &t, &ctx.tol)?;
    let verdict = report.formula_holds;
    ctx.emit(&report, Some(verdict), None)
}

#[derive(Serialize)]
struct SuiteRow {
    case: String,
    formula_holds: Option<bool>,
    kappa: Option<usize>,
    oracle_kappa: Option<usize>,
    error: Option<String>,
}

fn index_suite(ctx: &mut Ctx, dir: &Path) -> Result<Output> {
    let mut cases: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    cases.sort();
    let mut rows = Vec::with_capacity(cases.len());
    for case in cases {
        let name = case.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let file = |stem: &str| {
            let upper = case.join(format!("{stem}.json"));
            if upper.exists() {
                upper
            } else {
                case.join(format!("{}.json", stem.to_lowercase()))
            }
        };
        let attempt = (|| -> Result<_> {
            let (f, d, g, t) = (ctx.matrix(&file("F"))?, ctx.matrix(&file("D"))?, ctx.matrix(&file("G"))?, ctx.matrix(&file("T"))?);
            Ok(instability_index(&f, &d, &g, &t, &ctx.tol)?)
        })();
        rows.push(match attempt {
            Ok(r) => SuiteRow { case: name, formula_holds: Some(r.formula_holds), kappa: Some(r.kappa), oracle_kappa: Some(r.oracle_kappa), error: None },
            Err(e) => SuiteRow { case: name, formula_holds: None, kappa: None, oracle_kappa: None, error: Some(format!("{e:#}")) },
        });
    }
    let verdict = rows.iter().all(|r| r.formula_holds == Some(true));
    let mut csv = String::from("case,formula_holds,kappa,oracle_kappa,error\n");
    for r in &rows {
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let holds = r.formula_holds.map(|v| v.to_string()).unwrap_or_default();
        writeln!(csv, "{},{},{},{},{}", r.case, holds, opt(r.kappa), opt(r.oracle_kappa), r.error.as_deref().unwrap_or("").replace(',', ";"))?;
    }
    ctx.emit(&rows, Some(verdict), Some(csv))
}

#[derive(Serialize)]
struct GratingOut {
    k: f64,
    phi: f64,
    quasimomentum: f64,
    modes: usize,
    c2_norm: f64,
    propagating_count: usize,
    resonance: grating::Resonance,
    outgoing: Vec<grating::OutgoingMode>,
    mode_errors: Vec<grating::ModeMatch>,
    scattering: Option<grating::ScatterSolution>,
}

fn profile_arg(ctx: &mut Ctx, spec: &str) -> Result<Profile> {
    if spec == "flat" {
        return Ok(Profile::flat());
    }
    if let Some(a) = spec.strip_prefix("cos:") {
        let amp: f64 = a.parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(|| anyhow!(PencilError::Validation(format!("bad amplitude {a}"))))?;
        return Ok(Profile::cosine(amp, 1));
    }
    if let Some(path) = spec.strip_prefix("fourier:") {
        let text = ctx.manifest.read(Path::new(path))?;
        return Ok(io::parse_profile_fourier(&text).with_context(|| path.to_string())?);
    }
    if let Some(path) = spec.strip_prefix("samples:") {
        let text = ctx.manifest.read(Path::new(path))?;
        return Ok(io::parse_profile_samples(&text).with_context(|| path.to_string())?);
    }
    Err(PencilError::Validation(format!("unknown profile \"{spec}\"; expected fourier:<file>, samples:<file>, flat or cos:<amp>")).into())
}

/// Outgoing propagating modes must carry a positive form of unit ratio.
const FORM_RATIO_TOL: f64 = 1e-6;

fn grating_cmd(ctx: &mut Ctx, profile: &str, k: f64, phi: f64, modes: usize, field: Option<(usize, usize)>) -> Result<Output> {
    let prof = profile_arg(ctx, profile)?;
    let gp = GratingProblem::from_angle(prof, k, phi, modes)?;
    let outgoing = grating::outgoing_selection(&gp)?;
    let mode_errors = grating::mode_errors(&gp, (modes as i64 - 4).max(0))?;
    let resonance = grating::resonance_detect(k, gp.quasimomentum);
    // at a resonance the scattering problem is still solvable, but its conditioning may fail
    let scattering = match grating::solve_scattering(&gp) {
        Ok(s) => Some(s),
        Err(PencilError::Numerical(_)) if resonance.resonant => None,
        Err(e) => return Err(e.into()),
    };

    let mut modes_csv = String::from("n,mu,re_lambda,im_lambda,sign\n");
    for m in &outgoing {
        let sign = m.sign.map(|s| s.to_string()).unwrap_or_default();
        writeln!(modes_csv, "{},{},{},{},{}", m.n, num(m.mu), num(m.lambda.re), num(m.lambda.im), sign)?;
    }
    ctx.write_side("modes.csv", &modes_csv)?;
    if let Some(s) = &scattering {
        let mut amp = String::from("n,re,im,propagating\n");
        for (i, &n) in s.indices.iter().enumerate() {
            writeln!(amp, "{},{},{},{}", n, num(s.amplitudes[i].re), num(s.amplitudes[i].im), s.propagating.contains(&n))?;
        }
        ctx.write_side("amplitudes.csv", &amp)?;
        if let Some((nx, ny)) = field {
            let top = gp.profile.sup(0);
            let mut grid = String::from("x,y,re,im\n");
            for i in 0..nx {
                let x = 2.0 * std::f64::consts::PI * i as f64 / nx as f64;
                for j in 0..ny {
                    let y = top + 2.0 * std::f64::consts::PI * j as f64 / (ny - 1) as f64;
                    let u = s.field(x, y)?;
                    writeln!(grid, "{},{},{},{}", num(x), num(y), num(u.re), num(u.im))?;
                }
            }
            ctx.write_side("field.csv", &grid)?;
        }
    }

    let verdict = outgoing.iter().all(|m| match m.kind {
        ModeKind::Propagating => m.sign == Some(1) && m.form_ratio.is_some_and(|r| (r - 1.0).abs() <= FORM_RATIO_TOL),
        _ => true,
    });
    let out = GratingOut {
        k,
        phi,
        quasimomentum: gp.quasimomentum,
        modes,
        c2_norm: gp.profile.c2_norm(),
        propagating_count: gp.propagating_count(),
        resonance,
        outgoing,
        mode_errors,
        scattering,
    };
    ctx.emit(&out, Some(verdict), Some(modes_csv))
}

#[derive(Serialize)]
struct TopOut {
    stability: top::StabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<top::SweepReport>,
}

fn top_cmd(ctx: &mut Ctx, config: &Path, sweep: Option<&[f64]>) -> Result<Output> {
    let text = ctx.manifest.read(config)?;
    let cfg = io::parse_top_config(&text, ctx.global.seed).with_context(|| config.display().to_string())?;
    let stability = top::stability_report(&cfg, &ctx.tol)?;
    let sweep = sweep.map(|nus| top::viscosity_sweep(&cfg, nus)).transpose()?;
    let mut csv = String::from("nu,re,im,branch\n");
    if let Some(s) = &sweep {
        for (i, nu) in s.nus.iter().enumerate() {
            for b in &s.branches {
                writeln!(csv, "{},{},{},{}", num(*nu), num(b.points[i].re), num(b.points[i].im), b.id)?;
            }
        }
        ctx.write_side("trajectory.csv", &csv)?;
    }
    let verdict = stability.counts_hold;
    let csv = sweep.is_some().then_some(csv);
    ctx.emit(&TopOut { stability, sweep }, Some(verdict), csv)
}

#[derive(Serialize)]
#[serde(untagged)]
enum PropsOut {
    Battery(Vec<snumbers::PropertyReport>),
    Det(snumbers::DetReport),
    Pontryagin(Vec<snumbers::PontryaginTrend>),
}

fn props(ctx: &Ctx, suite: Suite, trials: usize, size: usize) -> Result<Output> {
    let seed = ctx.global.seed;
    let table = |reports: &[snumbers::PropertyReport]| {
        let mut csv = String::from("id,trials,max_violation,passed\n");
        for r in reports {
            let _ = writeln!(csv, "{},{},{},{}", r.id, r.trials, num(r.max_violation), r.passed());
        }
        csv
    };
    match suite {
        Suite::Snumbers => {
            let reports = snumbers::snumber_battery(size, trials, seed)?;
            let verdict = reports.iter().all(|r| r.passed());
            let csv = table(&reports);
            ctx.emit(&PropsOut::Battery(reports), Some(verdict), Some(csv))
        }
        Suite::Det => {
            let rep = snumbers::det_continuity_check(size, trials, seed)?;
            let verdict = rep.properties.iter().all(|r| r.passed()) && rep.trend_monotone;
            let csv = table(&rep.properties);
            ctx.emit(&PropsOut::Det(rep), Some(verdict), Some(csv))
        }
        Suite::Pontryagin => {
            use snumbers::{pontryagin_example, PowerRule, PONTRYAGIN_TRUNCATIONS};
            let trends = vec![
                pontryagin_example(&PONTRYAGIN_TRUNCATIONS, PowerRule::new(1.0, 2.0), PowerRule::new(1.0, 1.0))?,
                pontryagin_example(&PONTRYAGIN_TRUNCATIONS, PowerRule::new(1.0, 1.0), PowerRule::new(1.0, 2.0))?,
            ];
            // the basis trends are reported; the verdict covers the exact identities only
            let verdict = trends
                .iter()
                .flat_map(|t| &t.points)
                .all(|p| p.eigvec_residual <= 1e-12 && p.associated_residual <= 1e-10 && p.ga_hermitian_gap == 0.0);
            let mut csv = String::from("alpha_exponent,beta_exponent,n,root_condition,sigma_min_tail\n");
            for t in &trends {
                for p in &t.points {
                    writeln!(csv, "{},{},{},{},{}", t.alpha.exponent, t.beta.exponent, p.n, num(p.root_condition), num(p.sigma_min_tail))?;
                }
            }
            ctx.emit(&PropsOut::Pontryagin(trends), Some(verdict), Some(csv))
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum LinOut {
    First { a0_hat: MatrixJson, a1_hat: MatrixJson },
    Monic { a_tilde: MatrixJson },
    Wq { w: Vec<MatrixJson>, v0: MatrixJson, v1: MatrixJson, a_lin: MatrixJson, identity_residuals: Vec<Option<f64>> },
}

fn linearize(ctx: &mut Ctx, input: &Path, kind: LinKind) -> Result<Output> {
    let p = ctx.pencil(input)?;
    let rank_tol = ctx.tol.rank_tol(p.size(), p.degree());
    let out = match kind {
        LinKind::First => {
            let c = companion_first(&p)?;
            LinOut::First { a0_hat: (&c.a0_hat).into(), a1_hat: (&c.a1_hat).into() }
        }
        LinKind::Monic => LinOut::Monic { a_tilde: (&companion_monic(&p, rank_tol)?.a_tilde).into() },
        LinKind::Wq => {
            let f = wq_family(&p, rank_tol)?;
            LinOut::Wq {
                w: f.w.iter().map(MatrixJson::from).collect(),
                v0: (&f.v0).into(),
                v1: (&f.v1).into(),
                a_lin: (&f.a_lin).into(),
                identity_residuals: (0..f.w.len()).map(|q| f.identity_residual(q)).collect(),
            }
        }
    };
    ctx.emit(&out, None, None)
}
