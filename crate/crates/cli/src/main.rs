use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use polypencil::error::PencilError;
use polypencil::halfrange::HalfKind;
use polypencil::pencil::Tolerances;

mod commands;
mod manifest;
mod parse;

#[derive(Parser, Debug)]
#[command(name = "polypencil", version, about = "Spectral analysis of matrix polynomials")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Relative rank threshold (default: 100·ε·m·n).
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    /// Band around the real axis treated as real, relative to 1 + |λ|.
    #[arg(long, global = true)]
    pub tol_real: Option<f64>,
    /// Radius for merging computed eigenvalues into one cluster.
    #[arg(long, global = true)]
    pub tol_cluster: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Exit with code 4 when the checked statement comes out false.
    #[arg(long = "assert", global = true)]
    pub assert: bool,
    /// Directory for the CSV side outputs of grating and top.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

impl Global {
    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if self.tol_rank.is_some() {
            t.tol_rank = self.tol_rank;
        }
        if let Some(x) = self.tol_real {
            t.tol_real = x;
        }
        if let Some(x) = self.tol_cluster {
            t.tol_cluster = x;
        }
        t
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinKind {
    First,
    Monic,
    Wq,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Snumbers,
    Det,
    Pontryagin,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Finite and infinite eigenvalues with partial multiplicities.
    Eig {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Canonical systems of Jordan chains.
    Chains {
        #[arg(short, long)]
        input: PathBuf,
        /// Only this eigenvalue (e.g. 1, -2i, 0.5+1i).
        #[arg(long, value_parser = parse::complex)]
        at: Option<Complex64>,
    },
    /// Sign characteristics at real eigenvalues.
    Signs {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_parser = parse::complex)]
        at: Option<Complex64>,
    },
    /// Half-range chain selection, duality census and the Cauchy problem.
    Half {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_parser = parse::half_kind)]
        kind: HalfKind,
        /// Initial data: JSON list of l complex vectors.
        #[arg(long)]
        solve: Option<PathBuf>,
    },
    /// Right divisor by spectral selection.
    Factor {
        #[arg(short, long)]
        input: PathBuf,
        /// upper | lower | E+ | E- | Y+ | Y- | dissipative | list:<λ,λ,…>
        #[arg(long)]
        select: String,
        /// Divisor degree (required for upper, lower and list selections).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Instability index of λ²F + λ(D + iG) + T.
    Index {
        #[arg(long = "F")]
        f: Option<PathBuf>,
        #[arg(long = "D")]
        d: Option<PathBuf>,
        #[arg(long = "G")]
        g: Option<PathBuf>,
        #[arg(long = "T")]
        t: Option<PathBuf>,
        /// Directory of cases, each a subdirectory holding F.json, D.json, G.json, T.json.
        #[arg(long, conflicts_with_all = ["f", "d", "g", "t"])]
        suite: Option<PathBuf>,
    },
    /// Periodic grating: modes, outgoing selection and the scattered field.
    Grating {
        /// fourier:<file> | samples:<file> | flat | cos:<amplitude>
        #[arg(long)]
        profile: String,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[arg(long)]
        modes: usize,
        #[arg(long, value_parser = parse::grid)]
        field_grid: Option<(usize, usize)>,
    },
    /// Rotating top with a fluid-filled cavity.
    Top {
        #[arg(long)]
        config: PathBuf,
        /// nu:<lo>..<hi>:log|lin:<count>
        #[arg(long, value_parser = parse::sweep)]
        sweep: Option<parse::Sweep>,
    },
    /// Randomized property batteries.
    Props {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        size: usize,
    },
    /// Dump a linearization.
    Linearize {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: LinKind,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Eig { .. } => "eig",
            Cmd::Chains { .. } => "chains",
            Cmd::Signs { .. } => "signs",
            Cmd::Half { .. } => "half",
            Cmd::Factor { .. } => "factor",
            Cmd::Index { .. } => "index",
            Cmd::Grating { .. } => "grating",
            Cmd::Top { .. } => "top",
            Cmd::Props { .. } => "props",
            Cmd::Linearize { .. } => "linearize",
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<PencilError>() {
        Some(p) => p.exit_code() as u8,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.cmd.name(), &cli.cmd, &cli.global) {
        Ok(out) => {
            print!("{}", out.stdout);
            if cli.global.assert && out.verdict == Some(false) {
                eprintln!("assertion failed: the checked statement does not hold");
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
