//! Command-line front end: sampling runs, verification suites and
//! coefficient computations, with reproducible outputs and a manifest next
//! to every file written.
//!
//! Exit codes: 0 success, 1 verification failures, 2 invalid parameters or
//! unknown suite, 3 I/O failure, 4 singular matrix input.

mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use dppsim::ensembles::{
    det_gaf_zeros, ginibre_points, spherical_points, truncated_unitary_matrix,
    truncated_unitary_points, PointConfiguration,
};
use dppsim::linalg::{ComplexMatrix, MatrixJson, RngStream};
use dppsim::series::{blaschke_derivatives, series_ratio, TruncatedSeries};
use dppsim::verify::{run_suite, run_trials, Config, SUITE_NAMES};
use dppsim::Error;

#[derive(Parser)]
#[command(
    name = "dppsim",
    version,
    about = "Samplers, kernels and statistical checks for determinantal point processes of random matrix-valued analytic functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw point configurations and write them as JSONL or CSV.
    Sample(SampleArgs),
    /// Run a named verification suite and report pass/fail per test.
    Verify(VerifyArgs),
    /// Compute Blaschke-ratio series coefficients by both routes.
    Coeffs(CoeffsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    /// Ginibre eigenvalues in the plane.
    Planar,
    /// Zeros of det(z G1 - G2) on the sphere chart.
    Spherical,
    /// Eigenvalues of a truncated Haar unitary in the disk.
    Truncated,
    /// Zeros of a matrix power series determinant in a disk.
    DetGaf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Parser)]
struct SampleArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Matrix size / intensity parameter.
    #[arg(long)]
    n: u32,
    /// Number of points for the truncated family (block size N).
    #[arg(long = "N")]
    n_points: Option<u32>,
    /// Sampling disk radius for the det-gaf family.
    #[arg(long)]
    radius: Option<f64>,
    /// Series tail bound for the det-gaf family.
    #[arg(long, default_value_t = 1e-6)]
    tail_eps: f64,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    /// Also write gnuplot-ready "x y weight" triples to this path.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Parser)]
struct VerifyArgs {
    /// One of the named suites; see --help for the list.
    #[arg(long)]
    suite: String,
    /// Optional key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long = "N")]
    n_points: Option<u32>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    tail_eps: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the reports as a JSON array here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct CoeffsArgs {
    /// JSON matrix file ({"rows":..,"cols":..,"re":[..],"im":[..]}).
    #[arg(long, conflicts_with_all = ["n_points", "n"])]
    matrix: Option<PathBuf>,
    /// Sample a truncated Haar unitary of this size instead.
    #[arg(long = "N", requires = "n")]
    n_points: Option<u32>,
    /// Truncation parameter for the sampled matrix.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Coeffs(args) => cmd_coeffs(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

enum CmdError {
    Domain(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Domain(e) => write!(f, "{e}"),
            CmdError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Domain(e)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e)
    }
}

fn exit_code_for(e: &CmdError) -> ExitCode {
    match e {
        CmdError::Io(_) => ExitCode::from(3),
        CmdError::Domain(Error::Singular { .. }) => ExitCode::from(4),
        CmdError::Domain(
            Error::Domain(_)
            | Error::Config(_)
            | Error::Guard(_)
            | Error::Arity { .. }
            | Error::NonSquare { .. }
            | Error::Dimension(_)
            | Error::InvalidData(_),
        ) => ExitCode::from(2),
        CmdError::Domain(_) => ExitCode::FAILURE,
    }
}

type CmdResult = Result<ExitCode, CmdError>;

type Sampler = Box<dyn Fn(&mut RngStream) -> dppsim::Result<PointConfiguration> + Sync>;

fn cmd_sample(args: SampleArgs) -> CmdResult {
    if args.n == 0 {
        return Err(Error::Domain("n must be positive".into()).into());
    }
    let sampler: Sampler = match args.family {
        Family::Planar => Box::new(move |rng| ginibre_points(args.n, rng)),
        Family::Spherical => Box::new(move |rng| spherical_points(args.n, rng)),
        Family::Truncated => {
            let n_points = args.n_points.ok_or_else(|| {
                Error::Domain("the truncated family needs --N (number of points)".into())
            })?;
            Box::new(move |rng| truncated_unitary_points(n_points, args.n, rng))
        }
        Family::DetGaf => {
            let radius = args.radius.ok_or_else(|| {
                Error::Domain("the det-gaf family needs --radius in (0, 1)".into())
            })?;
            if !(0.0 < radius && radius < 1.0) {
                return Err(Error::Domain(format!("radius {radius} must be in (0, 1)")).into());
            }
            let tail_eps = args.tail_eps;
            Box::new(move |rng| det_gaf_zeros(args.n, radius, tail_eps, rng))
        }
    };

    let seed = args.seed;
    let configs = run_trials(args.trials, args.threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        sampler(&mut rng)
    })?;

    let body = match args.format {
        Format::Jsonl => {
            let mut text = String::new();
            for config in &configs {
                text.push_str(&serde_json::to_string(config).expect("serializable"));
                text.push('\n');
            }
            text
        }
        Format::Csv => {
            let mut text = String::from("trial,index,re,im\n");
            for (trial, config) in configs.iter().enumerate() {
                for (index, z) in config.points.iter().enumerate() {
                    text.push_str(&format!("{trial},{index},{},{}\n", z.re, z.im));
                }
            }
            text
        }
    };
    std::fs::write(&args.out, &body)?;
    let mut outputs = vec![(args.out.clone(), body.as_bytes().to_vec())];

    if let Some(path) = &args.gnuplot {
        let mut text = String::new();
        for config in &configs {
            for z in &config.points {
                text.push_str(&format!("{} {} 1.0\n", z.re, z.im));
            }
        }
        std::fs::write(path, &text)?;
        outputs.push((path.clone(), text.into_bytes()));
    }

    let flags = resolved_flags(&[
        ("command", "sample".into()),
        ("family", format!("{:?}", args.family).to_lowercase()),
        ("n", args.n.to_string()),
        (
            "N",
            args.n_points.map(|v| v.to_string()).unwrap_or_default(),
        ),
        (
            "radius",
            args.radius.map(|v| v.to_string()).unwrap_or_default(),
        ),
        ("tail_eps", args.tail_eps.to_string()),
        ("trials", args.trials.to_string()),
        ("seed", args.seed.to_string()),
        ("format", format!("{:?}", args.format).to_lowercase()),
        ("threads", args.threads.to_string()),
    ]);
    manifest::write(&args.out, "sample", flags, &outputs)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let mut cfg = match &args.config {
        Some(path) => Config::parse(&std::fs::read_to_string(path)?)?,
        None => Config::new(),
    };
    if let Some(v) = args.n {
        cfg.set("n", v);
    }
    if let Some(v) = args.n_points {
        cfg.set("N", v);
    }
    if let Some(v) = args.kmax {
        cfg.set("kmax", v);
    }
    if let Some(v) = args.radius {
        cfg.set("radius", v);
    }
    if let Some(v) = args.tail_eps {
        cfg.set("tail_eps", v);
    }
    if let Some(v) = args.trials {
        cfg.set("trials", v);
    }
    if let Some(v) = args.seed {
        cfg.set("seed", v);
    }
    if let Some(v) = args.threads {
        cfg.set("threads", v);
    }

    if !SUITE_NAMES.contains(&args.suite.as_str()) {
        return Err(Error::Config(format!(
            "unknown suite {:?}; available: {}",
            args.suite,
            SUITE_NAMES.join(", ")
        ))
        .into());
    }
    // Echo the resolved configuration so every run is reproducible from
    // its own output.
    println!(
        "suite={} seed={} trials={} threads={}",
        args.suite,
        cfg.get_u64("seed", 1)?,
        cfg.get_str("trials").unwrap_or("default"),
        cfg.get_usize("threads", 1)?,
    );
    let reports = run_suite(&args.suite, &cfg)?;
    for report in &reports {
        println!("{}", report.summary_line());
    }
    if let Some(out) = &args.out {
        let body = serde_json::to_string_pretty(&reports).expect("serializable");
        std::fs::write(out, &body)?;
        let flags = resolved_flags(&[
            ("command", "verify".into()),
            ("suite", args.suite.clone()),
            ("seed", args.seed.map(|v| v.to_string()).unwrap_or_default()),
            (
                "trials",
                args.trials.map(|v| v.to_string()).unwrap_or_default(),
            ),
        ]);
        manifest::write(out, "verify", flags, &[(out.clone(), body.into_bytes())])?;
    }
    if reports.iter().all(|r| r.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

#[derive(serde::Serialize)]
struct CoeffsOutput {
    kmax: usize,
    det: [f64; 2],
    cycle_sum: TruncatedSeries,
    series_division: TruncatedSeries,
    max_relative_discrepancy: f64,
}

fn cmd_coeffs(args: CoeffsArgs) -> CmdResult {
    let matrix: ComplexMatrix = match (&args.matrix, args.n_points) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let json: MatrixJson = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidData(format!("matrix file: {e}")))?;
            ComplexMatrix::try_from(json)?
        }
        (None, Some(n_points)) => {
            let n = args.n.expect("clap enforces --n with --N");
            let mut rng = RngStream::new(args.seed, 0);
            truncated_unitary_matrix(n_points, n, &mut rng)
        }
        (None, None) => {
            return Err(Error::Domain(
                "provide either --matrix FILE or --N SIZE --n K to sample one".into(),
            )
            .into())
        }
    };

    // The cycle-sum route fails on singular input; the caller should
    // resample with a fresh seed in that case.
    let derivatives = blaschke_derivatives(&matrix, args.kmax).map_err(|e| match e {
        Error::Singular { smin, threshold } => {
            eprintln!("hint: the matrix is numerically singular; resample with a different --seed");
            Error::Singular { smin, threshold }
        }
        other => other,
    })?;
    let mut factorial = 1.0f64;
    let cycle_coeffs: Vec<Complex64> = derivatives
        .iter()
        .enumerate()
        .map(|(k, d)| {
            if k > 0 {
                factorial *= k as f64;
            }
            d / factorial
        })
        .collect();
    let cycle_sum = TruncatedSeries::new(cycle_coeffs)?;
    let series_division = series_ratio(&matrix, args.kmax)?;

    let max_relative_discrepancy = (0..=args.kmax)
        .map(|k| {
            let a = cycle_sum.coeff(k);
            let b = series_division.coeff(k);
            (a - b).norm() / (1.0 + b.norm())
        })
        .fold(0.0f64, f64::max);
    let det = derivatives[0];

    let output = CoeffsOutput {
        kmax: args.kmax,
        det: [det.re, det.im],
        cycle_sum,
        series_division,
        max_relative_discrepancy,
    };
    let body = serde_json::to_string_pretty(&output).expect("serializable");
    std::fs::write(&args.out, &body)?;
    let flags = resolved_flags(&[
        ("command", "coeffs".into()),
        (
            "matrix",
            args.matrix
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        ),
        (
            "N",
            args.n_points.map(|v| v.to_string()).unwrap_or_default(),
        ),
        ("n", args.n.map(|v| v.to_string()).unwrap_or_default()),
        ("kmax", args.kmax.to_string()),
        ("seed", args.seed.to_string()),
    ]);
    manifest::write(
        &args.out,
        "coeffs",
        flags,
        &[(args.out.clone(), body.into_bytes())],
    )?;
    println!("max relative discrepancy between routes: {max_relative_discrepancy:.3e}");
    Ok(ExitCode::SUCCESS)
}

fn resolved_flags(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}
