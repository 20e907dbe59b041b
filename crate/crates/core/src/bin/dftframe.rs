use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dftframe::codec::{
    run_simulation, ErrorCountModel, QuantizerSpec, RangeRule, Resolution, Scenario, SimConfig,
};
use dftframe::coset::{enumerate_cosets_for, MAX_ENUMERATION_N};
use dftframe::dft::{generator, real_alpha, FrameSpec};
use dftframe::report::{self, Identity, VerifyOptions};
use dftframe::systematic::{optimal_index_set, systematic_frame};
use dftframe::{Error, IndexSet};

#[derive(Parser)]
#[command(name = "dftframe", version, about = "Analyse systematic DFT frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum, distances, tightness and bound checks for a row selection.
    Analyze(AnalyzeArgs),
    /// Enumerate the shift (and reversal) cosets of k-subsets.
    Cosets(CosetArgs),
    /// Monte-Carlo MSE of quantized encoding and reconstruction.
    Simulate(SimulateArgs),
    /// Spectra of the (6,3), (7,5) and (10,5) codeword patterns.
    Table1(OutputArgs),
    /// Cosets of the (7,3) frame.
    Table2(OutputArgs),
    /// Sweep the eigenvalue bounds and identities over a grid of frames.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Real BCH for odd k, complex BCH with the same zero rows otherwise.
    Auto,
    Real,
    Complex,
    General,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FrameArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    variant: VariantArg,
    /// First zero row of Σ (0-based) for complex BCH frames.
    #[arg(long)]
    alpha: Option<usize>,
    /// Comma-separated 0-based zero rows of Σ for general frames.
    #[arg(long)]
    zero_rows: Option<String>,
}

#[derive(Args)]
struct RowArgs {
    /// Comma-separated 1-based rows.
    #[arg(long, conflicts_with = "pattern")]
    rows: Option<String>,
    /// Codeword pattern such as "××-××-×" ('x' is accepted for '×').
    #[arg(long)]
    pattern: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    frame: FrameArgs,
    #[command(flatten)]
    rows: RowArgs,
    /// Relative eigenvalue spread below which the frame counts as tight.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CosetArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Merge each coset with the coset of its reversal.
    #[arg(long)]
    merge_reversal: bool,
    #[arg(long, default_value_t = MAX_ENUMERATION_N)]
    max_n: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Quantize,
    Error,
    Erasure,
}

#[derive(Clone, Copy, ValueEnum)]
enum RangeArg {
    /// ± s·σ_y over the average codeword variance.
    Codeword,
    /// ± s·σ of the loudest codeword row.
    PeakRow,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML or JSON file with simulation settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    frame: FrameArgs,
    #[command(flatten)]
    rows: RowArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    sigma_x: Option<f64>,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Mean number of channel errors per codeword.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Error variance as a multiple of σ_q².
    #[arg(long, default_value_t = 10.0)]
    error_ratio: f64,
    /// Draw the error count from a Poisson distribution.
    #[arg(long)]
    poisson: bool,
    /// Comma-separated 1-based erased positions.
    #[arg(long)]
    erased: Option<String>,
    #[arg(long, conflicts_with = "step")]
    levels: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, value_enum)]
    range: Option<RangeArg>,
    /// Range half-width in standard deviations.
    #[arg(long)]
    range_sigmas: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdentityArg {
    Sine,
    Det,
    Bounds,
    Cosets,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    #[arg(long, value_enum, default_value = "all")]
    identity: IdentityArg,
    /// Random subsets per size when n exceeds the exhaustive limit.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true, default_value_t = 0.0)]
    inject_perturbation: f64,
    #[command(flatten)]
    output: OutputArgs,
}

/// Anything that ends the run early, with its exit code.
enum Failure {
    Invalid(String),
    Runtime(String),
    Verification,
    /// Downstream reader went away, e.g. `| head`.
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => e.into(),
            Error::Json(e) if e.io_error_kind() == Some(io::ErrorKind::BrokenPipe) => {
                Failure::Closed
            }
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe) => {
                Failure::Closed
            }
            Error::InvalidArgument(_)
            | Error::UnsupportedCode(_)
            | Error::InsufficientData { .. }
            | Error::ResourceLimit { .. }
            | Error::Config(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::Closed;
        }
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Invalid(msg.into()))
}

fn parse_list(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Failure::Invalid(format!("'{t}' is not a non-negative integer")))
        })
        .collect()
}

impl FrameArgs {
    fn spec(&self, n: usize, k: usize) -> CliResult<FrameSpec> {
        Ok(match self.variant {
            VariantArg::Auto => FrameSpec::bch(n, k)?,
            VariantArg::Real => FrameSpec::real_bch(n, k)?,
            VariantArg::Complex => {
                let alpha = match self.alpha {
                    Some(a) => a,
                    None if k <= n => real_alpha(n, k),
                    None => return invalid(format!("need 1 <= k <= n, got n={n}, k={k}")),
                };
                FrameSpec::complex_bch(n, k, alpha)?
            }
            VariantArg::General => {
                let Some(text) = &self.zero_rows else {
                    return invalid("--variant general needs --zero-rows");
                };
                FrameSpec::general(n, k, parse_list(text)?)?
            }
        })
    }
}

impl RowArgs {
    fn rows(&self, n: Option<usize>) -> CliResult<Option<IndexSet>> {
        match (&self.rows, &self.pattern) {
            (Some(list), _) => {
                let Some(n) = n else {
                    return invalid("--rows needs --n");
                };
                Ok(Some(IndexSet::parse_list(n, list)?))
            }
            (None, Some(p)) => {
                let rows = IndexSet::from_pattern(p)?;
                if let Some(n) = n {
                    if n != rows.n() {
                        return invalid(format!("pattern has length {} but --n is {n}", rows.n()));
                    }
                }
                Ok(Some(rows))
            }
            (None, None) => Ok(None),
        }
    }
}

fn need(value: Option<usize>, flag: &str) -> CliResult<usize> {
    value.ok_or_else(|| Failure::Invalid(format!("missing {flag}")))
}

fn emit(
    output: &OutputArgs,
    render: impl FnOnce(&mut dyn Write, Format) -> CliResult<()>,
) -> CliResult<()> {
    match &output.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            render(&mut w, output.format)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            render(&mut w, output.format)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let rows = args.rows.rows(args.frame.n)?;
    let Some(rows) = rows else {
        return invalid("analyze needs --rows or --pattern");
    };
    let n = rows.n();
    let k = args.frame.k.unwrap_or(rows.len());
    let doc = report::analyze(&args.frame.spec(n, k)?, &rows, args.tol)?;
    emit(&args.output, |w, f| match f {
        Format::Json => write_json(w, &doc),
        Format::Csv => Ok(doc.write_csv(w)?),
        Format::Text => Ok(write!(w, "{}", doc.to_text())?),
    })
}

fn cosets(args: &CosetArgs) -> CliResult<()> {
    let n = need(args.frame.n, "--n")?;
    let k = need(args.frame.k, "--k")?;
    if n > args.max_n {
        return Err(Error::ResourceLimit {
            what: "n for coset enumeration",
            value: n,
            limit: args.max_n,
        }
        .into());
    }
    let gs = generator(&args.frame.spec(n, k)?)?;
    let cat = enumerate_cosets_for(&gs, args.merge_reversal, args.max_n)?;
    emit(&args.output, |w, f| match f {
        Format::Json => write_json(w, &cat),
        Format::Csv => Ok(report::write_catalog_csv(&cat, w)?),
        Format::Text => Ok(write!(w, "{}", report::catalog_text(&cat))?),
    })
}

fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(path) => Some(SimConfig::from_path(path)?),
        None => None,
    };
    let n = match (args.frame.n, &cfg) {
        (Some(n), _) => n,
        (None, Some(c)) => c.n,
        (None, None) => match &args.rows.pattern {
            Some(p) => IndexSet::from_pattern(p)?.n(),
            None => return invalid("missing --n"),
        },
    };
    let k = match (args.frame.k, &cfg) {
        (Some(k), _) => k,
        (None, Some(c)) => c.k,
        (None, None) => match args.rows.rows(Some(n))? {
            Some(r) => r.len(),
            None => return invalid("missing --k"),
        },
    };
    let rows = match args.rows.rows(Some(n))? {
        Some(r) => r,
        None => match cfg.as_mut().and_then(|c| c.rows.take()) {
            Some(list) => IndexSet::new(n, list)?,
            None => optimal_index_set(n, k)?,
        },
    };
    let base = cfg.unwrap_or(SimConfig {
        n,
        k,
        rows: None,
        sigma_x: 1.0,
        trials: 200_000,
        seed: 0,
        quantizer: QuantizerSpec::default(),
        scenario: Scenario::QuantizeOnly,
    });

    let mut quantizer = base.quantizer;
    if let Some(levels) = args.levels {
        quantizer.resolution = Resolution::Levels(levels);
    }
    if let Some(step) = args.step {
        quantizer.resolution = Resolution::Step(step);
    }
    let sigmas = args.range_sigmas.unwrap_or(match quantizer.range {
        RangeRule::CodewordSigma(s) | RangeRule::PeakRowSigma(s) => s,
    });
    quantizer.range = match args.range {
        Some(RangeArg::Codeword) => RangeRule::CodewordSigma(sigmas),
        Some(RangeArg::PeakRow) => RangeRule::PeakRowSigma(sigmas),
        None => match quantizer.range {
            RangeRule::CodewordSigma(_) => RangeRule::CodewordSigma(sigmas),
            RangeRule::PeakRowSigma(_) => RangeRule::PeakRowSigma(sigmas),
        },
    };
    let scenario = match args.scenario {
        None => base.scenario,
        Some(ScenarioArg::Quantize) => Scenario::QuantizeOnly,
        Some(ScenarioArg::Error) => Scenario::QuantizePlusError {
            nu: args.nu,
            error_to_noise: args.error_ratio,
            count: if args.poisson {
                ErrorCountModel::Poisson
            } else {
                ErrorCountModel::Fixed
            },
        },
        Some(ScenarioArg::Erasure) => Scenario::QuantizePlusErasure {
            erased: match &args.erased {
                Some(list) => parse_list(list)?,
                None => return invalid("--scenario erasure needs --erased"),
            },
        },
    };
    let sigma_x = args.sigma_x.unwrap_or(base.sigma_x);
    let trials = args.trials.unwrap_or(base.trials);
    let seed = args.seed.unwrap_or(base.seed);

    let gs = generator(&args.frame.spec(n, k)?)?;
    let frame = systematic_frame(&gs, &rows)?;
    let q = quantizer.build(&frame, sigma_x)?;
    let doc = run_simulation(&frame, &scenario, q, sigma_x, trials, seed)?;
    for warning in &doc.warnings {
        eprintln!("warning: {warning}");
    }
    emit(&args.output, |w, f| match f {
        Format::Json => write_json(w, &doc),
        Format::Csv => Ok(report::write_sim_csv(&doc, w)?),
        Format::Text => Ok(write!(w, "{}", report::sim_text(&doc))?),
    })
}

fn table1(output: &OutputArgs) -> CliResult<()> {
    let rows = report::table1()?;
    emit(output, |w, f| match f {
        Format::Json => write_json(w, &rows),
        Format::Csv => Ok(report::write_table1_csv(&rows, w)?),
        Format::Text => Ok(write!(w, "{}", report::table1_text(&rows))?),
    })
}

fn table2(output: &OutputArgs) -> CliResult<()> {
    let t = report::table2()?;
    emit(output, |w, f| match f {
        Format::Json => write_json(w, &t),
        Format::Csv => Ok(report::write_catalog_csv(&t.shift_cosets, w)?),
        Format::Text => {
            write!(w, "{}", report::catalog_text(&t.shift_cosets))?;
            Ok(write!(w, "{}", report::catalog_text(&t.merged))?)
        }
    })
}

fn verify(args: &VerifyArgs) -> CliResult<()> {
    let opts = VerifyOptions {
        n_max: args.n_max,
        identity: match args.identity {
            IdentityArg::Sine => Identity::Sine,
            IdentityArg::Det => Identity::Det,
            IdentityArg::Bounds => Identity::Bounds,
            IdentityArg::Cosets => Identity::Cosets,
            IdentityArg::All => Identity::All,
        },
        samples: args.samples,
        seed: args.seed,
        perturbation: args.inject_perturbation,
    };
    let summary = report::verify(&opts)?;
    emit(&args.output, |w, f| match f {
        Format::Json => write_json(w, &summary),
        Format::Csv => Ok(summary.write_csv(w)?),
        Format::Text => Ok(write!(w, "{}", summary.to_text())?),
    })?;
    if summary.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn configure_threads() {
    if let Some(t) = std::env::var("DFTFRAME_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Cosets(a) => cosets(a),
        Command::Simulate(a) => simulate(a),
        Command::Table1(o) => table1(o),
        Command::Table2(o) => table2(o),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
