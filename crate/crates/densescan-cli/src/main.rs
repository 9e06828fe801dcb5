//! `densescan`: scan signals with processing chains, verify the scanning
//! theorems on a seeded random corpus, and report evaluation counts.

mod config;
mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use densescan::chain::NotApplicable;
use densescan::cnn::Channels;
use densescan::complexity::{emit_report, ReportRow};
use densescan::corpus::Caps;
use densescan::nsf;
use densescan::{Fragmented, ProcessingChain, Signal};

use config::ChainConfig;
use verify::RunManifest;

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Precondition(String),
    Io(String),
    VerifyFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<densescan::Error> for CliError {
    fn from(e: densescan::Error) -> Self {
        if e.is_precondition() {
            CliError::Precondition(e.to_string())
        } else {
            CliError::Parse(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "densescan",
    version,
    about = "Exact dense scanning of signals with processing chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a chain on a signal file in one of the scanning modes.
    Scan {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// stride, slide, exact, dilate, relax, relaxed-scan, stitch, mixed or mixed:<level>.
        #[arg(long)]
        mode: String,
        /// Level for `--mode mixed`.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Check the scanning theorems on a seeded random corpus.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        max_l: usize,
        #[arg(long, default_value_t = 3)]
        max_c: usize,
        #[arg(long, default_value_t = 3)]
        max_k: usize,
        #[arg(long, default_value_t = 64)]
        max_d: usize,
        /// Write the report here as well as to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit measured and predicted kernel evaluation counts as CSV.
    Count {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        d_from: usize,
        #[arg(long)]
        d_to: usize,
        #[arg(long, default_value_t = 1)]
        d_step: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the intermediate shapes of every regime.
    Dims {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        d_from: usize,
        #[arg(long)]
        d_to: Option<usize>,
        #[arg(long, default_value_t = 1)]
        d_step: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Stride,
    Slide,
    Exact,
    Dilate,
    Relax,
    RelaxedScan,
    Stitch,
    Mixed(usize),
}

fn parse_mode(mode: &str, level: Option<usize>) -> Result<Mode, CliError> {
    let m = match mode {
        "stride" => Mode::Stride,
        "slide" => Mode::Slide,
        "exact" => Mode::Exact,
        "dilate" => Mode::Dilate,
        "relax" => Mode::Relax,
        "relaxed-scan" => Mode::RelaxedScan,
        "stitch" => Mode::Stitch,
        "mixed" => Mode::Mixed(level.ok_or_else(|| CliError::Parse("mode mixed needs --level".into()))?),
        other => {
            let l = other
                .strip_prefix("mixed:")
                .and_then(|l| l.parse().ok())
                .ok_or_else(|| CliError::Parse(format!("unknown mode {other:?}")))?;
            if level.is_some_and(|given| given != l) {
                return Err(CliError::Parse(format!("--level disagrees with mode {other}")));
            }
            Mode::Mixed(l)
        }
    };
    if level.is_some() && !matches!(m, Mode::Mixed(_)) {
        return Err(CliError::Parse("--level only applies to mode mixed".into()));
    }
    Ok(m)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_out(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_err(e: densescan::Error) -> CliError {
    CliError::Parse(e.to_string())
}

fn scan(chain: &ProcessingChain<Channels>, xi: &Signal<Channels>, mode: Mode) -> Result<String, CliError> {
    let signal = |s: Signal<Channels>| nsf::render(&nsf::signal_doc(&s)?);
    let fragmented = |f: Fragmented<Channels>| nsf::render(&nsf::fragmented_doc(&f)?);
    let kl = chain.stride_product(chain.depth());
    let text = match mode {
        Mode::Stride => signal(chain.eval_stride(xi)?),
        Mode::Slide => fragmented(chain.eval_slide(xi)?),
        Mode::Exact => signal(chain.exact_scan(xi)?),
        Mode::Dilate => signal(chain.eval_dilate(xi)?),
        Mode::Relax => signal(chain.eval_relax(xi)?),
        Mode::RelaxedScan => signal(chain.relaxed_scan(xi)?),
        Mode::Stitch => {
            let ss = chain.shift_and_stitch(xi)?;
            debug_assert_eq!(ss.passes.len(), kl);
            fragmented(Fragmented::from_columns(
                ss.passes.into_iter().map(Signal::into_vec).collect(),
            )?)
        }
        Mode::Mixed(l) => {
            if l == 0 || l >= chain.depth() {
                return Err(CliError::Precondition(format!(
                    "mixed level must lie in 1..={} for a chain of depth {}",
                    chain.depth().saturating_sub(1),
                    chain.depth()
                )));
            }
            signal(chain.mixed_scan(l, xi)?)
        }
    };
    text.map_err(parse_err)
}

fn cmd_scan(
    chain: &Path,
    input: &Path,
    output: Option<&Path>,
    mode: &str,
    level: Option<usize>,
) -> Result<(), CliError> {
    let mode = parse_mode(mode, level)?;
    let chain = ChainConfig::load(chain)?;
    let xi = nsf::parse(&read(input)?)
        .and_then(|d| nsf::doc_signal(&d))
        .map_err(parse_err)?;
    let text = scan(&chain, &xi, mode)?;
    write_out(output, &text)
}

fn cmd_verify(manifest: &RunManifest, output: Option<&Path>) -> Result<(), CliError> {
    let report = verify::run(manifest);
    let text = report.render();
    print!("{text}");
    if let Some(p) = output {
        write_out(Some(p), &text)?;
    }
    for name in report.vacuous() {
        eprintln!("warning: suite {name:?} ran 0 trials");
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn cmd_count(chain: &Path, d_from: usize, d_to: usize, d_step: usize, output: Option<&Path>) -> Result<(), CliError> {
    let chain = ChainConfig::load(chain)?;
    check_range(&chain, d_from, d_to)?;
    let mut text = format!("{}\n", ReportRow::CSV_HEADER);
    for row in emit_report(&chain, d_from, d_to, d_step)? {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    write_out(output, &text)
}

fn check_range(chain: &ProcessingChain<Channels>, d_from: usize, d_to: usize) -> Result<(), CliError> {
    let b = chain.receptive_field();
    if d_to < b || d_to < d_from {
        return Err(CliError::Precondition(format!(
            "the range D = {d_from}..={d_to} contains no length D >= B = {b}"
        )));
    }
    Ok(())
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn shapes(v: &[(usize, usize)]) -> String {
    v.iter().map(|(r, c)| format!("{r}x{c}")).collect::<Vec<_>>().join(" ")
}

fn na(e: &NotApplicable) -> String {
    format!("n/a ({})", e.reason)
}

fn dims_table(chain: &ProcessingChain<Channels>, d: usize) -> Result<String, CliError> {
    let r = chain.chain_dims(d)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "D = {d} (B = {}, k*_L = {})",
        chain.receptive_field(),
        chain.stride_product(chain.depth())
    );
    let _ = writeln!(out, "  u_j        {}", join(&r.u));
    let _ = writeln!(out, "  slide      {}", r.slide.as_ref().map_or_else(na, |s| shapes(s)));
    let _ = writeln!(out, "  dilate     {}", join(&r.dilate));
    let _ = writeln!(out, "  relax      {}", r.relax.as_ref().map_or_else(na, |w| join(w)));
    for m in &r.mixed {
        let _ = writeln!(
            out,
            "  mixed:{:<4} {}",
            m.level,
            m.shapes.as_ref().map_or_else(na, |s| shapes(s))
        );
    }
    Ok(out)
}

fn cmd_dims(
    chain: &Path,
    d_from: usize,
    d_to: Option<usize>,
    d_step: usize,
    output: Option<&Path>,
) -> Result<(), CliError> {
    if d_step == 0 {
        return Err(CliError::Parse("--d-step must be positive".into()));
    }
    let chain = ChainConfig::load(chain)?;
    let d_to = d_to.unwrap_or(d_from);
    let b = chain.receptive_field();
    if d_from < b {
        return Err(CliError::Precondition(format!("D = {d_from} is below B = {b}")));
    }
    let mut text = String::new();
    for d in (d_from..=d_to).step_by(d_step) {
        text.push_str(&dims_table(&chain, d)?);
    }
    write_out(output, &text)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Scan {
            chain,
            input,
            output,
            mode,
            level,
        } => cmd_scan(&chain, &input, output.as_deref(), &mode, level),
        Command::Verify {
            seed,
            trials,
            max_l,
            max_c,
            max_k,
            max_d,
            output,
        } => {
            let manifest = RunManifest {
                seed,
                trials,
                caps: Caps {
                    max_l,
                    max_c,
                    max_k,
                    max_d,
                },
            };
            cmd_verify(&manifest, output.as_deref())
        }
        Command::Count {
            chain,
            d_from,
            d_to,
            d_step,
            output,
        } => cmd_count(&chain, d_from, d_to, d_step, output.as_deref()),
        Command::Dims {
            chain,
            d_from,
            d_to,
            d_step,
            output,
        } => cmd_dims(&chain, d_from, d_to, d_step, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Parse(m) => eprintln!("parse error: {m}"),
                CliError::Precondition(m) => eprintln!("precondition violated: {m}"),
                CliError::Io(m) => eprintln!("i/o error: {m}"),
                CliError::VerifyFailed => eprintln!("verification failed"),
            }
            ExitCode::from(e.code())
        }
    }
}
