//! Command-line interface.
//!
//! Exit codes: 0 success or accepted, 2 rejected, 1 any error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::bell::{decompose, empirical_lhs, lhv_bound_bruteforce, BellInequality, RunBlock};
use crate::bounds::CorrelationBoundLedger;
use crate::certification::{
    certify_blocks, generate_block, run_certification, CertificationConfig, CertificationReport,
};
use crate::error::{Error, Result};
use crate::io::config::{load_config, load_inequality_file, ScenarioConfig};
use crate::io::records::{read_records, write_records};
use crate::programs::{audit_program, FilterProgram};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;

/// Relative tolerance when comparing a declared bound with the oracle.
const BOUND_MISMATCH_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "nonloc",
    version,
    about = "Nonlocality certification with settings-blind filter programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the configured source and write round records.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Record file (overrides `[output] records`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the certification procedure.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Report file (overrides `[output] report`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Certify previously recorded rounds instead of simulating.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Print the correlated-settings bound ledger.
    Bounds(BoundsArgs),
    /// Print the canonical form and G decomposition of an inequality.
    Decompose {
        /// Inequality file.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        file: Option<PathBuf>,
        #[arg(long, value_parser = ["chsh-game"])]
        preset: Option<String>,
    },
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("mode").required(true).args(["r", "info", "m_bits"])))]
struct BoundsArgs {
    /// Least setting-pair probability given the hidden variable.
    #[arg(long = "r")]
    r: Option<f64>,
    /// Bits of information about the settings.
    #[arg(long = "I")]
    info: Option<f64>,
    /// Description length of the selection string, in bits.
    #[arg(long = "M", requires = "n_prime")]
    m_bits: Option<u64>,
    /// Number of selected rounds.
    #[arg(long = "Nprime", requires = "m_bits")]
    n_prime: Option<usize>,
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate {
            config,
            seed,
            out: path,
        } => cmd_simulate(&config, seed, path, out),
        Command::Certify {
            config,
            seed,
            out: path,
            records,
        } => cmd_certify(&config, seed, path, records, out, err),
        Command::Bounds(args) => cmd_bounds(&args, out),
        Command::Decompose { file, preset } => {
            cmd_decompose(file.as_deref(), preset.as_deref(), out, err)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// Number of blocks to simulate: the initial block plus `K`.
fn simulated_blocks(cfg: &ScenarioConfig) -> usize {
    cfg.total_blocks + 1
}

fn block_config(cfg: &ScenarioConfig) -> CertificationConfig {
    CertificationConfig {
        block_length: cfg.block_length,
        total_blocks: cfg.total_blocks,
        sampled_blocks: 0,
        r0: 0.0,
        epsilon: 0.0,
        master_seed: cfg.seed,
    }
}

fn cmd_simulate(
    config: &Path,
    seed: Option<u64>,
    path: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<i32> {
    let cfg = load_config(config, seed)?;
    let path = path
        .or_else(|| cfg.records_out.clone())
        .ok_or_else(|| Error::Config("no record file given (--out or [output] records)".into()))?;
    let ineq = &cfg.inequality;
    let decomposition = decompose(ineq)?;
    let bc = block_config(&cfg);
    let mut w = BufWriter::new(File::create(&path)?);
    let mut rounds = Vec::with_capacity(cfg.block_length * simulated_blocks(&cfg));
    let mut first: Option<RunBlock> = None;
    for j in 0..simulated_blocks(&cfg) {
        let block = generate_block(&cfg.source, ineq, &decomposition, &bc, j)?;
        rounds.extend_from_slice(block.rounds());
        first.get_or_insert(block);
    }
    write_records(&mut w, &rounds)?;
    w.flush()?;

    let first = first.expect("at least one block");
    let n = first.len();
    let lhs = empirical_lhs(&first);
    let bound = ineq.bound() * n as f64;
    writeln!(out, "source={}", cfg.source.kind())?;
    writeln!(out, "records={}", path.display())?;
    writeln!(out, "rounds={}", rounds.len())?;
    writeln!(out, "block_length={n}")?;
    writeln!(out, "first_block_lhs={lhs:.6}")?;
    writeln!(out, "first_block_lhs_per_round={:.6}", lhs / n as f64)?;
    writeln!(out, "local_bound={bound:.6}")?;
    writeln!(
        out,
        "violates_local_bound={}",
        crate::bell::exceeds_local_bound(lhs, ineq.bound(), n)
    )?;
    Ok(EXIT_OK)
}

fn read_blocks(path: &Path, cfg: &ScenarioConfig) -> Result<Vec<RunBlock>> {
    let rounds = read_records(BufReader::new(File::open(path)?))?;
    let expected = cfg.block_length * simulated_blocks(cfg);
    if rounds.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: rounds.len(),
        });
    }
    let decomposition = decompose(&cfg.inequality)?;
    let scenario = cfg.inequality.scenario();
    if let Some(r) = rounds.iter().find(|r| !scenario.contains(r)) {
        return Err(Error::RoundOutOfRange(format!("{r:?}")));
    }
    rounds
        .chunks(cfg.block_length)
        .map(|c| RunBlock::new(c.to_vec(), &decomposition))
        .collect()
}

fn cmd_certify(
    config: &Path,
    seed: Option<u64>,
    path: Option<PathBuf>,
    records: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let cfg = load_config(config, seed)?;
    let prog = cfg
        .program
        .clone()
        .ok_or_else(|| Error::Config("missing [program] section".into()))?;
    let cert = cfg.certification()?;
    if let FilterProgram::CheatingEcho {
        unsafe_opt_in: true,
    } = prog
    {
        run_audit(&cfg, &prog, out)?;
        return Err(Error::NotSettingsBlind);
    }
    let report: CertificationReport = match &records {
        Some(r) => certify_blocks(&read_blocks(r, &cfg)?, &prog, &cfg.inequality, &cert)?,
        None => run_certification(&cfg.source, &prog, &cfg.inequality, &cert)?,
    };
    write!(out, "{report}")?;
    if let Some(p) = path.or_else(|| cfg.report_out.clone()) {
        std::fs::write(&p, report.to_string())?;
        writeln!(err, "report written to {}", p.display())?;
    }
    Ok(report.exit_code())
}

fn run_audit(cfg: &ScenarioConfig, prog: &FilterProgram, out: &mut dyn Write) -> Result<()> {
    let a = cfg.audit;
    let report = audit_program(
        prog,
        &cfg.source,
        cfg.inequality.settings(),
        &decompose(&cfg.inequality)?,
        a.block_length,
        a.runs,
        cfg.seed,
        a.threshold,
    )?;
    writeln!(out, "#nonloc-audit v1")?;
    writeln!(out, "program={prog}")?;
    writeln!(out, "samples={}", report.samples)?;
    for (i, mi) in report.per_round_mi.iter().enumerate() {
        writeln!(out, "mi_round_{}={mi:.6}", i + 1)?;
    }
    writeln!(out, "max_mi={:.6}", report.max_mi)?;
    writeln!(out, "threshold={}", report.threshold)?;
    writeln!(out, "audit={}", if report.passed { "pass" } else { "fail" })?;
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let ledger = match (args.r, args.info, args.m_bits, args.n_prime) {
        (Some(r), None, None, None) => CorrelationBoundLedger::from_r(r)?,
        (None, Some(i), None, None) => CorrelationBoundLedger::from_information(i)?,
        (None, None, Some(m), Some(n)) => CorrelationBoundLedger::from_complexity(m, n)?,
        _ => {
            return Err(Error::InvalidConfig(
                "give exactly one of --r, --I, or --M with --Nprime".into(),
            ))
        }
    };
    let entries = ledger.entries();
    let width = entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in &entries {
        writeln!(out, "{k:<width$}  {v}")?;
    }
    writeln!(out)?;
    for (k, v) in &entries {
        writeln!(out, "{k}={v}")?;
    }
    Ok(EXIT_OK)
}

fn write_table(
    out: &mut dyn Write,
    title: &str,
    ineq: &BellInequality,
    value: impl Fn(usize, usize, usize, usize) -> String,
) -> Result<()> {
    writeln!(out, "{title}")?;
    writeln!(out, "  x y a b  value")?;
    for (x, y, a, b) in ineq.scenario().events() {
        writeln!(out, "  {x} {y} {a} {b}  {}", value(x, y, a, b))?;
    }
    Ok(())
}

fn cmd_decompose(
    file: Option<&Path>,
    preset: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let (ineq, declared) = match (file, preset) {
        (Some(f), _) => {
            let raw = load_inequality_file(f)?;
            let ineq = raw.canonicalize()?;
            (ineq, raw.bound)
        }
        _ => {
            let ineq = BellInequality::chsh_game();
            let r = ineq.bound();
            (ineq, r)
        }
    };
    let dec = decompose(&ineq)?;
    let oracle = lhv_bound_bruteforce(&ineq)?;
    let s = ineq.scenario();
    writeln!(
        out,
        "scenario {} {} {} {}",
        s.num_settings_a, s.num_settings_b, s.num_outcomes_a, s.num_outcomes_b
    )?;
    write_table(out, "settings P(x,y)", &ineq, |x, y, _, _| {
        format!("{:.6}", ineq.settings().get(x, y))
    })?;
    write_table(out, "alpha", &ineq, |x, y, a, b| {
        format!("{:.6}", ineq.alpha().get(x, y, a, b))
    })?;
    write_table(out, "C", &ineq, |x, y, a, b| {
        format!("{:.6}", dec.c(x, y, a, b))
    })?;
    write_table(out, "G", &ineq, |x, y, a, b| {
        u8::from(dec.g(x, y, a, b)).to_string()
    })?;
    writeln!(out, "declared_bound={declared:.12}")?;
    writeln!(out, "canonical_bound={:.12}", ineq.bound())?;
    writeln!(out, "lhv_bound={oracle:.12}")?;
    let tol = BOUND_MISMATCH_TOL * ineq.bound().abs().max(1.0);
    if (oracle - ineq.bound()).abs() > tol {
        writeln!(
            err,
            "warning: declared bound {:.12} differs from the deterministic-strategy bound {oracle:.12}",
            ineq.bound()
        )?;
    }
    Ok(EXIT_OK)
}
