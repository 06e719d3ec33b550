//! Command-line front end. [`run`] takes the argument list and output
//! streams explicitly so the commands can be exercised in-process.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparator::{compare_on, ComparatorLayout, Comparison};
use crate::error::{Error, Result};
use crate::oracle::{OracleCircuit, OracleLayout};
use crate::portfolio::{
    load_frontier, max_sharpe, max_sharpe_oracle, sharpe_values, slice_oracle, slice_portfolios,
    FrontierTable,
};
use crate::qsim::{apply, StateVector, STATE_TOL};
use crate::search::{
    delta_m_bound, m_detect, m_exact, quantum_counting, t_for_resolution, Backend, CountEstimate,
    EnumerateConfig, SolutionClass,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// Slicing finished but found fewer solutions than counting reported.
pub const EXIT_INCOMPLETE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "grover-portfolio",
    version,
    about = "Grover-based portfolio slicing and selection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List portfolios with return above and risk below the thresholds.
    Slice(SliceArgs),
    /// Select the portfolio with the largest Sharpe ratio.
    MaxSharpe(MaxSharpeArgs),
    /// Estimate how many portfolios satisfy the slicing condition.
    Count(CountArgs),
    /// Check the comparator circuits against classical comparison.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Exact,
    Detect,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// CSV file with header `id,expected_return,std_dev`.
    #[arg(long)]
    pub input: PathBuf,
    /// Smallest value difference the comparators must resolve.
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = Backend::Effective)]
    pub backend: Backend,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Keep portfolios whose expected return exceeds this value.
    #[arg(long, default_value_t = 0.0)]
    pub return_min: f64,
    /// Keep portfolios whose standard deviation is below this value.
    /// Defaults to the largest representable value.
    #[arg(long)]
    pub risk_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SliceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MaxSharpeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Independent adaptive-search repetitions.
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    /// Risk-free rate subtracted from every return.
    #[arg(long, default_value_t = 0.0)]
    pub rf: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long, value_enum, default_value_t = CountMode::Exact)]
    pub mode: CountMode,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Operand width in bits.
    #[arg(long)]
    pub bits: usize,
    #[arg(long)]
    pub a: u64,
    #[arg(long)]
    pub b: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QubitLayout {
    pub total: usize,
    pub index: usize,
    pub index_copies: usize,
    pub estimates: usize,
    pub thresholds: usize,
    pub outcomes: usize,
    pub ancillas: usize,
    pub oracle: usize,
}

impl From<&OracleLayout> for QubitLayout {
    fn from(l: &OracleLayout) -> Self {
        let sum = |rs: &[Vec<usize>]| rs.iter().map(Vec::len).sum();
        QubitLayout {
            total: l.num_qubits,
            index: l.index.len(),
            index_copies: sum(&l.index_copies),
            estimates: sum(&l.estimates),
            thresholds: sum(&l.thresholds),
            outcomes: l.outcomes.len(),
            ancillas: l.ancillas.len(),
            oracle: usize::from(l.oracle_qubit.is_some()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub m_used: usize,
    pub b: usize,
    #[serde(rename = "M_est")]
    pub m_est: f64,
    #[serde(rename = "M_rounded")]
    pub m_rounded: usize,
    pub delta_m_bound: f64,
    pub class: SolutionClass,
}

impl From<&CountEstimate> for CountReport {
    fn from(e: &CountEstimate) -> Self {
        CountReport {
            m_used: e.m,
            b: e.b,
            m_est: e.m_est,
            m_rounded: e.m_rounded,
            delta_m_bound: e.bound,
            class: e.class(),
        }
    }
}

#[derive(Debug, Serialize)]
struct SliceReport {
    selected_ids: Vec<u64>,
    count_estimate: CountReport,
    doubled: bool,
    oracle_calls: usize,
    counting_calls: usize,
    grover_runs: usize,
    return_threshold: u64,
    risk_threshold: u64,
    t: usize,
    qubit_layout: QubitLayout,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct MaxSharpeReport {
    id: u64,
    sharpe_raw: f64,
    sharpe_quantized: u64,
    oracle_calls_total: usize,
    repetitions: usize,
    warnings: Vec<String>,
    t: usize,
    qubit_layout: QubitLayout,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct CountCommandReport {
    mode: CountMode,
    m_used: usize,
    b: usize,
    #[serde(rename = "M_est")]
    m_est: f64,
    #[serde(rename = "M_rounded")]
    m_rounded: usize,
    delta_m_bound: f64,
    class: SolutionClass,
    doubled: bool,
    n_items: usize,
    t: usize,
    qubit_layout: QubitLayout,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct Bits {
    gt: u8,
    lt: u8,
    eq: u8,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    bits: usize,
    a: u64,
    b: u64,
    simulated: Bits,
    classical: Bits,
    agree: bool,
    qubit_layout: QubitLayout,
}

/// Parse `args` (including the program name) and run the command.
/// Returns the process exit code.
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
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Slice(a) => cmd_slice(a, out),
        Command::MaxSharpe(a) => cmd_max_sharpe(a, out),
        Command::Count(a) => cmd_count(a, out),
        Command::Compare(a) => cmd_compare(a, out),
    }
}

fn load(common: &CommonArgs) -> Result<FrontierTable> {
    let t = t_for_resolution(common.resolution)?.max(1);
    let file = File::open(&common.input)
        .map_err(|e| Error::Io(format!("{}: {e}", common.input.display())))?;
    load_frontier(BufReader::new(file), t)
}

fn thresholds(table: &FrontierTable, th: &ThresholdArgs) -> (f64, f64) {
    let top = 1.0 - 1.0 / (1u64 << table.t()) as f64;
    (th.return_min, th.risk_max.unwrap_or(top))
}

fn emit<S: Serialize>(out: &mut dyn Write, format: OutputFormat, report: &S) -> Result<()> {
    let json_err = |e: serde_json::Error| Error::Internal(e.to_string());
    let text = match format {
        OutputFormat::Json => serde_json::to_string_pretty(report).map_err(json_err)?,
        OutputFormat::Text => {
            let value = serde_json::to_value(report).map_err(json_err)?;
            let mut lines = Vec::new();
            flatten_text("", &value, &mut lines);
            lines.join("\n")
        }
    };
    writeln!(out, "{text}")?;
    Ok(())
}

fn flatten_text(prefix: &str, value: &serde_json::Value, lines: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_text(&key, v, lines);
            }
        }
        other => lines.push(format!("{prefix}: {other}")),
    }
}

pub fn cmd_slice(args: &SliceArgs, out: &mut dyn Write) -> Result<i32> {
    let table = load(&args.common)?;
    let (lo, hi) = thresholds(&table, &args.thresholds);
    let (oracle, _, _) = slice_oracle(&table, lo, hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);
    let config = EnumerateConfig {
        backend: args.common.backend,
        ..EnumerateConfig::default()
    };
    let result = slice_portfolios(&table, lo, hi, &mut rng, config)?;
    let e = &result.enumeration;
    let report = SliceReport {
        selected_ids: result.ids.clone(),
        count_estimate: CountReport::from(&e.count),
        doubled: e.doubled,
        oracle_calls: e.oracle_calls,
        counting_calls: e.counting_calls,
        grover_runs: e.grover_runs,
        return_threshold: result.return_threshold,
        risk_threshold: result.risk_threshold,
        t: table.t(),
        qubit_layout: oracle.layout().into(),
        seed: args.common.seed,
    };
    emit(out, args.common.output, &report)?;
    Ok(if e.incomplete() {
        EXIT_INCOMPLETE
    } else {
        EXIT_OK
    })
}

pub fn cmd_max_sharpe(args: &MaxSharpeArgs, out: &mut dyn Write) -> Result<i32> {
    let table = load(&args.common)?;
    let sharpe = sharpe_values(&table, args.rf)?;
    let layout: QubitLayout = max_sharpe_oracle(&sharpe)?.layout().into();
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);
    let result = max_sharpe(&table, args.rf, &mut rng, args.repeat, args.common.backend)?;
    let report = MaxSharpeReport {
        id: result.id,
        sharpe_raw: result.sharpe_raw,
        sharpe_quantized: result.sharpe_quantized,
        oracle_calls_total: result.outcome.oracle_calls_total(),
        repetitions: args.repeat,
        warnings: sharpe.warnings,
        t: table.t(),
        qubit_layout: layout,
        seed: args.common.seed,
    };
    emit(out, args.common.output, &report)?;
    Ok(EXIT_OK)
}

pub fn cmd_count(args: &CountArgs, out: &mut dyn Write) -> Result<i32> {
    let table = load(&args.common)?;
    let (lo, hi) = thresholds(&table, &args.thresholds);
    let (oracle, _, _) = slice_oracle(&table, lo, hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);
    let backend = args.common.backend;
    let sizing = |o: &OracleCircuit| match args.mode {
        CountMode::Exact => m_exact(o.search_size()),
        CountMode::Detect => m_detect(o.search_size()),
    };
    let mut est = quantum_counting(&oracle, sizing(&oracle)?, backend, &mut rng)?;
    let mut doubled = false;
    let mut n_items = oracle.search_size();
    // Counts above N/2 are ambiguous; recount on a space padded with
    // non-solutions so the true count sits below the midpoint.
    if args.mode == CountMode::Exact && 2 * est.m_rounded > n_items {
        let d = oracle.doubled()?;
        est = quantum_counting(&d, sizing(&d)?, backend, &mut rng)?;
        doubled = true;
        n_items = d.search_size();
    }
    let report = CountCommandReport {
        mode: args.mode,
        m_used: est.m,
        b: est.b,
        m_est: est.m_est,
        m_rounded: est.m_rounded,
        delta_m_bound: delta_m_bound(n_items, est.m_est, est.m),
        class: est.class(),
        doubled,
        n_items,
        t: table.t(),
        qubit_layout: oracle.layout().into(),
        seed: args.common.seed,
    };
    emit(out, args.common.output, &report)?;
    Ok(EXIT_OK)
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<i32> {
    let layout = ComparatorLayout::new(args.bits)?;
    if args.bits > 12 {
        return Err(Error::arg("comparator width is limited to 12 bits"));
    }
    let limit = 1u64 << args.bits;
    if args.a >= limit || args.b >= limit {
        return Err(Error::arg(format!(
            "operands must be below 2^{} = {limit}",
            args.bits
        )));
    }
    let input = layout.encode(args.a, args.b, false);
    let simulate = |cmp: Comparison| -> Result<u8> {
        let c = compare_on(
            cmp,
            layout.num_qubits(),
            &layout.a(),
            &layout.b(),
            layout.outcome(),
        )?;
        let s = apply(
            &StateVector::new_basis_state(layout.num_qubits(), input)?,
            &c,
        )?;
        let set = layout.encode(args.a, args.b, true);
        if (s.probability(set) - 1.0).abs() < STATE_TOL {
            Ok(1)
        } else if (s.probability(input) - 1.0).abs() < STATE_TOL {
            Ok(0)
        } else {
            Err(Error::Internal(format!(
                "{cmp:?} comparator disturbed its operands"
            )))
        }
    };
    let simulated = Bits {
        gt: simulate(Comparison::Greater)?,
        lt: simulate(Comparison::Less)?,
        eq: simulate(Comparison::Equal)?,
    };
    let classical = Bits {
        gt: u8::from(args.a > args.b),
        lt: u8::from(args.a < args.b),
        eq: u8::from(args.a == args.b),
    };
    let agree = simulated.gt == classical.gt
        && simulated.lt == classical.lt
        && simulated.eq == classical.eq;
    let n = args.bits;
    let report = CompareReport {
        bits: n,
        a: args.a,
        b: args.b,
        simulated,
        classical,
        agree,
        qubit_layout: QubitLayout {
            total: layout.num_qubits(),
            index: 0,
            index_copies: 0,
            estimates: n,
            thresholds: n,
            outcomes: 1,
            ancillas: 0,
            oracle: 0,
        },
    };
    emit(out, args.output, &report)?;
    Ok(if agree { EXIT_OK } else { EXIT_ERROR })
}
