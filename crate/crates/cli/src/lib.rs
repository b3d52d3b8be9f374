//! Command implementations behind the `bstm` binary.
//!
//! Every command produces a [`Table`]; [`render`] turns it into CSV or
//! JSON with the run metadata attached.

use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use bstm_core::bstm::{noiseless_sv_sample, sample_gain, sample_input};
use bstm_core::capacity::{asymptotic_gain_constant, bstm_constant, gain_ratio, prelog, ustm_constant};
use bstm_core::params::{derive, ChannelDims};
use bstm_core::randmat::{sample_isotropic_unitary, sample_matrix_beta, sample_wishart};
use bstm_core::rng::RNG_ALGORITHM;
use bstm_core::statcheck::TestReport;
use bstm_core::validation::{run_suite, Suite};
use bstm_core::{ComplexMatrix, Error, RngHandle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Full description of a run; echoed into the output metadata.
#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "bstm", version, about = "High-SNR capacity constants, samplers and validation suites for noncoherent MIMO")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<String>,

    /// Report rates in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Pre-log and constants c*, c_U, c* - c_U and c_{M,T} with their terms.
    Constants {
        #[arg(long = "T")]
        t: usize,
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "N")]
        n: usize,
    },
    /// BSTM-over-USTM rate gain on a (T, N) grid.
    GainTable {
        /// Coherence times: comma list, ranges a:b or a:b:step.
        #[arg(long = "T", default_value = "4:100:2")]
        t: String,
        /// Receive antennas, same syntax as --T.
        #[arg(long = "N", default_value = "1:100")]
        n: String,
        #[arg(long = "snr-db", default_value_t = 30.0, allow_negative_numbers = true)]
        snr_db: f64,
        /// Fixed transmit antennas; default min(floor(T/2), N) per cell.
        #[arg(long = "M")]
        m: Option<usize>,
    },
    /// Draws from the samplers.
    Sample {
        #[arg(long, value_enum)]
        kind: SampleKind,
        #[arg(long = "T")]
        t: Option<usize>,
        /// Transmit antennas, or the matrix size m for wishart and beta.
        #[arg(long = "M")]
        m: Option<usize>,
        /// Receive antennas, or the degrees of freedom n for wishart and beta.
        #[arg(long = "N")]
        n: Option<usize>,
        /// First Beta parameter p.
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Runs a validation suite; exits with 3 if any check fails.
    Validate {
        #[arg(long, value_parser = parse_suite)]
        suite: SuiteArg,
        /// Sample size; each suite has its own default.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SuiteArg(#[serde(serialize_with = "suite_name")] pub Suite);

fn suite_name<S: serde::Serializer>(s: &Suite, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(s.name())
}

fn parse_suite(s: &str) -> Result<SuiteArg, String> {
    s.parse::<Suite>().map(SuiteArg).map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite '{s}' (expected one of {})", names.join(", "))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    Gain,
    Input,
    Unitary,
    Wishart,
    Beta,
    NoiselessSv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

/// Rows of numbers under named columns, plus free-text warnings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub warnings: Vec<String>,
    /// Columns holding rates, rescaled by --bits.
    pub rate_columns: Vec<String>,
}

impl Table {
    fn new(columns: Vec<String>) -> Self {
        Self { columns, ..Default::default() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        match self.rows.get(row)?.get(self.column(name)?)? {
            Cell::Int(v) => Some(*v as f64),
            Cell::Num(v) => Some(*v),
            Cell::Text(_) | Cell::Empty => None,
        }
    }

    fn rates_in_bits(&mut self) {
        let idx: Vec<usize> = self.rate_columns.iter().filter_map(|c| self.column(c)).collect();
        for row in &mut self.rows {
            for &i in &idx {
                if let Cell::Num(v) = &mut row[i] {
                    *v /= std::f64::consts::LN_2;
                }
            }
        }
    }
}

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) | CliError::Io(_) => EXIT_DOMAIN,
        }
    }
}

pub fn cmd_constants(t: usize, m: usize, n: usize) -> Result<Table, CliError> {
    let dp = derive(ChannelDims::new(t, m, n))?;
    let b = bstm_constant(&dp)?;
    let u = ustm_constant(&dp)?;
    let c_mt = asymptotic_gain_constant(t, m)?;
    // the two constants coincide identically outside the large-MIMO regime
    let diff = if dp.large_mimo { b.constant - u.constant } else { 0.0 };
    let mut cols: Vec<String> = ["T", "M", "N", "prelog", "c_star", "c_u", "c_star_minus_c_u", "c_mt"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut row = vec![
        Cell::Int(t as i64),
        Cell::Int(m as i64),
        Cell::Int(n as i64),
        Cell::Num(prelog(&dp)),
        Cell::Num(b.constant),
        Cell::Num(u.constant),
        Cell::Num(diff),
        Cell::Num(c_mt),
    ];
    let mut rate_columns: Vec<String> = cols[4..].to_vec();
    for (prefix, br) in [("c_star", &b), ("c_u", &u)] {
        for term in &br.terms {
            let name = format!("{prefix}.{}", term.label);
            cols.push(name.clone());
            rate_columns.push(name);
            row.push(Cell::Num(term.value));
        }
    }
    let mut table = Table::new(cols);
    table.rows.push(row);
    table.rate_columns = rate_columns;
    Ok(table)
}

/// Parses "4,8,10:20,20:100:10" into a sorted list without duplicates.
pub fn parse_grid(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse grid '{text}' (use e.g. 2,4,10:20 or 4:100:2)"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let nums: Vec<usize> = part.split(':').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        match nums[..] {
            [a] => out.push(a),
            [a, b] if a <= b => out.extend(a..=b),
            [a, b, s] if a <= b && s > 0 => out.extend((a..=b).step_by(s)),
            _ => return Err(bad()),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn cmd_gain_table(ts: &[usize], ns: &[usize], snr_db: f64, m_fixed: Option<usize>) -> Table {
    let cells: Vec<(usize, usize)> = ts.iter().flat_map(|&t| ns.iter().map(move |&n| (t, n))).collect();
    let results: Vec<(usize, Result<f64, Error>)> = cells
        .par_iter()
        .map(|&(t, n)| {
            let m = m_fixed.unwrap_or_else(|| (t / 2).min(n));
            (m, derive(ChannelDims::new(t, m, n)).and_then(|dp| gain_ratio(&dp, snr_db)))
        })
        .collect();
    let mut table = Table::new(["T", "N", "M", "gain"].iter().map(|s| s.to_string()).collect());
    for (&(t, n), (m, r)) in cells.iter().zip(results) {
        let gain = match r {
            Ok(g) => Cell::Num(g),
            Err(e) => {
                table.warnings.push(format!("T={t} N={n} M={m}: {e}"));
                Cell::Empty
            }
        };
        table.rows.push(vec![Cell::Int(t as i64), Cell::Int(n as i64), Cell::Int(m as i64), gain]);
    }
    table
}

fn need(v: Option<usize>, flag: &str, kind: SampleKind) -> Result<usize, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("sample --kind {kind:?} needs --{flag}").to_lowercase()))
}

fn matrix_columns(rows: usize, cols: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(2 * rows * cols);
    for i in 1..=rows {
        for j in 1..=cols {
            out.push(format!("a{i}_{j}_re"));
            out.push(format!("a{i}_{j}_im"));
        }
    }
    out
}

fn matrix_cells(a: &ComplexMatrix) -> Vec<Cell> {
    let mut out = Vec::with_capacity(2 * a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.push(Cell::Num(a[(i, j)].re));
            out.push(Cell::Num(a[(i, j)].im));
        }
    }
    out
}

type Sampler = Box<dyn FnMut(&mut RngHandle) -> Result<Vec<Cell>, CliError>>;

pub fn cmd_sample(
    kind: SampleKind,
    t: Option<usize>,
    m: Option<usize>,
    n: Option<usize>,
    p: Option<usize>,
    count: usize,
    rng: &mut RngHandle,
) -> Result<Table, CliError> {
    let channel = |t, m, n| -> Result<_, CliError> {
        Ok(derive(ChannelDims::new(need(t, "T", kind)?, need(m, "M", kind)?, need(n, "N", kind)?))?)
    };
    let (value_cols, mut draw): (Vec<String>, Sampler) = match kind {
        SampleKind::Gain => {
            let dp = channel(t, m, n)?;
            let cols = (1..=dp.m()).map(|i| format!("d{i}")).collect();
            (cols, Box::new(move |r| Ok(sample_gain(&dp, r).values().iter().map(|&v| Cell::Num(v)).collect())))
        }
        SampleKind::Input => {
            let dp = channel(t, m, n)?;
            (matrix_columns(dp.t(), dp.m()), Box::new(move |r| Ok(matrix_cells(&sample_input(&dp, r)))))
        }
        SampleKind::NoiselessSv => {
            let dp = channel(t, m, n)?;
            let cols = (1..=dp.m()).map(|i| format!("sv{i}")).collect();
            (cols, Box::new(move |r| Ok(noiseless_sv_sample(&dp, r).into_iter().map(Cell::Num).collect())))
        }
        SampleKind::Unitary => {
            let (t, m) = (need(t, "T", kind)?, need(m, "M", kind)?);
            if m == 0 || m > t {
                return Err(CliError::Usage(format!("unitary needs 1 <= M <= T (T = {t}, M = {m})")));
            }
            (matrix_columns(t, m), Box::new(move |r| Ok(matrix_cells(&sample_isotropic_unitary(t, m, r)))))
        }
        SampleKind::Wishart => {
            let (m, n) = (need(m, "M", kind)?, need(n, "N", kind)?);
            if m == 0 || n == 0 {
                return Err(CliError::Usage("wishart needs M >= 1 and N >= 1".into()));
            }
            (matrix_columns(m, m), Box::new(move |r| Ok(matrix_cells(&sample_wishart(m, n, 1.0, r)))))
        }
        SampleKind::Beta => {
            let (m, n, p) = (need(m, "M", kind)?, need(n, "N", kind)?, need(p, "p", kind)?);
            if m == 0 || n == 0 || p < m {
                return Err(CliError::Usage(format!("beta needs p >= M >= 1 and N >= 1 (M = {m}, p = {p}, N = {n})")));
            }
            (matrix_columns(m, m), Box::new(move |r| Ok(matrix_cells(&sample_matrix_beta(m, p, n, r)?))))
        }
    };
    let mut cols = vec!["draw".to_string()];
    cols.extend(value_cols);
    let mut table = Table::new(cols);
    for k in 0..count {
        let mut row = vec![Cell::Int(k as i64)];
        row.extend(draw(rng)?);
        table.rows.push(row);
    }
    Ok(table)
}

pub fn cmd_validate(suite: Suite, n: Option<usize>, seed: u64) -> Result<Vec<TestReport>, CliError> {
    Ok(run_suite(suite, n, &RngHandle::new(seed))?)
}

fn reports_table(reports: &[TestReport]) -> Table {
    let mut t = Table::new(
        ["check", "name", "statistic", "threshold", "p_value", "passed", "n_samples", "seed", "stream"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for (i, r) in reports.iter().enumerate() {
        t.rows.push(vec![
            Cell::Int(i as i64),
            Cell::Text(r.name.clone()),
            Cell::Num(r.statistic),
            Cell::Num(r.threshold),
            r.p_value.map_or(Cell::Empty, Cell::Num),
            Cell::Int(r.passed as i64),
            Cell::Int(r.n_samples as i64),
            Cell::Text(r.seed.to_string()),
            Cell::Text(r.stream.to_string()),
        ]);
    }
    t
}

/// Shortest decimal string that parses back to the same f64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Wall-clock stamp; SOURCE_DATE_EPOCH pins it for byte-reproducible output.
pub fn wall_clock() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<i64>().ok());
    let at = match secs.and_then(|s| chrono::DateTime::from_timestamp(s, 0)) {
        Some(t) => t,
        None => chrono::Utc::now(),
    };
    at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn metadata(config: &RunConfig) -> Vec<(String, Value)> {
    vec![
        ("tool".into(), json!(format!("bstm {}", env!("CARGO_PKG_VERSION")))),
        ("config".into(), serde_json::to_value(config).unwrap_or(Value::Null)),
        ("rng".into(), json!(RNG_ALGORITHM)),
        ("wall_clock".into(), json!(wall_clock())),
        ("units".into(), json!(if config.bits { "bits" } else { "nats" })),
    ]
}

/// Renders a table in the configured format; rate columns in bits if requested.
pub fn render(table: &Table, config: &RunConfig) -> String {
    let mut table = table.clone();
    if config.bits {
        table.rates_in_bits();
    }
    match config.format {
        Format::Csv => render_csv(&table, config),
        Format::Json => render_json(&table, config),
    }
}

fn render_csv(table: &Table, config: &RunConfig) -> String {
    let mut out = String::new();
    for (k, v) in metadata(config) {
        let _ = writeln!(out, "# {k}: {}", v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string()));
    }
    for w in &table.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let _ = wtr.write_record(&table.columns);
    for row in &table.rows {
        let _ = wtr.write_record(row.iter().map(|c| match c {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_float(*v),
            Cell::Text(v) => v.clone(),
            Cell::Empty => String::new(),
        }));
    }
    out.push_str(&String::from_utf8(wtr.into_inner().unwrap_or_default()).unwrap_or_default());
    out
}

fn render_json(table: &Table, config: &RunConfig) -> String {
    let mut meta = serde_json::Map::new();
    for (k, v) in metadata(config) {
        meta.insert(k, v);
    }
    meta.insert("warnings".into(), json!(table.warnings));
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            for (name, c) in table.columns.iter().zip(row) {
                let v = match c {
                    Cell::Int(v) => json!(v),
                    Cell::Num(v) if v.is_finite() => json!(v),
                    Cell::Num(v) => json!(format_float(*v)),
                    Cell::Text(v) => json!(v),
                    Cell::Empty => Value::Null,
                };
                obj.insert(name.clone(), v);
            }
            Value::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&json!({ "meta": meta, "rows": rows })).unwrap_or_default();
    s.push('\n');
    s
}

fn render_reports(reports: &[TestReport], config: &RunConfig) -> String {
    match config.format {
        Format::Csv => render_csv(&reports_table(reports), config),
        Format::Json => {
            let mut meta = serde_json::Map::new();
            for (k, v) in metadata(config) {
                meta.insert(k, v);
            }
            meta.insert("all_passed".into(), json!(reports.iter().all(|r| r.passed)));
            let mut s = serde_json::to_string_pretty(&json!({ "meta": meta, "rows": reports })).unwrap_or_default();
            s.push('\n');
            s
        }
    }
}

/// Executes a parsed configuration and returns (output text, exit code).
pub fn execute(config: &RunConfig) -> Result<(String, i32), CliError> {
    match &config.command {
        Command::Constants { t, m, n } => Ok((render(&cmd_constants(*t, *m, *n)?, config), EXIT_OK)),
        Command::GainTable { t, n, snr_db, m } => {
            let table = cmd_gain_table(&parse_grid(t)?, &parse_grid(n)?, *snr_db, *m);
            Ok((render(&table, config), EXIT_OK))
        }
        Command::Sample { kind, t, m, n, p, count } => {
            let mut rng = RngHandle::new(config.seed);
            let table = cmd_sample(*kind, *t, *m, *n, *p, *count, &mut rng)?;
            Ok((render(&table, config), EXIT_OK))
        }
        Command::Validate { suite, n } => {
            let reports = cmd_validate(suite.0, *n, config.seed)?;
            let code = if reports.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_VALIDATION };
            Ok((render_reports(&reports, config), code))
        }
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = execute(&config).and_then(|(text, code)| {
        match &config.out {
            Some(path) => std::fs::write(path, text).map_err(CliError::Io)?,
            None => print!("{text}"),
        }
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bstm: {e}");
            e.exit_code()
        }
    }
}
