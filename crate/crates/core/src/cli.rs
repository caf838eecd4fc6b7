//! Command-line front end.
//!
//! Tables go to stdout (or `--out`, written atomically) as CSV with 17
//! significant digits, or as JSON with one object per line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::accountant::{
    admissibility, delta_bound, m_closed_form, max_delta_for_sigma, min_dataset, per_epoch_delta,
    solve_m_exact, AdmissibilityQuery, MBound, PrivacyParams, DEFAULT_CLIP, DEFAULT_NOISE_BUDGET,
};
use crate::asymptotics::coeff_ratio;
use crate::error::Error;
use crate::lognormal::{check_be_constant, B_ESSEEN, B_SHEVTSOVA};
use crate::montecarlo::{validate_all, CheckStatus};
use crate::tradeoff::{compose_f0_delta, compose_gdp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_PRECONDITION: i32 = 65;
pub const EXIT_CONFIG: i32 = 66;

#[derive(Debug, Parser)]
#[command(name = "shufflefdp", version, about = "f-DP accounting for DP-SGD with random shuffling")]
pub struct Cli {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Six-term δ bound at (σ, M, E).
    Delta {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 1)]
        e: u64,
        #[arg(long, default_value_t = B_SHEVTSOVA)]
        b: f64,
    },
    /// Smallest M reaching a δ target; with E > 1 the target is the composed shift.
    SolveM {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        e: u64,
        #[arg(long, default_value_t = B_SHEVTSOVA)]
        b: f64,
    },
    /// The five rows of the δ = 0.01 parameter table.
    Table1 {
        #[arg(long, default_value_t = B_SHEVTSOVA)]
        b: f64,
    },
    /// δ-versus-M grid (or M-versus-σ) from a key = value config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Shuffling and Poisson GDP coefficients over a σ range.
    Asymptotics {
        #[arg(long, default_value_t = 0.2)]
        sigma_min: f64,
        #[arg(long, default_value_t = 20.0)]
        sigma_max: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Spacing::Log)]
        spacing: Spacing,
    },
    /// Required M under both Berry–Esseen constants.
    Sensitivity {
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Monte Carlo checks of the analytical bounds.
    Validate {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
    },
    /// E-fold composition of f_{0,δ} or G_μ.
    Compose {
        #[arg(long, conflicts_with = "mu", required_unless_present = "mu")]
        delta: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        e: u64,
    },
    /// Dataset size keeping the per-round noise CσM/N within budget.
    MinN {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = DEFAULT_CLIP)]
        clip: f64,
        #[arg(long, default_value_t = DEFAULT_NOISE_BUDGET)]
        budget: f64,
    },
    /// Largest σ for a δ, or largest δ for a σ.
    Admissibility {
        #[arg(long, conflicts_with = "sigma", required_unless_present = "sigma")]
        delta: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:.16e}"),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(v) => v.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::U(v) => Value::from(*v),
            Cell::B(v) => Value::from(*v),
            Cell::S(v) => Value::from(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn render(&self, format: Format) -> String {
        let mut s = String::new();
        match format {
            Format::Csv => {
                s.push_str(&self.header.join(","));
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
            }
            Format::Json => {
                for row in &self.rows {
                    let obj: Map<String, Value> = self
                        .header
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.to_string(), c.json()))
                        .collect();
                    let _ = writeln!(s, "{}", Value::Object(obj));
                }
            }
        }
        s
    }
}

/// Failure of a command, with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Precondition(_) => EXIT_PRECONDITION,
            _ => EXIT_INVALID,
        };
        Failure { code, message: e.to_string() }
    }
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

/// A table and the status to exit with once it has been written.
pub struct Outcome {
    pub table: Table,
    pub code: i32,
    pub note: Option<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome { table, code: EXIT_OK, note: None }
    }
}

const SWEEP_HEADER: [&str; 10] = [
    "sigma",
    "M",
    "delta_total",
    "term_be",
    "term_linear",
    "term_quad",
    "term_cubic",
    "term_quartic",
    "term_tail",
    "valid",
];

fn cmd_delta(sigma: f64, m: u64, e: u64, b: f64) -> Result<Outcome, Failure> {
    check_be_constant(b)?;
    let p = PrivacyParams::new(sigma, m, e)?;
    let bd = delta_bound(&p, b)?;
    let mut t = Table::new(vec![
        "sigma",
        "M",
        "E",
        "mu",
        "term_be",
        "term_linear",
        "term_quad",
        "term_cubic",
        "term_quartic",
        "term_tail",
        "delta_total",
        "composed_shift",
        "validity_lhs",
        "validity_rhs",
        "validity_margin",
        "valid",
        "below_sigma_threshold",
        "impossibility_regime",
    ]);
    let mut row = vec![Cell::F(sigma), Cell::U(m), Cell::U(e), Cell::F(bd.mu)];
    row.extend(bd.terms().iter().map(|&v| Cell::F(v)));
    row.extend([
        Cell::F(bd.total),
        Cell::F(compose_f0_delta(bd.total.min(1.0), e)?),
        Cell::F(bd.validity_lhs),
        Cell::F(bd.validity_rhs),
        Cell::F(bd.validity_margin()),
        Cell::B(bd.valid),
        Cell::B(p.below_validity_threshold()),
        Cell::B(p.in_impossibility_regime()),
    ]);
    t.rows.push(row);
    Ok(Outcome {
        table: t,
        code: if bd.valid { EXIT_OK } else { EXIT_INVALID },
        note: (!bd.valid).then(|| "validity condition fails".to_string()),
    })
}

fn solve_header() -> Vec<&'static str> {
    vec!["sigma", "delta", "E", "delta_per_epoch", "M_two_term", "M_exact", "N_min", "delta_achieved", "admissible"]
}

fn solve_row(sigma: f64, delta: f64, e: u64, b: f64) -> Result<(Vec<Cell>, bool), Failure> {
    let per = per_epoch_delta(delta, e)?;
    let sol = solve_m_exact(sigma, per, b)?;
    let two = m_closed_form(sigma, per, b, MBound::Primary)?.ceil();
    Ok((
        vec![
            Cell::F(sigma),
            Cell::F(delta),
            Cell::U(e),
            Cell::F(per),
            Cell::U(two as u64),
            Cell::U(sol.rounds),
            Cell::U(sol.n_min),
            Cell::F(sol.delta_achieved),
            Cell::B(sol.admissible),
        ],
        sol.admissible,
    ))
}

fn cmd_solve_m(sigma: f64, delta: f64, e: u64, b: f64) -> Result<Outcome, Failure> {
    check_be_constant(b)?;
    let per = per_epoch_delta(delta, e)?;
    let limit = max_delta_for_sigma(sigma)?;
    if per > limit {
        let hint = admissibility(AdmissibilityQuery::Delta(per))
            .map(|s| format!("; delta = {per} needs sigma <= {s:.4}"))
            .unwrap_or_default();
        return Err(fail(
            EXIT_INVALID,
            format!("inadmissible: sigma = {sigma} allows delta <= {limit:.4}{hint}"),
        ));
    }
    let mut t = Table::new(solve_header());
    t.rows.push(solve_row(sigma, delta, e, b)?.0);
    Ok(t.into())
}

pub const TABLE1_SIGMAS: [f64; 5] = [0.5, 0.75, 1.0, 1.5, 2.0];

fn cmd_table1(b: f64) -> Result<Outcome, Failure> {
    check_be_constant(b)?;
    let mut t = Table::new(vec!["sigma", "M_two_term", "M_exact", "N_min"]);
    for &s in &TABLE1_SIGMAS {
        let sol = solve_m_exact(s, 0.01, b)?;
        let two = m_closed_form(s, 0.01, b, MBound::Primary)?.ceil();
        t.rows.push(vec![Cell::F(s), Cell::U(two as u64), Cell::U(sol.rounds), Cell::U(sol.n_min)]);
    }
    Ok(t.into())
}

/// What a sweep tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// The δ breakdown over every (σ, M) pair.
    DeltaVsM,
    /// Required M over every (σ, δ) pair.
    RoundsVsSigma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub sigma_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub m_min: u64,
    pub m_max: u64,
    pub m_points: usize,
    pub m_spacing: Spacing,
    pub epochs: u64,
    pub b: f64,
    pub output: Format,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            kind: SweepKind::DeltaVsM,
            sigma_list: vec![0.5, 0.75, 1.0, 1.5, 2.0],
            delta_list: vec![0.01],
            m_min: 1_000,
            m_max: 1_000_000_000,
            m_points: 61,
            m_spacing: Spacing::Log,
            epochs: 1,
            b: B_SHEVTSOVA,
            output: Format::Csv,
        }
    }
}

fn list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect()
}

fn int(v: &str) -> Result<u64, String> {
    let x: f64 = v.parse().map_err(|e| format!("{v:?}: {e}"))?;
    if x.fract() != 0.0 || x < 0.0 || x >= u64::MAX as f64 {
        return Err(format!("{v:?} is not a non-negative integer"));
    }
    Ok(x as u64)
}

impl SweepConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut c = SweepConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", no + 1))?;
            let (k, v) = (k.trim(), v.trim());
            let at = |e: String| format!("line {}: {k}: {e}", no + 1);
            match k {
                "kind" => {
                    c.kind = match v {
                        "delta_vs_m" => SweepKind::DeltaVsM,
                        "rounds_vs_sigma" => SweepKind::RoundsVsSigma,
                        _ => return Err(at(format!("unknown kind {v:?}"))),
                    }
                }
                "sigma" | "sigma_list" => c.sigma_list = list(v).map_err(at)?,
                "delta" | "delta_list" => c.delta_list = list(v).map_err(at)?,
                "m_min" => c.m_min = int(v).map_err(at)?,
                "m_max" => c.m_max = int(v).map_err(at)?,
                "m_points" => c.m_points = int(v).map_err(at)? as usize,
                "m_spacing" => {
                    c.m_spacing = match v {
                        "linear" => Spacing::Linear,
                        "log" => Spacing::Log,
                        _ => return Err(at(format!("unknown spacing {v:?}"))),
                    }
                }
                "e" | "epochs" => c.epochs = int(v).map_err(at)?,
                "b" => c.b = v.parse().map_err(|e| at(format!("{e}")))?,
                "output" => {
                    c.output = match v {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        _ => return Err(at(format!("unknown output {v:?}"))),
                    }
                }
                _ => return Err(format!("line {}: unknown key {k:?}", no + 1)),
            }
        }
        if c.sigma_list.is_empty() || c.delta_list.is_empty() {
            return Err("sigma and delta lists must be non-empty".into());
        }
        if c.m_min < 3 || c.m_max < c.m_min || c.m_points < 1 {
            return Err(format!(
                "need 3 <= m_min <= m_max and m_points >= 1, got {}..{} with {} points",
                c.m_min, c.m_max, c.m_points
            ));
        }
        if c.epochs < 1 {
            return Err("epochs must be >= 1".into());
        }
        Ok(c)
    }

    /// Distinct integer M values, ascending.
    pub fn m_grid(&self) -> Vec<u64> {
        let (lo, hi) = (self.m_min as f64, self.m_max as f64);
        let n = self.m_points;
        let mut out: Vec<u64> = (0..n)
            .map(|i| {
                let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                let v = match self.m_spacing {
                    Spacing::Linear => lo + (hi - lo) * t,
                    Spacing::Log => (lo.ln() + (hi / lo).ln() * t).exp(),
                };
                (v.round() as u64).clamp(self.m_min, self.m_max)
            })
            .collect();
        out.dedup();
        out
    }
}

fn cmd_sweep(path: &Path) -> Result<(Outcome, Format), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_CONFIG, format!("cannot read config {}: {e}", path.display())))?;
    let c = SweepConfig::parse(&text)
        .map_err(|e| fail(EXIT_CONFIG, format!("bad config {}: {e}", path.display())))?;
    check_be_constant(c.b)?;
    let table = match c.kind {
        SweepKind::DeltaVsM => {
            let mut t = Table::new(SWEEP_HEADER.to_vec());
            let grid = c.m_grid();
            for &s in &c.sigma_list {
                for &m in &grid {
                    let bd = delta_bound(&PrivacyParams::new(s, m, c.epochs)?, c.b)?;
                    let mut row = vec![Cell::F(s), Cell::U(m), Cell::F(bd.total)];
                    row.extend(bd.terms().iter().map(|&v| Cell::F(v)));
                    row.push(Cell::B(bd.valid));
                    t.rows.push(row);
                }
            }
            t
        }
        SweepKind::RoundsVsSigma => {
            let mut t = Table::new(solve_header());
            for &s in &c.sigma_list {
                for &d in &c.delta_list {
                    t.rows.push(solve_row(s, d, c.epochs, c.b)?.0);
                }
            }
            t
        }
    };
    Ok((table.into(), c.output))
}

fn cmd_asymptotics(lo: f64, hi: f64, points: usize, spacing: Spacing) -> Result<Outcome, Failure> {
    if !(lo > 0.0 && hi >= lo && points >= 1) {
        return Err(fail(EXIT_INVALID, "need 0 < sigma-min <= sigma-max and points >= 1"));
    }
    let mut t = Table::new(vec!["sigma", "shuffle_mu", "poisson_mu", "ratio"]);
    for i in 0..points {
        let u = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
        let s = match spacing {
            _ if i + 1 == points && points > 1 => hi,
            Spacing::Linear => lo + (hi - lo) * u,
            Spacing::Log => (lo.ln() + (hi / lo).ln() * u).exp(),
        };
        let c = coeff_ratio(s)?;
        t.rows.push(vec![Cell::F(s), Cell::F(c.shuffle_mu), Cell::F(c.poisson_mu), Cell::F(c.ratio)]);
    }
    Ok(t.into())
}

fn cmd_sensitivity(sigma: f64, delta: f64) -> Result<Outcome, Failure> {
    let mut t = Table::new(vec!["sigma", "delta", "B", "M_two_term", "M_exact", "N_min", "valid"]);
    for b in [B_ESSEEN, B_SHEVTSOVA] {
        let sol = solve_m_exact(sigma, delta, b)?;
        let two = m_closed_form(sigma, delta, b, MBound::Primary)?.ceil();
        t.rows.push(vec![
            Cell::F(sigma),
            Cell::F(delta),
            Cell::F(b),
            Cell::U(two as u64),
            Cell::U(sol.rounds),
            Cell::U(sol.n_min),
            Cell::B(sol.breakdown.valid),
        ]);
    }
    Ok(t.into())
}

fn cmd_validate(sigma: f64, m: usize, replicas: usize, seed: u64) -> Result<Outcome, Failure> {
    let v = validate_all(sigma, m, replicas, seed)?;
    let mut t = Table::new(vec!["check", "status", "margin", "detail"]);
    for c in &v.checks {
        let status = match &c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::NotApplicable(_) => "not_applicable",
        };
        t.rows.push(vec![
            Cell::S(c.name.to_string()),
            Cell::S(status.to_string()),
            Cell::F(c.margin.unwrap_or(f64::NAN)),
            Cell::S(c.detail.replace(',', ";")),
        ]);
    }
    Ok(Outcome {
        table: t,
        code: if v.passed() { EXIT_OK } else { EXIT_INVALID },
        note: (!v.passed()).then(|| "at least one check failed".to_string()),
    })
}

fn cmd_compose(delta: Option<f64>, mu: Option<f64>, e: u64) -> Result<Outcome, Failure> {
    let mut t = Table::new(vec!["kind", "input", "E", "composed"]);
    let row = match (delta, mu) {
        (Some(d), _) => vec![Cell::S("f0_delta".into()), Cell::F(d), Cell::U(e), Cell::F(compose_f0_delta(d, e)?)],
        (_, Some(m)) => vec![Cell::S("gdp".into()), Cell::F(m), Cell::U(e), Cell::F(compose_gdp(m, e)?)],
        _ => unreachable!("clap requires one of --delta and --mu"),
    };
    t.rows.push(row);
    Ok(t.into())
}

fn cmd_min_n(sigma: f64, m: u64, clip: f64, budget: f64) -> Result<Outcome, Failure> {
    let mut t = Table::new(vec!["sigma", "M", "C", "noise_budget", "N_min"]);
    let n = min_dataset(sigma, m, clip, budget)?;
    t.rows.push(vec![Cell::F(sigma), Cell::U(m), Cell::F(clip), Cell::F(budget), Cell::U(n)]);
    Ok(t.into())
}

fn cmd_admissibility(delta: Option<f64>, sigma: Option<f64>) -> Result<Outcome, Failure> {
    let mut t = Table::new(vec!["given", "value", "frontier"]);
    let row = match (delta, sigma) {
        (Some(d), _) => vec![
            Cell::S("delta".into()),
            Cell::F(d),
            Cell::F(admissibility(AdmissibilityQuery::Delta(d))?),
        ],
        (_, Some(s)) => vec![
            Cell::S("sigma".into()),
            Cell::F(s),
            Cell::F(admissibility(AdmissibilityQuery::Sigma(s))?),
        ],
        _ => unreachable!("clap requires one of --delta and --sigma"),
    };
    t.rows.push(row);
    Ok(t.into())
}

fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let res = std::fs::write(&tmp, content).and_then(|_| std::fs::rename(&tmp, path));
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    res
}

fn dispatch(cli: &Cli) -> Result<(Outcome, Format), Failure> {
    let f = cli.output.format;
    let o = match cli.command {
        Command::Delta { sigma, m, e, b } => cmd_delta(sigma, m, e, b)?,
        Command::SolveM { sigma, delta, e, b } => cmd_solve_m(sigma, delta, e, b)?,
        Command::Table1 { b } => cmd_table1(b)?,
        Command::Sweep { ref config } => return cmd_sweep(config),
        Command::Asymptotics { sigma_min, sigma_max, points, spacing } => {
            cmd_asymptotics(sigma_min, sigma_max, points, spacing)?
        }
        Command::Sensitivity { sigma, delta } => cmd_sensitivity(sigma, delta)?,
        Command::Validate { sigma, m, replicas, seed } => cmd_validate(sigma, m, replicas, seed)?,
        Command::Compose { delta, mu, e } => cmd_compose(delta, mu, e)?,
        Command::MinN { sigma, m, clip, budget } => cmd_min_n(sigma, m, clip, budget)?,
        Command::Admissibility { delta, sigma } => cmd_admissibility(delta, sigma)?,
    };
    Ok((o, f))
}

/// Runs the CLI on `args` and returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let (outcome, format) = match dispatch(&cli) {
        Ok(v) => v,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            return f.code;
        }
    };
    // A sweep config may choose its own format unless the flag was given.
    let format = match cli.command {
        Command::Sweep { .. } if cli.output.format == Format::Csv => format,
        _ => cli.output.format,
    };
    let text = outcome.table.render(format);
    match &cli.output.out {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    if let Some(note) = outcome.note {
        let _ = writeln!(err, "{note}");
    }
    outcome.code
}
