//! Run configuration: the command-line surface, the flat `key = value`
//! config file, the exact angle-expression parser, and the merge of all
//! three (flags beat file values beat defaults) into a validated `RunSpec`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::angle::Angle;
use crate::coin::{CoinMode, CoinParams};
use crate::entropy::DEFAULT_SUPPORT_TOL;
use crate::localization::{DEFAULT_POLE_TOL, DEFAULT_SEC2_CAP, DEFAULT_SEC2_N_MAX};
use crate::mat4::{vnorm, C64, Vec4};
use crate::observables::DEFAULT_SUPPORT_THRESHOLD;
use crate::spectral::DEFAULT_ZERO_TOL;
use crate::walk::{EvolveOptions, InitialState};

/// Configuration failures. Usage errors exit 1; config-file I/O exits 3.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ConfigError::Usage(_) => 1,
            ConfigError::Io { .. } => 3,
        }
    }
}

fn usage(msg: impl Into<String>) -> ConfigError {
    ConfigError::Usage(msg.into())
}

/// The experiment presets.
#[derive(Clone, Copy, Debug, Eq, PartialEq, ValueEnum)]
pub enum Experiment {
    /// Final-step probability distribution P(m, n).
    Probability,
    /// Support count (occupied sites above threshold) per step.
    Support,
    /// Return probability to the starting site per step.
    ReturnProb,
    /// Shannon entropies S_P and S_C per step.
    Shannon,
    /// Entanglement entropy per step.
    Entanglement,
    /// Quantum relative entropy D and its variance V per step.
    Qre,
    /// Numerical localization length over a frequency grid.
    LyapunovSweep,
    /// Analytic localization-length estimate over a frequency grid.
    AnalyticLloc,
    /// Per-category probability snapshots at θ = π/3·(1 + j/10), j = 1..10.
    Categories,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Probability => "probability",
            Experiment::Support => "support",
            Experiment::ReturnProb => "return-prob",
            Experiment::Shannon => "shannon",
            Experiment::Entanglement => "entanglement",
            Experiment::Qre => "qre",
            Experiment::LyapunovSweep => "lyapunov-sweep",
            Experiment::AnalyticLloc => "analytic-lloc",
            Experiment::Categories => "categories",
        }
    }

    fn is_sweep(&self) -> bool {
        matches!(self, Experiment::LyapunovSweep | Experiment::AnalyticLloc)
    }

    fn default_steps(&self) -> u64 {
        match self {
            Experiment::LyapunovSweep => 2000,
            _ => 100,
        }
    }
}

/// Output format for data files.
#[derive(Clone, Copy, Debug, Eq, PartialEq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    /// A static SVG plot next to the CSV data it is drawn from.
    Svg,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
        }
    }

    pub fn extension(&self) -> &'static str {
        self.name()
    }
}

/// Which walk(s) an experiment covers.
#[derive(Clone, Copy, Debug, Eq, PartialEq, ValueEnum)]
pub enum WalkMode {
    Sdc,
    Sic,
    Both,
}

impl WalkMode {
    pub fn name(&self) -> &'static str {
        match self {
            WalkMode::Sdc => "sdc",
            WalkMode::Sic => "sic",
            WalkMode::Both => "both",
        }
    }

    /// The coin modes this selection expands to, in output order.
    pub fn coin_modes(&self) -> Vec<CoinMode> {
        match self {
            WalkMode::Sdc => vec![CoinMode::Sdc],
            WalkMode::Sic => vec![CoinMode::Sic],
            WalkMode::Both => vec![CoinMode::Sdc, CoinMode::Sic],
        }
    }
}

/// A uniform frequency grid ω_k = min + k·step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    /// Number of grid points: floor((max − min)/step) + 1, with a small
    /// slack so an exactly-divisible range keeps its endpoint.
    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false // validated: at least the start point exists
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.min + k as f64 * self.step).collect()
    }
}

/// Numerical tolerances, all overridable from the CLI.
#[derive(Clone, Copy, Debug)]
pub struct Thresholds {
    /// Probability above this counts a site as occupied.
    pub support_threshold: f64,
    /// Transfer-matrix pole tolerance on |cos(tθ)|.
    pub pole_tol: f64,
    /// Eigenvalues at or below this are exact zeros.
    pub zero_tol: f64,
    /// QRE support-violation tolerance.
    pub support_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            support_threshold: DEFAULT_SUPPORT_THRESHOLD,
            pole_tol: DEFAULT_POLE_TOL,
            zero_tol: DEFAULT_ZERO_TOL,
            support_tol: DEFAULT_SUPPORT_TOL,
        }
    }
}

/// A fully validated run description.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub experiment: Experiment,
    pub params: CoinParams,
    pub mode: WalkMode,
    pub init: InitialState,
    pub steps: u64,
    pub grid: Option<GridSpec>,
    pub format: OutputFormat,
    pub out: PathBuf,
    pub thresholds: Thresholds,
    /// σ-smoothing ε for the QRE, when enabled.
    pub qre_smoothing: Option<f64>,
    pub site_budget: usize,
    pub sec2_n_max: u64,
    pub sec2_cap: f64,
}

impl RunSpec {
    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions { site_budget: self.site_budget }
    }
}

/// 2D discrete-time quantum walk simulator: step-dependent vs
/// step-independent coins, entropy diagnostics, and localization analysis.
#[derive(Debug, Parser)]
#[command(name = "qwalk2d", version, about)]
pub struct Cli {
    /// Experiment preset to run.
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,

    /// Both coin angles at once (conflicts with --theta1/--theta2).
    /// Angle expressions are exact: "pi/4", "pi/3*(1+3/10)", "0.25".
    #[arg(long)]
    pub theta: Option<String>,

    /// First coin angle θ₁.
    #[arg(long)]
    pub theta1: Option<String>,

    /// Second coin angle θ₂ (defaults to θ₁).
    #[arg(long)]
    pub theta2: Option<String>,

    /// Coin phase φ (default 0).
    #[arg(long)]
    pub phi: Option<String>,

    /// Which walk(s) to run (default both).
    #[arg(long, value_enum)]
    pub mode: Option<WalkMode>,

    /// Number of steps (walk experiments) or iterations (lyapunov-sweep).
    #[arg(long)]
    pub steps: Option<u64>,

    /// Sweep grid start (sweep experiments only).
    #[arg(long, allow_negative_numbers = true)]
    pub omega_min: Option<f64>,

    /// Sweep grid end.
    #[arg(long, allow_negative_numbers = true)]
    pub omega_max: Option<f64>,

    /// Sweep grid spacing.
    #[arg(long)]
    pub omega_step: Option<f64>,

    /// Support threshold on site probabilities.
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Transfer-matrix pole tolerance.
    #[arg(long)]
    pub pole_tol: Option<f64>,

    /// Spectral zero tolerance.
    #[arg(long)]
    pub zero_tol: Option<f64>,

    /// QRE support-violation tolerance.
    #[arg(long)]
    pub support_tol: Option<f64>,

    /// Output path (default <experiment>.<format>).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format (default csv).
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,

    /// Flat key = value config file; flags win on conflict.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Initial spinor as 8 comma-separated floats (re,im ×4); normalized.
    #[arg(long)]
    pub spinor: Option<String>,

    /// Initial site as "m,n" (default "0,0").
    #[arg(long)]
    pub origin: Option<String>,

    /// Smooth σ in the QRE: (1−ε)σ + ε·I/4. Optional ε value.
    #[arg(long, num_args = 0..=1, default_missing_value = "1e-9")]
    pub qre_smoothing: Option<f64>,

    /// Abort when a wavefunction occupies more sites than this.
    #[arg(long)]
    pub site_budget: Option<usize>,

    /// Truncation of the sec² average for non-rational angles.
    #[arg(long)]
    pub sec2_nmax: Option<u64>,

    /// sec² terms above this count as poles.
    #[arg(long)]
    pub sec2_cap: Option<f64>,
}

// ---------------------------------------------------------------------------
// Exact angle expressions
// ---------------------------------------------------------------------------

/// Reduced fraction n/d with d > 0.
#[derive(Clone, Copy, Debug)]
struct Rational {
    n: i128,
    d: i128,
}

impl Rational {
    fn new(n: i128, d: i128) -> Option<Rational> {
        if d == 0 {
            return None;
        }
        let (n, d) = if d < 0 { (n.checked_neg()?, d.checked_neg()?) } else { (n, d) };
        let g = gcd128(n.unsigned_abs(), d.unsigned_abs()).max(1) as i128;
        Some(Rational { n: n / g, d: d / g })
    }

    fn integer(n: i128) -> Rational {
        Rational { n, d: 1 }
    }

    fn zero() -> Rational {
        Rational { n: 0, d: 1 }
    }

    fn is_zero(&self) -> bool {
        self.n == 0
    }

    fn add(&self, o: &Rational) -> Option<Rational> {
        let n = self.n.checked_mul(o.d)?.checked_add(o.n.checked_mul(self.d)?)?;
        Rational::new(n, self.d.checked_mul(o.d)?)
    }

    fn mul(&self, o: &Rational) -> Option<Rational> {
        Rational::new(self.n.checked_mul(o.n)?, self.d.checked_mul(o.d)?)
    }

    fn div(&self, o: &Rational) -> Option<Rational> {
        if o.n == 0 {
            return None;
        }
        Rational::new(self.n.checked_mul(o.d)?, self.d.checked_mul(o.n)?)
    }

    fn neg(&self) -> Option<Rational> {
        Some(Rational { n: self.n.checked_neg()?, d: self.d })
    }

    fn to_f64(&self) -> f64 {
        self.n as f64 / self.d as f64
    }
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A partially evaluated expression: exact a + b·π when possible, else f64.
#[derive(Clone, Copy, Debug)]
enum ExprValue {
    Exact { plain: Rational, pi: Rational },
    Float(f64),
}

impl ExprValue {
    fn from_rational(r: Rational) -> ExprValue {
        ExprValue::Exact { plain: r, pi: Rational::zero() }
    }

    fn pi() -> ExprValue {
        ExprValue::Exact { plain: Rational::zero(), pi: Rational::integer(1) }
    }

    fn is_zero(&self) -> bool {
        match self {
            ExprValue::Exact { plain, pi } => plain.is_zero() && pi.is_zero(),
            ExprValue::Float(v) => *v == 0.0,
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            ExprValue::Exact { plain, pi } => plain.to_f64() + pi.to_f64() * std::f64::consts::PI,
            ExprValue::Float(v) => *v,
        }
    }
}

fn val_add(a: ExprValue, b: ExprValue, sign: i128) -> ExprValue {
    if let (ExprValue::Exact { plain: ap, pi: aq }, ExprValue::Exact { plain: bp, pi: bq }) = (a, b)
    {
        let s = Rational::integer(sign);
        if let (Some(plain), Some(pi)) = (
            bp.mul(&s).and_then(|v| ap.add(&v)),
            bq.mul(&s).and_then(|v| aq.add(&v)),
        ) {
            return ExprValue::Exact { plain, pi };
        }
    }
    ExprValue::Float(a.to_f64() + sign as f64 * b.to_f64())
}

fn val_mul(a: ExprValue, b: ExprValue) -> ExprValue {
    if let (ExprValue::Exact { plain: ap, pi: aq }, ExprValue::Exact { plain: bp, pi: bq }) = (a, b)
    {
        // (a₀ + a₁π)(b₀ + b₁π) stays exact unless a π² term appears.
        if aq.is_zero() || bq.is_zero() {
            let exact = (|| {
                let plain = ap.mul(&bp)?;
                let pi = ap.mul(&bq)?.add(&aq.mul(&bp)?)?;
                Some(ExprValue::Exact { plain, pi })
            })();
            if let Some(v) = exact {
                return v;
            }
        }
    }
    ExprValue::Float(a.to_f64() * b.to_f64())
}

fn val_div(a: ExprValue, b: ExprValue) -> Result<ExprValue, String> {
    if b.is_zero() {
        return Err("division by zero".into());
    }
    if let (ExprValue::Exact { plain: ap, pi: aq }, ExprValue::Exact { plain: bp, pi: bq }) = (a, b)
    {
        if bq.is_zero() {
            // Divide by a pure rational.
            if let (Some(plain), Some(pi)) = (ap.div(&bp), aq.div(&bp)) {
                return Ok(ExprValue::Exact { plain, pi });
            }
        } else if bp.is_zero() && ap.is_zero() {
            // π-multiple over π-multiple: the πs cancel exactly.
            if let Some(plain) = aq.div(&bq) {
                return Ok(ExprValue::Exact { plain, pi: Rational::zero() });
            }
        }
    }
    Ok(ExprValue::Float(a.to_f64() / b.to_f64()))
}

fn val_neg(a: ExprValue) -> ExprValue {
    match a {
        ExprValue::Exact { plain, pi } => match (plain.neg(), pi.neg()) {
            (Some(plain), Some(pi)) => ExprValue::Exact { plain, pi },
            _ => ExprValue::Float(-a.to_f64()),
        },
        ExprValue::Float(v) => ExprValue::Float(-v),
    }
}

/// Recursive-descent parser for angle expressions over +, −, ·, /, parens,
/// decimal numbers, and the constant `pi`. Rational-multiple-of-π inputs are
/// evaluated exactly; anything else falls back to floating point.
struct ExprParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ExprParser<'a> {
    fn new(text: &'a str) -> Self {
        ExprParser { bytes: text.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ExprValue, String> {
        let mut v = self.term()?;
        loop {
            if self.eat(b'+') {
                v = val_add(v, self.term()?, 1);
            } else if self.eat(b'-') {
                v = val_add(v, self.term()?, -1);
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<ExprValue, String> {
        let mut v = self.factor()?;
        loop {
            if self.eat(b'*') {
                v = val_mul(v, self.factor()?);
            } else if self.eat(b'/') {
                v = val_div(v, self.factor()?)?;
            } else {
                return Ok(v);
            }
        }
    }

    fn factor(&mut self) -> Result<ExprValue, String> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(val_neg(self.factor()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err("missing closing parenthesis".into());
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphabetic())
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                if word == "pi" {
                    Ok(ExprValue::pi())
                } else {
                    Err(format!("unknown symbol `{word}` (only `pi` is defined)"))
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) => Err(format!("unexpected character `{}`", c as char)),
            None => Err("unexpected end of expression".into()),
        }
    }

    fn number(&mut self) -> Result<ExprValue, String> {
        let start = self.pos;
        let mut numerator: Option<i128> = Some(0);
        let mut denominator: Option<i128> = Some(1);
        let mut saw_digit = false;
        while let Some(b) = self.bytes.get(self.pos) {
            match b {
                b'0'..=b'9' => {
                    saw_digit = true;
                    let d = (b - b'0') as i128;
                    numerator = numerator
                        .and_then(|v| v.checked_mul(10))
                        .and_then(|v| v.checked_add(d));
                    self.pos += 1;
                }
                b'.' => {
                    self.pos += 1;
                    let mut any = false;
                    while let Some(b @ b'0'..=b'9') = self.bytes.get(self.pos) {
                        any = true;
                        let d = (*b - b'0') as i128;
                        numerator = numerator
                            .and_then(|v| v.checked_mul(10))
                            .and_then(|v| v.checked_add(d));
                        denominator = denominator.and_then(|v| v.checked_mul(10));
                        self.pos += 1;
                    }
                    if !any {
                        return Err("expected digits after decimal point".into());
                    }
                    saw_digit = true;
                    break;
                }
                _ => break,
            }
        }
        if !saw_digit {
            return Err("expected a number".into());
        }
        match (numerator, denominator) {
            (Some(n), Some(d)) => {
                Ok(ExprValue::from_rational(Rational::new(n, d).expect("d > 0")))
            }
            _ => {
                // Overflowed i128: fall back to floating point.
                let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                text.parse::<f64>()
                    .map(ExprValue::Float)
                    .map_err(|_| format!("malformed number `{text}`"))
            }
        }
    }
}

/// Parse an angle expression ("pi/4", "pi/3*(1+3/10)", "0.25") to an Angle.
/// Exact rational multiples of π keep their (p, q) representation.
pub fn parse_angle_expr(text: &str) -> Result<Angle, ConfigError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(usage("empty angle expression"));
    }
    let mut parser = ExprParser::new(trimmed);
    let value = parser
        .expr()
        .map_err(|e| usage(format!("malformed angle expression `{trimmed}`: {e}")))?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(usage(format!(
            "malformed angle expression `{trimmed}`: trailing input at byte {}",
            parser.pos
        )));
    }
    let angle = match value {
        ExprValue::Exact { plain, pi } if plain.is_zero() => {
            match (i64::try_from(pi.n), i64::try_from(pi.d)) {
                (Ok(p), Ok(q)) if q <= i64::MAX / 2 && p.abs() <= i64::MAX / 2 => {
                    Angle::pi_frac(p, q)
                }
                _ => Angle::from_radians(value.to_f64()),
            }
        }
        v => Angle::from_radians(v.to_f64()),
    };
    angle.map_err(|e| usage(format!("invalid angle `{trimmed}`: {e}")))
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

const KNOWN_KEYS: [&str; 22] = [
    "experiment",
    "theta",
    "theta1",
    "theta2",
    "phi",
    "mode",
    "steps",
    "omega-min",
    "omega-max",
    "omega-step",
    "threshold",
    "pole-tol",
    "zero-tol",
    "support-tol",
    "out",
    "format",
    "spinor",
    "origin",
    "qre-smoothing",
    "site-budget",
    "sec2-nmax",
    "sec2-cap",
];

/// Parse a flat `key = value` file (# starts a comment) into a map. Keys use
/// the long-flag spelling; underscores are accepted as dashes.
fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(format!(
                "config line {} is not `key = value`: `{}`",
                lineno + 1,
                line
            )));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(usage(format!("unknown config key `{key}`")));
        }
        if value.is_empty() {
            return Err(usage(format!("config key `{key}` has an empty value")));
        }
        map.insert(key, value);
    }
    Ok(map)
}

fn file_parse<T: std::str::FromStr>(
    file: &BTreeMap<String, String>,
    key: &str,
    what: &str,
) -> Result<Option<T>, ConfigError> {
    match file.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| usage(format!("config value for `{key}` is not {what}: `{raw}`"))),
        None => Ok(None),
    }
}

fn file_enum<T: ValueEnum>(
    file: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, ConfigError> {
    match file.get(key) {
        Some(raw) => T::from_str(raw, false)
            .map(Some)
            .map_err(|_| usage(format!("config value for `{key}` is not valid: `{raw}`"))),
        None => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// Merge + validation
// ---------------------------------------------------------------------------

fn parse_spinor(text: &str) -> Result<Vec4, ConfigError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 8 {
        return Err(usage(format!(
            "--spinor needs 8 comma-separated floats (re,im per component), got {}",
            parts.len()
        )));
    }
    let mut values = [0.0f64; 8];
    for (i, p) in parts.iter().enumerate() {
        values[i] = p
            .parse::<f64>()
            .map_err(|_| usage(format!("--spinor component `{p}` is not a number")))?;
        if !values[i].is_finite() {
            return Err(usage(format!("--spinor component `{p}` is not finite")));
        }
    }
    let mut spinor: Vec4 = [
        C64::new(values[0], values[1]),
        C64::new(values[2], values[3]),
        C64::new(values[4], values[5]),
        C64::new(values[6], values[7]),
    ];
    let norm = vnorm(&spinor);
    if norm == 0.0 {
        return Err(usage("--spinor must be nonzero"));
    }
    for c in &mut spinor {
        *c /= norm;
    }
    Ok(spinor)
}

fn parse_origin(text: &str) -> Result<(i64, i64), ConfigError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(usage(format!("--origin needs `m,n`, got `{text}`")));
    }
    let m = parts[0]
        .parse::<i64>()
        .map_err(|_| usage(format!("--origin coordinate `{}` is not an integer", parts[0])))?;
    let n = parts[1]
        .parse::<i64>()
        .map_err(|_| usage(format!("--origin coordinate `{}` is not an integer", parts[1])))?;
    Ok((m, n))
}

fn check_tolerance(name: &str, value: f64) -> Result<f64, ConfigError> {
    if !value.is_finite() || value < 0.0 {
        return Err(usage(format!("{name} must be finite and nonnegative, got {value}")));
    }
    Ok(value)
}

/// Merge the parsed CLI with an optional config file into a validated spec.
pub fn build_spec(cli: &Cli) -> Result<RunSpec, ConfigError> {
    let file = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };

    let experiment = match cli.experiment.or(file_enum(&file, "experiment")?) {
        Some(e) => e,
        None => return Err(usage("--experiment is required (or set it in the config file)")),
    };

    // Angles: --theta conflicts with --theta1/--theta2; θ₂ defaults to θ₁;
    // everything defaults to π/4.
    let theta = cli.theta.clone().or_else(|| file.get("theta").cloned());
    let theta1 = cli.theta1.clone().or_else(|| file.get("theta1").cloned());
    let theta2 = cli.theta2.clone().or_else(|| file.get("theta2").cloned());
    if theta.is_some() && (theta1.is_some() || theta2.is_some()) {
        return Err(usage("--theta conflicts with --theta1/--theta2"));
    }
    let (theta1, theta2): (Angle, Option<Angle>) = match (theta, theta1, theta2) {
        (Some(t), _, _) => (parse_angle_expr(&t)?, None),
        (None, t1, t2) => {
            let a1 = match t1 {
                Some(t) => parse_angle_expr(&t)?,
                None => Angle::pi_frac(1, 4).expect("valid default"),
            };
            let a2 = match t2 {
                Some(t) => Some(parse_angle_expr(&t)?),
                None => None,
            };
            (a1, a2)
        }
    };
    let theta2 = theta2.unwrap_or(theta1);

    let phi = match cli.phi.clone().or_else(|| file.get("phi").cloned()) {
        Some(p) => parse_angle_expr(&p)?,
        None => Angle::zero(),
    };

    let mode = cli.mode.or(file_enum(&file, "mode")?).unwrap_or(WalkMode::Both);
    // The base CoinParams carries SDC; experiments re-mode it per walk.
    let params = CoinParams::new(theta1, theta2, phi, CoinMode::Sdc);

    let steps = cli
        .steps
        .or(file_parse::<u64>(&file, "steps", "an integer")?)
        .unwrap_or_else(|| experiment.default_steps());

    // Sweep grid: required for sweep experiments, rejected otherwise.
    let omega_min = cli.omega_min.or(file_parse(&file, "omega-min", "a number")?);
    let omega_max = cli.omega_max.or(file_parse(&file, "omega-max", "a number")?);
    let omega_step = cli.omega_step.or(file_parse(&file, "omega-step", "a number")?);
    let grid = if experiment.is_sweep() {
        let (Some(min), Some(max), Some(step)) = (omega_min, omega_max, omega_step) else {
            return Err(usage(format!(
                "experiment `{}` needs --omega-min, --omega-max and --omega-step",
                experiment.name()
            )));
        };
        if !min.is_finite() || !max.is_finite() || !step.is_finite() {
            return Err(usage("sweep grid bounds must be finite"));
        }
        if step <= 0.0 {
            return Err(usage(format!("--omega-step must be positive, got {step}")));
        }
        if max < min {
            return Err(usage(format!("--omega-max {max} is below --omega-min {min}")));
        }
        Some(GridSpec { min, max, step })
    } else {
        if omega_min.is_some() || omega_max.is_some() || omega_step.is_some() {
            return Err(usage(format!(
                "experiment `{}` takes no sweep grid (--omega-min/--omega-max/--omega-step)",
                experiment.name()
            )));
        }
        None
    };

    if experiment == Experiment::LyapunovSweep {
        if mode == WalkMode::Both {
            return Err(usage(
                "lyapunov-sweep runs one walk per file: pass --mode sdc or --mode sic",
            ));
        }
        if steps == 0 {
            return Err(usage("lyapunov-sweep needs --steps >= 1"));
        }
    }

    let spinor = match cli.spinor.clone().or_else(|| file.get("spinor").cloned()) {
        Some(s) => Some(parse_spinor(&s)?),
        None => None,
    };
    let origin = match cli.origin.clone().or_else(|| file.get("origin").cloned()) {
        Some(o) => parse_origin(&o)?,
        None => (0, 0),
    };
    let init = match spinor {
        Some(s) => InitialState::new(s, origin)
            .map_err(|e| usage(format!("invalid initial state: {e}")))?,
        None => InitialState { origin, ..InitialState::default() },
    };

    let thresholds = Thresholds {
        support_threshold: check_tolerance(
            "--threshold",
            cli.threshold
                .or(file_parse(&file, "threshold", "a number")?)
                .unwrap_or(DEFAULT_SUPPORT_THRESHOLD),
        )?,
        pole_tol: check_tolerance(
            "--pole-tol",
            cli.pole_tol
                .or(file_parse(&file, "pole-tol", "a number")?)
                .unwrap_or(DEFAULT_POLE_TOL),
        )?,
        zero_tol: check_tolerance(
            "--zero-tol",
            cli.zero_tol
                .or(file_parse(&file, "zero-tol", "a number")?)
                .unwrap_or(DEFAULT_ZERO_TOL),
        )?,
        support_tol: check_tolerance(
            "--support-tol",
            cli.support_tol
                .or(file_parse(&file, "support-tol", "a number")?)
                .unwrap_or(DEFAULT_SUPPORT_TOL),
        )?,
    };

    let qre_smoothing = match cli
        .qre_smoothing
        .or(file_parse(&file, "qre-smoothing", "a number")?)
    {
        Some(eps) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(usage(format!(
                    "--qre-smoothing must lie strictly between 0 and 1, got {eps}"
                )));
            }
            Some(eps)
        }
        None => None,
    };

    let site_budget = cli
        .site_budget
        .or(file_parse(&file, "site-budget", "an integer")?)
        .unwrap_or_else(|| EvolveOptions::default().site_budget);
    if site_budget == 0 {
        return Err(usage("--site-budget must be at least 1"));
    }

    let sec2_n_max = cli
        .sec2_nmax
        .or(file_parse(&file, "sec2-nmax", "an integer")?)
        .unwrap_or(DEFAULT_SEC2_N_MAX);
    if sec2_n_max == 0 {
        return Err(usage("--sec2-nmax must be at least 1"));
    }
    let sec2_cap = cli
        .sec2_cap
        .or(file_parse(&file, "sec2-cap", "a number")?)
        .unwrap_or(DEFAULT_SEC2_CAP);
    if !(sec2_cap > 0.0) {
        return Err(usage(format!("--sec2-cap must be positive, got {sec2_cap}")));
    }

    let format = cli
        .format
        .or(file_enum(&file, "format")?)
        .unwrap_or(OutputFormat::Csv);
    let out = cli
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| {
            PathBuf::from(format!("{}.{}", experiment.name(), format.extension()))
        });

    Ok(RunSpec {
        experiment,
        params,
        mode,
        init,
        steps,
        grid,
        format,
        out,
        thresholds,
        qre_smoothing,
        site_budget,
        sec2_n_max,
        sec2_cap,
    })
}
