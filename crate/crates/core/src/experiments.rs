//! Experiment drivers: turn a validated `RunSpec` into data files plus a
//! machine-readable run summary. Every experiment writes one or more files
//! in the requested format and returns the summary as a JSON value; the
//! binary prints it to stdout.
//!
//! File layouts are part of the CLI contract and are pinned here:
//!
//! * probability and categories: `walk,t,m,n,p` (one row per occupied site),
//! * per-step series: `walk,t,value` with the walk column carrying labels
//!   like `sdc:sp` or `qre:d`,
//! * lyapunov-sweep: `omega,lambda,l_loc,divergent`,
//! * analytic-lloc: `omega,l_loc_raw,l_loc_normalized`.
//!
//! CSV always starts with the header row; floats use the shortest
//! round-trippable decimal form with `inf`/`-inf`/`nan` spelled literally.
//! JSON data files hold `{"header": [...], "rows": [[...]]}` with non-finite
//! floats as those same strings. The `svg` format writes the CSV data file
//! and a static plot next to it. Identical runs produce byte-identical
//! files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;

use crate::angle::Angle;
use crate::coin::{CoinMode, CoinParams};
use crate::config::{Experiment, OutputFormat, RunSpec, WalkMode};
use crate::entropy::{entropy_series, EntropyError, QreOptions};
use crate::localization::{analytic_lloc_curve, lloc_sweep, LocalizationError};
use crate::observables::{
    probability_field, return_probability, support_count, TimeSeries,
};
use crate::plot::{self, Series};
use crate::walk::{evolve_final, step, Wavefunction, WalkError};

/// Per-walk probability rows must sum to 1 within this tolerance.
pub const PROBABILITY_SUM_TOL: f64 = 1e-9;

/// A failure while executing an experiment. `exit_code` maps each variant to
/// the process exit status: I/O failures exit 3, everything else 2.
#[derive(Debug, Error)]
pub enum RunError {
    /// An internal consistency check on produced data failed.
    #[error("{0}")]
    Validation(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Io { .. } => 3,
            _ => 2,
        }
    }
}

/// Render a float for CSV: shortest round-trippable form, with non-finite
/// values spelled `inf`, `-inf`, `nan`.
fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// A float as a JSON value: a number when finite, else the literal strings
/// used in CSV (JSON has no non-finite numbers).
fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(fmt_float(v))
    }
}

/// One table cell; the writers render it per format.
enum Cell {
    Text(String),
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Bool(v) => v.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Int(v) => json!(v),
            Cell::UInt(v) => json!(v),
            Cell::Float(v) => json_f64(*v),
            Cell::Bool(v) => json!(v),
        }
    }
}

struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            let fields: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let rows: Vec<Value> =
            self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let mut text =
            serde_json::to_string(&json!({ "header": self.header, "rows": rows })).expect("plain data");
        text.push('\n');
        text
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Write the table at `out` in the requested format and record the paths
/// written. For `svg` the data goes to the sibling `.csv` and the plot
/// (rendered only then) to the `.svg` path.
fn emit(
    out: &Path,
    format: OutputFormat,
    table: &Table,
    render_plot: impl FnOnce() -> String,
    outputs: &mut Vec<PathBuf>,
) -> Result<usize, RunError> {
    match format {
        OutputFormat::Csv => {
            write_text(out, &table.to_csv())?;
            outputs.push(out.to_path_buf());
        }
        OutputFormat::Json => {
            write_text(out, &table.to_json())?;
            outputs.push(out.to_path_buf());
        }
        OutputFormat::Svg => {
            let data = out.with_extension("csv");
            let svg = out.with_extension("svg");
            write_text(&data, &table.to_csv())?;
            write_text(&svg, &render_plot())?;
            outputs.push(data);
            outputs.push(svg);
        }
    }
    Ok(table.rows.len())
}

fn walk_name(mode: CoinMode) -> &'static str {
    match mode {
        CoinMode::Sdc => "sdc",
        CoinMode::Sic => "sic",
    }
}

/// Final-step probability rows for every selected walk, plus heat-map cells
/// per walk. Each walk's rows are checked to sum to 1.
fn probability_table(
    params: &CoinParams,
    mode: WalkMode,
    spec: &RunSpec,
) -> Result<(Table, Vec<(String, Vec<(i64, i64, f64)>)>), RunError> {
    let mut rows = Vec::new();
    let mut panels = Vec::new();
    for coin_mode in mode.coin_modes() {
        let walk_params = params.with_mode(coin_mode);
        let psi = evolve_final(&spec.init, &walk_params, spec.steps, &spec.evolve_options())?;
        let field = probability_field(&psi);
        let total = field.total();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(RunError::Validation(format!(
                "{} probability rows sum to {total}, expected 1 within {PROBABILITY_SUM_TOL:e}",
                walk_name(coin_mode)
            )));
        }
        let mut cells = Vec::with_capacity(field.len());
        for (&(m, n), &p) in field.iter() {
            rows.push(vec![
                Cell::Text(walk_name(coin_mode).to_string()),
                Cell::UInt(spec.steps),
                Cell::Int(m),
                Cell::Int(n),
                Cell::Float(p),
            ]);
            cells.push((m, n, p));
        }
        panels.push((walk_name(coin_mode).to_string(), cells));
    }
    Ok((Table { header: &["walk", "t", "m", "n", "p"], rows }, panels))
}

/// Evolve each selected walk step by step and record `value(psi)` at every
/// t = 0..=steps. Streaming: only the current state is kept.
fn per_step_series(
    spec: &RunSpec,
    value: impl Fn(&Wavefunction) -> f64,
) -> Result<Vec<TimeSeries>, RunError> {
    let mut all = Vec::new();
    for coin_mode in spec.mode.coin_modes() {
        let params = spec.params.with_mode(coin_mode);
        let mut series = TimeSeries::new(walk_name(coin_mode));
        let mut psi = Wavefunction::from_initial(&spec.init);
        series.push(0, value(&psi));
        for t in 1..=spec.steps {
            psi = step(&psi, &params);
            if psi.site_count() > spec.site_budget {
                return Err(WalkError::SiteBudgetExceeded {
                    step: t,
                    sites: psi.site_count(),
                    budget: spec.site_budget,
                }
                .into());
            }
            series.push(t, value(&psi));
        }
        all.push(series);
    }
    Ok(all)
}

/// `walk,t,value` rows from the given series, in series order.
fn series_table(series: &[&TimeSeries]) -> Table {
    let mut rows = Vec::new();
    for s in series {
        for &(t, v) in s.points() {
            rows.push(vec![Cell::Text(s.label.clone()), Cell::UInt(t), Cell::Float(v)]);
        }
    }
    Table { header: &["walk", "t", "value"], rows }
}

fn series_plot(title: &str, y_label: &'static str, series: &[&TimeSeries]) -> String {
    let chart: Vec<Series> = series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s.points().iter().map(|&(t, v)| (t as f64, v)).collect(),
        })
        .collect();
    plot::line_chart(title, "t", y_label, &chart)
}

/// Output path for category j: the stem gains a `_j<j>` suffix.
fn categorized_path(out: &Path, j: u64) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("categories");
    let name = match out.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}_j{j}.{ext}"),
        None => format!("{stem}_j{j}"),
    };
    out.with_file_name(name)
}

fn angle_json(a: &Angle) -> Value {
    json!({
        "radians": a.radians(),
        "pi": a.pi_rational().map(|(p, q)| json!([p, q])).unwrap_or(Value::Null),
    })
}

/// Largest finite-valued point of an (x, y) sequence, as `{"omega", key}`.
fn peak_json(points: impl Iterator<Item = (f64, f64)>, key: &str) -> Value {
    let mut best: Option<(f64, f64)> = None;
    for (x, y) in points {
        if y.is_finite() && best.map_or(true, |(_, by)| y > by) {
            best = Some((x, y));
        }
    }
    match best {
        Some((x, y)) => json!({ "omega": x, key: y }),
        None => Value::Null,
    }
}

/// Execute the experiment described by `spec`, writing its output files and
/// returning the run summary.
pub fn run(spec: &RunSpec) -> Result<Value, RunError> {
    let start = Instant::now();
    let mut outputs: Vec<PathBuf> = Vec::new();

    let qre_options = QreOptions {
        zero_tol: spec.thresholds.zero_tol,
        support_tol: spec.thresholds.support_tol,
        smoothing: spec.qre_smoothing,
    };

    let (rows_written, extras) = match spec.experiment {
        Experiment::Probability => {
            let (table, panels) = probability_table(&spec.params, spec.mode, spec)?;
            let title = format!("probability, t = {}", spec.steps);
            let n = emit(
                &spec.out,
                spec.format,
                &table,
                || plot::heatmap_panels(&title, &panels),
                &mut outputs,
            )?;
            (n, Value::Null)
        }
        Experiment::Support => {
            let threshold = spec.thresholds.support_threshold;
            let series = per_step_series(spec, |psi| {
                support_count(&probability_field(psi), threshold) as f64
            })?;
            let refs: Vec<&TimeSeries> = series.iter().collect();
            let table = series_table(&refs);
            let n = emit(
                &spec.out,
                spec.format,
                &table,
                || series_plot("support", "occupied sites", &refs),
                &mut outputs,
            )?;
            (n, Value::Null)
        }
        Experiment::ReturnProb => {
            let origin = spec.init.origin;
            let series =
                per_step_series(spec, |psi| return_probability(&probability_field(psi), origin))?;
            let refs: Vec<&TimeSeries> = series.iter().collect();
            let table = series_table(&refs);
            let n = emit(
                &spec.out,
                spec.format,
                &table,
                || series_plot("return probability", "P(origin)", &refs),
                &mut outputs,
            )?;
            (n, Value::Null)
        }
        Experiment::Shannon => {
            let es = entropy_series(
                &spec.params,
                &spec.init,
                spec.steps,
                &qre_options,
                &spec.evolve_options(),
            )?;
            let refs: Vec<&TimeSeries> = match spec.mode {
                WalkMode::Sdc => vec![&es.sp_sdc, &es.sc_sdc],
                WalkMode::Sic => vec![&es.sp_sic, &es.sc_sic],
                WalkMode::Both => vec![&es.sp_sdc, &es.sc_sdc, &es.sp_sic, &es.sc_sic],
            };
            let table = series_table(&refs);
            let n = emit(
                &spec.out,
                spec.format,
                &table,
                || series_plot("Shannon entropies", "entropy (nats)", &refs),
                &mut outputs,
            )?;
            (n, Value::Null)
        }
        Experiment::Entanglement => {
            let es = entropy_series(
                &spec.params,
                &spec.init,
                spec.steps,
                &qre_options,
                &spec.evolve_options(),
            )?;
            let refs: Vec<&TimeSeries> = match spec.mode {
                WalkMode::Sdc => vec![&es.ent_sdc],
                WalkMode::Sic => vec![&es.ent_sic],
                WalkMode::Both => vec![&es.ent_sdc, &es.ent_sic],
            };
            let table = series_table(&refs);
            let n = emit(
                &spec.out,
                spec.format,
                &table,
                || series_plot("entanglement entropy", "E (nats)", &refs),
                &mut outputs,
            )?;
            (n, Value::Null)
        }
        Experiment::Qre => {
            let es = entropy_series(
                &spec.params,
                &spec.init,
                spec.steps,
                &qre_options,
                &spec.evolve_options(),
            )?;
            let refs: Vec<&TimeSeries> = vec![&es.qre_d, &es.qre_v];
            let table = series_table(&refs);
            let n = emit(
                &spec.out,
                spec.format,
                &table,
                || series_plot("relative entropy", "value (nats)", &refs),
                &mut outputs,
            )?;
            let extras = json!({
                "support_violations": es.support_violations,
                "zero_variance_events": es.zero_variance_events,
            });
            (n, extras)
        }
        Experiment::LyapunovSweep => {
            let grid = spec.grid.expect("sweep grid is validated at parse time");
            let coin_mode = match spec.mode {
                WalkMode::Sdc => CoinMode::Sdc,
                WalkMode::Sic => CoinMode::Sic,
                WalkMode::Both => unreachable!("rejected at parse time"),
            };
            let params = spec.params.with_mode(coin_mode);
            let results =
                lloc_sweep(&params, &grid.points(), spec.steps, spec.thresholds.pole_tol);
            let rows = results
                .iter()
                .map(|r| {
                    vec![
                        Cell::Float(r.omega),
                        Cell::Float(r.lambda),
                        Cell::Float(r.l_loc),
                        Cell::Bool(r.divergent),
                    ]
                })
                .collect();
            let table = Table { header: &["omega", "lambda", "l_loc", "divergent"], rows };
            let n = emit(
                &spec.out,
                spec.format,
                &table,
                || {
                    let series = vec![Series {
                        label: "l_loc".to_string(),
                        points: results.iter().map(|r| (r.omega, r.l_loc)).collect(),
                    }];
                    plot::line_chart("localization length", "omega", "l_loc", &series)
                },
                &mut outputs,
            )?;
            let extras = json!({
                "divergent_points": results.iter().filter(|r| r.divergent).count(),
                "peak": peak_json(
                    results.iter().filter(|r| !r.divergent).map(|r| (r.omega, r.l_loc)),
                    "l_loc",
                ),
            });
            (n, extras)
        }
        Experiment::AnalyticLloc => {
            let grid = spec.grid.expect("sweep grid is validated at parse time");
            let curve =
                analytic_lloc_curve(&spec.params, &grid.points(), spec.sec2_n_max, spec.sec2_cap);
            let rows = curve
                .iter()
                .map(|p| {
                    vec![Cell::Float(p.omega), Cell::Float(p.raw), Cell::Float(p.normalized)]
                })
                .collect();
            let table =
                Table { header: &["omega", "l_loc_raw", "l_loc_normalized"], rows };
            let n = emit(
                &spec.out,
                spec.format,
                &table,
                || {
                    let series = vec![Series {
                        label: "normalized".to_string(),
                        points: curve.iter().map(|p| (p.omega, p.normalized)).collect(),
                    }];
                    plot::line_chart("analytic localization length", "omega", "l_loc", &series)
                },
                &mut outputs,
            )?;
            let extras =
                json!({ "peak": peak_json(curve.iter().map(|p| (p.omega, p.raw)), "raw") });
            (n, extras)
        }
        Experiment::Categories => {
            let mut total_rows = 0usize;
            let mut categories = Vec::new();
            for j in 1..=10u64 {
                let theta =
                    Angle::pi_frac(10 + j as i64, 30).expect("denominator is nonzero");
                let params_j =
                    CoinParams::new(theta, theta, spec.params.phi, spec.params.mode);
                let (table, panels) = probability_table(&params_j, spec.mode, spec)?;
                let path_j = categorized_path(&spec.out, j);
                let title = format!("category j = {j}, theta = {}pi/30", 10 + j);
                total_rows += emit(
                    &path_j,
                    spec.format,
                    &table,
                    || plot::heatmap_panels(&title, &panels),
                    &mut outputs,
                )?;
                categories.push(json!({ "j": j, "theta_pi": [10 + j, 30] }));
            }
            (total_rows, json!({ "categories": categories }))
        }
    };

    let spinor: Vec<Value> =
        spec.init.spinor.iter().map(|a| json!([a.re, a.im])).collect();
    let grid = match &spec.grid {
        Some(g) => json!({ "min": g.min, "max": g.max, "step": g.step, "points": g.len() }),
        None => Value::Null,
    };
    let outputs: Vec<String> =
        outputs.iter().map(|p| p.display().to_string()).collect();

    Ok(json!({
        "experiment": spec.experiment.name(),
        "mode": spec.mode.name(),
        "params": {
            "theta1": angle_json(&spec.params.theta1),
            "theta2": angle_json(&spec.params.theta2),
            "phi": angle_json(&spec.params.phi),
        },
        "init": { "origin": [spec.init.origin.0, spec.init.origin.1], "spinor": spinor },
        "steps": spec.steps,
        "grid": grid,
        "format": spec.format.name(),
        "out": spec.out.display().to_string(),
        "thresholds": {
            "support_threshold": spec.thresholds.support_threshold,
            "pole_tol": spec.thresholds.pole_tol,
            "zero_tol": spec.thresholds.zero_tol,
            "support_tol": spec.thresholds.support_tol,
        },
        "qre_smoothing": spec.qre_smoothing.map(|v| json!(v)).unwrap_or(Value::Null),
        "site_budget": spec.site_budget,
        "sec2": { "n_max": spec.sec2_n_max, "cap": spec.sec2_cap },
        "outputs": outputs,
        "rows_written": rows_written,
        "wall_ms": start.elapsed().as_secs_f64() * 1e3,
        "extras": extras,
    }))
}
