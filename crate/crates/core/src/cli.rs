//! Command-line front end: key-value config resolution, the four run modes
//! (ness / scan / dynamics / tss), and deterministic CSV/JSON serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::dynamics::{
    build_rate_matrix, evolve, log_time_grid, relaxation_time, tss_harmonic, tss_nesb, RateMatrix,
};
use crate::error::{Error, Result};
use crate::limits::{amplitude, effective_temperature_high_t, nesb_currents};
use crate::model::{BathParams, Setup, SpectralParams, SystemParams};
use crate::ness::{steady_currents_for, steady_populations};
use crate::rectification::{rectification, AsymmetryParams, ThermalBias};

pub const SCHEMA_VERSION: u32 = 1;
pub const UNITS_NOTE: &str = "energies in units of omega0, time in 1/omega0";

/// Output serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Run mode selected by the subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ness,
    Scan,
    Dynamics,
    Tss,
}

/// Exit code contract: 2 for configuration problems, 3 for numerical
/// failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        _ => 3,
    }
}

/// How the two couplings were specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSpec {
    Explicit { g1: f64, g2: f64 },
    Asymmetric { lambda: f64, gamma: f64 },
}

impl CouplingSpec {
    pub fn gammas(&self) -> (f64, f64) {
        match *self {
            CouplingSpec::Explicit { g1, g2 } => (g1, g2),
            CouplingSpec::Asymmetric { lambda, gamma } => {
                (lambda * (1.0 - gamma), lambda * (1.0 + gamma))
            }
        }
    }
}

/// How the two temperatures were specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TempSpec {
    Explicit { t1: f64, t2: f64 },
    Bias { t_m: f64, delta_t: f64 },
    Ratio { t1: f64, r: f64 },
}

impl TempSpec {
    pub fn temperatures(&self) -> (f64, f64) {
        match *self {
            TempSpec::Explicit { t1, t2 } => (t1, t2),
            TempSpec::Bias { t_m, delta_t } => (t_m + delta_t / 2.0, t_m - delta_t / 2.0),
            TempSpec::Ratio { t1, r } => (t1, r * t1),
        }
    }
}

/// Fully resolved run configuration plus the key-value map it came from
/// (defaults filled in), which is what gets embedded in output metadata.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub resolved: BTreeMap<String, String>,
    pub setup: Setup,
    pub coupling: CouplingSpec,
    pub temps: TempSpec,
    pub tol: f64,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a config source: line-oriented `key = value` with `#` comments, or
/// a JSON document produced by a previous run (whose `meta.config` object is
/// re-ingested).
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return parse_config_json(trimmed);
    }
    let mut map = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", idx + 1)))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("line {}: empty key or value", idx + 1)));
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}

fn parse_config_json(text: &str) -> Result<BTreeMap<String, String>> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad JSON config: {e}")))?;
    let obj = doc
        .pointer("/meta/config")
        .or(Some(&doc))
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Config("JSON config must contain an object".into()))?;
    let mut map = BTreeMap::new();
    for (k, v) in obj {
        let s = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            other => return Err(Error::Config(format!("config key '{k}' has bad value {other}"))),
        };
        map.insert(k.clone(), s);
    }
    Ok(map)
}

/// Applies repeatable `--set key=value` overrides on top of the file map.
pub fn apply_overrides(map: &mut BTreeMap<String, String>, sets: &[String]) -> Result<()> {
    for item in sets {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set '{item}': expected key=value")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("--set '{item}': empty key or value")));
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(())
}

fn get_f64(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Config(format!("key '{key}': '{raw}' is not a number"))),
    }
}

fn get_f64_or(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    Ok(get_f64(map, key)?.unwrap_or(default))
}

fn get_usize_or(map: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
    match map.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("key '{key}': '{raw}' is not a count"))),
    }
}

fn get_bool_or(map: &BTreeMap<String, String>, key: &str, default: bool) -> Result<bool> {
    match map.get(key).map(String::as_str) {
        None => Ok(default),
        Some("true") | Some("1") => Ok(true),
        Some("false") | Some("0") => Ok(false),
        Some(raw) => Err(Error::Config(format!("key '{key}': '{raw}' is not a boolean"))),
    }
}

const KNOWN_KEYS: &[&str] = &[
    "omega0", "chi", "eps", "s", "omega_c", "mu1", "mu2", "gamma1", "gamma2", "lambda", "gamma",
    "t1", "t2", "t_m", "delta_t", "r", "axis", "grid", "grid_start", "grid_stop", "grid_points",
    "grid_log", "t_min", "t_max", "time_points", "init_temp", "rectification",
];

impl RunConfig {
    /// Resolves a key-value map into a validated configuration; defaults fill
    /// unspecified physics keys, and the returned `resolved` map carries the
    /// final values used.
    pub fn from_map(mut map: BTreeMap<String, String>, tol: f64) -> Result<Self> {
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown config key '{key}'")));
            }
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0, 1), got {tol}")));
        }
        let omega0 = get_f64_or(&map, "omega0", 1.0)?;
        let chi = get_f64_or(&map, "chi", 0.0)?;
        let eps = get_f64_or(&map, "eps", 0.1)?;
        let s = get_f64_or(&map, "s", 1.0)?;
        let omega_c = get_f64_or(&map, "omega_c", 1000.0)?;
        let mu1 = get_f64_or(&map, "mu1", 0.0)?;
        let mu2 = get_f64_or(&map, "mu2", 0.0)?;

        let coupling = match (
            get_f64(&map, "gamma1")?,
            get_f64(&map, "gamma2")?,
            get_f64(&map, "lambda")?,
            get_f64(&map, "gamma")?,
        ) {
            (Some(g1), Some(g2), None, None) => CouplingSpec::Explicit { g1, g2 },
            (None, None, Some(lambda), Some(gamma)) => {
                AsymmetryParams::new(lambda, gamma)
                    .map_err(|e| Error::Config(e.to_string()))?;
                CouplingSpec::Asymmetric { lambda, gamma }
            }
            _ => {
                return Err(Error::Config(
                    "provide exactly one of {gamma1+gamma2, lambda+gamma}".into(),
                ))
            }
        };

        let temps = match (
            get_f64(&map, "t1")?,
            get_f64(&map, "t2")?,
            get_f64(&map, "t_m")?,
            get_f64(&map, "delta_t")?,
            get_f64(&map, "r")?,
        ) {
            (Some(t1), Some(t2), None, None, None) => TempSpec::Explicit { t1, t2 },
            (None, None, Some(t_m), Some(delta_t), None) => TempSpec::Bias { t_m, delta_t },
            (Some(t1), None, None, None, Some(r)) => {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(Error::Config(format!("r must lie in (0, 1], got {r}")));
                }
                TempSpec::Ratio { t1, r }
            }
            _ => {
                return Err(Error::Config(
                    "provide exactly one of {t1+t2, t_m+delta_t, t1+r}".into(),
                ))
            }
        };

        let (g1, g2) = coupling.gammas();
        let (t1, t2) = temps.temperatures();
        let setup = Setup::new(
            SystemParams::new(omega0, chi, eps)?,
            BathParams::with_mu(g1, t1, mu1)?,
            BathParams::with_mu(g2, t2, mu2)?,
            SpectralParams::new(s, omega_c)?,
        )?;

        for (key, value) in [
            ("omega0", omega0),
            ("chi", chi),
            ("eps", eps),
            ("s", s),
            ("omega_c", omega_c),
            ("mu1", mu1),
            ("mu2", mu2),
        ] {
            map.entry(key.to_string()).or_insert_with(|| value.to_string());
        }
        Ok(Self { resolved: map, setup, coupling, temps, tol })
    }

    fn bias(&self) -> Option<ThermalBias> {
        match self.temps {
            TempSpec::Bias { t_m, delta_t } if delta_t != 0.0 => {
                ThermalBias::new(t_m, delta_t).ok()
            }
            _ => None,
        }
    }

    fn asymmetry(&self) -> Option<AsymmetryParams> {
        match self.coupling {
            CouplingSpec::Asymmetric { lambda, gamma } => {
                AsymmetryParams::new(lambda, gamma).ok()
            }
            _ => None,
        }
    }
}

/// One output value; `Null` marks an inapplicable or failed entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Null,
}

impl Cell {
    fn float(x: f64) -> Cell {
        if x.is_finite() {
            Cell::Float(x)
        } else {
            Cell::Null
        }
    }

    fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Null, Cell::float)
    }
}

/// Serializable result of a run: metadata, column names, data rows.
#[derive(Debug, Clone)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(cfg: &RunConfig, columns: Vec<&'static str>) -> Table {
        let mut meta = BTreeMap::new();
        for (k, v) in &cfg.resolved {
            meta.insert(format!("config.{k}"), v.clone());
        }
        meta.insert("tol".into(), fmt_f64(cfg.tol));
        meta.insert("version".into(), env!("CARGO_PKG_VERSION").to_string());
        meta.insert("units".into(), UNITS_NOTE.to_string());
        for (i, w) in cfg.setup.warnings().iter().enumerate() {
            meta.insert(format!("warning.{i}"), w.clone());
        }
        Table { meta, columns, rows: Vec::new() }
    }
}

/// Renders a table as CSV: '#'-prefixed metadata lines, a header row, then
/// one comma-separated data row per entry with 17 significant digits.
pub fn render_csv(table: &Table) -> String {
    let mut out = String::new();
    for (k, v) in &table.meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    let _ = writeln!(out, "{}", table.columns.join(","));
    for row in &table.rows {
        let mut fields = Vec::with_capacity(row.len());
        for cell in row {
            fields.push(match cell {
                Cell::Float(x) => fmt_f64(*x),
                Cell::Int(i) => i.to_string(),
                Cell::Text(s) => s.replace(',', ";"),
                Cell::Null => String::new(),
            });
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// Renders a table as the single-object JSON document; `meta.config` is the
/// resolved key-value map, re-ingestable as a config file.
pub fn render_json(table: &Table) -> String {
    let mut config = serde_json::Map::new();
    let mut meta = serde_json::Map::new();
    for (k, v) in &table.meta {
        if let Some(stripped) = k.strip_prefix("config.") {
            config.insert(stripped.to_string(), Value::String(v.clone()));
        } else {
            meta.insert(k.clone(), Value::String(v.clone()));
        }
    }
    meta.insert("config".into(), Value::Object(config));
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            Value::Array(
                row.iter()
                    .map(|cell| match cell {
                        Cell::Float(x) => json!(x),
                        Cell::Int(i) => json!(i),
                        Cell::Text(s) => json!(s),
                        Cell::Null => Value::Null,
                    })
                    .collect(),
            )
        })
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "meta": Value::Object(meta),
        "columns": table.columns,
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("static document shape");
    text.push('\n');
    text
}

pub fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => render_csv(table),
        Format::Json => render_json(table),
    }
}

/// Dispatches a run.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Table> {
    match cmd {
        Command::Ness => cmd_ness(cfg),
        Command::Scan => cmd_scan(cfg),
        Command::Dynamics => cmd_dynamics(cfg),
        Command::Tss => cmd_tss(cfg),
    }
}

/// Steady-state populations plus scalar observables (in the metadata).
pub fn cmd_ness(cfg: &RunConfig) -> Result<Table> {
    let setup = &cfg.setup;
    let dist = steady_populations(setup, cfg.tol)?;
    let currents = steady_currents_for(setup, &dist)?;
    let mut table = Table::new(cfg, vec!["n", "rho", "gibbs"]);

    let (t1, t2) = cfg.temps.temperatures();
    let gibbs = if t1 == t2 {
        let weights: Vec<f64> =
            (0..=dist.n_max).map(|n| (-setup.system.level_energy(n) / t1).exp()).collect();
        let z: f64 = weights.iter().sum();
        Some(weights.into_iter().map(|w| w / z).collect::<Vec<f64>>())
    } else {
        None
    };

    for (n, &rho) in dist.rho.iter().enumerate() {
        table.rows.push(vec![
            Cell::Int(n as i64),
            Cell::float(rho),
            Cell::opt(gibbs.as_ref().map(|g| g[n])),
        ]);
    }
    table.meta.insert("mean_occupation".into(), fmt_f64(dist.mean_occupation()));
    table.meta.insert("mean_energy".into(), fmt_f64(dist.mean_energy(&setup.system)));
    table.meta.insert("particle_current".into(), fmt_f64(currents.particle));
    table.meta.insert("energy_current".into(), fmt_f64(currents.energy));
    table.meta.insert("z_tilde".into(), fmt_f64(dist.z_tilde));
    table.meta.insert("n_max".into(), dist.n_max.to_string());
    table.meta.insert("tail_bound".into(), fmt_f64(dist.tail_bound));
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Chi,
    T1,
    Gamma,
    DeltaT,
}

fn parse_axis(cfg: &RunConfig) -> Result<Axis> {
    match cfg.resolved.get("axis").map(String::as_str) {
        Some("chi") => Ok(Axis::Chi),
        Some("t1") => Ok(Axis::T1),
        Some("gamma") => Ok(Axis::Gamma),
        Some("delta_t") => Ok(Axis::DeltaT),
        Some(other) => Err(Error::Config(format!("unknown axis '{other}'"))),
        None => Err(Error::Config("scan requires an 'axis' key".into())),
    }
}

fn parse_grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    if let Some(raw) = cfg.resolved.get("grid") {
        let grid: Vec<f64> = raw
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("grid entry '{tok}' is not a number")))
            })
            .collect::<Result<_>>()?;
        if grid.is_empty() {
            return Err(Error::Config("grid must be nonempty".into()));
        }
        return Ok(grid);
    }
    let start = get_f64(&cfg.resolved, "grid_start")?
        .ok_or_else(|| Error::Config("scan requires 'grid' or 'grid_start'".into()))?;
    let stop = get_f64(&cfg.resolved, "grid_stop")?
        .ok_or_else(|| Error::Config("scan requires 'grid_stop'".into()))?;
    let points = get_usize_or(&cfg.resolved, "grid_points", 50)?;
    let log_grid = get_bool_or(&cfg.resolved, "grid_log", false)?;
    if points == 0 {
        return Err(Error::Config("grid_points must be positive".into()));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    if log_grid {
        if !(start > 0.0 && stop > start) {
            return Err(Error::Config("log grid needs 0 < grid_start < grid_stop".into()));
        }
        Ok(log_time_grid(start, stop, points))
    } else {
        let step = (stop - start) / (points - 1) as f64;
        Ok((0..points).map(|i| start + step * i as f64).collect())
    }
}

struct ScanPoint {
    setup: Setup,
    t1: f64,
    t2: f64,
    g1: f64,
    g2: f64,
    /// Rectification inputs when they apply at this point.
    rect: Option<(ThermalBias, AsymmetryParams)>,
}

fn scan_point(cfg: &RunConfig, axis: Axis, value: f64) -> Result<ScanPoint> {
    let base = &cfg.setup;
    let (g1, g2) = cfg.coupling.gammas();
    let (t1, t2) = cfg.temps.temperatures();
    let want_rect = get_bool_or(&cfg.resolved, "rectification", false)?;
    let default_rect = || match (cfg.bias(), cfg.asymmetry()) {
        (Some(b), Some(p)) if want_rect => Some((b, p)),
        _ => None,
    };
    match axis {
        Axis::Chi => Ok(ScanPoint {
            setup: base.with_chi(value)?,
            t1,
            t2,
            g1,
            g2,
            rect: default_rect(),
        }),
        Axis::T1 => {
            let t2 = match cfg.temps {
                TempSpec::Ratio { r, .. } => r * value,
                _ => t2,
            };
            Ok(ScanPoint {
                setup: base.with_couplings_and_temps(g1, value, g2, t2)?,
                t1: value,
                t2,
                g1,
                g2,
                rect: None,
            })
        }
        Axis::Gamma => {
            let lambda = match cfg.coupling {
                CouplingSpec::Asymmetric { lambda, .. } => lambda,
                CouplingSpec::Explicit { .. } => {
                    return Err(Error::Config(
                        "gamma axis requires the lambda+gamma coupling form".into(),
                    ))
                }
            };
            let p = AsymmetryParams::new(lambda, value)?;
            let (g1, g2) = (lambda * (1.0 - value), lambda * (1.0 + value));
            let bias = cfg
                .bias()
                .ok_or_else(|| Error::Config("gamma axis requires t_m+delta_t".into()))?;
            Ok(ScanPoint {
                setup: base.with_couplings_and_temps(g1, t1, g2, t2)?,
                t1,
                t2,
                g1,
                g2,
                rect: Some((bias, p)),
            })
        }
        Axis::DeltaT => {
            let t_m = match cfg.temps {
                TempSpec::Bias { t_m, .. } => t_m,
                _ => (t1 + t2) / 2.0,
            };
            let bias = ThermalBias::new(t_m, value)?;
            let (t1, t2) = bias.forward();
            Ok(ScanPoint {
                setup: base.with_couplings_and_temps(g1, t1, g2, t2)?,
                t1,
                t2,
                g1,
                g2,
                rect: (value != 0.0)
                    .then(|| cfg.asymmetry().map(|p| (bias, p)))
                    .flatten(),
            })
        }
    }
}

const SCAN_COLUMNS: &[&str] = &[
    "axis_value",
    "t1",
    "t2",
    "gamma1",
    "gamma2",
    "i",
    "j",
    "i_over_dt",
    "j_over_dt_w0",
    "j_over_i_w0",
    "i_nesb",
    "j_nesb",
    "amp_a",
    "t1_over_w0",
    "t_tilde_over_chi",
    "r_i",
    "r_j",
    "note",
];

fn scan_row(cfg: &RunConfig, axis: Axis, value: f64) -> Result<Vec<Cell>> {
    let point = scan_point(cfg, axis, value)?;
    let setup = &point.setup;
    let dist = steady_populations(setup, cfg.tol)?;
    let currents = steady_currents_for(setup, &dist)?;
    let (i, j) = (currents.particle, currents.energy);
    let w0 = setup.system.omega0 + setup.system.chi;
    let dt = point.t1 - point.t2;
    let nesb = nesb_currents(setup)?;
    let chi = setup.system.chi;
    let t_eff = effective_temperature_high_t(setup);

    let rect = match point.rect {
        Some((bias, p)) => {
            let r = rectification(setup, &bias, &p, cfg.tol)?;
            (Some(r.r_i), Some(r.r_j))
        }
        None => (None, None),
    };

    Ok(vec![
        Cell::float(value),
        Cell::float(point.t1),
        Cell::float(point.t2),
        Cell::float(point.g1),
        Cell::float(point.g2),
        Cell::float(i),
        Cell::float(j),
        Cell::opt((dt != 0.0).then(|| i / dt)),
        Cell::opt((dt != 0.0).then(|| j / (dt * w0))),
        Cell::opt((i != 0.0).then(|| j / (i * w0))),
        Cell::float(nesb.current_particle),
        Cell::float(nesb.current_energy),
        Cell::float(amplitude(setup)),
        Cell::float(point.t1 / w0),
        Cell::opt((chi > 0.0).then(|| t_eff / chi)),
        Cell::opt(rect.0),
        Cell::opt(rect.1),
        Cell::Null,
    ])
}

/// Parameter sweep along one axis; failed grid points become null rows with
/// the failure reason in the final column, and the run continues.
pub fn cmd_scan(cfg: &RunConfig) -> Result<Table> {
    let axis = parse_axis(cfg)?;
    let grid = parse_grid(cfg)?;
    // fail fast on structural config errors instead of emitting a table of
    // identical per-row failures
    scan_point(cfg, axis, grid[0])?;

    let mut table = Table::new(cfg, SCAN_COLUMNS.to_vec());
    table.meta.insert("axis".into(), format!("{axis:?}").to_lowercase());
    table.rows = grid
        .par_iter()
        .map(|&value| match scan_row(cfg, axis, value) {
            Ok(row) => row,
            Err(err) => {
                let mut row = vec![Cell::Null; SCAN_COLUMNS.len()];
                row[0] = Cell::float(value);
                row[SCAN_COLUMNS.len() - 1] = Cell::Text(err.to_string());
                row
            }
        })
        .collect();
    Ok(table)
}

/// Grows the truncation until the generator accepts it.
fn admissible_matrix(setup: &Setup, tol: f64) -> Result<(RateMatrix, usize)> {
    let mut n_max = steady_populations(setup, tol)?.n_max.max(2);
    for _ in 0..48 {
        match build_rate_matrix(setup, n_max) {
            Ok(m) => return Ok((m, n_max)),
            Err(Error::InadmissibleTruncation { .. }) => n_max = n_max * 2 + 1,
            Err(other) => return Err(other),
        }
    }
    Err(Error::TruncationOverflow { cap: n_max })
}

const DYNAMICS_COLUMNS: &[&str] =
    &["t", "occupation", "energy", "i1", "i2", "j1", "j2", "pre_markov"];

/// Transient relaxation from a vacuum (or Gibbs) start on a log-spaced time
/// grid; the linear system routes to its closed-form solution.
pub fn cmd_dynamics(cfg: &RunConfig) -> Result<Table> {
    let setup = &cfg.setup;
    let t_min = get_f64_or(&cfg.resolved, "t_min", 1e-2)?;
    let t_max = get_f64_or(&cfg.resolved, "t_max", 1e3)?;
    let points = get_usize_or(&cfg.resolved, "time_points", 200)?;
    if !(t_min > 0.0 && t_max > t_min && points >= 2) {
        return Err(Error::Config("need 0 < t_min < t_max and time_points >= 2".into()));
    }
    let times = log_time_grid(t_min, t_max, points);
    let init_temp = get_f64(&cfg.resolved, "init_temp")?;
    let markov_floor = 1.0 / setup.spectral.omega_c;

    let mut table = Table::new(cfg, DYNAMICS_COLUMNS.to_vec());

    if setup.system.chi == 0.0 {
        let h = tss_harmonic(setup)?;
        let n0 = match init_temp {
            Some(t) => BathParams::new(1.0, t)?.bose(setup.system.omega0)?,
            None => 0.0,
        };
        let eps2 = setup.system.eps * setup.system.eps;
        let density = setup.spectral.density(setup.system.omega0);
        for &t in &times {
            let occ = h.occupation_at(t, n0);
            let mut currents = [0.0; 2];
            for (k, bath) in setup.baths().iter().enumerate() {
                currents[k] =
                    eps2 * bath.gamma * density * (bath.bose(setup.system.omega0)? - occ);
            }
            table.rows.push(vec![
                Cell::float(t),
                Cell::float(occ),
                Cell::float(setup.system.omega0 * occ),
                Cell::float(currents[0]),
                Cell::float(currents[1]),
                Cell::float(setup.system.omega0 * currents[0]),
                Cell::float(setup.system.omega0 * currents[1]),
                Cell::Int((t < markov_floor) as i64),
            ]);
        }
        table.meta.insert("t_ss".into(), fmt_f64(h.t_ss));
        table.meta.insert("closed_form".into(), "harmonic".into());
        return Ok(table);
    }

    let (matrix, n_max) = admissible_matrix(setup, cfg.tol)?;
    let size = matrix.size();
    let rho0 = match init_temp {
        Some(t) => {
            let weights: Vec<f64> =
                (0..size).map(|n| (-setup.system.level_energy(n) / t).exp()).collect();
            let z: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / z).collect()
        }
        None => {
            let mut v = vec![0.0; size];
            v[0] = 1.0;
            v
        }
    };
    let series = evolve(&matrix, &rho0, &times, setup)?;
    for (k, &t) in series.times.iter().enumerate() {
        table.rows.push(vec![
            Cell::float(t),
            Cell::float(series.occupation[k]),
            Cell::float(series.energy[k]),
            Cell::float(series.particle_current[0][k]),
            Cell::float(series.particle_current[1][k]),
            Cell::float(series.energy_current[0][k]),
            Cell::float(series.energy_current[1][k]),
            Cell::Int((t < series.markov_time_floor) as i64),
        ]);
    }
    let tss = relaxation_time(&matrix, setup)?;
    table.meta.insert("n_max".into(), n_max.to_string());
    table.meta.insert("t_ss".into(), fmt_f64(tss.t_ss));
    table.meta.insert("lambda1".into(), fmt_f64(tss.lambda1));
    Ok(table)
}

const TSS_COLUMNS: &[&str] =
    &["chi", "lambda1", "t_ss", "t_ss_eps2", "t_ss_nesb_asymptote", "t_ss_harmonic", "note"];

/// Relaxation time versus interaction strength, with the analytic two-level
/// asymptote and the linear-system reference per row.
pub fn cmd_tss(cfg: &RunConfig) -> Result<Table> {
    if cfg.resolved.get("axis").map(String::as_str).unwrap_or("chi") != "chi" {
        return Err(Error::Config("tss sweeps the chi axis only".into()));
    }
    let grid = parse_grid(cfg)?;
    if grid.iter().any(|&chi| chi <= 0.0) {
        return Err(Error::Config(
            "tss needs chi > 0; the chi = 0 value is the harmonic reference column".into(),
        ));
    }
    let harmonic = tss_harmonic(&cfg.setup.with_chi(0.0)?)?;
    let eps2 = cfg.setup.system.eps * cfg.setup.system.eps;

    let mut table = Table::new(cfg, TSS_COLUMNS.to_vec());
    table.rows = grid
        .par_iter()
        .map(|&chi| -> Vec<Cell> {
            let run = || -> Result<Vec<Cell>> {
                let setup = cfg.setup.with_chi(chi)?;
                let (matrix, _) = admissible_matrix(&setup, cfg.tol)?;
                let tss = relaxation_time(&matrix, &setup)?;
                let nesb = tss_nesb(&setup)?;
                Ok(vec![
                    Cell::float(chi),
                    Cell::float(tss.lambda1),
                    Cell::float(tss.t_ss),
                    Cell::float(tss.t_ss * eps2),
                    Cell::float(nesb.t_ss_asymptote),
                    Cell::float(harmonic.t_ss),
                    Cell::Null,
                ])
            };
            run().unwrap_or_else(|err| {
                let mut row = vec![Cell::Null; TSS_COLUMNS.len()];
                row[0] = Cell::float(chi);
                row[TSS_COLUMNS.len() - 1] = Cell::Text(err.to_string());
                row
            })
        })
        .collect();
    Ok(table)
}
