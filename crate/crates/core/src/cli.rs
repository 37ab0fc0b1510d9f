//! Run configuration, artifact export and the state catalog listing behind
//! the `phasebath` binary.
//!
//! Configurations are plain `key = value` text, one pair per line, `#`
//! starting a comment:
//!
//! ```text
//! state = photon-added-thermal
//! mbar = 1
//! gamma = 0.5
//! nbar = 2
//! times = 0, 0.5, 1
//! grid = -6:6:61
//! outputs = p-grid, moments
//! ```

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::evolution::{evolve_p_closed_form, evolved_moments, mandel_q, sample_on_grid, MomentSet};
use crate::lindblad::{husimi_grid, integrate, moments_from_rho, LindbladSettings, Trajectory, STABILITY_BOUND};
use crate::phase_core::{BathParams, ComplexAmplitude};
use crate::quasiprob::{p_to_q_grid, wigner_from_characteristic, GridMeta, GridQuantity, GridSpec, PhaseSpaceGrid};
use crate::states::{default_cutoff, fock_density, initial_moments, StateSpec};

pub const DEFAULT_COMPARE_TOLERANCE: f64 = 1e-5;
const DEFAULT_ORACLE_CUTOFF: usize = 60;
const DEFAULT_ORACLE_STEP: f64 = 1e-3;
const MIN_GRID_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Artifact {
    PGrid,
    QGrid,
    WGrid,
    Moments,
    MandelQ,
    Variances,
    OracleCompare,
}

impl Artifact {
    pub const ALL: [Artifact; 7] = [
        Artifact::PGrid,
        Artifact::QGrid,
        Artifact::WGrid,
        Artifact::Moments,
        Artifact::MandelQ,
        Artifact::Variances,
        Artifact::OracleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Artifact::PGrid => "p-grid",
            Artifact::QGrid => "q-grid",
            Artifact::WGrid => "w-grid",
            Artifact::Moments => "moments",
            Artifact::MandelQ => "mandel-q",
            Artifact::Variances => "variances",
            Artifact::OracleCompare => "oracle-compare",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Artifact::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| config_err("outputs", format!("unknown artifact `{s}`")))
    }

    fn needs_oracle(self) -> bool {
        matches!(self, Artifact::WGrid | Artifact::OracleCompare)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OracleOverrides {
    pub cutoff: Option<usize>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub state: StateSpec,
    pub bath: BathParams,
    pub times: Vec<f64>,
    pub grid: GridSpec,
    pub outputs: Vec<Artifact>,
    pub oracle: OracleOverrides,
    pub compare_tolerance: f64,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
}

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), message: message.into() }
}

/// Splits `key = value` lines, rejecting duplicates.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config_err(&format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")));
        };
        let key = k.trim().replace('-', "_");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(config_err(&key, "given more than once"));
        }
    }
    Ok(map)
}

fn parse_f64(field: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| config_err(field, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(config_err(field, "must be finite"));
    }
    Ok(x)
}

fn parse_usize(field: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| config_err(field, format!("`{v}` is not a nonnegative integer")))
}

/// Reads the state keys (`state`, `beta_re`, `beta_im`, `mbar`, `squeeze`,
/// `nbar_eff`) out of `map`, leaving the rest untouched.
pub fn take_state(map: &mut BTreeMap<String, String>) -> Result<StateSpec> {
    let family = map.remove("state").ok_or_else(|| config_err("state", "missing"))?;
    let mut num = |key: &str, default: Option<f64>| -> Result<f64> {
        match map.remove(key) {
            Some(v) => parse_f64(key, &v),
            None => default.ok_or_else(|| config_err(key, format!("required for {family}"))),
        }
    };
    let spec = match family.as_str() {
        "coherent" | "photon-added-coherent" | "squeezed-coherent" | "displaced-thermal" => {
            let beta = ComplexAmplitude { re: num("beta_re", Some(0.0))?, im: num("beta_im", Some(0.0))? };
            match family.as_str() {
                "coherent" => StateSpec::Coherent { beta },
                "photon-added-coherent" => StateSpec::PhotonAddedCoherent { beta },
                "squeezed-coherent" => StateSpec::SqueezedCoherent { beta, s: num("squeeze", None)? },
                _ => StateSpec::DisplacedThermal { beta, nbar_eff: num("nbar_eff", None)? },
            }
        }
        "thermal" => StateSpec::Thermal { mbar: num("mbar", None)? },
        "photon-added-thermal" => StateSpec::PhotonAddedThermal { mbar: num("mbar", None)? },
        other => return Err(config_err("state", format!("unknown family `{other}`"))),
    };
    for key in ["beta_re", "beta_im", "mbar", "squeeze", "nbar_eff"] {
        if map.contains_key(key) {
            return Err(config_err(key, format!("not a parameter of {family}")));
        }
    }
    spec.validate().map_err(|e| config_err("state", e.to_string()))?;
    Ok(spec)
}

/// Key-value form of a state, accepted back by [`take_state`].
pub fn state_to_text(spec: &StateSpec) -> String {
    let mut s = format!("state = {}\n", spec.family_name());
    let beta = |s: &mut String, b: &ComplexAmplitude| s.push_str(&format!("beta_re = {}\nbeta_im = {}\n", b.re, b.im));
    match spec {
        StateSpec::Coherent { beta: b } | StateSpec::PhotonAddedCoherent { beta: b } => beta(&mut s, b),
        StateSpec::Thermal { mbar } | StateSpec::PhotonAddedThermal { mbar } => s.push_str(&format!("mbar = {mbar}\n")),
        StateSpec::SqueezedCoherent { beta: b, s: sq } => {
            beta(&mut s, b);
            s.push_str(&format!("squeeze = {sq}\n"));
        }
        StateSpec::DisplacedThermal { beta: b, nbar_eff } => {
            beta(&mut s, b);
            s.push_str(&format!("nbar_eff = {nbar_eff}\n"));
        }
    }
    s
}

/// `a, b, c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_times(v: &str) -> Result<Vec<f64>> {
    if let Some((a, rest)) = v.split_once(':') {
        let (b, n) = rest.split_once(':').ok_or_else(|| config_err("times", "range form is start:stop:count"))?;
        let (a, b) = (parse_f64("times", a.trim())?, parse_f64("times", b.trim())?);
        let n = parse_usize("times", n.trim())?;
        return match n {
            0 => Err(config_err("times", "count must be positive")),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()),
        };
    }
    v.split(',').map(|t| parse_f64("times", t.trim())).collect()
}

/// `min:max:n` for both axes, or `xmin:xmax:nx,ymin:ymax:ny`.
pub fn parse_grid(v: &str) -> Result<GridSpec> {
    let axis = |s: &str| -> Result<(f64, f64, usize)> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(config_err("grid", format!("axis `{s}` is not min:max:n")));
        }
        Ok((parse_f64("grid", parts[0])?, parse_f64("grid", parts[1])?, parse_usize("grid", parts[2])?))
    };
    let (x, y) = match v.split_once(',') {
        Some((a, b)) => (axis(a)?, axis(b)?),
        None => {
            let a = axis(v)?;
            (a, a)
        }
    };
    Ok(GridSpec { x_min: x.0, x_max: x.1, nx: x.2, y_min: y.0, y_max: y.1, ny: y.2 })
}

fn grid_to_text(g: &GridSpec) -> String {
    format!("{}:{}:{},{}:{}:{}", g.x_min, g.x_max, g.nx, g.y_min, g.y_max, g.ny)
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(parse_pairs(text)?)
    }

    pub fn from_pairs(mut map: BTreeMap<String, String>) -> Result<Self> {
        let state = take_state(&mut map)?;
        let mut take = |k: &str| map.remove(k);
        let gamma = parse_f64("gamma", &take("gamma").ok_or_else(|| config_err("gamma", "missing"))?)?;
        let nbar = take("nbar").map(|v| parse_f64("nbar", &v)).transpose()?.unwrap_or(0.0);
        let bath = BathParams::new(gamma, nbar).map_err(|e| config_err("gamma/nbar", e.to_string()))?;
        let times = parse_times(&take("times").unwrap_or_else(|| "0".into()))?;
        let grid = take("grid").map(|v| parse_grid(&v)).transpose()?.unwrap_or_default();
        let mut outputs = match take("outputs") {
            Some(v) => v.split(',').map(|s| Artifact::parse(s.trim())).collect::<Result<Vec<_>>>()?,
            None => vec![Artifact::PGrid, Artifact::Moments],
        };
        outputs.sort();
        outputs.dedup();
        let oracle = OracleOverrides {
            cutoff: take("oracle_cutoff").map(|v| parse_usize("oracle_cutoff", &v)).transpose()?,
            step: take("oracle_step").map(|v| parse_f64("oracle_step", &v)).transpose()?,
        };
        let compare_tolerance = take("compare_tolerance")
            .map(|v| parse_f64("compare_tolerance", &v))
            .transpose()?
            .unwrap_or(DEFAULT_COMPARE_TOLERANCE);
        let output_dir = PathBuf::from(take("out").unwrap_or_else(|| "phasebath-out".into()));
        let format = match take("format").as_deref() {
            None | Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(other) => return Err(config_err("format", format!("`{other}` is not csv or json"))),
        };
        if let Some(key) = map.keys().next() {
            return Err(config_err(key, "unknown key"));
        }
        let cfg = RunConfig { state, bath, times, grid, outputs, oracle, compare_tolerance, output_dir, format };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Key-value text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = state_to_text(&self.state);
        s.push_str(&format!("gamma = {}\nnbar = {}\n", self.bath.gamma, self.bath.nbar));
        let times: Vec<String> = self.times.iter().map(|t| t.to_string()).collect();
        s.push_str(&format!("times = {}\n", times.join(", ")));
        s.push_str(&format!("grid = {}\n", grid_to_text(&self.grid)));
        let outs: Vec<&str> = self.outputs.iter().map(|a| a.name()).collect();
        s.push_str(&format!("outputs = {}\n", outs.join(", ")));
        if let Some(c) = self.oracle.cutoff {
            s.push_str(&format!("oracle_cutoff = {c}\n"));
        }
        if let Some(h) = self.oracle.step {
            s.push_str(&format!("oracle_step = {h}\n"));
        }
        s.push_str(&format!("compare_tolerance = {}\n", self.compare_tolerance));
        s.push_str(&format!("out = {}\n", self.output_dir.display()));
        s.push_str(&format!("format = {}\n", self.format.extension()));
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.state.validate().map_err(|e| config_err("state", e.to_string()))?;
        if self.times.is_empty() {
            return Err(config_err("times", "must not be empty"));
        }
        if self.times.iter().any(|&t| !(t.is_finite() && t >= 0.0)) {
            return Err(config_err("times", "must be finite and >= 0"));
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(config_err("times", "must be sorted ascending"));
        }
        self.grid.validate().map_err(|e| config_err("grid", e.to_string()))?;
        if self.grid.nx < MIN_GRID_POINTS || self.grid.ny < MIN_GRID_POINTS {
            return Err(config_err("grid", format!("resolution must be >= {MIN_GRID_POINTS} per axis")));
        }
        if self.outputs.is_empty() {
            return Err(config_err("outputs", "nothing requested"));
        }
        if !(self.compare_tolerance.is_finite() && self.compare_tolerance > 0.0) {
            return Err(config_err("compare_tolerance", "must be > 0"));
        }
        if self.needs_oracle() {
            self.oracle_settings()?;
        }
        Ok(())
    }

    fn needs_oracle(&self) -> bool {
        self.outputs.iter().any(|a| a.needs_oracle())
    }

    /// Integrator settings: overrides if given, otherwise cutoff
    /// max(60, default for the state) and the largest step ≤ 1e−3 that keeps
    /// a factor two inside the stability bound.
    pub fn oracle_settings(&self) -> Result<LindbladSettings> {
        let cutoff = match self.oracle.cutoff {
            Some(c) => c,
            None => DEFAULT_ORACLE_CUTOFF.max(default_cutoff(&self.state)?),
        };
        let step = self.oracle.step.unwrap_or_else(|| {
            let rate = self.bath.gamma * (1.0 + 2.0 * self.bath.nbar) * cutoff as f64;
            DEFAULT_ORACLE_STEP.min(0.5 * STABILITY_BOUND / rate)
        });
        LindbladSettings::new(cutoff, step, self.bath).map_err(|e| config_err("oracle", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub artifact: Artifact,
    pub time: f64,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub artifact: Artifact,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub artifact: Artifact,
    pub time: f64,
    /// Trapezoid integral of the grid over its extent.
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub cutoff: usize,
    pub step: f64,
    pub initial_trace_deficit: f64,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub observable: String,
    pub max_abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub tolerance: f64,
    pub deviations: Vec<Deviation>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// Same configuration as `key = value` text, usable with `--config`.
    pub config_text: String,
    pub files: Vec<FileEntry>,
    pub skipped: Vec<Skipped>,
    pub grid_checks: Vec<GridCheck>,
    pub oracle: Option<OracleSummary>,
    pub compare: Option<CompareSummary>,
    pub started_unix_seconds: u64,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl Report {
    /// False iff an oracle comparison exceeded its tolerance.
    pub fn passed(&self) -> bool {
        self.manifest.compare.as_ref().map_or(true, |c| c.passed)
    }
}

fn moment_rows(m: &MomentSet) -> Vec<(&'static str, f64)> {
    vec![
        ("mean_a_re", m.mean_a.re),
        ("mean_a_im", m.mean_a.im),
        ("mean_n", m.mean_n),
        ("second_factorial", m.second_factorial),
        ("var_x", m.var_x),
        ("var_y", m.var_y),
    ]
}

fn rows_csv(header: &str, rows: &[(String, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

fn rows_json(rows: &[(String, f64)]) -> Result<String> {
    let map: serde_json::Map<String, serde_json::Value> =
        rows.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
    Ok(serde_json::to_string_pretty(&map)? + "\n")
}

struct Writer<'a> {
    dir: &'a Path,
    format: OutputFormat,
    files: Vec<FileEntry>,
}

impl Writer<'_> {
    fn write(&mut self, artifact: Artifact, index: usize, time: f64, contents: String) -> Result<()> {
        let name = format!("{}_{:03}.{}", artifact.name(), index, self.format.extension());
        fs::write(self.dir.join(&name), contents)?;
        self.files.push(FileEntry { artifact, time, path: name });
        Ok(())
    }

    fn grid(&mut self, artifact: Artifact, index: usize, time: f64, g: &PhaseSpaceGrid) -> Result<()> {
        let text = match self.format {
            OutputFormat::Csv => g.to_csv(),
            OutputFormat::Json => serde_json::to_string(g)? + "\n",
        };
        self.write(artifact, index, time, text)
    }

    fn rows(&mut self, artifact: Artifact, index: usize, time: f64, header: &str, rows: &[(String, f64)]) -> Result<()> {
        let text = match self.format {
            OutputFormat::Csv => rows_csv(header, rows),
            OutputFormat::Json => rows_json(rows)?,
        };
        self.write(artifact, index, time, text)
    }
}

/// Errors that leave a closed form unavailable at one time without
/// invalidating the run.
fn skippable(e: &Error) -> bool {
    matches!(e, Error::Singular(_) | Error::SeriesNotConverged { .. } | Error::Domain(_))
}

/// Executes a run, writing every artifact and `manifest.json` into the
/// output directory.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    fs::create_dir_all(&config.output_dir)?;

    let spec = config.state;
    let m0 = initial_moments(&spec)?;
    let template = config.grid.build(GridMeta {
        quantity: GridQuantity::P,
        state: spec.family_name().to_string(),
        time: 0.0,
    })?;

    let (trajectory, oracle) = if config.needs_oracle() {
        let settings = config.oracle_settings()?;
        let rho0 = fock_density(&spec, settings.cutoff)?;
        let t_final = *config.times.last().unwrap_or(&0.0);
        let traj = integrate(&rho0, &settings, t_final, &config.times)?;
        let summary = OracleSummary {
            cutoff: settings.cutoff,
            step: settings.step,
            initial_trace_deficit: rho0.trace_deficit(),
            max_trace_drift: traj.max_trace_drift(),
            min_eigenvalue: traj.min_eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min),
        };
        (Some(traj), Some(summary))
    } else {
        (None, None)
    };

    let mut writer = Writer { dir: &config.output_dir, format: config.format, files: Vec::new() };
    let mut skipped = Vec::new();
    let mut grid_checks = Vec::new();
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();

    for (index, &t) in config.times.iter().enumerate() {
        let mut grid_t = template.clone();
        grid_t.meta.time = t;
        let evolved = evolve_p_closed_form(&spec, config.bath, t)?;
        let moments = evolved_moments(&m0, config.bath, t)?;
        for &artifact in &config.outputs {
            let mut skip = |reason: String| skipped.push(Skipped { artifact, time: t, reason });
            match artifact {
                Artifact::PGrid => match sample_on_grid(&evolved, &grid_t) {
                    Ok(g) => {
                        grid_checks.push(GridCheck { artifact, time: t, integral: g.integrate() });
                        writer.grid(artifact, index, t, &g)?;
                    }
                    Err(e) if skippable(&e) => skip(e.to_string()),
                    Err(e) => return Err(e),
                },
                Artifact::QGrid => match analytic_q(&evolved, &grid_t) {
                    Ok(g) => {
                        grid_checks.push(GridCheck { artifact, time: t, integral: g.integrate() });
                        writer.grid(artifact, index, t, &g)?;
                    }
                    Err(e) if skippable(&e) => skip(e.to_string()),
                    Err(e) => return Err(e),
                },
                Artifact::WGrid => {
                    let rho = &oracle_state(&trajectory, index);
                    let mut g = wigner_from_characteristic(rho, &grid_t)?;
                    g.meta.state = grid_t.meta.state.clone();
                    g.meta.time = t;
                    grid_checks.push(GridCheck { artifact, time: t, integral: g.integrate() });
                    writer.grid(artifact, index, t, &g)?;
                }
                Artifact::Moments => {
                    let rows: Vec<(String, f64)> =
                        moment_rows(&moments).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
                    writer.rows(artifact, index, t, "quantity,value", &rows)?;
                }
                Artifact::MandelQ => match mandel_q(&m0, config.bath, t) {
                    Ok(q) => writer.rows(artifact, index, t, "quantity,value", &[("mandel_q".into(), q)])?,
                    Err(e) if skippable(&e) => skip(e.to_string()),
                    Err(e) => return Err(e),
                },
                Artifact::Variances => {
                    let rows = vec![
                        ("var_x".to_string(), moments.var_x),
                        ("var_y".to_string(), moments.var_y),
                        ("product".to_string(), moments.uncertainty_product()),
                    ];
                    writer.rows(artifact, index, t, "quantity,value", &rows)?;
                }
                Artifact::OracleCompare => {
                    let rho = &oracle_state(&trajectory, index);
                    let numeric = moments_from_rho(rho);
                    let mut rows: Vec<(String, f64)> = moment_rows(&moments)
                        .into_iter()
                        .zip(moment_rows(&numeric))
                        .map(|((k, a), (_, b))| (k.to_string(), (a - b).abs()))
                        .collect();
                    if let (Ok(a), Ok(b)) = (moments.mandel_q(), numeric.mandel_q()) {
                        rows.push(("mandel_q".into(), (a - b).abs()));
                    }
                    match analytic_q(&evolved, &grid_t) {
                        Ok(q) => rows.push(("q_grid".into(), q.max_abs_diff(&husimi_grid(rho, &grid_t)?)?)),
                        Err(e) if skippable(&e) => skip(format!("q_grid comparison: {e}")),
                        Err(e) => return Err(e),
                    }
                    for (k, v) in &rows {
                        let w = worst.entry(k.clone()).or_insert(0.0);
                        *w = w.max(*v);
                    }
                    writer.rows(artifact, index, t, "observable,abs_deviation", &rows)?;
                }
            }
        }
    }

    let compare = config.outputs.contains(&Artifact::OracleCompare).then(|| {
        let deviations: Vec<Deviation> =
            worst.iter().map(|(k, v)| Deviation { observable: k.clone(), max_abs_deviation: *v }).collect();
        let passed = deviations.iter().all(|d| d.max_abs_deviation <= config.compare_tolerance);
        CompareSummary { tolerance: config.compare_tolerance, deviations, passed }
    });

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        config_text: config.to_text(),
        files: writer.files,
        skipped,
        grid_checks,
        oracle,
        compare,
        started_unix_seconds: started_unix,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = config.output_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(Report { manifest, manifest_path })
}

fn analytic_q(evolved: &crate::evolution::EvolvedPFunction, grid: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    let p = evolved.descriptor().ok_or(Error::Domain("no closed-form descriptor".into()))?;
    let mut q = p_to_q_grid(p, grid)?;
    q.meta.time = grid.meta.time;
    Ok(q)
}

fn oracle_state(traj: &Option<Trajectory>, index: usize) -> crate::states::FockDensityMatrix {
    traj.as_ref().expect("oracle requested").states[index].clone()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamInfo {
    pub name: String,
    pub constraint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyInfo {
    pub family: String,
    pub description: String,
    pub parameters: Vec<ParamInfo>,
    /// Evolved P function form.
    pub evolved_form: String,
    pub example: StateSpec,
    /// `key = value` snippet for [`take_state`].
    pub config: String,
}

pub fn list_states() -> Vec<FamilyInfo> {
    let p = |name: &str, constraint: &str| ParamInfo { name: name.into(), constraint: constraint.into() };
    let beta = || vec![p("beta_re", "finite, default 0"), p("beta_im", "finite, default 0")];
    let b = ComplexAmplitude { re: 1.0, im: 0.5 };
    let entries: Vec<(StateSpec, &str, Vec<ParamInfo>, &str)> = vec![
        (StateSpec::Coherent { beta: b }, "coherent state |beta>", beta(), "Gaussian of width nbar_t centered at beta e^{-gamma t}"),
        (StateSpec::Thermal { mbar: 1.0 }, "Bose-Einstein mixture with mean occupation mbar", vec![p("mbar", ">= 0")], "Gaussian of width mbar e^{-2 gamma t} + nbar_t"),
        (
            StateSpec::PhotonAddedThermal { mbar: 1.0 },
            "thermal state with one photon added, a^dag rho a / (mbar + 1)",
            vec![p("mbar", "> 0")],
            "Gaussian times a quadratic polynomial in |alpha|",
        ),
        (
            StateSpec::PhotonAddedCoherent { beta: b },
            "coherent state with one photon added, a^dag |beta> / sqrt(1 + |beta|^2)",
            beta(),
            "Gaussian times a quadratic polynomial in alpha - beta e^{-gamma t}",
        ),
        (
            StateSpec::SqueezedCoherent { beta: b, s: 0.8 },
            "squeezed coherent state D(beta) S(r)|0>, X variance 1/(4s), Y variance s/4",
            {
                let mut v = beta();
                v.push(p("squeeze", "> 0 (s = e^{2r})"));
                v
            },
            "Gaussian times a truncated series of Tricomi U(-n, 1/2, .) per axis",
        ),
        (
            StateSpec::DisplacedThermal { beta: b, nbar_eff: 0.5 },
            "thermal state of mean occupation nbar_eff displaced to beta",
            {
                let mut v = beta();
                v.push(p("nbar_eff", ">= 0"));
                v
            },
            "Gaussian of width nbar_eff e^{-2 gamma t} + nbar_t",
        ),
    ];
    entries
        .into_iter()
        .map(|(example, description, parameters, form)| FamilyInfo {
            family: example.family_name().into(),
            description: description.into(),
            parameters,
            evolved_form: form.into(),
            config: state_to_text(&example),
            example,
        })
        .collect()
}

pub fn format_state_list(families: &[FamilyInfo]) -> String {
    let mut s = String::new();
    for f in families {
        s.push_str(&format!("{}\n  {}\n", f.family, f.description));
        for p in &f.parameters {
            s.push_str(&format!("  --{:<10} {}\n", p.name.replace('_', "-"), p.constraint));
        }
        s.push_str(&format!("  evolved P: {}\n\n", f.evolved_form));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const PATS: &str = "state = photon-added-thermal\nmbar = 1\ngamma = 0.5\nnbar = 2\ntimes = 0, 0.5, 1\n";

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::from_text(PATS).unwrap();
        assert_eq!(c.state, StateSpec::PhotonAddedThermal { mbar: 1.0 });
        assert_eq!(c.times, vec![0.0, 0.5, 1.0]);
        assert_eq!(c.grid, GridSpec::default());
        assert_eq!(c.outputs, vec![Artifact::PGrid, Artifact::Moments]);
        assert_eq!(c.format, OutputFormat::Csv);
    }

    #[test]
    fn text_round_trip() {
        let text = "state = squeezed-coherent\nbeta_re = 0.3\nbeta_im = -1.25\nsqueeze = 0.8 # s\n\
                    gamma = 0.5\nnbar = 1\ntimes = 0:1:5\ngrid = -4:4:21,-3:3:11\n\
                    outputs = moments, q-grid, oracle-compare\noracle_cutoff = 40\nformat = json\nout = /tmp/x\n";
        let c = RunConfig::from_text(text).unwrap();
        assert_eq!(c.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.grid.ny, 11);
        let back = RunConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn field_level_errors() {
        let field = |text: &str| match RunConfig::from_text(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(field("state = coherent\n"), "gamma");
        assert_eq!(field("state = nope\ngamma = 1\n"), "state");
        assert_eq!(field("state = coherent\nmbar = 1\ngamma = 1\n"), "mbar");
        assert_eq!(field("state = thermal\nmbar = 1\ngamma = 1\ntimes = 1, 0.5\n"), "times");
        assert_eq!(field("state = thermal\nmbar = 1\ngamma = 1\ntimes = -1\n"), "times");
        assert_eq!(field("state = thermal\nmbar = 1\ngamma = 1\ngrid = -1:1:7\n"), "grid");
        assert_eq!(field("state = thermal\nmbar = 1\ngamma = 1\ncolour = red\n"), "colour");
        assert_eq!(field("state = thermal\nmbar = -1\ngamma = 1\n"), "state");
        assert_eq!(field("state = thermal\nmbar = 1\ngamma = 1\noutputs = p-grid, x\n"), "outputs");
        assert_eq!(field("state = thermal\nstate = coherent\n"), "state");
    }

    #[test]
    fn unstable_oracle_step_rejected() {
        let text = format!("{PATS}outputs = oracle-compare\noracle_step = 0.1\n");
        assert!(matches!(RunConfig::from_text(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn default_step_respects_stability() {
        let text = "state = thermal\nmbar = 1\ngamma = 2\nnbar = 3\noutputs = oracle-compare\n";
        let s = RunConfig::from_text(text).unwrap().oracle_settings().unwrap();
        assert!(s.step * 2.0 * 7.0 * s.cutoff as f64 <= 0.25 + 1e-12);
    }

    #[test]
    fn catalog_lists_six_round_tripping_families() {
        let list = list_states();
        assert_eq!(list.len(), 6);
        for f in &list {
            let mut map = parse_pairs(&f.config).unwrap();
            assert_eq!(take_state(&mut map).unwrap(), f.example);
            assert!(map.is_empty());
        }
        let json = serde_json::to_string(&list).unwrap();
        let back: Vec<FamilyInfo> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, list);
        let text = format_state_list(&list);
        assert!(text.contains("squeezed-coherent") && text.contains("--nbar-eff"));
    }
}
