//! Run configuration: a TOML file with optional sections.
//!
//! ```toml
//! method = "lsq"          # lsq | picard | newton | variant | linear
//! seed = 7
//! output = "runs/sine5"
//!
//! [grid]
//! nx = 63
//! T = 2.5
//! omega = [0.2, 0.8]
//! cfl = 0.9
//!
//! [nonlinearity]
//! family = "sine"
//! params = [5.0]
//!
//! [data]
//! init = "sine1"
//! target = "zero"
//!
//! [sweep]
//! "nonlinearity.params.0" = [1.0, 5.0]
//! "grid.nx" = [31, 63]
//! ```
//!
//! Every section may be left out; a missing key takes its default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::profile::{parse_profile, Profile};
use crate::error::{Error, Result};
use crate::hum::CgOptions;
use crate::lsq::SolverConfig;
use crate::nonlinearity::{Growth, Nonlinearity};
use crate::wave::{DiscreteSetup, Interval, StateSlice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lsq,
    Picard,
    Newton,
    Variant,
    Linear,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsq" => Ok(Method::Lsq),
            "picard" => Ok(Method::Picard),
            "newton" => Ok(Method::Newton),
            "variant" => Ok(Method::Variant),
            "linear" => Ok(Method::Linear),
            _ => Err(Error::validation(
                "method",
                format!("unknown method `{s}`; expected lsq, picard, newton, variant or linear"),
            )),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Lsq => "lsq",
            Method::Picard => "picard",
            Method::Newton => "newton",
            Method::Variant => "variant",
            Method::Linear => "linear",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    method: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    nonlinearity: RawNonlinearity,
    #[serde(default)]
    data: RawData,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    probe: RawProbe,
    #[serde(default)]
    sweep: BTreeMap<String, Vec<toml::Value>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: Option<usize>,
    #[serde(alias = "horizon")]
    #[serde(rename = "T")]
    t: Option<f64>,
    omega: Option<Vec<f64>>,
    cfl: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNonlinearity {
    family: Option<String>,
    params: Option<Vec<f64>>,
    s: Option<f64>,
    holder: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    init: Option<String>,
    target: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    m: Option<f64>,
    tol_e: Option<f64>,
    max_iters: Option<usize>,
    cg_tol: Option<f64>,
    cg_maxit: Option<usize>,
    ls_tol: Option<f64>,
    diagonal_scaling: Option<bool>,
    filter: Option<bool>,
    snapshots: Option<Vec<usize>>,
    increment_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    m_ball: Option<f64>,
    trials: Option<usize>,
    amplitudes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub nx: usize,
    pub horizon: f64,
    pub omega: (f64, f64),
    pub cfl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearityConfig {
    pub family: String,
    pub params: Vec<f64>,
    pub s: Option<f64>,
    pub holder: Option<f64>,
    pub growth: Option<(f64, f64)>,
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<Nonlinearity> {
        let mut nl = Nonlinearity::builtin(&self.family, &self.params)?;
        if let Some(s) = self.s {
            nl = nl.with_exponent(s)?;
        }
        if let Some(h) = self.holder {
            nl = nl.with_holder_seminorm(h)?;
        }
        if let Some((alpha, beta)) = self.growth {
            nl = nl.with_growth(Growth { alpha, beta })?;
        }
        Ok(nl)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub m_ball: f64,
    pub trials: usize,
    /// Amplitudes substituted for the first nonlinearity parameter; empty
    /// means the configured nonlinearity alone.
    pub amplitudes: Vec<f64>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub seed: u64,
    pub grid: GridConfig,
    pub nonlinearity: NonlinearityConfig,
    pub init: Profile,
    pub target: Profile,
    pub solver: SolverConfig,
    /// Iterations whose pair is written to `snapshot_k####.csv`.
    pub snapshots: Vec<usize>,
    /// Stopping level of the fixed-point baselines on `|y_{k+1} - y_k|_inf`.
    pub increment_tol: f64,
    pub probe: ProbeConfig,
    pub output: PathBuf,
    /// Directory relative profile files and outputs are resolved against.
    pub base_dir: PathBuf,
    /// Sweep axes in key order.
    pub sweep: Vec<(String, Vec<toml::Value>)>,
    /// The parsed document without its `[sweep]` table.
    pub echo: toml::Table,
}

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_VAR: &str = "SEMIWAVE_OUTPUT_ROOT";

impl RunConfig {
    pub fn setup(&self) -> Result<DiscreteSetup> {
        let g = &self.grid;
        DiscreteSetup::new(g.nx, g.horizon, Interval::new(g.omega.0, g.omega.1)?, g.cfl)
    }

    pub fn build_nonlinearity(&self) -> Result<Nonlinearity> {
        self.nonlinearity.build()
    }

    pub fn init_state(&self, setup: &DiscreteSetup) -> Result<StateSlice> {
        self.init.resolve(setup, &self.base_dir)
    }

    pub fn target_state(&self, setup: &DiscreteSetup) -> Result<StateSlice> {
        self.target.resolve(setup, &self.base_dir)
    }

    /// Output directory, with relative paths placed under
    /// `$SEMIWAVE_OUTPUT_ROOT` when it is set and under the config
    /// directory otherwise.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) if !root.is_empty() => Path::new(&root).join(&self.output),
            _ => self.base_dir.join(&self.output),
        }
    }

    /// Builds every derived object once, so that a config that passes also
    /// runs.
    pub fn check(&self) -> Result<()> {
        let setup = self.setup()?;
        self.build_nonlinearity()?;
        self.init_state(&setup)?;
        self.target_state(&setup)?;
        for a in &self.probe.amplitudes {
            let mut nl = self.nonlinearity.clone();
            match nl.params.first_mut() {
                Some(p) => *p = *a,
                None => {
                    return Err(Error::validation(
                        "probe.amplitudes",
                        format!("family `{}` has no amplitude parameter", nl.family),
                    ))
                }
            }
            nl.build()?;
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let cfg = parse_config_str(&text, &base, &stem).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}:{location}", path.display()),
            message,
        },
        other => other,
    })?;
    cfg.check()?;
    Ok(cfg)
}

/// 1-based `line:column` of a byte offset.
fn line_col(text: &str, offset: usize) -> String {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let start = before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let col = String::from_utf8_lossy(&before[start..]).chars().count() + 1;
    format!("{line}:{col}")
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let location = match e.span() {
        Some(span) => line_col(text, span.start),
        None => "1:1".into(),
    };
    Error::parse(location, e.message().to_string())
}

/// Parses and validates a configuration held in memory. `name` provides the
/// default output directory `runs/<name>`.
pub fn parse_config_str(text: &str, base_dir: &Path, name: &str) -> Result<RunConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    table.remove("sweep");
    from_raw(raw, table, base_dir, name)
}

/// Rebuilds a configuration from a (possibly edited) document.
pub(crate) fn from_table(table: toml::Table, base_dir: &Path, name: &str) -> Result<RunConfig> {
    let raw = RawConfig::deserialize(toml::Value::Table(table.clone()))
        .map_err(|e| Error::parse("sweep", e.message().to_string()))?;
    from_raw(raw, table, base_dir, name)
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(field, format!("must be positive and finite, got {v}")))
    }
}

fn from_raw(raw: RawConfig, echo: toml::Table, base_dir: &Path, name: &str) -> Result<RunConfig> {
    let method = raw.method.as_deref().unwrap_or("lsq").parse()?;

    let g = raw.grid;
    let omega = g.omega.unwrap_or_else(|| vec![0.2, 0.8]);
    let [l, r] = omega[..] else {
        return Err(Error::validation("grid.omega", "expected [left, right]"));
    };
    if !(l.is_finite() && r.is_finite() && 0.0 <= l && l < r && r <= 1.0) {
        return Err(Error::validation(
            "grid.omega",
            format!("({l}, {r}) must satisfy 0 <= left < right <= 1"),
        ));
    }
    let grid = GridConfig {
        nx: g.nx.unwrap_or(63),
        horizon: positive("grid.T", g.t.unwrap_or(2.5))?,
        omega: (l, r),
        cfl: g.cfl.unwrap_or(0.9),
    };
    if !(grid.cfl > 0.0 && grid.cfl < 1.0) {
        return Err(Error::validation("grid.cfl", "must lie in (0, 1)"));
    }

    let n = raw.nonlinearity;
    let growth = match (n.alpha, n.beta) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => {
            return Err(Error::validation(
                "nonlinearity.alpha",
                "alpha and beta must be given together",
            ))
        }
    };
    let nonlinearity = NonlinearityConfig {
        family: n.family.unwrap_or_else(|| "zero".into()),
        params: n.params.unwrap_or_default(),
        s: n.s,
        holder: n.holder,
        growth,
    };
    nonlinearity.build()?;

    let profile = |field: &str, text: Option<String>, default: &str| -> Result<Profile> {
        let text = text.unwrap_or_else(|| default.into());
        parse_profile(&text).map_err(|e| Error::validation(field, e.to_string()))
    };
    let init = profile("data.init", raw.data.init, "sine1")?;
    let target = profile("data.target", raw.data.target, "zero")?;

    let seed = raw.seed.unwrap_or(0);
    let s = raw.solver;
    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        m: s.m.unwrap_or(defaults.m),
        tol_e: s.tol_e.unwrap_or(defaults.tol_e),
        max_iters: s.max_iters.unwrap_or(defaults.max_iters),
        cg: CgOptions {
            tol: s.cg_tol.unwrap_or(defaults.cg.tol),
            max_iter: s.cg_maxit.unwrap_or(defaults.cg.max_iter),
            diagonal_scaling: s.diagonal_scaling.unwrap_or(false),
            spectral_filter: s.filter.unwrap_or(false),
        },
        ls_tol: s.ls_tol.unwrap_or(defaults.ls_tol),
        seed,
    };
    solver.validate()?;
    let increment_tol = positive("solver.increment_tol", s.increment_tol.unwrap_or(1e-8))?;
    let mut snapshots = s.snapshots.unwrap_or_default();
    snapshots.sort_unstable();
    snapshots.dedup();

    let p = raw.probe;
    let probe = ProbeConfig {
        m_ball: positive("probe.m_ball", p.m_ball.unwrap_or(1.0))?,
        trials: p.trials.unwrap_or(10),
        amplitudes: p.amplitudes.unwrap_or_default(),
    };
    if probe.trials == 0 {
        return Err(Error::validation("probe.trials", "must be positive"));
    }

    for (key, values) in &raw.sweep {
        if values.is_empty() {
            return Err(Error::validation(format!("sweep.{key}"), "needs at least one value"));
        }
        if key.split('.').next() == Some("sweep") {
            return Err(Error::validation(format!("sweep.{key}"), "cannot sweep the sweep table"));
        }
    }

    let output = PathBuf::from(raw.output.unwrap_or_else(|| format!("runs/{name}")));
    Ok(RunConfig {
        method,
        seed,
        grid,
        nonlinearity,
        init,
        target,
        solver,
        snapshots,
        increment_tol,
        probe,
        output,
        base_dir: base_dir.to_path_buf(),
        sweep: raw.sweep.into_iter().collect(),
        echo,
    })
}
