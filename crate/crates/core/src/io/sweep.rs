//! Parameter sweeps and the contraction probe.
//!
//! A sweep key is a dotted path into the config document; numeric segments
//! index arrays, so `nonlinearity.params.0` replaces the first parameter.
//! Points are the cartesian product of the value lists, keys in lexicographic
//! order with the last key varying fastest. Point `i` runs in `run_####/`
//! under the sweep's output directory, and `summary.csv` lists them in order.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use super::config::{from_table, RunConfig};
use super::run::{csv_err, csv_writer, num, run_into, status_of, write_atomic, RunSummary};
use crate::baselines::{contraction_probe, ContractionReport};
use crate::error::{Error, Result};

/// Result of one sweep point.
#[derive(Debug)]
pub struct SweepPoint {
    pub index: usize,
    pub values: Vec<toml::Value>,
    pub outcome: Result<RunSummary>,
}

impl SweepPoint {
    pub fn exit_code(&self) -> i32 {
        match &self.outcome {
            Ok(s) => s.exit_code,
            Err(e) => e.exit_code(),
        }
    }
}

#[derive(Debug)]
pub struct SweepSummary {
    pub dir: PathBuf,
    pub keys: Vec<String>,
    pub points: Vec<SweepPoint>,
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let field = || format!("sweep.{key}");
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::validation(field(), "empty path segment"));
    }
    let (first, rest) = segments.split_first().expect("split yields one segment");
    let mut slot = table
        .entry(first.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    for seg in rest {
        slot = match slot {
            toml::Value::Table(t) => t
                .entry(seg.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new())),
            toml::Value::Array(a) => {
                let i: usize = seg
                    .parse()
                    .map_err(|_| Error::validation(field(), format!("`{seg}` is not an array index")))?;
                if i > a.len() {
                    return Err(Error::validation(
                        field(),
                        format!("index {i} past the end of an array of length {}", a.len()),
                    ));
                }
                if i == a.len() {
                    a.push(toml::Value::Integer(0));
                }
                &mut a[i]
            }
            _ => return Err(Error::validation(field(), format!("`{seg}` indexes a scalar"))),
        };
    }
    *slot = value;
    Ok(())
}

fn sweep_dir(cfg: &RunConfig, index: usize) -> PathBuf {
    cfg.output_dir().join(format!("run_{index:04}"))
}

/// Expands the sweep into concrete configs, in summary order.
pub fn sweep_points(cfg: &RunConfig) -> Result<Vec<(Vec<toml::Value>, RunConfig)>> {
    let sizes: Vec<usize> = cfg.sweep.iter().map(|(_, v)| v.len()).collect();
    let total: usize = sizes.iter().product();
    let name = cfg
        .output
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    let mut out = Vec::with_capacity(total);
    for index in 0..total {
        // mixed-radix digits, last key fastest
        let mut rem = index;
        let mut digits = vec![0; sizes.len()];
        for (d, &n) in digits.iter_mut().zip(&sizes).rev() {
            *d = rem % n;
            rem /= n;
        }
        let mut table = cfg.echo.clone();
        let mut values = Vec::with_capacity(sizes.len());
        for ((key, list), &d) in cfg.sweep.iter().zip(&digits) {
            set_path(&mut table, key, list[d].clone())?;
            values.push(list[d].clone());
        }
        let mut point = from_table(table, &cfg.base_dir, &name)?;
        point.output = sweep_dir(cfg, index);
        point.sweep.clear();
        out.push((values, point));
    }
    Ok(out)
}

fn render(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Float(f) => format!("{f:e}"),
        other => other.to_string(),
    }
}

/// Runs every sweep point, in parallel, and writes `summary.csv`.
///
/// A point whose config is rejected is reported in the summary with exit
/// code 4; it does not stop the other points.
pub fn sweep(cfg: &RunConfig) -> Result<SweepSummary> {
    let points = sweep_points(cfg)?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let points: Vec<SweepPoint> = points
        .into_par_iter()
        .enumerate()
        .map(|(index, (values, point))| {
            let outcome = point.check().and_then(|_| run_into(&point, &sweep_dir(cfg, index)));
            SweepPoint {
                index,
                values,
                outcome,
            }
        })
        .collect();
    let keys: Vec<String> = cfg.sweep.iter().map(|(k, _)| k.clone()).collect();
    write_summary(&dir.join("summary.csv"), &keys, &points)?;
    Ok(SweepSummary { dir, keys, points })
}

fn write_summary(path: &Path, keys: &[String], points: &[SweepPoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["run".to_string()];
    header.extend(keys.iter().cloned());
    header.extend(
        ["method", "status", "exit_code", "iterations", "final_E", "final_deviation"]
            .map(String::from),
    );
    w.write_record(&header).map_err(csv_err)?;
    for p in points {
        let mut row = vec![format!("run_{:04}", p.index)];
        row.extend(p.values.iter().map(render));
        match &p.outcome {
            Ok(s) => row.extend([
                s.method.to_string(),
                s.status.clone(),
                s.exit_code.to_string(),
                s.iterations.to_string(),
                num(s.final_e),
                num(s.final_deviation),
            ]),
            Err(e) => row.extend([
                String::new(),
                status_of(Some(e)).to_string(),
                e.exit_code().to_string(),
                String::new(),
                String::new(),
                String::new(),
            ]),
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Contraction measurement for one amplitude (`None`: the configured
/// nonlinearity as is).
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub amplitude: Option<f64>,
    pub report: ContractionReport,
}

/// Samples the Picard map for every amplitude in `[probe]` and writes
/// `probe.csv`, `probe_summary.csv` and `manifest.json`.
pub fn probe_contraction(cfg: &RunConfig) -> Result<Vec<ProbeRow>> {
    let setup = cfg.setup()?;
    let init = cfg.init_state(&setup)?;
    let target = cfg.target_state(&setup)?;
    let amplitudes: Vec<Option<f64>> = if cfg.probe.amplitudes.is_empty() {
        vec![None]
    } else {
        cfg.probe.amplitudes.iter().copied().map(Some).collect()
    };
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let started = chrono::Utc::now();

    let mut rows = Vec::with_capacity(amplitudes.len());
    for amplitude in amplitudes {
        let mut nl_cfg = cfg.nonlinearity.clone();
        if let (Some(a), Some(p)) = (amplitude, nl_cfg.params.first_mut()) {
            *p = a;
        }
        let nl = nl_cfg.build()?;
        let report = contraction_probe(
            &setup,
            &nl,
            &init,
            &target,
            cfg.probe.m_ball,
            cfg.probe.trials,
            cfg.seed,
            &cfg.solver.cg,
        )?;
        log::info!("g = {}: rho_max = {:e}", nl.name(), report.rho_max);
        rows.push(ProbeRow { amplitude, report });
    }

    let mut w = csv_writer(&dir.join("probe.csv"))?;
    w.write_record(["amplitude", "trial", "ratio", "potential_gap", "state_gap"])
        .map_err(csv_err)?;
    for row in &rows {
        for (i, t) in row.report.trials.iter().enumerate() {
            w.write_record([
                num(row.amplitude),
                i.to_string(),
                num(Some(t.ratio)),
                num(Some(t.potential_gap)),
                num(Some(t.state_gap)),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    let mut w = csv_writer(&dir.join("probe_summary.csv"))?;
    w.write_record(["amplitude", "rho_max", "gap_slope", "gap_r2"]).map_err(csv_err)?;
    for row in &rows {
        let r = &row.report;
        w.write_record([
            num(row.amplitude),
            num(Some(r.rho_max)),
            num(Some(r.gap_slope)),
            num(Some(r.gap_r2)),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg.echo,
        "command": "probe-contraction",
        "seed": cfg.seed,
        "grid_hash": super::run::grid_hash(&setup),
        "started_at": started.to_rfc3339(),
        "finished_at": chrono::Utc::now().to_rfc3339(),
        "rho_max": rows.iter().map(|r| r.report.rho_max).collect::<Vec<_>>(),
    });
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Io(e.into()))?;
    write_atomic(&dir.join("manifest.json"), &bytes)?;
    Ok(rows)
}
