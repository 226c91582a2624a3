//! Executes one configured run and writes its artifacts:
//!
//! * `iterations.csv`: one row per iterate, header [`ITERATIONS_HEADER`];
//! * `snapshot_k####.csv`: `t,x,y,f` on every grid point, for the requested
//!   iterations;
//! * `manifest.json`: config echo, grid hash, timing, status and diagnostics,
//!   written last through a rename.
//!
//! Floats are printed with Rust's shortest round-trip `{:e}` form and missing
//! values are empty fields. No timing enters the CSV files, so identical
//! configs produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{Method, RunConfig};
use crate::baselines::{self, FixedPointMethod};
use crate::error::{Error, Result};
use crate::hum::{self, steer};
use crate::lsq::{
    self, calibrate_c_emp, convergence_order, decay_bound_check, ControlledPair, IterationRecord,
    StepRule, ORDER_FLOOR,
};
use crate::nonlinearity::{initial_error_bound, predict_constants, Nonlinearity};
use crate::wave::{v_norm, DiscreteSetup, SpaceTimeField, StateSlice};

pub const ITERATIONS_HEADER: &str = "k,E,lambda,dir_norm,y_inf,deriv_err,cg_iters,cg_res";

/// One line of `iterations.csv`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub k: usize,
    pub e: Option<f64>,
    pub lambda: Option<f64>,
    /// `H` norm of the descent direction, or the increment for fixed-point
    /// baselines.
    pub dir_norm: Option<f64>,
    pub y_inf: Option<f64>,
    pub deriv_err: Option<f64>,
    pub cg_iters: Option<usize>,
    pub cg_res: Option<f64>,
}

pub(crate) fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

impl Row {
    fn fields(&self) -> [String; 8] {
        [
            self.k.to_string(),
            num(self.e),
            num(self.lambda),
            num(self.dir_norm),
            num(self.y_inf),
            num(self.deriv_err),
            self.cg_iters.map(|v| v.to_string()).unwrap_or_default(),
            num(self.cg_res),
        ]
    }

    fn from_lsq(rec: &IterationRecord) -> Self {
        let step = rec.step.as_ref();
        Row {
            k: rec.k,
            e: Some(rec.e),
            lambda: step.map(|s| s.lambda),
            dir_norm: step.map(|s| s.dir_norm),
            y_inf: Some(rec.y_inf),
            deriv_err: step.map(|s| s.deriv_err),
            cg_iters: step.map(|s| s.cg_iters),
            cg_res: step.map(|s| s.cg_res),
        }
    }
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_iterations(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(ITERATIONS_HEADER.split(',')).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshot(path: &Path, setup: &DiscreteSetup, pair: &ControlledPair) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "x", "y", "f"]).map_err(csv_err)?;
    for n in 0..=setup.nt() {
        let t = format!("{:e}", setup.t(n));
        for i in 0..setup.nx() {
            w.write_record([
                t.clone(),
                format!("{:e}", setup.x(i)),
                format!("{:e}", pair.y.get(n, i)),
                format!("{:e}", pair.f.get(n, i)),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// SHA-256 of the grid dimensions, horizon, window and mask.
pub fn grid_hash(setup: &DiscreteSetup) -> String {
    let mut h = Sha256::new();
    h.update((setup.nx() as u64).to_le_bytes());
    h.update((setup.nt() as u64).to_le_bytes());
    h.update(setup.horizon().to_le_bytes());
    h.update(setup.omega().left.to_le_bytes());
    h.update(setup.omega().right.to_le_bytes());
    for m in setup.omega_mask() {
        h.update(m.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Short machine-readable name of a termination.
pub fn status_of(failure: Option<&Error>) -> &'static str {
    match failure {
        None => "converged",
        Some(Error::Convergence { .. }) => "subproblem_failed",
        Some(Error::Stagnation { .. }) => "stagnated",
        Some(Error::MaxIter { .. }) => "max_iter",
        Some(Error::BlowUp { .. } | Error::Divergence { .. } | Error::Stability { .. }) => "diverged",
        Some(_) => "invalid",
    }
}

/// What a finished run reports to the caller and to sweep summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub method: Method,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    /// Number of rows in `iterations.csv`.
    pub iterations: usize,
    pub e0: Option<f64>,
    pub final_e: Option<f64>,
    /// `V` distance between the replayed final state and the target.
    pub final_deviation: Option<f64>,
    pub tol_deviation: f64,
    pub output_dir: PathBuf,
}

struct MethodResult {
    rows: Vec<Row>,
    pair: Option<ControlledPair>,
    failure: Option<Error>,
    e0: Option<f64>,
    final_e: Option<f64>,
    /// Overrides the semilinear replay (the linear method replays linearly).
    deviation: Option<f64>,
    diagnostics: serde_json::Value,
}

/// Runs `cfg` and writes its artifacts under [`RunConfig::output_dir`].
///
/// Solver failures are part of a normal run: they end up in the manifest and
/// in the exit code. Only invalid configs and I/O failures return `Err`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let dir = cfg.output_dir();
    run_into(cfg, &dir)
}

pub(crate) fn run_into(cfg: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let setup = cfg.setup()?;
    let nl = cfg.build_nonlinearity()?;
    let init = cfg.init_state(&setup)?;
    let target = cfg.target_state(&setup)?;
    fs::create_dir_all(dir)?;
    let started = chrono::Utc::now();
    let clock = Instant::now();
    log::info!(
        "{} run: nx = {}, nt = {}, g = {}, output {}",
        cfg.method,
        setup.nx(),
        setup.nt(),
        nl.name(),
        dir.display()
    );

    let mut snapshot_error: Option<Error> = None;
    let mut observe = |k: usize, pair: &ControlledPair| {
        if snapshot_error.is_none() && cfg.snapshots.binary_search(&k).is_ok() {
            let path = dir.join(format!("snapshot_k{k:04}.csv"));
            if let Err(e) = write_snapshot(&path, &setup, pair) {
                snapshot_error = Some(e);
            }
        }
    };
    let result = match cfg.method {
        Method::Lsq => run_descent(&setup, &nl, &init, &target, cfg, StepRule::LineSearch, &mut observe),
        Method::Newton => run_descent(&setup, &nl, &init, &target, cfg, StepRule::Fixed(1.0), &mut observe),
        Method::Picard => run_fixed_point(FixedPointMethod::Picard, &setup, &nl, &init, &target, cfg, &mut observe),
        Method::Variant => run_fixed_point(FixedPointMethod::Variant, &setup, &nl, &init, &target, cfg, &mut observe),
        Method::Linear => run_linear(&setup, &nl, &init, &target, cfg, &mut observe),
    };
    if let Some(e) = snapshot_error {
        return Err(e);
    }

    let final_deviation = match (result.deviation, &result.pair) {
        (Some(d), _) => Some(d),
        (None, Some(pair)) => lsq::replay_deviation(&setup, &nl, pair).ok(),
        (None, None) => None,
    };
    write_iterations(&dir.join("iterations.csv"), &result.rows)?;

    let tol_deviation = hum::tol_deviation(&setup, cfg.solver.cg.tol, &init, &target);
    let init_norm = v_norm(&setup, &init);
    let exit_code = result.failure.as_ref().map_or(0, Error::exit_code);
    let status = status_of(result.failure.as_ref()).to_string();
    let error = result.failure.as_ref().map(|e| e.to_string());
    match &error {
        Some(e) => log::warn!("{} run ended with status {status}: {e}", cfg.method),
        None => log::info!("{} run converged, final E = {}", cfg.method, num(result.final_e)),
    }
    let finished = chrono::Utc::now();
    let growth = nl.growth().map(|g| [g.alpha, g.beta]);
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg.echo,
        "method": cfg.method,
        "seed": cfg.seed,
        "grid": {
            "nx": setup.nx(),
            "nt": setup.nt(),
            "dx": setup.dx(),
            "dt": setup.dt(),
            "horizon": setup.horizon(),
            "omega": [setup.omega().left, setup.omega().right],
            "cfl": setup.cfl(),
        },
        "grid_hash": grid_hash(&setup),
        "nonlinearity": {
            "name": nl.name(),
            "s": nl.s(),
            "holder_seminorm": nl.holder_seminorm(),
            "holder_is_estimate": nl.holder_is_estimate(),
            "growth": growth,
        },
        "started_at": started.to_rfc3339(),
        "finished_at": finished.to_rfc3339(),
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "status": status,
        "exit_code": exit_code,
        "error": error,
        "iterations": result.rows.len(),
        "e0": result.e0,
        "final_e": result.final_e,
        "final_deviation": final_deviation,
        "relative_deviation": final_deviation.map(|d| d / init_norm.max(f64::MIN_POSITIVE)),
        "tol_deviation": tol_deviation,
        "diagnostics": result.diagnostics,
    });
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Io(e.into()))?;
    write_atomic(&dir.join("manifest.json"), &bytes)?;

    Ok(RunSummary {
        method: cfg.method,
        status,
        exit_code,
        error,
        iterations: result.rows.len(),
        e0: result.e0,
        final_e: result.final_e,
        final_deviation,
        tol_deviation,
        output_dir: dir.to_path_buf(),
    })
}

fn run_descent(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cfg: &RunConfig,
    rule: StepRule,
    observe: &mut impl FnMut(usize, &ControlledPair),
) -> MethodResult {
    let start = match lsq::make_initial_pair(setup, nl, init, target, &cfg.solver) {
        Ok(p) => p,
        Err(e) => return failed_before_start(e),
    };
    let zeros = vec![0.0; setup.nx()];
    let start_bound = initial_error_bound(
        nl,
        lsq::h_norm(setup, &start.y, &start.f, &zeros, &zeros),
        setup.horizon(),
        start.y_inf(),
    );
    let run = lsq::iterate_observed(setup, nl, start, &cfg.solver, rule, observe);
    let rows = run.records.iter().map(Row::from_lsq).collect();
    let mut diagnostics = descent_diagnostics(nl, &run, cfg);
    diagnostics["initial_error_bound"] = json!({
        "sqrt_e0": run.e0.sqrt(),
        "bound": start_bound,
    });
    MethodResult {
        rows,
        e0: Some(run.e0),
        final_e: Some(run.final_e()),
        pair: Some(run.pair),
        failure: run.failure,
        deviation: None,
        diagnostics,
    }
}

fn failed_before_start(e: Error) -> MethodResult {
    MethodResult {
        rows: Vec::new(),
        pair: None,
        failure: Some(e),
        e0: None,
        final_e: None,
        deviation: None,
        diagnostics: serde_json::Value::Null,
    }
}

/// Empirical constants and the checks built on them. Reported, never used
/// by the iteration.
fn descent_diagnostics(
    nl: &Nonlinearity,
    run: &lsq::LsqRun,
    cfg: &RunConfig,
) -> serde_json::Value {
    let energies = run.energies();
    let floor = ORDER_FLOOR.max(run.final_e());
    let c_emp = calibrate_c_emp(&run.records);
    let decay = decay_bound_check(&run.records, nl, c_emp, cfg.solver.m, floor);
    let prediction = predict_constants(nl, c_emp, run.e0, decay.m_obs);
    let orders: Vec<_> = convergence_order(&energies)
        .iter()
        .map(|o| json!({"k": o.k, "p": o.p}))
        .collect();
    let decay_rows: Vec<_> = decay
        .rows
        .iter()
        .map(|r| {
            json!({
                "k": r.k,
                "e": r.e,
                "e_next": r.e_next,
                "bound": r.bound,
                "holds": r.holds,
                "lambda_measured": r.lambda_measured,
                "lambda_predicted": r.lambda_predicted,
                "unit_step_predicted": r.unit_step_predicted,
            })
        })
        .collect();
    let steps: Vec<_> = run
        .records
        .iter()
        .filter_map(|r| {
            let s = r.step.as_ref()?;
            Some(json!({
                "k": r.k,
                "expansion_err": s.expansion_err,
                "descent_deviation": s.descent_deviation,
                "descent_tol": s.descent_tol,
                "gprime_inf": s.gprime_inf,
            }))
        })
        .collect();
    let m_range = decay.m_obs.max(1.0);
    let growth = nl.growth_check((-m_range, m_range), 2001);
    json!({
        "fixed_grid_floor": floor,
        "c_emp": c_emp,
        "rate_constant": prediction.c,
        "k0": prediction.k0,
        "m_observed": decay.m_obs,
        "decay_bound_holds": decay.all_hold(),
        "decay": decay_rows,
        "convergence_order": orders,
        "steps": steps,
        "growth_check": {
            "declared": growth.declared,
            "passed": growth.passed,
            "worst_margin": growth.worst_margin,
            "worst_at": growth.worst_at,
            "range": m_range,
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn run_fixed_point(
    method: FixedPointMethod,
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cfg: &RunConfig,
    observe: &mut impl FnMut(usize, &ControlledPair),
) -> MethodResult {
    let run = baselines::fixed_point_iterate(
        method,
        setup,
        nl,
        init,
        target,
        &cfg.solver.cg,
        cfg.solver.max_iters,
        cfg.increment_tol,
        observe,
    );
    let rows = run
        .records
        .iter()
        .map(|r| Row {
            k: r.k,
            e: r.e,
            lambda: None,
            dir_norm: r.increment,
            y_inf: Some(r.y_inf),
            deriv_err: None,
            cg_iters: r.increment.map(|_| r.cg_iters),
            cg_res: r.increment.map(|_| r.cg_res),
        })
        .collect();
    let increments = run.increments();
    let ratios: Vec<f64> = increments.windows(2).map(|w| w[1] / w[0]).collect();
    MethodResult {
        rows,
        e0: run.records.iter().find_map(|r| r.e),
        final_e: run.records.last().and_then(|r| r.e),
        pair: run.pair,
        failure: run.failure,
        deviation: None,
        diagnostics: json!({
            "increments": increments,
            "increment_ratios": ratios,
        }),
    }
}

fn run_linear(
    setup: &DiscreteSetup,
    nl: &Nonlinearity,
    init: &StateSlice,
    target: &StateSlice,
    cfg: &RunConfig,
    observe: &mut impl FnMut(usize, &ControlledPair),
) -> MethodResult {
    // linearization at zero: z_tt - z_xx + g'(0) z = u 1_omega - g(0)
    let potential = SpaceTimeField::constant(setup, nl.gprime(0.0));
    let source = SpaceTimeField::constant(setup, -nl.g0());
    let sol = match steer(setup, &potential, &source, init, target, &cfg.solver.cg) {
        Ok(s) => s,
        Err(e) => return failed_before_start(e),
    };
    let pair = ControlledPair {
        y: sol.trajectory.clone(),
        f: sol.control.clone(),
        init: init.clone(),
        target: target.clone(),
    };
    observe(0, &pair);
    let e = lsq::error_functional(setup, nl, &pair);
    let row = Row {
        k: 0,
        e: Some(e),
        lambda: None,
        dir_norm: None,
        y_inf: Some(pair.y_inf()),
        deriv_err: None,
        cg_iters: Some(sol.cg_iters),
        cg_res: Some(sol.cg_residual),
    };
    let failure = (!sol.within_tolerance()).then(|| Error::Convergence {
        iterations: sol.cg_iters,
        residual: sol.cg_residual,
    });
    MethodResult {
        rows: vec![row],
        e0: Some(e),
        final_e: Some(e),
        pair: Some(pair),
        failure,
        deviation: Some(sol.final_deviation),
        diagnostics: json!({
            "control_norm": sol.control_norm(setup),
            "cg_iterations": sol.cg_iters,
            "cg_residual": sol.cg_residual,
        }),
    }
}
