//! The simulation loop: TDVP stepping, optional oracle propagation and the
//! trajectory and summary outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use opendyn_core::estimator::{Estimator, EstimatorMode};
use opendyn_core::lindblad::{self, DensityMatrix, LIOUVILLIAN_QUBIT_CAP};
use opendyn_core::models::{self, Scenario, PRESETS};
use opendyn_core::tdvp::{self, TdvpConfig, TdvpSolver, ZdotSolve};
use opendyn_core::Integrator;
use serde::Serialize;

use crate::config::ScenarioFile;
use crate::trajectory::{self, Row};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    /// Preset name or scenario file path.
    pub scenario: String,
    pub t_final: f64,
    pub dt: f64,
    pub output_every: usize,
    pub integrator: String,
    pub estimator: String,
    pub shots: u64,
    pub seed: u64,
    pub rel_cutoff: f64,
    pub zdot_solve: String,
    pub oracle: bool,
    pub oracle_dt: f64,
    pub output: PathBuf,
    pub summary: PathBuf,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            scenario: "dephasing".into(),
            t_final: 1.0,
            dt: 1e-3,
            output_every: 10,
            integrator: "rk4".into(),
            estimator: "exact".into(),
            shots: 10_000,
            seed: 0,
            rel_cutoff: 1e-8,
            zdot_solve: "real-projected".into(),
            oracle: false,
            oracle_dt: 1e-4,
            output: "trajectory.csv".into(),
            summary: "summary.json".into(),
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    /// Bad configuration; nothing was written.
    Usage(anyhow::Error),
    /// The run started but could not finish.
    Failure(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(e) => write!(f, "invalid configuration: {e:#}"),
            RunError::Failure(e) => write!(f, "run failed: {e:#}"),
        }
    }
}

impl std::error::Error for RunError {}

fn usage(msg: impl Into<String>) -> RunError {
    RunError::Usage(anyhow!(msg.into()))
}

pub fn load_scenario(name: &str) -> anyhow::Result<Scenario> {
    if PRESETS.contains(&name) {
        return Ok(Scenario::preset(name)?);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(anyhow!("{name:?} is neither a preset ({}) nor a file", PRESETS.join(", ")));
    }
    ScenarioFile::load(path)?.build()
}

/// Steps that fit in `t_final`, guarding against round-off in the ratio.
pub fn step_count(t_final: f64, dt: f64) -> u64 {
    (t_final / dt + 1e-9).floor() as u64
}

/// Number of trajectory rows a valid config produces.
pub fn row_count(config: &RunConfig) -> usize {
    (step_count(config.t_final, config.dt) / config.output_every as u64) as usize + 1
}

/// Everything needed to start a run, checked up front.
pub struct Prepared {
    pub scenario: Scenario,
    pub tdvp: TdvpConfig,
    /// Oracle steps per output row.
    pub oracle_stride: usize,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared, RunError> {
    let pos = |v: f64| v > 0.0 && v.is_finite();
    if !pos(config.t_final) {
        return Err(usage(format!("t_final must be positive, got {}", config.t_final)));
    }
    if !pos(config.dt) {
        return Err(usage(format!("dt must be positive, got {}", config.dt)));
    }
    if config.output_every == 0 {
        return Err(usage("output_every must be at least 1"));
    }
    if step_count(config.t_final, config.dt) == 0 {
        return Err(usage("t_final is shorter than one step"));
    }
    if !(config.rel_cutoff >= 0.0) || !config.rel_cutoff.is_finite() {
        return Err(usage(format!("rel_cutoff must be nonnegative, got {}", config.rel_cutoff)));
    }
    let integrator: Integrator = config.integrator.parse().map_err(|e| RunError::Usage(anyhow!("{e}")))?;
    let zdot_solve: ZdotSolve = config.zdot_solve.parse().map_err(|e| RunError::Usage(anyhow!("{e}")))?;
    let mode = match config.estimator.as_str() {
        "exact" => EstimatorMode::Exact,
        "shots" => EstimatorMode::Shots { n_shots: config.shots, seed: config.seed },
        other => return Err(usage(format!("unknown estimator {other:?}; use exact or shots"))),
    };
    let estimator = Estimator::new(mode).map_err(|e| RunError::Usage(anyhow!("{e}")))?;

    let scenario = load_scenario(&config.scenario).map_err(RunError::Usage)?;
    let report = models::validate(&scenario);
    if !report.passed() {
        return Err(usage(format!("scenario {} fails validation: {}", scenario.name, report.violations.join("; "))));
    }

    let mut oracle_stride = 0;
    if config.oracle {
        if !pos(config.oracle_dt) {
            return Err(usage(format!("oracle_dt must be positive, got {}", config.oracle_dt)));
        }
        let ratio = config.dt * config.output_every as f64 / config.oracle_dt;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio {
            return Err(usage(format!(
                "oracle_dt {} must divide the output interval {}",
                config.oracle_dt,
                config.dt * config.output_every as f64
            )));
        }
        if scenario.model.n_qubits() > LIOUVILLIAN_QUBIT_CAP {
            return Err(usage(format!(
                "oracle needs at most {LIOUVILLIAN_QUBIT_CAP} qubits, scenario has {}",
                scenario.model.n_qubits()
            )));
        }
        oracle_stride = k as usize;
    }
    let tdvp = TdvpConfig { dt: config.dt, integrator, rel_cutoff: config.rel_cutoff, zdot_solve, estimator, residual: true };
    Ok(Prepared { scenario, tdvp, oracle_stride })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub steps: u64,
    pub rows: usize,
    pub t_end: f64,
    pub max_deviation: Option<f64>,
    pub final_deviation: Option<f64>,
    pub wall_time_s: f64,
    /// Singular values dropped from `S` and `C`, summed over steps.
    pub discarded_s_total: u64,
    pub discarded_c_total: u64,
    pub residual_warnings: u64,
    pub max_residual: Option<f64>,
    pub max_im_zdot: f64,
    pub max_trace_drift: f64,
}

/// Result of [`simulate`], before anything is written.
pub struct Outcome {
    pub rows: Vec<Row>,
    pub summary: Summary,
}

fn nan_or(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Run a prepared configuration in memory.
pub fn simulate(config: &RunConfig, prep: &Prepared) -> Result<Outcome, RunError> {
    let fail = |e: opendyn_core::Error| RunError::Failure(anyhow!(e));
    let start = Instant::now();
    let s = &prep.scenario;
    let solver = TdvpSolver::new(&s.model, prep.tdvp.clone()).map_err(fail)?;
    let n_rows = row_count(config);
    let steps = (n_rows as u64 - 1) * config.output_every as u64;

    let mut rows = Vec::with_capacity(n_rows);
    let mut state = s.ansatz.clone();
    let (mut disc_s, mut disc_c, mut warns) = (0u64, 0u64, 0u64);
    let mut max_residual: Option<f64> = None;
    let mut max_im = 0.0f64;
    let mut trace0 = None;
    let mut max_drift = 0.0f64;
    let record = |state: &tdvp::AnsatzState, d: &tdvp::StepDiagnostics, rows: &mut Vec<Row>| -> Result<(), RunError> {
        let value = tdvp::expectation(state, &s.observable).map_err(fail)?;
        rows.push(Row {
            t: d.t,
            tdvp: value,
            oracle: f64::NAN,
            abs_dev: f64::NAN,
            trace: d.trace,
            min_eig: d.min_eigenvalue,
            residual: nan_or(d.residual),
            im_zdot: d.im_zdot,
        });
        Ok(())
    };
    let mut account = |d: &tdvp::StepDiagnostics| {
        disc_s += d.discarded_s as u64;
        disc_c += d.discarded_c as u64;
        warns += d.residual_warning as u64;
        if let Some(r) = d.residual {
            max_residual = Some(max_residual.map_or(r, |m| m.max(r)));
        }
        max_im = max_im.max(d.im_zdot);
        let t0 = *trace0.get_or_insert(d.trace);
        max_drift = max_drift.max((d.trace - t0).abs());
    };
    for k in 0..steps {
        let (next, d) = solver.step(&state, k).map_err(fail)?;
        account(&d);
        if k % config.output_every as u64 == 0 {
            record(&state, &d, &mut rows)?;
        }
        state = next;
    }
    let d = solver.diagnose(&state, steps).map_err(fail)?;
    account(&d);
    record(&state, &d, &mut rows)?;

    let mut max_dev = None;
    let mut final_dev = None;
    if config.oracle {
        let rho0 = DensityMatrix::new(tdvp::density_matrix(&s.ansatz).map_err(fail)?)
            .and_then(|r| r.normalized())
            .map_err(fail)?;
        let oracle_t = ((n_rows - 1) * prep.oracle_stride) as f64 * config.oracle_dt;
        let traj = lindblad::propagate(&rho0, &s.model, oracle_t, config.oracle_dt, prep.oracle_stride)
            .map_err(fail)?;
        if traj.len() < n_rows {
            return Err(RunError::Failure(anyhow!("oracle produced {} samples for {} rows", traj.len(), n_rows)));
        }
        let mut m = 0.0f64;
        for (row, (_, rho)) in rows.iter_mut().zip(&traj) {
            row.oracle = lindblad::normalized_expectation(rho, &s.observable).map_err(fail)?;
            row.abs_dev = (row.tdvp - row.oracle).abs();
            m = m.max(row.abs_dev);
        }
        max_dev = Some(m);
        final_dev = rows.last().map(|r| r.abs_dev);
    }

    let summary = Summary {
        scenario: s.name.clone(),
        steps,
        rows: rows.len(),
        t_end: steps as f64 * config.dt,
        max_deviation: max_dev,
        final_deviation: final_dev,
        wall_time_s: start.elapsed().as_secs_f64(),
        discarded_s_total: disc_s,
        discarded_c_total: disc_c,
        residual_warnings: warns,
        max_residual,
        max_im_zdot: max_im,
        max_trace_drift: max_drift,
    };
    Ok(Outcome { rows, summary })
}

/// Validate, simulate and write the trajectory and summary files.
pub fn run(config: &RunConfig) -> Result<Summary, RunError> {
    let prep = prepare(config)?;
    let outcome = simulate(config, &prep)?;
    let echo = serde_json::to_string(config).map_err(|e| RunError::Failure(e.into()))?;
    trajectory::write_file(&config.output, &echo, &outcome.rows).map_err(RunError::Failure)?;
    let text = serde_json::to_string_pretty(&outcome.summary).map_err(|e| RunError::Failure(e.into()))?;
    std::fs::write(&config.summary, text + "\n")
        .with_context(|| format!("writing {}", config.summary.display()))
        .map_err(RunError::Failure)?;
    Ok(outcome.summary)
}
