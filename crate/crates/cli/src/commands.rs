//! Command implementations. Each command writes into an output directory
//! and finishes with `summary.json`, which lists every file written.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use poiseuille_core::bounds::{BoundsSet, FlowCase};
use poiseuille_core::rheology::{classify_regime, flux, flux_max, FluxRange, ModelParams};
use poiseuille_core::steady::{check_existence, solve_steady, steady_residual, ExistenceReport, SteadyError, SteadyProfile, Verdict};
use poiseuille_core::unsteady::{run_from_field, validate_initial, Field, Grid, RunOptions, SimulationResult, Termination};
use serde_json::json;
use thiserror::Error;

use crate::config::{ConfigErrors, InitialSpec, RunConfig, SweepCommand, SCHEMA_VERSION};
use crate::output::{format_number, write_csv, write_json, write_monitor_log, ArtifactSet, RunSummary};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("initial data rejected: {0}")]
    InitialData(String),
    #[error("case hypotheses fail: {0}")]
    Hypotheses(String),
    #[error("no steady solution: sup B = {sup_b} against flux limit {threshold}")]
    NoSolution { sup_b: f64, threshold: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{failed} of {total} verification checks failed")]
    VerifyFailed { failed: usize, total: usize },
    #[error("sweep member {index} failed: {message}")]
    SweepMember { index: usize, code: i32, message: String },
    #[error("output error: {0}")]
    Io(#[from] io::Error),
}

impl CommandError {
    /// 1 configuration, 2 numerical or output failure, 3 no steady solution.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) | CommandError::InitialData(_) | CommandError::Hypotheses(_) => 1,
            CommandError::NoSolution { .. } => 3,
            CommandError::SweepMember { code, .. } => *code,
            CommandError::Numerical(_) | CommandError::VerifyFailed { .. } | CommandError::Io(_) => 2,
        }
    }
}

struct Recorder {
    command: &'static str,
    config: serde_json::Value,
    artifacts: ArtifactSet,
    started: Instant,
}

impl Recorder {
    fn new(command: &'static str, cfg: &RunConfig, out: &Path) -> io::Result<Self> {
        let config = serde_json::to_value(&cfg.document).unwrap_or(serde_json::Value::Null);
        Ok(Self { command, config, artifacts: ArtifactSet::new(out)?, started: Instant::now() })
    }

    fn finish(
        mut self,
        regime: Option<poiseuille_core::RegimeClass>,
        existence: Option<ExistenceReport>,
        bounds: Option<BoundsSet>,
        termination: Option<Termination>,
        details: serde_json::Value,
    ) -> io::Result<RunSummary> {
        let path = self.artifacts.path("summary.json");
        let summary = RunSummary {
            schema_version: SCHEMA_VERSION,
            command: self.command.to_string(),
            config: self.config,
            regime,
            existence,
            bounds,
            termination,
            details,
            artifacts: self.artifacts.into_names(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        write_json(&path, &summary)?;
        Ok(summary)
    }
}

fn flux_details(params: &ModelParams) -> serde_json::Value {
    let range = flux_max(params);
    let (eta0, zeta0) = match range {
        FluxRange::Maximum { value, at } => (Some(at), Some(value)),
        _ => (None, None),
    };
    json!({
        "flow_case": FlowCase::of(params),
        "flux_range": range,
        "flux_limit": range.limit(),
        "eta0": eta0,
        "zeta0": zeta0,
    })
}

/// Regime, flux range and existence verdict. Performs no solve.
pub fn cmd_classify(cfg: &RunConfig, out: &Path) -> Result<RunSummary, CommandError> {
    let rec = Recorder::new("classify", cfg, out)?;
    let regime = classify_regime(&cfg.params, None);
    let existence = check_existence(&cfg.params, &cfg.profile);
    Ok(rec.finish(Some(regime), Some(existence), None, None, flux_details(&cfg.params))?)
}

fn steady_error(e: SteadyError) -> CommandError {
    match e {
        SteadyError::NoSolution { sup_b, threshold } => CommandError::NoSolution { sup_b, threshold },
        other => CommandError::Numerical(other.to_string()),
    }
}

/// Writes the steady profile and its existence report.
pub fn cmd_steady(cfg: &RunConfig, out: &Path) -> Result<RunSummary, CommandError> {
    let mut rec = Recorder::new("steady", cfg, out)?;
    let params = &cfg.params;
    let regime = classify_regime(params, None);
    let existence = check_existence(params, &cfg.profile);
    let solved = solve_steady(params, &cfg.profile, cfg.cells);
    let steady = match solved {
        Ok(s) => s,
        Err(e) => {
            let details = json!({ "error": e.to_string() });
            rec.finish(Some(regime), Some(existence), None, None, details)?;
            return Err(steady_error(e));
        }
    };
    let csv = rec.artifacts.path("steady.csv");
    write_steady_csv(&csv, &steady, params)?;
    let regime = classify_regime(params, Some(gradient_range(&steady.v_y)));
    let details = json!({
        "cells": steady.cells(),
        "eps": steady.eps,
        "axis_velocity": steady.v[0],
        "steady_residual": steady_residual(&steady, &cfg.profile, params),
        "identity_residual": steady.identity_residual(params),
        "gradient_estimate": steady.gradient_estimate(params, &cfg.profile),
    });
    Ok(rec.finish(Some(regime), Some(existence), None, None, details)?)
}

fn gradient_range(g: &[f64]) -> (f64, f64) {
    g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn write_steady_csv(path: &Path, s: &SteadyProfile, params: &ModelParams) -> io::Result<()> {
    let f: Vec<f64> = s.v_y.iter().map(|&g| flux(g, params)).collect();
    write_csv(path, &["Y", "V", "V_Y", "B_eps", "F_of_V_Y"], &[&s.grid, &s.v, &s.v_y, &s.b_eps, &f])
}

/// Nodal gradient: zero at the axis, central inside, one-sided second
/// order at the wall.
pub fn nodal_gradient(field: &Field) -> Vec<f64> {
    let n = field.grid.cells;
    let h = field.grid.spacing();
    let u = &field.u;
    let mut g = vec![0.0; n + 1];
    for i in 1..n {
        g[i] = 0.5 * (field.u_y[i - 1] + field.u_y[i]);
    }
    g[n] = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
    g
}

fn write_snapshot(path: &Path, field: &Field) -> io::Result<()> {
    let y = field.grid.nodes();
    let g = nodal_gradient(field);
    write_csv(path, &["Y", "U", "U_Y", "U_T"], &[&y, &field.u, &g, &field.u_t])
}

fn run_options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        cells: cfg.cells,
        t_end: cfg.time.t_end,
        output_times: cfg.time.output_times.clone(),
        dt: cfg.dt_policy(),
        t0_cap: cfg.time.t0_cap,
        override_backward: cfg.run.override_backward,
        override_hypotheses: cfg.run.override_hypotheses,
    }
}

/// Integrates the time-dependent problem and writes snapshots, the monitor
/// log and the summary.
pub fn cmd_unsteady(cfg: &RunConfig, out: &Path) -> Result<RunSummary, CommandError> {
    let mut rec = Recorder::new("unsteady", cfg, out)?;
    let params = &cfg.params;
    let profile = &cfg.profile;
    let options = run_options(cfg);
    let existence = check_existence(params, profile);
    let grid = Grid::new(cfg.cells, params.radius);

    let (initial, bounds) = match cfg.initial_condition() {
        None => {
            debug_assert_eq!(cfg.initial, InitialSpec::Steady);
            let steady = match solve_steady(params, profile, cfg.cells) {
                Ok(s) => s,
                Err(e) => {
                    rec.finish(None, Some(existence), None, None, json!({ "error": e.to_string() }))?;
                    return Err(steady_error(e));
                }
            };
            (Field::new(grid, 0.0, steady.equilibrium()), None)
        }
        Some(ic) => {
            if let Err(e) = validate_initial(&ic, profile, params) {
                rec.finish(None, Some(existence), None, None, json!({ "error": e.to_string() }))?;
                return Err(CommandError::InitialData(e.to_string()));
            }
            let bounds = BoundsSet::compute(&ic, profile, params, options.t0_cap);
            if !bounds.hypotheses.satisfied && !options.override_hypotheses {
                let msg = bounds.hypotheses.summary();
                let no_solution = existence.verdict == Verdict::None;
                rec.finish(None, Some(existence.clone()), Some(bounds), None, json!({ "error": msg }))?;
                if no_solution {
                    return Err(CommandError::NoSolution { sup_b: existence.sup_b, threshold: existence.threshold.unwrap_or(f64::INFINITY) });
                }
                return Err(CommandError::Hypotheses(msg));
            }
            (Field::from_initial(&ic, grid), Some(bounds))
        }
    };

    let result = run_from_field(initial, params, profile, &options, bounds.as_ref()).map_err(|e| CommandError::Numerical(e.to_string()))?;
    let snapshot_files = write_run_outputs(&mut rec.artifacts, &result)?;
    let range = gradient_range(&result.final_field.u_y);
    let regime = classify_regime(params, Some(range));
    let details = json!({
        "horizon": result.horizon,
        "final_time": result.final_field.t,
        "steps": result.final_field.step_count,
        "rejected_steps": result.rejected_steps,
        "non_physical": result.non_physical,
        "monitors_passed": result.all_monitors_passed(),
        "snapshots": snapshot_files,
        "newton_failure": result.newton_failure.as_ref().map(|f| json!({ "iterations": f.iterations, "residual": f.residual })),
    });
    let termination = result.termination;
    let t = result.final_field.t;
    let summary = rec.finish(Some(regime), Some(existence), bounds, Some(termination), details)?;
    match termination {
        Termination::NewtonFailure => Err(CommandError::Numerical(format!("Newton iteration failed at t = {t}"))),
        Termination::BackwardRegimeDetected => Err(CommandError::Numerical(format!("backward-parabolic regime reached at t = {t}"))),
        _ => Ok(summary),
    }
}

/// Snapshot files with their times.
fn write_run_outputs(artifacts: &mut ArtifactSet, result: &SimulationResult) -> io::Result<Vec<serde_json::Value>> {
    let mut listed = Vec::new();
    for (k, snap) in result.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:04}.csv");
        write_snapshot(&artifacts.path(&name), snap)?;
        listed.push(json!({ "file": name, "t": snap.t }));
    }
    write_snapshot(&artifacts.path("final.csv"), &result.final_field)?;
    listed.push(json!({ "file": "final.csv", "t": result.final_field.t }));
    write_monitor_log(&artifacts.path("monitor.jsonl"), &result.monitor_log)?;
    Ok(listed)
}

/// Outcome of one sweep member.
#[derive(Debug, Clone)]
pub struct MemberOutcome {
    pub index: usize,
    pub dir: PathBuf,
    pub assignment: Vec<(String, toml::Value)>,
    pub exit_code: i32,
    pub error: Option<String>,
    /// Final velocity (`U` for unsteady, `V` for steady) and cell count.
    pub profile: Option<(usize, Vec<f64>)>,
}

fn read_profile(path: &Path, column: usize) -> Option<Vec<f64>> {
    let text = fs::read_to_string(path).ok()?;
    text.lines().skip(1).map(|l| l.split(',').nth(column)?.parse().ok()).collect()
}

fn run_member(index: usize, member: &crate::config::SweepMember, command: SweepCommand, out: &Path) -> MemberOutcome {
    let dir = out.join(format!("member_{index:03}"));
    let result = match command {
        SweepCommand::Steady => cmd_steady(&member.config, &dir),
        SweepCommand::Unsteady => cmd_unsteady(&member.config, &dir),
    };
    let profile = match command {
        SweepCommand::Steady => read_profile(&dir.join("steady.csv"), 1),
        SweepCommand::Unsteady => read_profile(&dir.join("final.csv"), 1),
    };
    let (exit_code, error) = match &result {
        Ok(_) => (0, None),
        Err(e) => (e.exit_code(), Some(e.to_string())),
    };
    MemberOutcome {
        index,
        dir,
        assignment: member.assignment.clone(),
        exit_code,
        error,
        profile: if exit_code == 0 { profile.map(|p| (member.config.cells, p)) } else { None },
    }
}

/// Sup-norm difference on the coarser of two nested grids, `NaN` when the
/// grids are not nested.
pub fn nested_sup_diff(a: &(usize, Vec<f64>), b: &(usize, Vec<f64>)) -> f64 {
    let (coarse, fine) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    if coarse.0 == 0 || fine.0 % coarse.0 != 0 {
        return f64::NAN;
    }
    let stride = fine.0 / coarse.0;
    coarse.1.iter().enumerate().map(|(i, &x)| (x - fine.1[i * stride]).abs()).fold(0.0, f64::max)
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Float(x) => format_number(*x),
        other => other.to_string(),
    }
}

/// Runs every member of the sweep product, each in its own
/// subdirectory, and writes `comparison.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<RunSummary, CommandError> {
    let members = cfg.expand_sweep()?;
    let mut rec = Recorder::new("sweep", cfg, out)?;
    let command = cfg.run.sweep_command;
    let workers = cfg.run.workers.unwrap_or(1);
    let outcomes: Vec<MemberOutcome> = if workers <= 1 {
        members.iter().enumerate().map(|(i, m)| run_member(i, m, command, out)).collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CommandError::Io(io::Error::other(e)))?;
        pool.install(|| members.par_iter().enumerate().map(|(i, m)| run_member(i, m, command, out)).collect())
    };

    let keys: Vec<&str> = cfg.sweep.iter().map(|(k, _)| k.as_str()).collect();
    let mut text = String::from("member");
    for k in &keys {
        text.push(',');
        text.push_str(k);
    }
    text.push_str(",exit_code,axis_value,sup_diff_previous\n");
    for (i, o) in outcomes.iter().enumerate() {
        let mut row = format!("{:03}", o.index);
        for (_, v) in &o.assignment {
            row.push(',');
            row.push_str(&value_text(v));
        }
        let axis = o.profile.as_ref().map_or(f64::NAN, |p| p.1[0]);
        let diff = match (i.checked_sub(1).and_then(|j| outcomes[j].profile.as_ref()), o.profile.as_ref()) {
            (Some(a), Some(b)) => nested_sup_diff(a, b),
            _ => f64::NAN,
        };
        row.push_str(&format!(",{},{},{}\n", o.exit_code, format_number(axis), format_number(diff)));
        text.push_str(&row);
    }
    fs::write(rec.artifacts.path("comparison.csv"), text)?;

    let listed: Vec<serde_json::Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "member": o.index,
                "dir": o.dir.file_name().map(|s| s.to_string_lossy().into_owned()),
                "assignment": o.assignment.iter().map(|(k, v)| (k.clone(), serde_json::to_value(v).unwrap_or_default())).collect::<serde_json::Map<_, _>>(),
                "exit_code": o.exit_code,
                "error": o.error,
            })
        })
        .collect();
    for o in &outcomes {
        let Some(dir_name) = o.dir.file_name().map(|s| s.to_string_lossy().into_owned()) else { continue };
        let mut files: Vec<String> = fs::read_dir(&o.dir)?.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect();
        files.sort();
        for f in files {
            rec.artifacts.path(&format!("{dir_name}/{f}"));
        }
    }
    let summary = rec.finish(None, None, None, None, json!({ "command": command, "workers": workers, "members": listed }))?;
    match outcomes.iter().filter(|o| o.exit_code != 0).max_by_key(|o| o.exit_code) {
        Some(o) => Err(CommandError::SweepMember { index: o.index, code: o.exit_code, message: o.error.clone().unwrap_or_default() }),
        None => Ok(summary),
    }
}

/// Runs the built-in fixtures and writes `verify.json`.
pub fn cmd_verify(out: &Path) -> Result<Vec<crate::verify::CheckOutcome>, CommandError> {
    fs::create_dir_all(out)?;
    let checks = crate::verify::run_all();
    write_json(&out.join("verify.json"), &json!({ "schema_version": SCHEMA_VERSION, "checks": checks }))?;
    Ok(checks)
}

/// Error when any verification check failed.
pub fn verify_status(checks: &[crate::verify::CheckOutcome]) -> Result<(), CommandError> {
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        failed => Err(CommandError::VerifyFailed { failed, total: checks.len() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_difference_uses_common_nodes() {
        let a = (2, vec![1.0, 0.5, 0.0]);
        let b = (4, vec![1.25, 9.0, 0.5, 9.0, 0.0]);
        assert_eq!(nested_sup_diff(&a, &b), 0.25);
        assert!(nested_sup_diff(&(3, vec![0.0; 4]), &b).is_nan());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CommandError::Hypotheses(String::new()).exit_code(), 1);
        assert_eq!(CommandError::NoSolution { sup_b: 1.0, threshold: 0.5 }.exit_code(), 3);
        assert_eq!(CommandError::Numerical(String::new()).exit_code(), 2);
    }
}
