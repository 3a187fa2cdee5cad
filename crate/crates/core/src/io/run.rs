use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{FieldFormat, RunConfig};
use super::fields::{diagnostics_csv, write_fields, write_vtk, FieldDump};
use crate::diagnostics::{run_with_diagnostics, DiagnosticsRecord};
use crate::error::Result;
use crate::scheme::{EntropyState, Scheme, StepReport};

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub reports: Vec<StepReport>,
    pub final_state: EntropyState,
    /// Invariant violations found by re-checking every record.
    pub violations: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Machine-readable status written next to the outputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: String,
    pub steps: usize,
    pub final_time: f64,
    pub lyapunov_initial: f64,
    pub lyapunov_final: f64,
    pub max_energy_residual: f64,
    pub max_mass_residual: f64,
    pub homotopy_steps: usize,
    pub picard_steps: usize,
    pub violations: Vec<String>,
    pub error: Option<String>,
}

impl RunReport {
    pub fn from_outcome(o: &RunOutcome) -> Self {
        let first = o.records.first();
        let last = o.records.last();
        RunReport {
            status: if o.violations.is_empty() { "ok" } else { "failed" }.into(),
            steps: last.map_or(0, |r| r.step),
            final_time: last.map_or(0.0, |r| r.time),
            lyapunov_initial: first.map_or(f64::NAN, |r| r.lyapunov),
            lyapunov_final: last.map_or(f64::NAN, |r| r.lyapunov),
            max_energy_residual: max_abs(o.records.iter().map(|r| r.energy_residual)),
            max_mass_residual: max_abs(o.records.iter().flat_map(|r| r.mass_residual.iter().copied())),
            homotopy_steps: o.reports.iter().filter(|r| r.homotopy_path_used).count(),
            picard_steps: o.reports.iter().filter(|r| r.picard_used).count(),
            violations: o.violations.clone(),
            error: None,
        }
    }

    pub fn from_error(e: &dyn std::fmt::Display) -> Self {
        RunReport {
            status: "failed".into(),
            error: Some(e.to_string()),
            ..RunReport::default()
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| crate::Error::Format(e.to_string()))?;
        Ok(fs::write(path, text)?)
    }
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn dump(cfg: &RunConfig, scheme: &Scheme, dir: &Path, step: usize, time: f64, state: &EntropyState) -> Result<Vec<PathBuf>> {
    let d = FieldDump::from_state(&scheme.model, &scheme.grid, scheme.config.eps, state)?;
    let mut files = Vec::new();
    for fmt in &cfg.output.formats {
        let path = match fmt {
            FieldFormat::Csv => dir.join(format!("fields_{step:06}.csv")),
            FieldFormat::Vtk => dir.join(format!("fields_{step:06}.vtk")),
        };
        match fmt {
            FieldFormat::Csv => write_fields(&path, &d)?,
            FieldFormat::Vtk => write_vtk(&path, &scheme.grid, &d, &format!("step {step} time {time}"))?,
        }
        files.push(path);
    }
    Ok(files)
}

/// Runs one simulation, writing field dumps at the configured cadence and
/// `diagnostics.csv` into `dir`.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let scheme = cfg.build_scheme()?;
    let initial = cfg.initial_state(&scheme)?;
    let steps = (cfg.run.horizon / scheme.config.tau).round() as usize;
    let mut files = Vec::new();
    let traj = run_with_diagnostics(&scheme, &initial, cfg.run.horizon, |step, time, state| {
        let cadence = cfg.output.cadence;
        if step == 0 || step == steps || (cadence > 0 && step % cadence == 0) {
            files.extend(dump(cfg, &scheme, dir, step, time, state)?);
        }
        Ok(())
    })?;
    let species = scheme.model.params.species;
    let diag = dir.join("diagnostics.csv");
    fs::write(&diag, diagnostics_csv(species, &traj.records))?;
    files.push(diag);
    let violations = traj
        .records
        .iter()
        .flat_map(|r| r.violations(&scheme).into_iter().map(move |v| format!("step {}: {v}", r.step)))
        .collect();
    Ok(RunOutcome {
        records: traj.records,
        reports: traj.reports,
        final_state: traj.final_state,
        violations,
        files,
    })
}

/// Recomputes diagnostics from stored field dumps `(step, time, fields)`
/// in the given order. Step-to-step quantities are evaluated only between
/// dumps of consecutive steps and are zero otherwise.
pub fn diagnose(cfg: &RunConfig, dumps: &[(usize, f64, FieldDump)]) -> Result<Vec<DiagnosticsRecord>> {
    let scheme = cfg.build_scheme()?;
    let eps = scheme.config.eps;
    let mut out = Vec::with_capacity(dumps.len());
    let mut prev: Option<(usize, EntropyState)> = None;
    for (step, time, d) in dumps {
        let st = d.to_state(&scheme.model, eps)?;
        let before = prev.as_ref().filter(|(s, _)| s + 1 == *step).map(|(_, p)| p);
        out.push(DiagnosticsRecord::compute(&scheme, *step, *time, before, &st)?);
        prev = Some((*step, st));
    }
    Ok(out)
}

/// `sqrt(sum vol (|d rho|^2 + |d T|^2 + |d S|^2))` between two states on the
/// grid of `scheme`.
pub fn field_l2_distance(scheme: &Scheme, a: &EntropyState, b: &EntropyState) -> Result<f64> {
    let eps = scheme.config.eps;
    let pa = a.physical(&scheme.model, eps)?;
    let pb = b.physical(&scheme.model, eps)?;
    let mut sum = 0.0;
    for c in 0..a.num_cells() {
        let dr: f64 = pa.rho[c].iter().zip(&pb.rho[c]).map(|(x, y)| (x - y).powi(2)).sum();
        sum += dr + (pa.t[c] - pb.t[c]).powi(2) + (pa.s[c] - pb.s[c]).powi(2);
    }
    Ok((sum * scheme.grid.cell_volume()).sqrt())
}

/// Least-squares slope of `ln error` against `ln tau`.
pub fn observed_order(taus: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .zip(errors)
        .filter(|(t, e)| **t > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One line of the sweep summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub tau: f64,
    pub delta: f64,
    pub steps: usize,
    pub max_energy_residual: f64,
    pub max_mass_residual: f64,
    pub lyapunov_initial: f64,
    pub lyapunov_final: f64,
    /// Largest one-step increase of the Lyapunov functional.
    pub lyapunov_max_increase: f64,
    /// Distance of the final state to the reference run.
    pub error_l2: Option<f64>,
    /// Observed temporal order over the `(eps, delta)` group.
    pub order: Option<f64>,
    pub status: String,
}

impl SweepRow {
    pub fn new(cfg: &RunConfig, outcome: &std::result::Result<RunOutcome, String>) -> Self {
        let mut row = SweepRow {
            eps: cfg.scheme.eps,
            tau: cfg.scheme.tau,
            delta: cfg.scheme.delta,
            steps: 0,
            max_energy_residual: f64::NAN,
            max_mass_residual: f64::NAN,
            lyapunov_initial: f64::NAN,
            lyapunov_final: f64::NAN,
            lyapunov_max_increase: f64::NAN,
            error_l2: None,
            order: None,
            status: String::new(),
        };
        match outcome {
            Ok(o) => {
                let rep = RunReport::from_outcome(o);
                row.steps = rep.steps;
                row.max_energy_residual = rep.max_energy_residual;
                row.max_mass_residual = rep.max_mass_residual;
                row.lyapunov_initial = rep.lyapunov_initial;
                row.lyapunov_final = rep.lyapunov_final;
                row.lyapunov_max_increase = o
                    .records
                    .windows(2)
                    .map(|w| w[1].lyapunov - w[0].lyapunov)
                    .fold(f64::NEG_INFINITY, f64::max);
                row.status = rep.status;
            }
            Err(e) => row.status = format!("error: {}", e.replace(',', ";")),
        }
        row
    }
}

/// Fills `order` for each `(eps, delta)` group with at least two errors.
pub fn assign_orders(rows: &mut [SweepRow]) {
    let keys: Vec<(u64, u64)> = rows.iter().map(|r| (r.eps.to_bits(), r.delta.to_bits())).collect();
    for k in 0..rows.len() {
        let group: Vec<usize> = (0..rows.len()).filter(|&j| keys[j] == keys[k]).collect();
        let taus: Vec<f64> = group.iter().filter(|&&j| rows[j].error_l2.is_some()).map(|&j| rows[j].tau).collect();
        let errs: Vec<f64> = group.iter().filter_map(|&j| rows[j].error_l2).collect();
        rows[k].order = observed_order(&taus, &errs);
    }
}

pub fn sweep_summary_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
    let mut out = String::from(
        "eps,tau,delta,steps,max_energy_residual,max_mass_residual,lyapunov_initial,lyapunov_final,\
         lyapunov_max_increase,error_l2,observed_order,status\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}\n",
            r.eps,
            r.tau,
            r.delta,
            r.steps,
            r.max_energy_residual,
            r.max_mass_residual,
            r.lyapunov_initial,
            r.lyapunov_final,
            r.lyapunov_max_increase,
            opt(r.error_l2),
            opt(r.order),
            r.status
        ));
    }
    out
}
