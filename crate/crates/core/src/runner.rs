//! Scenario execution, CSV export and run manifests.
//!
//! A run directory holds three files:
//!
//! * `trajectory.csv` — `t` plus one column per observable, every value
//!   printed with 17 significant digits. Rows are written as they are
//!   recorded, so a run aborted by an invariant breach keeps its prefix.
//! * `scenario.cfg` — the full scenario snapshot; re-running it reproduces
//!   the CSV byte for byte.
//! * `manifest.json` — engine version, wall time, digests and a summary.

use std::cell::RefCell;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::basis::{enumerate_basis_capped, Mode, DEFAULT_DIMENSION_CAP};
use crate::dynamics::sector::{Horizon, SectorEngine, SectorRun};
use crate::dynamics::{temperature_from_mu, DensityMatrix, EvolveOptions, Observable, System, TimeGrid, Tolerances};
use crate::model::{eta_check, EtaReport, Motion};
use crate::ptsim::PtsimConfig;
use crate::scenario::{HorizonSpec, Scenario};
use crate::{Error, Result, ENGINE_VERSION};

/// Times the step is halved after a positivity warning before giving up.
pub const MAX_HALVINGS: u32 = 3;

/// Everything needed to integrate a scenario.
pub struct Prepared {
    pub scenario: Scenario,
    pub full_dim: usize,
    pub system: System,
    pub rho0: DensityMatrix,
    pub opts: EvolveOptions,
    pub horizon: Horizon,
}

pub fn prepare(sc: &Scenario) -> Result<Prepared> {
    sc.check()?;
    let idx = enumerate_basis_capped(&sc.spec, DEFAULT_DIMENSION_CAP)?;
    let full_dim = idx.len();
    let init = sc.initial.state();
    let full = System::new(idx, sc.params.clone(), sc.schedules(), sc.motion)?;
    let system = if sc.prune { full.pruned(&[init])? } else { full };
    let rho0 = DensityMatrix::pure_state(&system.idx, &init)?;
    let dt = sc.dt();
    let opts = EvolveOptions {
        dt,
        ptsim: PtsimConfig::new(sc.ptsim_depth)?,
        observables: Observable::standard(),
        classifier: sc.classifier(),
        tolerances: Tolerances::default(),
    };
    let horizon = match sc.t_end {
        HorizonSpec::Auto => Horizon::Auto(sc.auto),
        HorizonSpec::Until(t) => Horizon::Fixed(TimeGrid::covering(dt, t, sc.stride)?),
    };
    info!(
        "scenario {}: {} states ({} before pruning), dt {:e}",
        sc.name,
        system.idx.len(),
        full_dim,
        dt
    );
    Ok(Prepared {
        scenario: sc.clone(),
        full_dim,
        system,
        rho0,
        opts,
        horizon,
    })
}

/// Integrate without touching the filesystem.
pub fn simulate(sc: &Scenario) -> Result<(Prepared, SectorRun)> {
    let p = prepare(sc)?;
    let run = SectorEngine::new(&p.system, &p.opts)?.run(&p.rho0, p.horizon, sc.strategy)?;
    Ok((p, run))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub mode: &'static str,
    pub eta: f64,
    pub mu: f64,
    /// Temperature equivalent of `mu` in units of ħω/K.
    pub temperature_reduced: f64,
    pub n_max: u8,
    /// Gibbs weight above the cutoff, `mu^(n_max+1)`: how much a thermal
    /// distribution at this `mu` would lose to truncation.
    pub truncated_weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub eta: EtaReport,
    pub modes: Vec<ModeReport>,
    pub dt: f64,
    pub dt_default: f64,
    pub full_dim: usize,
    pub pruned_dim: usize,
    pub warnings: Vec<String>,
}

/// Check a scenario without running it. Hard problems are errors; soft
/// ones are listed in `warnings`.
pub fn validate(sc: &Scenario) -> Result<ValidationReport> {
    let p = prepare(sc)?;
    let params = &sc.params;
    let eta = eta_check(params);
    let mut warnings = Vec::new();
    if !eta.sc_ok {
        warnings.push(format!("eta = {} outside the weak-coupling regime", eta.eta));
    }
    let modes: Vec<ModeReport> = Mode::ALL
        .iter()
        .map(|&m| {
            let i = m.index();
            let mu = params.mu[i];
            let n_max = sc.spec.photon_max[i];
            ModeReport {
                mode: m.key(),
                eta: if params.freq[i] > 0.0 {
                    params.coupling[i] / (params.hbar * params.freq[i])
                } else {
                    0.0
                },
                mu,
                temperature_reduced: temperature_from_mu(mu, 1.0, 1.0, 1.0).unwrap_or(f64::INFINITY),
                n_max,
                truncated_weight: mu.powi(n_max as i32 + 1),
            }
        })
        .collect();
    for m in &modes {
        if m.truncated_weight > 1e-3 {
            warnings.push(format!(
                "{}: thermal weight {:.3e} above n_max = {}; confirm with the n_max convergence check",
                m.mode, m.truncated_weight, m.n_max
            ));
        }
    }
    let dt_default = params.default_dt(sc.motion);
    if sc.dt() > dt_default {
        warnings.push(format!("dt {:e} exceeds the default rule {:e}", sc.dt(), dt_default));
    }
    if sc.motion == Motion::Classical && sc.ramp_time < 100.0 * sc.dt() {
        warnings.push("ramp_time spans fewer than 100 steps".into());
    }
    for w in &warnings {
        warn!("{w}");
    }
    Ok(ValidationReport {
        scenario: sc.name.clone(),
        eta,
        modes,
        dt: sc.dt(),
        dt_default,
        full_dim: p.full_dim,
        pruned_dim: p.system.idx.len(),
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Digests {
    pub trajectory_csv: String,
    pub scenario_cfg: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub t_final: f64,
    pub final_values: Vec<(String, f64)>,
    pub plateau: Option<bool>,
    pub worst_trace_error: f64,
    pub worst_hermiticity: f64,
    pub worst_min_eigenvalue: f64,
    pub positivity_warnings: usize,
    pub full_dim: usize,
    pub pruned_dim: usize,
    pub block_sizes: Vec<usize>,
    pub notes: Vec<String>,
}

/// Manifest of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub engine_version: &'static str,
    pub scenario: String,
    pub dt: f64,
    /// Times the step was halved after positivity warnings.
    pub dt_halvings: u32,
    pub wall_time_s: f64,
    pub digests: Digests,
    pub summary: Summary,
    #[serde(skip)]
    pub dir: PathBuf,
}

impl RunRecord {
    pub fn final_value(&self, column: &str) -> Option<f64> {
        self.summary.final_values.iter().find(|(c, _)| c == column).map(|(_, v)| *v)
    }
}

pub fn format_row(t: f64, values: &[f64]) -> String {
    let mut s = format!("{t:.16e}");
    for v in values {
        s.push_str(&format!(",{v:.16e}"));
    }
    s
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// One integration attempt streaming into `csv_path`.
fn attempt(sc: &Scenario, csv_path: &Path) -> Result<(Prepared, SectorRun)> {
    let p = prepare(sc)?;
    let file = File::create(csv_path)?;
    let out = RefCell::new(BufWriter::new(file));
    let io_err: RefCell<Option<std::io::Error>> = RefCell::new(None);
    {
        let header: Vec<&str> = std::iter::once("t").chain(p.opts.observables.iter().map(|o| o.column())).collect();
        writeln!(out.borrow_mut(), "{}", header.join(","))?;
    }
    let result = {
        let sink = Box::new(|t: f64, vals: &[f64]| {
            if io_err.borrow().is_some() {
                return;
            }
            if let Err(e) = writeln!(out.borrow_mut(), "{}", format_row(t, vals)) {
                *io_err.borrow_mut() = Some(e);
            }
        });
        SectorEngine::new(&p.system, &p.opts)?
            .with_sink(sink)
            .run(&p.rho0, p.horizon, sc.strategy)
    };
    out.borrow_mut().flush()?;
    if let Some(e) = io_err.into_inner() {
        return Err(e.into());
    }
    Ok((p, result?))
}

/// Run a scenario into `dir`. Positivity warnings at the chosen step trigger
/// up to [`MAX_HALVINGS`] reruns at half the step.
pub fn run(sc: &Scenario, dir: &Path) -> Result<RunRecord> {
    fs::create_dir_all(dir)?;
    let started = Instant::now();
    let csv_path = dir.join("trajectory.csv");
    let cfg_path = dir.join("scenario.cfg");
    let mut sc = sc.clone();
    let mut halvings = 0;
    let (p, result) = loop {
        fs::write(&cfg_path, sc.to_config())?;
        let (p, r) = attempt(&sc, &csv_path)?;
        if r.trajectory.positivity_warnings == 0 || halvings == MAX_HALVINGS {
            if r.trajectory.positivity_warnings > 0 {
                warn!(
                    "{} records still below the positivity tolerance after {halvings} halvings",
                    r.trajectory.positivity_warnings
                );
            }
            break (p, r);
        }
        halvings += 1;
        let dt = sc.dt() / 2.0;
        warn!(
            "{} records below the positivity tolerance; halving dt to {dt:e}",
            r.trajectory.positivity_warnings
        );
        sc.dt = Some(dt);
    };
    let traj = &result.trajectory;
    let last = traj.rows.last().cloned().unwrap_or_default();
    let summary = Summary {
        rows: traj.rows.len(),
        t_final: traj.times.last().copied().unwrap_or(0.0),
        final_values: traj.columns.iter().cloned().zip(last).collect(),
        plateau: traj.plateau,
        worst_trace_error: traj.worst_trace_error,
        worst_hermiticity: traj.worst_hermiticity,
        worst_min_eigenvalue: traj.worst_min_eigenvalue,
        positivity_warnings: traj.positivity_warnings,
        full_dim: p.full_dim,
        pruned_dim: p.system.idx.len(),
        block_sizes: result.block_sizes.clone(),
        notes: traj.notes.clone(),
    };
    let record = RunRecord {
        engine_version: ENGINE_VERSION,
        scenario: sc.name.clone(),
        dt: sc.dt(),
        dt_halvings: halvings,
        wall_time_s: started.elapsed().as_secs_f64(),
        digests: Digests {
            trajectory_csv: sha256_hex(&fs::read(&csv_path)?),
            scenario_cfg: sha256_hex(&fs::read(&cfg_path)?),
        },
        summary,
        dir: dir.to_path_buf(),
    };
    let json = serde_json::to_string_pretty(&record).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(record)
}

/// Run `template` once per value of `axis`, each into its own
/// subdirectory of `dir`, and write `sweep.csv` with the final values.
/// Up to `jobs` runs execute concurrently.
pub fn sweep(template: &Scenario, axis: &str, values: &[String], dir: &Path, jobs: usize) -> Result<Vec<RunRecord>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let mut points = Vec::with_capacity(values.len());
    for v in values {
        let mut sc = template.clone();
        sc.set(axis, v)?;
        sc.name = format!("{}[{axis}={v}]", template.name);
        sc.check()?;
        let sub = dir.join(format!("{axis}={v}").replace(['/', ' '], "_"));
        points.push((sc, sub));
    }
    let jobs = jobs.max(1);
    let mut records: Vec<Option<Result<RunRecord>>> = (0..points.len()).map(|_| None).collect();
    for (chunk_pts, chunk_out) in points.chunks(jobs).zip(records.chunks_mut(jobs)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk_pts.iter().map(|(sc, sub)| s.spawn(move || run(sc, sub))).collect();
            for (h, slot) in handles.into_iter().zip(chunk_out.iter_mut()) {
                *slot = Some(h.join().unwrap_or_else(|_| Err(Error::InvalidParameter("sweep worker panicked".into()))));
            }
        });
    }
    let records: Vec<RunRecord> = records.into_iter().map(|r| r.unwrap()).collect::<Result<_>>()?;
    fs::create_dir_all(dir)?;
    let mut out = BufWriter::new(File::create(dir.join("sweep.csv"))?);
    let cols: Vec<String> = records[0].summary.final_values.iter().map(|(c, _)| c.clone()).collect();
    writeln!(out, "{axis},t_final,{}", cols.join(","))?;
    for (v, r) in values.iter().zip(&records) {
        let vals: Vec<f64> = r.summary.final_values.iter().map(|(_, x)| *x).collect();
        writeln!(out, "{v},{}", format_row(r.summary.t_final, &vals))?;
    }
    out.flush()?;
    Ok(records)
}

/// Final-population shifts under refinement.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// Largest change of a final population when every `n_max` is raised by one.
    pub n_max_shift: f64,
    /// Largest change when `dt` is halved.
    pub dt_shift: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Threshold on final-population shifts for accepting a truncation and step.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-3;

/// Rerun at `n_max + 1` and at `dt/2` and compare final populations.
pub fn convergence(sc: &Scenario) -> Result<ConvergenceReport> {
    let finals = |s: &Scenario| -> Result<[f64; 4]> {
        let (p, r) = simulate(s)?;
        Ok(crate::analysis::populations(&r.final_state.view(), &p.system.idx, s.classifier()))
    };
    let shift = |a: [f64; 4], b: [f64; 4]| a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    // Compare on a common fixed horizon so the refinements see the same time.
    let mut base = sc.clone();
    if base.t_end == HorizonSpec::Auto {
        let (_, r) = simulate(&base)?;
        let t = *r.trajectory.times.last().unwrap();
        base.t_end = HorizonSpec::Until(t);
        base.stride = (TimeGrid::covering(base.dt(), t, 1)?.steps() / 1024).max(1);
    }
    let reference = finals(&base)?;
    let mut more = base.clone();
    for n in more.spec.photon_max.iter_mut() {
        *n += 1;
    }
    let n_max_shift = shift(reference, finals(&more)?);
    let mut fine = base.clone();
    fine.dt = Some(base.dt() / 2.0);
    fine.stride *= 2;
    let dt_shift = shift(reference, finals(&fine)?);
    Ok(ConvergenceReport {
        n_max_shift,
        dt_shift,
        threshold: CONVERGENCE_THRESHOLD,
        passed: n_max_shift < CONVERGENCE_THRESHOLD && dt_shift < CONVERGENCE_THRESHOLD,
    })
}
