//! Running configurations: single runs, condition checks and sweeps.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::RunConfig;
use super::output::{svg_chart, thin_rows, write_csv_file, Axes, CsvRow, Series};
use crate::diagnostics::{
    default_energy_q, energy_q, fit_rate_slope, observe, psi, scaled_gap_running_max, strong_convergence_metrics,
    tail_window, DescentReport, ObservableRow, RateFit, StrongMetrics, check_energy_descent,
};
use crate::dynamics::{integrate, StepStats, Trajectory};
use crate::error::{Error, Result};
use crate::parallel::{self, Execution};
use crate::schedules::{check_setting, default_grid, geometric_grid, ConditionReport, LambdaForm, Setting, SystemConfig};

/// Observables written into the sweep comparison table.
pub const TABLE_OBSERVABLES: [&str; 4] = ["moreau_gap", "grad_norm", "velocity_combo", "dist_to_xstar"];
const TABLE_POINTS: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub config: String,
    pub assumptions: Vec<String>,
    pub conditions: ConditionReport,
    pub final_observables: ObservableRow,
    pub final_x: Vec<f64>,
    pub rate_fits: Vec<RateFit>,
    pub fit_errors: Vec<String>,
    pub energy_q: Option<f64>,
    pub descent: Option<DescentReport>,
    pub descent_note: Option<String>,
    pub strong: StrongMetrics,
    pub scaled_gap_max: f64,
    pub scaled_gap_last_decade_growth: f64,
    pub stats: StepStats,
    pub samples: usize,
    pub wall_time_s: f64,
}

pub struct RunOutcome {
    pub config: RunConfig,
    pub trajectory: Trajectory,
    pub rows: Vec<CsvRow>,
    pub summary: RunSummary,
}

impl RunOutcome {
    pub fn series(&self, name: &str) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.observable(name).unwrap_or(f64::NAN))).collect()
    }

    pub fn fit(&self, quantity: &str) -> Option<&RateFit> {
        self.summary.rate_fits.iter().find(|f| f.quantity == quantity)
    }
}

/// Theoretical log-log slopes of `moreau_gap`, `velocity_combo`, `grad_norm`.
pub fn theoretical_slopes(rc: &RunConfig) -> [(&'static str, f64); 3] {
    let n = rc.schedule.n;
    let l = match rc.schedule.lambda {
        LambdaForm::Power { l } => l,
        _ => 0.0,
    };
    [
        ("moreau_gap", -(2.0 + n)),
        ("velocity_combo", -1.0),
        ("grad_norm", -(1.0 + 0.5 * n + 0.5 * l)),
    ]
}

fn rows_for(cfg: &SystemConfig, traj: &Trajectory, q: Option<f64>, exec: Execution) -> Result<Vec<CsvRow>> {
    let x_star = cfg.objective.x_star();
    let rows: Vec<Result<CsvRow>> = parallel::map(exec, &traj.samples, |s| {
        let (eq, ps) = match q {
            Some(q) => (energy_q(s, q, cfg, &x_star)?, psi(s, q, cfg, &x_star)?),
            None => (f64::NAN, f64::NAN),
        };
        Ok(CsvRow {
            t: s.t,
            x: s.x.to_vec(),
            xdot: s.xdot.to_vec(),
            obs: observe(cfg, s)?,
            energy_q: eq,
            psi: ps,
        })
    });
    rows.into_iter().collect()
}

/// Builds, checks and integrates one configuration and computes every diagnostic.
pub fn run_config(rc: &RunConfig, exec: Execution) -> Result<RunOutcome> {
    let start = Instant::now();
    let cfg = rc.build()?;
    rc.integrator.validate()?;
    let conditions = check_setting(&cfg, rc.setting, &default_grid(cfg.t0()));
    let traj = integrate(&cfg, &rc.integrator)?;
    let q = rc.q.or_else(|| default_energy_q(rc.alpha));
    let rows = rows_for(&cfg, &traj, q, exec)?;

    let window = tail_window(&traj);
    let (mut rate_fits, mut fit_errors) = (Vec::new(), Vec::new());
    for (name, slope) in theoretical_slopes(rc) {
        let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.observable(name).unwrap_or(f64::NAN))).collect();
        match fit_rate_slope(name, &series, window, slope) {
            Ok(f) => rate_fits.push(f),
            Err(e) => fit_errors.push(format!("{name}: {e}")),
        }
    }

    let a = rc.a.or_else(|| conditions.feasible_a.and_then(|i| i.pick()));
    let (descent, descent_note) = match (q, a) {
        (Some(q), Some(a)) => match check_energy_descent(&traj, q, a, &cfg) {
            Ok(d) => (Some(d), None),
            Err(e) => (None, Some(e.to_string())),
        },
        (None, _) => (None, Some(format!("no admissible q for alpha = {}", rc.alpha))),
        (_, None) => (None, Some("no feasible a".to_string())),
    };
    let strong = strong_convergence_metrics(&traj, &cfg)?;
    let (scaled_gap_max, growth) = scaled_gap_running_max(&traj)?;
    let last = rows.last().ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    let summary = RunSummary {
        name: rc.name.clone(),
        config: rc.to_text(),
        assumptions: rc.assumptions.clone(),
        conditions,
        final_observables: last.obs,
        final_x: last.x.clone(),
        rate_fits,
        fit_errors,
        energy_q: q,
        descent,
        descent_note,
        strong,
        scaled_gap_max,
        scaled_gap_last_decade_growth: growth,
        stats: traj.stats,
        samples: traj.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome {
        config: rc.clone(),
        trajectory: traj,
        rows,
        summary,
    })
}

/// Paths of the files written for one run.
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub svg: Vec<PathBuf>,
}

pub fn write_run(out: &RunOutcome, dir: &Path) -> Result<RunFiles> {
    std::fs::create_dir_all(dir)?;
    let name = &out.config.name;
    let csv = dir.join(format!("{name}.csv"));
    write_csv_file(&csv, &thin_rows(out.rows.clone(), out.config.max_rows))?;
    let summary = dir.join(format!("{name}.summary.json"));
    let json = serde_json::to_string_pretty(&out.summary).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&summary, json)?;
    let mut svg = Vec::new();
    if out.config.svg {
        let rates: Vec<Series> = ["moreau_gap", "grad_norm", "velocity_combo"]
            .iter()
            .map(|&o| Series {
                label: o.to_string(),
                points: out.series(o),
            })
            .collect();
        let p = dir.join(format!("{name}.rates.svg"));
        std::fs::write(&p, svg_chart(&format!("{name}: observables"), Axes::LogLog, &rates))?;
        svg.push(p);
        let traj: Vec<Series> = (0..out.trajectory.config.dim())
            .map(|i| Series {
                label: format!("x_{i}"),
                points: out.rows.iter().map(|r| (r.t, r.x[i])).collect(),
            })
            .collect();
        let p = dir.join(format!("{name}.trajectory.svg"));
        std::fs::write(&p, svg_chart(&format!("{name}: x(t)"), Axes::Linear, &traj))?;
        svg.push(p);
    }
    Ok(RunFiles { csv, summary, svg })
}

/// Validates every configuration, then runs them concurrently.
pub fn run_all(configs: &[RunConfig], exec: Execution) -> Result<Vec<RunOutcome>> {
    for c in configs {
        c.build().map_err(|e| prefix(&c.name, e))?;
        c.integrator.validate().map_err(|e| prefix(&c.name, e))?;
    }
    let results = parallel::map(exec, configs, |c| run_config(c, Execution::Sequential));
    results.into_iter().collect()
}

fn prefix(name: &str, e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Validation(format!("{name}: {m}")),
        Error::Config(m) => Error::Config(format!("{name}: {m}")),
        other => other,
    }
}

pub fn check_config(rc: &RunConfig, setting: Option<Setting>) -> Result<ConditionReport> {
    let cfg = rc.build()?;
    Ok(check_setting(&cfg, setting.unwrap_or(rc.setting), &default_grid(cfg.t0())))
}

/// Expands a sweep into one configuration per value.
pub fn sweep_configs(base: &RunConfig, param: &str, values: &[f64]) -> Result<Vec<RunConfig>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            c.set_sweep_param(param, v)?;
            c.name = format!("{}_{param}{v}", base.name);
            c.build().map_err(|e| prefix(&c.name, e))?;
            Ok(c)
        })
        .collect()
}

pub struct SweepResult {
    pub param: String,
    pub values: Vec<f64>,
    pub runs: Vec<RunOutcome>,
}

impl SweepResult {
    /// Each run's observable at its final sample.
    pub fn final_values(&self, observable: &str) -> Vec<f64> {
        self.runs
            .iter()
            .map(|r| r.rows.last().and_then(|row| row.observable(observable)).unwrap_or(f64::NAN))
            .collect()
    }

    /// Geometric grid shared by all runs.
    pub fn shared_grid(&self) -> Vec<f64> {
        let lo = self.runs.iter().map(|r| r.rows[0].t).fold(f64::NEG_INFINITY, f64::max);
        let hi = self.runs.iter().map(|r| r.rows.last().map_or(lo, |x| x.t)).fold(f64::INFINITY, f64::min);
        geometric_grid(lo, hi, TABLE_POINTS)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut long = csv::Writer::from_path(dir.join("sweep_long.csv"))?;
        let mut header = vec![self.param.clone()];
        header.extend(super::output::csv_header(self.runs[0].rows[0].x.len()));
        long.write_record(&header)?;
        for (v, run) in self.values.iter().zip(&self.runs) {
            for r in thin_rows(run.rows.clone(), run.config.max_rows) {
                let mut rec = vec![super::output::fmt_f64(*v), super::output::fmt_f64(r.t)];
                rec.extend(r.x.iter().chain(&r.xdot).map(|&a| super::output::fmt_f64(a)));
                rec.extend(
                    super::output::OBSERVABLE_COLUMNS
                        .iter()
                        .map(|c| super::output::fmt_f64(r.observable(c).unwrap_or(f64::NAN))),
                );
                long.write_record(&rec)?;
            }
        }
        long.flush()?;

        let grid = self.shared_grid();
        let mut table = csv::Writer::from_path(dir.join("sweep_table.csv"))?;
        let mut header = vec!["t".to_string()];
        for o in TABLE_OBSERVABLES {
            for v in &self.values {
                header.push(format!("{o}[{}={v}]", self.param));
            }
        }
        table.write_record(&header)?;
        for &t in &grid {
            let mut rec = vec![super::output::fmt_f64(t)];
            for o in TABLE_OBSERVABLES {
                for run in &self.runs {
                    rec.push(super::output::fmt_f64(interpolate(&run.series(o), t)));
                }
            }
            table.write_record(&rec)?;
        }
        table.flush()?;
        Ok(())
    }

    pub fn summary_table(&self) -> String {
        let mut s = format!("{:>10}", self.param);
        for o in TABLE_OBSERVABLES {
            s.push_str(&format!(" {o:>16}"));
        }
        s.push_str(&format!(" {:>10}\n", "gap slope"));
        for (v, run) in self.values.iter().zip(&self.runs) {
            s.push_str(&format!("{v:>10}"));
            for o in TABLE_OBSERVABLES {
                let last = run.rows.last().and_then(|r| r.observable(o)).unwrap_or(f64::NAN);
                s.push_str(&format!(" {last:>16.6e}"));
            }
            let slope = run.fit("moreau_gap").map_or(f64::NAN, |f| f.slope);
            s.push_str(&format!(" {slope:>10.3}\n"));
        }
        s
    }
}

/// Linear interpolation in `t`; clamps outside the sampled range.
pub fn interpolate(series: &[(f64, f64)], t: f64) -> f64 {
    let i = series.partition_point(|p| p.0 < t);
    if i == 0 {
        return series.first().map_or(f64::NAN, |p| p.1);
    }
    if i >= series.len() {
        return series.last().map_or(f64::NAN, |p| p.1);
    }
    let ((t0, v0), (t1, v1)) = (series[i - 1], series[i]);
    if t1 == t0 {
        v1
    } else {
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Runs a sweep; every configuration is validated before any is integrated.
pub fn run_sweep(base: &RunConfig, param: &str, values: &[f64], exec: Execution) -> Result<SweepResult> {
    let configs = sweep_configs(base, param, values)?;
    let runs = run_all(&configs, exec)?;
    Ok(SweepResult {
        param: param.to_string(),
        values: values.to_vec(),
        runs,
    })
}
