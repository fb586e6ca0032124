//! Observables, Lyapunov energies, empirical rates and strong-convergence
//! metrics computed along sampled trajectories.

use serde::Serialize;

use crate::dynamics::{Sample, Trajectory};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::prox::{moreau_gradient, tikhonov_center};
use crate::schedules::{compute_t_star_star, SystemConfig};

/// Relative round-off floor below which an energy increase is not counted.
const ROUNDOFF: f64 = 1e-12;
pub const DESCENT_VIOLATION_FRACTION: f64 = 0.01;
pub const DESCENT_VIOLATION_TOL: f64 = 1e-6;
pub const MIN_FIT_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableRow {
    pub t: f64,
    pub moreau_gap: f64,
    pub function_gap: f64,
    pub grad_norm: f64,
    pub prox_dist: f64,
    pub velocity_combo: f64,
    pub dist_to_xstar: f64,
    pub tikhonov_gap: f64,
}

struct Local {
    lambda: f64,
    b: f64,
    eps: f64,
    prox: Point,
    grad: Point,
    moreau_gap: f64,
}

fn local(cfg: &SystemConfig, s: &Sample) -> Result<Local> {
    let v = cfg.schedule.values(s.t);
    let obj = cfg.objective.as_ref();
    let prox = obj.prox(v.lambda, &s.x);
    let grad = moreau_gradient(obj, v.lambda, &s.x)?;
    let pd2 = prox.dist(&s.x).powi(2);
    let moreau_gap = obj.value(&prox) - obj.phi_star() + pd2 / (2.0 * v.lambda);
    Ok(Local {
        lambda: v.lambda,
        b: v.b,
        eps: v.eps,
        prox,
        grad,
        moreau_gap,
    })
}

/// `x' + beta grad Phi_lambda(x)`.
fn combo(cfg: &SystemConfig, s: &Sample, grad: &[f64]) -> Point {
    s.xdot.lin_comb(1.0, grad, cfg.beta)
}

/// All observables at one sample. Without Tikhonov term the regularized
/// center is replaced by its `eps -> 0` limit `x*`.
pub fn observe(cfg: &SystemConfig, s: &Sample) -> Result<ObservableRow> {
    let obj = cfg.objective.as_ref();
    let l = local(cfg, s)?;
    let x_star = obj.x_star();
    let center = if l.eps > 0.0 {
        tikhonov_center(obj, l.lambda, l.eps)?
    } else {
        x_star.clone()
    };
    Ok(ObservableRow {
        t: s.t,
        moreau_gap: l.moreau_gap,
        function_gap: obj.value(&l.prox) - obj.phi_star(),
        grad_norm: l.grad.norm(),
        prox_dist: l.prox.dist(&s.x),
        velocity_combo: combo(cfg, s, &l.grad).norm(),
        dist_to_xstar: s.x.dist(&x_star),
        tikhonov_gap: s.x.dist(&center),
    })
}

pub fn compute_observables(traj: &Trajectory) -> Result<Vec<ObservableRow>> {
    traj.samples.iter().map(|s| observe(&traj.config, s)).collect()
}

fn check_q(q: f64, alpha: f64) -> Result<()> {
    if !(2.0..=alpha - 1.0).contains(&q) {
        return Err(Error::ParameterDomain {
            name: "q",
            value: q,
            expected: "2 <= q <= alpha - 1",
        });
    }
    Ok(())
}

/// `E_q(t)`, defined for `2 <= q <= alpha - 1`.
pub fn energy_q(s: &Sample, q: f64, cfg: &SystemConfig, x_star: &[f64]) -> Result<f64> {
    check_q(q, cfg.alpha)?;
    Ok(energy_q_unchecked(s, q, cfg, x_star, &local(cfg, s)?))
}

fn energy_q_unchecked(s: &Sample, q: f64, cfg: &SystemConfig, x_star: &[f64], l: &Local) -> f64 {
    let (t, a, be) = (s.t, cfg.alpha, cfg.beta);
    let d = s.x.sub(x_star);
    let w = combo(cfg, s, &l.grad);
    let v = d.lin_comb(q, &w, t);
    (t * t * l.b - be * (q + 2.0 - a) * t) * l.moreau_gap
        + 0.5 * t * t * l.eps * s.x.norm_sq()
        + 0.5 * v.norm_sq()
        + 0.5 * q * (a - 1.0 - q) * d.norm_sq()
}

/// `E_{p,q}(t)` for `p, q >= 0`.
pub fn energy_pq(s: &Sample, p: f64, q: f64, cfg: &SystemConfig, x_star: &[f64]) -> Result<f64> {
    for (name, val) in [("p", p), ("q", q)] {
        if !(val >= 0.0) {
            return Err(Error::ParameterDomain {
                name,
                value: val,
                expected: ">= 0",
            });
        }
    }
    let l = local(cfg, s)?;
    let (t, a, be) = (s.t, cfg.alpha, cfg.beta);
    let v = s.x.sub(x_star).lin_comb(q, &combo(cfg, s, &l.grad), t);
    let xs2: f64 = x_star.iter().map(|c| c * c).sum();
    Ok(t.powf(p + 1.0) * (t * l.b + be * (a - p - q - 2.0)) * l.moreau_gap
        + 0.5 * l.eps * t.powf(p + 2.0) * (s.x.norm_sq() - xs2)
        + 0.5 * t.powf(p) * v.norm_sq())
}

/// The exponents `(p, q) = ((alpha-3)/3, 2 alpha/3)`.
pub fn canonical_pq(alpha: f64) -> (f64, f64) {
    ((alpha - 3.0) / 3.0, 2.0 * alpha / 3.0)
}

/// `psi(t)` for `2 <= q <= alpha - 1`.
pub fn psi(s: &Sample, q: f64, cfg: &SystemConfig, _x_star: &[f64]) -> Result<f64> {
    check_q(q, cfg.alpha)?;
    let l = local(cfg, s)?;
    let t = s.t;
    let w = combo(cfg, s, &l.grad);
    Ok((t * t * l.b - cfg.beta * (q + 2.0 - cfg.alpha) * t) * l.moreau_gap
        + 0.5 * t * t * l.eps * s.x.norm_sq()
        + 0.5 * t * t * w.norm_sq())
}

/// `E_q - q t <x' + beta grad, x - x*> - q(alpha-1)/2 ||x - x*||^2`, which must equal `psi`.
pub fn psi_via_energy(s: &Sample, q: f64, cfg: &SystemConfig, x_star: &[f64]) -> Result<f64> {
    check_q(q, cfg.alpha)?;
    let l = local(cfg, s)?;
    let e = energy_q_unchecked(s, q, cfg, x_star, &l);
    let d = s.x.sub(x_star);
    let w = combo(cfg, s, &l.grad);
    Ok(e - q * s.t * w.dot(&d) - 0.5 * q * (cfg.alpha - 1.0) * d.norm_sq())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRow {
    pub t: f64,
    pub energy_q: f64,
    pub energy_pq: f64,
    pub psi: f64,
    pub v_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub q: f64,
    pub p: f64,
    pub q_pq: f64,
    pub rows: Vec<EnergyRow>,
}

/// Energies along the trajectory with `E_q` at `q` and `E_{p,q}` at the canonical exponents.
pub fn energy_trace(traj: &Trajectory, q: f64) -> Result<EnergyTrace> {
    let cfg = &traj.config;
    check_q(q, cfg.alpha)?;
    let x_star = cfg.objective.x_star();
    let (p, q_pq) = canonical_pq(cfg.alpha);
    let p = p.max(0.0);
    let rows = traj
        .samples
        .iter()
        .map(|s| {
            let l = local(cfg, s)?;
            let v = s.x.sub(&x_star).lin_comb(q, &combo(cfg, s, &l.grad), s.t);
            Ok(EnergyRow {
                t: s.t,
                energy_q: energy_q_unchecked(s, q, cfg, &x_star, &l),
                energy_pq: energy_pq(s, p, q_pq, cfg, &x_star)?,
                psi: psi(s, q, cfg, &x_star)?,
                v_norm: v.norm(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(EnergyTrace { q, p, q_pq, rows })
}

/// The choice `q = alpha - 1`, or `None` when `alpha < 3` leaves no admissible `q`.
pub fn default_energy_q(alpha: f64) -> Option<f64> {
    (alpha - 1.0 >= 2.0).then_some(alpha - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentReport {
    pub q: f64,
    pub a: f64,
    pub t_star_star: f64,
    pub intervals: usize,
    pub violations: usize,
    pub max_excess: f64,
    pub worst_t: Option<f64>,
    pub passed: bool,
}

/// Discrete check of `dE_q/dt <= (alpha-1) t eps(t) ||x*||^2 / 2` after `t**`.
pub fn check_energy_descent(traj: &Trajectory, q: f64, a: f64, cfg: &SystemConfig) -> Result<DescentReport> {
    check_q(q, cfg.alpha)?;
    let tss = compute_t_star_star(cfg, q, a)?;
    let end = traj.last().t;
    if end <= tss {
        return Err(Error::InsufficientHorizon {
            end,
            t_star_star: tss,
        });
    }
    let x_star = cfg.objective.x_star();
    let xs2 = x_star.norm_sq();
    let tail: Vec<&Sample> = traj.samples.iter().filter(|s| s.t >= tss).collect();
    let energies: Vec<f64> = tail.iter().map(|s| energy_q(s, q, cfg, &x_star)).collect::<Result<_>>()?;
    let (mut violations, mut max_excess, mut worst_t) = (0usize, 0.0f64, None);
    let mut max_scaled = 0.0f64;
    for i in 0..tail.len().saturating_sub(1) {
        let (t0, t1) = (tail[i].t, tail[i + 1].t);
        let bound = 0.5 * (cfg.alpha - 1.0) * t0 * cfg.schedule.values(t0).eps * xs2;
        let excess = energies[i + 1] - energies[i] - bound * (t1 - t0);
        let scale = energies[i].abs().max(energies[i + 1].abs()).max(1.0);
        if excess > ROUNDOFF * scale {
            violations += 1;
            if excess / scale > max_scaled {
                max_scaled = excess / scale;
                max_excess = excess;
                worst_t = Some(t0);
            }
        }
    }
    let intervals = tail.len().saturating_sub(1);
    let passed =
        violations as f64 <= DESCENT_VIOLATION_FRACTION * intervals as f64 && max_scaled <= DESCENT_VIOLATION_TOL;
    Ok(DescentReport {
        q,
        a,
        t_star_star: tss,
        intervals,
        violations,
        max_excess,
        worst_t,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub quantity: String,
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub theoretical_slope: f64,
    /// `theoretical_slope - slope`; nonnegative means at least the predicted decay.
    pub margin: f64,
    pub points: usize,
    pub warning: Option<String>,
}

/// Least-squares slope of `log value` against `log t` over `window`.
///
/// A nonpositive value ends the window there (the quantity has reached
/// round-off), with a warning.
pub fn fit_rate_slope(quantity: &str, series: &[(f64, f64)], window: (f64, f64), theoretical_slope: f64) -> Result<RateFit> {
    let mut pts = Vec::new();
    let mut warning = None;
    for &(t, v) in series.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1) {
        if !(v > 0.0) || !v.is_finite() {
            warning = Some(format!("window truncated at t = {t}: nonpositive value"));
            break;
        }
        pts.push((t.ln(), v.ln()));
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points in window for `{quantity}`, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    let hi = pts.last().map(|p| p.0.exp()).unwrap_or(window.1);
    Ok(RateFit {
        quantity: quantity.to_string(),
        window: (pts[0].0.exp(), hi),
        slope,
        intercept: my - slope * mx,
        theoretical_slope,
        margin: theoretical_slope - slope,
        points: pts.len(),
        warning,
    })
}

/// The last decade `[T/10, T]` of a trajectory ending at `T`.
pub fn tail_window(traj: &Trajectory) -> (f64, f64) {
    let end = traj.last().t;
    ((end / 10.0).max(traj.samples[0].t), end)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BallCase {
    /// `||x(t)|| >= ||x*||` at every sample.
    Outside,
    /// `||x(t)|| < ||x*||` at every sample.
    Inside,
    /// Both inside and outside the ball.
    Crossing,
}

impl BallCase {
    pub fn label(self) -> &'static str {
        match self {
            BallCase::Outside => "I",
            BallCase::Inside => "II",
            BallCase::Crossing => "III",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongMetrics {
    pub final_dist_to_xstar: f64,
    pub running_min_dist: f64,
    pub final_tikhonov_gap: f64,
    pub ball_crossings: usize,
    pub case: BallCase,
}

pub fn strong_convergence_metrics(traj: &Trajectory, cfg: &SystemConfig) -> Result<StrongMetrics> {
    let x_star = cfg.objective.x_star();
    let r = x_star.norm();
    let mut running_min = f64::INFINITY;
    let mut crossings = 0;
    let (mut inside_seen, mut outside_seen) = (false, false);
    let mut prev: Option<bool> = None;
    for s in &traj.samples {
        running_min = running_min.min(s.x.dist(&x_star));
        let inside = s.x.norm() < r;
        inside_seen |= inside;
        outside_seen |= !inside;
        if prev.is_some_and(|p| p != inside) {
            crossings += 1;
        }
        prev = Some(inside);
    }
    let last = traj.last();
    let row = observe(cfg, last)?;
    let case = match (inside_seen, outside_seen) {
        (true, true) => BallCase::Crossing,
        (true, false) => BallCase::Inside,
        _ => BallCase::Outside,
    };
    Ok(StrongMetrics {
        final_dist_to_xstar: row.dist_to_xstar,
        running_min_dist: running_min,
        final_tikhonov_gap: row.tikhonov_gap,
        ball_crossings: crossings,
        case,
    })
}

/// Running maximum of `t^2 b(t) (Phi_lambda(x) - Phi*)`, and its relative
/// increase over the last decade.
pub fn scaled_gap_running_max(traj: &Trajectory) -> Result<(f64, f64)> {
    let cfg = &traj.config;
    let end = traj.last().t;
    let (mut max_all, mut max_before) = (0.0f64, 0.0f64);
    for s in &traj.samples {
        let l = local(cfg, s)?;
        let v = s.t * s.t * l.b * l.moreau_gap;
        max_all = max_all.max(v);
        if s.t <= end / 10.0 {
            max_before = max_before.max(v);
        }
    }
    let growth = if max_before > 0.0 { max_all / max_before - 1.0 } else { 0.0 };
    Ok((max_all, growth))
}
