//! First-order reformulations of the second-order system and their numerical
//! integration.
//!
//! For `beta > 0` the auxiliary variable is
//! `y = -beta (x' + beta grad Phi_lambda(x)) + (b - alpha beta / t) x`, which
//! removes the time derivative of the envelope gradient from the right-hand
//! side. For `beta = 0` it is simply `y = x'`.

pub mod rk;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::point::Point;
use crate::prox::moreau_gradient;
use crate::schedules::SystemConfig;

/// Norm of `x` beyond which integration is aborted as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub x: Point,
    pub aux: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Point,
    pub aux: Point,
    pub xdot: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub max_step: f64,
    pub min_step: f64,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed {
        step: f64,
    },
    Rk45Adaptive {
        rtol: f64,
        atol: f64,
        /// `None` picks a starting step automatically.
        initial_step: Option<f64>,
        min_step: f64,
        max_step: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub method: Method,
    pub sample_stride: usize,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            method: Method::Rk45Adaptive {
                rtol: 1e-8,
                atol: 1e-10,
                initial_step: None,
                min_step: 1e-12,
                max_step: f64::INFINITY,
            },
            sample_stride: 1,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn rk4(step: f64) -> Self {
        IntegratorSettings {
            method: Method::Rk4Fixed { step },
            ..Default::default()
        }
    }

    pub fn rk45(rtol: f64, atol: f64) -> Self {
        let mut s = IntegratorSettings::default();
        if let Method::Rk45Adaptive { rtol: r, atol: a, .. } = &mut s.method {
            *r = rtol;
            *a = atol;
        }
        s
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        if let Method::Rk45Adaptive { max_step, .. } = &mut self.method {
            *max_step = h;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_stride == 0 {
            return Err(Error::Validation("sample_stride must be >= 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Validation("max_steps must be >= 1".into()));
        }
        match self.method {
            Method::Rk4Fixed { step } => positive("step", step).map(|_| ()),
            Method::Rk45Adaptive {
                rtol,
                atol,
                initial_step,
                min_step,
                max_step,
            } => {
                positive("rtol", rtol)?;
                positive("atol", atol)?;
                positive("min_step", min_step)?;
                if let Some(h) = initial_step {
                    positive("initial_step", h)?;
                }
                if !(max_step >= min_step) {
                    return Err(Error::Validation("max_step must be >= min_step".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub config: SystemConfig,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }
}

fn lambda_checked(cfg: &SystemConfig, t: f64) -> Result<crate::schedules::ScheduleValues> {
    let v = cfg.schedule.values(t);
    if !(v.lambda >= cfg.lambda_floor) {
        return Err(Error::Validation(format!(
            "lambda({t}) = {} below lambda_0 = {}",
            v.lambda, cfg.lambda_floor
        )));
    }
    Ok(v)
}

fn check_dims(cfg: &SystemConfig, x: &[f64], y: &[f64]) -> Result<()> {
    let m = cfg.dim();
    for len in [x.len(), y.len()] {
        if len != m {
            return Err(Error::DimensionMismatch { expected: m, got: len });
        }
    }
    Ok(())
}

/// Right-hand side of the reformulation for `beta > 0`.
pub fn rhs_beta_positive(cfg: &SystemConfig, t: f64, x: &[f64], y: &[f64]) -> Result<(Point, Point)> {
    if !(cfg.beta > 0.0) {
        return Err(Error::WrongReformulation("rhs_beta_positive requires beta > 0"));
    }
    check_dims(cfg, x, y)?;
    let (a, be) = (cfg.alpha, cfg.beta);
    let v = lambda_checked(cfg, t)?;
    let g = moreau_gradient(cfg.objective.as_ref(), v.lambda, x)?;
    let cx = a / t - v.b / be;
    let xdot = (0..x.len()).map(|i| -be * g[i] - cx * x[i] - y[i] / be).collect();
    let k = v.b_dot + a * be / (t * t) + be * v.eps + v.b * v.b / be - a * v.b / t;
    let ydot = (0..x.len()).map(|i| k * x[i] - v.b / be * y[i]).collect();
    Ok((Point::new(xdot), Point::new(ydot)))
}

/// Right-hand side of the reformulation for `beta = 0`.
pub fn rhs_beta_zero(cfg: &SystemConfig, t: f64, x: &[f64], y: &[f64]) -> Result<(Point, Point)> {
    if cfg.beta != 0.0 {
        return Err(Error::WrongReformulation("rhs_beta_zero requires beta = 0"));
    }
    check_dims(cfg, x, y)?;
    let v = lambda_checked(cfg, t)?;
    let g = moreau_gradient(cfg.objective.as_ref(), v.lambda, x)?;
    let ydot = (0..x.len())
        .map(|i| -cfg.alpha / t * y[i] - v.b * g[i] - v.eps * x[i])
        .collect();
    Ok((Point::from(y), Point::new(ydot)))
}

/// Auxiliary variable at `t` for position `x` and velocity `xdot`.
pub fn aux_from_velocity(cfg: &SystemConfig, t: f64, x: &[f64], xdot: &[f64]) -> Result<Point> {
    if cfg.beta == 0.0 {
        return Ok(Point::from(xdot));
    }
    let be = cfg.beta;
    let v = lambda_checked(cfg, t)?;
    let g = moreau_gradient(cfg.objective.as_ref(), v.lambda, x)?;
    let cx = v.b - cfg.alpha * be / t;
    Ok((0..x.len()).map(|i| -be * (xdot[i] + be * g[i]) + cx * x[i]).collect())
}

/// Velocity reconstructed from the algebraic relation of the active reformulation.
pub fn velocity_from_aux(cfg: &SystemConfig, t: f64, x: &[f64], y: &[f64]) -> Result<Point> {
    if cfg.beta == 0.0 {
        return Ok(Point::from(y));
    }
    Ok(rhs_beta_positive(cfg, t, x, y)?.0)
}

fn split(z: &[f64]) -> (&[f64], &[f64]) {
    z.split_at(z.len() / 2)
}

fn flat_rhs(cfg: &SystemConfig, t: f64, z: &[f64]) -> Result<Vec<f64>> {
    let (x, y) = split(z);
    let (dx, dy) = if cfg.beta > 0.0 {
        rhs_beta_positive(cfg, t, x, y)?
    } else {
        rhs_beta_zero(cfg, t, x, y)?
    };
    let mut out = dx.into_inner();
    out.extend_from_slice(&dy);
    Ok(out)
}

fn make_sample(cfg: &SystemConfig, t: f64, z: &[f64]) -> Result<Sample> {
    let (x, y) = split(z);
    Ok(Sample {
        t,
        x: Point::from(x),
        aux: Point::from(y),
        xdot: velocity_from_aux(cfg, t, x, y)?,
    })
}

fn diverged(z: &[f64]) -> bool {
    let (x, _) = split(z);
    let n2: f64 = x.iter().map(|v| v * v).sum();
    !z.iter().all(|v| v.is_finite()) || n2.sqrt() > DIVERGENCE_NORM
}

/// Integrates the system on `[t0, horizon]`.
pub fn integrate(cfg: &SystemConfig, settings: &IntegratorSettings) -> Result<Trajectory> {
    cfg.validate()?;
    settings.validate()?;
    let t0 = cfg.t0();
    let t_end = cfg.horizon;
    let aux0 = aux_from_velocity(cfg, t0, &cfg.x0, &cfg.xdot0)?;
    let mut z: Vec<f64> = cfg.x0.iter().chain(aux0.iter()).copied().collect();
    let mut t = t0;
    let mut samples = vec![make_sample(cfg, t0, &z)?];
    let mut stats = StepStats {
        min_step: f64::INFINITY,
        ..Default::default()
    };
    let evals = std::cell::Cell::new(0usize);
    let f = |t: f64, z: &[f64]| {
        evals.set(evals.get() + 1);
        flat_rhs(cfg, t, z)
    };
    let record = |stats: &mut StepStats, h: f64| {
        stats.accepted += 1;
        stats.max_step = stats.max_step.max(h);
        stats.min_step = stats.min_step.min(h);
    };
    let stride = settings.sample_stride;

    match settings.method {
        Method::Rk4Fixed { step } => {
            let n = ((t_end - t0) / step).ceil().max(1.0) as usize;
            if n > settings.max_steps {
                return Err(Error::Validation(format!("{n} fixed steps exceed max_steps")));
            }
            for k in 1..=n {
                let t_next = if k == n { t_end } else { t0 + k as f64 * step };
                let h = t_next - t;
                let z_new = rk::rk4_step(&f, t, &z, h)?;
                if diverged(&z_new) {
                    return Err(Error::Divergence { last_good_t: t });
                }
                z = z_new;
                t = t_next;
                record(&mut stats, h);
                if k % stride == 0 || k == n {
                    samples.push(make_sample(cfg, t, &z)?);
                }
            }
        }
        Method::Rk45Adaptive {
            rtol,
            atol,
            initial_step,
            min_step,
            max_step,
        } => {
            let h_max = max_step.min(t_end - t0);
            let mut f0 = f(t, &z)?;
            let mut h = match initial_step {
                Some(h) => h.min(h_max),
                None => rk::initial_step(&f, t, &z, &f0, rtol, atol, h_max)?,
            }
            .max(min_step);
            let mut steps = 0usize;
            while t < t_end {
                if steps >= settings.max_steps {
                    return Err(Error::Divergence { last_good_t: t });
                }
                let last = t + h >= t_end || t_end - (t + h) < 1e-12 * t_end;
                let h_try = if last { t_end - t } else { h };
                let step = rk::dopri_step(&f, t, &z, &f0, h_try, rtol, atol)?;
                let forced = h_try <= min_step;
                if step.err <= 1.0 || forced {
                    if diverged(&step.y) {
                        return Err(Error::Divergence { last_good_t: t });
                    }
                    t = if last { t_end } else { t + h_try };
                    z = step.y;
                    f0 = step.f_new;
                    steps += 1;
                    record(&mut stats, h_try);
                    if steps % stride == 0 || t >= t_end {
                        samples.push(make_sample(cfg, t, &z)?);
                    }
                    let fac = if step.err == 0.0 { 5.0 } else { (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !last {
                        h = (h_try * fac).clamp(min_step, h_max);
                    }
                } else {
                    stats.rejected += 1;
                    let fac = (0.9 * step.err.powf(-0.2)).clamp(0.1, 1.0);
                    h = (h_try * fac).max(min_step);
                }
            }
        }
    }
    stats.rhs_evaluations = evals.get();
    Ok(Trajectory {
        samples,
        config: cfg.clone(),
        stats,
    })
}

/// Three-point derivative weights on a nonuniform stencil `(t-h1, t, t+h2)`.
fn first_derivative_weights(h1: f64, h2: f64) -> [f64; 3] {
    [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))]
}

fn second_derivative_weights(h1: f64, h2: f64) -> [f64; 3] {
    [2.0 / (h1 * (h1 + h2)), -2.0 / (h1 * h2), 2.0 / (h2 * (h1 + h2))]
}

/// Maximum over interior samples of the residual of the original
/// second-order equation, with `x''` and `d/dt grad Phi_lambda(x)` from
/// three-point finite differences.
pub fn residual_second_order(traj: &Trajectory, cfg: &SystemConfig) -> Result<f64> {
    let s = &traj.samples;
    if s.len() < 5 {
        return Err(Error::InsufficientData(format!("{} samples, need at least 5", s.len())));
    }
    let obj = cfg.objective.as_ref();
    let grads: Vec<Point> = s
        .iter()
        .map(|p| moreau_gradient(obj, cfg.schedule.values(p.t).lambda, &p.x))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for i in 1..s.len() - 1 {
        let (h1, h2) = (s[i].t - s[i - 1].t, s[i + 1].t - s[i].t);
        let w1 = first_derivative_weights(h1, h2);
        let w2 = second_derivative_weights(h1, h2);
        let t = s[i].t;
        let v = cfg.schedule.values(t);
        let mut r2 = 0.0;
        for j in 0..s[i].x.dim() {
            let xdd = w2[0] * s[i - 1].x[j] + w2[1] * s[i].x[j] + w2[2] * s[i + 1].x[j];
            let gd = w1[0] * grads[i - 1][j] + w1[1] * grads[i][j] + w1[2] * grads[i + 1][j];
            let r = xdd + cfg.alpha / t * s[i].xdot[j] + cfg.beta * gd + v.b * grads[i][j] + v.eps * s[i].x[j];
            r2 += r * r;
        }
        worst = worst.max(r2.sqrt());
    }
    Ok(worst)
}
