//! Time-dependent parameters `lambda(t)`, `b(t)`, `eps(t)` with derivatives,
//! the system configuration, and checkers for the rate and strong-convergence
//! assumptions.

pub mod conditions;
pub mod monomial;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{positive, Error, Result};
use crate::point::Point;
use crate::prox::ObjectiveRef;

pub use conditions::{
    alpha3_report, check_alpha3_conditions, check_fast_rate_conditions, check_setting, check_strong_conv_conditions,
    compute_t_star_star, default_grid, fast_rate_report, strong_conv_report, suggest_t0, suggest_t0_strong,
    ConditionReport, Interval, Setting, Verdict,
};
use monomial::Monomials;

/// Shape of `lambda(t)` within the polynomial family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum LambdaForm {
    /// `lambda(t) = t^l`
    Power { l: f64 },
    /// `lambda(t) = 1 - t^{-l}`
    Bounded { l: f64 },
    /// `lambda(t) = c`
    Constant { c: f64 },
}

/// `b(t) = b t^n`, `eps(t) = eps / t^d`, plus a `lambda` form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyParams {
    pub b_coeff: f64,
    pub n: f64,
    /// Zero switches the Tikhonov term off.
    pub eps_coeff: f64,
    pub d: f64,
    pub lambda: LambdaForm,
}

impl PolyParams {
    pub fn new(b_coeff: f64, n: f64, eps_coeff: f64, d: f64, lambda: LambdaForm) -> Self {
        PolyParams {
            b_coeff,
            n,
            eps_coeff,
            d,
            lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("b_coeff", self.b_coeff)?;
        if !(self.n >= 0.0 && self.n.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "n",
                value: self.n,
                expected: "finite and >= 0",
            });
        }
        if !(self.eps_coeff >= 0.0 && self.eps_coeff.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "eps_coeff",
                value: self.eps_coeff,
                expected: "finite and >= 0",
            });
        }
        positive("d", self.d)?;
        match self.lambda {
            LambdaForm::Power { l } | LambdaForm::Bounded { l } if !(l >= 0.0 && l.is_finite()) => {
                Err(Error::ParameterDomain {
                    name: "l",
                    value: l,
                    expected: "finite and >= 0",
                })
            }
            LambdaForm::Bounded { l } if l == 0.0 => Err(Error::ParameterDomain {
                name: "l",
                value: l,
                expected: "> 0 for the bounded form 1 - t^-l",
            }),
            LambdaForm::Constant { c } => positive("lambda", c).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn has_tikhonov(&self) -> bool {
        self.eps_coeff > 0.0
    }

    /// `b(t)` as monomials.
    pub fn b_mono(&self) -> Monomials {
        Monomials::term(self.b_coeff, self.n)
    }

    pub fn b_dot_mono(&self) -> Monomials {
        Monomials::term(self.b_coeff * self.n, self.n - 1.0)
    }

    pub fn eps_mono(&self) -> Monomials {
        Monomials::term(self.eps_coeff, -self.d)
    }

    pub fn lambda_dot_mono(&self) -> Monomials {
        match self.lambda {
            LambdaForm::Power { l } => Monomials::term(l, l - 1.0),
            LambdaForm::Bounded { l } => Monomials::term(l, -l - 1.0),
            LambdaForm::Constant { .. } => Monomials::new(),
        }
    }

    pub fn lambda_bounded(&self) -> bool {
        match self.lambda {
            LambdaForm::Power { l } => l == 0.0,
            LambdaForm::Bounded { .. } | LambdaForm::Constant { .. } => true,
        }
    }
}

/// All six schedule values at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleValues {
    pub lambda: f64,
    pub b: f64,
    pub eps: f64,
    pub lambda_dot: f64,
    pub b_dot: f64,
    pub eps_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Polynomial,
    BoundedLambda,
    Custom,
}

/// A scalar function returning `(value, derivative)`.
pub type ScalarFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// User-supplied schedule given by closures with derivatives.
#[derive(Clone)]
pub struct CustomSchedule {
    pub lambda: ScalarFn,
    pub b: ScalarFn,
    pub eps: ScalarFn,
}

impl fmt::Debug for CustomSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomSchedule { .. }")
    }
}

#[derive(Debug, Clone)]
enum Family {
    Polynomial(PolyParams),
    Custom(CustomSchedule),
}

/// The parameter triple `(lambda, b, eps)` on `[t0, infinity)`.
#[derive(Debug, Clone)]
pub struct Schedule {
    t0: f64,
    family: Family,
}

impl Schedule {
    pub fn polynomial(t0: f64, params: PolyParams) -> Result<Self> {
        positive("t0", t0)?;
        params.validate()?;
        Ok(Schedule {
            t0,
            family: Family::Polynomial(params),
        })
    }

    pub fn custom(t0: f64, custom: CustomSchedule) -> Result<Self> {
        positive("t0", t0)?;
        Ok(Schedule {
            t0,
            family: Family::Custom(custom),
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Same schedule started at a different initial time.
    pub fn with_t0(&self, t0: f64) -> Result<Self> {
        positive("t0", t0)?;
        Ok(Schedule {
            t0,
            family: self.family.clone(),
        })
    }

    pub fn poly(&self) -> Option<&PolyParams> {
        match &self.family {
            Family::Polynomial(p) => Some(p),
            Family::Custom(_) => None,
        }
    }

    pub fn family_tag(&self) -> FamilyTag {
        match &self.family {
            Family::Polynomial(PolyParams {
                lambda: LambdaForm::Bounded { .. },
                ..
            }) => FamilyTag::BoundedLambda,
            Family::Polynomial(_) => FamilyTag::Polynomial,
            Family::Custom(_) => FamilyTag::Custom,
        }
    }

    /// Values without the `t >= t0` check; RK stages may probe slightly past the horizon.
    pub fn values(&self, t: f64) -> ScheduleValues {
        match &self.family {
            Family::Polynomial(p) => {
                let b = p.b_coeff * t.powf(p.n);
                let b_dot = if p.n == 0.0 { 0.0 } else { p.b_coeff * p.n * t.powf(p.n - 1.0) };
                let eps = p.eps_coeff * t.powf(-p.d);
                let eps_dot = -p.d * p.eps_coeff * t.powf(-p.d - 1.0);
                let (lambda, lambda_dot) = match p.lambda {
                    LambdaForm::Power { l } if l == 0.0 => (1.0, 0.0),
                    LambdaForm::Power { l } => (t.powf(l), l * t.powf(l - 1.0)),
                    LambdaForm::Bounded { l } => (1.0 - t.powf(-l), l * t.powf(-l - 1.0)),
                    LambdaForm::Constant { c } => (c, 0.0),
                };
                ScheduleValues {
                    lambda,
                    b,
                    eps,
                    lambda_dot,
                    b_dot,
                    eps_dot,
                }
            }
            Family::Custom(c) => {
                let (lambda, lambda_dot) = (c.lambda)(t);
                let (b, b_dot) = (c.b)(t);
                let (eps, eps_dot) = (c.eps)(t);
                ScheduleValues {
                    lambda,
                    b,
                    eps,
                    lambda_dot,
                    b_dot,
                    eps_dot,
                }
            }
        }
    }
}

/// Evaluates all six schedule quantities at `t >= t0`.
pub fn eval_schedule(s: &Schedule, t: f64) -> Result<ScheduleValues> {
    if !(t >= s.t0) {
        return Err(Error::TimeDomain { t, t0: s.t0 });
    }
    Ok(s.values(t))
}

/// `n` geometrically spaced points covering `[lo, hi]`, endpoints included.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let ratio = (hi / lo).ln();
    let mut g: Vec<f64> = (0..n).map(|k| lo * (ratio * k as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// Full parameter set of one run of the dynamical system.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
    pub x0: Point,
    pub xdot0: Point,
    pub objective: ObjectiveRef,
    pub schedule: Schedule,
    /// Lower bound `lambda_0` enforced on `lambda(t)` over `[t0, horizon]`.
    pub lambda_floor: f64,
}

pub const VALIDATION_GRID_POINTS: usize = 2048;

impl SystemConfig {
    /// Builds and validates a configuration; `lambda_floor` defaults to the
    /// minimum of `lambda` over `[t0, horizon]`.
    pub fn new(
        alpha: f64,
        beta: f64,
        horizon: f64,
        x0: Point,
        xdot0: Point,
        objective: ObjectiveRef,
        schedule: Schedule,
    ) -> Result<Self> {
        let t0 = schedule.t0();
        let floor = if horizon > t0 {
            geometric_grid(t0, horizon, VALIDATION_GRID_POINTS)
                .into_iter()
                .map(|t| schedule.values(t).lambda)
                .fold(f64::INFINITY, f64::min)
        } else {
            f64::NAN
        };
        let cfg = SystemConfig {
            alpha,
            beta,
            horizon,
            x0,
            xdot0,
            objective,
            schedule,
            lambda_floor: floor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_lambda_floor(mut self, floor: f64) -> Result<Self> {
        self.lambda_floor = floor;
        self.validate()?;
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.schedule.t0()
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn validate(&self) -> Result<()> {
        positive("alpha", self.alpha)?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "beta",
                value: self.beta,
                expected: "finite and >= 0",
            });
        }
        let t0 = self.t0();
        if !(self.horizon > t0 && self.horizon.is_finite()) {
            return Err(Error::Validation(format!("horizon {} must exceed t0 = {t0}", self.horizon)));
        }
        let m = self.dim();
        for (name, p) in [("x0", &self.x0), ("xdot0", &self.xdot0)] {
            if p.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: p.dim(),
                });
            }
            if !p.is_finite() {
                return Err(Error::Validation(format!("{name} has non-finite entries")));
            }
        }
        positive("lambda_floor", self.lambda_floor)?;
        let grid = geometric_grid(t0, self.horizon, VALIDATION_GRID_POINTS);
        let mut prev: Option<ScheduleValues> = None;
        for &t in &grid {
            let v = self.schedule.values(t);
            let finite = [v.lambda, v.b, v.eps, v.lambda_dot, v.b_dot, v.eps_dot].iter().all(|x| x.is_finite());
            if !finite {
                return Err(Error::Validation(format!("schedule is not finite at t = {t}")));
            }
            if v.lambda < self.lambda_floor * (1.0 - 1e-12) {
                return Err(Error::Validation(format!(
                    "lambda({t}) = {} is below lambda_0 = {}",
                    v.lambda, self.lambda_floor
                )));
            }
            if v.b < 0.0 || v.eps < 0.0 {
                return Err(Error::Validation(format!("b or eps negative at t = {t}")));
            }
            if let Some(p) = prev {
                if v.lambda < p.lambda * (1.0 - 1e-12) {
                    return Err(Error::Validation(format!("lambda decreases near t = {t}")));
                }
                if v.eps > p.eps * (1.0 + 1e-12) {
                    return Err(Error::Validation(format!("eps increases near t = {t}")));
                }
            }
            prev = Some(v);
        }
        let e0 = self.schedule.values(t0).eps;
        let e_end = self.schedule.values(self.horizon).eps;
        if e0 > 0.0 && !(e_end < e0) {
            return Err(Error::Validation("eps must decay: eps(horizon) < eps(t0)".into()));
        }
        Ok(())
    }
}
