//! Machine checks of the standing assumptions on `(alpha, beta, lambda, b, eps)`.
//!
//! Every inequality quantified over `t >= t0` is evaluated on the supplied grid,
//! on a far grid extending six decades past it, and, for polynomial families,
//! through the sign of the dominant monomial.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use super::monomial::Monomials;
use super::{geometric_grid, PolyParams, Schedule, ScheduleValues, SystemConfig};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_GRID_SPAN: f64 = 100.0;
const FAR_GRID_POINTS: usize = 256;
const FAR_GRID_SPAN: f64 = 1e6;
const INEQ_REL_TOL: f64 = 1e-12;
pub const DELTA_SLACK: f64 = 1e-9;
pub const SUGGEST_MARGIN: f64 = 1e-3;
const TAIL_BLOCKS: usize = 30;
const CESARO_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    FastRates,
    StrongConvergence,
    Alpha3,
}

impl Setting {
    pub fn parse(s: &str) -> Option<Setting> {
        match s {
            "fast_rates" | "fast" => Some(Setting::FastRates),
            "strong_convergence" | "strong" => Some(Setting::StrongConvergence),
            "alpha3" | "alpha_eq_3" => Some(Setting::Alpha3),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::FastRates => "fast_rates",
            Setting::StrongConvergence => "strong_convergence",
            Setting::Alpha3 => "alpha3",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Real interval with open or closed ends; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        if self.lo.is_nan() || self.hi.is_nan() {
            return true;
        }
        match self.lo.partial_cmp(&self.hi) {
            Some(Ordering::Less) => false,
            Some(Ordering::Equal) => self.lo_open || self.hi_open,
            _ => true,
        }
    }

    pub fn contains(&self, a: f64) -> bool {
        let above = if self.lo_open { a > self.lo } else { a >= self.lo };
        let below = if self.hi_open { a < self.hi } else { a <= self.hi };
        above && below
    }

    /// A representative point, preferring the upper end.
    pub fn pick(&self) -> Option<f64> {
        if self.is_empty() {
            None
        } else if self.hi.is_infinite() {
            Some(f64::INFINITY)
        } else if !self.hi_open {
            Some(self.hi)
        } else {
            Some(0.5 * (self.lo + self.hi))
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("empty");
        }
        let l = if self.lo_open { '(' } else { '[' };
        let r = if self.hi_open || self.hi.is_infinite() { ')' } else { ']' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: String,
    pub passed: bool,
    /// A time at which the condition is violated, or where its margin is tightest.
    pub witness: Option<f64>,
    pub detail: String,
    pub warning: Option<String>,
}

impl Verdict {
    fn new(id: &str, passed: bool, witness: Option<f64>, detail: impl Into<String>) -> Self {
        Verdict {
            id: id.to_string(),
            passed,
            witness,
            detail: detail.into(),
            warning: None,
        }
    }

    fn warn(mut self, w: impl Into<String>) -> Self {
        self.warning = Some(w.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub setting: Setting,
    pub verdicts: Vec<Verdict>,
    pub feasible_a: Option<Interval>,
    pub delta: Option<f64>,
    pub t_star_star: Option<f64>,
    pub suggested_t0: Option<f64>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.passed).collect()
    }

    pub fn verdict(&self, id: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.id == id)
    }

    pub fn warnings(&self) -> Vec<&str> {
        self.verdicts.iter().filter_map(|v| v.warning.as_deref()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("setting: {}\n", self.setting);
        for v in &self.verdicts {
            let w = v.witness.map(|t| format!(" witness t = {t:.6e}")).unwrap_or_default();
            out.push_str(&format!("{:<24} {}  {}{}\n", v.id, if v.passed { "PASS" } else { "FAIL" }, v.detail, w));
            if let Some(warn) = &v.warning {
                out.push_str(&format!("{:<24} WARN  {warn}\n", ""));
            }
        }
        if let Some(a) = &self.feasible_a {
            out.push_str(&format!("feasible a: {a}\n"));
        }
        if let Some(d) = self.delta {
            out.push_str(&format!("delta: {d:.9e}\n"));
        }
        if let Some(t) = self.t_star_star {
            out.push_str(&format!("t**: {t:.9e}\n"));
        }
        if let Some(t) = self.suggested_t0 {
            out.push_str(&format!("suggested t0: {t:.9e}\n"));
        }
        out.push_str(&format!("overall: {}\n", if self.all_passed() { "PASS" } else { "FAIL" }));
        out
    }
}

/// The default checking grid: 512 geometric points on `[t0, 100 t0]`.
pub fn default_grid(t0: f64) -> Vec<f64> {
    geometric_grid(t0, DEFAULT_GRID_SPAN * t0, DEFAULT_GRID_POINTS)
}

struct Ctx<'a> {
    alpha: f64,
    beta: f64,
    schedule: &'a Schedule,
    poly: Option<PolyParams>,
    /// Supplied grid followed by the far grid, sorted.
    points: Vec<f64>,
    /// Far grid only; used by the numeric tail tests.
    far: Vec<f64>,
}

impl<'a> Ctx<'a> {
    fn new(alpha: f64, beta: f64, schedule: &'a Schedule, grid: &[f64]) -> Self {
        let t0 = schedule.t0();
        let mut points: Vec<f64> = grid.iter().copied().filter(|&t| t >= t0 && t.is_finite()).collect();
        if points.is_empty() {
            points.push(t0);
        }
        points.sort_by(f64::total_cmp);
        let last = points.last().copied().unwrap_or(t0).max(t0 * DEFAULT_GRID_SPAN);
        let far = geometric_grid(last, last * FAR_GRID_SPAN, FAR_GRID_POINTS);
        points.extend(far.iter().skip(1));
        Ctx {
            alpha,
            beta,
            schedule,
            poly: schedule.poly().copied(),
            points,
            far,
        }
    }

    fn t0(&self) -> f64 {
        self.schedule.t0()
    }

    fn at(&self, t: f64) -> ScheduleValues {
        self.schedule.values(t)
    }

    /// Checks `f(t) >= 0` where `f` returns `(value, magnitude)`; the tail
    /// polynomial, when given, must be eventually nonnegative.
    fn nonneg(
        &self,
        id: &str,
        f: impl Fn(f64, &ScheduleValues) -> (f64, f64),
        tail: Option<Monomials>,
    ) -> Verdict {
        let mut worst = (f64::INFINITY, self.t0());
        for &t in &self.points {
            let (v, mag) = f(t, &self.at(t));
            if !v.is_finite() {
                return Verdict::new(id, false, Some(t), "not finite");
            }
            if v < -INEQ_REL_TOL * mag {
                return Verdict::new(id, false, Some(t), format!("violated: margin {v:.6e}"));
            }
            if v < worst.0 {
                worst = (v, t);
            }
        }
        if let Some(m) = tail {
            if m.tail_sign() == Ordering::Less {
                let lead = m.leading_exponent().unwrap_or(0.0);
                return Verdict::new(id, false, None, format!("violated as t -> infinity (dominant power t^{lead})"));
            }
        }
        Verdict::new(id, true, Some(worst.1), format!("min margin {:.6e}", worst.0))
    }

    fn check(id: &str, ok: bool, detail: impl Into<String>) -> Verdict {
        Verdict::new(id, ok, None, detail)
    }

    fn alpha_gt_3(&self) -> Verdict {
        Self::check("alpha_gt_3", self.alpha > 3.0, format!("alpha = {}", self.alpha))
    }

    fn a6_0(&self) -> Verdict {
        let (al, be) = (self.alpha, self.beta);
        let tail = self.poly.map(|p| {
            Monomials::term(p.b_coeff * (al - 3.0 - p.n), p.n + 1.0).plus(&Monomials::constant(be * (2.0 - al)))
        });
        self.nonneg(
            "A_6_0",
            |t, v| {
                let terms = [(al - 3.0) * t * v.b, -t * t * v.b_dot, be * (2.0 - al)];
                (terms.iter().sum(), terms.iter().map(|x| x.abs()).sum())
            },
            tail,
        )
    }

    /// Infimum over `t >= t0` of `((alpha-3) t b - t^2 b' + beta(2-alpha)) / (t b)`.
    fn delta_inf(&self) -> (f64, f64) {
        let (al, be, t0) = (self.alpha, self.beta, self.t0());
        let ratio = |t: f64| {
            let v = self.at(t);
            ((al - 3.0) * t * v.b - t * t * v.b_dot + be * (2.0 - al)) / (t * v.b)
        };
        match self.poly {
            Some(p) => {
                let limit = al - 3.0 - p.n;
                let at0 = ratio(t0);
                if at0 <= limit {
                    (at0, t0)
                } else {
                    (limit, f64::INFINITY)
                }
            }
            None => self
                .points
                .iter()
                .map(|&t| (ratio(t), t))
                .fold((f64::INFINITY, t0), |a, b| if b.0 < a.0 { b } else { a }),
        }
    }

    fn a6(&self) -> (Verdict, Option<f64>) {
        let (inf, at) = self.delta_inf();
        let delta = (inf - DELTA_SLACK).min(self.alpha - 3.0);
        let ok = delta > 0.0 && self.alpha > 3.0;
        let witness = if at.is_finite() { Some(at) } else { None };
        let detail = if ok {
            format!("delta in (0, {delta:.9e}]")
        } else {
            format!("no delta in (0, alpha-3): normalized margin infimum {inf:.6e}")
        };
        (Verdict::new("A_6", ok, witness, detail), ok.then_some(delta))
    }

    /// Upper bound `inf_t -2 eps'/(beta eps^2)` on `a`, with the time attaining it.
    fn a_max(&self) -> (f64, Option<f64>) {
        let be = self.beta;
        if be == 0.0 {
            return (f64::INFINITY, None);
        }
        match self.poly {
            Some(p) if p.eps_coeff == 0.0 => (f64::INFINITY, None),
            Some(p) => {
                if p.d >= 1.0 {
                    let t0 = self.t0();
                    (2.0 * p.d * t0.powf(p.d - 1.0) / (be * p.eps_coeff), Some(t0))
                } else {
                    (0.0, None)
                }
            }
            None => self
                .points
                .iter()
                .filter_map(|&t| {
                    let v = self.at(t);
                    (v.eps > 0.0).then(|| (-2.0 * v.eps_dot / (be * v.eps * v.eps), t))
                })
                .fold((f64::INFINITY, None), |a, (r, t)| if r < a.0 { (r, Some(t)) } else { a }),
        }
    }

    fn feasible_a(&self) -> (Interval, Option<f64>) {
        let (a_max, at) = self.a_max();
        let inv_b0 = 1.0 / self.at(self.t0()).b;
        let (lo, lo_open) = if inv_b0 >= 1.0 { (inv_b0, true) } else { (1.0, false) };
        let interval = Interval {
            lo,
            hi: a_max,
            lo_open,
            hi_open: a_max.is_infinite(),
        };
        (interval, at)
    }

    fn a9(&self, id: &str) -> (Verdict, Interval) {
        let (iv, at) = self.feasible_a();
        let ok = !iv.is_empty();
        let detail = format!("a in {iv} (a >= 1, 2 eps' <= -a beta eps^2, b(t0) > 1/a)");
        (Verdict::new(id, ok, if ok { None } else { at }, detail), iv)
    }

    fn tbt(&self) -> Verdict {
        let t0 = self.t0();
        let b0 = self.at(t0).b;
        let ok = b0 >= self.beta / t0;
        Verdict::new("tbt", ok, Some(t0), format!("b(t0) = {b0:.6e}, beta/t0 = {:.6e}", self.beta / t0))
    }

    fn b_ge_half(&self, id: &str) -> Verdict {
        let t0 = self.t0();
        let b0 = self.at(t0).b;
        let need = 0.5 + self.beta / t0;
        Verdict::new(id, b0 >= need, Some(t0), format!("b(t0) = {b0:.6e}, 1/2 + beta/t0 = {need:.6e}"))
    }

    fn lambda_bounded(&self) -> Verdict {
        match self.poly {
            Some(p) => Self::check("lambda_bounded", p.lambda_bounded(), format!("lambda form {:?}", p.lambda)),
            None => {
                let end = *self.far.last().unwrap_or(&self.t0());
                let l_end = self.at(end).lambda;
                let l_dec = self.at(end / 10.0).lambda;
                let ok = l_end.is_finite() && l_end <= l_dec * (1.0 + 1e-2);
                Verdict::new(
                    "lambda_bounded",
                    ok,
                    Some(end),
                    format!("last-decade growth factor {:.6e}", l_end / l_dec),
                )
            }
        }
    }

    /// Numeric test of `int^infinity f < infinity`: block integrals over doubling
    /// intervals must shrink geometrically.
    fn integrable_tail(&self, f: impl Fn(f64) -> f64) -> (bool, String) {
        let start = self.far[0];
        let blocks: Vec<f64> = (0..TAIL_BLOCKS)
            .map(|k| {
                let a = start * 2f64.powi(k as i32);
                log_simpson(&f, a, 2.0 * a, 32)
            })
            .collect();
        let last = blocks[TAIL_BLOCKS - 1];
        let prev = blocks[TAIL_BLOCKS - 2];
        if last == 0.0 && prev == 0.0 {
            return (true, "integrand vanishes on the tail".into());
        }
        let ratio = last / prev;
        (ratio.is_finite() && ratio <= 1.0 - 1e-3, format!("doubling-block ratio {ratio:.6e}"))
    }

    fn integrability(&self, id: &str, poly_ok: impl Fn(&PolyParams) -> bool, f: impl Fn(f64) -> f64, symbolic: &str) -> Verdict {
        match self.poly {
            Some(p) => Self::check(id, p.eps_coeff == 0.0 || poly_ok(&p), symbolic.to_string()),
            None => {
                let (ok, detail) = self.integrable_tail(f);
                Self::check(id, ok, detail)
            }
        }
    }

    /// `lim beta/(t^k eps(t)) int_{t0}^t s^k eps(s)^2 ds = 0`.
    fn cesaro(&self, id: &str, k: f64) -> Verdict {
        let be = self.beta;
        if be == 0.0 {
            return Self::check(id, true, "beta = 0");
        }
        if let Some(p) = self.poly {
            if p.eps_coeff == 0.0 {
                return Self::check(id, true, "eps = 0");
            }
            let d = p.d;
            let e = k - 2.0 * d;
            let (ok, detail) = if e >= -1.0 {
                (d > 1.0, format!("ratio ~ t^(1-d) (up to a log factor), d = {d}"))
            } else {
                (k > d, format!("integral converges; ratio ~ t^(d-k), d = {d}, k = {k}"))
            };
            if !ok && d == 1.0 && e >= -1.0 {
                return Self::check(id, true, "d = 1: ratio tends to a nonzero constant")
                    .warn("d = 1 with beta > 0: the limit is a nonzero constant; beta = 0 is required for a zero limit");
            }
            return Self::check(id, ok, detail);
        }
        let t0 = self.t0();
        let g = |s: f64| s.powf(k) * self.at(s).eps.powi(2);
        let mut integral = log_simpson(&g, t0, self.far[0], 256);
        let mut ratios = Vec::with_capacity(TAIL_BLOCKS);
        let mut a = self.far[0];
        for _ in 0..TAIL_BLOCKS {
            let b = 2.0 * a;
            integral += log_simpson(&g, a, b, 32);
            let eps = self.at(b).eps;
            ratios.push(if eps > 0.0 { be * integral / (b.powf(k) * eps) } else { 0.0 });
            a = b;
        }
        let tail = &ratios[TAIL_BLOCKS - 5..];
        let decreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
        let last = ratios[TAIL_BLOCKS - 1];
        Verdict::new(id, decreasing && last < CESARO_THRESHOLD, Some(a), format!("tail ratio {last:.6e}"))
    }

    fn a10(&self) -> Verdict {
        let (al, be) = (self.alpha, self.beta);
        let tail = self.poly.map(|p| {
            Monomials::term(p.b_coeff * (al / 3.0 - 1.0 - p.n), p.n + 1.0).plus(&Monomials::constant(al * be / 3.0))
        });
        self.nonneg(
            "A_10",
            |t, v| {
                let terms = [(al / 3.0 - 1.0) * t * v.b, -t * t * v.b_dot, al * be / 3.0];
                (terms.iter().sum(), terms.iter().map(|x| x.abs()).sum())
            },
            tail,
        )
    }

    fn a2(&self) -> Verdict {
        let (al, be) = (self.alpha, self.beta);
        let c = 2.0 * al * (al - 3.0) + 6.0 * al * be;
        let tail = self.poly.map(|p| Monomials::term(9.0 * p.eps_coeff, 2.0 - p.d).plus(&Monomials::constant(-c)));
        self.nonneg(
            "A_2",
            |t, v| {
                let s = 9.0 * t * t * v.eps;
                (s - c, s.abs() + c.abs())
            },
            tail,
        )
    }

    fn a3(&self) -> Verdict {
        let (al, be) = (self.alpha, self.beta);
        let c = 3.0 * (al + 3.0) * be * be + al * al * be;
        let tail = self.poly.map(|p| {
            let ld = p.lambda_dot_mono();
            let tb = Monomials::term(p.b_coeff, p.n + 1.0);
            tb.times(&ld)
                .scaled(9.0)
                .plus(&tb.scaled(18.0 * be))
                .plus(&Monomials::term(-18.0 * be, 1.0))
                .plus(&ld.scaled(-9.0 * be))
                .plus(&Monomials::constant(-c))
        });
        self.nonneg(
            "A_3",
            |t, v| {
                let terms = [
                    -18.0 * be * t,
                    -9.0 * be * v.lambda_dot,
                    9.0 * t * v.b * v.lambda_dot,
                    18.0 * be * t * v.b,
                    -c,
                ];
                (terms.iter().sum(), terms.iter().map(|x| x.abs()).sum())
            },
            tail,
        )
    }

    fn a3_3(&self) -> Verdict {
        let be = self.beta;
        let c = 2.0 * be * be + be;
        let tail = self.poly.map(|p| {
            let ld = p.lambda_dot_mono();
            let tb = Monomials::term(p.b_coeff, p.n + 1.0);
            tb.times(&ld)
                .plus(&tb.scaled(2.0 * be))
                .plus(&Monomials::term(-2.0 * be, 1.0))
                .plus(&ld.scaled(-be))
                .plus(&Monomials::constant(-c))
        });
        self.nonneg(
            "A_3_3",
            |t, v| {
                let terms = [-2.0 * be * t, -be * v.lambda_dot, t * v.b * v.lambda_dot, 2.0 * be * t * v.b, -c];
                (terms.iter().sum(), terms.iter().map(|x| x.abs()).sum())
            },
            tail,
        )
    }

    fn a2_2(&self) -> Verdict {
        match self.poly {
            Some(p) => Self::check("A_2_2", p.eps_coeff > 0.0 && p.d < 2.0, format!("t^2 eps(t) ~ t^(2-d), d = {}", p.d)),
            None => {
                let vals: Vec<f64> = self.far.iter().map(|&t| t * t * self.at(t).eps).collect();
                let increasing = vals.windows(2).all(|w| w[1] >= w[0]);
                let end = *self.far.last().unwrap();
                let growth = vals[vals.len() - 1] / (end / 10.0).powi(2) / self.at(end / 10.0).eps;
                let ok = increasing && growth > 1.0 + 1e-2;
                Verdict::new("A_2_2", ok, Some(end), format!("last-decade growth of t^2 eps {growth:.6e}"))
            }
        }
    }

    fn b_constant(&self) -> Verdict {
        match self.poly {
            Some(p) => Self::check("b_constant", p.n == 0.0, format!("n = {}", p.n)),
            None => {
                let bad = self.points.iter().find(|&&t| {
                    let v = self.at(t);
                    v.b_dot.abs() > 1e-12 * v.b.abs().max(1.0)
                });
                Verdict::new("b_constant", bad.is_none(), bad.copied(), "b' = 0 on the grid")
            }
        }
    }

    fn box_strong(&self) -> Verdict {
        match self.poly {
            Some(p) => {
                let lo = 1f64.max(self.beta * p.eps_coeff / 2.0);
                let n_ok = p.n >= 0.0 && p.n <= (self.alpha - 3.0) / 3.0;
                let d_ok = p.eps_coeff > 0.0 && p.d >= lo && p.d <= 2.0;
                Self::check(
                    "box_strong",
                    n_ok && d_ok,
                    format!("0 <= n = {} <= {:.6}, {lo:.6} <= d = {} <= 2", p.n, (self.alpha - 3.0) / 3.0, p.d),
                )
            }
            None => Self::check("box_strong", true, "not applicable to custom schedules"),
        }
    }

    fn box_alpha3(&self) -> Verdict {
        match self.poly {
            Some(p) => {
                let lo = 1f64.max(self.beta * p.eps_coeff / 2.0);
                let ok = p.eps_coeff > 0.0 && p.d >= lo && p.d < 2.0 && p.b_coeff >= 1.0;
                Self::check("box_alpha3", ok, format!("{lo:.6} <= d = {} < 2, b = {} >= 1", p.d, p.b_coeff))
            }
            None => Self::check("box_alpha3", true, "not applicable to custom schedules"),
        }
    }
}

/// Simpson's rule in the variable `ln t`.
fn log_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let (ua, ub) = (a.ln(), b.ln());
    let h = (ub - ua) / n as f64;
    let g = |u: f64| {
        let t = u.exp();
        f(t) * t
    };
    let mut s = g(ua) + g(ub);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(ua + i as f64 * h);
    }
    s * h / 3.0
}

fn t_star_star_for(ctx: &Ctx<'_>, q: f64, a: Option<f64>) -> Option<f64> {
    let a = a?;
    compute_t_star_star_raw(ctx.alpha, ctx.beta, ctx.schedule, ctx.schedule.t0() * DEFAULT_GRID_SPAN, q, a).ok()
}

/// Fast-rate checks for an explicit `(alpha, beta, schedule)`.
pub fn fast_rate_report(alpha: f64, beta: f64, schedule: &Schedule, grid: &[f64]) -> ConditionReport {
    let ctx = Ctx::new(alpha, beta, schedule, grid);
    let (a9, iv) = ctx.a9("A_9");
    let (a6, delta) = ctx.a6();
    let verdicts = vec![
        ctx.alpha_gt_3(),
        ctx.a6_0(),
        a9,
        ctx.integrability(
            "integrability_T",
            |p| p.d > 2.0,
            |t| t * schedule.values(t).eps,
            "int t eps(t) dt < infinity iff d > 2",
        ),
        ctx.tbt(),
        a6,
    ];
    let t_ss = t_star_star_for(&ctx, alpha - 1.0, iv.pick());
    ConditionReport {
        setting: Setting::FastRates,
        verdicts,
        feasible_a: Some(iv),
        delta,
        t_star_star: t_ss,
        suggested_t0: schedule.poly().and_then(|p| suggest_t0(p, alpha, beta).ok()),
    }
}

/// Strong-convergence checks for an explicit `(alpha, beta, schedule)`.
pub fn strong_conv_report(alpha: f64, beta: f64, schedule: &Schedule, grid: &[f64]) -> ConditionReport {
    let ctx = Ctx::new(alpha, beta, schedule, grid);
    let (a9, iv) = ctx.a9("A_9");
    let verdicts = vec![
        ctx.alpha_gt_3(),
        ctx.lambda_bounded(),
        ctx.b_ge_half("b_t0_ge_half_plus"),
        ctx.a6_0(),
        a9,
        ctx.a10(),
        ctx.a2(),
        ctx.a3(),
        ctx.cesaro("A_5", alpha / 3.0 + 1.0),
        ctx.integrability(
            "integrability_T_0",
            |p| p.d + p.n > 0.0,
            |t| {
                let v = schedule.values(t);
                v.eps / (t * v.b)
            },
            "int eps/(t b) dt < infinity iff n + d > 0",
        ),
        ctx.box_strong(),
    ];
    ConditionReport {
        setting: Setting::StrongConvergence,
        verdicts,
        feasible_a: Some(iv),
        delta: None,
        t_star_star: t_star_star_for(&ctx, alpha - 1.0, iv.pick()),
        suggested_t0: schedule.poly().and_then(|p| suggest_t0_strong(p, alpha, beta).ok()),
    }
}

/// Checks for the critical case `alpha = 3` for an explicit `(alpha, beta, schedule)`.
pub fn alpha3_report(alpha: f64, beta: f64, schedule: &Schedule, grid: &[f64]) -> ConditionReport {
    let ctx = Ctx::new(alpha, beta, schedule, grid);
    let (a9, iv) = ctx.a9("A_9");
    let verdicts = vec![
        Ctx::check("alpha_eq_3", alpha == 3.0, format!("alpha = {alpha}")),
        ctx.b_constant(),
        ctx.b_ge_half("b_ge_half_plus"),
        ctx.lambda_bounded(),
        a9,
        ctx.integrability(
            "integrability_eps_over_t",
            |p| p.d > 0.0,
            |t| schedule.values(t).eps / t,
            "int eps/t dt < infinity iff d > 0",
        ),
        ctx.a2_2(),
        ctx.a3_3(),
        ctx.cesaro("A_5_5", 2.0),
        ctx.box_alpha3(),
    ];
    ConditionReport {
        setting: Setting::Alpha3,
        verdicts,
        feasible_a: Some(iv),
        delta: None,
        t_star_star: None,
        suggested_t0: None,
    }
}

pub fn check_fast_rate_conditions(cfg: &SystemConfig, grid: &[f64]) -> ConditionReport {
    fast_rate_report(cfg.alpha, cfg.beta, &cfg.schedule, grid)
}

pub fn check_strong_conv_conditions(cfg: &SystemConfig, grid: &[f64]) -> ConditionReport {
    strong_conv_report(cfg.alpha, cfg.beta, &cfg.schedule, grid)
}

pub fn check_alpha3_conditions(cfg: &SystemConfig, grid: &[f64]) -> ConditionReport {
    alpha3_report(cfg.alpha, cfg.beta, &cfg.schedule, grid)
}

pub fn check_setting(cfg: &SystemConfig, setting: Setting, grid: &[f64]) -> ConditionReport {
    match setting {
        Setting::FastRates => check_fast_rate_conditions(cfg, grid),
        Setting::StrongConvergence => check_strong_conv_conditions(cfg, grid),
        Setting::Alpha3 => check_alpha3_conditions(cfg, grid),
    }
}

/// `t** = max{t*, beta / (b(t0) - 1/a)}` clamped to `[t0, infinity)`, where `t*`
/// is the first grid time after which `t^2 b - beta (q+2-alpha) t >= 0`.
pub fn compute_t_star_star(cfg: &SystemConfig, q: f64, a: f64) -> Result<f64> {
    compute_t_star_star_raw(cfg.alpha, cfg.beta, &cfg.schedule, cfg.horizon, q, a)
}

fn compute_t_star_star_raw(alpha: f64, beta: f64, schedule: &Schedule, horizon: f64, q: f64, a: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::ParameterDomain {
            name: "a",
            value: a,
            expected: ">= 1",
        });
    }
    let t0 = schedule.t0();
    let b0 = schedule.values(t0).b;
    let gap = b0 - 1.0 / a;
    if !(gap > 0.0) {
        return Err(Error::Infeasible(format!("b(t0) = {b0} <= 1/a = {}", 1.0 / a)));
    }
    let end = horizon.max(DEFAULT_GRID_SPAN * t0);
    let grid = geometric_grid(t0, end, 4096);
    let coef = beta * (q + 2.0 - alpha);
    let h = |t: f64| t * t * schedule.values(t).b - coef * t;
    let mut t_star = t0;
    for &t in &grid {
        if h(t) < 0.0 {
            t_star = t;
        }
    }
    if t_star > t0 {
        let idx = grid.iter().position(|&t| t == t_star).unwrap();
        t_star = grid.get(idx + 1).copied().unwrap_or(end);
    }
    Ok(t_star.max(beta / gap).max(t0))
}

/// Smallest `t0` suggested by the polynomial sufficient conditions for the
/// fast-rate setting.
pub fn suggest_t0(params: &PolyParams, alpha: f64, beta: f64) -> Result<f64> {
    let PolyParams {
        b_coeff: b,
        n,
        eps_coeff: e,
        d,
        ..
    } = *params;
    if !(n >= 0.0) {
        return Err(Error::Infeasible(format!("n >= 0 violated: n = {n}")));
    }
    if !(alpha - 3.0 > n) {
        return Err(Error::Infeasible(format!("alpha - 3 > n violated: alpha = {alpha}, n = {n}")));
    }
    if e > 0.0 && !(d > 2.0) {
        return Err(Error::Infeasible(format!("d > 2 violated: d = {d}")));
    }
    if !(d >= beta * e / 2.0) {
        return Err(Error::Infeasible(format!("d >= beta eps / 2 violated: d = {d}, beta eps / 2 = {}", beta * e / 2.0)));
    }
    let root = |x: f64, p: f64| if x > 0.0 { x.powf(1.0 / p) } else { 0.0 };
    let mut t0 = 1f64
        .max(root(beta / b, n + 1.0))
        .max(root(beta * (alpha - 2.0) / (b * (alpha - 3.0 - n)), n + 1.0));
    if n > 0.0 {
        t0 = t0.max(root(1.0 / b, n) * (1.0 + SUGGEST_MARGIN));
    }
    if beta > 0.0 && e > 0.0 {
        t0 = t0.max(root(beta * e / (2.0 * d * b), d - 1.0 + n) * (1.0 + SUGGEST_MARGIN));
    }
    Ok(t0)
}

/// Smallest `t0 = 2^{k/8}`, `k >= 0`, for which every strong-convergence
/// check passes on the default grid.
pub fn suggest_t0_strong(params: &PolyParams, alpha: f64, beta: f64) -> Result<f64> {
    let probe = Schedule::polynomial(1.0, *params)?;
    let box_v = Ctx::new(alpha, beta, &probe, &[1.0]).box_strong();
    if !box_v.passed || !(alpha > 3.0) {
        return Err(Error::Infeasible(format!("outside the strong-convergence box: {}", box_v.detail)));
    }
    for k in 0..=8 * 48 {
        let t0 = 2f64.powf(k as f64 / 8.0);
        let s = probe.with_t0(t0)?;
        if !(s.values(t0).lambda > 0.0) {
            continue;
        }
        let ctx = Ctx::new(alpha, beta, &s, &default_grid(t0));
        let ok = ctx.b_ge_half("b").passed
            && ctx.a6_0().passed
            && !ctx.feasible_a().0.is_empty()
            && ctx.a10().passed
            && ctx.a2().passed
            && ctx.a3().passed;
        if ok {
            return Ok(t0);
        }
    }
    Err(Error::Infeasible("no t0 up to 2^48 satisfies the strong-convergence checks".into()))
}
