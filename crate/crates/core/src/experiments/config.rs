//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dynamics::{IntegratorSettings, Method};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::prox::{build_objective, ObjectiveSpec};
use crate::schedules::{LambdaForm, PolyParams, Schedule, Setting, SystemConfig};

pub const DEFAULT_MAX_ROWS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub objective: ObjectiveSpec,
    pub alpha: f64,
    pub beta: f64,
    pub t0: f64,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub xdot0: Vec<f64>,
    pub lambda_floor: Option<f64>,
    pub schedule: PolyParams,
    pub integrator: IntegratorSettings,
    pub setting: Setting,
    pub q: Option<f64>,
    pub a: Option<f64>,
    pub svg: bool,
    /// Upper bound on CSV rows; `0` keeps every sample.
    pub max_rows: usize,
    /// Free-text assumptions echoed into the run summary.
    pub assumptions: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "run".into(),
            objective: ObjectiveSpec::default(),
            alpha: 10.0,
            beta: 1.0,
            t0: 1.4,
            horizon: 140.0,
            x0: vec![10.0],
            xdot0: vec![0.0],
            lambda_floor: None,
            schedule: PolyParams::new(1.0, 0.0, 1.0, 3.0, LambdaForm::Power { l: 0.0 }),
            integrator: IntegratorSettings::default(),
            setting: Setting::FastRates,
            q: None,
            a: None,
            svg: false,
            max_rows: DEFAULT_MAX_ROWS,
            assumptions: Vec::new(),
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}` as a number")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s)).collect()
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("`{key}`: expected on/off, got `{other}`"))),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Parses the text format; `[section]` headers prefix the keys that follow.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        let mut horizon_factor = None;
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = inner.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = if section.is_empty() || k.contains('.') {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if key == "system.horizon_factor" {
                horizon_factor = Some(num(&key, v)?);
            } else {
                cfg.set(&key, v.trim())?;
            }
            seen.insert(key, ());
        }
        if let Some(f) = horizon_factor {
            if !seen.contains_key("system.horizon") {
                cfg.horizon = f * cfg.t0;
            }
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{kv}` is not of the form key=value")))?;
        let key = k.trim();
        if key == "system.horizon_factor" {
            self.horizon = num(key, v)? * self.t0;
            return Ok(());
        }
        self.set(key, v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "name" | "run.name" => self.name = v.to_string(),
            "objective.name" => self.objective.name = v.to_string(),
            "objective.dim" => {
                self.objective.dim = v
                    .parse()
                    .map_err(|_| Error::Config(format!("`{key}`: expected a positive integer, got `{v}`")))?
            }
            "objective.c" => self.objective.c = num(key, v)?,
            "objective.z" => self.objective.z = list(key, v)?,
            "objective.lo" => self.objective.lo = num(key, v)?,
            "objective.hi" => self.objective.hi = num(key, v)?,
            "system.alpha" => self.alpha = num(key, v)?,
            "system.beta" => self.beta = num(key, v)?,
            "system.t0" => self.t0 = num(key, v)?,
            "system.horizon" => self.horizon = num(key, v)?,
            "system.x0" => self.x0 = list(key, v)?,
            "system.xdot0" => self.xdot0 = list(key, v)?,
            "system.lambda_floor" => self.lambda_floor = Some(num(key, v)?),
            "schedule.b" => self.schedule.b_coeff = num(key, v)?,
            "schedule.n" => self.schedule.n = num(key, v)?,
            "schedule.eps" => self.schedule.eps_coeff = num(key, v)?,
            "schedule.d" => self.schedule.d = num(key, v)?,
            "schedule.lambda" => {
                let keep = match self.schedule.lambda {
                    LambdaForm::Power { l } | LambdaForm::Bounded { l } => l,
                    LambdaForm::Constant { c } => c,
                };
                self.schedule.lambda = match v {
                    "power" => LambdaForm::Power { l: keep },
                    "bounded" => LambdaForm::Bounded { l: if keep > 0.0 { keep } else { 1.0 } },
                    "constant" => LambdaForm::Constant { c: if keep > 0.0 { keep } else { 1.0 } },
                    other => {
                        return Err(Error::Config(format!(
                            "`{key}`: expected power, bounded or constant, got `{other}`"
                        )))
                    }
                }
            }
            "schedule.l" => {
                let l = num(key, v)?;
                self.schedule.lambda = match self.schedule.lambda {
                    LambdaForm::Bounded { .. } => LambdaForm::Bounded { l },
                    _ => LambdaForm::Power { l },
                }
            }
            "schedule.c" => self.schedule.lambda = LambdaForm::Constant { c: num(key, v)? },
            "integrator.method" => {
                self.integrator.method = match v {
                    "rk45" | "rk45_adaptive" => IntegratorSettings::default().method,
                    "rk4" | "rk4_fixed" => Method::Rk4Fixed { step: 1e-2 },
                    other => return Err(Error::Config(format!("`{key}`: unknown method `{other}`"))),
                }
            }
            "integrator.step" => match &mut self.integrator.method {
                Method::Rk4Fixed { step } => *step = num(key, v)?,
                _ => return Err(Error::Config("`integrator.step` needs integrator.method = rk4".into())),
            },
            "integrator.rtol" | "integrator.atol" | "integrator.initial_step" | "integrator.min_step"
            | "integrator.max_step" => {
                let x = num(key, v)?;
                match &mut self.integrator.method {
                    Method::Rk45Adaptive {
                        rtol,
                        atol,
                        initial_step,
                        min_step,
                        max_step,
                    } => match key {
                        "integrator.rtol" => *rtol = x,
                        "integrator.atol" => *atol = x,
                        "integrator.initial_step" => *initial_step = Some(x),
                        "integrator.min_step" => *min_step = x,
                        _ => *max_step = x,
                    },
                    _ => return Err(Error::Config(format!("`{key}` needs integrator.method = rk45"))),
                }
            }
            "integrator.stride" => {
                self.integrator.sample_stride = v
                    .parse()
                    .map_err(|_| Error::Config(format!("`{key}`: expected a positive integer, got `{v}`")))?
            }
            "integrator.max_steps" => {
                self.integrator.max_steps = v
                    .parse()
                    .map_err(|_| Error::Config(format!("`{key}`: expected a positive integer, got `{v}`")))?
            }
            "diagnostics.setting" => {
                self.setting = Setting::parse(v)
                    .ok_or_else(|| Error::Config(format!("`{key}`: expected fast, strong or alpha3, got `{v}`")))?
            }
            "diagnostics.q" => self.q = Some(num(key, v)?),
            "diagnostics.a" => self.a = Some(num(key, v)?),
            "output.svg" => self.svg = flag(key, v)?,
            "output.max_rows" => {
                self.max_rows = v
                    .parse()
                    .map_err(|_| Error::Config(format!("`{key}`: expected a nonnegative integer, got `{v}`")))?
            }
            "run.assumption" => self.assumptions.push(v.to_string()),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Serializes back to the text format; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run.name = {}", self.name);
        for a in &self.assumptions {
            let _ = writeln!(s, "run.assumption = {a}");
        }
        let o = &self.objective;
        let _ = writeln!(s, "objective.name = {}\nobjective.dim = {}\nobjective.c = {}", o.name, o.dim, o.c);
        if !o.z.is_empty() {
            let _ = writeln!(s, "objective.z = {}", fmt_list(&o.z));
        }
        let _ = writeln!(s, "objective.lo = {}\nobjective.hi = {}", o.lo, o.hi);
        let _ = writeln!(
            s,
            "system.alpha = {}\nsystem.beta = {}\nsystem.t0 = {}\nsystem.horizon = {}\nsystem.x0 = {}\nsystem.xdot0 = {}",
            self.alpha,
            self.beta,
            self.t0,
            self.horizon,
            fmt_list(&self.x0),
            fmt_list(&self.xdot0)
        );
        if let Some(f) = self.lambda_floor {
            let _ = writeln!(s, "system.lambda_floor = {f}");
        }
        let p = &self.schedule;
        let _ = writeln!(s, "schedule.b = {}\nschedule.n = {}\nschedule.eps = {}\nschedule.d = {}", p.b_coeff, p.n, p.eps_coeff, p.d);
        match p.lambda {
            LambdaForm::Power { l } => {
                let _ = writeln!(s, "schedule.lambda = power\nschedule.l = {l}");
            }
            LambdaForm::Bounded { l } => {
                let _ = writeln!(s, "schedule.lambda = bounded\nschedule.l = {l}");
            }
            LambdaForm::Constant { c } => {
                let _ = writeln!(s, "schedule.c = {c}");
            }
        }
        match self.integrator.method {
            Method::Rk4Fixed { step } => {
                let _ = writeln!(s, "integrator.method = rk4\nintegrator.step = {step}");
            }
            Method::Rk45Adaptive {
                rtol,
                atol,
                initial_step,
                min_step,
                max_step,
            } => {
                let _ = writeln!(
                    s,
                    "integrator.method = rk45\nintegrator.rtol = {rtol}\nintegrator.atol = {atol}\nintegrator.min_step = {min_step}\nintegrator.max_step = {max_step}"
                );
                if let Some(h) = initial_step {
                    let _ = writeln!(s, "integrator.initial_step = {h}");
                }
            }
        }
        let _ = writeln!(
            s,
            "integrator.stride = {}\nintegrator.max_steps = {}",
            self.integrator.sample_stride, self.integrator.max_steps
        );
        let _ = writeln!(s, "diagnostics.setting = {}", self.setting);
        if let Some(q) = self.q {
            let _ = writeln!(s, "diagnostics.q = {q}");
        }
        if let Some(a) = self.a {
            let _ = writeln!(s, "diagnostics.a = {a}");
        }
        let _ = writeln!(s, "output.svg = {}", if self.svg { "on" } else { "off" });
        let _ = writeln!(s, "output.max_rows = {}", self.max_rows);
        s
    }

    fn point(&self, v: &[f64], dim: usize, what: &str) -> Result<Point> {
        match v.len() {
            1 => Ok(Point::new(vec![v[0]; dim])),
            n if n == dim => Ok(Point::new(v.to_vec())),
            n => Err(Error::Config(format!("{what} has {n} entries, objective dimension is {dim}"))),
        }
    }

    /// Builds and validates the system; a scalar `x0`/`xdot0` is broadcast.
    pub fn build(&self) -> Result<SystemConfig> {
        let obj = build_objective(&self.objective)?;
        let m = obj.dim();
        let schedule = Schedule::polynomial(self.t0, self.schedule)?;
        let x0 = self.point(&self.x0, m, "system.x0")?;
        let xdot0 = self.point(&self.xdot0, m, "system.xdot0")?;
        let cfg = SystemConfig::new(self.alpha, self.beta, self.horizon, x0, xdot0, obj, schedule)?;
        match self.lambda_floor {
            Some(f) => cfg.with_lambda_floor(f),
            None => Ok(cfg),
        }
    }

    /// Sets one sweepable parameter.
    pub fn set_sweep_param(&mut self, param: &str, value: f64) -> Result<()> {
        let key = match param {
            "n" => "schedule.n",
            "d" => "schedule.d",
            "l" => "schedule.l",
            "alpha" => "system.alpha",
            "beta" => "system.beta",
            other => {
                return Err(Error::Config(format!(
                    "sweep parameter must be one of n, d, l, alpha, beta; got `{other}`"
                )))
            }
        };
        self.set(key, &value.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
# comment
run.name = demo
[system]
alpha = 6
beta = 0.1
t0 = 20
horizon_factor = 200
x0 = 10
[schedule]
n = 0.7
d = 1.5
lambda = bounded
l = 1
[objective]
name = dist_to_interval
";

    #[test]
    fn parse_sections_and_dotted_keys() {
        let c = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.name, "demo");
        assert_eq!((c.alpha, c.beta, c.t0, c.horizon), (6.0, 0.1, 20.0, 4000.0));
        assert_eq!(c.schedule.lambda, LambdaForm::Bounded { l: 1.0 });
        assert_eq!(c.objective.name, "dist_to_interval");
        assert!(c.build().is_ok());
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::parse(SAMPLE).unwrap();
        c.assumptions.push("x0 chosen".into());
        c.q = Some(4.0);
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        let rk4 = RunConfig::parse("integrator.method = rk4\nintegrator.step = 0.01").unwrap();
        assert_eq!(RunConfig::parse(&rk4.to_text()).unwrap(), rk4);
    }

    #[test]
    fn overrides_and_errors() {
        let mut c = RunConfig::default();
        c.apply_override("system.alpha=7").unwrap();
        assert_eq!(c.alpha, 7.0);
        assert!(c.apply_override("system.alpha").is_err());
        assert!(c.apply_override("system.gamma=1").is_err());
        assert!(c.apply_override("system.alpha=abc").is_err());
        assert!(c.apply_override("integrator.step=0.1").is_err());
        assert!(RunConfig::parse("nonsense line").is_err());
        c.x0 = vec![1.0, 2.0];
        assert!(matches!(c.build(), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_params() {
        let mut c = RunConfig::default();
        for (p, v) in [("n", 2.0), ("d", 2.5), ("l", 1.0), ("alpha", 8.0), ("beta", 0.5)] {
            c.set_sweep_param(p, v).unwrap();
        }
        assert_eq!((c.schedule.n, c.schedule.d, c.alpha, c.beta), (2.0, 2.5, 8.0, 0.5));
        assert_eq!(c.schedule.lambda, LambdaForm::Power { l: 1.0 });
        assert!(c.set_sweep_param("x0", 1.0).is_err());
    }
}
