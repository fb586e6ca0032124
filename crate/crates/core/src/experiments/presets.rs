//! Named experiment presets.

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::prox::ObjectiveSpec;
use crate::schedules::{LambdaForm, PolyParams, Setting};

pub const PRESET_NAMES: [&str; 8] = ["rates", "strong", "fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

/// Absolute tolerance used by the presets.
pub const PRESET_ATOL: f64 = 1e-100;

const X0_NOTE: &str = "x0 = 10 and xdot0 = 0 are assumed for the interval-distance experiments";
const BETA_RATES_NOTE: &str = "beta = 1 is assumed for the abs_plus_quad experiments";
const BETA_T0_NOTE: &str = "beta = 0.1 and t0 = 20 chosen so that the strong-convergence checks pass";

/// `abs_plus_quad`, alpha = 10, t0 = 1.4, x0 = 10, horizon 100 t0.
pub fn rates_base() -> RunConfig {
    let mut c = RunConfig {
        name: "rates".into(),
        objective: ObjectiveSpec::named("abs_plus_quad", 1),
        alpha: 10.0,
        beta: 1.0,
        t0: 1.4,
        horizon: 140.0,
        x0: vec![10.0],
        xdot0: vec![0.0],
        schedule: PolyParams::new(1.0, 0.0, 1.0, 3.0, LambdaForm::Power { l: 0.0 }),
        setting: Setting::FastRates,
        assumptions: vec![BETA_RATES_NOTE.into()],
        ..RunConfig::default()
    };
    c.integrator = crate::dynamics::IntegratorSettings::rk45(1e-8, PRESET_ATOL);
    c
}

/// `dist_to_interval`, alpha = 6, n = 0.7, lambda = 1 - 1/t, eps = t^{-3/2}, horizon 200 t0.
pub fn strong_base() -> RunConfig {
    let mut c = RunConfig {
        name: "strong".into(),
        objective: ObjectiveSpec::named("dist_to_interval", 1),
        alpha: 6.0,
        beta: 0.1,
        t0: 20.0,
        horizon: 4000.0,
        x0: vec![10.0],
        xdot0: vec![0.0],
        schedule: PolyParams::new(1.0, 0.7, 1.0, 1.5, LambdaForm::Bounded { l: 1.0 }),
        setting: Setting::StrongConvergence,
        assumptions: vec![X0_NOTE.into(), BETA_T0_NOTE.into()],
        ..RunConfig::default()
    };
    c.integrator = crate::dynamics::IntegratorSettings::rk45(1e-8, PRESET_ATOL);
    c
}

fn variant(base: &RunConfig, name: String, f: impl FnOnce(&mut RunConfig)) -> RunConfig {
    let mut c = base.clone();
    c.name = name;
    f(&mut c);
    c
}

/// The runs that make up a preset, one config per curve.
pub fn preset(name: &str) -> Result<Vec<RunConfig>> {
    let r = rates_base();
    let s = strong_base();
    let runs = match name {
        "rates" => vec![r],
        "strong" => vec![s],
        "fig1" => [0.0, 1.0, 2.0]
            .iter()
            .map(|&n| variant(&r, format!("fig1_n{n}"), |c| c.schedule.n = n))
            .collect(),
        "fig2" => [0.0, 1.0, 2.0]
            .iter()
            .map(|&l| variant(&r, format!("fig2_l{l}"), |c| c.schedule.lambda = LambdaForm::Power { l }))
            .collect(),
        "fig3" => [2.5, 3.0, 3.5]
            .iter()
            .map(|&d| variant(&r, format!("fig3_d{d}"), |c| c.schedule.d = d))
            .collect(),
        "fig4" | "fig5" => {
            let lambda = if name == "fig4" {
                LambdaForm::Constant { c: 1.0 }
            } else {
                LambdaForm::Bounded { l: 1.0 }
            };
            vec![
                variant(&s, format!("{name}_no_tikhonov"), |c| {
                    c.schedule.lambda = lambda;
                    c.schedule.eps_coeff = 0.0;
                }),
                variant(&s, format!("{name}_tikhonov"), |c| c.schedule.lambda = lambda),
            ]
        }
        "fig6" => [1.1, 1.5, 1.9]
            .iter()
            .map(|&d| variant(&s, format!("fig6_d{d}"), |c| c.schedule.d = d))
            .collect(),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(runs)
}
