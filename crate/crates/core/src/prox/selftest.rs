//! Randomized property suite over an objective registry.
//!
//! Each (objective, property) pair draws its own seeded stream. Results do
//! not depend on the execution order or the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::parallel::{self, Execution};
use crate::point::Point;

use super::objectives::ObjectiveRef;
use super::oracle::{self, ProxOracleSettings};
use super::*;

/// Finite-difference step for gradient and lambda-derivative checks.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Nonexpansive,
    EnvelopeBound,
    EnvelopeMonotoneInLambda,
    GradientFiniteDifference,
    GradientLipschitz,
    LambdaDerivativeFiniteDifference,
    EnvelopeOfEnvelope,
    CompositionVsOracle,
    ClosedFormVsOracle,
    TikhonovNormBound,
    TikhonovLimit,
}

impl Property {
    pub const ALL: [Property; 11] = [
        Property::Nonexpansive,
        Property::EnvelopeBound,
        Property::EnvelopeMonotoneInLambda,
        Property::GradientFiniteDifference,
        Property::GradientLipschitz,
        Property::LambdaDerivativeFiniteDifference,
        Property::EnvelopeOfEnvelope,
        Property::CompositionVsOracle,
        Property::ClosedFormVsOracle,
        Property::TikhonovNormBound,
        Property::TikhonovLimit,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Property::Nonexpansive => "nonexpansive",
            Property::EnvelopeBound => "envelope_bound",
            Property::EnvelopeMonotoneInLambda => "envelope_monotone_in_lambda",
            Property::GradientFiniteDifference => "gradient_fd",
            Property::GradientLipschitz => "gradient_lipschitz",
            Property::LambdaDerivativeFiniteDifference => "lambda_derivative_fd",
            Property::EnvelopeOfEnvelope => "envelope_of_envelope",
            Property::CompositionVsOracle => "composition_vs_oracle",
            Property::ClosedFormVsOracle => "closed_form_vs_oracle",
            Property::TikhonovNormBound => "tikhonov_norm_bound",
            Property::TikhonovLimit => "tikhonov_limit",
        }
    }

    /// Largest acceptable error statistic.
    pub fn tolerance(self, oracle_tol: f64) -> f64 {
        match self {
            Property::Nonexpansive | Property::GradientLipschitz => 1e-12,
            Property::EnvelopeBound | Property::EnvelopeMonotoneInLambda => 1e-12,
            Property::GradientFiniteDifference => 1e-5,
            Property::LambdaDerivativeFiniteDifference => 1e-4,
            Property::EnvelopeOfEnvelope | Property::CompositionVsOracle => 1e-6,
            Property::ClosedFormVsOracle => oracle_tol,
            Property::TikhonovNormBound => 1e-10,
            Property::TikhonovLimit => 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub property: Property,
    pub objective: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub results: Vec<PropertyResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    /// Fixed-width text table, one row per (property, objective).
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<30} {:<26} {:>7} {:>12} {:>10}  {}\n",
            "property", "objective", "samples", "max_error", "tolerance", "status"
        );
        for r in &self.results {
            out += &format!(
                "{:<30} {:<26} {:>7} {:>12.3e} {:>10.1e}  {}\n",
                r.property.id(),
                r.objective,
                r.samples,
                r.max_error,
                r.tolerance,
                if r.passed { "pass" } else { "FAIL" }
            );
            if let Some(w) = r.witness.as_ref().filter(|_| !r.passed) {
                out += &format!("    witness: {w}\n");
            }
        }
        out
    }
}

struct Tracker {
    max_error: f64,
    witness: Option<String>,
    tolerance: f64,
}

impl Tracker {
    fn new(tolerance: f64) -> Self {
        Tracker {
            max_error: 0.0,
            witness: None,
            tolerance,
        }
    }

    fn record(&mut self, err: f64, witness: impl FnOnce() -> String) {
        let err = if err.is_nan() { f64::INFINITY } else { err };
        if err > self.max_error {
            self.max_error = err;
            if err > self.tolerance {
                self.witness = Some(witness());
            }
        }
    }
}

fn sample_point(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()
}

fn sample_lambda(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-1.3..0.7))
}

fn far_from_kinks(obj: &dyn Objective, lam: f64, x: &[f64], margin: f64) -> bool {
    x.iter()
        .enumerate()
        .all(|(i, &xi)| obj.prox_kinks(i, lam).iter().all(|k| (xi - k).abs() >= margin))
}

/// Draws a point at distance >= `10 * FD_STEP` from every prox kink.
fn sample_smooth_point(rng: &mut ChaCha8Rng, obj: &dyn Objective, lam: f64) -> Point {
    loop {
        let x = sample_point(rng, obj.dim());
        if far_from_kinks(obj, lam, &x, 10.0 * FD_STEP * (1.0 + lam)) {
            return x;
        }
    }
}

fn rel_err(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(1.0)
}

fn check_property(
    obj: &dyn Objective,
    prop: Property,
    samples: usize,
    rng: &mut ChaCha8Rng,
    settings: &ProxOracleSettings,
) -> PropertyResult {
    let m = obj.dim();
    let mut t = Tracker::new(prop.tolerance(settings.tolerance));
    let fail = |e: crate::error::Error| format!("error: {e}");
    for _ in 0..samples {
        let lam = sample_lambda(rng);
        match prop {
            Property::Nonexpansive => {
                let (x, y) = (sample_point(rng, m), sample_point(rng, m));
                let d = obj.prox(lam, &x).dist(&obj.prox(lam, &y));
                t.record(d - x.dist(&y), || format!("lam={lam}, x={x:?}, y={y:?}"));
            }
            Property::EnvelopeBound => {
                let x = sample_point(rng, m);
                let env = moreau_value(obj, lam, &x).unwrap_or(f64::NAN);
                let excess = env - obj.value(&x);
                t.record(excess.max(0.0), || format!("lam={lam}, x={x:?}"));
            }
            Property::EnvelopeMonotoneInLambda => {
                let x = sample_point(rng, m);
                let grid: Vec<f64> = (0..12).map(|k| lam * 1.5f64.powi(k)).collect();
                let vals: Vec<f64> = grid.iter().map(|&l| moreau_value(obj, l, &x).unwrap_or(f64::NAN)).collect();
                let worst = vals.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
                t.record(worst, || format!("x={x:?}, lambda grid from {lam}"));
            }
            Property::GradientFiniteDifference => {
                let x = sample_smooth_point(rng, obj, lam);
                let g = obj.prox(lam, &x);
                let g = x.lin_comb(1.0 / lam, &g, -1.0 / lam);
                for i in 0..m {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += FD_STEP;
                    xm[i] -= FD_STEP;
                    let fd = (moreau_value(obj, lam, &xp).unwrap() - moreau_value(obj, lam, &xm).unwrap())
                        / (2.0 * FD_STEP);
                    t.record(rel_err(fd, g[i]), || format!("lam={lam}, x={x:?}, coord {i}: fd={fd}, grad={}", g[i]));
                }
            }
            Property::GradientLipschitz => {
                let (x, y) = (sample_point(rng, m), sample_point(rng, m));
                let gx = moreau_gradient(obj, lam, &x).unwrap();
                let gy = moreau_gradient(obj, lam, &y).unwrap();
                t.record(gx.dist(&gy) - x.dist(&y) / lam, || format!("lam={lam}, x={x:?}, y={y:?}"));
            }
            Property::LambdaDerivativeFiniteDifference => {
                let h = FD_STEP * lam;
                let x = loop {
                    let x = sample_smooth_point(rng, obj, lam);
                    if far_from_kinks(obj, lam + h, &x, 10.0 * h) && far_from_kinks(obj, lam - h, &x, 10.0 * h) {
                        break x;
                    }
                };
                let fd = (moreau_value(obj, lam + h, &x).unwrap() - moreau_value(obj, lam - h, &x).unwrap()) / (2.0 * h);
                let exact = moreau_lambda_derivative(obj, lam, &x).unwrap();
                t.record(rel_err(fd, exact), || format!("lam={lam}, x={x:?}: fd={fd}, exact={exact}"));
            }
            Property::EnvelopeOfEnvelope => {
                let mu = sample_lambda(rng);
                let x = sample_point(rng, m);
                match envelope_of_envelope_check_with(obj, lam, mu, &x, settings) {
                    Ok((l, r)) => t.record((l - r).abs(), || format!("lam={lam}, mu={mu}, x={x:?}: {l} vs {r}")),
                    Err(e) => t.record(f64::INFINITY, || fail(e)),
                }
            }
            Property::CompositionVsOracle => {
                let mu = sample_lambda(rng);
                let x = sample_point(rng, m);
                let closed = envelope_composition_prox(obj, lam, mu, &x).unwrap();
                match oracle::envelope_prox_oracle(obj, lam, mu, &x, settings) {
                    Ok((p, _)) => t.record(p.dist(&closed), || format!("lam={lam}, mu={mu}, x={x:?}")),
                    Err(e) => t.record(f64::INFINITY, || fail(e)),
                }
            }
            Property::ClosedFormVsOracle => {
                let x = sample_point(rng, m);
                let closed = obj.prox(lam, &x);
                match oracle::prox_oracle(obj, lam, &x, settings) {
                    Ok(p) => {
                        let err = p.iter().zip(closed.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        t.record(err, || format!("lam={lam}, x={x:?}: oracle {p:?} vs {closed:?}"))
                    }
                    Err(e) => t.record(f64::INFINITY, || fail(e)),
                }
            }
            Property::TikhonovNormBound => {
                let eps = 10f64.powf(rng.gen_range(-4.0..2.0));
                let c = tikhonov_center(obj, lam, eps).unwrap();
                t.record(c.norm() - obj.x_star().norm(), || format!("lam={lam}, eps={eps}: center {c:?}"));
            }
            Property::TikhonovLimit => {
                let xs = obj.x_star();
                let dists: Vec<f64> = (0..=24)
                    .map(|k| tikhonov_center(obj, lam, 10f64.powf(1.0 - 0.5 * k as f64)).unwrap().dist(&xs))
                    .collect();
                let rise = dists.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
                let last = *dists.last().unwrap();
                // a rise along the eps grid is scored as a failure
                let err = if rise > 1e-12 { f64::INFINITY } else { last };
                t.record(err, || format!("lam={lam}: distances {dists:?}"));
            }
        }
    }
    PropertyResult {
        property: prop,
        objective: obj.name().to_string(),
        samples,
        max_error: t.max_error,
        tolerance: t.tolerance,
        passed: t.max_error <= t.tolerance,
        witness: t.witness,
    }
}

/// Runs every property on every objective with `samples` draws each.
pub fn run_selftest(registry: &[ObjectiveRef], seed: u64, samples: usize, exec: Execution) -> SelftestReport {
    let settings = ProxOracleSettings::default();
    let jobs: Vec<(usize, usize)> = (0..registry.len())
        .flat_map(|o| (0..Property::ALL.len()).map(move |p| (o, p)))
        .collect();
    let results = parallel::map(exec, &jobs, |&(o, p)| {
        let stream = (o * Property::ALL.len() + p) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        check_property(registry[o].as_ref(), Property::ALL[p], samples, &mut rng, &settings)
    });
    SelftestReport { seed, results }
}
