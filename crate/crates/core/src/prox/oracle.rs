//! Derivative-free verification oracle for proximal maps and Moreau envelopes.
//!
//! Each coordinate of a separable objective is handled by golden-section
//! search on the strongly convex prox objective. Nothing here calls the
//! closed-form prox.

use crate::error::{positive, Error, Result};
use crate::point::Point;

use super::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxOracleSettings {
    /// Lower bound on the half-width of the initial search bracket.
    pub bracket_halfwidth: f64,
    /// Accuracy of the returned minimizer.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ProxOracleSettings {
    fn default() -> Self {
        ProxOracleSettings {
            bracket_halfwidth: 1.0,
            tolerance: 1e-6,
            max_iterations: 400,
        }
    }
}

impl ProxOracleSettings {
    pub fn validate(&self) -> Result<()> {
        positive("bracket_halfwidth", self.bracket_halfwidth)?;
        positive("tolerance", self.tolerance)?;
        if self.max_iterations == 0 {
            return Err(Error::ParameterDomain {
                name: "max_iterations",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(())
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `width` or after `max_iter`
/// shrink steps and returns the best point seen.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64, max_iter: usize) -> f64 {
    if hi - lo <= width {
        return 0.5 * (lo + hi);
    }
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if hi - lo <= width {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    [(mid, fm), (c, fc), (d, fd)]
        .into_iter()
        .fold((mid, fm), |best, cand| if cand.1 < best.1 { cand } else { best })
        .0
}

/// Minimizer of `phi(y) + (x - y)^2 / (2 lam)` over `domain`.
///
/// `scale` is the norm of the full point, used to size the bracket.
pub fn prox_scalar(
    phi: &dyn Fn(f64) -> f64,
    domain: (f64, f64),
    lam: f64,
    x: f64,
    scale: f64,
    settings: &ProxOracleSettings,
) -> f64 {
    let objective = |y: f64| phi(y) + (x - y) * (x - y) / (2.0 * lam);
    let h = 1e-6 * x.abs().max(1.0);
    let f0 = phi(x);
    let slope = [(phi(x + h) - f0) / h, (f0 - phi(x - h)) / h]
        .into_iter()
        .filter(|s| s.is_finite())
        .fold(0.0_f64, |m, s| m.max(s.abs()));
    let mut half = (scale + lam * (1.0 + slope)).max(settings.bracket_halfwidth);
    let width = settings.tolerance * 1e-3;
    loop {
        let (mut lo, mut hi) = (x - half, x + half);
        lo = lo.max(domain.0);
        hi = hi.min(domain.1);
        if lo > hi {
            // x lies far outside the domain; the minimizer is in the domain itself.
            lo = domain.0;
            hi = domain.1;
        }
        let y = golden_section(objective, lo, hi, width, settings.max_iterations);
        let at_open_edge =
            (y - lo < 4.0 * width && lo > domain.0) || (hi - y < 4.0 * width && hi < domain.1);
        if !at_open_edge || half > 1e12 {
            return y;
        }
        half *= 2.0;
    }
}

fn coordinate_fn(obj: &dyn Objective, i: usize) -> Result<impl Fn(f64) -> f64 + '_> {
    if obj.coordinate_value(i, 0.0).is_none() {
        return Err(Error::UnsupportedOracle(obj.name().to_string()));
    }
    Ok(move |y: f64| obj.coordinate_value(i, y).unwrap_or(f64::INFINITY))
}

fn check_point(obj: &dyn Objective, x: &[f64]) -> Result<()> {
    if x.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Oracle prox: golden-section search per coordinate.
pub fn prox_oracle(obj: &dyn Objective, lam: f64, x: &[f64], settings: &ProxOracleSettings) -> Result<Point> {
    positive("lam", lam)?;
    settings.validate()?;
    check_point(obj, x)?;
    let scale = Point::from(x).norm();
    (0..obj.dim())
        .map(|i| {
            let phi = coordinate_fn(obj, i)?;
            Ok(prox_scalar(&phi, obj.coordinate_domain(i), lam, x[i], scale, settings))
        })
        .collect()
}

/// Coordinate-wise Moreau envelope computed from oracle minimizers.
///
/// The inner search runs to a width far below the outer tolerance: at a kink of
/// `phi` the value error is first order in the argmin error.
fn envelope_scalar(phi: &dyn Fn(f64) -> f64, domain: (f64, f64), lam: f64, x: f64, scale: f64, s: &ProxOracleSettings) -> f64 {
    let inner = ProxOracleSettings {
        tolerance: s.tolerance * 1e-3,
        ..*s
    };
    let p = prox_scalar(phi, domain, lam, x, scale, &inner);
    phi(p) + (x - p) * (x - p) / (2.0 * lam)
}

/// Oracle Moreau envelope `Phi_lam(x)`.
pub fn envelope_value_oracle(obj: &dyn Objective, lam: f64, x: &[f64], settings: &ProxOracleSettings) -> Result<f64> {
    positive("lam", lam)?;
    settings.validate()?;
    check_point(obj, x)?;
    let scale = Point::from(x).norm();
    let mut total = 0.0;
    for i in 0..obj.dim() {
        let phi = coordinate_fn(obj, i)?;
        total += envelope_scalar(&phi, obj.coordinate_domain(i), lam, x[i], scale, settings);
    }
    Ok(total)
}

/// Oracle prox of the smooth envelope `Phi_lam` with index `mu`, and the
/// corresponding nested envelope value `(Phi_lam)_mu(x)`.
pub fn envelope_prox_oracle(
    obj: &dyn Objective,
    lam: f64,
    mu: f64,
    x: &[f64],
    settings: &ProxOracleSettings,
) -> Result<(Point, f64)> {
    positive("lam", lam)?;
    positive("mu", mu)?;
    settings.validate()?;
    check_point(obj, x)?;
    let scale = Point::from(x).norm();
    let mut p = Vec::with_capacity(x.len());
    let mut value = 0.0;
    for i in 0..obj.dim() {
        let phi = coordinate_fn(obj, i)?;
        let domain = obj.coordinate_domain(i);
        let env = |y: f64| envelope_scalar(&phi, domain, lam, y, scale.max(y.abs()), settings);
        let pi = prox_scalar(&env, (f64::NEG_INFINITY, f64::INFINITY), mu, x[i], scale, settings);
        value += env(pi) + (x[i] - pi) * (x[i] - pi) / (2.0 * mu);
        p.push(pi);
    }
    Ok((Point::new(p), value))
}
