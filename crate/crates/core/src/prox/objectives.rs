//! Built-in objective registry. Every built-in is separable, has a closed-form
//! prox, and knows its optimal value and minimal-norm minimizer.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::Point;

/// A proper convex lsc objective with a closed-form proximal map.
///
/// Implementations must be immutable: every method is a pure function of its
/// arguments so objectives can be shared across worker threads.
pub trait Objective: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Closed-form `prox_{lam Phi}(x)`. Callers validate `lam > 0` and the dimension.
    fn prox(&self, lam: f64, x: &[f64]) -> Point;
    fn phi_star(&self) -> f64;
    /// Minimal-norm minimizer, the projection of the origin onto `argmin`.
    fn x_star(&self) -> Point;
    fn argmin_description(&self) -> String;

    /// Per-coordinate value for separable objectives: `value(x) = sum_i coordinate_value(i, x_i)`.
    fn coordinate_value(&self, _i: usize, _y: f64) -> Option<f64> {
        None
    }

    /// Interval outside of which coordinate `i` has infinite value.
    fn coordinate_domain(&self, _i: usize) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Values of `x_i` at which `prox_{lam Phi}` is not differentiable.
    fn prox_kinks(&self, _i: usize, _lam: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Maps a point of the unit cube onto a point of `argmin`.
    fn argmin_sample(&self, u: &[f64]) -> Point;

    fn is_separable(&self) -> bool {
        self.coordinate_value(0, 0.0).is_some()
    }
}

pub type ObjectiveRef = Arc<dyn Objective>;

fn soft_threshold(x: f64, lam: f64) -> f64 {
    x.signum() * (x.abs() - lam).max(0.0)
}

/// `|x| + x^2/2`, coordinate-wise.
#[derive(Debug, Clone)]
pub struct AbsPlusQuad {
    dim: usize,
}

impl AbsPlusQuad {
    pub fn new(dim: usize) -> Self {
        AbsPlusQuad { dim }
    }
}

impl Objective for AbsPlusQuad {
    fn name(&self) -> &str {
        "abs_plus_quad"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs() + 0.5 * v * v).sum()
    }
    fn prox(&self, lam: f64, x: &[f64]) -> Point {
        x.iter().map(|&v| soft_threshold(v, lam) / (1.0 + lam)).collect()
    }
    fn phi_star(&self) -> f64 {
        0.0
    }
    fn x_star(&self) -> Point {
        Point::zeros(self.dim)
    }
    fn argmin_description(&self) -> String {
        "{0}".into()
    }
    fn coordinate_value(&self, _i: usize, y: f64) -> Option<f64> {
        Some(y.abs() + 0.5 * y * y)
    }
    fn prox_kinks(&self, _i: usize, lam: f64) -> Vec<f64> {
        vec![-lam, lam]
    }
    fn argmin_sample(&self, _u: &[f64]) -> Point {
        Point::zeros(self.dim)
    }
}

/// Distance to the interval `[-1, 1]`, coordinate-wise.
#[derive(Debug, Clone)]
pub struct DistToInterval {
    dim: usize,
}

impl DistToInterval {
    pub fn new(dim: usize) -> Self {
        DistToInterval { dim }
    }
}

impl Objective for DistToInterval {
    fn name(&self) -> &str {
        "dist_to_interval"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| (v.abs() - 1.0).max(0.0)).sum()
    }
    fn prox(&self, lam: f64, x: &[f64]) -> Point {
        x.iter()
            .map(|&v| {
                let a = v.abs();
                if a <= 1.0 {
                    v
                } else if a <= 1.0 + lam {
                    v.signum()
                } else {
                    v - lam * v.signum()
                }
            })
            .collect()
    }
    fn phi_star(&self) -> f64 {
        0.0
    }
    fn x_star(&self) -> Point {
        Point::zeros(self.dim)
    }
    fn argmin_description(&self) -> String {
        "[-1, 1]^m".into()
    }
    fn coordinate_value(&self, _i: usize, y: f64) -> Option<f64> {
        Some((y.abs() - 1.0).max(0.0))
    }
    fn prox_kinks(&self, _i: usize, lam: f64) -> Vec<f64> {
        vec![-1.0 - lam, -1.0, 1.0, 1.0 + lam]
    }
    fn argmin_sample(&self, u: &[f64]) -> Point {
        u.iter().map(|v| 2.0 * v - 1.0).collect()
    }
}

/// `||x||_1`.
#[derive(Debug, Clone)]
pub struct L1Norm {
    dim: usize,
}

impl L1Norm {
    pub fn new(dim: usize) -> Self {
        L1Norm { dim }
    }
}

impl Objective for L1Norm {
    fn name(&self) -> &str {
        "l1_norm"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }
    fn prox(&self, lam: f64, x: &[f64]) -> Point {
        x.iter().map(|&v| soft_threshold(v, lam)).collect()
    }
    fn phi_star(&self) -> f64 {
        0.0
    }
    fn x_star(&self) -> Point {
        Point::zeros(self.dim)
    }
    fn argmin_description(&self) -> String {
        "{0}".into()
    }
    fn coordinate_value(&self, _i: usize, y: f64) -> Option<f64> {
        Some(y.abs())
    }
    fn prox_kinks(&self, _i: usize, lam: f64) -> Vec<f64> {
        vec![-lam, lam]
    }
    fn argmin_sample(&self, _u: &[f64]) -> Point {
        Point::zeros(self.dim)
    }
}

/// `(c/2) ||x - z||^2` with `c > 0`.
#[derive(Debug, Clone)]
pub struct ScaledShiftedQuadratic {
    c: f64,
    z: Point,
}

impl ScaledShiftedQuadratic {
    pub fn new(c: f64, z: Point) -> Result<Self> {
        crate::error::positive("c", c)?;
        if z.dim() == 0 || !z.is_finite() {
            return Err(Error::Validation("quadratic center must be finite and nonempty".into()));
        }
        Ok(ScaledShiftedQuadratic { c, z })
    }

    pub fn curvature(&self) -> f64 {
        self.c
    }

    pub fn center(&self) -> &Point {
        &self.z
    }
}

impl Objective for ScaledShiftedQuadratic {
    fn name(&self) -> &str {
        "scaled_shifted_quadratic"
    }
    fn dim(&self) -> usize {
        self.z.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.c * self.z.dist(x).powi(2)
    }
    fn prox(&self, lam: f64, x: &[f64]) -> Point {
        let lc = lam * self.c;
        x.iter()
            .zip(self.z.iter())
            .map(|(v, z)| (v + lc * z) / (1.0 + lc))
            .collect()
    }
    fn phi_star(&self) -> f64 {
        0.0
    }
    fn x_star(&self) -> Point {
        self.z.clone()
    }
    fn argmin_description(&self) -> String {
        format!("{{{:?}}}", self.z)
    }
    fn coordinate_value(&self, i: usize, y: f64) -> Option<f64> {
        let d = y - self.z[i];
        Some(0.5 * self.c * d * d)
    }
    fn argmin_sample(&self, _u: &[f64]) -> Point {
        self.z.clone()
    }
}

/// Indicator of the box `[lo, hi]^m`.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    dim: usize,
    lo: f64,
    hi: f64,
}

impl BoxIndicator {
    pub fn new(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Validation(format!("box bounds must satisfy lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(BoxIndicator { dim, lo, hi })
    }
}

impl Objective for BoxIndicator {
    fn name(&self) -> &str {
        "box_indicator"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| v >= self.lo && v <= self.hi) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, _lam: f64, x: &[f64]) -> Point {
        x.iter().map(|v| v.clamp(self.lo, self.hi)).collect()
    }
    fn phi_star(&self) -> f64 {
        0.0
    }
    fn x_star(&self) -> Point {
        Point::new(vec![0.0_f64.clamp(self.lo, self.hi); self.dim])
    }
    fn argmin_description(&self) -> String {
        format!("[{}, {}]^{}", self.lo, self.hi, self.dim)
    }
    fn coordinate_value(&self, _i: usize, y: f64) -> Option<f64> {
        Some(if y >= self.lo && y <= self.hi { 0.0 } else { f64::INFINITY })
    }
    fn coordinate_domain(&self, _i: usize) -> (f64, f64) {
        (self.lo, self.hi)
    }
    fn prox_kinks(&self, _i: usize, _lam: f64) -> Vec<f64> {
        vec![self.lo, self.hi]
    }
    fn argmin_sample(&self, u: &[f64]) -> Point {
        u.iter().map(|v| self.lo + v * (self.hi - self.lo)).collect()
    }
}

/// Parameters accepted by [`build_objective`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub name: String,
    pub dim: usize,
    pub c: f64,
    pub z: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl ObjectiveSpec {
    pub fn named(name: &str, dim: usize) -> Self {
        ObjectiveSpec {
            name: name.to_string(),
            dim,
            ..Default::default()
        }
    }
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            name: "abs_plus_quad".into(),
            dim: 1,
            c: 1.0,
            z: Vec::new(),
            lo: -1.0,
            hi: 1.0,
        }
    }
}

pub const BUILTIN_NAMES: [&str; 5] = [
    "abs_plus_quad",
    "dist_to_interval",
    "l1_norm",
    "scaled_shifted_quadratic",
    "box_indicator",
];

pub fn build_objective(spec: &ObjectiveSpec) -> Result<ObjectiveRef> {
    if spec.dim == 0 {
        return Err(Error::Validation("objective dimension must be >= 1".into()));
    }
    let obj: ObjectiveRef = match spec.name.as_str() {
        "abs_plus_quad" => Arc::new(AbsPlusQuad::new(spec.dim)),
        "dist_to_interval" => Arc::new(DistToInterval::new(spec.dim)),
        "l1_norm" => Arc::new(L1Norm::new(spec.dim)),
        "scaled_shifted_quadratic" => {
            let z = match spec.z.len() {
                0 => vec![0.0; spec.dim],
                1 => vec![spec.z[0]; spec.dim],
                n if n == spec.dim => spec.z.clone(),
                n => return Err(Error::DimensionMismatch { expected: spec.dim, got: n }),
            };
            Arc::new(ScaledShiftedQuadratic::new(spec.c, Point::new(z))?)
        }
        "box_indicator" => Arc::new(BoxIndicator::new(spec.dim, spec.lo, spec.hi)?),
        other => {
            return Err(Error::Validation(format!(
                "unknown objective `{other}` (known: {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    Ok(obj)
}

/// The registry exercised by the prox self-test.
pub fn default_registry() -> Vec<ObjectiveRef> {
    vec![
        Arc::new(AbsPlusQuad::new(1)),
        Arc::new(DistToInterval::new(1)),
        Arc::new(L1Norm::new(3)),
        Arc::new(ScaledShiftedQuadratic::new(1.5, Point::new(vec![4.0, -1.0])).unwrap()),
        Arc::new(BoxIndicator::new(2, 0.5, 2.0).unwrap()),
    ]
}
