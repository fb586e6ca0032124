//! Sums of real-exponent monomials `sum_k c_k t^{e_k}`, used to decide the
//! sign of a condition expression as `t -> infinity` for polynomial families.

use std::cmp::Ordering;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Monomials(Vec<(f64, f64)>);

const EXP_EPS: f64 = 1e-12;

impl Monomials {
    pub fn new() -> Self {
        Monomials(Vec::new())
    }

    pub fn term(coef: f64, exp: f64) -> Self {
        let mut m = Monomials::new();
        m.push(coef, exp);
        m
    }

    pub fn constant(c: f64) -> Self {
        Monomials::term(c, 0.0)
    }

    pub fn push(&mut self, coef: f64, exp: f64) {
        if coef == 0.0 {
            return;
        }
        match self.0.iter_mut().find(|(_, e)| (*e - exp).abs() <= EXP_EPS) {
            Some(slot) => slot.0 += coef,
            None => self.0.push((coef, exp)),
        }
    }

    pub fn plus(mut self, other: &Monomials) -> Self {
        for &(c, e) in &other.0 {
            self.push(c, e);
        }
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Monomials::new();
        for &(c, e) in &self.0 {
            out.push(s * c, e);
        }
        out
    }

    pub fn times(&self, other: &Monomials) -> Self {
        let mut out = Monomials::new();
        for &(c1, e1) in &self.0 {
            for &(c2, e2) in &other.0 {
                out.push(c1 * c2, e1 + e2);
            }
        }
        out
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().map(|&(c, e)| c * t.powf(e)).sum()
    }

    /// Sign of the expression for all sufficiently large `t`.
    /// Coefficients that cancel to round-off are treated as zero.
    pub fn tail_sign(&self) -> Ordering {
        let mut terms: Vec<(f64, f64)> = self.0.clone();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1));
        let scale = terms.iter().map(|(c, _)| c.abs()).fold(0.0, f64::max);
        terms
            .iter()
            .find(|(c, _)| c.abs() > 1e-12 * scale)
            .map(|(c, _)| c.partial_cmp(&0.0).unwrap_or(Ordering::Equal))
            .unwrap_or(Ordering::Equal)
    }

    /// Largest exponent carrying a non-negligible coefficient.
    pub fn leading_exponent(&self) -> Option<f64> {
        let scale = self.0.iter().map(|(c, _)| c.abs()).fold(0.0, f64::max);
        self.0
            .iter()
            .filter(|(c, _)| c.abs() > 1e-12 * scale)
            .map(|&(_, e)| e)
            .max_by(f64::total_cmp)
    }
}
