//! Proximal calculus: prox maps, Moreau envelopes and their derivatives,
//! the envelope composition identities, and Tikhonov-regularized centers.

pub mod objectives;
pub mod oracle;
pub mod selftest;

use crate::error::{positive, Error, Result};
use crate::point::Point;

pub use objectives::{build_objective, default_registry, Objective, ObjectiveRef, ObjectiveSpec};
pub use oracle::{prox_oracle, ProxOracleSettings};

fn check_point(obj: &dyn Objective, x: &[f64]) -> Result<()> {
    if x.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("non-finite point {x:?}")));
    }
    Ok(())
}

/// `prox_{lam Phi}(x)`, the unique minimizer of `Phi(y) + ||x - y||^2 / (2 lam)`.
pub fn prox(obj: &dyn Objective, lam: f64, x: &[f64]) -> Result<Point> {
    positive("lam", lam)?;
    check_point(obj, x)?;
    Ok(obj.prox(lam, x))
}

/// Moreau envelope `Phi_lam(x)`.
pub fn moreau_value(obj: &dyn Objective, lam: f64, x: &[f64]) -> Result<f64> {
    let p = prox(obj, lam, x)?;
    Ok(obj.value(&p) + p.dist(x).powi(2) / (2.0 * lam))
}

/// `grad Phi_lam(x) = (x - prox_{lam Phi}(x)) / lam`.
pub fn moreau_gradient(obj: &dyn Objective, lam: f64, x: &[f64]) -> Result<Point> {
    let p = prox(obj, lam, x)?;
    Ok(Point::from(x).lin_comb(1.0 / lam, &p, -1.0 / lam))
}

/// `d/dlam Phi_lam(x) = -||grad Phi_lam(x)||^2 / 2`.
pub fn moreau_lambda_derivative(obj: &dyn Objective, lam: f64, x: &[f64]) -> Result<f64> {
    Ok(-0.5 * moreau_gradient(obj, lam, x)?.norm_sq())
}

/// `prox_{mu Phi_lam}(x) = lam/(lam+mu) x + mu/(lam+mu) prox_{(lam+mu) Phi}(x)`.
pub fn envelope_composition_prox(obj: &dyn Objective, lam: f64, mu: f64, x: &[f64]) -> Result<Point> {
    positive("lam", lam)?;
    positive("mu", mu)?;
    let s = lam + mu;
    let p = prox(obj, s, x)?;
    Ok(Point::from(x).lin_comb(lam / s, &p, mu / s))
}

/// Returns `((Phi_lam)_mu(x), Phi_{lam+mu}(x))`: the left side by nested
/// oracle minimization, the right side from the closed-form prox.
pub fn envelope_of_envelope_check(obj: &dyn Objective, lam: f64, mu: f64, x: &[f64]) -> Result<(f64, f64)> {
    envelope_of_envelope_check_with(obj, lam, mu, x, &ProxOracleSettings::default())
}

pub fn envelope_of_envelope_check_with(
    obj: &dyn Objective,
    lam: f64,
    mu: f64,
    x: &[f64],
    settings: &ProxOracleSettings,
) -> Result<(f64, f64)> {
    check_point(obj, x)?;
    let (_, left) = oracle::envelope_prox_oracle(obj, lam, mu, x, settings)?;
    let right = moreau_value(obj, lam + mu, x)?;
    Ok((left, right))
}

/// Minimizer of `Phi_lam(x) + (eps/2) ||x||^2`, computed as
/// `prox_{(lam + 1/eps) Phi}(0) / (lam eps + 1)`.
pub fn tikhonov_center(obj: &dyn Objective, lam: f64, eps: f64) -> Result<Point> {
    positive("lam", lam)?;
    positive("eps", eps)?;
    let p = obj.prox(lam + 1.0 / eps, &Point::zeros(obj.dim()));
    Ok(p.scale(1.0 / (lam * eps + 1.0)))
}

/// Norm of `grad Phi_lam(z) + eps z`, zero exactly at the Tikhonov center.
pub fn fooc_residual(obj: &dyn Objective, lam: f64, eps: f64, z: &[f64]) -> Result<f64> {
    let g = moreau_gradient(obj, lam, z)?;
    Ok(g.lin_comb(1.0, z, eps).norm())
}

#[cfg(test)]
mod tests {
    use super::objectives::*;
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn prox_examples() {
        let p = prox(&AbsPlusQuad::new(1), 1.0, &[2.0]).unwrap();
        assert!(close(p[0], 0.5, 1e-15));
        let p = prox(&L1Norm::new(2), 0.5, &[1.0, -0.2]).unwrap();
        assert_eq!(p, Point::new(vec![0.5, 0.0]));
        for obj in default_registry() {
            let xs = obj.x_star();
            for lam in [0.1, 1.0, 7.0] {
                assert!(prox(obj.as_ref(), lam, &xs).unwrap().dist(&xs) < 1e-14, "{}", obj.name());
            }
        }
    }

    #[test]
    fn nonpositive_lambda_is_a_domain_error() {
        let obj = L1Norm::new(1);
        for lam in [0.0, -1.0, f64::NAN] {
            assert!(matches!(prox(&obj, lam, &[1.0]), Err(Error::ParameterDomain { .. })));
            assert!(moreau_value(&obj, lam, &[1.0]).is_err());
            assert!(moreau_gradient(&obj, lam, &[1.0]).is_err());
            assert!(moreau_lambda_derivative(&obj, lam, &[1.0]).is_err());
            assert!(envelope_composition_prox(&obj, 1.0, lam, &[1.0]).is_err());
            assert!(tikhonov_center(&obj, 1.0, lam).is_err());
        }
        assert!(matches!(prox(&obj, 1.0, &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn moreau_value_examples() {
        assert!(close(moreau_value(&L1Norm::new(1), 1.0, &[2.0]).unwrap(), 1.5, 1e-15));
        assert!(close(moreau_value(&AbsPlusQuad::new(1), 1.0, &[2.0]).unwrap(), 1.75, 1e-15));
        for obj in default_registry() {
            let v = moreau_value(obj.as_ref(), 0.7, &obj.x_star()).unwrap();
            assert!(close(v, obj.phi_star(), 1e-14));
        }
    }

    #[test]
    fn gradient_and_lambda_derivative_examples() {
        assert_eq!(moreau_gradient(&L1Norm::new(1), 1.0, &[2.0]).unwrap()[0], 1.0);
        assert_eq!(moreau_gradient(&AbsPlusQuad::new(1), 1.0, &[2.0]).unwrap()[0], 1.5);
        assert_eq!(moreau_lambda_derivative(&L1Norm::new(1), 1.0, &[2.0]).unwrap(), -0.5);
        assert_eq!(moreau_lambda_derivative(&AbsPlusQuad::new(1), 1.0, &[2.0]).unwrap(), -1.125);
        for obj in default_registry() {
            let xs = obj.x_star();
            assert!(moreau_gradient(obj.as_ref(), 2.0, &xs).unwrap().norm() < 1e-14);
            assert!(moreau_lambda_derivative(obj.as_ref(), 2.0, &xs).unwrap().abs() < 1e-28);
        }
    }

    #[test]
    fn composition_examples() {
        let l1 = L1Norm::new(1);
        assert_eq!(envelope_composition_prox(&l1, 1.0, 1.0, &[2.0]).unwrap()[0], 1.0);
        assert_eq!(envelope_composition_prox(&l1, 3.0, 1.0, &[2.0]).unwrap()[0], 1.5);
        let (l, r) = envelope_of_envelope_check(&l1, 1.0, 1.0, &[3.0]).unwrap();
        assert!(close(l, 2.0, 1e-9) && close(r, 2.0, 1e-15));
        let (l, r) = envelope_of_envelope_check(&AbsPlusQuad::new(1), 0.5, 0.5, &[2.0]).unwrap();
        assert!(close(l, r, 1e-8), "{l} vs {r}");
        for obj in default_registry() {
            let xs = obj.x_star();
            let (l, r) = envelope_of_envelope_check(obj.as_ref(), 0.5, 1.5, &xs).unwrap();
            assert!(close(l, obj.phi_star(), 1e-9) && close(r, obj.phi_star(), 1e-14));
            assert!(envelope_composition_prox(obj.as_ref(), 0.5, 1.5, &xs).unwrap().dist(&xs) < 1e-14);
        }
    }

    #[test]
    fn tikhonov_center_examples() {
        assert_eq!(tikhonov_center(&L1Norm::new(1), 1.0, 1.0).unwrap()[0], 0.0);
        assert_eq!(tikhonov_center(&DistToInterval::new(1), 1.0, 0.5).unwrap()[0], 0.0);
        let q = ScaledShiftedQuadratic::new(1.0, Point::scalar(4.0)).unwrap();
        let z = tikhonov_center(&q, 1.0, 1.0).unwrap();
        assert!(close(z[0], 4.0 / 3.0, 1e-15));
        assert!(fooc_residual(&q, 1.0, 1.0, &z).unwrap() < 1e-10);
    }
}
