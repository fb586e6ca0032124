//! Explicit Runge-Kutta steppers on flat state vectors.

use crate::error::Result;

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for &(c, k) in terms {
        if c != 0.0 {
            let hc = h * c;
            for (o, v) in out.iter_mut().zip(k) {
                *o += hc * v;
            }
        }
    }
    out
}

/// One classical fourth-order step.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k1)]))?;
    let k3 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]))?;
    let k4 = f(t + h, &axpy(y, h, &[(1.0, &k3)]))?;
    Ok(axpy(y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]))
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub struct DopriStep {
    pub y: Vec<f64>,
    /// Derivative at the new point, reused as the first stage of the next step.
    pub f_new: Vec<f64>,
    /// Scaled RMS error estimate; the step is acceptable when `<= 1`.
    pub err: f64,
}

/// One Dormand-Prince 5(4) step given the derivative `f0` at `(t, y)`.
pub fn dopri_step<F>(f: &F, t: f64, y: &[f64], f0: &[f64], h: f64, rtol: f64, atol: f64) -> Result<DopriStep>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = f0;
    let k2 = f(t + C[1] * h, &axpy(y, h, &[(A2[0], k1)]))?;
    let k3 = f(t + C[2] * h, &axpy(y, h, &[(A3[0], k1), (A3[1], &k2)]))?;
    let k4 = f(t + C[3] * h, &axpy(y, h, &[(A4[0], k1), (A4[1], &k2), (A4[2], &k3)]))?;
    let k5 = f(t + C[4] * h, &axpy(y, h, &[(A5[0], k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]))?;
    let k6 = f(
        t + C[5] * h,
        &axpy(y, h, &[(A6[0], k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)]),
    )?;
    let y_new = axpy(y, h, &[(B5[0], k1), (B5[2], &k3), (B5[3], &k4), (B5[4], &k5), (B5[5], &k6)]);
    let k7 = f(t + h, &y_new)?;
    let ks: [&[f64]; 7] = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut acc = 0.0;
    for i in 0..y.len() {
        let e: f64 = (0..7).map(|s| (B5[s] - B4[s]) * ks[s][i]).sum::<f64>() * h;
        let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
        acc += (e / sc).powi(2);
    }
    let err = (acc / y.len().max(1) as f64).sqrt();
    Ok(DopriStep { y: y_new, f_new: k7, err })
}

/// Starting step size heuristic for an order-5 method.
pub fn initial_step<F>(f: &F, t: f64, y: &[f64], f0: &[f64], rtol: f64, atol: f64, h_max: f64) -> Result<f64>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = y.len().max(1) as f64;
    let norm = |v: &[f64]| {
        (v.iter().zip(y).map(|(a, b)| (a / (atol + rtol * b.abs())).powi(2)).sum::<f64>() / n).sqrt()
    };
    let (d0, d1) = (norm(y), norm(f0));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(h_max);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let f1 = f(t + h0, &y1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(h_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![-y[0], y[0]])
    }

    #[test]
    fn rk4_is_fourth_order() {
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = vec![1.0, 0.0];
            for k in 0..n {
                y = rk4_step(&decay, k as f64 * h, &y, h).unwrap();
            }
            (y[0] - (-1f64).exp()).abs()
        };
        let ratio = run(20) / run(40);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }

    #[test]
    fn dopri_step_is_accurate_and_estimates_error() {
        let y0 = [1.0, 0.0];
        let f0 = decay(0.0, &y0).unwrap();
        let s = dopri_step(&decay, 0.0, &y0, &f0, 0.1, 1e-8, 1e-10).unwrap();
        assert!((s.y[0] - (-0.1f64).exp()).abs() < 1e-9);
        assert!((s.y[0] + s.y[1] - 1.0).abs() < 1e-14);
        assert!(s.err > 0.0);
        assert_eq!(s.f_new, decay(0.1, &s.y).unwrap());
    }
}
