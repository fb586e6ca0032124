use std::sync::Arc;

use proptest::prelude::*;

use proxflow::diagnostics::{compute_observables, psi, psi_via_energy, scaled_gap_running_max};
use proxflow::dynamics::{integrate, IntegratorSettings};
use proxflow::experiments::{read_csv, write_csv, CsvRow, RunConfig};
use proxflow::prox::selftest::{run_selftest, Property};
use proxflow::prox::{
    build_objective, moreau_gradient, moreau_value, prox, tikhonov_center, Objective, ObjectiveRef, ObjectiveSpec,
};
use proxflow::prox::objectives::BUILTIN_NAMES;
use proxflow::schedules::{
    check_fast_rate_conditions, default_grid, fast_rate_report, suggest_t0, LambdaForm, PolyParams, Schedule,
    SystemConfig,
};
use proxflow::{Execution, Point};

fn objective(idx: usize, dim: usize) -> ObjectiveRef {
    build_objective(&ObjectiveSpec::named(BUILTIN_NAMES[idx % BUILTIN_NAMES.len()], dim)).unwrap()
}

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prox_is_nonexpansive(idx in 0usize..5, lam in 1e-3f64..50.0, x in coords(3), y in coords(3)) {
        let obj = objective(idx, 3);
        let (px, py) = (prox(obj.as_ref(), lam, &x).unwrap(), prox(obj.as_ref(), lam, &y).unwrap());
        prop_assert!(px.dist(&py) <= Point::from(x.as_slice()).dist(&y) + 1e-12);
    }

    #[test]
    fn envelope_gradient_is_lipschitz(idx in 0usize..5, lam in 1e-3f64..50.0, x in coords(2), y in coords(2)) {
        let obj = objective(idx, 2);
        let gx = moreau_gradient(obj.as_ref(), lam, &x).unwrap();
        let gy = moreau_gradient(obj.as_ref(), lam, &y).unwrap();
        prop_assert!(gx.dist(&gy) <= Point::from(x.as_slice()).dist(&y) / lam + 1e-12 * (1.0 + 1.0 / lam));
    }

    #[test]
    fn envelope_below_objective_and_monotone(idx in 0usize..5, lam in 1e-3f64..10.0, k in 1.0f64..10.0, x in coords(2)) {
        let obj = objective(idx, 2);
        let v = obj.value(&x);
        let m1 = moreau_value(obj.as_ref(), lam, &x).unwrap();
        let m2 = moreau_value(obj.as_ref(), lam * k, &x).unwrap();
        prop_assert!(m1 <= v + 1e-12 * (1.0 + v.abs()) || v.is_infinite());
        prop_assert!(m2 <= m1 + 1e-12 * (1.0 + m1.abs()));
    }

    #[test]
    fn tikhonov_center_within_minimal_norm_ball(idx in 0usize..5, lam in 1e-3f64..50.0, eps in 1e-6f64..1e3) {
        let obj = objective(idx, 3);
        let c = tikhonov_center(obj.as_ref(), lam, eps).unwrap();
        prop_assert!(c.norm() <= obj.x_star().norm() + 1e-10);
    }

    #[test]
    fn polynomial_derivatives_match_finite_differences(
        b in 0.1f64..5.0, n in 0.0f64..3.0, e in 0.1f64..5.0, d in 0.5f64..4.0, l in 0.1f64..2.5,
        form in 0usize..3, t0 in 1.0f64..5.0, r in 1.0f64..50.0,
    ) {
        let lambda = match form {
            0 => LambdaForm::Power { l },
            1 => LambdaForm::Bounded { l },
            _ => LambdaForm::Constant { c: l },
        };
        let s = Schedule::polynomial(t0, PolyParams::new(b, n, e, d, lambda)).unwrap();
        let t = t0 * r + 0.1;
        let h = 1e-5 * t;
        let (p, m, v) = (s.values(t + h), s.values(t - h), s.values(t));
        let rel = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1e-300);
        if v.b_dot != 0.0 {
            prop_assert!(rel((p.b - m.b) / (2.0 * h), v.b_dot) <= 1e-6);
        }
        prop_assert!(rel((p.eps - m.eps) / (2.0 * h), v.eps_dot) <= 1e-6);
        if v.lambda_dot != 0.0 {
            prop_assert!(rel((p.lambda - m.lambda) / (2.0 * h), v.lambda_dot) <= 1e-6);
        }
    }

    #[test]
    fn fast_box_with_suggested_t0_passes(
        alpha in 3.2f64..12.0, nf in 0.0f64..0.999, beta in 0.0f64..2.0, e in 0.05f64..3.0,
        dx in 2.001f64..5.0, b in 0.3f64..3.0,
    ) {
        let n = nf * (alpha - 3.0);
        let d = dx.max(beta * e / 2.0);
        let p = PolyParams::new(b, n, e, d, LambdaForm::Constant { c: 1.0 });
        let t0 = suggest_t0(&p, alpha, beta).unwrap() * 1.01;
        let s = Schedule::polynomial(t0, p).unwrap();
        let r = fast_rate_report(alpha, beta, &s, &default_grid(t0));
        prop_assert!(r.all_passed(), "{}", r.to_text());

        let bad = PolyParams::new(b, alpha - 3.0 + 0.1, e, d, LambdaForm::Constant { c: 1.0 });
        let r = fast_rate_report(alpha, beta, &Schedule::polynomial(t0, bad).unwrap(), &default_grid(t0));
        prop_assert!(!r.all_passed());
    }

    #[test]
    fn config_text_round_trips(
        alpha in 0.5f64..20.0, beta in 0.0f64..5.0, t0 in 0.5f64..10.0, x0 in -100.0f64..100.0,
        n in 0.0f64..3.0, d in 0.5f64..4.0, l in 0.0f64..3.0, rtol in 1e-12f64..1e-3,
    ) {
        let mut c = RunConfig::default();
        for kv in [
            format!("system.alpha={alpha}"), format!("system.beta={beta}"), format!("system.t0={t0}"),
            format!("system.x0={x0}"), format!("schedule.n={n}"), format!("schedule.d={d}"),
            format!("schedule.l={l}"), format!("integrator.rtol={rtol}"),
        ] {
            c.apply_override(&kv).unwrap();
        }
        prop_assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn csv_round_trip_bit_exact(vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 14..15), rows in 1usize..6) {
        let mk = |k: usize| {
            let v = |i: usize| vals[(i + k) % vals.len()];
            CsvRow {
                t: v(0), x: vec![v(1), v(2)], xdot: vec![v(3), v(4)],
                obs: proxflow::diagnostics::ObservableRow {
                    t: v(0), moreau_gap: v(5), function_gap: v(6), grad_norm: v(7), prox_dist: v(8),
                    velocity_combo: v(9), dist_to_xstar: v(10), tikhonov_gap: v(11),
                },
                energy_q: v(12), psi: v(13),
            }
        };
        let data: Vec<CsvRow> = (0..rows).map(mk).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &data).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), data.len());
        for (a, b) in data.iter().zip(&back) {
            prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
            prop_assert_eq!(&a.x, &b.x);
            prop_assert_eq!(&a.xdot, &b.xdot);
            prop_assert_eq!(a.obs, b.obs);
            prop_assert_eq!(a.psi.to_bits(), b.psi.to_bits());
        }
    }
}

fn fast_cfg(alpha: f64, beta: f64, n: f64, l: f64, x0: f64, v0: f64) -> SystemConfig {
    let p = PolyParams::new(1.0, n, 1.0, 3.0, LambdaForm::Power { l });
    let t0 = suggest_t0(&p, alpha, beta).unwrap().max(1.4);
    let obj = build_objective(&ObjectiveSpec::named("abs_plus_quad", 1)).unwrap();
    let s = Schedule::polynomial(t0, p).unwrap();
    SystemConfig::new(alpha, beta, 40.0 * t0, Point::scalar(x0), Point::scalar(v0), obj, s).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectory_identities_hold_at_every_sample(
        alpha in 4.0f64..12.0, beta in 0.0f64..1.5, nf in 0.0f64..0.5, l in 0.0f64..1.0,
        x0 in -10.0f64..10.0, v0 in -2.0f64..2.0,
    ) {
        let cfg = fast_cfg(alpha, beta, nf * (alpha - 3.0), l, x0, v0);
        let traj = integrate(&cfg, &IntegratorSettings::rk45(1e-8, 1e-12)).unwrap();
        let rows = compute_observables(&traj).unwrap();
        let x_star = cfg.objective.x_star();
        let q = alpha - 1.0;
        for (s, r) in traj.samples.iter().zip(&rows) {
            let lam = cfg.schedule.values(s.t).lambda;
            let decomposition = r.function_gap + r.prox_dist * r.prox_dist / (2.0 * lam);
            prop_assert!((r.moreau_gap - decomposition).abs() <= 1e-9 * (1.0 + r.moreau_gap.abs()));
            let (a, b) = (psi(s, q, &cfg, &x_star).unwrap(), psi_via_energy(s, q, &cfg, &x_star).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
            let v = cfg.schedule.values(s.t);
            let c = tikhonov_center(cfg.objective.as_ref(), v.lambda, v.eps).unwrap();
            prop_assert!(c.norm() <= x_star.norm() + 1e-12);
        }
    }

    #[test]
    fn scaled_gap_stabilizes_for_passing_configs(
        alpha in 5.0f64..12.0, beta in 0.0f64..1.5, nf in 0.0f64..0.5, x0 in 1.0f64..10.0,
    ) {
        let cfg = fast_cfg(alpha, beta, nf * (alpha - 3.0), 0.0, x0, 0.0);
        prop_assume!(check_fast_rate_conditions(&cfg, &default_grid(cfg.t0())).all_passed());
        let traj = integrate(&cfg, &IntegratorSettings::rk45(1e-8, 1e-100)).unwrap();
        let (_, growth) = scaled_gap_running_max(&traj).unwrap();
        prop_assert!(growth <= 0.05, "last-decade growth {growth}");
    }

    #[test]
    fn reruns_are_bit_identical(alpha in 4.0f64..12.0, beta in 0.0f64..1.5, x0 in -10.0f64..10.0) {
        let cfg = fast_cfg(alpha, beta, 0.0, 0.5, x0, 0.0);
        let s = IntegratorSettings::rk45(1e-8, 1e-12);
        let (a, b) = (integrate(&cfg, &s).unwrap(), integrate(&cfg, &s).unwrap());
        prop_assert_eq!(a.samples, b.samples);
    }
}

/// A deliberately broken objective: its prox doubles the input.
#[derive(Debug)]
struct CorruptedProx;

impl Objective for CorruptedProx {
    fn name(&self) -> &str {
        "corrupted_prox"
    }
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[0].abs()
    }
    fn prox(&self, _lam: f64, x: &[f64]) -> Point {
        Point::scalar(2.0 * x[0])
    }
    fn phi_star(&self) -> f64 {
        0.0
    }
    fn x_star(&self) -> Point {
        Point::scalar(0.0)
    }
    fn argmin_description(&self) -> String {
        "{0}".into()
    }
    fn argmin_sample(&self, _u: &[f64]) -> Point {
        Point::scalar(0.0)
    }
}

#[test]
fn corrupted_prox_fails_nonexpansiveness_with_witness() {
    let reg: Vec<ObjectiveRef> = vec![Arc::new(CorruptedProx)];
    let rep = run_selftest(&reg, 1, 20, Execution::Sequential);
    assert!(!rep.all_passed());
    let f = rep.failures().find(|f| f.property == Property::Nonexpansive).expect("nonexpansive fails");
    assert!(f.witness.is_some());
    assert!(rep.table().contains("witness"));
}

#[test]
fn selftest_is_seed_deterministic_across_execution_modes() {
    let reg: Vec<ObjectiveRef> = (0..5).map(|i| objective(i, 2)).collect();
    let a = run_selftest(&reg, 99, 10, Execution::Parallel);
    let b = run_selftest(&reg, 99, 10, Execution::Sequential);
    assert_eq!(a.table(), b.table());
}
