//! Simulation and verification toolkit for second-order inertial dynamics
//! with viscous and Hessian-driven damping, time scaling and Tikhonov
//! regularization, driven by the Moreau envelope of a nonsmooth convex
//! objective:
//!
//! ```text
//! x'' + (alpha/t) x' + beta d/dt grad Phi_{lambda(t)}(x) + b(t) grad Phi_{lambda(t)}(x) + eps(t) x = 0
//! ```
//!
//! Modules:
//! - [`prox`]: proximal maps, Moreau envelopes, a verification oracle, Tikhonov centers.
//! - [`schedules`]: parameter functions and the condition checkers.
//! - [`dynamics`]: first-order reformulations and Runge-Kutta integration.
//! - [`diagnostics`]: observables, Lyapunov energies, rate fits, strong-convergence metrics.
//! - [`experiments`]: run configuration, presets, CSV/SVG output, sweeps.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod parallel;
pub mod point;
pub mod prox;
pub mod schedules;

pub use error::{Error, Result};
pub use parallel::Execution;
pub use point::Point;
