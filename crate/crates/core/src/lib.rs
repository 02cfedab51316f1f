//! Probabilistic reachable sets for discrete-time stochastic systems.
//!
//! The library splits the reachability problem for `X_{t+1} = f(X_t, u_t, t) + w_t`
//! into two independent pieces:
//!
//! * a deterministic reachable-set over-approximation for the noiseless system
//!   (`drs`, via Lipschitz ball propagation or interval reachability), and
//! * a high-probability radius for the stochastic deviation `‖X_t − x_t‖`
//!   between a stochastic trajectory and its associated deterministic one
//!   (`deviation`, driven by sub-Gaussian variance proxies).
//!
//! Their Minkowski sum, exposed through a membership oracle in `prs`, contains
//! the stochastic state at time `t` with probability at least `1 − δ`.
//! Everything is validated at desk scale by the Monte Carlo machinery in
//! `montecarlo`, which also ships the three built-in experiment presets.

pub mod amgf;
pub mod deviation;
pub mod drs;
pub mod error;
pub mod expr;
pub mod model;
pub mod montecarlo;
pub mod prs;

pub use error::{Error, Result};
