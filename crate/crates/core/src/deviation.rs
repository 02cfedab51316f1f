//! Deviation scaling sequences and probabilistic radii.
//!
//! For per-step Lipschitz constants `L_t` and variance proxies `σ_t²`, the
//! scaling sequence is
//!
//! ```text
//! ψ_t = ∏_{k=0}^{t} L_k²,     Ψ_t = ψ_{t-1} · Σ_{k=0}^{t-1} σ_k² ψ_k⁻¹
//! ```
//!
//! accumulated here through the forward recurrence `Ψ_{t+1} = L_t² Ψ_t + σ_t²`
//! (algebraically identical, avoids overflowing ψ at large horizons). Three
//! high-probability radii for the stochastic deviation come out of it: the
//! sphere-averaged-MGF bound `√(Ψ_t(ε₁n + ε₂ log(1/δ)))`, the Markov bound
//! `√(nΨ_t/δ)`, and the union-bound worst case.

use crate::error::{Error, Result};

/// The scaling sequences over a horizon.
#[derive(Debug, Clone)]
pub struct DeviationSchedule {
    pub horizon: usize,
    pub lipschitz: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// ψ_t = ∏_{k≤t} L_k², for t = 0..horizon-1.
    pub psi: Vec<f64>,
    /// Ψ_t for t = 0..=horizon, with Ψ_0 = 0.
    pub psi_cap: Vec<f64>,
    /// Worst-case scale S_t = Σ_{k<t} σ_k ∏_{k<j<t} L_j, accumulated by
    /// S_{t+1} = L_t S_t + σ_t; the union bound radius is S_t·√(ε₁n+ε₂log(t/δ)).
    worst_scale: Vec<f64>,
}

/// The constants ε₁ = 2 log(1+2/ε)/(1−ε)² and ε₂ = 2/(1−ε)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonConstants {
    pub epsilon: f64,
    pub eps1: f64,
    pub eps2: f64,
}

/// Evaluate ε₁, ε₂ for ε ∈ (0, 1).
pub fn epsilon_constants(epsilon: f64) -> Result<EpsilonConstants> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be in (0,1), got {epsilon}"
        )));
    }
    let denom = (1.0 - epsilon) * (1.0 - epsilon);
    Ok(EpsilonConstants {
        epsilon,
        eps1: 2.0 * (1.0 + 2.0 / epsilon).ln() / denom,
        eps2: 2.0 / denom,
    })
}

/// Build the schedule for the first `horizon` steps.
pub fn build_schedule(lipschitz: &[f64], sigma2: &[f64], horizon: usize) -> Result<DeviationSchedule> {
    if lipschitz.len() < horizon || sigma2.len() < horizon {
        return Err(Error::InvalidParameter(format!(
            "sequences must cover the horizon {horizon} (got {} and {})",
            lipschitz.len(),
            sigma2.len()
        )));
    }
    let l = &lipschitz[..horizon];
    let s2 = &sigma2[..horizon];
    if l.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter("lipschitz entries must be finite and >= 0".into()));
    }
    if s2.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter("sigma2 entries must be finite and >= 0".into()));
    }

    let mut psi = Vec::with_capacity(horizon);
    let mut prod = 1.0;
    for lk in l {
        prod *= lk * lk;
        psi.push(prod);
    }

    let mut psi_cap = Vec::with_capacity(horizon + 1);
    let mut worst_scale = Vec::with_capacity(horizon + 1);
    psi_cap.push(0.0);
    worst_scale.push(0.0);
    for t in 0..horizon {
        let prev = psi_cap[t];
        psi_cap.push(l[t] * l[t] * prev + s2[t]);
        worst_scale.push(l[t] * worst_scale[t] + s2[t].sqrt());
    }

    Ok(DeviationSchedule {
        horizon,
        lipschitz: l.to_vec(),
        sigma2: s2.to_vec(),
        psi,
        psi_cap,
        worst_scale,
    })
}

impl DeviationSchedule {
    pub fn constant(l: f64, sigma2: f64, horizon: usize) -> Result<DeviationSchedule> {
        build_schedule(&vec![l; horizon], &vec![sigma2; horizon], horizon)
    }

    pub fn psi_cap_at(&self, t: usize) -> Result<f64> {
        self.psi_cap
            .get(t)
            .copied()
            .ok_or(Error::InvalidParameter(format!(
                "t = {t} beyond horizon {}",
                self.horizon
            )))
    }

    /// Worst-case scale factor `√ψ_{t-1} Σ_{k<t} σ_k √(ψ_k⁻¹)` (equals σ·t for
    /// constant σ at L = 1, vs. the deviation scale `√Ψ_t` = σ·√t).
    pub fn worst_scale_at(&self, t: usize) -> Result<f64> {
        self.worst_scale
            .get(t)
            .copied()
            .ok_or(Error::InvalidParameter(format!(
                "t = {t} beyond horizon {}",
                self.horizon
            )))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    Ok(())
}

/// High-probability deviation radius `r_{δ,t} = √(Ψ_t(ε₁n + ε₂ log(1/δ)))`.
pub fn amgf_bound(
    schedule: &DeviationSchedule,
    n: usize,
    delta: f64,
    eps: &EpsilonConstants,
    t: usize,
) -> Result<f64> {
    check_delta(delta)?;
    let psi = schedule.psi_cap_at(t)?;
    Ok((psi * (eps.eps1 * n as f64 + eps.eps2 * (1.0 / delta).ln())).sqrt())
}

/// Markov-inequality radius `√(nΨ_t/δ)`.
pub fn markov_bound(schedule: &DeviationSchedule, n: usize, delta: f64, t: usize) -> Result<f64> {
    check_delta(delta)?;
    let psi = schedule.psi_cap_at(t)?;
    Ok((n as f64 * psi / delta).sqrt())
}

/// Union-bound worst-case radius
/// `√ψ_{t-1} Σ_{k<t} σ_k √(ψ_k⁻¹ (ε₁n + ε₂ log(t/δ)))`; 0 at t = 0 by convention.
///
/// At t = 1 the formula coincides with [`amgf_bound`] (`log(t/δ) = log(1/δ)`
/// and a single noise term), so that case delegates to keep the equality
/// exact in floating point.
pub fn worstcase_bound(
    schedule: &DeviationSchedule,
    n: usize,
    delta: f64,
    eps: &EpsilonConstants,
    t: usize,
) -> Result<f64> {
    check_delta(delta)?;
    if t == 0 {
        return Ok(0.0);
    }
    if t == 1 {
        return amgf_bound(schedule, n, delta, eps, 1);
    }
    let scale = schedule.worst_scale_at(t)?;
    Ok(scale * (eps.eps1 * n as f64 + eps.eps2 * (t as f64 / delta).ln()).sqrt())
}

/// Radius for a constant-`‖A‖` linear system; delegates to [`amgf_bound`] on a
/// constant schedule and matches it bit-for-bit.
pub fn linear_exact_bound(
    a_norm: f64,
    sigma2: &[f64],
    n: usize,
    delta: f64,
    eps: &EpsilonConstants,
    t: usize,
) -> Result<f64> {
    let schedule = build_schedule(&vec![a_norm; sigma2.len()], sigma2, sigma2.len())?;
    amgf_bound(&schedule, n, delta, eps, t)
}

/// Grid-search ε over (0.005, 0.995) minimizing the deviation radius.
pub fn optimize_epsilon(
    schedule: &DeviationSchedule,
    n: usize,
    delta: f64,
    t: usize,
    grid_size: usize,
) -> Result<(EpsilonConstants, f64)> {
    let grid_size = grid_size.max(16);
    let (lo, hi) = (0.005, 0.995);
    let mut best: Option<(EpsilonConstants, f64)> = None;
    for i in 0..grid_size {
        let eps = lo + (hi - lo) * i as f64 / (grid_size - 1) as f64;
        let consts = epsilon_constants(eps)?;
        let r = amgf_bound(schedule, n, delta, &consts, t)?;
        if best.as_ref().is_none_or(|(_, rb)| r < *rb) {
            best = Some((consts, r));
        }
    }
    Ok(best.expect("non-empty grid"))
}
