//! Probabilistic reachable sets via the separation strategy.
//!
//! A δ-PRS is the Minkowski sum of a deterministic reachable-set
//! over-approximation with the deviation ball of radius `r_{δ,t}`. The sum is
//! never materialized as geometry; membership reduces to a distance check
//! `dist(x, base) ≤ r_{δ,t}` in the frame where the inflation ball is
//! Euclidean.

use serde::Serialize;

use crate::deviation::{amgf_bound, DeviationSchedule, EpsilonConstants};
use crate::drs::ReachSet;
use crate::error::{Error, Result};
use crate::model::NormSpec;

/// A reach-set over-approximation inflated by a deviation radius.
#[derive(Debug, Clone)]
pub struct ProbabilisticReachSet {
    pub base: ReachSet,
    /// Deviation radius `r_{δ,t}` in the transformed (Euclidean) frame.
    pub inflation: f64,
    pub delta: f64,
    pub t: usize,
}

/// Outcome of a membership query.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Membership {
    pub inside: bool,
    /// Distance from the query point to the base set.
    pub dist: f64,
    /// `inflation − dist`; non-negative iff inside.
    pub margin: f64,
}

/// Assemble the δ-PRS at time `t`: the base over-approximation inflated by
/// the deviation radius from the schedule.
pub fn make_prs(
    base: ReachSet,
    schedule: &DeviationSchedule,
    n: usize,
    delta: f64,
    eps: &EpsilonConstants,
    t: usize,
) -> Result<ProbabilisticReachSet> {
    let inflation = amgf_bound(schedule, n, delta, eps, t)?;
    Ok(ProbabilisticReachSet {
        base,
        inflation,
        delta,
        t,
    })
}

/// Distance from `x` to the base set in the frame of the inflation ball.
///
/// Interval boxes use the Euclidean norm of the componentwise clamp residual;
/// balls use their own norm (weighted balls are handled through the
/// coordinate transform inside the norm, so base and inflation live in one
/// frame).
pub fn base_distance(base: &ReachSet, x: &[f64]) -> Result<f64> {
    match base {
        ReachSet::Box(b) => {
            if x.len() != b.dim() {
                return Err(Error::DimensionMismatch {
                    expected: b.dim(),
                    got: x.len(),
                });
            }
            let residual: Vec<f64> = x
                .iter()
                .zip(b.lower.iter().zip(b.upper.iter()))
                .map(|(v, (l, u))| {
                    let clamped = v.max(*l).min(*u);
                    v - clamped
                })
                .collect();
            NormSpec::euclidean().norm(&residual)
        }
        ReachSet::Ball(ball) => ball.distance(x),
    }
}

/// Membership query with distance report.
pub fn membership(prs: &ProbabilisticReachSet, x: &[f64]) -> Result<Membership> {
    let dist = base_distance(&prs.base, x)?;
    let margin = prs.inflation - dist;
    Ok(Membership {
        inside: dist <= prs.inflation,
        dist,
        margin,
    })
}

/// Per-time empirical coverage of a PRS sequence over an ensemble of
/// stochastic trajectories (`states[traj][t]` is the state at time `t`).
#[derive(Debug, Clone, Serialize)]
pub struct CoverageRow {
    pub t: usize,
    pub inside: usize,
    pub total: usize,
    pub coverage: f64,
    /// Pass threshold `1 − δ − 3√(δ/N)`.
    pub threshold: f64,
    pub pass: bool,
}

pub fn coverage_check(
    prs_seq: &[ProbabilisticReachSet],
    states: &[Vec<Vec<f64>>],
) -> Result<Vec<CoverageRow>> {
    let total = states.len();
    if total == 0 {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    let mut rows = Vec::with_capacity(prs_seq.len());
    for prs in prs_seq {
        let mut inside = 0usize;
        for traj in states {
            let x = traj.get(prs.t).ok_or(Error::InvalidParameter(format!(
                "trajectory shorter than t = {}",
                prs.t
            )))?;
            if membership(prs, x)?.inside {
                inside += 1;
            }
        }
        let coverage = inside as f64 / total as f64;
        let threshold = 1.0 - prs.delta - 3.0 * (prs.delta / total as f64).sqrt();
        rows.push(CoverageRow {
            t: prs.t,
            inside,
            total,
            coverage,
            threshold,
            pass: coverage >= threshold,
        });
    }
    Ok(rows)
}
