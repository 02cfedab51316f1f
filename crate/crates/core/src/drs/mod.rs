//! Deterministic reachable-set over-approximation.
//!
//! Two backends: Lipschitz-ball propagation around a nominal trajectory and
//! interval reachability through the embedding system of a natural inclusion
//! function. Both produce sets guaranteed to contain every trajectory of the
//! noiseless system started in the initial set under admissible inputs.

pub mod interval;

pub use interval::{Interval, IntervalBox};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::{NormSpec, SystemModel};

/// A norm ball `{x : ‖x − center‖ ≤ radius}` in the given norm.
#[derive(Debug, Clone)]
pub struct BallSet {
    pub center: Vec<f64>,
    pub radius: f64,
    pub norm: NormSpec,
}

impl BallSet {
    pub fn new(center: Vec<f64>, radius: f64, norm: NormSpec) -> Result<BallSet> {
        if radius < 0.0 || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be finite and >= 0, got {radius}"
            )));
        }
        Ok(BallSet {
            center,
            radius,
            norm,
        })
    }

    /// Distance from `x` to the ball in the ball's own norm
    /// (0 inside, `‖x − c‖ − radius` outside).
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: x.len(),
            });
        }
        let d: Vec<f64> = x
            .iter()
            .zip(self.center.iter())
            .map(|(a, b)| a - b)
            .collect();
        Ok((self.norm.norm(&d)? - self.radius).max(0.0))
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.distance(x)? == 0.0)
    }
}

/// Tagged over-approximation geometry shared with the probabilistic layer.
#[derive(Debug, Clone)]
pub enum ReachSet {
    Ball(BallSet),
    Box(IntervalBox),
}

impl ReachSet {
    pub fn dim(&self) -> usize {
        match self {
            ReachSet::Ball(b) => b.center.len(),
            ReachSet::Box(b) => b.dim(),
        }
    }
}

// ---------------------------------------------------------------------------
// Lipschitz-ball propagation
// ---------------------------------------------------------------------------

/// Radius of the Lipschitz over-approximation after `t` steps from an initial
/// ball of radius `r1` with inputs within `r2` of the nominal input.
///
/// Follows the step recurrence `radius(t+1) = L_d · radius(t) + ρ · r2`, i.e.
/// `L_d^t r1 + ρ (L_d^t − 1)/(L_d − 1) r2`, with the analytic limit
/// `r1 + ρ t r2` at `L_d = 1`.
pub fn lipschitz_radius(l_d: f64, rho: f64, r1: f64, r2: f64, t: usize) -> Result<f64> {
    if l_d < 0.0 || rho < 0.0 || r1 < 0.0 || r2 < 0.0 {
        return Err(Error::InvalidParameter(
            "lipschitz radius inputs must be non-negative".into(),
        ));
    }
    let tf = t as i32;
    let input_term = if (l_d - 1.0).abs() < 1e-12 {
        rho * r2 * t as f64
    } else {
        rho * r2 * (l_d.powi(tf) - 1.0) / (l_d - 1.0)
    };
    Ok(l_d.powi(tf) * r1 + input_term)
}

/// Ball over-approximation of the reachable set at time `t` around the
/// nominal state `x*_t`.
pub fn lipschitz_drs(
    nominal_at_t: &[f64],
    l_d: f64,
    rho: f64,
    r1: f64,
    r2: f64,
    t: usize,
    norm: NormSpec,
) -> Result<BallSet> {
    BallSet::new(
        nominal_at_t.to_vec(),
        lipschitz_radius(l_d, rho, r1, r2, t)?,
        norm,
    )
}

/// Time-varying variant: per-step constants `L_0 .. L_{t-1}` accumulated by
/// the same recurrence. Returns the whole radius sequence `radius(0..=t)`.
pub fn lipschitz_radius_sequence(l_seq: &[f64], rho: f64, r1: f64, r2: f64) -> Result<Vec<f64>> {
    if l_seq.iter().any(|l| *l < 0.0 || !l.is_finite()) {
        return Err(Error::InvalidParameter(
            "per-step lipschitz constants must be finite and >= 0".into(),
        ));
    }
    let mut out = Vec::with_capacity(l_seq.len() + 1);
    out.push(r1);
    for (k, l) in l_seq.iter().enumerate() {
        out.push(l * out[k] + rho * r2);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Interval reachability
// ---------------------------------------------------------------------------

/// Inclusion function `[F̲, F̄]` built from primitive-op dynamics.
#[derive(Debug, Clone)]
pub struct InclusionFunction {
    exprs: Vec<Expr>,
    dim_input: usize,
}

impl InclusionFunction {
    /// Interval image of one step of the embedding system.
    pub fn apply(&self, state: &IntervalBox, input: &IntervalBox, _t: usize) -> Result<IntervalBox> {
        let mut lower = Vec::with_capacity(self.exprs.len());
        let mut upper = Vec::with_capacity(self.exprs.len());
        for e in &self.exprs {
            let iv = eval_interval(e, state, input)?;
            lower.push(iv.lo);
            upper.push(iv.hi);
        }
        IntervalBox::new(lower, upper)
    }

    pub fn dim_input(&self) -> usize {
        self.dim_input
    }
}

/// Build the natural inclusion function of a model by replacing each
/// primitive with its exact interval extension. Requires expression dynamics.
pub fn natural_inclusion(model: &SystemModel) -> Result<InclusionFunction> {
    match model.expressions() {
        Some(exprs) => Ok(InclusionFunction {
            exprs: exprs.to_vec(),
            dim_input: model.dim_input,
        }),
        None => Err(Error::NotExpressible),
    }
}

fn eval_interval(e: &Expr, x: &IntervalBox, u: &IntervalBox) -> Result<Interval> {
    Ok(match e {
        Expr::Const(c) => Interval::point(*c),
        Expr::State(i) => {
            if *i >= x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: *i + 1,
                    got: x.dim(),
                });
            }
            x.component(*i)
        }
        Expr::Input(i) => {
            if *i >= u.dim() {
                return Err(Error::DimensionMismatch {
                    expected: *i + 1,
                    got: u.dim(),
                });
            }
            u.component(*i)
        }
        Expr::Neg(a) => -eval_interval(a, x, u)?,
        Expr::Add(a, b) => eval_interval(a, x, u)? + eval_interval(b, x, u)?,
        Expr::Sub(a, b) => eval_interval(a, x, u)? - eval_interval(b, x, u)?,
        Expr::Mul(a, b) => eval_interval(a, x, u)? * eval_interval(b, x, u)?,
        Expr::Pow(a, k) => eval_interval(a, x, u)?.powi(*k)?,
        Expr::Log1p(a) => eval_interval(a, x, u)?.log1p()?,
        Expr::Sin(a) => eval_interval(a, x, u)?.sin(),
        Expr::Cos(a) => eval_interval(a, x, u)?.cos(),
        Expr::Tan(a) => eval_interval(a, x, u)?.tan()?,
        Expr::Min(a, b) => eval_interval(a, x, u)?.min_op(eval_interval(b, x, u)?),
        Expr::Max(a, b) => eval_interval(a, x, u)?.max_op(eval_interval(b, x, u)?),
    })
}

/// One step of the embedding system, with an inverted-bounds soundness check.
pub fn interval_step(
    inc: &InclusionFunction,
    state: &IntervalBox,
    input: &IntervalBox,
    t: usize,
) -> Result<IntervalBox> {
    let next = inc.apply(state, input, t)?;
    for i in 0..next.dim() {
        if next.lower[i] > next.upper[i] {
            return Err(Error::InvertedBounds { coord: i });
        }
    }
    Ok(next)
}

/// Trajectory of the embedding system: over-approximations `R̄_0 .. R̄_T`.
pub fn interval_reach(
    inc: &InclusionFunction,
    x0_box: &IntervalBox,
    input_box: &IntervalBox,
    horizon: usize,
) -> Result<Vec<IntervalBox>> {
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(x0_box.clone());
    for t in 0..horizon {
        let next = interval_step(inc, &out[t], input_box, t)?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{add, log1p, mul, sub};
    use crate::model::{Dynamics, Sequence};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lipschitz_radius_examples() {
        // t = 0 keeps the initial radius
        assert_eq!(lipschitz_radius(0.9, 0.5, 0.1, 0.2, 0).unwrap(), 0.1);
        // contraction only: 0.9^2 * 0.1
        let r = lipschitz_radius(0.9, 1.0, 0.1, 0.0, 2).unwrap();
        assert!((r - 0.081).abs() < 1e-15);
        // L = 1 limit: r1 + rho*t*r2
        let r = lipschitz_radius(1.0, 0.5, 0.1, 0.2, 4).unwrap();
        assert!((r - (0.1 + 0.5 * 4.0 * 0.2)).abs() < 1e-15);
        assert!(lipschitz_radius(-0.1, 0.0, 0.0, 0.0, 1).is_err());
    }

    #[test]
    fn lipschitz_radius_matches_recurrence() {
        let (l, rho, r1, r2) = (0.9, 0.7, 0.3, 0.05);
        let mut rad = r1;
        for t in 0..30usize {
            let closed = lipschitz_radius(l, rho, r1, r2, t).unwrap();
            assert!(
                (closed - rad).abs() <= 1e-10 * rad.max(1.0),
                "t={t}: {closed} vs {rad}"
            );
            rad = l * rad + rho * r2;
        }
    }

    #[test]
    fn lipschitz_sequence_matches_constant_case() {
        let l = vec![0.9; 10];
        let seq = lipschitz_radius_sequence(&l, 0.7, 0.3, 0.05).unwrap();
        for (t, r) in seq.iter().enumerate() {
            let closed = lipschitz_radius(0.9, 0.7, 0.3, 0.05, t).unwrap();
            assert!((closed - r).abs() <= 1e-10 * r.max(1.0));
        }
    }

    #[test]
    fn cobweb_radius_contracts_without_input() {
        let r1 = 5.0 * 2f64.sqrt() * 1e-3;
        let l = 0.37;
        let r = lipschitz_radius(l, 0.0, r1, 0.0, 3).unwrap();
        assert!((r - l.powi(3) * r1).abs() < 1e-15);
    }

    fn expr_model(exprs: Vec<Expr>, dim: usize) -> SystemModel {
        SystemModel::new(dim, 0, Dynamics::Expressions(exprs), Sequence::Constant(1.0), None)
            .unwrap()
    }

    #[test]
    fn identity_dynamics_keeps_box() {
        let model = expr_model(vec![Expr::State(0), Expr::State(1)], 2);
        let inc = natural_inclusion(&model).unwrap();
        let b = IntervalBox::new(vec![-1.0, 0.0], vec![2.0, 0.5]).unwrap();
        let next = interval_step(&inc, &b, &IntervalBox::empty(), 0).unwrap();
        assert_eq!(next, b);
    }

    #[test]
    fn linear_scaling_box() {
        // f(x) = 2x on [1,2] -> [2,4]
        let model = expr_model(vec![mul(Expr::constant(2.0), Expr::State(0))], 1);
        let inc = natural_inclusion(&model).unwrap();
        let b = IntervalBox::new(vec![1.0], vec![2.0]).unwrap();
        let next = interval_step(&inc, &b, &IntervalBox::empty(), 0).unwrap();
        assert_eq!(next, IntervalBox::new(vec![2.0], vec![4.0]).unwrap());
    }

    #[test]
    fn cobweb_price_interval_swaps_endpoints() {
        // p' = a - b*log1p(q) is decreasing in q
        let expr = sub(
            Expr::constant(10.0),
            mul(Expr::constant(1.5), log1p(Expr::State(1))),
        );
        let model = expr_model(vec![expr, Expr::State(1)], 2);
        let inc = natural_inclusion(&model).unwrap();
        let b = IntervalBox::new(vec![9.195, 3.595], vec![9.205, 3.605]).unwrap();
        let next = interval_step(&inc, &b, &IntervalBox::empty(), 0).unwrap();
        let lo = 10.0 - 1.5 * 4.605f64.ln();
        let hi = 10.0 - 1.5 * 4.595f64.ln();
        assert!((next.lower[0] - lo).abs() < 1e-14);
        assert!((next.upper[0] - hi).abs() < 1e-14);
    }

    #[test]
    fn square_uses_dedicated_rule() {
        let model = expr_model(vec![Expr::Pow(Box::new(Expr::State(0)), 2)], 1);
        let inc = natural_inclusion(&model).unwrap();
        let b = IntervalBox::new(vec![-1.0], vec![2.0]).unwrap();
        let next = inc.apply(&b, &IntervalBox::empty(), 0).unwrap();
        assert_eq!(next, IntervalBox::new(vec![0.0], vec![4.0]).unwrap());
    }

    #[test]
    fn constants_are_degenerate() {
        let model = expr_model(vec![Expr::constant(3.25)], 1);
        let inc = natural_inclusion(&model).unwrap();
        let b = IntervalBox::new(vec![-10.0], vec![10.0]).unwrap();
        let next = inc.apply(&b, &IntervalBox::empty(), 0).unwrap();
        assert_eq!(next.lower[0], 3.25);
        assert_eq!(next.upper[0], 3.25);
    }

    #[test]
    fn natural_inclusion_rejects_native() {
        let model = SystemModel::new(
            1,
            0,
            Dynamics::Native(std::sync::Arc::new(|x: &[f64], _: &[f64], _| x.to_vec())),
            Sequence::Constant(1.0),
            None,
        )
        .unwrap();
        assert!(matches!(natural_inclusion(&model), Err(Error::NotExpressible)));
    }

    #[test]
    fn domain_error_carries_primitive() {
        let model = expr_model(vec![log1p(Expr::State(0))], 1);
        let inc = natural_inclusion(&model).unwrap();
        let b = IntervalBox::new(vec![-2.0], vec![0.0]).unwrap();
        match inc.apply(&b, &IntervalBox::empty(), 0) {
            Err(Error::Domain { primitive, .. }) => assert_eq!(primitive, "log1p"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn contraction_halves_widths() {
        let model = expr_model(vec![mul(Expr::constant(0.5), Expr::State(0))], 1);
        let inc = natural_inclusion(&model).unwrap();
        let x0 = IntervalBox::new(vec![-1.0], vec![1.0]).unwrap();
        let boxes = interval_reach(&inc, &x0, &IntervalBox::empty(), 5).unwrap();
        for (t, b) in boxes.iter().enumerate() {
            assert!((b.widths()[0] - 2.0 * 0.5f64.powi(t as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_width_identity_stays_zero_width() {
        let model = expr_model(vec![Expr::State(0), Expr::State(1)], 2);
        let inc = natural_inclusion(&model).unwrap();
        let x0 = IntervalBox::point(&[0.3, -0.7]);
        let boxes = interval_reach(&inc, &x0, &IntervalBox::empty(), 8).unwrap();
        for b in &boxes {
            assert_eq!(b.widths(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn interval_reach_is_sound_for_sampled_trajectories() {
        // nonlinear scalar map in the vocabulary: x' = 0.8*sin(x) + 0.1
        let model = expr_model(
            vec![add(
                mul(Expr::constant(0.8), Expr::Sin(Box::new(Expr::State(0)))),
                Expr::constant(0.1),
            )],
            1,
        );
        let inc = natural_inclusion(&model).unwrap();
        let x0 = IntervalBox::new(vec![-0.5], vec![0.5]).unwrap();
        let boxes = interval_reach(&inc, &x0, &IntervalBox::empty(), 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut x = x0.sample(&mut rng);
            for b in &boxes {
                assert!(b.contains(&x));
                x = model.step(&x, &[], 0).unwrap();
            }
        }
    }

    #[test]
    fn ball_distance() {
        let ball = BallSet::new(vec![0.0, 0.0], 1.0, NormSpec::euclidean()).unwrap();
        assert_eq!(ball.distance(&[0.5, 0.0]).unwrap(), 0.0);
        assert!((ball.distance(&[0.0, 1.25]).unwrap() - 0.25).abs() < 1e-15);
        assert!(ball.contains(&[0.6, 0.8]).unwrap());
        assert!(!ball.contains(&[0.8, 0.8]).unwrap());
    }
}
