//! A small expression vocabulary for system dynamics.
//!
//! Dynamics written in this vocabulary can be evaluated pointwise and, because
//! every primitive has an exact interval extension, lifted to an inclusion
//! function by `drs::natural_inclusion`. The JSON form of a custom system spec
//! carries one expression per state coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primitive-op expression tree over state and input coordinates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(f64),
    /// i-th state coordinate.
    State(usize),
    /// i-th input coordinate.
    Input(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Integer power with a dedicated even-exponent rule in interval form.
    Pow(Box<Expr>, i32),
    Log1p(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Tan(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn state(i: usize) -> Expr {
        Expr::State(i)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    /// Evaluate on concrete state/input vectors.
    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::State(i) => *x.get(*i).ok_or(Error::DimensionMismatch {
                expected: *i + 1,
                got: x.len(),
            })?,
            Expr::Input(i) => *u.get(*i).ok_or(Error::DimensionMismatch {
                expected: *i + 1,
                got: u.len(),
            })?,
            Expr::Neg(a) => -a.eval(x, u)?,
            Expr::Add(a, b) => a.eval(x, u)? + b.eval(x, u)?,
            Expr::Sub(a, b) => a.eval(x, u)? - b.eval(x, u)?,
            Expr::Mul(a, b) => a.eval(x, u)? * b.eval(x, u)?,
            Expr::Pow(a, k) => a.eval(x, u)?.powi(*k),
            Expr::Log1p(a) => {
                let v = a.eval(x, u)?;
                if v <= -1.0 {
                    return Err(Error::Domain {
                        primitive: "log1p",
                        lo: v,
                        hi: v,
                    });
                }
                v.ln_1p()
            }
            Expr::Sin(a) => a.eval(x, u)?.sin(),
            Expr::Cos(a) => a.eval(x, u)?.cos(),
            Expr::Tan(a) => a.eval(x, u)?.tan(),
            Expr::Min(a, b) => a.eval(x, u)?.min(b.eval(x, u)?),
            Expr::Max(a, b) => a.eval(x, u)?.max(b.eval(x, u)?),
        })
    }
}

/// Convenience constructors used when assembling presets.
pub fn add(a: Expr, b: Expr) -> Expr {
    Expr::Add(Box::new(a), Box::new(b))
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    Expr::Sub(Box::new(a), Box::new(b))
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    Expr::Mul(Box::new(a), Box::new(b))
}

pub fn log1p(a: Expr) -> Expr {
    Expr::Log1p(Box::new(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_cobweb_price_map() {
        // p' = a - b*log1p(q) at (p, q) = (9.2, 3.6)
        let e = sub(
            Expr::constant(10.0),
            mul(Expr::constant(1.5), log1p(Expr::state(1))),
        );
        let v = e.eval(&[9.2, 3.6], &[]).unwrap();
        assert!((v - (10.0 - 1.5 * 4.6f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn log1p_domain_error() {
        let e = log1p(Expr::state(0));
        assert!(e.eval(&[-1.5], &[]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let e = add(
            mul(Expr::constant(-0.93), Expr::state(0)),
            Expr::Input(0),
        );
        let s = serde_json::to_string(&e).unwrap();
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(e, back);
    }
}
