//! Scalar interval arithmetic for the primitive-op vocabulary.
//!
//! Every operation is inclusion-isotone: the result interval contains the
//! pointwise image of any inputs drawn from the operand intervals.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// A closed interval [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "invalid interval [{lo}, {hi}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    /// Degenerate interval [c, c].
    pub fn point(c: f64) -> Interval {
        Interval { lo: c, hi: c }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Integer power with the tight even-exponent rule
    /// (e.g. [-1, 2]² = [0, 4], not [-2, 4]).
    pub fn powi(self, k: i32) -> Result<Interval> {
        if k < 0 {
            return Err(Error::Domain {
                primitive: "powi",
                lo: self.lo,
                hi: self.hi,
            });
        }
        if k == 0 {
            return Ok(Interval::point(1.0));
        }
        if k % 2 == 1 {
            return Ok(Interval {
                lo: self.lo.powi(k),
                hi: self.hi.powi(k),
            });
        }
        let a = self.lo.abs().powi(k);
        let b = self.hi.abs().powi(k);
        Ok(Interval {
            lo: if self.contains(0.0) { 0.0 } else { a.min(b) },
            hi: a.max(b),
        })
    }

    /// log(1 + x); the interval must stay strictly above -1.
    pub fn log1p(self) -> Result<Interval> {
        if self.lo <= -1.0 {
            return Err(Error::Domain {
                primitive: "log1p",
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(Interval {
            lo: self.lo.ln_1p(),
            hi: self.hi.ln_1p(),
        })
    }

    pub fn sin(self) -> Interval {
        if self.width() >= TWO_PI {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let ends_lo = self.lo.sin().min(self.hi.sin());
        let ends_hi = self.lo.sin().max(self.hi.sin());
        let hi = if contains_angle(self, FRAC_PI_2) {
            1.0
        } else {
            ends_hi
        };
        let lo = if contains_angle(self, -FRAC_PI_2) {
            -1.0
        } else {
            ends_lo
        };
        Interval { lo, hi }
    }

    pub fn cos(self) -> Interval {
        if self.width() >= TWO_PI {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let ends_lo = self.lo.cos().min(self.hi.cos());
        let ends_hi = self.lo.cos().max(self.hi.cos());
        let hi = if contains_angle(self, 0.0) { 1.0 } else { ends_hi };
        let lo = if contains_angle(self, PI) { -1.0 } else { ends_lo };
        Interval { lo, hi }
    }

    /// tan on an interval that avoids the asymptotes π/2 + kπ.
    pub fn tan(self) -> Result<Interval> {
        let k_lo = ((self.lo - FRAC_PI_2) / PI).floor();
        let k_hi = ((self.hi - FRAC_PI_2) / PI).floor();
        if self.width() >= PI || k_lo != k_hi {
            return Err(Error::Domain {
                primitive: "tan",
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(Interval {
            lo: self.lo.tan(),
            hi: self.hi.tan(),
        })
    }

    pub fn min_op(self, b: Interval) -> Interval {
        Interval {
            lo: self.lo.min(b.lo),
            hi: self.hi.min(b.hi),
        }
    }

    pub fn max_op(self, b: Interval) -> Interval {
        Interval {
            lo: self.lo.max(b.lo),
            hi: self.hi.max(b.hi),
        }
    }
}

impl std::ops::Add for Interval {
    type Output = Interval;

    fn add(self, b: Interval) -> Interval {
        Interval {
            lo: self.lo + b.lo,
            hi: self.hi + b.hi,
        }
    }
}

impl std::ops::Sub for Interval {
    type Output = Interval;

    fn sub(self, b: Interval) -> Interval {
        Interval {
            lo: self.lo - b.hi,
            hi: self.hi - b.lo,
        }
    }
}

impl std::ops::Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl std::ops::Mul for Interval {
    type Output = Interval;

    fn mul(self, b: Interval) -> Interval {
        let c = [
            self.lo * b.lo,
            self.lo * b.hi,
            self.hi * b.lo,
            self.hi * b.hi,
        ];
        Interval {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Is some `angle + 2πk` inside the interval?
fn contains_angle(iv: Interval, angle: f64) -> bool {
    let k = ((iv.lo - angle) / TWO_PI).ceil();
    angle + TWO_PI * k <= iv.hi
}

/// An axis-aligned box `[lower, upper]` componentwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<IntervalBox> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (l, u) in lower.iter().zip(upper.iter()) {
            if !(l.is_finite() && u.is_finite()) || l > u {
                return Err(Error::InvalidParameter(format!(
                    "invalid box component [{l}, {u}]"
                )));
            }
        }
        Ok(IntervalBox { lower, upper })
    }

    /// Zero-width box at a point.
    pub fn point(x: &[f64]) -> IntervalBox {
        IntervalBox {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    pub fn empty() -> IntervalBox {
        IntervalBox {
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn component(&self, i: usize) -> Interval {
        Interval {
            lo: self.lower[i],
            hi: self.upper[i],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(l, u)| u - l)
            .collect()
    }

    pub fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        use rand::Rng;
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(l, u)| if u > l { rng.random_range(*l..=*u) } else { *l })
            .collect()
    }
}
