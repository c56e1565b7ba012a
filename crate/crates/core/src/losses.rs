//! Classification losses and their Fenchel conjugates.
//!
//! For a label `y` and a margin score `u` each loss `l(y, u)` comes with its
//! conjugate `l*(y, a) = sup_u (u a - l(y, u))`, which is finite only on a
//! closed interval of `a`. That interval is the box constraint seen by the
//! dual solver.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Extended real used for conjugate values: finite or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// The finite value, or `None` for `+inf`.
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInfinity => None,
        }
    }

    /// Lossy conversion, mapping the sentinel to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::PosInfinity => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Logistic,
    Hinge,
    SquaredHinge,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Logistic, LossKind::Hinge, LossKind::SquaredHinge];

    pub fn is_smooth(self) -> bool {
        !matches!(self, LossKind::Hinge)
    }

    /// `l(y, u)`.
    pub fn value(self, y: f64, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::InvalidInput(format!("margin score must be finite, got {u}")));
        }
        Ok(self.value_unchecked(y, u))
    }

    #[inline]
    pub(crate) fn value_unchecked(self, y: f64, u: f64) -> f64 {
        let m = y * u;
        match self {
            LossKind::Logistic => softplus(-m),
            LossKind::Hinge => (1.0 - m).max(0.0),
            LossKind::SquaredHinge => {
                let h = (1.0 - m).max(0.0);
                0.5 * h * h
            }
        }
    }

    /// `dl/du (y, u)`; a subgradient for the hinge.
    #[inline]
    pub fn derivative(self, y: f64, u: f64) -> f64 {
        let m = y * u;
        match self {
            LossKind::Logistic => -y * sigmoid(-m),
            LossKind::Hinge => {
                if m < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::SquaredHinge => -y * (1.0 - m).max(0.0),
        }
    }

    /// `d2l/du2 (y, u)`; zero for the hinge, generalized for the squared hinge.
    #[inline]
    pub fn second_derivative(self, y: f64, u: f64) -> f64 {
        let m = y * u;
        match self {
            LossKind::Logistic => {
                let s = sigmoid(m);
                s * (1.0 - s)
            }
            LossKind::Hinge => 0.0,
            LossKind::SquaredHinge => {
                if m < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Conjugate `l*(y, a)`, `+inf` outside the feasibility interval.
    pub fn conjugate(self, y: f64, alpha: f64) -> Extended {
        let t = y * alpha;
        match self {
            LossKind::Logistic => {
                if !(-1.0..=0.0).contains(&t) {
                    return Extended::PosInfinity;
                }
                Extended::Finite(xlogx(1.0 + t) + xlogx(-t))
            }
            LossKind::Hinge => {
                if !(-1.0..=0.0).contains(&t) {
                    return Extended::PosInfinity;
                }
                Extended::Finite(t)
            }
            LossKind::SquaredHinge => {
                if t > 0.0 || !t.is_finite() {
                    return Extended::PosInfinity;
                }
                Extended::Finite(0.5 * alpha * alpha + t)
            }
        }
    }

    /// `d l*(y, a) / da` on the interior of the feasibility interval.
    ///
    /// The logistic conjugate has infinite slope at both endpoints; the
    /// returned value is then `-inf` or `+inf` accordingly.
    pub fn conjugate_derivative(self, y: f64, alpha: f64) -> f64 {
        let t = y * alpha;
        match self {
            LossKind::Logistic => y * ((1.0 + t).ln() - (-t).ln()),
            LossKind::Hinge => y,
            LossKind::SquaredHinge => alpha + y,
        }
    }

    /// Bounds on `alpha` for which the conjugate is finite.
    pub fn conjugate_interval(self, y: f64) -> (f64, f64) {
        match self {
            LossKind::Logistic | LossKind::Hinge => {
                if y > 0.0 {
                    (-1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            }
            LossKind::SquaredHinge => {
                if y > 0.0 {
                    (f64::NEG_INFINITY, 0.0)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Hinge => "hinge",
            LossKind::SquaredHinge => "squared_hinge",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LossKind::Logistic),
            "hinge" | "svm" => Ok(LossKind::Hinge),
            "squared_hinge" | "squared-hinge" => Ok(LossKind::SquaredHinge),
            other => Err(Error::InvalidInput(format!("unknown loss '{other}'"))),
        }
    }
}

/// Free functions mirroring the methods on [`LossKind`].
pub fn loss_value(kind: LossKind, y: f64, u: f64) -> Result<f64> {
    kind.value(y, u)
}

pub fn conjugate_value(kind: LossKind, y: f64, alpha: f64) -> Extended {
    kind.conjugate(y, alpha)
}

pub fn conjugate_interval(kind: LossKind, y: f64) -> (f64, f64) {
    kind.conjugate_interval(y)
}

/// `x ln x` with the limit `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
