//! Dyadic rationals `A/2^n` approaching a target from one side.

use serde::Serialize;

use crate::error::{Error, Result};

/// Side from which a dyadic sequence approaches its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Terms at or below the target, nondecreasing.
    Increasing,
    /// Terms at or above the target, nonincreasing.
    Decreasing,
}

/// `numerator / 2^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dyadic {
    pub numerator: u64,
    pub exponent: u32,
}

impl Dyadic {
    pub fn value(self) -> f64 {
        self.numerator as f64 / 2f64.powi(self.exponent as i32)
    }
}

/// Largest exponent for which `a·2^n` is exact in double precision.
pub const MAX_EXPONENT: u32 = 52;

/// Smallest `A/2^n ≥ a` (decreasing) or largest `A/2^n ≤ a` (increasing).
pub fn dyadic_approx(a: f64, n: u32, direction: Direction) -> Result<Dyadic> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::OutOfRange { what: "dyadic target", value: a });
    }
    if n == 0 || n > MAX_EXPONENT {
        return Err(Error::OutOfRange { what: "dyadic exponent", value: n as f64 });
    }
    let scaled = a * 2f64.powi(n as i32);
    let numerator = match direction {
        Direction::Decreasing => scaled.ceil(),
        Direction::Increasing => scaled.floor(),
    } as u64;
    Ok(Dyadic { numerator, exponent: n })
}

/// Terms `a_1, …, a_depth` of a one-sided dyadic approximation.
///
/// Increasing terms can be zero while `2^-n > a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicSequence {
    pub target: f64,
    pub direction: Direction,
    pub terms: Vec<Dyadic>,
}

impl DyadicSequence {
    pub fn new(target: f64, depth: u32, direction: Direction) -> Result<Self> {
        let terms = (1..=depth).map(|n| dyadic_approx(target, n, direction)).collect::<Result<Vec<_>>>()?;
        Ok(Self { target, direction, terms })
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|d| d.value())
    }
}
