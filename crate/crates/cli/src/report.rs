//! The report envelope shared by every command.

use qgame_core::games::{PAYOFF_TOL, WEIGHT_TOL};
use qgame_core::valuation::{AXIOM_TOL, RECONSTRUCTION_TOL};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    /// Normalization, Hermiticity and orthonormality of input documents.
    pub input: f64,
    /// Weight-map comparison in `equivalent`.
    pub weight: f64,
    pub payoff: f64,
    pub axiom: f64,
    pub reconstruction: f64,
}

impl Tolerances {
    pub fn new(input: f64) -> Self {
        Self { input, weight: WEIGHT_TOL.max(input), payoff: PAYOFF_TOL, axiom: AXIOM_TOL, reconstruction: RECONSTRUCTION_TOL }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub command: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub version: &'static str,
    pub results: Vec<T>,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &str, seed: u64, tolerances: Tolerances, results: Vec<T>) -> Self {
        Self { command: command.to_string(), seed, tolerances, version: qgame_core::VERSION, results }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
