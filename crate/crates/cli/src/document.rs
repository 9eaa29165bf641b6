//! JSON game documents.
//!
//! Complex numbers are `[re, im]` pairs. The observable is given either as a
//! full matrix or by eigenvalues with an orthonormal basis for each
//! eigenspace.

use nalgebra::{DMatrix, DVector};
use qgame_core::games::same_eigenvalue;
use qgame_core::linalg::{HermitianOperator, StateVector, C64};
use qgame_core::{Game, PayoffFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub dim: usize,
    pub state: Vec<[f64; 2]>,
    pub observable: ObservableDocument,
    pub payoff: Vec<PayoffEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableDocument {
    Matrix(Vec<Vec<[f64; 2]>>),
    Spectral(SpectralDocument),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDocument {
    pub eigenvalues: Vec<f64>,
    /// One list of basis vectors per eigenvalue.
    pub projector_bases: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffEntry {
    pub eigenvalue: f64,
    pub value: f64,
}

fn at(field: impl Into<String>, message: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {message}", field.into()))
}

fn complex(pairs: &[[f64; 2]]) -> Vec<C64> {
    pairs.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Parses JSON text; syntax and schema errors carry line and column.
pub fn parse(text: &str) -> Result<GameDocument, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("line {} column {}: {e}", e.line(), e.column())))
}

impl GameDocument {
    /// Validates the document against `tol` (normalization, Hermiticity,
    /// orthonormality) and builds the game.
    pub fn to_game(&self, tol: f64) -> Result<Game, CliError> {
        let dim = self.dim;
        if dim == 0 {
            return Err(at("dim", "must be at least 1"));
        }
        if self.state.len() != dim {
            return Err(at("state", format!("expected {dim} amplitudes, found {}", self.state.len())));
        }
        let psi = StateVector::with_tolerance(complex(&self.state), tol).map_err(|e| at("state", e))?;
        let x = match &self.observable {
            ObservableDocument::Matrix(rows) => matrix_observable(rows, dim, tol)?,
            ObservableDocument::Spectral(s) => spectral_observable(s, dim, tol)?,
        };

        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(self.payoff.len());
        for (i, entry) in self.payoff.iter().enumerate() {
            if !entry.eigenvalue.is_finite() || !entry.value.is_finite() {
                return Err(at(format!("payoff[{i}]"), "non-finite number"));
            }
            if pairs.iter().any(|&(x, _)| same_eigenvalue(x, entry.eigenvalue)) {
                return Err(at(format!("payoff[{i}]"), format!("duplicate eigenvalue {}", entry.eigenvalue)));
            }
            pairs.push((entry.eigenvalue, entry.value));
        }
        let payoff = PayoffFunction::from_pairs(pairs);
        let spectrum = x.spectral();
        for &xv in spectrum.eigenvalues() {
            if payoff.get(xv).is_none() {
                return Err(at("payoff", format!("no entry for eigenvalue {xv}")));
            }
        }
        let payoff = payoff.restricted(spectrum.eigenvalues()).map_err(|e| at("payoff", e))?;
        Game::new(psi, x, payoff).map_err(|e| at("game", e))
    }

    /// The document of `game`, with the observable in spectral form.
    pub fn from_game(game: &Game) -> Self {
        let spectrum = game.spectrum();
        let eigenvalues = spectrum.eigenvalues().to_vec();
        let projector_bases = (0..spectrum.len())
            .map(|k| spectrum.eigenbasis(k).iter().map(|v| v.iter().copied().map(pair).collect()).collect())
            .collect();
        Self {
            dim: game.dim(),
            state: game.state().amplitudes().iter().copied().map(pair).collect(),
            observable: ObservableDocument::Spectral(SpectralDocument { eigenvalues: eigenvalues.clone(), projector_bases }),
            payoff: eigenvalues.iter().map(|&x| PayoffEntry { eigenvalue: x, value: game.payoff_at(x) }).collect(),
        }
    }
}

fn matrix_observable(rows: &[Vec<[f64; 2]>], dim: usize, tol: f64) -> Result<HermitianOperator, CliError> {
    if rows.len() != dim {
        return Err(at("observable.matrix", format!("expected {dim} rows, found {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(at(format!("observable.matrix[{i}]"), format!("expected {dim} entries, found {}", row.len())));
        }
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
    HermitianOperator::with_tolerance(m, tol).map_err(|e| at("observable.matrix", e))
}

fn spectral_observable(s: &SpectralDocument, dim: usize, tol: f64) -> Result<HermitianOperator, CliError> {
    if s.eigenvalues.len() != s.projector_bases.len() {
        return Err(at(
            "observable.spectral",
            format!("{} eigenvalues but {} projector bases", s.eigenvalues.len(), s.projector_bases.len()),
        ));
    }
    let mut vectors = Vec::new();
    for (k, basis) in s.projector_bases.iter().enumerate() {
        if !s.eigenvalues[k].is_finite() {
            return Err(at(format!("observable.spectral.eigenvalues[{k}]"), "non-finite number"));
        }
        if basis.is_empty() {
            return Err(at(format!("observable.spectral.projector_bases[{k}]"), "empty basis"));
        }
        for (j, v) in basis.iter().enumerate() {
            if v.len() != dim {
                return Err(at(format!("observable.spectral.projector_bases[{k}][{j}]"), format!("expected {dim} entries, found {}", v.len())));
            }
            vectors.push((k, DVector::from_vec(complex(v))));
        }
    }
    if vectors.len() != dim {
        return Err(at("observable.spectral.projector_bases", format!("{} vectors given for dimension {dim}", vectors.len())));
    }
    let mut worst: f64 = 0.0;
    for (a, (_, u)) in vectors.iter().enumerate() {
        for (b, (_, v)) in vectors.iter().enumerate() {
            let expected = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((u.dotc(v) - C64::new(expected, 0.0)).norm());
        }
    }
    if worst > tol {
        return Err(at("observable.spectral.projector_bases", format!("vectors are not orthonormal: max |⟨u|v⟩ − δ| = {worst:e} exceeds {tol:e}")));
    }
    let projectors: Vec<HermitianOperator> = (0..s.eigenvalues.len())
        .map(|k| {
            let vs: Vec<DVector<C64>> = vectors.iter().filter(|(owner, _)| *owner == k).map(|(_, v)| v.clone()).collect();
            HermitianOperator::projector(dim, &vs)
        })
        .collect();
    let terms: Vec<(f64, &HermitianOperator)> = s.eigenvalues.iter().copied().zip(projectors.iter()).collect();
    Ok(HermitianOperator::from_spectrum(dim, &terms))
}
