//! Games with known eigendata, and their weight maps computed without an
//! eigensolver.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qgame_core::linalg::{HermitianOperator, Isometry, StateVector, C64};
use qgame_core::{random, Game, PayoffFunction, WeightMap};
use rand::Rng;

/// A game built as `X = U diag(eigs) U†` together with the pieces.
pub struct Known {
    pub game: Game,
    pub eigs: Vec<f64>,
    pub u: Isometry,
    pub payoff_by_index: Vec<f64>,
}

/// Branch-by-branch weights: `|(U†ψ)_i|²` summed per payoff value.
pub fn oracle_weights(k: &Known) -> Vec<(f64, f64)> {
    let coords = k.u.matrix().adjoint() * k.game.state().amplitudes();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &p) in k.payoff_by_index.iter().enumerate() {
        let w = coords[i].norm_sqr();
        match out.iter_mut().find(|(q, _)| *q == p) {
            Some(entry) => entry.1 += w,
            None => out.push((p, w)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Largest weight disagreement, counting payoffs missing on one side as 0.
pub fn weight_gap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut worst: f64 = 0.0;
    for &(p, w) in a {
        let other = b.iter().filter(|(q, _)| (q - p).abs() <= 1e-9).map(|e| e.1).sum::<f64>();
        worst = worst.max((w - other).abs());
    }
    for &(p, w) in b {
        if !a.iter().any(|(q, _)| (q - p).abs() <= 1e-9) {
            worst = worst.max(w);
        }
    }
    worst
}

pub fn entries(w: &WeightMap) -> Vec<(f64, f64)> {
    w.entries().to_vec()
}

pub fn build(eigs: Vec<f64>, payoff_of: &dyn Fn(f64) -> f64, u: Isometry, coords: &[C64]) -> Known {
    let n = eigs.len();
    let d = DMatrix::from_diagonal(&DVector::from_iterator(n, eigs.iter().map(|&e| C64::new(e, 0.0))));
    let x = HermitianOperator::new(u.matrix() * d * u.matrix().adjoint()).unwrap();
    let psi = StateVector::normalized((u.matrix() * DVector::from_column_slice(coords)).iter().copied().collect()).unwrap();
    let mut distinct: Vec<f64> = Vec::new();
    for &e in &eigs {
        if !distinct.iter().any(|&f| (f - e).abs() < 1e-6) {
            distinct.push(e);
        }
    }
    let spectrum = x.spectral();
    let payoff = PayoffFunction::from_pairs(spectrum.eigenvalues().iter().map(|&xv| {
        let nearest = distinct.iter().copied().min_by(|a, b| (a - xv).abs().total_cmp(&(b - xv).abs())).unwrap();
        (xv, payoff_of(nearest))
    }));
    let payoff_by_index = eigs.iter().map(|&e| payoff_of(e)).collect();
    Known { game: Game::new(psi, x, payoff).unwrap(), eigs, u, payoff_by_index }
}

/// Random eigenvalues (integer levels with repeats half of the time), a
/// payoff on a half-integer grid so payoffs collide, a Haar basis and a
/// random state.
pub fn sample<R: Rng>(rng: &mut R, max_dim: usize) -> Known {
    let dim = rng.gen_range(1..=max_dim);
    let eigs: Vec<f64> = if rng.gen_bool(0.5) {
        (0..dim).map(|_| rng.gen_range(-2..=2) as f64).collect()
    } else {
        random::distinct_values(rng, dim, -3.0, 3.0)
    };
    let table: Vec<(f64, f64)> = eigs.iter().map(|&e| (e, rng.gen_range(-4..=4) as f64 * 0.5)).collect();
    let payoff_of = move |e: f64| table.iter().find(|(f, _)| (f - e).abs() < 1e-6).unwrap().1;
    let u = random::unitary(rng, dim);
    let coords: Vec<C64> = random::state(rng, dim).amplitudes().iter().copied().collect();
    build(eigs, &payoff_of, u, &coords)
}
