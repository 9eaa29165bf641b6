//! Seeded samplers for the random instances used by audits and tests.
//!
//! Every sampler takes an explicit RNG, so runs are reproducible from a seed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::games::{Game, PayoffFunction};
use crate::linalg::{c, HermitianOperator, Isometry, StateVector, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state.
pub fn state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let amps = (0..dim).map(|_| gaussian(rng)).collect();
    StateVector::normalized(amps).expect("gaussian vector is nonzero")
}

/// State with strictly positive real amplitudes.
pub fn positive_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let amps = (0..dim).map(|_| c(rng.gen_range(0.2..1.0), 0.0)).collect();
    StateVector::normalized(amps).expect("positive vector is nonzero")
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Isometry {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / c(d.norm(), 0.0) } else { c(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    Isometry::new(q).expect("QR factor is unitary")
}

/// Random isometry `C^dim_in → C^dim_out`.
pub fn isometry<R: Rng + ?Sized>(rng: &mut R, dim_in: usize, dim_out: usize) -> Isometry {
    let u = unitary(rng, dim_out);
    Isometry::new(u.matrix().columns(0, dim_in).into_owned()).expect("columns of a unitary")
}

/// Dense random Hermitian matrix, generically non-degenerate.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    HermitianOperator::new((&g + g.adjoint()) * c(0.5, 0.0)).expect("symmetrized")
}

/// Integer eigenvalues drawn with repetition, rotated into a random basis.
pub fn degenerate_observable<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let levels = (dim / 2).max(1) as i32;
    let eigs: Vec<f64> = (0..dim).map(|_| rng.gen_range(-levels..=levels) as f64).collect();
    rotated_diagonal(rng, &eigs)
}

/// `U diag(eigs) U†` for a Haar-random `U`.
pub fn rotated_diagonal<R: Rng + ?Sized>(rng: &mut R, eigs: &[f64]) -> HermitianOperator {
    let u = unitary(rng, eigs.len());
    let d = DMatrix::from_diagonal(&DVector::from_iterator(eigs.len(), eigs.iter().map(|&x| c(x, 0.0))));
    HermitianOperator::new(u.matrix() * d * u.matrix().adjoint()).expect("unitary conjugate of a diagonal")
}

/// Payoff on the given eigenvalues with values from a small decimal grid, so
/// collisions between payoff values happen.
pub fn payoff<R: Rng + ?Sized>(rng: &mut R, eigenvalues: &[f64]) -> PayoffFunction {
    PayoffFunction::from_pairs(eigenvalues.iter().map(|&x| (x, rng.gen_range(-8..=8) as f64 * 0.5)))
}

/// Payoff with continuous values in `[-5, 5)`.
pub fn continuous_payoff<R: Rng + ?Sized>(rng: &mut R, eigenvalues: &[f64]) -> PayoffFunction {
    PayoffFunction::from_pairs(eigenvalues.iter().map(|&x| (x, rng.gen_range(-5.0..5.0))))
}

/// Random game of dimension `1..=max_dim`, degenerate half of the time.
pub fn game<R: Rng + ?Sized>(rng: &mut R, max_dim: usize) -> Game {
    let dim = rng.gen_range(1..=max_dim);
    let x = if rng.gen_bool(0.5) { degenerate_observable(rng, dim) } else { hermitian(rng, dim) };
    let psi = state(rng, dim);
    let eigs = x.spectral().eigenvalues().to_vec();
    let p = if rng.gen_bool(0.5) { payoff(rng, &eigs) } else { continuous_payoff(rng, &eigs) };
    Game::new(psi, x, p).expect("sampled game is valid")
}

/// `n` distinct values in `[lo, hi)`, ascending.
pub fn distinct_values<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(n);
    while out.len() < n {
        let v = rng.gen_range(lo..hi);
        if out.iter().all(|&u| (u - v).abs() > 1e-3) {
            out.push(v);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}
