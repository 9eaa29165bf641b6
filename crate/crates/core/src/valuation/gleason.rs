//! Density-operator fits to projector probabilities.

use nalgebra::{DMatrix, DVector};

use super::{check_non_contextuality, extract_probabilities, AxiomReport, ValueFunction};
use crate::error::{Error, Result};
use crate::games::PayoffFunction;
use crate::linalg::{apply_function, c, HermitianOperator, StateVector, C64};

/// A fitted density operator.
#[derive(Debug, Clone)]
pub struct GleasonFit {
    pub rho: HermitianOperator,
    /// `max |Pr(P) − Tr(Pρ)|` over the fitted projectors, after projection
    /// onto density operators.
    pub residual: f64,
    /// Rank of the projector family in the `d²`-dimensional real space of
    /// Hermitian operators.
    pub rank: usize,
}

/// Step-by-step outcome of the non-contextual route to the Born rule.
#[derive(Debug, Clone)]
pub struct GleasonRoute {
    /// Step 1: the value function is non-contextual on every observable used.
    pub non_contextuality: Vec<AxiomReport>,
    /// Step 2: the probabilities come from a density operator.
    pub fit: GleasonFit,
    /// Step 3: `⟨ψ|ρ|ψ⟩`, forced to 1 by the game on `|ψ⟩⟨ψ|`.
    pub psi_expectation: f64,
    /// `‖ρ − |ψ⟩⟨ψ|‖_F`.
    pub distance_to_state: f64,
}

/// Real coordinates of `Tr(P B_r)` for the Hermitian basis
/// `E_jj`, `E_jk + E_kj`, `i(E_jk − E_kj)` (`j < k`).
fn trace_row(p: &DMatrix<C64>) -> Vec<f64> {
    let d = p.nrows();
    let mut row = Vec::with_capacity(d * d);
    for j in 0..d {
        row.push(p[(j, j)].re);
    }
    for j in 0..d {
        for k in j + 1..d {
            row.push(2.0 * p[(j, k)].re);
            row.push(2.0 * p[(j, k)].im);
        }
    }
    row
}

fn from_coordinates(d: usize, t: &DVector<f64>) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(d, d);
    for j in 0..d {
        m[(j, j)] = c(t[j], 0.0);
    }
    let mut r = d;
    for j in 0..d {
        for k in j + 1..d {
            m[(j, k)] = c(t[r], t[r + 1]);
            m[(k, j)] = c(t[r], -t[r + 1]);
            r += 2;
        }
    }
    m
}

/// `Tr(P ρ)`.
fn trace_product(p: &HermitianOperator, rho: &HermitianOperator) -> f64 {
    (p.matrix() * rho.matrix()).trace().re
}

/// Least-squares `ρ` with `Tr(Pρ) ≈ Pr(P)` and `Tr ρ = 1`, then projected to
/// a density operator by clipping negative eigenvalues and renormalizing
/// the trace.
pub fn fit_density(dim: usize, data: &[(HermitianOperator, f64)]) -> Result<GleasonFit> {
    if dim < 3 {
        return Err(Error::DimTooSmall(dim));
    }
    let n = dim * dim;
    for (p, _) in data {
        if p.dim() != dim {
            return Err(Error::DimMismatch { expected: dim, found: p.dim() });
        }
    }
    let rows: Vec<Vec<f64>> = data.iter().map(|(p, _)| trace_row(p.matrix())).collect();
    let a = DMatrix::from_fn(rows.len(), n, |i, r| rows[i][r]);
    let rank = if rows.is_empty() { 0 } else { a.clone().svd(false, false).rank(1e-10 * n as f64) };
    if rank < n {
        return Err(Error::InsufficientSpan { rank, needed: n });
    }

    let trace: Vec<f64> = (0..n).map(|r| if r < dim { 1.0 } else { 0.0 }).collect();
    let full = DMatrix::from_fn(rows.len() + 1, n, |i, r| if i < rows.len() { rows[i][r] } else { trace[r] });
    let mut b = DVector::from_iterator(data.len(), data.iter().map(|d| d.1));
    b = b.push(1.0);
    let t = full
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::StageConstruction(format!("least-squares solve failed: {e}")))?;

    let raw = HermitianOperator::new(from_coordinates(dim, &t))?;
    let clipped = apply_function(&raw, |x| Some(x.max(0.0)))?;
    let tr = clipped.trace();
    if tr <= 0.0 {
        return Err(Error::StageConstruction("fitted operator has no positive part".into()));
    }
    let rho = clipped.scaled(1.0 / tr);
    let residual = data.iter().map(|(p, pr)| (pr - trace_product(p, &rho)).abs()).fold(0.0, f64::max);
    Ok(GleasonFit { rho, residual, rank })
}

/// Fits `ρ` to the probabilities `vf` assigns to every projector of every
/// listed observable.
pub fn gleason_fit(vf: &ValueFunction, psi: &StateVector, observables: &[HermitianOperator]) -> Result<GleasonFit> {
    if psi.dim() < 3 {
        return Err(Error::DimTooSmall(psi.dim()));
    }
    let mut data = Vec::new();
    for x in observables {
        let table = extract_probabilities(vf, psi, x)?;
        for (xv, proj) in x.spectral().iter() {
            data.push((proj.clone(), table.get(xv).unwrap_or(0.0)));
        }
    }
    fit_density(psi.dim(), &data)
}

/// The computational-basis observable and, for each pair `j < k`, the
/// observables with eigenvectors `(e_j ± e_k)/√2` and `(e_j ± i e_k)/√2`.
/// Their projectors span the Hermitian operators.
pub fn default_spanning_family(dim: usize) -> Vec<HermitianOperator> {
    let eigs: Vec<f64> = (0..dim).map(|i| i as f64).collect();
    let mut family = vec![HermitianOperator::diagonal(&eigs)];
    let s = 1.0 / 2f64.sqrt();
    for j in 0..dim {
        for k in j + 1..dim {
            for phase in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut plus = DVector::<C64>::zeros(dim);
                let mut minus = DVector::<C64>::zeros(dim);
                plus[j] = c(s, 0.0);
                plus[k] = phase * s;
                minus[j] = c(s, 0.0);
                minus[k] = -phase * s;
                let p = HermitianOperator::projector(dim, &[plus]);
                let m = HermitianOperator::projector(dim, &[minus]);
                family.push(p.add(&m.scaled(-1.0)).expect("same dimension"));
            }
        }
    }
    family
}

/// Runs the three steps: non-contextuality on the family, the density fit,
/// and the `|ψ⟩⟨ψ|` constraint.
pub fn gleason_route(vf: &ValueFunction, psi: &StateVector) -> Result<GleasonRoute> {
    let dim = psi.dim();
    if dim < 3 {
        return Err(Error::DimTooSmall(dim));
    }
    let mut family = default_spanning_family(dim);
    let own = HermitianOperator::rank_one(psi);
    family.push(own);
    let non_contextuality = family
        .iter()
        .map(|x| {
            let eigs = x.spectral().eigenvalues().to_vec();
            check_non_contextuality(vf, psi, x, &PayoffFunction::identity(&eigs))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = gleason_fit(vf, psi, &family)?;
    let psi_expectation = psi.expectation(&fit.rho);
    let distance_to_state = fit.rho.frobenius_distance(&HermitianOperator::rank_one(psi));
    Ok(GleasonRoute { non_contextuality, fit, psi_expectation, distance_to_state })
}
