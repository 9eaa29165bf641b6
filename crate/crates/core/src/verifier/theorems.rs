//! Theorem-level checks run as stages on sampled instances.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Relation, Stage, StageParams, StageReport};
use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, StateVector};
use crate::random;
use crate::valuation::{
    check_linearity_lemma, check_non_contextuality, check_representation, extract_probabilities, gleason_route, AxiomReport, ValueFunction,
    AXIOM_TOL, RECONSTRUCTION_TOL,
};

const REPRESENTATION_TOL: f64 = 1e-12;

fn observable(rng: &mut ChaCha8Rng, dim: usize, degenerate: bool) -> HermitianOperator {
    if degenerate {
        random::degenerate_observable(rng, dim)
    } else {
        random::hermitian(rng, dim)
    }
}

fn record(stage: &mut Stage, label: &str, report: &AxiomReport, tol: f64) {
    stage.conclude(format!("{label}: verdict is pass"), Relation::Eq, report.passed() as u8 as f64, 1.0, 0.0);
    stage.conclude(format!("{label}: max violation"), Relation::Le, report.max_violation, 0.0, tol);
}

/// `V(P) = Σ Pr(x)P(x)` for 100 payoffs on each sampled game.
pub(crate) fn representation(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let mut stage = Stage::new("REP");
    let dims = match params.dim {
        Some(d) if d >= 1 => vec![d],
        Some(d) => return Err(Error::InvalidParams(format!("dimension must be positive, got {d}"))),
        None => vec![4, 8],
    };
    for &dim in &dims {
        for degenerate in [false, true] {
            let label = format!("dim {dim}{}", if degenerate { " degenerate" } else { "" });
            let psi = random::state(rng, dim);
            let x = observable(rng, dim, degenerate);
            let eigs = x.spectral().eigenvalues().to_vec();
            let payoffs: Vec<_> = (0..100).map(|_| random::continuous_payoff(rng, &eigs)).collect();
            let report = check_representation(&ValueFunction::Born, &psi, &x, &payoffs)?;
            record(&mut stage, &label, &report, REPRESENTATION_TOL);
            let total = extract_probabilities(&ValueFunction::Born, &psi, &x)?.total();
            stage.conclude(format!("{label}: Σ Pr = 1"), Relation::Eq, total, 1.0, REPRESENTATION_TOL);
        }
    }
    Ok(stage.finish())
}

/// Values decompose over the spectral projectors.
pub(crate) fn non_contextuality(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let max_dim = params.dim.unwrap_or(8);
    if max_dim == 0 {
        return Err(Error::InvalidParams("dimension must be positive".into()));
    }
    let mut stage = Stage::new("NC");
    stage.param("max_dim", max_dim as f64);
    for i in 0..20 {
        let dim = rng.gen_range(1..=max_dim);
        let psi = random::state(rng, dim);
        let x = observable(rng, dim, i % 2 == 1);
        let eigs = x.spectral().eigenvalues().to_vec();
        let payoff = random::continuous_payoff(rng, &eigs);
        let report = check_non_contextuality(&ValueFunction::Born, &psi, &x, &payoff)?;
        record(&mut stage, &format!("game {i} (dim {dim})"), &report, AXIOM_TOL);
    }
    Ok(stage.finish())
}

/// The three-step route from non-contextuality to `ρ = |ψ⟩⟨ψ|`.
pub(crate) fn gleason(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let dim = params.dim.unwrap_or(3);
    let mut stage = Stage::new("GLEASON");
    stage.param("dim", dim as f64);
    stage.holds(
        "dimension 2 is rejected",
        gleason_route(&ValueFunction::Born, &StateVector::uniform(2)).err() == Some(Error::DimTooSmall(2)),
    )?;
    let psi = random::state(rng, dim);
    let route = gleason_route(&ValueFunction::Born, &psi)?;
    let nc_pass = route.non_contextuality.iter().filter(|r| r.passed()).count();
    stage.conclude("non-contextuality on every spanning observable", Relation::Eq, nc_pass as f64, route.non_contextuality.len() as f64, 0.0);
    stage.construction("projectors span the Hermitian operators", Relation::Eq, route.fit.rank as f64, (dim * dim) as f64, 0.0)?;
    stage.conclude("fit residual", Relation::Le, route.fit.residual, 0.0, RECONSTRUCTION_TOL);
    stage.conclude("⟨ψ|ρ|ψ⟩ = 1", Relation::Eq, route.psi_expectation, 1.0, RECONSTRUCTION_TOL);
    stage.conclude("‖ρ − |ψ⟩⟨ψ|‖_F", Relation::Le, route.distance_to_state, 0.0, RECONSTRUCTION_TOL);
    Ok(stage.finish())
}

/// Dyadic brackets for `V(aP) = aV(P)`.
pub(crate) fn linearity(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let depth = params.depth();
    let scales = match params.a {
        Some(a) => vec![a],
        None => vec![1.0 / 3.0, 2.5, -2.0, 1.0],
    };
    let mut stage = Stage::new("LIN");
    stage.param("depth", depth as f64);
    let dim = params.dim.unwrap_or(4);
    for (i, &a) in scales.iter().enumerate() {
        stage.param(&format!("a[{i}]"), a);
        let psi = random::state(rng, dim);
        let x = observable(rng, dim, i % 2 == 1);
        let eigs = x.spectral().eigenvalues().to_vec();
        let payoff = random::continuous_payoff(rng, &eigs);
        let report = check_linearity_lemma(&ValueFunction::Born, &psi, &x, &payoff, a, depth)?;
        record(&mut stage, &format!("a = {a}"), &report, AXIOM_TOL);
    }
    Ok(stage.finish())
}
