//! Stages V2 to V4, which reach rational weights by fine-graining and
//! irrational ones by dominance.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::stages::{born, BRACKET_SLACK, CONSTRUCTION_TOL, VALUE_TOL};
use super::{dyadic_approx, Direction, Relation, Stage, StageParams, StageReport};
use crate::error::{Error, Result};
use crate::games::{canonicalize, equivalent, weight_map, Game, PayoffFunction};
use crate::linalg::{intertwiner_deviation, HermitianOperator, Isometry, StateVector};
use crate::random;
use crate::valuation::{born_value, expected_utility};

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    heap(n, &mut current, &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Equal weights: averaging over all payoff permutations.
pub(crate) fn stage2(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let n = params.terms.unwrap_or(4);
    if !(2..=6).contains(&n) {
        return Err(Error::InvalidParams(format!("equal-weight stage needs 2 ≤ terms ≤ 6, got {n}")));
    }
    let depth = params.depth();
    let mut stage = Stage::new("V2");
    stage.param("terms", n as f64);
    stage.param("depth", depth as f64);

    let xs = random::distinct_values(rng, n, -5.0, 5.0);
    let x = HermitianOperator::diagonal(&xs);
    let psi = StateVector::uniform(n);
    let base = Game::with_identity_payoff(psi.clone(), x.clone())?;
    let perms = permutations(n);
    stage.construction("number of permutations is n!", Relation::Eq, perms.len() as f64, factorial(n), 0.0)?;
    let mut total = PayoffFunction::constant(&xs, 0.0);
    let mut value_sum = 0.0;
    let mut spread: f64 = 0.0;
    for perm in &perms {
        let p = PayoffFunction::from_pairs(perm.iter().enumerate().map(|(i, &j)| (xs[i], xs[j])));
        let g = Game::new(psi.clone(), x.clone(), p.clone())?;
        if !equivalent(&g, &base) {
            return Err(Error::StageConstruction(format!("V2: permuted game {perm:?} is not equivalent")));
        }
        let v = born_value(&g);
        spread = spread.max((v - born_value(&base)).abs());
        value_sum += v;
        total = total.add(&p)?;
    }
    stage.holds("every permuted game ≃ ⟨ψ,X⟩", true)?;
    let sum_x: f64 = xs.iter().sum();
    let constant = factorial(n - 1) * sum_x;
    let worst = xs.iter().map(|&xi| (total.get(xi).unwrap_or(f64::NAN) - constant).abs()).fold(0.0, f64::max);
    stage.construction("Σ_π P_π = (n−1)!Σx pointwise", Relation::Le, worst, 0.0, CONSTRUCTION_TOL * constant.abs().max(1.0))?;
    stage.conclude("all permuted games have one value", Relation::Le, spread, 0.0, VALUE_TOL);
    stage.conclude("additivity: Σ_π V(P_π) = (n−1)!Σx", Relation::Eq, value_sum, constant, VALUE_TOL * factorial(n) * 10.0);
    stage.conclude("V = (1/n)Σx", Relation::Eq, born_value(&base), sum_x / n as f64, VALUE_TOL);

    // Repeated payoff values: label the eigenstates 1..n and perturb.
    let mut repeated = xs.clone();
    repeated[n - 1] = repeated[0];
    let labels: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let k = HermitianOperator::diagonal(&labels);
    let flat = PayoffFunction::from_pairs(labels.iter().zip(&repeated).map(|(&l, &v)| (l, v)));
    let v = born(&psi, &k, &flat)?;
    let mean = repeated.iter().sum::<f64>() / n as f64;
    // Keeps perturbed payoffs further apart than the payoff merge tolerance.
    let delta = 1.0;
    let offset_mean = (1..=n).map(|a| a as f64).sum::<f64>() / n as f64;
    let mut previous = f64::INFINITY;
    for m in 1..=depth.min(24) {
        let step = 2f64.powi(-(m as i32)) * delta;
        let lower = flat.map_values(|l, p| p - l * step);
        let upper = flat.map_values(|l, p| p + l * step);
        let (v_lo, v_hi) = (born(&psi, &k, &lower)?, born(&psi, &k, &upper)?);
        stage.conclude(format!("m = {m}: perturbed lower game value"), Relation::Eq, v_lo, mean - offset_mean * step, VALUE_TOL);
        stage.conclude(format!("m = {m}: perturbed upper game value"), Relation::Eq, v_hi, mean + offset_mean * step, VALUE_TOL);
        stage.conclude(format!("m = {m}: dominance, V(P⁻_m) ≤ V(P)"), Relation::Le, v_lo, v, VALUE_TOL);
        stage.conclude(format!("m = {m}: dominance, V(P) ≤ V(P⁺_m)"), Relation::Le, v, v_hi, VALUE_TOL);
        let width = v_hi - v_lo;
        if previous.is_finite() {
            stage.conclude(format!("m = {m}: bracket narrows"), Relation::Le, width, previous, VALUE_TOL);
        }
        previous = width;
    }
    stage.conclude("repeated payoffs: V = (1/n)ΣP", Relation::Eq, v, mean, previous + BRACKET_SLACK);
    Ok(stage.finish())
}

/// Rational weights `m_i/N` by fine-graining into `N` equal parts.
pub(crate) fn stage3(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let outcomes = params.terms.unwrap_or(3);
    if !(1..=4).contains(&outcomes) {
        return Err(Error::InvalidParams(format!("rational-weight stage needs 1 ≤ terms ≤ 4, got {outcomes}")));
    }
    let mut stage = Stage::new("V3");
    let ms: Vec<usize> = (0..outcomes).map(|_| rng.gen_range(1..=4)).collect();
    let big_n: usize = ms.iter().sum();
    let xs = random::distinct_values(rng, outcomes, -5.0, 5.0);
    for (i, &m) in ms.iter().enumerate() {
        stage.param(&format!("m{i}"), m as f64);
    }
    stage.param("N", big_n as f64);
    let nf = big_n as f64;
    let psi = StateVector::from_real(&ms.iter().map(|&m| (m as f64 / nf).sqrt()).collect::<Vec<_>>())?;
    let game = Game::with_identity_payoff(psi, HermitianOperator::diagonal(&xs))?;

    let labels: Vec<f64> = (1..=big_n).map(|i| i as f64).collect();
    let mut block_payoff = Vec::with_capacity(big_n);
    for (i, &m) in ms.iter().enumerate() {
        block_payoff.extend(std::iter::repeat_n(xs[i], m));
    }
    let fine = Game::new(
        StateVector::uniform(big_n),
        HermitianOperator::diagonal(&labels),
        PayoffFunction::from_pairs(labels.iter().copied().zip(block_payoff.iter().copied())),
    )?;
    stage.holds("⟨ψ,X⟩ ≃ ⟨ψ′,K,P′⟩", equivalent(&game, &fine))?;
    let (c1, c2) = (canonicalize(&game)?, canonicalize(&fine)?);
    stage.construction(
        "canonical forms agree",
        Relation::Le,
        weight_map(&c1).max_difference(&weight_map(&c2), 1e-12),
        0.0,
        CONSTRUCTION_TOL,
    )?;
    let expected = ms.iter().zip(&xs).map(|(&m, &x)| m as f64 * x).sum::<f64>() / nf;
    stage.conclude("equal weights: V(ψ′) = (1/N)ΣP′", Relation::Eq, born_value(&fine), block_payoff.iter().sum::<f64>() / nf, VALUE_TOL);
    stage.conclude("V(ψ′) = Σm_i x_i / N", Relation::Eq, born_value(&fine), expected, VALUE_TOL);
    stage.conclude("V(ψ) = expected utility", Relation::Eq, born_value(&game), expected_utility(&game), VALUE_TOL);
    Ok(stage.finish())
}

/// Irrational weights bracketed by dyadic games on an enlarged space.
pub(crate) fn stage4(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let n = params.terms.unwrap_or(3);
    if !(2..=8).contains(&n) {
        return Err(Error::InvalidParams(format!("irrational-weight stage needs 2 ≤ terms ≤ 8, got {n}")));
    }
    let depth = params.depth();
    let mut stage = Stage::new("V4");
    stage.param("terms", n as f64);
    stage.param("depth", depth as f64);

    let xs = random::distinct_values(rng, n, 0.0, 1.0);
    let x = HermitianOperator::diagonal(&xs);
    let psi = random::state(rng, n);
    let game = Game::with_identity_payoff(psi.clone(), x.clone())?;

    let u = Isometry::diagonal_phases(&(0..n).map(|i| -psi.amp(i).arg()).collect::<Vec<_>>());
    stage.construction("phase unitary commutes with X", Relation::Le, intertwiner_deviation(&u, &x, &x)?, 0.0, CONSTRUCTION_TOL)?;
    let real = psi.map(&u)?;
    let weights: Vec<f64> = (0..n).map(|i| real.amp(i).norm_sqr()).collect();
    stage.holds("ME to real amplitudes", equivalent(&game, &Game::with_identity_payoff(real, x.clone())?))?;

    // λ_i carry x_i; μ_i carry distinct labels above the spectrum.
    let (lo, hi) = (xs[0] - 0.1, xs[n - 1] + 0.1);
    let mu_labels: Vec<f64> = (0..n).map(|i| 2.0 + i as f64).collect();
    let big_x = HermitianOperator::diagonal(&[xs.clone(), mu_labels.clone()].concat());
    let v = born_value(&game);

    let mut previous = f64::INFINITY;
    let mut width = f64::INFINITY;
    for m in 1..=depth {
        let a: Vec<f64> = weights
            .iter()
            .map(|&w| if w >= 1.0 { Ok(1.0) } else if w <= 0.0 { Ok(0.0) } else { dyadic_approx(w, m, Direction::Increasing).map(|d| d.value()) })
            .collect::<Result<_>>()?;
        let amps: Vec<f64> = a.iter().map(|v| v.sqrt()).chain(weights.iter().zip(&a).map(|(w, v)| (w - v).max(0.0).sqrt())).collect();
        let psi_m = StateVector::from_real(&amps)?;
        let pays_x = PayoffFunction::from_pairs(xs.iter().chain(&mu_labels).enumerate().map(|(i, &l)| (l, xs[i % n])));
        let dominating = Game::new(psi_m.clone(), big_x.clone(), pays_x.clone())?;
        stage.holds(format!("m = {m}: ⟨ψ_m,X′,P′⟩ ≃ ⟨ψ,X⟩"), equivalent(&dominating, &game))?;

        let mut bounds = [0.0; 2];
        for (slot, fill) in [lo, hi].into_iter().enumerate() {
            let p = pays_x.map_values(|l, p| if l >= 2.0 { fill } else { p });
            let g = Game::new(psi_m.clone(), big_x.clone(), p)?;
            let w = weight_map(&g);
            let scale = 2f64.powi(m as i32);
            let off_grid = w.entries().iter().map(|&(_, wt)| ((wt * scale) - (wt * scale).round()).abs()).fold(0.0, f64::max);
            stage.construction(format!("m = {m}: bracketing game has dyadic weights"), Relation::Le, off_grid, 0.0, 1e-6)?;
            let rest = 1.0 - a.iter().sum::<f64>();
            let formula = a.iter().zip(&xs).map(|(a, x)| a * x).sum::<f64>() + rest * fill;
            bounds[slot] = born_value(&g);
            stage.conclude(format!("m = {m}: rational-weight value of bracket {slot}"), Relation::Eq, bounds[slot], formula, VALUE_TOL);
        }
        stage.conclude(format!("m = {m}: dominance, lower ≤ V"), Relation::Le, bounds[0], v, VALUE_TOL);
        stage.conclude(format!("m = {m}: dominance, V ≤ upper"), Relation::Le, v, bounds[1], VALUE_TOL);
        width = bounds[1] - bounds[0];
        if previous.is_finite() {
            stage.conclude(format!("m = {m}: bracket narrows"), Relation::Le, width, previous, VALUE_TOL);
        }
        previous = width;
    }
    stage.conclude("|V − Σ|α_i|²x_i| within the final bracket", Relation::Le, (v - expected_utility(&game)).abs(), width + BRACKET_SLACK, 0.0);
    if depth >= 20 {
        stage.conclude("bracket width at depth ≥ 20 below 1e-5", Relation::Le, width, 1e-5, 0.0);
    }
    Ok(stage.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::verify_stage;

    #[test]
    fn permutations_are_complete() {
        let p = permutations(4);
        assert_eq!(p.len(), 24);
        let mut sorted = p.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
    }

    #[test]
    fn alternate_stages_pass() {
        for id in ["V2", "V3", "V4"] {
            for seed in 0..3 {
                let r = verify_stage(id, &StageParams::default(), seed).unwrap();
                assert!(r.pass, "{id} seed {seed}: {:#?}", r.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn terms_are_validated() {
        assert!(verify_stage("V2", &StageParams { terms: Some(9), ..Default::default() }, 0).is_err());
        let r = verify_stage("V2", &StageParams { terms: Some(5), depth: Some(8), ..Default::default() }, 1).unwrap();
        assert!(r.pass);
    }
}
