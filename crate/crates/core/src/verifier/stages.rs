//! Stages S1 to S6: from two equal amplitudes up to arbitrary states.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{dyadic_approx, Direction, Relation, Stage, StageParams, StageReport};
use crate::error::{Error, Result};
use crate::games::{equivalent, flatten, Game, PayoffFunction};
use crate::linalg::{apply_function, intertwiner_deviation, HermitianOperator, Isometry, StateVector, C64};
use crate::measurement::{compose, compound_of, instantiates, Continuation, Followup, MeasurementProcedure};
use crate::random;
use crate::transforms::{embed_subspace, measurement_equivalence, payoff_pullback, reflection_unitary, splitting_isometry, SpectrumFunction};
use crate::valuation::{born_value, evaluate, ValueFunction};

/// Tolerance for equalities between Born values.
pub(crate) const VALUE_TOL: f64 = 1e-12;
/// Tolerance on intertwiners and isometry identities.
pub(crate) const CONSTRUCTION_TOL: f64 = 1e-9;
/// Slack added to dyadic bracket bounds.
pub(crate) const BRACKET_SLACK: f64 = 1e-9;

pub(crate) fn born(psi: &StateVector, x: &HermitianOperator, payoff: &PayoffFunction) -> Result<f64> {
    Ok(born_value(&Game::new(psi.clone(), x.clone(), payoff.clone())?))
}

pub(crate) fn identity_on(x: &HermitianOperator) -> PayoffFunction {
    PayoffFunction::identity(x.spectral().eigenvalues())
}

fn ordered_pair(params: &StageParams) -> (f64, f64) {
    (params.x1.unwrap_or(0.0), params.x2.unwrap_or(1.0))
}

/// The shared part of Stage 1 for `ψ = α|λ₁⟩ + β|λ₂⟩`: identities (24),
/// (25) and their combination, then the reflection argument.
fn reflection_argument(stage: &mut Stage, psi: &StateVector, x1: f64, x2: f64, symmetric: bool) -> Result<f64> {
    let x = HermitianOperator::diagonal(&[x1, x2]);
    let one = identity_on(&x);
    let v = born(psi, &x, &one)?;
    let k = 1.5;

    stage.holds("PE: ⟨ψ,X,1+k⟩ ≃ ⟨ψ,X+k,1⟩", equivalent(
        &Game::new(psi.clone(), x.clone(), one.shifted(k))?,
        &Game::new(psi.clone(), x.shifted(k), identity_on(&x.shifted(k)))?,
    ))?;
    let v_payoff_shift = born(psi, &x, &one.shifted(k))?;
    let v_obs_shift = born(psi, &x.shifted(k), &identity_on(&x.shifted(k)))?;
    stage.conclude("weak additivity: V(ψ,X,1+k) = V(ψ,X,1) + k", Relation::Eq, v_payoff_shift, v + k, VALUE_TOL);
    stage.conclude("PE: V(ψ,X,1+k) = V(ψ,X+k,1)", Relation::Eq, v_payoff_shift, v_obs_shift, VALUE_TOL);

    let neg = x.scaled(-1.0);
    stage.holds("PE: ⟨ψ,X,−1⟩ ≃ ⟨ψ,−X,1⟩", equivalent(
        &Game::new(psi.clone(), x.clone(), one.negated())?,
        &Game::new(psi.clone(), neg.clone(), identity_on(&neg))?,
    ))?;
    let v_neg = born(psi, &neg, &identity_on(&neg))?;
    stage.conclude("zero-sum: V(ψ,−X) = −V(ψ,X)", Relation::Eq, v_neg, -v, VALUE_TOL);

    let fx = neg.shifted(x1 + x2);
    let v_reflected = born(psi, &fx, &identity_on(&fx))?;
    stage.conclude("V(ψ,−X+x₁+x₂) = −V(ψ,X) + x₁ + x₂", Relation::Eq, v_reflected, -v + x1 + x2, VALUE_TOL);

    let u = reflection_unitary(&x, x1, x2)?;
    stage.construction("U_f X U_f† = f(X)", Relation::Le, intertwiner_deviation(&u, &x, &fx)?, 0.0, CONSTRUCTION_TOL)?;
    let moved = psi.map(&u)?.max_deviation(psi);
    if symmetric {
        stage.construction("U_f ψ = ψ", Relation::Le, moved, 0.0, CONSTRUCTION_TOL)?;
        let me = measurement_equivalence(&Game::new(psi.clone(), x.clone(), one.clone())?, &u, &fx, &identity_on(&fx))?;
        stage.holds("ME: ⟨ψ,X⟩ ≃ ⟨U_f ψ, f(X)⟩", equivalent(&me, &Game::new(psi.clone(), x.clone(), one)?))?;
    } else {
        stage.conclude("U_f ψ = ψ", Relation::Le, moved, 0.0, CONSTRUCTION_TOL);
    }
    stage.conclude("ME: V(ψ,−X+x₁+x₂) = V(ψ,X)", Relation::Eq, v_reflected, v, VALUE_TOL);
    stage.conclude("V(ψ,X) = ½(x₁+x₂)", Relation::Eq, v, 0.5 * (x1 + x2), VALUE_TOL);
    Ok(v)
}

/// Stage 1: `V((|λ₁⟩+|λ₂⟩)/√2, X) = ½(x₁+x₂)`, directly and after embedding
/// into a space where the reflection is unavailable.
pub(crate) fn stage1(params: &StageParams) -> Result<StageReport> {
    let (x1, x2) = ordered_pair(params);
    let mut stage = Stage::new("S1");
    stage.param("x1", x1);
    stage.param("x2", x2);
    let psi = StateVector::uniform(2);
    reflection_argument(&mut stage, &psi, x1, x2, true)?;

    let x = HermitianOperator::diagonal(&[x1, x2]);
    let game = Game::with_identity_payoff(psi, x.clone())?;
    let e = embed_subspace(&[0, 1], 3)?;
    let far = x1.max(x2) + 1.0 + (x1 - x2).abs();
    for (label, third) in [("non-invariant", far), ("degenerate", x2)] {
        let big = HermitianOperator::diagonal(&[x1, x2, third]);
        if label == "non-invariant" {
            stage.holds("reflection is undefined on the non-invariant spectrum", reflection_unitary(&big, x1, x2).is_err())?;
        }
        let p = identity_on(&big);
        let embedded = measurement_equivalence(&game, &e, &big, &p)?;
        stage.construction(format!("{label} embedding intertwines"), Relation::Le, intertwiner_deviation(&e, &x, &big)?, 0.0, CONSTRUCTION_TOL)?;
        stage.conclude(format!("{label} embedding: V = ½(x₁+x₂)"), Relation::Eq, born_value(&embedded), 0.5 * (x1 + x2), VALUE_TOL);
    }
    Ok(stage.finish())
}

/// The Stage 1 argument forced onto `α|λ₁⟩ + β|λ₂⟩` with `α ≠ β`.
pub(crate) fn stage1_unequal(params: &StageParams) -> Result<StageReport> {
    let (x1, x2) = ordered_pair(params);
    let alpha = params.alpha.unwrap_or(0.6);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange { what: "alpha", value: alpha });
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    let mut stage = Stage::new("S1U");
    stage.expect_failure();
    stage.param("x1", x1);
    stage.param("x2", x2);
    stage.param("alpha", alpha);
    stage.param("beta", beta);
    let psi = StateVector::from_real(&[alpha, beta])?;
    let v = reflection_argument(&mut stage, &psi, x1, x2, false)?;
    stage.conclude("Born value α²x₁ + β²x₂", Relation::Eq, v, alpha * alpha * x1 + beta * beta * x2, VALUE_TOL);
    Ok(stage.finish())
}

/// A node of the binary composition: its measurement, continuations and value.
type Node = (MeasurementProcedure, Vec<(f64, Continuation)>, f64);

/// Builds a measurement that resolves `state` (supported on `indices`, in
/// the eigenbasis of `diag(xs)`) by successive two-outcome measurements.
///
/// Each node measures `Y = 1·|L⟩⟨L| + 2·|R⟩⟨R|`, where `|L⟩`, `|R⟩` are the
/// normalized parts of the node state on the two halves of its index set
/// chosen by `split`, and continues on each child. Returns the node's
/// procedure, its continuations and the node value; every node's value is
/// checked against its Born value.
fn binary_node(
    stage: &mut Stage,
    xs: &[f64],
    indices: &[usize],
    state: &StateVector,
    split: &dyn Fn(usize) -> usize,
) -> Result<Node> {
    let dim = xs.len();
    let k = split(indices.len());
    let (left, right) = indices.split_at(k);
    let part = |idx: &[usize]| -> Result<(f64, StateVector)> {
        let v = DVector::from_fn(dim, |i, _| if idx.contains(&i) { state.amp(i) } else { C64::new(0.0, 0.0) });
        let w = v.norm_squared();
        if w <= 1e-24 {
            return Err(Error::StageConstruction("binary split has an empty side".into()));
        }
        Ok((w, StateVector::normalized(v.iter().copied().collect())?))
    };
    let (w_l, l_state) = part(left)?;
    let (w_r, r_state) = part(right)?;

    let mut child = |idx: &[usize], s: &StateVector| -> Result<(Continuation, f64)> {
        if idx.len() == 1 {
            Ok((Continuation::Cash(xs[idx[0]]), xs[idx[0]]))
        } else {
            let (procedure, continuations, v) = binary_node(stage, xs, idx, s, split)?;
            Ok((Continuation::Measure(Box::new(Followup { procedure, continuations })), v))
        }
    };
    let (c_l, y_l) = child(left, &l_state)?;
    let (c_r, y_r) = child(right, &r_state)?;

    let y = HermitianOperator::rank_one(&l_state)
        .add(&HermitianOperator::rank_one(&r_state).scaled(2.0))?;
    let node_payoff = PayoffFunction::from_pairs([(0.0, 0.0), (1.0, y_l), (2.0, y_r)]);
    let node_value = born(state, &y, &node_payoff.restricted(y.spectral().eigenvalues())?)?;
    let x = HermitianOperator::diagonal(xs);
    stage.conclude(
        format!("node {indices:?}: V(⟨φ,Y⟩) = w_L y_L + w_R y_R"),
        Relation::Eq,
        node_value,
        w_l * y_l + w_r * y_r,
        VALUE_TOL,
    );
    stage.conclude(format!("node {indices:?}: substitutivity, V(⟨φ,X⟩) = V(⟨φ,Y⟩)"), Relation::Eq, born(state, &x, &identity_on(&x))?, node_value, VALUE_TOL);
    let continuations = vec![(0.0, Continuation::Cash(0.0)), (1.0, c_l), (2.0, c_r)];
    Ok((MeasurementProcedure::standard(&y), continuations, node_value))
}

/// Composes the binary tree for `⟨ψ, diag(xs)⟩` and checks it instantiates
/// the game; returns the value of the composite.
fn binary_composition(stage: &mut Stage, xs: &[f64], psi: &StateVector, split: &dyn Fn(usize) -> usize) -> Result<f64> {
    let indices: Vec<usize> = (0..xs.len()).collect();
    let (proc, conts, _) = binary_node(stage, xs, &indices, psi, split)?;
    let branches = compose(&proc, psi, &conts)?;
    let game = Game::with_identity_payoff(psi.clone(), HermitianOperator::diagonal(xs))?;
    stage.holds(format!("N = {}: composite process instantiates ⟨ψ,X⟩", xs.len()), instantiates(&branches, &game))?;
    let compound = compound_of(&proc, psi, &conts)?;
    stage.holds(format!("N = {}: flattened compound game ≃ ⟨ψ,X⟩", xs.len()), equivalent(&flatten(&compound)?, &game))?;
    evaluate(&ValueFunction::Born, &branches)
}

/// Stage 2: equal superpositions of `N = 2^n` eigenstates.
pub(crate) fn stage2(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let n_max = params.n_max.unwrap_or(3);
    if !(1..=4).contains(&n_max) {
        return Err(Error::InvalidParams(format!("Stage 2 needs 1 ≤ n_max ≤ 4, got {n_max}")));
    }
    let mut stage = Stage::new("S2");
    stage.param("n_max", n_max as f64);
    for n in 1..=n_max {
        let big_n = 1usize << n;
        let xs = random::distinct_values(rng, big_n, -5.0, 5.0);
        let psi = StateVector::uniform(big_n);
        let v = binary_composition(&mut stage, &xs, &psi, &|len| len / 2)?;
        let mean = xs.iter().sum::<f64>() / big_n as f64;
        stage.conclude(format!("N = {big_n}: V = (1/N)Σx_i"), Relation::Eq, v, mean, VALUE_TOL);
        stage.conclude(format!("N = {big_n}: Born value of ⟨ψ,X⟩"), Relation::Eq, born(&psi, &HermitianOperator::diagonal(&xs), &PayoffFunction::identity(&xs))?, mean, VALUE_TOL);
    }
    Ok(stage.finish())
}

/// Stage 3: `(√a₁|λ₁⟩ + √a₂|λ₂⟩)/√N` via the splitting isometry.
pub(crate) fn stage3(params: &StageParams) -> Result<StageReport> {
    let (x1, x2) = ordered_pair(params);
    let pairs = match (params.a1, params.a2) {
        (Some(a1), Some(a2)) => vec![(a1, a2)],
        (None, None) => vec![(1, 3), (3, 5)],
        _ => return Err(Error::InvalidParams("Stage 3 needs both a1 and a2".into())),
    };
    let mut stage = Stage::new("S3");
    stage.param("x1", x1);
    stage.param("x2", x2);
    for (i, &(a1, a2)) in pairs.iter().enumerate() {
        let n = a1 + a2;
        if !n.is_power_of_two() || n > 64 || a1 == 0 || a2 == 0 {
            return Err(Error::InvalidParams(format!("Stage 3 needs positive a1, a2 with a1 + a2 a power of two ≤ 64, got ({a1}, {a2})")));
        }
        stage.param(&format!("a1[{i}]"), a1 as f64);
        stage.param(&format!("a2[{i}]"), a2 as f64);
        let nf = n as f64;
        let psi = StateVector::from_real(&[(a1 as f64 / nf).sqrt(), (a2 as f64 / nf).sqrt()])?;
        let x = HermitianOperator::diagonal(&[x1, x2]);
        let game = Game::with_identity_payoff(psi.clone(), x.clone())?;

        let v = splitting_isometry(a1, a2)?;
        let ys: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let y = HermitianOperator::diagonal(&ys);
        let f = SpectrumFunction::from_fn(&ys, |i| if i <= a1 as f64 { x1 } else { x2 });
        let fy = apply_function(&y, |i| f.get(i))?;
        let tag = format!("({a1},{a2})");
        stage.construction(format!("{tag}: f(Y)V = VX"), Relation::Le, intertwiner_deviation(&v, &x, &fy)?, 0.0, CONSTRUCTION_TOL)?;
        let me = measurement_equivalence(&game, &v, &fy, &identity_on(&fy))?;
        let pe = payoff_pullback(&me, &y, &f)?;
        let spread = (0..n).map(|i| (me.state().amp(i).re - 1.0 / nf.sqrt()).abs().max(me.state().amp(i).im.abs())).fold(0.0, f64::max);
        stage.construction(format!("{tag}: Vψ is the equal superposition"), Relation::Le, spread, 0.0, CONSTRUCTION_TOL)?;
        stage.holds(format!("{tag}: ⟨ψ,X⟩ ≃ ⟨Vψ,Y,f⟩"), equivalent(&game, &pe))?;
        let stage2_value = ys.iter().map(|&i| f.get(i).unwrap_or(0.0)).sum::<f64>() / nf;
        stage.conclude(format!("{tag}: V(⟨Vψ,Y,f⟩) = (1/N)Σf(i)"), Relation::Eq, born_value(&pe), stage2_value, VALUE_TOL);
        stage.conclude(format!("{tag}: V = (a₁x₁+a₂x₂)/N"), Relation::Eq, born_value(&game), (a1 as f64 * x1 + a2 as f64 * x2) / nf, VALUE_TOL);
    }
    Ok(stage.finish())
}

/// Stage 4: `√a|λ₁⟩ + √(1−a)|λ₂⟩` bracketed by dyadic approximations.
pub(crate) fn stage4(params: &StageParams) -> Result<StageReport> {
    let (p1, p2) = ordered_pair(params);
    let a_in = params.a.unwrap_or(1.0 / 3.0);
    if !(a_in > 0.0 && a_in < 1.0) {
        return Err(Error::OutOfRange { what: "a", value: a_in });
    }
    let depth = params.depth();
    let mut stage = Stage::new("S4");
    stage.param("a", a_in);
    stage.param("x1", p1);
    stage.param("x2", p2);
    stage.param("depth", depth as f64);
    // Relabel so that x1 ≤ x2.
    let (x1, x2, a) = if p1 <= p2 { (p1, p2, a_in) } else { (p2, p1, 1.0 - a_in) };
    let x = HermitianOperator::diagonal(&[x1, x2]);
    let one = identity_on(&x);
    let psi = StateVector::from_real(&[a.sqrt(), (1.0 - a).sqrt()])?;
    let game = Game::new(psi.clone(), x.clone(), one.clone())?;
    let v = born_value(&game);
    let target = a * x1 + (1.0 - a) * x2;
    let proc = MeasurementProcedure::standard(&x);

    let mut previous_width = f64::INFINITY;
    let mut width = f64::INFINITY;
    for n in 1..=depth {
        let mut bounds = [0.0; 2];
        for (slot, direction) in [Direction::Decreasing, Direction::Increasing].into_iter().enumerate() {
            let a_n = dyadic_approx(a, n, direction)?.value();
            let psi_n = StateVector::from_real(&[a_n.sqrt(), (1.0 - a_n).sqrt()])?;
            let v_n = born(&psi_n, &x, &one)?;
            stage.conclude(format!("n = {n} {direction:?}: V(G_n) = a_n x₁ + (1−a_n) x₂"), Relation::Eq, v_n, a_n * x1 + (1.0 - a_n) * x2, VALUE_TOL);
            // The auxiliary game sits on the branch whose weight overshoots.
            let (aux_outcome, cash_outcome, phi) = match direction {
                Direction::Decreasing => (x1, x2, StateVector::from_real(&[(a / a_n).sqrt(), ((a_n - a) / a_n).sqrt()])?),
                Direction::Increasing => (x2, x1, StateVector::from_real(&[((a - a_n) / (1.0 - a_n)).sqrt(), ((1.0 - a) / (1.0 - a_n)).sqrt()])?),
            };
            let v_aux = born(&phi, &x, &one)?;
            let conts = vec![
                (aux_outcome, Continuation::prepare(phi.clone(), proc.clone(), &one)),
                (cash_outcome, Continuation::Cash(cash_outcome)),
            ];
            let branches = compose(&proc, &psi_n, &conts)?;
            stage.holds(format!("n = {n} {direction:?}: composite process instantiates G"), instantiates(&branches, &game))?;
            let substituted = PayoffFunction::from_pairs([(aux_outcome, v_aux), (cash_outcome, cash_outcome)]);
            let v_sub = born(&psi_n, &x, &substituted)?;
            match direction {
                Direction::Decreasing => {
                    stage.conclude(format!("n = {n}: dominance, V(G′_n) ≥ x₁"), Relation::Ge, v_aux, x1, VALUE_TOL);
                    stage.conclude(format!("n = {n}: substitutivity, V(composite) ≥ V(G_n)"), Relation::Ge, v_sub, v_n, VALUE_TOL);
                    stage.conclude(format!("n = {n}: V(G) ≥ V(G_n)"), Relation::Ge, v, v_n, VALUE_TOL);
                }
                Direction::Increasing => {
                    stage.conclude(format!("n = {n}: dominance, V(G′_n) ≤ x₂"), Relation::Le, v_aux, x2, VALUE_TOL);
                    stage.conclude(format!("n = {n}: substitutivity, V(composite) ≤ V(G_n)"), Relation::Le, v_sub, v_n, VALUE_TOL);
                    stage.conclude(format!("n = {n}: V(G) ≤ V(G_n)"), Relation::Le, v, v_n, VALUE_TOL);
                }
            }
            stage.conclude(format!("n = {n} {direction:?}: V(composite) = V(G)"), Relation::Eq, evaluate(&ValueFunction::Born, &branches)?, v, VALUE_TOL);
            bounds[slot] = v_n;
        }
        width = bounds[1] - bounds[0];
        if previous_width.is_finite() {
            stage.conclude(format!("n = {n}: bracket width does not grow"), Relation::Le, width, previous_width, VALUE_TOL);
        }
        previous_width = width;
    }
    let bound = 2f64.powi(-(depth as i32)) * (x2 - x1) + BRACKET_SLACK;
    stage.conclude("|V − (a x₁ + (1−a) x₂)| within the final bracket", Relation::Le, (v - target).abs(), bound, 0.0);
    if depth >= 20 && (x2 - x1) <= 1.0 {
        stage.conclude("bracket width at depth ≥ 20 below 1e-5", Relation::Le, width, 1e-5, 0.0);
    }
    Ok(stage.finish())
}

/// Stage 5: complex amplitudes via the phase unitary.
pub(crate) fn stage5(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let trials = params.terms.unwrap_or(8);
    let mut stage = Stage::new("S5");
    stage.param("trials", trials as f64);
    for t in 0..trials {
        let (x1, x2) = match (params.x1, params.x2) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                let v = random::distinct_values(rng, 2, -5.0, 5.0);
                (v[0], v[1])
            }
        };
        let x = HermitianOperator::diagonal(&[x1, x2]);
        let psi = random::state(rng, 2);
        let thetas: Vec<f64> = (0..2).map(|i| -psi.amp(i).arg()).collect();
        let u = Isometry::diagonal_phases(&thetas);
        let moved = psi.map(&u)?;
        stage.construction(format!("trial {t}: U X U† = X"), Relation::Le, intertwiner_deviation(&u, &x, &x)?, 0.0, CONSTRUCTION_TOL)?;
        let worst_im = (0..2).map(|i| moved.amp(i).im.abs()).fold(0.0, f64::max);
        let min_re = (0..2).map(|i| moved.amp(i).re).fold(f64::INFINITY, f64::min);
        stage.construction(format!("trial {t}: Uψ has real coefficients"), Relation::Le, worst_im, 0.0, CONSTRUCTION_TOL)?;
        stage.construction(format!("trial {t}: Uψ has nonnegative coefficients"), Relation::Ge, min_re, 0.0, CONSTRUCTION_TOL)?;
        let one = identity_on(&x);
        let g = Game::new(psi.clone(), x.clone(), one.clone())?;
        let gu = Game::new(moved.clone(), x.clone(), one.clone())?;
        stage.holds(format!("trial {t}: ME ⟨ψ,X⟩ ≃ ⟨Uψ,X⟩"), equivalent(&g, &gu))?;
        stage.conclude(format!("trial {t}: V(ψ) = V(Uψ)"), Relation::Eq, born_value(&g), born_value(&gu), VALUE_TOL);
        let w1 = psi.amp(0).norm_sqr();
        stage.conclude(format!("trial {t}: V = |α₁|²x₁ + |α₂|²x₂"), Relation::Eq, born_value(&g), w1 * x1 + (1.0 - w1) * x2, VALUE_TOL);
        let extra: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let shifted = psi.map(&Isometry::diagonal_phases(&extra))?;
        stage.conclude(format!("trial {t}: invariance under random phases"), Relation::Eq, born(&shifted, &x, &one)?, born_value(&g), VALUE_TOL);
    }
    Ok(stage.finish())
}

/// Stage 6: an `n`-term game assembled from two-term measurements.
pub(crate) fn stage6(params: &StageParams, rng: &mut ChaCha8Rng) -> Result<StageReport> {
    let n = params.terms.unwrap_or(5);
    if !(2..=16).contains(&n) {
        return Err(Error::InvalidParams(format!("Stage 6 needs 2 ≤ terms ≤ 16, got {n}")));
    }
    let mut stage = Stage::new("S6");
    stage.param("terms", n as f64);
    let xs = random::distinct_values(rng, n, -5.0, 5.0);
    let psi = random::state(rng, n);
    let v = binary_composition(&mut stage, &xs, &psi, &|_| 1)?;
    let expected: f64 = (0..n).map(|i| psi.amp(i).norm_sqr() * xs[i]).sum();
    stage.conclude("V = Σ|α_i|²x_i", Relation::Eq, v, expected, VALUE_TOL);
    Ok(stage.finish())
}
