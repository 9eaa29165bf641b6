//! Value functions and the checks that pin the Born rule down.
//!
//! Born valuation reads only the weight map. The other value functions are
//! defined on branch sets, which is what lets them tell apart different
//! physical instantiations of one game; at game level they are evaluated on
//! the standard (one readout per eigenstate) instantiation.

mod axioms;
mod gleason;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{same_eigenvalue, weight_map, Game, PayoffFunction, WeightMap};
use crate::linalg::{HermitianOperator, StateVector};
use crate::measurement::{run, BranchSet, MeasurementProcedure};

pub use axioms::{audit_all, check_axiom, expected_verdict, matches_expected_profile, Axiom, Corpus, CorpusItem};
pub(crate) use axioms::device_pair;
pub use gleason::{default_spanning_family, fit_density, gleason_fit, gleason_route, GleasonFit, GleasonRoute};

/// Tolerance for axiom identities between values.
pub const AXIOM_TOL: f64 = 1e-9;
/// Tolerance for the representation and Gleason reconstructions.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;

/// A named rule assigning a value to games or branch sets.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueFunction {
    /// `Σ_x ⟨ψ|P_X(x)|ψ⟩ P(x)`.
    Born,
    /// Unweighted mean of branch payoffs.
    BranchCount,
    /// `Σ w_i^α P_i / Σ w_i^α` over branches.
    WeightPowerPerBranch(f64),
    /// A fixed probability per eigenvalue, blind to the state.
    UserTable(ProbabilityTable),
}

impl ValueFunction {
    pub fn name(&self) -> String {
        match self {
            ValueFunction::Born => "born".into(),
            ValueFunction::BranchCount => "branch-count".into(),
            ValueFunction::WeightPowerPerBranch(a) => format!("weight-power:{a}"),
            ValueFunction::UserTable(_) => "user-table".into(),
        }
    }
}

impl fmt::Display for ValueFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ValueFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "born" => Ok(ValueFunction::Born),
            "branch-count" => Ok(ValueFunction::BranchCount),
            _ => {
                let alpha = s
                    .strip_prefix("weight-power:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .filter(|a| a.is_finite())
                    .ok_or_else(|| Error::InvalidParams(format!("unknown value function `{s}`")))?;
                Ok(ValueFunction::WeightPowerPerBranch(alpha))
            }
        }
    }
}

/// Probability per eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityTable {
    entries: Vec<(f64, f64)>,
}

impl ProbabilityTable {
    /// Sorted by eigenvalue; every entry must lie in `[0, 1]` within `1e-9`.
    pub fn new<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Result<Self> {
        let mut entries: Vec<(f64, f64)> = pairs.into_iter().collect();
        for &(_, p) in &entries {
            if !p.is_finite() || !(-AXIOM_TOL..=1.0 + AXIOM_TOL).contains(&p) {
                return Err(Error::OutOfRange { what: "probability", value: p });
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn get(&self, x: f64) -> Option<f64> {
        self.entries.iter().find(|(y, _)| same_eigenvalue(x, *y)).map(|e| e.1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// `Σ_x Pr(x) P(x)`.
    pub fn expectation(&self, payoff: &PayoffFunction) -> Result<f64> {
        self.entries.iter().map(|&(x, p)| Ok(p * payoff.value_at(x)?)).sum()
    }
}

/// Born value `Σ_c c·W_G(c)`.
pub fn born_value(game: &Game) -> f64 {
    weight_map(game).expectation()
}

/// Expected utility `Σ_c W_G(c)·c`; the same number as [`born_value`].
pub fn expected_utility(game: &Game) -> f64 {
    expected_utility_of(&weight_map(game))
}

pub fn expected_utility_of(w: &WeightMap) -> f64 {
    w.expectation()
}

/// Value of a branch set.
pub fn evaluate(vf: &ValueFunction, b: &BranchSet) -> Result<f64> {
    if b.is_empty() {
        return Err(Error::EmptyBranchSet);
    }
    let branches = b.branches();
    Ok(match vf {
        ValueFunction::Born => branches.iter().map(|br| br.weight * br.payoff).sum(),
        ValueFunction::BranchCount => branches.iter().map(|br| br.payoff).sum::<f64>() / branches.len() as f64,
        ValueFunction::WeightPowerPerBranch(alpha) => {
            let (num, den) = branches.iter().fold((0.0, 0.0), |(n, d), br| {
                let w = br.weight.powf(*alpha);
                (n + w * br.payoff, d + w)
            });
            num / den
        }
        ValueFunction::UserTable(table) => {
            // Mean payoff among branches whose last readout shows x, weighted by the table.
            let mut groups: Vec<(f64, f64, usize)> = Vec::new();
            for br in branches {
                let x = br.path.last().map(|r| r.eigenvalue).unwrap_or(br.payoff);
                match groups.iter_mut().find(|g| same_eigenvalue(g.0, x)) {
                    Some(g) => {
                        g.1 += br.payoff;
                        g.2 += 1;
                    }
                    None => groups.push((x, br.payoff, 1)),
                }
            }
            groups.iter().map(|&(x, sum, n)| table.get(x).unwrap_or(0.0) * sum / n as f64).sum()
        }
    })
}

/// Value of a game: Born from its weight map, the others from the standard
/// instantiation.
pub fn value(vf: &ValueFunction, game: &Game) -> Result<f64> {
    match vf {
        ValueFunction::Born => Ok(born_value(game)),
        _ => value_with(vf, &MeasurementProcedure::standard(game.observable()), game.state(), game.payoff()),
    }
}

/// Value of the branch set `proc` produces on `psi` when paying `payoff`.
pub fn value_with(vf: &ValueFunction, proc: &MeasurementProcedure, psi: &StateVector, payoff: &PayoffFunction) -> Result<f64> {
    evaluate(vf, &run(proc, psi, payoff)?)
}

/// `Pr(x) = V(ψ, X, δ_x)`.
pub fn extract_probabilities(vf: &ValueFunction, psi: &StateVector, x: &HermitianOperator) -> Result<ProbabilityTable> {
    extract_probabilities_with(vf, &MeasurementProcedure::standard(x), psi)
}

/// `Pr(x)` from the δ-payoff values on a given instantiation.
pub fn extract_probabilities_with(vf: &ValueFunction, proc: &MeasurementProcedure, psi: &StateVector) -> Result<ProbabilityTable> {
    let eigs = proc.spectrum().eigenvalues();
    let mut pairs = Vec::with_capacity(eigs.len());
    for &x in eigs {
        let delta = PayoffFunction::indicator(eigs, x);
        let v = match vf {
            ValueFunction::Born => born_value(&Game::new(psi.clone(), proc.observable().clone(), delta)?),
            _ => value_with(vf, proc, psi, &delta)?,
        };
        pairs.push((x, v));
    }
    ProbabilityTable::new(pairs)
}

/// Outcome of an audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// No instance exercised the check, or its preconditions failed.
    Vacuous,
}

/// A concrete counterexample: branch sets and the values the audited value
/// function gave them.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub description: String,
    pub values: Vec<f64>,
    /// `(payoff, weight)` per branch, one list per branch set.
    pub branches: Vec<Vec<(f64, f64)>>,
    #[serde(skip)]
    pub branch_sets: Vec<BranchSet>,
    #[serde(skip)]
    pub games: Vec<Game>,
}

impl Witness {
    fn new(description: impl Into<String>, vf: &ValueFunction, branch_sets: Vec<BranchSet>, games: Vec<Game>) -> Result<Self> {
        let values = branch_sets.iter().map(|b| evaluate(vf, b)).collect::<Result<Vec<_>>>()?;
        let branches = branch_sets
            .iter()
            .map(|b| b.branches().iter().map(|br| (br.payoff, br.weight)).collect())
            .collect();
        Ok(Self { description: description.into(), values, branches, branch_sets, games })
    }

    /// Re-evaluates every branch set and returns the largest disagreement
    /// with the recorded values.
    pub fn recheck(&self, vf: &ValueFunction) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (b, &v) in self.branch_sets.iter().zip(&self.values) {
            worst = worst.max((evaluate(vf, b)? - v).abs());
        }
        Ok(worst)
    }
}

/// Verdict of one axiom or theorem check.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub axiom: String,
    pub value_function: String,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub max_violation: f64,
    pub instances_checked: usize,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Accumulates violations and keeps the first failing witness.
pub(crate) struct Tally {
    axiom: String,
    vf: ValueFunction,
    tol: f64,
    max_violation: f64,
    checked: usize,
    witness: Option<Witness>,
}

impl Tally {
    pub(crate) fn new(axiom: impl Into<String>, vf: &ValueFunction, tol: f64) -> Self {
        Self { axiom: axiom.into(), vf: vf.clone(), tol, max_violation: 0.0, checked: 0, witness: None }
    }

    /// Records one instance; the witness closure runs only for the first
    /// violation.
    pub(crate) fn record<F: FnOnce() -> Result<Witness>>(&mut self, violation: f64, witness: F) -> Result<()> {
        self.checked += 1;
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        self.max_violation = self.max_violation.max(violation);
        if violation > self.tol && self.witness.is_none() {
            self.witness = Some(witness()?);
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> AxiomReport {
        let verdict = if self.checked == 0 {
            Verdict::Vacuous
        } else if self.witness.is_some() {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        AxiomReport {
            axiom: self.axiom,
            value_function: self.vf.name(),
            verdict,
            witness: self.witness,
            max_violation: self.max_violation,
            instances_checked: self.checked,
        }
    }

    fn vacuous(self) -> AxiomReport {
        AxiomReport { verdict: Verdict::Vacuous, ..self.finish() }
    }
}

/// Checks `V(P) = Σ_x Pr(x) P(x)` and `Σ Pr = 1` on the standard instantiation.
pub fn check_representation(vf: &ValueFunction, psi: &StateVector, x: &HermitianOperator, payoffs: &[PayoffFunction]) -> Result<AxiomReport> {
    check_representation_with(vf, &MeasurementProcedure::standard(x), psi, payoffs)
}

/// Representation check with probabilities extracted on the standard
/// instantiation and values taken on `proc`.
///
/// Marked vacuous when Additivity or Dominance already fails on consecutive
/// corpus payoffs.
pub fn check_representation_with(
    vf: &ValueFunction,
    proc: &MeasurementProcedure,
    psi: &StateVector,
    payoffs: &[PayoffFunction],
) -> Result<AxiomReport> {
    let mut tally = Tally::new("representation", vf, RECONSTRUCTION_TOL);
    let v = |p: &PayoffFunction| -> Result<f64> {
        match vf {
            ValueFunction::Born => Ok(born_value(&Game::new(psi.clone(), proc.observable().clone(), p.clone())?)),
            _ => value_with(vf, proc, psi, p),
        }
    };
    for pair in payoffs.windows(2) {
        let sum = pair[0].add(&pair[1])?;
        if (v(&sum)? - v(&pair[0])? - v(&pair[1])?).abs() > AXIOM_TOL {
            return Ok(tally.vacuous());
        }
        let bumped = pair[0].add(&pair[1].map_values(|_, p| p.abs()))?;
        if v(&bumped)? < v(&pair[0])? - AXIOM_TOL {
            return Ok(tally.vacuous());
        }
    }

    let table = extract_probabilities(vf, psi, proc.observable())?;
    let total_gap = (table.total() - 1.0).abs();
    let standard = MeasurementProcedure::standard(proc.observable());
    tally.record(total_gap, || {
        let sets = table
            .entries()
            .iter()
            .map(|&(x, _)| run(&standard, psi, &PayoffFunction::indicator(proc.spectrum().eigenvalues(), x)))
            .collect::<Result<Vec<_>>>()?;
        witness(vf, format!("Σ Pr = {}", table.total()), sets, Vec::new())
    })?;
    for p in payoffs {
        let lhs = v(p)?;
        let rhs = table.expectation(p)?;
        tally.record((lhs - rhs).abs(), || {
            witness(
                vf,
                format!("V(P) = {lhs} but Σ Pr(x)P(x) = {rhs}"),
                vec![run(proc, psi, p)?, run(&standard, psi, p)?],
                Vec::new(),
            )
        })?;
    }
    Ok(tally.finish())
}

fn witness(vf: &ValueFunction, description: impl Into<String>, sets: Vec<BranchSet>, games: Vec<Game>) -> Result<Witness> {
    Witness::new(description, vf, sets, games)
}

/// Dyadic bracketing of `V(aP)` by `V((A/2^n)P)`, following the Linearity
/// lemma.
///
/// `P` is split as `P⁺ − P⁻` with both parts nonnegative; for each part and
/// each depth `n`, Additivity gives `V((A/2^n)Q) = (A/2^n)V(Q)` and Dominance
/// puts `V(aQ)` between the floor and ceiling brackets. Negative `a` is
/// reduced through Zero-sum. The final gap bound is
/// `2^-depth (V(P⁺) + V(P⁻)) + 1e-9`.
pub fn check_linearity_lemma(
    vf: &ValueFunction,
    psi: &StateVector,
    x: &HermitianOperator,
    payoff: &PayoffFunction,
    a: f64,
    depth: u32,
) -> Result<AxiomReport> {
    if depth == 0 {
        return Err(Error::OutOfRange { what: "depth", value: 0.0 });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("linearity scale"));
    }
    let game = |p: PayoffFunction| Game::new(psi.clone(), x.clone(), p);
    let v = |p: &PayoffFunction| value(vf, &game(p.clone())?);
    let standard = MeasurementProcedure::standard(x);
    let sets = |ps: &[&PayoffFunction]| ps.iter().map(|p| run(&standard, psi, p)).collect::<Result<Vec<_>>>();
    let mut tally = Tally::new("linearity", vf, AXIOM_TOL);

    let v_p = v(payoff)?;
    if a < 0.0 {
        let scaled = payoff.scaled(a);
        let mirrored = payoff.scaled(-a);
        let (va, vm) = (v(&scaled)?, v(&mirrored)?);
        tally.record((va + vm).abs(), || witness(vf, "V(aP) ≠ −V(−aP)", sets(&[&scaled, &mirrored])?, Vec::new()))?;
    }
    let a_abs = a.abs();
    let sign = a.signum();
    let positive = payoff.map_values(|_, p| p.max(0.0));
    let negative = payoff.map_values(|_, p| (-p).max(0.0));

    let v_pos = v(&positive)?;
    let v_neg = v(&negative)?;
    let mut scaled_parts = 0.0;
    for (part, part_sign) in [(&positive, 1.0), (&negative, -1.0)] {
        let v_part = v(part)?;
        let target = part.scaled(a_abs);
        let v_target = v(&target)?;
        for n in 1..=depth {
            let s = 2f64.powi(n as i32);
            let (lo, hi) = ((a_abs * s).floor() / s, (a_abs * s).ceil() / s);
            let (p_lo, p_hi) = (part.scaled(lo), part.scaled(hi));
            let (v_lo, v_hi) = (v(&p_lo)?, v(&p_hi)?);
            let additivity = (v_lo - lo * v_part).abs().max((v_hi - hi * v_part).abs());
            tally.record(additivity, || {
                witness(vf, format!("V(kQ/2^{n}) ≠ (k/2^{n})V(Q)"), sets(&[&p_lo, &p_hi, part])?, Vec::new())
            })?;
            let outside = (v_lo - v_target).max(v_target - v_hi).max(0.0);
            tally.record(outside, || {
                witness(vf, format!("V(aQ) outside the depth-{n} bracket"), sets(&[&p_lo, &target, &p_hi])?, Vec::new())
            })?;
        }
        scaled_parts += part_sign * v_target;
    }
    let v_a = v(&payoff.scaled(a_abs))?;
    tally.record((v_a - scaled_parts).abs(), || {
        witness(vf, "V(aP) ≠ V(aP⁺) − V(aP⁻)", sets(&[&payoff.scaled(a_abs), &positive, &negative])?, Vec::new())
    })?;
    let bound = 2f64.powi(-(depth as i32)) * (v_pos.abs() + v_neg.abs());
    let gap = (sign * v_a - a * v_p).abs();
    tally.record((gap - bound).max(0.0), || {
        let scaled = payoff.scaled(a);
        witness(vf, format!("|V(aP) − aV(P)| = {gap} exceeds the dyadic gap {bound}"), sets(&[&scaled, payoff])?, Vec::new())
    })?;
    Ok(tally.finish())
}

/// Checks `V(ψ,X,P) = Σ_x V(ψ, P_X(x), 1)·P(x)`, each projector game paying
/// its eigenvalue.
pub fn check_non_contextuality(vf: &ValueFunction, psi: &StateVector, x: &HermitianOperator, payoff: &PayoffFunction) -> Result<AxiomReport> {
    let game = Game::new(psi.clone(), x.clone(), payoff.clone())?;
    let lhs = value(vf, &game)?;
    let mut rhs = 0.0;
    let mut projector_games = Vec::new();
    for (xv, proj) in game.spectrum().iter() {
        let eigs = proj.spectral().eigenvalues().to_vec();
        let g = Game::new(psi.clone(), proj.clone(), PayoffFunction::identity(&eigs))?;
        rhs += value(vf, &g)? * payoff.value_at(xv)?;
        projector_games.push(g);
    }
    let mut tally = Tally::new("non-contextuality", vf, AXIOM_TOL);
    tally.record((lhs - rhs).abs(), || {
        let mut sets = vec![run(&MeasurementProcedure::standard(x), psi, payoff)?];
        for g in &projector_games {
            sets.push(run(&MeasurementProcedure::standard(g.observable()), psi, g.payoff())?);
        }
        let mut games = vec![game.clone()];
        games.extend(projector_games.iter().cloned());
        witness(vf, format!("V(ψ,X,P) = {lhs} but the projector decomposition gives {rhs}"), sets, games)
    })?;
    Ok(tally.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::measurement::{uniform_coefficients, Branch, Readout};
    use crate::random;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_level(a: f64) -> StateVector {
        StateVector::from_real(&[a.sqrt(), (1.0 - a).sqrt()]).unwrap()
    }

    #[test]
    fn born_examples() {
        let g = Game::with_identity_payoff(StateVector::uniform(2), HermitianOperator::diagonal(&[0.0, 1.0])).unwrap();
        assert!((born_value(&g) - 0.5).abs() < 1e-15);
        let g = Game::with_identity_payoff(StateVector::uniform(2), HermitianOperator::diagonal(&[-3.0, 7.0])).unwrap();
        assert!((born_value(&g) - 2.0).abs() < 1e-12);
        let g = Game::new(StateVector::uniform(2), HermitianOperator::diagonal(&[0.0, 1.0]), PayoffFunction::constant(&[0.0, 1.0], 4.5)).unwrap();
        assert!((born_value(&g) - 4.5).abs() < 1e-12);
        let g = Game::with_identity_payoff(two_level(0.25), HermitianOperator::diagonal(&[0.0, 1.0])).unwrap();
        assert!((born_value(&g) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn expected_utility_examples() {
        let w = WeightMap::from_pairs([(0.0, 0.5), (1.0, 0.5)]);
        assert!((expected_utility_of(&w) - 0.5).abs() < 1e-15);
        assert_eq!(expected_utility_of(&WeightMap::from_pairs([(3.0, 1.0)])), 3.0);
        let w = WeightMap::from_pairs([(0.0, 1.0 / 12.0), (2.0, 1.0 / 6.0), (5.0, 0.75)]);
        assert!((expected_utility_of(&w) - (1.0 / 3.0 + 15.0 / 4.0)).abs() < 1e-12);
        let g = Game::from_weight_map(&w).unwrap();
        assert!((expected_utility(&g) - born_value(&g)).abs() < 1e-15);
    }

    #[test]
    fn evaluate_examples() {
        let b = BranchSet::from_weights(&[(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        assert_eq!(evaluate(&ValueFunction::Born, &b).unwrap(), 0.0);
        let b = BranchSet::from_weights(&[(1.0, 0.1), (-1.0, 0.9)]).unwrap();
        assert_eq!(evaluate(&ValueFunction::BranchCount, &b).unwrap(), 0.0);
        let b = BranchSet::from_weights(&[(0.0, 0.25), (1.0, 0.75)]).unwrap();
        assert!((evaluate(&ValueFunction::WeightPowerPerBranch(2.0), &b).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn user_table_ignores_the_state() {
        let table = ProbabilityTable::new([(0.0, 0.2), (1.0, 0.8)]).unwrap();
        let vf = ValueFunction::UserTable(table);
        let x = HermitianOperator::diagonal(&[0.0, 1.0]);
        for a in [0.1, 0.5, 0.9] {
            let g = Game::with_identity_payoff(two_level(a), x.clone()).unwrap();
            assert!((value(&vf, &g).unwrap() - 0.8).abs() < 1e-12);
        }
        let b = BranchSet::new(vec![Branch {
            path: vec![Readout { eigenvalue: 0.0, alpha: 0 }],
            payoff: 1.0,
            amplitude: c(1.0, 0.0),
            weight: 1.0,
        }])
        .unwrap();
        assert!((evaluate(&vf, &b).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn value_function_names_round_trip() {
        for vf in [ValueFunction::Born, ValueFunction::BranchCount, ValueFunction::WeightPowerPerBranch(2.0)] {
            assert_eq!(vf.name().parse::<ValueFunction>().unwrap(), vf);
        }
        assert!("weight-power:x".parse::<ValueFunction>().is_err());
        assert!("gambler".parse::<ValueFunction>().is_err());
    }

    #[test]
    fn probability_table_validation() {
        assert!(ProbabilityTable::new([(0.0, 1.2)]).is_err());
        assert!(ProbabilityTable::new([(0.0, -0.1)]).is_err());
    }

    #[test]
    fn extraction_examples() {
        let t = extract_probabilities(&ValueFunction::Born, &StateVector::from_real(&[0.6, 0.8]).unwrap(), &HermitianOperator::diagonal(&[1.0, 2.0])).unwrap();
        assert!((t.get(1.0).unwrap() - 0.36).abs() < 1e-12);
        assert!((t.get(2.0).unwrap() - 0.64).abs() < 1e-12);

        let t = extract_probabilities(&ValueFunction::Born, &StateVector::basis(1, 0), &HermitianOperator::diagonal(&[5.0])).unwrap();
        assert_eq!(t.entries(), &[(5.0, 1.0)]);

        let t = extract_probabilities(&ValueFunction::Born, &StateVector::uniform(3), &HermitianOperator::diagonal(&[1.0, 1.0, 2.0])).unwrap();
        assert!((t.get(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((t.get(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn representation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = random::state(&mut rng, 4);
        let x = random::hermitian(&mut rng, 4);
        let eigs = x.spectral().eigenvalues().to_vec();
        let payoffs: Vec<_> = (0..50).map(|_| random::continuous_payoff(&mut rng, &eigs)).collect();
        let r = check_representation(&ValueFunction::Born, &psi, &x, &payoffs).unwrap();
        assert!(r.passed());
        assert!(r.max_violation < 1e-12);

        let constants: Vec<_> = (0..5).map(|k| PayoffFunction::constant(&eigs, k as f64)).collect();
        for vf in [ValueFunction::Born, ValueFunction::BranchCount, ValueFunction::WeightPowerPerBranch(3.0)] {
            assert!(check_representation(&vf, &psi, &x, &constants).unwrap().passed());
        }

        let x = HermitianOperator::diagonal(&[0.0, 1.0]);
        let proc = MeasurementProcedure::new(&x, &[(1.0, uniform_coefficients(5))]).unwrap();
        let payoffs = vec![PayoffFunction::identity(&[0.0, 1.0]), PayoffFunction::from_pairs([(0.0, 2.0), (1.0, -1.0)])];
        let r = check_representation_with(&ValueFunction::BranchCount, &proc, &StateVector::uniform(2), &payoffs).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.unwrap();
        assert!(w.recheck(&ValueFunction::BranchCount).unwrap() < 1e-15);
    }

    #[test]
    fn linearity_examples() {
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let x = HermitianOperator::diagonal(&[0.0, 1.0]);
        let p = PayoffFunction::from_pairs([(0.0, -2.0), (1.0, 3.0)]);
        let r = check_linearity_lemma(&ValueFunction::Born, &psi, &x, &p, 1.0, 1).unwrap();
        assert!(r.passed());
        assert_eq!(r.max_violation, 0.0);

        let r = check_linearity_lemma(&ValueFunction::Born, &psi, &x, &p, 1.0 / 3.0, 20).unwrap();
        assert!(r.passed());
        let g = Game::new(psi.clone(), x.clone(), p.scaled(1.0 / 3.0)).unwrap();
        let base = Game::new(psi.clone(), x.clone(), p.clone()).unwrap();
        assert!((born_value(&g) - born_value(&base) / 3.0).abs() < 1e-6);

        let r = check_linearity_lemma(&ValueFunction::Born, &psi, &x, &p, -2.0, 10).unwrap();
        assert!(r.passed());
        assert!(r.max_violation < 1e-9);

        assert!(check_linearity_lemma(&ValueFunction::Born, &psi, &x, &p, 0.5, 0).is_err());
    }

    #[test]
    fn non_contextuality_examples() {
        let x = HermitianOperator::diagonal(&[1.0, 1.0, 2.0]);
        let psi = StateVector::uniform(3);
        let r = check_non_contextuality(&ValueFunction::Born, &psi, &x, &PayoffFunction::identity(&[1.0, 2.0])).unwrap();
        assert!(r.passed());
        let g = Game::with_identity_payoff(psi, x).unwrap();
        assert!((born_value(&g) - 4.0 / 3.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random::rotated_diagonal(&mut rng, &[0.0, 1.0, 2.0]);
        let psi = random::state(&mut rng, 3);
        let vf = ValueFunction::WeightPowerPerBranch(2.0);
        let r = check_non_contextuality(&vf, &psi, &x, &PayoffFunction::identity(&[0.0, 1.0, 2.0])).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witness.unwrap().recheck(&vf).unwrap() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn born_is_expected_utility_and_device_blind(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random::game(&mut rng, 6);
            prop_assert_eq!(born_value(&g), expected_utility(&g));
            let mut proc = MeasurementProcedure::standard(g.observable());
            for &e in g.spectrum().eigenvalues() {
                proc = proc.with_coupling(e, uniform_coefficients(rng.gen_range(1..=4))).unwrap();
            }
            let v = value_with(&ValueFunction::Born, &proc, g.state(), g.payoff()).unwrap();
            prop_assert!((v - born_value(&g)).abs() < 1e-12);
        }

        #[test]
        fn born_extraction_matches_projectors(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random::game(&mut rng, 6);
            let t = extract_probabilities(&ValueFunction::Born, g.state(), g.observable()).unwrap();
            for (x, proj) in g.spectrum().iter() {
                prop_assert!((t.get(x).unwrap() - g.state().expectation(proj)).abs() < 1e-12);
            }
        }

        #[test]
        fn born_representation_is_exact(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.gen_range(1..=8);
            let x = if rng.gen_bool(0.5) { random::degenerate_observable(&mut rng, dim) } else { random::hermitian(&mut rng, dim) };
            let psi = random::state(&mut rng, dim);
            let eigs = x.spectral().eigenvalues().to_vec();
            let payoffs: Vec<_> = (0..100).map(|_| random::continuous_payoff(&mut rng, &eigs)).collect();
            let r = check_representation(&ValueFunction::Born, &psi, &x, &payoffs).unwrap();
            prop_assert!(r.passed());
            prop_assert!(r.max_violation < 1e-12);
        }
    }
}
