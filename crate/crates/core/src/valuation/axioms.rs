//! Corpus-based audits of the decision-theoretic axioms.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{evaluate, value, AxiomReport, Tally, ValueFunction, Verdict, Witness, AXIOM_TOL};
use crate::error::{Error, Result};
use crate::games::{canonicalize, equivalent, Game, PayoffFunction};
use crate::linalg::{c, HermitianOperator, StateVector, C64};
use crate::measurement::{compose, run, uniform_coefficients, BranchSet, Continuation, Followup, MeasurementProcedure};
use crate::random;
use crate::transforms::{payoff_equivalence, push_forward, splitting_isometry, SpectrumFunction};

/// The axioms a value function can be audited against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    Dominance,
    Substitutivity,
    WeakAdditivity,
    ZeroSum,
    Additivity,
    Physicality,
    MeasurementNeutrality,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [
        Axiom::Dominance,
        Axiom::Substitutivity,
        Axiom::WeakAdditivity,
        Axiom::ZeroSum,
        Axiom::Additivity,
        Axiom::Physicality,
        Axiom::MeasurementNeutrality,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Axiom::Dominance => "dominance",
            Axiom::Substitutivity => "substitutivity",
            Axiom::WeakAdditivity => "weak-additivity",
            Axiom::ZeroSum => "zero-sum",
            Axiom::Additivity => "additivity",
            Axiom::Physicality => "physicality",
            Axiom::MeasurementNeutrality => "measurement-neutrality",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownAxiom(s.to_string()))
    }
}

/// What a value function is expected to do on an axiom, when known.
///
/// Born (and weight power 1, which is Born on every branch set) satisfies
/// every axiom. Branch counting and other weight powers respect the payoff
/// axioms but see branch structure, so they break Substitutivity,
/// Physicality and Measurement neutrality.
pub fn expected_verdict(vf: &ValueFunction, axiom: Axiom) -> Option<Verdict> {
    let born_like = match vf {
        ValueFunction::Born => true,
        ValueFunction::WeightPowerPerBranch(a) => (*a - 1.0).abs() < 1e-12,
        ValueFunction::BranchCount => false,
        ValueFunction::UserTable(_) => return None,
    };
    let structural = matches!(axiom, Axiom::Substitutivity | Axiom::Physicality | Axiom::MeasurementNeutrality);
    Some(if born_like || !structural { Verdict::Pass } else { Verdict::Fail })
}

/// One audit instance.
#[derive(Debug, Clone)]
pub enum CorpusItem {
    Game(Game),
    /// Two devices on `(|up⟩ + |down⟩)/√2` paying ±1, the second with the
    /// given number of readouts on spin-up.
    DevicePair(usize),
    /// `(1/2)|0⟩ + (√3/2)|1⟩` against its 4-dimensional equal-weight split.
    Stage3Split,
}

/// Audit instances; named constructions are checked before random games.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    items: Vec<CorpusItem>,
}

impl Corpus {
    pub fn new(items: Vec<CorpusItem>) -> Self {
        Self { items }
    }

    /// `n` random games of dimension at most `max_dim`.
    pub fn random(seed: u64, n: usize, max_dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { items: (0..n).map(|_| CorpusItem::Game(random::game(&mut rng, max_dim))).collect() }
    }

    pub fn push(&mut self, item: CorpusItem) {
        self.items.push(item);
    }

    pub fn items(&self) -> &[CorpusItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn ordered(&self) -> Vec<&CorpusItem> {
        let demos = self.items.iter().filter(|i| !matches!(i, CorpusItem::Game(_)));
        let games = self.items.iter().filter(|i| matches!(i, CorpusItem::Game(_)));
        demos.chain(games).collect()
    }
}

fn item_rng(seed: u64, axiom: Axiom, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(axiom as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Result of one instance: its violation and, when over tolerance, a witness.
type Outcome = Option<(f64, Option<Witness>)>;

/// Audits `vf` against `axiom` on every applicable corpus item.
///
/// Items are checked in parallel and merged in corpus order, so the first
/// witness and the report are independent of scheduling.
pub fn check_axiom(vf: &ValueFunction, axiom: Axiom, corpus: &Corpus, seed: u64) -> Result<AxiomReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let items = corpus.ordered();
    let outcomes: Vec<Result<Outcome>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| check_item(vf, axiom, item, &mut item_rng(seed, axiom, i)))
        .collect();
    let mut tally = Tally::new(axiom.id(), vf, AXIOM_TOL);
    for outcome in outcomes {
        if let Some((violation, witness)) = outcome? {
            tally.record(violation, || Ok(witness.expect("witness built for every violation")))?;
        }
    }
    Ok(tally.finish())
}

fn outcome(vf: &ValueFunction, violation: f64, description: String, sets: Vec<BranchSet>, games: Vec<Game>) -> Result<Outcome> {
    let witness = if violation > AXIOM_TOL || violation.is_nan() {
        Some(Witness::new(description, vf, sets, games)?)
    } else {
        None
    };
    Ok(Some((violation, witness)))
}

fn standard_run(game: &Game) -> Result<BranchSet> {
    run(&MeasurementProcedure::standard(game.observable()), game.state(), game.payoff())
}

fn check_item(vf: &ValueFunction, axiom: Axiom, item: &CorpusItem, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    match item {
        CorpusItem::DevicePair(m) => {
            if axiom != Axiom::MeasurementNeutrality {
                return Ok(None);
            }
            let (game, device_a, device_b) = device_pair(*m)?;
            let a = run(&device_a, game.state(), game.payoff())?;
            let b = run(&device_b, game.state(), game.payoff())?;
            let (va, vb) = (evaluate(vf, &a)?, evaluate(vf, &b)?);
            outcome(vf, (va - vb).abs(), format!("device with {m} spin-up readouts changes the value"), vec![a, b], vec![game])
        }
        CorpusItem::Stage3Split => {
            if axiom != Axiom::Physicality {
                return Ok(None);
            }
            let (g, split) = stage3_split_pair()?;
            let (a, b) = (standard_run(&g)?, standard_run(&split)?);
            let (va, vb) = (evaluate(vf, &a)?, evaluate(vf, &b)?);
            outcome(vf, (va - vb).abs(), "splitting isometry (1,3) changes the value".into(), vec![a, b], vec![g, split])
        }
        CorpusItem::Game(g) => check_game(vf, axiom, g, rng),
    }
}

/// The device-pair game with its two measuring devices.
pub(crate) fn device_pair(multiplicity: usize) -> Result<(Game, MeasurementProcedure, MeasurementProcedure)> {
    if multiplicity == 0 {
        return Err(Error::InvalidParams("device multiplicity must be at least 1".into()));
    }
    let x = HermitianOperator::diagonal(&[1.0, -1.0]);
    let game = Game::with_identity_payoff(StateVector::uniform(2), x.clone())?;
    let a = MeasurementProcedure::standard(&x);
    let b = MeasurementProcedure::new(&x, &[(1.0, uniform_coefficients(multiplicity))])?;
    Ok((game, a, b))
}

/// `⟨(1/2, √3/2), diag(0,1), 1⟩` and the equal-weight game it splits into.
pub(crate) fn stage3_split_pair() -> Result<(Game, Game)> {
    let x = HermitianOperator::diagonal(&[0.0, 1.0]);
    let g = Game::with_identity_payoff(StateVector::from_real(&[0.5, 0.75f64.sqrt()])?, x)?;
    let v = splitting_isometry(1, 3)?;
    let y = HermitianOperator::diagonal(&[0.0, 1.0, 2.0, 3.0]);
    let payoff = PayoffFunction::from_pairs([(0.0, 0.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]);
    let split = Game::new(g.state().map(&v)?, y, payoff)?;
    if !equivalent(&g, &split) {
        return Err(Error::StageConstruction("split game is not equivalent to the original".into()));
    }
    Ok((g, split))
}

fn random_coefficients(rng: &mut ChaCha8Rng, m: usize) -> Vec<C64> {
    let raw: Vec<C64> = (0..m).map(|_| c(rng.gen_range(0.1..1.0), 0.0) * C64::from_polar(1.0, rng.gen_range(0.0..6.3))).collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|z| z / norm).collect()
}

fn check_game(vf: &ValueFunction, axiom: Axiom, g: &Game, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let eigs = g.spectrum().eigenvalues().to_vec();
    let with = |p: PayoffFunction| g.with_payoff(p);
    match axiom {
        Axiom::Dominance => {
            let bump = PayoffFunction::from_pairs(eigs.iter().map(|&x| (x, if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) })));
            let bigger = with(g.payoff().add(&bump)?)?;
            let (a, b) = (standard_run(g)?, standard_run(&bigger)?);
            let (va, vb) = (value(vf, g)?, value(vf, &bigger)?);
            outcome(vf, (va - vb).max(0.0), "a pointwise larger payoff has a smaller value".into(), vec![a, b], vec![g.clone(), bigger])
        }
        Axiom::WeakAdditivity => {
            let k = rng.gen_range(-5.0..5.0);
            let shifted = with(g.payoff().shifted(k))?;
            let (va, vb) = (value(vf, g)?, value(vf, &shifted)?);
            outcome(vf, (vb - va - k).abs(), format!("V(P + {k}) ≠ V(P) + {k}"), vec![standard_run(g)?, standard_run(&shifted)?], vec![g.clone(), shifted])
        }
        Axiom::ZeroSum => {
            let neg = with(g.payoff().negated())?;
            let (va, vb) = (value(vf, g)?, value(vf, &neg)?);
            outcome(vf, (va + vb).abs(), "V(−P) ≠ −V(P)".into(), vec![standard_run(g)?, standard_run(&neg)?], vec![g.clone(), neg])
        }
        Axiom::Additivity => {
            let other = with(random::continuous_payoff(rng, &eigs))?;
            let sum = with(g.payoff().add(other.payoff())?)?;
            let (va, vb, vs) = (value(vf, g)?, value(vf, &other)?, value(vf, &sum)?);
            outcome(
                vf,
                (vs - va - vb).abs(),
                "V(P + P′) ≠ V(P) + V(P′)".into(),
                vec![standard_run(g)?, standard_run(&other)?, standard_run(&sum)?],
                vec![g.clone(), other, sum],
            )
        }
        Axiom::Substitutivity => substitutivity(vf, g, rng),
        Axiom::Physicality => {
            let partner = match rng.gen_range(0..3) {
                0 => {
                    let extra = rng.gen_range(0..=2);
                    let u = random::isometry(rng, g.dim(), g.dim() + extra);
                    let top = eigs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    push_forward(g, &u, top + 1.0 + rng.gen_range(0.0..1.0), rng.gen_range(-3.0..3.0))?
                }
                1 => {
                    let f = SpectrumFunction::from_fn(&eigs, |x| g.payoff_at(x));
                    payoff_equivalence(g, &f)?
                }
                _ => canonicalize(g)?,
            };
            if !equivalent(g, &partner) {
                return Err(Error::StageConstruction("physicality partner is not equivalent".into()));
            }
            let (a, b) = (standard_run(g)?, standard_run(&partner)?);
            let (va, vb) = (evaluate(vf, &a)?, evaluate(vf, &b)?);
            outcome(vf, (va - vb).abs(), "equivalent games get different values".into(), vec![a, b], vec![g.clone(), partner])
        }
        Axiom::MeasurementNeutrality => {
            let mut proc = MeasurementProcedure::standard(g.observable());
            for &x in &eigs {
                let m = rng.gen_range(1..=4);
                proc = proc.with_coupling(x, random_coefficients(rng, m))?;
            }
            let a = standard_run(g)?;
            let b = run(&proc, g.state(), g.payoff())?;
            let (va, vb) = (evaluate(vf, &a)?, evaluate(vf, &b)?);
            outcome(vf, (va - vb).abs(), "two devices instantiating one game get different values".into(), vec![a, b], vec![g.clone()])
        }
    }
}

/// Replaces some payoffs by games, then compares the value of the composite
/// process with the value of the game paying each subgame's value.
fn substitutivity(vf: &ValueFunction, g: &Game, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let eigs = g.spectrum().eigenvalues().to_vec();
    let forced = rng.gen_range(0..eigs.len());
    let mut conts = Vec::with_capacity(eigs.len());
    let mut substituted = Vec::with_capacity(eigs.len());
    for (k, &x) in eigs.iter().enumerate() {
        if k == forced || rng.gen_bool(0.5) {
            let sub = random::game(rng, 3);
            let v = value(vf, &sub)?;
            let follow = Followup::paying(MeasurementProcedure::standard(sub.observable()), sub.payoff());
            conts.push((x, Continuation::Prepare(sub.state().clone(), Box::new(follow))));
            substituted.push((x, v));
        } else {
            let p = g.payoff_at(x);
            conts.push((x, Continuation::Cash(p)));
            substituted.push((x, p));
        }
    }
    let composite = compose(&MeasurementProcedure::standard(g.observable()), g.state(), &conts)?;
    let flat = g.with_payoff(PayoffFunction::from_pairs(substituted))?;
    let flat_run = standard_run(&flat)?;
    let (va, vb) = (evaluate(vf, &composite)?, evaluate(vf, &flat_run)?);
    outcome(vf, (va - vb).abs(), "substituting subgames by their values changes the value".into(), vec![composite, flat_run], vec![g.clone(), flat])
}

/// Reports for every axiom, in canonical order.
pub fn audit_all(vf: &ValueFunction, corpus: &Corpus, seed: u64) -> Result<Vec<AxiomReport>> {
    Axiom::ALL.iter().map(|&a| check_axiom(vf, a, corpus, seed)).collect()
}

/// True when every non-vacuous report agrees with [`expected_verdict`].
pub fn matches_expected_profile(vf: &ValueFunction, reports: &[AxiomReport]) -> bool {
    reports.iter().all(|r| {
        let Ok(axiom) = r.axiom.parse::<Axiom>() else { return false };
        match (r.verdict, expected_verdict(vf, axiom)) {
            (Verdict::Vacuous, _) | (_, None) => true,
            (v, Some(e)) => v == e,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_corpus() -> Corpus {
        Corpus::new(vec![CorpusItem::DevicePair(1000), CorpusItem::Stage3Split])
    }

    #[test]
    fn axiom_ids_parse() {
        for a in Axiom::ALL {
            assert_eq!(a.id().parse::<Axiom>().unwrap(), a);
        }
        assert!(matches!("continuity".parse::<Axiom>(), Err(Error::UnknownAxiom(_))));
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let err = check_axiom(&ValueFunction::Born, Axiom::Dominance, &Corpus::default(), 0).unwrap_err();
        assert_eq!(err, Error::EmptyCorpus);
    }

    #[test]
    fn born_passes_all_axioms() {
        let mut corpus = Corpus::random(42, 200, 6);
        corpus.push(CorpusItem::DevicePair(1000));
        corpus.push(CorpusItem::Stage3Split);
        for r in audit_all(&ValueFunction::Born, &corpus, 42).unwrap() {
            assert_eq!(r.verdict, Verdict::Pass, "{}", r.axiom);
            assert!(r.max_violation < 1e-9, "{} {}", r.axiom, r.max_violation);
        }
    }

    #[test]
    fn branch_count_fails_neutrality_on_the_device_pair() {
        let vf = ValueFunction::BranchCount;
        let r = check_axiom(&vf, Axiom::MeasurementNeutrality, &demo_corpus(), 0).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.unwrap();
        assert!(w.values[0].abs() < 1e-15);
        assert!((w.values[1] - 999.0 / 1001.0).abs() < 1e-12);
        assert!(w.recheck(&vf).unwrap() < 1e-15);
    }

    #[test]
    fn weight_power_fails_physicality_on_the_split() {
        let vf = ValueFunction::WeightPowerPerBranch(2.0);
        let r = check_axiom(&vf, Axiom::Physicality, &demo_corpus(), 0).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.unwrap();
        assert!((w.values[0] - 0.9).abs() < 1e-12);
        assert!((w.values[1] - 0.75).abs() < 1e-12);
        assert!(equivalent(&w.games[0], &w.games[1]));
    }

    #[test]
    fn demos_only_exercise_their_axiom() {
        let r = check_axiom(&ValueFunction::BranchCount, Axiom::Dominance, &demo_corpus(), 0).unwrap();
        assert_eq!(r.verdict, Verdict::Vacuous);
        assert_eq!(r.instances_checked, 0);
    }

    #[test]
    fn non_born_profiles_on_random_corpus() {
        let corpus = Corpus::random(7, 120, 5);
        for vf in [ValueFunction::BranchCount, ValueFunction::WeightPowerPerBranch(2.0), ValueFunction::WeightPowerPerBranch(1.0)] {
            let reports = audit_all(&vf, &corpus, 7).unwrap();
            assert!(matches_expected_profile(&vf, &reports), "{vf}: {reports:#?}");
            for r in &reports {
                assert_ne!(r.verdict, Verdict::Vacuous);
                if let Some(w) = &r.witness {
                    assert!(w.recheck(&vf).unwrap() < 1e-12);
                }
                if r.axiom == "physicality" {
                    if let Some(w) = &r.witness {
                        assert!(equivalent(&w.games[0], &w.games[1]));
                    }
                }
            }
        }
    }

    #[test]
    fn audits_are_deterministic() {
        let corpus = Corpus::random(3, 40, 4);
        let a = check_axiom(&ValueFunction::BranchCount, Axiom::Substitutivity, &corpus, 9).unwrap();
        let b = check_axiom(&ValueFunction::BranchCount, Axiom::Substitutivity, &corpus, 9).unwrap();
        assert_eq!(a.max_violation, b.max_violation);
        assert_eq!(a.witness.map(|w| w.values), b.witness.map(|w| w.values));
    }
}
