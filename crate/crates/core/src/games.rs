//! Games and their weight maps.
//!
//! A game is the triple `⟨ψ, X, P⟩`: a state, the observable measured on it and
//! the cash payoff attached to each eigenvalue. Its weight map sends each
//! distinct payoff to the total branch weight paying it, and two games are
//! equivalent exactly when their weight maps agree.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{c, HermitianOperator, SpectralDecomposition, StateVector};

/// Absolute tolerance under which two payoff values are the same payoff.
pub const PAYOFF_TOL: f64 = 1e-9;
/// Absolute tolerance on weight comparisons.
pub const WEIGHT_TOL: f64 = 1e-9;
/// Weights at or below this are treated as zero and dropped.
pub const ZERO_WEIGHT: f64 = 1e-12;

/// True when two eigenvalues denote the same spectral point.
pub fn same_eigenvalue(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Cash payoff per eigenvalue, kept sorted by eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffFunction {
    entries: Vec<(f64, f64)>,
}

impl PayoffFunction {
    /// Builds from `(eigenvalue, value)` pairs; the first value wins on
    /// repeated eigenvalues.
    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        let mut entries: Vec<(f64, f64)> = Vec::new();
        for (x, v) in pairs {
            if !entries.iter().any(|&(y, _)| same_eigenvalue(x, y)) {
                entries.push((x, v));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { entries }
    }

    /// The identity payoff `1_X` on the given spectrum.
    pub fn identity(eigenvalues: &[f64]) -> Self {
        Self::from_pairs(eigenvalues.iter().map(|&x| (x, x)))
    }

    pub fn constant(eigenvalues: &[f64], value: f64) -> Self {
        Self::from_pairs(eigenvalues.iter().map(|&x| (x, value)))
    }

    /// `δ_x`: pays 1 on `x` and 0 elsewhere.
    pub fn indicator(eigenvalues: &[f64], x: f64) -> Self {
        Self::from_pairs(eigenvalues.iter().map(|&y| (y, if same_eigenvalue(x, y) { 1.0 } else { 0.0 })))
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn get(&self, x: f64) -> Option<f64> {
        self.entries.iter().find(|&&(y, _)| same_eigenvalue(x, y)).map(|&(_, v)| v)
    }

    pub fn value_at(&self, x: f64) -> Result<f64> {
        self.get(x).ok_or(Error::PayoffUndefined { eigenvalue: x })
    }

    /// Errors unless every eigenvalue has a payoff.
    pub fn check_covers(&self, eigenvalues: &[f64]) -> Result<()> {
        for &x in eigenvalues {
            self.value_at(x)?;
        }
        Ok(())
    }

    /// `x ↦ g(x, P(x))`.
    pub fn map_values<F: Fn(f64, f64) -> f64>(&self, g: F) -> Self {
        Self { entries: self.entries.iter().map(|&(x, v)| (x, g(x, v))).collect() }
    }

    /// `P + k`.
    pub fn shifted(&self, k: f64) -> Self {
        self.map_values(|_, v| v + k)
    }

    /// `a·P`.
    pub fn scaled(&self, a: f64) -> Self {
        self.map_values(|_, v| a * v)
    }

    /// `-P`.
    pub fn negated(&self) -> Self {
        self.map_values(|_, v| -v)
    }

    /// Pointwise sum on the domain of `self`.
    pub fn add(&self, other: &PayoffFunction) -> Result<Self> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for &(x, v) in &self.entries {
            entries.push((x, v + other.value_at(x)?));
        }
        Ok(Self { entries })
    }

    /// Restriction to the listed eigenvalues.
    pub fn restricted(&self, eigenvalues: &[f64]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(eigenvalues.len());
        for &x in eigenvalues {
            pairs.push((x, self.value_at(x)?));
        }
        Ok(Self::from_pairs(pairs))
    }
}

/// Total branch weight per distinct payoff value, ascending in payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    entries: Vec<(f64, f64)>,
}

impl WeightMap {
    /// Aggregates `(payoff, weight)` pairs: payoffs within [`PAYOFF_TOL`] of
    /// each other merge onto the smallest one, weights at or below
    /// [`ZERO_WEIGHT`] are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        let mut raw: Vec<(f64, f64)> = pairs.into_iter().collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        let mut last_key = f64::NEG_INFINITY;
        for (p, w) in raw {
            match merged.last_mut() {
                Some(entry) if p - last_key <= PAYOFF_TOL => entry.1 += w,
                _ => merged.push((p, w)),
            }
            last_key = p;
        }
        merged.retain(|&(_, w)| w > ZERO_WEIGHT);
        Self { entries: merged }
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    /// Weight of payoff `c`, zero when absent.
    pub fn weight_of(&self, payoff: f64) -> f64 {
        self.entries
            .iter()
            .find(|&&(p, _)| (p - payoff).abs() <= PAYOFF_TOL)
            .map_or(0.0, |&(_, w)| w)
    }

    /// `Σ_c c·W(c)`.
    pub fn expectation(&self) -> f64 {
        self.entries.iter().map(|&(p, w)| p * w).sum()
    }

    /// Largest weight difference over the union of keys, with keys matched
    /// within `payoff_tol` and absent keys weighing zero.
    pub fn max_difference(&self, other: &WeightMap, payoff_tol: f64) -> f64 {
        let lookup = |m: &WeightMap, p: f64| {
            m.entries.iter().find(|&&(q, _)| (q - p).abs() <= payoff_tol).map_or(0.0, |&(_, w)| w)
        };
        self.entries
            .iter()
            .map(|&(p, w)| (w - lookup(other, p)).abs())
            .chain(other.entries.iter().map(|&(p, w)| (w - lookup(self, p)).abs()))
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &WeightMap, payoff_tol: f64, weight_tol: f64) -> bool {
        self.max_difference(other, payoff_tol) <= weight_tol
    }
}

impl fmt::Display for WeightMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (p, w)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}: {w}")?;
        }
        write!(f, "}}")
    }
}

/// The triple `⟨ψ, X, P⟩`.
#[derive(Debug, Clone)]
pub struct Game {
    state: StateVector,
    observable: HermitianOperator,
    payoff: PayoffFunction,
    spectrum: SpectralDecomposition,
}

impl Game {
    pub fn new(state: StateVector, observable: HermitianOperator, payoff: PayoffFunction) -> Result<Self> {
        if state.dim() != observable.dim() {
            return Err(Error::DimMismatch { expected: observable.dim(), found: state.dim() });
        }
        let spectrum = observable.spectral();
        payoff.check_covers(spectrum.eigenvalues())?;
        Ok(Self { state, observable, payoff, spectrum })
    }

    /// `⟨ψ, X, 1_X⟩`.
    pub fn with_identity_payoff(state: StateVector, observable: HermitianOperator) -> Result<Self> {
        let spectrum = observable.spectral();
        let payoff = PayoffFunction::identity(spectrum.eigenvalues());
        Self::new(state, observable, payoff)
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn observable(&self) -> &HermitianOperator {
        &self.observable
    }

    pub fn payoff(&self) -> &PayoffFunction {
        &self.payoff
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    /// Same state and observable, new payoff.
    pub fn with_payoff(&self, payoff: PayoffFunction) -> Result<Self> {
        payoff.check_covers(self.spectrum.eigenvalues())?;
        Ok(Self { payoff, ..self.clone() })
    }

    /// `(x, ⟨ψ|P_X(x)|ψ⟩)` for every eigenvalue, ascending.
    pub fn outcome_weights(&self) -> Vec<(f64, f64)> {
        self.spectrum.iter().map(|(x, p)| (x, self.state.expectation(p))).collect()
    }

    /// Payoff value for eigenvalue `x` (which must be in the spectrum).
    pub fn payoff_at(&self, x: f64) -> f64 {
        self.payoff.get(x).expect("payoff covers the spectrum")
    }

    /// The canonical game with the given weight map: `K = diag(1..n)`,
    /// `ψ₀ = Σ √w_i |κ_i⟩`, `P₀(i) = c_i`. Weights are renormalized.
    pub fn from_weight_map(w: &WeightMap) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::DegenerateGame);
        }
        let total = w.total();
        let amps = w.entries().iter().map(|&(_, wi)| c((wi / total).sqrt(), 0.0)).collect();
        let labels: Vec<f64> = (1..=w.len()).map(|i| i as f64).collect();
        let payoff = PayoffFunction::from_pairs(labels.iter().copied().zip(w.entries().iter().map(|&(p, _)| p)));
        Game::new(StateVector::new(amps)?, HermitianOperator::diagonal(&labels), payoff)
    }
}

/// `W_G(c) = Σ_{x: P(x)=c} ⟨ψ|P_X(x)|ψ⟩`.
pub fn weight_map(game: &Game) -> WeightMap {
    WeightMap::from_pairs(game.outcome_weights().into_iter().map(|(x, w)| (game.payoff_at(x), w)))
}

/// Game equivalence: equal weight maps.
pub fn equivalent(a: &Game, b: &Game) -> bool {
    equivalent_with_tol(a, b, WEIGHT_TOL)
}

pub fn equivalent_with_tol(a: &Game, b: &Game, weight_tol: f64) -> bool {
    weight_map(a).approx_eq(&weight_map(b), PAYOFF_TOL, weight_tol)
}

/// The canonical representative of `game`'s equivalence class: one
/// dimension per distinct nonzero-weight payoff, payoffs ascending, real
/// non-negative amplitudes.
pub fn canonicalize(game: &Game) -> Result<Game> {
    Game::from_weight_map(&weight_map(game))
}

/// Payoff of a compound game outcome: cash, or a further game.
#[derive(Debug, Clone)]
pub enum CompoundPayoff {
    Cash(f64),
    Game(Box<CompoundGame>),
}

/// A game whose payoffs may themselves be games.
#[derive(Debug, Clone)]
pub struct CompoundGame {
    state: StateVector,
    observable: HermitianOperator,
    payoff: Vec<(f64, CompoundPayoff)>,
    spectrum: SpectralDecomposition,
}

impl CompoundGame {
    pub fn new(state: StateVector, observable: HermitianOperator, payoff: Vec<(f64, CompoundPayoff)>) -> Result<Self> {
        if state.dim() != observable.dim() {
            return Err(Error::DimMismatch { expected: observable.dim(), found: state.dim() });
        }
        let spectrum = observable.spectral();
        for &x in spectrum.eigenvalues() {
            if !payoff.iter().any(|(y, _)| same_eigenvalue(x, *y)) {
                return Err(Error::PayoffUndefined { eigenvalue: x });
            }
        }
        Ok(Self { state, observable, payoff, spectrum })
    }

    /// A rank-0 compound game with the same payoffs as `game`.
    pub fn from_game(game: &Game) -> Self {
        let payoff = game.payoff().entries().iter().map(|&(x, v)| (x, CompoundPayoff::Cash(v))).collect();
        Self {
            state: game.state().clone(),
            observable: game.observable().clone(),
            payoff,
            spectrum: game.spectrum().clone(),
        }
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn observable(&self) -> &HermitianOperator {
        &self.observable
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn payoff(&self) -> &[(f64, CompoundPayoff)] {
        &self.payoff
    }

    pub fn payoff_at(&self, x: f64) -> &CompoundPayoff {
        &self.payoff.iter().find(|(y, _)| same_eigenvalue(x, *y)).expect("payoff covers the spectrum").1
    }

    /// 0 when every payoff is cash, else one more than the deepest subgame.
    pub fn rank(&self) -> usize {
        self.payoff
            .iter()
            .map(|(_, p)| match p {
                CompoundPayoff::Cash(_) => 0,
                CompoundPayoff::Game(g) => g.rank() + 1,
            })
            .max()
            .unwrap_or(0)
    }

    /// The simple game over the outer payoffs, available at rank 0.
    pub fn as_simple(&self) -> Option<Game> {
        let mut pairs = Vec::with_capacity(self.payoff.len());
        for (x, p) in &self.payoff {
            match p {
                CompoundPayoff::Cash(v) => pairs.push((*x, *v)),
                CompoundPayoff::Game(_) => return None,
            }
        }
        Game::new(self.state.clone(), self.observable.clone(), PayoffFunction::from_pairs(pairs)).ok()
    }

    /// Outcome weights `⟨ψ|P_X(x)|ψ⟩` paired with the payoff at `x`.
    pub fn outcomes(&self) -> impl Iterator<Item = (f64, &CompoundPayoff)> + '_ {
        self.spectrum.iter().map(move |(x, p)| (self.state.expectation(p), self.payoff_at(x)))
    }

    fn accumulate(&self, scale: f64, out: &mut Vec<(f64, f64)>) {
        for (w, p) in self.outcomes() {
            let w = scale * w;
            match p {
                CompoundPayoff::Cash(v) => out.push((*v, w)),
                CompoundPayoff::Game(g) => g.accumulate(w, out),
            }
        }
    }

    /// Terminal cash distribution: each leaf weighted by the product of the
    /// branch weights along its path.
    pub fn weight_map(&self) -> WeightMap {
        let mut pairs = Vec::new();
        self.accumulate(1.0, &mut pairs);
        WeightMap::from_pairs(pairs)
    }
}

/// Collapses a compound game to a simple game with the same terminal cash
/// distribution. Rank-0 games come back unchanged; deeper ones come back in
/// canonical form.
pub fn flatten(compound: &CompoundGame) -> Result<Game> {
    match compound.as_simple() {
        Some(g) => Ok(g),
        None => Game::from_weight_map(&compound.weight_map()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn id_game(amps: &[f64], eigs: &[f64]) -> Game {
        Game::with_identity_payoff(StateVector::from_real(amps).unwrap(), HermitianOperator::diagonal(eigs)).unwrap()
    }

    fn assert_map(w: &WeightMap, expected: &[(f64, f64)]) {
        assert_eq!(w.len(), expected.len(), "{w}");
        for (&(p, q), &(ep, eq)) in w.entries().iter().zip(expected) {
            assert!((p - ep).abs() < 1e-12 && (q - eq).abs() < 1e-12, "{w} vs {expected:?}");
        }
    }

    #[test]
    fn weight_map_examples() {
        assert_map(&weight_map(&id_game(&[0.6, 0.8], &[1.0, 2.0])), &[(1.0, 0.36), (2.0, 0.64)]);

        let s = 1.0 / 3f64.sqrt();
        assert_map(&weight_map(&id_game(&[s, s, s], &[1.0, 1.0, 2.0])), &[(1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)]);

        let g = id_game(&[0.6, 0.8], &[1.0, 2.0]);
        let g = g.with_payoff(PayoffFunction::constant(&[1.0, 2.0], 4.5)).unwrap();
        assert_map(&weight_map(&g), &[(4.5, 1.0)]);
    }

    #[test]
    fn equivalence_examples() {
        let g = id_game(&[0.6, 0.8], &[1.0, 2.0]);
        assert!(equivalent(&g, &canonicalize(&g).unwrap()));
        let shifted = g.with_payoff(g.payoff().shifted(1.0)).unwrap();
        assert!(!equivalent(&g, &shifted));

        let h = 1.0 / 2f64.sqrt();
        let a = id_game(&[h, h], &[0.0, 1.0]);
        let b = id_game(&[0.5, 0.5, 0.5, 0.5], &[0.0, 0.0, 1.0, 1.0]);
        assert!(equivalent(&a, &b));
        assert_map(&weight_map(&b), &[(0.0, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn canonical_form_examples() {
        let s = 1.0 / 3f64.sqrt();
        let k = canonicalize(&id_game(&[s, s, s], &[1.0, 1.0, 2.0])).unwrap();
        assert_eq!(k.dim(), 2);
        assert!(k.observable().max_deviation(&HermitianOperator::diagonal(&[1.0, 2.0])) < 1e-15);
        assert!((k.state().amp(0).re - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((k.state().amp(1).re - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(k.payoff().entries(), &[(1.0, 1.0), (2.0, 2.0)]);

        let again = canonicalize(&k).unwrap();
        assert_eq!(again.payoff(), k.payoff());
        assert!(again.state().max_deviation(k.state()) < 1e-12);

        let h = 1.0 / 2f64.sqrt();
        let seven = id_game(&[h, h], &[0.0, 1.0]);
        let seven = seven.with_payoff(PayoffFunction::constant(&[0.0, 1.0], 7.0)).unwrap();
        let k = canonicalize(&seven).unwrap();
        assert_eq!(k.dim(), 1);
        assert_eq!(k.payoff().entries(), &[(1.0, 7.0)]);
        assert!((k.state().amp(0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonicalize_rejects_empty_map() {
        assert_eq!(Game::from_weight_map(&WeightMap::from_pairs([])).unwrap_err(), Error::DegenerateGame);
    }

    #[test]
    fn game_requires_total_payoff() {
        let err = Game::new(
            StateVector::from_real(&[1.0, 0.0]).unwrap(),
            HermitianOperator::diagonal(&[0.0, 1.0]),
            PayoffFunction::from_pairs([(0.0, 1.0)]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::PayoffUndefined { eigenvalue } if eigenvalue == 1.0));
    }

    fn two_way(w0: f64, p0: CompoundPayoff, p1: CompoundPayoff) -> CompoundGame {
        CompoundGame::new(
            StateVector::from_real(&[w0.sqrt(), (1.0 - w0).sqrt()]).unwrap(),
            HermitianOperator::diagonal(&[0.0, 1.0]),
            vec![(0.0, p0), (1.0, p1)],
        )
        .unwrap()
    }

    fn cash_pair(w0: f64, a: f64, b: f64) -> CompoundPayoff {
        CompoundPayoff::Game(Box::new(two_way(w0, CompoundPayoff::Cash(a), CompoundPayoff::Cash(b))))
    }

    #[test]
    fn flatten_examples() {
        let c = two_way(0.5, cash_pair(0.5, 1.0, 2.0), cash_pair(0.5, 3.0, 4.0));
        assert_eq!(c.rank(), 1);
        let g = flatten(&c).unwrap();
        assert_map(&weight_map(&g), &[(1.0, 0.25), (2.0, 0.25), (3.0, 0.25), (4.0, 0.25)]);

        let c = two_way(0.25, CompoundPayoff::Cash(0.0), cash_pair(1.0 / 3.0, 0.0, 1.0));
        assert_map(&weight_map(&flatten(&c).unwrap()), &[(0.0, 0.5), (1.0, 0.5)]);

        let base = id_game(&[0.6, 0.8], &[1.0, 2.0]);
        let flat = flatten(&CompoundGame::from_game(&base)).unwrap();
        assert!(flat.observable().max_deviation(base.observable()) < 1e-15);
        assert_eq!(flat.payoff(), base.payoff());
    }

    fn random_compound(rng: &mut ChaCha8Rng, depth: usize) -> CompoundGame {
        let dim = rng.gen_range(1..=4);
        let x = random::hermitian(rng, dim);
        let psi = random::state(rng, dim);
        let eigs = x.spectral().eigenvalues().to_vec();
        let payoff = eigs
            .iter()
            .map(|&e| {
                let p = if depth > 0 && rng.gen_bool(0.6) {
                    CompoundPayoff::Game(Box::new(random_compound(rng, depth - 1)))
                } else {
                    CompoundPayoff::Cash(rng.gen_range(-3..=3) as f64)
                };
                (e, p)
            })
            .collect();
        CompoundGame::new(psi, x, payoff).unwrap()
    }

    /// Enumerates root-to-leaf paths through individual eigenvectors rather
    /// than projectors, multiplying `|⟨v|ψ⟩|²` along each path.
    fn path_enumeration(c: &CompoundGame) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let spec = c.spectrum();
        for k in 0..spec.len() {
            let x = spec.eigenvalues()[k];
            let w: f64 = spec.eigenbasis(k).iter().map(|v| v.dotc(c.state().amplitudes()).norm_sqr()).sum();
            match c.payoff_at(x) {
                CompoundPayoff::Cash(v) => out.push((*v, w)),
                CompoundPayoff::Game(g) => out.extend(path_enumeration(g).into_iter().map(|(v, u)| (v, u * w))),
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn flatten_matches_path_enumeration(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_compound(&mut rng, 3);
            let flat = weight_map(&flatten(&c).unwrap());
            prop_assert!((flat.total() - 1.0).abs() < 1e-9);
            let oracle = WeightMap::from_pairs(path_enumeration(&c));
            prop_assert!(flat.approx_eq(&oracle, PAYOFF_TOL, 1e-9));
        }

        #[test]
        fn canonical_form_is_idempotent_and_equivalent(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random::game(&mut rng, 8);
            prop_assert!((weight_map(&g).total() - 1.0).abs() < 1e-9);
            let k = canonicalize(&g).unwrap();
            prop_assert!(equivalent(&g, &k));
            let kk = canonicalize(&k).unwrap();
            prop_assert_eq!(kk.payoff(), k.payoff());
            prop_assert!(kk.state().max_deviation(k.state()) < 1e-12);
        }
    }
}
