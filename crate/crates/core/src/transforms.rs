//! The constructive transformations behind game equivalence: relabelling
//! outcomes (payoff equivalence), moving a game along an isometry that
//! intertwines the observables (measurement equivalence), and the specific
//! unitaries and isometries the proof stages need.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::games::{same_eigenvalue, weight_map, Game, PayoffFunction, PAYOFF_TOL, ZERO_WEIGHT};
use crate::linalg::{
    apply_function_to, c, conjugate, intertwiner_deviation, HermitianOperator, Isometry, StateVector, C64,
};

/// Largest `|U X − X′ U|` entry accepted by [`measurement_equivalence`].
pub const INTERTWINER_TOL: f64 = 1e-9;

/// A real function on a finite spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFunction {
    entries: Vec<(f64, f64)>,
}

impl SpectrumFunction {
    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        let mut entries: Vec<(f64, f64)> = pairs.into_iter().collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { entries }
    }

    /// Tabulates `f` on `eigenvalues`.
    pub fn from_fn<F: Fn(f64) -> f64>(eigenvalues: &[f64], f: F) -> Self {
        Self::from_pairs(eigenvalues.iter().map(|&x| (x, f(x))))
    }

    pub fn identity(eigenvalues: &[f64]) -> Self {
        Self::from_fn(eigenvalues, |x| x)
    }

    pub fn get(&self, x: f64) -> Option<f64> {
        self.entries.iter().find(|&&(y, _)| same_eigenvalue(x, y)).map(|&(_, v)| v)
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    /// Errors with the first colliding pair if `f` is not injective on
    /// `eigenvalues`.
    pub fn check_injective(&self, eigenvalues: &[f64]) -> Result<()> {
        for (i, &a) in eigenvalues.iter().enumerate() {
            let fa = self.get(a).ok_or(Error::DomainError { eigenvalue: a })?;
            for &b in &eigenvalues[i + 1..] {
                let fb = self.get(b).ok_or(Error::DomainError { eigenvalue: b })?;
                if same_eigenvalue(fa, fb) {
                    return Err(Error::NonInjective { first: a, second: b, image: fa });
                }
            }
        }
        Ok(())
    }
}

/// `⟨ψ, X, Q·f⟩ → ⟨ψ, f(X), Q⟩`.
///
/// `Q` is read off the game's payoff as `Q(f(x)) = P(x)`, so it exists
/// whenever `P` is constant on every fibre of `f`; injective `f` always
/// qualifies. A fibre carrying two different payoffs gives `NonInjective`.
pub fn payoff_equivalence(game: &Game, f: &SpectrumFunction) -> Result<Game> {
    let spec = game.spectrum();
    let mut images: Vec<(f64, f64, f64)> = Vec::with_capacity(spec.len());
    for &x in spec.eigenvalues() {
        let y = f.get(x).ok_or(Error::DomainError { eigenvalue: x })?;
        let p = game.payoff_at(x);
        if let Some(&(x0, _, p0)) = images.iter().find(|&&(_, y0, _)| same_eigenvalue(y, y0)) {
            if (p - p0).abs() > PAYOFF_TOL {
                return Err(Error::NonInjective { first: x0, second: x, image: y });
            }
        } else {
            images.push((x, y, p));
        }
    }
    let fx = apply_function_to(spec, |x| f.get(x))?;
    let q = PayoffFunction::from_pairs(images.iter().map(|&(_, y, p)| (y, p)));
    Game::new(game.state().clone(), fx, q)
}

/// `⟨ψ, f(X), Q⟩ → ⟨ψ, X, Q·f⟩`, the reverse reading of payoff equivalence.
/// `game` must measure `f(X)`.
pub fn payoff_pullback(game: &Game, x: &HermitianOperator, f: &SpectrumFunction) -> Result<Game> {
    let spec = x.spectral();
    let fx = apply_function_to(&spec, |v| f.get(v))?;
    let dev = fx.max_deviation(game.observable());
    if dev > INTERTWINER_TOL {
        return Err(Error::IntertwinerViolation { max_deviation: dev });
    }
    let mut pairs = Vec::with_capacity(spec.len());
    for &v in spec.eigenvalues() {
        let y = f.get(v).ok_or(Error::DomainError { eigenvalue: v })?;
        pairs.push((v, game.payoff().value_at(y)?));
    }
    Game::new(game.state().clone(), x.clone(), PayoffFunction::from_pairs(pairs))
}

/// `⟨ψ, X, P⟩ → ⟨Uψ, X′, P′⟩` for an isometry with `U X = X′ U` and `P′`
/// agreeing with `P` on `σ(X)`. Both conditions are checked numerically.
pub fn measurement_equivalence(
    game: &Game,
    u: &Isometry,
    x_prime: &HermitianOperator,
    p_prime: &PayoffFunction,
) -> Result<Game> {
    if u.dim_in() != game.dim() {
        return Err(Error::DimMismatch { expected: u.dim_in(), found: game.dim() });
    }
    let max_deviation = intertwiner_deviation(u, game.observable(), x_prime)?;
    if max_deviation > INTERTWINER_TOL {
        return Err(Error::IntertwinerViolation { max_deviation });
    }
    for &(x, v) in game.payoff().entries() {
        let w = p_prime.get(x).ok_or(Error::PayoffUndefined { eigenvalue: x })?;
        if (v - w).abs() > PAYOFF_TOL {
            return Err(Error::PayoffMismatch { eigenvalue: x, left: v, right: w });
        }
    }
    Game::new(game.state().map(u)?, x_prime.clone(), p_prime.clone())
}

/// Measurement equivalence along `u` with `X′ = U X U† + fill·(I − U U†)`,
/// i.e. the observable pushed forward and extended by `fill` on the
/// orthogonal complement of the image. The payoff at `fill`, when `fill` is
/// new, is `fill_payoff`.
pub fn push_forward(game: &Game, u: &Isometry, fill: f64, fill_payoff: f64) -> Result<Game> {
    let core = conjugate(game.observable(), u)?;
    let n = u.dim_out();
    let id: DMatrix<C64> = DMatrix::identity(n, n);
    let complement = (id - u.matrix() * u.matrix().adjoint()) * c(fill, 0.0);
    let x_prime = HermitianOperator::new(core.matrix() + complement)?;
    let mut pairs: Vec<(f64, f64)> = game.payoff().entries().to_vec();
    if n > u.dim_in() && game.payoff().get(fill).is_none() {
        pairs.push((fill, fill_payoff));
    }
    measurement_equivalence(game, u, &x_prime, &PayoffFunction::from_pairs(pairs))
}

/// The unitary realizing the reflection `f(x) = −x + x₁ + x₂` of the
/// spectrum: it carries each eigenspace of `x` onto the eigenspace of
/// `f(x)`, pairing eigenvectors in order, so `U X U† = f(X)` and `U` swaps
/// `|λ₁⟩ ↔ |λ₂⟩`.
pub fn reflection_unitary(x: &HermitianOperator, x1: f64, x2: f64) -> Result<Isometry> {
    let spec = x.spectral();
    let dim = x.dim();
    let mut m: DMatrix<C64> = DMatrix::zeros(dim, dim);
    for (k, &v) in spec.eigenvalues().iter().enumerate() {
        let image = -v + x1 + x2;
        let j = spec
            .index_of(image, 1e-9 * image.abs().max(1.0))
            .ok_or(Error::SpectrumNotInvariant { eigenvalue: v, image })?;
        if spec.rank(j) != spec.rank(k) {
            return Err(Error::SpectrumNotInvariant { eigenvalue: v, image });
        }
        for (src, dst) in spec.eigenbasis(k).iter().zip(spec.eigenbasis(j)) {
            m += dst * src.adjoint();
        }
    }
    Isometry::new(m)
}

/// The isometry `C² → C^N`, `N = a₁ + a₂`, sending `e₁` to the uniform
/// superposition of the first `a₁` basis vectors and `e₂` to that of the
/// remaining `a₂`.
pub fn splitting_isometry(a1: usize, a2: usize) -> Result<Isometry> {
    if a1 == 0 || a2 == 0 {
        return Err(Error::OutOfRange { what: "splitting multiplicity", value: a1.min(a2) as f64 });
    }
    let n = a1 + a2;
    let mut m: DMatrix<C64> = DMatrix::zeros(n, 2);
    let s1 = 1.0 / (a1 as f64).sqrt();
    let s2 = 1.0 / (a2 as f64).sqrt();
    for i in 0..a1 {
        m[(i, 0)] = c(s1, 0.0);
    }
    for i in a1..n {
        m[(i, 1)] = c(s2, 0.0);
    }
    Isometry::new(m)
}

/// Embedding of the span of the selected basis vectors into `C^dim`.
pub fn embed_subspace(basis_indices: &[usize], dim: usize) -> Result<Isometry> {
    let mut cols = Vec::with_capacity(basis_indices.len());
    for (i, &k) in basis_indices.iter().enumerate() {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        if basis_indices[..i].contains(&k) {
            return Err(Error::DuplicateIndex(k));
        }
        cols.push(StateVector::basis(dim, k).amplitudes().clone());
    }
    Isometry::from_columns(dim, &cols)
}

/// The intermediate games of the constructive reduction of a game to its
/// canonical form.
#[derive(Debug, Clone)]
pub struct CanonicalReduction {
    /// Embedding `S → H` of the eigenspaces the state overlaps.
    pub support: Isometry,
    /// The game restricted to `S`.
    pub restricted: Game,
    /// `f(x) = i` when `x` leads to the `i`-th payoff.
    pub relabel: SpectrumFunction,
    /// `⟨ψ|_S, f(X|_S), P·f⁻¹⟩`.
    pub relabeled: Game,
    /// `U: κ_i ↦ μ_i`, the normalized payoff-block components of the state.
    pub unitary: Isometry,
    /// `⟨Σ√w_i κ_i, K, P₀⟩`.
    pub canonical: Game,
}

/// Builds the chain `G ≃ G|_S ≃ ⟨ψ, f(X), P·f⁻¹⟩ ≃ canonical` out of
/// measurement and payoff equivalences, checking each step.
pub fn canonical_reduction(game: &Game) -> Result<CanonicalReduction> {
    let spec = game.spectrum();
    let dim = game.dim();
    let weights = game.outcome_weights();

    // (a) restrict to eigenspaces with nonzero overlap
    let mut support_cols: Vec<DVector<C64>> = Vec::new();
    let mut restricted_eigs: Vec<f64> = Vec::new();
    for (k, &(x, w)) in weights.iter().enumerate() {
        if w > ZERO_WEIGHT {
            for v in spec.eigenbasis(k) {
                support_cols.push(v.clone());
                restricted_eigs.push(x);
            }
        }
    }
    if support_cols.is_empty() {
        return Err(Error::DegenerateGame);
    }
    let support = Isometry::from_columns(dim, &support_cols)?;
    let s = support.dim_in();
    let e_adj = support.matrix().adjoint();
    let x_s = HermitianOperator::new(&e_adj * game.observable().matrix() * support.matrix())?;
    let psi_s = StateVector::normalized((&e_adj * game.state().amplitudes()).iter().copied().collect())?;
    let p_s = game.payoff().restricted(&restricted_eigs)?;
    let restricted = Game::new(psi_s.clone(), x_s, p_s)?;
    measurement_equivalence(&restricted, &support, game.observable(), game.payoff())?;

    // (b)/(c) relabel outcomes by payoff index
    let wm = weight_map(&restricted);
    let index_of_payoff = |p: f64| {
        wm.entries().iter().position(|&(q, _)| (p - q).abs() <= PAYOFF_TOL).map(|i| (i + 1) as f64)
    };
    let mut pairs = Vec::new();
    for &x in restricted.spectrum().eigenvalues() {
        let i = index_of_payoff(restricted.payoff_at(x)).ok_or(Error::DegenerateGame)?;
        pairs.push((x, i));
    }
    let relabel = SpectrumFunction::from_pairs(pairs);
    let relabeled = payoff_equivalence(&restricted, &relabel)?;

    // (d) U κ_i = μ_i
    let rspec = relabeled.spectrum();
    let mut mu_cols = Vec::with_capacity(wm.len());
    for i in 1..=wm.len() {
        let k = rspec.index_of(i as f64, 1e-9).ok_or(Error::DegenerateGame)?;
        let block = rspec.projectors()[k].matrix() * psi_s.amplitudes();
        let norm = block.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateGame);
        }
        mu_cols.push(block / c(norm, 0.0));
    }
    let unitary = Isometry::from_columns(s, &mu_cols)?;
    let canonical = Game::from_weight_map(&wm)?;
    measurement_equivalence(&canonical, &unitary, relabeled.observable(), relabeled.payoff())?;

    Ok(CanonicalReduction { support, restricted, relabel, relabeled, unitary, canonical })
}
