//! Physical instantiation of games as branching measurements.
//!
//! A measurement procedure couples each eigenstate `|λ⟩` of the observable
//! (eigenvalue `x`) to a superposition `Σ_α μ(x;α)|M;x;α⟩` of readout
//! states. Readouts are abstract labels: branches are distinguishable and do
//! not interfere, so a branch is just a readout path with its payoff and
//! amplitude.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::games::{same_eigenvalue, weight_map, CompoundGame, CompoundPayoff, Game, PayoffFunction, WeightMap, PAYOFF_TOL, WEIGHT_TOL, ZERO_WEIGHT};
use crate::linalg::{c, HermitianOperator, SpectralDecomposition, StateVector, C64};

/// Tolerance on `Σ_α |μ(x;α)|² = 1` and on branch-set normalization.
pub const COEFFICIENT_TOL: f64 = 1e-9;

/// Readout couplings for one eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeCoupling {
    pub eigenvalue: f64,
    pub coefficients: Vec<C64>,
}

/// A device measuring `observable`, with `multiplicity(x)` readout states per
/// eigenstate of eigenvalue `x`.
#[derive(Debug, Clone)]
pub struct MeasurementProcedure {
    observable: HermitianOperator,
    spectrum: SpectralDecomposition,
    couplings: Vec<OutcomeCoupling>,
}

/// `μ = (1/√m, …, 1/√m)`.
pub fn uniform_coefficients(m: usize) -> Vec<C64> {
    assert!(m > 0);
    vec![c(1.0 / (m as f64).sqrt(), 0.0); m]
}

impl MeasurementProcedure {
    /// One readout per eigenstate, `μ = 1`.
    pub fn standard(observable: &HermitianOperator) -> Self {
        let spectrum = observable.spectral();
        let couplings = spectrum
            .eigenvalues()
            .iter()
            .map(|&x| OutcomeCoupling { eigenvalue: x, coefficients: vec![c(1.0, 0.0)] })
            .collect();
        Self { observable: observable.clone(), spectrum, couplings }
    }

    /// Couplings given per eigenvalue; eigenvalues not listed get the
    /// standard single readout.
    pub fn new(observable: &HermitianOperator, couplings: &[(f64, Vec<C64>)]) -> Result<Self> {
        let mut proc = Self::standard(observable);
        for (x, mu) in couplings {
            proc = proc.with_coupling(*x, mu.clone())?;
        }
        Ok(proc)
    }

    /// Replaces the couplings for eigenvalue `x`.
    pub fn with_coupling(mut self, x: f64, coefficients: Vec<C64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidProcedure(format!("eigenvalue {x} has no readout states")));
        }
        if coefficients.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("readout coefficients"));
        }
        let total: f64 = coefficients.iter().map(|z| z.norm_sqr()).sum();
        if (total - 1.0).abs() > COEFFICIENT_TOL {
            return Err(Error::InvalidProcedure(format!(
                "coefficients for eigenvalue {x} have squared norm {total}, expected 1"
            )));
        }
        let slot = self
            .couplings
            .iter_mut()
            .find(|o| same_eigenvalue(o.eigenvalue, x))
            .ok_or_else(|| Error::InvalidProcedure(format!("{x} is not an eigenvalue of the observable")))?;
        slot.coefficients = coefficients;
        Ok(self)
    }

    pub fn observable(&self) -> &HermitianOperator {
        &self.observable
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }

    pub fn couplings(&self) -> &[OutcomeCoupling] {
        &self.couplings
    }

    pub fn multiplicity(&self, x: f64) -> Option<usize> {
        self.coupling(x).map(|o| o.coefficients.len())
    }

    fn coupling(&self, x: f64) -> Option<&OutcomeCoupling> {
        self.couplings.iter().find(|o| same_eigenvalue(o.eigenvalue, x))
    }
}

/// Label of one readout state: the eigenvalue displayed and the readout index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readout {
    pub eigenvalue: f64,
    pub alpha: usize,
}

/// One decoherent branch after all measurements and payments.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Readouts recorded along the branch, outermost first.
    pub path: Vec<Readout>,
    pub payoff: f64,
    pub amplitude: C64,
    pub weight: f64,
}

impl Branch {
    fn new(path: Vec<Readout>, payoff: f64, amplitude: C64) -> Self {
        Self { path, payoff, amplitude, weight: amplitude.norm_sqr() }
    }
}

/// The branches produced by a physical process.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    branches: Vec<Branch>,
}

impl BranchSet {
    /// Validates total weight 1 and distinct labels.
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::EmptyBranchSet);
        }
        let total: f64 = branches.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > COEFFICIENT_TOL {
            return Err(Error::NotNormalized { norm_sq: total, tolerance: COEFFICIENT_TOL });
        }
        for (i, b) in branches.iter().enumerate() {
            if branches[..i].iter().any(|a| a.path == b.path) {
                return Err(Error::InvalidProcedure("duplicate readout label".into()));
            }
        }
        Ok(Self { branches })
    }

    /// Builds directly from `(payoff, weight)` pairs with synthetic labels.
    pub fn from_weights(pairs: &[(f64, f64)]) -> Result<Self> {
        let branches = pairs
            .iter()
            .enumerate()
            .map(|(i, &(p, w))| Branch::new(vec![Readout { eigenvalue: p, alpha: i }], p, c(w.sqrt(), 0.0)))
            .collect();
        Self::new(branches)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Branch weights summed per payoff.
    pub fn aggregate(&self) -> WeightMap {
        WeightMap::from_pairs(self.branches.iter().map(|b| (b.payoff, b.weight)))
    }
}

fn push_component_branches(
    out: &mut Vec<Branch>,
    spectrum: &SpectralDecomposition,
    k: usize,
    mu: &[C64],
    psi: &StateVector,
    payoff: f64,
) {
    let x = spectrum.eigenvalues()[k];
    let m = mu.len();
    for (j, v) in spectrum.eigenbasis(k).iter().enumerate() {
        let a = v.dotc(psi.amplitudes());
        for (r, &coef) in mu.iter().enumerate() {
            let amplitude = a * coef;
            if amplitude.norm_sqr() > ZERO_WEIGHT {
                out.push(Branch::new(vec![Readout { eigenvalue: x, alpha: j * m + r }], payoff, amplitude));
            }
        }
    }
}

/// Runs `proc` on `psi` and pays `payoff`.
///
/// Each eigenstate component of `psi` (degenerate eigenspaces are split in
/// the eigenbasis of the spectral decomposition) feeds its own readouts;
/// branch `(x, α)` has amplitude `⟨λ|ψ⟩·μ(x;α)` and pays `P(x)`. Readout
/// index `α` runs over `component · multiplicity + r`. Zero-weight branches
/// are not produced.
pub fn run(proc: &MeasurementProcedure, psi: &StateVector, payoff: &PayoffFunction) -> Result<BranchSet> {
    if psi.dim() != proc.dim() {
        return Err(Error::DimMismatch { expected: proc.dim(), found: psi.dim() });
    }
    let spec = proc.spectrum();
    let mut out = Vec::new();
    for (k, &x) in spec.eigenvalues().iter().enumerate() {
        let p = payoff.value_at(x)?;
        let mu = &proc.coupling(x).expect("couplings cover the spectrum").coefficients;
        push_component_branches(&mut out, spec, k, mu, psi, p);
    }
    BranchSet::new(out)
}

/// True when the branch weights, aggregated by payoff, equal `W_G`.
pub fn instantiates(branches: &BranchSet, game: &Game) -> bool {
    branches.aggregate().approx_eq(&weight_map(game), PAYOFF_TOL, WEIGHT_TOL)
}

/// What happens on an outcome of a composed process.
#[derive(Debug, Clone)]
pub enum Continuation {
    /// Pay cash and stop.
    Cash(f64),
    /// Measure again on the post-measurement state `P(y)ψ / ‖P(y)ψ‖`.
    Measure(Box<Followup>),
    /// Re-prepare the system in a fresh state and measure that.
    Prepare(StateVector, Box<Followup>),
}

/// The measurement performed after an outcome, with its own continuations.
#[derive(Debug, Clone)]
pub struct Followup {
    pub procedure: MeasurementProcedure,
    pub continuations: Vec<(f64, Continuation)>,
}

impl Continuation {
    /// Measure `procedure` on the post-measurement state and pay `payoff`.
    pub fn measure(procedure: MeasurementProcedure, payoff: &PayoffFunction) -> Self {
        Continuation::Measure(Box::new(Followup::paying(procedure, payoff)))
    }

    /// Prepare `state`, measure `procedure` and pay `payoff`.
    pub fn prepare(state: StateVector, procedure: MeasurementProcedure, payoff: &PayoffFunction) -> Self {
        Continuation::Prepare(state, Box::new(Followup::paying(procedure, payoff)))
    }
}

impl Followup {
    pub fn paying(procedure: MeasurementProcedure, payoff: &PayoffFunction) -> Self {
        let continuations = payoff.entries().iter().map(|&(x, v)| (x, Continuation::Cash(v))).collect();
        Self { procedure, continuations }
    }
}

fn lookup(conts: &[(f64, Continuation)], x: f64) -> Result<&Continuation> {
    conts
        .iter()
        .find(|(y, _)| same_eigenvalue(x, *y))
        .map(|(_, c)| c)
        .ok_or(Error::PayoffUndefined { eigenvalue: x })
}

fn post_measurement_state(spec: &SpectralDecomposition, k: usize, psi: &StateVector) -> Option<(f64, StateVector)> {
    let projected: DVector<C64> = spec.projectors()[k].matrix() * psi.amplitudes();
    let w = projected.norm_squared();
    if w <= ZERO_WEIGHT {
        return None;
    }
    let post = StateVector::normalized(projected.iter().copied().collect()).ok()?;
    Some((w, post))
}

fn compose_branches(
    outer: &MeasurementProcedure,
    psi: &StateVector,
    conts: &[(f64, Continuation)],
) -> Result<Vec<Branch>> {
    if psi.dim() != outer.dim() {
        return Err(Error::DimMismatch { expected: outer.dim(), found: psi.dim() });
    }
    let spec = outer.spectrum();
    let mut out = Vec::new();
    for (k, &y) in spec.eigenvalues().iter().enumerate() {
        let mu = &outer.coupling(y).expect("couplings cover the spectrum").coefficients;
        let (follow, sub_state) = match lookup(conts, y)? {
            Continuation::Cash(v) => {
                push_component_branches(&mut out, spec, k, mu, psi, *v);
                continue;
            }
            Continuation::Measure(f) => match post_measurement_state(spec, k, psi) {
                Some((w, post)) => (f, Some((w, post))),
                None => continue,
            },
            Continuation::Prepare(state, f) => {
                let w = psi.expectation(&spec.projectors()[k]);
                if w <= ZERO_WEIGHT {
                    continue;
                }
                (f, Some((w, state.clone())))
            }
        };
        let (w, state) = sub_state.expect("set above");
        let inner = compose_branches(&follow.procedure, &state, &follow.continuations)?;
        for (alpha, &coef) in mu.iter().enumerate() {
            let outer_amp = c(w.sqrt(), 0.0) * coef;
            for b in &inner {
                let amplitude = outer_amp * b.amplitude;
                if amplitude.norm_sqr() <= ZERO_WEIGHT {
                    continue;
                }
                let mut path = Vec::with_capacity(b.path.len() + 1);
                path.push(Readout { eigenvalue: y, alpha });
                path.extend_from_slice(&b.path);
                out.push(Branch::new(path, b.payoff, amplitude));
            }
        }
    }
    Ok(out)
}

/// Runs `outer` on `psi` and then, on each outcome, whatever its
/// continuation says. Amplitudes multiply along every path. An outcome
/// that leads to a further measurement records one readout per coupling
/// coefficient rather than one per eigenstate component.
pub fn compose(outer: &MeasurementProcedure, psi: &StateVector, continuations: &[(f64, Continuation)]) -> Result<BranchSet> {
    BranchSet::new(compose_branches(outer, psi, continuations)?)
}

/// The compound game a composed process instantiates.
pub fn compound_of(outer: &MeasurementProcedure, psi: &StateVector, continuations: &[(f64, Continuation)]) -> Result<CompoundGame> {
    let spec = outer.spectrum();
    let mut payoff = Vec::with_capacity(spec.len());
    for (k, &y) in spec.eigenvalues().iter().enumerate() {
        let p = match lookup(continuations, y)? {
            Continuation::Cash(v) => CompoundPayoff::Cash(*v),
            Continuation::Measure(f) => match post_measurement_state(spec, k, psi) {
                Some((_, post)) => CompoundPayoff::Game(Box::new(compound_of(&f.procedure, &post, &f.continuations)?)),
                None => CompoundPayoff::Cash(0.0),
            },
            Continuation::Prepare(state, f) => {
                CompoundPayoff::Game(Box::new(compound_of(&f.procedure, state, &f.continuations)?))
            }
        };
        payoff.push((y, p));
    }
    CompoundGame::new(psi.clone(), outer.observable().clone(), payoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::flatten;
    use crate::linalg::Isometry;
    use crate::random;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h() -> f64 {
        1.0 / 2f64.sqrt()
    }

    #[test]
    fn run_examples() {
        let x = HermitianOperator::diagonal(&[0.0, 1.0]);
        let id = PayoffFunction::identity(&[0.0, 1.0]);
        let b = run(&MeasurementProcedure::standard(&x), &StateVector::uniform(2), &id).unwrap();
        assert_eq!(b.len(), 2);
        for br in b.branches() {
            assert!((br.weight - 0.5).abs() < 1e-12);
        }

        let b = run(&MeasurementProcedure::standard(&x), &StateVector::basis(2, 0), &id).unwrap();
        assert_eq!(b.aggregate().entries(), &[(0.0, 1.0)]);

        let proc = MeasurementProcedure::new(&x, &[(0.0, vec![c(h(), 0.0), c(h(), 0.0)])]).unwrap();
        let b = run(&proc, &StateVector::uniform(2), &id).unwrap();
        let zero: Vec<f64> = b.branches().iter().filter(|br| br.payoff == 0.0).map(|br| br.weight).collect();
        assert_eq!(zero.len(), 2);
        assert!(zero.iter().all(|w| (w - 0.25).abs() < 1e-12));
    }

    #[test]
    fn run_errors() {
        let x = HermitianOperator::diagonal(&[0.0, 1.0]);
        let proc = MeasurementProcedure::standard(&x);
        let err = run(&proc, &StateVector::uniform(3), &PayoffFunction::identity(&[0.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::DimMismatch { .. }));
        let err = run(&proc, &StateVector::uniform(2), &PayoffFunction::identity(&[0.0])).unwrap_err();
        assert!(matches!(err, Error::PayoffUndefined { .. }));
        assert!(MeasurementProcedure::new(&x, &[(0.0, vec![c(0.5, 0.0)])]).is_err());
        assert!(MeasurementProcedure::new(&x, &[(3.0, vec![c(1.0, 0.0)])]).is_err());
    }

    #[test]
    fn instantiation_mismatch() {
        let b = BranchSet::from_weights(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let g = Game::with_identity_payoff(
            StateVector::from_real(&[0.5, 0.75f64.sqrt()]).unwrap(),
            HermitianOperator::diagonal(&[0.0, 1.0]),
        )
        .unwrap();
        assert!(!instantiates(&b, &g));
    }

    #[test]
    fn stage_two_composition() {
        // ψ = ½Σ|λ_i⟩, Y = y_A|A⟩⟨A| + y_B|B⟩⟨B|, then X on the post-measurement state.
        let xs = [1.0, 2.0, 4.0, 8.0];
        let x = HermitianOperator::diagonal(&xs);
        let a = DVector::from_vec(vec![c(h(), 0.0), c(h(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let bvec = DVector::from_vec(vec![c(0.0, 0.0), c(0.0, 0.0), c(h(), 0.0), c(h(), 0.0)]);
        let (ya, yb) = (1.5, 6.0);
        let y = HermitianOperator::projector(4, std::slice::from_ref(&a))
            .scaled(ya)
            .add(&HermitianOperator::projector(4, std::slice::from_ref(&bvec)).scaled(yb))
            .unwrap();
        let proc_x = MeasurementProcedure::standard(&x);
        let id = PayoffFunction::identity(&xs);
        let conts = vec![
            (0.0, Continuation::Cash(0.0)),
            (ya, Continuation::measure(proc_x.clone(), &id)),
            (yb, Continuation::measure(proc_x, &id)),
        ];
        let psi = StateVector::uniform(4);
        let b = compose(&MeasurementProcedure::standard(&y), &psi, &conts).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.branches().iter().all(|br| (br.weight - 0.25).abs() < 1e-12));
        assert!(instantiates(&b, &Game::with_identity_payoff(psi.clone(), x).unwrap()));
        let compound = compound_of(&MeasurementProcedure::standard(&y), &psi, &conts).unwrap();
        assert!(instantiates(&b, &flatten(&compound).unwrap()));
    }

    #[test]
    fn all_cash_composition_is_run() {
        let x = HermitianOperator::diagonal(&[1.0, 1.0, 3.0]);
        let proc = MeasurementProcedure::new(&x, &[(3.0, uniform_coefficients(3))]).unwrap();
        let payoff = PayoffFunction::from_pairs([(1.0, -2.0), (3.0, 5.0)]);
        let psi = StateVector::from_real(&[0.6, 0.0, 0.8]).unwrap();
        let conts: Vec<_> = payoff.entries().iter().map(|&(x, v)| (x, Continuation::Cash(v))).collect();
        assert_eq!(compose(&proc, &psi, &conts).unwrap(), run(&proc, &psi, &payoff).unwrap());
    }

    #[test]
    fn nested_binary_composition() {
        let bit = HermitianOperator::diagonal(&[0.0, 1.0]);
        let outer_state = StateVector::from_real(&[0.5, 0.75f64.sqrt()]).unwrap();
        let inner_state = StateVector::from_real(&[(1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt()]).unwrap();
        let proc = MeasurementProcedure::standard(&bit);
        let inner = Continuation::prepare(inner_state.clone(), proc.clone(), &PayoffFunction::from_pairs([(0.0, 2.0), (1.0, 5.0)]));
        let conts = vec![(0.0, inner.clone()), (1.0, inner)];
        let b = compose(&proc, &outer_state, &conts).unwrap();
        let mut weights: Vec<f64> = b.branches().iter().map(|br| br.weight).collect();
        weights.sort_by(f64::total_cmp);
        let expected = [1.0 / 12.0, 1.0 / 6.0, 0.25, 0.5];
        for (w, e) in weights.iter().zip(expected) {
            assert!((w - e).abs() < 1e-12);
        }
        let compound = compound_of(&proc, &outer_state, &conts).unwrap();
        assert_eq!(compound.rank(), 1);
        assert!(instantiates(&b, &flatten(&compound).unwrap()));
    }

    /// Measurement equivalence realized physically: prepare `ψ ⊗ |0′⟩`, apply a
    /// unitary carrying `φ ⊗ |0′⟩` to `|0⟩ ⊗ Uφ`, then measure `1 ⊗ X′`.
    #[test]
    fn auxiliary_space_realization_of_me() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, n2) = (2usize, 3usize);
        let x = HermitianOperator::diagonal(&[-1.0, 2.0]);
        let u = random::isometry(&mut rng, n, n2);
        let x_prime = {
            let core = crate::linalg::conjugate(&x, &u).unwrap();
            let comp = (DMatrix::<C64>::identity(n2, n2) - u.matrix() * u.matrix().adjoint()) * c(7.0, 0.0);
            HermitianOperator::new(core.matrix() + comp).unwrap()
        };
        let psi = random::state(&mut rng, n);
        let payoff = PayoffFunction::from_pairs([(-1.0, 3.0), (2.0, -4.0), (7.0, 0.0)]);

        // Joint index: i * n2 + j for |i⟩ ⊗ |j⟩.
        let dim = n * n2;
        let mut cols: Vec<DVector<C64>> = Vec::new();
        for i in 0..n {
            let mut col = DVector::zeros(dim);
            for j in 0..n2 {
                col[j] = u.matrix()[(j, i)];
            }
            cols.push(col);
        }
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for (k, col) in cols.iter().enumerate() {
            m.set_column(k, col);
        }
        for k in cols.len()..dim {
            m.set_column(k, &DVector::from_fn(dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
        let qr = m.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for k in 0..dim {
            let d = r[(k, k)];
            let mut col = q.column_mut(k);
            col *= d / c(d.norm(), 0.0);
        }
        // Column i of `q` is W(|i⟩ ⊗ |0′⟩); the rest complete the basis.
        let mut order: Vec<usize> = (0..n).map(|i| i * n2).collect();
        order.extend((0..dim).filter(|k| k % n2 != 0));
        let mut full = DMatrix::<C64>::zeros(dim, dim);
        for (k, &target) in order.iter().enumerate() {
            full.set_column(target, &q.column(k));
        }
        let w = Isometry::new(full).unwrap();
        assert!(w.is_unitary(1e-9));

        let mut joint = DVector::zeros(dim);
        for i in 0..n {
            joint[i * n2] = psi.amp(i);
        }
        let after = StateVector::from_vector(w.matrix() * joint).unwrap();
        let mut big_x = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n2 {
                for k in 0..n2 {
                    big_x[(i * n2 + j, i * n2 + k)] = x_prime.matrix()[(j, k)];
                }
            }
        }
        let big_x = HermitianOperator::new(big_x).unwrap();
        let b = run(&MeasurementProcedure::standard(&big_x), &after, &payoff).unwrap();

        let original = Game::new(psi.clone(), x, payoff.restricted(&[-1.0, 2.0]).unwrap()).unwrap();
        let moved = Game::new(psi.map(&u).unwrap(), x_prime, payoff).unwrap();
        assert!(instantiates(&b, &original));
        assert!(instantiates(&b, &moved));
    }

    fn random_procedure(rng: &mut ChaCha8Rng, x: &HermitianOperator) -> MeasurementProcedure {
        let mut proc = MeasurementProcedure::standard(x);
        for &e in x.spectral().eigenvalues() {
            let m = rng.gen_range(1..=3);
            let raw: Vec<C64> = (0..m).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            proc = proc.with_coupling(e, raw.iter().map(|z| z / norm).collect()).unwrap();
        }
        proc
    }

    fn random_followups(rng: &mut ChaCha8Rng, dim: usize, depth: usize) -> Vec<(f64, Continuation)> {
        let x = random::hermitian(rng, dim);
        let eigs = x.spectral().eigenvalues().to_vec();
        eigs.iter()
            .map(|&e| {
                let cont = if depth > 0 && rng.gen_bool(0.5) {
                    let sub_x = random::degenerate_observable(rng, dim);
                    let proc = random_procedure(rng, &sub_x);
                    let conts = random_followups(rng, dim, depth - 1);
                    let conts = sub_x
                        .spectral()
                        .eigenvalues()
                        .iter()
                        .zip(conts.into_iter().map(|c| c.1).chain(std::iter::repeat(Continuation::Cash(1.0))))
                        .map(|(&y, c)| (y, c))
                        .collect();
                    let follow = Box::new(Followup { procedure: proc, continuations: conts });
                    if rng.gen_bool(0.5) {
                        Continuation::Measure(follow)
                    } else {
                        Continuation::Prepare(random::state(rng, dim), follow)
                    }
                } else {
                    Continuation::Cash(rng.gen_range(-2..=2) as f64)
                };
                (e, cont)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn run_instantiates_its_game(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random::game(&mut rng, 6);
            let proc = random_procedure(&mut rng, g.observable());
            let b = run(&proc, g.state(), g.payoff()).unwrap();
            prop_assert!(instantiates(&b, &g));

            let theta: f64 = rng.gen_range(0.0..6.0);
            let b2 = run(&proc, &g.state().with_global_phase(theta), g.payoff()).unwrap();
            for (p, q) in b.branches().iter().zip(b2.branches()) {
                prop_assert!((p.weight - q.weight).abs() < 1e-12);
            }
        }

        #[test]
        fn composition_instantiates_flattened_compound(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.gen_range(1..=4);
            let x = random::hermitian(&mut rng, dim);
            let proc = random_procedure(&mut rng, &x);
            let psi = random::state(&mut rng, dim);
            let conts: Vec<(f64, Continuation)> = x
                .spectral()
                .eigenvalues()
                .iter()
                .zip(random_followups(&mut rng, dim, 2).into_iter().map(|c| c.1).chain(std::iter::repeat(Continuation::Cash(0.0))))
                .map(|(&y, c)| (y, c))
                .collect();
            let b = compose(&proc, &psi, &conts).unwrap();
            let compound = compound_of(&proc, &psi, &conts).unwrap();
            prop_assert!(instantiates(&b, &flatten(&compound).unwrap()));
        }
    }
}
