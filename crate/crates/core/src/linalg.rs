//! Finite-dimensional complex linear algebra: states, self-adjoint operators,
//! spectral projectors and isometries.
//!
//! Every type here validates its invariant on construction and is immutable
//! afterwards. Hermitian operators are stored symmetrized, so `X == X†`
//! holds bit-for-bit once a [`HermitianOperator`] exists.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;

/// Absolute tolerance on `Σ|a_i|² = 1`.
pub const NORM_TOL: f64 = 1e-9;
/// Absolute tolerance on `X[i][j] = conj(X[j][i])`.
pub const HERM_TOL: f64 = 1e-9;
/// Absolute tolerance on `U†U = I`.
pub const ISOMETRY_TOL: f64 = 1e-9;
/// Relative eigenvalue clustering tolerance, scaled by the largest `|λ|`.
pub const RELATIVE_CLUSTER_TOL: f64 = 1e-9;
/// Floor for the clustering tolerance when every eigenvalue is (near) zero.
pub const MIN_CLUSTER_TOL: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn is_finite(z: &C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A normalized vector in a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(amps, NORM_TOL)
    }

    /// Like [`StateVector::new`] with a caller-chosen normalization tolerance.
    pub fn with_tolerance(amps: Vec<C64>, tol: f64) -> Result<Self> {
        Self::from_vector_tol(DVector::from_vec(amps), tol)
    }

    pub fn from_vector(amps: DVector<C64>) -> Result<Self> {
        Self::from_vector_tol(amps, NORM_TOL)
    }

    fn from_vector_tol(amps: DVector<C64>, tol: f64) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::DimMismatch { expected: 1, found: 0 });
        }
        if !amps.iter().all(is_finite) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm_sq = amps.norm_squared();
        if (norm_sq - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm_sq, tolerance: tol });
        }
        Ok(Self { amps })
    }

    /// Real amplitudes, validated against [`NORM_TOL`].
    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| c(a, 0.0)).collect())
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amps);
        if !v.iter().all(is_finite) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm = v.norm();
        if norm == 0.0 || v.is_empty() {
            return Err(Error::ZeroVector);
        }
        Ok(Self { amps: v / c(norm, 0.0) })
    }

    /// The `index`-th computational basis vector.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = DVector::zeros(dim);
        amps[index] = c(1.0, 0.0);
        Self { amps }
    }

    /// Equal-weight superposition of all basis vectors.
    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0);
        let a = 1.0 / (dim as f64).sqrt();
        Self { amps: DVector::from_element(dim, c(a, 0.0)) }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amp(&self, i: usize) -> C64 {
        self.amps[i]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `⟨ψ|A|ψ⟩`, real because `A` is self-adjoint.
    pub fn expectation(&self, op: &HermitianOperator) -> f64 {
        self.amps.dotc(&(&op.m * &self.amps)).re
    }

    /// Image under an isometry. The result is normalized up to rounding.
    pub fn map(&self, u: &Isometry) -> Result<StateVector> {
        if u.dim_in() != self.dim() {
            return Err(Error::DimMismatch { expected: u.dim_in(), found: self.dim() });
        }
        Self::from_vector(&u.m * &self.amps)
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> StateVector {
        Self { amps: &self.amps * C64::from_polar(1.0, theta) }
    }

    /// Largest amplitude difference.
    pub fn max_deviation(&self, other: &StateVector) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.amps - &other.amps).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// A self-adjoint operator on a `dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: DMatrix<C64>,
}

impl HermitianOperator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(m, HERM_TOL)
    }

    pub fn with_tolerance(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::DimMismatch { expected: 1, found: 0 });
        }
        if !m.iter().all(is_finite) {
            return Err(Error::NonFinite("operator entries"));
        }
        let max_deviation = max_abs(&(&m - m.adjoint()));
        if max_deviation > tol {
            return Err(Error::NotHermitian { max_deviation, tolerance: tol });
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: DMatrix<C64>) -> Self {
        let adj = m.adjoint();
        Self { m: (m + adj) * c(0.5, 0.0) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| c(x, 0.0)));
        Self { m: DMatrix::from_diagonal(&d) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: DMatrix::zeros(dim, dim) }
    }

    /// `Σ_k |v_k⟩⟨v_k|` for orthonormal `vectors`.
    pub fn projector(dim: usize, vectors: &[DVector<C64>]) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for v in vectors {
            m += v * v.adjoint();
        }
        Self::symmetrized(m)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn rank_one(psi: &StateVector) -> Self {
        Self::projector(psi.dim(), std::slice::from_ref(psi.amplitudes()))
    }

    /// `Σ_k x_k P_k`.
    pub fn from_spectrum(dim: usize, terms: &[(f64, &HermitianOperator)]) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for (x, p) in terms {
            m += &p.m * c(*x, 0.0);
        }
        Self::symmetrized(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// `X + k·I`.
    pub fn shifted(&self, k: f64) -> Self {
        let id: DMatrix<C64> = DMatrix::identity(self.dim(), self.dim());
        Self { m: &self.m + id * c(k, 0.0) }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { m: &self.m * c(a, 0.0) }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(Self { m: &self.m + &other.m })
    }

    /// Largest entrywise difference; infinite when dimensions differ.
    pub fn max_deviation(&self, other: &HermitianOperator) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs(&(&self.m - &other.m))
    }

    pub fn frobenius_distance(&self, other: &HermitianOperator) -> f64 {
        (&self.m - &other.m).norm()
    }

    /// Spectral decomposition with the default relative clustering tolerance.
    pub fn spectral(&self) -> SpectralDecomposition {
        spectral_decompose(self, None)
    }
}

/// `X = Σ_x x P_X(x)` with distinct ascending eigenvalues.
///
/// Each projector comes with the orthonormal eigenbasis it was built from;
/// measurement branches are enumerated in that basis.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<f64>,
    projectors: Vec<HermitianOperator>,
    bases: Vec<Vec<DVector<C64>>>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[HermitianOperator] {
        &self.projectors
    }

    /// Orthonormal basis of the `k`-th eigenspace.
    pub fn eigenbasis(&self, k: usize) -> &[DVector<C64>] {
        &self.bases[k]
    }

    pub fn rank(&self, k: usize) -> usize {
        self.bases[k].len()
    }

    /// Pairs `(x, P_X(x))` in ascending order of `x`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &HermitianOperator)> {
        self.eigenvalues.iter().copied().zip(self.projectors.iter())
    }

    /// `Σ x_i P_i`.
    pub fn reconstruct(&self) -> HermitianOperator {
        let terms: Vec<_> = self.iter().collect();
        HermitianOperator::from_spectrum(self.dim, &terms)
    }

    /// Index of the eigenvalue matching `x` within `tol`.
    pub fn index_of(&self, x: f64, tol: f64) -> Option<usize> {
        self.eigenvalues.iter().position(|&e| (e - x).abs() <= tol)
    }
}

/// Normalizes `v` and rotates its global phase so the first component of
/// (near-)maximal modulus is real and positive. Diagonal operators then get
/// the computational basis vectors themselves as eigenvectors.
fn fix_phase(v: DVector<C64>) -> DVector<C64> {
    let v = &v / c(v.norm(), 0.0);
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = v.iter().find(|z| z.norm() >= peak - 1e-12).copied().unwrap_or(c(1.0, 0.0));
    &v * (lead.conj() / c(lead.norm(), 0.0))
}

/// Tolerance used when none is given: `1e-9 · max|λ|`, floored at
/// [`MIN_CLUSTER_TOL`].
pub fn default_cluster_tol(max_abs_eigenvalue: f64) -> f64 {
    (RELATIVE_CLUSTER_TOL * max_abs_eigenvalue).max(MIN_CLUSTER_TOL)
}

/// Diagonalizes `x`, merging eigenvalues whose consecutive gaps are at most
/// `cluster_tol` into one eigenvalue (their mean) with a combined projector.
pub fn spectral_decompose(x: &HermitianOperator, cluster_tol: Option<f64>) -> SpectralDecomposition {
    let dim = x.dim();
    let eig = SymmetricEigen::new(x.m.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let max_abs_eig = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = cluster_tol.unwrap_or_else(|| default_cluster_tol(max_abs_eig));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for &i in &order {
        let v = eig.eigenvalues[i];
        match groups.last_mut() {
            Some(g) if v - prev <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
        prev = v;
    }

    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    let mut bases = Vec::with_capacity(groups.len());
    for g in groups {
        let mean = g.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / g.len() as f64;
        let basis: Vec<DVector<C64>> = g
            .iter()
            .map(|&i| fix_phase(eig.eigenvectors.column(i).into_owned()))
            .collect();
        eigenvalues.push(mean);
        projectors.push(HermitianOperator::projector(dim, &basis));
        bases.push(basis);
    }
    SpectralDecomposition { dim, eigenvalues, projectors, bases }
}

/// `f(X) = Σ f(x) P_X(x)`; `f` returns `None` where it is undefined.
pub fn apply_function<F>(x: &HermitianOperator, f: F) -> Result<HermitianOperator>
where
    F: Fn(f64) -> Option<f64>,
{
    apply_function_to(&x.spectral(), f)
}

/// [`apply_function`] on an existing decomposition.
pub fn apply_function_to<F>(spec: &SpectralDecomposition, f: F) -> Result<HermitianOperator>
where
    F: Fn(f64) -> Option<f64>,
{
    let mut terms = Vec::with_capacity(spec.len());
    for (x, p) in spec.iter() {
        match f(x) {
            Some(y) if y.is_finite() => terms.push((y, p)),
            _ => return Err(Error::DomainError { eigenvalue: x }),
        }
    }
    Ok(HermitianOperator::from_spectrum(spec.dim(), &terms))
}

/// `U X U†` on the codomain of `U`.
pub fn conjugate(x: &HermitianOperator, u: &Isometry) -> Result<HermitianOperator> {
    if u.dim_in() != x.dim() {
        return Err(Error::DimMismatch { expected: u.dim_in(), found: x.dim() });
    }
    Ok(HermitianOperator::symmetrized(&u.m * &x.m * u.m.adjoint()))
}

/// Largest entry of `U X − X′ U`.
pub fn intertwiner_deviation(u: &Isometry, x: &HermitianOperator, x_prime: &HermitianOperator) -> Result<f64> {
    if u.dim_in() != x.dim() {
        return Err(Error::DimMismatch { expected: u.dim_in(), found: x.dim() });
    }
    if u.dim_out() != x_prime.dim() {
        return Err(Error::DimMismatch { expected: u.dim_out(), found: x_prime.dim() });
    }
    Ok(max_abs(&(&u.m * &x.m - &x_prime.m * &u.m)))
}

/// A linear map `U: C^dim_in → C^dim_out` with `U†U = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    m: DMatrix<C64>,
}

impl Isometry {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(m, ISOMETRY_TOL)
    }

    pub fn with_tolerance(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        if m.ncols() == 0 || m.nrows() < m.ncols() {
            return Err(Error::DimMismatch { expected: m.ncols().max(1), found: m.nrows() });
        }
        if !m.iter().all(is_finite) {
            return Err(Error::NonFinite("isometry entries"));
        }
        let id: DMatrix<C64> = DMatrix::identity(m.ncols(), m.ncols());
        let max_deviation = max_abs(&(m.adjoint() * &m - id));
        if max_deviation > tol {
            return Err(Error::NotIsometry { max_deviation });
        }
        Ok(Self { m })
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    /// Isometry whose `k`-th column is `columns[k]`.
    pub fn from_columns(dim_out: usize, columns: &[DVector<C64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|v| v.len() != dim_out) {
            return Err(Error::DimMismatch { expected: dim_out, found: bad.len() });
        }
        Self::new(DMatrix::from_columns(columns))
    }

    /// `Σ_i e^{iθ_i} |i⟩⟨i|`.
    pub fn diagonal_phases(thetas: &[f64]) -> Self {
        let d = DVector::from_iterator(thetas.len(), thetas.iter().map(|&t| C64::from_polar(1.0, t)));
        Self { m: DMatrix::from_diagonal(&d) }
    }

    /// Permutation unitary sending `e_i` to `e_{perm[i]}`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &j) in perm.iter().enumerate() {
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, dim: n });
            }
            m[(j, i)] = c(1.0, 0.0);
        }
        Self::new(m)
    }

    pub fn dim_in(&self) -> usize {
        self.m.ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// True when square and `UU† = I` within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.dim_in() != self.dim_out() {
            return false;
        }
        let id: DMatrix<C64> = DMatrix::identity(self.dim_out(), self.dim_out());
        max_abs(&(&self.m * self.m.adjoint() - id)) <= tol
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Isometry) -> Result<Isometry> {
        if other.dim_in() != self.dim_out() {
            return Err(Error::DimMismatch { expected: other.dim_in(), found: self.dim_out() });
        }
        Ok(Isometry { m: &other.m * &self.m })
    }

    pub fn max_deviation(&self, other: &Isometry) -> f64 {
        if self.m.shape() != other.m.shape() {
            return f64::INFINITY;
        }
        max_abs(&(&self.m - &other.m))
    }
}
