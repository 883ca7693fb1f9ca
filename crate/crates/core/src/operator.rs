//! Dense complex operators on composite Hilbert spaces.
//!
//! Basis conventions used throughout the crate:
//! - qubit index 0 is |g>, index 1 is |e>; `sigma_z = diag(-1, +1)` and
//!   `sigma_plus = |e><g|`;
//! - composite indices are row-major, so on `[2, n]` the basis index of
//!   qubit level `q` and Fock level `k` is `q * n + k`;
//! - units have hbar = k_B = 1, temperatures and energies are frequencies.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::smart_mul;

/// The imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Ordered list of subsystem dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDims(dims));
        }
        Ok(Self { dims })
    }

    pub fn qubit() -> Self {
        Self { dims: vec![2] }
    }

    /// A bosonic mode truncated to `n` Fock levels.
    pub fn fock(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn slots(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        HilbertSpace { dims }
    }

    /// Splits a composite basis index into per-slot indices.
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in self.dims.iter().enumerate().rev() {
            out[slot] = index % d;
            index /= d;
        }
        out
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.dims.len() {
            return Err(Error::InvalidSlot { slot, slots: self.dims.len() });
        }
        Ok(())
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join("x"))
    }
}

/// A square complex matrix tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: DMatrix<Complex64>,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch { rows: matrix.nrows(), cols: matrix.ncols(), dim });
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn from_parts(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        Self { space, matrix }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: DMatrix::zeros(d, d) }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: DMatrix::identity(d, d) }
    }

    pub fn from_diagonal(space: &HilbertSpace, diag: &[Complex64]) -> Result<Self> {
        let d = space.dim();
        if diag.len() != d {
            return Err(Error::ShapeMismatch { rows: diag.len(), cols: diag.len(), dim: d });
        }
        let matrix = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        Ok(Self { space: space.clone(), matrix })
    }

    pub fn from_fn(space: &HilbertSpace, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: DMatrix::from_fn(d, d, f) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * factor }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        if self.matrix.iter().all(|v| *v == ZERO) {
            return 0.0;
        }
        self.matrix.singular_values().max()
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                let d = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `max |U U^dag - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = smart_mul(&self.matrix, &self.matrix.adjoint());
        let id = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        (prod - id).iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    pub fn nnz(&self) -> usize {
        crate::sparse::count_nonzero(&self.matrix)
    }

    /// `max |A - B|`, panicking on a space mismatch.
    pub fn max_diff(&self, other: &Operator) -> f64 {
        self.assert_same_space(other);
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `Tr[A B]` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> Result<Complex64> {
        self.check_same_space(other)?;
        Ok(trace_of_product(&self.matrix, &other.matrix))
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other)?;
        Ok(&(self * other) - &(other * self))
    }

    pub(crate) fn check_same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.dims.clone(),
                right: other.space.dims.clone(),
            });
        }
        Ok(())
    }

    fn assert_same_space(&self, other: &Operator) {
        assert!(
            self.space == other.space,
            "operator spaces differ: {} vs {}",
            self.space,
            other.space
        );
    }
}

pub(crate) fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let (as_, bs) = (a.as_slice(), b.as_slice());
    let mut acc = ZERO;
    // Tr[AB] = sum_ij A_ij B_ji; both column-major.
    for j in 0..n {
        for i in 0..n {
            acc += as_[j * n + i] * bs[i * n + j];
        }
    }
    acc
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator::from_parts(self.space.clone(), &self.matrix + &rhs.matrix)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator::from_parts(self.space.clone(), &self.matrix - &rhs.matrix)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator::from_parts(self.space.clone(), smart_mul(&self.matrix, &rhs.matrix))
    }
}

impl Mul<Complex64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: Complex64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(c(rhs))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(c(-1.0))
    }
}

/// A Hermitian, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

impl DensityMatrix {
    /// Validates Hermiticity (1e-10) and unit trace (1e-8). Positivity is
    /// audited separately by [`DensityMatrix::min_eigenvalue`].
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:e})")));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(Self { op })
    }

    pub(crate) fn new_unchecked(op: Operator) -> Self {
        Self { op }
    }

    /// `|psi><psi|` after normalizing `psi`.
    pub fn pure(space: &HilbertSpace, amplitudes: &[Complex64]) -> Result<Self> {
        let d = space.dim();
        if amplitudes.len() != d {
            return Err(Error::ShapeMismatch { rows: amplitudes.len(), cols: 1, dim: d });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let psi = DVector::from_iterator(d, amplitudes.iter().map(|a| a / norm));
        let matrix = &psi * psi.adjoint();
        Ok(Self { op: Operator::from_parts(space.clone(), matrix) })
    }

    /// Projector onto a computational basis state.
    pub fn basis(space: &HilbertSpace, index: usize) -> Result<Self> {
        let d = space.dim();
        if index >= d {
            return Err(Error::InvalidState(format!("basis index {index} >= dimension {d}")));
        }
        let mut m = DMatrix::zeros(d, d);
        m[(index, index)] = ONE;
        Ok(Self { op: Operator::from_parts(space.clone(), m) })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn space(&self) -> &HilbertSpace {
        self.op.space()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        self.op.matrix()
    }

    pub fn trace_error(&self) -> f64 {
        (self.op.trace() - ONE).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.op.hermiticity_error()
    }

    /// Real diagonal (populations).
    pub fn populations(&self) -> Vec<f64> {
        self.op.matrix.diagonal().iter().map(|v| v.re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = hermitian_eigen(&self.op);
        vals.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self) -> bool {
        self.min_eigenvalue() >= -POSITIVITY_TOL
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(self.matrix(), self.matrix()).re
    }
}

/// Tensor product with the row-major index convention.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let space = a.space.tensor(&b.space);
    Operator::from_parts(space, a.matrix.kronecker(&b.matrix))
}

/// Embeds a single-slot operator into `space`, tensoring identities on every
/// other slot.
pub fn embed(x: &Operator, slot: usize, space: &HilbertSpace) -> Result<Operator> {
    space.check_slot(slot)?;
    if x.space.dims() != [space.dims[slot]] {
        return Err(Error::SpaceMismatch {
            left: x.space.dims.clone(),
            right: vec![space.dims[slot]],
        });
    }
    let before: usize = space.dims[..slot].iter().product();
    let after: usize = space.dims[slot + 1..].iter().product();
    let m = DMatrix::<Complex64>::identity(before, before)
        .kronecker(&x.matrix)
        .kronecker(&DMatrix::<Complex64>::identity(after, after));
    Ok(Operator::from_parts(space.clone(), m))
}

pub fn sigma_x() -> Operator {
    Operator::from_fn(&HilbertSpace::qubit(), |i, j| if i != j { ONE } else { ZERO })
}

pub fn sigma_y() -> Operator {
    // sigma_y = -i sigma_plus + i sigma_minus under (g, e) ordering
    Operator::from_fn(&HilbertSpace::qubit(), |i, j| match (i, j) {
        (1, 0) => -I,
        (0, 1) => I,
        _ => ZERO,
    })
}

pub fn sigma_z() -> Operator {
    Operator::from_fn(&HilbertSpace::qubit(), |i, j| match (i, j) {
        (0, 0) => c(-1.0),
        (1, 1) => ONE,
        _ => ZERO,
    })
}

/// `|e><g|`
pub fn sigma_plus() -> Operator {
    Operator::from_fn(&HilbertSpace::qubit(), |i, j| if (i, j) == (1, 0) { ONE } else { ZERO })
}

/// `|g><e|`
pub fn sigma_minus() -> Operator {
    sigma_plus().adjoint()
}

/// Annihilation operator on `n` Fock levels.
pub fn destroy(n: usize) -> Result<Operator> {
    let space = HilbertSpace::fock(n)?;
    Ok(Operator::from_fn(&space, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { ZERO }))
}

pub fn create(n: usize) -> Result<Operator> {
    Ok(destroy(n)?.adjoint())
}

pub fn number(n: usize) -> Result<Operator> {
    let space = HilbertSpace::fock(n)?;
    let diag: Vec<Complex64> = (0..n).map(|k| c(k as f64)).collect();
    Operator::from_diagonal(&space, &diag)
}

/// `D[c] rho = c rho c^dag - 1/2 {c^dag c, rho}`.
pub fn dissipator_apply(jump: &Operator, rho: &DensityMatrix) -> Result<Operator> {
    jump.check_same_space(rho.op())?;
    Ok(dissipator_raw(jump, rho.op()))
}

pub(crate) fn dissipator_raw(jump: &Operator, rho: &Operator) -> Operator {
    let cd = jump.adjoint();
    let cdc = &cd * jump;
    let sandwich = &(jump * rho) * &cd;
    let anti = &(&cdc * rho) + &(rho * &cdc);
    &sandwich - &anti.scale(c(0.5))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian operator.
///
/// Diagonal inputs skip the decomposition so large diagonal Hamiltonians
/// keep their computational-basis eigenvectors exactly.
pub fn hermitian_eigen(h: &Operator) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = h.dim();
    let off_diag = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .any(|(i, j)| i != j && h.matrix[(i, j)] != ZERO);
    if !off_diag {
        let vals: Vec<f64> = (0..n).map(|k| h.matrix[(k, k)].re).collect();
        return (vals, DMatrix::identity(n, n));
    }
    let herm = (&h.matrix + h.matrix.adjoint()) * c(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

fn from_eigen(space: &HilbertSpace, vecs: &DMatrix<Complex64>, weights: &[Complex64]) -> Operator {
    let n = weights.len();
    let mut scaled = vecs.clone();
    for (j, w) in weights.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= w;
        }
    }
    Operator::from_parts(space.clone(), smart_mul(&scaled, &vecs.adjoint()))
}

/// Gibbs state `exp(-h/T)/Z`. `T = 0` gives the uniform mixture over the
/// ground eigenspace and `T = f64::INFINITY` the maximally mixed state.
pub fn thermal_state(h: &Operator, temperature: f64) -> Result<DensityMatrix> {
    if temperature.is_nan() || temperature < 0.0 {
        return Err(Error::NegativeTemperature(temperature));
    }
    let herm = h.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let (vals, vecs) = hermitian_eigen(h);
    let e0 = vals[0];
    let weights: Vec<f64> = if temperature == f64::INFINITY {
        vec![1.0; vals.len()]
    } else if temperature == 0.0 {
        let scale = vals.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        vals.iter()
            .map(|&v| if v - e0 <= 1e-10 * scale { 1.0 } else { 0.0 })
            .collect()
    } else {
        vals.iter().map(|&v| (-(v - e0) / temperature).exp()).collect()
    };
    let z: f64 = weights.iter().sum();
    let weights: Vec<Complex64> = weights.iter().map(|w| c(w / z)).collect();
    let op = from_eigen(h.space(), &vecs, &weights);
    // Symmetrize away rounding from the back-transformation.
    let sym = (&op + &op.adjoint()).scale(c(0.5));
    Ok(DensityMatrix::new_unchecked(sym))
}

pub const COHERENT_TAIL_TOL: f64 = 1e-10;

/// Truncated, unnormalized coherent amplitudes `e^{-|a|^2/2} a^k / sqrt(k!)`
/// for `k < n_fock`.
pub fn coherent_amplitudes(alpha: Complex64, n_fock: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_fock);
    let mut amp = c((-alpha.norm_sqr() / 2.0).exp());
    for k in 0..n_fock {
        if k > 0 {
            amp *= alpha / (k as f64).sqrt();
        }
        out.push(amp);
    }
    out
}

/// Probability mass of the Poisson(|alpha|^2) distribution at or above
/// `n_fock`.
pub fn coherent_tail_mass(alpha: Complex64, n_fock: usize) -> f64 {
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        return if n_fock == 0 { 1.0 } else { 0.0 };
    }
    let ln_mean = mean.ln();
    let mut ln_p = -mean;
    let mut head = 0.0;
    for k in 0..n_fock {
        if k > 0 {
            ln_p += ln_mean - (k as f64).ln();
        }
        head += ln_p.exp();
    }
    (1.0 - head).max(0.0)
}

/// Coherent state `|alpha>` truncated to `n_fock` levels and renormalized.
pub fn coherent_state(alpha: Complex64, n_fock: usize) -> Result<DensityMatrix> {
    let tail = coherent_tail_mass(alpha, n_fock);
    if tail > COHERENT_TAIL_TOL {
        return Err(Error::TailMass { alpha: alpha.to_string(), tail, n_fock });
    }
    let space = HilbertSpace::fock(n_fock)?;
    DensityMatrix::pure(&space, &coherent_amplitudes(alpha, n_fock))
}

/// Reduced operator on the (sorted, distinct) `keep` slots.
pub fn partial_trace_keep(op: &Operator, keep: &[usize]) -> Result<Operator> {
    let space = op.space();
    for &k in keep {
        space.check_slot(k)?;
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| space.dims[k]).collect();
    let kept_space = HilbertSpace::new(kept_dims.clone())?;
    let dim = space.dim();
    // Map each full index to (kept index, traced index).
    let split: Vec<(usize, usize)> = (0..dim)
        .map(|i| {
            let mi = space.multi_index(i);
            let (mut kept, mut traced) = (0, 0);
            for (slot, &d) in space.dims.iter().enumerate() {
                if keep.contains(&slot) {
                    kept = kept * d + mi[slot];
                } else {
                    traced = traced * d + mi[slot];
                }
            }
            (kept, traced)
        })
        .collect();
    let kd = kept_space.dim();
    let mut out = DMatrix::zeros(kd, kd);
    for j in 0..dim {
        for i in 0..dim {
            if split[i].1 == split[j].1 {
                out[(split[i].0, split[j].0)] += op.matrix[(i, j)];
            }
        }
    }
    Ok(Operator::from_parts(kept_space, out))
}

/// Reduced state of one slot.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::new_unchecked(partial_trace_keep(rho.op(), &[keep])?))
}

/// `Tr[obs rho]`.
pub fn expectation(obs: &Operator, rho: &DensityMatrix) -> Result<Complex64> {
    obs.trace_product(rho.op())
}

/// `exp(scale * a)`.
///
/// Hermitian `a` with a purely real or purely imaginary `scale` goes through
/// the eigendecomposition, which keeps `exp(-i h t)` unitary to rounding.
/// Everything else uses Pade scaling-and-squaring.
pub fn matrix_exp(a: &Operator, scale: Complex64) -> Operator {
    if scale == ZERO {
        return Operator::identity(a.space());
    }
    let norm = a.max_abs().max(1.0);
    if (scale.re == 0.0 || scale.im == 0.0) && a.hermiticity_error() <= 1e-14 * norm {
        let (vals, vecs) = hermitian_eigen(a);
        let weights: Vec<Complex64> = vals.iter().map(|&v| (scale * v).exp()).collect();
        return from_eigen(a.space(), &vecs, &weights);
    }
    let m = &a.matrix * scale;
    Operator::from_parts(a.space.clone(), m.exp())
}
