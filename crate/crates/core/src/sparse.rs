//! Coordinate-list kernels for products of a mostly-zero operator with a
//! dense matrix.
//!
//! Operators stay dense everywhere in the public API. The ladder and
//! transition operators of the amplifier have O(dim) nonzeros, so the
//! master-equation right-hand side and frame maps go through these kernels
//! instead of O(dim^3) dense products.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Nonzero entries of a square matrix, stored as `(row, col, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

/// Fraction of nonzero entries below which the sparse kernels win.
pub(crate) const SPARSE_DENSITY: f64 = 0.15;

impl SparseOp {
    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "sparse kernels need square matrices");
        let dim = m.nrows();
        let mut entries = Vec::new();
        for j in 0..dim {
            for i in 0..dim {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|&(i, j, v)| (j, i, v.conj()))
            .collect();
        Self { dim: self.dim, entries }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// `out += coef * A * x`
    pub fn acc_left(&self, coef: Complex64, x: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let n = self.dim;
        debug_assert_eq!(x.nrows(), n);
        let cols = x.ncols();
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for &(i, k, v) in &self.entries {
            let cv = coef * v;
            for j in 0..cols {
                os[j * n + i] += cv * xs[j * n + k];
            }
        }
    }

    /// `out += coef * x * A`
    pub fn acc_right(&self, coef: Complex64, x: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let n = self.dim;
        let rows = x.nrows();
        debug_assert_eq!(x.ncols(), n);
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for &(k, j, v) in &self.entries {
            let cv = coef * v;
            let src = &xs[k * rows..(k + 1) * rows];
            let dst = &mut os[j * rows..(j + 1) * rows];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += cv * s;
            }
        }
    }

    /// `out += coef * x * A^dag`
    pub fn acc_right_adjoint(
        &self,
        coef: Complex64,
        x: &DMatrix<Complex64>,
        out: &mut DMatrix<Complex64>,
    ) {
        let rows = x.nrows();
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        // (A^dag)_{kj} = conj(A_{jk})
        for &(j, k, v) in &self.entries {
            let cv = coef * v.conj();
            let src = &xs[k * rows..(k + 1) * rows];
            let dst = &mut os[j * rows..(j + 1) * rows];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += cv * s;
            }
        }
    }

    pub fn mul_dense(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim, x.ncols());
        self.acc_left(Complex64::new(1.0, 0.0), x, &mut out);
        out
    }

    /// `A x A^dag`
    pub fn conjugate(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let ax = self.mul_dense(x);
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.acc_right_adjoint(one, &ax, &mut out);
        out
    }
}

/// Number of exactly-nonzero entries.
pub(crate) fn count_nonzero(m: &DMatrix<Complex64>) -> usize {
    m.iter().filter(|v| v.re != 0.0 || v.im != 0.0).count()
}

/// Dense product that routes through the sparse kernels when either side is
/// mostly zero.
pub(crate) fn smart_mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let total = (a.nrows() * a.ncols()).max(1) as f64;
    let a_nnz = count_nonzero(a) as f64;
    if a.nrows() == a.ncols() && a_nnz / total < SPARSE_DENSITY {
        return SparseOp::from_dense(a).mul_dense(b);
    }
    let b_nnz = count_nonzero(b) as f64;
    if b.nrows() == b.ncols() && b_nnz / total < SPARSE_DENSITY {
        let sb = SparseOp::from_dense(b);
        let mut out = DMatrix::zeros(a.nrows(), b.ncols());
        sb.acc_right(Complex64::new(1.0, 0.0), a, &mut out);
        return out;
    }
    a * b
}
