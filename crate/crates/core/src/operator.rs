//! Dense square complex operators on a truncated Hilbert space `C^d`.

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{LabError, Result};

pub type C64 = Complex64;

/// Default bound on `‖u†u − I‖` accepted by [`Unitary::new`].
pub const DEFAULT_UNITARY_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dim={}){}", self.dim(), self.m)
    }
}

impl Operator {
    /// Wraps a matrix, rejecting non-square shapes and non-finite entries.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(LabError::Shape { rows: m.nrows(), cols: m.ncols() });
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(LabError::NonFinite(format!("{z}"), (i, j)));
                }
            }
        }
        Ok(Operator { m })
    }

    /// Builds a `dim × dim` operator from row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(LabError::Shape { rows: dim, cols: entries.len() / dim.max(1) });
        }
        Operator::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Builds an operator from real row-major entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(LabError::Shape { rows: dim, cols: row.len() });
            }
            entries.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Operator::from_row_slice(dim, &entries)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert!(m.nrows() == m.ncols());
        Operator { m }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { m: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator { m: DMatrix::zeros(dim, dim) }
    }

    pub fn scalar(dim: usize, c: C64) -> Self {
        Operator { m: DMatrix::from_diagonal_element(dim, dim, c) }
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        let dim = entries.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        Operator::new(m)
    }

    /// The matrix unit `E_{rs}` (a single 1 at row `r`, column `s`).
    pub fn matrix_unit(dim: usize, r: usize, s: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(r, s)] = ONE;
        Operator { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator { m: self.m.adjoint() }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator { m: &self.m * c }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// `self^k` by repeated squaring; `k = 0` gives the identity.
    pub fn pow(&self, mut k: u32) -> Operator {
        let mut acc = Operator::identity(self.dim());
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Kronecker product `self ⊗ other`, acting on `C^{d} ⊗ C^{m}`.
    pub fn kron(&self, other: &Operator) -> Operator {
        Operator { m: self.m.kronecker(&other.m) }
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        // nalgebra's default SVD iterates without bound and can stall on
        // residual-sized entries, so scale first and cap the sweeps
        let a = self.m.unscale(scale);
        let cap = 100 * self.dim().max(10);
        if let Some(svd) = a.clone().try_svd(false, false, f64::EPSILON, cap) {
            return scale * svd.singular_values.iter().cloned().fold(0.0, f64::max);
        }
        let gram = a.adjoint() * &a;
        if let Some(e) = gram.try_symmetric_eigen(f64::EPSILON, cap) {
            return scale * e.eigenvalues.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt();
        }
        // upper bound
        scale * a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus; cheap exactness checks use this.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Operator-norm distance `‖self − other‖`.
    pub fn distance(&self, other: &Operator) -> Result<f64> {
        ensure_same_dim(self, other)?;
        Ok((self - other).operator_norm())
    }

    /// `‖self·other − other·self‖`.
    pub fn commutator_norm(&self, other: &Operator) -> Result<f64> {
        ensure_same_dim(self, other)?;
        Ok((&(self * other) - &(other * self)).operator_norm())
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|z| *z == ZERO)
    }
}

/// Operator norm: largest singular value.
pub fn operator_norm(a: &Operator) -> f64 {
    a.operator_norm()
}

/// Hilbert–Schmidt inner product `trace(a† b)`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    ensure_same_dim(a, b)?;
    Ok(hs_inner_unchecked(a, b))
}

pub(crate) fn hs_inner_unchecked(a: &Operator, b: &Operator) -> C64 {
    a.m.iter().zip(b.m.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn ensure_same_dim(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(LabError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Operator> for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
                Operator { m: &self.m $op &rhs.m }
            }
        }
        impl $trait<Operator> for Operator {
            type Output = Operator;
            fn $method(self, rhs: Operator) -> Operator {
                &self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { m: -&self.m }
    }
}

/// An operator certified unitary up to a tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    op: Operator,
    defect: f64,
}

impl Unitary {
    /// Accepts `op` when `‖op†op − I‖ ≤ 1e-10`.
    pub fn new(op: Operator) -> Result<Self> {
        Unitary::with_tolerance(op, DEFAULT_UNITARY_TOL)
    }

    pub fn with_tolerance(op: Operator, tol: f64) -> Result<Self> {
        let defect = unitarity_defect(&op);
        if !(defect <= tol) {
            return Err(LabError::NotUnitary { defect, tol });
        }
        Ok(Unitary { op, defect })
    }

    pub fn identity(dim: usize) -> Self {
        Unitary { op: Operator::identity(dim), defect: 0.0 }
    }

    /// Measured `‖op†op − I‖`.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary { op: self.op.adjoint(), defect: self.defect }
    }
}

impl Deref for Unitary {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.op
    }
}

pub fn unitarity_defect(op: &Operator) -> f64 {
    let gram = &op.adjoint() * op;
    (&gram - &Operator::identity(op.dim())).operator_norm()
}

/// `e^{2πi j/q}`, exact at quarter turns so that clock matrices built from it
/// keep integer entries where possible.
pub fn root_of_unity(j: i64, q: u64) -> C64 {
    assert!(q > 0, "root_of_unity needs q >= 1");
    let q = q as i64;
    let r = j.rem_euclid(q);
    if (4 * r) % q == 0 {
        return match 4 * r / q {
            0 => ONE,
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, std::f64::consts::TAU * r as f64 / q as f64)
}
