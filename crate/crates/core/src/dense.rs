//! Small dense complex matrices on a handful of qubits.
//!
//! Registers are big-endian: qubit 0 is the most significant bit of a basis
//! index, so `kron(a, b)` places `a` on qubit 0.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pauli::{PauliLabel, StateLabel};
use crate::scalar::{cabs, cone, czero, Cx, Real};

pub type CMatrix<T> = DMatrix<Cx<T>>;
pub type CVector<T> = DVector<Cx<T>>;

pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

pub fn identity<T: Real>(dim: usize) -> CMatrix<T> {
    CMatrix::from_fn(dim, dim, |i, j| if i == j { cone() } else { czero() })
}

pub fn pauli<T: Real>(p: PauliLabel) -> CMatrix<T> {
    let m = p.matrix::<T>();
    CMatrix::from_fn(2, 2, |i, j| m[i][j])
}

/// Tensor product of single-qubit Paulis, qubit 0 first.
pub fn pauli_product<T: Real>(labels: &[PauliLabel]) -> CMatrix<T> {
    labels.iter().fold(identity(1), |acc, &p| kron(&acc, &pauli(p)))
}

pub fn state<T: Real>(s: StateLabel) -> CVector<T> {
    let v = s.vector::<T>();
    CVector::from_column_slice(&v)
}

/// Product state vector, qubit 0 first.
pub fn product_state<T: Real>(sites: &[StateLabel]) -> CVector<T> {
    let mut v = CVector::from_element(1, cone());
    for &s in sites {
        v = v.kronecker(&state(s));
    }
    v
}

pub fn projector<T: Real>(v: &CVector<T>) -> CMatrix<T> {
    v * v.adjoint()
}

/// Number of qubits for a `2^q x 2^q` matrix.
pub fn qubit_count<T: Real>(m: &CMatrix<T>) -> Result<usize> {
    let dim = m.nrows();
    if dim != m.ncols() || !dim.is_power_of_two() {
        return Err(Error::InvalidChannel(format!("matrix of shape {}x{} is not a qubit operator", m.nrows(), m.ncols())));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Max-abs deviation of `U^dag U` from the identity.
pub fn unitarity_defect<T: Real>(u: &CMatrix<T>) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &identity(u.nrows()))
}

pub fn check_unitary<T: Real>(u: &CMatrix<T>, tol: f64) -> Result<()> {
    let defect = unitarity_defect(u);
    if defect.is_finite() && defect <= tol {
        Ok(())
    } else {
        Err(Error::InvalidUnitary(defect))
    }
}

pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| cabs(*x - *y).as_f64()).fold(0.0, f64::max)
}

/// `sum_k K_k rho K_k^dag`.
pub fn apply_kraus<T: Real>(kraus: &[CMatrix<T>], rho: &CMatrix<T>) -> CMatrix<T> {
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    for k in kraus {
        out += k * rho * k.adjoint();
    }
    out
}

/// `sum_k K_k^dag K_k`.
pub fn kraus_completeness<T: Real>(kraus: &[CMatrix<T>]) -> CMatrix<T> {
    let dim = kraus.first().map_or(1, |k| k.ncols());
    let mut out = CMatrix::zeros(dim, dim);
    for k in kraus {
        out += k.adjoint() * k;
    }
    out
}

/// `<v| m |v>`.
pub fn expectation<T: Real>(v: &CVector<T>, m: &CMatrix<T>) -> Cx<T> {
    (v.adjoint() * m * v)[(0, 0)]
}

/// Matrix exponential of a real antisymmetric or otherwise small real matrix,
/// by scaling and squaring a Taylor series.
pub fn expm_real<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.abs()).fold(T::zero(), |m, x| if x > m { x } else { m }) * T::lit(n as f64);
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > T::lit(0.5) {
        scale *= T::lit(0.5);
        squarings += 1;
    }
    let x = a * scale;
    let mut term = DMatrix::<T>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &x * T::lit(1.0 / k as f64);
        sum += &term;
        if term.iter().all(|v| v.abs() <= T::default_epsilon()) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
