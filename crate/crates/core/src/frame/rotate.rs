use nalgebra::DMatrix;

use super::minimize::digits;
use super::{col_count, row_count, row_from_state_indices, FrameKind, FrameTable};
use crate::dense::{check_unitary, identity, kron, pauli_product, product_state, projector, qubit_count, CMatrix};
use crate::error::{Error, Result};
use crate::pauli::{PauliLabel, StateLabel};
use crate::scalar::{creal, czero, tol, Cx, Real};

/// Coefficients expanding `U^dag |s'><s'| U` over the product-state frame:
/// `sum_s u[s, s'] |s><s| = U^dag |s'><s'| U`.
///
/// Uses the canonical tensor-product dual `u[s, s'] = 3^{-q} Tr[(x)_i (3|s_i><s_i| - 1) U^dag|s'><s'|U]`,
/// which is always real.
#[derive(Clone, Debug)]
pub struct DualFrameExpansion<T: Real> {
    unitary: CMatrix<T>,
    qubits: usize,
    u: DMatrix<T>,
}

impl<T: Real> DualFrameExpansion<T> {
    pub fn unitary(&self) -> &CMatrix<T> {
        &self.unitary
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// `u[s, s']`, indices are base-6 state strings with qubit 0 most significant.
    pub fn coefficient(&self, s: usize, s_prime: usize) -> T {
        self.u[(s, s_prime)]
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.u
    }
}

fn inverted_projector<T: Real>(sites: &[StateLabel]) -> CMatrix<T> {
    sites.iter().fold(identity(1), |acc, &s| {
        let p = projector(&product_state::<T>(&[s])) * creal(T::lit(3.0)) - identity(2);
        kron(&acc, &p)
    })
}

pub fn dual_frame_expansion<T: Real>(unitary: &CMatrix<T>) -> Result<DualFrameExpansion<T>> {
    check_unitary(unitary, tol::<T>(1e-10))?;
    let q = qubit_count(unitary)?;
    if !(1..=2).contains(&q) {
        return Err(Error::ArityMismatch { expected: 2, found: q });
    }
    let n = 6usize.pow(q as u32);
    let d_ops: Vec<CMatrix<T>> = (0..n).map(|s| inverted_projector(&digits(q, s))).collect();
    let rotated: Vec<_> = (0..n).map(|sp| unitary.adjoint() * product_state::<T>(&digits(q, sp))).collect();
    let norm = T::lit(3f64.powi(q as i32).recip());
    let u = DMatrix::from_fn(n, n, |s, sp| {
        let v = &rotated[sp];
        (v.adjoint() * &d_ops[s] * v)[(0, 0)].re * norm
    });

    let frame: Vec<CMatrix<T>> = (0..n).map(|s| projector(&product_state::<T>(&digits(q, s)))).collect();
    let mut worst = 0.0f64;
    for (sp, v) in rotated.iter().enumerate() {
        let mut acc = CMatrix::<T>::zeros(1 << q, 1 << q);
        for (s, p) in frame.iter().enumerate() {
            acc += p * creal(u[(s, sp)]);
        }
        worst = worst.max(crate::dense::max_abs_diff(&acc, &projector(v)));
    }
    if worst > tol::<T>(1e-12) {
        return Err(Error::NumericalDegeneracy(format!("dual-frame reconstruction error {worst:e}")));
    }
    Ok(DualFrameExpansion { unitary: unitary.clone(), qubits: q, u })
}

/// `g^U_{alpha beta}(r, s) = sum_{s'} u[s, s'] g_{alpha beta}(r, s')`.
///
/// The result is a dual of the rotated frame [`build_f_rotated`], so that
/// averaging it over data from `E o U` returns the process matrix of `E`.
pub fn rotated_frame<T: Real>(unitary: &CMatrix<T>, g: &FrameTable<T>) -> Result<FrameTable<T>> {
    let exp = dual_frame_expansion(unitary)?;
    let q = exp.qubits;
    if g.arity() != q {
        return Err(Error::ArityMismatch { expected: q, found: g.arity() });
    }
    let n = 6usize.pow(q as u32);
    let cols = g.cols();
    let u = exp.u.map(creal);
    let mut out = CMatrix::<T>::zeros(row_count(q), cols);
    for r in 0..n {
        let gathered = CMatrix::from_fn(n, cols, |sp, c| g.get(row_from_state_indices(q, r, sp), c));
        let mixed = &u * gathered;
        for s in 0..n {
            let row = row_from_state_indices(q, r, s);
            out.row_mut(row).copy_from(&mixed.row(s));
        }
    }
    FrameTable::from_entries(q, FrameKind::GRotated, Some(unitary.clone()), out)
}

/// `F^U_{alpha beta}(r, s) = 18^{-q} <r|sigma_alpha U|s><s|U^dag sigma_beta|r>`;
/// equals `f` when `U` is the identity.
pub fn build_f_rotated<T: Real>(unitary: &CMatrix<T>) -> Result<FrameTable<T>> {
    check_unitary(unitary, tol::<T>(1e-10))?;
    let q = qubit_count(unitary)?;
    if !(1..=2).contains(&q) {
        return Err(Error::ArityMismatch { expected: 2, found: q });
    }
    let n = 6usize.pow(q as u32);
    let n_labels = 4usize.pow(q as u32);
    let states: Vec<_> = (0..n).map(|i| product_state::<T>(&digits(q, i))).collect();
    // amp[a][(r, s)] = <r| sigma_a U |s>
    let amp: Vec<Vec<Cx<T>>> = (0..n_labels)
        .map(|a| {
            let op = pauli_product::<T>(&label_digits(q, a)) * unitary;
            let mut v = vec![czero(); n * n];
            for (s, vs) in states.iter().enumerate() {
                let w = &op * vs;
                for (r, vr) in states.iter().enumerate() {
                    v[r * n + s] = vr.dotc(&w);
                }
            }
            v
        })
        .collect();
    let norm = T::lit(18f64.powi(q as i32).recip());
    let mut entries = CMatrix::<T>::zeros(row_count(q), col_count(q));
    for col in 0..col_count(q) {
        let (a, b) = split_label_col(q, col);
        for r in 0..n {
            for s in 0..n {
                let v = amp[a][r * n + s] * amp[b][r * n + s].conj() * norm;
                entries[(row_from_state_indices(q, r, s), col)] = v;
            }
        }
    }
    FrameTable::from_entries(q, FrameKind::F, Some(unitary.clone()), entries)
}

fn label_digits(q: usize, mut idx: usize) -> Vec<PauliLabel> {
    let mut out = vec![PauliLabel::I; q];
    for i in (0..q).rev() {
        out[i] = PauliLabel::from_index(idx % 4);
        idx /= 4;
    }
    out
}

/// Column -> (alpha string index, beta string index), base 4 per qubit.
fn split_label_col(q: usize, col: usize) -> (usize, usize) {
    let (mut a, mut b) = (0, 0);
    for i in (0..q).rev() {
        let l = (col / 16usize.pow(i as u32)) % 16;
        a = a * 4 + l / 4;
        b = b * 4 + l % 4;
    }
    (a, b)
}
