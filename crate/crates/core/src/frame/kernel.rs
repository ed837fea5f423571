use nalgebra::{DMatrix, SymmetricEigen};

use super::{row_count, FrameKind, FrameTable};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real orthonormal basis of the left null space of an `f` table.
///
/// `rows` is `k x 36^arity` with `rows * f = 0`; `colspace` is a
/// `36^arity x 16^arity` orthonormal basis of the complementary subspace, so
/// `[rows^T | colspace]` is an orthogonal matrix.
#[derive(Clone, Debug)]
pub struct KernelBasis<T: Real> {
    arity: usize,
    rows: DMatrix<T>,
    colspace: DMatrix<T>,
}

impl<T: Real> KernelBasis<T> {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.rows.nrows()
    }

    pub fn rows(&self) -> &DMatrix<T> {
        &self.rows
    }

    pub fn colspace(&self) -> &DMatrix<T> {
        &self.colspace
    }
}

/// Expected kernel dimension: 20 at arity 1, `36^2 - 16^2 = 1040` at arity 2.
pub const fn kernel_dim(arity: usize) -> usize {
    row_count(arity) - super::col_count(arity)
}

/// Orthonormal basis of the complement of the row space of `m`
/// (`m` has `cols` columns), found as the unit eigenspace of the projector
/// onto the orthogonal complement. Also returns the row-space basis.
pub(crate) fn null_and_range<T: Real>(m: &DMatrix<T>, rel_tol: f64) -> (DMatrix<T>, DMatrix<T>) {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return (DMatrix::identity(cols, cols), DMatrix::zeros(cols, 0));
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let tol = smax * T::lit(rel_tol);
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    let range = DMatrix::from_fn(cols, keep.len(), |i, j| v_t[(keep[j], i)]);
    let projector = DMatrix::<T>::identity(cols, cols) - &range * range.transpose();
    let eig = SymmetricEigen::new(projector);
    let pick: Vec<usize> = (0..cols).filter(|&i| eig.eigenvalues[i] > T::lit(0.5)).collect();
    let null = DMatrix::from_fn(cols, pick.len(), |i, j| eig.eigenvectors[(i, pick[j])]);
    (null, range)
}

/// Left kernel of `f` as a real-linear basis.
///
/// The real-linear left kernel of the complex `f` is the left kernel of the
/// stacked real matrix `[Re f | Im f]`. The arity-2 basis is assembled from
/// the arity-1 pieces as `K (x) K`, `K (x) C`, `C (x) K`.
pub fn left_kernel<T: Real>(f: &FrameTable<T>) -> Result<KernelBasis<T>> {
    if f.kind() != FrameKind::F {
        return Err(Error::InvalidFrameAssignment(format!("left kernel needs an f table, got {}", f.kind())));
    }
    let one = single_qubit_kernel::<T>()?;
    match f.arity() {
        1 => Ok(one),
        _ => {
            let (k, c) = (&one.rows, &one.colspace);
            let kt = k.transpose();
            let blocks = [kt.kronecker(&kt), kt.kronecker(c), c.kronecker(&kt)];
            let total: usize = blocks.iter().map(|b| b.ncols()).sum();
            let mut rows = DMatrix::zeros(total, row_count(2));
            let mut at = 0;
            for b in &blocks {
                rows.rows_mut(at, b.ncols()).copy_from(&b.transpose());
                at += b.ncols();
            }
            Ok(KernelBasis { arity: 2, rows, colspace: c.kronecker(c) })
        }
    }
}

fn single_qubit_kernel<T: Real>() -> Result<KernelBasis<T>> {
    let f = super::build_f::<T>(1);
    let e = f.entries();
    // columns of the stacked matrix are the real-linear functionals on rows
    let stacked = DMatrix::from_fn(32, 36, |i, j| if i < 16 { e[(j, i)].re } else { e[(j, i - 16)].im });
    let (null, range) = null_and_range(&stacked, 1e-12);
    if null.ncols() != kernel_dim(1) || range.ncols() != 16 {
        return Err(Error::NumericalDegeneracy(format!(
            "single-qubit frame has rank {} (expected 16)",
            range.ncols()
        )));
    }
    Ok(KernelBasis { arity: 1, rows: null.transpose(), colspace: range })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::build_f;

    fn annihilation(k: &KernelBasis<f64>, f: &FrameTable<f64>) -> f64 {
        let kc = k.rows().map(|v| num_complex::Complex64::new(v, 0.0));
        (kc * f.entries()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_qubit_kernel_has_twenty_rows() {
        let f = build_f::<f64>(1);
        let k = left_kernel(&f).unwrap();
        assert_eq!(k.dim(), 20);
        assert!(annihilation(&k, &f) < 1e-12);
        let gram = k.rows() * k.rows().transpose();
        assert!((gram - DMatrix::identity(20, 20)).abs().max() < 1e-12);
        let cross = k.rows() * k.colspace();
        assert!(cross.abs().max() < 1e-12);
    }

    #[test]
    fn kernel_rows_sum_to_zero_against_f00() {
        let f = build_f::<f64>(1);
        let k = left_kernel(&f).unwrap();
        for row in k.rows().row_iter() {
            let s: f64 = row.iter().zip(f.column(0)).map(|(a, b)| a * b.re).sum();
            assert!(s.abs() < 1e-13);
        }
    }

    #[test]
    fn two_qubit_kernel_has_1040_rows() {
        let f = build_f::<f64>(2);
        let k = left_kernel(&f).unwrap();
        assert_eq!(k.dim(), 1040);
        assert!(annihilation(&k, &f) < 1e-12);
        let gram = k.rows() * k.rows().transpose();
        assert!((gram - DMatrix::identity(1040, 1040)).abs().max() < 1e-12);
    }

    #[test]
    fn non_f_table_is_rejected() {
        let g = crate::frame::g_shadow::<f64>();
        assert!(left_kernel(&g).is_err());
    }
}
