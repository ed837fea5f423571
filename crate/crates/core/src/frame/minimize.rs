use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::kernel::{null_and_range, KernelBasis};
use super::{conjugate_col, row_count, to_real_split, FrameKind, FrameTable};
use crate::dense::{product_state, CMatrix};
use crate::error::{Error, Result};
use crate::pauli::StateLabel;
use crate::scalar::{Cx, Real};

const RANK_TOL: f64 = 1e-12;

/// Which linear-algebra route solves the weighted least-squares problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Minimum-norm solution through the pseudo-inverse of `W^{1/2} K^T`.
    Dense,
    /// Same solution through the `16^q`-dimensional complement space. The
    /// cost is dominated by a few small SVDs, so it is the default at arity 2.
    Reduced,
}

impl SolverKind {
    pub fn default_for(arity: usize) -> SolverKind {
        if arity == 1 {
            SolverKind::Dense
        } else {
            SolverKind::Reduced
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizationResult<T: Real> {
    pub entry: usize,
    /// Minimized column `g_init + K^T x`.
    pub column: Vec<Cx<T>>,
    /// Kernel coefficients.
    pub x: Vec<Cx<T>>,
    pub objective: T,
}

/// Prepared solver for one weight; each call to [`Minimizer::solve`]
/// minimizes `sum_{r,s} w(r,s) |g + K^T x|^2` over `x`.
///
/// `K`, `C` and `w` are real, so the real and imaginary parts of `g`
/// decouple into two identical real problems.
pub struct Minimizer<'k, T: Real> {
    kernel: &'k KernelBasis<T>,
    weight: Vec<T>,
    prepared: Prepared<T>,
}

enum Prepared<T: Real> {
    Dense {
        sqrt_w: DVector<T>,
        /// Pseudo-inverse of `diag(sqrt w) K^T`.
        pinv: DMatrix<T>,
    },
    Reduced {
        zero: Vec<usize>,
        pos: Vec<usize>,
        /// `h_P = q c`, `c = C^T g`.
        q: DMatrix<T>,
        /// Least-norm correction on zero-weight rows: `h_Z = g_Z + r (c - C_P^T h_P - C_Z^T g_Z)`.
        r: DMatrix<T>,
        c_pos_t: DMatrix<T>,
        c_zero_t: DMatrix<T>,
    },
}

fn check_weight<T: Real>(weight: &[T]) -> Result<()> {
    for (row, w) in weight.iter().enumerate() {
        if *w < T::zero() || !w.as_f64().is_finite() {
            return Err(Error::InvalidWeight { row, value: w.as_f64() });
        }
    }
    Ok(())
}

fn pinv<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.svd(true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let eps = smax * T::lit(RANK_TOL);
    svd.pseudo_inverse(eps).expect("u and v_t computed")
}

fn select_rows<T: Real>(m: &DMatrix<T>, rows: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

impl<'k, T: Real> Minimizer<'k, T> {
    pub fn new(kernel: &'k KernelBasis<T>, weight: &[T], solver: SolverKind) -> Result<Self> {
        check_weight(weight)?;
        let n = row_count(kernel.arity());
        if weight.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: weight.len() });
        }
        let prepared = match solver {
            SolverKind::Dense => {
                let sqrt_w = DVector::from_iterator(n, weight.iter().map(|w| w.sqrt()));
                let mut a = kernel.rows().transpose();
                for (i, mut row) in a.row_iter_mut().enumerate() {
                    row *= sqrt_w[i];
                }
                Prepared::Dense { sqrt_w, pinv: pinv(a) }
            }
            SolverKind::Reduced => prepare_reduced(kernel, weight),
        };
        Ok(Minimizer { kernel, weight: weight.to_vec(), prepared })
    }

    pub fn weight(&self) -> &[T] {
        &self.weight
    }

    pub fn objective(&self, column: &[Cx<T>]) -> T {
        column.iter().zip(&self.weight).fold(T::zero(), |acc, (v, w)| acc + v.norm_sqr() * *w)
    }

    /// Minimizes one column (`entry` is recorded in the result).
    pub fn solve(&self, g: &[Cx<T>], entry: usize) -> MinimizationResult<T> {
        let (re, im) = to_real_split(g);
        let k = self.kernel.rows();
        let (x_re, x_im) = match &self.prepared {
            Prepared::Dense { sqrt_w, pinv } => {
                let solve = |v: &DVector<T>| -(pinv * v.component_mul(sqrt_w));
                (solve(&re), solve(&im))
            }
            Prepared::Reduced { .. } => {
                let project = |v: &DVector<T>| k * (self.reduced_target(v) - v);
                (project(&re), project(&im))
            }
        };
        let h_re = &re + k.tr_mul(&x_re);
        let h_im = &im + k.tr_mul(&x_im);
        let column: Vec<Cx<T>> = h_re.iter().zip(h_im.iter()).map(|(&a, &b)| Cx::new(a, b)).collect();
        let x = x_re.iter().zip(x_im.iter()).map(|(&a, &b)| Cx::new(a, b)).collect();
        let objective = self.objective(&column);
        MinimizationResult { entry, column, x, objective }
    }

    fn reduced_target(&self, g: &DVector<T>) -> DVector<T> {
        let Prepared::Reduced { zero, pos, q, r, c_pos_t, c_zero_t } = &self.prepared else {
            unreachable!()
        };
        let c = self.kernel.colspace().transpose() * g;
        let h_pos = q * &c;
        let g_zero = DVector::from_iterator(zero.len(), zero.iter().map(|&i| g[i]));
        let rhs = &c - c_pos_t * &h_pos - c_zero_t * &g_zero;
        let h_zero = &g_zero + r * rhs;
        let mut h = DVector::zeros(g.len());
        for (k, &i) in pos.iter().enumerate() {
            h[i] = h_pos[k];
        }
        for (k, &i) in zero.iter().enumerate() {
            h[i] = h_zero[k];
        }
        h
    }
}

/// The feasible set is `{h : C^T h = C^T g}`. Projecting the constraint onto
/// the null space `L` of `C_Z` removes the zero-weight rows, leaving a
/// strictly convex problem in `h_P`; zero-weight rows then take the
/// least-norm change that restores feasibility.
fn prepare_reduced<T: Real>(kernel: &KernelBasis<T>, weight: &[T]) -> Prepared<T> {
    let c = kernel.colspace();
    let m = c.ncols();
    let wmax = weight.iter().fold(T::zero(), |a, &b| a.max(b));
    let cut = wmax * T::lit(RANK_TOL);
    let (pos, zero): (Vec<usize>, Vec<usize>) = (0..weight.len()).partition(|&i| wmax > T::zero() && weight[i] > cut);
    let c_pos = select_rows(c, &pos);
    let c_zero = select_rows(c, &zero);
    let (l, _) = null_and_range(&c_zero, RANK_TOL);
    let q = if pos.is_empty() || l.ncols() == 0 {
        DMatrix::zeros(pos.len(), m)
    } else {
        let b = l.transpose() * c_pos.transpose();
        let mut b_wi_t = b.transpose();
        for (k, mut row) in b_wi_t.row_iter_mut().enumerate() {
            row /= weight[pos[k]];
        }
        let mm = &b * &b_wi_t;
        b_wi_t * pinv(mm) * l.transpose()
    };
    let c_zero_t = c_zero.transpose();
    let r = pinv(c_zero_t.clone());
    Prepared::Reduced { zero, pos, q, r, c_pos_t: c_pos.transpose(), c_zero_t }
}

/// Variance-minimizing dual column for `entry`, default solver for the arity.
pub fn minimize_frame<T: Real>(
    g_init: &[Cx<T>],
    kernel: &KernelBasis<T>,
    weight: &[T],
    entry: usize,
) -> Result<MinimizationResult<T>> {
    let m = Minimizer::new(kernel, weight, SolverKind::default_for(kernel.arity()))?;
    if g_init.len() != m.weight.len() {
        return Err(Error::ArityMismatch { expected: m.weight.len(), found: g_init.len() });
    }
    Ok(m.solve(g_init, entry))
}

/// Minimizes every column of `table` under one weight. Columns are solved in
/// conjugate pairs: the `(delta, gamma)` column is the conjugate of the
/// `(gamma, delta)` result. Returns the table and per-column objectives.
pub fn minimize_table<T: Real>(
    table: &FrameTable<T>,
    kernel: &KernelBasis<T>,
    weight: &[T],
    solver: SolverKind,
) -> Result<(FrameTable<T>, Vec<T>)> {
    if table.arity() != kernel.arity() {
        return Err(Error::ArityMismatch { expected: kernel.arity(), found: table.arity() });
    }
    let m = Minimizer::new(kernel, weight, solver)?;
    let arity = table.arity();
    let lead: Vec<usize> = (0..table.cols()).filter(|&c| conjugate_col(arity, c) >= c).collect();
    let solved: Vec<MinimizationResult<T>> = lead.par_iter().map(|&c| m.solve(table.column(c), c)).collect();
    let kind = if table.kind() == FrameKind::GRotated { FrameKind::GRotated } else { FrameKind::GMin };
    let mut out = table.clone().with_kind(kind, table.unitary().cloned());
    let mut objectives = vec![T::zero(); table.cols()];
    for res in solved {
        let partner = conjugate_col(arity, res.entry);
        out.column_mut(res.entry).copy_from_slice(&res.column);
        objectives[res.entry] = res.objective;
        if partner != res.entry {
            let conj: Vec<Cx<T>> = res.column.iter().map(|v| v.conj()).collect();
            out.column_mut(partner).copy_from_slice(&conj);
            objectives[partner] = res.objective;
        }
    }
    Ok((out, objectives))
}

/// Real part of a column of `f` as a weight (e.g. `f_00`).
pub fn weight_from_f<T: Real>(f: &FrameTable<T>, col: usize) -> Result<Vec<T>> {
    if f.kind() != FrameKind::F {
        return Err(Error::InvalidFrameAssignment("weights come from f tables".into()));
    }
    let w: Vec<T> = f.column(col).iter().map(|v| v.re).collect();
    check_weight(&w)?;
    Ok(w)
}

/// `p_U(r, s) = 18^{-q} |<r|U|s>|^2` on frame rows.
pub fn weight_p_u<T: Real>(u: &CMatrix<T>) -> Result<Vec<T>> {
    crate::dense::check_unitary(u, 1e-10)?;
    let q = crate::dense::qubit_count(u)?;
    let n_states = 6usize.pow(q as u32);
    let vecs: Vec<_> = (0..n_states).map(|i| product_state::<T>(&digits(q, i))).collect();
    let norm = T::lit(18f64.powi(q as i32).recip());
    let mut w = vec![T::zero(); row_count(q)];
    for (s, vs) in vecs.iter().enumerate() {
        let us = u * vs;
        for (r, vr) in vecs.iter().enumerate() {
            let amp = vr.dotc(&us);
            w[super::row_from_state_indices(q, r, s)] = amp.norm_sqr() * norm;
        }
    }
    Ok(w)
}

/// Per-qubit state labels of a base-6 index (qubit 0 most significant).
pub(crate) fn digits(q: usize, mut idx: usize) -> Vec<StateLabel> {
    let mut out = vec![StateLabel::from_index(0); q];
    for i in (0..q).rev() {
        out[i] = StateLabel::from_index(idx % 6);
        idx /= 6;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{build_f, g_min_closed_form, g_shadow, left_kernel, variance_constant};
    use crate::gates;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn saturation_from_shadow() {
        let f = build_f::<f64>(1);
        let k = left_kernel(&f).unwrap();
        let w = weight_from_f(&f, 0).unwrap();
        let res = minimize_frame(g_shadow::<f64>().column(0), &k, &w, 0).unwrap();
        assert!((res.objective - 1.0).abs() < 1e-10);
    }

    #[test]
    fn solver_reproduces_closed_form() {
        let f = build_f::<f64>(1);
        let k = left_kernel(&f).unwrap();
        let w = weight_from_f(&f, 0).unwrap();
        let (g, obj) = minimize_table(&g_shadow::<f64>(), &k, &w, SolverKind::Dense).unwrap();
        let closed = g_min_closed_form::<f64>();
        let diff = (g.entries() - closed.entries()).map(|v| v.norm()).max();
        assert!(diff < 1e-10, "{diff}");
        assert!(g.identity_error().unwrap() < 1e-10);
        let expected = [1.0, 1.575, 1.575, 1.575, 1.575, 0.0, 1.125, 1.125];
        for (col, e) in [0, 1, 2, 3, 4, 5, 6, 7].into_iter().zip(expected) {
            assert!((obj[col] - e).abs() < 1e-10, "col {col}: {}", obj[col]);
        }
        let scan = variance_constant(&g, &f).unwrap();
        assert!((scan.c - 4.5).abs() < 1e-10);
    }

    #[test]
    fn zero_weight_returns_input() {
        let f = build_f::<f64>(1);
        let k = left_kernel(&f).unwrap();
        let g = g_shadow::<f64>();
        for solver in [SolverKind::Dense, SolverKind::Reduced] {
            let m = Minimizer::new(&k, &[0.0; 36], solver).unwrap();
            let res = m.solve(g.column(5), 5);
            assert_eq!(res.objective, 0.0);
            assert!(res.x.iter().all(|v| v.norm() < 1e-14));
        }
    }

    #[test]
    fn negative_weight_rejected() {
        let f = build_f::<f64>(1);
        let k = left_kernel(&f).unwrap();
        let mut w = weight_from_f(&f, 0).unwrap();
        w[3] = -1e-3;
        assert!(matches!(Minimizer::new(&k, &w, SolverKind::Dense), Err(Error::InvalidWeight { row: 3, .. })));
    }

    #[test]
    fn reduced_agrees_with_dense_on_random_weights() {
        let f = build_f::<f64>(1);
        let k = left_kernel(&f).unwrap();
        let g = g_shadow::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let w: Vec<f64> = (0..36).map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random() }).collect();
            let dense = Minimizer::new(&k, &w, SolverKind::Dense).unwrap();
            let reduced = Minimizer::new(&k, &w, SolverKind::Reduced).unwrap();
            for col in [0, 1, 6, 11] {
                let a = dense.solve(g.column(col), col);
                let b = reduced.solve(g.column(col), col);
                assert!((a.objective - b.objective).abs() < 1e-10);
                let d = a.column.iter().zip(&b.column).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                assert!(d < 1e-9, "{d}");
            }
        }
    }

    #[test]
    fn identity_weight_is_f00() {
        let w = weight_p_u(&crate::dense::identity::<f64>(2)).unwrap();
        let f = build_f::<f64>(1);
        for (a, b) in w.iter().zip(f.column(0)) {
            assert!((a - b.re).abs() < 1e-15);
        }
        let w2 = weight_p_u(&gates::iswap::<f64>()).unwrap();
        assert!((w2.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
