//! Frame functions `f`, their dual tables `g`, and the machinery that
//! produces variance-optimal duals.
//!
//! A table of arity `q` covers `q` qubits. Rows enumerate state pairs
//! `(r, s)` and columns enumerate Pauli label pairs `(gamma, delta)`:
//!
//! * arity 1: `row = 6 * r + s`, `col = 4 * gamma + delta`;
//! * arity 2: `row = 36 * pair(q0) + pair(q1)`, `col = 16 * label(q0) + label(q1)`
//!   with `pair = 6 * r + s` and `label = 4 * gamma + delta` per qubit.
//!
//! The arity-2 layout is therefore exactly the Kronecker product of two
//! arity-1 layouts.

mod io;
mod kernel;
mod minimize;
mod rotate;
mod shipped;

pub use io::{load_unitary, parse_unitary, FrameDocument};
pub use kernel::{left_kernel, KernelBasis};
pub use minimize::{
    minimize_frame, minimize_table, weight_from_f, weight_p_u, MinimizationResult, Minimizer, SolverKind,
};
pub use rotate::{build_f_rotated, dual_frame_expansion, rotated_frame, DualFrameExpansion};
pub use shipped::{rotated_minimized_frame, shipped_table, shipped_table_path, SHIPPED_GATES};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::pauli::{levi_civita, matrix_element, Basis, PauliLabel, StateLabel};
use crate::scalar::{cabs, cx, czero, Cx, Real};

pub const STATES: usize = 6;
pub const LABELS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    F,
    GShadow,
    GMin,
    GRotated,
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameKind::F => "f",
            FrameKind::GShadow => "g_shadow",
            FrameKind::GMin => "g_min",
            FrameKind::GRotated => "g_rotated",
        })
    }
}

impl std::str::FromStr for FrameKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" => Ok(FrameKind::F),
            "g_shadow" => Ok(FrameKind::GShadow),
            "g_min" => Ok(FrameKind::GMin),
            "g_rotated" => Ok(FrameKind::GRotated),
            _ => Err(Error::Parse { what: "frame kind", input: s.to_string() }),
        }
    }
}

/// Complex table over (state pair) x (Pauli label pair) on one or two qubits.
///
/// Stored column-major, so each `(gamma, delta)` entry is a contiguous
/// column of `36^arity` values.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTable<T: Real> {
    arity: usize,
    kind: FrameKind,
    unitary: Option<CMatrix<T>>,
    entries: CMatrix<T>,
}

pub const fn row_count(arity: usize) -> usize {
    36usize.pow(arity as u32)
}

pub const fn col_count(arity: usize) -> usize {
    16usize.pow(arity as u32)
}

/// Row of the state pair `(r, s)`, both given per qubit.
pub fn row_index(r: &[StateLabel], s: &[StateLabel]) -> usize {
    r.iter().zip(s).fold(0, |acc, (ri, si)| acc * 36 + ri.index() * 6 + si.index())
}

/// Row from per-block state indices `r = sum r_i 6^(q-1-i)` (qubit 0 most significant).
pub fn row_from_state_indices(arity: usize, r: usize, s: usize) -> usize {
    let mut row = 0;
    for i in (0..arity).rev() {
        let shift = 6usize.pow(i as u32);
        row = row * 36 + ((r / shift) % 6) * 6 + (s / shift) % 6;
    }
    row
}

/// Inverse of [`row_from_state_indices`].
pub fn state_indices_from_row(arity: usize, row: usize) -> (usize, usize) {
    let (mut r, mut s) = (0, 0);
    for i in (0..arity).rev() {
        let pair = (row / 36usize.pow(i as u32)) % 36;
        r = r * 6 + pair / 6;
        s = s * 6 + pair % 6;
    }
    (r, s)
}

/// Column of the label pair `(gamma, delta)`, both given per qubit.
pub fn col_index(gamma: &[PauliLabel], delta: &[PauliLabel]) -> usize {
    gamma.iter().zip(delta).fold(0, |acc, (g, d)| acc * 16 + g.index() * 4 + d.index())
}

/// Per-qubit `(gamma, delta)` labels of a column.
pub fn col_labels(arity: usize, col: usize) -> (Vec<PauliLabel>, Vec<PauliLabel>) {
    let mut gamma = Vec::with_capacity(arity);
    let mut delta = Vec::with_capacity(arity);
    for i in (0..arity).rev() {
        let l = (col / 16usize.pow(i as u32)) % 16;
        gamma.push(PauliLabel::from_index(l / 4));
        delta.push(PauliLabel::from_index(l % 4));
    }
    (gamma, delta)
}

/// Column holding `(delta, gamma)` for the column `(gamma, delta)`.
pub fn conjugate_col(arity: usize, col: usize) -> usize {
    let (g, d) = col_labels(arity, col);
    col_index(&d, &g)
}

impl<T: Real> FrameTable<T> {
    pub fn from_entries(arity: usize, kind: FrameKind, unitary: Option<CMatrix<T>>, entries: CMatrix<T>) -> Result<Self> {
        if !(1..=2).contains(&arity) {
            return Err(Error::ArityMismatch { expected: 2, found: arity });
        }
        if entries.nrows() != row_count(arity) || entries.ncols() != col_count(arity) {
            return Err(Error::ArityMismatch { expected: row_count(arity), found: entries.nrows() });
        }
        if let Some(u) = &unitary {
            if u.nrows() != 1 << arity {
                return Err(Error::ArityMismatch { expected: arity, found: u.nrows().trailing_zeros() as usize });
            }
        }
        Ok(FrameTable { arity, kind, unitary, entries })
    }

    fn from_fn(arity: usize, kind: FrameKind, f: impl Fn(usize, usize) -> Cx<T>) -> Self {
        let entries = CMatrix::from_fn(row_count(arity), col_count(arity), f);
        FrameTable { arity, kind, unitary: None, entries }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn unitary(&self) -> Option<&CMatrix<T>> {
        self.unitary.as_ref()
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Cx<T> {
        self.entries[(row, col)]
    }

    pub fn column(&self, col: usize) -> &[Cx<T>] {
        let n = self.rows();
        &self.entries.as_slice()[col * n..(col + 1) * n]
    }

    pub(crate) fn column_mut(&mut self, col: usize) -> &mut [Cx<T>] {
        let n = self.rows();
        &mut self.entries.as_mut_slice()[col * n..(col + 1) * n]
    }

    pub fn value(&self, r: &[StateLabel], s: &[StateLabel], gamma: &[PauliLabel], delta: &[PauliLabel]) -> Cx<T> {
        self.get(row_index(r, s), col_index(gamma, delta))
    }

    pub(crate) fn with_kind(mut self, kind: FrameKind, unitary: Option<CMatrix<T>>) -> Self {
        self.kind = kind;
        self.unitary = unitary;
        self
    }

    /// Kronecker product: `self` covers qubit 0, `other` qubit 1.
    pub fn tensor(&self, other: &FrameTable<T>) -> Result<FrameTable<T>> {
        if self.arity + other.arity > 2 {
            return Err(Error::ArityMismatch { expected: 2, found: self.arity + other.arity });
        }
        let kind = if self.kind == other.kind { self.kind } else { FrameKind::GMin };
        let unitary = match (&self.unitary, &other.unitary) {
            (None, None) => None,
            (a, b) => {
                let ua = a.clone().unwrap_or_else(|| crate::dense::identity(2));
                let ub = b.clone().unwrap_or_else(|| crate::dense::identity(2));
                Some(crate::dense::kron(&ua, &ub))
            }
        };
        Ok(FrameTable { arity: 2, kind, unitary, entries: self.entries.kronecker(&other.entries) })
    }

    /// Sets `g_{delta gamma} = conj(g_{gamma delta})` for every column.
    pub fn conjugate_completed(&self) -> Self {
        let mut out = self.clone();
        for col in 0..self.cols() {
            let partner = conjugate_col(self.arity, col);
            if partner > col {
                let src: Vec<Cx<T>> = self.column(col).iter().map(|v| v.conj()).collect();
                out.column_mut(partner).copy_from_slice(&src);
            }
        }
        out
    }

    /// The frame this table is a dual of: `f` for plain tables and the
    /// unitary-conjugated frame `F^U` for rotated ones.
    pub fn dual_target(&self) -> Result<FrameTable<T>> {
        match &self.unitary {
            Some(u) => build_f_rotated(u),
            None => Ok(build_f(self.arity)),
        }
    }

    /// Max-abs deviation of `sum_{r,s} g_{gamma delta} f_{alpha beta}` from
    /// `delta_{gamma alpha} delta_{delta beta}` over all index pairs.
    pub fn identity_error(&self) -> Result<f64> {
        inverse_identity_error(self, &self.dual_target()?)
    }

    /// Convenience lookup for single-qubit tables.
    pub fn at1(&self, gamma: PauliLabel, delta: PauliLabel, r: StateLabel, s: StateLabel) -> Cx<T> {
        debug_assert_eq!(self.arity, 1);
        self.get(r.index() * 6 + s.index(), gamma.index() * 4 + delta.index())
    }
}

/// `f_{alpha beta}(r, s) = 18^{-q} <r|sigma_alpha|s><s|sigma_beta|r>`.
pub fn build_f<T: Real>(arity: usize) -> FrameTable<T> {
    let one = FrameTable::from_fn(1, FrameKind::F, |row, col| {
        let (r, s) = (StateLabel::from_index(row / 6), StateLabel::from_index(row % 6));
        let (a, b) = (PauliLabel::from_index(col / 4), PauliLabel::from_index(col % 4));
        matrix_element::<T>(r, a, s) * matrix_element::<T>(s, b, r) * T::lit(1.0 / 18.0)
    });
    match arity {
        1 => one,
        _ => one.tensor(&one).expect("arity 2").with_kind(FrameKind::F, None),
    }
}

fn two_by_two_mul<T: Real>(a: &[[Cx<T>; 2]; 2], b: &[[Cx<T>; 2]; 2]) -> [[Cx<T>; 2]; 2] {
    let mut c = [[czero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `3|s><s| - 1`, the inverse of the single-qubit depolarizing map with
/// shrinking factor 1/3.
fn inverted_projector<T: Real>(s: StateLabel) -> [[Cx<T>; 2]; 2] {
    let v = s.vector::<T>();
    let mut m = [[czero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = v[i] * v[j].conj() * T::lit(3.0);
        }
        m[i][i] -= cx(1.0, 0.0);
    }
    m
}

/// Classical-shadow dual: `g_{gamma delta}(r, s) = Tr[sigma_delta D(s) sigma_gamma D(r)] / 2`
/// with `D(A) = 3A - 1`, the input state `s` carried by the Choi half that
/// the Paulis act on.
pub fn g_shadow<T: Real>() -> FrameTable<T> {
    FrameTable::from_fn(1, FrameKind::GShadow, |row, col| {
        let (r, s) = (StateLabel::from_index(row / 6), StateLabel::from_index(row % 6));
        let (g, d) = (PauliLabel::from_index(col / 4), PauliLabel::from_index(col % 4));
        let m: [[Cx<T>; 2]; 2] = two_by_two_mul(
            &two_by_two_mul(&two_by_two_mul(&d.matrix::<T>(), &inverted_projector(s)), &g.matrix::<T>()),
            &inverted_projector(r),
        );
        (m[0][0] + m[1][1]) * T::lit(0.5)
    })
}

fn sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

fn basis_label(b: Basis) -> PauliLabel {
    b.pauli()
}

/// Closed-form variance-optimal single-qubit dual (for the weight `f_00`).
pub fn g_min_closed_form<T: Real>() -> FrameTable<T> {
    FrameTable::from_fn(1, FrameKind::GMin, |row, col| {
        let (r, s) = (StateLabel::from_index(row / 6), StateLabel::from_index(row % 6));
        let (a, b) = (PauliLabel::from_index(col / 4), PauliLabel::from_index(col % 4));
        g_min_value(a, b, r, s)
    })
}

fn g_min_value<T: Real>(a: PauliLabel, b: PauliLabel, r: StateLabel, s: StateLabel) -> Cx<T> {
    let (br, bs) = (basis_label(r.basis()), basis_label(s.basis()));
    let (er, es) = (r.eigenbit(), s.eigenbit());
    let opposite = r == s.opposite();
    let kd = |x: PauliLabel, y: PauliLabel| if x == y { 1.0 } else { 0.0 };
    match (a.is_identity(), b.is_identity()) {
        (true, true) => cx(if opposite { -3.5 } else { 1.0 }, 0.0),
        _ if a == b => {
            if !opposite {
                czero()
            } else {
                // sign (-1)^{b(r) * a}: negative when the basis commutes with the label
                cx(if br == a { -4.5 } else { 4.5 }, 0.0)
            }
        }
        (false, false) => {
            let third = PauliLabel::NON_IDENTITY.into_iter().find(|&c| c != a && c != b).expect("three labels");
            if br == third && bs == third && er != es {
                cx(0.0, f64::from(levi_civita(a, b, third)) * sign(es) * 4.5)
            } else {
                let hits = kd(br, a) * kd(bs, b) + kd(br, b) * kd(bs, a);
                cx(sign(er) * sign(es) * 2.25 * hits, 0.0)
            }
        }
        (true, false) => {
            if br != b && bs != b {
                cx(0.0, f64::from(levi_civita(bs, br, b)) * sign(er) * sign(es) * 2.25)
            } else {
                let both = if br == b && bs == b { 0.5 } else { 1.0 };
                cx((sign(er) * 0.9 * kd(br, b) + sign(es) * 0.9 * kd(bs, b)) * both, 0.0)
            }
        }
        (false, true) => g_min_value::<T>(b, a, r, s).conj(),
    }
}

/// `g^min (x) g^min` on two qubits.
pub fn g_min_pair<T: Real>() -> FrameTable<T> {
    let g = g_min_closed_form::<T>();
    g.tensor(&g).expect("arity 2")
}

/// Max-abs deviation of `g^T f` from the identity over all `(gamma delta, alpha beta)`.
pub fn inverse_identity_error<T: Real>(g: &FrameTable<T>, f: &FrameTable<T>) -> Result<f64> {
    if g.arity != f.arity {
        return Err(Error::ArityMismatch { expected: g.arity, found: f.arity });
    }
    let prod = g.entries.transpose() * &f.entries;
    let mut err = 0.0f64;
    for (i, j) in (0..prod.nrows()).flat_map(|i| (0..prod.ncols()).map(move |j| (i, j))) {
        let target = if i == j { 1.0 } else { 0.0 };
        let v = prod[(i, j)];
        err = err.max((v.re.as_f64() - target).hypot(v.im.as_f64()));
    }
    Ok(err)
}

/// Result of the condition (i)/(ii) scan of a dual table against a frame.
#[derive(Clone, Debug)]
pub struct VarianceScan<T: Real> {
    /// `table[(gamma delta, alpha beta)] = sum_{r,s} |g_{gamma delta}|^2 f_{alpha beta}`.
    pub table: CMatrix<T>,
    /// Largest real-positive entry of `table`.
    pub c: T,
    /// Largest modulus among entries with `alpha != beta`.
    pub off_diagonal_max: T,
    /// `off_diagonal_max <= 1e-10`.
    pub condition_ii: bool,
}

/// Variance constant `C` and the full scan table of `g` against `f`.
pub fn variance_constant<T: Real>(g: &FrameTable<T>, f: &FrameTable<T>) -> Result<VarianceScan<T>> {
    if g.arity != f.arity {
        return Err(Error::ArityMismatch { expected: g.arity, found: f.arity });
    }
    let sq = g.entries.map(|v| cx::<T>(0.0, 0.0) + v.norm_sqr());
    let table = sq.transpose() * &f.entries;
    let tol = T::lit(1e-10);
    let mut c = T::zero();
    let mut off = T::zero();
    for gd in 0..table.nrows() {
        for ab in 0..table.ncols() {
            let v = table[(gd, ab)];
            let (alpha, beta) = col_labels(f.arity, ab);
            if alpha != beta {
                off = off.max(cabs(v));
            }
            if v.im.abs() <= tol && v.re > tol {
                c = c.max(v.re);
            }
        }
    }
    Ok(VarianceScan { table, c, off_diagonal_max: off, condition_ii: off <= tol })
}

pub(crate) fn to_real_split<T: Real>(col: &[Cx<T>]) -> (nalgebra::DVector<T>, nalgebra::DVector<T>) {
    (
        nalgebra::DVector::from_iterator(col.len(), col.iter().map(|v| v.re)),
        nalgebra::DVector::from_iterator(col.len(), col.iter().map(|v| v.im)),
    )
}
