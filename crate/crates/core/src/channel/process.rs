use std::io::{Read, Write};

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::pauli::{LowDegreeIndex, PauliString};
use crate::scalar::{cabs, czero, tol, Cx, Real};

/// Process matrix restricted to `I_d x I_d`; row and column `k` are
/// `index.get(k)`.
#[derive(Clone, Debug)]
pub struct ProcessMatrix<T: Real> {
    index: LowDegreeIndex,
    entries: CMatrix<T>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    alpha: String,
    beta: String,
    re: f64,
    im: f64,
}

impl<T: Real> ProcessMatrix<T> {
    pub(crate) fn from_parts(index: LowDegreeIndex, entries: CMatrix<T>) -> Self {
        ProcessMatrix { index, entries }
    }

    /// Wraps `entries` and checks it is Hermitian, positive semidefinite and
    /// has trace at most one.
    pub fn new(index: LowDegreeIndex, entries: CMatrix<T>) -> Result<Self> {
        if entries.nrows() != index.len() || entries.ncols() != index.len() {
            return Err(Error::ArityMismatch { expected: index.len(), found: entries.nrows() });
        }
        let m = ProcessMatrix { index, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn index(&self) -> &LowDegreeIndex {
        &self.index
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.index.n()
    }

    pub fn degree(&self) -> usize {
        self.index.degree()
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Cx<T> {
        self.entries[(i, j)]
    }

    /// `chi_{alpha beta}`; strings outside `I_d` read as zero.
    pub fn get(&self, alpha: &PauliString, beta: &PauliString) -> Cx<T> {
        match (self.index.position(alpha), self.index.position(beta)) {
            (Some(i), Some(j)) => self.entries[(i, j)],
            _ => czero(),
        }
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.entries[(i, i)].re)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = &self.entries - self.entries.adjoint();
        d.iter().map(|v| cabs(*v).as_f64()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Cx::new(T::lit(0.5), T::zero());
        SymmetricEigen::new(herm).eigenvalues.iter().map(|v| v.as_f64()).fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let t = tol::<T>(1e-10);
        let h = self.hermiticity_defect();
        if h > t {
            return Err(Error::InvalidChannel(format!("process matrix is not Hermitian (defect {h:e})")));
        }
        let m = self.min_eigenvalue();
        if m < -t {
            return Err(Error::InvalidChannel(format!("process matrix has eigenvalue {m:e}")));
        }
        let tr = self.trace().as_f64();
        if tr > 1.0 + t {
            return Err(Error::InvalidChannel(format!("process matrix trace {tr} exceeds one")));
        }
        Ok(())
    }

    /// Largest `|chi_ab| - (chi_aa + chi_bb) / 2`; non-positive for a
    /// positive semidefinite matrix.
    pub fn offdiagonal_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let avg = (self.entries[(i, i)].re + self.entries[(j, j)].re).as_f64() / 2.0;
                worst = worst.max(cabs(self.entries[(i, j)]).as_f64() - avg);
            }
        }
        worst
    }

    /// CSV with header `alpha,beta,re,im`; every entry of `I_d x I_d` is written.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let v = self.entries[(i, j)];
                out.serialize(Row {
                    alpha: self.index.get(i).to_string(),
                    beta: self.index.get(j).to_string(),
                    re: v.re.as_f64(),
                    im: v.im.as_f64(),
                })?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the CSV form; missing entries are zero. No validation is done
    /// beyond index membership.
    pub fn read_csv<R: Read>(n: usize, d: usize, r: R) -> Result<Self> {
        let index = LowDegreeIndex::new(n, d)?;
        let mut entries = CMatrix::zeros(index.len(), index.len());
        for row in csv::Reader::from_reader(r).deserialize::<Row>() {
            let row = row?;
            let a = PauliString::parse(n, &row.alpha)?;
            let b = PauliString::parse(n, &row.beta)?;
            let pos = |p: &PauliString, text: &str| {
                index.position(p).ok_or_else(|| Error::Parse { what: "process matrix index", input: text.to_string() })
            };
            let (i, j) = (pos(&a, &row.alpha)?, pos(&b, &row.beta)?);
            entries[(i, j)] = Cx::new(T::lit(row.re), T::lit(row.im));
        }
        Ok(ProcessMatrix { index, entries })
    }
}
