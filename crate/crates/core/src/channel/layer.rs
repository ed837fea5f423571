use crate::dense::{check_unitary, qubit_count, CMatrix};
use crate::error::{Error, Result};
use crate::gates;
use crate::scalar::{tol, Real};

/// Gates on disjoint supports of one or two qubits, applied simultaneously.
#[derive(Clone, Debug)]
pub struct GateLayer<T: Real> {
    n: usize,
    elements: Vec<(Vec<usize>, CMatrix<T>)>,
}

impl<T: Real> GateLayer<T> {
    pub fn new(n: usize, elements: Vec<(Vec<usize>, CMatrix<T>)>) -> Result<Self> {
        let mut used = vec![false; n];
        for (support, u) in &elements {
            if support.is_empty() || support.len() > 2 {
                return Err(Error::UnsupportedTopology(format!("gate on {support:?}")));
            }
            let q = qubit_count(u)?;
            if q != support.len() {
                return Err(Error::ArityMismatch { expected: support.len(), found: q });
            }
            check_unitary(u, tol::<T>(1e-10))?;
            for &s in support {
                if s >= n || used[s] {
                    return Err(Error::UnsupportedTopology(format!("gate support {support:?} overlaps or leaves the register")));
                }
                used[s] = true;
            }
        }
        Ok(GateLayer { n, elements })
    }

    pub fn empty(n: usize) -> Self {
        GateLayer { n, elements: Vec::new() }
    }

    /// `u` on the pairs `(0,1), (2,3), ...`; a trailing odd qubit is idle.
    pub fn paired(n: usize, u: &CMatrix<T>) -> Result<Self> {
        Self::new(n, (0..n / 2).map(|k| (vec![2 * k, 2 * k + 1], u.clone())).collect())
    }

    pub fn iswap_layer(n: usize) -> Result<Self> {
        Self::paired(n, &gates::iswap())
    }

    /// A single gate on the central pair `(m, m+1)` with `m = floor((n-1)/2)`.
    pub fn single_centered(n: usize, u: &CMatrix<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedTopology(format!("no pair on {n} qubits")));
        }
        let m = ((n - 1) / 2).min(n - 2);
        Self::new(n, vec![(vec![m, m + 1], u.clone())])
    }

    /// `T (x) T` on every pair.
    pub fn t_layer(n: usize) -> Result<Self> {
        Self::paired(n, &gates::by_name("t*t")?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[(Vec<usize>, CMatrix<T>)] {
        &self.elements
    }

    /// The gate acting on qubit `q`, with its support.
    pub fn gate_on(&self, q: usize) -> Option<&(Vec<usize>, CMatrix<T>)> {
        self.elements.iter().find(|(s, _)| s.contains(&q))
    }
}
