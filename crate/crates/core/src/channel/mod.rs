//! Error channels, their process matrices over the low-degree index set,
//! gate layers, and truncation bounds.
//!
//! Convention: `E(rho) = sum_{alpha beta} chi_{alpha beta} sigma_alpha rho sigma_beta`,
//! so with `E_k = sum_alpha e_{k alpha} sigma_alpha` one has
//! `chi_{alpha beta} = sum_k e_{k alpha} conj(e_{k beta})`.

mod bounds;
mod layer;
mod models;
mod process;

pub use bounds::{
    bitflip_exact_tail, bitflip_tail_bound, spurious_coupling_bound, SpuriousBound, TailBound,
};
pub use layer::GateLayer;
pub use models::{bitflip_product, correlated_xflip_channel, decaying_dephasing_channel, identity_channel, site_distance};
pub use process::ProcessMatrix;

use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;

use crate::dense::{identity, kraus_completeness, pauli_product, qubit_count, CMatrix};
use crate::error::{Error, Result};
use crate::pauli::{LowDegreeIndex, PauliLabel, PauliString, Phase};
use crate::scalar::{cabs, czero, tol, Cx, Real};

/// Largest register expanded densely by [`ChannelModel::to_dense_kraus`].
pub const MAX_DENSE_QUBITS: usize = 4;

#[derive(Clone, Debug)]
pub enum Representation<T: Real> {
    /// Dense Kraus operators on all `n` qubits.
    KrausList { n: usize, ops: Vec<CMatrix<T>> },
    /// Independent single-qubit channels, one Kraus list per qubit.
    SiteProduct { sites: Vec<Vec<CMatrix<T>>> },
    /// Independent channels on disjoint blocks of one or two qubits. Block
    /// operators act on the listed qubits in the listed order.
    BlockProduct { n: usize, blocks: Vec<(Vec<usize>, Vec<CMatrix<T>>)> },
    /// Kraus operators given by their Pauli coefficients `e_{k alpha}`.
    PauliKraus { n: usize, ops: Vec<Vec<(PauliString, Cx<T>)>> },
}

/// A channel together with the degree `d` assumed for its process matrix.
#[derive(Clone, Debug)]
pub struct ChannelModel<T: Real> {
    repr: Representation<T>,
    declared_degree: usize,
}

/// `chi` on `I_d` plus the Frobenius norm of everything outside it.
#[derive(Clone, Debug)]
pub struct ChiExpansion<T: Real> {
    pub chi: ProcessMatrix<T>,
    pub residual: T,
}

/// Exact truncation error of restricting `chi` to `I_d`, with the diagonal bound.
#[derive(Clone, Debug)]
pub struct TruncationReport<T: Real> {
    pub chi: ProcessMatrix<T>,
    /// `sqrt(sum_{alpha or beta outside I_d} |chi_{alpha beta}|^2)`.
    pub l2_error: T,
    /// `(sum_alpha chi_aa)^2 - (sum_{alpha in I_d} chi_aa)^2`, a bound on `l2_error^2`.
    pub diagonal_bound: T,
}

impl<T: Real> ChannelModel<T> {
    pub fn new(repr: Representation<T>, declared_degree: usize) -> Result<Self> {
        let model = ChannelModel { repr, declared_degree };
        if model.declared_degree > model.n() {
            return Err(Error::InvalidDegree { n: model.n(), d: model.declared_degree });
        }
        model.check_shapes()?;
        model.check_completeness()?;
        Ok(model)
    }

    pub fn kraus_list(ops: Vec<CMatrix<T>>, declared_degree: usize) -> Result<Self> {
        let n = ops.first().map(qubit_count).transpose()?.ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        Self::new(Representation::KrausList { n, ops }, declared_degree)
    }

    pub fn site_product(sites: Vec<Vec<CMatrix<T>>>, declared_degree: usize) -> Result<Self> {
        Self::new(Representation::SiteProduct { sites }, declared_degree)
    }

    pub fn representation(&self) -> &Representation<T> {
        &self.repr
    }

    pub fn declared_degree(&self) -> usize {
        self.declared_degree
    }

    pub fn with_degree(mut self, d: usize) -> Result<Self> {
        if d > self.n() {
            return Err(Error::InvalidDegree { n: self.n(), d });
        }
        self.declared_degree = d;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        match &self.repr {
            Representation::KrausList { n, .. }
            | Representation::BlockProduct { n, .. }
            | Representation::PauliKraus { n, .. } => *n,
            Representation::SiteProduct { sites } => sites.len(),
        }
    }

    fn check_shapes(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidChannel(msg));
        match &self.repr {
            Representation::KrausList { n, ops } => {
                if ops.is_empty() {
                    return bad("empty Kraus list".into());
                }
                for op in ops {
                    if op.nrows() != 1 << n || op.ncols() != 1 << n {
                        return bad(format!("Kraus operator of shape {}x{} on {n} qubits", op.nrows(), op.ncols()));
                    }
                }
            }
            Representation::SiteProduct { sites } => {
                for (i, ops) in sites.iter().enumerate() {
                    if ops.is_empty() || ops.iter().any(|k| k.nrows() != 2 || k.ncols() != 2) {
                        return bad(format!("site {i} needs a non-empty list of 2x2 Kraus operators"));
                    }
                }
            }
            Representation::BlockProduct { n, blocks } => {
                let mut seen = vec![false; *n];
                for (qubits, ops) in blocks {
                    if qubits.is_empty() || qubits.len() > 2 {
                        return bad(format!("block {qubits:?} must cover one or two qubits"));
                    }
                    for &q in qubits {
                        if q >= *n || seen[q] {
                            return bad(format!("block {qubits:?} overlaps or leaves the register"));
                        }
                        seen[q] = true;
                    }
                    let dim = 1 << qubits.len();
                    if ops.is_empty() || ops.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
                        return bad(format!("block {qubits:?} has malformed Kraus operators"));
                    }
                }
                if seen.iter().any(|s| !s) {
                    return bad("blocks must cover every qubit".into());
                }
            }
            Representation::PauliKraus { n, ops } => {
                if ops.iter().flatten().any(|(p, _)| p.n() != *n) {
                    return bad("Pauli coefficient on the wrong register size".into());
                }
            }
        }
        Ok(())
    }

    /// Largest eigenvalue of `sum_k E_k^dag E_k - 1` (per independent factor
    /// for product channels) and whether the map is trace preserving.
    fn completeness(&self) -> Result<(f64, f64)> {
        let excess = |m: &CMatrix<T>| -> (f64, f64) {
            let d = m - identity::<T>(m.nrows());
            let eig = SymmetricEigen::new(d.clone());
            let top = eig.eigenvalues.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
            let dev = d.iter().map(|v| cabs(*v).as_f64()).fold(0.0, f64::max);
            (top, dev)
        };
        let fold = |pieces: Vec<(f64, f64)>| {
            pieces.into_iter().fold((f64::NEG_INFINITY, 0.0f64), |(a, b), (c, d)| (a.max(c), b.max(d)))
        };
        Ok(match &self.repr {
            Representation::KrausList { ops, .. } => excess(&kraus_completeness(ops)),
            Representation::SiteProduct { sites } => fold(sites.iter().map(|s| excess(&kraus_completeness(s))).collect()),
            Representation::BlockProduct { blocks, .. } => {
                fold(blocks.iter().map(|(_, ops)| excess(&kraus_completeness(ops))).collect())
            }
            Representation::PauliKraus { n, ops } => {
                // spectral bound: identity part plus the coefficient mass elsewhere
                let sum = pauli_completeness(*n, ops);
                let mut top = -1.0f64;
                let mut dev = 0.0f64;
                for (p, v) in &sum {
                    if p.is_identity() {
                        top += v.re.as_f64();
                        dev = dev.max(cabs(*v - Cx::new(T::one(), T::zero())).as_f64());
                    } else {
                        top += cabs(*v).as_f64();
                        dev = dev.max(cabs(*v).as_f64());
                    }
                }
                (top, dev)
            }
        })
    }

    fn check_completeness(&self) -> Result<()> {
        let (top, _) = self.completeness()?;
        if top > tol::<T>(1e-10) {
            return Err(Error::InvalidChannel(format!("sum_k E_k^dag E_k exceeds the identity by {top:e}")));
        }
        Ok(())
    }

    /// `sum_k E_k^dag E_k = 1` to `1e-10`.
    pub fn is_trace_preserving(&self) -> bool {
        self.completeness().map(|(_, dev)| dev <= tol::<T>(1e-10)).unwrap_or(false)
    }

    /// Independent blocks (qubits, Kraus operators) for product
    /// representations; dense channels on at most two qubits form one block.
    pub fn blocks(&self) -> Result<Vec<(Vec<usize>, Vec<CMatrix<T>>)>> {
        match &self.repr {
            Representation::SiteProduct { sites } => Ok(sites.iter().enumerate().map(|(i, ops)| (vec![i], ops.clone())).collect()),
            Representation::BlockProduct { blocks, .. } => Ok(blocks.clone()),
            _ if self.n() <= 2 => Ok(vec![((0..self.n()).collect(), self.to_dense_kraus()?)]),
            _ => Err(Error::UnsupportedTopology(format!(
                "a correlated channel on {} qubits does not factor into blocks of at most two qubits",
                self.n()
            ))),
        }
    }

    /// Dense Kraus operators on the whole register.
    pub fn to_dense_kraus(&self) -> Result<Vec<CMatrix<T>>> {
        let n = self.n();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::UseFactorizedPath { n, max: MAX_DENSE_QUBITS });
        }
        match &self.repr {
            Representation::KrausList { ops, .. } => Ok(ops.clone()),
            Representation::PauliKraus { ops, .. } => Ok(ops
                .iter()
                .map(|terms| {
                    let mut m = CMatrix::zeros(1 << n, 1 << n);
                    for (p, c) in terms {
                        m += pauli_product::<T>(&p.to_dense()) * *c;
                    }
                    m
                })
                .collect()),
            _ => {
                let blocks = self.blocks()?;
                let all: Vec<usize> = (0..n).collect();
                let mut ops = vec![identity::<T>(1 << n)];
                for (qubits, kraus) in &blocks {
                    let embedded: Vec<CMatrix<T>> = kraus.iter().map(|k| embed_operator(k, qubits, &all)).collect();
                    ops = ops.iter().flat_map(|a| embedded.iter().map(move |b| b * a)).collect();
                }
                Ok(ops)
            }
        }
    }

    /// Per-block process matrices over all `4^q` block Pauli strings.
    fn block_chis(&self) -> Result<Vec<(Vec<usize>, CMatrix<T>)>> {
        Ok(self.blocks()?.into_iter().map(|(q, ops)| { let chi = dense_chi(&ops); (q, chi) }).collect())
    }

    /// Process matrix restricted to `I_d` and the norm of the remainder.
    pub fn chi_from_kraus(&self, d: usize) -> Result<ChiExpansion<T>> {
        let rep = self.truncate_chi(d)?;
        Ok(ChiExpansion { chi: rep.chi, residual: rep.l2_error })
    }

    /// `chi` on `I_d` with the exact truncation error and the diagonal bound.
    pub fn truncate_chi(&self, d: usize) -> Result<TruncationReport<T>> {
        let n = self.n();
        let index = LowDegreeIndex::new(n, d)?;
        match &self.repr {
            Representation::KrausList { .. } | Representation::PauliKraus { .. } => {
                let coeffs = self.pauli_coefficients()?;
                Ok(truncate_from_coefficients(index, &coeffs))
            }
            _ => {
                let blocks = self.block_chis()?;
                Ok(truncate_blocks(n, index, &blocks))
            }
        }
    }

    /// Sparse Pauli coefficients `e_{k alpha}` of each Kraus operator.
    fn pauli_coefficients(&self) -> Result<Vec<BTreeMap<PauliString, Cx<T>>>> {
        match &self.repr {
            Representation::PauliKraus { ops, .. } => Ok(ops
                .iter()
                .map(|terms| {
                    let mut m = BTreeMap::new();
                    for (p, c) in terms {
                        *m.entry(p.clone()).or_insert_with(czero) += *c;
                    }
                    m
                })
                .collect()),
            _ => {
                let n = self.n();
                let ops = self.to_dense_kraus()?;
                let strings: Vec<PauliString> = LowDegreeIndex::new(n, n)?.strings().to_vec();
                let mats: Vec<CMatrix<T>> = strings.iter().map(|p| pauli_product(&p.to_dense())).collect();
                let norm = T::lit(1.0 / (1u64 << n) as f64);
                Ok(ops
                    .iter()
                    .map(|k| {
                        strings
                            .iter()
                            .zip(&mats)
                            .map(|(p, m)| (p.clone(), (m * k).trace() * norm))
                            .filter(|(_, c)| cabs(*c) > T::zero())
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// `C = E o U`: the layer acts first, then this channel. The result is a
    /// block product whose blocks are the connected components of the
    /// channel's factors and the layer's supports.
    pub fn after_layer(&self, layer: &GateLayer<T>) -> Result<ChannelModel<T>> {
        let n = self.n();
        if layer.n() != n {
            return Err(Error::InvalidChannel(format!("layer on {} qubits, channel on {n}", layer.n())));
        }
        let channel_blocks = self.blocks()?;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        let mut join = |qs: &[usize]| {
            for w in qs.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        };
        for (qs, _) in &channel_blocks {
            join(qs);
        }
        for (qs, _) in layer.elements() {
            join(qs);
        }
        let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for q in 0..n {
            let root = find(&mut parent, q);
            comps.entry(root).or_default().push(q);
        }
        let mut blocks = Vec::new();
        for comp in comps.into_values() {
            if comp.len() > 2 {
                return Err(Error::UnsupportedTopology(format!(
                    "qubits {comp:?} are coupled into a block larger than two"
                )));
            }
            let dim = 1 << comp.len();
            let mut unitary = identity::<T>(dim);
            for (qs, u) in layer.elements() {
                if qs.iter().all(|q| comp.contains(q)) {
                    unitary = embed_operator(u, qs, &comp) * unitary;
                }
            }
            let mut ops = vec![identity::<T>(dim)];
            for (qs, kraus) in &channel_blocks {
                if qs.iter().all(|q| comp.contains(q)) {
                    let emb: Vec<CMatrix<T>> = kraus.iter().map(|k| embed_operator(k, qs, &comp)).collect();
                    ops = ops.iter().flat_map(|a| emb.iter().map(move |b| b * a)).collect();
                }
            }
            let ops = ops.into_iter().map(|k| k * &unitary).collect();
            blocks.push((comp, ops));
        }
        ChannelModel::new(Representation::BlockProduct { n, blocks }, self.declared_degree)
    }
}

/// Embeds `op` acting on `op_qubits` (in that order) into the register
/// `comp` (in that order), acting as the identity elsewhere.
pub fn embed_operator<T: Real>(op: &CMatrix<T>, op_qubits: &[usize], comp: &[usize]) -> CMatrix<T> {
    let c = comp.len();
    let pos: Vec<usize> = op_qubits.iter().map(|q| comp.iter().position(|x| x == q).expect("qubit in block")).collect();
    let bit = |idx: usize, p: usize| (idx >> (c - 1 - p)) & 1;
    let local = |idx: usize| pos.iter().fold(0, |acc, &p| (acc << 1) | bit(idx, p));
    let rest_mask: usize = (0..c).filter(|p| !pos.contains(p)).fold(0, |m, p| m | (1 << (c - 1 - p)));
    CMatrix::from_fn(1 << c, 1 << c, |i, j| {
        if i & rest_mask != j & rest_mask {
            czero()
        } else {
            op[(local(i), local(j))]
        }
    })
}

/// Full `4^q x 4^q` process matrix of a dense Kraus list. Block Pauli
/// strings are indexed in base 4 with the first qubit most significant.
pub fn dense_chi<T: Real>(ops: &[CMatrix<T>]) -> CMatrix<T> {
    let q = qubit_count(&ops[0]).expect("square Kraus operators");
    let count = 1 << (2 * q);
    let norm = T::lit(1.0 / (1u64 << q) as f64);
    let paulis: Vec<CMatrix<T>> = (0..count).map(|a| pauli_product(&base4_labels(q, a))).collect();
    let mut chi = CMatrix::zeros(count, count);
    for k in ops {
        let e: Vec<Cx<T>> = paulis.iter().map(|p| (p * k).trace() * norm).collect();
        for a in 0..count {
            for b in 0..count {
                chi[(a, b)] += e[a] * e[b].conj();
            }
        }
    }
    chi
}

pub(crate) fn base4_labels(q: usize, mut idx: usize) -> Vec<PauliLabel> {
    let mut out = vec![PauliLabel::I; q];
    for i in (0..q).rev() {
        out[i] = PauliLabel::from_index(idx % 4);
        idx /= 4;
    }
    out
}

/// Base-4 index of the labels of `p` on `qubits`.
pub(crate) fn block_label_index(p: &PauliString, qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |acc, &q| acc * 4 + p.get(q).index())
}

/// `sum_k E_k^dag E_k` in the Pauli basis.
fn pauli_completeness<T: Real>(n: usize, ops: &[Vec<(PauliString, Cx<T>)>]) -> BTreeMap<PauliString, Cx<T>> {
    let mut out: BTreeMap<PauliString, Cx<T>> = BTreeMap::new();
    out.insert(PauliString::identity(n), czero());
    for terms in ops {
        for (a, ca) in terms {
            for (b, cb) in terms {
                let (phase, p): (Phase, PauliString) = a.mul(b);
                *out.entry(p).or_insert_with(czero) += ca.conj() * *cb * phase.to_complex::<T>();
            }
        }
    }
    out
}

fn truncate_from_coefficients<T: Real>(index: LowDegreeIndex, coeffs: &[BTreeMap<PauliString, Cx<T>>]) -> TruncationReport<T> {
    let dim = index.len();
    let mut chi = CMatrix::zeros(dim, dim);
    let mut full: BTreeMap<(PauliString, PauliString), Cx<T>> = BTreeMap::new();
    let mut diag_total = T::zero();
    let mut diag_in = T::zero();
    for e in coeffs {
        for (a, ca) in e {
            diag_total += ca.norm_sqr();
            if let Some(i) = index.position(a) {
                diag_in += ca.norm_sqr();
                for (b, cb) in e {
                    if let Some(j) = index.position(b) {
                        chi[(i, j)] += *ca * cb.conj();
                    }
                }
            }
            for (b, cb) in e {
                if index.position(a).is_none() || index.position(b).is_none() {
                    *full.entry((a.clone(), b.clone())).or_insert_with(czero) += *ca * cb.conj();
                }
            }
        }
    }
    let outside: T = full.values().fold(T::zero(), |acc, v| acc + v.norm_sqr());
    let diag_out = (diag_total - diag_in).max(T::zero());
    TruncationReport {
        chi: ProcessMatrix::from_parts(index, chi),
        l2_error: outside.sqrt(),
        diagonal_bound: diag_out * (diag_total + diag_in),
    }
}

/// Product of per-block factors with some blocks replaced; tracks exact
/// zeros separately so replacing a zero factor stays well defined.
pub(crate) struct ZeroSafeProduct<T: Real> {
    factors: Vec<Cx<T>>,
    nonzero: Cx<T>,
    zeros: usize,
}

impl<T: Real> ZeroSafeProduct<T> {
    pub(crate) fn new(factors: Vec<Cx<T>>) -> Self {
        let mut nonzero = Cx::new(T::one(), T::zero());
        let mut zeros = 0;
        for f in &factors {
            if f.norm_sqr() == T::zero() {
                zeros += 1;
            } else {
                nonzero *= *f;
            }
        }
        ZeroSafeProduct { factors, nonzero, zeros }
    }

    /// Product over all blocks with `replaced[i] = (block, value)` substituted.
    pub(crate) fn with_replaced(&self, replaced: &[(usize, Cx<T>)]) -> Cx<T> {
        let mut zeros = self.zeros;
        let mut acc = self.nonzero;
        for &(b, v) in replaced {
            let f = self.factors[b];
            if f.norm_sqr() == T::zero() {
                zeros -= 1;
            } else {
                acc /= f;
            }
            acc *= v;
        }
        if zeros > 0 {
            czero()
        } else {
            acc
        }
    }
}

fn truncate_blocks<T: Real>(n: usize, index: LowDegreeIndex, blocks: &[(Vec<usize>, CMatrix<T>)]) -> TruncationReport<T> {
    let mut block_of = vec![0usize; n];
    for (b, (qs, _)) in blocks.iter().enumerate() {
        for &q in qs {
            block_of[q] = b;
        }
    }
    let base = ZeroSafeProduct::new(blocks.iter().map(|(_, chi)| chi[(0, 0)]).collect());
    let dim = index.len();
    let touched = |p: &PauliString| -> Vec<usize> {
        let mut v: Vec<usize> = p.support().map(|(q, _)| block_of[q]).collect();
        v.dedup();
        v
    };
    let touch: Vec<Vec<usize>> = index.strings().iter().map(touched).collect();
    let mut chi = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut bs = touch[i].clone();
            bs.extend(&touch[j]);
            bs.sort_unstable();
            bs.dedup();
            let (a, b) = (index.get(i), index.get(j));
            let replaced: Vec<(usize, Cx<T>)> = bs
                .iter()
                .map(|&k| {
                    let (qs, m) = &blocks[k];
                    (k, m[(block_label_index(a, qs), block_label_index(b, qs))])
                })
                .collect();
            chi[(i, j)] = base.with_replaced(&replaced);
        }
    }

    // weight generating functions: w2[a][b] sums |chi|^2 over pairs with
    // weights (a, b); wd[a] sums diagonal entries of weight a.
    let mut w2 = vec![vec![T::zero(); n + 1]; n + 1];
    w2[0][0] = T::one();
    let mut wd = vec![T::zero(); n + 1];
    wd[0] = T::one();
    let mut reach = 0;
    for (qs, m) in blocks {
        let q = qs.len();
        let mut local2 = vec![vec![T::zero(); q + 1]; q + 1];
        let mut locald = vec![T::zero(); q + 1];
        for a in 0..m.nrows() {
            let wa = weight_of_block_index(q, a);
            locald[wa] += m[(a, a)].re;
            for b in 0..m.ncols() {
                local2[wa][weight_of_block_index(q, b)] += m[(a, b)].norm_sqr();
            }
        }
        let mut next2 = vec![vec![T::zero(); n + 1]; n + 1];
        let mut nextd = vec![T::zero(); n + 1];
        for x in 0..=reach {
            nextd_add(&mut nextd, &wd, &locald, x);
            for y in 0..=reach {
                if w2[x][y] == T::zero() {
                    continue;
                }
                for (da, row) in local2.iter().enumerate() {
                    for (db, v) in row.iter().enumerate() {
                        next2[x + da][y + db] += w2[x][y] * *v;
                    }
                }
            }
        }
        reach += q;
        w2 = next2;
        wd = nextd;
    }
    let d = index.degree();
    let mut outside = T::zero();
    for (a, row) in w2.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if a > d || b > d {
                outside += *v;
            }
        }
    }
    let diag_in: T = wd[..=d].iter().fold(T::zero(), |a, b| a + *b);
    let diag_out: T = wd[d + 1..].iter().fold(T::zero(), |a, b| a + *b);
    TruncationReport {
        chi: ProcessMatrix::from_parts(index, chi),
        l2_error: outside.sqrt(),
        diagonal_bound: diag_out * (diag_out + diag_in + diag_in),
    }
}

fn nextd_add<T: Real>(next: &mut [T], cur: &[T], local: &[T], x: usize) {
    if cur[x] == T::zero() {
        return;
    }
    for (k, v) in local.iter().enumerate() {
        next[x + k] += cur[x] * *v;
    }
}

fn weight_of_block_index(q: usize, mut idx: usize) -> usize {
    let mut w = 0;
    for _ in 0..q {
        if idx % 4 != 0 {
            w += 1;
        }
        idx /= 4;
    }
    w
}

#[cfg(test)]
mod tests;
