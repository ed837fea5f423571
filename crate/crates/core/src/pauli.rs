//! Pauli labels and strings, the six single-qubit Pauli eigenstates, and the
//! low-degree index set that labels process-matrix rows and columns.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{cx, czero, Cx, Real};

/// Single-qubit Pauli operator; `I` is the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliLabel {
    I,
    X,
    Y,
    Z,
}

impl PauliLabel {
    pub const ALL: [PauliLabel; 4] = [PauliLabel::I, PauliLabel::X, PauliLabel::Y, PauliLabel::Z];
    pub const NON_IDENTITY: [PauliLabel; 3] = [PauliLabel::X, PauliLabel::Y, PauliLabel::Z];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> PauliLabel {
        Self::ALL[i]
    }

    #[inline]
    pub fn is_identity(self) -> bool {
        self == PauliLabel::I
    }

    /// 2x2 matrix, row-major.
    pub fn matrix<T: Real>(self) -> [[Cx<T>; 2]; 2] {
        let z = czero::<T>();
        match self {
            PauliLabel::I => [[cx(1.0, 0.0), z], [z, cx(1.0, 0.0)]],
            PauliLabel::X => [[z, cx(1.0, 0.0)], [cx(1.0, 0.0), z]],
            PauliLabel::Y => [[z, cx(0.0, -1.0)], [cx(0.0, 1.0), z]],
            PauliLabel::Z => [[cx(1.0, 0.0), z], [z, cx(-1.0, 0.0)]],
        }
    }

    pub fn commutes_with(self, other: PauliLabel) -> bool {
        self.is_identity() || other.is_identity() || self == other
    }

    /// The `star` operation on Pauli labels: 0 if they commute, 1 otherwise.
    pub fn star(self, other: PauliLabel) -> u8 {
        u8::from(!self.commutes_with(other))
    }

    pub fn letter(self) -> char {
        match self {
            PauliLabel::I => 'I',
            PauliLabel::X => 'X',
            PauliLabel::Y => 'Y',
            PauliLabel::Z => 'Z',
        }
    }
}

/// Levi-Civita symbol over non-identity labels (x, y, z) = (1, 2, 3).
/// Returns 0 whenever an argument is the identity or two arguments coincide.
pub fn levi_civita(a: PauliLabel, b: PauliLabel, c: PauliLabel) -> i8 {
    use PauliLabel::*;
    match (a, b, c) {
        (X, Y, Z) | (Y, Z, X) | (Z, X, Y) => 1,
        (X, Z, Y) | (Z, Y, X) | (Y, X, Z) => -1,
        _ => 0,
    }
}

/// Unit phase from the Pauli group, {1, i, -1, -i}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    /// Power of `i` in `0..4`.
    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex<T: Real>(self) -> Cx<T> {
        match self.0 {
            0 => cx(1.0, 0.0),
            1 => cx(0.0, 1.0),
            2 => cx(-1.0, 0.0),
            _ => cx(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// `sigma_a sigma_b = phase * sigma_c`.
pub fn pauli_mul(a: PauliLabel, b: PauliLabel) -> (Phase, PauliLabel) {
    use PauliLabel::*;
    match (a, b) {
        (I, p) | (p, I) => (Phase::ONE, p),
        (p, q) if p == q => (Phase::ONE, I),
        (X, Y) => (Phase::I, Z),
        (Y, X) => (Phase::MINUS_I, Z),
        (Y, Z) => (Phase::I, X),
        (Z, Y) => (Phase::MINUS_I, X),
        (Z, X) => (Phase::I, Y),
        (X, Z) => (Phase::MINUS_I, Y),
        _ => unreachable!(),
    }
}

/// Measurement/preparation basis of a single-qubit Pauli eigenstate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn pauli(self) -> PauliLabel {
        match self {
            Basis::X => PauliLabel::X,
            Basis::Y => PauliLabel::Y,
            Basis::Z => PauliLabel::Z,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn letter(self) -> char {
        match self {
            Basis::X => 'x',
            Basis::Y => 'y',
            Basis::Z => 'z',
        }
    }
}

/// One of the six single-qubit Pauli eigenstates.
///
/// The state is the eigenvector of `sigma_basis` with eigenvalue
/// `(-1)^eigenbit`. Vectors use the fixed phase convention
/// `|0>, |1>` computational, `|+-> = (|0> +- |1>)/sqrt2` and
/// `|+-i> = (|0> +- i|1>)/sqrt2`.
///
/// The dense index used by every table is `2 * basis + eigenbit`, i.e. the
/// order `|+>, |->, |i>, |-i>, |0>, |1>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateLabel {
    basis: Basis,
    eigenbit: u8,
}

impl StateLabel {
    pub const COUNT: usize = 6;

    pub fn new(basis: Basis, eigenbit: u8) -> StateLabel {
        assert!(eigenbit < 2, "eigenbit must be 0 or 1");
        StateLabel { basis, eigenbit }
    }

    pub fn all() -> impl Iterator<Item = StateLabel> {
        (0..Self::COUNT).map(StateLabel::from_index)
    }

    #[inline]
    pub fn from_index(i: usize) -> StateLabel {
        StateLabel { basis: Basis::ALL[i / 2], eigenbit: (i % 2) as u8 }
    }

    #[inline]
    pub fn index(self) -> usize {
        2 * self.basis.index() + self.eigenbit as usize
    }

    pub fn basis(self) -> Basis {
        self.basis
    }

    pub fn eigenbit(self) -> u8 {
        self.eigenbit
    }

    /// Same basis, opposite eigenstate.
    pub fn opposite(self) -> StateLabel {
        StateLabel { basis: self.basis, eigenbit: 1 - self.eigenbit }
    }

    pub fn vector<T: Real>(self) -> [Cx<T>; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if self.eigenbit == 0 { 1.0 } else { -1.0 };
        match self.basis {
            Basis::Z if self.eigenbit == 0 => [cx(1.0, 0.0), czero()],
            Basis::Z => [czero(), cx(1.0, 0.0)],
            Basis::X => [cx(h, 0.0), cx(sign * h, 0.0)],
            Basis::Y => [cx(h, 0.0), cx(0.0, sign * h)],
        }
    }

    /// Two-character code, basis letter followed by the eigenbit (`z0`, `x1`, ...).
    pub fn code(self) -> String {
        format!("{}{}", self.basis.letter(), self.eigenbit)
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match (self.basis, self.eigenbit) {
            (Basis::X, 0) => "|+>",
            (Basis::X, _) => "|->",
            (Basis::Y, 0) => "|i>",
            (Basis::Y, _) => "|-i>",
            (Basis::Z, 0) => "|0>",
            (Basis::Z, _) => "|1>",
        };
        f.write_str(s)
    }
}

/// `<r|s>` under the fixed phase convention of [`StateLabel::vector`].
pub fn overlap<T: Real>(r: StateLabel, s: StateLabel) -> Cx<T> {
    let a = r.vector::<T>();
    let b = s.vector::<T>();
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// `<r| sigma |s>`.
pub fn matrix_element<T: Real>(r: StateLabel, p: PauliLabel, s: StateLabel) -> Cx<T> {
    let a = r.vector::<T>();
    let b = s.vector::<T>();
    let m = p.matrix::<T>();
    let mb = [m[0][0] * b[0] + m[0][1] * b[1], m[1][0] * b[0] + m[1][1] * b[1]];
    a[0].conj() * mb[0] + a[1].conj() * mb[1]
}

/// Product state over `n` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateString {
    sites: Vec<StateLabel>,
}

impl StateString {
    pub fn new(sites: Vec<StateLabel>) -> StateString {
        StateString { sites }
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[StateLabel] {
        &self.sites
    }

    pub fn site(&self, q: usize) -> StateLabel {
        self.sites[q]
    }

    /// Concatenated per-qubit codes, e.g. `z0x1`.
    pub fn codes(&self) -> String {
        self.sites.iter().map(|s| s.code()).collect()
    }

    pub fn parse_codes(text: &str) -> Result<StateString> {
        let err = || Error::Parse { what: "state string", input: text.to_string() };
        let bytes = text.trim().as_bytes();
        if bytes.len() % 2 != 0 {
            return Err(err());
        }
        let mut sites = Vec::with_capacity(bytes.len() / 2);
        for chunk in bytes.chunks(2) {
            let basis = match chunk[0] {
                b'x' => Basis::X,
                b'y' => Basis::Y,
                b'z' => Basis::Z,
                _ => return Err(err()),
            };
            let bit = match chunk[1] {
                b'0' => 0,
                b'1' => 1,
                _ => return Err(err()),
            };
            sites.push(StateLabel::new(basis, bit));
        }
        Ok(StateString { sites })
    }
}

/// Pauli string on `n` qubits stored sparsely by its support.
///
/// Text form: label letter followed by the zero-based qubit index,
/// space-separated (`"X0 Z3"`); the empty string is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    support: BTreeMap<usize, PauliLabel>,
}

impl PauliString {
    pub fn identity(n: usize) -> PauliString {
        PauliString { n, support: BTreeMap::new() }
    }

    /// Builds a string from `(qubit, label)` pairs; identity labels are dropped.
    pub fn from_sites(n: usize, sites: impl IntoIterator<Item = (usize, PauliLabel)>) -> PauliString {
        let mut support = BTreeMap::new();
        for (q, p) in sites {
            assert!(q < n, "qubit {q} out of range for {n} qubits");
            if !p.is_identity() {
                support.insert(q, p);
            } else {
                support.remove(&q);
            }
        }
        PauliString { n, support }
    }

    pub fn single(n: usize, q: usize, p: PauliLabel) -> PauliString {
        Self::from_sites(n, [(q, p)])
    }

    pub fn from_dense(labels: &[PauliLabel]) -> PauliString {
        Self::from_sites(labels.len(), labels.iter().copied().enumerate())
    }

    pub fn parse(n: usize, text: &str) -> Result<PauliString> {
        let err = || Error::Parse { what: "Pauli string", input: text.to_string() };
        let mut sites = Vec::new();
        for tok in text.split_whitespace() {
            let mut chars = tok.chars();
            let label = match chars.next().map(|c| c.to_ascii_uppercase()) {
                Some('I') => PauliLabel::I,
                Some('X') => PauliLabel::X,
                Some('Y') => PauliLabel::Y,
                Some('Z') => PauliLabel::Z,
                _ => return Err(err()),
            };
            let rest = chars.as_str();
            if rest.is_empty() && label.is_identity() {
                continue;
            }
            let q: usize = rest.parse().map_err(|_| err())?;
            if q >= n || sites.iter().any(|&(p, _)| p == q) {
                return Err(err());
            }
            sites.push((q, label));
        }
        Ok(Self::from_sites(n, sites))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_identity(&self) -> bool {
        self.support.is_empty()
    }

    #[inline]
    pub fn get(&self, q: usize) -> PauliLabel {
        self.support.get(&q).copied().unwrap_or(PauliLabel::I)
    }

    /// Non-identity sites in increasing qubit order.
    pub fn support(&self) -> impl Iterator<Item = (usize, PauliLabel)> + '_ {
        self.support.iter().map(|(&q, &p)| (q, p))
    }

    pub fn to_dense(&self) -> Vec<PauliLabel> {
        (0..self.n).map(|q| self.get(q)).collect()
    }

    /// `self * other = phase * result`.
    pub fn mul(&self, other: &PauliString) -> (Phase, PauliString) {
        assert_eq!(self.n, other.n);
        let mut phase = Phase::ONE;
        let mut support = self.support.clone();
        for (q, b) in other.support() {
            let a = self.get(q);
            let (ph, c) = pauli_mul(a, b);
            phase = phase * ph;
            if c.is_identity() {
                support.remove(&q);
            } else {
                support.insert(q, c);
            }
        }
        (phase, PauliString { n: self.n, support })
    }

    /// Restriction to a list of qubits (in the given order) as dense labels.
    pub fn restrict(&self, qubits: &[usize]) -> Vec<PauliLabel> {
        qubits.iter().map(|&q| self.get(q)).collect()
    }

    /// Lexicographic key over `(qubit, label)` pairs of the support.
    fn lex_key(&self) -> Vec<(usize, PauliLabel)> {
        self.support().collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (q, p) in self.support() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", p.letter(), q)?;
            first = false;
        }
        Ok(())
    }
}

/// Binomial coefficient in `u128`; exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `D = sum_{i=0}^{d} 3^i C(n, i)`, the number of Pauli strings of weight at most `d`.
pub fn low_degree_cardinality(n: usize, d: usize) -> u128 {
    (0..=d.min(n)).map(|i| 3u128.pow(i as u32) * binomial(n, i)).sum()
}

/// All Pauli strings on `n` qubits of weight at most `d`.
///
/// Order: by weight, then lexicographically by the sequence of
/// `(qubit, label)` pairs of the support with `x < y < z`. Row/column `k` of a
/// [`crate::channel::ProcessMatrix`] is `strings()[k]`.
#[derive(Clone, Debug)]
pub struct LowDegreeIndex {
    n: usize,
    d: usize,
    strings: Vec<PauliString>,
    lookup: HashMap<PauliString, usize>,
}

impl LowDegreeIndex {
    pub fn new(n: usize, d: usize) -> Result<LowDegreeIndex> {
        if d > n {
            return Err(Error::InvalidDegree { n, d });
        }
        let mut strings = Vec::with_capacity(low_degree_cardinality(n, d) as usize);
        for w in 0..=d {
            let mut level = Vec::new();
            for qubits in combinations(n, w) {
                for labels in label_tuples(w) {
                    level.push(PauliString::from_sites(n, qubits.iter().copied().zip(labels)));
                }
            }
            level.sort_by_key(|p| p.lex_key());
            strings.extend(level);
        }
        let lookup = strings.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Ok(LowDegreeIndex { n, d, strings, lookup })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// Cardinality `D`.
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    pub fn get(&self, k: usize) -> &PauliString {
        &self.strings[k]
    }

    pub fn position(&self, p: &PauliString) -> Option<usize> {
        self.lookup.get(p).copied()
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        p.n() == self.n && p.weight() <= self.d
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn label_tuples(k: usize) -> Vec<Vec<PauliLabel>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                PauliLabel::NON_IDENTITY.iter().map(move |&p| {
                    let mut t = t.clone();
                    t.push(p);
                    t
                })
            })
            .collect();
    }
    out
}

impl FromStr for PauliLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" | "I" | "i" => Ok(PauliLabel::I),
            "x" | "X" => Ok(PauliLabel::X),
            "y" | "Y" => Ok(PauliLabel::Y),
            "z" | "Z" => Ok(PauliLabel::Z),
            _ => Err(Error::Parse { what: "Pauli label", input: s.to_string() }),
        }
    }
}
