//! Randomized preparation and measurement of product Pauli eigenstates.
//!
//! A shot prepares a uniformly random product eigenstate `s`, applies
//! `C = E o U`, picks a uniformly random basis per qubit and records the
//! outcome state `r`; the joint law is `p(r, s) = <r|C(|s><s|)|r> / 18^n`.

use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{embed_operator, ChannelModel, GateLayer};
use crate::dense::{apply_kraus, expectation, identity, product_state, projector, CMatrix};
use crate::error::{Error, Result};
use crate::frame::row_from_state_indices;
use crate::pauli::{Basis, StateLabel, StateString};
use crate::scalar::{tol, Real};

/// Largest register handled by [`exact_distribution`].
pub const MAX_EXACT_QUBITS: usize = 3;

/// Shots drawn from one RNG stream before moving to the next; fixes the
/// stream layout so results do not depend on the thread count.
pub const CHUNK_SHOTS: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub s: StateString,
    pub r: StateString,
}

impl Snapshot {
    pub fn n(&self) -> usize {
        self.s.n()
    }
}

/// `p(r, s)` over all `36^n` pairs.
#[derive(Clone, Debug)]
pub struct ExactDistribution<T: Real> {
    n: usize,
    /// `probs[s * 6^n + r]`, state strings in base 6 with qubit 0 most significant.
    probs: Vec<T>,
}

impl<T: Real> ExactDistribution<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> usize {
        6usize.pow(self.n as u32)
    }

    pub fn prob(&self, s: usize, r: usize) -> T {
        self.probs[s * self.states() + r]
    }

    pub fn prob_of(&self, snap: &Snapshot) -> T {
        self.prob(state_index(&snap.s), state_index(&snap.r))
    }

    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |a, b| a + *b)
    }

    /// `sum_r p(r, s)`.
    pub fn marginal_s(&self, s: usize) -> T {
        let m = self.states();
        self.probs[s * m..(s + 1) * m].iter().fold(T::zero(), |a, b| a + *b)
    }

    /// Iterates `(s, r, p)` over all pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let m = self.states();
        self.probs.iter().enumerate().map(move |(i, p)| (i / m, i % m, *p))
    }

    /// Row index of `(r, s)` in an arity-`n` frame table, for `n <= 2`.
    pub fn table_row(&self, s: usize, r: usize) -> usize {
        row_from_state_indices(self.n, r, s)
    }
}

/// Base-6 index of a state string, qubit 0 most significant.
pub fn state_index(s: &StateString) -> usize {
    s.sites().iter().fold(0, |acc, l| acc * 6 + l.index())
}

pub fn state_string(n: usize, mut idx: usize) -> StateString {
    let mut sites = vec![StateLabel::from_index(0); n];
    for q in (0..n).rev() {
        sites[q] = StateLabel::from_index(idx % 6);
        idx /= 6;
    }
    StateString::new(sites)
}

/// Dense `p(r, s) = <r|(E o U)(|s><s|)|r> / 18^n` for `n <= 3`.
pub fn exact_distribution<T: Real>(channel: &ChannelModel<T>, layer: Option<&GateLayer<T>>) -> Result<ExactDistribution<T>> {
    let n = channel.n();
    if n > MAX_EXACT_QUBITS {
        return Err(Error::UseFactorizedPath { n, max: MAX_EXACT_QUBITS });
    }
    let all: Vec<usize> = (0..n).collect();
    let mut u = identity::<T>(1 << n);
    if let Some(layer) = layer {
        if layer.n() != n {
            return Err(Error::InvalidChannel(format!("layer on {} qubits, channel on {n}", layer.n())));
        }
        for (qs, g) in layer.elements() {
            u = embed_operator(g, qs, &all) * u;
        }
    }
    let kraus: Vec<CMatrix<T>> = channel.to_dense_kraus()?.into_iter().map(|k| k * &u).collect();
    let m = 6usize.pow(n as u32);
    let vectors: Vec<_> = (0..m).map(|i| product_state::<T>(state_string(n, i).sites())).collect();
    let norm = T::lit(18f64.powi(n as i32).recip());
    let mut probs = vec![T::zero(); m * m];
    for (s, vs) in vectors.iter().enumerate() {
        let out = apply_kraus(&kraus, &projector(vs));
        for (r, vr) in vectors.iter().enumerate() {
            probs[s * m + r] = expectation(vr, &out).re * norm;
        }
    }
    Ok(ExactDistribution { n, probs })
}

/// Per-block Born tables for `E o U` factorized into blocks of at most two qubits.
#[derive(Clone, Debug)]
pub struct BlockSampler {
    n: usize,
    blocks: Vec<SamplerBlock>,
}

#[derive(Clone, Debug)]
struct SamplerBlock {
    qubits: Vec<usize>,
    /// `cumulative[s * 3^q + basis]` holds the running sums over the `2^q` outcomes.
    cumulative: Vec<Vec<f64>>,
}

impl BlockSampler {
    /// Requires a trace-preserving channel that factors, together with the
    /// layer, into blocks of at most two qubits.
    pub fn new<T: Real>(channel: &ChannelModel<T>, layer: Option<&GateLayer<T>>) -> Result<Self> {
        if !channel.is_trace_preserving() {
            return Err(Error::InvalidChannel("sampling requires a trace-preserving channel".into()));
        }
        let n = channel.n();
        let composed = match layer {
            Some(l) => channel.after_layer(l)?,
            None => channel.after_layer(&GateLayer::empty(n))?,
        };
        let blocks = composed
            .blocks()?
            .into_iter()
            .map(|(qubits, kraus)| SamplerBlock::new(qubits, &kraus))
            .collect::<Result<_>>()?;
        Ok(BlockSampler { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Supports of the independent blocks.
    pub fn block_supports(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.qubits.clone()).collect()
    }

    pub fn draw_snapshot<R: Rng + ?Sized>(&self, rng: &mut R) -> Snapshot {
        let mut s = vec![StateLabel::from_index(0); self.n];
        let mut r = s.clone();
        for b in &self.blocks {
            b.draw(rng, &mut s, &mut r);
        }
        Snapshot { s: StateString::new(s), r: StateString::new(r) }
    }

    /// Deterministic stream of shots from `seed`.
    pub fn stream(&self, seed: u64) -> ShotStream<'_> {
        ShotStream { sampler: self, seed, next: 0, rng: chunk_rng(seed, 0) }
    }

    /// Shots `start .. start + count` of the stream for `seed`, drawn in
    /// parallel by chunk. Equal to the corresponding slice of [`Self::stream`].
    pub fn draw_range(&self, seed: u64, start: usize, count: usize) -> Vec<Snapshot> {
        if count == 0 {
            return Vec::new();
        }
        let end = start + count;
        let first = start / CHUNK_SHOTS;
        let last = (end - 1) / CHUNK_SHOTS;
        let chunks: Vec<Vec<Snapshot>> = (first..=last)
            .into_par_iter()
            .map(|c| {
                let mut rng = chunk_rng(seed, c);
                let lo = c * CHUNK_SHOTS;
                let mut out = Vec::new();
                for i in lo..(lo + CHUNK_SHOTS).min(end) {
                    let snap = self.draw_snapshot(&mut rng);
                    if i >= start {
                        out.push(snap);
                    }
                }
                out
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Sequential view of the chunked shot stream.
pub struct ShotStream<'a> {
    sampler: &'a BlockSampler,
    seed: u64,
    next: usize,
    rng: ChaCha8Rng,
}

impl Iterator for ShotStream<'_> {
    type Item = Snapshot;

    fn next(&mut self) -> Option<Snapshot> {
        if self.next > 0 && self.next % CHUNK_SHOTS == 0 {
            self.rng = chunk_rng(self.seed, self.next / CHUNK_SHOTS);
        }
        self.next += 1;
        Some(self.sampler.draw_snapshot(&mut self.rng))
    }
}

impl SamplerBlock {
    fn new<T: Real>(qubits: Vec<usize>, kraus: &[CMatrix<T>]) -> Result<Self> {
        let q = qubits.len();
        let n_states = 6usize.pow(q as u32);
        let n_bases = 3usize.pow(q as u32);
        let mut cumulative = Vec::with_capacity(n_states * n_bases);
        for s in 0..n_states {
            let out = apply_kraus(kraus, &projector(&product_state::<T>(state_string(q, s).sites())));
            for b in 0..n_bases {
                let bases = basis_digits(q, b);
                let mut acc = 0.0;
                let mut row = Vec::with_capacity(1 << q);
                for bits in 0..1usize << q {
                    let labels: Vec<StateLabel> =
                        (0..q).map(|i| StateLabel::new(bases[i], ((bits >> (q - 1 - i)) & 1) as u8)).collect();
                    let p = expectation(&product_state::<T>(&labels), &out).re.as_f64();
                    acc += p.max(0.0);
                    row.push(acc);
                }
                if (acc - 1.0).abs() > tol::<T>(1e-9) {
                    return Err(Error::InvalidChannel(format!("block {qubits:?} loses probability {}", 1.0 - acc)));
                }
                cumulative.push(row);
            }
        }
        Ok(SamplerBlock { qubits, cumulative })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, s: &mut [StateLabel], r: &mut [StateLabel]) {
        let q = self.qubits.len();
        let mut s_idx = 0;
        let mut b_idx = 0;
        let mut bases = [Basis::Z; 2];
        for (i, &qubit) in self.qubits.iter().enumerate() {
            let label = StateLabel::from_index(rng.random_range(0..6));
            s[qubit] = label;
            s_idx = s_idx * 6 + label.index();
            let b = rng.random_range(0..3);
            bases[i] = Basis::ALL[b];
            b_idx = b_idx * 3 + b;
        }
        let row = &self.cumulative[s_idx * 3usize.pow(q as u32) + b_idx];
        let u: f64 = rng.random::<f64>() * row[row.len() - 1];
        let bits = row.iter().position(|&c| u < c).unwrap_or(row.len() - 1);
        for (i, &qubit) in self.qubits.iter().enumerate() {
            r[qubit] = StateLabel::new(bases[i], ((bits >> (q - 1 - i)) & 1) as u8);
        }
    }
}

fn basis_digits(q: usize, mut idx: usize) -> Vec<Basis> {
    let mut out = vec![Basis::X; q];
    for i in (0..q).rev() {
        out[i] = Basis::ALL[idx % 3];
        idx /= 3;
    }
    out
}

#[derive(Serialize, Deserialize)]
struct SnapshotRow {
    shot_index: usize,
    s: String,
    r: String,
}

/// CSV with header `shot_index,s,r`; states use per-qubit codes such as `z0x1`.
pub fn write_snapshots<W: Write>(w: W, shots: &[Snapshot], first_index: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, snap) in shots.iter().enumerate() {
        out.serialize(SnapshotRow { shot_index: first_index + i, s: snap.s.codes(), r: snap.r.codes() })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshots<R: Read>(r: R) -> Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize::<SnapshotRow>() {
        let row = row?;
        let s = StateString::parse_codes(&row.s)?;
        let r = StateString::parse_codes(&row.r)?;
        if s.n() != r.n() {
            return Err(Error::Parse { what: "snapshot", input: format!("{},{}", row.s, row.r) });
        }
        out.push(Snapshot { s, r });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bitflip_product, decaying_dephasing_channel, identity_channel};

    fn z(bit: u8) -> StateLabel {
        StateLabel::new(Basis::Z, bit)
    }

    #[test]
    fn exact_examples() {
        let id = exact_distribution(&identity_channel::<f64>(1).unwrap(), None).unwrap();
        assert!((id.prob(z(0).index(), z(0).index()) - 1.0 / 18.0).abs() < 1e-15);
        assert!((id.total() - 1.0).abs() < 1e-12);

        let bf = exact_distribution(&bitflip_product::<f64>(1, 0.1).unwrap(), None).unwrap();
        assert!((bf.prob(z(0).index(), z(1).index()) - 0.1 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn exact_marginals_uniform() {
        let ch = decaying_dephasing_channel::<f64>(2, 0.1, 0.1).unwrap();
        let layer = GateLayer::iswap_layer(2).unwrap();
        let d = exact_distribution(&ch, Some(&layer)).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
        for s in 0..36 {
            assert!((d.marginal_s(s) - 1.0 / 36.0).abs() < 1e-12);
        }
        assert!(d.iter().all(|(_, _, p)| p >= -1e-15));
        let big = identity_channel::<f64>(4).unwrap();
        assert!(matches!(exact_distribution(&big, None), Err(Error::UseFactorizedPath { .. })));
    }

    #[test]
    fn stream_matches_parallel_ranges() {
        let ch = decaying_dephasing_channel::<f64>(5, 0.1, 0.1).unwrap();
        let layer = GateLayer::iswap_layer(5).unwrap();
        let smp = BlockSampler::new(&ch, Some(&layer)).unwrap();
        let seq: Vec<Snapshot> = smp.stream(7).take(3000).collect();
        assert_eq!(smp.draw_range(7, 0, 3000), seq);
        assert_eq!(smp.draw_range(7, 1000, 1500), seq[1000..2500].to_vec());
        assert_ne!(smp.draw_range(8, 0, 10), seq[..10].to_vec());
    }

    #[test]
    fn correlated_blocks_rejected() {
        let ch = crate::channel::correlated_xflip_channel::<f64>(4, 0.1).unwrap();
        assert!(matches!(BlockSampler::new(&ch, None), Err(Error::UnsupportedTopology(_))));
        let lossy = ChannelModel::kraus_list(vec![identity::<f64>(2) * crate::scalar::creal(0.5)], 0).unwrap();
        assert!(BlockSampler::new(&lossy, None).is_err());
    }

    #[test]
    fn snapshot_csv_round_trip() {
        let smp = BlockSampler::new(&bitflip_product::<f64>(3, 0.2).unwrap(), None).unwrap();
        let shots = smp.draw_range(1, 0, 20);
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &shots, 0).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("shot_index,s,r\n"));
        assert_eq!(read_snapshots(&buf[..]).unwrap(), shots);
    }
}
