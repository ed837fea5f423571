//! Estimating process-matrix entries from snapshots.
//!
//! `G_{gamma delta}(r, s)` is the product over frame blocks of the block
//! table entries; its expectation over the snapshot law is `chi_{gamma delta}`.

mod accum;
mod plan;
mod variance;

pub use accum::{median, EstimatorAccumulator, ExactSum, Mode};
pub use plan::{convergence_samples, mom_plan, mom_plan_all_entries, mom_plan_l2, Convergence, SamplePlan, DEFAULT_SHOT_CAP};
pub use variance::{analytic_variance, block_product_variance, VarianceEngine, VarianceReport};

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::GateLayer;
use crate::dense::{max_abs_diff, CMatrix};
use crate::error::{Error, Result};
use crate::frame::{col_index, FrameTable};
use crate::pauli::{PauliLabel, PauliString};
use crate::sampler::Snapshot;
use crate::scalar::{cone, Cx, Real};

/// Frame tables covering the register with disjoint blocks of one or two
/// qubits; a two-qubit table on `[a, b]` reads qubit `a` as its first site.
#[derive(Clone, Debug)]
pub struct FrameAssignment<T: Real> {
    n: usize,
    blocks: Vec<(Vec<usize>, Arc<FrameTable<T>>)>,
}

impl<T: Real> FrameAssignment<T> {
    pub fn new(n: usize, blocks: Vec<(Vec<usize>, Arc<FrameTable<T>>)>) -> Result<Self> {
        let mut seen = vec![false; n];
        for (qs, table) in &blocks {
            if qs.len() != table.arity() {
                return Err(Error::InvalidFrameAssignment(format!("table of arity {} on qubits {qs:?}", table.arity())));
            }
            for &q in qs {
                if q >= n || seen[q] {
                    return Err(Error::InvalidFrameAssignment(format!("qubit {q} assigned twice or out of range")));
                }
                seen[q] = true;
            }
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidFrameAssignment(format!("qubit {q} has no table")));
        }
        Ok(FrameAssignment { n, blocks })
    }

    /// The same single-qubit table on every site.
    pub fn per_site(n: usize, g: Arc<FrameTable<T>>) -> Result<Self> {
        Self::new(n, (0..n).map(|q| (vec![q], g.clone())).collect())
    }

    /// One table per gate of `layer` from `pair_table(gate)`, and `single`
    /// on idle qubits. Tables for equal gates are built once and shared.
    pub fn for_layer<F>(layer: &GateLayer<T>, single: Arc<FrameTable<T>>, mut pair_table: F) -> Result<Self>
    where
        F: FnMut(&CMatrix<T>) -> Result<FrameTable<T>>,
    {
        let mut built: Vec<(CMatrix<T>, Arc<FrameTable<T>>)> = Vec::new();
        let mut blocks = Vec::new();
        let mut covered = vec![false; layer.n()];
        for (qs, u) in layer.elements() {
            let table = match built.iter().find(|(v, _)| max_abs_diff(v, u) == 0.0) {
                Some((_, t)) => t.clone(),
                None => {
                    let t = Arc::new(pair_table(u)?);
                    built.push((u.clone(), t.clone()));
                    t
                }
            };
            for &q in qs {
                covered[q] = true;
            }
            blocks.push((qs.clone(), table));
        }
        for q in 0..layer.n() {
            if !covered[q] {
                blocks.push((vec![q], single.clone()));
            }
        }
        blocks.sort_by_key(|(qs, _)| qs[0]);
        Self::new(layer.n(), blocks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[(Vec<usize>, Arc<FrameTable<T>>)] {
        &self.blocks
    }

    /// Gates of `layer` whose support and unitary match a rotated block;
    /// the remaining gates are not absorbed by the frames.
    pub fn split_layer(&self, layer: &GateLayer<T>) -> Result<(Vec<usize>, GateLayer<T>)> {
        let mut absorbed = Vec::new();
        let mut rest = Vec::new();
        for (i, (qs, u)) in layer.elements().iter().enumerate() {
            let hit = self.blocks.iter().any(|(bq, t)| bq == qs && t.unitary().is_some_and(|tu| max_abs_diff(tu, u) < 1e-12));
            if hit {
                absorbed.push(i);
            } else {
                rest.push((qs.clone(), u.clone()));
            }
        }
        Ok((absorbed, GateLayer::new(layer.n(), rest)?))
    }

    /// Checks that every rotated block matches a gate of `layer`.
    pub fn check_layer(&self, layer: Option<&GateLayer<T>>) -> Result<()> {
        for (qs, t) in &self.blocks {
            let Some(tu) = t.unitary() else { continue };
            let ok = layer.is_some_and(|l| l.elements().iter().any(|(lq, u)| lq == qs && max_abs_diff(tu, u) < 1e-12));
            if !ok {
                return Err(Error::InvalidFrameAssignment(format!("rotated table on {qs:?} has no matching gate")));
            }
        }
        Ok(())
    }

    pub fn evaluator(&self, gamma: &PauliString, delta: &PauliString) -> Result<EntryEvaluator<'_, T>> {
        EntryEvaluator::new(self, gamma, delta)
    }
}

/// `G_{gamma delta}` with the block columns resolved once.
#[derive(Clone, Debug)]
pub struct EntryEvaluator<'a, T: Real> {
    assignment: &'a FrameAssignment<T>,
    gamma: PauliString,
    delta: PauliString,
    cols: Vec<usize>,
}

impl<'a, T: Real> EntryEvaluator<'a, T> {
    pub fn new(assignment: &'a FrameAssignment<T>, gamma: &PauliString, delta: &PauliString) -> Result<Self> {
        if gamma.n() != assignment.n || delta.n() != assignment.n {
            return Err(Error::ArityMismatch { expected: assignment.n, found: gamma.n().max(delta.n()) });
        }
        let cols = assignment.blocks.iter().map(|(qs, _)| block_col(gamma, delta, qs)).collect();
        Ok(EntryEvaluator { assignment, gamma: gamma.clone(), delta: delta.clone(), cols })
    }

    pub fn gamma(&self) -> &PauliString {
        &self.gamma
    }

    pub fn delta(&self) -> &PauliString {
        &self.delta
    }

    pub(crate) fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn assignment(&self) -> &FrameAssignment<T> {
        self.assignment
    }

    pub fn eval(&self, snap: &Snapshot) -> Cx<T> {
        let (r, s) = (snap.r.sites(), snap.s.sites());
        let mut acc = cone();
        for ((qs, table), &col) in self.assignment.blocks.iter().zip(&self.cols) {
            let row = qs.iter().fold(0, |a, &q| a * 36 + r[q].index() * 6 + s[q].index());
            acc *= table.get(row, col);
        }
        acc
    }
}

pub(crate) fn block_col(gamma: &PauliString, delta: &PauliString, qs: &[usize]) -> usize {
    col_index(&gamma.restrict(qs), &delta.restrict(qs))
}

/// `G_{gamma delta}(r, s)` for one snapshot.
pub fn eval_g<T: Real>(assignment: &FrameAssignment<T>, gamma: &PauliString, delta: &PauliString, snap: &Snapshot) -> Result<Cx<T>> {
    if snap.n() != assignment.n() {
        return Err(Error::ArityMismatch { expected: assignment.n(), found: snap.n() });
    }
    Ok(EntryEvaluator::new(assignment, gamma, delta)?.eval(snap))
}

/// Estimates of each entry over `shots`. Mean mode accumulates in parallel
/// chunks; the exact sums make the result independent of the split.
pub fn estimate_entries<T: Real>(
    shots: &[Snapshot],
    evaluators: &[EntryEvaluator<'_, T>],
    mode: Mode,
) -> Result<Vec<EstimatorAccumulator>> {
    if shots.is_empty() {
        return Err(Error::NoData);
    }
    evaluators
        .par_iter()
        .map(|ev| {
            let fresh = || EstimatorAccumulator::new(ev.gamma.clone(), ev.delta.clone(), mode);
            match mode {
                Mode::Mean => {
                    let parts: Vec<EstimatorAccumulator> = shots
                        .par_chunks(4096)
                        .map(|chunk| {
                            let mut acc = fresh()?;
                            for snap in chunk {
                                acc.push(ev.eval(snap));
                            }
                            Ok(acc)
                        })
                        .collect::<Result<_>>()?;
                    let mut it = parts.into_iter();
                    let mut acc = it.next().expect("non-empty");
                    for p in it {
                        acc.merge(&p)?;
                    }
                    Ok(acc)
                }
                Mode::MedianOfMeans { .. } => {
                    let mut acc = fresh()?;
                    for snap in shots {
                        acc.push(ev.eval(snap));
                    }
                    Ok(acc)
                }
            }
        })
        .collect()
}

/// One row of the estimation CSV.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EstimateRow {
    pub alpha: String,
    pub beta: String,
    pub estimate_re: f64,
    pub estimate_im: f64,
    pub truth_re: Option<f64>,
    pub truth_im: Option<f64>,
    pub shots: u64,
    pub mode: String,
}

impl EstimateRow {
    pub fn from_accumulator(acc: &EstimatorAccumulator, truth: Option<Complex<f64>>) -> Result<Self> {
        let est = acc.estimate()?;
        let (a, b) = acc.entry();
        Ok(EstimateRow {
            alpha: a.to_string(),
            beta: b.to_string(),
            estimate_re: est.re,
            estimate_im: est.im,
            truth_re: truth.map(|t| t.re),
            truth_im: truth.map(|t| t.im),
            shots: acc.count(),
            mode: acc.mode().label().to_string(),
        })
    }
}

/// CSV with header `alpha,beta,estimate_re,estimate_im,truth_re,truth_im,shots,mode`.
pub fn write_estimates<W: Write>(w: W, rows: &[EstimateRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// `(I..I, I..I)`, `(P_q, P_q)` and `(I..I, P_q)` for a single-qubit label.
pub fn standard_entry(n: usize, kind: &str, q: usize) -> Result<(PauliString, PauliString)> {
    let id = PauliString::identity(n);
    let label = |c: char| -> Result<PauliLabel> { c.to_string().parse() };
    let bad = || Error::Parse { what: "entry", input: kind.to_string() };
    let mut chars = kind.chars();
    let (a, b) = (chars.next().ok_or_else(bad)?, chars.next().ok_or_else(bad)?);
    if chars.next().is_some() {
        return Err(bad());
    }
    let side = |c: char| -> Result<PauliString> {
        let l = label(c)?;
        Ok(if l == PauliLabel::I { id.clone() } else { PauliString::single(n, q, l) })
    };
    Ok((side(a)?, side(b)?))
}
