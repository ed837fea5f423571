use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::{block_col, EntryEvaluator, FrameAssignment};
use crate::channel::{dense_chi, embed_operator, ChannelModel, GateLayer, ProcessMatrix, ZeroSafeProduct};
use crate::dense::{identity, CMatrix};
use crate::error::{Error, Result};
use crate::frame::FrameTable;
use crate::pauli::PauliString;
use crate::scalar::{cabs, cone, czero, Cx, Real};

/// Moments of `G` for one entry.
#[derive(Clone, Copy, Debug)]
pub struct VarianceReport<T: Real> {
    /// `E|G|^2`; an upper bound on the variance.
    pub second_moment: T,
    /// `E G`, equal to the targeted entry for a dual frame.
    pub mean: Cx<T>,
    /// `E|G|^2 - |E G|^2`.
    pub variance: T,
}

/// Caches `sum_{r,s} w(r,s) F^U_{ab}(r,s)` per table and column, with
/// `w = |g_{gamma delta}|^2` or `w = g_{gamma delta}`. Caches are keyed by
/// table address, so tables passed in must outlive the engine.
#[derive(Default)]
pub struct VarianceEngine<T: Real> {
    duals: Mutex<HashMap<usize, Arc<FrameTable<T>>>>,
    sums: Mutex<HashMap<(usize, usize, bool), Arc<Vec<Cx<T>>>>>,
}

impl<T: Real> VarianceEngine<T> {
    pub fn new() -> Self {
        VarianceEngine { duals: Mutex::new(HashMap::new()), sums: Mutex::new(HashMap::new()) }
    }

    fn dual(&self, table: &Arc<FrameTable<T>>) -> Result<Arc<FrameTable<T>>> {
        let key = Arc::as_ptr(table) as usize;
        if let Some(f) = self.duals.lock().expect("cache").get(&key) {
            return Ok(f.clone());
        }
        let f = Arc::new(table.dual_target()?);
        self.duals.lock().expect("cache").insert(key, f.clone());
        Ok(f)
    }

    /// Indexed by frame column `(a, b)`.
    fn sums(&self, table: &Arc<FrameTable<T>>, col: usize, squared: bool) -> Result<Arc<Vec<Cx<T>>>> {
        let key = (Arc::as_ptr(table) as usize, col, squared);
        if let Some(v) = self.sums.lock().expect("cache").get(&key) {
            return Ok(v.clone());
        }
        let f = self.dual(table)?;
        let g = table.column(col);
        let w: Vec<Cx<T>> = g.iter().map(|v| if squared { Cx::new(v.norm_sqr(), T::zero()) } else { *v }).collect();
        let out: Vec<Cx<T>> = (0..f.cols())
            .map(|c| f.column(c).iter().zip(&w).fold(czero(), |acc, (fv, wv)| acc + *fv * *wv))
            .collect();
        let out = Arc::new(out);
        self.sums.lock().expect("cache").insert(key, out.clone());
        Ok(out)
    }

    /// Moments of `G` under a process matrix supported on `I_d`.
    pub fn report(&self, chi: &ProcessMatrix<T>, ev: &EntryEvaluator<'_, T>) -> Result<VarianceReport<T>> {
        let asg = ev.assignment();
        let n = asg.n();
        if chi.n() != n {
            return Err(Error::ArityMismatch { expected: n, found: chi.n() });
        }
        let mut block_of = vec![(0usize, 0usize); n];
        for (b, (qs, _)) in asg.blocks().iter().enumerate() {
            for (k, &q) in qs.iter().enumerate() {
                block_of[q] = (b, qs.len() - 1 - k);
            }
        }
        // per string: touched blocks with the base-16 label code on the block
        let codes: Vec<Vec<(usize, usize)>> = chi
            .index()
            .strings()
            .iter()
            .map(|p| {
                let mut v: Vec<(usize, usize)> = Vec::new();
                for (q, l) in p.support() {
                    let (b, place) = block_of[q];
                    let add = l.index() * 16usize.pow(place as u32);
                    match v.iter_mut().find(|(bb, _)| *bb == b) {
                        Some(e) => e.1 += add,
                        None => v.push((b, add)),
                    }
                }
                v.sort_unstable();
                v
            })
            .collect();
        let moment = |squared: bool| -> Result<Cx<T>> {
            let tabs: Vec<Arc<Vec<Cx<T>>>> = asg
                .blocks()
                .iter()
                .zip(ev.cols())
                .map(|((_, t), &c)| self.sums(t, c, squared))
                .collect::<Result<_>>()?;
            let base = ZeroSafeProduct::new(tabs.iter().map(|t| t[0]).collect());
            let dim = chi.dim();
            let total = (0..dim)
                .into_par_iter()
                .map(|i| {
                    let mut acc = czero();
                    let mut rep: Vec<(usize, Cx<T>)> = Vec::new();
                    for j in 0..dim {
                        let c = chi.entry(i, j);
                        if c.norm_sqr() == T::zero() {
                            continue;
                        }
                        rep.clear();
                        let (a, b) = (&codes[i], &codes[j]);
                        let (mut x, mut y) = (0, 0);
                        while x < a.len() || y < b.len() {
                            let (blk, ca, cb) = match (a.get(x), b.get(y)) {
                                (Some(&(ba, va)), Some(&(bb, vb))) if ba == bb => {
                                    x += 1;
                                    y += 1;
                                    (ba, va, vb)
                                }
                                (Some(&(ba, va)), Some(&(bb, _))) if ba < bb => {
                                    x += 1;
                                    (ba, va, 0)
                                }
                                (Some(&(ba, va)), None) => {
                                    x += 1;
                                    (ba, va, 0)
                                }
                                (_, Some(&(bb, vb))) => {
                                    y += 1;
                                    (bb, 0, vb)
                                }
                                (None, None) => unreachable!(),
                            };
                            rep.push((blk, tabs[blk][4 * ca + cb]));
                        }
                        acc += c * base.with_replaced(&rep);
                    }
                    acc
                })
                .reduce(czero, |a, b| a + b);
            Ok(total)
        };
        let second = moment(true)?.re;
        let mean = moment(false)?;
        Ok(VarianceReport { second_moment: second, mean, variance: second - mean.norm_sqr() })
    }
}

/// Exact variance of `G_{gamma delta}` for the process matrix `chi`.
///
/// `chi` describes the channel seen by the frames: the noise alone for
/// rotated tables, whose gates must match `layer`, or the full channel for
/// plain tables.
pub fn analytic_variance<T: Real>(
    chi: &ProcessMatrix<T>,
    assignment: &FrameAssignment<T>,
    gamma: &PauliString,
    delta: &PauliString,
    layer: Option<&GateLayer<T>>,
) -> Result<VarianceReport<T>> {
    assignment.check_layer(layer)?;
    let ev = assignment.evaluator(gamma, delta)?;
    VarianceEngine::new().report(chi, &ev)
}

/// Exact moments of `G` for a channel that factors over the frame blocks,
/// `E|G|^2 = prod_b E|g_b|^2`. Gates of `layer` not absorbed by rotated
/// tables are folded into the channel.
pub fn block_product_variance<T: Real>(
    engine: &VarianceEngine<T>,
    channel: &ChannelModel<T>,
    layer: Option<&GateLayer<T>>,
    assignment: &FrameAssignment<T>,
    gamma: &PauliString,
    delta: &PauliString,
) -> Result<VarianceReport<T>> {
    assignment.check_layer(layer)?;
    let n = assignment.n();
    let effective = match layer {
        Some(l) => channel.after_layer(&assignment.split_layer(l)?.1)?,
        None => channel.clone(),
    };
    let cblocks = effective.blocks()?;
    let mut owner = vec![0usize; n];
    for (b, (qs, _)) in assignment.blocks().iter().enumerate() {
        for &q in qs {
            owner[q] = b;
        }
    }
    let mut kraus: Vec<Vec<CMatrix<T>>> =
        assignment.blocks().iter().map(|(qs, _)| vec![identity::<T>(1 << qs.len())]).collect();
    for (qs, ops) in &cblocks {
        let b = owner[qs[0]];
        if qs.iter().any(|&q| owner[q] != b) {
            return Err(Error::UnsupportedTopology(format!("channel block {qs:?} straddles frame blocks")));
        }
        let target = &assignment.blocks()[b].0;
        let emb: Vec<CMatrix<T>> = ops.iter().map(|k| embed_operator(k, qs, target)).collect();
        kraus[b] = kraus[b].iter().flat_map(|a| emb.iter().map(move |e| e * a)).collect();
    }
    let mut m2 = T::one();
    let mut m1 = cone::<T>();
    for (b, (qs, table)) in assignment.blocks().iter().enumerate() {
        let chi = dense_chi(&kraus[b]);
        let col = block_col(gamma, delta, qs);
        let s2 = engine.sums(table, col, true)?;
        let s1 = engine.sums(table, col, false)?;
        let q = qs.len();
        let mut e2 = czero::<T>();
        let mut e1 = czero::<T>();
        for a in 0..chi.nrows() {
            for c in 0..chi.ncols() {
                let v = chi[(a, c)];
                if cabs(v) == T::zero() {
                    continue;
                }
                let fc = 4 * base4_to_base16(q, a) + base4_to_base16(q, c);
                e2 += v * s2[fc];
                e1 += v * s1[fc];
            }
        }
        m2 *= e2.re;
        m1 *= e1;
    }
    Ok(VarianceReport { second_moment: m2, mean: m1, variance: m2 - m1.norm_sqr() })
}

fn base4_to_base16(q: usize, idx: usize) -> usize {
    (0..q).fold(0, |acc, k| acc * 16 + (idx / 4usize.pow((q - 1 - k) as u32)) % 4)
}
