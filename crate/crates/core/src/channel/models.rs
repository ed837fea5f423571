use nalgebra::DMatrix;

use super::{ChannelModel, Representation};
use crate::dense::{expm_real, identity, pauli, CMatrix};
use crate::error::{Error, Result};
use crate::pauli::{PauliLabel, PauliString};
use crate::scalar::{creal, Cx, Real};

/// Above this register size the correlated channel is kept in Pauli form.
const DENSE_XFLIP_MAX: usize = 4;

/// `n` qubits with `sum_k E_k^dag E_k = 1`, `E_k = p (1 + i eps sum_m M_km X_m)`,
/// `M = exp(-2A/n)` for the periodic antisymmetric `A = S - S^T` built from
/// the cyclic shift `S`. `p` is fixed numerically by trace preservation.
pub fn correlated_xflip_channel<T: Real>(n: usize, eps: T) -> Result<ChannelModel<T>> {
    if n < 2 {
        return Err(Error::InvalidChannel(format!("correlated channel needs n >= 2, got {n}")));
    }
    let m = xflip_mixing::<T>(n);
    let unnormalized: Vec<Vec<(PauliString, Cx<T>)>> = (0..n)
        .map(|k| {
            let mut terms = vec![(PauliString::identity(n), creal(T::one()))];
            for q in 0..n {
                terms.push((PauliString::single(n, q, PauliLabel::X), Cx::new(T::zero(), eps * m[(k, q)])));
            }
            terms
        })
        .collect();
    let mass = super::pauli_completeness(n, &unnormalized);
    let id = mass[&PauliString::identity(n)].re;
    let p = T::one() / id.sqrt();
    let ops: Vec<Vec<(PauliString, Cx<T>)>> =
        unnormalized.into_iter().map(|t| t.into_iter().map(|(s, c)| (s, c * creal(p))).collect()).collect();
    let model = ChannelModel::new(Representation::PauliKraus { n, ops }, 1)?;
    if n <= DENSE_XFLIP_MAX {
        let ops = model.to_dense_kraus()?;
        return ChannelModel::new(Representation::KrausList { n, ops }, 1);
    }
    Ok(model)
}

/// `exp(-2A/n)`.
pub(crate) fn xflip_mixing<T: Real>(n: usize) -> DMatrix<T> {
    let mut a = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        a[(i, j)] += T::one();
        a[(j, i)] -= T::one();
    }
    expm_real(&(a * T::lit(-2.0 / n as f64)))
}

/// Distance of qubit `q` from the reference site `floor((n-1)/2)`.
pub fn site_distance(n: usize, q: usize) -> usize {
    q.abs_diff((n.max(1) - 1) / 2)
}

/// Independent sites with Kraus pair `{sqrt(p_l) Z e^{-i g_l X}, sqrt(1-p_l) e^{-i g_l X}}`,
/// `p_l = p0 e^{-l}`, `g_l = gamma0 e^{-l}`, `l` = [`site_distance`].
pub fn decaying_dephasing_channel<T: Real>(n: usize, p0: T, gamma0: T) -> Result<ChannelModel<T>> {
    if !(p0 >= T::zero() && p0 <= T::one()) {
        return Err(Error::InvalidChannel(format!("p0 = {} outside [0, 1]", p0.as_f64())));
    }
    let sites = (0..n)
        .map(|q| {
            let decay = T::lit((-(site_distance(n, q) as f64)).exp());
            let (p, g) = (p0 * decay, gamma0 * decay);
            let rot = identity::<T>(2) * creal(g.cos()) - pauli::<T>(PauliLabel::X) * Cx::new(T::zero(), g.sin());
            vec![pauli::<T>(PauliLabel::Z) * &rot * creal(p.sqrt()), rot * creal((T::one() - p).sqrt())]
        })
        .collect();
    ChannelModel::site_product(sites, 1.min(n))
}

/// Independent bit flips `{sqrt(1-p) 1, sqrt(p) X}`.
pub fn bitflip_product<T: Real>(n: usize, p: T) -> Result<ChannelModel<T>> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::InvalidChannel(format!("p = {} outside [0, 1]", p.as_f64())));
    }
    let site: Vec<CMatrix<T>> =
        vec![identity::<T>(2) * creal((T::one() - p).sqrt()), pauli::<T>(PauliLabel::X) * creal(p.sqrt())];
    ChannelModel::site_product(vec![site; n], 1.min(n))
}

pub fn identity_channel<T: Real>(n: usize) -> Result<ChannelModel<T>> {
    ChannelModel::site_product(vec![vec![identity::<T>(2)]; n], 0)
}
