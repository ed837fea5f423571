use crate::error::{Error, Result};
use crate::pauli::binomial;

/// Tail bound for independent bit flips truncated to degree `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    /// `exp(-2 ((d+1)/n - p^2) n)`.
    pub bound: f64,
    /// Largest `p` keeping the bound below the requested error, when one was given.
    pub p_threshold: Option<f64>,
}

/// `sum_{k>d} C(n,k) ((1-p)^{n-k} p^k)^2`, the exact squared truncation error.
pub fn bitflip_exact_tail(n: usize, p: f64, d: usize) -> f64 {
    (d + 1..=n)
        .map(|k| binomial(n, k) as f64 * ((1.0 - p).powi((n - k) as i32) * p.powi(k as i32)).powi(2))
        .sum()
}

/// Hoeffding tail for the bit-flip product channel. Requires `p^2 < (d+1)/n`.
/// With `eps`, also returns `sqrt((d+1)/n - ln(1/eps)/(2n))`, the flip
/// probability below which the bound is at most `eps`.
pub fn bitflip_tail_bound(n: usize, p: f64, d: usize, eps: Option<f64>) -> Result<TailBound> {
    if n == 0 {
        return Err(Error::BoundInapplicable("empty register".into()));
    }
    let ratio = (d + 1) as f64 / n as f64;
    if p * p >= ratio {
        return Err(Error::BoundInapplicable(format!("p^2 = {} is not below (d+1)/n = {ratio}", p * p)));
    }
    let bound = (-2.0 * (ratio - p * p) * n as f64).exp();
    let p_threshold = match eps {
        None => None,
        Some(e) if e > 0.0 && e < 1.0 => {
            let sq = ratio - (1.0 / e).ln() / (2.0 * n as f64);
            if sq <= 0.0 {
                return Err(Error::BoundInapplicable(format!("no flip probability reaches error {e} at n = {n}, d = {d}")));
            }
            Some(sq.sqrt())
        }
        Some(e) => return Err(Error::BoundInapplicable(format!("target error {e} outside (0, 1)"))),
    };
    Ok(TailBound { bound, p_threshold })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpuriousBound {
    /// `2 (2 alpha h t m)^{2 ceil(d/4)}`.
    pub bound: f64,
    /// `(1 / (2 h t m)) (eps/2)^{1 / (2 ceil(d/4))}`.
    pub alpha_threshold: f64,
}

/// Bound on couplings of degree above `d` generated by weak `alpha`-strength
/// interactions over time `t`; `m` defaults to `(2n)^2` terms.
pub fn spurious_coupling_bound(n: usize, d: usize, alpha: f64, h: f64, t: f64, m: Option<f64>, eps: f64) -> Result<SpuriousBound> {
    let m = m.unwrap_or(((2 * n) as f64).powi(2));
    let x = 2.0 * alpha * h * t * m;
    if !(x < 0.5) || alpha < 0.0 {
        return Err(Error::BoundInapplicable(format!("2 alpha h t m = {x} must lie in [0, 1/2)")));
    }
    if h <= 0.0 || t <= 0.0 || d == 0 {
        return Err(Error::BoundInapplicable("h, t and d must be positive".into()));
    }
    let k = 2 * d.div_ceil(4);
    Ok(SpuriousBound {
        bound: 2.0 * x.powi(k as i32),
        alpha_threshold: (eps / 2.0).powf(1.0 / k as f64) / (2.0 * h * t * m),
    })
}
