use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Default shot cap for [`convergence_samples`].
pub const DEFAULT_SHOT_CAP: usize = 1_000_000;

/// Median-of-means budget: `b` shots per block, `k_blocks` blocks, `m = b * k_blocks`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplePlan {
    pub variance_bound: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub b: usize,
    pub k_blocks: usize,
    pub m: usize,
}

fn check(variance: f64, epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) || !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!("variance {variance}, epsilon {epsilon}, delta {delta}")));
    }
    Ok(())
}

fn plan(variance: f64, epsilon: f64, delta: f64, b_scale: f64, log_scale: f64) -> Result<SamplePlan> {
    check(variance, epsilon, delta)?;
    let b = ((34.0 * variance * b_scale / (epsilon * epsilon)).ceil() as usize).max(1);
    let k_blocks = ((2.0 * (2.0 * log_scale / delta).ln()).ceil() as usize).max(1);
    Ok(SamplePlan { variance_bound: variance, epsilon, delta, b, k_blocks, m: b * k_blocks })
}

/// One entry to error `epsilon` with failure probability `delta`:
/// `b = ceil(34 Var / eps^2)`, `k = ceil(2 ln(2/delta))`.
pub fn mom_plan(variance: f64, epsilon: f64, delta: f64) -> Result<SamplePlan> {
    plan(variance, epsilon, delta, 1.0, 1.0)
}

/// All `d_count` entries simultaneously: `k = ceil(2 ln(2 D / delta))`.
pub fn mom_plan_all_entries(variance: f64, epsilon: f64, delta: f64, d_count: usize) -> Result<SamplePlan> {
    plan(variance, epsilon, delta, 1.0, d_count as f64)
}

/// Every one of `D` entries to `epsilon / sqrt(D)` with failure probability
/// `delta / D`, so the whole vector of errors is within `epsilon` in l2 norm.
pub fn mom_plan_l2(variance: f64, epsilon: f64, delta: f64, d_count: usize) -> Result<SamplePlan> {
    plan(variance, epsilon, delta, d_count as f64, d_count as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Convergence {
    /// Shot count at which the running mean completed `window` consecutive
    /// updates within `epsilon` of the truth.
    Converged(usize),
    /// No convergence within this many shots.
    Censored(usize),
}

impl Convergence {
    pub fn samples(&self) -> usize {
        match *self {
            Convergence::Converged(k) | Convergence::Censored(k) => k,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, Convergence::Censored(_))
    }
}

/// Feeds `values` into a running mean and returns the first shot count `k`
/// such that the means after shots `k - window + 1 ..= k` all lie within
/// `epsilon` of `truth`.
pub fn convergence_samples<T: Real, I>(values: I, truth: Cx<T>, epsilon: f64, window: usize, cap: usize) -> Convergence
where
    I: IntoIterator<Item = Cx<T>>,
{
    let (tr, ti) = (truth.re.as_f64(), truth.im.as_f64());
    let (mut sr, mut si) = (0.0f64, 0.0f64);
    let mut run = 0usize;
    let mut seen = 0usize;
    for v in values.into_iter().take(cap) {
        seen += 1;
        sr += v.re.as_f64();
        si += v.im.as_f64();
        let k = seen as f64;
        let err = (sr / k - tr).hypot(si / k - ti);
        if err < epsilon {
            run += 1;
            if run >= window.max(1) {
                return Convergence::Converged(seen);
            }
        } else {
            run = 0;
        }
    }
    Convergence::Censored(seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn plan_example() {
        let p = mom_plan(1.0, 0.1, 0.05).unwrap();
        assert_eq!((p.b, p.k_blocks, p.m), (3400, 8, 27200));
        let all = mom_plan_all_entries(1.0, 0.1, 0.05, 7).unwrap();
        assert_eq!(all.k_blocks, (2.0 * (2.0 * 7.0 / 0.05f64).ln()).ceil() as usize);
        let l2 = mom_plan_l2(1.0, 0.1, 0.05, 7).unwrap();
        assert_eq!(l2.b, 7 * 3400);
        assert!(mom_plan(1.0, 0.0, 0.05).is_err());
        assert!(mom_plan(1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn blocks_shrink_with_delta() {
        let mut last = usize::MAX;
        for d in [0.001, 0.01, 0.05, 0.1, 0.3, 0.9] {
            let k = mom_plan(1.0, 0.1, d).unwrap().k_blocks;
            assert!(k <= last);
            last = k;
        }
    }

    #[test]
    fn constant_stream_converges_after_window() {
        let truth = Complex::new(0.5, -0.25);
        let got = convergence_samples(std::iter::repeat(truth), truth, 0.05, 100, DEFAULT_SHOT_CAP);
        assert_eq!(got, Convergence::Converged(100));
        let off = convergence_samples(std::iter::repeat(Complex::new(1.0, 0.0)), truth, 0.05, 10, 500);
        assert_eq!(off, Convergence::Censored(500));
    }
}
