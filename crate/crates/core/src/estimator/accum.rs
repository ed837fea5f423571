use num_complex::Complex;

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::scalar::{Cx, Real};

const LIMBS: usize = 36;
/// Bit position of `2^0` inside the fixed-point register.
const BIAS: i32 = 1074;

/// Exact sum of `f64` values in a wide fixed-point register, so the result
/// is independent of addition order. Rounded once, half to even, on read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactSum {
    limbs: [u64; LIMBS],
    non_finite: bool,
}

impl Default for ExactSum {
    fn default() -> Self {
        ExactSum { limbs: [0; LIMBS], non_finite: false }
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if !x.is_finite() {
            self.non_finite = true;
            return;
        }
        if x == 0.0 {
            return;
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        // x = mant * 2^(pos - BIAS)
        let (mant, pos) = if exp == 0 { (frac, 0) } else { (frac | (1u64 << 52), exp - 1) };
        let pos = pos as usize;
        let wide = (mant as u128) << (pos % 64);
        let (lo, hi) = (wide as u64, (wide >> 64) as u64);
        let limb = pos / 64;
        if x > 0.0 {
            self.add_at(limb, lo);
            self.add_at(limb + 1, hi);
        } else {
            self.sub_at(limb, lo);
            self.sub_at(limb + 1, hi);
        }
    }

    fn add_at(&mut self, mut i: usize, v: u64) {
        let (s, mut carry) = self.limbs[i].overflowing_add(v);
        self.limbs[i] = s;
        while carry && i + 1 < LIMBS {
            i += 1;
            let (s, c) = self.limbs[i].overflowing_add(1);
            self.limbs[i] = s;
            carry = c;
        }
    }

    fn sub_at(&mut self, mut i: usize, v: u64) {
        let (s, mut borrow) = self.limbs[i].overflowing_sub(v);
        self.limbs[i] = s;
        while borrow && i + 1 < LIMBS {
            i += 1;
            let (s, b) = self.limbs[i].overflowing_sub(1);
            self.limbs[i] = s;
            borrow = b;
        }
    }

    pub fn merge(&mut self, other: &ExactSum) {
        let mut carry = false;
        for i in 0..LIMBS {
            let (s1, c1) = self.limbs[i].overflowing_add(other.limbs[i]);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            self.limbs[i] = s2;
            carry = c1 || c2;
        }
        self.non_finite |= other.non_finite;
    }

    /// The sum rounded to the nearest `f64`.
    pub fn value(&self) -> f64 {
        if self.non_finite {
            return f64::NAN;
        }
        let negative = self.limbs[LIMBS - 1] >> 63 == 1;
        let mut mag = self.limbs;
        if negative {
            let mut carry = true;
            for l in mag.iter_mut() {
                let (s, c) = (!*l).overflowing_add(carry as u64);
                *l = s;
                carry = c;
            }
        }
        let Some(top) = (0..LIMBS).rev().find(|&i| mag[i] != 0) else {
            return 0.0;
        };
        let h = top * 64 + 63 - mag[top].leading_zeros() as usize;
        let bit = |k: usize| (mag[k / 64] >> (k % 64)) & 1;
        let v = if h < 53 {
            // below 2^(53 - BIAS): exact as a subnormal or small normal
            let m = mag[0] as f64;
            m * 2f64.powi(-BIAS)
        } else {
            let lsb = h - 52;
            let mut m: u64 = 0;
            for k in (lsb..=h).rev() {
                m = (m << 1) | bit(k);
            }
            let round = bit(lsb - 1);
            let sticky = (0..lsb - 1).any(|k| bit(k) == 1);
            let mut e = lsb as i32 - BIAS;
            if round == 1 && (sticky || m & 1 == 1) {
                m += 1;
                if m == 1 << 53 {
                    m >>= 1;
                    e += 1;
                }
            }
            let half = e / 2;
            (m as f64) * 2f64.powi(half) * 2f64.powi(e - half)
        };
        if negative {
            -v
        } else {
            v
        }
    }
}

/// Estimation mode for one process-matrix entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Mean,
    /// Median, taken separately on real and imaginary parts, of the first
    /// `blocks` block means of `block_size` consecutive shots.
    MedianOfMeans { block_size: usize, blocks: usize },
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Mean => "mean",
            Mode::MedianOfMeans { .. } => "mom",
        }
    }
}

/// Running estimate of one entry. Sums are exact, so merging accumulators
/// over consecutive pieces of a stream reproduces the whole-stream result
/// bit for bit.
#[derive(Clone, Debug)]
pub struct EstimatorAccumulator {
    entry: (PauliString, PauliString),
    mode: Mode,
    count: u64,
    re: ExactSum,
    im: ExactSum,
    block_re: ExactSum,
    block_im: ExactSum,
    in_block: usize,
    block_means: Vec<(f64, f64)>,
}

impl EstimatorAccumulator {
    pub fn new(gamma: PauliString, delta: PauliString, mode: Mode) -> Result<Self> {
        if let Mode::MedianOfMeans { block_size, blocks } = mode {
            if block_size == 0 || blocks == 0 {
                return Err(Error::InvalidParameter("median-of-means needs non-empty blocks".into()));
            }
        }
        Ok(EstimatorAccumulator {
            entry: (gamma, delta),
            mode,
            count: 0,
            re: ExactSum::new(),
            im: ExactSum::new(),
            block_re: ExactSum::new(),
            block_im: ExactSum::new(),
            in_block: 0,
            block_means: Vec::new(),
        })
    }

    pub fn entry(&self) -> (&PauliString, &PauliString) {
        (&self.entry.0, &self.entry.1)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn completed_blocks(&self) -> usize {
        self.block_means.len()
    }

    pub fn push<T: Real>(&mut self, value: Cx<T>) {
        let (re, im) = (value.re.as_f64(), value.im.as_f64());
        self.count += 1;
        self.re.add(re);
        self.im.add(im);
        if let Mode::MedianOfMeans { block_size, blocks } = self.mode {
            if self.block_means.len() < blocks {
                self.block_re.add(re);
                self.block_im.add(im);
                self.in_block += 1;
                if self.in_block == block_size {
                    self.close_block(block_size);
                }
            }
        }
    }

    fn close_block(&mut self, block_size: usize) {
        let b = block_size as f64;
        self.block_means.push((self.block_re.value() / b, self.block_im.value() / b));
        self.block_re = ExactSum::new();
        self.block_im = ExactSum::new();
        self.in_block = 0;
    }

    /// Appends `other`, which must have seen the shots directly after ours.
    pub fn merge(&mut self, other: &EstimatorAccumulator) -> Result<()> {
        if self.entry != other.entry || self.mode != other.mode {
            return Err(Error::IncompatibleAccumulators("entry or mode differs".into()));
        }
        if let Mode::MedianOfMeans { block_size, blocks } = self.mode {
            let full = self.block_means.len() >= blocks;
            if self.in_block != 0 && !full {
                return Err(Error::IncompatibleAccumulators("left accumulator ends inside a block".into()));
            }
            if !full {
                let room = blocks - self.block_means.len();
                self.block_means.extend(other.block_means.iter().take(room));
                if other.block_means.len() < room {
                    self.block_re = other.block_re.clone();
                    self.block_im = other.block_im.clone();
                    self.in_block = other.in_block;
                }
            }
            debug_assert!(self.in_block < block_size);
        }
        self.count += other.count;
        self.re.merge(&other.re);
        self.im.merge(&other.im);
        Ok(())
    }

    pub fn mean(&self) -> Result<Complex<f64>> {
        if self.count == 0 {
            return Err(Error::NoData);
        }
        let c = self.count as f64;
        Ok(Complex::new(self.re.value() / c, self.im.value() / c))
    }

    /// The estimate in this accumulator's mode.
    pub fn estimate(&self) -> Result<Complex<f64>> {
        match self.mode {
            Mode::Mean => self.mean(),
            Mode::MedianOfMeans { .. } => {
                if self.block_means.is_empty() {
                    return Err(Error::NoData);
                }
                let re: Vec<f64> = self.block_means.iter().map(|b| b.0).collect();
                let im: Vec<f64> = self.block_means.iter().map(|b| b.1).collect();
                Ok(Complex::new(median(re), median(im)))
            }
        }
    }
}

/// Median; the mean of the two central values for even counts.
pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_of(xs: &[f64]) -> f64 {
        let mut s = ExactSum::new();
        for &x in xs {
            s.add(x);
        }
        s.value()
    }

    #[test]
    fn exact_sum_cancels() {
        assert_eq!(sum_of(&[1e100, 1.0, -1e100]), 1.0);
        assert_eq!(sum_of(&[0.1, 0.2, 0.3]), 0.6);
        assert_eq!(sum_of(&[]), 0.0);
        assert_eq!(sum_of(&[-2.5, 0.5]), -2.0);
        assert_eq!(sum_of(&[f64::MAX, -f64::MAX, 3.0]), 3.0);
        assert_eq!(sum_of(&[5e-324, 5e-324]), 1e-323);
        assert_eq!(sum_of(&[f64::MIN_POSITIVE, -5e-324]), f64::MIN_POSITIVE - 5e-324);
        assert!(sum_of(&[1.0, f64::NAN]).is_nan());
    }

    #[test]
    fn exact_sum_rounds_half_to_even() {
        let one = 1.0f64;
        let ulp = f64::EPSILON;
        assert_eq!(sum_of(&[one, ulp / 2.0]), one);
        assert_eq!(sum_of(&[one + ulp, ulp / 2.0]), one + 2.0 * ulp);
        assert_eq!(sum_of(&[one, ulp / 2.0, ulp / 1024.0]), one + ulp);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1013) as f64 * 1.37e-3 - 0.5).collect();
        let mut a = ExactSum::new();
        let mut b = ExactSum::new();
        for (i, &x) in xs.iter().enumerate() {
            if i < 400 { a.add(x) } else { b.add(x) }
        }
        b.merge(&a);
        assert_eq!(b.value(), sum_of(&xs));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn mom_accumulator() {
        let id = PauliString::identity(1);
        let mut acc = EstimatorAccumulator::new(id.clone(), id.clone(), Mode::MedianOfMeans { block_size: 2, blocks: 3 }).unwrap();
        for v in [1.0, 3.0, 10.0, 10.0, 0.0, 0.0, 100.0] {
            acc.push(Complex::new(v, -v));
        }
        assert_eq!(acc.completed_blocks(), 3);
        assert_eq!(acc.estimate().unwrap(), Complex::new(2.0, -2.0));

        let mut left = EstimatorAccumulator::new(id.clone(), id.clone(), Mode::MedianOfMeans { block_size: 2, blocks: 3 }).unwrap();
        left.push(Complex::new(1.0, 0.0));
        let right = left.clone();
        assert!(matches!(left.merge(&right), Err(Error::IncompatibleAccumulators(_))));
        let empty = EstimatorAccumulator::new(id.clone(), id, Mode::Mean).unwrap();
        assert!(matches!(empty.estimate(), Err(Error::NoData)));
    }
}
