//! Entry sums of random trace-normalized positive semidefinite matrices.

use rand::Rng;
use rand_distr::StandardNormal;

/// Mean and sample standard deviation of `1^T X 1` over `trials` draws of
/// `X = V V^dag / Tr(V V^dag)`, `V` a `dim x dim` complex Gaussian matrix.
pub fn random_psd_sum<R: Rng + ?Sized>(dim: usize, trials: usize, rng: &mut R) -> (f64, f64) {
    assert!(dim >= 1, "dimension must be positive");
    let sums: Vec<f64> = (0..trials).map(|_| psd_sum(dim, rng)).collect();
    let k = sums.len() as f64;
    let mean = sums.iter().sum::<f64>() / k;
    let std = if sums.len() > 1 {
        (sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// `1^T V V^dag 1 = |V^dag 1|^2` and `Tr(V V^dag) = |V|_F^2`; `X` is never formed.
fn psd_sum<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> f64 {
    let mut col_re = vec![0.0f64; dim];
    let mut col_im = vec![0.0f64; dim];
    let mut frob = 0.0;
    for _row in 0..dim {
        for j in 0..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            col_re[j] += re;
            col_im[j] -= im;
            frob += re * re + im * im;
        }
    }
    let num: f64 = col_re.iter().zip(&col_im).map(|(a, b)| a * a + b * b).sum();
    num / frob
}
