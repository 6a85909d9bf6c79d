#![allow(dead_code)]

/// Number of intervals in the brute-force posterior grids.
pub const GRID: usize = 4096;

/// Mean and variance of the density proportional to `exp(log_kernel)` on
/// `[lo, hi]`, by composite Simpson's rule over `GRID` intervals.
pub fn grid_moments(log_kernel: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let h = (hi - lo) / GRID as f64;
    let xs: Vec<f64> = (0..=GRID).map(|i| lo + h * i as f64).collect();
    let logs: Vec<f64> = xs.iter().map(|&x| log_kernel(x)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let simpson = |g: &dyn Fn(usize) -> f64| {
        let mut s = g(0) + g(GRID);
        for i in 1..GRID {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i);
        }
        s * h / 3.0
    };
    let z = simpson(&|i| f[i]);
    let mean = simpson(&|i| xs[i] * f[i]) / z;
    let var = simpson(&|i| (xs[i] - mean).powi(2) * f[i]) / z;
    (mean, var)
}

/// `ln C(n, k)` by summing logarithms, independent of special functions.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}
