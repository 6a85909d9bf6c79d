//! Weight normalisation and systematic resampling shared by the particle
//! filters.

use rand::Rng;

use crate::error::{Error, Result};

/// Filters refuse to continue below this effective sample size.
pub(crate) const MIN_ESS: f64 = 5.0;

/// Normalises log-weights in place into probabilities and returns the
/// effective sample size. Fails on `day` if every weight is zero or the
/// effective sample size drops below [`MIN_ESS`].
pub(crate) fn normalise_log_weights(log_w: &[f64], day: usize) -> Result<(Vec<f64>, f64)> {
    let particles = log_w.len();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Degenerate {
            day,
            ess: 0.0,
            particles,
        });
    }
    let mut w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    let ess = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    if ess < MIN_ESS {
        return Err(Error::Degenerate { day, ess, particles });
    }
    Ok((w, ess))
}

/// Systematic resampling: `n` ancestor indices for normalised weights.
pub(crate) fn systematic<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let u0: f64 = rng.random::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    for k in 0..n {
        let u = u0 + k as f64 / n as f64;
        while u > cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}
