//! Probability laws used by the prevalence, renewal and surveillance models.
//!
//! Outcomes are `f64` for every law. Discrete laws take integer values
//! (stored as `f64`) or, for [`Law::Discrete`], an explicit finite support.
//! A [`Distribution`] can only be built through its validating constructors,
//! so every operation here may assume valid parameters.

use std::f64::consts::{E, PI, SQRT_2};

use rand::Rng;
use rand_distr::Distribution as _;
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{digamma, gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::{self, QUADRATURE_TOL};
use crate::rng::RandomSeed;

/// Discrete tails are truncated once their remaining mass drops below this.
pub const TAIL_MASS: f64 = 1e-12;

/// Cumulative masses within this of a quantile level count as reaching it,
/// so flat CDF regions resolve to their infimum despite rounding.
const QUANTILE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Beta { alpha: f64, beta: f64 },
    Binomial { trials: u64, p: f64 },
    BetaBinomial { trials: u64, alpha: f64, beta: f64 },
    Hypergeometric { population: u64, successes: u64, draws: u64 },
    Gamma { shape: f64, rate: f64 },
    Poisson { rate: f64 },
    /// Mean/dispersion form: variance is `mean + mean² / dispersion`.
    NegativeBinomial { mean: f64, dispersion: f64 },
    LogNormal { mu: f64, sigma: f64 },
    /// `sigma == 0` is a point mass at `mu`.
    Normal { mu: f64, sigma: f64 },
    /// Sorted, de-duplicated support with normalised positive weights.
    Discrete { support: Vec<f64>, weights: Vec<f64> },
    /// Finite mixture; components are all discrete or all continuous.
    Mixture { components: Vec<Distribution>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    law: Law,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `a * ln(x)` with the convention `0 * ln(0) = 0`.
fn xlogy(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * x.ln()
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn is_integer(x: f64) -> bool {
    x.is_finite() && x.fract() == 0.0
}

fn normalise(weights: &[f64]) -> Result<Vec<f64>> {
    for &w in weights {
        non_negative("weight", w)?;
    }
    let total = numeric::sum(weights.iter().copied());
    if total <= 0.0 {
        return Err(Error::invalid("weights", "total weight must be positive"));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

impl Distribution {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self { law: Law::Beta { alpha, beta } })
    }

    pub fn binomial(trials: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
        }
        Ok(Self { law: Law::Binomial { trials, p } })
    }

    pub fn beta_binomial(trials: u64, alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self { law: Law::BetaBinomial { trials, alpha, beta } })
    }

    pub fn hypergeometric(population: u64, successes: u64, draws: u64) -> Result<Self> {
        if successes > population {
            return Err(Error::invalid("successes", "cannot exceed the population size"));
        }
        if draws > population {
            return Err(Error::invalid("draws", "cannot exceed the population size"));
        }
        Ok(Self {
            law: Law::Hypergeometric { population, successes, draws },
        })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(Self { law: Law::Gamma { shape, rate } })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        non_negative("rate", rate)?;
        Ok(Self { law: Law::Poisson { rate } })
    }

    pub fn negative_binomial(mean: f64, dispersion: f64) -> Result<Self> {
        positive("mean", mean)?;
        positive("dispersion", dispersion)?;
        Ok(Self {
            law: Law::NegativeBinomial { mean, dispersion },
        })
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", "must be finite"));
        }
        positive("sigma", sigma)?;
        Ok(Self { law: Law::LogNormal { mu, sigma } })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", "must be finite"));
        }
        non_negative("sigma", sigma)?;
        Ok(Self { law: Law::Normal { mu, sigma } })
    }

    /// Finite law on `support`. Duplicate points are merged, zero-weight
    /// points dropped and the weights normalised.
    pub fn discrete(support: &[f64], weights: &[f64]) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::invalid("weights", "length must match the support"));
        }
        if support.is_empty() {
            return Err(Error::invalid("support", "must be non-empty"));
        }
        if let Some(x) = support.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid("support", format!("non-finite point {x}")));
        }
        let weights = normalise(weights)?;
        let mut pairs: Vec<(f64, f64)> = support
            .iter()
            .copied()
            .zip(weights)
            .filter(|&(_, w)| w > 0.0)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        let (support, weights): (Vec<f64>, Vec<f64>) = merged.into_iter().unzip();
        let weights = normalise(&weights)?;
        Ok(Self { law: Law::Discrete { support, weights } })
    }

    /// Point mass at `x`.
    pub fn point_mass(x: f64) -> Result<Self> {
        Self::discrete(&[x], &[1.0])
    }

    /// Equal-weight law over `samples`.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        Self::discrete(samples, &vec![1.0; samples.len()])
    }

    /// Finite mixture. Identical components are merged, so a mixture of
    /// copies of one law is represented by that law alone.
    pub fn mixture(components: Vec<Distribution>, weights: &[f64]) -> Result<Self> {
        if components.len() != weights.len() {
            return Err(Error::invalid("weights", "length must match the components"));
        }
        if components.is_empty() {
            return Err(Error::invalid("components", "must be non-empty"));
        }
        let discrete = components[0].is_discrete();
        if components.iter().any(|c| c.is_discrete() != discrete) {
            return Err(Error::invalid(
                "components",
                "cannot mix discrete and continuous laws",
            ));
        }
        let weights = normalise(weights)?;
        let mut merged: Vec<(Distribution, f64)> = Vec::new();
        for (c, w) in components.into_iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(d, _)| *d == c) {
                Some(entry) => entry.1 += w,
                None => merged.push((c, w)),
            }
        }
        if merged.len() == 1 {
            return Ok(merged.pop().map(|(d, _)| d).expect("one component"));
        }
        let (components, weights): (Vec<_>, Vec<_>) = merged.into_iter().unzip();
        Ok(Self {
            law: Law::Mixture { components, weights },
        })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn name(&self) -> &'static str {
        match self.law {
            Law::Beta { .. } => "Beta",
            Law::Binomial { .. } => "Binomial",
            Law::BetaBinomial { .. } => "BetaBinomial",
            Law::Hypergeometric { .. } => "Hypergeometric",
            Law::Gamma { .. } => "Gamma",
            Law::Poisson { .. } => "Poisson",
            Law::NegativeBinomial { .. } => "NegativeBinomial",
            Law::LogNormal { .. } => "LogNormal",
            Law::Normal { .. } => "Normal",
            Law::Discrete { .. } => "Discrete",
            Law::Mixture { .. } => "Mixture",
        }
    }

    /// Discrete laws have a mass function; the rest have densities. A
    /// degenerate Normal counts as continuous.
    pub fn is_discrete(&self) -> bool {
        match &self.law {
            Law::Beta { .. } | Law::Gamma { .. } | Law::LogNormal { .. } | Law::Normal { .. } => {
                false
            }
            Law::Mixture { components, .. } => components[0].is_discrete(),
            _ => true,
        }
    }

    /// Closed support interval `[lo, hi]` (possibly infinite).
    pub fn support_bounds(&self) -> (f64, f64) {
        match &self.law {
            Law::Beta { .. } => (0.0, 1.0),
            Law::Binomial { trials, .. } | Law::BetaBinomial { trials, .. } => (0.0, *trials as f64),
            Law::Hypergeometric { population, successes, draws } => {
                let lo = (draws + successes).saturating_sub(*population);
                (lo as f64, (*draws).min(*successes) as f64)
            }
            Law::Gamma { .. } | Law::LogNormal { .. } => (0.0, f64::INFINITY),
            Law::Poisson { .. } | Law::NegativeBinomial { .. } => (0.0, f64::INFINITY),
            Law::Normal { mu, sigma } if *sigma == 0.0 => (*mu, *mu),
            Law::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Law::Discrete { support, .. } => (support[0], support[support.len() - 1]),
            Law::Mixture { components, .. } => components.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), c| {
                    let (a, b) = c.support_bounds();
                    (lo.min(a), hi.max(b))
                },
            ),
        }
    }

    fn out_of_support(&self, x: f64) -> Error {
        Error::OutOfSupport { x, law: self.name() }
    }

    /// Log density (continuous) or log mass (discrete) at `x`.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support_bounds();
        if x.is_nan() || x < lo || x > hi {
            return Err(self.out_of_support(x));
        }
        let integral = || {
            if is_integer(x) {
                Ok(())
            } else {
                Err(self.out_of_support(x))
            }
        };
        Ok(match &self.law {
            Law::Beta { alpha, beta } => {
                xlogy(alpha - 1.0, x) + xlogy(beta - 1.0, 1.0 - x) - ln_beta(*alpha, *beta)
            }
            Law::Binomial { trials, p } => {
                integral()?;
                let n = *trials as f64;
                ln_choose(n, x) + xlogy(x, *p) + xlogy(n - x, 1.0 - p)
            }
            Law::BetaBinomial { trials, alpha, beta } => {
                integral()?;
                let n = *trials as f64;
                ln_choose(n, x) + ln_beta(x + alpha, n - x + beta) - ln_beta(*alpha, *beta)
            }
            Law::Hypergeometric { population, successes, draws } => {
                integral()?;
                let (big_n, k, n) = (*population as f64, *successes as f64, *draws as f64);
                ln_choose(k, x) + ln_choose(big_n - k, n - x) - ln_choose(big_n, n)
            }
            Law::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(*shape) + xlogy(shape - 1.0, x) - rate * x
            }
            Law::Poisson { rate } => {
                integral()?;
                xlogy(x, *rate) - rate - ln_gamma(x + 1.0)
            }
            Law::NegativeBinomial { mean, dispersion } => {
                integral()?;
                let k = *dispersion;
                ln_gamma(x + k) - ln_gamma(k) - ln_gamma(x + 1.0)
                    + k * (k / (k + mean)).ln()
                    + xlogy(x, mean / (k + mean))
            }
            Law::LogNormal { mu, sigma } => {
                if x == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let z = (x.ln() - mu) / sigma;
                    -0.5 * z * z - x.ln() - sigma.ln() - 0.5 * (2.0 * PI).ln()
                }
            }
            Law::Normal { mu, sigma } => {
                if *sigma == 0.0 {
                    f64::INFINITY
                } else {
                    let z = (x - mu) / sigma;
                    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
                }
            }
            Law::Discrete { support, weights } => {
                match support.binary_search_by(|s| s.total_cmp(&x)) {
                    Ok(i) => weights[i].ln(),
                    Err(_) => return Err(self.out_of_support(x)),
                }
            }
            Law::Mixture { components, weights } => {
                let total = numeric::sum(
                    components
                        .iter()
                        .zip(weights)
                        .map(|(c, w)| w * c.density_at(x)),
                );
                if total == 0.0 && self.is_discrete() {
                    return Err(self.out_of_support(x));
                }
                total.ln()
            }
        })
    }

    /// Density or mass at `x`, zero outside the support.
    pub fn density_at(&self, x: f64) -> f64 {
        self.log_density(x).map(f64::exp).unwrap_or(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support_bounds();
        if x < lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match &self.law {
            Law::Beta { alpha, beta } => beta_reg(*alpha, *beta, x),
            Law::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(*shape, rate * x)
                }
            }
            Law::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Law::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            Law::Poisson { rate } => {
                if *rate == 0.0 {
                    1.0
                } else {
                    gamma_ur(x.floor() + 1.0, *rate)
                }
            }
            Law::Binomial { trials, p } => {
                let k = x.floor();
                beta_reg(*trials as f64 - k, k + 1.0, 1.0 - p)
            }
            Law::NegativeBinomial { mean, dispersion } => {
                beta_reg(*dispersion, x.floor() + 1.0, dispersion / (dispersion + mean))
            }
            Law::Mixture { components, weights } => {
                numeric::sum(components.iter().zip(weights).map(|(c, w)| w * c.cdf(x)))
            }
            _ => {
                let table = self.mass_table().expect("discrete law");
                numeric::sum(table.iter().take_while(|(s, _)| *s <= x).map(|(_, w)| *w))
            }
        }
    }

    /// Support points and masses of a discrete law, in increasing order.
    /// Unbounded laws are truncated once the remaining tail mass is below
    /// [`TAIL_MASS`]. `None` for continuous laws.
    pub fn mass_table(&self) -> Option<Vec<(f64, f64)>> {
        if !self.is_discrete() {
            return None;
        }
        let bounded = |this: &Self, lo: f64, hi: f64| -> Vec<(f64, f64)> {
            let mut out = Vec::with_capacity((hi - lo) as usize + 1);
            let mut x = lo;
            while x <= hi {
                out.push((x, this.density_at(x)));
                x += 1.0;
            }
            out
        };
        Some(match &self.law {
            Law::Discrete { support, weights } => {
                support.iter().copied().zip(weights.iter().copied()).collect()
            }
            Law::Poisson { .. } | Law::NegativeBinomial { .. } => {
                let (mean, _) = self.moments();
                let mut out = Vec::new();
                let mut cumulative = 0.0;
                let mut x = 0.0;
                loop {
                    let m = self.density_at(x);
                    cumulative += m;
                    out.push((x, m));
                    if x >= mean && 1.0 - cumulative < TAIL_MASS {
                        break;
                    }
                    x += 1.0;
                }
                out
            }
            Law::Mixture { components, weights } => {
                let mut points: Vec<f64> = components
                    .iter()
                    .flat_map(|c| c.mass_table().expect("discrete component"))
                    .map(|(x, _)| x)
                    .collect();
                points.sort_by(f64::total_cmp);
                points.dedup();
                points
                    .into_iter()
                    .map(|x| {
                        let m = numeric::sum(
                            components.iter().zip(weights).map(|(c, w)| w * c.density_at(x)),
                        );
                        (x, m)
                    })
                    .collect()
            }
            _ => {
                let (lo, hi) = self.support_bounds();
                bounded(self, lo, hi)
            }
        })
    }

    /// Mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        match &self.law {
            Law::Beta { alpha, beta } => {
                let s = alpha + beta;
                (alpha / s, alpha * beta / (s * s * (s + 1.0)))
            }
            Law::Binomial { trials, p } => {
                let n = *trials as f64;
                (n * p, n * p * (1.0 - p))
            }
            Law::BetaBinomial { trials, alpha, beta } => {
                let (n, s) = (*trials as f64, alpha + beta);
                (n * alpha / s, n * alpha * beta * (s + n) / (s * s * (s + 1.0)))
            }
            Law::Hypergeometric { population, successes, draws } => {
                let (big_n, k, n) = (*population as f64, *successes as f64, *draws as f64);
                if big_n == 0.0 {
                    return (0.0, 0.0);
                }
                let mean = n * k / big_n;
                let var = if big_n <= 1.0 {
                    0.0
                } else {
                    n * k * (big_n - k) * (big_n - n) / (big_n * big_n * (big_n - 1.0))
                };
                (mean, var)
            }
            Law::Gamma { shape, rate } => (shape / rate, shape / (rate * rate)),
            Law::Poisson { rate } => (*rate, *rate),
            Law::NegativeBinomial { mean, dispersion } => (*mean, mean + mean * mean / dispersion),
            Law::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                ((mu + 0.5 * s2).exp(), s2.exp_m1() * (2.0 * mu + s2).exp())
            }
            Law::Normal { mu, sigma } => (*mu, sigma * sigma),
            Law::Discrete { support, weights } => {
                let mean = numeric::sum(support.iter().zip(weights).map(|(x, w)| w * x));
                let var = numeric::sum(
                    support.iter().zip(weights).map(|(x, w)| w * (x - mean) * (x - mean)),
                );
                (mean, var)
            }
            Law::Mixture { components, weights } => {
                let moments: Vec<(f64, f64)> = components.iter().map(Self::moments).collect();
                let mean = numeric::sum(moments.iter().zip(weights).map(|((m, _), w)| w * m));
                let var = numeric::sum(
                    moments
                        .iter()
                        .zip(weights)
                        .map(|((m, v), w)| w * (v + (m - mean) * (m - mean))),
                );
                (mean, var)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    pub fn variance(&self) -> f64 {
        self.moments().1
    }

    /// Differential entropy (continuous) or Shannon entropy (discrete), in
    /// nats. Closed form where available; mixtures of continuous laws use
    /// adaptive quadrature.
    pub fn entropy(&self) -> Result<f64> {
        Ok(match &self.law {
            Law::Beta { alpha, beta } => {
                ln_beta(*alpha, *beta) - (alpha - 1.0) * digamma(*alpha)
                    - (beta - 1.0) * digamma(*beta)
                    + (alpha + beta - 2.0) * digamma(alpha + beta)
            }
            Law::Gamma { shape, rate } => {
                shape - rate.ln() + ln_gamma(*shape) + (1.0 - shape) * digamma(*shape)
            }
            Law::Normal { sigma, .. } => {
                if *sigma == 0.0 {
                    return Err(Error::NegativeInfiniteEntropy);
                }
                0.5 * (2.0 * PI * E * sigma * sigma).ln()
            }
            Law::LogNormal { mu, sigma } => mu + 0.5 * (2.0 * PI * E * sigma * sigma).ln(),
            Law::Mixture { .. } if !self.is_discrete() => self.entropy_by_quadrature()?,
            _ => {
                let table = self.mass_table().expect("discrete law");
                -numeric::sum(table.iter().filter(|(_, w)| *w > 0.0).map(|(_, w)| w * w.ln()))
            }
        })
    }

    fn entropy_by_quadrature(&self) -> Result<f64> {
        let Law::Mixture { components, .. } = &self.law else {
            unreachable!("only continuous mixtures integrate numerically");
        };
        if components
            .iter()
            .any(|c| matches!(c.law, Law::Normal { sigma, .. } if sigma == 0.0))
        {
            return Err(Error::NegativeInfiniteEntropy);
        }
        // Break the range at mixture quantiles so each panel is smooth, and
        // extend it to the extreme tails of the components.
        let lo = components
            .iter()
            .filter_map(|c| c.quantile(1e-14).ok())
            .fold(f64::INFINITY, f64::min);
        let hi = components
            .iter()
            .filter_map(|c| c.quantile(1.0 - 1e-14).ok())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut breaks = vec![lo, hi];
        for p in [1e-6, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999, 1.0 - 1e-6] {
            breaks.push(self.quantile(p)?);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let integrand = |x: f64| {
            let f = self.density_at(x);
            if f > 0.0 && f.is_finite() {
                -f * f.ln()
            } else {
                0.0
            }
        };
        let panels = breaks.len().saturating_sub(1).max(1) as f64;
        Ok(numeric::sum(breaks.windows(2).map(|w| {
            numeric::integrate(integrand, w[0], w[1], QUADRATURE_TOL / panels)
        })))
    }

    /// Lower quantile: the smallest `x` with `cdf(x) >= level`.
    pub fn quantile(&self, level: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::invalid("level", format!("must lie in [0, 1], got {level}")));
        }
        let (lo, hi) = self.support_bounds();
        if lo == hi {
            return Ok(lo);
        }
        if self.is_discrete() {
            let table = self.mass_table().expect("discrete law");
            let mut cumulative = 0.0;
            for &(x, w) in &table {
                cumulative += w;
                if cumulative >= level - QUANTILE_SLACK {
                    return Ok(x);
                }
            }
            return Ok(table.last().expect("non-empty table").0);
        }
        if level == 0.0 {
            return Ok(lo);
        }
        if level == 1.0 {
            return Ok(hi);
        }
        Ok(match &self.law {
            Law::Normal { mu, sigma } => mu - sigma * SQRT_2 * erfc_inv(2.0 * level),
            Law::LogNormal { mu, sigma } => (mu - sigma * SQRT_2 * erfc_inv(2.0 * level)).exp(),
            Law::Beta { .. } => numeric::invert_monotone(|x| self.cdf(x), level, 0.0, 1.0),
            Law::Gamma { .. } => {
                let upper = self.upper_bracket(level);
                numeric::invert_monotone(|x| self.cdf(x), level, 0.0, upper)
            }
            Law::Mixture { components, .. } => {
                let qs: Vec<f64> = components
                    .iter()
                    .map(|c| c.quantile(level))
                    .collect::<Result<_>>()?;
                let a = qs.iter().copied().fold(f64::INFINITY, f64::min);
                let b = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if a == b {
                    a
                } else {
                    let width = b - a;
                    numeric::invert_monotone(|x| self.cdf(x), level, a - 1e-12 * width, b)
                }
            }
            _ => unreachable!("discrete laws handled above"),
        })
    }

    fn upper_bracket(&self, level: f64) -> f64 {
        let (mean, var) = self.moments();
        let mut upper = mean + var.sqrt();
        while self.cdf(upper) < level {
            upper *= 2.0;
        }
        upper
    }

    /// `E[(Z - a)⁺]`, the expected excess of the outcome over `a`.
    pub fn expected_excess(&self, a: f64) -> f64 {
        let (lo, hi) = self.support_bounds();
        if a >= hi {
            return 0.0;
        }
        if a <= lo {
            return self.mean() - a;
        }
        match &self.law {
            Law::Beta { alpha, beta } => {
                let m = alpha / (alpha + beta);
                let tail = 1.0 - beta_reg(*alpha, *beta, a);
                let partial = m * (1.0 - beta_reg(alpha + 1.0, *beta, a));
                (partial - a * tail).max(0.0)
            }
            Law::Gamma { shape, rate } => {
                let tail = gamma_ur(*shape, rate * a);
                let partial = shape / rate * gamma_ur(shape + 1.0, rate * a);
                (partial - a * tail).max(0.0)
            }
            Law::Normal { mu, sigma } => {
                let d = (a - mu) / sigma;
                sigma * (std_normal_pdf(d) - d * 0.5 * erfc(d / SQRT_2))
            }
            Law::LogNormal { mu, sigma } => {
                let mean = (mu + 0.5 * sigma * sigma).exp();
                let partial = mean * std_normal_cdf((mu + sigma * sigma - a.ln()) / sigma);
                let tail = std_normal_cdf((mu - a.ln()) / sigma);
                (partial - a * tail).max(0.0)
            }
            Law::Mixture { components, weights } => numeric::sum(
                components.iter().zip(weights).map(|(c, w)| w * c.expected_excess(a)),
            ),
            _ => {
                let table = self.mass_table().expect("discrete law");
                numeric::sum(table.iter().filter(|(x, _)| *x > a).map(|(x, w)| w * (x - a)))
            }
        }
    }

    /// A sampler borrowing this distribution, for drawing inside a caller's
    /// own random stream.
    pub fn sampler(&self) -> Sampler<'_> {
        let inner = match &self.law {
            Law::Beta { alpha, beta } => {
                Inner::Beta(rand_distr::Beta::new(*alpha, *beta).expect("validated"))
            }
            Law::Binomial { trials, p } => {
                Inner::Binomial(rand_distr::Binomial::new(*trials, *p).expect("validated"))
            }
            Law::BetaBinomial { trials, alpha, beta } => Inner::BetaBinomial(
                *trials,
                rand_distr::Beta::new(*alpha, *beta).expect("validated"),
            ),
            Law::Hypergeometric { population, successes, draws } => Inner::Hypergeometric(
                rand_distr::Hypergeometric::new(*population, *successes, *draws)
                    .expect("validated"),
            ),
            Law::Gamma { shape, rate } => {
                Inner::Gamma(rand_distr::Gamma::new(*shape, 1.0 / rate).expect("validated"))
            }
            Law::Poisson { rate } => Inner::Poisson(poisson_sampler(*rate)),
            Law::NegativeBinomial { mean, dispersion } => Inner::NegativeBinomial(
                rand_distr::Gamma::new(*dispersion, mean / dispersion).expect("validated"),
            ),
            Law::LogNormal { mu, sigma } => {
                Inner::LogNormal(rand_distr::LogNormal::new(*mu, *sigma).expect("validated"))
            }
            Law::Normal { mu, sigma } => {
                if *sigma == 0.0 {
                    Inner::Constant(*mu)
                } else {
                    Inner::Normal(rand_distr::Normal::new(*mu, *sigma).expect("validated"))
                }
            }
            Law::Discrete { support, weights } => Inner::Discrete(support, cumulative(weights)),
            Law::Mixture { components, weights } => Inner::Mixture(
                components.iter().map(Self::sampler).collect(),
                cumulative(weights),
            ),
        };
        Sampler { inner }
    }

    /// `n` independent draws from the stream named by `seed`.
    pub fn sample(&self, seed: RandomSeed, n: usize) -> Vec<f64> {
        let mut rng = seed.rng();
        let sampler = self.sampler();
        (0..n).map(|_| sampler.sample(&mut rng)).collect()
    }
}

fn poisson_sampler(rate: f64) -> Option<rand_distr::Poisson<f64>> {
    (rate > 0.0).then(|| rand_distr::Poisson::new(rate).expect("validated"))
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

/// Draws `f64` outcomes from a [`Distribution`].
pub struct Sampler<'a> {
    inner: Inner<'a>,
}

enum Inner<'a> {
    Beta(rand_distr::Beta<f64>),
    Binomial(rand_distr::Binomial),
    BetaBinomial(u64, rand_distr::Beta<f64>),
    Hypergeometric(rand_distr::Hypergeometric),
    Gamma(rand_distr::Gamma<f64>),
    Poisson(Option<rand_distr::Poisson<f64>>),
    NegativeBinomial(rand_distr::Gamma<f64>),
    LogNormal(rand_distr::LogNormal<f64>),
    Normal(rand_distr::Normal<f64>),
    Constant(f64),
    Discrete(&'a [f64], Vec<f64>),
    Mixture(Vec<Sampler<'a>>, Vec<f64>),
}

impl rand_distr::Distribution<f64> for Sampler<'_> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            Inner::Beta(d) => d.sample(rng),
            Inner::Binomial(d) => d.sample(rng) as f64,
            Inner::BetaBinomial(n, beta) => {
                let p = beta.sample(rng);
                rand_distr::Binomial::new(*n, p).expect("p in [0, 1]").sample(rng) as f64
            }
            Inner::Hypergeometric(d) => d.sample(rng) as f64,
            Inner::Gamma(d) => d.sample(rng),
            Inner::Poisson(d) => d.as_ref().map_or(0.0, |d| d.sample(rng)),
            Inner::NegativeBinomial(gamma) => {
                let rate = gamma.sample(rng);
                poisson_sampler(rate).map_or(0.0, |d| d.sample(rng))
            }
            Inner::LogNormal(d) => d.sample(rng),
            Inner::Normal(d) => d.sample(rng),
            Inner::Constant(x) => *x,
            Inner::Discrete(support, cumulative) => support[pick(cumulative, rng.random())],
            Inner::Mixture(samplers, cumulative) => {
                samplers[pick(cumulative, rng.random())].sample(rng)
            }
        }
    }
}
