//! Prevalence from a tested sample: the binomial model with a Beta prior on
//! the prevalence, and the finite-population hypergeometric model with a
//! prior on the total number of positives.

use crate::distributions::{Distribution, Law};
use crate::engine::{PosteriorModel, PredictiveModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrevalenceData {
    /// Population size; required by the hypergeometric model.
    pub population: Option<u64>,
    pub tested: u64,
    pub positives: u64,
}

impl PrevalenceData {
    pub fn new(population: Option<u64>, tested: u64, positives: u64) -> Result<Self> {
        if positives > tested {
            return Err(Error::invalid("positives", "cannot exceed the number tested"));
        }
        if let Some(n) = population {
            if n == 0 {
                return Err(Error::invalid("population", "must be at least 1"));
            }
            if tested > n {
                return Err(Error::invalid("tested", "cannot exceed the population"));
            }
        }
        Ok(Self {
            population,
            tested,
            positives,
        })
    }
}

/// Results of further tests: the missing data of the binomial model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AdditionalTests {
    pub tests: u64,
    pub positives: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialPrevalenceModel {
    pub prior_alpha: f64,
    pub prior_beta: f64,
    pub data: PrevalenceData,
}

impl BinomialPrevalenceModel {
    pub fn new(prior_alpha: f64, prior_beta: f64, data: PrevalenceData) -> Result<Self> {
        Distribution::beta(prior_alpha, prior_beta)?;
        Ok(Self {
            prior_alpha,
            prior_beta,
            data,
        })
    }

    /// `(α₀ + n⁺, β₀ + n - n⁺)`.
    pub fn posterior_params(&self) -> (f64, f64) {
        let d = &self.data;
        (
            self.prior_alpha + d.positives as f64,
            self.prior_beta + (d.tested - d.positives) as f64,
        )
    }

    pub fn posterior(&self) -> Distribution {
        let (a, b) = self.posterior_params();
        Distribution::beta(a, b).expect("positive parameters")
    }

    /// Conjugate update with further test results.
    pub fn refit(&self, extra: &AdditionalTests) -> Result<Distribution> {
        if extra.positives > extra.tests {
            return Err(Error::InvalidData(format!(
                "{} positives out of {} additional tests",
                extra.positives, extra.tests
            )));
        }
        let (a, b) = self.posterior_params();
        Distribution::beta(
            a + extra.positives as f64,
            b + (extra.tests - extra.positives) as f64,
        )
    }

    /// Beta-binomial law of the positives among `m` further tests.
    pub fn predictive(&self, m: u64) -> Distribution {
        let (a, b) = self.posterior_params();
        Distribution::beta_binomial(m, a, b).expect("positive parameters")
    }

    /// Closed-form expected variance reduction from `m` further tests:
    /// `m a b / ((a + b)² (a + b + 1) (a + b + m))`.
    pub fn eur_quadratic(&self, m: u64) -> f64 {
        let (a, b) = self.posterior_params();
        let s = a + b;
        let m = m as f64;
        m * a * b / (s * s * (s + 1.0) * (s + m))
    }

    pub fn posterior_model(&self) -> PosteriorModel<'static, AdditionalTests> {
        let model = *self;
        PosteriorModel::new("prevalence", self.posterior(), move |extra| model.refit(extra))
    }

    /// The posterior predictive for `m` further tests, enumerated exactly.
    pub fn posterior_predictive(&self, m: u64) -> PredictiveModel<'static, AdditionalTests> {
        let (a, b) = self.posterior_params();
        tests_predictive(m, a, b)
            .expect("beta-binomial masses sum to one")
            .coherent_by_construction()
    }

    /// A beta-binomial predictive with the posterior parameters scaled by
    /// `concentration` (0.5 halves them, inflating the predictive variance)
    /// while the refit is left unchanged. Not coherent unless
    /// `concentration == 1`.
    pub fn overdispersed_predictive(
        &self,
        m: u64,
        concentration: f64,
    ) -> Result<PredictiveModel<'static, AdditionalTests>> {
        let (a, b) = self.posterior_params();
        tests_predictive(m, a * concentration, b * concentration)
    }
}

fn tests_predictive(m: u64, a: f64, b: f64) -> Result<PredictiveModel<'static, AdditionalTests>> {
    let law = Distribution::beta_binomial(m, a, b)?;
    let mut table: Vec<(AdditionalTests, f64)> = (0..=m)
        .map(|k| {
            (
                AdditionalTests {
                    tests: m,
                    positives: k,
                },
                law.density_at(k as f64),
            )
        })
        .collect();
    // The masses are exact up to rounding; renormalise so the table
    // satisfies the 1e-12 invariant for large m.
    let total: f64 = crate::numeric::sum(table.iter().map(|(_, w)| *w));
    for entry in &mut table {
        entry.1 /= total;
    }
    PredictiveModel::enumerated(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypergeometricPrevalenceModel {
    /// Prior over the total number of positives, supported on `{0..N}`.
    pub prior: Distribution,
    pub data: PrevalenceData,
}

impl HypergeometricPrevalenceModel {
    pub fn new(prior: Distribution, data: PrevalenceData) -> Result<Self> {
        let population = data.population.ok_or_else(|| {
            Error::invalid("population", "required by the hypergeometric model")
        })?;
        let table = prior
            .mass_table()
            .ok_or_else(|| Error::invalid("prior", "must be a discrete law"))?;
        if table
            .iter()
            .any(|&(x, _)| x.fract() != 0.0 || x < 0.0 || x > population as f64)
        {
            return Err(Error::invalid(
                "prior",
                format!("support must lie in {{0..{population}}}"),
            ));
        }
        Ok(Self { prior, data })
    }

    /// Uniform prior over `{0..N}`.
    pub fn with_uniform_prior(data: PrevalenceData) -> Result<Self> {
        let population = data.population.ok_or_else(|| {
            Error::invalid("population", "required by the hypergeometric model")
        })?;
        let support: Vec<f64> = (0..=population).map(|k| k as f64).collect();
        let prior = Distribution::discrete(&support, &vec![1.0; support.len()])?;
        Self::new(prior, data)
    }

    fn population(&self) -> u64 {
        self.data.population.expect("validated on construction")
    }

    /// Posterior over the positives among the `N - n` untested.
    pub fn missing_positives_posterior(&self) -> Result<Distribution> {
        let big_n = self.population();
        let PrevalenceData { tested, positives, .. } = self.data;
        let untested = big_n - tested;
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for k in 0..=untested {
            let total = positives + k;
            let prior = self.prior.density_at(total as f64);
            if prior == 0.0 {
                continue;
            }
            let likelihood = Distribution::hypergeometric(big_n, total, tested)?
                .density_at(positives as f64);
            support.push(k as f64);
            weights.push(prior * likelihood);
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidData(
                "the prior gives zero probability to the observed positives".into(),
            ));
        }
        Distribution::discrete(&support, &weights)
    }

    /// Posterior over `θ = (n⁺_obs + n⁺_miss) / N`.
    pub fn posterior(&self) -> Result<Distribution> {
        let missing = self.missing_positives_posterior()?;
        let big_n = self.population() as f64;
        let observed = self.data.positives as f64;
        let Law::Discrete { support, weights } = missing.law() else {
            unreachable!("discrete posterior");
        };
        let theta: Vec<f64> = support.iter().map(|k| (observed + k) / big_n).collect();
        Distribution::discrete(&theta, weights)
    }
}
