//! Uncertainty reduction, expected uncertainty reduction and coherence.
//!
//! A [`PosteriorModel`] holds the current fit `p(z | y_obs)` and a refit
//! procedure for augmented data; a [`PredictiveModel`] describes the
//! missing data `p(y_miss | y_obs)`. Every quantity here is built from two
//! evaluations of the uncertainty functional `h`, before and after the
//! refit, so the realised and expected reductions share one code path.

use crate::decision::LossFunction;
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::numeric;
use crate::rng::RandomSeed;

type RefitFn<'a, M> = dyn Fn(&M) -> Result<Distribution> + Send + Sync + 'a;
type SimulateFn<'a, M> = dyn Fn(RandomSeed) -> Result<M> + Send + Sync + 'a;

/// Number of equi-quantile points in the default coherence grid.
pub const COHERENCE_GRID_POINTS: usize = 512;

/// Minimum mixture size accepted by [`check_coherence_monte_carlo`].
pub const MIN_COHERENCE_DRAWS: usize = 10_000;

pub struct PosteriorModel<'a, M> {
    pub target_label: String,
    pub posterior: Distribution,
    refit: Box<RefitFn<'a, M>>,
}

impl<'a, M> PosteriorModel<'a, M> {
    /// `refit` must return `posterior` unchanged for empty missing data.
    pub fn new(
        target_label: impl Into<String>,
        posterior: Distribution,
        refit: impl Fn(&M) -> Result<Distribution> + Send + Sync + 'a,
    ) -> Self {
        Self {
            target_label: target_label.into(),
            posterior,
            refit: Box::new(refit),
        }
    }

    pub fn refit(&self, missing: &M) -> Result<Distribution> {
        (self.refit)(missing).map_err(|e| Error::Refit(Box::new(e)))
    }
}

pub struct PredictiveModel<'a, M> {
    simulate: Box<SimulateFn<'a, M>>,
    enumeration: Option<Vec<(M, f64)>>,
    pub declared_coherent: bool,
}

impl<'a, M> PredictiveModel<'a, M> {
    pub fn new(simulate: impl Fn(RandomSeed) -> Result<M> + Send + Sync + 'a) -> Self {
        Self {
            simulate: Box::new(simulate),
            enumeration: None,
            declared_coherent: false,
        }
    }

    /// Attaches the exact finite law of the missing data. The weights must
    /// sum to one within 1e-12.
    pub fn with_enumeration(mut self, table: Vec<(M, f64)>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::invalid("enumeration", "must be non-empty"));
        }
        if let Some((_, w)) = table.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("enumeration", format!("invalid weight {w}")));
        }
        let total = numeric::sum(table.iter().map(|(_, w)| *w));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "enumeration",
                format!("weights sum to {total}, not 1"),
            ));
        }
        self.enumeration = Some(table);
        Ok(self)
    }

    /// Marks the predictive as coherent with its model by construction
    /// (for example a Bayesian posterior predictive).
    pub fn coherent_by_construction(mut self) -> Self {
        self.declared_coherent = true;
        self
    }

    pub fn simulate(&self, seed: RandomSeed) -> Result<M> {
        (self.simulate)(seed)
    }

    pub fn enumeration(&self) -> Option<&[(M, f64)]> {
        self.enumeration.as_deref()
    }
}

impl<M: Clone + Send + Sync + 'static> PredictiveModel<'static, M> {
    /// A predictive defined entirely by a finite table; simulation draws
    /// from the table.
    pub fn enumerated(table: Vec<(M, f64)>) -> Result<Self> {
        let values: Vec<M> = table.iter().map(|(m, _)| m.clone()).collect();
        let mut cumulative = Vec::with_capacity(table.len());
        let mut acc = 0.0;
        for (_, w) in &table {
            acc += w;
            cumulative.push(acc);
        }
        let simulate = move |seed: RandomSeed| {
            use rand::Rng;
            let u: f64 = seed.rng().random::<f64>() * acc;
            let i = cumulative.partition_point(|&c| c <= u).min(values.len() - 1);
            Ok(values[i].clone())
        };
        PredictiveModel::new(simulate).with_enumeration(table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EurResult {
    pub total_uncertainty: f64,
    pub expected_remaining: f64,
    pub eur: f64,
    pub mc_standard_error: f64,
    /// Monte Carlo replicates, or the number of enumerated outcomes.
    pub replicates: usize,
    /// `h` after each refit, in replicate (or enumeration) order.
    pub per_replicate_remaining: Vec<f64>,
}

impl EurResult {
    /// Exact result from per-outcome remaining uncertainties and weights.
    pub fn from_enumeration(total: f64, remaining: Vec<f64>, weights: &[f64]) -> Self {
        let expected_remaining = numeric::sum(remaining.iter().zip(weights).map(|(h, w)| h * w));
        Self {
            total_uncertainty: total,
            expected_remaining,
            eur: total - expected_remaining,
            mc_standard_error: 0.0,
            replicates: remaining.len(),
            per_replicate_remaining: remaining,
        }
    }

    /// Monte Carlo result; the standard error uses the n - 1 sample SD.
    pub fn from_replicates(total: f64, remaining: Vec<f64>) -> Self {
        let (mean, sd) = numeric::mean_and_sd(&remaining);
        Self {
            total_uncertainty: total,
            expected_remaining: mean,
            eur: total - mean,
            mc_standard_error: sd / (remaining.len() as f64).sqrt(),
            replicates: remaining.len(),
            per_replicate_remaining: remaining,
        }
    }

    /// `eur / total_uncertainty`.
    pub fn relative(&self) -> f64 {
        self.eur / self.total_uncertainty
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub replicates: usize,
    pub seed: RandomSeed,
    pub execution: Execution,
}

impl MonteCarlo {
    pub fn new(replicates: usize, seed: RandomSeed) -> Self {
        Self {
            replicates,
            seed,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Precondition(format!(
                "at least 2 replicates are needed for a standard error, got {}",
                self.replicates
            )));
        }
        Ok(())
    }
}

/// `h[p(z | y_obs)] - h[p(z | y_all)]` for realised missing data. Not
/// clamped: contradicting data can make it negative.
pub fn uncertainty_reduction<M>(
    loss: &LossFunction,
    model: &PosteriorModel<'_, M>,
    missing: &M,
) -> Result<f64> {
    let before = loss.uncertainty(&model.posterior)?;
    let after = loss.uncertainty(&model.refit(missing)?)?;
    Ok(before - after)
}

/// Expected uncertainty reduction by summing over an enumerable predictive.
pub fn eur_exact<M>(
    loss: &LossFunction,
    model: &PosteriorModel<'_, M>,
    predictive: &PredictiveModel<'_, M>,
) -> Result<EurResult> {
    let table = predictive.enumeration().ok_or(Error::NotEnumerable)?;
    let total = loss.uncertainty(&model.posterior)?;
    let remaining = table
        .iter()
        .map(|(m, _)| loss.uncertainty(&model.refit(m)?))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = table.iter().map(|(_, w)| *w).collect();
    Ok(EurResult::from_enumeration(total, remaining, &weights))
}

/// Expected uncertainty reduction by simulating the missing data. Replicate
/// `i` uses seed `mc.seed.replicate(i)`.
pub fn eur_monte_carlo<M: Sync>(
    loss: &LossFunction,
    model: &PosteriorModel<'_, M>,
    predictive: &PredictiveModel<'_, M>,
    mc: &MonteCarlo,
) -> Result<EurResult> {
    mc.check()?;
    let total = loss.uncertainty(&model.posterior)?;
    let remaining = exec::try_map_indexed(mc.execution, mc.replicates, |i| {
        let seed = mc.seed.replicate(i as u64);
        let run = || -> Result<f64> {
            let missing = predictive.simulate(seed)?;
            loss.uncertainty(&model.refit(&missing)?)
        };
        run().map_err(|e| Error::Replicate {
            seed,
            source: Box::new(e),
        })
    })?;
    Ok(EurResult::from_replicates(total, remaining))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub coherent: bool,
    /// Largest density gap, scaled by `max(1, p)` at each point.
    pub max_deviation: f64,
}

/// 512 points at the mid-quantiles `(i + 1/2) / 512` of `posterior`,
/// de-duplicated (discrete laws repeat quantiles).
pub fn default_coherence_grid(posterior: &Distribution) -> Result<Vec<f64>> {
    let n = COHERENCE_GRID_POINTS;
    let mut grid = (0..n)
        .map(|i| posterior.quantile((i as f64 + 0.5) / n as f64))
        .collect::<Result<Vec<_>>>()?;
    grid.dedup();
    Ok(grid)
}

/// Largest `|mixture - p| / max(1, p)` over the grid: absolute where the
/// density is below one, relative where it is larger.
fn max_deviation(posterior: &Distribution, grid: &[f64], mixture: impl Fn(f64) -> f64) -> f64 {
    grid.iter()
        .map(|&z| {
            let p = posterior.density_at(z);
            (mixture(z) - p).abs() / p.max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Checks `p(z | y_obs) = Σ p(z | y_all) p(y_miss | y_obs)` pointwise on
/// `z_grid` (the default grid when `None`) using the exact enumeration of
/// the predictive, and records the verdict in `predictive.declared_coherent`.
pub fn check_coherence<M>(
    model: &PosteriorModel<'_, M>,
    predictive: &mut PredictiveModel<'_, M>,
    z_grid: Option<&[f64]>,
    tol: f64,
) -> Result<CoherenceReport> {
    let grid = resolve_grid(&model.posterior, z_grid)?;
    let table = predictive.enumeration().ok_or(Error::NotEnumerable)?;
    let refits = table
        .iter()
        .map(|(m, w)| Ok((model.refit(m)?, *w)))
        .collect::<Result<Vec<_>>>()?;
    let deviation = max_deviation(&model.posterior, &grid, |z| {
        numeric::sum(refits.iter().map(|(d, w)| w * d.density_at(z)))
    });
    let report = CoherenceReport {
        coherent: deviation <= tol,
        max_deviation: deviation,
    };
    predictive.declared_coherent = report.coherent;
    Ok(report)
}

/// Monte Carlo variant of [`check_coherence`]: the mixture is an average
/// over `draws >= 10^4` simulated missing datasets, so `tol` must allow for
/// sampling error.
pub fn check_coherence_monte_carlo<M>(
    model: &PosteriorModel<'_, M>,
    predictive: &mut PredictiveModel<'_, M>,
    z_grid: Option<&[f64]>,
    tol: f64,
    draws: usize,
    seed: RandomSeed,
) -> Result<CoherenceReport> {
    if draws < MIN_COHERENCE_DRAWS {
        return Err(Error::Precondition(format!(
            "Monte Carlo coherence checks need at least {MIN_COHERENCE_DRAWS} draws, got {draws}"
        )));
    }
    let grid = resolve_grid(&model.posterior, z_grid)?;
    let refits = (0..draws)
        .map(|i| model.refit(&predictive.simulate(seed.replicate(i as u64))?))
        .collect::<Result<Vec<_>>>()?;
    let deviation = max_deviation(&model.posterior, &grid, |z| {
        numeric::sum(refits.iter().map(|d| d.density_at(z))) / draws as f64
    });
    let report = CoherenceReport {
        coherent: deviation <= tol,
        max_deviation: deviation,
    };
    predictive.declared_coherent = report.coherent;
    Ok(report)
}

fn resolve_grid(posterior: &Distribution, z_grid: Option<&[f64]>) -> Result<Vec<f64>> {
    match z_grid {
        Some([]) => Err(Error::Precondition("coherence grid is empty".into())),
        Some(grid) => Ok(grid.to_vec()),
        None => default_coherence_grid(posterior),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A Beta posterior whose refit ignores the missing data entirely.
    fn ignoring_model() -> PosteriorModel<'static, u64> {
        let post = Distribution::beta(3.0, 5.0).unwrap();
        let p = post.clone();
        PosteriorModel::new("theta", post, move |_: &u64| Ok(p.clone()))
    }

    #[test]
    fn enumeration_weights_must_sum_to_one() {
        assert!(PredictiveModel::enumerated(vec![(0u64, 0.5), (1, 0.4)]).is_err());
        assert!(PredictiveModel::enumerated(vec![(0u64, 0.5), (1, 0.5)]).is_ok());
    }

    #[test]
    fn eur_exact_requires_enumeration() {
        let model = ignoring_model();
        let pred = PredictiveModel::new(|_| Ok(0u64));
        assert!(matches!(
            eur_exact(&LossFunction::Quadratic, &model, &pred),
            Err(Error::NotEnumerable)
        ));
    }

    #[test]
    fn single_replicate_is_rejected() {
        let model = ignoring_model();
        let pred = PredictiveModel::new(|_| Ok(0u64));
        let mc = MonteCarlo::new(1, RandomSeed::new(0));
        assert!(matches!(
            eur_monte_carlo(&LossFunction::Quadratic, &model, &pred, &mc),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_information_gives_zero_eur() {
        let model = ignoring_model();
        let pred = PredictiveModel::enumerated(vec![(0u64, 0.25), (1, 0.25), (2, 0.5)]).unwrap();
        let r = eur_exact(&LossFunction::Quadratic, &model, &pred).unwrap();
        assert!(r.eur.abs() < 1e-12);
        assert_eq!(r.mc_standard_error, 0.0);
        let mc = MonteCarlo::new(50, RandomSeed::new(9));
        let r = eur_monte_carlo(&LossFunction::Log, &model, &pred, &mc).unwrap();
        assert_eq!(r.eur, 0.0);
        assert_eq!(r.mc_standard_error, 0.0);
    }

    #[test]
    fn replicate_failures_name_their_seed() {
        let model = ignoring_model();
        let pred = PredictiveModel::new(|seed: RandomSeed| {
            if seed.replicate_index == 3 {
                Err(Error::InvalidData("boom".into()))
            } else {
                Ok(0u64)
            }
        });
        let mc = MonteCarlo::new(10, RandomSeed::new(5));
        match eur_monte_carlo(&LossFunction::Quadratic, &model, &pred, &mc) {
            Err(Error::Replicate { seed, .. }) => assert_eq!(seed, RandomSeed::new(5).replicate(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_grid_is_rejected() {
        let model = ignoring_model();
        let mut pred = PredictiveModel::enumerated(vec![(0u64, 1.0)]).unwrap();
        assert!(check_coherence(&model, &mut pred, Some(&[]), 1e-10).is_err());
    }

    #[test]
    fn eur_identity_is_exact() {
        let r = EurResult::from_replicates(0.3, vec![0.1, 0.2, 0.25]);
        assert_eq!(r.eur, r.total_uncertainty - r.expected_remaining);
    }
}
