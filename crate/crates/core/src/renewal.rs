//! `R_t` estimation with the Poisson renewal model.
//!
//! Infections follow `I_t ~ Poisson(R_t Λ_t)` with total infectiousness
//! `Λ_t = Σ_s I_{t-s} w_s`. Treating `R_t` as constant over a trailing
//! window of `τ` days gives the conjugate posterior
//! `Gamma(a₀ + Σ I_s, b₀ + Σ Λ_s)`.
//!
//! Under perfect reporting the cases are the infections and that posterior
//! is exact; its uncertainty cannot be reduced by any data the model knows
//! about, so no expected-reduction operation exists for that variant.
//!
//! Under underreporting, `C_t | I_t ~ Binomial(I_t, ρ)` and the unreported
//! infections `U_t = I_t - C_t` are the missing data. A fully adapted
//! particle filter samples `U_{1:T} | C_{1:T}`; the `R_t` posterior is the
//! average of the conjugate posteriors over these latent trajectories. The
//! predictive for `U` draws from the same particle set, so predictive and
//! posterior are coherent by construction.
//!
//! Days are 1-based throughout, matching the usual `C_1, …, C_T` notation.

use rand::Rng;
use rand_distr::Distribution as _;
use statrs::function::gamma::ln_gamma;

use crate::decision::LossFunction;
use crate::distributions::Distribution;
use crate::engine::{self, EurResult, MonteCarlo, PosteriorModel, PredictiveModel};
use crate::error::{Error, Result};
use crate::particle;
use crate::rng::RandomSeed;

/// Minimum number of particles for the latent-infection filter.
pub const MIN_PARTICLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicSeries {
    cases: Vec<u64>,
    serial_interval: Vec<f64>,
}

impl EpidemicSeries {
    /// Serial-interval weights `w_1, …, w_S` must be non-negative and sum to
    /// one within 1e-12.
    pub fn new(cases: Vec<u64>, serial_interval: Vec<f64>) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::InvalidData("case series is empty".into()));
        }
        check_serial_interval(&serial_interval)?;
        Ok(Self {
            cases,
            serial_interval,
        })
    }

    pub fn cases(&self) -> &[u64] {
        &self.cases
    }

    pub fn serial_interval(&self) -> &[f64] {
        &self.serial_interval
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// `Λ_t` for `2 ≤ t ≤ T + 1` (day `T + 1` is the next, unobserved day).
    pub fn total_infectiousness(&self, t: usize) -> Result<f64> {
        if t < 2 || t > self.len() + 1 {
            return Err(Error::Precondition(format!(
                "total infectiousness needs 2 <= t <= {}, got {t}",
                self.len() + 1
            )));
        }
        Ok(total_infectiousness(&self.cases, &self.serial_interval, t))
    }
}

pub(crate) fn check_serial_interval(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidData("serial interval is empty".into()));
    }
    if let Some(x) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidData(format!("invalid serial interval weight {x}")));
    }
    let total: f64 = crate::numeric::sum(w.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidData(format!(
            "serial interval weights sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Infection counts, held as integers or as reals.
pub(crate) trait Count: Copy {
    fn value(self) -> f64;
}

impl Count for u64 {
    fn value(self) -> f64 {
        self as f64
    }
}

impl Count for f64 {
    fn value(self) -> f64 {
        self
    }
}

/// `Σ_{s=1}^{min(S, t-1)} counts_{t-s} w_s` with 1-based `t`.
pub(crate) fn total_infectiousness<T: Count>(counts: &[T], w: &[f64], t: usize) -> f64 {
    let lags = w.len().min(t - 1);
    (1..=lags).map(|s| counts[t - s - 1].value() * w[s - 1]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenewalPrior {
    pub shape: f64,
    pub rate: f64,
    /// Days over which `R_t` is held constant.
    pub window: usize,
}

impl Default for RenewalPrior {
    /// Gamma(1, 0.2) (prior mean 5) over a weekly window.
    fn default() -> Self {
        Self {
            shape: 1.0,
            rate: 0.2,
            window: 7,
        }
    }
}

impl RenewalPrior {
    pub fn new(shape: f64, rate: f64, window: usize) -> Result<Self> {
        Distribution::gamma(shape, rate)?;
        if window == 0 {
            return Err(Error::invalid("window", "must be at least 1 day"));
        }
        Ok(Self {
            shape,
            rate,
            window,
        })
    }

    /// First and last day of the window ending on `t`, checking that it
    /// starts no earlier than day 2 and ends within the series.
    fn window_ending(&self, t: usize, len: usize) -> Result<(usize, usize)> {
        if t > len || t < self.window + 1 {
            return Err(Error::Precondition(format!(
                "a {}-day window ending on day {t} must lie within days 2..={len}",
                self.window
            )));
        }
        Ok((t + 1 - self.window, t))
    }

    /// `Gamma(a₀ + Σ I, b₀ + Σ Λ)` for known infection counts.
    fn conjugate<T: Count>(
        &self,
        infections: &[T],
        w: &[f64],
        t: usize,
    ) -> Result<Distribution> {
        let (first, last) = self.window_ending(t, infections.len())?;
        let mut cases = 0.0;
        let mut lambda = 0.0;
        for s in first..=last {
            cases += infections[s - 1].value();
            lambda += total_infectiousness(infections, w, s);
        }
        if lambda == 0.0 && cases > 0.0 {
            return Err(Error::InvalidData(format!(
                "window ending on day {t} has cases but zero total infectiousness"
            )));
        }
        Distribution::gamma(self.shape + cases, self.rate + lambda)
    }
}

/// Exact `R_t` posterior when every infection is reported.
pub fn rt_posterior_perfect(
    series: &EpidemicSeries,
    prior: &RenewalPrior,
    t: usize,
) -> Result<Distribution> {
    prior.conjugate(&series.cases, &series.serial_interval, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnderreportingSpec {
    /// Probability that an infection is reported.
    pub rho: f64,
    /// Known infections on the seeding days `1..=k`. When absent, day 1 is
    /// seeded with `round(C_1 / ρ)` infections.
    pub infection_prior_mean: Option<Vec<f64>>,
}

impl UnderreportingSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid("rho", format!("must lie in (0, 1], got {rho}")));
        }
        Ok(Self {
            rho,
            infection_prior_mean: None,
        })
    }

    pub fn with_seed_infections(mut self, infections: Vec<f64>) -> Result<Self> {
        if infections.is_empty() || infections.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid(
                "infection_prior_mean",
                "must be non-empty, finite and non-negative",
            ));
        }
        self.infection_prior_mean = Some(infections);
        Ok(self)
    }

    fn seed_infections(&self, cases: &[u64]) -> Result<Vec<u64>> {
        let seeds: Vec<u64> = match &self.infection_prior_mean {
            Some(v) => v.iter().map(|x| x.round() as u64).collect(),
            None => vec![(cases[0] as f64 / self.rho).round() as u64],
        };
        if seeds.len() >= cases.len() {
            return Err(Error::InvalidData(
                "seeding days must leave at least one day to infer".into(),
            ));
        }
        for (day, (&i, &c)) in seeds.iter().zip(cases).enumerate() {
            if i < c {
                return Err(Error::InvalidData(format!(
                    "day {} is seeded with {i} infections but has {c} reported cases",
                    day + 1
                )));
            }
        }
        Ok(seeds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSettings {
    pub particles: usize,
    pub seed: RandomSeed,
}

impl ParticleSettings {
    pub fn new(particles: usize, seed: RandomSeed) -> Self {
        Self { particles, seed }
    }
}

/// Latent-infection posterior under underreporting.
#[derive(Debug, Clone)]
pub struct UnderreportedFit {
    series: EpidemicSeries,
    prior: RenewalPrior,
    /// Distinct unreported-infection trajectories `U_{1:T}`.
    trajectories: Vec<Vec<u64>>,
    /// Posterior probability of each trajectory.
    weights: Vec<f64>,
}

impl UnderreportedFit {
    /// Runs the latent-infection filter.
    ///
    /// For each particle, `R_s` given the past is drawn from the conjugate
    /// posterior of the preceding window (the prior when that window is
    /// empty). Poisson thinning splits `Poisson(R Λ)` infections into
    /// independent reported `Poisson(ρ R Λ)` and unreported
    /// `Poisson((1-ρ) R Λ)` parts, so particles are weighted by the
    /// negative binomial predictive of `C_s`, resampled, and then extended
    /// with `R_s | C_s ~ Gamma(α + C_s, β + ρΛ)` and
    /// `U_s ~ Poisson((1-ρ) R_s Λ)`.
    pub fn fit(
        series: &EpidemicSeries,
        prior: &RenewalPrior,
        spec: &UnderreportingSpec,
        settings: ParticleSettings,
    ) -> Result<Self> {
        if settings.particles < MIN_PARTICLES {
            return Err(Error::Precondition(format!(
                "the latent-infection filter needs at least {MIN_PARTICLES} particles, got {}",
                settings.particles
            )));
        }
        let cases = series.cases();
        let w = series.serial_interval();
        let t_max = cases.len();
        let p = settings.particles;
        let rho = spec.rho;
        let seeds = spec.seed_infections(cases)?;
        let seed_days = seeds.len();

        let mut rng = settings.seed.rng();
        let mut infections: Vec<Vec<u64>> = vec![seeds.clone(); p];
        let mut lambdas: Vec<Vec<f64>> = vec![vec![0.0; seed_days]; p];
        for day in 2..=seed_days {
            let lambda = total_infectiousness(&seeds, w, day);
            for l in &mut lambdas {
                l[day - 1] = lambda;
            }
        }

        for day in seed_days + 1..=t_max {
            let c = cases[day - 1] as f64;
            let mut log_w = Vec::with_capacity(p);
            let mut proposals = Vec::with_capacity(p);
            for (inf, lam) in infections.iter().zip(&lambdas) {
                let lambda = total_infectiousness(inf, w, day);
                let (alpha, beta) = window_shape_rate(prior, inf, lam, day);
                let (lw, proposal) = if lambda == 0.0 {
                    (if c == 0.0 { 0.0 } else { f64::NEG_INFINITY }, None)
                } else {
                    let mean_rate = rho * lambda;
                    // Negative binomial predictive of the reported count.
                    let lw = ln_gamma(c + alpha) - ln_gamma(alpha) - ln_gamma(c + 1.0)
                        + alpha * (beta / (beta + mean_rate)).ln()
                        + c * (mean_rate / (beta + mean_rate)).ln();
                    (lw, Some((alpha + c, beta + mean_rate)))
                };
                log_w.push(lw);
                proposals.push((lambda, proposal));
            }
            let (weights, _) = particle::normalise_log_weights(&log_w, day)?;
            let ancestors = particle::systematic(&weights, p, &mut rng);
            let mut next_inf = Vec::with_capacity(p);
            let mut next_lam = Vec::with_capacity(p);
            for &a in &ancestors {
                let (lambda, proposal) = proposals[a];
                let unreported = match proposal {
                    Some((shape, rate)) if rho < 1.0 => {
                        let r = rand_distr::Gamma::new(shape, 1.0 / rate)
                            .expect("positive shape and rate")
                            .sample(&mut rng);
                        poisson(&mut rng, (1.0 - rho) * r * lambda)
                    }
                    _ => 0,
                };
                let mut inf = infections[a].clone();
                inf.push(cases[day - 1] + unreported);
                let mut lam = lambdas[a].clone();
                lam.push(lambda);
                next_inf.push(inf);
                next_lam.push(lam);
            }
            infections = next_inf;
            lambdas = next_lam;
        }

        let mut unreported: Vec<Vec<u64>> = infections
            .into_iter()
            .map(|inf| inf.iter().zip(cases).map(|(i, c)| i - c).collect())
            .collect();
        unreported.sort_unstable();
        let mut trajectories: Vec<Vec<u64>> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for u in unreported {
            if trajectories.last() == Some(&u) {
                *counts.last_mut().expect("non-empty") += 1;
            } else {
                trajectories.push(u);
                counts.push(1);
            }
        }
        let weights = counts.iter().map(|&n| n as f64 / p as f64).collect();
        Ok(Self {
            series: series.clone(),
            prior: *prior,
            trajectories,
            weights,
        })
    }

    pub fn series(&self) -> &EpidemicSeries {
        &self.series
    }

    /// Distinct latent trajectories of unreported infections with their
    /// posterior probabilities.
    pub fn trajectories(&self) -> impl Iterator<Item = (&[u64], f64)> {
        self.trajectories
            .iter()
            .map(Vec::as_slice)
            .zip(self.weights.iter().copied())
    }

    /// Conjugate `R_t` posterior had the unreported infections been seen.
    pub fn refit(&self, unreported: &[u64], t: usize) -> Result<Distribution> {
        let cases = self.series.cases();
        if unreported.len() != cases.len() {
            return Err(Error::InvalidData(format!(
                "expected {} days of unreported infections, got {}",
                cases.len(),
                unreported.len()
            )));
        }
        let infections: Vec<f64> = cases
            .iter()
            .zip(unreported)
            .map(|(c, u)| (c + u) as f64)
            .collect();
        self.prior
            .conjugate(&infections, self.series.serial_interval(), t)
    }

    /// `p(R_t | C_{1:T})`: the latent-averaged conjugate posterior.
    pub fn rt_posterior(&self, t: usize) -> Result<Distribution> {
        let components = self
            .trajectories
            .iter()
            .map(|u| self.refit(u, t))
            .collect::<Result<Vec<_>>>()?;
        Distribution::mixture(components, &self.weights)
    }

    pub fn posterior_model(&self, t: usize) -> Result<PosteriorModel<'_, Vec<u64>>> {
        Ok(PosteriorModel::new(
            format!("R_{t}"),
            self.rt_posterior(t)?,
            move |u: &Vec<u64>| self.refit(u, t),
        ))
    }

    /// Predictive for the unreported infections, drawn from the fitted
    /// latent posterior.
    pub fn predictive(&self) -> PredictiveModel<'_, Vec<u64>> {
        let mut cumulative = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cumulative.push(acc);
        }
        let simulate = move |seed: RandomSeed| {
            let u: f64 = seed.rng().random::<f64>() * acc;
            let i = cumulative
                .partition_point(|&c| c <= u)
                .min(self.trajectories.len() - 1);
            Ok(self.trajectories[i].clone())
        };
        let table = self
            .trajectories
            .iter()
            .cloned()
            .zip(self.weights.iter().copied())
            .collect();
        PredictiveModel::new(simulate)
            .with_enumeration(table)
            .expect("particle frequencies sum to one")
            .coherent_by_construction()
    }

    /// Expected variance reduction about `R_t` from learning every
    /// unreported infection, by Monte Carlo over the latent posterior.
    pub fn eur_full_reporting(&self, t: usize, mc: &MonteCarlo) -> Result<EurResult> {
        let model = self.posterior_model(t)?;
        engine::eur_monte_carlo(&LossFunction::Quadratic, &model, &self.predictive(), mc)
    }
}

fn window_shape_rate(prior: &RenewalPrior, inf: &[u64], lam: &[f64], day: usize) -> (f64, f64) {
    let first = day.saturating_sub(prior.window).max(2);
    let mut shape = prior.shape;
    let mut rate = prior.rate;
    for s in first..day {
        shape += inf[s - 1] as f64;
        rate += lam[s - 1];
    }
    (shape, rate)
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        rand_distr::Poisson::new(mean)
            .expect("finite positive mean")
            .sample(rng) as u64
    }
}

pub fn rt_posterior_underreported(
    series: &EpidemicSeries,
    prior: &RenewalPrior,
    spec: &UnderreportingSpec,
    t: usize,
    settings: ParticleSettings,
) -> Result<Distribution> {
    UnderreportedFit::fit(series, prior, spec, settings)?.rt_posterior(t)
}

pub fn rt_eur_from_full_reporting(
    series: &EpidemicSeries,
    prior: &RenewalPrior,
    spec: &UnderreportingSpec,
    t: usize,
    settings: ParticleSettings,
    mc: &MonteCarlo,
) -> Result<EurResult> {
    UnderreportedFit::fit(series, prior, spec, settings)?.eur_full_reporting(t, mc)
}

/// Simulates infections from the renewal model with a given `R_t` path,
/// seeding day 1 with `initial` infections. `reproduction[t - 1]` is used
/// on day `t`; entry 0 is ignored.
pub fn simulate_infections(
    reproduction: &[f64],
    serial_interval: &[f64],
    initial: u64,
    seed: RandomSeed,
) -> Result<Vec<u64>> {
    check_serial_interval(serial_interval)?;
    let mut rng = seed.rng();
    let mut infections = vec![initial];
    for t in 2..=reproduction.len() {
        let lambda = total_infectiousness(&infections, serial_interval, t);
        infections.push(poisson(&mut rng, reproduction[t - 1] * lambda));
    }
    Ok(infections)
}

/// Reports each infection independently with probability `rho`.
pub fn thin_reports(infections: &[u64], rho: f64, seed: RandomSeed) -> Result<Vec<u64>> {
    let mut rng = seed.rng();
    infections
        .iter()
        .map(|&i| {
            Ok(rand_distr::Binomial::new(i, rho)
                .map_err(|_| Error::invalid("rho", "must lie in [0, 1]"))?
                .sample(&mut rng))
        })
        .collect()
}

/// Posterior summary used in reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Summary {
    /// Mean, variance and the central `level` credible interval.
    pub fn of(d: &Distribution, level: f64) -> Result<Self> {
        let (mean, variance) = d.moments();
        let tail = 0.5 * (1.0 - level);
        Ok(Self {
            mean,
            variance,
            lower: d.quantile(tail)?,
            upper: d.quantile(1.0 - tail)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_infectiousness_hand_sums() {
        let s = EpidemicSeries::new(vec![10, 20, 30], vec![0.5, 0.3, 0.2]).unwrap();
        assert!((s.total_infectiousness(4).unwrap() - 23.0).abs() < 1e-12);
        let z = EpidemicSeries::new(vec![0, 0, 0], vec![0.5, 0.5]).unwrap();
        assert_eq!(z.total_infectiousness(3).unwrap(), 0.0);
        let one = EpidemicSeries::new(vec![7, 3], vec![1.0]).unwrap();
        assert_eq!(one.total_infectiousness(2).unwrap(), 7.0);
        assert!(s.total_infectiousness(1).is_err());
        assert!(s.total_infectiousness(5).is_err());
    }

    #[test]
    fn invalid_series() {
        assert!(EpidemicSeries::new(vec![], vec![1.0]).is_err());
        assert!(EpidemicSeries::new(vec![1], vec![0.5, 0.4]).is_err());
        assert!(EpidemicSeries::new(vec![1], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn single_day_window_posterior() {
        let s = EpidemicSeries::new(vec![8, 10], vec![1.0]).unwrap();
        let prior = RenewalPrior::new(1.0, 0.2, 1).unwrap();
        let post = rt_posterior_perfect(&s, &prior, 2).unwrap();
        assert_eq!(post, Distribution::gamma(11.0, 8.2).unwrap());
        let (m, v) = post.moments();
        assert!((m - 1.341_463_414_634_146).abs() < 1e-12);
        assert!((v - 11.0 / (8.2 * 8.2)).abs() < 1e-15);
    }

    #[test]
    fn zero_case_window() {
        let s = EpidemicSeries::new(vec![5, 0, 0], vec![1.0]).unwrap();
        let prior = RenewalPrior::new(1.0, 0.2, 2).unwrap();
        let post = rt_posterior_perfect(&s, &prior, 3).unwrap();
        assert_eq!(post, Distribution::gamma(1.0, 5.2).unwrap());
    }

    #[test]
    fn undefined_likelihood() {
        let s = EpidemicSeries::new(vec![0, 4], vec![1.0]).unwrap();
        let prior = RenewalPrior::new(1.0, 0.2, 1).unwrap();
        assert!(matches!(
            rt_posterior_perfect(&s, &prior, 2),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn window_must_fit() {
        let s = EpidemicSeries::new(vec![5, 6, 7, 8], vec![1.0]).unwrap();
        let prior = RenewalPrior::new(1.0, 0.2, 3).unwrap();
        assert!(rt_posterior_perfect(&s, &prior, 3).is_err());
        assert!(rt_posterior_perfect(&s, &prior, 4).is_ok());
        assert!(rt_posterior_perfect(&s, &prior, 5).is_err());
    }

    #[test]
    fn too_few_particles() {
        let s = EpidemicSeries::new(vec![5, 6, 7, 8], vec![1.0]).unwrap();
        let spec = UnderreportingSpec::new(0.5).unwrap();
        let r = UnderreportedFit::fit(
            &s,
            &RenewalPrior::default(),
            &spec,
            ParticleSettings::new(99, RandomSeed::new(0)),
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn seeding_below_reported_cases_is_rejected() {
        let s = EpidemicSeries::new(vec![50, 6, 7, 8], vec![1.0]).unwrap();
        let spec = UnderreportingSpec::new(0.5)
            .unwrap()
            .with_seed_infections(vec![10.0])
            .unwrap();
        let r = UnderreportedFit::fit(
            &s,
            &RenewalPrior::new(1.0, 0.2, 1).unwrap(),
            &spec,
            ParticleSettings::new(200, RandomSeed::new(0)),
        );
        assert!(matches!(r, Err(Error::InvalidData(_))));
    }

    #[test]
    fn full_reporting_collapses_to_exact_posterior() {
        let w = vec![0.2, 0.5, 0.3];
        let cases = vec![20, 25, 30, 41, 38, 52, 60, 58, 71, 80];
        let s = EpidemicSeries::new(cases, w).unwrap();
        let prior = RenewalPrior::new(1.0, 0.2, 3).unwrap();
        let spec = UnderreportingSpec::new(1.0).unwrap();
        let fit = UnderreportedFit::fit(&s, &prior, &spec, ParticleSettings::new(200, RandomSeed::new(4)))
            .unwrap();
        for t in 4..=10 {
            assert_eq!(fit.rt_posterior(t).unwrap(), rt_posterior_perfect(&s, &prior, t).unwrap());
        }
        let r = fit.eur_full_reporting(6, &MonteCarlo::new(20, RandomSeed::new(1))).unwrap();
        assert_eq!(r.eur, 0.0);
        assert_eq!(r.mc_standard_error, 0.0);
    }
}
