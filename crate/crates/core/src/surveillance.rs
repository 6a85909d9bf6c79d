//! Joint model of reported cases and wastewater concentrations.
//!
//! Latent dynamics: `log R_t` follows a Gaussian random walk and
//! `I_t ~ Poisson(R_t Λ_t)`. Observations: reported cases
//! `C_t ~ NegBin(mean ρ I_t, dispersion k)` on every day, and on sampled
//! days a wastewater concentration
//! `W_t ~ LogNormal(ln μ_t - σ_t²/2, σ_t²)` with shedding signal
//! `μ_t = g Σ_{s≥0} ζ_s I_{t-s} / N` and noise `σ_t² = σ_w² N / n_t`
//! shrinking with catchment coverage `n_t`.
//!
//! The posterior is computed by a bootstrap particle filter with fixed-lag
//! smoothing for `R_t`. Fits that differ only in their wastewater input
//! share the filter's random numbers, so differences between them reflect
//! the data rather than Monte Carlo noise.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::distributions::Distribution;
use crate::engine::{EurResult, MonteCarlo};
use crate::error::{Error, Result};
use crate::exec;
use crate::particle;
use crate::renewal::{check_serial_interval, total_infectiousness, EpidemicSeries, RenewalPrior};
use crate::rng::RandomSeed;

/// Minimum number of particles for the joint filter.
pub const MIN_PARTICLES: usize = 500;

/// Floor on the shedding signal, so particles with no recent infections get
/// a vanishing rather than undefined wastewater likelihood.
const MU_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct SurveillanceDesign {
    total_population: u64,
    coverage: Vec<u64>,
    sampled: Vec<bool>,
}

impl SurveillanceDesign {
    pub fn new(total_population: u64, coverage: Vec<u64>, sampled: Vec<bool>) -> Result<Self> {
        if total_population == 0 {
            return Err(Error::invalid("total_population", "must be at least 1"));
        }
        if coverage.len() != sampled.len() {
            return Err(Error::invalid(
                "coverage",
                format!("has {} days but the sampling mask has {}", coverage.len(), sampled.len()),
            ));
        }
        if let Some(day) = coverage.iter().position(|&n| n > total_population) {
            return Err(Error::invalid(
                "coverage",
                format!("day {} exceeds the total population", day + 1),
            ));
        }
        Ok(Self {
            total_population,
            coverage,
            sampled,
        })
    }

    /// Every day sampled with the whole population in the catchment.
    pub fn full(total_population: u64, days: usize) -> Result<Self> {
        Self::new(total_population, vec![total_population; days], vec![true; days])
    }

    /// `sampled_days` days chosen uniformly at random, with coverage spread
    /// log-uniformly between `coverage_min` and `coverage_max` (both
    /// attained). Unsampled days have zero coverage.
    pub fn synthetic(
        total_population: u64,
        days: usize,
        sampled_days: usize,
        coverage_min: u64,
        coverage_max: u64,
        seed: RandomSeed,
    ) -> Result<Self> {
        if sampled_days > days {
            return Err(Error::invalid("sampled_days", "cannot exceed the number of days"));
        }
        if coverage_min == 0 || coverage_min > coverage_max || coverage_max > total_population {
            return Err(Error::invalid(
                "coverage_min",
                "need 0 < coverage_min <= coverage_max <= total_population",
            ));
        }
        let mut rng = seed.rng();
        let mut chosen = index::sample(&mut rng, days, sampled_days).into_vec();
        chosen.sort_unstable();
        let draws: Vec<f64> = chosen.iter().map(|_| rng.random::<f64>()).collect();
        let (lo, hi) = draws
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let (ln_min, ln_max) = ((coverage_min as f64).ln(), (coverage_max as f64).ln());
        let mut coverage = vec![0; days];
        let mut sampled = vec![false; days];
        for (&day, &u) in chosen.iter().zip(&draws) {
            let frac = if hi > lo { (u - lo) / (hi - lo) } else { 1.0 };
            let n = (ln_min + frac * (ln_max - ln_min)).exp().round() as u64;
            coverage[day] = n.clamp(coverage_min, coverage_max);
            sampled[day] = true;
        }
        Self::new(total_population, coverage, sampled)
    }

    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    pub fn coverage(&self) -> &[u64] {
        &self.coverage
    }

    pub fn sampled(&self) -> &[bool] {
        &self.sampled
    }

    pub fn days(&self) -> usize {
        self.coverage.len()
    }

    pub fn sampled_count(&self) -> usize {
        self.sampled.iter().filter(|&&s| s).count()
    }

    fn check_sampled_coverage(&self) -> Result<()> {
        match (0..self.days()).find(|&t| self.sampled[t] && self.coverage[t] == 0) {
            Some(t) => Err(Error::InvalidData(format!(
                "day {} is sampled but has no catchment population",
                t + 1
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WastewaterSeries {
    concentrations: Vec<Option<f64>>,
    design: SurveillanceDesign,
}

impl WastewaterSeries {
    pub fn new(concentrations: Vec<Option<f64>>, design: SurveillanceDesign) -> Result<Self> {
        design.check_sampled_coverage()?;
        if concentrations.len() != design.days() {
            return Err(Error::InvalidData(format!(
                "{} wastewater days for a {}-day design",
                concentrations.len(),
                design.days()
            )));
        }
        for (t, (w, &s)) in concentrations.iter().zip(design.sampled()).enumerate() {
            match (w, s) {
                (Some(x), true) if x.is_finite() && *x > 0.0 => {}
                (None, false) => {}
                (Some(x), true) => {
                    return Err(Error::InvalidData(format!(
                        "day {}: concentration {x} is not positive",
                        t + 1
                    )))
                }
                (Some(_), false) => {
                    return Err(Error::InvalidData(format!(
                        "day {} has a concentration but is not sampled",
                        t + 1
                    )))
                }
                (None, true) => {
                    return Err(Error::InvalidData(format!(
                        "day {} is sampled but has no concentration",
                        t + 1
                    )))
                }
            }
        }
        Ok(Self {
            concentrations,
            design,
        })
    }

    pub fn concentrations(&self) -> &[Option<f64>] {
        &self.concentrations
    }

    pub fn design(&self) -> &SurveillanceDesign {
        &self.design
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointModelConfig {
    /// Law of `R_1`; its window is the margin used for edge effects.
    pub prior: RenewalPrior,
    pub serial_interval: Vec<f64>,
    /// Standard deviation of the daily step of `log R_t`.
    pub rw_sd: f64,
    pub rho: f64,
    pub dispersion: f64,
    /// `ζ_0, ζ_1, …`: weight of infections `s` days ago in today's signal.
    pub shedding_kernel: Vec<f64>,
    pub shedding_scale: f64,
    pub noise_base: f64,
    /// Known infections on day 1.
    pub initial_infections: u64,
    /// `R_1` used by [`simulate_joint`].
    pub initial_reproduction: f64,
}

impl Default for JointModelConfig {
    fn default() -> Self {
        Self {
            prior: RenewalPrior::new(2.0, 2.0, 7).expect("valid prior"),
            serial_interval: discretised_gamma(2.4, 1.5, 14),
            rw_sd: 0.03,
            rho: 0.4,
            dispersion: 20.0,
            shedding_kernel: vec![0.1, 0.2, 0.25, 0.2, 0.12, 0.08, 0.05],
            shedding_scale: 1.0e6,
            noise_base: 0.2,
            initial_infections: 200,
            initial_reproduction: 1.15,
        }
    }
}

impl JointModelConfig {
    pub fn validate(&self) -> Result<()> {
        check_serial_interval(&self.serial_interval)?;
        for (name, x) in [
            ("rw_sd", self.rw_sd),
            ("dispersion", self.dispersion),
            ("shedding_scale", self.shedding_scale),
            ("initial_reproduction", self.initial_reproduction),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {x}")));
            }
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::invalid("rho", format!("must lie in (0, 1], got {}", self.rho)));
        }
        if !(self.noise_base.is_finite() && self.noise_base >= 0.0) {
            return Err(Error::invalid("noise_base", "must be finite and >= 0"));
        }
        if self.shedding_kernel.is_empty()
            || self.shedding_kernel.iter().any(|z| !(z.is_finite() && *z >= 0.0))
        {
            return Err(Error::invalid(
                "shedding_kernel",
                "must be non-empty with finite non-negative weights",
            ));
        }
        if self.initial_infections == 0 {
            return Err(Error::invalid("initial_infections", "must be at least 1"));
        }
        Ok(())
    }

    fn shedding_signal(&self, infections: &[u64], t: usize, total_population: u64) -> f64 {
        let lags = self.shedding_kernel.len().min(t);
        let load: f64 = (0..lags)
            .map(|s| self.shedding_kernel[s] * infections[t - 1 - s] as f64)
            .sum();
        (self.shedding_scale * load / total_population as f64).max(MU_FLOOR)
    }
}

/// Serial interval from a gamma density with the given mean and standard
/// deviation, discretised to days `1..=days` and renormalised.
pub fn discretised_gamma(mean: f64, sd: f64, days: usize) -> Vec<f64> {
    let shape = (mean / sd).powi(2);
    let rate = mean / (sd * sd);
    let law = Distribution::gamma(shape, rate).expect("positive mean and sd");
    let mut w: Vec<f64> = (1..=days)
        .map(|s| law.cdf(s as f64) - law.cdf(s as f64 - 1.0))
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Latent quantities behind a simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTruth {
    pub reproduction: Vec<f64>,
    pub infections: Vec<u64>,
    pub shedding: Vec<f64>,
}

pub fn simulate_joint(
    config: &JointModelConfig,
    design: &SurveillanceDesign,
    seed: RandomSeed,
) -> Result<(EpidemicSeries, WastewaterSeries, LatentTruth)> {
    config.validate()?;
    design.check_sampled_coverage()?;
    let days = design.days();
    if days < 10 {
        return Err(Error::Precondition(format!(
            "simulations need at least 10 days, got {days}"
        )));
    }
    let big_n = design.total_population();
    let mut rng = seed.rng();
    let mut log_r = config.initial_reproduction.ln();
    let mut reproduction = vec![config.initial_reproduction];
    let mut infections = vec![config.initial_infections];
    for t in 2..=days {
        log_r += config.rw_sd * rng.sample::<f64, _>(StandardNormal);
        let lambda = total_infectiousness(&infections, &config.serial_interval, t);
        reproduction.push(log_r.exp());
        infections.push(poisson(&mut rng, log_r.exp() * lambda));
    }
    let cases = infections
        .iter()
        .map(|&i| negative_binomial(&mut rng, config.rho * i as f64, config.dispersion))
        .collect();
    let mut shedding = Vec::with_capacity(days);
    let mut concentrations = Vec::with_capacity(days);
    for t in 1..=days {
        let mu = config.shedding_scale
            * (0..config.shedding_kernel.len().min(t))
                .map(|s| config.shedding_kernel[s] * infections[t - 1 - s] as f64)
                .sum::<f64>()
            / big_n as f64;
        shedding.push(mu);
        let z: f64 = rng.sample(StandardNormal);
        concentrations.push(if design.sampled()[t - 1] {
            let var = config.noise_base.powi(2) * big_n as f64 / design.coverage()[t - 1] as f64;
            Some(log_normal_draw(mu.max(MU_FLOOR), var, z))
        } else {
            None
        });
    }
    let series = EpidemicSeries::new(cases, config.serial_interval.clone())?;
    let ww = WastewaterSeries::new(concentrations, design.clone())?;
    Ok((
        series,
        ww,
        LatentTruth {
            reproduction,
            infections,
            shedding,
        },
    ))
}

fn log_normal_draw(mu: f64, var: f64, z: f64) -> f64 {
    (mu.ln() - 0.5 * var + var.sqrt() * z).exp()
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

fn negative_binomial<R: Rng + ?Sized>(rng: &mut R, mean: f64, dispersion: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let rate = rand_distr::Gamma::new(dispersion, mean / dispersion)
        .expect("positive parameters")
        .sample(rng);
    poisson(rng, rate)
}

fn nb_log_mass(c: u64, mean: f64, k: f64) -> f64 {
    if mean <= 0.0 {
        return if c == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let c = c as f64;
    ln_gamma(c + k) - ln_gamma(k) - ln_gamma(c + 1.0) + k * (k / (k + mean)).ln()
        + c * (mean / (k + mean)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSettings {
    pub particles: usize,
    pub seed: RandomSeed,
    /// Days of future data used for each day's `R_t` estimate.
    pub smoothing_lag: usize,
}

impl FilterSettings {
    pub fn new(particles: usize, seed: RandomSeed) -> Self {
        Self {
            particles,
            seed,
            smoothing_lag: 7,
        }
    }

    pub fn with_smoothing_lag(mut self, lag: usize) -> Self {
        self.smoothing_lag = lag;
        self
    }

    fn check(&self) -> Result<()> {
        if self.particles < MIN_PARTICLES {
            return Err(Error::Precondition(format!(
                "the joint filter needs at least {MIN_PARTICLES} particles, got {}",
                self.particles
            )));
        }
        if self.smoothing_lag == 0 {
            return Err(Error::invalid("smoothing_lag", "must be at least 1 day"));
        }
        Ok(())
    }
}

/// Per-day wastewater observation: value and log-scale noise variance.
type Observation = Option<(f64, f64)>;

fn observations(ww: &WastewaterSeries, noise_base: f64) -> Vec<Observation> {
    let d = ww.design();
    let big_n = d.total_population() as f64;
    ww.concentrations()
        .iter()
        .zip(d.coverage())
        .map(|(w, &n)| w.map(|x| (x, noise_base * noise_base * big_n / n as f64)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct JointPosterior {
    /// Smoothed `R_t` posterior for each day.
    pub rt: Vec<Distribution>,
    /// Final particle trajectories of `I_{1:T}`.
    pub infections: Vec<Vec<u64>>,
    pub weights: Vec<f64>,
    /// Smallest effective sample size seen by the filter.
    pub min_ess: f64,
}

impl JointPosterior {
    pub fn rt_variance(&self) -> Vec<f64> {
        self.rt.iter().map(Distribution::variance).collect()
    }

    pub fn rt_mean(&self) -> Vec<f64> {
        self.rt.iter().map(Distribution::mean).collect()
    }
}

/// Posterior over `R_t` and `I_t` given cases and, optionally, wastewater.
pub fn fit_joint(
    cases: &EpidemicSeries,
    ww: Option<&WastewaterSeries>,
    config: &JointModelConfig,
    settings: &FilterSettings,
) -> Result<JointPosterior> {
    config.validate()?;
    let days = cases.len();
    let obs = match ww {
        Some(w) => {
            if w.design().days() != days {
                return Err(Error::InvalidData(format!(
                    "{} days of cases but {} days of wastewater",
                    days,
                    w.design().days()
                )));
            }
            if config.noise_base == 0.0 && w.design().sampled_count() > 0 {
                return Err(Error::Precondition(
                    "fitting wastewater needs noise_base > 0".into(),
                ));
            }
            observations(w, config.noise_base)
        }
        None => vec![None; days],
    };
    let big_n = ww.map_or(1, |w| w.design().total_population());
    run_filter(cases.cases(), &obs, big_n, config, settings)
}

fn run_filter(
    cases: &[u64],
    obs: &[Observation],
    total_population: u64,
    config: &JointModelConfig,
    settings: &FilterSettings,
) -> Result<JointPosterior> {
    settings.check()?;
    let p = settings.particles;
    let days = cases.len();
    let lag = settings.smoothing_lag;
    let mut rng = settings.seed.rng();
    let r1 = rand_distr::Gamma::new(config.prior.shape, 1.0 / config.prior.rate)
        .map_err(|_| Error::invalid("prior", "invalid gamma parameters"))?;

    let mut log_r: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let mut v = Vec::with_capacity(days);
            v.push(r1.sample(&mut rng).max(f64::MIN_POSITIVE).ln());
            v
        })
        .collect();
    let mut infections: Vec<Vec<u64>> = (0..p)
        .map(|_| {
            let mut v = Vec::with_capacity(days);
            v.push(config.initial_infections);
            v
        })
        .collect();
    let mut log_w = vec![0.0; p];
    let mut weights = vec![1.0 / p as f64; p];
    let mut min_ess = p as f64;
    let mut rt: Vec<Option<Distribution>> = vec![None; days];

    let record = |day: usize, log_r: &[Vec<f64>], weights: &[f64]| -> Result<Distribution> {
        let values: Vec<f64> = log_r.iter().map(|path| path[day - 1].exp()).collect();
        Distribution::discrete(&values, weights)
    };

    for t in 2..=days {
        for i in 0..p {
            let step: f64 = rng.sample(StandardNormal);
            let lr = log_r[i][t - 2] + config.rw_sd * step;
            let lambda = total_infectiousness(&infections[i], &config.serial_interval, t);
            let new = poisson(&mut rng, lr.exp() * lambda);
            log_r[i].push(lr);
            infections[i].push(new);
            let mut ll = nb_log_mass(cases[t - 1], config.rho * new as f64, config.dispersion);
            if let Some((w, var)) = obs[t - 1] {
                let mu = config.shedding_signal(&infections[i], t, total_population);
                let d = w.ln() - mu.ln() + 0.5 * var;
                ll -= d * d / (2.0 * var);
            }
            log_w[i] += ll;
        }
        let (w, ess) = particle::normalise_log_weights(&log_w, t)?;
        weights = w;
        min_ess = min_ess.min(ess);
        if t > lag {
            rt[t - lag - 1] = Some(record(t - lag, &log_r, &weights)?);
        }
        if t < days && ess < 0.5 * p as f64 {
            let ancestors = particle::systematic(&weights, p, &mut rng);
            log_r = ancestors.iter().map(|&a| log_r[a].clone()).collect();
            infections = ancestors.iter().map(|&a| infections[a].clone()).collect();
            log_w.iter_mut().for_each(|x| *x = 0.0);
            weights = vec![1.0 / p as f64; p];
        } else {
            for (lw, w) in log_w.iter_mut().zip(&weights) {
                *lw = w.ln();
            }
        }
    }
    for day in days.saturating_sub(lag).max(1)..=days {
        if rt[day - 1].is_none() {
            rt[day - 1] = Some(record(day, &log_r, &weights)?);
        }
    }
    Ok(JointPosterior {
        rt: rt.into_iter().map(|d| d.expect("every day recorded")).collect(),
        infections,
        weights,
        min_ess,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyUr {
    pub var_cases_only: Vec<f64>,
    pub var_joint: Vec<f64>,
    /// `var_cases_only - var_joint`; may be negative on some days.
    pub ur: Vec<f64>,
}

impl DailyUr {
    /// Reduction as a percentage of the cases-only variance.
    pub fn ur_pct(&self) -> Vec<f64> {
        self.ur
            .iter()
            .zip(&self.var_cases_only)
            .map(|(u, v)| 100.0 * u / v)
            .collect()
    }

    pub fn mean_ur_pct(&self) -> f64 {
        let pct = self.ur_pct();
        pct.iter().sum::<f64>() / pct.len() as f64
    }
}

/// Daily reduction in `R_t` variance from adding the wastewater data.
pub fn daily_ur_wastewater(
    cases: &EpidemicSeries,
    ww: &WastewaterSeries,
    config: &JointModelConfig,
    settings: &FilterSettings,
) -> Result<DailyUr> {
    let cases_only = fit_joint(cases, None, config, settings)?.rt_variance();
    let joint = fit_joint(cases, Some(ww), config, settings)?.rt_variance();
    Ok(daily_ur_from(cases_only, joint))
}

pub(crate) fn daily_ur_from(var_cases_only: Vec<f64>, var_joint: Vec<f64>) -> DailyUr {
    let ur = var_cases_only.iter().zip(&var_joint).map(|(a, b)| a - b).collect();
    DailyUr {
        var_cases_only,
        var_joint,
        ur,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullPopulationEur {
    /// One result per day, with the refitted variances of every replicate.
    pub per_day: Vec<EurResult>,
    /// Sum over days; its standard error uses per-replicate totals.
    pub aggregate: EurResult,
    /// Fraction of replicate-days whose refitted variance exceeds the
    /// current one.
    pub increase_fraction: f64,
}

impl FullPopulationEur {
    /// Daily EUR as a percentage of the current variance.
    pub fn eur_pct(&self) -> Vec<f64> {
        self.per_day.iter().map(|r| 100.0 * r.relative()).collect()
    }

    /// Replicate `r`'s refitted variance on every day.
    pub fn replicate_trajectory(&self, r: usize) -> Vec<f64> {
        self.per_day
            .iter()
            .map(|d| d.per_replicate_remaining[r])
            .collect()
    }
}

/// Expected reduction in `R_t` variance from sampling wastewater from the
/// whole population every day.
pub fn eur_full_population(
    cases: &EpidemicSeries,
    ww: &WastewaterSeries,
    config: &JointModelConfig,
    settings: &FilterSettings,
    mc: &MonteCarlo,
) -> Result<FullPopulationEur> {
    eur_full_population_with_noise(cases, ww, config, settings, mc, 1.0)
}

/// As [`eur_full_population`] with the standard deviation of the simulated
/// wastewater scaled by `predictive_noise_scale` while the refit keeps the
/// fitted noise model. Any scale other than 1 makes the predictive
/// incoherent with the fit.
pub fn eur_full_population_with_noise(
    cases: &EpidemicSeries,
    ww: &WastewaterSeries,
    config: &JointModelConfig,
    settings: &FilterSettings,
    mc: &MonteCarlo,
    predictive_noise_scale: f64,
) -> Result<FullPopulationEur> {
    mc.check()?;
    if !(predictive_noise_scale.is_finite() && predictive_noise_scale > 0.0) {
        return Err(Error::invalid("predictive_noise_scale", "must be finite and > 0"));
    }
    let fit = fit_joint(cases, Some(ww), config, settings)?;
    let var_joint = fit.rt_variance();
    let days = cases.len();
    let design = ww.design();
    let big_n = design.total_population();
    let base_var = config.noise_base * config.noise_base;

    let mut cumulative = Vec::with_capacity(fit.weights.len());
    let mut acc = 0.0;
    for w in &fit.weights {
        acc += w;
        cumulative.push(acc);
    }

    let refits = exec::try_map_indexed(mc.execution, mc.replicates, |r| {
        let seed = mc.seed.replicate(r as u64);
        let run = || -> Result<Vec<f64>> {
            let mut rng = seed.rng();
            let u: f64 = rng.random::<f64>() * acc;
            let k = cumulative
                .partition_point(|&c| c <= u)
                .min(fit.infections.len() - 1);
            let latent = &fit.infections[k];
            let merged: Vec<Observation> = (1..=days)
                .map(|t| {
                    let z: f64 = rng.sample(StandardNormal);
                    let n = if design.sampled()[t - 1] {
                        design.coverage()[t - 1]
                    } else {
                        0
                    };
                    if n == big_n {
                        return ww.concentrations()[t - 1].map(|w| (w, base_var));
                    }
                    let mu = config.shedding_signal(latent, t, big_n);
                    let var = base_var * big_n as f64 / (big_n - n) as f64
                        * predictive_noise_scale.powi(2);
                    let simulated = log_normal_draw(mu, var, z);
                    let value = match ww.concentrations()[t - 1] {
                        Some(w) if n > 0 => {
                            (n as f64 * w + (big_n - n) as f64 * simulated) / big_n as f64
                        }
                        _ => simulated,
                    };
                    Some((value, base_var))
                })
                .collect();
            Ok(run_filter(cases.cases(), &merged, big_n, config, settings)?.rt_variance())
        };
        run().map_err(|e| Error::Replicate {
            seed,
            source: Box::new(e),
        })
    })?;

    let per_day: Vec<EurResult> = (0..days)
        .map(|t| {
            EurResult::from_replicates(var_joint[t], refits.iter().map(|v| v[t]).collect())
        })
        .collect();
    let totals: Vec<f64> = refits.iter().map(|v| v.iter().sum()).collect();
    let aggregate = EurResult::from_replicates(var_joint.iter().sum(), totals);
    let increases = refits
        .iter()
        .flat_map(|v| v.iter().zip(&var_joint).filter(|(after, before)| after > before))
        .count();
    Ok(FullPopulationEur {
        per_day,
        aggregate,
        increase_fraction: increases as f64 / (days * mc.replicates) as f64,
    })
}

/// Mean of `values` over the first and last `margin` days against the
/// median of the remaining interior days.
pub fn edge_contrast(values: &[f64], margin: usize) -> Option<(f64, f64, f64)> {
    if values.len() <= 2 * margin || margin == 0 {
        return None;
    }
    let n = values.len();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let mut interior = values[margin..n - margin].to_vec();
    interior.sort_by(f64::total_cmp);
    let m = interior.len();
    let median = if m % 2 == 1 {
        interior[m / 2]
    } else {
        0.5 * (interior[m / 2 - 1] + interior[m / 2])
    };
    Some((mean(&values[..margin]), median, mean(&values[n - margin..])))
}
