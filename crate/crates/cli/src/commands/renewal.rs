use std::path::PathBuf;

use uqcal::renewal::{
    rt_posterior_perfect, EpidemicSeries, ParticleSettings, RenewalPrior, Summary, UnderreportedFit,
    UnderreportingSpec,
};
use uqcal::MonteCarlo;

use super::override_fields;
use crate::config::Renewal;
use crate::error::{CliError, Phase};
use crate::io::{self, real, Table};
use crate::svg::{self, Panel, Series};
use crate::{RenewalArgs, Run};

const FILTER_STREAM: u64 = 0x5245_4e31;
const EUR_STREAM: u64 = 0x5245_4e32;

pub fn run(ctx: &Run, mut cfg: Renewal, args: RenewalArgs) -> Result<Vec<PathBuf>, CliError> {
    override_fields!(
        cfg,
        args,
        cases,
        serial_interval,
        rho,
        window,
        prior_shape,
        prior_rate,
        particles,
        replicates
    );
    let input = io::read_cases(&cfg.cases)?;
    let w = io::read_serial_interval(&cfg.serial_interval)?;
    let series = EpidemicSeries::new(input.cases.clone(), w)
        .map_err(|e| CliError::data(&cfg.serial_interval, e.to_string()))?;
    let prior = RenewalPrior::new(cfg.prior_shape, cfg.prior_rate, cfg.window).phase("renewal prior")?;
    let spec = UnderreportingSpec::new(cfg.rho).phase("reporting model")?;
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(CliError::usage("renewal.level must lie in (0, 1)"));
    }
    if series.len() <= cfg.window {
        return Err(CliError::data(
            &cfg.cases,
            format!("{} days of cases cannot fill a {}-day window after day 1", series.len(), cfg.window),
        ));
    }
    let fit = UnderreportedFit::fit(
        &series,
        &prior,
        &spec,
        ParticleSettings::new(cfg.particles, ctx.seed.derive(FILTER_STREAM)),
    )
    .phase("latent-infection filter")?;

    let mut table = Table::new(&[
        "date",
        "perfect_mean",
        "perfect_variance",
        "perfect_lower",
        "perfect_upper",
        "underreported_mean",
        "underreported_variance",
        "underreported_lower",
        "underreported_upper",
        "eur",
        "eur_pct",
        "se",
        "n_replicates",
    ]);
    let mut plot = Plot::default();
    for t in cfg.window + 1..=series.len() {
        let perfect = rt_posterior_perfect(&series, &prior, t).phase("perfect-reporting posterior")?;
        let perfect = Summary::of(&perfect, cfg.level).phase("perfect-reporting summary")?;
        let under = Summary::of(&fit.rt_posterior(t).phase("under-reporting posterior")?, cfg.level)
            .phase("under-reporting summary")?;
        let mc = MonteCarlo::new(cfg.replicates, ctx.seed.derive(EUR_STREAM).derive(t as u64));
        let eur = fit.eur_full_reporting(t, &mc).phase("full-reporting EUR")?;
        table.push(vec![
            input.dates[t - 1].to_string(),
            real(perfect.mean),
            real(perfect.variance),
            real(perfect.lower),
            real(perfect.upper),
            real(under.mean),
            real(under.variance),
            real(under.lower),
            real(under.upper),
            real(eur.eur),
            real(100.0 * eur.relative()),
            real(eur.mc_standard_error),
            eur.replicates.to_string(),
        ]);
        plot.day.push(t as f64);
        plot.perfect.push(perfect);
        plot.under.push(under);
        plot.eur.push((eur.eur, eur.mc_standard_error));
    }
    let mut files = Vec::new();
    let path = io::output_path(&ctx.out, "renewal_rt.csv");
    table.write(&path)?;
    files.push(path);
    let path = io::output_path(&ctx.out, "renewal.svg");
    io::write_text(&path, &plot.render(&input.cases))?;
    files.push(path);
    Ok(files)
}

#[derive(Default)]
struct Plot {
    day: Vec<f64>,
    perfect: Vec<Summary>,
    under: Vec<Summary>,
    eur: Vec<(f64, f64)>,
}

impl Plot {
    fn render(&self, cases: &[u64]) -> String {
        let pick = |v: &[Summary], f: fn(&Summary) -> f64| v.iter().map(f).collect::<Vec<_>>();
        let days: Vec<f64> = (1..=cases.len()).map(|t| t as f64).collect();
        let rt = Panel::new("R_t posterior", "day", "R_t")
            .with(Series::Ribbon {
                xs: self.day.clone(),
                lower: pick(&self.under, |s| s.lower),
                upper: pick(&self.under, |s| s.upper),
                color: "#e67e22",
                opacity: 0.3,
            })
            .with(Series::Ribbon {
                xs: self.day.clone(),
                lower: pick(&self.perfect, |s| s.lower),
                upper: pick(&self.perfect, |s| s.upper),
                color: "#1f5fa8",
                opacity: 0.3,
            })
            .with(Series::line(self.day.clone(), pick(&self.under, |s| s.mean), "#e67e22"))
            .with(Series::line(self.day.clone(), pick(&self.perfect, |s| s.mean), "#1f5fa8"));
        let eur = Panel::new("EUR of full reporting", "day", "variance reduction")
            .with(Series::Ribbon {
                xs: self.day.clone(),
                lower: self.eur.iter().map(|(e, s)| e - 2.0 * s).collect(),
                upper: self.eur.iter().map(|(e, s)| e + 2.0 * s).collect(),
                color: "#c0392b",
                opacity: 0.25,
            })
            .with(Series::line(self.day.clone(), self.eur.iter().map(|e| e.0).collect(), "#c0392b"));
        let counts = Panel::new("Reported cases", "day", "cases").with(Series::Bars {
            xs: days,
            ys: cases.iter().map(|&c| c as f64).collect(),
            color: "#7f8c8d",
        });
        svg::render(&[counts, rt, eur], 3)
    }
}
