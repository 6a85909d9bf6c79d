use std::path::PathBuf;

use uqcal::prevalence::{BinomialPrevalenceModel, PrevalenceData};
use uqcal::renewal::{rt_posterior_perfect, EpidemicSeries, RenewalPrior};
use uqcal::{voi, MonteCarlo};

use super::override_fields;
use crate::config::{loss_label, parse_loss, Voi};
use crate::error::{CliError, Phase};
use crate::io::{self, optional, real, Table};
use crate::{Run, VoiArgs};

const MC_STREAM: u64 = 0x564f_4931;

pub fn run(ctx: &Run, mut cfg: Voi, args: VoiArgs) -> Result<Vec<PathBuf>, CliError> {
    override_fields!(cfg, args, m, losses, replicates);
    if args.cases.is_some() {
        cfg.cases = args.cases.clone();
    }
    if args.serial_interval.is_some() {
        cfg.serial_interval = args.serial_interval.clone();
    }
    let losses = cfg.losses.iter().map(|s| parse_loss(s)).collect::<Result<Vec<_>, _>>()?;
    if losses.is_empty() {
        return Err(CliError::usage("voi.losses must not be empty"));
    }
    let data = PrevalenceData::new(None, cfg.tested, cfg.positives).phase("prevalence data")?;
    let model = BinomialPrevalenceModel::new(cfg.alpha0, cfg.beta0, data).phase("prevalence model")?;
    let post = model.posterior_model();
    let pred = model.posterior_predictive(cfg.m);
    let eig = voi::eig_exact(&post, &pred).phase("expected information gain")?;

    let mut table = Table::new(&[
        "loss",
        "m",
        "posterior_uncertainty",
        "evsi",
        "evsi_monte_carlo",
        "evsi_se",
        "n_replicates",
        "evpi",
        "eig",
        "incoherent_warning",
    ]);
    for (i, loss) in losses.iter().enumerate() {
        let exact = voi::evsi_exact(loss, &post, &pred).phase("EVSI")?;
        let mc = MonteCarlo::new(cfg.replicates, ctx.seed.derive(MC_STREAM).derive(i as u64));
        let sim = voi::evsi_monte_carlo(loss, &post, &pred, &mc).phase("Monte Carlo EVSI")?;
        let evpi = match voi::evpi(loss, &post.posterior) {
            Ok(v) => Some(v),
            Err(uqcal::Error::Precondition(_)) => None,
            Err(e) => return Err(e).phase("EVPI"),
        };
        table.push(vec![
            loss_label(loss),
            cfg.m.to_string(),
            real(exact.result.total_uncertainty),
            real(exact.value()),
            real(sim.value()),
            real(sim.result.mc_standard_error),
            cfg.replicates.to_string(),
            optional(evpi),
            real(eig.eur),
            exact.incoherent_warning.to_string(),
        ]);
    }
    let mut files = Vec::new();
    let path = io::output_path(&ctx.out, "voi_report.csv");
    table.write(&path)?;
    files.push(path);

    match (&cfg.cases, &cfg.serial_interval) {
        (Some(cases_path), Some(si_path)) => {
            files.push(fisher_table(ctx, &cfg, cases_path, si_path)?);
        }
        (None, None) => {}
        _ => {
            return Err(CliError::usage(
                "the Fisher-information table needs both --cases and --serial-interval",
            ))
        }
    }
    Ok(files)
}

/// Inverse Fisher information of the renewal likelihood at the windowed
/// maximum-likelihood `R_t`, against the flat-prior posterior variance.
fn fisher_table(
    ctx: &Run,
    cfg: &Voi,
    cases_path: &std::path::Path,
    si_path: &std::path::Path,
) -> Result<PathBuf, CliError> {
    let input = io::read_cases(cases_path)?;
    let w = io::read_serial_interval(si_path)?;
    let series = EpidemicSeries::new(input.cases.clone(), w).map_err(|e| CliError::data(si_path, e.to_string()))?;
    let flat = RenewalPrior::new(1.0, 1e-9, cfg.window).phase("flat prior")?;
    let mut table = Table::new(&[
        "date",
        "window_cases",
        "lambda_sum",
        "r_hat",
        "inverse_fisher",
        "flat_prior_variance",
    ]);
    for t in cfg.window + 1..=series.len() {
        let days = t + 1 - cfg.window..=t;
        let total: u64 = days.clone().map(|s| input.cases[s - 1]).sum();
        let lambda: f64 = days
            .map(|s| series.total_infectiousness(s))
            .sum::<uqcal::Result<f64>>()
            .phase("total infectiousness")?;
        let post = rt_posterior_perfect(&series, &flat, t).phase("flat-prior posterior")?;
        let (r_hat, inverse) = if total > 0 && lambda > 0.0 {
            let r = total as f64 / lambda;
            let fi = voi::fisher_information_renewal(r, lambda).phase("Fisher information")?;
            (Some(r), Some(1.0 / fi))
        } else {
            (None, None)
        };
        table.push(vec![
            input.dates[t - 1].to_string(),
            total.to_string(),
            real(lambda),
            optional(r_hat),
            optional(inverse),
            real(post.variance()),
        ]);
    }
    let path = io::output_path(&ctx.out, "voi_fisher.csv");
    table.write(&path)?;
    Ok(path)
}
