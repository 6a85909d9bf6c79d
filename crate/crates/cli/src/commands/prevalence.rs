use std::path::PathBuf;

use uqcal::engine;
use uqcal::prevalence::{BinomialPrevalenceModel, HypergeometricPrevalenceModel, PrevalenceData};
use uqcal::{LossFunction, MonteCarlo};

use super::override_fields;
use crate::config::Prevalence;
use crate::error::{CliError, Phase};
use crate::io::{self, real, Table};
use crate::svg::{self, Panel, Series};
use crate::{PrevalenceArgs, Run};

const GRID: usize = 400;
const MC_STREAM: u64 = 0x5052_4556;

pub fn run(ctx: &Run, mut cfg: Prevalence, args: PrevalenceArgs) -> Result<Vec<PathBuf>, CliError> {
    override_fields!(cfg, args, alpha0, beta0, tested, positives, replicates);
    if let Some(m) = args.m {
        cfg.m_grid = m;
    }
    if args.population.is_some() {
        cfg.population = args.population;
    }
    if cfg.m_grid.is_empty() {
        return Err(CliError::usage("prevalence.m_grid must not be empty"));
    }
    let data = PrevalenceData::new(cfg.population, cfg.tested, cfg.positives).phase("prevalence data")?;
    let model = BinomialPrevalenceModel::new(cfg.alpha0, cfg.beta0, data.clone()).phase("prevalence model")?;
    let posterior = model.posterior();
    let mut files = Vec::new();

    let mut table = Table::new(&["theta", "density"]);
    let thetas: Vec<f64> = (0..=GRID).map(|i| i as f64 / GRID as f64).collect();
    let density: Vec<f64> = thetas.iter().map(|&t| posterior.density_at(t)).collect();
    for (t, d) in thetas.iter().zip(&density) {
        table.push(vec![real(*t), real(*d)]);
    }
    let path = io::output_path(&ctx.out, "prevalence_posterior.csv");
    table.write(&path)?;
    files.push(path);

    if cfg.population.is_some() {
        let finite = HypergeometricPrevalenceModel::with_uniform_prior(data)
            .and_then(|m| m.posterior())
            .phase("finite-population posterior")?;
        let mut table = Table::new(&["theta", "probability"]);
        for (t, p) in finite.mass_table().expect("discrete posterior") {
            table.push(vec![real(t), real(p)]);
        }
        let path = io::output_path(&ctx.out, "prevalence_finite_posterior.csv");
        table.write(&path)?;
        files.push(path);
    }

    let current = posterior.variance();
    let post_model = model.posterior_model();
    let mut table = Table::new(&[
        "m",
        "posterior_variance",
        "eur_closed_form",
        "eur_exact",
        "eur_monte_carlo",
        "mc_standard_error",
        "n_replicates",
        "eur_relative",
    ]);
    let mut curve = (Vec::new(), Vec::new(), Vec::new());
    for &m in &cfg.m_grid {
        let pred = model.posterior_predictive(m);
        let exact = engine::eur_exact(&LossFunction::Quadratic, &post_model, &pred).phase("exact EUR")?;
        let mc = MonteCarlo::new(cfg.replicates, ctx.seed.derive(MC_STREAM).derive(m));
        let sim = engine::eur_monte_carlo(&LossFunction::Quadratic, &post_model, &pred, &mc).phase("Monte Carlo EUR")?;
        table.push(vec![
            m.to_string(),
            real(current),
            real(model.eur_quadratic(m)),
            real(exact.eur),
            real(sim.eur),
            real(sim.mc_standard_error),
            cfg.replicates.to_string(),
            real(exact.relative()),
        ]);
        curve.0.push(m as f64);
        curve.1.push(exact.eur);
        curve.2.push(sim.eur);
    }
    let path = io::output_path(&ctx.out, "prevalence_eur.csv");
    table.write(&path)?;
    files.push(path);

    let (a, b) = model.posterior_params();
    let panels = [
        Panel::new(&format!("Posterior Beta({a}, {b})"), "prevalence", "density")
            .with(Series::line(thetas, density, "#1f5fa8")),
        Panel::new("Expected variance reduction", "additional tests m", "EUR")
            .with(Series::line(curve.0.clone(), vec![current; curve.0.len()], "#999999"))
            .with(Series::line(curve.0.clone(), curve.1, "#c0392b"))
            .with(Series::Points {
                xs: curve.0,
                ys: curve.2,
                color: "#222222",
            }),
    ];
    let path = io::output_path(&ctx.out, "prevalence.svg");
    io::write_text(&path, &svg::render(&panels, 2))?;
    files.push(path);
    Ok(files)
}
