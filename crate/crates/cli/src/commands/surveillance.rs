use std::path::PathBuf;

use chrono::NaiveDate;
use uqcal::renewal::EpidemicSeries;
use uqcal::surveillance::{
    daily_ur_wastewater, edge_contrast, eur_full_population, simulate_joint, FilterSettings,
    SurveillanceDesign, WastewaterSeries,
};
use uqcal::MonteCarlo;

use super::override_fields;
use crate::config::Surveillance;
use crate::error::{CliError, Phase};
use crate::io::{self, optional, real, Table};
use crate::svg::{self, Panel, Series};
use crate::{Run, SurveillanceArgs};

const DESIGN_STREAM: u64 = 0x5355_5231;
const SIMULATION_STREAM: u64 = 0x5355_5232;
const FILTER_STREAM: u64 = 0x5355_5233;
const REPLICATE_STREAM: u64 = 0x5355_5234;
/// Days at each end compared against the interior median.
const EDGE_MARGIN: usize = 5;

struct Inputs {
    dates: Vec<NaiveDate>,
    cases: EpidemicSeries,
    ww: WastewaterSeries,
}

pub fn run(ctx: &Run, mut cfg: Surveillance, args: SurveillanceArgs) -> Result<Vec<PathBuf>, CliError> {
    override_fields!(cfg, args, replicates, particles, days, sampled_days, noise_base, smoothing_lag);
    if args.cases.is_some() {
        cfg.cases = args.cases.clone();
    }
    if args.wastewater.is_some() {
        cfg.wastewater = args.wastewater.clone();
    }
    cfg.simulate |= args.simulate;
    cfg.coverage_full |= args.coverage_full;
    let model = cfg.model()?;
    let mut files = Vec::new();

    let inputs = if cfg.simulate {
        simulate(ctx, &cfg, &model, &mut files)?
    } else {
        if cfg.coverage_full {
            return Err(CliError::usage("--coverage-full applies only with --simulate"));
        }
        read(&cfg, &model)?
    };
    let Inputs { dates, cases, ww } = inputs;

    let settings = FilterSettings::new(cfg.particles, ctx.seed.derive(FILTER_STREAM))
        .with_smoothing_lag(cfg.smoothing_lag);
    let ur = daily_ur_wastewater(&cases, &ww, &model, &settings).phase("cases-only and joint fits")?;
    let mc = MonteCarlo::new(cfg.replicates, ctx.seed.derive(REPLICATE_STREAM));
    let eur = eur_full_population(&cases, &ww, &model, &settings, &mc).phase("full-population EUR")?;

    let mut table = Table::new(&["date", "var_cases_only", "var_joint", "ur", "ur_pct"]);
    let ur_pct = ur.ur_pct();
    for t in 0..dates.len() {
        table.push(vec![
            dates[t].to_string(),
            real(ur.var_cases_only[t]),
            real(ur.var_joint[t]),
            real(ur.ur[t]),
            real(ur_pct[t]),
        ]);
    }
    let path = io::output_path(&ctx.out, "study_ur.csv");
    table.write(&path)?;
    files.push(path);

    let mut table = Table::new(&["date", "var_joint", "mean_var_full", "eur", "eur_pct", "se", "n_replicates"]);
    let eur_pct = eur.eur_pct();
    for (t, day) in eur.per_day.iter().enumerate() {
        table.push(vec![
            dates[t].to_string(),
            real(day.total_uncertainty),
            real(day.expected_remaining),
            real(day.eur),
            real(eur_pct[t]),
            real(day.mc_standard_error),
            day.replicates.to_string(),
        ]);
    }
    let path = io::output_path(&ctx.out, "study_eur.csv");
    table.write(&path)?;
    files.push(path);

    let mut table = Table::new(&["replicate", "date", "var_full"]);
    for r in 0..cfg.replicates {
        for (t, v) in eur.replicate_trajectory(r).into_iter().enumerate() {
            table.push(vec![r.to_string(), dates[t].to_string(), real(v)]);
        }
    }
    let path = io::output_path(&ctx.out, "study_replicates.csv");
    table.write(&path)?;
    files.push(path);

    let agg = &eur.aggregate;
    let edges = edge_contrast(&ur.var_joint, EDGE_MARGIN);
    let max_ur_pct = ur_pct.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut table = Table::new(&["metric", "value"]);
    let z = if agg.mc_standard_error > 0.0 {
        Some(agg.eur / agg.mc_standard_error)
    } else {
        None
    };
    let rows: Vec<(&str, String)> = vec![
        ("days", dates.len().to_string()),
        ("sampled_days", ww.design().sampled_count().to_string()),
        ("replicates", cfg.replicates.to_string()),
        ("particles", cfg.particles.to_string()),
        ("mean_ur_pct", real(ur.mean_ur_pct())),
        ("max_ur_pct", real(max_ur_pct)),
        ("aggregate_var_joint", real(agg.total_uncertainty)),
        ("aggregate_eur", real(agg.eur)),
        ("aggregate_se", real(agg.mc_standard_error)),
        ("aggregate_z", optional(z)),
        ("aggregate_eur_pct", real(100.0 * agg.relative())),
        ("mean_eur_pct", real(eur_pct.iter().sum::<f64>() / eur_pct.len() as f64)),
        ("increase_fraction", real(eur.increase_fraction)),
        ("edge_margin_days", EDGE_MARGIN.to_string()),
        ("edge_first_mean_var_joint", optional(edges.map(|e| e.0))),
        ("interior_median_var_joint", optional(edges.map(|e| e.1))),
        ("edge_last_mean_var_joint", optional(edges.map(|e| e.2))),
    ];
    for (k, v) in rows {
        table.push(vec![k.to_string(), v]);
    }
    let path = io::output_path(&ctx.out, "study_summary.csv");
    table.write(&path)?;
    files.push(path);

    let days: Vec<f64> = (1..=dates.len()).map(|t| t as f64).collect();
    let big_n = ww.design().total_population() as f64;
    let sampled: Vec<(f64, f64)> = ww
        .concentrations()
        .iter()
        .enumerate()
        .filter_map(|(t, c)| c.map(|c| ((t + 1) as f64, c.ln())))
        .collect();
    let mut variance = Panel::new("Posterior variance of R_t", "day", "variance");
    for r in 0..cfg.replicates {
        variance = variance.with(Series::thin(days.clone(), eur.replicate_trajectory(r), "#c0392b"));
    }
    let variance = variance
        .with(Series::line(days.clone(), ur.var_cases_only.clone(), "#7f8c8d"))
        .with(Series::line(days.clone(), ur.var_joint.clone(), "#1f5fa8"))
        .with(Series::line(
            days.clone(),
            eur.per_day.iter().map(|d| d.expected_remaining).collect(),
            "#c0392b",
        ));
    let panels = [
        Panel::new("Reported cases", "day", "cases").with(Series::Bars {
            xs: days.clone(),
            ys: cases.cases().iter().map(|&c| c as f64).collect(),
            color: "#7f8c8d",
        }),
        Panel::new("Wastewater", "day", "log concentration").with(Series::Points {
            xs: sampled.iter().map(|p| p.0).collect(),
            ys: sampled.iter().map(|p| p.1).collect(),
            color: "#16a085",
        }),
        Panel::new("Catchment coverage", "day", "fraction of population").with(Series::Bars {
            xs: days.clone(),
            ys: ww.design().coverage().iter().map(|&n| n as f64 / big_n).collect(),
            color: "#8e44ad",
        }),
        variance,
    ];
    let path = io::output_path(&ctx.out, "surveillance.svg");
    io::write_text(&path, &svg::render(&panels, 2))?;
    files.push(path);
    Ok(files)
}

fn simulate(
    ctx: &Run,
    cfg: &Surveillance,
    model: &uqcal::surveillance::JointModelConfig,
    files: &mut Vec<PathBuf>,
) -> Result<Inputs, CliError> {
    let start = NaiveDate::parse_from_str(&cfg.start_date, "%Y-%m-%d")
        .map_err(|e| CliError::usage(format!("surveillance.start_date: {e}")))?;
    let design = if cfg.coverage_full {
        SurveillanceDesign::full(cfg.population, cfg.days)
    } else {
        SurveillanceDesign::synthetic(
            cfg.population,
            cfg.days,
            cfg.sampled_days,
            cfg.coverage_min,
            cfg.coverage_max,
            ctx.seed.derive(DESIGN_STREAM),
        )
    }
    .phase("sampling design")?;
    let (cases, ww, truth) =
        simulate_joint(model, &design, ctx.seed.derive(SIMULATION_STREAM)).phase("simulation")?;
    let dates: Vec<NaiveDate> = (0..cfg.days as i64).map(|d| start + chrono::Duration::days(d)).collect();

    let mut table = Table::new(&["date", "cases"]);
    for (d, c) in dates.iter().zip(cases.cases()) {
        table.push(vec![d.to_string(), c.to_string()]);
    }
    let path = io::output_path(&ctx.out, "study_cases.csv");
    table.write(&path)?;
    files.push(path);

    let mut table = Table::new(&["date", "concentration", "catchment_population"]);
    for (t, d) in dates.iter().enumerate() {
        table.push(vec![
            d.to_string(),
            optional(ww.concentrations()[t]),
            ww.design().coverage()[t].to_string(),
        ]);
    }
    let path = io::output_path(&ctx.out, "study_wastewater.csv");
    table.write(&path)?;
    files.push(path);

    let mut table = Table::new(&["date", "reproduction", "infections", "shedding"]);
    for (t, d) in dates.iter().enumerate() {
        table.push(vec![
            d.to_string(),
            real(truth.reproduction[t]),
            truth.infections[t].to_string(),
            real(truth.shedding[t]),
        ]);
    }
    let path = io::output_path(&ctx.out, "study_truth.csv");
    table.write(&path)?;
    files.push(path);
    Ok(Inputs { dates, cases, ww })
}

fn read(cfg: &Surveillance, model: &uqcal::surveillance::JointModelConfig) -> Result<Inputs, CliError> {
    let (Some(cases_path), Some(ww_path)) = (&cfg.cases, &cfg.wastewater) else {
        return Err(CliError::usage(
            "surveillance needs --simulate or both --cases and --wastewater",
        ));
    };
    let input = io::read_cases(cases_path)?;
    let rows = io::read_wastewater(ww_path)?;
    if rows.dates != input.dates {
        return Err(CliError::data(ww_path, "dates must match the case series"));
    }
    let cases = EpidemicSeries::new(input.cases, model.serial_interval.clone())
        .map_err(|e| CliError::data(cases_path, e.to_string()))?;
    let sampled = rows.concentrations.iter().map(Option::is_some).collect();
    let design = SurveillanceDesign::new(cfg.population, rows.coverage, sampled)
        .map_err(|e| CliError::data(ww_path, e.to_string()))?;
    let ww = WastewaterSeries::new(rows.concentrations, design).map_err(|e| CliError::data(ww_path, e.to_string()))?;
    Ok(Inputs {
        dates: input.dates,
        cases,
        ww,
    })
}
