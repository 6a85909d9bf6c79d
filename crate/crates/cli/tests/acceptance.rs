//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p uqcal-cli --test acceptance --release`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use uqcal::engine::{self, MonteCarlo, PosteriorModel, PredictiveModel};
use uqcal::prevalence::{AdditionalTests, BinomialPrevalenceModel, HypergeometricPrevalenceModel, PrevalenceData};
use uqcal::renewal::{rt_posterior_perfect, EpidemicSeries, ParticleSettings, RenewalPrior, UnderreportedFit, UnderreportingSpec};
use uqcal::{voi, Distribution, LossFunction, RandomSeed};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn binomial(a0: f64, b0: f64, n: u64, pos: u64) -> BinomialPrevalenceModel {
    BinomialPrevalenceModel::new(a0, b0, PrevalenceData::new(None, n, pos).unwrap()).unwrap()
}

/// Mean and variance of the density proportional to `exp(log_kernel)` by
/// Simpson's rule over 4096 intervals.
fn grid_moments(log_kernel: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const N: usize = 4096;
    let h = (hi - lo) / N as f64;
    let xs: Vec<f64> = (0..=N).map(|i| lo + h * i as f64).collect();
    let logs: Vec<f64> = xs.iter().map(|&x| log_kernel(x)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let simpson = |g: &dyn Fn(usize) -> f64| {
        let mut s = g(0) + g(N);
        for i in 1..N {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i);
        }
        s * h / 3.0
    };
    let z = simpson(&|i| f[i]);
    let mean = simpson(&|i| xs[i] * f[i]) / z;
    (mean, simpson(&|i| (xs[i] - mean).powi(2) * f[i]) / z)
}

/// Two passes: locate where the kernel is within `e^-60` of its peak, then
/// grid that range finely.
fn refined(log_kernel: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64) -> (f64, f64) {
    const N: usize = 1 << 16;
    let h = (hi - lo) / N as f64;
    let logs: Vec<f64> = (0..=N).map(|i| log_kernel(lo + h * i as f64)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = logs.iter().position(|&l| l > max - 60.0).unwrap();
    let last = logs.iter().rposition(|&l| l > max - 60.0).unwrap();
    let a = lo + h * first.saturating_sub(1) as f64;
    let b = (lo + h * (last + 1) as f64).min(hi);
    grid_moments(log_kernel, a, b)
}

const PREVALENCE_GRID: [(f64, f64, u64, u64); 9] = [
    (1.0, 1.0, 0, 0),
    (1.0, 1.0, 10, 3),
    (1.0, 1.0, 100, 30),
    (2.0, 5.0, 20, 11),
    (2.0, 2.0, 10, 0),
    (5.0, 1.0, 100, 97),
    (1.0, 1.0, 1000, 5),
    (3.0, 3.0, 40, 20),
    (2.0, 8.0, 10, 10),
];

/// `c ln x`, taken as 0 when `c = 0`.
fn xlogy(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x.ln()
    }
}

fn renewal_inputs() -> (Vec<u64>, Vec<f64>) {
    let mut cases = Vec::new();
    let mut r = csv::Reader::from_path(repo("data/renewal_cases.csv")).unwrap();
    for rec in r.records() {
        cases.push(rec.unwrap()[1].parse().unwrap());
    }
    let mut w = Vec::new();
    let mut r = csv::Reader::from_path(repo("data/serial_interval.csv")).unwrap();
    for rec in r.records() {
        w.push(rec.unwrap()[1].parse().unwrap());
    }
    (cases, w)
}

fn lambda(counts: &[u64], w: &[f64], t: usize) -> f64 {
    (1..t.min(w.len() + 1)).map(|s| counts[t - 1 - s] as f64 * w[s - 1]).sum()
}

fn conjugacy() -> Outcome {
    let mut worst: f64 = 0.0;
    for (a0, b0, n, pos) in PREVALENCE_GRID {
        let post = binomial(a0, b0, n, pos).posterior();
        let kernel = |p: f64| xlogy(a0 - 1.0 + pos as f64, p) + xlogy(b0 - 1.0 + (n - pos) as f64, 1.0 - p);
        let (m, v) = refined(kernel, 0.0, 1.0);
        worst = worst.max((post.mean() - m).abs()).max((post.variance() - v).abs());
    }
    let (cases, w) = renewal_inputs();
    let series = EpidemicSeries::new(cases.clone(), w.clone()).unwrap();
    let mut checked = 0;
    for (shape, rate) in [(1.0, 0.2), (2.0, 1.0), (5.0, 5.0)] {
        for window in [1, 3, 7] {
            let prior = RenewalPrior::new(shape, rate, window).unwrap();
            for t in (window + 1..=cases.len()).step_by(6) {
                let post = rt_posterior_perfect(&series, &prior, t).unwrap();
                let kernel = |r: f64| {
                    if r <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    let mut l = (shape - 1.0) * r.ln() - rate * r;
                    for s in t + 1 - window..=t {
                        let mu = r * lambda(&cases, &w, s);
                        l += cases[s - 1] as f64 * mu.ln() - mu;
                    }
                    l
                };
                let (m, v) = refined(kernel, 0.0, 60.0);
                worst = worst.max((post.mean() - m).abs()).max((post.variance() - v).abs());
                checked += 1;
            }
        }
    }
    outcome(
        worst < 1e-6,
        format!("{} prevalence and {checked} R_t posteriors, max moment error {worst:.2e}", PREVALENCE_GRID.len()),
    )
}

fn eur_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for a0 in [0.5, 1.0, 2.0] {
        for b0 in [0.5, 1.0, 2.0] {
            for n in [0, 10, 100] {
                for m in [0, 1, 12, 100] {
                    let fit = binomial(a0, b0, n, 3 * n / 10);
                    let exact = engine::eur_exact(&LossFunction::Quadratic, &fit.posterior_model(), &fit.posterior_predictive(m))
                        .unwrap();
                    worst = worst.max((fit.eur_quadratic(m) - exact.eur).abs());
                    points += 1;
                }
            }
        }
    }
    let mut max_z: f64 = 0.0;
    for (i, (a0, b0, n, m)) in [(1.0, 1.0, 10, 12), (0.5, 2.0, 100, 100), (2.0, 0.5, 0, 1)].into_iter().enumerate() {
        let fit = binomial(a0, b0, n, 3 * n / 10);
        let (post, pred) = (fit.posterior_model(), fit.posterior_predictive(m));
        let exact = engine::eur_exact(&LossFunction::Quadratic, &post, &pred).unwrap();
        let mc = engine::eur_monte_carlo(&LossFunction::Quadratic, &post, &pred, &MonteCarlo::new(10_000, RandomSeed::new(100 + i as u64)))
            .unwrap();
        max_z = max_z.max((mc.eur - exact.eur).abs() / mc.mc_standard_error);
    }
    outcome(
        worst <= 1e-12 && max_z <= 3.0,
        format!("{points} grid points, max |closed - exact| {worst:.2e}; Monte Carlo max |z| {max_z:.2}"),
    )
}

fn coherence() -> Outcome {
    let mut worst_coherent: f64 = 0.0;
    let mut least_inflated = f64::INFINITY;
    let mut min_eur = f64::INFINITY;
    let losses = [LossFunction::Quadratic, LossFunction::Log, LossFunction::Pinball { level: 0.5 }, LossFunction::Pinball { level: 0.9 }];
    for a0 in [0.5, 1.0, 2.0] {
        for b0 in [0.5, 1.0, 2.0] {
            for (n, pos) in [(0, 0), (10, 3), (100, 2), (100, 50)] {
                for m in [2, 12, 100] {
                    let fit = binomial(a0, b0, n, pos);
                    let post = fit.posterior_model();
                    let mut pred = fit.posterior_predictive(m);
                    let r = engine::check_coherence(&post, &mut pred, None, 1e-10).unwrap();
                    worst_coherent = worst_coherent.max(r.max_deviation);
                    let mut inflated = fit.overdispersed_predictive(m, 0.5).unwrap();
                    let r = engine::check_coherence(&post, &mut inflated, None, 1e-10).unwrap();
                    least_inflated = least_inflated.min(r.max_deviation);
                    for loss in &losses {
                        if let Ok(e) = engine::eur_exact(loss, &post, &inflated) {
                            min_eur = min_eur.min(e.eur);
                        }
                    }
                }
            }
        }
    }
    let identity = worst_coherent <= 1e-10 && least_inflated > 1e-10;
    outcome(
        identity && min_eur < 0.0,
        format!(
            "coherent max deviation {worst_coherent:.2e}, inflated min deviation {least_inflated:.2e}; \
             smallest inflated eur_exact {min_eur:.3e} (a negative value is required)"
        ),
    )
}

fn non_negativity() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut min_exact = f64::INFINITY;
    let mut min_z = f64::INFINITY;
    for (i, (a0, b0, n, pos)) in PREVALENCE_GRID.into_iter().enumerate() {
        let fit = binomial(a0, b0, n, pos);
        let (post, pred) = (fit.posterior_model(), fit.posterior_predictive(12));
        for loss in [LossFunction::Quadratic, LossFunction::Log, LossFunction::Pinball { level: 0.9 }] {
            min_exact = min_exact.min(engine::eur_exact(&loss, &post, &pred).unwrap().eur);
            let mc = engine::eur_monte_carlo(&loss, &post, &pred, &MonteCarlo::new(2_000, RandomSeed::new(i as u64))).unwrap();
            if mc.mc_standard_error > 0.0 {
                min_z = min_z.min(mc.eur / mc.mc_standard_error);
            }
        }
    }
    pass &= min_exact >= -1e-12 && min_z >= -3.0;
    notes.push(format!("prevalence min exact {min_exact:.2e}, min z {min_z:.2}"));

    let fit = binomial(2.0, 3.0, 10, 3);
    let ignoring = PosteriorModel::new("z", fit.posterior(), |_: &AdditionalTests| Ok(fit.posterior()));
    let pred = fit.posterior_predictive(12);
    let zero = engine::eur_monte_carlo(&LossFunction::Quadratic, &ignoring, &pred, &MonteCarlo::new(1_000, RandomSeed::new(1))).unwrap();
    pass &= zero.eur.abs() <= 3.0 * zero.mc_standard_error;
    let point = PredictiveModel::enumerated(vec![(AdditionalTests { tests: 0, positives: 0 }, 1.0)]).unwrap();
    pass &= engine::eur_exact(&LossFunction::Quadratic, &fit.posterior_model(), &point).unwrap().eur == 0.0;

    let (cases, w) = renewal_inputs();
    let series = EpidemicSeries::new(cases, w).unwrap();
    let prior = RenewalPrior::default();
    let mut min_renewal = f64::INFINITY;
    for (rho, seed) in [(0.5, 1), (0.25, 2), (1.0, 3)] {
        let spec = UnderreportingSpec::new(rho).unwrap();
        let fit = UnderreportedFit::fit(&series, &prior, &spec, ParticleSettings::new(1_000, RandomSeed::new(seed))).unwrap();
        for t in (8..=series.len()).step_by(3) {
            let r = fit.eur_full_reporting(t, &MonteCarlo::new(500, RandomSeed::new(t as u64))).unwrap();
            if rho == 1.0 {
                pass &= r.eur == 0.0;
            } else {
                min_renewal = min_renewal.min(r.eur / r.mc_standard_error);
            }
        }
    }
    pass &= min_renewal >= -3.0;
    notes.push(format!("renewal min z {min_renewal:.2}, full reporting 0"));

    let tmp = std::env::temp_dir().join(format!("uqcal-acceptance-nonneg-{}", std::process::id()));
    let run = |extra: &[&str]| {
        let mut args = vec!["surveillance", "--simulate", "--particles", "5000", "--replicates", "20", "--out", tmp.to_str().unwrap()];
        args.extend_from_slice(extra);
        let ok = Command::new(env!("CARGO_BIN_EXE_uqcal")).args(&args).output().unwrap().status.success();
        let mut r = csv::Reader::from_path(tmp.join("study_eur.csv")).unwrap();
        let z: Vec<(f64, f64)> = r
            .records()
            .map(|x| {
                let x = x.unwrap();
                (x[3].parse().unwrap(), x[5].parse().unwrap())
            })
            .collect();
        (ok, z)
    };
    let (ok, days) = run(&[]);
    let min_survey = days.iter().map(|(e, s)| e / s).fold(f64::INFINITY, f64::min);
    pass &= ok && min_survey >= -3.0;
    let (ok, full) = run(&["--coverage-full"]);
    pass &= ok && full.iter().all(|(e, s)| e.abs() <= 3.0 * s);
    let _ = std::fs::remove_dir_all(&tmp);
    notes.push(format!("surveillance min daily z {min_survey:.2}, full coverage within 3 SE of 0"));
    outcome(pass, notes.join("; "))
}

fn hypergeometric_limit() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for big_n in 1..=50u64 {
        let support: Vec<f64> = (0..=big_n).map(|k| k as f64).collect();
        let skewed: Vec<f64> = (0..=big_n).map(|k| 1.0 + (k as f64).powi(2)).collect();
        let priors = [
            Distribution::discrete(&support, &vec![1.0; support.len()]).unwrap(),
            Distribution::discrete(&support, &skewed).unwrap(),
            Distribution::beta_binomial(big_n, 2.0, 5.0).unwrap(),
        ];
        for pos in [0, big_n / 3, big_n] {
            for prior in &priors {
                let data = PrevalenceData::new(Some(big_n), big_n, pos).unwrap();
                let v = HypergeometricPrevalenceModel::new(prior.clone(), data).unwrap().posterior().unwrap().variance();
                worst = worst.max(v.abs());
                checked += 1;
            }
        }
    }
    outcome(worst == 0.0, format!("{checked} models with n = N <= 50, max variance {worst:e}"))
}

fn voi_equivalences() -> Outcome {
    let mut bitwise = true;
    let mut eig_gap: f64 = 0.0;
    let mut evpi_margin = f64::INFINITY;
    for (i, (a0, b0, n, pos)) in PREVALENCE_GRID.into_iter().enumerate() {
        let fit = binomial(a0, b0, n, pos);
        let (post, pred) = (fit.posterior_model(), fit.posterior_predictive(12));
        for loss in [LossFunction::Quadratic, LossFunction::Pinball { level: 0.5 }, LossFunction::asymmetric_linear(1.0, 4.0).unwrap()] {
            let e = voi::evsi_exact(&loss, &post, &pred).unwrap();
            bitwise &= e.value().to_bits() == engine::eur_exact(&loss, &post, &pred).unwrap().eur.to_bits();
            let mc = voi::evsi_monte_carlo(&loss, &post, &pred, &MonteCarlo::new(5_000, RandomSeed::new(i as u64))).unwrap();
            let evpi = voi::evpi(&loss, &post.posterior).unwrap();
            evpi_margin = evpi_margin.min(evpi - (mc.value() - 3.0 * mc.result.mc_standard_error));
        }
        let eig = voi::eig_exact(&post, &pred).unwrap().eur;
        eig_gap = eig_gap.max((eig - engine::eur_exact(&LossFunction::Log, &post, &pred).unwrap().eur).abs());
    }
    let (cases, w) = renewal_inputs();
    let series = EpidemicSeries::new(cases.clone(), w).unwrap();
    let flat = RenewalPrior::new(1.0, 1e-9, 7).unwrap();
    let mut fisher_gap: f64 = 0.0;
    let mut windows = 0;
    for t in 8..=cases.len() {
        let total: u64 = (t - 6..=t).map(|s| cases[s - 1]).sum();
        if total < 100 {
            continue;
        }
        let lam: f64 = (t - 6..=t).map(|s| series.total_infectiousness(s).unwrap()).sum();
        let fi = voi::fisher_information_renewal(total as f64 / lam, lam).unwrap();
        let v = rt_posterior_perfect(&series, &flat, t).unwrap().variance();
        fisher_gap = fisher_gap.max(((1.0 / fi) / v - 1.0).abs());
        windows += 1;
    }
    outcome(
        bitwise && eig_gap <= 1e-6 && evpi_margin >= 0.0 && fisher_gap <= 0.05 && windows > 0,
        format!(
            "evsi bitwise {bitwise}, eig gap {eig_gap:.1e}, min evpi margin {evpi_margin:.2e}, \
             1/FI off by at most {:.2}% over {windows} windows",
            100.0 * fisher_gap
        ),
    )
}

fn summary(path: &Path) -> std::collections::HashMap<String, String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).map(|x| (x[0].to_string(), x[1].to_string())).collect()
}

fn surveillance_demo() -> Outcome {
    let out = std::env::temp_dir().join(format!("uqcal-acceptance-demo-{}", std::process::id()));
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_uqcal"))
        .args(["surveillance", "--config"])
        .arg(repo("configs/surveillance_demo.toml"))
        .args(["--threads", "4", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    if !status.status.success() {
        return outcome(false, String::from_utf8_lossy(&status.stderr).to_string());
    }
    let s = summary(&out.join("study_summary.csv"));
    let get = |k: &str| s[k].parse::<f64>().unwrap();
    let _ = std::fs::remove_dir_all(&out);
    let z = get("aggregate_z");
    let frac = get("increase_fraction");
    let (first, median, last) = (
        get("edge_first_mean_var_joint"),
        get("interior_median_var_joint"),
        get("edge_last_mean_var_joint"),
    );
    let shape = get("days") == 60.0 && get("sampled_days") == 41.0 && get("replicates") == 100.0;
    outcome(
        shape && elapsed < Duration::from_secs(15 * 60) && z > 3.0 && frac > 0.0 && first > median && last > median,
        format!(
            "{:.0} s, aggregate EUR z = {z:.1}, increase fraction {frac:.4}, edge/interior variance {:.2} and {:.2}",
            elapsed.as_secs_f64(),
            first / median,
            last / median
        ),
    )
}

fn determinism() -> Outcome {
    let base = std::env::temp_dir().join(format!("uqcal-acceptance-det-{}", std::process::id()));
    let cases = repo("data/renewal_cases.csv");
    let si = repo("data/serial_interval.csv");
    let commands: Vec<Vec<String>> = vec![
        vec!["prevalence".into()],
        vec!["renewal".into(), "--cases".into(), cases.display().to_string(), "--serial-interval".into(), si.display().to_string()],
        vec!["surveillance".into(), "--simulate".into(), "--particles".into(), "3000".into(), "--replicates".into(), "12".into()],
        vec!["voi".into(), "--cases".into(), cases.display().to_string(), "--serial-interval".into(), si.display().to_string()],
    ];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for cmd in &commands {
        let mut dirs = Vec::new();
        for (run, threads) in ["1", "4", "4"].iter().enumerate() {
            let dir = base.join(format!("{}-{run}", cmd[0]));
            let ok = Command::new(env!("CARGO_BIN_EXE_uqcal"))
                .args(cmd)
                .args(["--seed", "424242", "--threads", threads, "--out"])
                .arg(&dir)
                .output()
                .unwrap()
                .status
                .success();
            if !ok {
                mismatches.push(format!("{} failed", cmd[0]));
            }
            dirs.push(dir);
        }
        let mut names: Vec<_> = std::fs::read_dir(&dirs[0])
            .map(|d| d.map(|e| e.unwrap().file_name()).filter(|n| n.to_string_lossy().ends_with(".csv")).collect())
            .unwrap_or_default();
        names.sort();
        for name in names {
            let reference = std::fs::read(dirs[0].join(&name)).unwrap();
            for d in &dirs[1..] {
                compared += 1;
                if std::fs::read(d.join(&name)).ok().as_ref() != Some(&reference) {
                    mismatches.push(format!("{}/{}", cmd[0], name.to_string_lossy()));
                }
            }
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    outcome(
        mismatches.is_empty() && compared > 0,
        if mismatches.is_empty() {
            format!("{compared} CSV comparisons across 1 and 4 threads, all byte-identical")
        } else {
            format!("mismatches: {}", mismatches.join(", "))
        },
    )
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 8] = [
        (1, "conjugacy oracles", Duration::from_secs(10), conjugacy),
        (2, "EUR exactness", Duration::from_secs(30), eur_exactness),
        (3, "coherence identity", Duration::from_secs(10), coherence),
        (4, "non-negativity", Duration::from_secs(300), non_negativity),
        (5, "hypergeometric limit", Duration::from_secs(60), hypergeometric_limit),
        (6, "VOI equivalences", Duration::from_secs(60), voi_equivalences),
        (7, "surveillance study shape", Duration::from_secs(900), surveillance_demo),
        (8, "determinism", Duration::from_secs(900), determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} {}: {name} ({:.1} s, limit {} s): {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            result.detail
        );
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
