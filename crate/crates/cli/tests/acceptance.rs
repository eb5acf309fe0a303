//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lsqkf_cli::experiment::RunRecord;
use lsqkf_cli::output::strip_timings;
use lsqkf_cli::summary::quantile;
use lsqkf_cli::{parse_config, run_experiment, summarize, Experiment};
use lsqkf_core::analysis::{
    check_arma_bound, check_logdet_lemma, check_persistency_observations, LogdetCheck, PeOptions,
};
use lsqkf_core::kalman::{innovation_whiteness, run_filter, solve_riccati, RiccatiOptions};
use lsqkf_core::linalg::{gaussian_sample, seeded_rng};
use lsqkf_core::predictor::{batch_fit, OnlinePredictor};
use lsqkf_core::sysmodel::simulate;
use lsqkf_core::{EpochSchedule, Matrix, Preset};

const SEEDS: &str = "[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19]";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn(&mut Shared) -> Result<Outcome, String>;

/// Records produced by the Monte Carlo criteria, reused by the log-det check.
#[derive(Default)]
struct Shared {
    records: Vec<RunRecord>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

fn run_config(text: &str) -> Result<Vec<RunRecord>, String> {
    let cfg = parse_config(text).map_err(|e| e.to_string())?;
    let exp = Experiment::prepare(cfg).map_err(|e| e.to_string())?;
    run_experiment(&exp, None, None).map_err(|e| e.to_string())
}

fn riccati_presets(_: &mut Shared) -> Result<Outcome, String> {
    let mut worst_residual = 0.0_f64;
    let mut worst_rho = 0.0_f64;
    for preset in Preset::ALL {
        let sol = solve_riccati(&preset.base_model(), &RiccatiOptions::default())
            .map_err(|e| e.to_string())?;
        worst_residual = worst_residual.max(sol.residual);
        worst_rho = worst_rho.max(sol.rho_closed_loop);
    }
    Ok(outcome(
        worst_residual <= 1e-9 && worst_rho < 1.0,
        format!("max residual {worst_residual:.2e}, max rho(A-KC) {worst_rho:.6}"),
    ))
}

fn scalar_closed_form(_: &mut Shared) -> Result<Outcome, String> {
    // Roots of P^2 - P/4 - 1 = 0 and K = P / (2 (P + 1)).
    const P: f64 = 1.132782;
    const K: f64 = 0.265564;
    let sol = solve_riccati(
        &Preset::ScalarStable.base_model(),
        &RiccatiOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let (p, k) = (sol.p[(0, 0)], sol.k[(0, 0)]);
    Ok(outcome(
        (p - P).abs() <= 1e-5 && (k - K).abs() <= 1e-5,
        format!("P {p:.7}, K {k:.7}"),
    ))
}

fn batch_recursive(_: &mut Shared) -> Result<Outcome, String> {
    let (model, _) = Preset::RotationMarginal
        .model()
        .map_err(|e| e.to_string())?;
    let schedule = EpochSchedule::new(64, 2.0, 1.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    let mut compared = 0;
    for seed in 0..10 {
        // Epochs [64, 128), [128, 256), [256, 512).
        let y = simulate(&model, 511, 1000 + seed)
            .map_err(|e| e.to_string())?
            .observations;
        let mut online = OnlinePredictor::new(schedule, 1);
        for (k, obs) in y.iter().enumerate() {
            online.step(obs).map_err(|e| e.to_string())?;
            if matches!(k + 1, 128 | 256 | 512) {
                let state = online.state().ok_or("no epoch open")?;
                let batch = batch_fit(&y, state.p, k, 1.0).map_err(|e| e.to_string())?;
                let dev = (state.g_tilde() - &batch.g).frobenius_norm() / batch.g.frobenius_norm();
                worst = worst.max(dev);
                compared += 1;
            }
        }
    }
    Ok(outcome(
        compared == 30 && worst <= 1e-8,
        format!("{compared} epoch ends, max relative deviation {worst:.2e}"),
    ))
}

fn logdet_lemma(shared: &mut Shared) -> Result<Outcome, String> {
    let mut random_pass = 0;
    for seed in 0..50u64 {
        let dim = 1 + (seed as usize % 12);
        let scale = 10f64.powi(seed as i32 % 5 - 2);
        let factor = Matrix::identity(dim).scale(scale);
        let mut rng = seeded_rng(seed, 7);
        let mut draw = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| gaussian_sample(&vec![0.0; dim], &factor, &mut rng))
                .collect()
        };
        let prior = draw(32 + seed as usize);
        let epoch = draw(64 + 4 * seed as usize);
        let lambda = [0.1, 1.0, 10.0][seed as usize % 3];
        if check_logdet_lemma(&prior, &epoch, lambda)
            .map_err(|e| e.to_string())?
            .pass
        {
            random_pass += 1;
        }
    }
    let epochs: Vec<LogdetCheck> = shared
        .records
        .iter()
        .flat_map(|r| r.epochs.iter().map(|e| LogdetCheck::from_epoch(&e.record)))
        .collect();
    let stored_agree = shared
        .records
        .iter()
        .flat_map(|r| &r.epochs)
        .all(|e| e.logdet_check == LogdetCheck::from_epoch(&e.record));
    let epoch_pass = epochs.iter().filter(|c| c.pass).count();
    Ok(outcome(
        random_pass == 50 && !epochs.is_empty() && epoch_pass == epochs.len() && stored_agree,
        format!(
            "random streams {random_pass}/50, experiment epochs {epoch_pass}/{}",
            epochs.len()
        ),
    ))
}

fn arma_bound(_: &mut Shared) -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut pass = true;
    for preset in [Preset::Integrator2, Preset::RotationMarginal] {
        let (model, sol) = preset.model().map_err(|e| e.to_string())?;
        let y = simulate(&model, 10_000, 3)
            .map_err(|e| e.to_string())?
            .observations;
        let run = run_filter(&sol, &model, &y).map_err(|e| e.to_string())?;
        let p = (2.0 * (10_000f64).ln()).ceil() as usize;
        let diag = check_arma_bound(&y, &model, &sol, &run, p).map_err(|e| e.to_string())?;
        pass &= diag.pass && diag.max_bound_ratio <= 1.0;
        parts.push(format!("{preset} max ratio {:.3e}", diag.max_bound_ratio));
    }
    Ok(outcome(pass, parts.join(", ")))
}

fn persistency(_: &mut Shared) -> Result<Outcome, String> {
    const N: usize = 32768;
    let p = (2.0 * (N as f64).ln()).ceil() as usize;
    let mut parts = Vec::new();
    let mut pass = true;
    for preset in [Preset::ScalarStable, Preset::RotationMarginal] {
        let (model, _) = preset.model().map_err(|e| e.to_string())?;
        let mut holds = 0;
        let mut n0 = Vec::new();
        let mut margin = Vec::new();
        for seed in 0..20 {
            let y = simulate(&model, N, seed)
                .map_err(|e| e.to_string())?
                .observations;
            let rep = check_persistency_observations(&y, p, &model, None, &PeOptions::default())
                .map_err(|e| e.to_string())?;
            let after: Vec<_> = match rep.n0_hat {
                Some(n0) => rep.points.iter().filter(|pt| pt.k >= n0).collect(),
                None => Vec::new(),
            };
            if !after.is_empty() && after.iter().all(|pt| pt.holds) {
                holds += 1;
            }
            n0.push(rep.n0_hat.map_or(f64::INFINITY, |k| k as f64));
            margin.push(rep.min_normalized_after_n0.unwrap_or(0.0) / rep.sigma_r_quarter);
        }
        pass &= holds >= 19;
        parts.push(format!(
            "{preset} {holds}/20 (median N0_hat {}, median tail margin {:.2})",
            median(n0),
            median(margin)
        ));
    }
    Ok(outcome(pass, parts.join(", ")))
}

fn whiteness(_: &mut Shared) -> Result<Outcome, String> {
    let (model, sol) = Preset::ScalarStable.model().map_err(|e| e.to_string())?;
    let mut passed = 0;
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let y = simulate(&model, 50_000, seed)
            .map_err(|e| e.to_string())?
            .observations;
        let run = run_filter(&sol, &model, &y).map_err(|e| e.to_string())?;
        let rep = innovation_whiteness(&run.innovations, 5).map_err(|e| e.to_string())?;
        worst = worst.max(rep.max_abs_correlation / rep.threshold);
        passed += rep.pass as usize;
    }
    Ok(outcome(
        passed >= 19,
        format!("{passed}/20 seeds, worst |corr|/band {worst:.3}"),
    ))
}

fn rotation_config(extra: &str) -> String {
    format!(
        "steps = 32768\nseeds = {SEEDS}\ncheckpoints = [4096, 32768]\n\n[model]\npreset = \"ROTATION_MARGINAL\"\n\n\
         [schedule]\nt_init = 64\nbeta = 2.0\nlambda = 1.0\n\n\
         [diagnostics]\narma = false\npe = false\nwhiteness = false\n{extra}"
    )
}

fn regret_sublinear(shared: &mut Shared) -> Result<Outcome, String> {
    let records = run_config(&rotation_config(""))?;
    let summary = summarize(&records).map_err(|e| e.to_string())?;
    let ratio = summary
        .regret
        .sublinearity
        .first()
        .ok_or("no 8x checkpoint pair")?
        .ratio;
    let m = &summary.regret.checkpoints;
    shared.records.extend(records);
    Ok(outcome(
        ratio <= 4.0 && m.iter().all(|c| c.median > 0.0),
        format!(
            "median R_4096 {:.2}, median R_32768 {:.2}, ratio {ratio:.3}",
            m[0].median, m[1].median
        ),
    ))
}

fn scalar_config(steps: usize, extra: &str) -> String {
    format!(
        "steps = {steps}\nseeds = {SEEDS}\n\n[model]\npreset = \"SCALAR_STABLE\"\n\n\
         [diagnostics]\narma = false\npe = false\nwhiteness = false\n{extra}"
    )
}

fn consistency(shared: &mut Shared) -> Result<Outcome, String> {
    let short = run_config(&scalar_config(4096, ""))?;
    let long = run_config(&scalar_config(32768, ""))?;
    let err = |rs: &[RunRecord]| median(rs.iter().map(|r| r.estimation_error).collect());
    let (e_short, e_long) = (err(&short), err(&long));
    let ratio = e_long / e_short;
    shared.records.extend(short);
    shared.records.extend(long);
    Ok(outcome(
        ratio <= 0.6,
        format!("median error {e_short:.4} -> {e_long:.4}, ratio {ratio:.3}"),
    ))
}

fn state_regret(shared: &mut Shared) -> Result<Outcome, String> {
    let records = run_config(&rotation_config("f_step = 4\nstate_prediction = true\n"))?;
    let summary = summarize(&records).map_err(|e| e.to_string())?;
    let curve = summary.state_regret.ok_or("no state regret recorded")?;
    let ratio = curve
        .sublinearity
        .first()
        .ok_or("no 8x checkpoint pair")?
        .ratio;
    let m = &curve.checkpoints;
    shared.records.extend(records);
    Ok(outcome(
        ratio <= 4.0,
        format!(
            "median state regret {:.2} -> {:.2}, ratio {ratio:.3}",
            m[0].median, m[1].median
        ),
    ))
}

fn alternative(shared: &mut Shared) -> Result<Outcome, String> {
    let records = run_config(&scalar_config(32768, "alternative_regret = true\n"))?;
    let rel: Vec<f64> = records
        .iter()
        .map(|r| {
            let a = r.diagnostics.alternative_regret.as_ref().expect("enabled");
            (a.kalman_loss - a.fir_loss).abs() / a.kalman_loss
        })
        .collect();
    let p_star = records[0]
        .diagnostics
        .alternative_regret
        .as_ref()
        .map_or(0, |a| a.p_star);
    let med = median(rel);
    shared.records.extend(records);
    Ok(outcome(
        med <= 0.02,
        format!("p_star {p_star}, median relative gap {med:.2e}"),
    ))
}

fn snapshot(dir: &Path) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            out.extend(snapshot(&path)?);
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let body = if path
            .parent()
            .and_then(Path::file_name)
            .is_some_and(|d| d == "runs")
        {
            strip_timings(&text).map_err(|e| e.to_string())?
        } else {
            text
        };
        out.push((name, body));
    }
    Ok(out)
}

fn determinism(_: &mut Shared) -> Result<Outcome, String> {
    let text = "steps = 3000\nseeds = [5, 6, 7]\ncheckpoints = [375, 3000]\n\n[model]\npreset = \"INTEGRATOR2\"\n\n\
                [diagnostics]\nalternative_regret = true\nf_step = 3\nstate_prediction = true\nper_step_losses = true\n";
    let cfg = parse_config(text).map_err(|e| e.to_string())?;
    let exp = Experiment::prepare(cfg).map_err(|e| e.to_string())?;
    let mut snaps = Vec::new();
    for jobs in [1, 3] {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_experiment(&exp, Some(jobs), Some(tmp.path())).map_err(|e| e.to_string())?;
        snaps.push(snapshot(tmp.path())?);
    }
    let files = snaps[0].len();
    Ok(outcome(
        files > 1 && snaps[0] == snaps[1],
        format!("{files} files compared across two runs"),
    ))
}

fn main() -> ExitCode {
    // Criterion 4 runs last so that it can inspect every experiment epoch.
    let criteria: [(usize, &str, Check, u64); 12] = [
        (1, "riccati_presets", riccati_presets, 1),
        (2, "scalar_closed_form", scalar_closed_form, 1),
        (3, "batch_recursive_equivalence", batch_recursive, 10),
        (5, "arma_residual_bound", arma_bound, 10),
        (6, "persistency_of_excitation", persistency, 120),
        (7, "innovation_whiteness", whiteness, 60),
        (8, "regret_sublinearity", regret_sublinear, 300),
        (9, "estimator_consistency", consistency, 120),
        (10, "state_regret_sublinearity", state_regret, 300),
        (11, "alternative_regret_equivalence", alternative, 120),
        (12, "determinism", determinism, 60),
        (4, "logdet_inequality", logdet_lemma, 10),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let result = check(&mut shared);
        let elapsed = start.elapsed();
        let in_budget = elapsed < Duration::from_secs(budget);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!(
            "[{}] {id:>2} {name}: {detail} ({:.2}s, budget {budget}s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
