//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use bomi::acquisition::{aggregate, maximize, ucb, ucb_mi, BetaParams, BetaSchedule, MaximizerConfig};
use bomi::benchfns::{eval_function, lookup};
use bomi::bpmf::{complete_matrix, BpmfConfig};
use bomi::gp::{GpConfig, GpModel, KernelParams};
use bomi::rng::{self, RngStream};
use bomi::simulator::{apply_missing_event, gen_historical, MissingModel};
use bomi::strategies::{run_loop, RunConfig, StrategyKind};
use bomi::{Domain, MaskedMatrix, PartialPoint};
use bomi_harness::{run_experiment, ExperimentConfig, Report};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn experiment(toml: &str, dir: &Path) -> Report {
    let exp = ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap();
    let report = run_experiment(&exp, dir, 1).unwrap();
    assert!(report.failures.is_empty(), "runs failed: {:?}", report.failures);
    report
}

fn final_of(report: &Report, strategy: &str) -> (f64, f64) {
    let (_, m, se, _) = report
        .final_values()
        .into_iter()
        .find(|(s, ..)| s == strategy)
        .unwrap_or_else(|| panic!("no {strategy} in report"));
    (m, se)
}

fn pooled(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// BOMI on complete data without events against a hand-rolled UCB loop.
fn degeneracy_identity() -> Outcome {
    let f = lookup("schwefel5").unwrap();
    let mm = MissingModel {
        rho: 0.0,
        hist_frac: 0.0,
        ..Default::default()
    };
    let cfg = RunConfig {
        iterations: 20,
        missing: mm.clone(),
        ..Default::default()
    };
    let streams = RngStream::new(7);
    let init = gen_historical(&f, 30, &mm, &mut streams.substream(rng::INIT_DATA)).unwrap();
    let trace = run_loop(&f, StrategyKind::Bomi, &cfg, init.clone(), &streams).unwrap();

    let mut acq = streams.substream(rng::ACQ_OPT);
    let schedule = BetaSchedule::new(BetaParams::default(), 5).unwrap();
    let unit = Domain::unit(5);
    let mut ds = init;
    let mut equal = 0;
    for (t, rec) in (1..=20).zip(&trace.records) {
        let x = ds.normalized_inputs().unwrap();
        let model = GpModel::fit(x.clone(), &ds.y(), &GpConfig::default()).unwrap();
        let beta = schedule.beta(t).unwrap();
        let best = maximize(|p| ucb(&model, beta, p), &unit, &x, &MaximizerConfig::default(), &mut acq).unwrap();
        let sugg = f.domain().denormalize_point(&best.x);
        if sugg == rec.suggested {
            equal += 1;
        }
        let y = f.eval(&sugg).unwrap();
        ds.push(PartialPoint::complete(sugg), y).unwrap();
    }
    outcome(equal == 20, format!("{equal}/20 suggestions bit-identical to single-GP UCB"))
}

fn dense_posterior(x: &[Vec<f64>], y: &[f64], k: KernelParams, noise: f64, q: &[f64]) -> (f64, f64) {
    let n = x.len();
    let gram = DMatrix::from_fn(n, n, |i, j| k.eval(&x[i], &x[j]).unwrap() + if i == j { noise } else { 0.0 });
    let inv = gram.try_inverse().unwrap();
    let kq = DVector::from_fn(n, |i, _| k.eval(&x[i], q).unwrap());
    let yv = DVector::from_column_slice(y);
    (kq.dot(&(&inv * yv)), k.eval(q, q).unwrap() - kq.dot(&(&inv * &kq)))
}

fn gp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=10);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let k = KernelParams::new(rng.random_range(0.1..3.0), rng.random_range(0.05..1.0)).unwrap();
        let noise = 10f64.powf(rng.random_range(-3.0..-1.0));
        let model = GpModel::with_params(x.clone(), &y, k, noise).unwrap();
        for _ in 0..5 {
            let q: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let (mu, var) = model.posterior(&q);
            let (mu_o, var_o) = dense_posterior(&x, &y, k, noise, &q);
            worst = worst.max((mu - mu_o).abs()).max((var - var_o.max(0.0)).abs());
        }
    }
    outcome(worst < 1e-8, format!("max abs deviation {worst:.2e} over 200 datasets x 5 queries"))
}

fn bpmf_recovery() -> Outcome {
    let cfg = BpmfConfig::default();
    let mut rmses = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 1 + seed as usize % 3;
        let (n, m) = (30, 5);
        let u = DMatrix::from_fn(n, r, |_, _| rng.random::<f64>());
        let v = DMatrix::from_fn(r, m, |_, _| rng.random::<f64>());
        let raw = u * v;
        let (lo, hi) = (raw.min(), raw.max());
        let truth = raw.map(|x| (x - lo) / (hi - lo));
        let observed = loop {
            let mut obs = DMatrix::from_element(n, m, true);
            for k in sample(&mut rng, n * m, n * m / 5) {
                obs[(k / m, k % m)] = false;
            }
            if (0..n).all(|i| (0..m).any(|j| obs[(i, j)])) && (0..m).all(|j| (0..n).any(|i| obs[(i, j)])) {
                break obs;
            }
        };
        let matrix = MaskedMatrix::new(truth.clone(), observed);
        let runs = complete_matrix(&matrix, &cfg, &mut rng).unwrap();
        let mut mean = DMatrix::zeros(n, m);
        for s in &runs.states {
            mean += s.reconstruction();
        }
        mean /= runs.states.len() as f64;
        let (mut se, mut cnt) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..m {
                if !matrix.is_observed(i, j) {
                    se += (mean[(i, j)] - truth[(i, j)]).powi(2);
                    cnt += 1.0;
                }
            }
        }
        rmses.push((se / cnt).sqrt());
    }
    let avg = rmses.iter().sum::<f64>() / rmses.len() as f64;
    outcome(avg < 0.15, format!("mean held-out RMSE {avg:.4} over 10 seeds (K=15, xi=0.01, l=40)"))
}

fn ucb_mi_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fit = |rng: &mut ChaCha8Rng| {
        let x: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
        let y: Vec<f64> = x.iter().map(|p| (5.0 * p[0]).sin() + p[1] * p[2] + 0.1 * rng.random::<f64>()).collect();
        GpModel::fit(x, &y, &GpConfig::default()).unwrap()
    };
    let models: Vec<GpModel> = (0..4).map(|_| fit(&mut rng)).collect();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let beta = rng.random_range(0.5..50.0);
        let ba = rng.random_range(0.0..3.0);
        if ucb_mi(&models[..1], beta, ba, &x) != ucb(&models[0], beta, &x) {
            failures.push("Q=1 identity");
        }
        let identical = vec![models[1].clone(); 3];
        worst = worst.max((ucb_mi(&identical, beta, ba, &x) - ucb(&models[1], beta, &x)).abs());
        let mut perm = models.clone();
        perm.reverse();
        perm.swap(0, 2);
        worst = worst.max((ucb_mi(&models, beta, ba, &x) - ucb_mi(&perm, beta, ba, &x)).abs());
        let alphas: Vec<f64> = models.iter().map(|m| ucb(m, beta, &x)).collect();
        let c = rng.random_range(-10.0..10.0);
        let shifted: Vec<f64> = alphas.iter().map(|a| a + c).collect();
        worst = worst.max((aggregate(&shifted, ba) - aggregate(&alphas, ba) - c).abs());
    }
    let hand = (aggregate(&[1.0, 2.0, 3.0], 1.0) - 3.0).abs();
    worst = worst.max(hand);
    failures.dedup();
    let pass = failures.is_empty() && worst <= 1e-12;
    outcome(
        pass,
        format!("{{1,2,3}} -> 3 err {hand:.1e}; max deviation {worst:.1e}; exact-identity failures: {failures:?}"),
    )
}

const SCHWEFEL: &str = "function = \"schwefel5\"\nrepeats = 10\niterations = 80\nn_init = 30\neta = 0.05\nv = 1\nhist_frac = 0.8\n";

fn directional(r25: &Report) -> Outcome {
    let (bomi, bomi_se) = final_of(r25, "bomi");
    let (imp, imp_se) = final_of(r25, "imputation-bpmf");
    let (drop, drop_se) = final_of(r25, "dropbo");
    let gap = bomi - drop;
    let pse = pooled(bomi_se, drop_se);
    let pass = bomi >= imp && gap > pse;
    outcome(
        pass,
        format!(
            "final best: bomi {bomi:.1}+-{bomi_se:.1}, imputation-bpmf {imp:.1}+-{imp_se:.1}, dropbo {drop:.1}+-{drop_se:.1}; \
             bomi>=imp-bpmf: {}, bomi-dropbo gap {gap:.1} vs pooled SE {pse:.1}",
            bomi >= imp
        ),
    )
}

fn rho_trend(reports: &BTreeMap<&str, Report>) -> Outcome {
    let (d25, d25se) = final_of(&reports["0.25"], "dropbo");
    let (d65, d65se) = final_of(&reports["0.65"], "dropbo");
    let bomi: Vec<(&str, f64, f64)> = reports
        .iter()
        .map(|(k, r)| {
            let (m, s) = final_of(r, "bomi");
            (*k, m, s)
        })
        .collect();
    let mut stable = true;
    let mut widest: f64 = 0.0;
    for i in 0..bomi.len() {
        for j in i + 1..bomi.len() {
            let ratio = (bomi[i].1 - bomi[j].1).abs() / pooled(bomi[i].2, bomi[j].2);
            widest = widest.max(ratio);
            stable &= ratio <= 2.0;
        }
    }
    let bomi_str: Vec<String> = bomi.iter().map(|(k, m, s)| format!("rho={k}: {m:.1}+-{s:.1}")).collect();
    outcome(
        d65 < d25 && stable,
        format!(
            "dropbo rho=0.25 {d25:.1}+-{d25se:.1} vs rho=0.65 {d65:.1}+-{d65se:.1}; bomi {}; widest bomi gap {widest:.2} pooled SE",
            bomi_str.join(", ")
        ),
    )
}

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn eta_invariance() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut sets = Vec::new();
    for eta in ["0.1", "0.5", "0.9"] {
        let dir = root.path().join(eta);
        let cfg = format!(
            "function = \"schwefel5\"\nstrategies = [\"dropbo\"]\nrepeats = 3\niterations = 80\nrho = 0.25\neta = {eta}\n"
        );
        experiment(&cfg, &dir);
        sets.push(files_under(&dir.join("traces")));
    }
    let n = sets[0].len();
    let same = sets.windows(2).all(|w| w[0] == w[1]);
    outcome(same && n == 3, format!("{n} dropbo trace files per eta, identical across eta: {same}"))
}

fn simulator_stats() -> Outcome {
    let dom = Domain::cube(5, -500.0, 500.0).unwrap();
    let mm = MissingModel {
        rho: 0.25,
        ..Default::default()
    };
    let mut r = RngStream::new(3).substream(rng::MISSING_EVENTS);
    let n = 10_000;
    let hits = (0..n)
        .filter(|_| apply_missing_event(&[0.0; 5], &dom, &mm, &mut r).unwrap().event)
        .count();
    let p = hits as f64 / n as f64;
    let se = (0.25f64 * 0.75 / n as f64).sqrt();
    let z = (p - 0.25).abs() / se;
    let f = lookup("schwefel5").unwrap();
    let ds = gen_historical(&f, 30, &MissingModel::default(), &mut RngStream::new(3).substream(rng::INIT_DATA)).unwrap();
    let incomplete = ds.incomplete_rows();
    outcome(
        z < 3.0 && incomplete == 24,
        format!("event frequency {p:.4} ({z:.2} SE from 0.25); incomplete historical rows {incomplete}/30"),
    )
}

fn benchmarks() -> Outcome {
    let alpine = eval_function("alpine5", &[0.0; 5]).unwrap();
    let schwefel = eval_function("schwefel5", &[420.9687; 5]).unwrap();
    let egg = eval_function("eggholder2", &[512.0, 404.2319]).unwrap();
    let pass = alpine == 0.0 && schwefel.abs() < 1e-2 && (egg - 959.6407).abs() < 1e-3;
    outcome(pass, format!("alpine(0) = {alpine}, schwefel(420.9687) = {schwefel:.3e}, eggholder(512, 404.2319) = {egg:.6}"))
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let cfg = "function = \"eggholder2\"\nrepeats = 2\niterations = 6\nn_init = 12\nrho = 0.4\n";
    let a = root.path().join("a");
    let b = root.path().join("b");
    experiment(cfg, &a);
    experiment(cfg, &b);
    let fa = files_under(&a);
    let fb = files_under(&b);
    let traces = fa.keys().filter(|k| k.starts_with("traces")).count();
    let same = fa == fb;
    outcome(
        same && traces == 14 && fa.contains_key("summary.csv"),
        format!("{} files ({traces} traces, 7 strategies x 2 repeats), byte-identical: {same}", fa.len()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut stderr = std::io::stderr();
    let mut record = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome, results: &mut Vec<_>| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        writeln!(
            stderr,
            "criterion {id:>2} [{}] {name}: {} ({secs:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        )
        .unwrap();
        results.push((id, name, o, secs));
    };

    record(1, "degeneracy identity", &mut degeneracy_identity, &mut results);
    record(2, "GP oracle equivalence", &mut gp_oracle, &mut results);
    record(3, "BPMF low-rank recovery", &mut bpmf_recovery, &mut results);
    record(4, "UCB-MI algebra", &mut ucb_mi_algebra, &mut results);

    // criteria 5 and 6 share the rho = 0.25 experiment
    let root = tempfile::tempdir().unwrap();
    let mut reports = BTreeMap::new();
    record(
        5,
        "directional replication (Schwefel 5d)",
        &mut || {
            let cfg = format!("{SCHWEFEL}rho = 0.25\nstrategies = [\"bomi\", \"imputation-bpmf\", \"dropbo\"]\n");
            let r = experiment(&cfg, &root.path().join("rho=0.25"));
            let o = directional(&r);
            reports.insert("0.25", r);
            o
        },
        &mut results,
    );
    record(
        6,
        "missing-rate trend",
        &mut || {
            for rho in ["0.45", "0.65"] {
                let cfg = format!("{SCHWEFEL}rho = {rho}\nstrategies = [\"bomi\", \"dropbo\"]\n");
                reports.insert(rho, experiment(&cfg, &root.path().join(format!("rho={rho}"))));
            }
            rho_trend(&reports)
        },
        &mut results,
    );

    record(7, "DropBO eta invariance", &mut eta_invariance, &mut results);
    record(8, "simulator statistics", &mut simulator_stats, &mut results);
    record(9, "benchmark correctness", &mut benchmarks, &mut results);
    record(10, "determinism", &mut determinism, &mut results);

    let passed = results.iter().filter(|r| r.2.pass).count();
    writeln!(std::io::stderr(), "acceptance: {passed}/{} criteria passed", results.len()).unwrap();
    for (id, name, o, secs) in &results {
        println!("criterion {id} {}: {name} ({secs:.1}s)", if o.pass { "PASS" } else { "FAIL" });
    }
    if passed != results.len() {
        std::process::exit(1);
    }
}
