use bomi::acquisition::MaximizerConfig;
use bomi::benchfns::lookup;
use bomi::bpmf::BpmfConfig;
use bomi::imputers::ImputerKind;
use bomi::simulator::MissingModel;
use bomi::strategies::{run_seeded, BoConfig, RunConfig, StrategyKind, Trace};

fn cfg(rho: f64, hist_frac: f64, q: usize) -> RunConfig {
    RunConfig {
        iterations: 8,
        missing: MissingModel { rho, hist_frac, ..Default::default() },
        bo: BoConfig {
            bpmf: BpmfConfig { completions: q, burn_in: 10, ..Default::default() },
            maximizer: MaximizerConfig { candidates: 300, starts: 4, iterations: 10, golden_steps: 6 },
            ..Default::default()
        },
    }
}

fn suggestions(t: &Trace) -> Vec<Vec<f64>> {
    t.records.iter().map(|r| r.suggested.clone()).collect()
}

#[test]
fn complete_data_collapses_every_strategy_to_ucb() {
    let f = lookup("alpine5").unwrap();
    let c = cfg(0.0, 0.0, 5);
    let reference = suggestions(&run_seeded(&f, StrategyKind::DropBo, &c, 12, 4).unwrap());
    for kind in [
        StrategyKind::Bomi,
        StrategyKind::SuggestBo,
        StrategyKind::ImputationBo(ImputerKind::Mean),
        StrategyKind::ImputationBo(ImputerKind::BpmfPoint),
    ] {
        assert_eq!(suggestions(&run_seeded(&f, kind, &c, 12, 4).unwrap()), reference, "{kind}");
    }
}

#[test]
fn single_completion_bomi_is_imputation_bpmf() {
    let f = lookup("schwefel5").unwrap();
    let c = cfg(0.3, 0.8, 1);
    let a = run_seeded(&f, StrategyKind::Bomi, &c, 12, 9).unwrap();
    let b = run_seeded(&f, StrategyKind::ImputationBo(ImputerKind::BpmfPoint), &c, 12, 9).unwrap();
    assert_eq!(suggestions(&a), suggestions(&b));
    assert!(a.records.iter().any(|r| r.event));
}

#[test]
fn same_seed_same_trace() {
    let f = lookup("eggholder2").unwrap();
    let c = cfg(0.3, 0.8, 3);
    let strip = |t: Trace| -> Vec<_> { t.records.into_iter().map(|r| (r.suggested, r.stored, r.y, r.best_y)).collect() };
    let a = strip(run_seeded(&f, StrategyKind::Bomi, &c, 10, 1).unwrap());
    let b = strip(run_seeded(&f, StrategyKind::Bomi, &c, 10, 1).unwrap());
    assert_eq!(a, b);
    let other = strip(run_seeded(&f, StrategyKind::Bomi, &c, 10, 2).unwrap());
    assert_ne!(a, other);
}

#[test]
fn with_missing_data_bomi_differs_from_single_imputation() {
    let f = lookup("schwefel5").unwrap();
    let c = cfg(0.3, 0.8, 5);
    let a = run_seeded(&f, StrategyKind::Bomi, &c, 12, 9).unwrap();
    let b = run_seeded(&f, StrategyKind::ImputationBo(ImputerKind::BpmfPoint), &c, 12, 9).unwrap();
    assert_ne!(suggestions(&a), suggestions(&b));
}
