use std::collections::{BTreeMap, BTreeSet};

use leadforge_core::molgraph::{canonical_form, parse_smiles};
use leadforge_core::optimizer::{generate_mutants, optimize, Objective, OptimizerConfig};
use leadforge_core::pharmacologist::{penalties_for, Category, PenaltySpec, PharmacologyConfig};
use leadforge_core::screening::{AffinityOracle, Pocket, Surrogate};
use leadforge_core::Execution;
use proptest::prelude::*;

const SEED: &str = "O=C(O)CN1CCC(O)CC1";

fn pocket() -> Pocket {
    Pocket {
        center: [24.2475, -22.1439, -43.1789],
        polar_sites: 3,
        acceptor_sites: 4,
        seed: 2024,
    }
}

fn objective<'a>(p: &'a Pocket, pen: &'a PenaltySpec) -> Objective<'a> {
    Objective {
        oracle: &Surrogate,
        pocket: p,
        penalties: pen,
    }
}

fn all_penalties() -> PenaltySpec {
    let cats: BTreeSet<Category> = Category::ALL.iter().copied().collect();
    penalties_for(&cats, &PharmacologyConfig::default())
}

#[test]
fn best_is_non_increasing_over_seeds() {
    let p = pocket();
    let pen = PenaltySpec::default();
    for seed in 0..20u64 {
        let cfg = OptimizerConfig {
            seed,
            ..Default::default()
        };
        let r = optimize(&[SEED], &objective(&p, &pen), &cfg, Execution::Parallel).unwrap();
        let hist: Vec<f64> = r.history.iter().map(|h| h.best_total_score).collect();
        assert!(
            hist.windows(2).all(|w| w[1] <= w[0]),
            "seed {seed}: {hist:?}"
        );
        let min = r
            .evaluations
            .iter()
            .map(|e| e.objective)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best.objective, min);
        if r.stopped_early.is_none() {
            assert_eq!(r.history.len(), cfg.generations);
        }
        for e in &r.evaluations {
            let m = parse_smiles(&e.canonical_smiles).unwrap();
            assert_eq!(canonical_form(&m), e.canonical_smiles);
        }
    }
}

#[test]
fn pool_sizes_from_one_seed() {
    let p = pocket();
    let pen = PenaltySpec::default();
    let cfg = OptimizerConfig::default();
    let r = optimize(&[SEED], &objective(&p, &pen), &cfg, Execution::Sequential).unwrap();
    let generated: Vec<usize> = r.history.iter().map(|h| h.mutants_generated).collect();
    assert_eq!(generated, [5, 30, 55]);
}

#[test]
fn strategies_agree() {
    let p = pocket();
    let pen = all_penalties();
    let cfg = OptimizerConfig::default();
    let a = optimize(
        &[SEED, "CC(=O)Nc1ccc(O)cc1"],
        &objective(&p, &pen),
        &cfg,
        Execution::Sequential,
    )
    .unwrap();
    let b = optimize(
        &[SEED, "CC(=O)Nc1ccc(O)cc1"],
        &objective(&p, &pen),
        &cfg,
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(a, b);
}

/// With a budget covering the whole pool the GP has no say: every
/// generation must equal scoring each new mutant directly.
#[test]
fn full_budget_equals_brute_force() {
    let p = pocket();
    let pen = PenaltySpec::default();
    for seed in [1u64, 7, 2024] {
        let cfg = OptimizerConfig {
            select_budget: 10_000,
            seed,
            ..Default::default()
        };
        let r = optimize(&[SEED], &objective(&p, &pen), &cfg, Execution::Parallel).unwrap();
        let mut seen: BTreeSet<String> =
            BTreeSet::from([canonical_form(&parse_smiles(SEED).unwrap())]);
        let mut population = vec![parse_smiles(SEED).unwrap()];
        let mut best = f64::INFINITY;
        for e in r.evaluations.iter().filter(|e| e.generation == 0) {
            best = best.min(e.objective);
        }
        for h in &r.history {
            let g = h.generation;
            let mutants =
                generate_mutants(&population, cfg.mutants_per_parent, cfg.seed, g).unwrap();
            let mut fresh: BTreeMap<String, f64> = BTreeMap::new();
            for m in mutants {
                let c = canonical_form(&m);
                if seen.contains(&c) || fresh.contains_key(&c) {
                    continue;
                }
                fresh.insert(c.clone(), Surrogate.score(&m, &c, &p).unwrap());
            }
            let logged: BTreeMap<String, f64> = r
                .evaluations
                .iter()
                .filter(|e| e.generation == g)
                .map(|e| (e.canonical_smiles.clone(), e.objective))
                .collect();
            assert_eq!(logged, fresh, "generation {g}");
            assert_eq!(h.selected, h.pool);
            best = fresh.values().copied().fold(best, f64::min);
            assert_eq!(h.best_total_score, best);
            let mut ranked: Vec<(&String, &f64)> = fresh.iter().collect();
            ranked.sort_by(|a, b| a.1.total_cmp(b.1).then_with(|| a.0.cmp(b.0)));
            for (c, _) in ranked.into_iter().take(cfg.survivors) {
                population.push(parse_smiles(c).unwrap());
            }
            seen.extend(fresh.into_keys());
        }
    }
}

#[test]
fn logs_round_trip() {
    let p = pocket();
    let pen = PenaltySpec::default();
    let r = optimize(
        &[SEED],
        &objective(&p, &pen),
        &OptimizerConfig::default(),
        Execution::Sequential,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    r.write_logs(dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("generations.csv")).unwrap();
    assert!(csv.starts_with("gen,candidate,objective,selected\n"));
    assert_eq!(csv.lines().count(), r.rows.len() + 1);
    let back: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap())
            .unwrap();
    assert_eq!(back["best"]["canonical_smiles"], r.best.canonical_smiles);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn penalties_only_raise_the_objective(seed in any::<u64>(), cats in prop::sample::subsequence(Category::ALL.to_vec(), 0..=Category::ALL.len())) {
        let p = pocket();
        let cats: BTreeSet<Category> = cats.into_iter().collect();
        let pen = penalties_for(&cats, &PharmacologyConfig::default());
        let cfg = OptimizerConfig { seed, ..Default::default() };
        let r = optimize(&[SEED], &objective(&p, &pen), &cfg, Execution::Parallel).unwrap();
        for e in &r.evaluations {
            let m = parse_smiles(&e.canonical_smiles).unwrap();
            let raw = Surrogate.score(&m, &e.canonical_smiles, &p).unwrap();
            prop_assert!(e.penalty >= 0.0);
            prop_assert_eq!(e.score, raw);
            prop_assert!(raw <= e.objective);
        }
    }
}
