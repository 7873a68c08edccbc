use std::collections::HashMap;

use leadforge_core::molgraph::{
    canonical_form, morgan_fingerprint, parse_smiles, tanimoto, Fingerprint, Molecule,
};
use leadforge_core::screening::{
    enrichment_analysis, ligand_efficiency, novelty_report, screen_library, surrogate_affinity,
    AffinityOracle, Label, LibraryEntry, Pocket, ScreeningError, Surrogate, SCAFFOLD_HOP_THRESHOLD,
};
use leadforge_core::Execution;
use proptest::prelude::*;

const FORMULAS: &str = include_str!("data/formulas.tsv");

fn smiles_pool() -> Vec<&'static str> {
    FORMULAS
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split('\t').next().unwrap())
        .collect()
}

fn pocket(seed: u64) -> Pocket {
    Pocket {
        center: [24.2475, -22.1439, -43.1789],
        polar_sites: 3,
        acceptor_sites: 4,
        seed,
    }
}

/// Scores by lookup so the ranking of a synthetic library is known exactly.
struct Table(HashMap<String, f64>);

impl AffinityOracle for Table {
    fn score(&self, _: &Molecule, canonical: &str, _: &Pocket) -> Result<f64, ScreeningError> {
        Ok(self.0[canonical])
    }
}

/// 200 linear alkanes, molecule k scored -(200 - k). Actives sit at ranks
/// 1, 2, 41 and 151.
fn synthetic_library() -> (Vec<LibraryEntry>, Table) {
    let actives = [0usize, 1, 40, 150];
    let mut table = HashMap::new();
    let mut entries = Vec::new();
    for k in 0..200 {
        let smiles = "C".repeat(k + 1);
        let c = canonical_form(&parse_smiles(&smiles).unwrap());
        table.insert(c, -(200.0 - k as f64));
        let label = if actives.contains(&k) {
            Label::Active
        } else {
            Label::Inactive
        };
        entries.push(LibraryEntry {
            smiles,
            label: Some(label),
        });
    }
    // present them out of order
    entries.reverse();
    (entries, Table(table))
}

#[test]
fn enrichment_matches_hand_counts() {
    let (entries, oracle) = synthetic_library();
    let report = screen_library(&entries, &pocket(1), &oracle, Execution::Sequential).unwrap();
    assert_eq!(report.ranked.len(), 200);
    let flags: Vec<bool> = report
        .ranked
        .iter()
        .map(|c| c.label == Some(Label::Active))
        .collect();
    let fractions = [0.01, 0.05, 0.1, 0.25, 0.5, 0.76, 1.0];
    let pts = enrichment_analysis(&flags, &fractions).unwrap();
    // top_n, actives found (out of 4)
    let expect = [
        (2, 2),
        (10, 2),
        (20, 2),
        (50, 3),
        (100, 3),
        (152, 4),
        (200, 4),
    ];
    for (p, (n, found)) in pts.iter().zip(expect) {
        assert_eq!(p.top_n, n, "fraction {}", p.fraction);
        assert_eq!(p.recovery, found as f64 / 4.0);
        assert!((p.ef - found as f64 / 4.0 / p.fraction).abs() < 1e-12);
    }
    assert_eq!(pts[0].recovery, 0.5);
    assert!((pts[0].ef - 50.0).abs() < 1e-12);
}

#[test]
fn enrichment_errors() {
    assert!(matches!(
        enrichment_analysis(&[false; 10], &[0.1]),
        Err(ScreeningError::NoActives)
    ));
    assert!(matches!(
        enrichment_analysis(&[true; 10], &[0.0]),
        Err(ScreeningError::InvalidFraction(_))
    ));
    assert!(enrichment_analysis(&[true; 10], &[1.5]).is_err());
}

#[test]
fn novelty_threshold_both_sides() {
    let reference = vec![Fingerprint::from_bits(64, 0..10)];
    // subsets of the reference: Tanimoto = |subset| / 10
    let generated: Vec<Fingerprint> = [3usize, 4, 5]
        .iter()
        .map(|&k| Fingerprint::from_bits(64, 0..k))
        .collect();
    let report = novelty_report(&generated, &reference, Execution::Sequential).unwrap();
    let sims: Vec<f64> = report.iter().map(|e| e.max_similarity).collect();
    assert_eq!(sims, [0.3, 0.4, 0.5]);
    assert_eq!(
        report
            .iter()
            .map(|e| e.scaffold_hopping)
            .collect::<Vec<_>>(),
        [true, false, false]
    );
    assert_eq!(SCAFFOLD_HOP_THRESHOLD, 0.4);
    assert!(matches!(
        novelty_report(&generated, &[], Execution::Sequential),
        Err(ScreeningError::EmptyReference)
    ));
}

#[test]
fn ligand_efficiency_per_heavy_atom() {
    assert_eq!(ligand_efficiency(-8.0, 20).unwrap(), 0.4);
    assert!(matches!(
        ligand_efficiency(-8.0, 0),
        Err(ScreeningError::ZeroAtoms)
    ));
}

fn fps(smiles: &[&str]) -> Vec<Fingerprint> {
    smiles
        .iter()
        .map(|s| morgan_fingerprint(&parse_smiles(s).unwrap(), 2, 2048))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn novelty_equals_brute_force(g in prop::sample::subsequence(smiles_pool(), 1..20), r in prop::sample::subsequence(smiles_pool(), 1..10)) {
        let (gf, rf) = (fps(&g), fps(&r));
        let seq = novelty_report(&gf, &rf, Execution::Sequential).unwrap();
        prop_assert_eq!(&seq, &novelty_report(&gf, &rf, Execution::Parallel).unwrap());
        for (e, f) in seq.iter().zip(&gf) {
            let sims: Vec<f64> = rf.iter().map(|x| tanimoto(f, x).unwrap()).collect();
            let best = sims.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(e.max_similarity, best);
            prop_assert_eq!(sims[e.nearest], best);
            prop_assert!(sims[..e.nearest].iter().all(|&s| s < best));
            prop_assert_eq!(e.scaffold_hopping, best < 0.4);
        }
    }

    #[test]
    fn recovery_monotone_and_ef_consistent(flags in prop::collection::vec(any::<bool>(), 1..300), fr in prop::collection::vec(0.001..=1.0f64, 1..12)) {
        prop_assume!(flags.iter().any(|&a| a));
        let mut fr = fr;
        fr.sort_by(f64::total_cmp);
        let pts = enrichment_analysis(&flags, &fr).unwrap();
        for w in pts.windows(2) {
            prop_assert!(w[1].recovery >= w[0].recovery);
        }
        for p in &pts {
            prop_assert!((p.ef * p.fraction - p.recovery).abs() <= 1e-15 * p.recovery.max(1.0));
            let total = flags.iter().filter(|&&a| a).count();
            let found = flags[..p.top_n].iter().filter(|&&a| a).count();
            prop_assert_eq!(p.recovery, found as f64 / total as f64);
        }
    }

    #[test]
    fn adding_a_molecule_keeps_relative_order(lib in prop::sample::subsequence(smiles_pool(), 2..30), extra in prop::sample::select(smiles_pool()), seed in any::<u64>()) {
        let canon = |s: &str| canonical_form(&parse_smiles(s).unwrap());
        prop_assume!(lib.iter().all(|s| canon(s) != canon(extra)));
        let entries: Vec<LibraryEntry> = lib.iter().map(|s| LibraryEntry::new(*s)).collect();
        let base = screen_library(&entries, &pocket(seed), &Surrogate, Execution::Sequential).unwrap();
        let mut more = entries.clone();
        more.insert(seed as usize % (more.len() + 1), LibraryEntry::new(extra));
        let bigger = screen_library(&more, &pocket(seed), &Surrogate, Execution::Parallel).unwrap();
        let extra_c = canon(extra);
        let filtered: Vec<&str> = bigger.ranked.iter().map(|c| c.canonical_smiles.as_str()).filter(|c| *c != extra_c).collect();
        let original: Vec<&str> = base.ranked.iter().map(|c| c.canonical_smiles.as_str()).collect();
        prop_assert_eq!(filtered, original);
    }

    #[test]
    fn surrogate_ignores_pocket_centre(s in prop::sample::select(smiles_pool()), c in prop::array::uniform3(-1e3..1e3f64), seed in any::<u64>()) {
        let m = parse_smiles(s).unwrap();
        let mut moved = pocket(seed);
        moved.center = c;
        prop_assert_eq!(surrogate_affinity(&m, &pocket(seed)), surrogate_affinity(&m, &moved));
    }
}
