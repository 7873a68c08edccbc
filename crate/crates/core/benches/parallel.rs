use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use leadforge_core::molgraph::{morgan_fingerprint, parse_smiles, Molecule};
use leadforge_core::optimizer::{mutate_parent, parent_rng};
use leadforge_core::pbpk::{
    derive_params, simulate_batch, AdmetProfile, DoseRegimen, PbpkParams, Route,
};
use leadforge_core::screening::{novelty_report, screen_library, LibraryEntry, Pocket, Surrogate};
use leadforge_core::Execution;

const BASE: [&str; 8] = [
    "O=C(O)CN1CCC(O)CC1",
    "COC1CC(O)(c2ccncc2)CON1CC(=O)O",
    "CC(=O)Nc1ccc(O)cc1",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
    "CCN(CC)CC(=O)Nc1c(C)cccc1C",
    "NCCc1c[nH]c2ccc(O)cc12",
    "CN1CCCC1c1cccnc1",
];

fn pocket() -> Pocket {
    Pocket {
        center: [24.2475, -22.1439, -43.1789],
        polar_sites: 3,
        acceptor_sites: 4,
        seed: 2024,
    }
}

/// A few thousand molecules: the base set plus every mutant of it, twice over.
fn library() -> Vec<Molecule> {
    let mut out: Vec<Molecule> = BASE.iter().map(|s| parse_smiles(s).unwrap()).collect();
    for g in 1..=2 {
        let parents = out.clone();
        for p in &parents {
            let mut rng = parent_rng(7, g, &format!("{p:?}"));
            out.extend(mutate_parent(p, 20, &mut rng));
        }
    }
    out
}

fn strategies() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ]
}

fn bench_screen(c: &mut Criterion) {
    let entries: Vec<LibraryEntry> = library()
        .iter()
        .map(|m| LibraryEntry::new(leadforge_core::molgraph::canonical_form(m)))
        .collect();
    let p = pocket();
    let mut g = c.benchmark_group("screen_library");
    for (name, exec) in strategies() {
        g.bench_with_input(BenchmarkId::new(name, entries.len()), &entries, |b, e| {
            b.iter(|| screen_library(e, &p, &Surrogate, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_novelty(c: &mut Criterion) {
    let fps: Vec<_> = library()
        .iter()
        .map(|m| morgan_fingerprint(m, 2, 2048))
        .collect();
    let (reference, generated) = fps.split_at(fps.len() / 4);
    let mut g = c.benchmark_group("novelty");
    for (name, exec) in strategies() {
        g.bench_function(BenchmarkId::new(name, generated.len()), |b| {
            b.iter(|| novelty_report(generated, reference, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_pbpk(c: &mut Criterion) {
    let params: Vec<PbpkParams> = (0..64)
        .map(|i| {
            let f = i as f64 / 64.0;
            derive_params(
                &AdmetProfile {
                    ppb: 0.9 * f,
                    vss: 5.0 + 150.0 * f,
                    t_half: 1.0,
                    cl_sys: Some(2.0 + 70.0 * f),
                    ..Default::default()
                },
                60.0,
            )
            .unwrap()
        })
        .collect();
    let regimen = DoseRegimen::single(Route::Oral, 200.0);
    let mut g = c.benchmark_group("pbpk_batch");
    g.sample_size(10);
    for (name, exec) in strategies() {
        g.bench_function(BenchmarkId::new(name, params.len()), |b| {
            b.iter(|| simulate_batch(&params, &regimen, 24.0, exec))
        });
    }
    g.finish();
}

fn bench_mutants(c: &mut Criterion) {
    let parents: Vec<Molecule> = library().into_iter().take(200).collect();
    let mut g = c.benchmark_group("mutants");
    for (name, exec) in strategies() {
        g.bench_function(BenchmarkId::new(name, parents.len()), |b| {
            b.iter(|| {
                exec.map(&parents, |p| {
                    let mut rng = parent_rng(1, 1, &format!("{p:?}"));
                    mutate_parent(p, 5, &mut rng)
                })
            })
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_screen,
    bench_novelty,
    bench_pbpk,
    bench_mutants
);
criterion_main!(benches);
