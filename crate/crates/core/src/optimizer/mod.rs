//! GA mutation with a Gaussian-process / LCB selection step and a
//! penalty-augmented objective.

mod gp;
mod mutate;

pub use gp::{
    gp_fit, gp_fit_with, jaccard_distance, lcb_select, matern52, Acquisition, GpModel, Observation,
    LENGTH_SCALE, NOISE_VARIANCE, SIGNAL_VARIANCE_FLOOR,
};
pub use mutate::{
    apply_mutation, candidate_edits, generate_mutants, mutate_parent, parent_rng, Fragment,
    Mutation, MAX_ATTEMPTS,
};

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::molgraph::{
    canonical_form, descriptors, morgan_fingerprint, parse_smiles, Fingerprint, Molecule,
    DEFAULT_FP_BITS, DEFAULT_FP_RADIUS,
};
use crate::pharmacologist::PenaltySpec;
use crate::screening::{AffinityOracle, Pocket};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("no valid seed molecules")]
    NoValidSeeds,
    #[error("no valid mutants could be generated")]
    NoValidMutants,
    #[error("GP needs at least one observation")]
    EmptyTraining,
    #[error("duplicate GP input {0}")]
    DuplicateInput(String),
    #[error("kernel matrix is singular even with maximum jitter")]
    SingularKernel,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("scoring {smiles}: {reason}")]
    Scoring { smiles: String, reason: String },
    #[error("writing logs: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub generations: usize,
    pub mutants_per_parent: usize,
    pub select_budget: usize,
    /// New evaluations added to the population each generation (best first).
    pub survivors: usize,
    pub kappa: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            generations: 3,
            mutants_per_parent: 5,
            select_budget: 10,
            survivors: 5,
            kappa: 1.0,
            seed: 2024,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: &str| Err(OptimizerError::InvalidConfig(m.into()));
        if self.mutants_per_parent == 0 {
            return bad("mutants_per_parent must be at least 1");
        }
        if self.select_budget == 0 {
            return bad("select_budget must be at least 1");
        }
        if self.survivors == 0 {
            return bad("survivors must be at least 1");
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return bad("kappa must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub canonical_smiles: String,
    pub score: f64,
    pub penalty: f64,
    /// `score + penalty`
    pub objective: f64,
    /// 0 for seeds.
    pub generation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    pub population: usize,
    pub mutants_generated: usize,
    /// Distinct, not yet evaluated mutants.
    pub pool: usize,
    pub selected: usize,
    pub best_total_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRow {
    pub generation: usize,
    pub candidate: String,
    pub objective: Option<f64>,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: Evaluation,
    pub top: Vec<Evaluation>,
    pub history: Vec<GenerationSummary>,
    pub evaluations: Vec<Evaluation>,
    pub rows: Vec<GenerationRow>,
    pub seed: u64,
    pub penalties: PenaltySpec,
    /// Set when the run stopped before the configured generation count.
    pub stopped_early: Option<String>,
}

impl OptimizationResult {
    /// `gen,candidate,objective,selected`
    pub fn generations_csv(&self) -> String {
        let mut out = String::from("gen,candidate,objective,selected\n");
        for r in &self.rows {
            let obj = r.objective.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.generation, r.candidate, obj, r.selected
            ));
        }
        out
    }

    /// Writes `generations.csv` and `result.json` into `dir` (created).
    pub fn write_logs(&self, dir: &Path) -> Result<(), OptimizerError> {
        let io = |e: std::io::Error| OptimizerError::Io(e.to_string());
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("generations.csv"), self.generations_csv()).map_err(io)?;
        let json =
            serde_json::to_string_pretty(self).map_err(|e| OptimizerError::Io(e.to_string()))?;
        std::fs::write(dir.join("result.json"), json).map_err(io)
    }
}

/// What the optimizer needs to score a molecule.
pub struct Objective<'a> {
    pub oracle: &'a dyn AffinityOracle,
    pub pocket: &'a Pocket,
    pub penalties: &'a PenaltySpec,
}

impl Objective<'_> {
    pub fn evaluate(
        &self,
        m: &Molecule,
        canonical: &str,
        generation: usize,
    ) -> Result<Evaluation, OptimizerError> {
        let score =
            self.oracle
                .score(m, canonical, self.pocket)
                .map_err(|e| OptimizerError::Scoring {
                    smiles: canonical.to_string(),
                    reason: e.to_string(),
                })?;
        let penalty = self.penalties.apply(&descriptors(m));
        let objective = score + penalty;
        if !objective.is_finite() {
            return Err(OptimizerError::Scoring {
                smiles: canonical.to_string(),
                reason: format!("non-finite objective {objective}"),
            });
        }
        Ok(Evaluation {
            canonical_smiles: canonical.to_string(),
            score,
            penalty,
            objective,
            generation,
        })
    }
}

fn fingerprint(m: &Molecule) -> Fingerprint {
    morgan_fingerprint(m, DEFAULT_FP_RADIUS, DEFAULT_FP_BITS)
}

fn by_objective(a: &Evaluation, b: &Evaluation) -> std::cmp::Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then_with(|| a.canonical_smiles.cmp(&b.canonical_smiles))
}

struct Entry {
    mol: Molecule,
    fp: Fingerprint,
}

/// Runs the optimisation loop.
///
/// Seeds are evaluated first. Each generation mutates every population
/// member, drops duplicates and already evaluated molecules, fits the GP on
/// all evaluations, evaluates the `select_budget` lowest-LCB candidates and
/// adds the best `survivors` of them to the population. `history[g]` is the
/// best objective seen up to generation `g`.
pub fn optimize(
    seeds: &[&str],
    objective: &Objective<'_>,
    config: &OptimizerConfig,
    exec: Execution,
) -> Result<OptimizationResult, OptimizerError> {
    config.validate()?;
    let mut known: BTreeMap<String, Entry> = BTreeMap::new();
    let mut population: Vec<String> = Vec::new();
    for s in seeds {
        if let Ok(m) = parse_smiles(s) {
            let c = canonical_form(&m);
            if let std::collections::btree_map::Entry::Vacant(slot) = known.entry(c.clone()) {
                population.push(c);
                let fp = fingerprint(&m);
                slot.insert(Entry { mol: m, fp });
            }
        }
    }
    if population.is_empty() {
        return Err(OptimizerError::NoValidSeeds);
    }

    let seed_results = exec.map(&population, |c| objective.evaluate(&known[c].mol, c, 0));
    let mut evaluations: Vec<Evaluation> = seed_results.into_iter().collect::<Result<_, _>>()?;
    let mut rows: Vec<GenerationRow> = evaluations
        .iter()
        .map(|e| GenerationRow {
            generation: 0,
            candidate: e.canonical_smiles.clone(),
            objective: Some(e.objective),
            selected: true,
        })
        .collect();
    let mut best = evaluations
        .iter()
        .min_by(|a, b| by_objective(a, b))
        .cloned()
        .expect("seeds evaluated");
    let mut history = Vec::new();
    let mut stopped_early = None;

    for generation in 1..=config.generations {
        let parents: Vec<Molecule> = population.iter().map(|c| known[c].mol.clone()).collect();
        let per_parent = exec.map(&parents, |p| {
            let mut rng = parent_rng(config.seed, generation, &canonical_form(p));
            mutate_parent(p, config.mutants_per_parent, &mut rng)
        });
        let mutants: Vec<Molecule> = per_parent.into_iter().flatten().collect();
        let generated = mutants.len();
        if generated == 0 {
            stopped_early = Some(OptimizerError::NoValidMutants.to_string());
            break;
        }
        let mut pool: Vec<(String, Molecule)> = Vec::new();
        let mut pooled = BTreeSet::new();
        for m in mutants {
            let c = canonical_form(&m);
            if !known.contains_key(&c) && pooled.insert(c.clone()) {
                pool.push((c, m));
            }
        }
        let pool_fps: Vec<Fingerprint> = exec.map(&pool, |(_, m)| fingerprint(m));
        let train: Vec<(String, Fingerprint, f64)> = evaluations
            .iter()
            .map(|e| {
                (
                    e.canonical_smiles.clone(),
                    known[&e.canonical_smiles].fp.clone(),
                    e.objective,
                )
            })
            .collect();
        // Matérn over Jaccard distance is not guaranteed positive definite, so
        // a fit can fail on an otherwise valid set. Keep what we have.
        let model = match gp_fit(&train) {
            Ok(m) => m,
            Err(e @ OptimizerError::SingularKernel) => {
                stopped_early = Some(format!("generation {generation}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let cands: Vec<(String, Fingerprint)> = pool
            .iter()
            .zip(&pool_fps)
            .map(|((c, _), f)| (c.clone(), f.clone()))
            .collect();
        let chosen: BTreeSet<String> =
            lcb_select(&model, &cands, config.select_budget, config.kappa)
                .into_iter()
                .map(|a| a.canonical_smiles)
                .collect();
        let selected: Vec<usize> = (0..pool.len())
            .filter(|&i| chosen.contains(&pool[i].0))
            .collect();
        let fresh: Vec<Evaluation> = exec
            .map(&selected, |&i| {
                objective.evaluate(&pool[i].1, &pool[i].0, generation)
            })
            .into_iter()
            .collect::<Result<_, _>>()?;

        let fresh_by: BTreeMap<&str, f64> = fresh
            .iter()
            .map(|e| (e.canonical_smiles.as_str(), e.objective))
            .collect();
        for (c, _) in &pool {
            rows.push(GenerationRow {
                generation,
                candidate: c.clone(),
                objective: fresh_by.get(c.as_str()).copied(),
                selected: chosen.contains(c),
            });
        }
        let mut ranked = fresh.clone();
        ranked.sort_by(by_objective);
        for ((c, mol), fp) in pool.into_iter().zip(pool_fps) {
            if chosen.contains(&c) {
                known.insert(c, Entry { mol, fp });
            }
        }
        population.extend(
            ranked
                .iter()
                .take(config.survivors)
                .map(|e| e.canonical_smiles.clone()),
        );
        if let Some(b) = ranked.first() {
            if by_objective(b, &best).is_lt() {
                best = b.clone();
            }
        }
        evaluations.extend(fresh);
        history.push(GenerationSummary {
            generation,
            population: parents.len(),
            mutants_generated: generated,
            pool: cands.len(),
            selected: selected.len(),
            best_total_score: best.objective,
        });
    }

    let mut top = evaluations.clone();
    top.sort_by(by_objective);
    top.truncate(5);
    Ok(OptimizationResult {
        best,
        top,
        history,
        evaluations,
        rows,
        seed: config.seed,
        penalties: objective.penalties.clone(),
        stopped_early,
    })
}
