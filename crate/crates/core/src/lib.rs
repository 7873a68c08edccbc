//! Deterministic target-to-lead discovery loop.
//!
//! The crate is organised around the stages of the loop:
//!
//! * [`kgraph`]: typed biomedical property graph, entity linking, bounded
//!   path search and candidate ranking (target discovery).
//! * [`molgraph`]: SMILES parsing, canonical SMILES, descriptors, Morgan-style
//!   fingerprints and Tanimoto similarity.
//! * [`screening`]: surrogate binding oracle, library screening and the
//!   screening analytics (enrichment, novelty, ligand efficiency).
//! * [`pbpk`]: ADMET to PBPK parameter derivation and the five-compartment
//!   simulation.
//! * [`pharmacologist`]: ADMET acquisition, rule-based verdicts and the
//!   translation of feedback into optimizer penalties.
//! * [`optimizer`]: GA mutation + Gaussian-process/LCB selection loop.
//! * [`orchestrator`]: the state machine tying everything together with
//!   human decision gates and a JSONL trace.
//!
//! Batch work (library screening, novelty, objective evaluation, parameter
//! sweeps) goes through [`exec::Execution`], which uses rayon when the
//! `parallel` feature is enabled and a plain sequential loop otherwise.

pub mod exec;
pub mod hashing;
pub mod kgraph;
pub mod molgraph;
pub mod optimizer;
pub mod orchestrator;
pub mod pbpk;
pub mod pharmacologist;
pub mod screening;

pub use exec::Execution;

use std::path::PathBuf;

/// Directory holding the fixture sets shipped with the crate
/// (`diabetes/`, `pancreatic/`, ...).
pub fn bundled_fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
