//! Run state machine: Biologist → target gate → Chemist → guardrail →
//! Pharmacologist, looping back to the Chemist on rejection until approval or
//! the iteration cap.

mod decisions;
mod pipeline;
mod trace;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decisions::{
    AutoApprove, DecisionPayload, DecisionProvider, Gate, Scripted, SteeringContext,
    TargetDecision, TargetGateContext,
};
pub use pipeline::{
    run_pipeline, run_pipeline_traced, CandidateRecord, ChemistConfig, GraphConfig,
    PharmacologistConfig, PipelineConfig, PipelineRequest, RunResult, TargetInfo,
};
pub use trace::{check_complete, parse_jsonl, to_jsonl, EventKind, Trace, TraceEvent};

use crate::molgraph::{canonical_form, parse_smiles};
use crate::pharmacologist::{Category, PenaltySpec, Verdict};

pub const DEFAULT_MAX_ITERATIONS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrchestratorError {
    #[error("empty input")]
    EmptyInput,
    #[error("no verdict for iteration {0}")]
    MissingVerdict(usize),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("decision provider: {0}")]
    Provider(String),
}

const STOP_VERBS: &[&str] = &[
    "want", "find", "discover", "design", "develop", "identify", "search", "generate", "propose",
    "suggest", "give", "show", "list", "need", "help", "optimize", "screen", "run", "make",
    "create", "get", "tell", "is", "are", "can", "could", "would", "please",
];

/// Wraps a bare disease name into a task sentence; anything that already
/// reads like a request passes through.
pub fn normalize_input(raw: &str) -> Result<String, OrchestratorError> {
    let text = raw.trim();
    if text.is_empty() {
        return Err(OrchestratorError::EmptyInput);
    }
    let tokens: Vec<String> = text
        .split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .collect();
    let has_verb = tokens.iter().any(|t| STOP_VERBS.contains(&t.as_str()));
    if tokens.len() <= 4 && !has_verb {
        let name = text.trim_end_matches(['.', '!', '?']).trim_end();
        return Ok(format!("Find a novel drug candidate for {name}."));
    }
    Ok(text.to_string())
}

/// The disease mention of a task: the text after the last " for ", without
/// trailing punctuation; the whole task when there is no " for ".
pub fn disease_query(task: &str) -> String {
    let lower = task.to_lowercase();
    let start = lower.rfind(" for ").map(|i| i + 5).unwrap_or(0);
    task[start..]
        .trim()
        .trim_end_matches(['.', '!', '?'])
        .trim()
        .to_string()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NoDiseaseLinked,
    NoCandidates,
    NoStructure,
    TargetRejected,
    GenerationFailed,
    IterationsExhausted,
    ModuleError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Success {
        smiles: String,
    },
    Failure {
        reason: FailureReason,
        detail: String,
        /// Trace event that caused the failure.
        cause_seq: Option<u64>,
    },
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success { .. })
    }

    pub fn failure_reason(&self) -> Option<FailureReason> {
        match self {
            Outcome::Failure { reason, .. } => Some(*reason),
            Outcome::Success { .. } => None,
        }
    }
}

/// Shared memory of one run.
#[derive(Debug)]
pub struct AgentState {
    pub input: String,
    pub task: String,
    pub target: Option<TargetInfo>,
    pub current_smiles: Option<String>,
    pub feedback_history: Vec<Verdict>,
    pub penalties: PenaltySpec,
    pub is_approved: bool,
    /// Pharmacologist verdicts so far.
    pub iteration: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub trace: Trace,
}

impl AgentState {
    pub fn new(input: &str, task: &str, max_iterations: usize, seed: u64, trace: Trace) -> Self {
        AgentState {
            input: input.to_string(),
            task: task.to_string(),
            target: None,
            current_smiles: None,
            feedback_history: Vec::new(),
            penalties: PenaltySpec::default(),
            is_approved: false,
            iteration: 0,
            max_iterations,
            seed,
            trace,
        }
    }

    /// Records a verdict for the current candidate.
    pub fn record_verdict(&mut self, verdict: Verdict) {
        self.is_approved = verdict.is_approved();
        self.feedback_history.push(verdict);
        self.iteration += 1;
    }

    /// Union of the categories of every verdict so far.
    pub fn accumulated_categories(&self) -> BTreeSet<Category> {
        self.feedback_history
            .iter()
            .flat_map(|v| v.categories.iter().copied())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Guardrail {
    Ok {
        canonical: String,
    },
    Terminate {
        reason: FailureReason,
        detail: String,
    },
}

/// SMILES syntax check on the Chemist → Pharmacologist edge.
pub fn guardrail_validate(state: &AgentState) -> Guardrail {
    let smiles = state.current_smiles.as_deref().unwrap_or("").trim();
    if smiles.is_empty() {
        return Guardrail::Terminate {
            reason: FailureReason::GenerationFailed,
            detail: "no SMILES was generated".into(),
        };
    }
    match parse_smiles(smiles) {
        Ok(m) => Guardrail::Ok {
            canonical: canonical_form(&m),
        },
        Err(e) => Guardrail::Terminate {
            reason: FailureReason::GenerationFailed,
            detail: format!("invalid SMILES '{smiles}': {e}"),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "next", rename_all = "snake_case")]
pub enum Next {
    Chemist,
    End(Outcome),
}

/// Routing after a verdict.
pub fn should_continue(state: &AgentState) -> Result<Next, OrchestratorError> {
    if state.iteration == 0 || state.feedback_history.len() != state.iteration {
        return Err(OrchestratorError::MissingVerdict(state.iteration));
    }
    if state.is_approved {
        let smiles = state.current_smiles.clone().unwrap_or_default();
        return Ok(Next::End(Outcome::Success { smiles }));
    }
    if state.iteration < state.max_iterations {
        return Ok(Next::Chemist);
    }
    Ok(Next::End(Outcome::Failure {
        reason: FailureReason::IterationsExhausted,
        detail: format!("no approval after {} iterations", state.iteration),
        cause_seq: None,
    }))
}

/// Phrase → category table for free-text steering.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringMap {
    entries: Vec<(String, Category)>,
}

const DEFAULT_STEERING: &str = include_str!("../../data/steering.tsv");

impl Default for SteeringMap {
    fn default() -> Self {
        Self::parse(DEFAULT_STEERING).expect("bundled steering map parses")
    }
}

impl SteeringMap {
    /// `phrase<TAB>category` lines, `#` comments.
    pub fn parse(text: &str) -> Result<Self, OrchestratorError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| OrchestratorError::Parse {
                line: i + 1,
                reason,
            };
            let (phrase, cat) = line
                .split_once('\t')
                .ok_or_else(|| err("expected phrase<TAB>category".into()))?;
            let cat = Category::parse(cat.trim())
                .ok_or_else(|| err(format!("unknown category '{}'", cat.trim())))?;
            let phrase = phrase.trim().to_lowercase();
            if phrase.is_empty() {
                return Err(err("empty phrase".into()));
            }
            entries.push((phrase, cat));
        }
        Ok(SteeringMap { entries })
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|e| OrchestratorError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Categories whose phrases occur in `text` (case-insensitive).
    pub fn categories(&self, text: &str) -> BTreeSet<Category> {
        let lower = text.to_lowercase();
        self.entries
            .iter()
            .filter(|(p, _)| lower.contains(p.as_str()))
            .map(|(_, c)| *c)
            .collect()
    }
}
