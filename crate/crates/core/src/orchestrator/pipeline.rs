use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::decisions::{DecisionProvider, SteeringContext, TargetDecision, TargetGateContext};
use super::trace::{to_jsonl, EventKind, Trace, TraceEvent};
use super::{
    disease_query, guardrail_validate, normalize_input, should_continue, AgentState, FailureReason,
    Guardrail, Next, OrchestratorError, Outcome, SteeringMap, DEFAULT_MAX_ITERATIONS,
};
use crate::exec::Execution;
use crate::hashing::derive_seed;
use crate::kgraph::{
    critic_rank, entity_linking, find_related_paths, group_by_end, parse_pattern, CriticWeights,
    EvidencePath, GraphStore, NodeType, PathPattern, Relation, TargetCandidate,
};
use crate::molgraph::parse_smiles;
use crate::optimizer::{optimize, Objective, OptimizerConfig};
use crate::pharmacologist::{
    assess, penalties_for, AdmetFixture, AdmetSource, Category, PenaltySpec, PharmacologyConfig,
    Verdict,
};
use crate::screening::{
    parse_library, parse_pockets, screen_library, LibraryEntry, Pocket, Surrogate,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub edges: PathBuf,
    pub synonyms: Option<PathBuf>,
    pub pdb_map: Option<PathBuf>,
    /// Path patterns from the linked disease nodes to candidate proteins.
    /// The start node spec only selects the entity-linking type.
    pub patterns: Vec<String>,
    pub filter_relation: Relation,
    pub filter_type: NodeType,
    pub shortlist: usize,
    pub critic: CriticWeights,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            edges: "edges.tsv".into(),
            synonyms: Some("synonyms.tsv".into()),
            pdb_map: Some("pdb_map.tsv".into()),
            patterns: vec!["(Disease)-[DISEASE_PROTEIN]->(Gene_protein)".into()],
            filter_relation: Relation::DrugProtein,
            filter_type: NodeType::Drug,
            shortlist: 5,
            critic: CriticWeights::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemistConfig {
    pub pocket: PathBuf,
    /// Molecules screened in the first round (one per line).
    pub seeds: PathBuf,
}

impl Default for ChemistConfig {
    fn default() -> Self {
        ChemistConfig {
            pocket: "pocket.txt".into(),
            seeds: "seeds.smi".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PharmacologistConfig {
    pub admet: Option<PathBuf>,
    /// Use the descriptor stub for molecules missing from the fixture.
    pub stub_fallback: bool,
    /// Rule/penalty table; the bundled one when absent.
    pub rules: Option<PathBuf>,
    /// Steering phrase map; the bundled one when absent.
    pub steering: Option<PathBuf>,
}

impl Default for PharmacologistConfig {
    fn default() -> Self {
        PharmacologistConfig {
            admet: Some("admet.jsonl".into()),
            stub_fallback: true,
            rules: None,
            steering: None,
        }
    }
}

/// `pipeline.toml`. Relative paths resolve against the fixture directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Overrides the disease mention extracted from the task.
    pub query: Option<String>,
    pub max_iterations: usize,
    pub graph: GraphConfig,
    pub chemist: ChemistConfig,
    pub pharmacologist: PharmacologistConfig,
    pub optimizer: OptimizerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            query: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            graph: GraphConfig::default(),
            chemist: ChemistConfig::default(),
            pharmacologist: PharmacologistConfig::default(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, OrchestratorError> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        if cfg.max_iterations == 0 {
            return Err(OrchestratorError::Config(
                "max_iterations must be at least 1".into(),
            ));
        }
        if cfg.graph.shortlist == 0 {
            return Err(OrchestratorError::Config(
                "shortlist must be at least 1".into(),
            ));
        }
        cfg.optimizer
            .validate()
            .map_err(|e| OrchestratorError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        Self::parse(&read(path)?)
    }
}

fn read(path: &Path) -> Result<String, OrchestratorError> {
    std::fs::read_to_string(path).map_err(|e| OrchestratorError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineRequest {
    pub input: String,
    pub fixture_dir: PathBuf,
    pub config: PipelineConfig,
    /// Where optimizer logs go; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    pub exec: Execution,
}

impl PipelineRequest {
    /// Reads `pipeline.toml` from the fixture directory, or uses defaults
    /// when there is none.
    pub fn from_fixture(input: &str, fixture_dir: &Path) -> Result<Self, OrchestratorError> {
        let cfg_path = fixture_dir.join("pipeline.toml");
        let config = if cfg_path.exists() {
            PipelineConfig::load(&cfg_path)?
        } else {
            PipelineConfig::default()
        };
        Ok(PipelineRequest {
            input: input.to_string(),
            fixture_dir: fixture_dir.to_path_buf(),
            config,
            out_dir: None,
            exec: Execution::default(),
        })
    }

    fn path(&self, p: &Path) -> PathBuf {
        self.fixture_dir.join(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub shortlist: Vec<TargetCandidate>,
    pub chosen: String,
    pub pdb: String,
    pub pocket: Pocket,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    /// 1-based iteration that produced the molecule.
    pub iteration: usize,
    pub smiles: String,
    /// `screen` or `optimizer`.
    pub source: String,
    pub objective: Option<f64>,
    pub pk_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub input: String,
    pub task: String,
    pub outcome: Outcome,
    pub target: Option<TargetInfo>,
    pub final_smiles: Option<String>,
    pub iterations: usize,
    pub candidates: Vec<CandidateRecord>,
    /// One per candidate, same order.
    pub verdicts: Vec<Verdict>,
    pub penalties: PenaltySpec,
    pub seed: u64,
    pub trace: Vec<TraceEvent>,
}

impl RunResult {
    /// Copy with every trace timestamp zeroed, for replay comparison.
    pub fn without_timestamps(&self) -> RunResult {
        let mut r = self.clone();
        for e in &mut r.trace {
            e.ts_ms = 0;
        }
        r
    }

    /// Writes `run_result.json` and `trace.jsonl` into `dir` (created).
    pub fn write(&self, dir: &Path) -> Result<(), OrchestratorError> {
        let io = |p: &Path, e: std::io::Error| OrchestratorError::Io {
            path: p.display().to_string(),
            reason: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let json = serde_json::to_string_pretty(self).expect("run results serialize");
        let p = dir.join("run_result.json");
        std::fs::write(&p, json).map_err(|e| io(&p, e))?;
        let p = dir.join("trace.jsonl");
        std::fs::write(&p, to_jsonl(&self.trace)).map_err(|e| io(&p, e))
    }
}

struct Resources {
    store: GraphStore,
    patterns: Vec<PathPattern>,
    pocket: Pocket,
    seeds: Vec<LibraryEntry>,
    admet: AdmetSource,
    pharm: PharmacologyConfig,
    steering: SteeringMap,
}

fn load_resources(req: &PipelineRequest) -> Result<Resources, String> {
    let cfg = &req.config;
    let store = GraphStore::ingest_files(
        &req.path(&cfg.graph.edges),
        cfg.graph.synonyms.as_ref().map(|p| req.path(p)).as_deref(),
        cfg.graph.pdb_map.as_ref().map(|p| req.path(p)).as_deref(),
    )
    .map_err(|e| e.to_string())?;
    let patterns = cfg
        .graph
        .patterns
        .iter()
        .map(|p| parse_pattern(p).map_err(|e| format!("pattern '{p}': {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if patterns.is_empty() {
        return Err("no path patterns configured".into());
    }
    let pocket_path = req.path(&cfg.chemist.pocket);
    let pocket = parse_pockets(&read(&pocket_path).map_err(|e| e.to_string())?)
        .map_err(|e| format!("{}: {e}", pocket_path.display()))?
        .into_iter()
        .next()
        .ok_or_else(|| format!("{}: no pocket", pocket_path.display()))?;
    let seeds_path = req.path(&cfg.chemist.seeds);
    let seeds = parse_library(&read(&seeds_path).map_err(|e| e.to_string())?)
        .map_err(|e| format!("{}: {e}", seeds_path.display()))?;
    let admet = match &cfg.pharmacologist.admet {
        Some(p) => {
            let f = AdmetFixture::load(&req.path(p)).map_err(|e| e.to_string())?;
            if cfg.pharmacologist.stub_fallback {
                AdmetSource::FixtureOrStub(f)
            } else {
                AdmetSource::Fixture(f)
            }
        }
        None => AdmetSource::Stub,
    };
    let pharm = match &cfg.pharmacologist.rules {
        Some(p) => PharmacologyConfig::load(&req.path(p)).map_err(|e| e.to_string())?,
        None => PharmacologyConfig::default(),
    };
    let steering = match &cfg.pharmacologist.steering {
        Some(p) => SteeringMap::load(&req.path(p)).map_err(|e| e.to_string())?,
        None => SteeringMap::default(),
    };
    Ok(Resources {
        store,
        patterns,
        pocket,
        seeds,
        admet,
        pharm,
        steering,
    })
}

const RUN: &str = "Orchestrator";
const BIOLOGIST: &str = "Biologist";
const GATE: &str = "HumanGate";
const CHEMIST: &str = "Chemist";
const GUARDRAIL: &str = "Guardrail";
const PHARMACOLOGIST: &str = "Pharmacologist";
const ROUTER: &str = "Router";

struct Runner<'a> {
    req: &'a PipelineRequest,
    provider: &'a mut dyn DecisionProvider,
    state: AgentState,
    res: Option<Resources>,
    candidates: Vec<CandidateRecord>,
    rejected: BTreeSet<String>,
    steering: BTreeSet<Category>,
}

type Step<T> = Result<T, Outcome>;

impl Runner<'_> {
    fn event(&mut self, node: &str, kind: EventKind, payload: Value) -> u64 {
        self.state.trace.push(node, kind, payload)
    }

    fn tool(&mut self, node: &str, tool: &str, result: Value) -> u64 {
        self.event(
            node,
            EventKind::ToolCall,
            json!({ "tool": tool, "result": result }),
        )
    }

    /// Records a failure event and returns the terminal outcome.
    fn fail(&mut self, node: &str, reason: FailureReason, detail: impl Into<String>) -> Outcome {
        let detail = detail.into();
        let seq = self.event(
            node,
            EventKind::Decision,
            json!({ "event": format!("{reason:?}"), "reason": reason, "detail": detail }),
        );
        Outcome::Failure {
            reason,
            detail,
            cause_seq: Some(seq),
        }
    }

    fn node<T>(
        &mut self,
        name: &str,
        payload: Value,
        f: impl FnOnce(&mut Self) -> Step<T>,
    ) -> Step<T> {
        self.event(name, EventKind::Enter, payload);
        let r = f(self);
        let status = if r.is_ok() { "ok" } else { "failed" };
        self.event(name, EventKind::Exit, json!({ "status": status }));
        r
    }

    fn res(&self) -> &Resources {
        self.res
            .as_ref()
            .expect("resources are loaded before any agent runs")
    }

    fn biologist(&mut self) -> Step<(Vec<TargetCandidate>, String)> {
        let res = self.res.take().expect("resources loaded");
        let r = self.biologist_with(&res);
        self.res = Some(res);
        r
    }

    fn biologist_with(&mut self, res: &Resources) -> Step<(Vec<TargetCandidate>, String)> {
        let store = &res.store;
        let cfg = &self.req.config.graph;
        let query = self
            .req
            .config
            .query
            .clone()
            .unwrap_or_else(|| disease_query(&self.state.task));
        let mut link_types: Vec<NodeType> = res
            .patterns
            .iter()
            .filter_map(|p| p.start.node_type)
            .collect();
        link_types.sort();
        link_types.dedup();
        if link_types.is_empty() {
            link_types.push(NodeType::Disease);
        }
        let linked = entity_linking(&query, store, &link_types);
        self.tool(
            BIOLOGIST,
            "entity_linking",
            json!({ "query": query, "linked": linked }),
        );
        let starts = linked.ids();
        if starts.is_empty() {
            return Err(self.fail(
                BIOLOGIST,
                FailureReason::NoDiseaseLinked,
                format!("no node matches '{query}'"),
            ));
        }

        let schema = store.schema();
        self.tool(
            BIOLOGIST,
            "get_graph_schema",
            json!({ "nodes": store.node_count(), "edges": store.edge_count(), "node_types": schema.node_types }),
        );

        let mut paths: Vec<EvidencePath> = Vec::new();
        for (text, pattern) in cfg.patterns.iter().zip(&res.patterns) {
            match find_related_paths(store, &starts, &pattern.hops, pattern.hops.len()) {
                Ok(found) => {
                    self.tool(
                        BIOLOGIST,
                        "find_related_paths",
                        json!({ "pattern": text, "starts": starts.len(), "paths": found.paths.len(), "relaxed": found.relaxed }),
                    );
                    paths.extend(found.paths);
                }
                Err(e) => {
                    return Err(self.fail(BIOLOGIST, FailureReason::ModuleError, e.to_string()))
                }
            }
        }
        let is_protein = |id| {
            store
                .node(id)
                .is_some_and(|n| n.node_type == NodeType::GeneProtein)
        };
        let ends: Vec<_> = paths
            .iter()
            .map(EvidencePath::end)
            .filter(|&id| is_protein(id))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let kept: BTreeSet<_> = store
            .filter_nodes_without_relation(&ends, cfg.filter_relation, cfg.filter_type)
            .into_iter()
            .collect();
        let mut removed: Vec<&str> = ends
            .iter()
            .filter(|id| !kept.contains(id))
            .filter_map(|&id| store.node(id).map(|n| n.name.as_str()))
            .collect();
        removed.sort_unstable();
        self.tool(
            BIOLOGIST,
            "filter_nodes_without_relation",
            json!({
                "relation": cfg.filter_relation, "counterpart": cfg.filter_type,
                "input": ends.len(), "kept": kept.len(), "removed": removed,
            }),
        );

        let grouped: Vec<_> = group_by_end(&paths)
            .into_iter()
            .filter(|(id, _)| kept.contains(id))
            .collect();
        let mut ranked = critic_rank(&grouped, store, cfg.critic);
        let reviewed = ranked.len();
        ranked.truncate(cfg.shortlist);
        let summary: Vec<Value> = ranked
            .iter()
            .map(|c| json!({ "name": c.name, "score": c.score, "paths": c.evidence.len(), "drug_degree": c.drug_degree, "pdb": c.pdb }))
            .collect();
        self.tool(
            BIOLOGIST,
            "critic_rank",
            json!({ "reviewed": reviewed, "shortlist": summary }),
        );
        if ranked.is_empty() {
            return Err(self.fail(
                BIOLOGIST,
                FailureReason::NoCandidates,
                "no candidate survived filtering",
            ));
        }

        let checks: Vec<Value> = ranked
            .iter()
            .map(|c| json!({ "name": c.name, "pdb": c.pdb }))
            .collect();
        self.tool(BIOLOGIST, "check_structures", json!(checks));
        match ranked.iter().find(|c| c.pdb.is_some()) {
            Some(c) => {
                let name = c.name.clone();
                Ok((ranked, name))
            }
            None => Err(self.fail(
                BIOLOGIST,
                FailureReason::NoStructure,
                "no shortlisted candidate has a structure",
            )),
        }
    }

    fn target_gate(&mut self, shortlist: Vec<TargetCandidate>, proposed: String) -> Step<()> {
        let ctx = TargetGateContext {
            task: self.state.task.clone(),
            proposed: Some(proposed.clone()),
            shortlist,
        };
        let decision = match self.provider.approve_target(&ctx) {
            Ok(d) => d,
            Err(e) => return Err(self.fail(GATE, FailureReason::ModuleError, e.to_string())),
        };
        self.event(
            GATE,
            EventKind::Decision,
            json!({ "gate": "target_approval", "decision": decision }),
        );
        let chosen = match decision {
            TargetDecision::Reject { reason } => {
                return Err(self.fail(GATE, FailureReason::TargetRejected, reason))
            }
            TargetDecision::Approve { target } => target.unwrap_or(proposed),
        };
        let Some(c) = ctx
            .shortlist
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(&chosen))
        else {
            return Err(self.fail(
                GATE,
                FailureReason::NoCandidates,
                format!("'{chosen}' is not shortlisted"),
            ));
        };
        let Some(pdb) = c.pdb.clone() else {
            return Err(self.fail(
                GATE,
                FailureReason::NoStructure,
                format!("'{}' has no structure", c.name),
            ));
        };
        let name = c.name.clone();
        let pocket = self.res().pocket.clone();
        self.state.target = Some(super::TargetInfo {
            shortlist: ctx.shortlist,
            chosen: name,
            pdb,
            pocket,
        });
        Ok(())
    }

    fn chemist(&mut self) -> Step<()> {
        let iteration = self.state.iteration + 1;
        let exec = self.req.exec;
        let pocket = self
            .state
            .target
            .as_ref()
            .expect("target chosen")
            .pocket
            .clone();
        if self.state.iteration == 0 {
            let report = match screen_library(&self.res().seeds, &pocket, &Surrogate, exec) {
                Ok(r) => r,
                Err(e) => {
                    return Err(self.fail(CHEMIST, FailureReason::GenerationFailed, e.to_string()))
                }
            };
            let top: Vec<Value> = report
                .ranked
                .iter()
                .take(5)
                .map(|c| json!({ "smiles": c.canonical_smiles, "score": c.score }))
                .collect();
            self.tool(
                CHEMIST,
                "screen_seeds",
                json!({ "screened": report.ranked.len() + report.skipped.len(), "skipped": report.skipped, "top": top }),
            );
            let Some(best) = report
                .ranked
                .iter()
                .find(|c| !self.rejected.contains(&c.canonical_smiles))
            else {
                return Err(self.fail(
                    CHEMIST,
                    FailureReason::GenerationFailed,
                    "no valid seed molecule",
                ));
            };
            self.candidates.push(CandidateRecord {
                iteration,
                smiles: best.canonical_smiles.clone(),
                source: "screen".into(),
                objective: Some(best.score),
                pk_error: None,
            });
            self.state.current_smiles = Some(best.canonical_smiles.clone());
            return Ok(());
        }

        let mut cats = self.state.accumulated_categories();
        cats.extend(self.steering.iter().copied());
        self.state.penalties = penalties_for(&cats, &self.res().pharm);
        let cat_names: Vec<&str> = cats.iter().map(|c| c.as_str()).collect();
        let penalties = json!(self.state.penalties);
        self.tool(
            CHEMIST,
            "feedback_to_penalties",
            json!({ "categories": cat_names, "penalties": penalties }),
        );

        let current = self.state.current_smiles.clone().unwrap_or_default();
        let mut config = self.req.config.optimizer.clone();
        config.seed = derive_seed(self.state.seed, "chemist", iteration as u64);
        let objective = Objective {
            oracle: &Surrogate,
            pocket: &pocket,
            penalties: &self.state.penalties,
        };
        let result = match optimize(&[current.as_str()], &objective, &config, exec) {
            Ok(r) => r,
            Err(e) => {
                return Err(self.fail(CHEMIST, FailureReason::GenerationFailed, e.to_string()))
            }
        };
        if let Some(dir) = &self.req.out_dir {
            let dir = dir
                .join("optimization_logs")
                .join(format!("iteration_{iteration}"));
            if let Err(e) = result.write_logs(&dir) {
                return Err(self.fail(CHEMIST, FailureReason::ModuleError, e.to_string()));
            }
        }
        let mut ranked = result.evaluations.clone();
        ranked.sort_by(|a, b| {
            a.objective
                .total_cmp(&b.objective)
                .then_with(|| a.canonical_smiles.cmp(&b.canonical_smiles))
        });
        let pick = ranked.into_iter().find(|e| {
            e.canonical_smiles != current && !self.rejected.contains(&e.canonical_smiles)
        });
        self.tool(
            CHEMIST,
            "optimize",
            json!({
                "seed": config.seed, "history": result.history, "best": result.best,
                "evaluated": result.evaluations.len(), "picked": pick,
            }),
        );
        let Some(pick) = pick else {
            return Err(self.fail(
                CHEMIST,
                FailureReason::GenerationFailed,
                "optimizer produced no new candidate",
            ));
        };
        self.candidates.push(CandidateRecord {
            iteration,
            smiles: pick.canonical_smiles.clone(),
            source: "optimizer".into(),
            objective: Some(pick.objective),
            pk_error: None,
        });
        self.state.current_smiles = Some(pick.canonical_smiles);
        Ok(())
    }

    fn guardrail(&mut self) -> Step<()> {
        let g = guardrail_validate(&self.state);
        self.event(GUARDRAIL, EventKind::Decision, json!(g));
        match g {
            Guardrail::Ok { canonical } => {
                self.state.current_smiles = Some(canonical);
                Ok(())
            }
            Guardrail::Terminate { reason, detail } => Err(self.fail(GUARDRAIL, reason, detail)),
        }
    }

    /// Returns the sequence number of the verdict event.
    fn pharmacologist(&mut self) -> Step<u64> {
        let smiles = self.state.current_smiles.clone().unwrap_or_default();
        let res = self.res();
        let assessed = assess(&smiles, &res.admet, &res.pharm);
        let a = match assessed {
            Ok(a) => a,
            Err(e) => {
                return Err(self.fail(PHARMACOLOGIST, FailureReason::ModuleError, e.to_string()))
            }
        };
        self.tool(PHARMACOLOGIST, "predict_admet", json!(a.admet));
        let pk = match &a.pk_error {
            Some(e) => json!({ "error": e }),
            None => json!(a.verdict.pk),
        };
        self.tool(PHARMACOLOGIST, "simulate_pbpk", pk);
        let seq = self.event(
            PHARMACOLOGIST,
            EventKind::Decision,
            json!({
                "smiles": a.canonical_smiles, "decision": a.verdict.decision,
                "categories": a.verdict.categories, "feedback": a.verdict.feedback,
            }),
        );
        if let Some(c) = self.candidates.last_mut() {
            c.pk_error = a.pk_error.clone();
        }
        self.state.record_verdict(a.verdict);
        Ok(seq)
    }

    fn router(&mut self, verdict_seq: u64) -> Step<Option<Outcome>> {
        let next = match should_continue(&self.state) {
            Ok(n) => n,
            Err(e) => return Err(self.fail(ROUTER, FailureReason::ModuleError, e.to_string())),
        };
        let next = match next {
            Next::End(Outcome::Failure { reason, detail, .. }) => Next::End(Outcome::Failure {
                reason,
                detail,
                cause_seq: Some(verdict_seq),
            }),
            n => n,
        };
        self.event(
            ROUTER,
            EventKind::Decision,
            json!({ "iteration": self.state.iteration, "route": next }),
        );
        match next {
            Next::End(o) => Ok(Some(o)),
            Next::Chemist => Ok(None),
        }
    }

    fn steering_gate(&mut self) -> Step<()> {
        let last = self
            .state
            .feedback_history
            .last()
            .expect("a verdict precedes steering");
        let ctx = SteeringContext {
            iteration: self.state.iteration,
            smiles: self.state.current_smiles.clone().unwrap_or_default(),
            categories: last.categories.clone(),
            feedback: last.feedback.clone(),
        };
        let text = match self.provider.steer(&ctx) {
            Ok(t) => t,
            Err(e) => return Err(self.fail(GATE, FailureReason::ModuleError, e.to_string())),
        };
        let cats: BTreeSet<Category> = text
            .as_deref()
            .map(|t| self.res().steering.categories(t))
            .unwrap_or_default();
        let names: Vec<&str> = cats.iter().map(|c| c.as_str()).collect();
        self.event(
            GATE,
            EventKind::Decision,
            json!({ "gate": "steering", "text": text, "categories": names }),
        );
        self.steering.extend(cats);
        Ok(())
    }

    fn run(&mut self) -> Outcome {
        let r = (|| -> Step<Outcome> {
            match load_resources(self.req) {
                Ok(r) => {
                    self.tool(
                        RUN,
                        "load_fixtures",
                        json!({ "nodes": r.store.node_count(), "edges": r.store.edge_count(), "seeds": r.seeds.len() }),
                    );
                    self.res = Some(r);
                }
                Err(e) => return Err(self.fail(RUN, FailureReason::ModuleError, e)),
            }
            let task = json!({ "task": self.state.task });
            let (shortlist, proposed) = self.node(BIOLOGIST, task, |s| s.biologist())?;
            self.node(GATE, json!({ "gate": "target_approval" }), |s| {
                s.target_gate(shortlist, proposed)
            })?;
            loop {
                let it = json!({ "iteration": self.state.iteration + 1 });
                self.node(CHEMIST, it.clone(), |s| s.chemist())?;
                self.node(GUARDRAIL, it.clone(), |s| s.guardrail())?;
                let seq = self.node(PHARMACOLOGIST, it.clone(), |s| s.pharmacologist())?;
                if let Some(end) = self.node(ROUTER, it, |s| s.router(seq))? {
                    return Ok(end);
                }
                if let Some(s) = self.state.current_smiles.clone() {
                    self.rejected.insert(s);
                }
                self.node(GATE, json!({ "gate": "steering" }), |s| s.steering_gate())?;
            }
        })();
        match r {
            Ok(o) | Err(o) => o,
        }
    }
}

/// Runs the full loop with a fresh trace.
pub fn run_pipeline(request: &PipelineRequest, provider: &mut dyn DecisionProvider) -> RunResult {
    run_pipeline_traced(request, provider, Trace::new())
}

/// As [`run_pipeline`], appending to `trace` (which may carry an observer).
pub fn run_pipeline_traced(
    request: &PipelineRequest,
    provider: &mut dyn DecisionProvider,
    trace: Trace,
) -> RunResult {
    let seed = request.config.optimizer.seed;
    let max_iterations = request.config.max_iterations.max(1);
    let mut state = AgentState::new(&request.input, "", max_iterations, seed, trace);
    state
        .trace
        .push(RUN, EventKind::Enter, json!({ "input": request.input }));
    let normalized = normalize_input(&request.input);
    let mut runner = Runner {
        req: request,
        provider,
        state,
        res: None,
        candidates: Vec::new(),
        rejected: BTreeSet::new(),
        steering: BTreeSet::new(),
    };
    let outcome = match normalized {
        Ok(task) => {
            runner.state.task = task.clone();
            runner.tool(RUN, "normalize_input", json!({ "task": task }));
            runner.run()
        }
        Err(e) => runner.fail(RUN, FailureReason::ModuleError, e.to_string()),
    };
    runner.event(RUN, EventKind::Exit, json!({ "outcome": outcome }));
    let Runner {
        state, candidates, ..
    } = runner;
    debug_assert!(
        !state.is_approved
            || state
                .current_smiles
                .as_deref()
                .is_some_and(|s| parse_smiles(s).is_ok())
    );
    RunResult {
        input: state.input,
        task: state.task,
        final_smiles: match &outcome {
            Outcome::Success { smiles } => Some(smiles.clone()),
            Outcome::Failure { .. } => None,
        },
        outcome,
        target: state.target,
        iterations: state.iteration,
        candidates,
        verdicts: state.feedback_history,
        penalties: state.penalties,
        seed,
        trace: state.trace.into_events(),
    }
}
