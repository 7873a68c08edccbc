//! Session table and the decision provider that parks a run at its gates.

use std::collections::HashMap;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::sync::{Arc, Mutex, MutexGuard};

use leadforge_core::orchestrator::{
    DecisionPayload, DecisionProvider, EventKind, Gate, OrchestratorError, RunResult,
    SteeringContext, TargetDecision, TargetGateContext, TraceEvent,
};
use leadforge_core::pbpk::AdmetProfile;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    AwaitingDecision,
    FinishedSuccess,
    FinishedFailure,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Running => "running",
            RunStatus::AwaitingDecision => "awaiting_decision",
            RunStatus::FinishedSuccess => "finished_success",
            RunStatus::FinishedFailure => "finished_failure",
        }
    }

    pub fn is_finished(self) -> bool {
        matches!(
            self,
            RunStatus::FinishedSuccess | RunStatus::FinishedFailure
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingDecision {
    pub gate: Gate,
    pub context: Value,
}

/// Wire view of a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSession {
    pub id: String,
    pub status: RunStatus,
    pub pending_decision: Option<PendingDecision>,
    pub result: Option<RunResult>,
    /// Set when the run died without producing a result.
    pub error: Option<String>,
}

/// A molecule the pharmacologist has assessed, in assessment order.
#[derive(Clone, Debug, PartialEq)]
pub struct AssessedCandidate {
    pub smiles: Option<String>,
    pub admet: AdmetProfile,
}

pub(crate) struct Session {
    pub status: RunStatus,
    pub pending: Option<PendingDecision>,
    pub result: Option<RunResult>,
    pub error: Option<String>,
    pub trace: Vec<TraceEvent>,
    pub candidates: Vec<AssessedCandidate>,
    last_valid_smiles: Option<String>,
    waker: Option<SyncSender<DecisionPayload>>,
}

impl Session {
    pub fn new() -> Self {
        Session {
            status: RunStatus::Running,
            pending: None,
            result: None,
            error: None,
            trace: Vec::new(),
            candidates: Vec::new(),
            last_valid_smiles: None,
            waker: None,
        }
    }

    pub fn view(&self, id: &str) -> RunSession {
        RunSession {
            id: id.to_string(),
            status: self.status,
            pending_decision: self.pending.clone(),
            result: self.result.clone(),
            error: self.error.clone(),
        }
    }

    pub fn observe(&mut self, ev: &TraceEvent) {
        match (ev.node.as_str(), ev.kind) {
            ("Guardrail", EventKind::Decision) if ev.payload["result"] == "ok" => {
                self.last_valid_smiles = ev.payload["canonical"].as_str().map(str::to_string);
            }
            ("Pharmacologist", EventKind::ToolCall) if ev.payload["tool"] == "predict_admet" => {
                if let Ok(admet) = serde_json::from_value(ev.payload["result"].clone()) {
                    self.candidates.push(AssessedCandidate {
                        smiles: self.last_valid_smiles.clone(),
                        admet,
                    });
                }
            }
            _ => {}
        }
        self.trace.push(ev.clone());
    }

    /// Hands a decision to the parked run. At most one call succeeds per gate.
    pub fn deliver(&mut self, payload: DecisionPayload) -> Result<(), String> {
        let pending = match (&self.pending, self.status) {
            (Some(p), RunStatus::AwaitingDecision) => p.gate,
            _ => {
                return Err(format!(
                    "run is {}, no decision is pending",
                    self.status.as_str()
                ))
            }
        };
        if payload.gate() != pending {
            return Err(format!(
                "pending gate is {}, got a {} decision",
                pending.as_str(),
                payload.gate().as_str()
            ));
        }
        let waker = self.waker.take().ok_or("decision already taken")?;
        self.pending = None;
        self.status = RunStatus::Running;
        // a send failure means the run thread is gone; it will record its own end
        let _ = waker.send(payload);
        Ok(())
    }

    pub fn finish(&mut self, outcome: Result<RunResult, String>) {
        self.pending = None;
        self.waker = None;
        match outcome {
            Ok(r) => {
                self.status = if r.outcome.is_success() {
                    RunStatus::FinishedSuccess
                } else {
                    RunStatus::FinishedFailure
                };
                self.result = Some(r);
            }
            Err(e) => {
                self.status = RunStatus::FinishedFailure;
                self.error = Some(e);
            }
        }
    }
}

/// Every session behind one lock.
pub(crate) type Table = Arc<Mutex<HashMap<String, Session>>>;

pub(crate) fn lock(table: &Table) -> MutexGuard<'_, HashMap<String, Session>> {
    table.lock().unwrap_or_else(|e| e.into_inner())
}

/// Publishes each gate as the session's pending decision and blocks the run
/// thread until the HTTP side delivers an answer.
pub(crate) struct Parking {
    pub table: Table,
    pub id: String,
}

impl Parking {
    fn park(&mut self, gate: Gate, context: Value) -> Result<DecisionPayload, OrchestratorError> {
        let (tx, rx) = sync_channel(1);
        {
            let mut t = lock(&self.table);
            let s = t.get_mut(&self.id).ok_or_else(|| {
                OrchestratorError::Provider(format!("session {} vanished", self.id))
            })?;
            s.status = RunStatus::AwaitingDecision;
            s.pending = Some(PendingDecision { gate, context });
            s.waker = Some(tx);
        }
        rx.recv().map_err(|_| {
            OrchestratorError::Provider("session closed before a decision arrived".into())
        })
    }
}

impl DecisionProvider for Parking {
    fn approve_target(
        &mut self,
        ctx: &TargetGateContext,
    ) -> Result<TargetDecision, OrchestratorError> {
        let context =
            serde_json::to_value(ctx).map_err(|e| OrchestratorError::Provider(e.to_string()))?;
        let payload = self.park(Gate::TargetApproval, context)?;
        payload.target_decision().ok_or_else(|| {
            OrchestratorError::Provider("steering payload at the target gate".into())
        })
    }

    fn steer(&mut self, ctx: &SteeringContext) -> Result<Option<String>, OrchestratorError> {
        let context =
            serde_json::to_value(ctx).map_err(|e| OrchestratorError::Provider(e.to_string()))?;
        Ok(self.park(Gate::Steering, context)?.steering_text())
    }
}
