//! Human decision gates and the providers that answer them.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::kgraph::TargetCandidate;
use crate::pharmacologist::Category;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    TargetApproval,
    Steering,
}

impl Gate {
    pub fn as_str(self) -> &'static str {
        match self {
            Gate::TargetApproval => "target_approval",
            Gate::Steering => "steering",
        }
    }
}

/// What the human sees at the target gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetGateContext {
    pub task: String,
    /// First ranked candidate with a structure, if any.
    pub proposed: Option<String>,
    pub shortlist: Vec<TargetCandidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringContext {
    /// Number of verdicts so far.
    pub iteration: usize,
    pub smiles: String,
    pub categories: Vec<Category>,
    pub feedback: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum TargetDecision {
    /// `target` overrides the proposal with another shortlisted name.
    Approve {
        target: Option<String>,
    },
    Reject {
        reason: String,
    },
}

/// Answers the two gates of a run.
pub trait DecisionProvider {
    fn approve_target(
        &mut self,
        ctx: &TargetGateContext,
    ) -> Result<TargetDecision, OrchestratorError>;

    /// Free-text steering after a rejection; `None` means no extra guidance.
    fn steer(&mut self, ctx: &SteeringContext) -> Result<Option<String>, OrchestratorError>;
}

/// Approves every proposal and never steers.
#[derive(Clone, Copy, Debug, Default)]
pub struct AutoApprove;

impl DecisionProvider for AutoApprove {
    fn approve_target(
        &mut self,
        _: &TargetGateContext,
    ) -> Result<TargetDecision, OrchestratorError> {
        Ok(TargetDecision::Approve { target: None })
    }

    fn steer(&mut self, _: &SteeringContext) -> Result<Option<String>, OrchestratorError> {
        Ok(None)
    }
}

/// Replays decisions from a script. Each gate kind has its own queue; when a
/// queue runs dry the gate falls back to [`AutoApprove`] behaviour.
///
/// ```text
/// # comment
/// target approve            # accept the proposal
/// target approve HNF1B      # pick a shortlisted target by name
/// target reject too risky
/// steer improve metabolic stability
/// steer -                   # no steering this round
/// ```
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scripted {
    targets: VecDeque<TargetDecision>,
    steering: VecDeque<Option<String>>,
}

impl Scripted {
    pub fn new(targets: Vec<TargetDecision>, steering: Vec<Option<String>>) -> Self {
        Scripted {
            targets: targets.into(),
            steering: steering.into(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, OrchestratorError> {
        let mut s = Scripted::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| OrchestratorError::Parse {
                line: i + 1,
                reason,
            };
            let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match head.to_ascii_lowercase().as_str() {
                "target" => {
                    let (verb, arg) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                    let arg = arg.trim();
                    let d = match verb.to_ascii_lowercase().as_str() {
                        "approve" => TargetDecision::Approve {
                            target: (!arg.is_empty()).then(|| arg.to_string()),
                        },
                        "reject" => TargetDecision::Reject {
                            reason: if arg.is_empty() {
                                "rejected by script".into()
                            } else {
                                arg.into()
                            },
                        },
                        other => return Err(err(format!("unknown target action '{other}'"))),
                    };
                    s.targets.push_back(d);
                }
                "steer" => {
                    if rest.is_empty() {
                        return Err(err("steer needs text or '-'".into()));
                    }
                    s.steering
                        .push_back((rest != "-").then(|| rest.to_string()));
                }
                other => return Err(err(format!("unknown directive '{other}'"))),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|e| OrchestratorError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

impl DecisionProvider for Scripted {
    fn approve_target(
        &mut self,
        _: &TargetGateContext,
    ) -> Result<TargetDecision, OrchestratorError> {
        Ok(self
            .targets
            .pop_front()
            .unwrap_or(TargetDecision::Approve { target: None }))
    }

    fn steer(&mut self, _: &SteeringContext) -> Result<Option<String>, OrchestratorError> {
        Ok(self.steering.pop_front().flatten())
    }
}

/// Wire form of a human decision, tagged by gate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum DecisionPayload {
    TargetApproval {
        approve: bool,
        #[serde(default)]
        target: Option<String>,
        #[serde(default)]
        reason: Option<String>,
    },
    Steering {
        #[serde(default)]
        text: Option<String>,
    },
}

impl DecisionPayload {
    pub fn gate(&self) -> Gate {
        match self {
            DecisionPayload::TargetApproval { .. } => Gate::TargetApproval,
            DecisionPayload::Steering { .. } => Gate::Steering,
        }
    }

    /// `None` for steering payloads.
    pub fn target_decision(&self) -> Option<TargetDecision> {
        match self {
            DecisionPayload::TargetApproval {
                approve: true,
                target,
                ..
            } => Some(TargetDecision::Approve {
                target: target.clone(),
            }),
            DecisionPayload::TargetApproval {
                approve: false,
                reason,
                ..
            } => Some(TargetDecision::Reject {
                reason: reason.clone().unwrap_or_else(|| "rejected by user".into()),
            }),
            DecisionPayload::Steering { .. } => None,
        }
    }

    /// Blank text counts as no steering.
    pub fn steering_text(&self) -> Option<String> {
        match self {
            DecisionPayload::Steering { text } => text
                .as_ref()
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty()),
            _ => None,
        }
    }
}
