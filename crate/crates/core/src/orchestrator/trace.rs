use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::OrchestratorError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Enter,
    ToolCall,
    Decision,
    Exit,
}

/// One line of the run trace. `ts_ms` is the only wall-clock field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub node: String,
    pub kind: EventKind,
    pub payload: Value,
    pub ts_ms: u64,
}

type Observer = Box<dyn FnMut(&TraceEvent) + Send>;

/// Append-only event log. An optional observer sees every event as it is
/// appended (used by the service to expose a live trace).
#[derive(Default)]
pub struct Trace {
    events: Vec<TraceEvent>,
    observer: Option<Observer>,
}

impl std::fmt::Debug for Trace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trace")
            .field("events", &self.events.len())
            .finish()
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn with_observer(observer: impl FnMut(&TraceEvent) + Send + 'static) -> Self {
        Trace {
            events: Vec::new(),
            observer: Some(Box::new(observer)),
        }
    }

    /// Appends an event and returns its sequence number.
    pub fn push(&mut self, node: &str, kind: EventKind, payload: Value) -> u64 {
        let seq = self.events.len() as u64;
        let ev = TraceEvent {
            seq,
            node: node.to_string(),
            kind,
            payload,
            ts_ms: now_ms(),
        };
        if let Some(obs) = self.observer.as_mut() {
            obs(&ev);
        }
        self.events.push(ev);
        seq
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }
}

/// One JSON object per line.
pub fn to_jsonl(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<TraceEvent>, OrchestratorError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| OrchestratorError::Parse {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Checks that sequence numbers are dense from 0 and that enter/exit events
/// nest properly with every entry closed.
pub fn check_complete(events: &[TraceEvent]) -> Result<(), String> {
    let mut open: Vec<&str> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if e.seq != i as u64 {
            return Err(format!("event {i} has seq {}", e.seq));
        }
        match e.kind {
            EventKind::Enter => open.push(&e.node),
            EventKind::Exit => match open.pop() {
                Some(n) if n == e.node => {}
                Some(n) => {
                    return Err(format!(
                        "exit of {} at seq {} while {n} is open",
                        e.node, e.seq
                    ))
                }
                None => return Err(format!("exit of {} at seq {} without entry", e.node, e.seq)),
            },
            EventKind::ToolCall | EventKind::Decision => {
                if open.last() != Some(&e.node.as_str()) {
                    return Err(format!(
                        "{:?} event of {} at seq {} outside its node",
                        e.kind, e.node, e.seq
                    ));
                }
            }
        }
    }
    match open.last() {
        Some(n) => Err(format!("{n} never exits")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn dense_and_nested() {
        let mut t = Trace::new();
        t.push("Run", EventKind::Enter, json!({}));
        t.push("Biologist", EventKind::Enter, json!({}));
        t.push("Biologist", EventKind::ToolCall, json!({"tool": "x"}));
        t.push("Biologist", EventKind::Exit, json!({}));
        assert!(check_complete(t.events()).is_err());
        t.push("Run", EventKind::Exit, json!({}));
        assert_eq!(check_complete(t.events()), Ok(()));
        let back = parse_jsonl(&to_jsonl(t.events())).unwrap();
        assert_eq!(back, t.events());
    }

    #[test]
    fn observer_sees_events() {
        use std::sync::{Arc, Mutex};
        let seen = Arc::new(Mutex::new(Vec::new()));
        let s = seen.clone();
        let mut t = Trace::with_observer(move |e| s.lock().unwrap().push(e.seq));
        t.push("A", EventKind::Enter, Value::Null);
        t.push("A", EventKind::Exit, Value::Null);
        assert_eq!(*seen.lock().unwrap(), vec![0, 1]);
    }

    #[test]
    fn mismatched_exit() {
        let ev = |seq, node: &str, kind| TraceEvent {
            seq,
            node: node.into(),
            kind,
            payload: Value::Null,
            ts_ms: 0,
        };
        let bad = [ev(0, "A", EventKind::Enter), ev(1, "B", EventKind::Exit)];
        assert!(check_complete(&bad).is_err());
        let gap = [ev(0, "A", EventKind::Enter), ev(2, "A", EventKind::Exit)];
        assert!(check_complete(&gap).is_err());
    }
}
