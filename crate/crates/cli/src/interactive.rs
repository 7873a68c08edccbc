//! Terminal decision provider: shows each gate on `out` and reads the answer
//! from `input`, one line per decision.

use std::io::{BufRead, Write};

use leadforge_core::orchestrator::{
    DecisionProvider, OrchestratorError, SteeringContext, TargetDecision, TargetGateContext,
};

pub struct Interactive<R, W> {
    input: R,
    out: W,
}

impl<R: BufRead, W: Write> Interactive<R, W> {
    pub fn new(input: R, out: W) -> Self {
        Interactive { input, out }
    }

    fn say(&mut self, text: &str) -> Result<(), OrchestratorError> {
        write!(self.out, "{text}")
            .and_then(|_| self.out.flush())
            .map_err(|e| OrchestratorError::Provider(e.to_string()))
    }

    /// `None` at end of input.
    fn line(&mut self) -> Result<Option<String>, OrchestratorError> {
        let mut buf = String::new();
        match self.input.read_line(&mut buf) {
            Ok(0) => Ok(None),
            Ok(_) => Ok(Some(buf.trim().to_string())),
            Err(e) => Err(OrchestratorError::Provider(e.to_string())),
        }
    }
}

/// `""`, `y`, `approve` accept the proposal; `approve NAME` or a bare
/// shortlisted name picks another; `n`, `reject [reason]` reject.
pub fn parse_target_answer(answer: &str, ctx: &TargetGateContext) -> Option<TargetDecision> {
    let (head, rest) = answer
        .split_once(char::is_whitespace)
        .unwrap_or((answer, ""));
    let rest = rest.trim();
    match head.to_ascii_lowercase().as_str() {
        "" | "y" | "yes" | "approve" if rest.is_empty() => {
            Some(TargetDecision::Approve { target: None })
        }
        "approve" => Some(TargetDecision::Approve {
            target: Some(rest.to_string()),
        }),
        "n" | "no" | "reject" => Some(TargetDecision::Reject {
            reason: if rest.is_empty() {
                "rejected at the terminal".into()
            } else {
                rest.to_string()
            },
        }),
        _ => ctx
            .shortlist
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(answer))
            .map(|c| TargetDecision::Approve {
                target: Some(c.name.clone()),
            }),
    }
}

impl<R: BufRead, W: Write> DecisionProvider for Interactive<R, W> {
    fn approve_target(
        &mut self,
        ctx: &TargetGateContext,
    ) -> Result<TargetDecision, OrchestratorError> {
        let mut text = format!("\nTask: {}\nShortlisted targets:\n", ctx.task);
        for (i, c) in ctx.shortlist.iter().enumerate() {
            text.push_str(&format!(
                "  {}. {:<10} score {:.3}  paths {:>3}  pdb {}\n",
                i + 1,
                c.name,
                c.score,
                c.evidence.len(),
                c.pdb.as_deref().unwrap_or("-")
            ));
        }
        text.push_str(&format!(
            "Proposed: {}\n",
            ctx.proposed.as_deref().unwrap_or("none")
        ));
        loop {
            self.say(&format!(
                "{text}[approve | approve NAME | reject REASON] > "
            ))?;
            let Some(answer) = self.line()? else {
                return Err(OrchestratorError::Provider(
                    "input closed at the target gate".into(),
                ));
            };
            match parse_target_answer(&answer, ctx) {
                Some(d) => return Ok(d),
                None => text = format!("Not understood: '{answer}'\n"),
            }
        }
    }

    fn steer(&mut self, ctx: &SteeringContext) -> Result<Option<String>, OrchestratorError> {
        let mut text = format!(
            "\nCandidate {} rejected ({} so far):\n",
            ctx.smiles, ctx.iteration
        );
        for f in &ctx.feedback {
            text.push_str(&format!("  - {f}\n"));
        }
        self.say(&format!(
            "{text}Steering for the next round (blank for none) > "
        ))?;
        Ok(self.line()?.filter(|l| !l.is_empty()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> TargetGateContext {
        TargetGateContext {
            task: "t".into(),
            proposed: Some("HNF1B".into()),
            shortlist: vec![],
        }
    }

    #[test]
    fn answers() {
        let c = ctx();
        assert_eq!(
            parse_target_answer("", &c),
            Some(TargetDecision::Approve { target: None })
        );
        assert_eq!(
            parse_target_answer("approve TP53", &c),
            Some(TargetDecision::Approve {
                target: Some("TP53".into())
            })
        );
        assert!(
            matches!(parse_target_answer("reject too risky", &c), Some(TargetDecision::Reject { reason }) if reason == "too risky")
        );
        assert_eq!(parse_target_answer("maybe", &c), None);
    }

    #[test]
    fn reads_gates_from_input() {
        let input = b"what\napprove HNF1B\n  \n" as &[u8];
        let mut out = Vec::new();
        let mut p = Interactive::new(input, &mut out);
        assert_eq!(
            p.approve_target(&ctx()).unwrap(),
            TargetDecision::Approve {
                target: Some("HNF1B".into())
            }
        );
        let sc = SteeringContext {
            iteration: 1,
            smiles: "C".into(),
            categories: vec![],
            feedback: vec!["too fast".into()],
        };
        assert_eq!(p.steer(&sc).unwrap(), None);
        // input exhausted
        assert!(p.approve_target(&ctx()).is_err());
        let shown = String::from_utf8(out).unwrap();
        assert!(shown.contains("Not understood: 'what'"));
        assert!(shown.contains("too fast"));
    }
}
