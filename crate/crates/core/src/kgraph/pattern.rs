//! Path pattern mini-grammar.
//!
//! ```text
//! pattern := node (hop node){1,3}
//! node    := "(" [Type] [":" "\"" name "\""] ")"
//! hop     := "-[" rels "]->" | "<-[" rels "]-" | "-[" rels "]-"
//! rels    := "*" | RELATION ("|" RELATION)*
//! ```
//!
//! Example: `(Disease:"pancreatic adenocarcinoma")-[DISEASE_PROTEIN]->(Gene_protein)`.
//! Whitespace between tokens is ignored.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use super::paths::Direction;
use super::{
    entity_linking, GraphStore, HopConstraint, KgError, NodeId, NodeType, Relation, MAX_HOPS,
};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub node_type: Option<NodeType>,
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathPattern {
    pub start: NodeSpec,
    pub hops: Vec<HopConstraint>,
}

impl PathPattern {
    /// Start nodes: entity-linked matches of the start name (restricted to
    /// the start type), or every node of the start type when no name is
    /// given.
    pub fn resolve_starts(&self, store: &GraphStore) -> Vec<NodeId> {
        let types: Vec<NodeType> = self.start.node_type.into_iter().collect();
        match &self.start.name {
            Some(name) => entity_linking(name, store, &types).ids(),
            None => store
                .nodes()
                .iter()
                .filter(|n| types.is_empty() || types.contains(&n.node_type))
                .map(|n| n.id)
                .collect(),
        }
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn err(&self, reason: impl Into<String>) -> KgError {
        KgError::Pattern {
            pos: self.pos,
            reason: reason.into(),
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), KgError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{tok}'")))
        }
    }

    fn ident(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_alphanumeric() || b"_/".contains(&self.s[self.pos]))
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap_or_default()
    }

    fn quoted(&mut self) -> Result<String, KgError> {
        self.expect("\"")?;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != b'"' {
            self.pos += 1;
        }
        if self.pos == self.s.len() {
            return Err(self.err("unterminated name"));
        }
        let name = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(name)
    }

    fn node(&mut self) -> Result<NodeSpec, KgError> {
        self.expect("(")?;
        let mut spec = NodeSpec::default();
        let at = self.pos;
        let ty = self.ident();
        if !ty.is_empty() {
            spec.node_type = Some(NodeType::parse(ty).ok_or(KgError::Pattern {
                pos: at,
                reason: format!("unknown node type '{ty}'"),
            })?);
        }
        if self.eat(":") {
            spec.name = Some(self.quoted()?);
        }
        self.expect(")")?;
        Ok(spec)
    }

    fn relations(&mut self) -> Result<Option<BTreeSet<Relation>>, KgError> {
        if self.eat("*") {
            return Ok(None);
        }
        let mut set = BTreeSet::new();
        loop {
            let at = self.pos;
            let name = self.ident();
            let r = Relation::parse(name).ok_or(KgError::Pattern {
                pos: at,
                reason: format!("unknown relation '{name}'"),
            })?;
            set.insert(r);
            if !self.eat("|") {
                return Ok(Some(set));
            }
        }
    }

    fn hop(&mut self) -> Result<(Option<BTreeSet<Relation>>, Direction), KgError> {
        let backward = self.eat("<-[");
        if !backward {
            self.expect("-[")?;
        }
        let rels = self.relations()?;
        self.expect("]")?;
        let dir = if backward {
            self.expect("-")?;
            Direction::Backward
        } else if self.eat("->") {
            Direction::Forward
        } else {
            self.expect("-")?;
            Direction::Either
        };
        Ok((rels, dir))
    }
}

pub fn parse_pattern(text: &str) -> Result<PathPattern, KgError> {
    let mut c = Cursor {
        s: text.as_bytes(),
        pos: 0,
    };
    let start = c.node()?;
    let mut hops = Vec::new();
    loop {
        c.skip_ws();
        if c.pos == c.s.len() {
            break;
        }
        let (relations, direction) = c.hop()?;
        let target = c.node()?;
        hops.push(HopConstraint {
            relations,
            direction,
            target_type: target.node_type,
            target_name: target.name,
        });
    }
    if hops.is_empty() || hops.len() > MAX_HOPS {
        return Err(KgError::InvalidHops(hops.len()));
    }
    Ok(PathPattern { start, hops })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let p = parse_pattern(
            r#"(Disease:"pancreatic adenocarcinoma")-[DISEASE_PROTEIN]->(Gene_protein)"#,
        )
        .unwrap();
        assert_eq!(p.start.node_type, Some(NodeType::Disease));
        assert_eq!(p.start.name.as_deref(), Some("pancreatic adenocarcinoma"));
        assert_eq!(
            p.hops,
            vec![HopConstraint::relation(Relation::DiseaseProtein).to_type(NodeType::GeneProtein)]
        );
    }

    #[test]
    fn wildcards_and_directions() {
        let p = parse_pattern(
            r#"(Disease) -[*]-> () <-[DRUG_PROTEIN|INDICATION]- (Drug) -[DRUG_DRUG]- (Drug)"#,
        )
        .unwrap();
        assert_eq!(p.hops.len(), 3);
        assert_eq!(p.hops[0].relations, None);
        assert_eq!(p.hops[1].direction, Direction::Backward);
        assert_eq!(p.hops[1].relations.as_ref().unwrap().len(), 2);
        assert_eq!(p.hops[2].direction, Direction::Either);
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(matches!(
            parse_pattern("(Disease)"),
            Err(KgError::InvalidHops(0))
        ));
        assert!(matches!(
            parse_pattern("(Disease)-[FOO]->()"),
            Err(KgError::Pattern { .. })
        ));
        assert!(matches!(
            parse_pattern("(Planet)-[*]->()"),
            Err(KgError::Pattern { .. })
        ));
        assert!(matches!(
            parse_pattern(r#"(Disease:"x)-[*]->()"#),
            Err(KgError::Pattern { .. })
        ));
        assert!(matches!(
            parse_pattern("()-[*]->()-[*]->()-[*]->()-[*]->()"),
            Err(KgError::InvalidHops(4))
        ));
    }
}
