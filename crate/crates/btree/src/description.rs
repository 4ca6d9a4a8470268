//! Text descriptions of trees, for fixtures and configuration.
//!
//! A description is nested JSON: every node has a `kind`, optional `params` and optional
//! `children`.
//!
//! ```json
//! {"kind": "Sequence", "children": [
//!   {"kind": "Limit", "params": {"count": 2}, "children": [{"kind": "Running"}]},
//!   {"kind": "Condition", "params": {"target": "FAILURE"}, "children": [{"kind": "Failure"}]},
//!   {"kind": "RandomSelector", "params": {"seed": 7}, "children": [{"kind": "Success"}]}
//! ]}
//! ```
//!
//! | kind | params |
//! |---|---|
//! | `Success`, `Failure`, `Running` | none |
//! | `Condition` | `target`: `SUCCESS`, `FAILURE` or `RUNNING` |
//! | `Limit`, `Repeater` | `count` |
//! | `StatusMap` | `mapping`, e.g. `RunningIsFailure` |
//! | `Inverter`, `Succeeder`, `UntilFail` | none |
//! | `Selector`, `Sequence`, `ParallelSequence`, `ParallelSelector` | none |
//! | `RandomSelector`, `RandomSequence` | `seed` (default 0) |
//!
//! Action leaves carry code and cannot be described.

use serde::{Deserialize, Serialize};

use crate::{BuildError, CompositeKind, DecoratorKind, LeafKind, Node, NodeKind, Status, StatusMapping};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDescription {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeDescription>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<StatusMapping>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Params {
    fn is_empty(&self) -> bool {
        *self == Params::default()
    }
}

#[derive(Debug)]
pub enum DescriptionError {
    Json(serde_json::Error),
    UnknownKind(String),
    MissingParam { kind: String, param: &'static str },
    Build(BuildError),
    Action(String),
}

impl std::fmt::Display for DescriptionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DescriptionError::Json(e) => write!(f, "malformed description: {e}"),
            DescriptionError::UnknownKind(k) => write!(f, "unknown node kind {k:?}"),
            DescriptionError::MissingParam { kind, param } => write!(f, "{kind} needs param {param:?}"),
            DescriptionError::Build(e) => write!(f, "{e}"),
            DescriptionError::Action(name) => write!(f, "action leaf {name:?} cannot be described"),
        }
    }
}

impl std::error::Error for DescriptionError {}

impl NodeDescription {
    pub fn from_json(text: &str) -> Result<Self, DescriptionError> {
        serde_json::from_str(text).map_err(DescriptionError::Json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptions always serialize")
    }

    fn node_kind(&self) -> Result<(NodeKind, Option<u64>), DescriptionError> {
        let need = |param: &'static str| DescriptionError::MissingParam {
            kind: self.kind.clone(),
            param,
        };
        let p = &self.params;
        let dec = |d| Ok((NodeKind::Decorator(d), None));
        let comp = |c| Ok((NodeKind::Composite(c), None));
        match self.kind.as_str() {
            "Success" => Ok((NodeKind::Leaf(LeafKind::Success), None)),
            "Failure" => Ok((NodeKind::Leaf(LeafKind::Failure), None)),
            "Running" => Ok((NodeKind::Leaf(LeafKind::Running), None)),
            "Condition" => dec(DecoratorKind::Condition(p.target.ok_or_else(|| need("target"))?)),
            "Limit" => dec(DecoratorKind::Limit(p.count.ok_or_else(|| need("count"))?)),
            "Repeater" => dec(DecoratorKind::Repeater(p.count.ok_or_else(|| need("count"))?)),
            "StatusMap" => dec(DecoratorKind::Map(p.mapping.ok_or_else(|| need("mapping"))?)),
            "Inverter" => dec(DecoratorKind::Inverter),
            "Succeeder" => dec(DecoratorKind::Succeeder),
            "UntilFail" => dec(DecoratorKind::UntilFail),
            "Selector" => comp(CompositeKind::Selector),
            "Sequence" => comp(CompositeKind::Sequence),
            "ParallelSequence" => comp(CompositeKind::ParallelSequence),
            "ParallelSelector" => comp(CompositeKind::ParallelSelector),
            "RandomSelector" => Ok((NodeKind::Composite(CompositeKind::RandomSelector), Some(p.seed.unwrap_or(0)))),
            "RandomSequence" => Ok((NodeKind::Composite(CompositeKind::RandomSequence), Some(p.seed.unwrap_or(0)))),
            other => Err(DescriptionError::UnknownKind(other.to_string())),
        }
    }

    /// Builds the tree, rejecting structural violations.
    pub fn build(&self) -> Result<Node, DescriptionError> {
        let (kind, seed) = self.node_kind()?;
        let children = self.children.iter().map(|c| c.build()).collect::<Result<Vec<_>, _>>()?;
        let node = Node::new(kind, children).map_err(DescriptionError::Build)?;
        Ok(match seed {
            Some(s) => node.with_seed(s),
            None => node,
        })
    }

    /// Builds the tree as written; broken nodes tick `Invalid`.
    pub fn build_unchecked(&self) -> Result<Node, DescriptionError> {
        let (kind, seed) = self.node_kind()?;
        let children = self
            .children
            .iter()
            .map(|c| c.build_unchecked())
            .collect::<Result<Vec<_>, _>>()?;
        let node = Node::new_unchecked(kind, children);
        Ok(match seed {
            Some(s) => node.with_seed(s),
            None => node,
        })
    }

    /// Describes a tree. Random composites are described without their seed.
    pub fn describe(node: &Node) -> Result<Self, DescriptionError> {
        let mut params = Params::default();
        match node.kind() {
            NodeKind::Action(leaf) => return Err(DescriptionError::Action(leaf.name().to_string())),
            NodeKind::Decorator(DecoratorKind::Condition(t)) => params.target = Some(*t),
            NodeKind::Decorator(DecoratorKind::Limit(n) | DecoratorKind::Repeater(n)) => params.count = Some(*n),
            NodeKind::Decorator(DecoratorKind::Map(m)) => params.mapping = Some(*m),
            _ => {}
        }
        Ok(NodeDescription {
            kind: node.kind().label().to_string(),
            params,
            children: node.children().iter().map(Self::describe).collect::<Result<_, _>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{"kind": "Sequence", "children": [
      {"kind": "Limit", "params": {"count": 2}, "children": [{"kind": "Success"}]},
      {"kind": "Condition", "params": {"target": "FAILURE"}, "children": [{"kind": "Failure"}]},
      {"kind": "StatusMap", "params": {"mapping": "RunningIsSuccess"}, "children": [{"kind": "Running"}]},
      {"kind": "RandomSelector", "params": {"seed": 7}, "children": [{"kind": "Failure"}, {"kind": "Success"}]}
    ]}"#;

    #[test]
    fn fixture_builds_and_ticks() {
        let d = NodeDescription::from_json(FIXTURE).unwrap();
        let mut tree = d.build().unwrap();
        assert_eq!(tree.tick(), Status::Success);
        let again = NodeDescription::from_json(&NodeDescription::describe(&tree).unwrap().to_json()).unwrap();
        let mut stripped = d.clone();
        stripped.children[3].params.seed = None;
        assert_eq!(again, stripped);
    }

    #[test]
    fn structural_errors() {
        let bad = NodeDescription::from_json(r#"{"kind": "Inverter"}"#).unwrap();
        assert!(matches!(bad.build(), Err(DescriptionError::Build(_))));
        assert_eq!(bad.build_unchecked().unwrap().tick(), Status::Invalid);
        let missing = NodeDescription::from_json(r#"{"kind": "Limit", "children": [{"kind": "Success"}]}"#).unwrap();
        assert!(matches!(missing.build(), Err(DescriptionError::MissingParam { .. })));
        let unknown = NodeDescription::from_json(r#"{"kind": "Teleport"}"#).unwrap();
        assert!(matches!(unknown.build(), Err(DescriptionError::UnknownKind(_))));
    }
}
