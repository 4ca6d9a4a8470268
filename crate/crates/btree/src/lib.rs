//! Behaviour trees driven by explicit ticks.
//!
//! A tree is a [`Node`] with children. Each [`Node::tick`] walks the tree from that node
//! and returns a [`Status`]. Nodes keep per-execution state (counters, latches, shuffle
//! orders); it is cleared when the node finishes with `Success` or `Failure`, or by
//! [`Node::reset`].
//!
//! ```
//! use simsync_btree::{Node, Status};
//!
//! let mut tree = Node::sequence(vec![
//!     Node::success(),
//!     Node::inverter(Node::failure()),
//! ]);
//! assert_eq!(tree.tick(), Status::Success);
//! ```
//!
//! Composite nodes do not remember a running child: every tick starts again from the
//! first child. Trees are ticked by one caller at a time and never spawn threads.

mod node;
mod rng;

#[cfg(feature = "description")]
pub mod description;

pub use node::{
    BuildError, CompositeKind, DecoratorKind, Leaf, LeafKind, Node, NodeKind, StatusMapping,
};
pub use rng::SplitMix64;

use std::fmt;

/// Result of ticking a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "description", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "description", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Status {
    Success,
    Failure,
    Running,
    /// The subtree is structurally broken.
    Invalid,
}

impl Status {
    pub const ALL: [Status; 4] = [Status::Success, Status::Failure, Status::Running, Status::Invalid];

    /// `Success` or `Failure`.
    pub fn is_complete(self) -> bool {
        matches!(self, Status::Success | Status::Failure)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Success => "SUCCESS",
            Status::Failure => "FAILURE",
            Status::Running => "RUNNING",
            Status::Invalid => "INVALID",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
