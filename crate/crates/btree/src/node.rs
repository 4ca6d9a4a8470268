use std::fmt;

use crate::{SplitMix64, Status};

/// A user-defined leaf.
pub trait Leaf: Send {
    fn tick(&mut self) -> Status;

    /// Called when the enclosing execution finishes or the tree is reset.
    fn reset(&mut self) {}

    fn name(&self) -> &str {
        "action"
    }
}

struct FnLeaf<F> {
    name: String,
    f: F,
}

impl<F: FnMut() -> Status + Send> Leaf for FnLeaf<F> {
    fn tick(&mut self) -> Status {
        (self.f)()
    }

    fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for dyn Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Leaf({:?})", self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LeafKind {
    Success,
    Failure,
    Running,
}

/// Source-to-target status rewrites, named after what they do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "description", derive(serde::Serialize, serde::Deserialize))]
pub enum StatusMapping {
    RunningIsFailure,
    RunningIsSuccess,
    FailureIsSuccess,
    FailureIsRunning,
    SuccessIsRunning,
    SuccessIsFailure,
}

impl StatusMapping {
    pub const ALL: [StatusMapping; 6] = [
        StatusMapping::RunningIsFailure,
        StatusMapping::RunningIsSuccess,
        StatusMapping::FailureIsSuccess,
        StatusMapping::FailureIsRunning,
        StatusMapping::SuccessIsRunning,
        StatusMapping::SuccessIsFailure,
    ];

    pub fn source(self) -> Status {
        match self {
            StatusMapping::RunningIsFailure | StatusMapping::RunningIsSuccess => Status::Running,
            StatusMapping::FailureIsSuccess | StatusMapping::FailureIsRunning => Status::Failure,
            StatusMapping::SuccessIsRunning | StatusMapping::SuccessIsFailure => Status::Success,
        }
    }

    pub fn target(self) -> Status {
        match self {
            StatusMapping::RunningIsFailure | StatusMapping::SuccessIsFailure => Status::Failure,
            StatusMapping::RunningIsSuccess | StatusMapping::FailureIsSuccess => Status::Success,
            StatusMapping::FailureIsRunning | StatusMapping::SuccessIsRunning => Status::Running,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoratorKind {
    /// `Success` when the child returns the target status, `Failure` otherwise.
    Condition(Status),
    /// Ticks the child at most this many times per execution, then fails.
    Limit(u32),
    /// Runs the child to completion this many times, then succeeds.
    Repeater(u32),
    Inverter,
    Succeeder,
    UntilFail,
    Map(StatusMapping),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompositeKind {
    Selector,
    Sequence,
    ParallelSequence,
    ParallelSelector,
    RandomSelector,
    RandomSequence,
}

#[derive(Debug)]
pub enum NodeKind {
    Leaf(LeafKind),
    Action(Box<dyn Leaf>),
    Decorator(DecoratorKind),
    Composite(CompositeKind),
}

impl NodeKind {
    pub fn label(&self) -> &str {
        match self {
            NodeKind::Leaf(LeafKind::Success) => "Success",
            NodeKind::Leaf(LeafKind::Failure) => "Failure",
            NodeKind::Leaf(LeafKind::Running) => "Running",
            NodeKind::Action(leaf) => leaf.name(),
            NodeKind::Decorator(d) => match d {
                DecoratorKind::Condition(_) => "Condition",
                DecoratorKind::Limit(_) => "Limit",
                DecoratorKind::Repeater(_) => "Repeater",
                DecoratorKind::Inverter => "Inverter",
                DecoratorKind::Succeeder => "Succeeder",
                DecoratorKind::UntilFail => "UntilFail",
                DecoratorKind::Map(_) => "StatusMap",
            },
            NodeKind::Composite(c) => match c {
                CompositeKind::Selector => "Selector",
                CompositeKind::Sequence => "Sequence",
                CompositeKind::ParallelSequence => "ParallelSequence",
                CompositeKind::ParallelSelector => "ParallelSelector",
                CompositeKind::RandomSelector => "RandomSelector",
                CompositeKind::RandomSequence => "RandomSequence",
            },
        }
    }

    fn check(&self, children: usize) -> Result<(), BuildError> {
        let expected = match self {
            NodeKind::Leaf(_) | NodeKind::Action(_) => "no children",
            NodeKind::Decorator(_) => "exactly one child",
            NodeKind::Composite(_) => "at least one child",
        };
        let ok = match self {
            NodeKind::Leaf(_) | NodeKind::Action(_) => children == 0,
            NodeKind::Decorator(_) => children == 1,
            NodeKind::Composite(_) => children >= 1,
        };
        if !ok {
            return Err(BuildError::ChildCount {
                node: self.label().to_string(),
                expected,
                found: children,
            });
        }
        match self {
            NodeKind::Decorator(DecoratorKind::Limit(0)) | NodeKind::Decorator(DecoratorKind::Repeater(0)) => {
                Err(BuildError::Parameter(format!("{} count must be at least 1", self.label())))
            }
            NodeKind::Decorator(DecoratorKind::Condition(Status::Invalid)) => {
                Err(BuildError::Parameter("Condition cannot target INVALID".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuildError {
    ChildCount { node: String, expected: &'static str, found: usize },
    Parameter(String),
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::ChildCount { node, expected, found } => {
                write!(f, "{node} takes {expected}, got {found}")
            }
            BuildError::Parameter(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for BuildError {}

/// A behaviour-tree node and its subtree.
#[derive(Debug)]
pub struct Node {
    kind: NodeKind,
    children: Vec<Node>,
    count: u32,
    latches: Vec<Option<Status>>,
    order: Option<Vec<usize>>,
    rng: Option<SplitMix64>,
}

impl Node {
    /// Builds a node after checking the child-count and parameter rules.
    pub fn new(kind: NodeKind, children: Vec<Node>) -> Result<Node, BuildError> {
        kind.check(children.len())?;
        Ok(Node::new_unchecked(kind, children))
    }

    /// Builds a node without checks. A broken node ticks `Invalid`.
    pub fn new_unchecked(kind: NodeKind, children: Vec<Node>) -> Node {
        Node {
            kind,
            children,
            count: 0,
            latches: Vec::new(),
            order: None,
            rng: None,
        }
    }

    fn build(kind: NodeKind, children: Vec<Node>) -> Node {
        match Node::new(kind, children) {
            Ok(n) => n,
            Err(e) => panic!("invalid behaviour tree node: {e}"),
        }
    }

    pub fn success() -> Node {
        Node::build(NodeKind::Leaf(LeafKind::Success), vec![])
    }

    pub fn failure() -> Node {
        Node::build(NodeKind::Leaf(LeafKind::Failure), vec![])
    }

    pub fn running() -> Node {
        Node::build(NodeKind::Leaf(LeafKind::Running), vec![])
    }

    pub fn leaf(leaf: impl Leaf + 'static) -> Node {
        Node::build(NodeKind::Action(Box::new(leaf)), vec![])
    }

    /// A leaf backed by a closure.
    pub fn action(name: impl Into<String>, f: impl FnMut() -> Status + Send + 'static) -> Node {
        Node::leaf(FnLeaf { name: name.into(), f })
    }

    pub fn decorator(kind: DecoratorKind, child: Node) -> Node {
        Node::build(NodeKind::Decorator(kind), vec![child])
    }

    /// # Panics
    /// If `target` is `Invalid`.
    pub fn condition(target: Status, child: Node) -> Node {
        Node::decorator(DecoratorKind::Condition(target), child)
    }

    /// # Panics
    /// If `max_ticks` is zero.
    pub fn limit(max_ticks: u32, child: Node) -> Node {
        Node::decorator(DecoratorKind::Limit(max_ticks), child)
    }

    /// # Panics
    /// If `n` is zero.
    pub fn repeater(n: u32, child: Node) -> Node {
        Node::decorator(DecoratorKind::Repeater(n), child)
    }

    pub fn inverter(child: Node) -> Node {
        Node::decorator(DecoratorKind::Inverter, child)
    }

    pub fn succeeder(child: Node) -> Node {
        Node::decorator(DecoratorKind::Succeeder, child)
    }

    pub fn until_fail(child: Node) -> Node {
        Node::decorator(DecoratorKind::UntilFail, child)
    }

    pub fn map(mapping: StatusMapping, child: Node) -> Node {
        Node::decorator(DecoratorKind::Map(mapping), child)
    }

    /// # Panics
    /// If `children` is empty. Same for the other composite constructors.
    pub fn composite(kind: CompositeKind, children: Vec<Node>) -> Node {
        Node::build(NodeKind::Composite(kind), children)
    }

    pub fn selector(children: Vec<Node>) -> Node {
        Node::composite(CompositeKind::Selector, children)
    }

    pub fn sequence(children: Vec<Node>) -> Node {
        Node::composite(CompositeKind::Sequence, children)
    }

    pub fn parallel_sequence(children: Vec<Node>) -> Node {
        Node::composite(CompositeKind::ParallelSequence, children)
    }

    pub fn parallel_selector(children: Vec<Node>) -> Node {
        Node::composite(CompositeKind::ParallelSelector, children)
    }

    /// Selector over an order shuffled at the start of every execution.
    pub fn random_selector(children: Vec<Node>, seed: u64) -> Node {
        Node::composite(CompositeKind::RandomSelector, children).with_seed(seed)
    }

    pub fn random_sequence(children: Vec<Node>, seed: u64) -> Node {
        Node::composite(CompositeKind::RandomSequence, children).with_seed(seed)
    }

    /// Seeds the shuffle of a random composite. Ignored by other kinds.
    pub fn with_seed(mut self, seed: u64) -> Node {
        self.rng = Some(SplitMix64::new(seed));
        self
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn children(&self) -> &[Node] {
        &self.children
    }

    pub fn children_mut(&mut self) -> &mut [Node] {
        &mut self.children
    }

    /// The shuffled order of a random composite in the middle of an execution.
    pub fn current_order(&self) -> Option<&[usize]> {
        self.order.as_deref()
    }

    /// Checks the whole subtree.
    pub fn validate(&self) -> Result<(), BuildError> {
        self.kind.check(self.children.len())?;
        self.children.iter().try_for_each(Node::validate)
    }

    /// Clears per-execution state in the whole subtree. The shuffle generator keeps its stream.
    pub fn reset(&mut self) {
        self.clear_own_state();
        if let NodeKind::Action(leaf) = &mut self.kind {
            leaf.reset();
        }
        self.children.iter_mut().for_each(Node::reset);
    }

    fn clear_own_state(&mut self) {
        self.count = 0;
        self.latches.clear();
        self.order = None;
    }

    pub fn tick(&mut self) -> Status {
        if self.kind.check(self.children.len()).is_err() {
            return Status::Invalid;
        }
        let status = match self.kind {
            NodeKind::Leaf(LeafKind::Success) => return Status::Success,
            NodeKind::Leaf(LeafKind::Failure) => return Status::Failure,
            NodeKind::Leaf(LeafKind::Running) => return Status::Running,
            NodeKind::Action(ref mut leaf) => return leaf.tick(),
            NodeKind::Decorator(d) => self.tick_decorator(d),
            NodeKind::Composite(c) => self.tick_composite(c),
        };
        if status.is_complete() {
            // The execution is over; children left mid-execution start fresh next time.
            self.reset();
        }
        status
    }

    fn tick_decorator(&mut self, kind: DecoratorKind) -> Status {
        if let DecoratorKind::Limit(max) = kind {
            if self.count >= max {
                return Status::Failure;
            }
            self.count += 1;
            return self.children[0].tick();
        }
        let s = self.children[0].tick();
        if s == Status::Invalid {
            return s;
        }
        match kind {
            DecoratorKind::Condition(target) => {
                if s == target {
                    Status::Success
                } else {
                    Status::Failure
                }
            }
            DecoratorKind::Repeater(n) => {
                if s == Status::Running {
                    return s;
                }
                self.count += 1;
                if self.count >= n {
                    Status::Success
                } else {
                    Status::Running
                }
            }
            DecoratorKind::Inverter => match s {
                Status::Success => Status::Failure,
                Status::Failure => Status::Success,
                other => other,
            },
            DecoratorKind::Succeeder => match s {
                Status::Running => s,
                _ => Status::Success,
            },
            DecoratorKind::UntilFail => match s {
                Status::Failure => Status::Success,
                _ => Status::Running,
            },
            DecoratorKind::Map(m) => {
                if s == m.source() {
                    m.target()
                } else {
                    s
                }
            }
            DecoratorKind::Limit(_) => unreachable!(),
        }
    }

    fn tick_composite(&mut self, kind: CompositeKind) -> Status {
        match kind {
            CompositeKind::Selector => self.tick_ordered(Status::Success, None),
            CompositeKind::Sequence => self.tick_ordered(Status::Failure, None),
            CompositeKind::RandomSelector | CompositeKind::RandomSequence => {
                let order = match self.order.take() {
                    Some(o) => o,
                    None => {
                        let mut o: Vec<usize> = (0..self.children.len()).collect();
                        self.rng.get_or_insert_with(|| SplitMix64::new(0)).shuffle(&mut o);
                        o
                    }
                };
                let stop = if kind == CompositeKind::RandomSelector {
                    Status::Success
                } else {
                    Status::Failure
                };
                let s = self.tick_ordered(stop, Some(&order));
                self.order = Some(order);
                s
            }
            CompositeKind::ParallelSequence | CompositeKind::ParallelSelector => self.tick_parallel(kind),
        }
    }

    /// Ticks children in order until one returns `stop` or `Running`.
    fn tick_ordered(&mut self, stop: Status, order: Option<&[usize]>) -> Status {
        let n = self.children.len();
        for k in 0..n {
            let i = order.map_or(k, |o| o[k]);
            match self.children[i].tick() {
                Status::Running => return Status::Running,
                Status::Invalid => return Status::Invalid,
                s if s == stop => return s,
                _ => {}
            }
        }
        if stop == Status::Success {
            Status::Failure
        } else {
            Status::Success
        }
    }

    fn tick_parallel(&mut self, kind: CompositeKind) -> Status {
        let n = self.children.len();
        if self.latches.len() != n {
            self.latches = vec![None; n];
        }
        let mut invalid = false;
        for (child, latch) in self.children.iter_mut().zip(self.latches.iter_mut()) {
            if latch.is_some() {
                continue;
            }
            match child.tick() {
                s @ (Status::Success | Status::Failure) => *latch = Some(s),
                Status::Invalid => invalid = true,
                Status::Running => {}
            }
        }
        if invalid {
            return Status::Invalid;
        }
        let (decisive, other) = match kind {
            CompositeKind::ParallelSequence => (Status::Failure, Status::Success),
            _ => (Status::Success, Status::Failure),
        };
        if self.latches.contains(&Some(decisive)) {
            decisive
        } else if self.latches.iter().all(|l| *l == Some(other)) {
            other
        } else {
            Status::Running
        }
    }
}
