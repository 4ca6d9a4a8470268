//! Brute-force reference interpreter for behaviour trees.
//!
//! Written from the node rules alone, sharing only the status and kind enums with the
//! library. Leaves are scripted: leaf `k` returns `scripts[k][j]` on its `j`-th tick and
//! repeats the last entry once the script runs out. Random composites take their child
//! orders from a caller-supplied list, and [`explains`] searches every choice of orders.

use simsync_btree::{CompositeKind, DecoratorKind, Status, StatusMapping};

use Status::{Failure as F, Invalid as I, Running as R, Success as S};

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Scripted leaf with its id.
    Leaf(usize),
    Decorator(DecoratorKind, Box<Shape>),
    Composite(CompositeKind, Vec<Shape>),
}

impl Shape {
    pub fn leaf_count(&self) -> usize {
        match self {
            Shape::Leaf(_) => 1,
            Shape::Decorator(_, c) => c.leaf_count(),
            Shape::Composite(_, cs) => cs.iter().map(Shape::leaf_count).sum(),
        }
    }

    pub fn has_random(&self) -> bool {
        match self {
            Shape::Leaf(_) => false,
            Shape::Decorator(_, c) => c.has_random(),
            Shape::Composite(k, cs) => is_random(*k) || cs.iter().any(Shape::has_random),
        }
    }
}

fn is_random(k: CompositeKind) -> bool {
    matches!(k, CompositeKind::RandomSelector | CompositeKind::RandomSequence)
}

/// Per tick: the returned status and the leaf ids ticked, in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub results: Vec<Status>,
    pub ticked: Vec<Vec<usize>>,
}

struct State {
    count: u32,
    latches: Vec<Option<Status>>,
    order: Option<Vec<usize>>,
    children: Vec<State>,
}

impl State {
    fn fresh(shape: &Shape) -> State {
        let children = match shape {
            Shape::Leaf(_) => vec![],
            Shape::Decorator(_, c) => vec![State::fresh(c)],
            Shape::Composite(_, cs) => cs.iter().map(State::fresh).collect(),
        };
        State {
            count: 0,
            latches: vec![],
            order: None,
            children,
        }
    }

    fn clear(&mut self) {
        self.count = 0;
        self.latches.clear();
        self.order = None;
        self.children.iter_mut().for_each(State::clear);
    }
}

/// A random composite wanted one more order than was supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeedOrder {
    pub len: usize,
}

struct Machine<'a> {
    scripts: &'a [Vec<Status>],
    leaf_ticks: Vec<usize>,
    log: Vec<usize>,
    orders: &'a [Vec<usize>],
    used: usize,
}

fn mapped(m: StatusMapping, s: Status) -> Status {
    let (from, to) = match m {
        StatusMapping::RunningIsFailure => (R, F),
        StatusMapping::RunningIsSuccess => (R, S),
        StatusMapping::FailureIsSuccess => (F, S),
        StatusMapping::FailureIsRunning => (F, R),
        StatusMapping::SuccessIsRunning => (S, R),
        StatusMapping::SuccessIsFailure => (S, F),
    };
    if s == from {
        to
    } else {
        s
    }
}

impl Machine<'_> {
    fn tick(&mut self, shape: &Shape, st: &mut State) -> Result<Status, NeedOrder> {
        let out = match shape {
            Shape::Leaf(id) => {
                let script = &self.scripts[*id];
                let j = self.leaf_ticks[*id].min(script.len() - 1);
                self.leaf_ticks[*id] += 1;
                self.log.push(*id);
                return Ok(script[j]);
            }
            Shape::Decorator(kind, child) => self.decorator(*kind, child, st)?,
            Shape::Composite(kind, children) => self.composite(*kind, children, st)?,
        };
        if out == S || out == F {
            st.clear();
        }
        Ok(out)
    }

    fn decorator(&mut self, kind: DecoratorKind, child: &Shape, st: &mut State) -> Result<Status, NeedOrder> {
        if let DecoratorKind::Limit(max) = kind {
            if st.count == max {
                return Ok(F);
            }
            st.count += 1;
            return self.tick(child, &mut st.children[0]);
        }
        let s = self.tick(child, &mut st.children[0])?;
        if s == I {
            return Ok(I);
        }
        Ok(match kind {
            DecoratorKind::Condition(target) => {
                if s == target {
                    S
                } else {
                    F
                }
            }
            DecoratorKind::Repeater(n) => match s {
                R => R,
                _ => {
                    st.count += 1;
                    if st.count == n {
                        S
                    } else {
                        R
                    }
                }
            },
            DecoratorKind::Inverter => match s {
                S => F,
                F => S,
                other => other,
            },
            DecoratorKind::Succeeder => match s {
                R => R,
                _ => S,
            },
            DecoratorKind::UntilFail => match s {
                F => S,
                _ => R,
            },
            DecoratorKind::Map(m) => mapped(m, s),
            DecoratorKind::Limit(_) => unreachable!(),
        })
    }

    fn composite(&mut self, kind: CompositeKind, children: &[Shape], st: &mut State) -> Result<Status, NeedOrder> {
        let n = children.len();
        match kind {
            CompositeKind::Selector | CompositeKind::Sequence => {
                let order: Vec<usize> = (0..n).collect();
                self.ordered(kind == CompositeKind::Selector, &order, children, st)
            }
            CompositeKind::RandomSelector | CompositeKind::RandomSequence => {
                if st.order.is_none() {
                    let Some(o) = self.orders.get(self.used) else {
                        return Err(NeedOrder { len: n });
                    };
                    self.used += 1;
                    st.order = Some(o.clone());
                }
                let order = st.order.clone().unwrap();
                self.ordered(kind == CompositeKind::RandomSelector, &order, children, st)
            }
            CompositeKind::ParallelSequence | CompositeKind::ParallelSelector => {
                if st.latches.is_empty() {
                    st.latches = vec![None; n];
                }
                let mut invalid = false;
                for i in 0..n {
                    if st.latches[i].is_some() {
                        continue;
                    }
                    match self.tick(&children[i], &mut st.children[i])? {
                        I => invalid = true,
                        R => {}
                        done => st.latches[i] = Some(done),
                    }
                }
                if invalid {
                    return Ok(I);
                }
                let wins = if kind == CompositeKind::ParallelSelector { S } else { F };
                let loses = if wins == S { F } else { S };
                Ok(if st.latches.iter().any(|l| *l == Some(wins)) {
                    wins
                } else if st.latches.iter().all(|l| *l == Some(loses)) {
                    loses
                } else {
                    R
                })
            }
        }
    }

    fn ordered(&mut self, selector: bool, order: &[usize], children: &[Shape], st: &mut State) -> Result<Status, NeedOrder> {
        let stop = if selector { S } else { F };
        for &i in order {
            let s = self.tick(&children[i], &mut st.children[i])?;
            if s == stop || s == R || s == I {
                return Ok(s);
            }
        }
        Ok(if selector { F } else { S })
    }
}

/// Runs `ticks` ticks with random-composite orders taken from `orders` in draw order.
pub fn run(shape: &Shape, scripts: &[Vec<Status>], ticks: usize, orders: &[Vec<usize>]) -> Result<Trace, NeedOrder> {
    let mut st = State::fresh(shape);
    let mut m = Machine {
        scripts,
        leaf_ticks: vec![0; scripts.len()],
        log: Vec::new(),
        orders,
        used: 0,
    };
    let mut trace = Trace::default();
    for _ in 0..ticks {
        let s = m.tick(shape, &mut st)?;
        trace.results.push(s);
        trace.ticked.push(std::mem::take(&mut m.log));
    }
    Ok(trace)
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// True when some choice of random-composite orders makes the reference produce `observed`.
pub fn explains(shape: &Shape, scripts: &[Vec<Status>], observed: &Trace) -> bool {
    fn search(shape: &Shape, scripts: &[Vec<Status>], observed: &Trace, orders: &mut Vec<Vec<usize>>) -> bool {
        match run(shape, scripts, observed.results.len(), orders) {
            Ok(t) => &t == observed,
            Err(NeedOrder { len }) => permutations(len).into_iter().any(|p| {
                orders.push(p);
                let ok = search(shape, scripts, observed, orders);
                orders.pop();
                ok
            }),
        }
    }
    search(shape, scripts, observed, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_counts() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn selector_short_circuits() {
        let shape = Shape::Composite(CompositeKind::Selector, (0..3).map(Shape::Leaf).collect());
        let t = run(&shape, &[vec![F], vec![S], vec![S]], 1, &[]).unwrap();
        assert_eq!(t.results, [S]);
        assert_eq!(t.ticked, [vec![0, 1]]);
    }

    #[test]
    fn limit_walkthrough() {
        let shape = Shape::Decorator(DecoratorKind::Limit(2), Box::new(Shape::Leaf(0)));
        let t = run(&shape, &[vec![R]], 4, &[]).unwrap();
        assert_eq!(t.results, [R, R, F, R]);
        assert_eq!(t.ticked, [vec![0], vec![0], vec![], vec![0]]);
    }

    #[test]
    fn parallel_latches() {
        let shape = Shape::Composite(CompositeKind::ParallelSequence, vec![Shape::Leaf(0), Shape::Leaf(1)]);
        let t = run(&shape, &[vec![S], vec![R, S]], 2, &[]).unwrap();
        assert_eq!(t.results, [R, S]);
        assert_eq!(t.ticked, [vec![0, 1], vec![1]]);
    }

    #[test]
    fn random_orders_are_searched() {
        let shape = Shape::Composite(CompositeKind::RandomSelector, (0..3).map(Shape::Leaf).collect());
        let scripts = [vec![F], vec![F], vec![S]];
        let seen = Trace {
            results: vec![S],
            ticked: vec![vec![1, 2]],
        };
        assert!(explains(&shape, &scripts, &seen));
        let impossible = Trace {
            results: vec![S],
            ticked: vec![vec![2, 1]],
        };
        assert!(!explains(&shape, &scripts, &impossible));
        assert_eq!(run(&shape, &scripts, 1, &[]), Err(NeedOrder { len: 3 }));
    }
}
