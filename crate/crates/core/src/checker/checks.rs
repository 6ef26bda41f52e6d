//! Verdicts over an explored state graph.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::exception::ExceptionKind;
use crate::framework::channels as ch;
use crate::kernel::{Composition, EventPattern, Label, Local, SystemState};
use crate::sync::{MonitorView, ObjectFw};

use super::explore::StateGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "holds",
            Status::Fails => "fails",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentView {
    pub id: String,
    pub position: String,
    pub store: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateSummary {
    pub components: Vec<ComponentView>,
    pub monitors: Vec<MonitorView>,
}

impl StateSummary {
    pub fn of(comp: &Composition, s: &SystemState) -> Self {
        let mut monitors = Vec::new();
        let components = comp
            .components
            .iter()
            .zip(&s.locals)
            .map(|(c, l)| {
                if let Local::Machine(m) = l {
                    if let Some(o) = m.downcast::<ObjectFw>() {
                        monitors.push(MonitorView::from(o.monitor()));
                    }
                }
                ComponentView {
                    id: c.id.to_string(),
                    position: l.position(),
                    store: l.store_view(),
                }
            })
            .collect();
        StateSummary {
            components,
            monitors,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub trace: Vec<String>,
    pub final_state: StateSummary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub property: String,
    pub status: Status,
    pub counterexample: Option<Counterexample>,
    #[serde(skip)]
    pub trace_labels: Vec<Label>,
    #[serde(skip)]
    pub final_system_state: Option<SystemState>,
}

/// Count relations for [`Property::EventCount`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Relation {
    pub fn holds(self, a: u64, b: u64) -> bool {
        match self {
            Relation::Eq => a == b,
            Relation::Ne => a != b,
            Relation::Lt => a < b,
            Relation::Le => a <= b,
            Relation::Gt => a > b,
            Relation::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Ne => "!=",
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "=" | "==" | "eq" => Relation::Eq,
            "!=" | "ne" => Relation::Ne,
            "<" | "lt" => Relation::Lt,
            "<=" | "le" => Relation::Le,
            ">" | "gt" => Relation::Gt,
            ">=" | "ge" => Relation::Ge,
            _ => return Err(format!("unknown relation `{s}`")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Property {
    Deadlock,
    Divergence,
    Exception(ExceptionKind),
    /// No trace performs a matching event.
    Never(EventPattern),
    EventCount {
        pattern: EventPattern,
        relation: Relation,
        n: u64,
    },
    Order {
        before: EventPattern,
        after: EventPattern,
    },
    /// No two `first` events without a `second` in between.
    Alternation {
        first: EventPattern,
        second: EventPattern,
    },
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Deadlock => write!(f, "deadlock-free"),
            Property::Divergence => write!(f, "divergence-free"),
            Property::Exception(k) => write!(f, "no {k}"),
            Property::Never(p) => write!(f, "never({p})"),
            Property::EventCount {
                pattern,
                relation,
                n,
            } => {
                write!(f, "count({pattern}) {} {n}", relation.symbol())
            }
            Property::Order { before, after } => write!(f, "order({before}, {after})"),
            Property::Alternation { first, second } => write!(f, "alternation({first}, {second})"),
        }
    }
}

/// Every property a `--all` run checks.
pub fn standard_properties() -> Vec<Property> {
    let mut v = vec![Property::Deadlock, Property::Divergence];
    v.extend(ExceptionKind::ALL.iter().map(|k| Property::Exception(*k)));
    v
}

pub fn check(comp: &Composition, g: &StateGraph, p: &Property) -> Verdict {
    let found = match p {
        Property::Deadlock => first_state(g, |s| {
            let i = &g.info[s as usize];
            i.expanded && !i.terminated && !i.divergent && g.successors(s).is_empty()
        }),
        Property::Divergence => first_state(g, |s| g.info[s as usize].divergent),
        Property::Exception(kind) => {
            let want = Label::emit(ch::THROW, vec![crate::kernel::Value::id(kind.as_str())]);
            first_edge(g, |l| *l == want)
        }
        Property::Never(pattern) => first_edge(g, |l| matches(pattern, l)),
        Property::EventCount {
            pattern,
            relation,
            n,
        } => count_violation(g, pattern, *relation, *n),
        Property::Order { before, after } => flag_violation(g, after, None, before),
        Property::Alternation { first, second } => flag_violation(g, first, Some(second), first),
    };
    let property = p.to_string();
    match found {
        Some((trace, s)) => {
            let state = g.state(s);
            Verdict {
                property,
                status: Status::Fails,
                counterexample: Some(Counterexample {
                    trace: trace.iter().map(|l| l.to_string()).collect(),
                    final_state: StateSummary::of(comp, &state),
                }),
                trace_labels: trace,
                final_system_state: Some(state),
            }
        }
        None => Verdict {
            property,
            status: if g.partial {
                Status::Inconclusive
            } else {
                Status::Holds
            },
            counterexample: None,
            trace_labels: Vec::new(),
            final_system_state: None,
        },
    }
}

/// States are numbered in BFS order, so the lowest matching id is one of
/// the shallowest and has the least discovery trace.
fn first_state(g: &StateGraph, pred: impl Fn(u32) -> bool) -> Option<(Vec<Label>, u32)> {
    (0..g.state_count() as u32)
        .find(|&s| pred(s))
        .map(|s| (g.trace_to(s), s))
}

fn first_edge(g: &StateGraph, pred: impl Fn(&Label) -> bool) -> Option<(Vec<Label>, u32)> {
    for s in 0..g.state_count() as u32 {
        if let Some(&(l, t)) = g.successors(s).iter().find(|(l, _)| pred(g.label(*l))) {
            let mut trace = g.trace_to(s);
            trace.push(g.label(l).clone());
            return Some((trace, t));
        }
    }
    None
}

fn matches(p: &EventPattern, l: &Label) -> bool {
    p.matches_label(l)
}

/// Breadth-first search of the graph extended with a small per-path
/// counter. Returns the product parent map and the visit order.
struct Product<K> {
    parent: HashMap<(u32, K), Option<((u32, K), u32)>>,
    order: Vec<(u32, K)>,
}

impl<K: Copy + Eq + std::hash::Hash> Product<K> {
    fn explore(g: &StateGraph, init: K, step: impl Fn(K, &Label) -> K) -> Self {
        let mut parent = HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        parent.insert((0, init), None);
        queue.push_back((0u32, init));
        while let Some(node) = queue.pop_front() {
            order.push(node);
            for &(l, t) in g.successors(node.0) {
                let next = (t, step(node.1, g.label(l)));
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                    e.insert(Some((node, l)));
                    queue.push_back(next);
                }
            }
        }
        Product { parent, order }
    }

    fn trace(&self, g: &StateGraph, mut node: (u32, K)) -> Vec<Label> {
        let mut out = Vec::new();
        while let Some(Some((p, l))) = self.parent.get(&node) {
            out.push(g.label(*l).clone());
            node = *p;
        }
        out.reverse();
        out
    }
}

/// Counts saturate at `n + 1`, which is enough to decide every relation
/// against `n`. A maximal trace either ends in a state without successors
/// or runs forever inside a cycle, where its count is constant.
fn count_violation(
    g: &StateGraph,
    pat: &EventPattern,
    rel: Relation,
    n: u64,
) -> Option<(Vec<Label>, u32)> {
    let cap = n + 1;
    let prod = Product::explore(
        g,
        0u64,
        |c, l| if matches(pat, l) { (c + 1).min(cap) } else { c },
    );
    let on_cycle = cyclic_nodes(
        g,
        &prod,
        |c, l| if matches(pat, l) { (c + 1).min(cap) } else { c },
    );
    prod.order
        .iter()
        .find(|&&(s, c)| {
            let i = &g.info[s as usize];
            let maximal =
                (g.successors(s).is_empty() && i.expanded) || on_cycle.contains_key(&(s, c));
            maximal && !rel.holds(c, n)
        })
        .map(|&node| (prod.trace(g, node), node.0))
}

/// Product nodes that lie on a cycle, found with Tarjan's algorithm.
fn cyclic_nodes<K: Copy + Eq + std::hash::Hash>(
    g: &StateGraph,
    prod: &Product<K>,
    step: impl Fn(K, &Label) -> K,
) -> HashMap<(u32, K), ()> {
    let succ = |node: (u32, K)| -> Vec<(u32, K)> {
        g.successors(node.0)
            .iter()
            .map(|&(l, t)| (t, step(node.1, g.label(l))))
            .collect()
    };
    let mut index: HashMap<(u32, K), (usize, usize)> = HashMap::new();
    let mut on_stack: HashMap<(u32, K), bool> = HashMap::new();
    let mut stack = Vec::new();
    let mut out = HashMap::new();
    let mut counter = 0usize;
    for &root in &prod.order {
        if index.contains_key(&root) {
            continue;
        }
        // Iterative DFS: (node, successors, next successor position).
        let mut work: Vec<((u32, K), Vec<(u32, K)>, usize)> = Vec::new();
        index.insert(root, (counter, counter));
        counter += 1;
        stack.push(root);
        on_stack.insert(root, true);
        work.push((root, succ(root), 0));
        while let Some((node, succs, pos)) = work.last_mut() {
            let node = *node;
            if *pos < succs.len() {
                let w = succs[*pos];
                *pos += 1;
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(w) {
                    e.insert((counter, counter));
                    counter += 1;
                    stack.push(w);
                    on_stack.insert(w, true);
                    let ws = succ(w);
                    work.push((w, ws, 0));
                } else if on_stack.get(&w).copied().unwrap_or(false) {
                    let wi = index[&w].0;
                    let e = index.get_mut(&node).unwrap();
                    e.1 = e.1.min(wi);
                }
                continue;
            }
            let (_, succs, _) = work.pop().unwrap();
            let (ni, nl) = index[&node];
            if let Some((parent, _, _)) = work.last() {
                let p = *parent;
                let e = index.get_mut(&p).unwrap();
                e.1 = e.1.min(nl);
            }
            if ni == nl {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack.insert(w, false);
                    comp.push(w);
                    if w == node {
                        break;
                    }
                }
                let self_loop = succs.contains(&node);
                if comp.len() > 1 || self_loop {
                    for w in comp {
                        out.insert(w, ());
                    }
                }
            }
        }
    }
    out
}

/// A one-bit monitor: `set` events raise the flag, `reset` events lower it,
/// and a `bad` event with the flag raised is a violation.
fn flag_violation(
    g: &StateGraph,
    set: &EventPattern,
    reset: Option<&EventPattern>,
    bad: &EventPattern,
) -> Option<(Vec<Label>, u32)> {
    let step = |f: bool, l: &Label| {
        if matches(set, l) {
            true
        } else if reset.is_some_and(|r| matches(r, l)) {
            false
        } else {
            f
        }
    };
    let prod = Product::explore(g, false, step);
    for &node in &prod.order {
        if !node.1 {
            continue;
        }
        if let Some(&(l, t)) = g
            .successors(node.0)
            .iter()
            .find(|(l, _)| matches(bad, g.label(*l)))
        {
            let mut trace = prod.trace(g, node);
            trace.push(g.label(l).clone());
            return Some((trace, t));
        }
    }
    None
}
