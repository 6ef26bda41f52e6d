//! Small hand-built compositions over channels `a`, `b`, `c` and `d.v`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use proptest::prelude::*;
use scj2_core::kernel::term::{self, Comm, Field, TermRef};
use scj2_core::kernel::{
    system_steps, ChannelDecl, ChannelTable, Component, Composition, Domain, EventPattern, Expr,
    IntRange, Label, Local, StepPolicy, SystemState,
};

pub fn table() -> ChannelTable {
    let mut t = ChannelTable::new(IntRange { lo: 0, hi: 1 });
    for c in ["a", "b", "c"] {
        t.declare(ChannelDecl::new(c, vec![])).unwrap();
    }
    t.declare(ChannelDecl::new("d", vec![("v", Domain::Ints)]))
        .unwrap();
    t
}

/// Communication number `k`: `a`, `b`, `c`, `d.0`, `d.1`.
pub fn comm(k: usize) -> Comm {
    match k {
        0 => Comm::bare("a"),
        1 => Comm::bare("b"),
        2 => Comm::bare("c"),
        _ => Comm::new("d", vec![Field::Out(Expr::int(k as i64 - 3))]),
    }
}

pub fn channel_of(k: usize) -> &'static str {
    ["a", "b", "c", "d", "d"][k]
}

pub fn pre(k: usize, then: TermRef) -> TermRef {
    term::prefix(comm(k), then)
}

pub fn proc(id: &str, t: TermRef, alphabet: &[&str]) -> Component {
    Component::new(
        id,
        Local::proc(t, BTreeMap::new()),
        alphabet.iter().map(|c| EventPattern::channel(c)).collect(),
    )
}

/// Body of a recursion `X`. `Again` is only reachable under a prefix, so
/// every generated term is guarded and finite-state.
#[derive(Clone, Debug)]
pub enum Shape {
    Skip,
    Stop,
    Again(usize),
    Pre(usize, Box<Shape>),
    Choice(Box<Shape>, Box<Shape>),
    Delay(u32, Box<Shape>),
}

impl Shape {
    pub fn term(&self, timed: bool) -> TermRef {
        match self {
            Shape::Skip => term::skip(),
            Shape::Stop => term::stop(),
            Shape::Again(k) => pre(*k, term::recvar("X")),
            Shape::Pre(k, s) => pre(*k, s.term(timed)),
            Shape::Choice(a, b) => term::choice(a.term(timed), b.term(timed)),
            Shape::Delay(n, s) if timed => term::seq(term::wait(*n), s.term(timed)),
            Shape::Delay(_, s) => s.term(timed),
        }
    }

    pub fn channels(&self, out: &mut BTreeSet<&'static str>) {
        match self {
            Shape::Skip | Shape::Stop => {}
            Shape::Again(k) => {
                out.insert(channel_of(*k));
            }
            Shape::Pre(k, s) => {
                out.insert(channel_of(*k));
                s.channels(out);
            }
            Shape::Choice(a, b) => {
                a.channels(out);
                b.channels(out);
            }
            Shape::Delay(_, s) => s.channels(out),
        }
    }
}

pub fn shape() -> impl Strategy<Value = Shape> {
    let leaf = prop_oneof![
        Just(Shape::Skip),
        Just(Shape::Stop),
        (0..5usize).prop_map(Shape::Again),
    ];
    leaf.prop_recursive(4, 12, 2, |inner| {
        prop_oneof![
            3 => (0..5usize, inner.clone()).prop_map(|(k, s)| Shape::Pre(k, Box::new(s))),
            2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Shape::Choice(Box::new(a), Box::new(b))),
            1 => (1..3u32, inner).prop_map(|(n, s)| Shape::Delay(n, Box::new(s))),
        ]
    })
}

#[derive(Clone, Debug)]
pub struct ToySpec {
    pub parts: Vec<(Shape, Vec<bool>, Option<u8>)>,
    pub interleave_c: bool,
    pub timed: bool,
}

impl ToySpec {
    pub fn build(&self) -> Composition {
        let all = ["a", "b", "c", "d"];
        let components = self
            .parts
            .iter()
            .enumerate()
            .map(|(i, (s, extra, prio))| {
                let mut alpha = BTreeSet::new();
                s.channels(&mut alpha);
                for (c, &on) in all.iter().zip(extra) {
                    if on {
                        alpha.insert(c);
                    }
                }
                let alpha: Vec<&str> = alpha.into_iter().collect();
                proc(&format!("P{i}"), term::rec("X", s.term(self.timed)), &alpha)
                    .timed(self.timed)
                    .with_priority(*prio)
            })
            .collect();
        let comp = Composition::new(table(), components);
        if self.interleave_c {
            comp.interleave(&["c"])
        } else {
            comp
        }
    }
}

pub fn toy_spec() -> impl Strategy<Value = ToySpec> {
    (
        prop::collection::vec(
            (
                shape(),
                prop::collection::vec(any::<bool>(), 4),
                prop::option::of(1..=3u8),
            ),
            1..=4,
        ),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(parts, interleave_c, timed)| ToySpec {
            parts,
            interleave_c,
            timed,
        })
}

/// Naively enumerated graph: states in discovery order and every edge.
pub struct NaiveGraph {
    pub states: Vec<SystemState>,
    pub edges: Vec<(usize, Label, usize)>,
}

/// Breadth-first enumeration with linear-search state lookup. Returns
/// `None` past `cap` states.
pub fn naive(comp: &Composition, policy: StepPolicy, cap: usize) -> Option<NaiveGraph> {
    let mut states = vec![comp.initial_state().expect("initial state")];
    let mut edges = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        if !comp.is_terminated(&s) && !comp.is_divergent(&s) {
            for (l, t) in system_steps(&s, comp, policy).expect("steps") {
                let j = match states.iter().position(|x| *x == t) {
                    Some(j) => j,
                    None => {
                        if states.len() >= cap {
                            return None;
                        }
                        states.push(t);
                        states.len() - 1
                    }
                };
                edges.push((i, l, j));
            }
        }
        i += 1;
    }
    Some(NaiveGraph { states, edges })
}

/// Shortest distance from the initial state to every state.
pub fn distances(g: &NaiveGraph) -> Vec<usize> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, _, t) in &g.edges {
        adj.entry(*s).or_default().push(*t);
    }
    let mut dist = vec![usize::MAX; g.states.len()];
    dist[0] = 0;
    let mut q = VecDeque::from([0]);
    while let Some(s) = q.pop_front() {
        for &t in adj.get(&s).into_iter().flatten() {
            if dist[t] == usize::MAX {
                dist[t] = dist[s] + 1;
                q.push_back(t);
            }
        }
    }
    dist
}
