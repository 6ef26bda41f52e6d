//! Explored graphs of the bundled programs and a product search that runs a
//! small path monitor along every trace.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use scj2_core::checker::{explore, load, ExploreLimits, StateGraph};
use scj2_core::framework::AssembleOptions;
use scj2_core::kernel::{Composition, Label, Local, SystemState, Value};
use scj2_core::sync::{MonitorState, ObjectFw};

pub fn program_path(rel: &str) -> String {
    format!("{}/programs/{rel}", env!("CARGO_MANIFEST_DIR"))
}

/// Every bundled program that is expected to be fault-free.
pub fn sound_programs() -> Vec<String> {
    let mut out = vec!["flatbuffer.scj2".to_string(), "stub.scj2".to_string()];
    for dir in ["corpus", "timing"] {
        let mut names: Vec<String> = std::fs::read_dir(program_path(dir))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".scj2"))
            .map(|n| format!("{dir}/{n}"))
            .collect();
        names.sort();
        out.extend(names);
    }
    out
}

pub fn mutation_programs() -> Vec<String> {
    [
        "no_notify",
        "double_register",
        "unsynchronized_wait",
        "low_ceiling",
    ]
    .iter()
    .map(|n| format!("mutations/{n}.scj2"))
    .collect()
}

pub fn explored(rel: &str) -> (Composition, StateGraph) {
    let src = std::fs::read_to_string(program_path(rel)).unwrap();
    let l = load(&src, AssembleOptions::default()).unwrap();
    let g = explore(
        &l.composition,
        &ExploreLimits {
            workers: 4,
            ..ExploreLimits::default()
        },
    )
    .unwrap();
    assert!(!g.partial, "{rel} was truncated");
    (l.composition, g)
}

pub fn monitors(s: &SystemState) -> Vec<MonitorState> {
    s.locals
        .iter()
        .filter_map(|l| match l {
            Local::Machine(m) => m.downcast::<ObjectFw>().map(|o| o.monitor().clone()),
            _ => None,
        })
        .collect()
}

/// Channel and identifier fields of an event label.
pub fn event(l: &Label) -> Option<(&str, Vec<String>)> {
    let e = l.event()?;
    let values = e
        .values
        .iter()
        .map(|v| match v {
            Value::Id(n) => n.to_string(),
            other => other.to_string(),
        })
        .collect();
    Some((&*e.channel, values))
}

/// A violation: the trace that reaches it and what went wrong.
#[derive(Debug)]
pub struct Violation {
    pub trace: Vec<String>,
    pub message: String,
}

/// Product state: graph state and monitor state.
type Node<M> = (u32, M);

/// Each visited node with the node and label it was first reached by.
type Parents<M> = HashMap<Node<M>, Option<(Node<M>, u32)>>;

/// Runs `step` along every path of `g`, breadth first over pairs of graph
/// state and monitor state. `step` sees the source, label and target of
/// each edge. Returns the number of product states visited.
pub fn check_paths<M, F>(g: &StateGraph, init: M, step: F) -> Result<usize, Violation>
where
    M: Clone + Eq + Hash,
    F: Fn(&M, u32, &Label, u32) -> Result<M, String>,
{
    let mut parent: Parents<M> = HashMap::new();
    let mut queue = VecDeque::new();
    parent.insert((0, init.clone()), None);
    queue.push_back((0u32, init));
    let trace_of = |parent: &Parents<M>, mut at: Node<M>| {
        let mut out = Vec::new();
        while let Some(Some((p, l))) = parent.get(&at) {
            out.push(g.label(*l).to_string());
            at = p.clone();
        }
        out.reverse();
        out
    };
    while let Some((s, m)) = queue.pop_front() {
        for &(l, t) in g.successors(s) {
            match step(&m, s, g.label(l), t) {
                Ok(next) => {
                    let key = (t, next);
                    if !parent.contains_key(&key) {
                        parent.insert(key.clone(), Some(((s, m.clone()), l)));
                        queue.push_back(key);
                    }
                }
                Err(message) => {
                    let mut trace = trace_of(&parent, (s, m.clone()));
                    trace.push(g.label(l).to_string());
                    return Err(Violation { trace, message });
                }
            }
        }
    }
    Ok(parent.len())
}
