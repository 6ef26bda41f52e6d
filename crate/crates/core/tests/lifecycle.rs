//! Mission lifecycle, call/return discipline and value ranges along every
//! path of the bundled programs.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::OnceLock;

use common::paths::{check_paths, event, explored, sound_programs, Violation};
use scj2_core::checker::StateGraph;
use scj2_core::kernel::{Composition, Label, Local, Value};

fn graphs() -> &'static [(String, Composition, StateGraph)] {
    static GRAPHS: OnceLock<Vec<(String, Composition, StateGraph)>> = OnceLock::new();
    GRAPHS.get_or_init(|| {
        sound_programs()
            .into_iter()
            .map(|rel| {
                let (c, g) = explored(&rel);
                (rel, c, g)
            })
            .collect()
    })
}

fn report(rel: &str, r: Result<usize, Violation>) {
    if let Err(v) = r {
        panic!("{rel}: {}\n{}", v.message, v.trace.join("\n"));
    }
}

/// Lifecycle phase of a mission event.
fn phase(ch: &str) -> Option<u8> {
    Some(match ch {
        "initializeCall" => 1,
        "register" => 2,
        "initializeRet" => 3,
        "start_schedulable" => 4,
        "stop" => 5,
        "missionCleanupCall" => 6,
        "mission_done" => 7,
        _ => return None,
    })
}

/// Which field of a lifecycle event names the mission.
fn mission_field(ch: &str) -> usize {
    match ch {
        "register" | "start_schedulable" | "stop" => 1,
        _ => 0,
    }
}

fn is_release(ch: &str) -> bool {
    matches!(ch, "releaseStart" | "runCall" | "handleEventCall")
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
struct Life {
    phase: BTreeMap<String, u8>,
    members: BTreeMap<String, BTreeSet<String>>,
    unstarted: BTreeMap<String, BTreeSet<String>>,
}

#[test]
fn lifecycle_events_occur_in_order() {
    for (rel, _, g) in graphs() {
        let r = check_paths(g, Life::default(), |m, _, l, _| {
            let mut m = m.clone();
            let Some((ch, f)) = event(l) else {
                return Ok(m);
            };
            if let Some(p) = phase(ch) {
                let mission = f[mission_field(ch)].clone();
                let cur = m.phase.get(&mission).copied().unwrap_or(0);
                if p < cur || (p > 1 && cur == 0) {
                    return Err(format!("{l} in phase {cur}"));
                }
                match ch {
                    "register" => {
                        m.members
                            .entry(mission.clone())
                            .or_default()
                            .insert(f[0].clone());
                    }
                    "initializeRet" => {
                        let all = m.members.get(&mission).cloned().unwrap_or_default();
                        m.unstarted.insert(mission.clone(), all);
                    }
                    "start_schedulable" => {
                        if let Some(u) = m.unstarted.get_mut(&mission) {
                            u.remove(&f[0]);
                        }
                    }
                    _ => {}
                }
                if p == 7 {
                    m.phase.remove(&mission);
                    m.members.remove(&mission);
                    m.unstarted.remove(&mission);
                } else {
                    m.phase.insert(mission, p);
                }
            } else if is_release(ch) {
                let barrier_open = m
                    .members
                    .iter()
                    .find(|(_, s)| s.contains(&f[0]))
                    .and_then(|(ms, _)| m.unstarted.get(ms))
                    .is_some_and(|u| !u.is_empty());
                if barrier_open {
                    return Err(format!("{l} before every schedulable started"));
                }
            }
            Ok(m)
        });
        report(rel, r);
    }
}

#[test]
fn schedulables_register_once() {
    for (rel, _, g) in graphs() {
        let r = check_paths(g, BTreeSet::<String>::new(), |seen, _, l, _| {
            let mut seen = seen.clone();
            match event(l) {
                Some(("register", f)) if !seen.insert(f[0].clone()) => {
                    Err(format!("{} registered twice", f[0]))
                }
                Some(("throw", _)) => Ok(BTreeSet::new()),
                _ => Ok(seen),
            }
        });
        report(rel, r);
    }
}

#[test]
fn no_release_after_stop() {
    for (rel, _, g) in graphs() {
        let r = check_paths(g, BTreeSet::<String>::new(), |stopped, _, l, _| {
            let mut stopped = stopped.clone();
            match event(l) {
                Some(("stop", f)) => {
                    stopped.insert(f[0].clone());
                }
                Some(("releaseStart", f)) if stopped.contains(&f[0]) => {
                    return Err(format!("{} released after stop", f[0]));
                }
                Some(("start_schedulable", f)) => {
                    stopped.remove(&f[0]);
                }
                _ => {}
            }
            Ok(stopped)
        });
        report(rel, r);
    }
}

#[test]
fn requested_termination_completes() {
    let mut requests = 0;
    for (rel, _, g) in graphs() {
        // Product of the graph with the set of missions whose termination
        // was requested but which are not done yet.
        type Node = (u32, BTreeSet<String>);
        let mut index: HashMap<Node, usize> = HashMap::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let start: Node = (0, BTreeSet::new());
        index.insert(start.clone(), 0);
        nodes.push(start);
        succ.push(Vec::new());
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let (s, pending) = nodes[i].clone();
            for &(l, t) in g.successors(s) {
                let mut p = pending.clone();
                match event(g.label(l)) {
                    Some(("requestTermination", f)) => {
                        requests += 1;
                        p.insert(f[0].clone());
                    }
                    Some(("mission_done", f)) => {
                        p.remove(&f[0]);
                    }
                    _ => {}
                }
                let key = (t, p);
                let j = *index.entry(key.clone()).or_insert_with(|| {
                    nodes.push(key);
                    succ.push(Vec::new());
                    queue.push_back(nodes.len() - 1);
                    nodes.len() - 1
                });
                succ[i].push(j);
            }
        }
        for (i, (s, pending)) in nodes.iter().enumerate() {
            if !pending.is_empty() && succ[i].is_empty() {
                assert!(
                    g.info[*s as usize].divergent,
                    "{rel}: stuck with termination pending for {pending:?}"
                );
            }
        }
        // No cycle may keep a mission pending forever.
        let missions: BTreeSet<&String> = nodes.iter().flat_map(|(_, p)| p).collect();
        for m in missions {
            let inside: Vec<bool> = nodes.iter().map(|(_, p)| p.contains(m)).collect();
            let mut indeg = vec![0usize; nodes.len()];
            for i in 0..nodes.len() {
                if inside[i] {
                    for &j in &succ[i] {
                        if inside[j] {
                            indeg[j] += 1;
                        }
                    }
                }
            }
            let mut ready: Vec<usize> = (0..nodes.len())
                .filter(|&i| inside[i] && indeg[i] == 0)
                .collect();
            let mut removed = 0;
            while let Some(i) = ready.pop() {
                removed += 1;
                for &j in &succ[i] {
                    if inside[j] {
                        indeg[j] -= 1;
                        if indeg[j] == 0 {
                            ready.push(j);
                        }
                    }
                }
            }
            let total = inside.iter().filter(|&&b| b).count();
            assert_eq!(removed, total, "{rel}: {m} can stay pending forever");
        }
    }
    assert!(requests > 0);
}

#[test]
fn end_of_program_is_final() {
    for (rel, comp, g) in graphs() {
        let mut ends = 0;
        for s in 0..g.state_count() as u32 {
            for &(l, t) in g.successors(s) {
                let is_end = matches!(event(g.label(l)), Some(("end_of_program", _)));
                let terminated = comp.is_terminated(&g.state(t));
                assert_eq!(is_end, terminated, "{rel}: {} into state {t}", g.label(l));
                if is_end {
                    ends += 1;
                    assert!(g.successors(t).is_empty(), "{rel}: steps after the end");
                }
            }
        }
        assert!(ends > 0, "{rel} never ends");
    }
}

/// Outstanding calls per method and leading identifier fields shared with
/// the return.
type Calls = BTreeMap<(String, Vec<String>), u8>;

#[test]
fn every_return_answers_a_call() {
    for (rel, comp, g) in graphs() {
        let arity = |c: &str| comp.channels.get(c).map(|d| d.arity());
        let r = check_paths(g, Calls::new(), |open, _, l, _| {
            let mut open = open.clone();
            let Some((ch, f)) = event(l) else {
                return Ok(open);
            };
            let (base, is_call) = if let Some(b) = ch.strip_suffix("Call") {
                (b, true)
            } else if let Some(b) = ch.strip_suffix("Ret") {
                (b, false)
            } else {
                return Ok(open);
            };
            let (Some(ca), Some(ra)) =
                (arity(&format!("{base}Call")), arity(&format!("{base}Ret")))
            else {
                return Ok(open);
            };
            let ids = l
                .event()
                .unwrap()
                .values
                .iter()
                .take_while(|v| matches!(v, Value::Id(_)))
                .count();
            let key = (base.to_string(), f[..ca.min(ra).min(ids)].to_vec());
            let n = open.get(&key).copied().unwrap_or(0);
            if is_call {
                if n > 0 {
                    return Err(format!("{l} while a call is open"));
                }
                open.insert(key, 1);
            } else {
                if n == 0 {
                    return Err(format!("{l} without a call"));
                }
                open.remove(&key);
            }
            Ok(open)
        });
        report(rel, r);
    }
}

#[test]
fn labels_of_the_toy_program_pair_up() {
    let (_, g) = explored("flatbuffer.scj2");
    let calls = (0..g.labels.len() as u32)
        .filter(|&l| matches!(g.label(l), Label::Event(e) if e.channel.ends_with("Call")))
        .count();
    assert!(calls > 0);
}

#[test]
fn stored_integers_stay_in_range() {
    let mut ints = 0;
    for (rel, comp, g) in graphs() {
        let r = &comp.channels.ints;
        for s in 0..g.state_count() as u32 {
            for local in &g.state(s).locals {
                let Local::Proc { store, .. } = local else {
                    continue;
                };
                for (x, v) in store {
                    if let Value::Int(i) = v {
                        ints += 1;
                        assert!((r.lo..=r.hi).contains(i), "{rel} state {s}: {x} = {i}");
                    }
                }
            }
        }
    }
    assert!(ints > 0);
}
