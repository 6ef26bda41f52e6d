mod common;

use std::collections::{HashMap, HashSet, VecDeque};

use common::toy::{distances, naive, pre, proc, table, toy_spec, NaiveGraph};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use scj2_core::checker::{
    check, confirm, explore, parse_trace, replay, ExploreLimits, Property, Relation, ReplayError,
    Report, StateGraph, Status,
};
use scj2_core::kernel::term;
use scj2_core::kernel::{Composition, EventPattern, Label, StepPolicy};

const FREE: StepPolicy = StepPolicy {
    maximal_progress: true,
    priority: false,
};
const PRIO: StepPolicy = StepPolicy {
    maximal_progress: true,
    priority: true,
};

fn limits(policy: StepPolicy, workers: usize) -> ExploreLimits {
    ExploreLimits {
        policy,
        workers,
        ..ExploreLimits::default()
    }
}

fn pat(c: &str) -> EventPattern {
    EventPattern::parse(c).unwrap()
}

/// Edges of `g` as (source, label, target) over the naive numbering.
fn mapped_edges(g: &StateGraph, n: &NaiveGraph) -> Option<Vec<(usize, String, usize)>> {
    let index: Vec<usize> = (0..g.state_count() as u32)
        .map(|s| n.states.iter().position(|x| *x == g.state(s)))
        .collect::<Option<_>>()?;
    let mut out: Vec<(usize, String, usize)> = (0..g.state_count() as u32)
        .flat_map(|s| {
            g.successors(s)
                .iter()
                .map(|&(l, t)| (index[s as usize], g.label(l).to_string(), index[t as usize]))
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort();
    Some(out)
}

fn naive_deadlocks(comp: &Composition, n: &NaiveGraph) -> Vec<usize> {
    let sources: HashSet<usize> = n.edges.iter().map(|e| e.0).collect();
    (0..n.states.len())
        .filter(|&i| {
            let s = &n.states[i];
            !sources.contains(&i) && !comp.is_terminated(s) && !comp.is_divergent(s)
        })
        .collect()
}

/// Some path performs more than `n` events on channel `c`.
fn naive_count_exceeds(g: &NaiveGraph, c: &str, n: u64) -> bool {
    let mut seen = HashSet::from([(0usize, 0u64)]);
    let mut q = VecDeque::from([(0usize, 0u64)]);
    while let Some((s, k)) = q.pop_front() {
        if k > n {
            return true;
        }
        for (src, l, t) in &g.edges {
            if *src != s {
                continue;
            }
            let hit = l.event().is_some_and(|e| &*e.channel == c);
            let next = (*t, k + u64::from(hit));
            if seen.insert(next) {
                q.push_back(next);
            }
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn explorer_matches_naive_enumeration(spec in toy_spec(), prio in any::<bool>()) {
        let comp = spec.build();
        let policy = if prio { PRIO } else { FREE };
        let Some(n) = naive(&comp, policy, 200) else { return Ok(()) };
        let g = explore(&comp, &limits(policy, 2)).unwrap();
        prop_assert!(!g.partial);
        prop_assert_eq!(g.state_count(), n.states.len());
        let mine = mapped_edges(&g, &n);
        prop_assert!(mine.is_some(), "explored state missing from the naive graph");
        let mut theirs: Vec<(usize, String, usize)> =
            n.edges.iter().map(|(s, l, t)| (*s, l.to_string(), *t)).collect();
        theirs.sort();
        prop_assert_eq!(mine.unwrap(), theirs);
    }

    #[test]
    fn priority_traces_are_free_traces(spec in toy_spec()) {
        let comp = spec.build();
        let Some(_) = naive(&comp, FREE, 200) else { return Ok(()) };
        let free = explore(&comp, &limits(FREE, 1)).unwrap();
        let prio = explore(&comp, &limits(PRIO, 1)).unwrap();
        let index: HashMap<_, u32> = (0..free.state_count() as u32).map(|s| (free.state(s), s)).collect();
        for s in 0..prio.state_count() as u32 {
            let fs = index.get(&prio.state(s));
            prop_assert!(fs.is_some());
            let fs = *fs.unwrap();
            for &(l, t) in prio.successors(s) {
                let ft = index[&prio.state(t)];
                prop_assert!(free
                    .successors(fs)
                    .iter()
                    .any(|&(fl, x)| x == ft && free.label(fl) == prio.label(l)));
            }
        }
    }

    #[test]
    fn deadlock_verdict_is_shortest_and_replays(spec in toy_spec()) {
        let comp = spec.build();
        let Some(n) = naive(&comp, FREE, 200) else { return Ok(()) };
        let g = explore(&comp, &limits(FREE, 1)).unwrap();
        let v = check(&comp, &g, &Property::Deadlock);
        let dead = naive_deadlocks(&comp, &n);
        if dead.is_empty() {
            prop_assert_eq!(v.status, Status::Holds);
        } else {
            prop_assert_eq!(v.status, Status::Fails);
            let dist = distances(&n);
            let best = dead.iter().map(|&i| dist[i]).min().unwrap();
            prop_assert_eq!(v.trace_labels.len(), best);
            prop_assert!(confirm(&comp, &v, FREE).unwrap());
        }
    }

    #[test]
    fn bounded_count_matches_path_search(spec in toy_spec(), n in 0..3u64) {
        let comp = spec.build();
        let Some(ng) = naive(&comp, FREE, 200) else { return Ok(()) };
        let g = explore(&comp, &limits(FREE, 1)).unwrap();
        let p = Property::EventCount { pattern: pat("a"), relation: Relation::Le, n };
        let v = check(&comp, &g, &p);
        let fails = naive_count_exceeds(&ng, "a", n);
        prop_assert_eq!(v.status == Status::Fails, fails);
        if fails {
            prop_assert!(confirm(&comp, &v, FREE).unwrap());
        }
    }

    #[test]
    fn never_matches_edge_search(spec in toy_spec()) {
        let comp = spec.build();
        let Some(ng) = naive(&comp, FREE, 200) else { return Ok(()) };
        let g = explore(&comp, &limits(FREE, 1)).unwrap();
        let v = check(&comp, &g, &Property::Never(pat("b")));
        let found = ng.edges.iter().any(|(_, l, _)| l.event().is_some_and(|e| &*e.channel == "b"));
        prop_assert_eq!(v.status == Status::Fails, found);
        if found {
            prop_assert_eq!(v.trace_labels.last().unwrap().to_string(), "b()");
        }
    }

    #[test]
    fn graph_is_independent_of_workers(spec in toy_spec()) {
        let comp = spec.build();
        let Some(_) = naive(&comp, FREE, 200) else { return Ok(()) };
        let props = [Property::Deadlock, Property::Divergence, Property::Never(pat("c"))];
        let one = explore(&comp, &limits(FREE, 1)).unwrap();
        let four = explore(&comp, &limits(FREE, 4)).unwrap();
        prop_assert_eq!(Report::build("toy", &comp, &one, &props), Report::build("toy", &comp, &four, &props));
    }
}

#[test]
fn generated_compositions_mostly_fit_the_cap() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = toy_spec();
    let mut fit = 0;
    for _ in 0..200 {
        let spec = strategy.new_tree(&mut runner).unwrap().current();
        if naive(&spec.build(), FREE, 200).is_some() {
            fit += 1;
        }
    }
    assert!(fit >= 100, "only {fit} of 200 fit");
}

fn sequence(ks: &[usize]) -> Composition {
    let t = ks.iter().rev().fold(term::skip(), |k, &c| pre(c, k));
    Composition::new(table(), vec![proc("P", t, &["a", "b", "c", "d"])])
}

fn verdict(comp: &Composition, p: Property) -> Status {
    let g = explore(comp, &limits(FREE, 1)).unwrap();
    check(comp, &g, &p).status
}

#[test]
fn count_on_unused_channel_holds() {
    let p = Property::EventCount {
        pattern: pat("c"),
        relation: Relation::Eq,
        n: 0,
    };
    assert_eq!(verdict(&sequence(&[0, 1]), p), Status::Holds);
}

#[test]
fn exact_count_on_every_maximal_path() {
    let eq = |n| Property::EventCount {
        pattern: pat("a"),
        relation: Relation::Eq,
        n,
    };
    assert_eq!(verdict(&sequence(&[0, 1, 0]), eq(2)), Status::Holds);
    assert_eq!(verdict(&sequence(&[0, 1, 0]), eq(1)), Status::Fails);
    assert_eq!(verdict(&sequence(&[0, 1, 0]), eq(3)), Status::Fails);
}

#[test]
fn order_and_alternation() {
    let order = Property::Order {
        before: pat("a"),
        after: pat("b"),
    };
    assert_eq!(verdict(&sequence(&[0, 1]), order.clone()), Status::Holds);
    assert_eq!(verdict(&sequence(&[1, 0]), order), Status::Fails);
    let alt = Property::Alternation {
        first: pat("a"),
        second: pat("b"),
    };
    assert_eq!(
        verdict(&sequence(&[0, 1, 0, 1]), alt.clone()),
        Status::Holds
    );
    assert_eq!(verdict(&sequence(&[0, 0, 1]), alt), Status::Fails);
}

#[test]
fn truncated_graph_is_inconclusive() {
    let looping = term::rec("X", pre(0, pre(1, term::recvar("X"))));
    let comp = Composition::new(table(), vec![proc("P", looping, &["a", "b"])]);
    let g = explore(
        &comp,
        &ExploreLimits {
            max_states: 1,
            ..ExploreLimits::default()
        },
    )
    .unwrap();
    assert!(g.partial);
    assert_eq!(
        check(&comp, &g, &Property::Deadlock).status,
        Status::Inconclusive
    );
    assert_eq!(
        check(&comp, &g, &Property::Never(pat("c"))).status,
        Status::Inconclusive
    );
}

#[test]
fn replay_of_empty_and_refused_traces() {
    let comp = sequence(&[0, 1]);
    let init = comp.initial_state().unwrap();
    assert_eq!(replay(&comp, &[], FREE).unwrap(), vec![init]);
    let bogus = parse_trace(&["b()".to_string()]).unwrap();
    assert!(matches!(
        replay(&comp, &bogus, FREE),
        Err(ReplayError::Refused { index: 0, .. })
    ));
    assert!(parse_trace(&["not an event(".to_string()]).is_err());
    let ok: Vec<Label> = parse_trace(&["a()".to_string(), "b()".to_string()]).unwrap();
    let end = replay(&comp, &ok, FREE).unwrap();
    assert!(comp.is_terminated(&end[0]));
}
