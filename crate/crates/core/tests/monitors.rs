//! Monitor invariants over every reachable state and path of the bundled
//! programs and of two small lock-heavy programs.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use common::paths::{check_paths, event, explored, monitors, mutation_programs, sound_programs};
use scj2_core::checker::{explore, load, ExploreLimits, StateGraph};
use scj2_core::framework::AssembleOptions;
use scj2_core::kernel::Composition;
use scj2_core::sync::{MonitorState, PriorityQueue};

/// A waiter that holds the lock twice when it waits.
const REENTRANT: &str = r#"
config { ints = 0..2; priorities = 1..10; }
safelet S { sequencer = Q; }
sequencer Q { missions = [M]; }
mission M {
    vars { ready: bool = false; }
    registers = [Waiter, Signaller];
    sync method outer(): void {
        this.inner();
    }
    sync method inner(): void {
        while (!ready) {
            wait(this);
        }
    }
    sync method signal(): void {
        ready := true;
        notifyAll(this);
    }
    cleanup { }
}
thread Waiter priority = 4 {
    run { mission.outer(); }
}
thread Signaller priority = 4 {
    run { mission.signal(); }
}
"#;

/// Three threads at one priority level, each locking once.
const THREE_LOCKERS: &str = r#"
config { ints = 0..2; priorities = 1..10; }
safelet S { sequencer = Q; }
sequencer Q { missions = [M]; }
mission M {
    registers = [A, B, C];
    sync method touch(): void { }
    cleanup { }
}
thread A priority = 5 { run { mission.touch(); } }
thread B priority = 5 { run { mission.touch(); } }
thread C priority = 5 { run { mission.touch(); } }
"#;

fn explored_src(src: &str) -> (Composition, StateGraph) {
    let l = load(src, AssembleOptions::default()).unwrap();
    let g = explore(&l.composition, &ExploreLimits::default()).unwrap();
    assert!(!g.partial);
    (l.composition, g)
}

fn all_graphs() -> &'static [(String, StateGraph)] {
    static GRAPHS: OnceLock<Vec<(String, StateGraph)>> = OnceLock::new();
    GRAPHS.get_or_init(build_graphs)
}

fn build_graphs() -> Vec<(String, StateGraph)> {
    let mut out: Vec<(String, StateGraph)> = sound_programs()
        .into_iter()
        .chain(mutation_programs())
        .map(|rel| {
            let g = explored(&rel).1;
            (rel, g)
        })
        .collect();
    out.push(("reentrant".into(), explored_src(REENTRANT).1));
    out.push(("three lockers".into(), explored_src(THREE_LOCKERS).1));
    out
}

fn monitor<'a>(ms: &'a [MonitorState], object: &str) -> &'a MonitorState {
    ms.iter().find(|m| &*m.object == object).unwrap()
}

/// Brute force over the raw levels: the head of the highest non-empty one.
fn oracle_most_eligible(q: &PriorityQueue) -> Option<String> {
    q.levels()
        .iter()
        .rev()
        .find(|(_, ts)| !ts.is_empty())
        .map(|(_, ts)| ts[0].to_string())
}

fn queued(m: &MonitorState) -> BTreeSet<String> {
    m.entry_queue
        .in_eligibility_order()
        .into_iter()
        .chain(m.wait_set.in_eligibility_order())
        .map(|t| t.to_string())
        .collect()
}

#[test]
fn states_satisfy_monitor_invariants() {
    for (rel, g) in all_graphs() {
        for s in 0..g.state_count() as u32 {
            let ms = monitors(&g.state(s));
            let mut seen = BTreeSet::new();
            for m in &ms {
                m.check_invariants()
                    .unwrap_or_else(|e| panic!("{rel} state {s}: {e}"));
                for t in queued(m) {
                    assert!(seen.insert(t.clone()), "{rel} state {s}: {t} queued twice");
                }
            }
        }
    }
}

#[test]
fn notify_resumes_the_most_eligible_waiter() {
    let mut notifies = 0;
    for (rel, g) in all_graphs() {
        for s in 0..g.state_count() as u32 {
            for &(l, t) in g.successors(s) {
                let Some((ch, f)) = event(g.label(l)) else {
                    continue;
                };
                if ch != "notify" && ch != "notifyAll" {
                    continue;
                }
                let (before, after) = (monitors(&g.state(s)), monitors(&g.state(t)));
                let (b, a) = (monitor(&before, &f[0]), monitor(&after, &f[0]));
                let woken: Vec<String> = b
                    .wait_set
                    .in_eligibility_order()
                    .into_iter()
                    .filter(|w| !a.wait_set.contains(w))
                    .map(|w| w.to_string())
                    .collect();
                if ch == "notify" {
                    notifies += 1;
                    let expected: Vec<String> =
                        oracle_most_eligible(&b.wait_set).into_iter().collect();
                    assert_eq!(woken, expected, "{rel}: {}", g.label(l));
                } else {
                    assert!(a.wait_set.is_empty(), "{rel}: {}", g.label(l));
                }
            }
        }
    }
    assert!(notifies > 0);
}

/// Per (object, thread): entries minus exits, and the depth saved at the
/// last accepted wait.
type Balance = (
    BTreeMap<(String, String), i32>,
    BTreeMap<(String, String), u32>,
);

#[test]
fn reentrancy_balances_and_waits_release_fully() {
    for (rel, g) in all_graphs() {
        let r = check_paths(g, Balance::default(), |(open, saved), s, l, t| {
            let mut open = open.clone();
            let mut saved = saved.clone();
            let Some((ch, f)) = event(l) else {
                return Ok((open, saved));
            };
            if f.len() < 2 {
                return Ok((open, saved));
            }
            let key = (f[0].clone(), f[1].clone());
            let after = monitors(&g.state(t));
            let Some(a) = after.iter().find(|m| *m.object == *key.0) else {
                return Ok((open, saved));
            };
            match ch {
                "startSyncMeth" => *open.entry(key.clone()).or_default() += 1,
                "endSyncMeth" => *open.entry(key.clone()).or_default() -= 1,
                "waitCall" if a.wait_set.contains(&key.1) => {
                    let before = monitors(&g.state(s));
                    let b = monitor(&before, &key.0);
                    if a.holder.as_deref() == Some(&*key.1) {
                        return Err("waiter still holds the lock".into());
                    }
                    saved.insert(key.clone(), b.depth);
                }
                "lockAcquired" => {
                    if a.holder.as_deref() != Some(&*key.1) {
                        return Err("lockAcquired without holding".into());
                    }
                    if let Some(d) = saved.remove(&key) {
                        if a.depth != d {
                            return Err(format!("depth {} restored as {}", d, a.depth));
                        }
                    }
                }
                _ => {}
            }
            let n = open.get(&key).copied().unwrap_or(0);
            if n < 0 {
                return Err("more exits than entries".into());
            }
            let involved = a.holder.as_deref() == Some(&*key.1) || queued(a).contains(&key.1);
            if n == 0 && involved {
                return Err("lock involvement with balanced entries".into());
            }
            Ok((open, saved))
        });
        if let Err(v) = r {
            panic!("{rel}: {}\n{}", v.message, v.trace.join("\n"));
        }
    }
}

#[test]
fn reentrant_wait_restores_two_levels() {
    let (_, g) = explored_src(REENTRANT);
    let saw_two = (0..g.state_count() as u32).any(|s| {
        monitors(&g.state(s))
            .iter()
            .any(|m| m.saved_depths.values().any(|&d| d == 2))
    });
    assert!(saw_two);
}

#[test]
fn equal_priorities_acquire_in_arrival_order() {
    let (_, g) = explored_src(THREE_LOCKERS);
    let r = check_paths(
        &g,
        (Vec::<String>::new(), 0usize),
        |(arrived, granted), _, l, _| {
            let mut arrived = arrived.clone();
            let mut granted = *granted;
            match event(l) {
                Some(("startSyncMeth", f)) => arrived.push(f[1].clone()),
                Some(("lockAcquired", f)) => {
                    if arrived.get(granted) != Some(&f[1]) {
                        return Err(format!("{} overtook {:?}", f[1], arrived));
                    }
                    granted += 1;
                }
                _ => {}
            }
            Ok((arrived, granted))
        },
    );
    if let Err(v) = r {
        panic!("{}\n{}", v.message, v.trace.join("\n"));
    }
}

#[test]
fn reentrant_program_is_clean() {
    let (comp, g) = explored_src(REENTRANT);
    for p in scj2_core::checker::standard_properties() {
        let v = scj2_core::checker::check(&comp, &g, &p);
        assert_eq!(
            v.status,
            scj2_core::checker::Status::Holds,
            "{}: {:?}",
            v.property,
            v.counterexample
        );
    }
}
