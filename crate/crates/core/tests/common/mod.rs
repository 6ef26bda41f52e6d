#![allow(dead_code)]

pub mod paths;
pub mod toy;

use proptest::prelude::*;
use scj2_core::kernel::name;
use scj2_core::sync::{
    monitor_wait, try_acquire, Acquire, MonitorState, Priority, PriorityQueue, ThreadState,
};

/// Threads `t0..t5` with levels `1..=5`, in arrival order, each at most once.
pub fn arrivals() -> impl Strategy<Value = Vec<(String, Priority)>> {
    prop::collection::vec((0..6usize, 1..=5u8), 0..12).prop_map(|v| {
        let mut out: Vec<(String, Priority)> = Vec::new();
        for (t, p) in v {
            let id = format!("t{t}");
            if !out.iter().any(|(x, _)| *x == id) {
                out.push((id, p));
            }
        }
        out
    })
}

pub fn build_queue(arrivals: &[(String, Priority)]) -> PriorityQueue {
    arrivals.iter().fold(PriorityQueue::new(), |q, (t, p)| {
        q.enqueue(name(t), *p).expect("distinct ids")
    })
}

/// Brute force: the highest level wins, then the earliest arrival.
pub fn oracle_most_eligible(arrivals: &[(String, Priority)]) -> Option<String> {
    let mut best: Option<(usize, Priority)> = None;
    for (i, (_, p)) in arrivals.iter().enumerate() {
        if best.is_none_or(|(_, bp)| *p > bp) {
            best = Some((i, *p));
        }
    }
    best.map(|(i, _)| arrivals[i].0.clone())
}

/// Repeated brute-force extraction.
pub fn oracle_order(arrivals: &[(String, Priority)]) -> Vec<String> {
    let mut rest = arrivals.to_vec();
    let mut out = Vec::new();
    while let Some(t) = oracle_most_eligible(&rest) {
        rest.retain(|(x, _)| *x != t);
        out.push(t);
    }
    out
}

/// A monitor held by `h` whose wait set was filled in `arrivals` order.
pub fn monitor_with_waiters(arrivals: &[(String, u8)]) -> MonitorState {
    let mut m = MonitorState::new("o", 10);
    for (t, p) in arrivals {
        let th = ThreadState::new(t, *p);
        let (m1, got) = try_acquire(&m, &th).unwrap();
        assert_eq!(got, Acquire::Acquired);
        let (m2, next) = monitor_wait(&m1, &th).unwrap();
        assert_eq!(next, None);
        m = m2;
    }
    let (m, _) = try_acquire(&m, &ThreadState::new("h", 1)).unwrap();
    m
}
