//! Replays a trace against the composed semantics, independently of any
//! explored graph.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::kernel::{system_steps, Composition, KernelError, Label, StepPolicy, SystemState};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("step {index}: `{label}` is not possible here")]
    Refused { index: usize, label: String },
    #[error("step {index}: cannot parse `{text}`")]
    Parse { index: usize, text: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// States reachable from the initial state by exactly `trace`.
pub fn replay(
    comp: &Composition,
    trace: &[Label],
    policy: StepPolicy,
) -> Result<Vec<SystemState>, ReplayError> {
    let mut current = vec![comp.initial_state()?];
    for (index, label) in trace.iter().enumerate() {
        let mut next: Vec<SystemState> = Vec::new();
        for s in &current {
            for (l, t) in system_steps(s, comp, policy)? {
                if l == *label && !next.contains(&t) {
                    next.push(t);
                }
            }
        }
        if next.is_empty() {
            return Err(ReplayError::Refused {
                index,
                label: label.to_string(),
            });
        }
        current = next;
    }
    Ok(current)
}

pub fn parse_trace(items: &[String]) -> Result<Vec<Label>, ReplayError> {
    items
        .iter()
        .enumerate()
        .map(|(index, t)| {
            Label::parse(t).ok_or_else(|| ReplayError::Parse {
                index,
                text: t.clone(),
            })
        })
        .collect()
}

/// Labels the system offers after `trace`, deduplicated and sorted.
pub fn offers_after(
    comp: &Composition,
    trace: &[Label],
    policy: StepPolicy,
) -> Result<Vec<Label>, ReplayError> {
    let mut out = BTreeSet::new();
    for s in replay(comp, trace, policy)? {
        for (l, _) in system_steps(&s, comp, policy)? {
            out.insert(l);
        }
    }
    Ok(out.into_iter().collect())
}
