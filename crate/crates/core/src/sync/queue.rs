//! Priority queues of waiting threads, ordered by eligibility: highest level
//! first, longest waiting first within a level.

use std::collections::BTreeMap;

use crate::kernel::Name;

use super::SyncError;

pub type Priority = u8;

/// Map from priority level to an injective FIFO of thread ids. Empty levels
/// are never stored, so structural equality is canonical.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PriorityQueue {
    levels: BTreeMap<Priority, Vec<Name>>,
}

impl PriorityQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn len(&self) -> usize {
        self.levels.values().map(Vec::len).sum()
    }

    pub fn contains(&self, t: &str) -> bool {
        self.level_of(t).is_some()
    }

    pub fn level_of(&self, t: &str) -> Option<Priority> {
        self.levels
            .iter()
            .find(|(_, q)| q.iter().any(|x| &**x == t))
            .map(|(p, _)| *p)
    }

    pub fn levels(&self) -> &BTreeMap<Priority, Vec<Name>> {
        &self.levels
    }

    /// Appends `t` at level `p`.
    pub fn enqueue(&self, t: Name, p: Priority) -> Result<Self, SyncError> {
        if self.contains(&t) {
            return Err(SyncError::DuplicateThread(t.to_string()));
        }
        let mut q = self.clone();
        q.levels.entry(p).or_default().push(t);
        Ok(q)
    }

    pub fn most_eligible(&self) -> Option<&Name> {
        self.levels.iter().next_back().and_then(|(_, q)| q.first())
    }

    /// Removes and returns the most eligible thread with its level.
    pub fn pop(&mut self) -> Option<(Name, Priority)> {
        let (&p, q) = self.levels.iter_mut().next_back()?;
        let t = q.remove(0);
        if q.is_empty() {
            self.levels.remove(&p);
        }
        Some((t, p))
    }

    /// Removes `t` wherever it is, returning its level.
    pub fn remove(&mut self, t: &str) -> Option<Priority> {
        let p = self.level_of(t)?;
        let q = self.levels.get_mut(&p).expect("level present");
        q.retain(|x| &**x != t);
        if q.is_empty() {
            self.levels.remove(&p);
        }
        Some(p)
    }

    /// All threads in eligibility order.
    pub fn in_eligibility_order(&self) -> Vec<Name> {
        self.levels
            .iter()
            .rev()
            .flat_map(|(_, q)| q.iter().cloned())
            .collect()
    }
}

pub fn enqueue(q: &PriorityQueue, t: Name, p: Priority) -> Result<PriorityQueue, SyncError> {
    q.enqueue(t, p)
}

pub fn most_eligible(q: &PriorityQueue) -> Option<Name> {
    q.most_eligible().cloned()
}
