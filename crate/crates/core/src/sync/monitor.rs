//! Java-style monitors: reentrant ownership, an entry queue and a wait set.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::exception::ExceptionKind;
use crate::kernel::Name;

use super::queue::{Priority, PriorityQueue};
use super::SyncError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThreadState {
    pub id: Name,
    pub priority: Priority,
    pub interrupted: bool,
}

impl ThreadState {
    pub fn new(id: &str, priority: Priority) -> Self {
        ThreadState {
            id: Name::from(id),
            priority,
            interrupted: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonitorState {
    pub object: Name,
    pub ceiling: Priority,
    pub holder: Option<Name>,
    pub depth: u32,
    pub entry_queue: PriorityQueue,
    pub wait_set: PriorityQueue,
    /// Reentrancy depth to restore when a former waiter gets the lock back.
    /// Kept while the thread sits in the wait set and after a notify has
    /// moved it to the entry queue.
    pub saved_depths: BTreeMap<Name, u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Acquire {
    Acquired,
    Queued,
}

/// Reasons a monitor operation is refused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonitorError {
    Exception(ExceptionKind),
    Invariant(SyncError),
}

impl From<SyncError> for MonitorError {
    fn from(e: SyncError) -> Self {
        MonitorError::Invariant(e)
    }
}

type Outcome<T> = Result<(MonitorState, T), MonitorError>;

impl MonitorState {
    pub fn new(object: &str, ceiling: Priority) -> Self {
        MonitorState {
            object: Name::from(object),
            ceiling,
            holder: None,
            depth: 0,
            entry_queue: PriorityQueue::new(),
            wait_set: PriorityQueue::new(),
            saved_depths: BTreeMap::new(),
        }
    }

    pub fn is_free(&self) -> bool {
        self.holder.is_none()
    }

    fn holds(&self, t: &str) -> bool {
        self.holder.as_deref() == Some(t)
    }

    /// Hands a free lock to the most eligible queued thread.
    fn hand_over(&mut self) -> Option<Name> {
        debug_assert!(self.holder.is_none());
        let (next, _) = self.entry_queue.pop()?;
        self.depth = self.saved_depths.remove(&next).unwrap_or(1);
        self.holder = Some(next.clone());
        Some(next)
    }

    /// Checks the structural invariants; used by property tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.holder.is_none() != (self.depth == 0) {
            return Err(format!(
                "holder {:?} with depth {}",
                self.holder, self.depth
            ));
        }
        if self.holder.is_none() && !self.entry_queue.is_empty() {
            return Err("free lock with a non-empty entry queue".into());
        }
        let mut seen = Vec::new();
        seen.extend(self.holder.iter().cloned());
        seen.extend(self.entry_queue.in_eligibility_order());
        seen.extend(self.wait_set.in_eligibility_order());
        let mut sorted = seen.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != seen.len() {
            return Err(format!("thread in two places: {seen:?}"));
        }
        for (t, d) in &self.saved_depths {
            if *d == 0 || !(self.wait_set.contains(t) || self.entry_queue.contains(t)) {
                return Err(format!("stale saved depth {t} -> {d}"));
            }
        }
        Ok(())
    }
}

pub fn try_acquire(m: &MonitorState, t: &ThreadState) -> Outcome<Acquire> {
    if m.entry_queue.contains(&t.id) || m.wait_set.contains(&t.id) {
        return Err(SyncError::DuplicateThread(t.id.to_string()).into());
    }
    if t.priority > m.ceiling {
        return Err(MonitorError::Exception(ExceptionKind::CeilingViolation));
    }
    let mut m = m.clone();
    match &m.holder {
        None => {
            m.holder = Some(t.id.clone());
            m.depth = 1;
            Ok((m, Acquire::Acquired))
        }
        Some(h) if *h == t.id => {
            m.depth += 1;
            Ok((m, Acquire::Acquired))
        }
        Some(_) => {
            m.entry_queue = m.entry_queue.enqueue(t.id.clone(), t.priority)?;
            Ok((m, Acquire::Queued))
        }
    }
}

pub fn release_once(m: &MonitorState, t: &str) -> Outcome<Option<Name>> {
    if !m.holds(t) {
        return Err(MonitorError::Exception(ExceptionKind::IllegalMonitorState));
    }
    let mut m = m.clone();
    m.depth -= 1;
    if m.depth > 0 {
        return Ok((m, None));
    }
    m.holder = None;
    let next = m.hand_over();
    Ok((m, next))
}

/// Suspends the holder. Returns the thread the lock was handed to, if any.
pub fn monitor_wait(m: &MonitorState, t: &ThreadState) -> Outcome<Option<Name>> {
    if !m.holds(&t.id) {
        return Err(MonitorError::Exception(ExceptionKind::IllegalMonitorState));
    }
    if t.interrupted {
        return Err(MonitorError::Exception(ExceptionKind::Interrupted));
    }
    let mut m = m.clone();
    m.saved_depths.insert(t.id.clone(), m.depth);
    m.holder = None;
    m.depth = 0;
    m.wait_set = m.wait_set.enqueue(t.id.clone(), t.priority)?;
    let next = m.hand_over();
    Ok((m, next))
}

pub fn monitor_notify(m: &MonitorState, t: &str) -> Outcome<Option<Name>> {
    if !m.holds(t) {
        return Err(MonitorError::Exception(ExceptionKind::IllegalMonitorState));
    }
    let mut m = m.clone();
    match m.wait_set.pop() {
        None => Ok((m, None)),
        Some((r, p)) => {
            m.entry_queue = m.entry_queue.enqueue(r.clone(), p)?;
            Ok((m, Some(r)))
        }
    }
}

pub fn monitor_notify_all(m: &MonitorState, t: &str) -> Outcome<Vec<Name>> {
    if !m.holds(t) {
        return Err(MonitorError::Exception(ExceptionKind::IllegalMonitorState));
    }
    let mut m = m.clone();
    let mut resumed = Vec::new();
    while let Some((r, p)) = m.wait_set.pop() {
        m.entry_queue = m.entry_queue.enqueue(r.clone(), p)?;
        resumed.push(r);
    }
    Ok((m, resumed))
}

/// Moves a waiting thread to the entry queue without a notify. If the lock
/// happens to be free the thread gets it at once.
pub fn spurious_wakeup(m: &MonitorState, t: &str) -> Outcome<Option<Name>> {
    let mut m = m.clone();
    let p = m
        .wait_set
        .remove(t)
        .ok_or_else(|| MonitorError::Invariant(SyncError::NotWaiting(t.to_string())))?;
    m.entry_queue = m.entry_queue.enqueue(Name::from(t), p)?;
    let next = if m.holder.is_none() {
        m.hand_over()
    } else {
        None
    };
    Ok((m, next))
}

/// Display form used in counterexample summaries and by the animator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonitorView {
    pub object: String,
    pub holder: Option<String>,
    pub depth: u32,
    pub entry_queue: BTreeMap<Priority, Vec<String>>,
    pub wait_set: BTreeMap<Priority, Vec<String>>,
}

impl From<&MonitorState> for MonitorView {
    fn from(m: &MonitorState) -> Self {
        let conv = |q: &PriorityQueue| {
            q.levels()
                .iter()
                .map(|(p, ts)| (*p, ts.iter().map(|t| t.to_string()).collect()))
                .collect()
        };
        MonitorView {
            object: m.object.to_string(),
            holder: m.holder.as_ref().map(|h| h.to_string()),
            depth: m.depth,
            entry_queue: conv(&m.entry_queue),
            wait_set: conv(&m.wait_set),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::name;

    fn t(id: &str, p: Priority) -> ThreadState {
        ThreadState::new(id, p)
    }

    #[test]
    fn acquire_free_and_reentrant() {
        let m = MonitorState::new("o", 10);
        let (m, out) = try_acquire(&m, &t("t1", 5)).unwrap();
        assert_eq!(
            (m.holder.clone(), m.depth, out),
            (Some(name("t1")), 1, Acquire::Acquired)
        );
        let (m, _) = try_acquire(&m, &t("t1", 5)).unwrap();
        assert_eq!(m.depth, 2);
    }

    #[test]
    fn ceiling_violation() {
        let m = MonitorState::new("o", 5);
        assert_eq!(
            try_acquire(&m, &t("t", 9)).unwrap_err(),
            MonitorError::Exception(ExceptionKind::CeilingViolation)
        );
    }

    #[test]
    fn release_hands_over() {
        let m = MonitorState::new("o", 10);
        let (m, _) = try_acquire(&m, &t("t1", 5)).unwrap();
        let (m, out) = try_acquire(&m, &t("t2", 5)).unwrap();
        assert_eq!(out, Acquire::Queued);
        let (m, next) = release_once(&m, "t1").unwrap();
        assert_eq!(next, Some(name("t2")));
        assert_eq!((m.holder, m.depth), (Some(name("t2")), 1));
    }

    #[test]
    fn nested_release_keeps_lock() {
        let m = MonitorState::new("o", 10);
        let (m, _) = try_acquire(&m, &t("t1", 5)).unwrap();
        let (m, _) = try_acquire(&m, &t("t1", 5)).unwrap();
        let (m, next) = release_once(&m, "t1").unwrap();
        assert_eq!((m.depth, next), (1, None));
    }

    #[test]
    fn non_holder_release_is_illegal() {
        let m = MonitorState::new("o", 10);
        assert_eq!(
            release_once(&m, "t1").unwrap_err(),
            MonitorError::Exception(ExceptionKind::IllegalMonitorState)
        );
    }

    #[test]
    fn wait_saves_depth_and_notify_restores_it() {
        let mut m = MonitorState::new("o", 10);
        for _ in 0..3 {
            m = try_acquire(&m, &t("t1", 5)).unwrap().0;
        }
        let (m, next) = monitor_wait(&m, &t("t1", 5)).unwrap();
        assert_eq!(next, None);
        assert!(m.is_free());
        assert_eq!(m.saved_depths[&name("t1")], 3);
        assert_eq!(m.wait_set.levels()[&5], vec![name("t1")]);

        let (m, _) = try_acquire(&m, &t("t2", 4)).unwrap();
        let (m, resumed) = monitor_notify(&m, "t2").unwrap();
        assert_eq!(resumed, Some(name("t1")));
        let (m, next) = release_once(&m, "t2").unwrap();
        assert_eq!(next, Some(name("t1")));
        assert_eq!(m.depth, 3);
        m.check_invariants().unwrap();
    }

    #[test]
    fn wait_errors() {
        let m = MonitorState::new("o", 10);
        assert_eq!(
            monitor_wait(&m, &t("t1", 5)).unwrap_err(),
            MonitorError::Exception(ExceptionKind::IllegalMonitorState)
        );
        let (m, _) = try_acquire(&m, &t("t1", 5)).unwrap();
        let mut th = t("t1", 5);
        th.interrupted = true;
        assert_eq!(
            monitor_wait(&m, &th).unwrap_err(),
            MonitorError::Exception(ExceptionKind::Interrupted)
        );
    }

    #[test]
    fn notify_on_empty_wait_set_is_a_no_op() {
        let m = MonitorState::new("o", 10);
        let (m, _) = try_acquire(&m, &t("t1", 5)).unwrap();
        let (after, resumed) = monitor_notify(&m, "t1").unwrap();
        assert_eq!((after, resumed), (m.clone(), None));
        assert_eq!(
            monitor_notify(&m, "t9").unwrap_err(),
            MonitorError::Exception(ExceptionKind::IllegalMonitorState)
        );
    }

    #[test]
    fn notify_all_in_eligibility_order() {
        let mut m = MonitorState::new("o", 10);
        for (id, p) in [("t1", 5), ("t2", 9), ("t3", 5)] {
            m = try_acquire(&m, &t(id, p)).unwrap().0;
            m = monitor_wait(&m, &t(id, p)).unwrap().0;
        }
        let (m, _) = try_acquire(&m, &t("h", 1)).unwrap();
        let (_, resumed) = monitor_notify_all(&m, "h").unwrap();
        assert_eq!(resumed, vec![name("t2"), name("t1"), name("t3")]);
    }

    #[test]
    fn spurious_wakeup_of_free_lock_grants_it() {
        let m = MonitorState::new("o", 10);
        let (m, _) = try_acquire(&m, &t("t1", 5)).unwrap();
        let (m, _) = monitor_wait(&m, &t("t1", 5)).unwrap();
        let (m, next) = spurious_wakeup(&m, "t1").unwrap();
        assert_eq!(next, Some(name("t1")));
        assert_eq!(m.depth, 1);
        m.check_invariants().unwrap();
    }
}
