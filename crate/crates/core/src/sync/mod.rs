//! Monitor semantics: eligibility queues, lock operations, and the
//! per-object and per-thread framework components built on them.

pub mod monitor;
pub mod object_fw;
pub mod queue;

use thiserror::Error;

use crate::framework::channels as ch;
use crate::kernel::term::{self, Comm, Field};
use crate::kernel::{Component, EventPattern, Expr, Local, Name, Store, Value};

pub use monitor::{
    monitor_notify, monitor_notify_all, monitor_wait, release_once, spurious_wakeup, try_acquire,
    Acquire, MonitorError, MonitorState, MonitorView, ThreadState,
};
pub use object_fw::ObjectFw;
pub use queue::{enqueue, most_eligible, Priority, PriorityQueue};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SyncError {
    #[error("thread {0} is already queued")]
    DuplicateThread(String),
    #[error("thread {0} is not waiting")]
    NotWaiting(String),
}

/// Lock manager for object `oid`. `threads` lists every thread that may
/// lock it, with its priority.
pub fn object_fw(
    oid: &str,
    ceiling: Priority,
    threads: impl IntoIterator<Item = (Name, Priority)>,
    spurious: bool,
) -> Component {
    ObjectFw::new(oid, ceiling, threads.into_iter().collect(), spurious).component()
}

/// Per-thread process tracking the interrupted flag. A thread that calls
/// `wait` after being interrupted raises `interrupted` and diverges.
pub fn thread_fw(tid: &str, priority: Priority) -> Component {
    let t = Expr::id(tid);
    let interrupted = || Expr::var("interrupted");
    let wait_call = || Comm::new(ch::WAIT_CALL, vec![Field::Any, Field::Out(t.clone())]);
    let body = term::choice_all([
        term::prefix(
            Comm::new(ch::INTERRUPT, vec![Field::Out(t.clone())]),
            term::assign("interrupted", Expr::bool(true), term::recvar("X")),
        ),
        term::cond(
            interrupted(),
            term::prefix(
                wait_call(),
                term::prefix(
                    Comm::new(ch::THROW, vec![Field::Out(Expr::id("interrupted"))]),
                    term::chaos(),
                ),
            ),
            term::prefix(wait_call(), term::recvar("X")),
        ),
    ]);
    let mut store = Store::new();
    store.insert(Name::from("interrupted"), Value::Bool(false));
    let tv = Value::id(tid);
    let alphabet = vec![
        EventPattern::with(ch::INTERRUPT, vec![Some(tv.clone())]),
        EventPattern::with(ch::WAIT_CALL, vec![None, Some(tv)]),
    ];
    Component::new(
        &format!("ThreadFW.{tid}"),
        Local::proc(term::rec("X", body), store),
        alphabet,
    )
    .passive()
    .with_priority(Some(priority))
}
