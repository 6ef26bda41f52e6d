//! The per-object lock manager, driven by the monitor event protocol.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::exception::ExceptionKind;
use crate::framework::channels as ch;
use crate::kernel::{
    ChannelTable, Component, EventPattern, KernelError, Label, Local, Machine, Name, Value,
};

use super::monitor::{self, Acquire, MonitorError, MonitorState, ThreadState};
use super::queue::Priority;

/// What a thread in the entry queue is waiting to be told.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grant {
    /// `lockAcquired`, ending a `startSyncMeth`.
    Lock,
    /// `waitRet`, ending a `waitCall`.
    Wake,
}

impl Grant {
    fn channel(self) -> &'static str {
        match self {
            Grant::Lock => ch::LOCK_ACQUIRED,
            Grant::Wake => ch::WAIT_RET,
        }
    }
}

#[derive(Debug)]
struct Config {
    object: Name,
    threads: BTreeMap<Name, Priority>,
    spurious: bool,
}

#[derive(Clone)]
pub struct ObjectFw {
    cfg: Arc<Config>,
    mon: MonitorState,
    /// The holder has been chosen but not yet told.
    pending: Option<(Name, Grant)>,
    /// Grant owed to each thread in the entry queue or wait set.
    owed: BTreeMap<Name, Grant>,
    fault: Option<ExceptionKind>,
    chaos: bool,
}

impl fmt::Debug for ObjectFw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Static configuration is left out: keys only need to be unique per
        // component.
        write!(
            f,
            "ObjectFw{{h:{:?},d:{},e:{:?},w:{:?},s:{:?},p:{:?},o:{:?},f:{:?},c:{}}}",
            self.mon.holder,
            self.mon.depth,
            self.mon.entry_queue.levels(),
            self.mon.wait_set.levels(),
            self.mon.saved_depths,
            self.pending,
            self.owed,
            self.fault,
            self.chaos
        )
    }
}

impl ObjectFw {
    pub fn new(
        object: &str,
        ceiling: Priority,
        threads: BTreeMap<Name, Priority>,
        spurious: bool,
    ) -> Self {
        ObjectFw {
            cfg: Arc::new(Config {
                object: Name::from(object),
                threads,
                spurious,
            }),
            mon: MonitorState::new(object, ceiling),
            pending: None,
            owed: BTreeMap::new(),
            fault: None,
            chaos: false,
        }
    }

    pub fn monitor(&self) -> &MonitorState {
        &self.mon
    }

    fn label(&self, channel: &str, t: &Name) -> Label {
        Label::emit(
            channel,
            vec![Value::Id(self.cfg.object.clone()), Value::Id(t.clone())],
        )
    }

    fn blocked(&self, t: &Name) -> bool {
        self.mon.entry_queue.contains(t)
            || self.mon.wait_set.contains(t)
            || self.pending.as_ref().is_some_and(|(p, _)| p == t)
    }

    fn with(&self, mon: MonitorState) -> ObjectFw {
        ObjectFw {
            mon,
            ..self.clone()
        }
    }

    fn handed_to(mut self, next: Option<Name>) -> ObjectFw {
        if let Some(r) = next {
            let g = self.owed.remove(&r).unwrap_or(Grant::Lock);
            self.pending = Some((r, g));
        }
        self
    }

    fn outcome<T>(
        &self,
        r: Result<(MonitorState, T), MonitorError>,
        k: impl FnOnce(ObjectFw, T) -> ObjectFw,
    ) -> Result<ObjectFw, KernelError> {
        match r {
            Ok((mon, v)) => Ok(k(self.with(mon), v)),
            Err(MonitorError::Exception(kind)) => Ok(ObjectFw {
                fault: Some(kind),
                ..self.clone()
            }),
            Err(MonitorError::Invariant(e)) => Err(KernelError::WellFormed(format!(
                "monitor {}: {e}",
                self.cfg.object
            ))),
        }
    }

    /// Components that may use this lock: the caller provides the thread
    /// priorities, every thread not listed is unknown to the object.
    pub fn component(self) -> Component {
        let o = Value::Id(self.cfg.object.clone());
        let mut alphabet: Vec<EventPattern> = [
            ch::START_SYNC,
            ch::LOCK_ACQUIRED,
            ch::END_SYNC,
            ch::WAIT_CALL,
            ch::WAIT_RET,
            ch::NOTIFY,
            ch::NOTIFY_ALL,
        ]
        .iter()
        .map(|c| EventPattern::with(c, vec![Some(o.clone()), None]))
        .collect();
        if self.cfg.spurious {
            alphabet.push(EventPattern::with(
                ch::SPURIOUS,
                vec![Some(o.clone()), None],
            ));
        }
        let id = format!("ObjectFW.{}", self.cfg.object);
        Component::new(&id, Local::machine(self), alphabet).passive()
    }
}

impl Machine for ObjectFw {
    fn steps(
        &self,
        _channels: &ChannelTable,
    ) -> Result<Vec<(Label, Arc<dyn Machine>)>, KernelError> {
        let mut out: Vec<(Label, Arc<dyn Machine>)> = Vec::new();
        if self.chaos {
            return Ok(out);
        }
        if let Some(kind) = self.fault {
            let next = ObjectFw {
                chaos: true,
                ..self.clone()
            };
            out.push((
                Label::emit(ch::THROW, vec![Value::id(kind.as_str())]),
                Arc::new(next),
            ));
            return Ok(out);
        }
        if let Some((t, g)) = &self.pending {
            let next = ObjectFw {
                pending: None,
                ..self.clone()
            };
            out.push((self.label(g.channel(), t), Arc::new(next)));
        }
        for (t, &prio) in &self.cfg.threads {
            if self.cfg.spurious && self.mon.wait_set.contains(t) {
                let next = self.outcome(monitor::spurious_wakeup(&self.mon, t), |s, n| {
                    s.handed_to(n)
                })?;
                out.push((self.label(ch::SPURIOUS, t), Arc::new(next)));
            }
            if self.blocked(t) {
                continue;
            }
            let th = ThreadState {
                id: t.clone(),
                priority: prio,
                interrupted: false,
            };
            let acquire = self.outcome(monitor::try_acquire(&self.mon, &th), |mut s, a| {
                match a {
                    Acquire::Acquired => s.pending = Some((t.clone(), Grant::Lock)),
                    Acquire::Queued => {
                        s.owed.insert(t.clone(), Grant::Lock);
                    }
                }
                s
            })?;
            out.push((self.label(ch::START_SYNC, t), Arc::new(acquire)));

            let release =
                self.outcome(monitor::release_once(&self.mon, t), |s, n| s.handed_to(n))?;
            out.push((self.label(ch::END_SYNC, t), Arc::new(release)));

            // Interruption is the thread's business; the lock only checks
            // ownership.
            let wait = self.outcome(monitor::monitor_wait(&self.mon, &th), |mut s, n| {
                s.owed.insert(t.clone(), Grant::Wake);
                s.handed_to(n)
            })?;
            out.push((self.label(ch::WAIT_CALL, t), Arc::new(wait)));

            let notify = self.outcome(monitor::monitor_notify(&self.mon, t), |s, _| s)?;
            out.push((self.label(ch::NOTIFY, t), Arc::new(notify)));

            let notify_all = self.outcome(monitor::monitor_notify_all(&self.mon, t), |s, _| s)?;
            out.push((self.label(ch::NOTIFY_ALL, t), Arc::new(notify_all)));
        }
        Ok(out)
    }

    fn is_terminated(&self) -> bool {
        false
    }

    fn is_divergent(&self) -> bool {
        self.chaos
    }

    fn position(&self) -> String {
        if self.chaos {
            return "Chaos".into();
        }
        if let Some(k) = self.fault {
            return format!("throw({k})");
        }
        match (&self.mon.holder, &self.pending) {
            (None, _) => "unlocked".into(),
            (Some(h), Some(_)) => format!("granting to {h}"),
            (Some(h), None) => format!("held by {h}"),
        }
    }

    fn fields(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert(
            "holder".into(),
            self.mon.holder.as_deref().unwrap_or("none").to_string(),
        );
        m.insert("depth".into(), self.mon.depth.to_string());
        m
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
