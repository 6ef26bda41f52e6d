//! Components: a term with a store, or a native state machine, plus the
//! static attributes the composition needs (alphabet, timing, priority).

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::expr::Store;
use super::term::{self, StepCtx, TermRef};
use super::value::{ChannelTable, EventPattern, Label, Name};
use super::KernelError;

/// Internal steps followed while settling before a loop is reported.
const MAX_SETTLE: usize = 10_000;

/// A component whose behaviour is written directly in Rust rather than as a
/// term. Implementations must be pure: `steps` depends only on `self`.
pub trait Machine: fmt::Debug + Send + Sync + Any {
    fn steps(&self, channels: &ChannelTable)
        -> Result<Vec<(Label, Arc<dyn Machine>)>, KernelError>;

    fn is_terminated(&self) -> bool;

    fn is_divergent(&self) -> bool {
        false
    }

    /// One-line description of where the machine is.
    fn position(&self) -> String;

    /// Named values worth showing in summaries.
    fn fields(&self) -> BTreeMap<String, String> {
        BTreeMap::new()
    }

    fn as_any(&self) -> &dyn Any;
}

/// A machine value with a canonical key used for equality and hashing.
#[derive(Clone)]
pub struct MachineState {
    key: Arc<str>,
    inner: Arc<dyn Machine>,
}

impl MachineState {
    pub fn new(m: Arc<dyn Machine>) -> Self {
        MachineState {
            key: Arc::from(format!("{m:?}")),
            inner: m,
        }
    }

    pub fn machine(&self) -> &dyn Machine {
        &*self.inner
    }

    pub fn downcast<T: Machine>(&self) -> Option<&T> {
        self.inner.as_any().downcast_ref::<T>()
    }
}

impl PartialEq for MachineState {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for MachineState {}

impl Hash for MachineState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl fmt::Debug for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

/// The dynamic state of one component.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Local {
    Proc { term: TermRef, store: Store },
    Machine(MachineState),
}

impl Local {
    pub fn proc(term: TermRef, store: Store) -> Self {
        Local::Proc { term, store }
    }

    pub fn machine(m: impl Machine) -> Self {
        Local::Machine(MachineState::new(Arc::new(m)))
    }

    pub fn position(&self) -> String {
        match self {
            Local::Proc { term, .. } => super::term::head(term),
            Local::Machine(m) => m.machine().position(),
        }
    }

    pub fn store_view(&self) -> BTreeMap<String, String> {
        match self {
            Local::Proc { store, .. } => store
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            Local::Machine(m) => m.machine().fields(),
        }
    }
}

/// One transition of a component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub label: Label,
    pub successor: Local,
}

/// A process of the composed system.
#[derive(Clone, Debug)]
pub struct Component {
    pub id: Name,
    pub state: Local,
    /// Events this component must agree to. Events on interleaved channels
    /// need not be listed.
    pub alphabet: Vec<EventPattern>,
    pub timed: bool,
    /// Passive components (servers, lock managers) may still be running when
    /// the program ends.
    pub passive: bool,
    /// Scheduling priority of the thread this component acts for.
    pub priority: Option<u8>,
}

impl Component {
    pub fn new(id: &str, state: Local, alphabet: Vec<EventPattern>) -> Self {
        Component {
            id: Name::from(id),
            state,
            alphabet,
            timed: false,
            passive: false,
            priority: None,
        }
    }

    pub fn timed(mut self, timed: bool) -> Self {
        self.timed = timed;
        self
    }

    pub fn passive(mut self) -> Self {
        self.passive = true;
        self
    }

    pub fn with_priority(mut self, p: Option<u8>) -> Self {
        self.priority = p;
        self
    }

    pub fn mentions(&self, e: &super::value::Event) -> bool {
        self.alphabet.iter().any(|p| p.matches(e))
    }
}

/// Raw transitions of a local state. Term successors are not normalised.
pub fn local_steps(
    local: &Local,
    timed: bool,
    channels: &ChannelTable,
) -> Result<Vec<Transition>, KernelError> {
    match local {
        Local::Proc { term, store } => Ok(term::steps(term, store, StepCtx { channels, timed })?
            .into_iter()
            .map(|s| Transition {
                label: s.label,
                successor: Local::Proc {
                    term: s.term,
                    store: s.store,
                },
            })
            .collect()),
        Local::Machine(m) => Ok(m
            .machine()
            .steps(channels)?
            .into_iter()
            .map(|(label, next)| Transition {
                label,
                successor: Local::Machine(MachineState::new(next)),
            })
            .collect()),
    }
}

/// Transitions of a component in its current state.
pub fn component_steps(
    c: &Component,
    channels: &ChannelTable,
) -> Result<Vec<Transition>, KernelError> {
    local_steps(&c.state, c.timed, channels)
}

pub fn local_terminated(local: &Local, channels: &ChannelTable) -> bool {
    match local {
        Local::Proc { term, store } => term::is_terminated(term, store, channels),
        Local::Machine(m) => m.machine().is_terminated(),
    }
}

pub fn local_divergent(local: &Local, channels: &ChannelTable) -> bool {
    match local {
        Local::Proc { term, store } => term::is_divergent(term, store, channels),
        Local::Machine(m) => m.machine().is_divergent(),
    }
}

pub fn is_terminated(c: &Component, channels: &ChannelTable) -> bool {
    local_terminated(&c.state, channels)
}

pub fn is_divergent(c: &Component, channels: &ChannelTable) -> bool {
    local_divergent(&c.state, channels)
}

/// Canonical form of a local state (normalised term head).
pub fn canonical(local: Local, channels: &ChannelTable) -> Result<Local, KernelError> {
    match local {
        Local::Proc { term, store } => {
            let term = term::normalize(&term, &store, channels)?;
            Ok(Local::Proc { term, store })
        }
        m => Ok(m),
    }
}

/// A local state with every deterministic internal step applied, together
/// with its remaining transitions (successors canonical but not settled).
#[derive(Clone, Debug)]
pub struct Settled {
    pub local: Local,
    pub steps: Vec<Transition>,
}

/// Follows internal steps while they are the only thing a component can do.
/// Such steps touch only the component's own store, so applying them eagerly
/// does not change the observable behaviour of the composition.
pub fn settle(local: Local, timed: bool, channels: &ChannelTable) -> Result<Settled, KernelError> {
    let mut cur = canonical(local, channels)?;
    for _ in 0..MAX_SETTLE {
        let mut steps = local_steps(&cur, timed, channels)?;
        if steps.len() == 1 && steps[0].label == Label::Tau {
            let next = steps.pop().expect("one step").successor;
            cur = canonical(next, channels)?;
            continue;
        }
        let steps = steps
            .into_iter()
            .map(|t| {
                Ok(Transition {
                    label: t.label,
                    successor: canonical(t.successor, channels)?,
                })
            })
            .collect::<Result<Vec<_>, KernelError>>()?;
        return Ok(Settled { local: cur, steps });
    }
    Err(KernelError::TauLoop(format!(
        "more than {MAX_SETTLE} consecutive internal steps at {}",
        cur.position()
    )))
}
