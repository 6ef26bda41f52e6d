//! Mission lifecycle: initialisation with registration checks, an atomic
//! start of every registered schedulable, execution until all are done or
//! termination is requested, then cleanup.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::exception::ExceptionKind;
use crate::kernel::{
    ChannelTable, Component, EventPattern, KernelError, Label, Local, Machine, Name, Value,
};

use super::channels as ch;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Phase {
    Idle,
    Init,
    Registering,
    Checking(Name),
    Throwing,
    Chaos,
    Starting(usize),
    Executing,
    Cleanup,
    CleanupRet,
    Finishing,
    Done,
}

#[derive(Debug)]
struct Config {
    id: Name,
    /// Schedulables the application may try to register.
    candidates: Vec<Name>,
    /// Components allowed to request termination.
    requesters: Vec<Name>,
}

#[derive(Clone)]
pub struct MissionFw {
    cfg: Arc<Config>,
    phase: Phase,
    registered: Vec<Name>,
    active: BTreeSet<Name>,
    stopped: BTreeSet<Name>,
    terminating: bool,
}

impl fmt::Debug for MissionFw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Mission{{{:?},r:{:?},a:{:?},s:{:?},t:{}}}",
            self.phase, self.registered, self.active, self.stopped, self.terminating
        )
    }
}

impl MissionFw {
    pub fn new(id: &str, candidates: Vec<Name>, requesters: Vec<Name>) -> Self {
        MissionFw {
            cfg: Arc::new(Config {
                id: Name::from(id),
                candidates,
                requesters,
            }),
            phase: Phase::Idle,
            registered: Vec::new(),
            active: BTreeSet::new(),
            stopped: BTreeSet::new(),
            terminating: false,
        }
    }

    pub fn component(self) -> Component {
        let m = Some(Value::Id(self.cfg.id.clone()));
        let mut alphabet: Vec<EventPattern> = [
            ch::START_MISSION,
            ch::MISSION_DONE,
            ch::INITIALIZE_CALL,
            ch::INITIALIZE_RET,
            ch::CLEANUP_CALL,
            ch::CLEANUP_RET,
        ]
        .iter()
        .map(|c| EventPattern::with(c, vec![m.clone()]))
        .collect();
        alphabet.push(EventPattern::with(
            ch::CHECK_SCHEDULABLE,
            vec![m.clone(), None],
        ));
        alphabet.push(EventPattern::with(
            ch::REQUEST_TERMINATION,
            vec![m.clone(), None],
        ));
        for c in [ch::REGISTER, ch::START_SCHEDULABLE, ch::STOP, ch::DONE] {
            alphabet.push(EventPattern::with(c, vec![None, m.clone()]));
        }
        let id = format!("MissionFW.{}", self.cfg.id);
        Component::new(&id, Local::machine(self), alphabet)
    }

    fn mid(&self) -> Value {
        Value::Id(self.cfg.id.clone())
    }

    fn go(&self, phase: Phase) -> MissionFw {
        MissionFw {
            phase,
            ..self.clone()
        }
    }

    fn sm(&self, channel: &str, s: &Name) -> Label {
        Label::emit(channel, vec![Value::Id(s.clone()), self.mid()])
    }

    fn own(&self, channel: &str) -> Label {
        Label::emit(channel, vec![self.mid()])
    }

    /// Leaves execution once every started schedulable is done.
    fn settle_execution(mut self) -> MissionFw {
        if self.phase == Phase::Executing && self.active.is_empty() {
            self.phase = Phase::Cleanup;
            self.stopped.clear();
        }
        self
    }
}

impl Machine for MissionFw {
    fn steps(
        &self,
        _channels: &ChannelTable,
    ) -> Result<Vec<(Label, Arc<dyn Machine>)>, KernelError> {
        let mut out: Vec<(Label, MissionFw)> = Vec::new();
        match &self.phase {
            Phase::Idle => out.push((self.own(ch::START_MISSION), self.go(Phase::Init))),
            Phase::Init => out.push((self.own(ch::INITIALIZE_CALL), self.go(Phase::Registering))),
            Phase::Registering => {
                for s in &self.cfg.candidates {
                    out.push((
                        self.sm(ch::REGISTER, s),
                        self.go(Phase::Checking(s.clone())),
                    ));
                }
                let next = if self.registered.is_empty() {
                    Phase::Cleanup
                } else {
                    Phase::Starting(0)
                };
                out.push((self.own(ch::INITIALIZE_RET), self.go(next)));
            }
            Phase::Checking(s) => {
                let mut ok = self.go(Phase::Registering);
                ok.registered.push(s.clone());
                out.push((
                    Label::emit(ch::CHECK_SCHEDULABLE, vec![self.mid(), Value::Bool(true)]),
                    ok,
                ));
                out.push((
                    Label::emit(ch::CHECK_SCHEDULABLE, vec![self.mid(), Value::Bool(false)]),
                    self.go(Phase::Throwing),
                ));
            }
            Phase::Throwing => out.push((
                Label::emit(
                    ch::THROW,
                    vec![Value::id(ExceptionKind::IllegalState.as_str())],
                ),
                self.go(Phase::Chaos),
            )),
            Phase::Chaos => {}
            Phase::Starting(i) => {
                let s = &self.registered[*i];
                let mut next = if i + 1 == self.registered.len() {
                    self.go(Phase::Executing)
                } else {
                    self.go(Phase::Starting(i + 1))
                };
                next.active.insert(s.clone());
                out.push((self.sm(ch::START_SCHEDULABLE, s), next));
            }
            Phase::Executing => {
                for s in &self.active {
                    let mut next = self.clone();
                    next.active.remove(s);
                    next.stopped.remove(s);
                    out.push((self.sm(ch::DONE, s), next.settle_execution()));
                    if self.terminating && !self.stopped.contains(s) {
                        let mut next = self.clone();
                        next.stopped.insert(s.clone());
                        out.push((self.sm(ch::STOP, s), next));
                    }
                }
            }
            Phase::Cleanup => out.push((self.own(ch::CLEANUP_CALL), self.go(Phase::CleanupRet))),
            Phase::CleanupRet => out.push((self.own(ch::CLEANUP_RET), self.go(Phase::Finishing))),
            Phase::Finishing => out.push((self.own(ch::MISSION_DONE), self.go(Phase::Done))),
            Phase::Done => {}
        }
        if !matches!(self.phase, Phase::Throwing | Phase::Chaos) {
            // Requests are always accepted so requesters never block; they
            // only have an effect before cleanup starts.
            let effective = matches!(
                self.phase,
                Phase::Init
                    | Phase::Registering
                    | Phase::Checking(_)
                    | Phase::Starting(_)
                    | Phase::Executing
            );
            for r in &self.cfg.requesters {
                let mut next = self.clone();
                if effective {
                    next.terminating = true;
                }
                out.push((
                    Label::emit(
                        ch::REQUEST_TERMINATION,
                        vec![self.mid(), Value::Id(r.clone())],
                    ),
                    next,
                ));
            }
        }
        Ok(out
            .into_iter()
            .map(|(l, m)| (l, Arc::new(m) as Arc<dyn Machine>))
            .collect())
    }

    fn is_terminated(&self) -> bool {
        self.phase == Phase::Done
    }

    fn is_divergent(&self) -> bool {
        self.phase == Phase::Chaos
    }

    fn position(&self) -> String {
        let p = match &self.phase {
            Phase::Checking(s) => format!("Checking({s})"),
            Phase::Starting(i) => format!("Starting({i})"),
            p => format!("{p:?}"),
        };
        if self.terminating {
            format!("{p} (terminating)")
        } else {
            p
        }
    }

    fn fields(&self) -> BTreeMap<String, String> {
        let list = |v: &mut dyn Iterator<Item = &Name>| {
            v.map(|n| n.to_string()).collect::<Vec<_>>().join(",")
        };
        let mut m = BTreeMap::new();
        m.insert(
            "registered".into(),
            format!("[{}]", list(&mut self.registered.iter())),
        );
        m.insert(
            "active".into(),
            format!("[{}]", list(&mut self.active.iter())),
        );
        m
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
