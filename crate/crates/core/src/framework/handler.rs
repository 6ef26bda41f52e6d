//! Event-handler release machinery on the global tick: periodic, aperiodic
//! and one-shot release patterns, with overrun and deadline-miss detection.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::kernel::{
    ChannelTable, Component, EventPattern, KernelError, Label, Local, Machine, Name, Value,
};

use super::channels as ch;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Release {
    Periodic { period: u32 },
    Aperiodic,
    OneShot { offset: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Phase {
    Idle,
    Active,
    Done,
}

/// Progress through one release.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Run {
    Between,
    Started,
    Calling,
    Ending,
}

#[derive(Debug)]
struct Config {
    id: Name,
    mission: Name,
    release: Release,
    deadline: Option<u32>,
    firers: Vec<Name>,
}

#[derive(Clone)]
pub struct HandlerFw {
    cfg: Arc<Config>,
    phase: Phase,
    run: Run,
    /// Ticks to the next period boundary, or to the one-shot release.
    countdown: u32,
    pending: bool,
    /// One-shot handlers release once.
    released: bool,
    elapsed: u32,
    overran: bool,
    missed: bool,
    owe_overrun: bool,
    owe_miss: bool,
    stopping: bool,
}

impl fmt::Debug for HandlerFw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "H{{{:?},{:?},c{},p{},r{},e{},o{}{},m{}{},s{}}}",
            self.phase,
            self.run,
            self.countdown,
            self.pending as u8,
            self.released as u8,
            self.elapsed,
            self.overran as u8,
            self.owe_overrun as u8,
            self.missed as u8,
            self.owe_miss as u8,
            self.stopping as u8
        )
    }
}

impl HandlerFw {
    pub fn new(
        id: &str,
        mission: &str,
        release: Release,
        deadline: Option<u32>,
        firers: Vec<Name>,
    ) -> Self {
        HandlerFw {
            cfg: Arc::new(Config {
                id: Name::from(id),
                mission: Name::from(mission),
                release,
                deadline,
                firers,
            }),
            phase: Phase::Idle,
            run: Run::Between,
            countdown: 0,
            pending: false,
            released: false,
            elapsed: 0,
            overran: false,
            missed: false,
            owe_overrun: false,
            owe_miss: false,
            stopping: false,
        }
    }

    pub fn component(self, priority: Option<u8>) -> Component {
        let s = Some(Value::Id(self.cfg.id.clone()));
        let sm = vec![s.clone(), Some(Value::Id(self.cfg.mission.clone()))];
        let mut alphabet: Vec<EventPattern> = [
            ch::RELEASE_START,
            ch::RELEASE_END,
            ch::HANDLE_CALL,
            ch::HANDLE_RET,
            ch::OVERRUN,
            ch::DEADLINE_MISS,
        ]
        .iter()
        .map(|c| EventPattern::with(c, vec![s.clone()]))
        .collect();
        for c in [ch::START_SCHEDULABLE, ch::STOP, ch::DONE] {
            alphabet.push(EventPattern::with(c, sm.clone()));
        }
        if self.cfg.release == Release::Aperiodic {
            alphabet.push(EventPattern::with(ch::RELEASE, vec![s, None]));
        }
        let id = format!("HandlerFW.{}", self.cfg.id);
        Component::new(&id, Local::machine(self), alphabet)
            .timed(true)
            .with_priority(priority)
    }

    fn sid(&self) -> Value {
        Value::Id(self.cfg.id.clone())
    }

    fn own(&self, channel: &str) -> Label {
        Label::emit(channel, vec![self.sid()])
    }

    fn sm(&self, channel: &str) -> Label {
        Label::emit(
            channel,
            vec![self.sid(), Value::Id(self.cfg.mission.clone())],
        )
    }

    fn start(&self) -> HandlerFw {
        let mut n = self.clone();
        n.phase = Phase::Active;
        match self.cfg.release {
            Release::Periodic { period } => {
                n.pending = true;
                n.countdown = period;
            }
            Release::OneShot { offset } => {
                n.countdown = offset;
                if offset == 0 {
                    n.pending = true;
                    n.released = true;
                }
            }
            Release::Aperiodic => {}
        }
        n
    }

    fn tick(&self) -> HandlerFw {
        let mut n = self.clone();
        if n.phase != Phase::Active {
            return n;
        }
        if n.run != Run::Between {
            let cap = self.cfg.deadline.unwrap_or(0).max(match self.cfg.release {
                Release::Periodic { period } => period,
                _ => 0,
            }) + 1;
            n.elapsed = (n.elapsed + 1).min(cap);
            if let Release::Periodic { period } = self.cfg.release {
                if n.elapsed > period && !n.overran {
                    n.overran = true;
                    n.owe_overrun = true;
                }
            }
            if let Some(d) = self.cfg.deadline {
                if n.elapsed > d && !n.missed {
                    n.missed = true;
                    n.owe_miss = true;
                }
            }
        }
        match self.cfg.release {
            Release::Periodic { period } => {
                n.countdown -= 1;
                if n.countdown == 0 {
                    n.countdown = period;
                    n.pending = true;
                }
            }
            Release::OneShot { .. } if !n.released => {
                n.countdown -= 1;
                if n.countdown == 0 {
                    n.pending = true;
                    n.released = true;
                }
            }
            _ => {}
        }
        n
    }

    fn finished(&self) -> bool {
        match self.cfg.release {
            Release::OneShot { .. } => self.released && !self.pending,
            _ => false,
        }
    }
}

impl Machine for HandlerFw {
    fn steps(
        &self,
        _channels: &ChannelTable,
    ) -> Result<Vec<(Label, Arc<dyn Machine>)>, KernelError> {
        let mut out: Vec<(Label, HandlerFw)> = Vec::new();
        let aperiodic = self.cfg.release == Release::Aperiodic;
        match self.phase {
            Phase::Idle => {
                out.push((self.sm(ch::START_SCHEDULABLE), self.start()));
                out.push((Label::Tick, self.clone()));
            }
            Phase::Active => {
                if self.owe_overrun {
                    let mut n = self.clone();
                    n.owe_overrun = false;
                    out.push((self.own(ch::OVERRUN), n));
                }
                if self.owe_miss {
                    let mut n = self.clone();
                    n.owe_miss = false;
                    out.push((self.own(ch::DEADLINE_MISS), n));
                }
                let mut step = |label: Label, f: &dyn Fn(&mut HandlerFw)| {
                    let mut n = self.clone();
                    f(&mut n);
                    out.push((label, n));
                };
                match self.run {
                    Run::Between if self.pending && !self.stopping => {
                        step(self.own(ch::RELEASE_START), &|n| {
                            n.run = Run::Started;
                            n.pending = false;
                            n.elapsed = 0;
                            n.overran = false;
                            n.missed = false;
                        });
                    }
                    Run::Between => {}
                    Run::Started => step(self.own(ch::HANDLE_CALL), &|n| n.run = Run::Calling),
                    Run::Calling => step(self.own(ch::HANDLE_RET), &|n| n.run = Run::Ending),
                    Run::Ending => step(self.own(ch::RELEASE_END), &|n| {
                        n.run = Run::Between;
                        n.elapsed = 0;
                        n.overran = false;
                        n.missed = false;
                    }),
                }
                if !self.stopping {
                    step(self.sm(ch::STOP), &|n| n.stopping = true);
                }
                let idle = self.run == Run::Between && !self.owe_overrun && !self.owe_miss;
                if idle && (self.stopping || self.finished()) {
                    step(self.sm(ch::DONE), &|n| {
                        n.phase = Phase::Done;
                        n.pending = false;
                    });
                }
                out.push((Label::Tick, self.tick()));
            }
            Phase::Done => {}
        }
        if aperiodic {
            // Releases coalesce into a single pending one; they are
            // accepted (and dropped) after the handler has finished.
            for f in &self.cfg.firers {
                let mut n = self.clone();
                if n.phase != Phase::Done {
                    n.pending = true;
                }
                out.push((
                    Label::emit(ch::RELEASE, vec![self.sid(), Value::Id(f.clone())]),
                    n,
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

    fn position(&self) -> String {
        match self.phase {
            Phase::Idle => "Idle".into(),
            Phase::Done => "Done".into(),
            Phase::Active => format!("{:?}", self.run),
        }
    }

    fn fields(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("countdown".into(), self.countdown.to_string());
        m.insert("elapsed".into(), self.elapsed.to_string());
        m.insert("pending".into(), self.pending.to_string());
        m
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
