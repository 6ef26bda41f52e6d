//! Parallel composition with multiway synchronisation and tock-style time.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::component::{self, Component, Local};
use super::value::{ChannelTable, Event, Label, Name};
use super::KernelError;

/// The assembled system: components, channels and synchronisation rules.
#[derive(Clone, Debug)]
pub struct Composition {
    pub components: Vec<Component>,
    pub channels: ChannelTable,
    /// Channels whose events each component performs on its own.
    pub interleaved: BTreeSet<Name>,
    /// Channels whose events pre-empt everything else when enabled.
    pub urgent: BTreeSet<Name>,
    /// Component whose termination marks the end of the program. Without a
    /// root, the system is terminated when every non-passive component is.
    pub root: Option<usize>,
    by_channel: HashMap<Name, Vec<usize>>,
}

/// Snapshot of every component's local state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemState {
    pub locals: Vec<Local>,
}

/// Step-selection policy applied on top of the raw semantics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepPolicy {
    /// Suppress `tick` whenever anything else is enabled.
    pub maximal_progress: bool,
    /// Only allow transitions of the highest-priority enabled thread.
    pub priority: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            maximal_progress: true,
            priority: false,
        }
    }
}

impl Composition {
    pub fn new(channels: ChannelTable, components: Vec<Component>) -> Self {
        let mut c = Composition {
            components,
            channels,
            interleaved: BTreeSet::new(),
            urgent: BTreeSet::new(),
            root: None,
            by_channel: HashMap::new(),
        };
        c.reindex();
        c
    }

    pub fn reindex(&mut self) {
        let mut by: HashMap<Name, Vec<usize>> = HashMap::new();
        for (i, comp) in self.components.iter().enumerate() {
            for p in &comp.alphabet {
                let v = by.entry(p.channel.clone()).or_default();
                if v.last() != Some(&i) {
                    v.push(i);
                }
            }
        }
        self.by_channel = by;
    }

    pub fn interleave(mut self, channels: &[&str]) -> Self {
        self.interleaved
            .extend(channels.iter().map(|c| Name::from(*c)));
        self
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.components.iter().position(|c| &*c.id == id)
    }

    /// Channel → ids of the components that have it in their alphabet.
    pub fn sync_map(&self) -> BTreeMap<Name, Vec<Name>> {
        let mut out: BTreeMap<Name, Vec<Name>> = BTreeMap::new();
        for decl in self.channels.iter() {
            let ids = self
                .by_channel
                .get(&decl.name)
                .map(|v| v.iter().map(|&i| self.components[i].id.clone()).collect())
                .unwrap_or_default();
            out.insert(decl.name.clone(), ids);
        }
        out
    }

    /// Components that must jointly engage in `e`, in index order.
    pub fn participants(&self, e: &Event) -> Vec<usize> {
        self.by_channel
            .get(&e.channel)
            .map(|v| {
                v.iter()
                    .copied()
                    .filter(|&i| self.components[i].mentions(e))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Initial state with internal steps settled.
    pub fn initial_state(&self) -> Result<SystemState, KernelError> {
        let locals = self
            .components
            .iter()
            .map(|c| component::settle(c.state.clone(), c.timed, &self.channels).map(|s| s.local))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SystemState { locals })
    }

    pub fn terminated_flags(&self, s: &SystemState) -> Vec<bool> {
        s.locals
            .iter()
            .map(|l| component::local_terminated(l, &self.channels))
            .collect()
    }

    pub fn is_terminated(&self, s: &SystemState) -> bool {
        let flags = self.terminated_flags(s);
        self.terminated_from_flags(&flags)
    }

    pub fn terminated_from_flags(&self, flags: &[bool]) -> bool {
        match self.root {
            Some(r) => flags[r],
            None => self
                .components
                .iter()
                .zip(flags)
                .all(|(c, &t)| t || c.passive),
        }
    }

    pub fn is_divergent(&self, s: &SystemState) -> bool {
        s.locals
            .iter()
            .any(|l| component::local_divergent(l, &self.channels))
    }
}

/// Joins per-component offers into system transitions.
///
/// `offers[i]` must be sorted by label. `terminated[i]` tells whether
/// component `i` has terminated (terminated components never block time).
pub(crate) fn combine<S: Clone>(
    comp: &Composition,
    current: &[S],
    offers: &[&[(Label, S)]],
    terminated: &[bool],
    policy: StepPolicy,
) -> Result<Vec<(Label, Vec<S>, Vec<usize>)>, KernelError> {
    let mut out: Vec<(Label, Vec<S>, Vec<usize>)> = Vec::new();

    for (i, list) in offers.iter().enumerate() {
        let mut k = 0;
        while k < list.len() {
            let label = &list[k].0;
            let mut end = k + 1;
            while end < list.len() && &list[end].0 == label {
                end += 1;
            }
            match label {
                Label::Tick => {}
                Label::Tau => {
                    for (_, succ) in &list[k..end] {
                        let mut next = current.to_vec();
                        next[i] = succ.clone();
                        out.push((Label::Tau, next, vec![i]));
                    }
                }
                Label::Event(e) if comp.interleaved.contains(&e.channel) => {
                    for (_, succ) in &list[k..end] {
                        let mut next = current.to_vec();
                        next[i] = succ.clone();
                        out.push((label.clone(), next, vec![i]));
                    }
                }
                Label::Event(e) => {
                    let parts = comp.participants(e);
                    if !parts.contains(&i) {
                        return Err(KernelError::WellFormed(format!(
                            "component {} offers {e} outside its alphabet",
                            comp.components[i].id
                        )));
                    }
                    if parts[0] == i {
                        joint(current, offers, label, &parts, &mut out);
                    }
                }
            }
            k = end;
        }
    }

    // Time passes only if every running timed component agrees.
    let timed: Vec<usize> = comp
        .components
        .iter()
        .enumerate()
        .filter(|(i, c)| c.timed && !terminated[*i])
        .map(|(i, _)| i)
        .collect();
    if !timed.is_empty() {
        joint(current, offers, &Label::Tick, &timed, &mut out);
    }

    if out.iter().any(|(l, ..)| is_urgent(comp, l)) {
        out.retain(|(l, ..)| is_urgent(comp, l));
    }
    if policy.maximal_progress && out.iter().any(|(l, ..)| *l != Label::Tick) {
        out.retain(|(l, ..)| *l != Label::Tick);
    }
    if policy.priority && !out.is_empty() {
        let prio = |(l, _, parts): &(Label, Vec<S>, Vec<usize>)| -> u16 {
            if *l == Label::Tick {
                return 0;
            }
            parts
                .iter()
                .filter_map(|&j| comp.components[j].priority)
                .max()
                .map(|p| p as u16 + 1)
                .unwrap_or(u16::MAX)
        };
        let top = out.iter().map(prio).max().unwrap_or(0);
        out.retain(|t| prio(t) == top);
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn is_urgent(comp: &Composition, l: &Label) -> bool {
    matches!(l, Label::Event(e) if comp.urgent.contains(&e.channel))
}

/// All joint successors where every component in `parts` performs `label`.
fn joint<S: Clone>(
    current: &[S],
    offers: &[&[(Label, S)]],
    label: &Label,
    parts: &[usize],
    out: &mut Vec<(Label, Vec<S>, Vec<usize>)>,
) {
    let mut choices: Vec<&[(Label, S)]> = Vec::with_capacity(parts.len());
    for &j in parts {
        let list = offers[j];
        let lo = list.partition_point(|(l, _)| l < label);
        let hi = list.partition_point(|(l, _)| l <= label);
        if lo == hi {
            return;
        }
        choices.push(&list[lo..hi]);
    }
    let mut acc: Vec<Vec<S>> = vec![current.to_vec()];
    for (&j, opts) in parts.iter().zip(&choices) {
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for base in &acc {
            for (_, succ) in opts.iter() {
                let mut v = base.clone();
                v[j] = succ.clone();
                next.push(v);
            }
        }
        acc = next;
    }
    out.extend(acc.into_iter().map(|v| (label.clone(), v, parts.to_vec())));
}

/// Labelled successors of one component's settled local state, sorted by
/// label. Successors are settled. A successor whose settling faults keeps
/// its error; it only matters if the composition takes that offer.
pub fn local_offers(
    local: &Local,
    c: &Component,
    channels: &ChannelTable,
) -> Result<Vec<Offer>, KernelError> {
    let settled = component::settle(local.clone(), c.timed, channels)?;
    let mut v: Vec<Offer> = settled
        .steps
        .into_iter()
        .map(|t| {
            (
                t.label,
                component::settle(t.successor, c.timed, channels).map(|s| s.local),
            )
        })
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(v)
}

pub type Offer = (Label, Result<Local, KernelError>);

/// Joins per-component offers, as produced by [`local_offers`] but over any
/// representation of local states, into system transitions.
pub fn combine_offers<S: Clone>(
    comp: &Composition,
    current: &[S],
    offers: &[&[(Label, S)]],
    terminated: &[bool],
    policy: StepPolicy,
) -> Result<Vec<(Label, Vec<S>)>, KernelError> {
    Ok(combine(comp, current, offers, terminated, policy)?
        .into_iter()
        .map(|(l, locals, _)| (l, locals))
        .collect())
}

/// Transitions of the composed system from `s`. Successors are settled.
pub fn system_steps(
    s: &SystemState,
    comp: &Composition,
    policy: StepPolicy,
) -> Result<Vec<(Label, SystemState)>, KernelError> {
    let offers = s
        .locals
        .iter()
        .zip(&comp.components)
        .map(|(l, c)| local_offers(l, c, &comp.channels))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&[Offer]> = offers.iter().map(|v| v.as_slice()).collect();
    let current: Vec<Result<Local, KernelError>> = s.locals.iter().cloned().map(Ok).collect();
    let terminated = comp.terminated_flags(s);
    combine_offers(comp, &current, &refs, &terminated, policy)?
        .into_iter()
        .map(|(l, locals)| {
            let locals = locals.into_iter().collect::<Result<Vec<_>, _>>()?;
            Ok((l, SystemState { locals }))
        })
        .collect()
}
