//! Puts a compiled program together with its framework processes.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::appmodel::ast::{Program, SchedKind, Type};
use crate::appmodel::compile::{call_channel, const_value, ret_channel, Compiled};
use crate::kernel::{ChannelDecl, Composition, Domain, IntRange, KernelError, Name};
use crate::sync;

use super::channels::{self as ch, Universe};
use super::handler::{HandlerFw, Release};
use super::mission::MissionFw;
use super::processes;
use super::store::FieldStore;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AssembleOptions {
    /// Let waiting threads wake without a notify.
    pub spurious: bool,
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("assembly fault: {0}")]
    Dangling(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn names<'a>(it: impl IntoIterator<Item = &'a String>) -> Vec<String> {
    let mut v: Vec<String> = it.into_iter().cloned().collect();
    v.sort();
    v.dedup();
    v
}

/// Identifier sets of a program.
pub fn universe(p: &Program, c: &Compiled) -> Universe {
    let kinds = |f: fn(&SchedKind) -> bool| {
        names(
            p.schedulables
                .iter()
                .filter(|s| f(&s.kind))
                .map(|s| &s.name),
        )
    };
    let top: Vec<String> = p
        .safelet
        .iter()
        .filter_map(|s| s.sequencer.clone())
        .collect();
    let mut sequencers = top.clone();
    sequencers.extend(kinds(|k| matches!(k, SchedKind::Sequencer { .. })));
    let owners = p
        .missions
        .iter()
        .map(|m| (&m.name, &m.vars))
        .chain(p.objects.iter().map(|o| (&o.name, &o.vars)));
    let mut objects: Vec<String> = c.locks.keys().map(|n| n.to_string()).collect();
    let mut fields = Vec::new();
    for (o, vars) in owners {
        if !vars.is_empty() {
            objects.push(o.clone());
        }
        fields.extend(vars.iter().map(|v| v.name.clone()));
    }
    Universe {
        top_sequencers: top,
        sequencers: names(&sequencers),
        missions: names(p.missions.iter().map(|m| &m.name)),
        schedulables: names(p.schedulables.iter().map(|s| &s.name)),
        handlers: kinds(SchedKind::is_handler),
        aperiodics: kinds(|k| *k == SchedKind::Aperiodic),
        threads: kinds(|k| *k == SchedKind::Thread),
        lockers: c.lockers.keys().map(|n| n.to_string()).collect(),
        objects: names(&objects),
        fields: names(&fields),
        probes: c.probes.iter().map(|n| n.to_string()).collect(),
    }
}

fn ids(v: &[String]) -> Domain {
    Domain::ids(v.iter().map(String::as_str))
}

fn field_domain(ty: Type, u: &Universe) -> Domain {
    match ty {
        Type::Int => Domain::Ints,
        Type::Bool => Domain::Bools,
        Type::Id => ids(&u.all_ids()).nullable(),
    }
}

/// The framework's components for `p`, followed by the application's.
pub fn assemble_system(
    p: &Program,
    c: Compiled,
    opts: AssembleOptions,
) -> Result<Composition, AssemblyError> {
    let u = universe(p, &c);
    let ints = IntRange {
        lo: p.config.ints.0,
        hi: p.config.ints.1,
    };
    let mut table = ch::channel_table(&u, ints)?;
    let owners: Vec<String> = names(
        p.missions
            .iter()
            .map(|m| &m.name)
            .chain(p.objects.iter().map(|o| &o.name)),
    );
    let callers = ids(&u.callers());
    let mut solo: Vec<String> = ch::SOLO.iter().map(|s| s.to_string()).collect();
    for (m, arity) in &c.methods {
        let params: Vec<String> = (0..*arity).map(|i| format!("arg{i}")).collect();
        let mut fields = vec![("object", ids(&owners)), ("caller", callers.clone())];
        fields.extend(params.iter().map(|a| (a.as_str(), u.data_domain())));
        table.declare(ChannelDecl::new(&call_channel(m), fields))?;
        table.declare(ChannelDecl::new(
            &ret_channel(m),
            vec![
                ("object", ids(&owners)),
                ("caller", callers.clone()),
                ("value", u.data_domain()),
            ],
        ))?;
        solo.push(call_channel(m));
        solo.push(ret_channel(m));
    }

    let safelet = p
        .safelet
        .as_ref()
        .ok_or_else(|| AssemblyError::Dangling("no safelet".into()))?;
    let sched_names: Vec<Name> = u
        .schedulables
        .iter()
        .map(|s| Name::from(s.as_str()))
        .collect();
    let mut comps = vec![processes::safelet_fw(&sched_names)];
    if let Some(q) = &safelet.sequencer {
        let seq = p
            .sequencer(q)
            .ok_or_else(|| AssemblyError::Dangling(format!("sequencer {q}")))?;
        let missions: Vec<Name> = seq
            .missions
            .iter()
            .map(|m| Name::from(m.as_str()))
            .collect();
        comps.push(processes::top_sequencer_fw(q, &missions));
    }

    let mut requesters = c.requesters.clone();
    for s in &p.schedulables {
        if let SchedKind::Sequencer { missions } = &s.kind {
            for m in missions {
                requesters
                    .entry(Name::from(m.as_str()))
                    .or_default()
                    .insert(Name::from(s.name.as_str()));
            }
        }
    }
    for m in &p.missions {
        let mut candidates: Vec<Name> = Vec::new();
        for s in &m.registers {
            let n = Name::from(s.as_str());
            if !candidates.contains(&n) {
                candidates.push(n);
            }
        }
        let reqs = requesters
            .get(m.name.as_str())
            .cloned()
            .unwrap_or_default()
            .into_iter()
            .collect();
        comps.push(MissionFw::new(&m.name, candidates, reqs).component());
    }

    for s in &p.schedulables {
        let mission = p.mission_of(&s.name).ok_or_else(|| {
            AssemblyError::Dangling(format!("schedulable {} has no mission", s.name))
        })?;
        let prio = Some(s.priority);
        let release = match &s.kind {
            SchedKind::Thread => {
                comps.push(processes::managed_thread_fw(&s.name, &mission.name, prio));
                continue;
            }
            SchedKind::Sequencer { missions } => {
                let ms: Vec<Name> = missions.iter().map(|m| Name::from(m.as_str())).collect();
                comps.push(processes::sched_sequencer_fw(
                    &s.name,
                    &mission.name,
                    &ms,
                    prio,
                ));
                continue;
            }
            SchedKind::Periodic { period } => Release::Periodic { period: *period },
            SchedKind::Aperiodic => Release::Aperiodic,
            SchedKind::OneShot { offset } => Release::OneShot { offset: *offset },
        };
        let firers = c
            .firers
            .get(s.name.as_str())
            .map(|f| f.iter().cloned().collect())
            .unwrap_or_default();
        comps.push(
            HandlerFw::new(&s.name, &mission.name, release, s.deadline, firers).component(prio),
        );
    }

    let all_callers: Vec<Name> = u.callers().iter().map(|s| Name::from(s.as_str())).collect();
    let stores = p
        .missions
        .iter()
        .map(|m| (&m.name, &m.vars))
        .chain(p.objects.iter().map(|o| (&o.name, &o.vars)));
    for (owner, vars) in stores {
        if vars.is_empty() {
            continue;
        }
        let fields = vars
            .iter()
            .map(|v| {
                (
                    Name::from(v.name.as_str()),
                    field_domain(v.ty, &u),
                    const_value(&v.init),
                )
            })
            .collect();
        comps.push(FieldStore::new(owner, fields, all_callers.clone()).component());
    }

    for (o, users) in &c.locks {
        let ceiling = p
            .mission(o)
            .map(|m| m.ceiling)
            .or_else(|| p.object(o).map(|x| x.ceiling))
            .ok_or_else(|| AssemblyError::Dangling(format!("lock {o}")))?
            .unwrap_or(p.config.priorities.1);
        let threads: BTreeMap<Name, u8> = users.iter().map(|t| (t.clone(), c.lockers[t])).collect();
        comps.push(sync::object_fw(o, ceiling, threads, opts.spurious));
    }
    for (t, prio) in &c.lockers {
        comps.push(sync::thread_fw(t, *prio));
    }

    comps.extend(c.components);
    let mut comp = Composition::new(table, comps);
    comp.interleaved = solo
        .iter()
        .map(|s| Name::from(s.as_str()))
        .collect::<BTreeSet<_>>();
    comp.urgent.insert(Name::from(ch::START_SCHEDULABLE));
    comp.root = Some(0);
    Ok(comp)
}
