//! Channel names and the signature table shared by the framework model, the
//! compiled application and checker queries.

use crate::exception::ExceptionKind;
use crate::kernel::{ChannelDecl, ChannelTable, Domain, IntRange, KernelError};

pub const GET_SEQUENCER_CALL: &str = "getSequencerCall";
pub const GET_SEQUENCER_RET: &str = "getSequencerRet";
pub const START_SEQUENCER: &str = "start_sequencer";
pub const END_SEQUENCER: &str = "end_sequencer";
pub const END_OF_PROGRAM: &str = "end_of_program";
pub const GET_NEXT_MISSION_CALL: &str = "getNextMissionCall";
pub const GET_NEXT_MISSION_RET: &str = "getNextMissionRet";
pub const START_MISSION: &str = "start_mission";
pub const MISSION_DONE: &str = "mission_done";
pub const INITIALIZE_CALL: &str = "initializeCall";
pub const INITIALIZE_RET: &str = "initializeRet";
pub const REGISTER: &str = "register";
pub const CHECK_SCHEDULABLE: &str = "checkSchedulable";
pub const START_SCHEDULABLE: &str = "start_schedulable";
pub const STOP: &str = "stop";
pub const DONE: &str = "done";
pub const REQUEST_TERMINATION: &str = "requestTermination";
pub const CLEANUP_CALL: &str = "missionCleanupCall";
pub const CLEANUP_RET: &str = "missionCleanupRet";
pub const RELEASE_START: &str = "releaseStart";
pub const RELEASE_END: &str = "releaseEnd";
pub const RELEASE: &str = "release";
pub const OVERRUN: &str = "overrun";
pub const DEADLINE_MISS: &str = "deadlineMiss";
pub const HANDLE_CALL: &str = "handleEventCall";
pub const HANDLE_RET: &str = "handleEventRet";
pub const RUN_CALL: &str = "runCall";
pub const RUN_RET: &str = "runRet";
pub const START_SYNC: &str = "startSyncMeth";
pub const LOCK_ACQUIRED: &str = "lockAcquired";
pub const END_SYNC: &str = "endSyncMeth";
pub const WAIT_CALL: &str = "waitCall";
pub const WAIT_RET: &str = "waitRet";
pub const NOTIFY: &str = "notify";
pub const NOTIFY_ALL: &str = "notifyAll";
pub const SPURIOUS: &str = "spuriousWakeup";
pub const INTERRUPT: &str = "interrupt";
pub const THROW: &str = "throw";
pub const GET: &str = "get";
pub const SET: &str = "set";
pub const PROBE: &str = "probe";

/// Channels each component performs on its own, without partners.
pub const SOLO: &[&str] = &[THROW, PROBE];

/// Identifier sets the channel domains are drawn from.
#[derive(Clone, Debug, Default)]
pub struct Universe {
    pub top_sequencers: Vec<String>,
    pub sequencers: Vec<String>,
    pub missions: Vec<String>,
    pub schedulables: Vec<String>,
    pub handlers: Vec<String>,
    pub aperiodics: Vec<String>,
    pub threads: Vec<String>,
    /// Threads that may lock objects or be interrupted.
    pub lockers: Vec<String>,
    pub objects: Vec<String>,
    pub fields: Vec<String>,
    pub probes: Vec<String>,
}

impl Universe {
    /// Every identifier that may appear as a data value.
    pub fn all_ids(&self) -> Vec<String> {
        let mut v: Vec<String> = [
            &self.sequencers,
            &self.missions,
            &self.schedulables,
            &self.objects,
            &self.probes,
        ]
        .into_iter()
        .flatten()
        .cloned()
        .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Domain of application data values (fields, arguments, returns).
    pub fn data_domain(&self) -> Domain {
        Domain::Union(vec![
            Domain::Ints,
            Domain::Bools,
            Domain::ids(self.all_ids()),
        ])
        .nullable()
    }

    /// Components that may read or write object fields.
    pub fn callers(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .schedulables
            .iter()
            .chain(&self.missions)
            .cloned()
            .collect();
        v.sort();
        v.dedup();
        v
    }
}

/// The framework's channel signatures over the given identifier sets.
pub fn channel_table(u: &Universe, ints: IntRange) -> Result<ChannelTable, KernelError> {
    let ids = |v: &Vec<String>| Domain::ids(v.iter().map(String::as_str));
    let top = ids(&u.top_sequencers);
    let seqs = ids(&u.sequencers);
    let ms = ids(&u.missions);
    let ss = ids(&u.schedulables);
    let hs = ids(&u.handlers);
    let aps = ids(&u.aperiodics);
    let ts = ids(&u.threads);
    let ls = ids(&u.lockers);
    let os = ids(&u.objects);
    let fs = ids(&u.fields);
    let mut requesters = u.schedulables.clone();
    requesters.extend(u.missions.iter().cloned());
    let requesters = ids(&requesters);
    let callers = ids(&u.callers());
    let kinds = Domain::ids(ExceptionKind::ALL.iter().map(|k| k.as_str()));

    let decls: Vec<(&str, Vec<(&str, Domain)>)> = vec![
        (GET_SEQUENCER_CALL, vec![]),
        (GET_SEQUENCER_RET, vec![("seq", top.clone().nullable())]),
        (START_SEQUENCER, vec![("seq", top.clone())]),
        (END_SEQUENCER, vec![("seq", top)]),
        (END_OF_PROGRAM, vec![]),
        (GET_NEXT_MISSION_CALL, vec![("seq", seqs.clone())]),
        (
            GET_NEXT_MISSION_RET,
            vec![("seq", seqs), ("mission", ms.clone().nullable())],
        ),
        (START_MISSION, vec![("mission", ms.clone())]),
        (MISSION_DONE, vec![("mission", ms.clone())]),
        (INITIALIZE_CALL, vec![("mission", ms.clone())]),
        (INITIALIZE_RET, vec![("mission", ms.clone())]),
        (
            REGISTER,
            vec![("schedulable", ss.clone()), ("mission", ms.clone())],
        ),
        (
            CHECK_SCHEDULABLE,
            vec![("mission", ms.clone()), ("ok", Domain::Bools)],
        ),
        (
            START_SCHEDULABLE,
            vec![("schedulable", ss.clone()), ("mission", ms.clone())],
        ),
        (
            STOP,
            vec![("schedulable", ss.clone()), ("mission", ms.clone())],
        ),
        (
            DONE,
            vec![("schedulable", ss.clone()), ("mission", ms.clone())],
        ),
        (
            REQUEST_TERMINATION,
            vec![("mission", ms.clone()), ("requester", requesters)],
        ),
        (CLEANUP_CALL, vec![("mission", ms.clone())]),
        (CLEANUP_RET, vec![("mission", ms)]),
        (RELEASE_START, vec![("schedulable", ss.clone())]),
        (RELEASE_END, vec![("schedulable", ss.clone())]),
        (RELEASE, vec![("handler", aps), ("firer", callers.clone())]),
        (OVERRUN, vec![("handler", hs.clone())]),
        (DEADLINE_MISS, vec![("handler", hs.clone())]),
        (HANDLE_CALL, vec![("handler", hs.clone())]),
        (HANDLE_RET, vec![("handler", hs)]),
        (RUN_CALL, vec![("thread", ts.clone())]),
        (RUN_RET, vec![("thread", ts)]),
        (
            START_SYNC,
            vec![("object", os.clone()), ("thread", ls.clone())],
        ),
        (
            LOCK_ACQUIRED,
            vec![("object", os.clone()), ("thread", ls.clone())],
        ),
        (
            END_SYNC,
            vec![("object", os.clone()), ("thread", ls.clone())],
        ),
        (
            WAIT_CALL,
            vec![("object", os.clone()), ("thread", ls.clone())],
        ),
        (
            WAIT_RET,
            vec![("object", os.clone()), ("thread", ls.clone())],
        ),
        (NOTIFY, vec![("object", os.clone()), ("thread", ls.clone())]),
        (
            NOTIFY_ALL,
            vec![("object", os.clone()), ("thread", ls.clone())],
        ),
        (
            SPURIOUS,
            vec![("object", os.clone()), ("thread", ls.clone())],
        ),
        (INTERRUPT, vec![("thread", ls)]),
        (THROW, vec![("kind", kinds)]),
        (
            GET,
            vec![
                ("object", os.clone()),
                ("field", fs.clone()),
                ("caller", callers.clone()),
                ("value", u.data_domain()),
            ],
        ),
        (
            SET,
            vec![
                ("object", os),
                ("field", fs),
                ("caller", callers),
                ("value", u.data_domain()),
            ],
        ),
        (PROBE, vec![("label", ids(&u.probes))]),
    ];
    let mut table = ChannelTable::new(ints);
    for (name, fields) in decls {
        table.declare(ChannelDecl::new(name, fields))?;
    }
    Ok(table)
}
