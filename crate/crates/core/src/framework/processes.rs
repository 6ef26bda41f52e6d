//! Framework processes written as kernel terms.

use crate::exception::ExceptionKind;
use crate::kernel::term::{self, Comm, Field, TermRef};
use crate::kernel::{BinOp, Component, EventPattern, Expr, Local, Name, Store, Value};

use super::channels as ch;

fn out(e: Expr) -> Field {
    Field::Out(e)
}

fn id(s: &str) -> Field {
    Field::Out(Expr::id(s))
}

fn comm(c: &str, fields: Vec<Field>) -> Comm {
    Comm::new(c, fields)
}

fn pat(c: &str, fields: Vec<Option<Value>>) -> EventPattern {
    EventPattern::with(c, fields)
}

fn reg_var(s: &str) -> String {
    format!("reg_{s}")
}

/// Obtains the top-level sequencer from the application, starts it, keeps
/// the global registry of schedulables, and announces the end of the
/// program once the sequencer has finished.
pub fn safelet_fw(schedulables: &[Name]) -> Component {
    let seq = || Expr::var("seq");
    let null = Expr::Const(Value::Null);
    let register = term::choice_all(schedulables.iter().map(|s| {
        let flag = reg_var(s);
        term::prefix(
            comm(ch::REGISTER, vec![id(s), Field::Any]),
            term::cond(
                Expr::var(&flag),
                term::prefix(
                    comm(
                        ch::CHECK_SCHEDULABLE,
                        vec![Field::Any, out(Expr::bool(false))],
                    ),
                    term::recvar("L"),
                ),
                term::assign(
                    &flag,
                    Expr::bool(true),
                    term::prefix(
                        comm(
                            ch::CHECK_SCHEDULABLE,
                            vec![Field::Any, out(Expr::bool(true))],
                        ),
                        term::recvar("L"),
                    ),
                ),
            ),
        )
    }));
    let finish = term::prefix(
        comm(ch::END_SEQUENCER, vec![out(seq())]),
        term::prefix(Comm::bare(ch::END_OF_PROGRAM), term::skip()),
    );
    let serve = term::rec("L", term::choice(register, finish));
    let body = term::prefix(
        Comm::bare(ch::GET_SEQUENCER_CALL),
        term::prefix(
            comm(ch::GET_SEQUENCER_RET, vec![Field::In(Name::from("seq"))]),
            term::cond(
                Expr::bin(BinOp::Eq, seq(), null.clone()),
                term::prefix(
                    comm(ch::THROW, vec![id(ExceptionKind::IllegalArgument.as_str())]),
                    term::chaos(),
                ),
                term::prefix(comm(ch::START_SEQUENCER, vec![out(seq())]), serve),
            ),
        ),
    );
    let mut store = Store::new();
    store.insert(Name::from("seq"), Value::Null);
    for s in schedulables {
        store.insert(Name::from(reg_var(s).as_str()), Value::Bool(false));
    }
    let alphabet = vec![
        EventPattern::channel(ch::GET_SEQUENCER_CALL),
        EventPattern::channel(ch::GET_SEQUENCER_RET),
        EventPattern::channel(ch::START_SEQUENCER),
        EventPattern::channel(ch::END_SEQUENCER),
        EventPattern::channel(ch::END_OF_PROGRAM),
        EventPattern::channel(ch::REGISTER),
        EventPattern::channel(ch::CHECK_SCHEDULABLE),
    ];
    Component::new("SafeletFW", Local::proc(body, store), alphabet)
}

/// One round with the application: ask for the next mission, run it, and
/// call `next` afterwards. A null answer continues with `finished`.
fn mission_round(q: &str, running: impl FnOnce(Expr) -> TermRef, finished: TermRef) -> TermRef {
    let m = || Expr::var("m");
    term::prefix(
        comm(ch::GET_NEXT_MISSION_CALL, vec![id(q)]),
        term::prefix(
            comm(
                ch::GET_NEXT_MISSION_RET,
                vec![id(q), Field::In(Name::from("m"))],
            ),
            term::cond(
                Expr::bin(BinOp::Eq, m(), Expr::Const(Value::Null)),
                finished,
                term::prefix(comm(ch::START_MISSION, vec![out(m())]), running(m())),
            ),
        ),
    )
}

fn sequencer_store() -> Store {
    let mut store = Store::new();
    store.insert(Name::from("m"), Value::Null);
    store
}

fn sequencer_alphabet(q: &str) -> Vec<EventPattern> {
    let qv = Some(Value::id(q));
    vec![
        pat(ch::GET_NEXT_MISSION_CALL, vec![qv.clone()]),
        pat(ch::GET_NEXT_MISSION_RET, vec![qv, None]),
    ]
}

/// Runs the application's missions one after another; finishing signals the
/// safelet.
pub fn top_sequencer_fw(q: &str, missions: &[Name]) -> Component {
    let round = mission_round(
        q,
        |m| term::prefix(comm(ch::MISSION_DONE, vec![out(m)]), term::recvar("L")),
        term::prefix(comm(ch::END_SEQUENCER, vec![id(q)]), term::skip()),
    );
    let body = term::prefix(
        comm(ch::START_SEQUENCER, vec![id(q)]),
        term::rec("L", round),
    );
    let mut alphabet = sequencer_alphabet(q);
    let qv = Some(Value::id(q));
    alphabet.push(pat(ch::START_SEQUENCER, vec![qv.clone()]));
    alphabet.push(pat(ch::END_SEQUENCER, vec![qv]));
    alphabet.extend(mission_patterns(missions));
    Component::new(
        &format!("SequencerFW.{q}"),
        Local::proc(body, sequencer_store()),
        alphabet,
    )
}

fn mission_patterns(missions: &[Name]) -> Vec<EventPattern> {
    missions
        .iter()
        .flat_map(|m| {
            let mv = Some(Value::Id(m.clone()));
            [
                pat(ch::START_MISSION, vec![mv.clone()]),
                pat(ch::MISSION_DONE, vec![mv]),
            ]
        })
        .collect()
}

/// A sequencer that is itself a schedulable of mission `p`. A stop from `p`
/// is forwarded as a termination request to the mission it is running.
pub fn sched_sequencer_fw(q: &str, p: &str, missions: &[Name], priority: Option<u8>) -> Component {
    let sm = || vec![id(q), id(p)];
    let done = || term::prefix(comm(ch::DONE, sm()), term::skip());
    let stop_then_done = || term::prefix(comm(ch::STOP, sm()), done());
    let running = |m: Expr| {
        term::choice(
            term::prefix(
                comm(ch::MISSION_DONE, vec![out(m.clone())]),
                term::recvar("L"),
            ),
            term::prefix(
                comm(ch::STOP, sm()),
                term::prefix(
                    comm(ch::REQUEST_TERMINATION, vec![out(m.clone()), id(q)]),
                    term::prefix(comm(ch::MISSION_DONE, vec![out(m)]), done()),
                ),
            ),
        )
    };
    let round = mission_round(q, running, term::choice(stop_then_done(), done()));
    let body = term::prefix(
        comm(ch::START_SCHEDULABLE, sm()),
        term::rec("L", term::choice(stop_then_done(), round)),
    );
    let mut alphabet = sequencer_alphabet(q);
    let smv = vec![Some(Value::id(q)), Some(Value::id(p))];
    for c in [ch::START_SCHEDULABLE, ch::STOP, ch::DONE] {
        alphabet.push(pat(c, smv.clone()));
    }
    alphabet.push(pat(ch::REQUEST_TERMINATION, vec![None, Some(Value::id(q))]));
    alphabet.extend(mission_patterns(missions));
    Component::new(
        &format!("SequencerFW.{q}"),
        Local::proc(body, sequencer_store()),
        alphabet,
    )
    .with_priority(priority)
}

/// Managed thread: one release running the application's `run` to
/// completion. A stop is acknowledged once `run` has returned.
pub fn managed_thread_fw(s: &str, m: &str, priority: Option<u8>) -> Component {
    let sm = || vec![id(s), id(m)];
    let own = |c: &str| comm(c, vec![id(s)]);
    let done = || term::prefix(comm(ch::DONE, sm()), term::skip());
    let finish = term::choice(term::prefix(comm(ch::STOP, sm()), done()), done());
    let body = term::prefix(
        comm(ch::START_SCHEDULABLE, sm()),
        term::prefix(
            own(ch::RELEASE_START),
            term::prefix(
                own(ch::RUN_CALL),
                term::choice(
                    term::prefix(own(ch::RUN_RET), term::prefix(own(ch::RELEASE_END), finish)),
                    term::prefix(
                        comm(ch::STOP, sm()),
                        term::prefix(own(ch::RUN_RET), term::prefix(own(ch::RELEASE_END), done())),
                    ),
                ),
            ),
        ),
    );
    let sv = Some(Value::id(s));
    let smv = vec![sv.clone(), Some(Value::id(m))];
    let mut alphabet: Vec<EventPattern> = [
        ch::RELEASE_START,
        ch::RELEASE_END,
        ch::RUN_CALL,
        ch::RUN_RET,
    ]
    .iter()
    .map(|c| pat(c, vec![sv.clone()]))
    .collect();
    for c in [ch::START_SCHEDULABLE, ch::STOP, ch::DONE] {
        alphabet.push(pat(c, smv.clone()));
    }
    Component::new(
        &format!("ManagedThreadFW.{s}"),
        Local::proc(body, Store::new()),
        alphabet,
    )
    .with_priority(priority)
}
