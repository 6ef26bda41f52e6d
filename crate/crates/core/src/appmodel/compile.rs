//! Translation of application declarations into kernel processes.
//!
//! Method bodies are inlined into the calling component between
//! `<m>Call(owner, caller, args..)` and `<m>Ret(owner, caller, value)`
//! markers. Fields of missions and objects live in a separate store
//! component and are read and written with `get`/`set` events.

use std::collections::{BTreeMap, BTreeSet};

use crate::framework::channels as ch;
use crate::kernel::term::{self, Comm, Field, Term, TermRef};
use crate::kernel::{Component, EventPattern, Expr, Local, Name, Store, Value};

use super::ast::*;

/// Application components plus what the framework side needs to know about
/// how they interact.
#[derive(Debug, Default)]
pub struct Compiled {
    pub components: Vec<Component>,
    /// Method name to parameter count, for the call/return channels.
    pub methods: BTreeMap<String, usize>,
    /// Callers that lock, wait or interrupt, with their priority.
    pub lockers: BTreeMap<Name, u8>,
    /// Objects used as locks, with the callers that use them.
    pub locks: BTreeMap<Name, BTreeSet<Name>>,
    /// Missions and the callers that may request their termination.
    pub requesters: BTreeMap<Name, BTreeSet<Name>>,
    /// Aperiodic handlers and the callers that fire them.
    pub firers: BTreeMap<Name, BTreeSet<Name>>,
    pub probes: BTreeSet<Name>,
}

pub fn call_channel(method: &str) -> String {
    format!("{method}Call")
}

pub fn ret_channel(method: &str) -> String {
    format!("{method}Ret")
}

/// Identifier of the application component for a declaration.
pub fn app_id(name: &str) -> String {
    format!("App.{name}")
}

/// A non-synchronised method whose body only computes. It is inlined
/// without call and return events.
pub fn is_pure(m: &Method) -> bool {
    let mut pure = !m.sync;
    walk_block(&m.body, &mut |s| {
        if !matches!(
            s,
            Stmt::Var(_)
                | Stmt::Assign { .. }
                | Stmt::If { .. }
                | Stmt::While { .. }
                | Stmt::Return { .. }
        ) {
            pure = false;
        }
    });
    pure
}

pub fn default_value(ty: Type) -> Value {
    match ty {
        Type::Int => Value::Int(0),
        Type::Bool => Value::Bool(false),
        Type::Id => Value::Null,
    }
}

/// Compiles a validated program.
pub fn compile_program(p: &Program) -> Compiled {
    let mut out = Compiled::default();
    for owner in p
        .missions
        .iter()
        .map(|m| &m.methods)
        .chain(p.objects.iter().map(|o| &o.methods))
    {
        for m in owner {
            out.methods.insert(m.name.clone(), m.params.len());
        }
    }
    if let Some(s) = &p.safelet {
        let answer = s
            .sequencer
            .as_deref()
            .map_or(Expr::Const(Value::Null), Expr::id);
        let body = term::prefix(
            Comm::bare(ch::GET_SEQUENCER_CALL),
            term::prefix(
                Comm::new(ch::GET_SEQUENCER_RET, vec![Field::Out(answer)]),
                term::skip(),
            ),
        );
        out.components
            .push(component(&s.name, body, Store::new(), false, None));
    }
    for s in &p.sequencers {
        let body = sequencer_answers(&s.name, &s.missions, None);
        out.components
            .push(component(&s.name, body, Store::new(), false, None));
    }
    for m in &p.missions {
        let mut cx = Cx::new(p, &m.name, Some(&m.name), p.config.priorities.0, &mut out);
        let frame = Frame::owner_frame(p, &m.name);
        let cleanup = cx.block(&m.cleanup, &frame);
        let timed = cx.timed;
        let mid = || Field::Out(Expr::id(&m.name));
        let registers = m.registers.iter().map(|s| {
            term::prefix(
                Comm::new(ch::REGISTER, vec![Field::Out(Expr::id(s)), mid()]),
                term::skip(),
            )
        });
        let body = term::seq_all(
            std::iter::once(term::prefix(
                Comm::new(ch::INITIALIZE_CALL, vec![mid()]),
                term::skip(),
            ))
            .chain(registers)
            .chain([
                term::prefix(Comm::new(ch::INITIALIZE_RET, vec![mid()]), term::skip()),
                term::prefix(Comm::new(ch::CLEANUP_CALL, vec![mid()]), cleanup),
                term::prefix(Comm::new(ch::CLEANUP_RET, vec![mid()]), term::skip()),
            ]),
        );
        out.components
            .push(component(&m.name, body, Store::new(), timed, None));
    }
    for s in &p.schedulables {
        let mission = p.mission_of(&s.name).map(|m| m.name.clone());
        if let SchedKind::Sequencer { missions } = &s.kind {
            let body = sequencer_answers(&s.name, missions, mission.as_deref());
            out.components.push(component(
                &s.name,
                body,
                Store::new(),
                false,
                Some(s.priority),
            ));
            continue;
        }
        let mut store = Store::new();
        let mut frame = Frame::default();
        for v in &s.vars {
            store.insert(Name::from(v.name.as_str()), const_value(&v.init));
            frame.locals.insert(v.name.clone(), v.name.clone());
        }
        let mut cx = Cx::new(p, &s.name, mission.as_deref(), s.priority, &mut out);
        let body = cx.block(&s.body, &frame);
        let timed = cx.timed;
        let own = |c: &str| Comm::new(c, vec![Field::Out(Expr::id(&s.name))]);
        let t = if s.kind == SchedKind::Thread {
            term::prefix(
                own(ch::RUN_CALL),
                term::seq(body, term::prefix(own(ch::RUN_RET), term::skip())),
            )
        } else {
            let done = Comm::new(
                ch::DONE,
                vec![
                    Field::Out(Expr::id(&s.name)),
                    Field::Out(
                        mission
                            .as_deref()
                            .map_or(Expr::Const(Value::Null), Expr::id),
                    ),
                ],
            );
            term::rec(
                "H",
                term::choice(
                    term::prefix(
                        own(ch::HANDLE_CALL),
                        term::seq(body, term::prefix(own(ch::HANDLE_RET), term::recvar("H"))),
                    ),
                    term::prefix(done, term::skip()),
                ),
            )
        };
        out.components
            .push(component(&s.name, t, store, timed, Some(s.priority)));
    }
    out
}

/// Answers `getNextMission` with each mission in turn, then null. A
/// schedulable sequencer may be stopped between answers.
fn sequencer_answers(q: &str, missions: &[String], parent: Option<&str>) -> TermRef {
    let qf = || Field::Out(Expr::id(q));
    let answer = |m: Expr, k: TermRef| {
        term::prefix(
            Comm::new(ch::GET_NEXT_MISSION_CALL, vec![qf()]),
            term::prefix(
                Comm::new(ch::GET_NEXT_MISSION_RET, vec![qf(), Field::Out(m)]),
                k,
            ),
        )
    };
    let done = || {
        parent.map(|p| {
            term::prefix(
                Comm::new(ch::DONE, vec![qf(), Field::Out(Expr::id(p))]),
                term::skip(),
            )
        })
    };
    let stoppable = |t: TermRef| match done() {
        Some(d) => term::choice(t, d),
        None => t,
    };
    let last = stoppable(answer(
        Expr::Const(Value::Null),
        done().unwrap_or_else(term::skip),
    ));
    missions
        .iter()
        .rev()
        .fold(last, |k, m| stoppable(answer(Expr::id(m), k)))
}

fn component(
    name: &str,
    body: TermRef,
    store: Store,
    timed: bool,
    priority: Option<u8>,
) -> Component {
    let mut comms = Vec::new();
    collect_comms(&body, &mut comms);
    let mut alphabet: Vec<EventPattern> = Vec::new();
    for c in comms {
        let fields = c
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| match f {
                Field::Out(Expr::Const(v)) if identity_field(&c.channel) == Some(i) => {
                    Some(v.clone())
                }
                _ => None,
            })
            .collect();
        let pat = EventPattern::with(&c.channel, fields);
        if !alphabet.contains(&pat) {
            alphabet.push(pat);
        }
    }
    for pat in client_patterns(name) {
        if !alphabet.contains(&pat) {
            alphabet.push(pat);
        }
    }
    Component::new(&app_id(name), Local::proc(body, store), alphabet)
        .timed(timed)
        .with_priority(priority)
}

/// Position of the field naming the application process an event belongs
/// to. Other fields are left open in alphabets, so the framework cannot pick
/// a value the application does not offer.
fn identity_field(channel: &str) -> Option<usize> {
    match channel {
        ch::GET_SEQUENCER_CALL | ch::GET_SEQUENCER_RET => None,
        ch::GET | ch::SET => Some(2),
        ch::REQUEST_TERMINATION | ch::RELEASE => Some(1),
        ch::START_SYNC
        | ch::LOCK_ACQUIRED
        | ch::END_SYNC
        | ch::WAIT_CALL
        | ch::WAIT_RET
        | ch::NOTIFY
        | ch::NOTIFY_ALL => Some(1),
        ch::REGISTER => Some(1),
        _ => Some(0),
    }
}

/// Service events performed on behalf of `me`. Claiming all of them keeps
/// the framework from performing them without the client.
fn client_patterns(me: &str) -> Vec<EventPattern> {
    let me = Some(Value::id(me));
    let at = |channel: &str, arity: usize, pos: usize| {
        let mut fields = vec![None; arity];
        fields[pos] = me.clone();
        EventPattern::with(channel, fields)
    };
    let mut v = vec![
        at(ch::GET, 4, 2),
        at(ch::SET, 4, 2),
        at(ch::INTERRUPT, 1, 0),
        at(ch::RELEASE, 2, 1),
    ];
    for c in [
        ch::START_SYNC,
        ch::LOCK_ACQUIRED,
        ch::END_SYNC,
        ch::WAIT_CALL,
        ch::WAIT_RET,
        ch::NOTIFY,
        ch::NOTIFY_ALL,
    ] {
        v.push(at(c, 2, 1));
    }
    v
}

fn collect_comms(t: &TermRef, out: &mut Vec<Comm>) {
    match &**t {
        Term::Skip
        | Term::Stop
        | Term::Chaos
        | Term::RecVar(_)
        | Term::Wait(_)
        | Term::EndScope(_) => {}
        Term::Prefix(c, k) => {
            out.push(c.clone());
            collect_comms(k, out);
        }
        Term::Interrupt(a, c) => {
            out.push(c.clone());
            collect_comms(a, out);
        }
        Term::Seq(a, b) | Term::ExtChoice(a, b) => {
            collect_comms(a, out);
            collect_comms(b, out);
        }
        Term::Guard(_, k)
        | Term::Recursion(_, k)
        | Term::Assign(_, _, k)
        | Term::VarBlock(_, k) => collect_comms(k, out),
    }
}

/// How names in a body resolve.
#[derive(Clone, Debug, Default)]
struct Frame {
    /// Source name to store variable.
    locals: BTreeMap<String, String>,
    /// Owner whose fields are visible, with the field names.
    owner: Option<(String, BTreeSet<String>)>,
    /// Store variable holding the return value.
    ret: Option<String>,
}

impl Frame {
    fn owner_frame(p: &Program, owner: &str) -> Frame {
        let fields = p
            .members(owner)
            .map(|(vars, _)| vars.iter().map(|v| v.name.clone()).collect())
            .unwrap_or_default();
        Frame {
            owner: Some((owner.to_string(), fields)),
            ..Frame::default()
        }
    }

    fn field_owner(&self, name: &str) -> Option<&str> {
        if self.locals.contains_key(name) {
            return None;
        }
        match &self.owner {
            Some((o, fields)) if fields.contains(name) => Some(o),
            _ => None,
        }
    }
}

/// Compilation state for one calling component.
struct Cx<'a> {
    p: &'a Program,
    me: String,
    mission: Option<String>,
    priority: u8,
    counter: usize,
    timed: bool,
    out: &'a mut Compiled,
}

impl<'a> Cx<'a> {
    fn new(
        p: &'a Program,
        me: &str,
        mission: Option<&str>,
        priority: u8,
        out: &'a mut Compiled,
    ) -> Self {
        Cx {
            p,
            me: me.to_string(),
            mission: mission.map(str::to_string),
            priority,
            counter: 0,
            timed: false,
            out,
        }
    }

    fn fresh(&mut self, base: &str) -> String {
        self.counter += 1;
        format!("{base}#{}", self.counter)
    }

    fn me(&self) -> Field {
        Field::Out(Expr::id(&self.me))
    }

    fn lock_user(&mut self, object: &str) {
        self.out
            .lockers
            .insert(Name::from(self.me.as_str()), self.priority);
        self.out
            .locks
            .entry(Name::from(object))
            .or_default()
            .insert(Name::from(self.me.as_str()));
    }

    fn monitor(&mut self, channel: &str, object: &str) -> Comm {
        self.lock_user(object);
        Comm::new(channel, vec![Field::Out(Expr::id(object)), self.me()])
    }

    /// Rewrites `e` for the store. Field reads become fresh variables, listed
    /// with the owner and field they come from.
    fn rewrite(&mut self, e: &Expr, frame: &Frame) -> (Vec<(String, String, String)>, Expr) {
        let mut reads = Vec::new();
        let mut renamed: BTreeMap<Name, Expr> = BTreeMap::new();
        for v in e.vars() {
            let name = v.to_string();
            let r = if let Some(local) = frame.locals.get(&name) {
                Expr::var(local)
            } else if let Some(owner) = frame.field_owner(&name) {
                let tmp = self.fresh(&format!("{owner}.{name}"));
                reads.push((owner.to_string(), name.clone(), tmp.clone()));
                Expr::var(&tmp)
            } else {
                Expr::id(&name)
            };
            renamed.insert(v, r);
        }
        (reads, e.rename(&|n| renamed.get(n).cloned()))
    }

    /// Runs `k` on the rewritten `e`, preceded by a `get` for every field
    /// read.
    fn with_expr(&mut self, e: &Expr, frame: &Frame, k: impl FnOnce(Expr) -> TermRef) -> TermRef {
        let (reads, e) = self.rewrite(e, frame);
        let body = reads.iter().rev().fold(k(e), |acc, (owner, field, tmp)| {
            term::prefix(
                Comm::new(
                    ch::GET,
                    vec![
                        Field::Out(Expr::id(owner)),
                        Field::Out(Expr::id(field)),
                        self.me(),
                        Field::In(Name::from(tmp.as_str())),
                    ],
                ),
                acc,
            )
        });
        let decls = reads
            .into_iter()
            .map(|(_, _, tmp)| (Name::from(tmp.as_str()), Expr::Const(Value::Null)))
            .collect();
        term::var_block(decls, body)
    }

    /// Stores the value of `e` in the variable or field `target`.
    fn store_into(&mut self, target: &str, e: &Expr, frame: &Frame) -> TermRef {
        if let Some(local) = frame.locals.get(target) {
            let local = local.clone();
            return self.with_expr(e, frame, |v| term::assign(&local, v, term::skip()));
        }
        let owner = frame
            .field_owner(target)
            .expect("validated assignment target")
            .to_string();
        let me = self.me();
        self.with_expr(e, frame, |v| {
            term::prefix(
                Comm::new(
                    ch::SET,
                    vec![
                        Field::Out(Expr::id(&owner)),
                        Field::Out(Expr::id(target)),
                        me,
                        Field::Out(v),
                    ],
                ),
                term::skip(),
            )
        })
    }

    fn block(&mut self, stmts: &[Stmt], frame: &Frame) -> TermRef {
        let mut parts = Vec::new();
        for (i, s) in stmts.iter().enumerate() {
            if let Stmt::Var(v) = s {
                let mut inner = frame.clone();
                let store_name = match &frame.owner {
                    Some(_) => self.fresh(&format!("{}.{}", self.me, v.name)),
                    None => v.name.clone(),
                };
                inner.locals.insert(v.name.clone(), store_name.clone());
                let init = self.store_into(&v.name, &v.init, &inner);
                let rest = self.block(&stmts[i + 1..], &inner);
                let scoped = term::var_block(
                    vec![(
                        Name::from(store_name.as_str()),
                        Expr::Const(default_value(v.ty)),
                    )],
                    term::seq(init, rest),
                );
                parts.push(scoped);
                return term::seq_all(parts);
            }
            parts.push(self.stmt(s, frame));
        }
        term::seq_all(parts)
    }

    /// `if` guards may read fields; those reads are done first into a flag
    /// so that the choice itself is resolved by the store.
    fn condition(&mut self, c: &Expr, frame: &Frame, k: impl FnOnce(Expr) -> TermRef) -> TermRef {
        if !reads_fields(c, frame) {
            let (_, e) = self.rewrite(c, frame);
            return k(e);
        }
        let flag = self.fresh("cond");
        let fill = self.with_expr(c, frame, |e| term::assign(&flag, e, term::skip()));
        term::var_block(
            vec![(Name::from(flag.as_str()), Expr::bool(false))],
            term::seq(fill, k(Expr::var(&flag))),
        )
    }

    fn stmt(&mut self, s: &Stmt, frame: &Frame) -> TermRef {
        match s {
            Stmt::Var(_) => unreachable!("handled by block"),
            Stmt::Assign { name, value, .. } => self.store_into(name, value, frame),
            Stmt::If {
                cond, then, els, ..
            } => {
                let a = self.block(then, frame);
                let b = self.block(els, frame);
                self.condition(cond, frame, |c| term::cond(c, a, b))
            }
            Stmt::While { cond, body, .. } => {
                let w = self.fresh("W");
                let body = self.block(body, frame);
                if !reads_fields(cond, frame) {
                    return self.condition(cond, frame, |c| {
                        term::rec(
                            &w,
                            term::cond(c, term::seq(body, term::recvar(&w)), term::skip()),
                        )
                    });
                }
                // The flag is refreshed at the top of every iteration.
                let flag = self.fresh("cond");
                let fill = self.with_expr(cond, frame, |e| term::assign(&flag, e, term::skip()));
                let looped = term::rec(
                    &w,
                    term::seq(
                        fill,
                        term::cond(
                            Expr::var(&flag),
                            term::seq(body, term::recvar(&w)),
                            term::skip(),
                        ),
                    ),
                );
                term::var_block(vec![(Name::from(flag.as_str()), Expr::bool(false))], looped)
            }
            Stmt::Call {
                result,
                target,
                method,
                args,
                ..
            } => self.call(result.as_deref(), target, method, args, frame),
            Stmt::Wait { target, .. } => {
                let o = self.target(target, frame);
                let call = self.monitor(ch::WAIT_CALL, &o);
                let ret = self.monitor(ch::WAIT_RET, &o);
                term::prefix(call, term::prefix(ret, term::skip()))
            }
            Stmt::Notify { target, all, .. } => {
                let o = self.target(target, frame);
                let c = if *all { ch::NOTIFY_ALL } else { ch::NOTIFY };
                term::prefix(self.monitor(c, &o), term::skip())
            }
            Stmt::RequestTermination { target, .. } => {
                let m = self.target(target, frame);
                self.out
                    .requesters
                    .entry(Name::from(m.as_str()))
                    .or_default()
                    .insert(Name::from(self.me.as_str()));
                term::prefix(
                    Comm::new(
                        ch::REQUEST_TERMINATION,
                        vec![Field::Out(Expr::id(&m)), self.me()],
                    ),
                    term::skip(),
                )
            }
            Stmt::Fire { handler, .. } => {
                self.out
                    .firers
                    .entry(Name::from(handler.as_str()))
                    .or_default()
                    .insert(Name::from(self.me.as_str()));
                term::prefix(
                    Comm::new(ch::RELEASE, vec![Field::Out(Expr::id(handler)), self.me()]),
                    term::skip(),
                )
            }
            Stmt::Interrupt { .. } => {
                self.out
                    .lockers
                    .insert(Name::from(self.me.as_str()), self.priority);
                term::prefix(Comm::new(ch::INTERRUPT, vec![self.me()]), term::skip())
            }
            Stmt::Sleep { ticks, .. } => {
                self.timed = true;
                term::wait(*ticks)
            }
            Stmt::Return { value, .. } => match (value, &frame.ret) {
                (Some(v), Some(r)) => {
                    let r = r.clone();
                    self.with_expr(v, frame, |e| term::assign(&r, e, term::skip()))
                }
                _ => term::skip(),
            },
            Stmt::Probe { label, .. } => {
                self.out.probes.insert(Name::from(label.as_str()));
                term::prefix(
                    Comm::new(ch::PROBE, vec![Field::Out(Expr::id(label))]),
                    term::skip(),
                )
            }
        }
    }

    fn target(&self, t: &Target, frame: &Frame) -> String {
        match t {
            Target::This => frame
                .owner
                .as_ref()
                .map(|(o, _)| o.clone())
                .or_else(|| self.mission.clone())
                .expect("validated target"),
            Target::Mission => match &frame.owner {
                Some((o, _)) if self.p.mission(o).is_some() => o.clone(),
                _ => self.mission.clone().expect("validated target"),
            },
            Target::Named(n) => n.clone(),
        }
    }

    fn call(
        &mut self,
        result: Option<&str>,
        target: &Target,
        method: &str,
        args: &[Expr],
        frame: &Frame,
    ) -> TermRef {
        let owner = self.target(target, frame);
        let (_, methods) = self.p.members(&owner).expect("validated owner");
        let m = methods
            .iter()
            .find(|m| m.name == method)
            .expect("validated method")
            .clone();
        let pure = is_pure(&m);

        let mut inner = Frame::owner_frame(self.p, &owner);
        let mut decls = Vec::new();
        for prm in &m.params {
            let v = self.fresh(&format!("{owner}.{method}.{}", prm.name));
            inner.locals.insert(prm.name.clone(), v.clone());
            decls.push((Name::from(v.as_str()), Expr::Const(default_value(prm.ty))));
        }
        let ret = m.ret.map(|ty| {
            let v = self.fresh(&format!("{owner}.{method}.ret"));
            decls.push((Name::from(v.as_str()), Expr::Const(default_value(ty))));
            v
        });
        inner.ret = ret.clone();

        let mut body = self.block(&m.body, &inner);
        if m.sync {
            body = term::seq_all([
                term::prefix(self.monitor(ch::START_SYNC, &owner), term::skip()),
                term::prefix(self.monitor(ch::LOCK_ACQUIRED, &owner), term::skip()),
                body,
                term::prefix(self.monitor(ch::END_SYNC, &owner), term::skip()),
            ]);
        }
        let ret_value = ret.as_deref().map_or(Expr::Const(Value::Null), Expr::var);
        let mut tail = Vec::new();
        if !pure {
            tail.push(term::prefix(
                Comm::new(
                    &ret_channel(method),
                    vec![
                        Field::Out(Expr::id(&owner)),
                        self.me(),
                        Field::Out(ret_value.clone()),
                    ],
                ),
                term::skip(),
            ));
        }
        if let (Some(r), Some(_)) = (result, &ret) {
            tail.push(self.store_into(r, &ret_value, &with_local(frame, &ret_value)));
        }
        let params: Vec<String> = m
            .params
            .iter()
            .map(|prm| inner.locals[&prm.name].clone())
            .collect();
        let me = self.me();
        let call_event = |values: Vec<Expr>| {
            let mut fields = vec![Field::Out(Expr::id(&owner)), me];
            fields.extend(values.into_iter().map(Field::Out));
            Comm::new(&call_channel(method), fields)
        };
        // Arguments are evaluated in the caller's frame, one after another.
        let bind = params
            .iter()
            .zip(args)
            .map(|(p, a)| self.with_expr(a, frame, |e| term::assign(p, e, term::skip())))
            .collect::<Vec<_>>();
        let announce = if pure {
            term::skip()
        } else {
            term::prefix(
                call_event(params.iter().map(|p| Expr::var(p)).collect()),
                term::skip(),
            )
        };
        let scoped = term::seq_all(bind.into_iter().chain([announce, body]).chain(tail));
        term::var_block(decls, scoped)
    }
}

fn reads_fields(e: &Expr, frame: &Frame) -> bool {
    e.vars().iter().any(|v| frame.field_owner(v).is_some())
}

/// Value of a variable initialiser: a constant, possibly naming declared
/// entities.
pub fn const_value(e: &Expr) -> Value {
    let e = e.rename(&|n| Some(Expr::id(n)));
    let wide = crate::kernel::IntRange {
        lo: i64::MIN,
        hi: i64::MAX,
    };
    crate::kernel::eval(&e, &Store::new(), wide).unwrap_or(Value::Null)
}

/// `frame` extended so the return variable resolves to itself.
fn with_local(frame: &Frame, e: &Expr) -> Frame {
    let mut f = frame.clone();
    for v in e.vars() {
        f.locals.insert(v.to_string(), v.to_string());
    }
    f
}
