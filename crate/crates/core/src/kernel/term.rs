//! Behaviour terms and their structural operational semantics.

use std::fmt;
use std::sync::Arc;

use super::expr::{eval, eval_bool, Expr, Store};
use super::value::{ChannelTable, Event, Label, Name, Value};
use super::KernelError;

/// Unfoldings allowed while normalising one term before recursion is
/// declared unguarded.
const MAX_UNFOLD: usize = 64;

pub type TermRef = Arc<Term>;

/// One field of a communication.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    /// `!e` / `.e`: the value of an expression.
    Out(Expr),
    /// `?x`: any domain value, bound to `x` in the store.
    In(Name),
    /// `?_`: any domain value, not bound.
    Any,
}

/// A communication pattern `c.f1.f2...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Comm {
    pub channel: Name,
    pub fields: Vec<Field>,
}

impl Comm {
    pub fn new(channel: &str, fields: Vec<Field>) -> Self {
        Comm {
            channel: Name::from(channel),
            fields,
        }
    }

    pub fn bare(channel: &str) -> Self {
        Comm::new(channel, Vec::new())
    }

    /// Every concrete event this pattern may perform, with the updated store.
    pub fn offers(
        &self,
        store: &Store,
        channels: &ChannelTable,
    ) -> Result<Vec<(Event, Store)>, KernelError> {
        let decl = channels.get(&self.channel).ok_or_else(|| {
            KernelError::WellFormed(format!("undeclared channel {}", self.channel))
        })?;
        if decl.arity() != self.fields.len() {
            return Err(KernelError::WellFormed(format!(
                "{} used with {} fields, declared arity {}",
                self.channel,
                self.fields.len(),
                decl.arity()
            )));
        }
        let mut partial: Vec<(Vec<Value>, Store)> = vec![(Vec::new(), store.clone())];
        for (field, (fname, domain)) in self.fields.iter().zip(&decl.fields) {
            let mut next = Vec::new();
            match field {
                Field::Out(e) => {
                    for (vals, st) in partial {
                        let v = eval(e, &st, channels.ints)?;
                        if !domain.contains(&v, channels.ints) {
                            return Err(KernelError::Range(format!(
                                "{}: value {v} outside domain {} of field {fname}",
                                self.channel,
                                domain.describe()
                            )));
                        }
                        let mut vals = vals;
                        vals.push(v);
                        next.push((vals, st));
                    }
                }
                Field::In(x) => {
                    let dom = domain.values(channels.ints);
                    for (vals, st) in partial {
                        for v in &dom {
                            let mut vals = vals.clone();
                            vals.push(v.clone());
                            let mut st = st.clone();
                            st.insert(x.clone(), v.clone());
                            next.push((vals, st));
                        }
                    }
                }
                Field::Any => {
                    let dom = domain.values(channels.ints);
                    for (vals, st) in partial {
                        for v in &dom {
                            let mut vals = vals.clone();
                            vals.push(v.clone());
                            next.push((vals, st.clone()));
                        }
                    }
                }
            }
            partial = next;
        }
        Ok(partial
            .into_iter()
            .map(|(values, st)| {
                (
                    Event {
                        channel: self.channel.clone(),
                        values,
                    },
                    st,
                )
            })
            .collect())
    }
}

impl fmt::Display for Comm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.channel)?;
        for field in &self.fields {
            match field {
                Field::Out(e) => write!(f, "!{}", AtomExpr(e))?,
                Field::In(x) => write!(f, "?{x}")?,
                Field::Any => write!(f, "?_")?,
            }
        }
        Ok(())
    }
}

struct AtomExpr<'a>(&'a Expr);

impl fmt::Display for AtomExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Const(_) | Expr::Var(_) => write!(f, "{}", self.0),
            e => write!(f, "({e})"),
        }
    }
}

/// A behaviour expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Skip,
    /// Deadlocked process (a guard that is false).
    Stop,
    Chaos,
    Prefix(Comm, TermRef),
    Guard(Expr, TermRef),
    Seq(TermRef, TermRef),
    ExtChoice(TermRef, TermRef),
    /// Runs the body unless the interrupting communication occurs, which
    /// terminates the whole term.
    Interrupt(TermRef, Comm),
    Recursion(Name, TermRef),
    RecVar(Name),
    Wait(u32),
    Assign(Name, Expr, TermRef),
    VarBlock(Vec<(Name, Expr)>, TermRef),
    /// Closes the scope opened by a `VarBlock`.
    EndScope(Vec<Name>),
}

// Constructors used throughout the framework and compiler.
pub fn skip() -> TermRef {
    Arc::new(Term::Skip)
}

pub fn stop() -> TermRef {
    Arc::new(Term::Stop)
}

pub fn chaos() -> TermRef {
    Arc::new(Term::Chaos)
}

pub fn prefix(c: Comm, k: TermRef) -> TermRef {
    Arc::new(Term::Prefix(c, k))
}

pub fn guard(e: Expr, body: TermRef) -> TermRef {
    Arc::new(Term::Guard(e, body))
}

pub fn seq(a: TermRef, b: TermRef) -> TermRef {
    match (&*a, &*b) {
        (Term::Skip, _) => b,
        (_, Term::Skip) => a,
        _ => Arc::new(Term::Seq(a, b)),
    }
}

/// Sequential composition of a list, `Skip` when empty.
pub fn seq_all(parts: impl IntoIterator<Item = TermRef>) -> TermRef {
    let parts: Vec<TermRef> = parts.into_iter().collect();
    parts.into_iter().rev().fold(skip(), |acc, t| seq(t, acc))
}

pub fn choice(a: TermRef, b: TermRef) -> TermRef {
    Arc::new(Term::ExtChoice(a, b))
}

/// External choice over a list, `Stop` when empty.
pub fn choice_all(parts: impl IntoIterator<Item = TermRef>) -> TermRef {
    let mut it = parts.into_iter();
    match it.next() {
        None => stop(),
        Some(first) => it.fold(first, choice),
    }
}

pub fn interrupt(body: TermRef, c: Comm) -> TermRef {
    Arc::new(Term::Interrupt(body, c))
}

pub fn rec(x: &str, body: TermRef) -> TermRef {
    Arc::new(Term::Recursion(Name::from(x), body))
}

pub fn recvar(x: &str) -> TermRef {
    Arc::new(Term::RecVar(Name::from(x)))
}

pub fn wait(n: u32) -> TermRef {
    Arc::new(Term::Wait(n))
}

pub fn assign(x: &str, e: Expr, k: TermRef) -> TermRef {
    Arc::new(Term::Assign(Name::from(x), e, k))
}

pub fn var_block(decls: Vec<(Name, Expr)>, body: TermRef) -> TermRef {
    if decls.is_empty() {
        body
    } else {
        Arc::new(Term::VarBlock(decls, body))
    }
}

/// `if c then a else b`, as a pair of complementary guards.
pub fn cond(c: Expr, a: TermRef, b: TermRef) -> TermRef {
    choice(guard(c.clone(), a), guard(Expr::not(c), b))
}

/// A single step of one component: label, successor term and store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub label: Label,
    pub term: TermRef,
    pub store: Store,
}

/// What a term step needs to know about its surroundings.
#[derive(Clone, Copy)]
pub struct StepCtx<'a> {
    pub channels: &'a ChannelTable,
    /// Timed components let time pass while waiting for communication.
    pub timed: bool,
}

/// Substitutes `r` for free occurrences of `x`. `None` when nothing changed.
fn subst(t: &TermRef, x: &Name, r: &TermRef) -> Option<TermRef> {
    match &**t {
        Term::RecVar(y) if y == x => Some(r.clone()),
        Term::Recursion(y, _) if y == x => None,
        Term::Skip
        | Term::Stop
        | Term::Chaos
        | Term::RecVar(_)
        | Term::Wait(_)
        | Term::EndScope(_) => None,
        Term::Prefix(c, k) => subst(k, x, r).map(|k| Arc::new(Term::Prefix(c.clone(), k))),
        Term::Guard(e, b) => subst(b, x, r).map(|b| Arc::new(Term::Guard(e.clone(), b))),
        Term::Seq(a, b) => {
            pair(subst(a, x, r), subst(b, x, r), a, b).map(|(a, b)| Arc::new(Term::Seq(a, b)))
        }
        Term::ExtChoice(a, b) => {
            pair(subst(a, x, r), subst(b, x, r), a, b).map(|(a, b)| Arc::new(Term::ExtChoice(a, b)))
        }
        Term::Interrupt(a, c) => subst(a, x, r).map(|a| Arc::new(Term::Interrupt(a, c.clone()))),
        Term::Recursion(y, b) => subst(b, x, r).map(|b| Arc::new(Term::Recursion(y.clone(), b))),
        Term::Assign(y, e, k) => {
            subst(k, x, r).map(|k| Arc::new(Term::Assign(y.clone(), e.clone(), k)))
        }
        Term::VarBlock(d, b) => subst(b, x, r).map(|b| Arc::new(Term::VarBlock(d.clone(), b))),
    }
}

fn pair(
    a2: Option<TermRef>,
    b2: Option<TermRef>,
    a: &TermRef,
    b: &TermRef,
) -> Option<(TermRef, TermRef)> {
    if a2.is_none() && b2.is_none() {
        return None;
    }
    Some((
        a2.unwrap_or_else(|| a.clone()),
        b2.unwrap_or_else(|| b.clone()),
    ))
}

/// One level of unfolding of `mu x . body`.
pub fn unfold(t: &TermRef) -> TermRef {
    match &**t {
        Term::Recursion(x, body) => subst(body, x, t).unwrap_or_else(|| body.clone()),
        _ => t.clone(),
    }
}

/// Brings the head of a term into canonical form: applies the sequence unit
/// law, unfolds recursion, resolves guards against the current store and
/// drops `Stop` branches of choices. Store-changing steps are left alone.
pub fn normalize(
    t: &TermRef,
    store: &Store,
    channels: &ChannelTable,
) -> Result<TermRef, KernelError> {
    norm(t, store, channels, 0)
}

fn norm(
    t: &TermRef,
    store: &Store,
    ch: &ChannelTable,
    unfolds: usize,
) -> Result<TermRef, KernelError> {
    match &**t {
        Term::Wait(0) => Ok(skip()),
        Term::Seq(a, b) => {
            let na = norm(a, store, ch, unfolds)?;
            match &*na {
                Term::Skip => norm(b, store, ch, unfolds),
                Term::Chaos => Ok(na),
                _ if Arc::ptr_eq(&na, a) => Ok(t.clone()),
                _ => Ok(Arc::new(Term::Seq(na, b.clone()))),
            }
        }
        Term::Interrupt(a, c) => {
            let na = norm(a, store, ch, unfolds)?;
            match &*na {
                Term::Skip | Term::Chaos => Ok(na),
                _ if Arc::ptr_eq(&na, a) => Ok(t.clone()),
                _ => Ok(Arc::new(Term::Interrupt(na, c.clone()))),
            }
        }
        Term::Guard(e, b) => {
            if eval_bool(e, store, ch.ints)? {
                norm(b, store, ch, unfolds)
            } else {
                Ok(stop())
            }
        }
        Term::ExtChoice(a, b) => {
            let na = norm(a, store, ch, unfolds)?;
            let nb = norm(b, store, ch, unfolds)?;
            match (&*na, &*nb) {
                (Term::Chaos, _) | (_, Term::Stop) => Ok(na),
                (_, Term::Chaos) | (Term::Stop, _) => Ok(nb),
                _ if Arc::ptr_eq(&na, a) && Arc::ptr_eq(&nb, b) => Ok(t.clone()),
                _ => Ok(Arc::new(Term::ExtChoice(na, nb))),
            }
        }
        Term::Recursion(x, _) => {
            if unfolds >= MAX_UNFOLD {
                return Err(KernelError::WellFormed(format!(
                    "unguarded recursion on {x}"
                )));
            }
            norm(&unfold(t), store, ch, unfolds + 1)
        }
        Term::RecVar(x) => Err(KernelError::WellFormed(format!(
            "unbound recursion variable {x}"
        ))),
        _ => Ok(t.clone()),
    }
}

/// True iff the term has reduced to `Skip`.
pub fn is_terminated(t: &TermRef, store: &Store, channels: &ChannelTable) -> bool {
    matches!(normalize(t, store, channels).as_deref(), Ok(Term::Skip))
}

/// True iff the term has reduced to `Chaos`.
pub fn is_divergent(t: &TermRef, store: &Store, channels: &ChannelTable) -> bool {
    matches!(normalize(t, store, channels).as_deref(), Ok(Term::Chaos))
}

/// Transitions of a term in a store. Successors are returned un-normalised.
pub fn steps(t: &TermRef, store: &Store, ctx: StepCtx<'_>) -> Result<Vec<Step>, KernelError> {
    let n = normalize(t, store, ctx.channels)?;
    let mut out = Vec::new();
    head_steps(&n, store, ctx, &mut out)?;
    Ok(out)
}

fn head_steps(
    t: &TermRef,
    store: &Store,
    ctx: StepCtx<'_>,
    out: &mut Vec<Step>,
) -> Result<(), KernelError> {
    let ints = ctx.channels.ints;
    match &**t {
        Term::Skip | Term::Chaos => {}
        Term::Stop => {
            if ctx.timed {
                out.push(Step {
                    label: Label::Tick,
                    term: t.clone(),
                    store: store.clone(),
                });
            }
        }
        Term::Prefix(c, k) => {
            for (e, st) in c.offers(store, ctx.channels)? {
                out.push(Step {
                    label: Label::Event(e),
                    term: k.clone(),
                    store: st,
                });
            }
            if ctx.timed {
                out.push(Step {
                    label: Label::Tick,
                    term: t.clone(),
                    store: store.clone(),
                });
            }
        }
        Term::Seq(a, b) => {
            let mut inner = Vec::new();
            head_steps(a, store, ctx, &mut inner)?;
            out.extend(inner.into_iter().map(|s| Step {
                term: Arc::new(Term::Seq(s.term, b.clone())),
                ..s
            }));
        }
        Term::ExtChoice(a, b) => {
            let mut sa = Vec::new();
            let mut sb = Vec::new();
            head_steps(a, store, ctx, &mut sa)?;
            head_steps(b, store, ctx, &mut sb)?;
            if matches!(**a, Term::Skip) || matches!(**b, Term::Skip) {
                out.push(Step {
                    label: Label::Tau,
                    term: skip(),
                    store: store.clone(),
                });
            }
            // Events and internal steps resolve the choice; time passes only
            // if both sides allow it.
            let (ta, ra): (Vec<Step>, Vec<Step>) =
                sa.into_iter().partition(|s| s.label == Label::Tick);
            let (tb, rb): (Vec<Step>, Vec<Step>) =
                sb.into_iter().partition(|s| s.label == Label::Tick);
            out.extend(ra);
            out.extend(rb);
            for x in &ta {
                for y in &tb {
                    out.push(Step {
                        label: Label::Tick,
                        term: Arc::new(Term::ExtChoice(x.term.clone(), y.term.clone())),
                        store: store.clone(),
                    });
                }
            }
        }
        Term::Interrupt(a, c) => {
            let mut inner = Vec::new();
            head_steps(a, store, ctx, &mut inner)?;
            out.extend(inner.into_iter().map(|s| Step {
                term: Arc::new(Term::Interrupt(s.term, c.clone())),
                ..s
            }));
            for (e, st) in c.offers(store, ctx.channels)? {
                out.push(Step {
                    label: Label::Event(e),
                    term: skip(),
                    store: st,
                });
            }
        }
        Term::Wait(n) => {
            if !ctx.timed {
                return Err(KernelError::WellFormed(
                    "wait in an untimed component".into(),
                ));
            }
            out.push(Step {
                label: Label::Tick,
                term: wait(n.saturating_sub(1)),
                store: store.clone(),
            });
        }
        Term::Assign(x, e, k) => {
            if !store.contains_key(x) {
                return Err(KernelError::Unbound(x.to_string()));
            }
            let v = eval(e, store, ints)?;
            check_value(&v, ints)?;
            let mut st = store.clone();
            st.insert(x.clone(), v);
            out.push(Step {
                label: Label::Tau,
                term: k.clone(),
                store: st,
            });
        }
        Term::VarBlock(decls, body) => {
            let mut st = store.clone();
            for (x, e) in decls {
                if st.contains_key(x) {
                    return Err(KernelError::WellFormed(format!("variable {x} redeclared")));
                }
                let v = eval(e, &st, ints)?;
                check_value(&v, ints)?;
                st.insert(x.clone(), v);
            }
            let names = decls.iter().map(|(x, _)| x.clone()).collect();
            out.push(Step {
                label: Label::Tau,
                term: Arc::new(Term::Seq(body.clone(), Arc::new(Term::EndScope(names)))),
                store: st,
            });
        }
        Term::EndScope(names) => {
            let mut st = store.clone();
            for x in names {
                st.remove(x);
            }
            out.push(Step {
                label: Label::Tau,
                term: skip(),
                store: st,
            });
        }
        Term::Guard(..) | Term::Recursion(..) | Term::RecVar(..) => {
            unreachable!("head is normalised before stepping")
        }
    }
    Ok(())
}

fn check_value(v: &Value, ints: super::value::IntRange) -> Result<(), KernelError> {
    match v {
        Value::Int(i) if !ints.contains(*i) => Err(KernelError::Range(format!(
            "value {i} outside {}..{}",
            ints.lo, ints.hi
        ))),
        _ => Ok(()),
    }
}

/// The set of labels a term offers (its initials).
pub fn initials(t: &TermRef, store: &Store, ctx: StepCtx<'_>) -> Result<Vec<Label>, KernelError> {
    let mut ls: Vec<Label> = steps(t, store, ctx)?.into_iter().map(|s| s.label).collect();
    ls.sort();
    ls.dedup();
    Ok(ls)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Skip => write!(f, "Skip"),
            Term::Stop => write!(f, "Stop"),
            Term::Chaos => write!(f, "Chaos"),
            Term::Prefix(c, k) => write!(f, "{c} -> {}", Atom(k)),
            Term::Guard(e, b) => write!(f, "[{e}] & {}", Atom(b)),
            Term::Seq(a, b) => write!(f, "{} ; {}", Atom(a), Atom(b)),
            Term::ExtChoice(a, b) => write!(f, "{} [] {}", Atom(a), Atom(b)),
            Term::Interrupt(a, c) => write!(f, "{} /\\ {c} -> Skip", Atom(a)),
            Term::Recursion(x, b) => write!(f, "mu {x} . {}", Atom(b)),
            Term::RecVar(x) => write!(f, "{x}"),
            Term::Wait(n) => write!(f, "wait {n}"),
            Term::Assign(x, e, k) => write!(f, "{x} := {e} ; {}", Atom(k)),
            Term::VarBlock(d, b) => {
                write!(f, "var ")?;
                for (i, (x, e)) in d.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x} = {e}")?;
                }
                write!(f, " . {}", Atom(b))
            }
            Term::EndScope(xs) => {
                let names: Vec<&str> = xs.iter().map(|x| &**x).collect();
                write!(f, "end({})", names.join(","))
            }
        }
    }
}

/// Short form of a term showing only what it can do next.
pub fn head(t: &TermRef) -> String {
    match &**t {
        Term::Prefix(c, _) => format!("{c} -> ..."),
        Term::Guard(e, b) => format!("[{e}] & {}", head(b)),
        Term::Seq(a, _) => {
            let h = head(a);
            if h.ends_with("...") {
                h
            } else {
                format!("{h} ; ...")
            }
        }
        Term::ExtChoice(a, b) => format!("{} [] {}", head(a), head(b)),
        Term::Interrupt(a, c) => format!("{} /\\ {c}", head(a)),
        Term::Recursion(_, b) | Term::VarBlock(_, b) => head(b),
        Term::Assign(x, e, _) => format!("{x} := {e} ; ..."),
        _ => t.to_string(),
    }
}

struct Atom<'a>(&'a TermRef);

impl fmt::Display for Atom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &**self.0 {
            Term::Skip
            | Term::Stop
            | Term::Chaos
            | Term::RecVar(_)
            | Term::Wait(_)
            | Term::EndScope(_) => {
                write!(f, "{}", self.0)
            }
            t => write!(f, "({t})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::value::{ChannelDecl, Domain, IntRange};

    fn table() -> ChannelTable {
        let mut t = ChannelTable::new(IntRange::default());
        for c in ["a", "b", "c"] {
            t.declare(ChannelDecl::new(c, vec![])).unwrap();
        }
        t.declare(ChannelDecl::new("d", vec![("v", Domain::Ints)]))
            .unwrap();
        t
    }

    fn ctx(t: &ChannelTable, timed: bool) -> StepCtx<'_> {
        StepCtx { channels: t, timed }
    }

    fn ev(c: &str) -> Label {
        Label::Event(Event::bare(c))
    }

    #[test]
    fn skip_offers_nothing_and_terminates() {
        let t = table();
        let s = Store::new();
        assert!(steps(&skip(), &s, ctx(&t, false)).unwrap().is_empty());
        assert!(is_terminated(&skip(), &s, &t));
        assert!(!is_divergent(&skip(), &s, &t));
    }

    #[test]
    fn chaos_is_divergent() {
        let t = table();
        assert!(is_divergent(&chaos(), &Store::new(), &t));
        let sc = Arc::new(Term::Seq(skip(), chaos()));
        assert!(is_divergent(&sc, &Store::new(), &t));
    }

    #[test]
    fn prefix_offers_its_event() {
        let t = table();
        let p = prefix(Comm::bare("a"), skip());
        let st = steps(&p, &Store::new(), ctx(&t, false)).unwrap();
        assert_eq!(st.len(), 1);
        assert_eq!(st[0].label, ev("a"));
        assert_eq!(*st[0].term, Term::Skip);
    }

    #[test]
    fn interrupt_offers_body_and_interrupting_event() {
        let t = table();
        let p = interrupt(prefix(Comm::bare("a"), skip()), Comm::bare("c"));
        let mut st = steps(&p, &Store::new(), ctx(&t, false)).unwrap();
        st.sort_by(|x, y| x.label.cmp(&y.label));
        assert_eq!(st.len(), 2);
        assert_eq!(st[0].label, ev("a"));
        assert_eq!(*st[0].term, Term::Interrupt(skip(), Comm::bare("c")));
        assert_eq!(st[1].label, ev("c"));
        assert_eq!(*st[1].term, Term::Skip);
    }

    #[test]
    fn wait_only_ticks() {
        let t = table();
        let st = steps(&wait(2), &Store::new(), ctx(&t, true)).unwrap();
        assert_eq!(st.len(), 1);
        assert_eq!(st[0].label, Label::Tick);
        assert_eq!(*st[0].term, Term::Wait(1));
    }

    #[test]
    fn input_prefix_binds_every_domain_value() {
        let t = table();
        let p = prefix(Comm::new("d", vec![Field::In(Name::from("x"))]), skip());
        let st = steps(&p, &Store::new(), ctx(&t, false)).unwrap();
        assert_eq!(st.len(), 8);
        assert_eq!(st[3].store.get("x"), Some(&Value::Int(3)));
    }

    #[test]
    fn guard_filters_body() {
        let t = table();
        let mut s = Store::new();
        s.insert(Name::from("x"), Value::Bool(false));
        let g = guard(Expr::var("x"), prefix(Comm::bare("a"), skip()));
        assert!(steps(&g, &s, ctx(&t, false)).unwrap().is_empty());
        s.insert(Name::from("x"), Value::Bool(true));
        assert_eq!(steps(&g, &s, ctx(&t, false)).unwrap().len(), 1);
    }

    #[test]
    fn assign_is_internal_and_range_checked() {
        let t = table();
        let mut s = Store::new();
        s.insert(Name::from("x"), Value::Int(7));
        let a = assign(
            "x",
            Expr::bin(crate::kernel::BinOp::Add, Expr::var("x"), Expr::int(1)),
            skip(),
        );
        assert!(matches!(
            steps(&a, &s, ctx(&t, false)),
            Err(KernelError::Range(_))
        ));
        let b = assign("x", Expr::int(3), skip());
        let st = steps(&b, &s, ctx(&t, false)).unwrap();
        assert_eq!(st[0].label, Label::Tau);
        assert_eq!(st[0].store.get("x"), Some(&Value::Int(3)));
    }

    #[test]
    fn recursion_unfolds() {
        let t = table();
        let r = rec("X", prefix(Comm::bare("a"), recvar("X")));
        let st = steps(&r, &Store::new(), ctx(&t, false)).unwrap();
        assert_eq!(st.len(), 1);
        assert_eq!(st[0].term, r);
    }

    #[test]
    fn unguarded_recursion_is_a_fault() {
        let t = table();
        let r = rec("X", recvar("X"));
        assert!(steps(&r, &Store::new(), ctx(&t, false)).is_err());
    }

    #[test]
    fn timed_choice_ticks_only_when_both_sides_do() {
        let t = table();
        let c = choice(wait(1), prefix(Comm::bare("a"), skip()));
        let st = steps(&c, &Store::new(), ctx(&t, true)).unwrap();
        let ticks: Vec<_> = st.iter().filter(|s| s.label == Label::Tick).collect();
        assert_eq!(ticks.len(), 1);
        let c2 = choice(assign("y", Expr::int(0), skip()), wait(1));
        let mut s = Store::new();
        s.insert(Name::from("y"), Value::Int(1));
        let st2 = steps(&c2, &s, ctx(&t, true)).unwrap();
        assert!(st2.iter().all(|s| s.label != Label::Tick));
    }

    #[test]
    fn var_block_scopes_variables() {
        let t = table();
        let vb = var_block(vec![(Name::from("v"), Expr::int(1))], skip());
        let s0 = Store::new();
        let st = steps(&vb, &s0, ctx(&t, false)).unwrap();
        assert_eq!(st[0].store.get("v"), Some(&Value::Int(1)));
        let st2 = steps(&st[0].term, &st[0].store, ctx(&t, false)).unwrap();
        assert!(st2[0].store.is_empty());
        assert!(is_terminated(&st2[0].term, &st2[0].store, &t));
    }
}
