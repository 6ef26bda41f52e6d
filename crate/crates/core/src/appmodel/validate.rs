//! Static checks on parsed programs. Double registration and `wait` without
//! the lock are left alone: the checker finds those as runtime exceptions.

use std::collections::{BTreeMap, BTreeSet};

use crate::kernel::{BinOp, Expr, UnOp, Value};

use super::ast::*;
use super::diag::{code, Diagnostic};

const RESERVED: &[&str] = &[
    "this", "mission", "null", "true", "false", "int", "bool", "id", "void", "var", "if", "else",
    "while", "return", "method", "sync", "vars", "run", "handle", "cleanup", "me",
];

/// Method names whose call/return channels would clash with the framework's.
const RESERVED_METHODS: &[&str] = &[
    "run",
    "handleEvent",
    "initialize",
    "getSequencer",
    "getNextMission",
    "missionCleanup",
    "wait",
    "notify",
    "notifyAll",
];

/// All diagnostics for `p`, errors and warnings, in source order.
pub fn validate_program(p: &Program) -> Vec<Diagnostic> {
    let mut v = Validator {
        p,
        out: Vec::new(),
        entities: BTreeMap::new(),
    };
    v.run();
    v.out.sort_by_key(|d| (d.line, d.column));
    v.out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Safelet,
    Sequencer,
    Mission,
    Object,
    Sched,
}

/// Where a statement list runs.
#[derive(Clone, Copy)]
enum Ctx<'a> {
    Sched(&'a SchedDecl),
    Method(&'a str, &'a Method),
    Cleanup(&'a MissionDecl),
}

struct Validator<'a> {
    p: &'a Program,
    out: Vec<Diagnostic>,
    entities: BTreeMap<&'a str, Kind>,
}

type Env = BTreeMap<String, Type>;

impl<'a> Validator<'a> {
    fn error(&mut self, code: &'static str, loc: Loc, msg: impl Into<String>) {
        self.out.push(Diagnostic::error(code, loc, msg));
    }

    fn run(&mut self) {
        self.declarations();
        self.config();
        self.topology();
        self.schedulables();
        self.owners();
        self.arities();
        self.recursion();
    }

    fn declare(&mut self, name: &'a str, kind: Kind, loc: Loc) {
        if RESERVED.contains(&name) {
            self.error(code::RESERVED, loc, format!("`{name}` is a reserved word"));
        }
        if self.entities.insert(name, kind).is_some() {
            self.error(
                code::DUPLICATE_DECL,
                loc,
                format!("`{name}` is declared more than once"),
            );
        }
    }

    fn declarations(&mut self) {
        let p = self.p;
        if let Some(s) = &p.safelet {
            self.declare(&s.name, Kind::Safelet, s.loc);
        }
        for s in &p.sequencers {
            self.declare(&s.name, Kind::Sequencer, s.loc);
        }
        for m in &p.missions {
            self.declare(&m.name, Kind::Mission, m.loc);
        }
        for s in &p.schedulables {
            self.declare(&s.name, Kind::Sched, s.loc);
        }
        for o in &p.objects {
            self.declare(&o.name, Kind::Object, o.loc);
        }
    }

    fn config(&mut self) {
        let c = &self.p.config;
        let loc = Loc::default();
        if c.ints.0 > c.ints.1 || c.ints.0 > 0 || c.ints.1 < 0 {
            self.error(
                code::RANGE,
                loc,
                format!(
                    "ints {}..{} must be a range containing 0",
                    c.ints.0, c.ints.1
                ),
            );
        }
        if c.priorities.0 == 0 || c.priorities.0 > c.priorities.1 {
            self.error(
                code::RANGE,
                loc,
                format!(
                    "priorities {}..{} must be a non-empty range above 0",
                    c.priorities.0, c.priorities.1
                ),
            );
        }
    }

    fn expect_kind(&mut self, name: &str, want: Kind, loc: Loc, what: &str) -> bool {
        match self.entities.get(name) {
            None => {
                self.error(
                    code::UNDECLARED,
                    loc,
                    format!("{what} `{name}` is not declared"),
                );
                false
            }
            Some(k) if *k != want => {
                self.error(code::WRONG_KIND, loc, format!("`{name}` is not a {what}"));
                false
            }
            Some(_) => true,
        }
    }

    /// Safelet → sequencer → missions → schedulables, each mission listed by
    /// exactly one sequencer and each schedulable registered by one mission.
    fn topology(&mut self) {
        let p = self.p;
        let mut top = None;
        if let Some(s) = &p.safelet {
            if let Some(q) = &s.sequencer {
                if self.expect_kind(q, Kind::Sequencer, s.loc, "sequencer") {
                    top = Some(q.as_str());
                }
            }
        }
        let mut listed: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &p.sequencers {
            if Some(s.name.as_str()) != top {
                self.error(
                    code::MISSION_LISTING,
                    s.loc,
                    format!("sequencer `{}` is not used by the safelet", s.name),
                );
            }
            self.mission_list(&s.missions, s.loc, &mut listed);
        }
        for s in &p.schedulables {
            if let SchedKind::Sequencer { missions } = &s.kind {
                self.mission_list(missions, s.loc, &mut listed);
            }
        }
        for m in &p.missions {
            match listed.get(m.name.as_str()).copied().unwrap_or(0) {
                1 => {}
                n => self.error(
                    code::MISSION_LISTING,
                    m.loc,
                    format!(
                        "mission `{}` must be listed by exactly one sequencer, found {n}",
                        m.name
                    ),
                ),
            }
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for m in &p.missions {
            let mut seen = BTreeSet::new();
            for s in &m.registers {
                if !self.expect_kind(s, Kind::Sched, m.loc, "schedulable") {
                    continue;
                }
                if !seen.insert(s.as_str()) {
                    self.out.push(Diagnostic::warning(
                        code::DUPLICATE_REGISTRATION,
                        m.loc,
                        format!(
                            "`{s}` is registered twice by `{}`; the second registration throws",
                            m.name
                        ),
                    ));
                    continue;
                }
                if let Some(other) = owner.insert(s, &m.name) {
                    self.error(
                        code::UNREGISTERED,
                        m.loc,
                        format!("`{s}` is registered by both `{other}` and `{}`", m.name),
                    );
                }
            }
        }
        for s in &p.schedulables {
            if !owner.contains_key(s.name.as_str()) {
                self.error(
                    code::UNREGISTERED,
                    s.loc,
                    format!("schedulable `{}` is not registered by any mission", s.name),
                );
            }
        }
        self.nesting_cycles(&owner);
    }

    fn mission_list(
        &mut self,
        missions: &'a [String],
        loc: Loc,
        listed: &mut BTreeMap<&'a str, usize>,
    ) {
        for m in missions {
            if self.expect_kind(m, Kind::Mission, loc, "mission") {
                *listed.entry(m).or_default() += 1;
            }
        }
    }

    /// A schedulable sequencer must not (transitively) run its own mission.
    fn nesting_cycles(&mut self, owner: &BTreeMap<&str, &str>) {
        for s in &self.p.schedulables {
            let SchedKind::Sequencer { .. } = s.kind else {
                continue;
            };
            let mut frontier = vec![s.name.as_str()];
            let mut seen = BTreeSet::new();
            while let Some(q) = frontier.pop() {
                let Some(SchedDecl {
                    kind: SchedKind::Sequencer { missions },
                    ..
                }) = self.p.schedulable(q)
                else {
                    continue;
                };
                for m in missions {
                    for (sched, own) in owner {
                        if own == m && seen.insert(*sched) {
                            frontier.push(sched);
                        }
                    }
                }
            }
            if seen.contains(s.name.as_str()) {
                self.error(
                    code::MISSION_LISTING,
                    s.loc,
                    format!("sequencer `{}` runs its own mission", s.name),
                );
            }
        }
    }

    fn priority(&mut self, p: u8, loc: Loc, what: &str) {
        let (lo, hi) = self.p.config.priorities;
        if p < lo || p > hi {
            self.error(
                code::RANGE,
                loc,
                format!("{what} {p} outside priorities {lo}..{hi}"),
            );
        }
    }

    fn schedulables(&mut self) {
        for s in &self.p.schedulables {
            self.priority(s.priority, s.loc, "priority");
            if let SchedKind::Periodic { period: 0 } = s.kind {
                self.error(
                    code::BAD_PARAM,
                    s.loc,
                    format!("period of `{}` must be positive", s.name),
                )
            }
            if s.deadline == Some(0) {
                self.error(
                    code::BAD_PARAM,
                    s.loc,
                    format!("deadline of `{}` must be positive", s.name),
                );
            }
            let mut env = self.fields(&s.vars);
            self.block(Ctx::Sched(s), &s.body, &mut env, false);
        }
    }

    fn owners(&mut self) {
        for m in &self.p.missions {
            if let Some(c) = m.ceiling {
                self.priority(c, m.loc, "ceiling");
            }
            let fields = self.fields(&m.vars);
            self.methods(&m.name, &m.methods, &fields);
            let mut env = fields.clone();
            self.block(Ctx::Cleanup(m), &m.cleanup, &mut env, false);
        }
        for o in &self.p.objects {
            if let Some(c) = o.ceiling {
                self.priority(c, o.loc, "ceiling");
            }
            let fields = self.fields(&o.vars);
            self.methods(&o.name, &o.methods, &fields);
        }
    }

    fn fields(&mut self, vars: &[VarDecl]) -> Env {
        let mut env = Env::new();
        for v in vars {
            self.var_name(&v.name, v.loc, &env);
            if v.init
                .vars()
                .iter()
                .any(|n| !self.entities.contains_key(n.as_ref()))
            {
                self.error(
                    code::BAD_PARAM,
                    v.loc,
                    format!("initial value of `{}` must be a constant", v.name),
                );
            } else {
                self.typed(&v.init, v.ty, &env, v.loc);
            }
            env.insert(v.name.clone(), v.ty);
        }
        env
    }

    fn var_name(&mut self, name: &str, loc: Loc, env: &Env) {
        if RESERVED.contains(&name) || self.entities.contains_key(name) {
            self.error(
                code::RESERVED,
                loc,
                format!("`{name}` cannot be used as a variable name"),
            );
        } else if env.contains_key(name) {
            self.error(
                code::DUPLICATE_DECL,
                loc,
                format!("variable `{name}` is already declared"),
            );
        }
    }

    /// Methods share call channels by name, so one name has one arity.
    fn arities(&mut self) {
        let mut seen: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        let owners = self
            .p
            .missions
            .iter()
            .map(|m| (m.name.as_str(), m.methods.as_slice()))
            .chain(
                self.p
                    .objects
                    .iter()
                    .map(|o| (o.name.as_str(), o.methods.as_slice())),
            );
        for (owner, methods) in owners {
            for m in methods {
                match seen.get(m.name.as_str()) {
                    Some((n, first)) if *n != m.params.len() => self.out.push(Diagnostic::error(
                        code::ARITY,
                        m.loc,
                        format!(
                            "`{owner}.{}` takes {} parameters but `{first}.{}` takes {n}",
                            m.name,
                            m.params.len(),
                            m.name
                        ),
                    )),
                    Some(_) => {}
                    None => {
                        seen.insert(&m.name, (m.params.len(), owner));
                    }
                }
            }
        }
    }

    fn methods(&mut self, owner: &'a str, methods: &'a [Method], fields: &Env) {
        let mut names = BTreeSet::new();
        for m in methods {
            if RESERVED_METHODS.contains(&m.name.as_str()) || RESERVED.contains(&m.name.as_str()) {
                self.error(
                    code::RESERVED,
                    m.loc,
                    format!("`{}` cannot be used as a method name", m.name),
                );
            }
            if !names.insert(m.name.as_str()) {
                self.error(
                    code::DUPLICATE_DECL,
                    m.loc,
                    format!("method `{owner}.{}` is declared twice", m.name),
                );
            }
            let mut env = fields.clone();
            for prm in &m.params {
                self.var_name(&prm.name, m.loc, &env);
                env.insert(prm.name.clone(), prm.ty);
            }
            self.block(Ctx::Method(owner, m), &m.body, &mut env, true);
            match (m.ret, m.body.last()) {
                (Some(_), Some(Stmt::Return { value: Some(_), .. })) | (None, _) => {}
                (Some(_), _) => self.error(
                    code::RETURN_POSITION,
                    m.loc,
                    format!("method `{owner}.{}` must end with `return`", m.name),
                ),
            }
        }
    }

    fn block(&mut self, ctx: Ctx<'a>, stmts: &'a [Stmt], env: &mut Env, top: bool) {
        let outer: BTreeSet<String> = env.keys().cloned().collect();
        for (i, s) in stmts.iter().enumerate() {
            let last = top && i + 1 == stmts.len();
            self.stmt(ctx, s, env, last);
        }
        env.retain(|k, _| outer.contains(k));
    }

    /// The mission or object a call or `requestTermination` refers to.
    fn resolve(&mut self, ctx: Ctx<'a>, target: &'a Target, loc: Loc) -> Option<&'a str> {
        let p = self.p;
        let r = match (target, ctx) {
            (Target::This, Ctx::Method(owner, _)) => Some(owner),
            (Target::This, Ctx::Cleanup(m)) | (Target::Mission, Ctx::Cleanup(m)) => {
                Some(m.name.as_str())
            }
            (Target::Mission, Ctx::Sched(s)) => p.mission_of(&s.name).map(|m| m.name.as_str()),
            (Target::Mission, Ctx::Method(owner, _)) if p.mission(owner).is_some() => Some(owner),
            (Target::Named(n), _) => match self.entities.get(n.as_str()) {
                Some(Kind::Mission) | Some(Kind::Object) => Some(n.as_str()),
                Some(_) => {
                    self.error(
                        code::WRONG_KIND,
                        loc,
                        format!("`{n}` is not a mission or object"),
                    );
                    return None;
                }
                None => {
                    self.error(code::UNDECLARED, loc, format!("`{n}` is not declared"));
                    return None;
                }
            },
            _ => None,
        };
        if r.is_none() {
            self.error(
                code::CONTEXT,
                loc,
                format!("`{target:?}` has no meaning here"),
            );
        }
        r
    }

    fn stmt(&mut self, ctx: Ctx<'a>, s: &'a Stmt, env: &mut Env, last: bool) {
        match s {
            Stmt::Var(v) => {
                self.var_name(&v.name, v.loc, env);
                self.typed(&v.init, v.ty, env, v.loc);
                env.insert(v.name.clone(), v.ty);
            }
            Stmt::Assign { name, value, loc } => match env.get(name).copied() {
                Some(ty) => self.typed(value, ty, env, *loc),
                None => self.error(
                    code::UNDECLARED,
                    *loc,
                    format!("variable `{name}` is not declared"),
                ),
            },
            Stmt::If {
                cond,
                then,
                els,
                loc,
            } => {
                self.typed(cond, Type::Bool, env, *loc);
                self.block(ctx, then, env, false);
                self.block(ctx, els, env, false);
            }
            Stmt::While { cond, body, loc } => {
                self.typed(cond, Type::Bool, env, *loc);
                self.block(ctx, body, env, false);
            }
            Stmt::Call {
                result,
                target,
                method,
                args,
                loc,
            } => self.call(ctx, result.as_deref(), target, method, args, *loc, env),
            Stmt::Wait { loc, .. } | Stmt::Notify { loc, .. } => {
                if !matches!(ctx, Ctx::Method(..)) {
                    self.error(
                        code::CONTEXT,
                        *loc,
                        "wait and notify may only be used inside methods",
                    );
                }
            }
            Stmt::RequestTermination { target, loc } => {
                if let Some(t) = self.resolve(ctx, target, *loc) {
                    if self.p.mission(t).is_none() {
                        self.error(code::WRONG_KIND, *loc, format!("`{t}` is not a mission"));
                    }
                }
            }
            Stmt::Fire { handler, loc } => {
                if self.expect_kind(handler, Kind::Sched, *loc, "aperiodic handler")
                    && self.p.schedulable(handler).map(|s| &s.kind) != Some(&SchedKind::Aperiodic)
                {
                    self.error(
                        code::WRONG_KIND,
                        *loc,
                        format!("`{handler}` is not an aperiodic handler"),
                    );
                }
            }
            Stmt::Interrupt { loc } => {
                if matches!(ctx, Ctx::Cleanup(_)) {
                    self.error(code::CONTEXT, *loc, "interrupt() needs a schedulable");
                }
            }
            Stmt::Sleep { .. } | Stmt::Probe { .. } => {}
            Stmt::Return { value, loc } => {
                let Ctx::Method(owner, m) = ctx else {
                    self.error(code::CONTEXT, *loc, "return outside a method");
                    return;
                };
                if !last {
                    self.error(
                        code::RETURN_POSITION,
                        *loc,
                        format!("return must be the last statement of `{owner}.{}`", m.name),
                    );
                }
                match (m.ret, value) {
                    (Some(ty), Some(e)) => self.typed(e, ty, env, *loc),
                    (None, None) => {}
                    (Some(_), None) => self.error(code::BAD_PARAM, *loc, "missing return value"),
                    (None, Some(_)) => {
                        self.error(code::BAD_PARAM, *loc, "void method returns a value")
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn call(
        &mut self,
        ctx: Ctx<'a>,
        result: Option<&str>,
        target: &'a Target,
        method: &str,
        args: &[Expr],
        loc: Loc,
        env: &Env,
    ) {
        let Some(owner) = self.resolve(ctx, target, loc) else {
            return;
        };
        let Some((_, methods)) = self.p.members(owner) else {
            return;
        };
        let Some(m) = methods.iter().find(|m| m.name == method) else {
            self.error(
                code::UNDECLARED,
                loc,
                format!("`{owner}` has no method `{method}`"),
            );
            return;
        };
        if m.params.len() != args.len() {
            self.error(
                code::ARITY,
                loc,
                format!(
                    "`{owner}.{method}` takes {} arguments, given {}",
                    m.params.len(),
                    args.len()
                ),
            );
            return;
        }
        for (prm, a) in m.params.iter().zip(args) {
            self.typed(a, prm.ty, env, loc);
        }
        if let Some(r) = result {
            match (env.get(r), m.ret) {
                (None, _) => self.error(
                    code::UNDECLARED,
                    loc,
                    format!("variable `{r}` is not declared"),
                ),
                (Some(_), None) => self.error(
                    code::BAD_PARAM,
                    loc,
                    format!("`{owner}.{method}` returns nothing"),
                ),
                (Some(t), Some(rt)) if *t != rt => self.error(
                    code::BAD_PARAM,
                    loc,
                    format!(
                        "`{r}` is {} but `{owner}.{method}` returns {}",
                        t.keyword(),
                        rt.keyword()
                    ),
                ),
                _ => {}
            }
        }
    }

    fn typed(&mut self, e: &Expr, want: Type, env: &Env, loc: Loc) {
        match self.type_of(e, env) {
            Ok(Some(t)) if t != want => self.error(
                code::BAD_PARAM,
                loc,
                format!(
                    "`{e}` is {} where {} is expected",
                    t.keyword(),
                    want.keyword()
                ),
            ),
            Ok(None) if want != Type::Id => self.error(
                code::BAD_PARAM,
                loc,
                format!("null where {} is expected", want.keyword()),
            ),
            Ok(_) => {}
            Err((c, msg)) => self.error(c, loc, msg),
        }
        if let Expr::Const(Value::Int(i)) = e {
            let (lo, hi) = self.p.config.ints;
            if *i < lo || *i > hi {
                self.error(code::RANGE, loc, format!("{i} outside ints {lo}..{hi}"));
            }
        }
    }

    /// `Ok(None)` is the type of `null`, which fits `id`.
    fn type_of(&self, e: &Expr, env: &Env) -> Result<Option<Type>, (&'static str, String)> {
        let ty = match e {
            Expr::Const(Value::Int(_)) => Type::Int,
            Expr::Const(Value::Bool(_)) => Type::Bool,
            Expr::Const(Value::Id(_)) => Type::Id,
            Expr::Const(Value::Null) => return Ok(None),
            Expr::Var(n) => match env.get(n.as_ref()) {
                Some(t) => *t,
                None if self.entities.contains_key(n.as_ref()) => Type::Id,
                None => return Err((code::UNDECLARED, format!("`{n}` is not declared"))),
            },
            Expr::Unary(op, a) => {
                let want = if *op == UnOp::Not {
                    Type::Bool
                } else {
                    Type::Int
                };
                self.operand(a, want, env)?;
                want
            }
            Expr::Binary(op, a, b) => match op {
                BinOp::Eq | BinOp::Ne => {
                    let (ta, tb) = (self.type_of(a, env)?, self.type_of(b, env)?);
                    let fits = match (ta, tb) {
                        (Some(x), Some(y)) => x == y,
                        (None, t) | (t, None) => t.is_none_or(|t| t == Type::Id),
                    };
                    if !fits {
                        return Err((
                            code::BAD_PARAM,
                            format!("`{e}` compares values of different types"),
                        ));
                    }
                    Type::Bool
                }
                BinOp::And | BinOp::Or => {
                    self.operand(a, Type::Bool, env)?;
                    self.operand(b, Type::Bool, env)?;
                    Type::Bool
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    self.operand(a, Type::Int, env)?;
                    self.operand(b, Type::Int, env)?;
                    Type::Bool
                }
                _ => {
                    self.operand(a, Type::Int, env)?;
                    self.operand(b, Type::Int, env)?;
                    Type::Int
                }
            },
        };
        Ok(Some(ty))
    }

    fn operand(&self, e: &Expr, want: Type, env: &Env) -> Result<(), (&'static str, String)> {
        match self.type_of(e, env)? {
            Some(t) if t == want => Ok(()),
            _ => Err((
                code::BAD_PARAM,
                format!("`{e}` should be {}", want.keyword()),
            )),
        }
    }

    /// Method calls must not recurse, directly or through other methods.
    fn recursion(&mut self) {
        let p = self.p;
        let mut graph: BTreeMap<(String, String), Vec<(String, String, Loc)>> = BTreeMap::new();
        let owners = p
            .missions
            .iter()
            .map(|m| (m.name.as_str(), m.methods.as_slice()))
            .chain(
                p.objects
                    .iter()
                    .map(|o| (o.name.as_str(), o.methods.as_slice())),
            );
        for (owner, methods) in owners {
            for m in methods {
                let mut calls = Vec::new();
                walk_block(&m.body, &mut |s| {
                    if let Stmt::Call {
                        target,
                        method,
                        loc,
                        ..
                    } = s
                    {
                        let callee = match target {
                            Target::This => Some(owner.to_string()),
                            Target::Mission => p.mission(owner).map(|_| owner.to_string()),
                            Target::Named(n) => Some(n.clone()),
                        };
                        if let Some(c) = callee {
                            calls.push((c, method.clone(), *loc));
                        }
                    }
                });
                graph.insert((owner.to_string(), m.name.clone()), calls);
            }
        }
        for start in graph.keys() {
            let mut stack: Vec<&(String, String)> = vec![start];
            let mut seen = BTreeSet::new();
            while let Some(node) = stack.pop() {
                for (o, m, loc) in graph.get(node).into_iter().flatten() {
                    let key = (o.clone(), m.clone());
                    if key == *start {
                        self.out.push(Diagnostic::error(
                            code::RECURSIVE_CALL,
                            *loc,
                            format!(
                                "`{}.{}` calls itself; recursion is not supported",
                                start.0, start.1
                            ),
                        ));
                        break;
                    }
                    if seen.insert(key.clone()) {
                        if let Some((k, _)) = graph.get_key_value(&key) {
                            stack.push(k);
                        }
                    }
                }
            }
        }
        self.out.dedup();
    }
}
