//! Recursive-descent parser for `.scj2` programs.

use crate::kernel::{BinOp, Expr, UnOp, Value};

use super::ast::*;
use super::diag::{code, Diagnostic};
use super::lexer::{lex, Tok, Token};

/// Parses a program. Fails with the first syntax error, or when the program
/// has no safelet.
pub fn parse_program(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let tokens = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser { tokens, pos: 0 };
    let prog = p.program().map_err(|d| vec![d])?;
    if prog.safelet.is_none() {
        return Err(vec![Diagnostic::error(
            code::MISSING_SAFELET,
            p.peek().loc,
            "missing safelet: a program needs exactly one `safelet` declaration",
        )]);
    }
    Ok(prog)
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error(code::SYNTAX, self.peek().loc, msg))
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!(
                "expected `{s}`, found {}",
                Self::describe(&self.peek().tok)
            ))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.err(format!(
                "expected `{k}`, found {}",
                Self::describe(&self.peek().tok)
            ))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected a name, found {}", Self::describe(t))),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_sym("-");
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            ref t => self.err(format!("expected a number, found {}", Self::describe(t))),
        }
    }

    fn small<T: TryFrom<i64>>(&mut self, what: &str) -> PResult<T> {
        let loc = self.peek().loc;
        let v = self.int()?;
        T::try_from(v)
            .map_err(|_| Diagnostic::error(code::RANGE, loc, format!("{what} {v} out of range")))
    }

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        loop {
            let loc = self.peek().loc;
            let kw = match &self.peek().tok {
                Tok::Eof => return Ok(prog),
                Tok::Ident(k) => k.clone(),
                t => {
                    return self.err(format!(
                        "expected a declaration, found {}",
                        Self::describe(t)
                    ))
                }
            };
            self.bump();
            match kw.as_str() {
                "config" => prog.config = self.config()?,
                "safelet" => {
                    let s = self.safelet(loc)?;
                    if prog.safelet.is_some() {
                        return Err(Diagnostic::error(
                            code::DUPLICATE_DECL,
                            loc,
                            "a program has exactly one safelet",
                        ));
                    }
                    prog.safelet = Some(s);
                }
                "sequencer" => {
                    let name = self.ident()?;
                    self.expect_sym("{")?;
                    let missions = self.name_list("missions")?;
                    self.expect_sym("}")?;
                    prog.sequencers.push(SequencerDecl {
                        name,
                        missions,
                        loc,
                    });
                }
                "mission" => prog.missions.push(self.mission(loc)?),
                "object" => prog.objects.push(self.object(loc)?),
                "thread" | "periodic" | "aperiodic" | "oneshot" | "sequencerschedulable" => {
                    prog.schedulables.push(self.schedulable(&kw, loc)?)
                }
                other => {
                    return Err(Diagnostic::error(
                        code::SYNTAX,
                        loc,
                        format!("unknown declaration `{other}`"),
                    ))
                }
            }
        }
    }

    fn config(&mut self) -> PResult<Config> {
        let mut c = Config::default();
        self.expect_sym("{")?;
        while !self.eat_sym("}") {
            let key = self.ident()?;
            self.expect_sym("=")?;
            match key.as_str() {
                "ints" => {
                    let lo = self.int()?;
                    self.expect_sym("..")?;
                    let hi = self.int()?;
                    c.ints = (lo, hi);
                }
                "priorities" => {
                    let lo = self.small("priority")?;
                    self.expect_sym("..")?;
                    let hi = self.small("priority")?;
                    c.priorities = (lo, hi);
                }
                other => return self.err(format!("unknown config key `{other}`")),
            }
            self.expect_sym(";")?;
        }
        Ok(c)
    }

    fn safelet(&mut self, loc: Loc) -> PResult<SafeletDecl> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        self.expect_kw("sequencer")?;
        self.expect_sym("=")?;
        let seq = self.ident()?;
        self.eat_sym(";");
        self.expect_sym("}")?;
        Ok(SafeletDecl {
            name,
            sequencer: (seq != "null").then_some(seq),
            loc,
        })
    }

    fn name_list(&mut self, key: &str) -> PResult<Vec<String>> {
        self.expect_kw(key)?;
        self.expect_sym("=")?;
        self.expect_sym("[")?;
        let mut out = Vec::new();
        if !self.eat_sym("]") {
            loop {
                out.push(self.ident()?);
                if self.eat_sym("]") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        self.eat_sym(";");
        Ok(out)
    }

    /// `key = N` pairs before a declaration body.
    fn attrs(&mut self) -> PResult<Vec<(String, Loc, i64)>> {
        let mut out = Vec::new();
        while let Tok::Ident(_) = self.peek().tok {
            let loc = self.peek().loc;
            let k = self.ident()?;
            self.expect_sym("=")?;
            out.push((k, loc, self.int()?));
        }
        Ok(out)
    }

    fn vars(&mut self) -> PResult<Vec<VarDecl>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.eat_sym("}") {
            let loc = self.peek().loc;
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.expect_sym("=")?;
            let init = self.expr()?;
            self.expect_sym(";")?;
            out.push(VarDecl {
                name,
                ty,
                init,
                loc,
            });
        }
        Ok(out)
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.ident()?.as_str() {
            "int" => Ok(Type::Int),
            "bool" => Ok(Type::Bool),
            "id" => Ok(Type::Id),
            other => self.err(format!("unknown type `{other}`")),
        }
    }

    fn method(&mut self, sync: bool, loc: Loc) -> PResult<Method> {
        self.expect_kw("method")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.eat_sym(")") {
            loop {
                let pname = self.ident()?;
                self.expect_sym(":")?;
                params.push(Param {
                    name: pname,
                    ty: self.ty()?,
                });
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        let ret = if self.eat_sym(":") {
            if self.is_kw("void") {
                self.bump();
                None
            } else {
                Some(self.ty()?)
            }
        } else {
            None
        };
        let body = self.block()?;
        Ok(Method {
            name,
            sync,
            params,
            ret,
            body,
            loc,
        })
    }

    fn ceiling(&self, attrs: &[(String, Loc, i64)]) -> PResult<Option<u8>> {
        let mut ceiling = None;
        for (k, loc, v) in attrs {
            match k.as_str() {
                "ceiling" => {
                    ceiling = Some(u8::try_from(*v).map_err(|_| {
                        Diagnostic::error(code::RANGE, *loc, format!("ceiling {v} out of range"))
                    })?)
                }
                other => {
                    return Err(Diagnostic::error(
                        code::SYNTAX,
                        *loc,
                        format!("unknown attribute `{other}`"),
                    ))
                }
            }
        }
        Ok(ceiling)
    }

    fn mission(&mut self, loc: Loc) -> PResult<MissionDecl> {
        let name = self.ident()?;
        let attrs = self.attrs()?;
        let ceiling = self.ceiling(&attrs)?;
        let mut m = MissionDecl {
            name,
            ceiling,
            vars: Vec::new(),
            registers: Vec::new(),
            methods: Vec::new(),
            cleanup: Vec::new(),
            loc,
        };
        self.expect_sym("{")?;
        while !self.eat_sym("}") {
            let mloc = self.peek().loc;
            if self.is_kw("vars") {
                self.bump();
                m.vars.extend(self.vars()?);
            } else if self.is_kw("registers") {
                m.registers = self.name_list("registers")?;
            } else if self.is_kw("cleanup") {
                self.bump();
                m.cleanup = self.block()?;
            } else if self.is_kw("sync") {
                self.bump();
                m.methods.push(self.method(true, mloc)?);
            } else if self.is_kw("method") {
                m.methods.push(self.method(false, mloc)?);
            } else {
                return self.err(format!(
                    "unexpected {} in mission",
                    Self::describe(&self.peek().tok)
                ));
            }
        }
        Ok(m)
    }

    fn object(&mut self, loc: Loc) -> PResult<ObjectDecl> {
        let name = self.ident()?;
        let attrs = self.attrs()?;
        let ceiling = self.ceiling(&attrs)?;
        let mut o = ObjectDecl {
            name,
            ceiling,
            vars: Vec::new(),
            methods: Vec::new(),
            loc,
        };
        self.expect_sym("{")?;
        while !self.eat_sym("}") {
            let mloc = self.peek().loc;
            if self.is_kw("vars") {
                self.bump();
                o.vars.extend(self.vars()?);
            } else if self.is_kw("sync") {
                self.bump();
                o.methods.push(self.method(true, mloc)?);
            } else if self.is_kw("method") {
                o.methods.push(self.method(false, mloc)?);
            } else {
                return self.err(format!(
                    "unexpected {} in object",
                    Self::describe(&self.peek().tok)
                ));
            }
        }
        Ok(o)
    }

    fn schedulable(&mut self, kw: &str, loc: Loc) -> PResult<SchedDecl> {
        let name = self.ident()?;
        let attrs = self.attrs()?;
        let (mut priority, mut period, mut offset, mut deadline) = (None, None, None, None);
        for (k, aloc, v) in &attrs {
            let slot = match k.as_str() {
                "priority" => &mut priority,
                "period" if kw == "periodic" => &mut period,
                "offset" if kw == "oneshot" => &mut offset,
                "deadline" if kw != "thread" && kw != "sequencerschedulable" => &mut deadline,
                other => {
                    return Err(Diagnostic::error(
                        code::SYNTAX,
                        *aloc,
                        format!("attribute `{other}` is not allowed on {kw}"),
                    ))
                }
            };
            if *v < 0 || *v > u32::MAX as i64 {
                return Err(Diagnostic::error(
                    code::RANGE,
                    *aloc,
                    format!("{k} {v} out of range"),
                ));
            }
            *slot = Some((*v, *aloc));
        }
        let priority = match priority {
            Some((v, ploc)) => u8::try_from(v).map_err(|_| {
                Diagnostic::error(code::RANGE, ploc, format!("priority {v} out of range"))
            })?,
            None => {
                return Err(Diagnostic::error(
                    code::SYNTAX,
                    loc,
                    format!("{kw} {name} needs a priority"),
                ))
            }
        };
        let need = |slot: Option<(i64, Loc)>, what: &str| -> PResult<u32> {
            slot.map(|(v, _)| v as u32).ok_or_else(|| {
                Diagnostic::error(code::SYNTAX, loc, format!("{kw} {name} needs {what}"))
            })
        };
        let deadline = deadline.map(|(v, _)| v as u32);
        self.expect_sym("{")?;
        let mut vars = Vec::new();
        let mut body = Vec::new();
        let kind = match kw {
            "sequencerschedulable" => {
                let missions = self.name_list("missions")?;
                self.expect_sym("}")?;
                return Ok(SchedDecl {
                    name,
                    kind: SchedKind::Sequencer { missions },
                    priority,
                    deadline,
                    vars,
                    body,
                    loc,
                });
            }
            "thread" => SchedKind::Thread,
            "periodic" => SchedKind::Periodic {
                period: need(period, "a period")?,
            },
            "aperiodic" => SchedKind::Aperiodic,
            _ => SchedKind::OneShot {
                offset: need(offset, "an offset")?,
            },
        };
        let body_kw = if kind == SchedKind::Thread {
            "run"
        } else {
            "handle"
        };
        while !self.eat_sym("}") {
            if self.is_kw("vars") {
                self.bump();
                vars.extend(self.vars()?);
            } else if self.is_kw(body_kw) {
                self.bump();
                body = self.block()?;
            } else {
                return self.err(format!(
                    "expected `vars` or `{body_kw}`, found {}",
                    Self::describe(&self.peek().tok)
                ));
            }
        }
        Ok(SchedDecl {
            name,
            kind,
            priority,
            deadline,
            vars,
            body,
            loc,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.eat_sym("}") {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn target(&mut self) -> PResult<Target> {
        let n = self.ident()?;
        Ok(match n.as_str() {
            "this" => Target::This,
            "mission" => Target::Mission,
            _ => Target::Named(n),
        })
    }

    /// `wait`/`notify` receivers: only the enclosing object may be named.
    fn this_target(&mut self, what: &str) -> PResult<Target> {
        let loc = self.peek().loc;
        match self.target()? {
            Target::This => Ok(Target::This),
            other => Err(Diagnostic::error(
                code::NOT_THIS,
                loc,
                format!("{what} may only be called on this (the enclosing synchronised object), not {other:?}"),
            )),
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.peek().loc;
        let kw = match &self.peek().tok {
            Tok::Ident(k) => k.clone(),
            t => return self.err(format!("expected a statement, found {}", Self::describe(t))),
        };
        let simple = |p: &mut Parser, s: Stmt| -> PResult<Stmt> {
            p.expect_sym(";")?;
            Ok(s)
        };
        let is_call_like = matches!(self.peek_at(1), Tok::Sym("("));
        match kw.as_str() {
            "var" => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym("=")?;
                let init = self.expr()?;
                simple(
                    self,
                    Stmt::Var(VarDecl {
                        name,
                        ty,
                        init,
                        loc,
                    }),
                )
            }
            "if" => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let then = self.block()?;
                let els = if self.is_kw("else") {
                    self.bump();
                    if self.is_kw("if") {
                        vec![self.stmt()?]
                    } else {
                        self.block()?
                    }
                } else {
                    Vec::new()
                };
                Ok(Stmt::If {
                    cond,
                    then,
                    els,
                    loc,
                })
            }
            "while" => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body, loc })
            }
            "return" => {
                self.bump();
                let value = if self.is_sym(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                simple(self, Stmt::Return { value, loc })
            }
            "wait" | "notify" | "notifyAll" if is_call_like => {
                self.bump();
                self.expect_sym("(")?;
                let target = self.this_target(&kw)?;
                self.expect_sym(")")?;
                let s = if kw == "wait" {
                    Stmt::Wait { target, loc }
                } else {
                    Stmt::Notify {
                        target,
                        all: kw == "notifyAll",
                        loc,
                    }
                };
                simple(self, s)
            }
            "requestTermination" if is_call_like => {
                self.bump();
                self.expect_sym("(")?;
                let target = self.target()?;
                self.expect_sym(")")?;
                simple(self, Stmt::RequestTermination { target, loc })
            }
            "fire" | "probe" if is_call_like => {
                self.bump();
                self.expect_sym("(")?;
                let n = self.ident()?;
                self.expect_sym(")")?;
                let s = if kw == "fire" {
                    Stmt::Fire { handler: n, loc }
                } else {
                    Stmt::Probe { label: n, loc }
                };
                simple(self, s)
            }
            "interrupt" if is_call_like => {
                self.bump();
                self.expect_sym("(")?;
                self.expect_sym(")")?;
                simple(self, Stmt::Interrupt { loc })
            }
            "sleep" if is_call_like => {
                self.bump();
                self.expect_sym("(")?;
                let ticks = self.small("sleep duration")?;
                self.expect_sym(")")?;
                simple(self, Stmt::Sleep { ticks, loc })
            }
            _ => {
                if matches!(self.peek_at(1), Tok::Sym(":=")) {
                    let name = self.ident()?;
                    self.bump();
                    if self.at_call() {
                        let s = self.call(Some(name), loc)?;
                        return simple(self, s);
                    }
                    let value = self.expr()?;
                    return simple(self, Stmt::Assign { name, value, loc });
                }
                if self.at_call() {
                    let s = self.call(None, loc)?;
                    return simple(self, s);
                }
                self.err(format!("expected a statement, found `{kw}`"))
            }
        }
    }

    fn at_call(&self) -> bool {
        matches!(
            (
                self.peek_at(0),
                self.peek_at(1),
                self.peek_at(2),
                self.peek_at(3)
            ),
            (Tok::Ident(_), Tok::Sym("("), _, _)
                | (Tok::Ident(_), Tok::Sym("."), Tok::Ident(_), Tok::Sym("("))
        )
    }

    fn call(&mut self, result: Option<String>, loc: Loc) -> PResult<Stmt> {
        let target = if matches!(self.peek_at(1), Tok::Sym(".")) {
            let t = self.target()?;
            self.expect_sym(".")?;
            t
        } else {
            Target::This
        };
        let method = self.ident()?;
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.eat_sym(")") {
            loop {
                args.push(self.expr()?);
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        Ok(Stmt::Call {
            result,
            target,
            method,
            args,
            loc,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek().tok else {
            return None;
        };
        Some(match s {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_sym("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.is_sym("-") {
            self.bump();
            if let Tok::Int(v) = self.peek().tok {
                self.bump();
                return Ok(Expr::int(-v));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().tok.clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::int(v))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "true" => Expr::bool(true),
                    "false" => Expr::bool(false),
                    "null" => Expr::Const(Value::Null),
                    _ => Expr::var(&s),
                })
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            t => self.err(format!(
                "expected an expression, found {}",
                Self::describe(&t)
            )),
        }
    }
}
