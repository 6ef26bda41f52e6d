//! Canonical text form of a program. `parse_program(print(p)) == p`.

use std::fmt::Write;

use super::ast::*;

pub fn print(p: &Program) -> String {
    let mut w = Printer::default();
    w.program(p);
    w.out
}

#[derive(Default)]
struct Printer {
    out: String,
    depth: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn open(&mut self, text: &str) {
        self.line(&format!("{text} {{"));
        self.depth += 1;
    }

    fn close(&mut self) {
        self.depth -= 1;
        self.line("}");
    }

    fn program(&mut self, p: &Program) {
        let c = &p.config;
        self.open("config");
        self.line(&format!("ints = {}..{};", c.ints.0, c.ints.1));
        self.line(&format!(
            "priorities = {}..{};",
            c.priorities.0, c.priorities.1
        ));
        self.close();
        if let Some(s) = &p.safelet {
            self.open(&format!("safelet {}", s.name));
            self.line(&format!(
                "sequencer = {};",
                s.sequencer.as_deref().unwrap_or("null")
            ));
            self.close();
        }
        for s in &p.sequencers {
            self.open(&format!("sequencer {}", s.name));
            self.line(&format!("missions = [{}];", s.missions.join(", ")));
            self.close();
        }
        for m in &p.missions {
            let mut head = format!("mission {}", m.name);
            if let Some(c) = m.ceiling {
                write!(head, " ceiling = {c}").unwrap();
            }
            self.open(&head);
            self.vars(&m.vars);
            self.line(&format!("registers = [{}];", m.registers.join(", ")));
            for meth in &m.methods {
                self.method(meth);
            }
            self.open("cleanup");
            self.block(&m.cleanup);
            self.close();
            self.close();
        }
        for s in &p.schedulables {
            self.schedulable(s);
        }
        for o in &p.objects {
            let mut head = format!("object {}", o.name);
            if let Some(c) = o.ceiling {
                write!(head, " ceiling = {c}").unwrap();
            }
            self.open(&head);
            self.vars(&o.vars);
            for meth in &o.methods {
                self.method(meth);
            }
            self.close();
        }
    }

    fn vars(&mut self, vars: &[VarDecl]) {
        self.open("vars");
        for v in vars {
            self.line(&format!("{}: {} = {};", v.name, v.ty.keyword(), v.init));
        }
        self.close();
    }

    fn method(&mut self, m: &Method) {
        let params: Vec<String> = m
            .params
            .iter()
            .map(|p| format!("{}: {}", p.name, p.ty.keyword()))
            .collect();
        let ret = m.ret.map_or("void", Type::keyword);
        let sync = if m.sync { "sync " } else { "" };
        self.open(&format!(
            "{sync}method {}({}): {ret}",
            m.name,
            params.join(", ")
        ));
        self.block(&m.body);
        self.close();
    }

    fn schedulable(&mut self, s: &SchedDecl) {
        let mut head = format!("{} {} priority = {}", s.kind.keyword(), s.name, s.priority);
        match &s.kind {
            SchedKind::Periodic { period } => write!(head, " period = {period}").unwrap(),
            SchedKind::OneShot { offset } => write!(head, " offset = {offset}").unwrap(),
            _ => {}
        }
        if let Some(d) = s.deadline {
            write!(head, " deadline = {d}").unwrap();
        }
        self.open(&head);
        match &s.kind {
            SchedKind::Sequencer { missions } => {
                self.line(&format!("missions = [{}];", missions.join(", ")))
            }
            kind => {
                self.vars(&s.vars);
                self.open(if *kind == SchedKind::Thread {
                    "run"
                } else {
                    "handle"
                });
                self.block(&s.body);
                self.close();
            }
        }
        self.close();
    }

    fn block(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Var(v) => self.line(&format!("var {}: {} = {};", v.name, v.ty.keyword(), v.init)),
            Stmt::Assign { name, value, .. } => self.line(&format!("{name} := {value};")),
            Stmt::If {
                cond, then, els, ..
            } => {
                self.open(&format!("if ({cond})"));
                self.block(then);
                if els.is_empty() {
                    self.close();
                } else {
                    self.depth -= 1;
                    self.open("} else");
                    self.block(els);
                    self.close();
                }
            }
            Stmt::While { cond, body, .. } => {
                self.open(&format!("while ({cond})"));
                self.block(body);
                self.close();
            }
            Stmt::Call {
                result,
                target,
                method,
                args,
                ..
            } => {
                let lhs = result
                    .as_ref()
                    .map(|r| format!("{r} := "))
                    .unwrap_or_default();
                let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                self.line(&format!(
                    "{lhs}{}.{method}({});",
                    target_text(target),
                    args.join(", ")
                ));
            }
            Stmt::Wait { target, .. } => self.line(&format!("wait({});", target_text(target))),
            Stmt::Notify { target, all, .. } => {
                let kw = if *all { "notifyAll" } else { "notify" };
                self.line(&format!("{kw}({});", target_text(target)))
            }
            Stmt::RequestTermination { target, .. } => {
                self.line(&format!("requestTermination({});", target_text(target)))
            }
            Stmt::Fire { handler, .. } => self.line(&format!("fire({handler});")),
            Stmt::Interrupt { .. } => self.line("interrupt();"),
            Stmt::Sleep { ticks, .. } => self.line(&format!("sleep({ticks});")),
            Stmt::Return { value: Some(v), .. } => self.line(&format!("return {v};")),
            Stmt::Return { value: None, .. } => self.line("return;"),
            Stmt::Probe { label, .. } => self.line(&format!("probe({label});")),
        }
    }
}

fn target_text(t: &Target) -> &str {
    match t {
        Target::This => "this",
        Target::Mission => "mission",
        Target::Named(n) => n,
    }
}
