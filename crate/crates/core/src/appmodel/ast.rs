//! Syntax tree of `.scj2` programs.

use crate::kernel::Expr;

/// Source position, 1-based. Ignored by equality so that printed and
/// re-parsed programs compare equal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    /// Mission, schedulable or object identifier.
    Id,
}

impl Type {
    pub fn keyword(self) -> &'static str {
        match self {
            Type::Int => "int",
            Type::Bool => "bool",
            Type::Id => "id",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: Type,
    pub init: Expr,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Method {
    pub name: String,
    pub sync: bool,
    pub params: Vec<Param>,
    /// `None` for `void`.
    pub ret: Option<Type>,
    pub body: Vec<Stmt>,
    pub loc: Loc,
}

/// Receiver of a call or of `requestTermination`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    This,
    /// The mission the calling schedulable belongs to.
    Mission,
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Var(VarDecl),
    Assign {
        name: String,
        value: Expr,
        loc: Loc,
    },
    If {
        cond: Expr,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
        loc: Loc,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        loc: Loc,
    },
    Call {
        result: Option<String>,
        target: Target,
        method: String,
        args: Vec<Expr>,
        loc: Loc,
    },
    Wait {
        target: Target,
        loc: Loc,
    },
    Notify {
        target: Target,
        all: bool,
        loc: Loc,
    },
    RequestTermination {
        target: Target,
        loc: Loc,
    },
    Fire {
        handler: String,
        loc: Loc,
    },
    Interrupt {
        loc: Loc,
    },
    Sleep {
        ticks: u32,
        loc: Loc,
    },
    Return {
        value: Option<Expr>,
        loc: Loc,
    },
    Probe {
        label: String,
        loc: Loc,
    },
}

impl Stmt {
    pub fn loc(&self) -> Loc {
        match self {
            Stmt::Var(v) => v.loc,
            Stmt::Assign { loc, .. }
            | Stmt::If { loc, .. }
            | Stmt::While { loc, .. }
            | Stmt::Call { loc, .. }
            | Stmt::Wait { loc, .. }
            | Stmt::Notify { loc, .. }
            | Stmt::RequestTermination { loc, .. }
            | Stmt::Fire { loc, .. }
            | Stmt::Interrupt { loc }
            | Stmt::Sleep { loc, .. }
            | Stmt::Return { loc, .. }
            | Stmt::Probe { loc, .. } => *loc,
        }
    }

    /// Visits this statement and every nested one.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::If { then, els, .. } => {
                for s in then.iter().chain(els) {
                    s.walk(f);
                }
            }
            Stmt::While { body, .. } => {
                for s in body {
                    s.walk(f);
                }
            }
            _ => {}
        }
    }
}

pub fn walk_block<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        s.walk(f);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub ints: (i64, i64),
    pub priorities: (u8, u8),
}

impl Default for Config {
    fn default() -> Self {
        Config {
            ints: (0, 7),
            priorities: (1, 10),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafeletDecl {
    pub name: String,
    /// `None` when the program answers `null`.
    pub sequencer: Option<String>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequencerDecl {
    pub name: String,
    pub missions: Vec<String>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MissionDecl {
    pub name: String,
    pub ceiling: Option<u8>,
    pub vars: Vec<VarDecl>,
    pub registers: Vec<String>,
    pub methods: Vec<Method>,
    pub cleanup: Vec<Stmt>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchedKind {
    Thread,
    Periodic { period: u32 },
    Aperiodic,
    OneShot { offset: u32 },
    Sequencer { missions: Vec<String> },
}

impl SchedKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            SchedKind::Thread => "thread",
            SchedKind::Periodic { .. } => "periodic",
            SchedKind::Aperiodic => "aperiodic",
            SchedKind::OneShot { .. } => "oneshot",
            SchedKind::Sequencer { .. } => "sequencerschedulable",
        }
    }

    pub fn is_handler(&self) -> bool {
        matches!(
            self,
            SchedKind::Periodic { .. } | SchedKind::Aperiodic | SchedKind::OneShot { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedDecl {
    pub name: String,
    pub kind: SchedKind,
    pub priority: u8,
    pub deadline: Option<u32>,
    pub vars: Vec<VarDecl>,
    /// `run` for threads, `handle` for handlers; empty for sequencers.
    pub body: Vec<Stmt>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectDecl {
    pub name: String,
    pub ceiling: Option<u8>,
    pub vars: Vec<VarDecl>,
    pub methods: Vec<Method>,
    pub loc: Loc,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub config: Config,
    pub safelet: Option<SafeletDecl>,
    pub sequencers: Vec<SequencerDecl>,
    pub missions: Vec<MissionDecl>,
    pub schedulables: Vec<SchedDecl>,
    pub objects: Vec<ObjectDecl>,
}

impl Program {
    pub fn mission(&self, name: &str) -> Option<&MissionDecl> {
        self.missions.iter().find(|m| m.name == name)
    }

    pub fn schedulable(&self, name: &str) -> Option<&SchedDecl> {
        self.schedulables.iter().find(|s| s.name == name)
    }

    pub fn object(&self, name: &str) -> Option<&ObjectDecl> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn sequencer(&self, name: &str) -> Option<&SequencerDecl> {
        self.sequencers.iter().find(|s| s.name == name)
    }

    /// Fields and methods of a mission or object, by name.
    pub fn members(&self, owner: &str) -> Option<(&[VarDecl], &[Method])> {
        if let Some(m) = self.mission(owner) {
            return Some((&m.vars, &m.methods));
        }
        self.object(owner)
            .map(|o| (o.vars.as_slice(), o.methods.as_slice()))
    }

    /// The mission whose `registers` list names `s` first.
    pub fn mission_of(&self, s: &str) -> Option<&MissionDecl> {
        self.missions
            .iter()
            .find(|m| m.registers.iter().any(|r| r == s))
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.mission(name).is_some()
            || self.schedulable(name).is_some()
            || self.object(name).is_some()
            || self.sequencer(name).is_some()
            || self.safelet.as_ref().is_some_and(|s| s.name == name)
    }
}
