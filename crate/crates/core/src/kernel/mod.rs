//! Process-algebra kernel: terms, stores, components and their composition.

pub mod component;
pub mod expr;
pub mod system;
pub mod term;
pub mod value;

use thiserror::Error;

pub use component::{
    component_steps, is_divergent, is_terminated, settle, Component, Local, Machine, MachineState,
    Settled, Transition,
};
pub use expr::{eval, BinOp, Expr, Store, UnOp};
pub use system::{
    combine_offers, local_offers, system_steps, Composition, Offer, StepPolicy, SystemState,
};
pub use term::{Comm, Field, Step, StepCtx, Term, TermRef};
pub use value::{
    name, ChannelDecl, ChannelTable, Domain, Event, EventPattern, IntRange, Label, Name, Value,
};

/// A fault in the model itself, as opposed to a property violation.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("model-range fault: {0}")]
    Range(String),
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("type fault: {0}")]
    Type(String),
    #[error("ill-formed model: {0}")]
    WellFormed(String),
    #[error("internal-step loop: {0}")]
    TauLoop(String),
}
